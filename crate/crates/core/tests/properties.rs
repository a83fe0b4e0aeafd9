use junction_flux::cl;
use junction_flux::hj;
use junction_flux::{CellField, ConcaveFlux, Grid, JunctionModel, NodeField, TracePair};
use proptest::prelude::*;

fn quadratic() -> impl Strategy<Value = ConcaveFlux> {
    (0.5f64..3.0, 0.1f64..2.0).prop_map(|(r, h)| ConcaveFlux::quadratic(r, h).unwrap())
}

/// Concave piecewise-linear flux from decreasing slopes, rescaled so it returns to 0.
fn piecewise() -> impl Strategy<Value = ConcaveFlux> {
    (
        proptest::collection::vec((0.05f64..2.0, 0.1f64..1.0), 1..4),
        proptest::collection::vec((0.05f64..2.0, 0.1f64..1.0), 1..4),
    )
        .prop_map(|(up, down)| {
            let mut up_slopes: Vec<f64> = up.iter().map(|p| p.0).collect();
            up_slopes.sort_by(|a, b| b.total_cmp(a));
            up_slopes.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut down_slopes: Vec<f64> = down.iter().map(|p| -p.0).collect();
            down_slopes.sort_by(|a, b| b.total_cmp(a));
            down_slopes.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut pts = vec![(0.0, 0.0)];
            for (s, w) in up_slopes.iter().zip(up.iter().map(|p| p.1)) {
                let (x, y) = *pts.last().unwrap();
                pts.push((x + w, y + s * w));
            }
            let height = pts.last().unwrap().1;
            let weights: Vec<f64> = down.iter().map(|p| p.1).take(down_slopes.len()).collect();
            let total: f64 = weights.iter().zip(&down_slopes).map(|(w, s)| w * -s).sum();
            for (s, w) in down_slopes.iter().zip(&weights) {
                let (x, y) = *pts.last().unwrap();
                let w = w * height / total;
                pts.push((x + w, (y + s * w).max(0.0)));
            }
            pts.last_mut().unwrap().1 = 0.0;
            ConcaveFlux::piecewise_linear(pts).unwrap()
        })
}

fn any_flux() -> impl Strategy<Value = ConcaveFlux> {
    prop_oneof![quadratic(), piecewise()]
}

fn model() -> impl Strategy<Value = JunctionModel> {
    (any_flux(), any_flux(), 0.0f64..=1.0).prop_map(|(l, r, frac)| {
        let a = frac * l.max_flow().min(r.max_flow());
        JunctionModel::new(l, r, a).unwrap()
    })
}

fn greenshields_model(a: f64) -> JunctionModel {
    let h = ConcaveFlux::greenshields();
    JunctionModel::new(h.clone(), h, a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn demand_and_supply_envelopes(f in any_flux(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let (p, q) = (s * f.rmax(), t * f.rmax());
        let (lo, hi) = (p.min(q), p.max(q));
        let h = f.eval(p).unwrap();
        prop_assert!(f.demand(p).unwrap() >= h);
        prop_assert!(f.supply(p).unwrap() >= h);
        prop_assert!((f.demand(p).unwrap().min(f.supply(p).unwrap()) - h).abs() <= 1e-12);
        prop_assert!(f.demand(lo).unwrap() <= f.demand(hi).unwrap() + 1e-15);
        prop_assert!(f.supply(lo).unwrap() + 1e-15 >= f.supply(hi).unwrap());
    }

    #[test]
    fn roots_lie_on_their_branches(f in any_flux(), frac in 0.0f64..=1.0) {
        let a = frac * f.max_flow();
        let (lo, hi) = f.roots(a).unwrap();
        let (p_star, _) = f.critical();
        prop_assert!(lo <= p_star + 1e-12 && hi + 1e-12 >= p_star);
        prop_assert!((f.eval(lo).unwrap() - a).abs() <= 1e-9);
        prop_assert!((f.eval(hi).unwrap() - a).abs() <= 1e-9);
    }

    #[test]
    fn truncated_conjugate_matches_brute_force(f in any_flux(), frac in 0.0f64..=1.0, v in -3.0f64..3.0) {
        let a = frac * f.max_flow();
        let n = 4000;
        let brute = (0..=n)
            .map(|i| {
                let y = f.rmax() * i as f64 / n as f64;
                -v * y + f.eval(y).unwrap().min(a)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let c = f.truncated_conjugate(a, v).unwrap();
        let lip = f.lipschitz() + v.abs();
        prop_assert!(c + 1e-12 >= brute);
        prop_assert!(c - brute <= lip * f.rmax() / n as f64 + 1e-12);
    }

    #[test]
    fn truncated_conjugate_is_convex(f in any_flux(), frac in 0.0f64..=1.0, v in -2.0f64..2.0, w in -2.0f64..2.0) {
        let a = frac * f.max_flow();
        let mid = f.truncated_conjugate(a, 0.5 * (v + w)).unwrap();
        let avg = 0.5 * (f.truncated_conjugate(a, v).unwrap() + f.truncated_conjugate(a, w).unwrap());
        prop_assert!(mid <= avg + 1e-12);
    }

    #[test]
    fn junction_flux_bounds_and_monotonicity(j in model(), s in 0.0f64..=1.0, t in 0.0f64..=1.0, ds in 0.0f64..=0.5) {
        let (a, b) = (s * j.left.rmax(), t * j.right.rmax());
        let f = j.junction_flux(a, b).unwrap();
        prop_assert!(f <= j.limiter && f <= j.left.demand(a).unwrap() && f <= j.right.supply(b).unwrap());
        let a2 = (a + ds * j.left.rmax()).min(j.left.rmax());
        let b2 = (b + ds * j.right.rmax()).min(j.right.rmax());
        prop_assert!(j.junction_flux(a2, b).unwrap() + 1e-15 >= f);
        prop_assert!(j.junction_flux(a, b2).unwrap() <= f + 1e-15);
    }

    #[test]
    fn riemann_traces_lie_in_the_germ(j in model(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let tr = j.riemann_traces(s * j.left.rmax(), t * j.right.rmax()).unwrap();
        prop_assert!(j.germ_contains(&tr, j.flow_tol().max(1e-12)).unwrap());
    }

    #[test]
    fn germ_is_l1_dissipative(a in 0.0f64..=0.25, s in 0.0f64..=1.0, t in 0.0f64..=1.0, u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let j = greenshields_model(a);
        let p1 = j.riemann_traces(s, t).unwrap();
        let p2 = j.riemann_traces(u, v).unwrap();
        prop_assert!(j.germ_dissipative(&p1, &p2).unwrap() >= -1e-12);
    }

    #[test]
    fn riemann_profile_reproduces_traces(j in model(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let (a, b) = (s * j.left.rmax(), t * j.right.rmax());
        let tr = j.riemann_traces(a, b).unwrap();
        prop_assert_eq!(j.riemann_profile(a, b, 0.0).unwrap(), tr.q_minus);
        prop_assert_eq!(j.riemann_profile(a, b, 1e-9).unwrap(), tr.q_plus);
        let far = 2.0 * j.lipschitz();
        prop_assert_eq!(j.riemann_profile(a, b, -far).unwrap(), a);
        prop_assert_eq!(j.riemann_profile(a, b, far).unwrap(), b);
    }

    #[test]
    fn scheme_is_monotone_and_conservative(
        vals in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 16),
        a in 0.0f64..=0.25,
    ) {
        let j = greenshields_model(a);
        let g = Grid::new(8, 8, 0.05).unwrap();
        let lo: Vec<f64> = vals.iter().map(|p| p.0.min(p.1)).collect();
        let hi: Vec<f64> = vals.iter().map(|p| p.0.max(p.1)).collect();
        let lo = CellField::new(g, lo, 0.0, &j).unwrap();
        let hi = CellField::new(g, hi, 0.0, &j).unwrap();
        let dt = cl::max_dt(&j, g.dx(), 1.0);
        let (mut l1, mut h1) = (lo.clone(), hi.clone());
        let mut scratch = Vec::new();
        let bf = cl::step_in_place(&mut l1, &j, dt, &mut scratch).unwrap();
        cl::step_in_place(&mut h1, &j, dt, &mut scratch).unwrap();
        for (x, y) in l1.values.iter().zip(&h1.values) {
            prop_assert!(x <= y);
            prop_assert!((0.0..=1.0).contains(x));
        }
        let expected = lo.mass() + dt * (bf.left - bf.right);
        prop_assert!((l1.mass() - expected).abs() <= 1e-14);
    }

    #[test]
    fn primitive_of_cl_run_equals_direct_hj(
        vals in proptest::collection::vec(0.0f64..=1.0, 40),
        a in 0.0f64..=0.25,
    ) {
        let j = greenshields_model(a);
        let g = Grid::new(20, 20, 0.05).unwrap();
        let rho = CellField::new(g, vals, 0.0, &j).unwrap();
        let u0 = NodeField::integrate(&rho, 0.3);
        let run = cl::solve(&rho, &j, 0.4, 0.8, &[0.0]).unwrap();
        let from_cl = hj::hj_from_cl(&run, &u0, &j).unwrap();
        let direct = hj::hj_direct_solve(&u0, &j, 0.4, 0.8).unwrap();
        prop_assert!(from_cl.last().unwrap().sup_distance(&direct).unwrap() <= 1e-12);
    }

    #[test]
    fn hj_commutes_with_constants(vals in proptest::collection::vec(0.0f64..=1.0, 30), c in -5.0f64..5.0) {
        let j = greenshields_model(0.1875);
        let g = Grid::new(15, 15, 0.05).unwrap();
        let rho = CellField::new(g, vals, 0.0, &j).unwrap();
        let u = NodeField::integrate(&rho, 0.0);
        let uc = NodeField::integrate(&rho, c);
        let s = hj::hj_direct_solve(&u, &j, 0.3, 0.8).unwrap();
        let sc = hj::hj_direct_solve(&uc, &j, 0.3, 0.8).unwrap();
        for (x, y) in s.values.iter().zip(&sc.values) {
            prop_assert!((y - x - c).abs() <= 1e-12);
        }
    }
}

#[test]
fn germ_grid_invariants() {
    // Every equal-flux grid pair in the germ has its flux at or below the limiter, and
    // each germ pair is fixed by the Riemann solver.
    let j = greenshields_model(0.1875);
    for i in 0..41 {
        for k in 0..41 {
            let (a, b) = (i as f64 / 40.0, k as f64 / 40.0);
            let pair = TracePair::new(&j, a, b).unwrap();
            if j.germ_contains(&pair, 1e-12).unwrap() {
                assert!(pair.flux_value <= j.limiter + 1e-12);
                let tr = j.riemann_traces(a, b).unwrap();
                assert!((tr.q_minus - a).abs() <= 1e-9 && (tr.q_plus - b).abs() <= 1e-9, "{a} {b} -> {tr:?}");
            }
        }
    }
}
