use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use junction_flux::cl::{self, Schedule};
use junction_flux::hj;
use junction_flux::io;
use junction_flux::verify::{
    identify_limiter_cl, identify_limiter_hj, run_verification, Equation, HandleKind,
    SemigroupHandle,
};
use junction_flux::{Error, NodeField, Result, Scenario, ScenarioConfig};
use serde_json::{json, Value};

use crate::{Cli, Command, ExactDatum, HjRoute, Method};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

pub fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    match &cli.config {
        Some(path) => junction_flux::parse_config(path).map_err(|e| match e {
            Error::Io(io) => Error::Config {
                path: path.display().to_string(),
                message: io.to_string(),
            },
            other => other,
        }),
        None => Scenario::new(ScenarioConfig::default()),
    }
}

/// Collects written files and writes `manifest.json` last.
struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(p, body)?;
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let body = serde_json::to_string_pretty(value)? + "\n";
        self.text(name, &body)
    }

    fn finish(mut self, command: &str, scenario: &Scenario, extra: Value) -> Result<()> {
        let mut manifest = json!({
            "command": command,
            "files": self.files.clone(),
            "config": scenario.config,
            "seed": scenario.config.seed,
            "grid": {
                "n_left": scenario.grid.n_left(),
                "n_right": scenario.grid.n_right(),
                "dx": scenario.grid.dx(),
                "x_min": scenario.grid.x_min(),
                "x_max": scenario.grid.x_max(),
            },
            "grid_adjustment": scenario.adjustment,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut manifest, extra) {
            m.extend(e);
        }
        self.files.clear();
        self.json("manifest.json", &manifest)
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let scenario = load_scenario(cli)?;
    if let Some(adj) = &scenario.adjustment {
        eprintln!(
            "note: domain [{}, {}] adjusted to [{}, {}] so that 0 is a cell interface",
            adj.requested[0], adj.requested[1], adj.actual[0], adj.actual[1]
        );
    }
    match &cli.command {
        Command::Riemann {
            left,
            right,
            limiter,
            samples,
        } => riemann(cli, &scenario, *left, *right, *limiter, *samples),
        Command::SolveCl => solve_cl(cli, &scenario),
        Command::SolveHj { method } => solve_hj(cli, &scenario, *method),
        Command::ExactHj {
            datum,
            limiter,
            time,
            level,
        } => exact_hj(cli, &scenario, *datum, *limiter, *time, *level),
        Command::IdentifyLimiter { method, external } => {
            identify(cli, &scenario, *method, external.as_deref())
        }
        Command::Verify {
            external_cl,
            external_hj,
            checks,
        } => verify(
            cli,
            &scenario,
            external_cl.as_deref(),
            external_hj.as_deref(),
            checks.clone(),
        ),
        Command::Evolve {
            equation,
            state,
            time,
            output,
        } => evolve(&scenario, *equation, state, *time, output),
    }
}

fn riemann(
    cli: &Cli,
    scenario: &Scenario,
    left: f64,
    right: f64,
    limiter: Option<f64>,
    samples: usize,
) -> Result<ExitCode> {
    let j = match limiter {
        Some(a) => scenario.model.with_limiter(a)?,
        None => scenario.model.clone(),
    };
    let traces = j.riemann_traces(left, right)?;
    let in_germ = j.germ_contains(&traces, j.flow_tol().max(1e-12))?;
    let reach = 1.1 * j.lipschitz();
    let n = samples.max(2);
    let mut csv = String::from("xi,rho\n");
    for i in 0..n {
        let xi = -reach + 2.0 * reach * i as f64 / (n - 1) as f64;
        writeln!(csv, "{xi},{}", j.riemann_profile(left, right, xi)?).expect("write to string");
    }
    let mut out = Outputs::new(&cli.out)?;
    out.text("riemann.csv", &csv)?;
    let header = json!({
        "q_minus": traces.q_minus,
        "q_plus": traces.q_plus,
        "flux_value": traces.flux_value,
        "in_germ": in_germ,
    });
    out.json("riemann.json", &header)?;
    println!("{}", serde_json::to_string(&header)?);
    out.finish(
        "riemann",
        scenario,
        json!({"left": left, "right": right, "limiter": j.limiter}),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn solve_cl(cli: &Cli, scenario: &Scenario) -> Result<ExitCode> {
    let c = &scenario.config;
    let rho0 = scenario.cells()?;
    let run = cl::solve(&rho0, &scenario.model, c.t_end, c.cfl, &c.snapshots)?;
    let mut out = Outputs::new(&cli.out)?;
    let mut snapshots = Vec::new();
    for (i, s) in run.snapshots.iter().enumerate() {
        let name = format!("rho_{i:03}.csv");
        io::save_cells(&out.path(&name), s)?;
        snapshots.push(json!({"file": name, "time": s.time}));
    }
    let steps = &run.steps;
    out.finish(
        "solve-cl",
        scenario,
        json!({
            "snapshots": snapshots,
            "initial_mass": rho0.mass(),
            "times": steps.iter().map(|s| s.time).collect::<Vec<_>>(),
            "dt": steps.iter().map(|s| s.dt).collect::<Vec<_>>(),
            "mass": steps.iter().map(|s| s.mass).collect::<Vec<_>>(),
            "traces": steps.iter().map(|s| s.trace).collect::<Vec<_>>(),
            "left_boundary_integral": run.left_boundary_integral,
            "right_boundary_integral": run.right_boundary_integral,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn solve_hj(cli: &Cli, scenario: &Scenario, route: HjRoute) -> Result<ExitCode> {
    let c = &scenario.config;
    let j = &scenario.model;
    let u0 = scenario.nodes()?;
    let fields: Vec<NodeField> = match route {
        HjRoute::Direct => {
            u0.validate_lip(j)?;
            let schedule = Schedule::new(c.t_end, cl::max_dt(j, u0.grid.dx(), c.cfl), &c.snapshots)?;
            let mut fields = Vec::new();
            if schedule.outputs()[0] == 0.0 {
                fields.push(u0.clone());
            }
            let mut u = u0.clone();
            let mut slopes = Vec::new();
            for s in schedule {
                hj::hj_step(&mut u, j, s.dt, &mut slopes)?;
                u.time = s.time;
                if s.output {
                    fields.push(u.clone());
                }
            }
            fields
        }
        HjRoute::Cl => {
            let rho0 = junction_flux::CellField::from_slopes(&u0, j)?;
            let run = cl::solve(&rho0, j, c.t_end, c.cfl, &c.snapshots)?;
            hj::hj_from_cl(&run, &u0, j)?
        }
    };
    let mut out = Outputs::new(&cli.out)?;
    let mut snapshots = Vec::new();
    for (i, u) in fields.iter().enumerate() {
        let name = format!("u_{i:03}.csv");
        io::save_nodes(&out.path(&name), u)?;
        snapshots.push(json!({"file": name, "time": u.time, "u_at_junction": u.at_junction()}));
    }
    let method = match route {
        HjRoute::Direct => "direct",
        HjRoute::Cl => "cl",
    };
    out.finish("solve-hj", scenario, json!({"method": method, "snapshots": snapshots}))?;
    Ok(ExitCode::SUCCESS)
}

fn exact_hj(
    cli: &Cli,
    scenario: &Scenario,
    datum: ExactDatum,
    limiter: Option<f64>,
    time: f64,
    level: Option<f64>,
) -> Result<ExitCode> {
    if !(time.is_finite() && time > 0.0) {
        return Err(Error::Time(time));
    }
    let j = match limiter {
        Some(a) => scenario.model.with_limiter(a)?,
        None => scenario.model.clone(),
    };
    let a = j.limiter;
    let level = level.unwrap_or(a);
    let (name, field) = match datum {
        ExactDatum::Phi0Hat => (
            "phi0_hat",
            hj::exact_field(scenario.grid, time, |x| hj::exact_sa_phi0(&j, a, time, x))?,
        ),
        ExactDatum::PhiAHat => (
            "phiA_hat",
            hj::exact_field(scenario.grid, time, |x| hj::exact_sa_phia(&j, level, time, x))?,
        ),
        ExactDatum::PhiACheck => (
            "phiA_check",
            hj::exact_field(scenario.grid, time, |x| {
                hj::exact_s_phia_check(&j, level, time, x)
            })?,
        ),
    };
    let mut out = Outputs::new(&cli.out)?;
    io::save_nodes(&out.path("exact_hj.csv"), &field)?;
    out.finish(
        "exact-hj",
        scenario,
        json!({"datum": name, "limiter": a, "level": level, "time": time}),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn handle(
    scenario: &Scenario,
    equation: Equation,
    external: Option<&str>,
) -> Result<SemigroupHandle> {
    let kind = match (external, equation) {
        (Some(cmd), eq) => HandleKind::ExternalProcess {
            command: cmd.split_whitespace().map(String::from).collect(),
            equation: eq,
        },
        (None, Equation::Cl) => HandleKind::ClInternal,
        (None, Equation::Hj) => HandleKind::HjInternal,
    };
    let g = scenario.grid;
    let h = SemigroupHandle::new(kind, scenario.model.clone(), g.dx(), scenario.config.cfl)?;
    Ok(h.with_half_width(g.x_max().min(-g.x_min())))
}

fn identify(cli: &Cli, scenario: &Scenario, method: Method, external: Option<&str>) -> Result<ExitCode> {
    let (value, detail) = match method {
        Method::Hj => {
            let h = handle(scenario, Equation::Hj, external)?;
            (identify_limiter_hj(&h)?, Value::Null)
        }
        Method::Cl => {
            let h = handle(scenario, Equation::Cl, external)?;
            let est = identify_limiter_cl(&h)?;
            (est.value, serde_json::to_value(est)?)
        }
    };
    println!("{value}");
    let out = Outputs::new(&cli.out)?;
    let method = match method {
        Method::Hj => "hj",
        Method::Cl => "cl",
    };
    out.finish(
        "identify-limiter",
        scenario,
        json!({"method": method, "external": external, "limiter": value, "estimate": detail}),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn verify(
    cli: &Cli,
    scenario: &Scenario,
    external_cl: Option<&str>,
    external_hj: Option<&str>,
    checks: Option<Vec<String>>,
) -> Result<ExitCode> {
    let cl_handle = handle(scenario, Equation::Cl, external_cl)?;
    let hj_handle = handle(scenario, Equation::Hj, external_hj)?;
    let mut cfg = scenario.config.verify.clone();
    if checks.is_some() {
        cfg.checks = checks;
    }
    let report = run_verification(&cl_handle, &hj_handle, &cfg)?;
    let text = report.to_text();
    print!("{text}");
    let mut out = Outputs::new(&cli.out)?;
    out.text("report.txt", &text)?;
    out.json("report.json", &serde_json::to_value(&report)?)?;
    out.finish(
        "verify",
        scenario,
        json!({
            "external_cl": external_cl,
            "external_hj": external_hj,
            "failures": report.failures(),
            "identified_limiter": report.identified_limiter,
        }),
    )?;
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFICATION)
    })
}

fn evolve(scenario: &Scenario, equation: Method, state: &Path, time: f64, output: &Path) -> Result<ExitCode> {
    let j = &scenario.model;
    let cfl = scenario.config.cfl;
    match equation {
        Method::Cl => {
            let rho = io::load_cells(state, j)?;
            let next = if time == 0.0 {
                rho
            } else {
                cl::solve(&rho, j, time, cfl, &[])?.last().clone()
            };
            io::save_cells(output, &next)?;
        }
        Method::Hj => {
            let u = io::load_nodes(state)?;
            let next = if time == 0.0 {
                u
            } else {
                hj::hj_direct_solve(&u, j, time, cfl)?
            };
            io::save_nodes(output, &next)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
