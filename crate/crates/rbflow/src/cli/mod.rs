//! Batch entry points behind the `rbflow` binary: subcommands `symbol`,
//! `fiber`, `cones`, `flow`, `estimates` and `hi`.
//!
//! Every run resolves its parameters into a flat key = value config, writes
//! the artifacts plus a `manifest` (the resolved config and artifact
//! hashes) into `--out`, and exits with 0 on success, 1 on usage errors,
//! 2 on blow-up, 3 on positivity loss and 4 when a monitored claim failed
//! its tolerance.

pub mod config;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{RbError, Result};
use crate::estimates::{interpolation_ratio, Lp};
use crate::fiber_ode::{
    first_exit_time, hi_f_min, hi_pinching_function, integrate_eigen, random_start_in_cone,
    ConeSpec, EigenState, TrajStatus,
};
use crate::flow::{DtPolicy, FlowConfig, InitialData, Model, RunStatus};
use crate::io::{fmt_f64, Csv};
use crate::parallel::parallel_map;
use crate::symbol::{classify, symbol, SymbolVariant};
use config::KvConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_POSITIVITY: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Parser)]
#[command(name = "rbflow", version, about = "Ricci-Bourguignon flow laboratory")]
struct CliArgs {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Principal-symbol spectra and the parabolicity classification.
    Symbol(SymbolArgs),
    /// Integrate one eigenvalue-ODE trajectory.
    Fiber(FiberArgs),
    /// Preserved-cone sweep over random starts.
    Cones(ConesArgs),
    /// Evolve a metric (torus chart or sphere model) with monitors.
    Flow(FlowArgs),
    /// Interpolation-ratio corpus statistics.
    Estimates(EstimatesArgs),
    /// Hamilton-Ivey pinching sweep.
    Hi(HiArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Directory for artifacts (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// key = value config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also emit SVG plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SymbolArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// raw | deturck | operator_l
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args)]
struct FiberArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Start "lambda,mu,nu" (ordered).
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ConesArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of rho values.
    #[arg(long)]
    rho: Option<String>,
    /// Comma list: scalar_nonneg, ricci_nonneg, sec_nonneg, pinching:EPS,
    /// hamilton_ivey.
    #[arg(long)]
    cones: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EstimatesArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    max_mode: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    /// Grid like "48x48".
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct HiArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

/// Run the CLI; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let parsed = CliArgs::try_parse_from(argv);
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own help/version output
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let outcome = match cli.cmd {
        Cmd::Symbol(a) => cmd_symbol(a),
        Cmd::Fiber(a) => cmd_fiber(a),
        Cmd::Cones(a) => cmd_cones(a),
        Cmd::Flow(a) => cmd_flow(a),
        Cmd::Estimates(a) => cmd_estimates(a),
        Cmd::Hi(a) => cmd_hi(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rbflow: error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<KvConfig> {
    match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            KvConfig::parse(&text)
        }
        None => Ok(KvConfig::default()),
    }
}

fn prepare_out(common: &CommonArgs) -> Result<PathBuf> {
    std::fs::create_dir_all(&common.out)?;
    Ok(common.out.clone())
}

fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = if s.contains('x') { s.split('x').collect() } else { s.split(',').collect() };
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| RbError::Config(format!("bad grid component `{p}`")))
        })
        .collect()
}

fn parse_cone(s: &str, rho: f64) -> Result<ConeSpec> {
    let cone = match s.trim() {
        "scalar_nonneg" => ConeSpec::ScalarNonneg,
        "ricci_nonneg" => ConeSpec::RicciNonneg,
        "sec_nonneg" => ConeSpec::SecNonneg,
        "hamilton_ivey" => ConeSpec::HamiltonIvey { rho, use_scalar_r: false },
        other => {
            if let Some(eps) = other.strip_prefix("pinching:") {
                ConeSpec::Pinching {
                    eps: eps
                        .parse::<f64>()
                        .map_err(|_| RbError::Config(format!("bad pinching epsilon `{eps}`")))?,
                }
            } else {
                return Err(RbError::UnknownVariant(other.to_string()));
            }
        }
    };
    cone.validate()?;
    Ok(cone)
}

// ---------------------------------------------------------------- symbol --

fn cmd_symbol(a: SymbolArgs) -> Result<i32> {
    let mut cfg = load_config(&a.common)?;
    cfg.check_known(&["n", "rho", "variant"])?;
    if let Some(n) = a.n {
        cfg.set("n", n.to_string());
    }
    if let Some(rho) = a.rho {
        cfg.set("rho", fmt_f64(rho));
    }
    if let Some(v) = &a.variant {
        cfg.set("variant", v.clone());
    }
    let n = cfg
        .get_usize("n")?
        .ok_or_else(|| RbError::Config("symbol: `n` is required".into()))?;
    let rho = cfg
        .get_f64("rho")?
        .ok_or_else(|| RbError::Config("symbol: `rho` is required".into()))?;
    let variant_name = cfg.get("variant").unwrap_or("deturck").to_string();
    cfg.set("variant", variant_name.clone());
    let variant = SymbolVariant::from_str(&variant_name)?;

    let out = prepare_out(&a.common)?;
    let sym = symbol(n, rho, variant)?;
    let report = classify(n, rho)?;
    let mut csv = Csv::new(&["n", "rho", "variant", "eigenvalue", "multiplicity", "classification"]);
    for (val, mult) in sym.spectrum(1e-10)? {
        csv.push_row(vec![
            n.to_string(),
            fmt_f64(rho),
            variant_name.clone(),
            fmt_f64(val),
            mult.to_string(),
            report.classification.as_str().to_string(),
        ]);
    }
    let path = out.join("symbol.csv");
    csv.write(&path)?;
    println!("classification: {}", report.classification.as_str());
    for (val, mult) in &report.eigenvalues {
        println!("  deturck eigenvalue {val:+.12} x{mult}");
    }
    config::write_manifest(&out, &cfg, &[path])?;
    Ok(EXIT_OK)
}

// ----------------------------------------------------------------- fiber --

fn cmd_fiber(a: FiberArgs) -> Result<i32> {
    let mut cfg = load_config(&a.common)?;
    cfg.check_known(&["start", "rho", "t_end", "tol"])?;
    if let Some(s) = &a.start {
        cfg.set("start", s.clone());
    }
    if let Some(rho) = a.rho {
        cfg.set("rho", fmt_f64(rho));
    }
    if let Some(t) = a.t_end {
        cfg.set("t_end", fmt_f64(t));
    }
    if let Some(t) = a.tol {
        cfg.set("tol", fmt_f64(t));
    }
    let start = cfg.require("start")?.to_string();
    let vals: Vec<f64> = start
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| RbError::Config(format!("bad start `{v}`"))))
        .collect::<Result<_>>()?;
    if vals.len() != 3 {
        return Err(RbError::Config("fiber: start must be `lambda,mu,nu`".into()));
    }
    let rho = cfg.get_f64("rho")?.ok_or_else(|| RbError::Config("fiber: `rho` is required".into()))?;
    let t_end = cfg.get_f64("t_end")?.unwrap_or(5.0);
    let tol = cfg.get_f64("tol")?.unwrap_or(1e-9);
    cfg.set("t_end", fmt_f64(t_end));
    cfg.set("tol", fmt_f64(tol));

    let out = prepare_out(&a.common)?;
    let s0 = EigenState::new(vals[0], vals[1], vals[2]);
    let traj = integrate_eigen(&s0, rho, t_end, tol)?;
    let mut csv = Csv::new(&["t", "lambda", "mu", "nu"]);
    let mut buf = [0.0; 3];
    // start point, then each accepted step endpoint
    csv.push_row(vec![fmt_f64(0.0), fmt_f64(vals[0]), fmt_f64(vals[1]), fmt_f64(vals[2])]);
    for step in &traj.steps {
        let t = step.t0 + step.h;
        traj.sample(t, &mut buf);
        csv.push_row(vec![fmt_f64(t), fmt_f64(buf[0]), fmt_f64(buf[1]), fmt_f64(buf[2])]);
    }
    let path = out.join("trajectory.csv");
    csv.write(&path)?;
    let mut artifacts = vec![path];
    if a.common.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = ["lambda", "mu", "nu"]
            .iter()
            .enumerate()
            .map(|(c, name)| {
                (
                    name.to_string(),
                    csv.rows
                        .iter()
                        .map(|r| (r[0].parse::<f64>().unwrap(), r[c + 1].parse::<f64>().unwrap()))
                        .collect(),
                )
            })
            .collect();
        let svg = crate::io::svg::plot("eigenvalue trajectory", &series, &Default::default());
        let spath = out.join("trajectory.svg");
        std::fs::write(&spath, svg)?;
        artifacts.push(spath);
    }
    println!(
        "fiber: {} steps ({} rejected), status {:?}, t_end {}",
        traj.n_accepted,
        traj.n_rejected,
        traj.status,
        traj.t_end()
    );
    config::write_manifest(&out, &cfg, &artifacts)?;
    Ok(EXIT_OK)
}

// ----------------------------------------------------------------- cones --

fn cmd_cones(a: ConesArgs) -> Result<i32> {
    let mut cfg = load_config(&a.common)?;
    cfg.check_known(&["count", "seed", "rho", "cones", "t_end", "tol", "lo", "hi"])?;
    if let Some(v) = a.count {
        cfg.set("count", v.to_string());
    }
    if let Some(v) = a.seed {
        cfg.set("seed", v.to_string());
    }
    if let Some(v) = &a.rho {
        cfg.set("rho", v.clone());
    }
    if let Some(v) = &a.cones {
        cfg.set("cones", v.clone());
    }
    if let Some(v) = a.t_end {
        cfg.set("t_end", fmt_f64(v));
    }
    if let Some(v) = a.tol {
        cfg.set("tol", fmt_f64(v));
    }
    let count = cfg.get_usize("count")?.unwrap_or(100);
    let seed = cfg.get_u64("seed")?.unwrap_or(0);
    let rhos = cfg.get_f64_list("rho")?.unwrap_or_else(|| vec![0.0, 0.1, 0.2]);
    let cone_names: Vec<String> = cfg
        .get("cones")
        .unwrap_or("sec_nonneg,ricci_nonneg,pinching:0.1")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let t_end = cfg.get_f64("t_end")?.unwrap_or(5.0);
    let tol = cfg.get_f64("tol")?.unwrap_or(1e-9);
    let lo = cfg.get_f64("lo")?.unwrap_or(-1.0);
    let hi = cfg.get_f64("hi")?.unwrap_or(1.5);
    for (k, v) in [
        ("count", count.to_string()),
        ("seed", seed.to_string()),
        ("t_end", fmt_f64(t_end)),
        ("tol", fmt_f64(tol)),
        ("lo", fmt_f64(lo)),
        ("hi", fmt_f64(hi)),
    ] {
        cfg.set(k, v);
    }
    cfg.set("rho", rhos.iter().map(|r| fmt_f64(*r)).collect::<Vec<_>>().join(","));
    cfg.set("cones", cone_names.join(","));

    let out = prepare_out(&a.common)?;
    let mut csv = Csv::new(&[
        "cone",
        "rho",
        "start_lambda",
        "start_mu",
        "start_nu",
        "exit_time",
        "final_lambda",
        "final_mu",
        "final_nu",
        "f_min",
        "status",
    ]);
    let mut exits = 0usize;
    for cone_name in &cone_names {
        for &rho in &rhos {
            let cone = parse_cone(cone_name, rho)?;
            // starts drawn sequentially for determinism, trajectories in parallel
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let starts: Vec<EigenState> =
                (0..count).map(|_| random_start_in_cone(&cone, lo, hi, &mut rng)).collect();
            let results = parallel_map(count, |i| {
                let s0 = starts[i];
                let traj = integrate_eigen(&s0, rho, t_end, tol)?;
                let exit = first_exit_time(&traj, &cone, 1e-8);
                let fmin = hi_f_min(&traj, rho);
                Ok::<_, RbError>((s0, traj.final_state(), exit, fmin, traj.status))
            });
            for r in results {
                let (s0, yf, exit, fmin, status) = r?;
                if exit.is_some() {
                    exits += 1;
                }
                csv.push_row(vec![
                    cone.name(),
                    fmt_f64(rho),
                    fmt_f64(s0.lambda),
                    fmt_f64(s0.mu),
                    fmt_f64(s0.nu),
                    exit.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(yf[0]),
                    fmt_f64(yf[1]),
                    fmt_f64(yf[2]),
                    fmin.map(fmt_f64).unwrap_or_default(),
                    status_name(status).to_string(),
                ]);
            }
        }
    }
    let path = out.join("cones.csv");
    csv.write(&path)?;
    let mut artifacts = vec![path];
    if a.common.svg {
        // phase portrait: (nu, lambda) of final states, one series per cone
        let mut series = Vec::new();
        for cone_name in &cone_names {
            let pts: Vec<(f64, f64)> = csv
                .rows
                .iter()
                .filter(|r| r[0].starts_with(cone_name.split(':').next().unwrap()))
                .map(|r| (r[8].parse::<f64>().unwrap(), r[6].parse::<f64>().unwrap()))
                .collect();
            series.push((cone_name.clone(), pts));
        }
        let svg = crate::io::svg::plot(
            "final states (nu, lambda)",
            &series,
            &crate::io::svg::PlotOptions { log_y: false, scatter: true },
        );
        let spath = out.join("cones.svg");
        std::fs::write(&spath, svg)?;
        artifacts.push(spath);
    }
    println!("cones: {} trajectories, {} cone exits", csv.rows.len(), exits);
    config::write_manifest(&out, &cfg, &artifacts)?;
    Ok(if exits > 0 { EXIT_VIOLATION } else { EXIT_OK })
}

// ------------------------------------------------------------------ flow --

const FLOW_KEYS: &[&str] = &[
    "n",
    "rho",
    "grid",
    "dt",
    "cfl",
    "t_end",
    "seed",
    "model",
    "c0",
    "initial",
    "amplitude",
    "max_mode",
    "blowup_threshold",
    "sample_stride",
    "uhlenbeck",
    "residuals",
];

fn flow_config_from_kv(cfg: &mut KvConfig) -> Result<FlowConfig> {
    cfg.check_known(FLOW_KEYS)?;
    let n = cfg.get_usize("n")?.ok_or_else(|| RbError::Config("flow: `n` is required".into()))?;
    let rho = cfg.get_f64("rho")?.ok_or_else(|| RbError::Config("flow: `rho` is required".into()))?;
    let model = match cfg.get("model").unwrap_or("torus") {
        "torus" => Model::Torus,
        "sphere" => Model::Sphere { c0: cfg.get_f64("c0")?.unwrap_or(1.0) },
        other => return Err(RbError::UnknownVariant(other.to_string())),
    };
    let dims = match (&model, cfg.get("grid")) {
        (Model::Torus, Some(g)) => parse_grid(g)?,
        (Model::Torus, None) => return Err(RbError::Config("flow: torus model needs `grid`".into())),
        (Model::Sphere { .. }, _) => vec![],
    };
    if matches!(model, Model::Torus) && dims.len() != n {
        return Err(RbError::Config(format!(
            "flow: grid has {} axes but n = {n}",
            dims.len()
        )));
    }
    let dt = match (cfg.get_f64("dt")?, cfg.get_f64("cfl")?) {
        (Some(_), Some(_)) => {
            return Err(RbError::Config("flow: give `dt` or `cfl`, not both".into()))
        }
        (Some(dt), None) => DtPolicy::Fixed(dt),
        (None, Some(c)) => DtPolicy::Cfl(c),
        (None, None) => DtPolicy::Cfl(0.2),
    };
    let initial = match cfg.get("initial").unwrap_or("sine") {
        "flat" => InitialData::Flat,
        "sine" => InitialData::SineConformal { amplitude: cfg.get_f64("amplitude")?.unwrap_or(0.3) },
        "random_conformal" => InitialData::RandomConformal {
            amplitude: cfg.get_f64("amplitude")?.unwrap_or(0.3),
            max_mode: cfg.get_usize("max_mode")?.unwrap_or(3),
        },
        "random_metric" => InitialData::RandomMetric {
            amplitude: cfg.get_f64("amplitude")?.unwrap_or(0.05),
            max_mode: cfg.get_usize("max_mode")?.unwrap_or(2),
        },
        other => return Err(RbError::UnknownVariant(other.to_string())),
    };
    let fc = FlowConfig {
        n,
        rho,
        dims,
        dt,
        t_end: cfg.get_f64("t_end")?.unwrap_or(0.1),
        model,
        initial,
        seed: cfg.get_u64("seed")?.unwrap_or(0),
        blowup_threshold: cfg.get_f64("blowup_threshold")?.unwrap_or(1e6),
        sample_stride: cfg.get_usize("sample_stride")?.unwrap_or(1),
        uhlenbeck: cfg.get("uhlenbeck").map(|v| v == "true").unwrap_or(false),
        store_snapshots: false,
    };
    // resolved values echoed back for the manifest
    cfg.set("n", fc.n.to_string());
    cfg.set("rho", fmt_f64(fc.rho));
    cfg.set("t_end", fmt_f64(fc.t_end));
    cfg.set("seed", fc.seed.to_string());
    cfg.set("sample_stride", fc.sample_stride.to_string());
    Ok(fc)
}

fn cmd_flow(a: FlowArgs) -> Result<i32> {
    let mut cfg = load_config(&a.common)?;
    let fc = flow_config_from_kv(&mut cfg)?;
    let want_residuals = cfg.get("residuals").map(|v| v == "true").unwrap_or(false);
    let out = prepare_out(&a.common)?;

    let run = crate::flow::run(&fc)?;

    let mut header = vec!["t", "r_min", "r_max", "vol", "sup_riem"];
    if fc.uhlenbeck {
        header.push("uhlenbeck_drift");
    }
    let mut csv = Csv::new(&header);
    for s in &run.samples {
        let mut row = vec![
            fmt_f64(s.t),
            fmt_f64(s.r_min),
            fmt_f64(s.r_max),
            fmt_f64(s.volume),
            fmt_f64(s.sup_riem),
        ];
        if fc.uhlenbeck {
            row.push(fmt_f64(s.uhlenbeck_drift.unwrap_or(0.0)));
        }
        csv.push_row(row);
    }
    let monitors_path = out.join("monitors.csv");
    csv.write(&monitors_path)?;
    let mut artifacts = vec![monitors_path.clone()];

    // residual check from three fixed-dt states at t = 0
    let mut residual_csv = Csv::new(&["target", "residual"]);
    if want_residuals && matches!(fc.model, Model::Torus) {
        let m0 = crate::flow::initial_metric(&fc)?;
        let dt = match fc.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl(c) => {
                let h = m0.grid.min_spacing();
                0.5 * c * h * h
            }
        };
        let states = crate::flow::run_states(m0, fc.rho, dt, 2)?;
        for target in crate::flow::residual::ResidualTarget::all() {
            if fc.n < 3 && target == crate::flow::residual::ResidualTarget::Weyl {
                continue;
            }
            let r = crate::flow::residual::evolution_residual(&states, target, fc.rho)?;
            residual_csv.push_row(vec![target.name().to_string(), fmt_f64(r)]);
        }
    }
    let residuals_path = out.join("residuals.csv");
    residual_csv.write(&residuals_path)?;
    artifacts.push(residuals_path);

    if let Some(m) = &run.final_metric {
        let snap_path = out.join("final_state.rbtf");
        crate::io::write_tensor_field(&snap_path, &m.g)?;
        artifacts.push(snap_path);
    }
    if a.common.svg {
        let (h, rows) = crate::io::parse_csv(&csv.render())?;
        for (name, svg) in crate::io::svg::plots_from_csv(&h, &rows, false) {
            let p = out.join(format!("monitor_{name}.svg"));
            std::fs::write(&p, svg)?;
            artifacts.push(p);
        }
    }

    // monitored claims: R_min nondecreasing (rho below the Schouten
    // threshold is enforced by validate) and the frame identity
    let mut violations: Vec<String> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for s in &run.samples {
        if s.r_min < prev - 1e-8 {
            violations.push(format!(
                "R_min decreased beyond tolerance at t = {} ({} -> {})",
                s.t, prev, s.r_min
            ));
            break;
        }
        prev = prev.max(s.r_min);
    }
    if fc.uhlenbeck && matches!(run.status, RunStatus::Completed) {
        if let Some(s) = run.samples.last() {
            if let Some(d) = s.uhlenbeck_drift {
                if d > 1e-6 {
                    violations.push(format!("Uhlenbeck drift {d} exceeds 1e-6 at t_end"));
                }
            }
        }
    }

    config::write_manifest(&out, &cfg, &artifacts)?;
    println!(
        "flow: {} steps, {} samples, status {:?}",
        run.steps,
        run.samples.len(),
        run.status
    );
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("INVARIANT VIOLATION: {v}");
        }
        return Ok(EXIT_VIOLATION);
    }
    Ok(match run.status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::BlowUp { .. } => EXIT_BLOWUP,
        RunStatus::PositivityLost { .. } => EXIT_POSITIVITY,
    })
}

// ------------------------------------------------------------- estimates --

fn cmd_estimates(a: EstimatesArgs) -> Result<i32> {
    let mut cfg = load_config(&a.common)?;
    cfg.check_known(&["seed", "count", "max_mode", "k", "p", "q", "grid"])?;
    if let Some(v) = a.seed {
        cfg.set("seed", v.to_string());
    }
    if let Some(v) = a.count {
        cfg.set("count", v.to_string());
    }
    if let Some(v) = a.max_mode {
        cfg.set("max_mode", v.to_string());
    }
    if let Some(v) = a.k {
        cfg.set("k", v.to_string());
    }
    if let Some(v) = &a.p {
        cfg.set("p", v.clone());
    }
    if let Some(v) = a.q {
        cfg.set("q", fmt_f64(v));
    }
    if let Some(v) = &a.grid {
        cfg.set("grid", v.clone());
    }
    let seed = cfg.get_u64("seed")?.unwrap_or(0);
    let count = cfg.get_usize("count")?.unwrap_or(100);
    let max_mode = cfg.get_usize("max_mode")?.unwrap_or(6);
    let k = cfg.get_usize("k")?.unwrap_or(2);
    let p_str = cfg.get("p").unwrap_or("inf").to_string();
    let p = if p_str == "inf" { Lp::Inf } else { Lp::from_f64(p_str.parse::<f64>().map_err(|_| RbError::Config(format!("bad p `{p_str}`")))?)? };
    let q = cfg.get_f64("q")?.unwrap_or(2.0);
    let dims = parse_grid(cfg.get("grid").unwrap_or("48x48"))?;
    for (key, v) in [
        ("seed", seed.to_string()),
        ("count", count.to_string()),
        ("max_mode", max_mode.to_string()),
        ("k", k.to_string()),
        ("p", p_str.clone()),
        ("q", fmt_f64(q)),
        ("grid", dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")),
    ] {
        cfg.set(key, v);
    }

    let out = prepare_out(&a.common)?;
    let m = crate::tensor::MetricField::flat(&dims);
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<crate::grid::TensorField> = (0..count)
        .map(|_| crate::flow::random_band_limited(&dims, 1.0, max_mode, &mut rng))
        .collect();
    let mut csv = Csv::new(&["field", "j", "k", "ratio"]);
    let mut all: Vec<Vec<f64>> = vec![Vec::new(); k];
    let results = parallel_map(count, |i| {
        let mut row = Vec::new();
        for j in 1..k {
            row.push(interpolation_ratio(&fields[i], j, k, p, q, &m));
        }
        row
    });
    for (i, row) in results.into_iter().enumerate() {
        for (jm1, r) in row.into_iter().enumerate() {
            let r = r?;
            csv.push_row(vec![i.to_string(), (jm1 + 1).to_string(), k.to_string(), fmt_f64(r)]);
            all[jm1 + 1 - 1].push(r);
        }
    }
    let path = out.join("ratios.csv");
    csv.write(&path)?;
    let mut summary = Csv::new(&["j", "k", "max", "p50", "p90"]);
    for j in 1..k {
        let mut v = all[j - 1].clone();
        if v.is_empty() {
            continue;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pct = |q: f64| v[(q * (v.len() - 1) as f64).round() as usize];
        summary.push_row(vec![
            j.to_string(),
            k.to_string(),
            fmt_f64(*v.last().unwrap()),
            fmt_f64(pct(0.5)),
            fmt_f64(pct(0.9)),
        ]);
        println!(
            "estimates: j={j} k={k} max ratio {:.6} median {:.6}",
            v.last().unwrap(),
            pct(0.5)
        );
    }
    let sum_path = out.join("summary.csv");
    summary.write(&sum_path)?;
    config::write_manifest(&out, &cfg, &[path, sum_path])?;
    Ok(EXIT_OK)
}

// -------------------------------------------------------------------- hi --

fn cmd_hi(a: HiArgs) -> Result<i32> {
    let mut cfg = load_config(&a.common)?;
    cfg.check_known(&["rho", "count", "seed", "t_end", "tol"])?;
    if let Some(v) = a.rho {
        cfg.set("rho", fmt_f64(v));
    }
    if let Some(v) = a.count {
        cfg.set("count", v.to_string());
    }
    if let Some(v) = a.seed {
        cfg.set("seed", v.to_string());
    }
    if let Some(v) = a.t_end {
        cfg.set("t_end", fmt_f64(v));
    }
    if let Some(v) = a.tol {
        cfg.set("tol", fmt_f64(v));
    }
    let rho = cfg.get_f64("rho")?.unwrap_or(0.0);
    let count = cfg.get_usize("count")?.unwrap_or(100);
    let seed = cfg.get_u64("seed")?.unwrap_or(0);
    let t_end = cfg.get_f64("t_end")?.unwrap_or(3.0);
    let tol = cfg.get_f64("tol")?.unwrap_or(1e-9);
    for (k, v) in [
        ("rho", fmt_f64(rho)),
        ("count", count.to_string()),
        ("seed", seed.to_string()),
        ("t_end", fmt_f64(t_end)),
        ("tol", fmt_f64(tol)),
    ] {
        cfg.set(k, v);
    }
    let cone = ConeSpec::HamiltonIvey { rho, use_scalar_r: false };
    cone.validate()?;

    let out = prepare_out(&a.common)?;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<EigenState> =
        (0..count).map(|_| random_start_in_cone(&cone, -1.5, 2.0, &mut rng)).collect();
    let results = parallel_map(count, |i| {
        let s0 = starts[i];
        let traj = integrate_eigen(&s0, rho, t_end, tol)?;
        // worst margin and f-monotonicity within the regime
        let mut buf = [0.0; 3];
        let mut min_margin = f64::INFINITY;
        let mut f_prev: Option<f64> = None;
        let mut f_monotone = true;
        let mut f_min = f64::INFINITY;
        for step in &traj.steps {
            for q in 0..=2 {
                let t = step.t0 + step.h * q as f64 / 2.0;
                traj.sample(t, &mut buf);
                let s = EigenState::from_slice(&buf, t);
                min_margin = min_margin.min(cone.margin(&s, t));
                let shift = 1.0 + 2.0 * (1.0 - 6.0 * rho) * t;
                if s.nu <= -1.0 / shift {
                    let f = hi_pinching_function(&s, t, rho).expect("nu < 0 in regime");
                    f_min = f_min.min(f);
                    if let Some(fp) = f_prev {
                        if f < fp - 1e-6 {
                            f_monotone = false;
                        }
                    }
                    f_prev = Some(f);
                } else {
                    f_prev = None;
                }
            }
        }
        Ok::<_, RbError>((s0, min_margin, f_monotone, f_min, traj.status))
    });
    let mut csv = Csv::new(&[
        "start_lambda",
        "start_mu",
        "start_nu",
        "min_margin",
        "f_monotone",
        "f_min",
        "status",
    ]);
    let mut violations = 0usize;
    for r in results {
        let (s0, min_margin, f_monotone, f_min, status) = r?;
        if min_margin < -1e-6 || !f_monotone {
            violations += 1;
        }
        csv.push_row(vec![
            fmt_f64(s0.lambda),
            fmt_f64(s0.mu),
            fmt_f64(s0.nu),
            fmt_f64(min_margin),
            (f_monotone as u8).to_string(),
            if f_min.is_finite() { fmt_f64(f_min) } else { String::new() },
            status_name(status).to_string(),
        ]);
    }
    let path = out.join("hamilton_ivey.csv");
    csv.write(&path)?;
    let mut artifacts = vec![path];
    if a.common.svg {
        let pts: Vec<(f64, f64)> = csv
            .rows
            .iter()
            .filter(|r| !r[5].is_empty())
            .map(|r| (r[0].parse::<f64>().unwrap(), r[5].parse::<f64>().unwrap()))
            .collect();
        let svg = crate::io::svg::plot(
            "f_min vs start lambda",
            &[("f_min".to_string(), pts)],
            &crate::io::svg::PlotOptions { log_y: false, scatter: true },
        );
        let spath = out.join("hamilton_ivey.svg");
        std::fs::write(&spath, svg)?;
        artifacts.push(spath);
    }
    println!("hi: {count} trajectories, {violations} violations");
    config::write_manifest(&out, &cfg, &artifacts)?;
    Ok(if violations > 0 { EXIT_VIOLATION } else { EXIT_OK })
}

fn status_name(s: TrajStatus) -> &'static str {
    match s {
        TrajStatus::Completed => "completed",
        TrajStatus::BlowUp => "blow_up",
        TrajStatus::ConeExit => "cone_exit",
    }
}
