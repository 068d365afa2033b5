//! Command-line front end.

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use crate::barrier::{build_barrier, verify_barrier};
use crate::config::ExperimentConfig;
use crate::constants::{calibrate, ConstantsFile};
use crate::degiorgi::{caccioppoli_case, caccioppoli_gap, degiorgi_bound};
use crate::error::{Error, Result};
use crate::forms::{energy, energy_decomposition_residual, killing_measure, relative_tail};
use crate::golden::emit_golden;
use crate::grid::GridFunction;
use crate::kernel::QuadratureScheme;
use crate::levy::{killing_rate_crosscheck, simulate, simulate_logged, write_jump_log, JumpProcessConfig};
use crate::operators::apply_operator;
use crate::smp::{build_counterexample, smp_report, Verdict};

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "nonlocal-mp", version, about = "Fractional Laplacians with interaction sets: forms, bounds, barriers, maximum-principle checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the grid spacing of the config.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Pointwise operator table on the lattice.
    EvalOp,
    Energy,
    Tail,
    KillingMeasure,
    DecompositionCheck,
    CaccioppoliSweep,
    Degiorgi,
    Barrier,
    VerifyMp,
    Counterexample,
    McCrosscheck,
    CalibrateConstants,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EvalOp => "eval-op",
            Command::Energy => "energy",
            Command::Tail => "tail",
            Command::KillingMeasure => "killing-measure",
            Command::DecompositionCheck => "decomposition-check",
            Command::CaccioppoliSweep => "caccioppoli-sweep",
            Command::Degiorgi => "degiorgi",
            Command::Barrier => "barrier",
            Command::VerifyMp => "verify-mp",
            Command::Counterexample => "counterexample",
            Command::McCrosscheck => "mc-crosscheck",
            Command::CalibrateConstants => "calibrate-constants",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) => EXIT_PARSE,
        Error::Divergent(_) | Error::SingularSystem(_) | Error::SearchFailed(_) => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Results of one command.
struct Outcome {
    json: Value,
    csv: Option<String>,
    violation: Option<String>,
}

impl Outcome {
    fn new(json: Value) -> Self {
        Self { json, csv: None, violation: None }
    }
}

fn csv_table(points: &[Vec<f64>], values: &[f64], errors: &[f64]) -> String {
    let n = points.first().map_or(1, |p| p.len());
    let mut out = (1..=n).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
    out.push_str(",value,error_estimate\n");
    for ((x, v), e) in points.iter().zip(values).zip(errors) {
        for c in x {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{v:e},{e:e}\n"));
    }
    out
}

fn grid_csv(u: &GridFunction) -> String {
    let lat = u.lattice();
    csv_table(&lat.points(), u.values(), &vec![0.0; lat.len()])
}

fn to_json(v: &impl serde::Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn execute(cmd: Command, cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    match cmd {
        Command::EvalOp => {
            let u = cfg.function(seed)?;
            let table = apply_operator(&u, &cfg.interaction()?, &p, &cfg.quadrature()?)?;
            let max_abs = table.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let max_err = table.error_estimates.iter().fold(0.0f64, |m, v| m.max(*v));
            let mut o = Outcome::new(json!({"nodes": table.values.len(), "max_abs_value": max_abs, "max_error_estimate": max_err}));
            o.csv = Some(csv_table(&table.points, &table.values, &table.error_estimates));
            Ok(o)
        }
        Command::Energy => {
            let sec = cfg.section(&cfg.energy, "energy")?;
            let u = cfg.function(seed)?;
            let z = if sec.restrict_to_z { Some(cfg.interaction()?) } else { None };
            let e = energy(&u, &sec.region_a.build()?, &sec.region_b.build()?, z.as_ref(), &p)?;
            Ok(Outcome::new(to_json(&e)?))
        }
        Command::Tail => {
            let sec = cfg.section(&cfg.tail, "tail")?;
            let u = cfg.function(seed)?;
            let t = relative_tail(&u, &sec.center, sec.radius, &cfg.interaction()?, &p)?;
            Ok(Outcome::new(json!({"center": sec.center, "radius": sec.radius, "tail": t})))
        }
        Command::KillingMeasure => {
            let sec = cfg.section(&cfg.killing, "killing")?;
            let g = sec.g.build()?;
            let z = cfg.interaction()?;
            let q = cfg.quadrature()?;
            let coarse = QuadratureScheme { refinement_levels: q.refinement_levels.saturating_sub(1).max(1), ..q };
            let mut values = Vec::new();
            let mut errors = Vec::new();
            for x in &sec.points {
                let v = killing_measure(x, &g, &z, &p, &q)?;
                values.push(v);
                errors.push((v - killing_measure(x, &g, &z, &p, &coarse)?).abs());
            }
            let mut o = Outcome::new(json!({"points": sec.points, "values": values, "error_estimates": errors}));
            o.csv = Some(csv_table(&sec.points, &values, &errors));
            Ok(o)
        }
        Command::DecompositionCheck => {
            let sec = cfg.section(&cfg.decomposition, "decomposition")?;
            let g = sec.g.build()?;
            let z = cfg.interaction()?;
            let u = cfg.function(seed)?;
            let fine = energy_decomposition_residual(&u, &g, &z, &p)?;
            let coarse = u.coarsen().and_then(|c| energy_decomposition_residual(&c, &g, &z, &p)).ok();
            let ratio = coarse.map(|c| c.value.abs() / fine.value.abs().max(f64::MIN_POSITIVE));
            let mut o = Outcome::new(json!({
                "residual": fine.value,
                "error_budget": fine.error_estimate,
                "coarse_residual": coarse.map(|c| c.value),
                "refinement_ratio": ratio,
            }));
            if fine.value.abs() > 5.0 * fine.error_estimate {
                o.violation = Some(format!("residual {:e} exceeds 5x the error budget {:e}", fine.value, fine.error_estimate));
            }
            Ok(o)
        }
        Command::CaccioppoliSweep => {
            let sec = cfg.section(&cfg.caccioppoli, "caccioppoli")?;
            let g = sec.g.build()?;
            let z = cfg.interaction()?;
            let lat = cfg.lattice()?;
            let mut cases = Vec::new();
            let mut failures = 0;
            for k in 0..sec.cases {
                let (w, phi) = caccioppoli_case(&lat, &g, seed, k)?;
                let gap = caccioppoli_gap(&w, &phi, &g, &z, &p)?;
                if gap.value < -gap.error_estimate {
                    failures += 1;
                }
                cases.push(gap);
            }
            let mut o = Outcome::new(json!({"cases": cases, "failures": failures}));
            if failures > 0 {
                o.violation = Some(format!("{failures} Caccioppoli gaps below minus their error budget"));
            }
            Ok(o)
        }
        Command::Degiorgi => {
            let sec = cfg.section(&cfg.degiorgi, "degiorgi")?;
            let c_hat = match (sec.c_hat, &sec.constants) {
                (Some(c), _) => c,
                (None, Some(path)) => ConstantsFile::load(Path::new(path))?.lookup(p.n, p.s)?.c_hat,
                (None, None) => ConstantsFile::builtin().lookup(p.n, p.s)?.c_hat,
            };
            let u = cfg.function(seed)?;
            let t = degiorgi_bound(&u, &sec.center, sec.radius, &cfg.interaction()?, &p, &cfg.quadrature()?, c_hat)?;
            let mut o = Outcome::new(to_json(&t)?);
            if !(t.sup_ok && t.tww_ok && t.tww0_ok) {
                o.violation = Some(format!("sup {:e} against bound {:e}", t.sup_on_ball, t.bound));
            }
            Ok(o)
        }
        Command::Barrier => {
            let sec = cfg.section(&cfg.barrier, "barrier")?;
            let q = cfg.quadrature()?;
            let phi = build_barrier(&sec.center, sec.inner_radius, sec.outer_radius, &p, &q)?;
            let rep = verify_barrier(&phi, &sec.center, sec.inner_radius, sec.outer_radius, &cfg.interaction()?, &p, &q)?;
            let mut o = Outcome::new(to_json(&rep)?);
            o.csv = Some(grid_csv(&phi));
            if !rep.data_ok {
                o.violation = Some("barrier data conditions fail".into());
            }
            Ok(o)
        }
        Command::VerifyMp => {
            let sec = cfg.section(&cfg.mp, "mp")?;
            let z = cfg.interaction()?;
            let u = cfg.function(seed)?;
            let rep = smp_report(&u, z.omega(), &z, &sec.compact.build()?, &p, &cfg.quadrature()?)?;
            let mut o = Outcome::new(to_json(&rep)?);
            if rep.verdict == Verdict::ViolationFound {
                o.violation = Some("maximum principle violation found".into());
            }
            Ok(o)
        }
        Command::Counterexample => {
            let z = cfg.interaction()?;
            let cx = build_counterexample(z.omega(), &p, &cfg.quadrature()?)?;
            let mut o = Outcome::new(to_json(&cx)?);
            if let Some(f) = &cx.f {
                o.csv = Some(grid_csv(f));
            }
            Ok(o)
        }
        Command::McCrosscheck => {
            let sec = cfg.section(&cfg.mc, "mc")?;
            let omega = cfg.interaction()?.omega().clone();
            let cutoff = sec.jump_cutoff.or(cfg.spacing().map(|h| 0.5 * h)).ok_or_else(|| Error::Config("need mc.jump_cutoff or [grid]".into()))?;
            let jc = JumpProcessConfig {
                kind: sec.kind,
                omega: omega.clone(),
                alpha: 2.0 * p.s,
                x_start: sec.x_start.clone(),
                horizon: sec.horizon,
                max_jumps: sec.max_jumps,
                seed,
                jump_cutoff: cutoff,
            };
            let stats = if sec.log_jumps {
                let (stats, log) = simulate_logged(&jc, sec.n_paths)?;
                let file = std::fs::File::create(out.join("mc-crosscheck-jumps.csv"))?;
                write_jump_log(&log, std::io::BufWriter::new(file))?;
                stats
            } else {
                simulate(&jc, sec.n_paths)?
            };
            let x = sec.killing_point.clone().unwrap_or_else(|| sec.x_start.clone());
            let k = killing_rate_crosscheck(&x, &omega, &p, sec.n_samples, seed)?;
            let mut o = Outcome::new(json!({
                "monte_carlo": {"ensemble": to_json(&stats)?, "killing_rate": to_json(&k.mc_rate)?},
                "quadrature": {"killing_rate": k.quadrature_rate, "point": x},
            }));
            let dev = (k.mc_rate.value - k.quadrature_rate).abs();
            if dev > 3.0 * k.mc_rate.stderr + 1e-9 * k.quadrature_rate.abs() {
                o.violation = Some(format!("killing rate off by {dev:e} ({:e} stderr)", k.mc_rate.stderr));
            }
            Ok(o)
        }
        Command::CalibrateConstants => {
            let sec = cfg.section(&cfg.calibrate, "calibrate")?;
            let date = sec.date.clone().unwrap_or_else(|| "unspecified".into());
            let path = out.join("constants.toml");
            let mut file = if path.exists() { ConstantsFile::load(&path)? } else { ConstantsFile::default() };
            let mut entries = Vec::new();
            for s in &sec.s_values {
                let e = calibrate(&crate::kernel::FracParams::new(p.n, *s)?, &date)?;
                entries.push(e.clone());
                file.upsert(e);
            }
            std::fs::write(&path, file.to_toml()?)?;
            Ok(Outcome::new(to_json(&entries)?))
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("NONLOCAL_MP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool that is already built keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command;
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_cli(cli: &Cli) -> Result<i32> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let (Some(h), Some(g)) = (cli.h, cfg.grid.as_mut()) {
        g.h = h;
    }
    if let Some(c) = &cfg.command {
        if c != cli.command.name() {
            return Err(Error::Config(format!("config is for `{c}`, not `{}`", cli.command.name())));
        }
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    std::fs::create_dir_all(&cli.out)?;
    let outcome = execute(cli.command, &cfg, seed, &cli.out)?;
    let name = cli.command.name();
    emit_golden(&outcome.json, &cli.out.join(format!("{name}.json")))?;
    if let Some(csv) = &outcome.csv {
        std::fs::write(cli.out.join(format!("{name}.csv")), csv)?;
    }
    if let Some(msg) = &outcome.violation {
        eprintln!("property violation: {msg}");
        return Ok(EXIT_VIOLATION);
    }
    if !cli.quiet {
        println!("{name}: results written to {}", cli.out.join(format!("{name}.json")).display());
    }
    Ok(0)
}
