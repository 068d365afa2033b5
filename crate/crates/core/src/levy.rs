//! Symmetric stable jump processes with killing, censoring or the
//! semirestricted jump rule.
//!
//! Paths are compound Poisson: jumps shorter than `jump_cutoff` are dropped
//! (their compensated drift vanishes by symmetry), longer jumps arrive at
//! rate `C ∫_{|y|≥δ} |y|^{-(n+2s)} dy` with radius `δ U^{-1/(2s)}` and a
//! uniform direction. Path `k` draws from ChaCha8 seeded with the master
//! seed on stream `k`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::domain::{DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};
use crate::families::member_rng;
use crate::forms::killing_measure;
use crate::grid::GridFunction;
use crate::kernel::{FracParams, QuadratureScheme};
use crate::special::unit_sphere_area;

/// A draw from the symmetric `α`-stable law with characteristic function
/// `exp(-dt |ξ|^α)`: Chambers-Mallows-Stuck in one dimension, a Gaussian
/// scaled by a positive `α/2`-stable variable (sub-Gaussian) otherwise.
pub fn sample_stable_increment(alpha: f64, dt: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let scale = dt.powf(1.0 / alpha);
    if n == 1 {
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let x = if (alpha - 1.0).abs() < 1e-12 {
            v.tan()
        } else {
            (alpha * v).sin() / v.cos().powf(1.0 / alpha) * ((v * (1.0 - alpha)).cos() / w).powf((1.0 - alpha) / alpha)
        };
        return vec![scale * x];
    }
    let a = 0.5 * alpha;
    let sub = if a >= 1.0 - 1e-12 { 1.0 } else { positive_stable(a, rng) };
    let r = (2.0 * sub).sqrt() * scale;
    (0..n).map(|_| {
        let g: f64 = StandardNormal.sample(rng);
        r * g
    }).collect()
}

/// Positive `a`-stable variable with Laplace transform `exp(-λ^a)` (Kanter).
fn positive_stable(a: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let e: f64 = Exp1.sample(rng);
    let t = PI * u;
    ((a * t).sin() / t.sin()).powf(1.0 / a) * (((1.0 - a) * t).sin() / ((a * t).sin() * e)).powf((1.0 - a) / a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Killed,
    Censored,
    Semirestricted,
}

impl ProcessKind {
    /// The interaction set whose pairs this jump rule realizes.
    pub fn interaction_set(&self, omega: DomainSpec) -> InteractionSet {
        match self {
            ProcessKind::Killed => InteractionSet::dirichlet(omega),
            ProcessKind::Censored => InteractionSet::restricted(omega),
            ProcessKind::Semirestricted => InteractionSet::semirestricted(omega),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpProcessConfig {
    pub kind: ProcessKind,
    pub omega: DomainSpec,
    pub alpha: f64,
    pub x_start: Vec<f64>,
    pub horizon: f64,
    pub max_jumps: usize,
    pub seed: u64,
    /// Jumps shorter than this are dropped.
    pub jump_cutoff: f64,
}

impl JumpProcessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid(format!("alpha = {} outside (0, 2)", self.alpha)));
        }
        if self.x_start.len() != self.omega.dim() {
            return Err(Error::DimensionMismatch { expected: self.omega.dim(), got: self.x_start.len() });
        }
        if !self.omega.contains(&self.x_start)? {
            return Err(Error::OutsideDomain("starting point is not in Omega".into()));
        }
        if !(self.horizon > 0.0) || !(self.jump_cutoff > 0.0) || self.max_jumps == 0 {
            return Err(invalid("horizon, jump cutoff and max_jumps must be positive"));
        }
        Ok(())
    }

    fn params(&self) -> Result<FracParams> {
        FracParams::new(self.omega.dim(), 0.5 * self.alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    fn of(samples: &[f64]) -> Option<Self> {
        let m = samples.len();
        if m == 0 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / m as f64;
        let var = if m > 1 { samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64 } else { 0.0 };
        Some(Self { value: mean, stderr: (var / m as f64).sqrt() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        let edges = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
        Self { edges, counts: vec![0; bins], below: 0, above: 0 }
    }

    fn add(&mut self, x: f64) {
        let (lo, hi) = (self.edges[0], self.edges[self.edges.len() - 1]);
        if x < lo {
            self.below += 1;
        } else if x >= hi {
            self.above += 1;
        } else {
            let bins = self.counts.len();
            let k = ((x - lo) / (hi - lo) * bins as f64) as usize;
            self.counts[k.min(bins - 1)] += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEnsembleStats {
    pub kind: ProcessKind,
    pub n_paths: usize,
    pub killed_fraction: Estimate,
    /// Fraction of paths that were ever outside Omega.
    pub exited_fraction: Estimate,
    /// First time outside Omega, over the paths that left.
    pub mean_exit_time: Option<Estimate>,
    /// First coordinate of the first landing point outside Omega.
    pub exit_location_histogram: Histogram,
    /// Time spent in Omega up to the horizon or death.
    pub occupation_time: Estimate,
    pub accepted_jumps: u64,
    pub suppressed_jumps: u64,
    pub killing_jumps: u64,
    pub truncated_paths: u64,
}

/// One proposed jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub path_id: usize,
    pub t: f64,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub accepted: bool,
    pub rule: JumpRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpRule {
    /// Allowed jump.
    Free,
    /// Landing outside Omega kills the path.
    Kill,
    /// Landing outside Omega is refused.
    Suppress,
}

impl JumpRule {
    fn as_str(&self) -> &'static str {
        match self {
            JumpRule::Free => "free",
            JumpRule::Kill => "kill",
            JumpRule::Suppress => "suppress",
        }
    }
}

#[derive(Clone, Debug, Default)]
struct PathOutcome {
    killed: bool,
    exit: Option<(f64, Vec<f64>)>,
    occupation: f64,
    truncated: bool,
    finished: bool,
    accepted: u64,
    suppressed: u64,
    log: Vec<JumpRecord>,
}

fn run_path(cfg: &JumpProcessConfig, rate: f64, id: usize, keep_log: bool) -> PathOutcome {
    let n = cfg.x_start.len();
    let s2 = cfg.alpha;
    let mut rng = member_rng(cfg.seed, id as u64);
    let mut x = cfg.x_start.clone();
    let mut inside = true;
    let mut t = 0.0;
    let mut out = PathOutcome::default();
    for jump in 0..=cfg.max_jumps {
        let wait: f64 = Exp1.sample(&mut rng);
        let t_next = t + wait / rate;
        if t_next > cfg.horizon {
            if inside {
                out.occupation += cfg.horizon - t;
            }
            return out;
        }
        if inside {
            out.occupation += t_next - t;
        }
        t = t_next;
        if jump == cfg.max_jumps {
            out.truncated = true;
            return out;
        }
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let radius = cfg.jump_cutoff * u.powf(-1.0 / s2);
        let dir = direction(n, &mut rng);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + radius * d).collect();
        let lands_inside = cfg.omega.contains_unchecked(&y);
        let rule = match (cfg.kind, inside, lands_inside) {
            (_, true, true) => JumpRule::Free,
            (ProcessKind::Killed, _, false) => JumpRule::Kill,
            (ProcessKind::Censored, _, false) => JumpRule::Suppress,
            (ProcessKind::Semirestricted, true, false) => JumpRule::Free,
            (ProcessKind::Semirestricted, false, true) => JumpRule::Free,
            (ProcessKind::Semirestricted, false, false) => JumpRule::Suppress,
            (_, false, true) => JumpRule::Free,
        };
        let accepted = rule != JumpRule::Suppress;
        if keep_log {
            out.log.push(JumpRecord { path_id: id, t, from: x.clone(), to: y.clone(), accepted, rule });
        }
        match rule {
            JumpRule::Suppress => out.suppressed += 1,
            JumpRule::Kill => {
                out.killed = true;
                out.finished = true;
                out.exit = Some((t, y));
                return out;
            }
            JumpRule::Free => {
                out.accepted += 1;
                if inside && !lands_inside && out.exit.is_none() {
                    out.exit = Some((t, y.clone()));
                }
                x = y;
                inside = lands_inside;
            }
        }
    }
    out
}

fn direction(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    if n == 1 {
        return vec![if rng.random_bool(0.5) { 1.0 } else { -1.0 }];
    }
    loop {
        let g: Vec<f64> = (0..n).map(|_| -> f64 { StandardNormal.sample(rng) }).collect();
        let r = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 1e-300 {
            return g.into_iter().map(|v| v / r).collect();
        }
    }
}

/// Rate of jumps longer than `delta`: `C |S^{n-1}| δ^{-2s} / (2s)`.
fn jump_rate(p: &FracParams, delta: f64) -> f64 {
    p.c_ns * unit_sphere_area(p.n) * delta.powf(-2.0 * p.s) / (2.0 * p.s)
}

fn run_paths(cfg: &JumpProcessConfig, n_paths: usize, keep_log: bool) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    if n_paths == 0 {
        return Err(invalid("need at least one path"));
    }
    let rate = jump_rate(&cfg.params()?, cfg.jump_cutoff);
    Ok((0..n_paths).into_par_iter().map(|k| run_path(cfg, rate, k, keep_log)).collect())
}

fn summarize(cfg: &JumpProcessConfig, paths: &[PathOutcome]) -> PathEnsembleStats {
    let m = paths.len();
    let frac = |pred: &dyn Fn(&PathOutcome) -> bool| {
        let f = paths.iter().filter(|p| pred(p)).count() as f64 / m as f64;
        Estimate { value: f, stderr: (f * (1.0 - f) / m as f64).sqrt() }
    };
    let (lo, hi) = match cfg.omega.bounding_box() {
        Some((lo, hi)) => {
            let w = hi[0] - lo[0];
            (lo[0] - w, hi[0] + w)
        }
        None => (cfg.x_start[0] - 10.0, cfg.x_start[0] + 10.0),
    };
    let mut hist = Histogram::new(lo, hi, 40);
    let mut times = Vec::new();
    for p in paths {
        if let Some((t, y)) = &p.exit {
            times.push(*t);
            hist.add(y[0]);
        }
    }
    let occ: Vec<f64> = paths.iter().map(|p| p.occupation).collect();
    PathEnsembleStats {
        kind: cfg.kind,
        n_paths: m,
        killed_fraction: frac(&|p| p.killed),
        exited_fraction: frac(&|p| p.exit.is_some()),
        mean_exit_time: Estimate::of(&times),
        exit_location_histogram: hist,
        occupation_time: Estimate::of(&occ).expect("at least one path"),
        accepted_jumps: paths.iter().map(|p| p.accepted).sum(),
        suppressed_jumps: paths.iter().map(|p| p.suppressed).sum(),
        killing_jumps: paths.iter().filter(|p| p.killed).count() as u64,
        truncated_paths: paths.iter().filter(|p| p.truncated).count() as u64,
    }
}

pub fn simulate(cfg: &JumpProcessConfig, n_paths: usize) -> Result<PathEnsembleStats> {
    Ok(summarize(cfg, &run_paths(cfg, n_paths, false)?))
}

/// As [`simulate`], also returning every proposed jump in path order.
pub fn simulate_logged(cfg: &JumpProcessConfig, n_paths: usize) -> Result<(PathEnsembleStats, Vec<JumpRecord>)> {
    let mut paths = run_paths(cfg, n_paths, true)?;
    let log = paths.iter_mut().flat_map(|p| std::mem::take(&mut p.log)).collect();
    Ok((summarize(cfg, &paths), log))
}

/// CSV with columns `path_id,t,from,to,accepted,rule`; coordinates of a
/// point are separated by `;`.
pub fn write_jump_log(records: &[JumpRecord], mut w: impl Write) -> Result<()> {
    let pt = |x: &[f64]| x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";");
    writeln!(w, "path_id,t,from,to,accepted,rule")?;
    for r in records {
        writeln!(w, "{},{:e},{},{},{},{}", r.path_id, r.t, pt(&r.from), pt(&r.to), r.accepted, r.rule.as_str())?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KillingCrosscheck {
    pub mc_rate: Estimate,
    pub quadrature_rate: f64,
}

/// Monte Carlo estimate of `C ∫_{G^c} |x-y|^{-(n+2s)} dy` from jump
/// proposals longer than half the distance to `∂G`, against the quadrature
/// killing measure of the Dirichlet preset.
pub fn killing_rate_crosscheck(x: &[f64], g: &DomainSpec, p: &FracParams, n_samples: usize, seed: u64) -> Result<KillingCrosscheck> {
    if x.len() != p.n || g.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: x.len() });
    }
    if g.is_full_space() {
        return Ok(KillingCrosscheck { mc_rate: Estimate { value: 0.0, stderr: 0.0 }, quadrature_rate: 0.0 });
    }
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let d = g.distance_to_boundary(x)?;
    if d <= 0.0 {
        return Err(Error::BoundaryAdjacent(format!("{x:?} lies on the boundary of G")));
    }
    let delta = 0.5 * d;
    let rate = jump_rate(p, delta);
    let chunk = 4096;
    let hits: usize = (0..n_samples.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut rng = member_rng(seed, c as u64);
            let todo = chunk.min(n_samples - c * chunk);
            (0..todo)
                .filter(|_| {
                    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    let r = delta * u.powf(-0.5 / p.s);
                    let dir = direction(p.n, &mut rng);
                    let y: Vec<f64> = x.iter().zip(&dir).map(|(a, e)| a + r * e).collect();
                    !g.contains_unchecked(&y)
                })
                .count()
        })
        .sum();
    let f = hits as f64 / n_samples as f64;
    let mc_rate = Estimate { value: rate * f, stderr: rate * (f * (1.0 - f) / n_samples as f64).sqrt() };
    let z = InteractionSet::dirichlet(g.clone());
    let quadrature_rate = killing_measure(x, g, &z, p, &QuadratureScheme::default())?;
    Ok(KillingCrosscheck { mc_rate, quadrature_rate })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCheck {
    pub start_value: f64,
    pub exit_mean: Estimate,
    pub discrepancy: f64,
    pub unfinished_fraction: f64,
}

/// `|E u(X_τ) - u(x_start)|` for the killed process started at `x_start`.
pub fn harmonic_mean_check(u: &GridFunction, cfg: &JumpProcessConfig, n_paths: usize) -> Result<HarmonicCheck> {
    if cfg.kind != ProcessKind::Killed {
        return Err(invalid("harmonic mean check needs the killed process"));
    }
    if u.dim() != cfg.x_start.len() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: cfg.x_start.len() });
    }
    let paths = run_paths(cfg, n_paths, false)?;
    let unfinished = paths.iter().filter(|p| !p.finished).count() as f64 / n_paths as f64;
    if unfinished > 0.01 {
        return Err(Error::Hypothesis(format!("{:.1}% of paths did not exit before the horizon", 100.0 * unfinished)));
    }
    let vals: Vec<f64> = paths.iter().filter_map(|p| p.exit.as_ref().map(|(_, y)| u.value_at(y))).collect();
    let exit_mean = Estimate::of(&vals).expect("paths exited");
    let start_value = u.value_at(&cfg.x_start);
    Ok(HarmonicCheck { start_value, exit_mean, discrepancy: (exit_mean.value - start_value).abs(), unfinished_fraction: unfinished })
}
