//! Experiment configuration files (TOML, or JSON by extension).

use serde::Deserialize;
use std::path::Path;

use crate::domain::{DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};
use crate::families::{member_rng, plateau, random_smooth, Bump};
use crate::grid::{FarField, GridFunction};
use crate::kernel::{CorrectionMode, FracParams, QuadratureScheme};
use crate::lattice::Lattice;
use crate::levy::ProcessKind;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval { a: f64, b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    FullSpace { dim: usize },
    Complement { of: Box<DomainConfig> },
    Union { parts: Vec<DomainConfig> },
    Difference { a: Box<DomainConfig>, b: Box<DomainConfig> },
    Intersection { a: Box<DomainConfig>, b: Box<DomainConfig> },
}

impl DomainConfig {
    pub fn build(&self) -> Result<DomainSpec> {
        match self {
            DomainConfig::Interval { a, b } => DomainSpec::interval(*a, *b),
            DomainConfig::Ball { center, radius } => DomainSpec::ball(center.clone(), *radius),
            DomainConfig::Box { lo, hi } => DomainSpec::boxed(lo.clone(), hi.clone()),
            DomainConfig::FullSpace { dim } => Ok(DomainSpec::full_space(*dim)),
            DomainConfig::Complement { of } => Ok(DomainSpec::complement(of.build()?)),
            DomainConfig::Union { parts } => DomainSpec::union(parts.iter().map(|p| p.build()).collect::<Result<_>>()?),
            DomainConfig::Difference { a, b } => DomainSpec::difference(a.build()?, b.build()?),
            DomainConfig::Intersection { a, b } => DomainSpec::intersection(a.build()?, b.build()?),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub n: usize,
    pub s: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub h: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub delta: Option<f64>,
    pub truncation_radius: Option<f64>,
    pub refinement_levels: Option<usize>,
    pub correction_mode: Option<CorrectionMode>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSection {
    /// `dirichlet`, `restricted`, `semirestricted` or `general`.
    pub preset: String,
    pub omega: DomainConfig,
    pub u1: Option<DomainConfig>,
    pub u2: Option<DomainConfig>,
}

impl InteractionSection {
    pub fn build(&self) -> Result<InteractionSet> {
        let omega = self.omega.build()?;
        match self.preset.as_str() {
            "dirichlet" => Ok(InteractionSet::dirichlet(omega)),
            "restricted" => Ok(InteractionSet::restricted(omega)),
            "semirestricted" => Ok(InteractionSet::semirestricted(omega)),
            "general" => {
                let (u1, u2) = match (&self.u1, &self.u2) {
                    (Some(a), Some(b)) => (a.build()?, b.build()?),
                    _ => return Err(Error::Config("general preset needs u1 and u2".into())),
                };
                InteractionSet::general(u1, u2, omega)
            }
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Constant { c: f64 },
    /// `amplitude exp(-|x - center|^2 / width^2)`, compactly truncated to the lattice.
    Gaussian { center: Vec<f64>, width: f64, amplitude: Option<f64> },
    Bump { center: Vec<f64>, width: f64, height: Option<f64> },
    Plateau { domain: DomainConfig, ramp: f64 },
    RandomSmooth { center: Vec<f64>, radius: f64, seed: Option<u64> },
    Samples { values: Vec<f64>, far_constant: Option<f64> },
}

impl FunctionConfig {
    pub fn build(&self, lat: &Lattice, seed: u64) -> Result<GridFunction> {
        match self {
            FunctionConfig::Constant { c } => GridFunction::from_fn(lat.clone(), FarField::Constant { c: *c }, |_| *c),
            FunctionConfig::Gaussian { center, width, amplitude } => {
                let a = amplitude.unwrap_or(1.0);
                GridFunction::from_fn(lat.clone(), FarField::CompactSupport, |x| {
                    a * (-crate::domain::dist2(x, center) / (width * width)).exp()
                })
            }
            FunctionConfig::Bump { center, width, height } => {
                Bump { center: center.clone(), width: *width, height: height.unwrap_or(1.0) }.sample(lat)
            }
            FunctionConfig::Plateau { domain, ramp } => plateau(lat, &domain.build()?, *ramp),
            FunctionConfig::RandomSmooth { center, radius, seed: own } => {
                random_smooth(lat, center, *radius, &mut member_rng(own.unwrap_or(seed), 0))
            }
            FunctionConfig::Samples { values, far_constant } => {
                let far = far_constant.map(|c| FarField::Constant { c }).unwrap_or(FarField::CompactSupport);
                GridFunction::new(lat.clone(), values.clone(), far)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSection {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    pub region_a: DomainConfig,
    pub region_b: DomainConfig,
    #[serde(default)]
    pub restrict_to_z: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillingSection {
    pub points: Vec<Vec<f64>>,
    pub g: DomainConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub g: DomainConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaccioppoliSection {
    pub g: DomainConfig,
    #[serde(default = "default_cases")]
    pub cases: usize,
}

fn default_cases() -> usize {
    50
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeGiorgiSection {
    pub center: Vec<f64>,
    pub radius: f64,
    pub c_hat: Option<f64>,
    /// Constants file; the bundled one when absent.
    pub constants: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    pub center: Vec<f64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpSection {
    pub compact: DomainConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub kind: ProcessKind,
    pub x_start: Vec<f64>,
    pub horizon: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_max_jumps")]
    pub max_jumps: usize,
    /// Defaults to half the grid spacing.
    pub jump_cutoff: Option<f64>,
    /// Point for the killing-rate comparison; `x_start` when absent.
    pub killing_point: Option<Vec<f64>>,
    /// Optional CSV jump log written next to the results.
    #[serde(default)]
    pub log_jumps: bool,
}

fn default_paths() -> usize {
    10_000
}
fn default_samples() -> usize {
    100_000
}
fn default_max_jumps() -> usize {
    1_000_000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub s_values: Vec<f64>,
    pub date: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub params: ParamsSection,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub interaction: Option<InteractionSection>,
    pub function: Option<FunctionConfig>,
    pub tail: Option<BallSection>,
    pub energy: Option<EnergySection>,
    pub killing: Option<KillingSection>,
    pub decomposition: Option<RegionSection>,
    pub caccioppoli: Option<CaccioppoliSection>,
    pub degiorgi: Option<DeGiorgiSection>,
    pub barrier: Option<BarrierSection>,
    pub mp: Option<MpSection>,
    pub mc: Option<McSection>,
    pub calibrate: Option<CalibrateSection>,
}

impl ExperimentConfig {
    pub fn parse_str(text: &str, json: bool) -> Result<Self> {
        let cfg: Self = if json {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text, path.extension().is_some_and(|e| e == "json"))
    }

    pub fn params(&self) -> Result<FracParams> {
        FracParams::new(self.params.n, self.params.s)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let g = self.grid.as_ref().ok_or_else(|| Error::Config("missing [grid] section".into()))?;
        if !(g.h > 0.0) {
            return Err(invalid("grid spacing must be positive"));
        }
        Lattice::from_box(&g.lo, &g.hi, g.h)
    }

    pub fn spacing(&self) -> Option<f64> {
        self.grid.as_ref().map(|g| g.h)
    }

    pub fn quadrature(&self) -> Result<QuadratureScheme> {
        let base = match self.spacing() {
            Some(h) => QuadratureScheme::for_spacing(h),
            None => QuadratureScheme::default(),
        };
        let q = &self.quadrature;
        let scheme = QuadratureScheme {
            delta: q.delta.unwrap_or(base.delta),
            truncation_radius: q.truncation_radius.unwrap_or(base.truncation_radius),
            refinement_levels: q.refinement_levels.unwrap_or(base.refinement_levels),
            correction_mode: q.correction_mode.unwrap_or(base.correction_mode),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn interaction(&self) -> Result<InteractionSet> {
        self.interaction.as_ref().ok_or_else(|| Error::Config("missing [interaction] section".into()))?.build()
    }

    pub fn function(&self, seed: u64) -> Result<GridFunction> {
        let f = self.function.as_ref().ok_or_else(|| Error::Config("missing [function] section".into()))?;
        f.build(&self.lattice()?, seed)
    }

    /// The named command section, or a configuration error.
    pub fn section<'a, T>(&'a self, field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| Error::Config(format!("missing [{name}] section")))
    }
}
