//! Calibrated constants `ĉ` (De Giorgi) and `c_sob` (localized Sobolev),
//! stored per `(n, s)` in a versioned TOML file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::degiorgi::{calibrate_c_hat, calibrate_c_sob, sobolev_family, subsolution_family};
use crate::error::{Error, Result};
use crate::kernel::FracParams;

/// Format version of the constants file and of the calibration families.
pub const CONSTANTS_VERSION: u32 = 1;
/// Seed of the subsolution family used for `ĉ`; held-out checks use seeds from 1000 on.
pub const CALIBRATION_SEED: u64 = 0;
pub const CALIBRATION_MEMBERS: usize = 40;
pub const SOBOLEV_SEED: u64 = 7;
pub const SOBOLEV_MEMBERS: usize = 100;

const BUILTIN: &str = include_str!("../data/constants.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEntry {
    pub version: u32,
    pub n: usize,
    pub s: f64,
    pub c_hat: f64,
    pub c_sob: f64,
    pub calibration_date: String,
    pub family_hash: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    #[serde(default)]
    pub constants: Vec<ConstantsEntry>,
}

impl ConstantsFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The constants shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled constants file is valid")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn lookup(&self, n: usize, s: f64) -> Result<&ConstantsEntry> {
        self.constants
            .iter()
            .find(|e| e.n == n && (e.s - s).abs() < 1e-9)
            .ok_or_else(|| Error::Config(format!("no calibrated constants for n = {n}, s = {s}; run calibrate-constants")))
    }

    /// Inserts or replaces the entry for the same `(n, s)`.
    pub fn upsert(&mut self, entry: ConstantsEntry) {
        self.constants.retain(|e| !(e.n == entry.n && (e.s - entry.s).abs() < 1e-9));
        self.constants.push(entry);
        self.constants.sort_by(|a, b| (a.n, a.s).partial_cmp(&(b.n, b.s)).unwrap());
    }
}

/// Runs both calibrations for `(n, s)`.
pub fn calibrate(p: &FracParams, date: &str) -> Result<ConstantsEntry> {
    let subs = subsolution_family(p, CALIBRATION_SEED, CALIBRATION_MEMBERS)?;
    let bumps = sobolev_family(p, SOBOLEV_SEED, SOBOLEV_MEMBERS)?;
    let mut hasher = Sha256::new();
    hasher.update(format!("v{CONSTANTS_VERSION} n={} s={}", p.n, p.s).as_bytes());
    for m in &subs {
        for v in m.u.values().iter().chain(&m.center).chain([&m.radius]) {
            hasher.update(v.to_le_bytes());
        }
    }
    for (u, r, rho) in &bumps {
        for v in u.values().iter().chain([r, rho]) {
            hasher.update(v.to_le_bytes());
        }
    }
    let family_hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(ConstantsEntry {
        version: CONSTANTS_VERSION,
        n: p.n,
        s: p.s,
        c_hat: calibrate_c_hat(p, &subs)?,
        c_sob: calibrate_c_sob(p, &bumps)?,
        calibration_date: date.to_string(),
        family_hash,
    })
}
