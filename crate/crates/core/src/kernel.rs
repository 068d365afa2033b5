//! The kernel `C_{n,s} |x-y|^{-(n+2s)}`, its closed-form tails and the
//! principal-value quadrature on lattices.

use serde::{Deserialize, Serialize};

use crate::domain::{dist2, DomainSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::RowEngine;
use crate::special::{gamma, unit_sphere_area};

/// Normalizing constant of the fractional Laplacian.
pub fn kernel_constant(n: usize, s: f64) -> Result<f64> {
    check_ns(n, s)?;
    let nf = n as f64;
    Ok(s * 2f64.powf(2.0 * s) * gamma(nf / 2.0 + s) / (std::f64::consts::PI.powf(nf / 2.0) * gamma(1.0 - s)))
}

fn check_ns(n: usize, s: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("order s must lie in (0,1), got {s}")));
    }
    Ok(())
}

/// Integrability exponent used by the localized Sobolev inequality:
/// `4` when `n = 1 <= 2s`, else `2n/(n-2s)`.
pub fn bar_p_exponent(n: usize, s: f64) -> Result<f64> {
    check_ns(n, s)?;
    if n == 1 && 2.0 * s >= 1.0 {
        Ok(4.0)
    } else {
        Ok(2.0 * n as f64 / (n as f64 - 2.0 * s))
    }
}

/// `(n, s)` with the derived constants of the De Giorgi argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub n: usize,
    pub s: f64,
    pub c_ns: f64,
    pub pbar: f64,
    pub beta: f64,
    pub eta: f64,
}

impl FracParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let c_ns = kernel_constant(n, s)?;
        let pbar = bar_p_exponent(n, s)?;
        let beta = pbar / 2.0 - 1.0;
        let eta = 2f64.powf(pbar / 4.0 * (n as f64 + 2.0 * s + 1.0) + beta);
        Ok(Self { n, s, c_ns, pbar, beta, eta })
    }

    /// Kernel exponent `n + 2s`.
    pub fn order(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }
}

/// `C_{n,s} A(x,y) |x-y|^{-(n+2s)}`.
pub fn riesz_kernel(x: &[f64], y: &[f64], p: &FracParams, coeff: Option<&dyn Fn(&[f64], &[f64]) -> f64>) -> Result<f64> {
    if x.len() != p.n || y.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: x.len().max(y.len()) });
    }
    let r2 = dist2(x, y);
    if r2 == 0.0 {
        return Err(invalid("kernel is singular at x = y"));
    }
    let a = coeff.map(|f| f(x, y)).unwrap_or(1.0);
    Ok(p.c_ns * a * r2.powf(-p.order() / 2.0))
}

/// `∫_{|y-x0|>r} |y-x0|^{-p_exp} dy`.
pub fn farfield_powerlaw_integral(x0: &[f64], r: f64, p_exp: f64, n: usize) -> Result<f64> {
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    if p_exp <= n as f64 {
        return Err(Error::Divergent(format!("exponent {p_exp} does not exceed dimension {n}")));
    }
    let nf = n as f64;
    Ok(unit_sphere_area(n) * r.powf(nf - p_exp) / (p_exp - nf))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    SymmetricPair,
    Taylor,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    /// Radius of the near field treated by the correction.
    pub delta: f64,
    /// Minimum extent of truncation boxes for unbounded regions.
    pub truncation_radius: f64,
    pub refinement_levels: usize,
    pub correction_mode: CorrectionMode,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self { delta: 0.05, truncation_radius: 8.0, refinement_levels: 2, correction_mode: CorrectionMode::SymmetricPair }
    }
}

impl QuadratureScheme {
    /// Default scheme for a lattice of spacing `h` (`delta = 2h`).
    pub fn for_spacing(h: f64) -> Self {
        Self { delta: 2.0 * h, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !(self.truncation_radius > self.delta) {
            return Err(invalid("need 0 < delta < truncation_radius"));
        }
        if self.refinement_levels < 1 {
            return Err(invalid("refinement_levels must be at least 1"));
        }
        Ok(())
    }
}

/// `∫_region f(y) |x-y|^{-(n+2s)} dy` (no `C_{n,s}` factor) for a lattice node
/// `x`. The integrand must vanish at `x` when `x` is in the region (principal
/// value); the near field is corrected per `q.correction_mode`, and the part of
/// the region outside the lattice box is integrated exactly against the far
/// field model of `f`.
pub fn singular_integral(f: &GridFunction, x: &[f64], region: &DomainSpec, p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
    q.validate()?;
    let lat = f.lattice();
    if region.dim() != lat.dim() || p.n != lat.dim() {
        return Err(Error::DimensionMismatch { expected: lat.dim(), got: region.dim() });
    }
    let i = lat.node_index(x).ok_or_else(|| invalid(format!("{x:?} is not a lattice node")))?;
    crate::quadrature::check_features(lat, region)?;
    let sd = region.signed_distance(x);
    if region.contains_unchecked(x) && sd.abs() < 0.5 * lat.h() {
        return Err(Error::BoundaryAdjacent(format!("{x:?}")));
    }
    let engine = RowEngine::new(lat, p.s, q)?;
    let w = lat.occupancy(region);
    let mut row = vec![0.0; lat.len()];
    engine.row_weights(i, &w, &mut row);
    let box_part: f64 = row.iter().zip(f.values()).map(|(a, v)| a * v).sum();
    let far = if region.contains_infinity() {
        f.farfield().terms().iter().map(|(c, qq)| c * engine.exterior(x, *qq)).sum()
    } else {
        0.0
    };
    Ok(box_part + far)
}
