//! Spectral powers of the Dirichlet and Neumann Laplacian on an interval.
//!
//! The interval is the node span `[a, b]` of a one-dimensional lattice with
//! `J` cells. Dirichlet data is expanded in the discrete sine basis
//! `sin(kπ i/J)`, `k = 1..J-1`; Neumann data in the discrete cosine basis
//! `cos(mπ i/J)`, `m = 0..J` (mode index `k = m + 1`).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::{FarField, GridFunction};
use crate::lattice::Lattice;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Largest admissible mode count on a lattice.
pub fn nyquist_limit(lat: &Lattice, bc: BoundaryCondition) -> usize {
    let cells = lat.shape()[0].saturating_sub(1);
    match bc {
        BoundaryCondition::Dirichlet => cells.saturating_sub(1),
        BoundaryCondition::Neumann => cells + 1,
    }
}

/// `λ_k` for mode `k ≥ 1` on an interval of length `len`.
pub fn eigenvalue(bc: BoundaryCondition, k: usize, len: f64) -> f64 {
    let m = match bc {
        BoundaryCondition::Dirichlet => k as f64,
        BoundaryCondition::Neumann => k as f64 - 1.0,
    };
    (m * PI / len).powi(2)
}

fn cells_of(u: &GridFunction) -> Result<usize> {
    if u.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: u.dim() });
    }
    let cells = u.lattice().shape()[0] - 1;
    if cells < 2 {
        return Err(invalid("spectral expansion needs at least two cells"));
    }
    Ok(cells)
}

fn basis(bc: BoundaryCondition, k: usize, i: usize, cells: usize) -> f64 {
    // reduce the phase exactly before the trig call
    let m = match bc {
        BoundaryCondition::Dirichlet => k,
        BoundaryCondition::Neumann => k - 1,
    };
    let t = PI * ((m * i) % (2 * cells)) as f64 / cells as f64;
    match bc {
        BoundaryCondition::Dirichlet => t.sin(),
        BoundaryCondition::Neumann => t.cos(),
    }
}

/// Coefficients `c_1..c_modes` with `u_i = Σ_k c_k e_k(i)`.
pub fn coefficients(u: &GridFunction, bc: BoundaryCondition, modes: usize) -> Result<Vec<f64>> {
    let cells = cells_of(u)?;
    check_modes(u.lattice(), bc, modes)?;
    let v = u.values();
    let jf = cells as f64;
    Ok((1..=modes)
        .map(|k| match bc {
            BoundaryCondition::Dirichlet => {
                2.0 / jf * (1..cells).map(|i| v[i] * basis(bc, k, i, cells)).sum::<f64>()
            }
            BoundaryCondition::Neumann => {
                let m = k - 1;
                let norm = if m == 0 || m == cells { 1.0 / jf } else { 2.0 / jf };
                norm * (0..=cells)
                    .map(|i| {
                        let w = if i == 0 || i == cells { 0.5 } else { 1.0 };
                        w * v[i] * basis(bc, k, i, cells)
                    })
                    .sum::<f64>()
            }
        })
        .collect())
}

/// `Σ_k c_k e_k` sampled on the lattice nodes.
pub fn synthesize(lat: &Lattice, bc: BoundaryCondition, coeffs: &[f64]) -> Result<GridFunction> {
    if lat.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: lat.dim() });
    }
    check_modes(lat, bc, coeffs.len())?;
    let cells = lat.shape()[0] - 1;
    let values = (0..=cells)
        .map(|i| coeffs.iter().enumerate().map(|(k, c)| c * basis(bc, k + 1, i, cells)).sum())
        .collect();
    GridFunction::new(lat.clone(), values, FarField::CompactSupport)
}

fn check_modes(lat: &Lattice, bc: BoundaryCondition, modes: usize) -> Result<()> {
    let limit = nyquist_limit(lat, bc);
    if modes == 0 || modes > limit {
        return Err(invalid(format!("mode count {modes} outside 1..={limit}")));
    }
    Ok(())
}

/// Multiplies each coefficient by `λ_k^s` (with `0^s = 0`).
pub fn scale_coefficients(coeffs: &[f64], bc: BoundaryCondition, s: f64, len: f64) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let lam = eigenvalue(bc, k + 1, len);
            if lam == 0.0 { 0.0 } else { c * lam.powf(s) }
        })
        .collect()
}

/// Spectral power `s` of the Dirichlet or Neumann Laplacian on the interval
/// spanned by the lattice, truncated to the first `modes` modes.
pub fn spectral_1d(u: &GridFunction, bc: BoundaryCondition, s: f64, modes: usize) -> Result<GridFunction> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid("spectral power must be a nonnegative real"));
    }
    let c = coefficients(u, bc, modes)?;
    let len = u.lattice().hi()[0] - u.lattice().lo()[0];
    synthesize(u.lattice(), bc, &scale_coefficients(&c, bc, s, len))
}
