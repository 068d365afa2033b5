//! Barrier functions: 1 on an inner ball, 0 outside an outer ball and
//! s-harmonic (discrete collocation) on the annulus in between.

use serde::{Deserialize, Serialize};

use crate::domain::{dist2, DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};
use crate::forms::{pairing, FormValue};
use crate::grid::{FarField, GridFunction};
use crate::kernel::{FracParams, QuadratureScheme};
use crate::lattice::Lattice;
use crate::families::Bump;
use crate::operators::{solve_collocation, ZOperator};
use crate::smp::bump_pairings;

fn check_radii(x0: &[f64], r: f64, big_r: f64, p: &FracParams) -> Result<()> {
    if x0.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: x0.len() });
    }
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(invalid(format!("barrier radii need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    Ok(())
}

fn scheme_for(lat: &Lattice, q: &QuadratureScheme) -> QuadratureScheme {
    QuadratureScheme { delta: 2.0 * lat.h(), ..*q }
}

/// Barrier around `x0`. The lattice is centred at `x0`, spans `B_{2R}` and
/// puts `max(16, 2(R-r)/delta)` cells across the annulus.
pub fn build_barrier(x0: &[f64], r: f64, big_r: f64, p: &FracParams, q: &QuadratureScheme) -> Result<GridFunction> {
    q.validate()?;
    check_radii(x0, r, big_r, p)?;
    let cells = ((2.0 * (big_r - r) / q.delta).ceil() as usize).max(16);
    let h = (big_r - r) / cells as f64;
    let half = (2.0 * big_r / h).ceil() as usize;
    let lo: Vec<f64> = x0.iter().map(|c| c - half as f64 * h).collect();
    let lat = Lattice::new(lo, h, vec![2 * half + 1; p.n])?;
    let mut values = vec![0.0; lat.len()];
    let mut unknown = vec![false; lat.len()];
    for i in 0..lat.len() {
        let d = dist2(&lat.point(i), x0).sqrt();
        if d < r {
            values[i] = 1.0;
        } else if d < big_r {
            unknown[i] = true;
        }
    }
    let data = GridFunction::new(lat.clone(), values, FarField::CompactSupport)?;
    let z = InteractionSet::dirichlet(DomainSpec::full_space(p.n));
    let rhs = vec![0.0; lat.len()];
    solve_collocation(&data, &unknown, &rhs, &z, p, &scheme_for(&lat, q))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierReport {
    #[serde(skip)]
    pub phi: Option<GridFunction>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `min Φ(x) / (R - |x - x0|)^s` over the nodes of `B_R`.
    pub fitted_c: f64,
    /// Largest `𝔏ˢ_Z Φ` over evaluable annulus nodes.
    pub max_operator_value: f64,
    /// Three times the largest error estimate of the pairings of `𝔏ˢ_Z Φ`
    /// with bumps of width `4h` inside the annulus.
    pub tolerance: f64,
    pub clamps_exact: bool,
    pub radially_nonincreasing: bool,
    /// Log-log slope of `Φ` against `R - |x - x0|` over the last five shells.
    pub boundary_slope: f64,
    /// Range of `Φ / (R - |x - x0|)^s` over the same shells.
    pub boundary_ratio: (f64, f64),
    pub data_ok: bool,
}

/// Checks the barrier data conditions and the sign of `𝔏ˢ_Z Φ` on the annulus.
pub fn verify_barrier(
    phi: &GridFunction,
    x0: &[f64],
    r: f64,
    big_r: f64,
    z: &InteractionSet,
    p: &FracParams,
    q: &QuadratureScheme,
) -> Result<BarrierReport> {
    check_radii(x0, r, big_r, p)?;
    let lat = phi.lattice();
    if phi.dim() != p.n || z.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: phi.dim() });
    }
    let corner_lo: Vec<f64> = x0.iter().map(|c| c - big_r).collect();
    let corner_hi: Vec<f64> = x0.iter().map(|c| c + big_r).collect();
    if !lat.in_cells(&corner_lo) || !lat.in_cells(&corner_hi) {
        return Err(Error::LatticeMismatch("lattice does not cover the outer ball".into()));
    }
    let v = phi.values();
    let radius: Vec<f64> = (0..lat.len()).map(|i| dist2(&lat.point(i), x0).sqrt()).collect();

    let mut clamps_exact = phi.farfield() == FarField::CompactSupport;
    let mut fitted_c = f64::INFINITY;
    let mut annulus = Vec::new();
    for (i, d) in radius.iter().enumerate() {
        if *d < r {
            clamps_exact &= v[i] == 1.0;
        } else if *d >= big_r {
            clamps_exact &= v[i] == 0.0;
        }
        if *d < big_r {
            fitted_c = fitted_c.min(v[i] / (big_r - d).powf(p.s));
        }
        if *d >= r && *d < big_r {
            annulus.push(i);
        }
    }

    let mut order: Vec<usize> = (0..lat.len()).filter(|i| radius[*i] < big_r).collect();
    order.sort_by(|a, b| radius[*a].total_cmp(&radius[*b]));
    let slack = 1e-10;
    let radially_nonincreasing = order.windows(2).all(|w| radius[w[1]] - radius[w[0]] < 1e-12 || v[w[1]] <= v[w[0]] + slack);

    let h = lat.h();
    let shells: Vec<usize> = annulus.iter().copied().filter(|i| big_r - radius[*i] <= 5.5 * h).collect();
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut ratio = (f64::INFINITY, f64::NEG_INFINITY);
    for i in &shells {
        let d = big_r - radius[*i];
        if v[*i] > 0.0 {
            let (x, y) = (d.ln(), v[*i].ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += 1.0;
        }
        let q = v[*i] / d.powf(p.s);
        ratio = (ratio.0.min(q), ratio.1.max(q));
    }
    let denom = m * sxx - sx * sx;
    let boundary_slope = if m >= 2.0 && denom.abs() > 1e-14 { (m * sxy - sx * sy) / denom } else { f64::NAN };

    let qf = scheme_for(lat, q);
    let op = ZOperator::new(lat, z, p, &qf)?;
    let evaluable: Vec<usize> = annulus.iter().copied().filter(|i| op.is_evaluable(*i).is_ok()).collect();
    let max_operator_value = op.apply_nodes(phi, &evaluable).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let bumps: Vec<Bump> = annulus
        .iter()
        .map(|i| lat.point(*i))
        .filter(|x| {
            let d = dist2(x, x0).sqrt();
            d - r >= 5.0 * h && big_r - d >= 5.0 * h && z.omega().signed_distance(x) <= -5.0 * h
        })
        .map(|x| Bump::new(x, 4.0 * h))
        .collect();
    let tolerance = if bumps.is_empty() {
        0.0
    } else {
        3.0 * bump_pairings(phi, &bumps, z, p, &qf)?.iter().map(|v| v.error_estimate).fold(0.0, f64::max)
    };

    let data_ok = clamps_exact && fitted_c > 0.0 && max_operator_value <= tolerance + 1e-12;
    Ok(BarrierReport {
        phi: Some(phi.clone()),
        inner_radius: r,
        outer_radius: big_r,
        fitted_c,
        max_operator_value,
        tolerance,
        clamps_exact,
        radially_nonincreasing,
        boundary_slope,
        boundary_ratio: ratio,
        data_ok,
    })
}

/// `⟨𝔏ˢ_{Z'} Φ, b⟩ - ⟨𝔏ˢ_Z Φ, b⟩` for `Z ⊆ Z'`.
pub fn z_monotonicity_defect(
    phi: &GridFunction,
    z: &InteractionSet,
    zprime: &InteractionSet,
    bump: &GridFunction,
    p: &FracParams,
) -> Result<FormValue> {
    if !z.is_subset_of(zprime, &phi.lattice().points()) {
        return Err(Error::Hypothesis("Z is not contained in Z'".into()));
    }
    if bump.values().iter().any(|v| *v < 0.0) {
        return Err(Error::SupportViolation("test bump must be nonnegative".into()));
    }
    let a = pairing(phi, bump, zprime, p)?;
    let b = pairing(phi, bump, z, p)?;
    Ok(FormValue { value: a.value - b.value, error_estimate: a.error_estimate + b.error_estimate })
}
