//! Localized Sobolev and Caccioppoli gaps and the De Giorgi sup bound for
//! subsolutions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};
use crate::families::{member_rng, plateau, standard_bumps, Bump};
use crate::forms::{energy, pairing, psi_form, relative_tail, weighted_l1_norm, FormValue};
use crate::grid::{FarField, GridFunction, Sign};
pub use crate::kernel::bar_p_exponent;
use crate::kernel::{FracParams, QuadratureScheme};
use crate::lattice::Lattice;
use crate::operators::{complement_regional_pairing, solve_collocation};
use crate::smp::{nodes_in_ball, verify_supersolution};

/// Default number of De Giorgi steps.
pub const DEFAULT_JMAX: usize = 20;

/// `(r_j, k_j, r̃_j, k̃_j)` at step `j` for target level `tilde_k`.
pub fn schedule(j: usize, tilde_k: f64) -> (f64, f64, f64, f64) {
    let t = 0.5f64.powi(j as i32);
    let (r, r_next) = (1.0 + t, 1.0 + 0.5 * t);
    let (k, k_next) = (tilde_k * (1.0 - t), tilde_k * (1.0 - 0.5 * t));
    (r, k, 0.5 * (r + r_next), 0.5 * (k + k_next))
}

fn ball_mass(u: &GridFunction, x0: &[f64], radius: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let lat = u.lattice();
    let ball = DomainSpec::ball(x0.to_vec(), radius)?;
    let occ = lat.occupancy(&ball);
    Ok(occ.iter().zip(u.values()).filter(|(o, _)| **o > 0.0).map(|(o, v)| o * f(*v)).sum::<f64>() * lat.cell_volume())
}

fn check_covers(lat: &Lattice, x0: &[f64], radius: f64) -> Result<()> {
    if x0.len() != lat.dim() {
        return Err(Error::DimensionMismatch { expected: lat.dim(), got: x0.len() });
    }
    let lo: Vec<f64> = x0.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = x0.iter().map(|c| c + radius).collect();
    if !lat.in_cells(&lo) || !lat.in_cells(&hi) {
        return Err(Error::LatticeMismatch(format!("lattice does not cover the ball of radius {radius}")));
    }
    Ok(())
}

/// `α_j` with the radii scaled by `r`: `α_j^2 = r^{-n} ∫_{B_{r r_j}(x0)} ((u-k_j)^+)^2`.
fn scaled_level_norms(u: &GridFunction, x0: &[f64], r: f64, tilde_k: f64, jmax: usize) -> Result<Vec<f64>> {
    check_covers(u.lattice(), x0, 2.0 * r)?;
    let scale = r.powi(-(u.dim() as i32));
    let mut alpha: Vec<f64> = (0..=jmax)
        .into_par_iter()
        .map(|j| {
            let (rj, kj, _, _) = schedule(j, tilde_k);
            ball_mass(u, x0, r * rj, |v| (v - kj).max(0.0).powi(2)).map(|m| (scale * m).sqrt())
        })
        .collect::<Result<_>>()?;
    if let Some(stop) = alpha.iter().position(|a| *a < 1e-14 * tilde_k) {
        alpha.truncate(stop + 1);
    }
    Ok(alpha)
}

/// `α_j = ‖(u - k_j)^+‖_{L²(B_{r_j}(x0))}` for `j = 0..=jmax`; the list
/// stops early once `α_j < 1e-14 k̃`.
pub fn level_norms(u: &GridFunction, x0: &[f64], tilde_k: f64, jmax: usize) -> Result<Vec<f64>> {
    if !(tilde_k > 0.0) {
        return Err(invalid("level k̃ must be positive"));
    }
    scaled_level_norms(u, x0, 1.0, tilde_k, jmax)
}

/// `w̃_j ≤ w_j` and `w̃_j ≤ 2^{j+2} w_j^2 / k̃` at every value.
pub fn tww_chain_holds(values: &[f64], tilde_k: f64, j: usize) -> bool {
    let (_, kj, _, tkj) = schedule(j, tilde_k);
    let factor = 2f64.powi(j as i32 + 2) / tilde_k;
    values.iter().all(|v| {
        let (w, wt) = ((v - kj).max(0.0), (v - tkj).max(0.0));
        wt <= w && wt <= factor * w * w
    })
}

/// `w_{j+1}^2 (k̃/2^{j+2})^{p̄-2} ≤ w̃_j^{p̄}` at every value.
pub fn tww0_holds(values: &[f64], tilde_k: f64, j: usize, bar_p: f64) -> bool {
    let (_, _, _, tkj) = schedule(j, tilde_k);
    let (_, k_next, _, _) = schedule(j + 1, tilde_k);
    let gap = (tilde_k / 2f64.powi(j as i32 + 2)).powf(bar_p - 2.0);
    values.iter().all(|v| {
        let (w1, wt) = ((v - k_next).max(0.0), (v - tkj).max(0.0));
        w1 * w1 * gap <= wt.powf(bar_p)
    })
}

/// Right side minus left side of the Caccioppoli inequality:
/// `⟨𝔏ˢ_Z w, φ²w⁺⟩ + (C/2)∬_{G×G} w⁺w⁺Ψ_φ - ∫_G w⁺φ² (-Δ^N_{(U1∪U2)\G})ˢ_R w⁺ - ℰ_s(φw⁺; G×G)`.
///
/// The regional term is twice the complement pairing of `w⁺` with `φ²w⁺`.
/// `φ` must vanish within `h(1 + √n/2)` of `∂G`, so that every cell touching
/// its support lies inside `G`. `error_estimate` sums the four estimates.
pub fn caccioppoli_gap(w: &GridFunction, phi: &GridFunction, g: &DomainSpec, z: &InteractionSet, p: &FracParams) -> Result<FormValue> {
    let lat = w.lattice();
    if !lat.same_as(phi.lattice()) {
        return Err(Error::LatticeMismatch("w and φ live on different lattices".into()));
    }
    phi.check_support(g, lat.h() * (1.0 + 0.5 * (p.n as f64).sqrt()))?;
    weighted_l1_norm(w, p)?;
    let wp = w.truncate(Sign::Plus);
    let phi2 = phi.product(phi)?;
    let test = phi2.product(&wp)?;
    let lhs = energy(&phi.product(&wp)?, g, g, None, p)?;
    let b = pairing(w, &test, z, p)?;
    let psi = psi_form(&wp, &wp, phi, g, g, p)?;
    let reg = complement_regional_pairing(&wp, &test, g, z, p)?;
    Ok(FormValue {
        value: b.value + psi.value - 2.0 * reg.value - lhs.value,
        error_estimate: b.error_estimate + psi.error_estimate + 2.0 * reg.error_estimate + lhs.error_estimate,
    })
}

/// `ℰ_s(u;B_r×B_r) + (r-ρ)^{-2s}∫_{B_r}u² - c_sob (∫_{B_ρ}|u|^{p̄})^{2/p̄}` with
/// balls centred at the origin.
pub fn localized_sobolev_gap(u: &GridFunction, r: f64, rho: f64, p: &FracParams, c_sob: f64) -> Result<f64> {
    let (e, l2, lp) = sobolev_terms(u, r, rho, p)?;
    Ok(e + l2 - c_sob * lp)
}

fn sobolev_terms(u: &GridFunction, r: f64, rho: f64, p: &FracParams) -> Result<(f64, f64, f64)> {
    if !(1.0 < rho && rho < r && r <= 2.0) {
        return Err(invalid(format!("need 1 < rho < r <= 2, got rho = {rho}, r = {r}")));
    }
    if u.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: u.dim() });
    }
    let origin = vec![0.0; p.n];
    let inner = DomainSpec::ball(origin.clone(), rho)?;
    u.check_support(&inner, 0.0)?;
    check_covers(u.lattice(), &origin, r)?;
    let outer = DomainSpec::ball(origin.clone(), r)?;
    let bar_p = bar_p_exponent(p.n, p.s)?;
    let e = energy(u, &outer, &outer, None, p)?.value;
    let l2 = (r - rho).powf(-2.0 * p.s) * ball_mass(u, &origin, r, |v| v * v)?;
    let lp = ball_mass(u, &origin, rho, |v| v.abs().powf(bar_p))?.powf(2.0 / bar_p);
    Ok((e, l2, lp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiTrace {
    pub params: FracParams,
    pub center: Vec<f64>,
    pub radius: f64,
    pub tilde_k: f64,
    pub tail: f64,
    /// `r^{-n} ∫_{B_{2r}} (u⁺)²`.
    pub mass: f64,
    pub alpha: Vec<f64>,
    pub radii: Vec<f64>,
    pub radii_tilde: Vec<f64>,
    pub levels: Vec<f64>,
    pub levels_tilde: Vec<f64>,
    pub c_hat: f64,
    pub bound: f64,
    pub induction_ok: Vec<bool>,
    pub tww_ok: bool,
    pub tww0_ok: bool,
    pub sup_on_ball: f64,
    pub sup_ok: bool,
}

/// Everything in the bound that does not depend on `ĉ`.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    tail: f64,
    mass: f64,
    sup: f64,
}

pub(crate) fn prepare(
    u: &GridFunction,
    x0: &[f64],
    r: f64,
    z: &InteractionSet,
    p: &FracParams,
    q: &QuadratureScheme,
) -> Result<Prepared> {
    if u.dim() != p.n || x0.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: x0.len() });
    }
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    if z.omega().signed_distance(x0) > -2.0 * r + 1e-12 {
        return Err(Error::Hypothesis("B_2r(x0) is not contained in Omega".into()));
    }
    let lat = u.lattice();
    check_covers(lat, x0, 2.0 * r)?;
    weighted_l1_norm(u, p)?;
    let ball = DomainSpec::ball(x0.to_vec(), 2.0 * r)?;
    let bumps: Vec<Bump> = standard_bumps(lat, &ball);
    let check = verify_supersolution(&u.scale(-1.0), &ball, z, p, q, &bumps)?;
    if !check.passed {
        return Err(Error::Hypothesis(format!("not a subsolution: pairing {:e} below tolerance {:e}", -check.min_residual, check.tolerance)));
    }
    let tail = relative_tail(u, x0, r, z, p)?;
    let mass = r.powi(-(p.n as i32)) * ball_mass(u, x0, 2.0 * r, |v| v.max(0.0).powi(2))?;
    let sup = nodes_in_ball(lat, x0, r).iter().map(|i| u.values()[*i]).fold(f64::NEG_INFINITY, f64::max);
    Ok(Prepared { tail, mass, sup })
}

pub(crate) fn trace_from(u: &GridFunction, x0: &[f64], r: f64, p: &FracParams, c_hat: f64, pre: &Prepared, jmax: usize) -> Result<DeGiorgiTrace> {
    let tilde_k = pre.tail + (c_hat * pre.mass).sqrt();
    let bar_p = bar_p_exponent(p.n, p.s)?;
    let beta = 0.5 * bar_p - 1.0;
    let eta = 2f64.powf(0.25 * bar_p * (p.n as f64 + 2.0 * p.s + 1.0) + beta);
    let alpha = if tilde_k > 0.0 { scaled_level_norms(u, x0, r, tilde_k, jmax)? } else { vec![0.0] };
    let steps = alpha.len();
    let sched: Vec<_> = (0..steps).map(|j| schedule(j, tilde_k)).collect();
    let induction_ok = alpha
        .iter()
        .enumerate()
        .map(|(j, a)| tilde_k == 0.0 || c_hat.sqrt() * a / tilde_k <= eta.powf(-(j as f64) / beta) * (1.0 + 1e-12))
        .collect();
    let vals = u.values();
    let (tww_ok, tww0_ok) = if tilde_k > 0.0 {
        ((0..steps).all(|j| tww_chain_holds(vals, tilde_k, j)), (0..steps).all(|j| tww0_holds(vals, tilde_k, j, bar_p)))
    } else {
        (true, true)
    };
    let scale = pre.sup.abs().max(tilde_k).max(f64::MIN_POSITIVE);
    Ok(DeGiorgiTrace {
        params: *p,
        center: x0.to_vec(),
        radius: r,
        tilde_k,
        tail: pre.tail,
        mass: pre.mass,
        alpha,
        radii: sched.iter().map(|s| s.0).collect(),
        radii_tilde: sched.iter().map(|s| s.2).collect(),
        levels: sched.iter().map(|s| s.1).collect(),
        levels_tilde: sched.iter().map(|s| s.3).collect(),
        c_hat,
        bound: tilde_k,
        induction_ok,
        tww_ok,
        tww0_ok,
        sup_on_ball: pre.sup,
        sup_ok: pre.sup <= tilde_k + 1e-12 * scale,
    })
}

/// De Giorgi bound `sup_{B_r(x0)} u ≤ Tail_Z(u⁺;x0,r) + (ĉ r^{-n}∫_{B_2r}(u⁺)²)^{1/2}`
/// for a subsolution `u`, with the trace of the iteration (radii scaled by `r`).
pub fn degiorgi_bound(
    u: &GridFunction,
    x0: &[f64],
    r: f64,
    z: &InteractionSet,
    p: &FracParams,
    q: &QuadratureScheme,
    c_hat: f64,
) -> Result<DeGiorgiTrace> {
    if !(c_hat > 0.0) {
        return Err(invalid("c_hat must be positive"));
    }
    let pre = prepare(u, x0, r, z, p, q)?;
    trace_from(u, x0, r, p, c_hat, &pre, DEFAULT_JMAX)
}

/// A subsolution together with the ball it is tested on.
#[derive(Clone, Debug)]
pub struct Subsolution {
    pub u: GridFunction,
    pub center: Vec<f64>,
    pub radius: f64,
    pub z: InteractionSet,
}

/// One-dimensional subsolutions on `Ω = (-2.5, 2.5)` (Dirichlet), lattice
/// `[-4, 4]` with `h = 1/32`: discrete s-harmonic functions with random
/// exterior data and constant far field, minus a random multiple of a
/// plateau over `Ω`.
pub fn subsolution_family(p: &FracParams, seed: u64, count: usize) -> Result<Vec<Subsolution>> {
    if p.n != 1 {
        return Err(invalid("the built-in subsolution family is one-dimensional"));
    }
    let h = 1.0 / 32.0;
    let lat = Lattice::from_box(&[-4.0], &[4.0], h)?;
    let omega = DomainSpec::interval(-2.5, 2.5)?;
    let z = InteractionSet::dirichlet(omega.clone());
    let q = QuadratureScheme::for_spacing(h);
    let unknown: Vec<bool> = lat.points().iter().map(|x| omega.signed_distance(x) < 0.0).collect();
    let rhs = vec![0.0; lat.len()];
    let lift = plateau(&lat, &omega, 0.75)?;
    (0..count)
        .map(|k| {
            let mut rng = member_rng(seed, k as u64);
            let mut bumps = Vec::new();
            for side in [-1.0, 1.0] {
                let width = rng.random_range(0.25..0.5);
                let c = rng.random_range(2.5 + width + h..3.9 - width);
                bumps.push(Bump { center: vec![side * c], width, height: rng.random_range(-1.0..1.5) });
            }
            let far = if rng.random_bool(0.5) { rng.random_range(-0.5..0.5) } else { 0.0 };
            let data = GridFunction::from_fn(lat.clone(), FarField::Constant { c: far }, |x| {
                far + bumps.iter().map(|b| b.eval(x)).sum::<f64>()
            })?;
            let harmonic = solve_collocation(&data, &unknown, &rhs, &z, p, &q)?;
            let lambda = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 };
            let u = harmonic.axpby(1.0, &lift, -lambda)?;
            let center = vec![rng.random_range(-0.25..0.25)];
            let radius = rng.random_range(0.6..1.1);
            Ok(Subsolution { u, center, radius, z: z.clone() })
        })
        .collect()
}

/// Random bumps for the localized Sobolev calibration: `(u, r, ρ)` with
/// `u` supported in `B_ρ(0)`, `1 < ρ < r ≤ 2`.
pub fn sobolev_family(p: &FracParams, seed: u64, count: usize) -> Result<Vec<(GridFunction, f64, f64)>> {
    let h = 1.0 / 32.0;
    let lo = vec![-2.5; p.n];
    let hi = vec![2.5; p.n];
    let lat = Lattice::from_box(&lo, &hi, h)?;
    let origin = vec![0.0; p.n];
    (0..count)
        .map(|k| {
            let mut rng = member_rng(seed, k as u64);
            let r = rng.random_range(1.1..2.0);
            let rho = rng.random_range(1.02..r - 0.05);
            let u = crate::families::random_smooth(&lat, &origin, rho - h, &mut rng)?;
            Ok((u, r, rho))
        })
        .collect()
}

/// Largest `c_sob` keeping the localized Sobolev gap nonnegative over the family.
pub fn calibrate_c_sob(p: &FracParams, family: &[(GridFunction, f64, f64)]) -> Result<f64> {
    let ratios: Vec<f64> = family
        .par_iter()
        .map(|(u, r, rho)| {
            let (e, l2, lp) = sobolev_terms(u, *r, *rho, p)?;
            Ok(if lp > 0.0 { (e + l2) / lp } else { f64::INFINITY })
        })
        .collect::<Result<_>>()?;
    let min = ratios.into_iter().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::SearchFailed("Sobolev family is identically zero".into()));
    }
    Ok(min * (1.0 - 1e-6))
}

/// Grid of candidate `ĉ` values, `1e-6 .. 1e6` with 16 points per decade.
fn c_hat_grid() -> Vec<f64> {
    (0..=192).map(|k| 10f64.powf(-6.0 + k as f64 / 16.0)).collect()
}

/// Smallest `ĉ` on the grid such that every larger grid value gives the sup
/// bound and all induction flags on every member, times two.
pub fn calibrate_c_hat(p: &FracParams, family: &[Subsolution]) -> Result<f64> {
    let grid = c_hat_grid();
    let per_member: Vec<f64> = family
        .par_iter()
        .map(|m| {
            let q = QuadratureScheme::for_spacing(m.u.lattice().h());
            let pre = prepare(&m.u, &m.center, m.radius, &m.z, p, &q)?;
            let mut needed = grid[0];
            for c in grid.iter().rev() {
                let t = trace_from(&m.u, &m.center, m.radius, p, *c, &pre, DEFAULT_JMAX)?;
                if !(t.sup_ok && t.induction_ok.iter().all(|b| *b)) {
                    needed = *c * 10f64.powf(1.0 / 16.0);
                    break;
                }
            }
            Ok(needed)
        })
        .collect::<Result<_>>()?;
    let worst = per_member.into_iter().fold(0.0, f64::max);
    if worst > grid[grid.len() - 1] {
        return Err(Error::SearchFailed("no ĉ on the calibration grid satisfies the family".into()));
    }
    Ok((2.0 * worst).max(1e-6))
}

/// Case `k` of the randomized Caccioppoli sweep: `w` is a random smooth
/// function plus a constant far field, `φ` a bump whose support keeps the
/// margin required by [`caccioppoli_gap`].
pub fn caccioppoli_case(lat: &Lattice, g: &DomainSpec, seed: u64, k: usize) -> Result<(GridFunction, GridFunction)> {
    let h = lat.h();
    let n = lat.dim();
    let margin = h * (1.0 + 0.5 * (n as f64).sqrt());
    let inner: Vec<usize> = (0..lat.len()).filter(|i| g.signed_distance(&lat.point(*i)) < -(margin + 3.0 * h)).collect();
    if inner.is_empty() {
        return Err(invalid("G is too small for the lattice spacing"));
    }
    let mut rng = member_rng(seed, k as u64);
    let lo = lat.lo();
    let hi = lat.hi();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).fold(f64::INFINITY, f64::min);
    let c = rng.random_range(-0.3..0.3);
    let bumps = crate::families::random_smooth(lat, &center, 0.7 * half, &mut rng)?;
    let w = GridFunction::from_fn(lat.clone(), FarField::Constant { c }, |_| c)?.axpby(1.0, &bumps, 1.0)?;
    let x = lat.point(inner[rng.random_range(0..inner.len())]);
    let reach = -g.signed_distance(&x) - margin;
    let width = rng.random_range(0.3..1.0) * reach;
    let phi = Bump::new(x, width).sample(lat)?;
    Ok((w, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        assert_eq!(schedule(0, 1.0), (2.0, 0.0, 1.75, 0.25));
        assert_eq!(schedule(1, 1.0), (1.5, 0.5, 1.375, 0.625));
        for j in 0..30 {
            let (r, k, rt, kt) = schedule(j, 3.0);
            let (r1, k1, _, _) = schedule(j + 1, 3.0);
            assert!(r1 < rt && rt < r && k < kt && kt < k1);
        }
    }

    #[test]
    fn bar_p_values() {
        assert_eq!(bar_p_exponent(1, 0.75).unwrap(), 4.0);
        assert_eq!(bar_p_exponent(1, 0.5).unwrap(), 4.0);
        assert_eq!(bar_p_exponent(3, 0.5).unwrap(), 3.0);
        assert_eq!(bar_p_exponent(2, 0.5).unwrap(), 4.0);
    }

    fn line() -> Lattice {
        Lattice::from_box(&[-3.0], &[3.0], 1.0 / 32.0).unwrap()
    }

    #[test]
    fn level_norms_of_constants() {
        let neg = GridFunction::from_fn(line(), FarField::CompactSupport, |_| -1.0).unwrap();
        assert!(level_norms(&neg, &[0.0], 1.0, 20).unwrap().iter().all(|a| *a == 0.0));
        let half = GridFunction::from_fn(line(), FarField::CompactSupport, |_| 0.5).unwrap();
        let a = level_norms(&half, &[0.0], 1.0, 20).unwrap();
        assert!((a[0] - 0.5 * 4f64.sqrt()).abs() < 1e-12);
        assert_eq!(a.len(), 2);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn alpha_limit_matches_direct_integral() {
        let u = GridFunction::from_fn(line(), FarField::CompactSupport, |x| 1.2 * (-x[0] * x[0]).exp()).unwrap();
        let kt = 1.0;
        let a = level_norms(&u, &[0.0], kt, 20).unwrap();
        let direct = ball_mass(&u, &[0.0], 1.0, |v| (v - kt).max(0.0).powi(2)).unwrap();
        assert!((a[20] * a[20] - direct).abs() < 1e-4 * direct, "{} {direct}", a[20] * a[20]);
    }

    #[test]
    fn tww_chains_hold() {
        let vals: Vec<f64> = (0..2000).map(|i| -1.0 + 3.0 * i as f64 / 1999.0).collect();
        for j in 0..20 {
            assert!(tww_chain_holds(&vals, 1.7, j));
            assert!(tww0_holds(&vals, 1.7, j, 4.0));
            assert!(tww0_holds(&vals, 1.7, j, 3.0));
        }
    }

    #[test]
    fn constant_solution_bound() {
        let p = FracParams::new(1, 0.5).unwrap();
        let c = 0.7;
        let u = GridFunction::from_fn(line(), FarField::Constant { c }, |_| c).unwrap();
        let z = InteractionSet::dirichlet(DomainSpec::interval(-2.5, 2.5).unwrap());
        let q = QuadratureScheme::for_spacing(1.0 / 32.0);
        let t = degiorgi_bound(&u, &[0.0], 1.0, &z, &p, &q, 0.5).unwrap();
        // midpoint quadrature of the tail across the ball boundary
        assert!((t.tail - 2.0 * c).abs() < 1e-3 * c, "{}", t.tail);
        assert!((t.bound - t.tail - c * 2f64.sqrt()).abs() < 1e-3 * c);
        assert!(t.sup_ok && t.tww_ok && t.tww0_ok);
    }

    #[test]
    fn nonpositive_gives_zero_bound() {
        let p = FracParams::new(1, 0.5).unwrap();
        let u = GridFunction::from_fn(line(), FarField::CompactSupport, |x| -(-x[0] * x[0]).exp()).unwrap();
        let z = InteractionSet::dirichlet(DomainSpec::interval(-2.5, 2.5).unwrap());
        let q = QuadratureScheme::for_spacing(1.0 / 32.0);
        // -e^{-x²} is not a subsolution
        assert!(matches!(degiorgi_bound(&u, &[0.0], 1.0, &z, &p, &q, 1.0), Err(Error::Hypothesis(_))));
        let u = GridFunction::from_fn(line(), FarField::Constant { c: -1.0 }, |_| -1.0).unwrap();
        let t = degiorgi_bound(&u, &[0.0], 1.0, &z, &p, &q, 1.0).unwrap();
        assert_eq!(t.bound, 0.0);
        assert!(t.sup_ok);
    }

    #[test]
    fn ball_must_fit() {
        let p = FracParams::new(1, 0.5).unwrap();
        let u = GridFunction::zeros(line());
        let z = InteractionSet::dirichlet(DomainSpec::interval(-1.0, 1.0).unwrap());
        let q = QuadratureScheme::for_spacing(1.0 / 32.0);
        assert!(matches!(degiorgi_bound(&u, &[0.0], 1.0, &z, &p, &q, 1.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn caccioppoli_trivial_cases() {
        let p = FracParams::new(1, 0.5).unwrap();
        let g = DomainSpec::interval(-1.0, 1.0).unwrap();
        let z = InteractionSet::dirichlet(DomainSpec::interval(-1.5, 1.5).unwrap());
        let phi = Bump::new(vec![0.0], 0.8).sample(&line()).unwrap();
        let neg = GridFunction::from_fn(line(), FarField::CompactSupport, |x| -1.0 - x[0] * x[0]).unwrap();
        assert_eq!(caccioppoli_gap(&neg, &phi, &g, &z, &p).unwrap().value, 0.0);
        let one = GridFunction::from_fn(line(), FarField::Constant { c: 1.0 }, |_| 1.0).unwrap();
        let gap = caccioppoli_gap(&one, &phi, &g, &z, &p).unwrap();
        assert!(gap.value >= -gap.error_estimate, "{gap:?}");
    }

    #[test]
    fn sobolev_gap_is_affine_in_constant() {
        let p = FracParams::new(1, 0.5).unwrap();
        let lat = Lattice::from_box(&[-2.5], &[2.5], 1.0 / 32.0).unwrap();
        assert_eq!(localized_sobolev_gap(&GridFunction::zeros(lat.clone()), 1.8, 1.2, &p, 1.0).unwrap(), 0.0);
        let u = Bump::new(vec![0.1], 0.9).sample(&lat).unwrap();
        let a = localized_sobolev_gap(&u, 1.8, 1.2, &p, 1.0).unwrap();
        let b = localized_sobolev_gap(&u, 1.8, 1.2, &p, 0.5).unwrap();
        let (_, _, lp) = sobolev_terms(&u, 1.8, 1.2, &p).unwrap();
        assert!((b - a - 0.5 * lp).abs() < 1e-12 * lp.max(1.0));
        assert!(localized_sobolev_gap(&u, 1.8, 2.0, &p, 1.0).is_err());
    }
}
