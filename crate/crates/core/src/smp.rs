//! Numerical checks of the strong maximum principle: supersolution sweeps,
//! reports, a lower-semicontinuity proxy and the interior-minimum example.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};
use crate::families::{plateau, standard_bumps, Bump};
use crate::forms::FormValue;
use crate::grid::GridFunction;
use crate::kernel::{FracParams, QuadratureScheme};
use crate::lattice::Lattice;
use crate::operators::ZOperator;
use crate::spectral::{spectral_1d, synthesize, BoundaryCondition};

/// Nodes of `lat` inside the closed ball `B_radius(center)`.
pub(crate) fn nodes_in_ball(lat: &Lattice, center: &[f64], radius: f64) -> Vec<usize> {
    let n = lat.dim();
    let h = lat.h();
    let shape = lat.shape();
    let mut lo_idx = vec![0usize; n];
    let mut hi_idx = vec![0usize; n];
    for k in 0..n {
        let a = ((center[k] - radius - lat.lo()[k]) / h).floor().max(0.0) as usize;
        let b = (((center[k] + radius - lat.lo()[k]) / h).ceil().max(0.0) as usize).min(shape[k] - 1);
        lo_idx[k] = a.min(shape[k] - 1);
        hi_idx[k] = b;
    }
    let mut out = Vec::new();
    let mut idx = lo_idx.clone();
    let r2 = radius * radius;
    loop {
        let i = lat.flat(&idx);
        let x = lat.point(i);
        if crate::domain::dist2(&x, center) <= r2 {
            out.push(i);
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] <= hi_idx[k] {
                break;
            }
            idx[k] = lo_idx[k];
            k += 1;
        }
        if k == n {
            break;
        }
    }
    out.sort_unstable();
    out
}

/// `⟨𝔏ˢ_Z u, b⟩` for every bump, from one operator evaluation on the union
/// of supports per level; the error estimate compares with the coarsened
/// lattice (doubled near-field radius).
pub fn bump_pairings(u: &GridFunction, bumps: &[Bump], z: &InteractionSet, p: &FracParams, q: &QuadratureScheme) -> Result<Vec<FormValue>> {
    let level = |u: &GridFunction, q: &QuadratureScheme| -> Result<Vec<f64>> {
        let lat = u.lattice();
        let supports: Vec<Vec<usize>> = bumps.par_iter().map(|b| nodes_in_ball(lat, &b.center, b.width)).collect();
        let mut slot = vec![usize::MAX; lat.len()];
        let mut nodes = Vec::new();
        for s in &supports {
            for i in s {
                if slot[*i] == usize::MAX {
                    slot[*i] = nodes.len();
                    nodes.push(*i);
                }
            }
        }
        let op = ZOperator::new(lat, z, p, q)?;
        let lu = op.apply_nodes(u, &nodes);
        let hn = lat.cell_volume();
        Ok(bumps
            .par_iter()
            .zip(&supports)
            .map(|(b, s)| s.iter().map(|i| b.eval(&lat.point(*i)) * lu[slot[*i]]).sum::<f64>() * hn)
            .collect())
    };
    let fine = level(u, q)?;
    let coarse = level(&u.coarsen()?, &QuadratureScheme { delta: 2.0 * q.delta, ..*q })?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| FormValue { value: *f, error_estimate: (f - c).abs() }).collect())
}

/// Outcome of a supersolution sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionCheck {
    /// Minimum pairing over the bump family.
    pub min_residual: f64,
    /// Largest error estimate over the family.
    pub tolerance: f64,
    /// Every pairing is at least minus its own error estimate.
    pub passed: bool,
}

fn check_bumps(bumps: &[Bump], omega: &DomainSpec) -> Result<()> {
    for b in bumps {
        if !(b.height >= 0.0) || !(b.width > 0.0) || omega.signed_distance(&b.center) > -b.width {
            return Err(Error::SupportViolation(format!("bump at {:?} is not a nonnegative test function in Omega", b.center)));
        }
    }
    Ok(())
}

fn sweep(pairings: &[FormValue], scale: f64) -> SupersolutionCheck {
    let slack = 1e-12 * scale;
    SupersolutionCheck {
        min_residual: pairings.iter().map(|v| v.value).fold(f64::INFINITY, f64::min),
        tolerance: pairings.iter().map(|v| v.error_estimate).fold(0.0, f64::max),
        passed: pairings.iter().all(|v| v.value >= -v.error_estimate - slack),
    }
}

fn magnitude(u: &GridFunction) -> f64 {
    u.values().iter().fold(u.farfield().infimum().abs(), |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
}

/// Tests `𝔏ˢ_Z u ≥ 0` against every bump.
pub fn verify_supersolution(
    u: &GridFunction,
    omega: &DomainSpec,
    z: &InteractionSet,
    p: &FracParams,
    q: &QuadratureScheme,
    bumps: &[Bump],
) -> Result<SupersolutionCheck> {
    check_bumps(bumps, omega)?;
    if bumps.is_empty() {
        return Err(invalid("empty bump family"));
    }
    crate::forms::weighted_l1_norm(u, p)?;
    let pairings = bump_pairings(u, bumps, z, p, q)?;
    Ok(sweep(&pairings, magnitude(u)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InfLocation {
    Point(Vec<f64>),
    Named(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    HypothesisFailed,
    ViolationFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPReport {
    pub supersolution_min_residual: f64,
    pub global_inf: f64,
    pub inf_location: InfLocation,
    pub interior_strict_margin: f64,
    pub lsc_violations: usize,
    pub verdict: Verdict,
}

/// Maximum-principle report with `K` given as a set of lattice nodes.
fn report_on_nodes(
    u: &GridFunction,
    omega: &DomainSpec,
    z: &InteractionSet,
    k_nodes: &[usize],
    p: &FracParams,
    q: &QuadratureScheme,
) -> Result<MPReport> {
    let lat = u.lattice();
    let bumps = standard_bumps(lat, omega);
    let check = verify_supersolution(u, omega, z, p, q, &bumps)?;

    let union = z.union_domain();
    let (mut inf, mut loc) = (f64::INFINITY, InfLocation::Named("far_field".into()));
    let mut sup = f64::NEG_INFINITY;
    for (i, v) in u.values().iter().enumerate() {
        let x = lat.point(i);
        if union.contains(&x)? {
            sup = sup.max(*v);
            if *v < inf {
                inf = *v;
                loc = InfLocation::Point(x);
            }
        }
    }
    if union.contains_infinity() {
        let far = u.farfield().infimum();
        sup = sup.max(far);
        if far < inf {
            inf = far;
            loc = InfLocation::Named("far_field".into());
        }
    }
    let min_k = k_nodes.iter().map(|i| u.values()[*i]).fold(f64::INFINITY, f64::min);
    let margin = min_k - inf;

    // constancy is judged on U1 ∪ U2 only
    let nonconstant = sup - inf > 1e-12 * magnitude(u);
    let verdict = if !nonconstant || !check.passed {
        Verdict::HypothesisFailed
    } else if margin <= 0.0 {
        Verdict::ViolationFound
    } else {
        Verdict::Consistent
    };
    Ok(MPReport {
        supersolution_min_residual: check.min_residual,
        global_inf: inf,
        inf_location: loc,
        interior_strict_margin: margin,
        lsc_violations: lsc_scan(u, omega),
        verdict,
    })
}

/// Checks the conclusion `u > inf_{U1∪U2} u` on a compact `K ⋐ Omega`.
pub fn smp_report(
    u: &GridFunction,
    omega: &DomainSpec,
    z: &InteractionSet,
    compact_k: &DomainSpec,
    p: &FracParams,
    q: &QuadratureScheme,
) -> Result<MPReport> {
    if compact_k.bounding_box().is_none() {
        return Err(Error::Hypothesis("K must be bounded".into()));
    }
    let lat = u.lattice();
    let mut k_nodes = Vec::new();
    for i in 0..lat.len() {
        let x = lat.point(i);
        if compact_k.contains(&x)? {
            if omega.signed_distance(&x) >= 0.0 {
                return Err(Error::Hypothesis(format!("K is not compactly contained in Omega near {x:?}")));
            }
            k_nodes.push(i);
        }
    }
    if k_nodes.is_empty() {
        return Err(Error::Hypothesis("K contains no lattice node".into()));
    }
    report_on_nodes(u, omega, z, &k_nodes, p, q)
}

/// Count of nodes in `omega` that sit above a neighbour in a way no smooth
/// profile explains: along some step `e` with `u(x) > u(x+e)`, the second
/// difference through `x, x+e, x+2e` exceeds twice the next second
/// difference plus twice the third difference beyond it, plus
/// `1e-6 (max u - min u)`.
pub fn lsc_scan(u: &GridFunction, omega: &DomainSpec) -> usize {
    let lat = u.lattice();
    let n = lat.dim();
    let v = u.values();
    let tol = 1e-6 * (u.max() - u.min());
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let d = (c % 3) as isize - 1;
                    c /= 3;
                    d
                })
                .collect()
        })
        .filter(|o: &Vec<isize>| o.iter().any(|d| *d != 0))
        .collect();
    (0..lat.len())
        .into_par_iter()
        .filter(|&i| {
            if omega.signed_distance(&lat.point(i)) >= 0.0 {
                return false;
            }
            offsets.iter().any(|e| {
                let mut w = [v[i]; 5];
                for (k, slot) in w.iter_mut().enumerate().skip(1) {
                    let off: Vec<isize> = e.iter().map(|d| d * k as isize).collect();
                    match lat.offset(i, &off) {
                        Some(j) => *slot = v[j],
                        None => return false,
                    }
                }
                let d2 = |k: usize| w[k] - 2.0 * w[k + 1] + w[k + 2];
                let third = d2(1) - d2(2);
                w[0] > w[1] && d2(0) > 2.0 * d2(1).abs() + 2.0 * third.abs() + tol
            })
        })
        .count()
}

/// Bounded-domain example with an interior minimum over `Omega` that is
/// still strictly above the infimum over the whole space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub epsilon: f64,
    #[serde(skip)]
    pub f: Option<GridFunction>,
    /// Dirichlet-preset report (`K` = lattice nodes in `Omega`).
    pub report: MPReport,
    pub semirestricted_report: MPReport,
    /// Minimizer of `f` over the nodes of `Omega`.
    pub argmin: Vec<f64>,
    pub min_over_omega: f64,
    pub inf_over_space: f64,
    /// Minimum of the pointwise operator over the interior test nodes.
    pub min_interior_residual: f64,
}

/// Plateau `u ≡ 1` on `Omega` minus `ε` times an interior bump `ψ`, with `ε`
/// found by bisection so that `(-Δ)^s (u - εψ) ≥ 0` at every interior node at
/// distance `≥ 2h` from the boundary, then halved.
pub fn build_counterexample(omega: &DomainSpec, p: &FracParams, q: &QuadratureScheme) -> Result<Counterexample> {
    q.validate()?;
    let (lo, hi) = omega.bounding_box().ok_or(Error::Unbounded)?;
    let n = p.n;
    if lo.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lo.len() });
    }
    let h = 0.5 * q.delta;
    let half = (0..n).map(|k| 0.5 * (hi[k] - lo[k])).fold(f64::INFINITY, f64::min);
    let ramp = 0.5 * half;
    let pad = ramp + 4.0 * h;
    let blo: Vec<f64> = lo.iter().map(|v| v - pad).collect();
    let bhi: Vec<f64> = hi.iter().map(|v| v + pad).collect();
    let lat = Lattice::from_box(&blo, &bhi, h)?;
    let lat = if lat.shape().iter().all(|m| m % 2 == 1) {
        lat
    } else {
        let shape: Vec<usize> = lat.shape().iter().map(|m| m | 1).collect();
        Lattice::new(lat.lo().to_vec(), h, shape)?
    };

    let u = plateau(&lat, omega, ramp)?;
    let (deep, depth) = (0..lat.len())
        .map(|i| (i, -omega.signed_distance(&lat.point(i))))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if depth < 4.0 * h {
        return Err(Error::SearchFailed("domain too thin for the lattice".into()));
    }
    let bump = Bump::new(lat.point(deep), 0.5 * depth);
    let psi = bump.sample(&lat)?;

    let full = InteractionSet::dirichlet(DomainSpec::full_space(n));
    let op = ZOperator::new(&lat, &full, p, q)?;
    let tests: Vec<usize> = (0..lat.len()).filter(|i| omega.signed_distance(&lat.point(*i)) <= -2.0 * h).collect();
    let lu = op.apply_nodes(&u, &tests);
    let lpsi = op.apply_nodes(&psi, &tests);
    let feasible = |eps: f64| lu.iter().zip(&lpsi).all(|(a, b)| a - eps * b >= 0.0);
    if !feasible(0.0) {
        return Err(Error::SearchFailed("plateau is not a supersolution on this lattice".into()));
    }
    let (mut a, mut b) = (0.0, 1.0);
    if feasible(1.0) {
        a = 1.0;
    } else {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if feasible(m) {
                a = m;
            } else {
                b = m;
            }
        }
    }
    let epsilon = 0.5 * a;
    if !(epsilon > 0.0) {
        return Err(Error::SearchFailed("no positive epsilon keeps the residuals nonnegative".into()));
    }
    let f = u.axpby(1.0, &psi, -epsilon)?;
    let min_interior_residual = lu.iter().zip(&lpsi).map(|(a, b)| a - epsilon * b).fold(f64::INFINITY, f64::min);

    let inside: Vec<usize> = (0..lat.len()).filter(|i| omega.signed_distance(&lat.point(*i)) < 0.0).collect();
    let (arg, min_over_omega) = inside
        .iter()
        .map(|i| (*i, f.values()[*i]))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let report = report_on_nodes(&f, omega, &InteractionSet::dirichlet(omega.clone()), &inside, p, q)?;
    let semirestricted_report = report_on_nodes(&f, omega, &InteractionSet::semirestricted(omega.clone()), &inside, p, q)?;
    Ok(Counterexample {
        epsilon,
        argmin: lat.point(arg),
        min_over_omega,
        inf_over_space: report.global_inf,
        min_interior_residual,
        report,
        semirestricted_report,
        f: Some(f),
    })
}

/// Result of the spectral maximum-principle check on one coefficient vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMpCheck {
    pub min_u: f64,
    pub min_image: f64,
    pub min_on_k: f64,
    pub is_zero: bool,
    pub holds: bool,
}

/// For `u = Σ a_k sin(kπ(x-a)/(b-a))` with nonnegative `u` and nonnegative
/// spectral Dirichlet power, checks that `u ≡ 0` or `u > 0` on the nodes of
/// `[k_lo, k_hi]`.
pub fn spectral_mp_check(lat: &Lattice, coeffs: &[f64], s: f64, k_lo: f64, k_hi: f64) -> Result<SpectralMpCheck> {
    let bc = BoundaryCondition::Dirichlet;
    let u = synthesize(lat, bc, coeffs)?;
    let modes = crate::spectral::nyquist_limit(lat, bc);
    let image = spectral_1d(&u, bc, s, modes)?;
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let min_u = u.min();
    let min_image = image.min();
    let min_on_k = (0..lat.len())
        .filter(|i| {
            let x = lat.point(*i)[0];
            x >= k_lo && x <= k_hi
        })
        .map(|i| u.values()[i])
        .fold(f64::INFINITY, f64::min);
    let is_zero = scale == 0.0;
    let hyp = min_u >= -tol && min_image >= -tol * 1e3;
    Ok(SpectralMpCheck { min_u, min_image, min_on_k, is_zero, holds: !hyp || is_zero || min_on_k > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FarField;

    fn line(a: f64, b: f64, h: f64) -> Lattice {
        Lattice::from_box(&[a], &[b], h).unwrap()
    }

    #[test]
    fn constants_are_flagged() {
        let p = FracParams::new(1, 0.5).unwrap();
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let h = 1.0 / 32.0;
        let u = GridFunction::from_fn(line(-2.0, 2.0, h), FarField::Constant { c: 1.0 }, |_| 1.0).unwrap();
        let k = DomainSpec::interval(-0.5, 0.5).unwrap();
        let r = smp_report(&u, &om, &InteractionSet::dirichlet(om.clone()), &k, &p, &QuadratureScheme::for_spacing(h)).unwrap();
        assert_eq!(r.verdict, Verdict::HypothesisFailed);
        assert!(r.supersolution_min_residual.abs() < 1e-10);
    }

    #[test]
    fn constant_on_the_interaction_domain_is_not_a_violation() {
        let p = FracParams::new(1, 0.5).unwrap();
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let h = 1.0 / 32.0;
        let lat = line(-2.0, 2.0, h);
        let u = plateau(&lat, &DomainSpec::interval(-1.1, 1.1).unwrap(), 0.5).unwrap();
        let k = DomainSpec::interval(-0.5, 0.5).unwrap();
        let q = QuadratureScheme::for_spacing(h);
        let r = smp_report(&u, &om, &InteractionSet::restricted(om.clone()), &k, &p, &q).unwrap();
        assert_eq!(r.verdict, Verdict::HypothesisFailed);
        let r = smp_report(&u, &om, &InteractionSet::dirichlet(om.clone()), &k, &p, &q).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
    }

    #[test]
    fn lsc_proxy() {
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let lat = line(-1.5, 1.5, 1.0 / 16.0);
        let smooth = GridFunction::from_fn(lat.clone(), FarField::CompactSupport, |x| (3.0 * x[0]).sin() + x[0] * x[0]).unwrap();
        assert_eq!(lsc_scan(&smooth, &om), 0);
        let mut v = smooth.values().to_vec();
        v[lat.node_index(&[0.25]).unwrap()] += 1.0;
        let spiked = GridFunction::new(lat.clone(), v, FarField::CompactSupport).unwrap();
        assert!(lsc_scan(&spiked, &om) >= 1);
        let step = GridFunction::from_fn(lat.clone(), FarField::CompactSupport, |x| if x[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(lsc_scan(&step, &om), 1);
    }

    #[test]
    fn nodes_in_ball_matches_filter() {
        let lat = Lattice::from_box(&[-1.0, -1.0], &[1.0, 1.0], 0.125).unwrap();
        let got = nodes_in_ball(&lat, &[0.1, -0.3], 0.4);
        let want: Vec<usize> =
            (0..lat.len()).filter(|i| crate::domain::dist2(&lat.point(*i), &[0.1, -0.3]) <= 0.16).collect();
        assert_eq!(got, want);
    }
}
