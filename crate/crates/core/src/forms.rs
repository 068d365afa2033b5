//! Energy and bilinear forms, pairings, killing measures, tails.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{dist2, norm, DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, Sign};
use crate::kernel::{FracParams, QuadratureScheme};
use crate::lattice::Lattice;
use crate::quadrature::{bits_at_infinity, cell_classes, check_features, exterior_integral, exterior_weighted_l1, ClassBits, RowEngine};
use crate::special::lattice_defect;

/// A quadrature value with the refinement-based error estimate
/// `|value(h) - value(2h)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    pub value: f64,
    pub error_estimate: f64,
}

impl FormValue {
    fn from_levels(fine: f64, coarse: f64) -> Result<Self> {
        if !fine.is_finite() {
            return Err(Error::Divergent("form value is not finite".into()));
        }
        Ok(Self { value: fine, error_estimate: (fine - coarse).abs() })
    }
}

/// `∫ |u(x)| / (1 + |x|^{n+2s}) dx`.
pub fn weighted_l1_norm(u: &GridFunction, p: &FracParams) -> Result<FormValue> {
    check_dim(u, p)?;
    let fine = weighted_l1_value(u, p)?;
    let coarse = weighted_l1_value(&u.coarsen()?, p)?;
    FormValue::from_levels(fine, coarse)
}

fn weighted_l1_value(u: &GridFunction, p: &FracParams) -> Result<f64> {
    let lat = u.lattice();
    let order = p.order();
    let mut x = vec![0.0; lat.dim()];
    let mut acc = 0.0;
    for (i, v) in u.values().iter().enumerate() {
        lat.point_into(i, &mut x);
        acc += v.abs() / (1.0 + norm(&x).powf(order));
    }
    acc *= lat.cell_volume();
    let terms = u.farfield().terms();
    if !terms.is_empty() {
        let h = lat.h();
        let lo: Vec<f64> = lat.lo().iter().map(|v| v - 0.5 * h).collect();
        let hi: Vec<f64> = lat.hi().iter().map(|v| v + 0.5 * h).collect();
        for (c, q) in terms {
            acc += c.abs() * exterior_weighted_l1(&lo, &hi, p.s, q);
        }
    }
    Ok(acc)
}

fn check_dim(u: &GridFunction, p: &FracParams) -> Result<()> {
    if u.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: u.dim() });
    }
    Ok(())
}

/// `ℰ_s(u; (A×B) ∩ Z) = (C/2) ∬ (u(x)-u(y))^2 K`.
pub fn energy(u: &GridFunction, region_a: &DomainSpec, region_b: &DomainSpec, z: Option<&InteractionSet>, p: &FracParams) -> Result<FormValue> {
    bilinear(u, u, region_a, region_b, z, p)
}

/// `(C/2) ∬_{(A×B) ∩ Z} (u(x)-u(y)) (v(x)-v(y)) K dx dy`.
pub fn bilinear(
    u: &GridFunction,
    v: &GridFunction,
    region_a: &DomainSpec,
    region_b: &DomainSpec,
    z: Option<&InteractionSet>,
    p: &FracParams,
) -> Result<FormValue> {
    let fine = bilinear_value(u, v, region_a, region_b, z, p)?;
    let coarse = bilinear_value(&u.coarsen()?, &v.coarsen()?, region_a, region_b, z, p)?;
    FormValue::from_levels(fine, coarse)
}

/// Single-lattice value of the bilinear form.
pub fn bilinear_value(
    u: &GridFunction,
    v: &GridFunction,
    region_a: &DomainSpec,
    region_b: &DomainSpec,
    z: Option<&InteractionSet>,
    p: &FracParams,
) -> Result<f64> {
    check_dim(u, p)?;
    if !u.lattice().same_as(v.lattice()) {
        return Err(Error::LatticeMismatch("operands live on different lattices".into()));
    }
    let (uv, vv) = (u.values(), v.values());
    let (tu, tv) = (u.farfield().terms(), v.farfield().terms());
    let pair = |i: usize, j: usize| (uv[i] - uv[j]) * (vv[i] - vv[j]);
    // box × exterior: ∫ (u_i - u_far)(v_i - v_far) K over the exterior
    let ext = |i: usize, out_b: f64, out_a: f64, e: &dyn Fn(f64) -> f64| {
        let w = out_a + out_b;
        if w == 0.0 {
            return 0.0;
        }
        let mut val = 0.0;
        if uv[i] * vv[i] != 0.0 {
            val += uv[i] * vv[i] * e(0.0);
        }
        for (c, q) in &tv {
            val -= uv[i] * c * e(*q);
        }
        for (c, q) in &tu {
            val -= vv[i] * c * e(*q);
        }
        for (a, qa) in &tu {
            for (b, qb) in &tv {
                val += a * b * e(qa + qb);
            }
        }
        w * val
    };
    pair_form(u.lattice(), p, region_a, region_b, z, &pair, &ext)
}

/// `(C/2) ∬_{A×B} a(x) b(y) Ψ_φ(x,y) dx dy` for compactly supported `φ`.
pub fn psi_form(a: &GridFunction, b: &GridFunction, phi: &GridFunction, region_a: &DomainSpec, region_b: &DomainSpec, p: &FracParams) -> Result<FormValue> {
    let fine = psi_form_value(a, b, phi, region_a, region_b, p)?;
    let coarse = psi_form_value(&a.coarsen()?, &b.coarsen()?, &phi.coarsen()?, region_a, region_b, p)?;
    FormValue::from_levels(fine, coarse)
}

fn psi_form_value(a: &GridFunction, b: &GridFunction, phi: &GridFunction, region_a: &DomainSpec, region_b: &DomainSpec, p: &FracParams) -> Result<f64> {
    check_dim(a, p)?;
    if !a.lattice().same_as(b.lattice()) || !a.lattice().same_as(phi.lattice()) {
        return Err(Error::LatticeMismatch("operands live on different lattices".into()));
    }
    if !phi.farfield().terms().is_empty() {
        return Err(Error::SupportViolation("test function must be compactly supported".into()));
    }
    let (av, bv, fv) = (a.values(), b.values(), phi.values());
    let (ta, tb) = (a.farfield().terms(), b.farfield().terms());
    let pair = |i: usize, j: usize| av[i] * bv[j] * (fv[i] - fv[j]).powi(2);
    let ext = |i: usize, out_b: f64, out_a: f64, e: &dyn Fn(f64) -> f64| {
        if fv[i] == 0.0 {
            return 0.0;
        }
        let mut val = 0.0;
        for (c, q) in &tb {
            val += out_b * av[i] * c * e(*q);
        }
        for (c, q) in &ta {
            val += out_a * bv[i] * c * e(*q);
        }
        val * fv[i] * fv[i]
    };
    pair_form(a.lattice(), p, region_a, region_b, None, &pair, &ext)
}

/// `(C/2) [Σ_{i≠j} W_ij pair(i,j) K_ij h^{2n} + diagonal correction + exterior]`
/// where `W_ij` is the probability that two independent points of cells
/// `i, j` form a pair of `(A×B) ∩ Z`. `ext(i, P, Q, e)` returns the exterior
/// contribution of node `i`, with `P` (`Q`) the weight of the ordering where
/// the exterior point is the second (first) one and `e(q)` the exterior
/// integral against `|y|^{-q}`.
fn pair_form(
    lat: &Lattice,
    p: &FracParams,
    region_a: &DomainSpec,
    region_b: &DomainSpec,
    z: Option<&InteractionSet>,
    pair: &(dyn Fn(usize, usize) -> f64 + Sync),
    ext: &(dyn Fn(usize, f64, f64, &dyn Fn(f64) -> f64) -> f64 + Sync),
) -> Result<f64> {
    let full = DomainSpec::full_space(p.n);
    let (u1, u2) = match z {
        Some(z) => (z.u1(), z.u2()),
        None => (&full, &full),
    };
    let domains = [region_a, region_b, u1, u2];
    for d in domains {
        if d.dim() != p.n {
            return Err(Error::DimensionMismatch { expected: p.n, got: d.dim() });
        }
        check_features(lat, d)?;
    }
    let classes = cell_classes(lat, &domains);
    let mut allowed = [[false; 16]; 16];
    for (cx, row) in allowed.iter_mut().enumerate() {
        for (cy, a) in row.iter_mut().enumerate() {
            let bit = |c: usize, k: usize| c & (1 << k) != 0;
            *a = bit(cx, 0) && bit(cy, 1) && ((bit(cx, 2) && bit(cy, 3)) || (bit(cx, 3) && bit(cy, 2)));
        }
    }
    let weight = |ci: &[(ClassBits, f64)], cj: &[(ClassBits, f64)]| -> f64 {
        let mut w = 0.0;
        for (a, fa) in ci {
            for (b, fb) in cj {
                if allowed[*a as usize][*b as usize] {
                    w += fa * fb;
                }
            }
        }
        w
    };
    let engine = RowEngine::new(lat, p.s, &QuadratureScheme::for_spacing(lat.h()))?;
    let nn = lat.len();
    let hn = lat.cell_volume();

    let rows: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in i + 1..nn {
                let (f, g) = (pair(i, j), pair(j, i));
                if f == 0.0 && g == 0.0 {
                    continue;
                }
                let mut t = 0.0;
                if f != 0.0 {
                    t += weight(&classes[i], &classes[j]) * f;
                }
                if g != 0.0 {
                    t += weight(&classes[j], &classes[i]) * g;
                }
                acc += t * engine.kernel(i, j);
            }
            acc * hn * hn
        })
        .collect();
    let mut total: f64 = rows.iter().sum();

    // lattice-defect correction of the punctured diagonal sums
    let h = lat.h();
    let scale = hn * lattice_defect(p.n, p.s) * h.powf(2.0 - 2.0 * p.s) / p.n as f64;
    let mut diag = 0.0;
    for i in 0..nn {
        let d = weight(&classes[i], &classes[i]);
        if d == 0.0 {
            continue;
        }
        let mut g = 0.0;
        for k in 0..p.n {
            for step in [1, -1] {
                if let Some(j) = lat.axis_neighbor(i, k, step) {
                    g += 0.5 * pair(i, j) / (h * h);
                }
            }
        }
        diag += d * g;
    }
    total += scale * diag;

    let cinf = bits_at_infinity(&domains);
    let inf_class = [(cinf, 1.0)];
    let lo: Vec<f64> = lat.lo().iter().map(|c| c - 0.5 * h).collect();
    let hi: Vec<f64> = lat.hi().iter().map(|c| c + 0.5 * h).collect();
    let exterior: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|i| {
            let out_b = weight(&classes[i], &inf_class);
            let out_a = weight(&inf_class, &classes[i]);
            if out_a == 0.0 && out_b == 0.0 {
                return 0.0;
            }
            let x = lat.point(i);
            let e = |q: f64| exterior_integral(&x, &lo, &hi, p.s, q);
            ext(i, out_b, out_a, &e) * hn
        })
        .collect();
    total += exterior.iter().sum::<f64>();
    Ok(0.5 * p.c_ns * total)
}

/// `⟨𝔏ˢ_Z u, φ⟩` for `φ` supported inside `Omega`.
pub fn pairing(u: &GridFunction, phi: &GridFunction, z: &InteractionSet, p: &FracParams) -> Result<FormValue> {
    phi.check_support(z.omega(), 0.0)?;
    let full = DomainSpec::full_space(p.n);
    bilinear(u, phi, &full, &full, Some(z), p)
}

/// `Ψ_φ(x,y) = (φ(x)-φ(y))^2 / |x-y|^{n+2s}`.
pub fn psi(phi: &GridFunction, x: &[f64], y: &[f64], p: &FracParams) -> Result<f64> {
    if x.len() != p.n || y.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: x.len() });
    }
    let r2 = dist2(x, y);
    if r2 == 0.0 {
        return Err(invalid("psi is undefined on the diagonal"));
    }
    let d = phi.value_at(x) - phi.value_at(y);
    Ok(d * d * r2.powf(-p.order() / 2.0))
}

pub fn truncate(u: &GridFunction, sign: Sign) -> GridFunction {
    u.truncate(sign)
}

fn merge_boxes(boxes: impl IntoIterator<Item = Option<(Vec<f64>, Vec<f64>)>>) -> Option<(Vec<f64>, Vec<f64>)> {
    boxes.into_iter().flatten().reduce(|(a, b), (lo, hi)| {
        (a.iter().zip(&lo).map(|(u, v)| u.min(*v)).collect(), b.iter().zip(&hi).map(|(u, v)| u.max(*v)).collect())
    })
}

/// Kernel mass `∫_S |x-y|^{-(n+2s)} dy` of a region `S` not containing `x`,
/// on one lattice: midpoint sum with cell occupancy plus the exact exterior.
fn region_mass(x: &[f64], region: &DomainSpec, lat: &Lattice, s: f64) -> f64 {
    let w = lat.occupancy(region);
    let order = lat.dim() as f64 + 2.0 * s;
    let mut y = vec![0.0; lat.dim()];
    let mut acc = 0.0;
    for (j, wj) in w.iter().enumerate() {
        if *wj > 0.0 {
            lat.point_into(j, &mut y);
            acc += wj * dist2(x, &y).powf(-order / 2.0);
        }
    }
    acc *= lat.cell_volume();
    if region.contains_infinity() {
        let h = lat.h();
        let lo: Vec<f64> = lat.lo().iter().map(|c| c - 0.5 * h).collect();
        let hi: Vec<f64> = lat.hi().iter().map(|c| c + 0.5 * h).collect();
        acc += exterior_integral(x, &lo, &hi, s, 0.0);
    }
    acc
}

/// Relative killing measure `M^Z_G(x) = C ∫_{(U1 ∪ U2) \ G} |x-y|^{-(n+2s)} dy`,
/// Richardson-extrapolated over `q.refinement_levels` lattices with spacing
/// `min(delta/2, dist(x, ∂G)/4)` and its halvings.
pub fn killing_measure(x: &[f64], g: &DomainSpec, z: &InteractionSet, p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
    q.validate()?;
    if !g.contains(x)? {
        return Err(Error::OutsideDomain(format!("{x:?} is not in G")));
    }
    if g.bounding_box().is_none() {
        return Err(Error::Unbounded);
    }
    let region = DomainSpec::difference(z.union_domain(), g.clone())?;
    let d = g.signed_distance(x).abs();
    let h0 = (0.5 * q.delta).min(0.25 * d);
    let (lo, hi) = merge_boxes([g.feature_box(), z.u1().feature_box(), z.u2().feature_box(), Some((x.to_vec(), x.to_vec()))])
        .expect("G is bounded");
    let mut levels = Vec::with_capacity(q.refinement_levels);
    for l in 0..q.refinement_levels {
        let h = h0 / 2f64.powi(l as i32);
        let lo_l: Vec<f64> = lo.iter().map(|v| v - 2.0 * h0).collect();
        let hi_l: Vec<f64> = hi.iter().map(|v| v + 2.0 * h0).collect();
        let lat = Lattice::from_box(&lo_l, &hi_l, h)?;
        levels.push(region_mass(x, &region, &lat, p.s));
    }
    // Richardson table for an even error expansion in h
    for j in 1..levels.len() {
        let f = 4f64.powi(j as i32);
        for k in (j..levels.len()).rev() {
            levels[k] = (f * levels[k] - levels[k - 1]) / (f - 1.0);
        }
    }
    Ok(p.c_ns * levels[levels.len() - 1])
}

/// `ℰ_s(u;Z) - ℰ_s(u;G×G) - ∫_G M^Z_G u^2`, with the sum of the three error
/// estimates as `error_estimate`.
pub fn energy_decomposition_residual(u: &GridFunction, g: &DomainSpec, z: &InteractionSet, p: &FracParams) -> Result<FormValue> {
    u.check_support(g, 0.0)?;
    let full = DomainSpec::full_space(p.n);
    let ez = energy(u, &full, &full, Some(z), p)?;
    let eg = energy(u, g, g, Some(z), p)?;
    let lat = u.lattice();
    let q = QuadratureScheme::for_spacing(lat.h());
    let occ = lat.occupancy(g);
    let mut killing = vec![0.0; lat.len()];
    for (i, v) in u.values().iter().enumerate() {
        if *v != 0.0 {
            killing[i] = killing_measure(&lat.point(i), g, z, p, &q)?;
        }
    }
    let mass = |lat: &Lattice, vals: &[f64], kill: &dyn Fn(usize) -> f64, occ: &[f64]| -> f64 {
        vals.iter().enumerate().map(|(i, v)| occ[i] * v * v * kill(i)).sum::<f64>() * lat.cell_volume()
    };
    let fine = mass(lat, u.values(), &|i| killing[i], &occ);
    let coarse_u = u.coarsen()?;
    let map = lat.coarse_to_fine(coarse_u.lattice());
    let coarse_occ = coarse_u.lattice().occupancy(g);
    let coarse = mass(coarse_u.lattice(), coarse_u.values(), &|c| killing[map[c]], &coarse_occ);
    let residual = ez.value - eg.value - fine;
    Ok(FormValue { value: residual, error_estimate: ez.error_estimate + eg.error_estimate + (fine - coarse).abs() })
}

/// Relative nonlocal tail `r^{2s} ∫_{(U1∪U2) \ B_r(x0)} u^+(x) |x-x0|^{-(n+2s)} dx`.
pub fn relative_tail(u: &GridFunction, x0: &[f64], r: f64, z: &InteractionSet, p: &FracParams) -> Result<f64> {
    check_dim(u, p)?;
    if !(r > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let lat = u.lattice();
    if !lat.in_cells(x0) {
        return Err(Error::LatticeMismatch("tail centre lies outside the lattice box".into()));
    }
    let ball = DomainSpec::ball(x0.to_vec(), r)?;
    let region = DomainSpec::difference(z.union_domain(), ball)?;
    check_features(lat, &region)?;
    let up = u.truncate(Sign::Plus);
    let w = lat.occupancy(&region);
    let order = p.order();
    let mut y = vec![0.0; p.n];
    let mut acc = 0.0;
    for (j, (wj, v)) in w.iter().zip(up.values()).enumerate() {
        if *wj > 0.0 && *v != 0.0 {
            lat.point_into(j, &mut y);
            acc += wj * v * dist2(x0, &y).powf(-order / 2.0);
        }
    }
    acc *= lat.cell_volume();
    if region.contains_infinity() {
        let h = lat.h();
        let lo: Vec<f64> = lat.lo().iter().map(|c| c - 0.5 * h).collect();
        let hi: Vec<f64> = lat.hi().iter().map(|c| c + 0.5 * h).collect();
        for (c, q) in up.farfield().terms() {
            acc += c * exterior_integral(x0, &lo, &hi, p.s, q);
        }
    }
    Ok(r.powf(2.0 * p.s) * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FarField;
    use std::f64::consts::PI;

    fn line(a: f64, b: f64, h: f64) -> Lattice {
        Lattice::from_box(&[a], &[b], h).unwrap()
    }

    #[test]
    fn weighted_l1_examples() {
        let p = FracParams::new(1, 0.5).unwrap();
        let one = GridFunction::from_fn(line(-4.0, 4.0, 1.0 / 64.0), FarField::Constant { c: 1.0 }, |_| 1.0).unwrap();
        let v = weighted_l1_norm(&one, &p).unwrap();
        assert!((v.value - PI).abs() < 1e-4, "{v:?}");
        let ind = GridFunction::from_fn(line(-2.0, 2.0, 1.0 / 256.0), FarField::CompactSupport, |x| {
            if x[0].abs() < 1.0 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let v = weighted_l1_norm(&ind, &p).unwrap();
        assert!((v.value - PI / 2.0).abs() < 2.0 * v.error_estimate + 1e-3, "{v:?}");
        let zero = GridFunction::zeros(line(-1.0, 1.0, 0.25));
        assert_eq!(weighted_l1_norm(&zero, &p).unwrap().value, 0.0);
    }

    #[test]
    fn psi_examples() {
        let p = FracParams::new(1, 0.5).unwrap();
        let phi = GridFunction::from_fn(line(-2.0, 2.0, 0.25), FarField::CompactSupport, |x| x[0]).unwrap();
        assert!((psi(&phi, &[0.0], &[1.0], &p).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(psi(&phi, &[0.5], &[-0.25], &p).unwrap(), psi(&phi, &[-0.25], &[0.5], &p).unwrap());
        assert!(psi(&phi, &[0.5], &[0.5], &p).is_err());
    }

    #[test]
    fn killing_measure_of_interval() {
        let p = FracParams::new(1, 0.5).unwrap();
        let g = DomainSpec::interval(-1.0, 1.0).unwrap();
        let q = QuadratureScheme::default();
        let m = killing_measure(&[0.0], &g, &InteractionSet::dirichlet(g.clone()), &p, &q).unwrap();
        assert!((m - 2.0 / PI).abs() < 1e-6, "{m}");
        let r = killing_measure(&[0.0], &g, &InteractionSet::restricted(g.clone()), &p, &q).unwrap();
        assert_eq!(r, 0.0);
        // exact value C (1/(1-x) + 1/(1+x))
        let m = killing_measure(&[0.7], &g, &InteractionSet::dirichlet(g.clone()), &p, &q).unwrap();
        assert!((m - (1.0 / 0.3 + 1.0 / 1.7) / PI).abs() < 1e-5, "{m}");
    }

    #[test]
    fn tail_examples() {
        let p = FracParams::new(1, 0.5).unwrap();
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let one = GridFunction::from_fn(line(-4.0, 4.0, 1.0 / 64.0), FarField::Constant { c: 1.0 }, |_| 1.0).unwrap();
        let t = relative_tail(&one, &[0.0], 1.0, &InteractionSet::dirichlet(om.clone()), &p).unwrap();
        assert!((t - 2.0).abs() < 1e-3, "{t}");
        let t = relative_tail(&one, &[0.0], 1.0, &InteractionSet::restricted(om.clone()), &p).unwrap();
        assert_eq!(t, 0.0);
        let neg = one.scale(-1.0);
        assert_eq!(relative_tail(&neg, &[0.0], 1.0, &InteractionSet::dirichlet(om), &p).unwrap(), 0.0);
    }

    #[test]
    fn energy_of_constant_vanishes_and_scales() {
        let p = FracParams::new(1, 0.4).unwrap();
        let lat = line(-1.0, 1.0, 1.0 / 32.0);
        let full = DomainSpec::full_space(1);
        let c = GridFunction::from_fn(lat.clone(), FarField::Constant { c: 3.0 }, |_| 3.0).unwrap();
        assert_eq!(energy(&c, &full, &full, None, &p).unwrap().value, 0.0);
        let u = GridFunction::from_fn(lat, FarField::CompactSupport, |x| (1.0 - x[0] * x[0]).max(0.0)).unwrap();
        let e1 = energy(&u, &full, &full, None, &p).unwrap().value;
        let e2 = energy(&u.scale(3.0), &full, &full, None, &p).unwrap().value;
        assert!((e2 - 9.0 * e1).abs() < 1e-12 * e2);
    }
}
