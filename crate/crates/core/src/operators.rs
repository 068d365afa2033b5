//! Pointwise and lattice-wide realizations of `𝔏ˢ_Z` and its presets.
//! Every preset goes through [`ZOperator`], which integrates over the
//! x-section `{y : (x,y) ∈ Z}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, InteractionSet};
use crate::error::{Error, Result};
use crate::forms::{bilinear, FormValue};
use crate::grid::GridFunction;
use crate::kernel::{FracParams, QuadratureScheme};
use crate::lattice::Lattice;
use crate::spectral::{spectral_1d, BoundaryCondition};
use crate::quadrature::{check_features, RowEngine};

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    Dirichlet,
    Regional(DomainSpec),
    Semirestricted(DomainSpec),
    General(InteractionSet),
    SpectralDirichlet1d { a: f64, b: f64, modes: usize },
    SpectralNeumann1d { a: f64, b: f64, modes: usize },
}

impl OperatorKind {
    pub fn validate(&self, p: &FracParams) -> Result<()> {
        let dim = match self {
            OperatorKind::Dirichlet => p.n,
            OperatorKind::Regional(d) | OperatorKind::Semirestricted(d) => d.dim(),
            OperatorKind::General(z) => z.dim(),
            OperatorKind::SpectralDirichlet1d { a, b, modes } | OperatorKind::SpectralNeumann1d { a, b, modes } => {
                if !(a < b) || *modes == 0 {
                    return Err(crate::error::invalid(format!("spectral operator needs a < b and modes > 0, got ({a}, {b}), {modes}")));
                }
                1
            }
        };
        if dim != p.n {
            return Err(Error::DimensionMismatch { expected: p.n, got: dim });
        }
        Ok(())
    }

    /// The operator applied to `u` at the lattice node `x`. The spectral
    /// variants need a lattice spanning exactly `[a, b]`.
    pub fn evaluate(&self, u: &GridFunction, x: &[f64], p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
        self.validate(p)?;
        match self {
            OperatorKind::Dirichlet => dirichlet_pointwise(u, x, p, q),
            OperatorKind::Regional(omega) => regional_pointwise(u, x, omega, p, q),
            OperatorKind::Semirestricted(omega) => semirestricted_pointwise(u, x, omega, p, q),
            OperatorKind::General(z) => general_pointwise(u, x, z, p, q),
            OperatorKind::SpectralDirichlet1d { a, b, modes } | OperatorKind::SpectralNeumann1d { a, b, modes } => {
                let bc = match self {
                    OperatorKind::SpectralDirichlet1d { .. } => BoundaryCondition::Dirichlet,
                    _ => BoundaryCondition::Neumann,
                };
                let lat = u.lattice();
                let tol = 1e-9 * lat.h();
                if (lat.lo()[0] - a).abs() > tol || (lat.hi()[0] - b).abs() > tol {
                    return Err(Error::LatticeMismatch(format!("spectral operator on [{a}, {b}] needs a lattice spanning it")));
                }
                let i = node_of(u, x)?;
                Ok(spectral_1d(u, bc, p.s, *modes)?.values()[i])
            }
        }
    }
}

struct Section {
    weights: Vec<f64>,
    at_infinity: bool,
}

/// `𝔏ˢ_Z` on one lattice.
pub struct ZOperator<'a> {
    engine: RowEngine<'a>,
    z: InteractionSet,
    p: FracParams,
    class: Vec<usize>,
    sections: [Option<Section>; 4],
    cell_lo: Vec<f64>,
    cell_hi: Vec<f64>,
}

fn class_index(c: (bool, bool)) -> usize {
    (c.0 as usize) << 1 | c.1 as usize
}

impl<'a> ZOperator<'a> {
    pub fn new(lat: &'a Lattice, z: &InteractionSet, p: &FracParams, q: &QuadratureScheme) -> Result<Self> {
        q.validate()?;
        if z.dim() != lat.dim() || p.n != lat.dim() {
            return Err(Error::DimensionMismatch { expected: lat.dim(), got: z.dim() });
        }
        let engine = RowEngine::new(lat, p.s, q)?;
        let class: Vec<usize> = (0..lat.len()).map(|i| class_index(z.class_of(&lat.point(i)))).collect();
        let mut sections: [Option<Section>; 4] = [None, None, None, None];
        for c in 0..4 {
            if class.contains(&c) {
                let d = z.section_for_class((c & 2 != 0, c & 1 != 0));
                check_features(lat, &d)?;
                sections[c] = Some(Section { weights: lat.occupancy(&d), at_infinity: d.contains_infinity() });
            }
        }
        let h = lat.h();
        let cell_lo = lat.lo().iter().map(|v| v - 0.5 * h).collect();
        let cell_hi = lat.hi().iter().map(|v| v + 0.5 * h).collect();
        Ok(Self { engine, z: z.clone(), p: *p, class, sections, cell_lo, cell_hi })
    }

    pub fn lattice(&self) -> &Lattice {
        self.engine.lattice()
    }

    fn section(&self, i: usize) -> Option<&Section> {
        self.sections[self.class[i]].as_ref().filter(|_| self.class[i] != 0)
    }

    /// Linear stencil of node `i`: `L u_i = diag u_i - Σ_j row_j u_j - far`,
    /// where `far` collects the exterior contribution of the far-field
    /// model. `row` must have the lattice length; `row[i]` is set to 0.
    pub fn row(&self, i: usize, farfield: &crate::grid::FarField, row: &mut [f64]) -> (f64, f64) {
        let Some(sec) = self.section(i) else {
            row.iter_mut().for_each(|v| *v = 0.0);
            return (0.0, 0.0);
        };
        self.engine.row_weights(i, &sec.weights, row);
        row[i] = 0.0;
        let c = self.p.c_ns;
        let mut diag: f64 = row.iter().sum();
        let mut far = 0.0;
        if sec.at_infinity {
            let x = self.lattice().point(i);
            diag += self.engine.exterior(&x, 0.0);
            for (coef, q) in farfield.terms() {
                far += coef * self.engine.exterior(&x, q);
            }
        }
        row.iter_mut().for_each(|v| *v *= c);
        (c * diag, c * far)
    }

    /// `𝔏ˢ_Z u` at node `i`.
    pub fn apply_at(&self, u: &GridFunction, i: usize, buf: &mut [f64]) -> f64 {
        let (diag, far) = self.row(i, &u.farfield(), buf);
        let vals = u.values();
        diag * vals[i] - buf.iter().zip(vals).map(|(a, v)| a * v).sum::<f64>() - far
    }

    /// Whether node `i` is at least `2h` away from every boundary relevant
    /// to its section (and from the box edge when the section is unbounded).
    pub fn is_evaluable(&self, i: usize) -> Result<()> {
        let lat = self.lattice();
        let x = lat.point(i);
        let sec = self.section(i).ok_or_else(|| Error::OutsideDomain(format!("empty section at {x:?}")))?;
        let gap = 2.0 * lat.h() - 1e-9 * lat.h();
        for d in [self.z.omega(), self.z.u1(), self.z.u2()] {
            if !d.is_full_space() && d.signed_distance(&x).abs() < gap {
                return Err(Error::BoundaryAdjacent(format!("{x:?}")));
            }
        }
        if sec.at_infinity {
            let edge = (0..x.len()).map(|k| (x[k] - self.cell_lo[k]).min(self.cell_hi[k] - x[k])).fold(f64::INFINITY, f64::min);
            if edge < gap {
                return Err(Error::BoundaryAdjacent(format!("{x:?} is near the lattice edge")));
            }
        }
        Ok(())
    }

    /// Values at all evaluable nodes, `None` elsewhere.
    pub fn apply(&self, u: &GridFunction) -> Vec<Option<f64>> {
        let n = self.lattice().len();
        (0..n)
            .into_par_iter()
            .map_init(|| vec![0.0; n], |buf, i| self.is_evaluable(i).ok().map(|_| self.apply_at(u, i, buf)))
            .collect()
    }

    /// Values at the given nodes without the distance restriction.
    pub fn apply_nodes(&self, u: &GridFunction, nodes: &[usize]) -> Vec<f64> {
        let n = self.lattice().len();
        nodes.par_iter().map_init(|| vec![0.0; n], |buf, &i| self.apply_at(u, i, buf)).collect()
    }
}

fn check_lattice(u: &GridFunction, p: &FracParams) -> Result<()> {
    if u.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: u.dim() });
    }
    Ok(())
}

fn node_of(u: &GridFunction, x: &[f64]) -> Result<usize> {
    u.lattice().node_index(x).ok_or_else(|| Error::LatticeMismatch(format!("{x:?} is not a lattice node")))
}

/// `𝔏ˢ_Z u(x)` at a lattice node, integrating over the x-section of `Z`.
pub fn general_pointwise(u: &GridFunction, x: &[f64], z: &InteractionSet, p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
    check_lattice(u, p)?;
    let i = node_of(u, x)?;
    let op = ZOperator::new(u.lattice(), z, p, q)?;
    op.is_evaluable(i)?;
    let mut buf = vec![0.0; u.lattice().len()];
    Ok(op.apply_at(u, i, &mut buf))
}

/// `(-Δ)^s u(x)`.
pub fn dirichlet_pointwise(u: &GridFunction, x: &[f64], p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
    let z = InteractionSet::dirichlet(DomainSpec::full_space(p.n));
    general_pointwise(u, x, &z, p, q)
}

/// Regional operator of `omega` at an interior point.
pub fn regional_pointwise(u: &GridFunction, x: &[f64], omega: &DomainSpec, p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
    if !omega.contains(x)? {
        return Err(Error::OutsideDomain(format!("{x:?}")));
    }
    general_pointwise(u, x, &InteractionSet::restricted(omega.clone()), p, q)
}

/// Semirestricted operator: full-space integral for `x ∈ Omega`, integral
/// over `Omega` for `x ∉ Omega`.
pub fn semirestricted_pointwise(u: &GridFunction, x: &[f64], omega: &DomainSpec, p: &FracParams, q: &QuadratureScheme) -> Result<f64> {
    general_pointwise(u, x, &InteractionSet::semirestricted(omega.clone()), p, q)
}

/// `𝔏ˢ_Z u` at every evaluable node together with the refinement error
/// `|L_h u - L_{2h} u|` at nodes shared with the coarsened lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorTable {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
}

pub fn apply_operator(u: &GridFunction, z: &InteractionSet, p: &FracParams, q: &QuadratureScheme) -> Result<OperatorTable> {
    check_lattice(u, p)?;
    let lat = u.lattice();
    let fine = ZOperator::new(lat, z, p, q)?.apply(u);
    let cu = u.coarsen()?;
    let cq = QuadratureScheme { delta: 2.0 * q.delta, ..*q };
    let coarse = ZOperator::new(cu.lattice(), z, p, &cq)?.apply(&cu);
    let map = lat.coarse_to_fine(cu.lattice());
    let mut table = OperatorTable { points: vec![], values: vec![], error_estimates: vec![] };
    for (c, f) in map.iter().enumerate() {
        if let (Some(v), Some(w)) = (fine[*f], coarse[c]) {
            table.points.push(lat.point(*f));
            table.values.push(v);
            table.error_estimates.push((v - w).abs());
        }
    }
    Ok(table)
}

/// `(C/2) ∬_{G × [(U1∪U2) \ G]} (u(x)-u(y)) (φ(x)-φ(y)) K`.
pub fn complement_regional_pairing(u: &GridFunction, phi: &GridFunction, g: &DomainSpec, z: &InteractionSet, p: &FracParams) -> Result<FormValue> {
    phi.check_support(g, 0.0)?;
    let outside = DomainSpec::difference(z.union_domain(), g.clone())?;
    bilinear(u, phi, g, &outside, None, p)
}

/// Pairings `⟨𝔏ˢ_Z u, φ_k⟩ = h^n Σ φ_k(x_i) 𝔏ˢ_Z u(x_i)` for many test
/// functions supported in `Omega`, from one evaluation of the operator on
/// the union of supports (and once more on the coarsened lattice for the
/// error estimate).
pub fn pairings_via_operator(u: &GridFunction, bumps: &[GridFunction], z: &InteractionSet, p: &FracParams, q: &QuadratureScheme) -> Result<Vec<FormValue>> {
    check_lattice(u, p)?;
    for b in bumps {
        b.check_support(z.omega(), 0.0)?;
        if !b.lattice().same_as(u.lattice()) {
            return Err(Error::LatticeMismatch("bump lives on a different lattice".into()));
        }
    }
    let level = |u: &GridFunction, bumps: &[GridFunction], q: &QuadratureScheme| -> Result<Vec<f64>> {
        let lat = u.lattice();
        let nodes: Vec<usize> = (0..lat.len()).filter(|i| bumps.iter().any(|b| b.values()[*i] != 0.0)).collect();
        let op = ZOperator::new(lat, z, p, q)?;
        let lu = op.apply_nodes(u, &nodes);
        Ok(bumps
            .iter()
            .map(|b| nodes.iter().zip(&lu).map(|(i, l)| b.values()[*i] * l).sum::<f64>() * lat.cell_volume())
            .collect())
    };
    let fine = level(u, bumps, q)?;
    let cu = u.coarsen()?;
    let cb: Vec<GridFunction> = bumps.iter().map(|b| b.coarsen()).collect::<Result<_>>()?;
    let coarse = level(&cu, &cb, &QuadratureScheme { delta: 2.0 * q.delta, ..*q })?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| FormValue { value: *f, error_estimate: (f - c).abs() }).collect())
}

/// Solves `𝔏ˢ_Z u = rhs` at the nodes flagged in `unknown`, with `u` fixed
/// to `data` elsewhere (including its far field), by dense LU on the
/// collocation system.
pub fn solve_collocation(
    data: &GridFunction,
    unknown: &[bool],
    rhs: &[f64],
    z: &InteractionSet,
    p: &FracParams,
    q: &QuadratureScheme,
) -> Result<GridFunction> {
    let lat = data.lattice();
    if unknown.len() != lat.len() || rhs.len() != lat.len() {
        return Err(Error::DimensionMismatch { expected: lat.len(), got: unknown.len() });
    }
    let idx: Vec<usize> = (0..lat.len()).filter(|i| unknown[*i]).collect();
    let mut col = vec![usize::MAX; lat.len()];
    for (c, i) in idx.iter().enumerate() {
        col[*i] = c;
    }
    let op = ZOperator::new(lat, z, p, q)?;
    let m = idx.len();
    let far = data.farfield();
    let rows: Vec<(Vec<f64>, f64)> = idx
        .par_iter()
        .map_init(
            || vec![0.0; lat.len()],
            |buf, &i| {
                let (diag, farc) = op.row(i, &far, buf);
                let mut r = vec![0.0; m];
                let mut b = rhs[i] + farc;
                for (j, a) in buf.iter().enumerate() {
                    if *a == 0.0 {
                        continue;
                    }
                    if col[j] != usize::MAX {
                        r[col[j]] -= a;
                    } else {
                        b += a * data.values()[j];
                    }
                }
                r[col[i]] += diag;
                (r, b)
            },
        )
        .collect();
    let mat = DMatrix::from_fn(m, m, |r, c| rows[r].0[c]);
    let b = DVector::from_iterator(m, rows.iter().map(|r| r.1));
    let sol = mat.clone().lu().solve(&b).ok_or_else(|| Error::SingularSystem("collocation matrix is singular".into()))?;
    let resid = (&mat * &sol - &b).amax();
    let scale = b.amax().max(mat.amax() * sol.amax()).max(1e-300);
    if !(resid <= 1e-10 * scale) {
        return Err(Error::SingularSystem(format!("residual {resid:e} exceeds tolerance")));
    }
    let mut values = data.values().to_vec();
    for (c, i) in idx.iter().enumerate() {
        values[*i] = sol[c];
    }
    GridFunction::new(lat.clone(), values, far)
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
    fn constants_are_annihilated() {
        let p = FracParams::new(1, 0.6).unwrap();
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let q = QuadratureScheme::for_spacing(1.0 / 32.0);
        let u = GridFunction::from_fn(line(-2.0, 2.0, 1.0 / 32.0), FarField::Constant { c: 2.0 }, |_| 2.0).unwrap();
        for z in [InteractionSet::dirichlet(om.clone()), InteractionSet::restricted(om.clone()), InteractionSet::semirestricted(om.clone())] {
            for v in ZOperator::new(u.lattice(), &z, &p, &q).unwrap().apply(&u).into_iter().flatten() {
                assert!(v.abs() < 1e-10, "{v}");
            }
        }
    }

    #[test]
    fn kinds_dispatch() {
        let p = FracParams::new(1, 0.5).unwrap();
        let q = QuadratureScheme::for_spacing(1.0 / 32.0);
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let u = GridFunction::from_fn(line(-2.0, 2.0, 1.0 / 32.0), FarField::CompactSupport, |x| (-x[0] * x[0]).exp()).unwrap();
        let direct = dirichlet_pointwise(&u, &[0.25], &p, &q).unwrap();
        assert_eq!(OperatorKind::Dirichlet.evaluate(&u, &[0.25], &p, &q).unwrap(), direct);
        assert_eq!(OperatorKind::Semirestricted(om.clone()).evaluate(&u, &[0.25], &p, &q).unwrap(), direct);
        let z = InteractionSet::restricted(om.clone());
        assert_eq!(
            OperatorKind::General(z).evaluate(&u, &[0.25], &p, &q).unwrap(),
            OperatorKind::Regional(om).evaluate(&u, &[0.25], &p, &q).unwrap()
        );

        let unit = line(0.0, 1.0, 1.0 / 32.0);
        let sine = GridFunction::from_fn(unit, FarField::CompactSupport, |x| (PI * x[0]).sin()).unwrap();
        let kind = OperatorKind::SpectralDirichlet1d { a: 0.0, b: 1.0, modes: 31 };
        let v = kind.evaluate(&sine, &[0.5], &p, &q).unwrap();
        assert!((v - PI).abs() < 1e-12);
        let wrong = OperatorKind::SpectralNeumann1d { a: 0.0, b: 2.0, modes: 31 };
        assert!(matches!(wrong.evaluate(&sine, &[0.5], &p, &q), Err(Error::LatticeMismatch(_))));
        assert!(OperatorKind::SpectralDirichlet1d { a: 1.0, b: 0.0, modes: 3 }.validate(&p).is_err());
    }

    #[test]
    fn indicator_gives_killing_measure() {
        let p = FracParams::new(1, 0.5).unwrap();
        let h = 1.0 / 64.0;
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        // cell averages of the indicator: 1/2 on the boundary nodes
        let lat = line(-2.0, 2.0, h);
        let u = GridFunction::new(lat.clone(), lat.occupancy(&om), FarField::CompactSupport).unwrap();
        let q = QuadratureScheme::for_spacing(h);
        let v = dirichlet_pointwise(&u, &[0.0], &p, &q).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-4, "{v}");
        let w = semirestricted_pointwise(&u, &[0.0], &om, &p, &q).unwrap();
        assert_eq!(v, w);
        let closed = GridFunction::from_fn(lat, FarField::CompactSupport, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let r = regional_pointwise(&closed, &[0.0], &om, &p, &q).unwrap();
        assert!(r.abs() < 1e-12);
        assert!(matches!(regional_pointwise(&u, &[0.984375], &om, &p, &q), Err(Error::BoundaryAdjacent(_))));
    }

    #[test]
    fn odd_function_regional_vanishes_at_centre() {
        let p = FracParams::new(1, 0.3).unwrap();
        let h = 1.0 / 64.0;
        let om = DomainSpec::interval(-1.0, 1.0).unwrap();
        let u = GridFunction::from_fn(line(-1.0, 1.0, h), FarField::CompactSupport, |x| x[0]).unwrap();
        let v = regional_pointwise(&u, &[0.0], &om, &p, &QuadratureScheme::for_spacing(h)).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }
}
