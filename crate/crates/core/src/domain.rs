//! Geometric regions (`Omega`, `U1`, `U2`, `G`, balls) and interaction sets
//! `Z = (U1 x U2) ∪ (U2 x U1)`.

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    FullSpace,
    Complement(Box<DomainSpec>),
    Union(Vec<DomainSpec>),
    Difference(Box<DomainSpec>, Box<DomainSpec>),
}

/// An open region of `R^n` built from balls and boxes by set operations.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    kind: DomainKind,
    dim: usize,
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl DomainSpec {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        if center.is_empty() {
            return Err(invalid("ball center must have at least one coordinate"));
        }
        let dim = center.len();
        Ok(Self { kind: DomainKind::Ball { center, radius }, dim })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(invalid("box must have at least one coordinate"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("box requires lo < hi componentwise"));
        }
        let dim = lo.len();
        Ok(Self { kind: DomainKind::Box { lo, hi }, dim })
    }

    /// One-dimensional open interval `(a, b)`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::boxed(vec![a], vec![b])
    }

    pub fn full_space(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { kind: DomainKind::FullSpace, dim }
    }

    pub fn empty(dim: usize) -> Self {
        Self { kind: DomainKind::Union(Vec::new()), dim }
    }

    pub fn complement(d: DomainSpec) -> Self {
        let dim = d.dim;
        Self { kind: DomainKind::Complement(Box::new(d)), dim }
    }

    pub fn union(parts: Vec<DomainSpec>) -> Result<Self> {
        let dim = parts.first().map(|p| p.dim).ok_or_else(|| invalid("union of no domains"))?;
        for p in &parts {
            check_dim(dim, p.dim)?;
        }
        Ok(Self { kind: DomainKind::Union(parts), dim })
    }

    pub fn difference(a: DomainSpec, b: DomainSpec) -> Result<Self> {
        check_dim(a.dim, b.dim)?;
        let dim = a.dim;
        Ok(Self { kind: DomainKind::Difference(Box::new(a), Box::new(b)), dim })
    }

    /// `a ∩ b`, expressed as `a \ b^c`.
    pub fn intersection(a: DomainSpec, b: DomainSpec) -> Result<Self> {
        if matches!(b.kind, DomainKind::FullSpace) {
            return Ok(a);
        }
        if matches!(a.kind, DomainKind::FullSpace) {
            return Ok(b);
        }
        Self::difference(a, Self::complement(b))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self.kind, DomainKind::FullSpace)
    }

    pub fn is_empty_union(&self) -> bool {
        matches!(&self.kind, DomainKind::Union(p) if p.is_empty())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::Ball { center, radius } => dist2(x, center) < radius * radius,
            DomainKind::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a < *v && *v < *b)
            }
            DomainKind::FullSpace => true,
            DomainKind::Complement(d) => !d.contains_unchecked(x),
            DomainKind::Union(ps) => ps.iter().any(|p| p.contains_unchecked(x)),
            DomainKind::Difference(a, b) => a.contains_unchecked(x) && !b.contains_unchecked(x),
        }
    }

    /// Signed distance (negative inside). Exact for primitives, min/max
    /// composition for set operations.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => dist2(x, center).sqrt() - radius,
            DomainKind::Box { lo, hi } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for k in 0..x.len() {
                    let q = (lo[k] - x[k]).max(x[k] - hi[k]);
                    if q > 0.0 {
                        outside += q * q;
                    }
                    inside = inside.max(q);
                }
                outside.sqrt() + inside.min(0.0)
            }
            DomainKind::FullSpace => f64::NEG_INFINITY,
            DomainKind::Complement(d) => -d.signed_distance(x),
            DomainKind::Union(ps) => {
                ps.iter().map(|p| p.signed_distance(x)).fold(f64::INFINITY, f64::min)
            }
            DomainKind::Difference(a, b) => a.signed_distance(x).max(-b.signed_distance(x)),
        }
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        if !self.contains(x)? {
            return Err(Error::OutsideDomain(format!("{x:?}")));
        }
        Ok(self.signed_distance(x).abs())
    }

    /// Whether the region contains every point far enough from the origin.
    pub fn contains_infinity(&self) -> bool {
        match &self.kind {
            DomainKind::Ball { .. } | DomainKind::Box { .. } => false,
            DomainKind::FullSpace => true,
            DomainKind::Complement(d) => !d.contains_infinity(),
            DomainKind::Union(ps) => ps.iter().any(|p| p.contains_infinity()),
            DomainKind::Difference(a, b) => a.contains_infinity() && !b.contains_infinity(),
        }
    }

    /// Bounding box of every ball and box primitive in the expression tree.
    /// Membership is constant (and equal to `contains_infinity`) outside it.
    pub fn feature_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let merge = |acc: Option<(Vec<f64>, Vec<f64>)>, b: Option<(Vec<f64>, Vec<f64>)>| match (acc, b) {
            (None, b) => b,
            (a, None) => a,
            (Some((a, b)), Some((lo, hi))) => Some((
                a.iter().zip(&lo).map(|(u, v)| u.min(*v)).collect(),
                b.iter().zip(&hi).map(|(u, v)| u.max(*v)).collect(),
            )),
        };
        match &self.kind {
            DomainKind::Ball { .. } | DomainKind::Box { .. } => self.bounding_box(),
            DomainKind::FullSpace => None,
            DomainKind::Complement(d) => d.feature_box(),
            DomainKind::Union(ps) => ps.iter().fold(None, |acc, p| merge(acc, p.feature_box())),
            DomainKind::Difference(a, b) => merge(a.feature_box(), b.feature_box()),
        }
    }

    /// Axis-aligned bounding box, `None` for unbounded (or empty) regions.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            DomainKind::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            DomainKind::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            DomainKind::FullSpace | DomainKind::Complement(_) => None,
            DomainKind::Union(ps) => {
                let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
                for p in ps {
                    let (lo, hi) = p.bounding_box()?;
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((a, b)) => (
                            a.iter().zip(&lo).map(|(u, v)| u.min(*v)).collect(),
                            b.iter().zip(&hi).map(|(u, v)| u.max(*v)).collect(),
                        ),
                    });
                }
                acc
            }
            DomainKind::Difference(a, _) => a.bounding_box(),
        }
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(x, y) ∈ Z`.
pub fn in_interaction_set(z: &InteractionSet, x: &[f64], y: &[f64]) -> Result<bool> {
    z.contains_pair(x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Dirichlet,
    Restricted,
    Semirestricted,
    General,
}

/// The pair `(U1, U2)` with the reference domain `Omega ⊆ U1 ∩ U2`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionSet {
    u1: DomainSpec,
    u2: DomainSpec,
    omega: DomainSpec,
    preset: Preset,
}

impl InteractionSet {
    /// `U1 = U2 = R^n`: the full-space operator.
    pub fn dirichlet(omega: DomainSpec) -> Self {
        let n = omega.dim();
        Self { u1: DomainSpec::full_space(n), u2: DomainSpec::full_space(n), omega, preset: Preset::Dirichlet }
    }

    /// `U1 = U2 = Omega`: the regional operator.
    pub fn restricted(omega: DomainSpec) -> Self {
        Self { u1: omega.clone(), u2: omega.clone(), omega, preset: Preset::Restricted }
    }

    /// `U1 = Omega, U2 = R^n`.
    pub fn semirestricted(omega: DomainSpec) -> Self {
        let n = omega.dim();
        Self { u1: omega.clone(), u2: DomainSpec::full_space(n), omega, preset: Preset::Semirestricted }
    }

    pub fn general(u1: DomainSpec, u2: DomainSpec, omega: DomainSpec) -> Result<Self> {
        check_dim(omega.dim(), u1.dim())?;
        check_dim(omega.dim(), u2.dim())?;
        Ok(Self { u1, u2, omega, preset: Preset::General })
    }

    pub fn u1(&self) -> &DomainSpec {
        &self.u1
    }
    pub fn u2(&self) -> &DomainSpec {
        &self.u2
    }
    pub fn omega(&self) -> &DomainSpec {
        &self.omega
    }
    pub fn preset(&self) -> Preset {
        self.preset
    }
    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn contains_pair(&self, x: &[f64], y: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        let (x1, x2) = (self.u1.contains_unchecked(x), self.u2.contains_unchecked(x));
        let (y1, y2) = (self.u1.contains_unchecked(y), self.u2.contains_unchecked(y));
        Ok((x1 && y2) || (x2 && y1))
    }

    /// Membership class of `x`: `(x ∈ U1, x ∈ U2)`.
    pub(crate) fn class_of(&self, x: &[f64]) -> (bool, bool) {
        (self.u1.contains_unchecked(x), self.u2.contains_unchecked(x))
    }

    /// The section `{y : (x, y) ∈ Z}` for a point of the given class.
    pub(crate) fn section_for_class(&self, class: (bool, bool)) -> DomainSpec {
        match class {
            (true, true) => self.union_domain(),
            (true, false) => self.u2.clone(),
            (false, true) => self.u1.clone(),
            (false, false) => DomainSpec::empty(self.dim()),
        }
    }

    pub fn section(&self, x: &[f64]) -> Result<DomainSpec> {
        check_dim(self.dim(), x.len())?;
        Ok(self.section_for_class(self.class_of(x)))
    }

    /// `U1 ∪ U2`.
    pub fn union_domain(&self) -> DomainSpec {
        if self.u1 == self.u2 || self.u2.is_full_space() && self.u1.is_full_space() {
            return self.u1.clone();
        }
        if self.u1.is_full_space() || self.u2.is_full_space() {
            return DomainSpec::full_space(self.dim());
        }
        DomainSpec::union(vec![self.u1.clone(), self.u2.clone()]).expect("dims checked")
    }

    /// Checks `Omega ⊆ U1 ∩ U2` on the given sample points.
    pub fn validate_on(&self, points: &[Vec<f64>]) -> Result<()> {
        for x in points {
            if self.omega.contains(x)? && !(self.u1.contains_unchecked(x) && self.u2.contains_unchecked(x)) {
                return Err(invalid(format!("Omega is not contained in U1 ∩ U2 at {x:?}")));
            }
        }
        Ok(())
    }

    /// Sampled check of `Z ⊆ other`.
    pub fn is_subset_of(&self, other: &InteractionSet, points: &[Vec<f64>]) -> bool {
        let stride = (points.len() / 150).max(1);
        let sample: Vec<&Vec<f64>> = points.iter().step_by(stride).collect();
        sample.iter().all(|x| {
            sample.iter().all(|y| {
                !self.contains_pair(x, y).unwrap_or(false) || other.contains_pair(x, y).unwrap_or(false)
            })
        })
    }
}
