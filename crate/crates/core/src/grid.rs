//! Sampled functions on a lattice together with a far-field model.

use serde::{Deserialize, Serialize};

use crate::domain::{norm, DomainSpec};
use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;

/// Behaviour of a function outside the lattice box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FarField {
    CompactSupport,
    Constant { c: f64 },
    /// `c |x|^{-q}`
    PowerDecay { c: f64, q: f64 },
}

impl FarField {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            FarField::CompactSupport => 0.0,
            FarField::Constant { c } => c,
            FarField::PowerDecay { c, q } => c * norm(x).powf(-q),
        }
    }

    /// Power-law terms `(coef, q)` with `value = Σ coef |x|^{-q}`.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match *self {
            FarField::CompactSupport => vec![],
            FarField::Constant { c } if c == 0.0 => vec![],
            FarField::Constant { c } => vec![(c, 0.0)],
            FarField::PowerDecay { c, .. } if c == 0.0 => vec![],
            FarField::PowerDecay { c, q } => vec![(c, q)],
        }
    }

    /// Limit of the model at infinity.
    pub fn infimum(&self) -> f64 {
        match *self {
            FarField::Constant { c } => c,
            FarField::CompactSupport | FarField::PowerDecay { .. } => 0.0,
        }
    }

    fn part(&self, sign: Sign) -> FarField {
        let keep = |c: f64| match sign {
            Sign::Plus => c.max(0.0),
            Sign::Minus => (-c).max(0.0),
        };
        match *self {
            FarField::CompactSupport => FarField::CompactSupport,
            FarField::Constant { c } => FarField::Constant { c: keep(c) },
            FarField::PowerDecay { c, q } => FarField::PowerDecay { c: keep(c), q },
        }
    }

    fn scaled(&self, a: f64) -> FarField {
        match *self {
            FarField::CompactSupport => FarField::CompactSupport,
            FarField::Constant { c } => FarField::Constant { c: a * c },
            FarField::PowerDecay { c, q } => FarField::PowerDecay { c: a * c, q },
        }
    }

    fn sum(&self, other: &FarField) -> Result<FarField> {
        use FarField::*;
        Ok(match (*self, *other) {
            (CompactSupport, f) | (f, CompactSupport) => f,
            (Constant { c: a }, Constant { c: b }) => Constant { c: a + b },
            (PowerDecay { c: a, q: p }, PowerDecay { c: b, q }) if (p - q).abs() < 1e-14 => PowerDecay { c: a + b, q },
            (Constant { c }, PowerDecay { c: 0.0, .. }) | (PowerDecay { c: 0.0, .. }, Constant { c }) => Constant { c },
            (PowerDecay { c: 0.0, .. }, f) | (f, PowerDecay { c: 0.0, .. }) => f,
            _ => return Err(invalid("far-field models cannot be combined")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    lattice: Lattice,
    values: Vec<f64>,
    farfield: FarField,
}

impl GridFunction {
    pub fn new(lattice: Lattice, values: Vec<f64>, farfield: FarField) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::DimensionMismatch { expected: lattice.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at node {i}")));
        }
        match farfield {
            FarField::Constant { c } if !c.is_finite() => return Err(invalid("far-field constant must be finite")),
            FarField::PowerDecay { c, q } if !(q > 0.0) || !c.is_finite() || !q.is_finite() => {
                return Err(invalid("power decay needs q > 0"))
            }
            _ => {}
        }
        if matches!(farfield, FarField::PowerDecay { .. }) && !lattice.in_cells(&vec![0.0; lattice.dim()]) {
            return Err(invalid("power-decay far field requires the origin inside the lattice box"));
        }
        Ok(Self { lattice, values, farfield })
    }

    pub fn from_fn(lattice: Lattice, farfield: FarField, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..lattice.len()).map(|i| f(&lattice.point(i))).collect();
        Self::new(lattice, values, farfield)
    }

    pub fn zeros(lattice: Lattice) -> Self {
        let n = lattice.len();
        Self { lattice, values: vec![0.0; n], farfield: FarField::CompactSupport }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn farfield(&self) -> FarField {
        self.farfield
    }
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Value at an arbitrary point: multilinear inside the node hull, far-field
    /// model outside the cell union.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        if !self.lattice.in_cells(x) {
            return self.farfield.value(x);
        }
        if let Some(v) = self.lattice.interpolate(&self.values, x) {
            return v;
        }
        // between the outermost nodes and the cell edge: nearest node
        let idx: Vec<usize> = (0..self.dim())
            .map(|k| {
                let t = ((x[k] - self.lattice.lo()[k]) / self.lattice.h()).round();
                t.clamp(0.0, (self.lattice.shape()[k] - 1) as f64) as usize
            })
            .collect();
        self.values[self.lattice.flat(&idx)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|v| f(*v)).collect();
        let far = match self.farfield {
            FarField::CompactSupport if f(0.0) == 0.0 => FarField::CompactSupport,
            FarField::Constant { c } => FarField::Constant { c: f(c) },
            FarField::CompactSupport => FarField::Constant { c: f(0.0) },
            FarField::PowerDecay { .. } => return Err(invalid("map is undefined on power-decay far fields")),
        };
        Self::new(self.lattice.clone(), values, far)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            farfield: self.farfield.scaled(a),
        }
    }

    /// `a * self + b * other` on a shared lattice.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if !self.lattice.same_as(&other.lattice) {
            return Err(Error::LatticeMismatch("operands live on different lattices".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(u, v)| a * u + b * v).collect();
        let far = self.farfield.scaled(a).sum(&other.farfield.scaled(b))?;
        Self::new(self.lattice.clone(), values, far)
    }

    /// Pointwise product (far field compact unless both are constants).
    pub fn product(&self, other: &GridFunction) -> Result<Self> {
        if !self.lattice.same_as(&other.lattice) {
            return Err(Error::LatticeMismatch("operands live on different lattices".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(u, v)| u * v).collect();
        let far = match (self.farfield, other.farfield) {
            (FarField::Constant { c: a }, FarField::Constant { c: b }) => FarField::Constant { c: a * b },
            (FarField::CompactSupport, _) | (_, FarField::CompactSupport) => FarField::CompactSupport,
            (FarField::Constant { c: a }, FarField::PowerDecay { c, q }) | (FarField::PowerDecay { c, q }, FarField::Constant { c: a }) => {
                FarField::PowerDecay { c: a * c, q }
            }
            (FarField::PowerDecay { c: a, q: p }, FarField::PowerDecay { c: b, q }) => FarField::PowerDecay { c: a * b, q: p + q },
        };
        Self::new(self.lattice.clone(), values, far)
    }

    /// `u^+` or `u^-`, both nonnegative, with `u = u^+ - u^-`.
    pub fn truncate(&self, sign: Sign) -> Self {
        let values = self
            .values
            .iter()
            .map(|v| match sign {
                Sign::Plus => v.max(0.0),
                Sign::Minus => (-v).max(0.0),
            })
            .collect();
        Self { lattice: self.lattice.clone(), values, farfield: self.farfield.part(sign) }
    }

    /// Restriction to every other node.
    pub fn coarsen(&self) -> Result<Self> {
        let coarse = self.lattice.coarsen()?;
        let map = self.lattice.coarse_to_fine(&coarse);
        let values = map.iter().map(|&i| self.values[i]).collect();
        Ok(Self { lattice: coarse, values, farfield: self.farfield })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks that the function vanishes outside `d` shrunk by `margin`.
    pub fn check_support(&self, d: &DomainSpec, margin: f64) -> Result<()> {
        if self.farfield.terms().iter().any(|t| t.0 != 0.0) {
            return Err(Error::SupportViolation("far field is not compactly supported".into()));
        }
        let mut x = vec![0.0; self.dim()];
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                self.lattice.point_into(i, &mut x);
                if d.signed_distance(&x) > -margin {
                    return Err(Error::SupportViolation(format!("nonzero value at {x:?}")));
                }
            }
        }
        Ok(())
    }
}
