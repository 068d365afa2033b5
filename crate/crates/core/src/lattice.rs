//! Node-centered uniform lattices. Node `i` owns the cell `x_i + [-h/2, h/2]^n`;
//! the union of cells is the "lattice box" used by all quadratures.

use crate::domain::{DomainSpec, InteractionSet};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    lo: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    far_field: bool,
}

/// Host-region flags of a lattice node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PointFlags {
    pub in_omega: bool,
    pub in_u1: bool,
    pub in_u2: bool,
    pub in_g: bool,
    /// Within `h/2` of `∂Omega`; excluded from pointwise evaluation.
    pub boundary_adjacent: bool,
}

impl Lattice {
    pub fn new(lo: Vec<f64>, h: f64, shape: Vec<usize>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("spacing must be positive, got {h}")));
        }
        if lo.is_empty() || lo.len() != shape.len() || shape.iter().any(|&m| m == 0) {
            return Err(invalid("lattice needs a positive point count in every dimension"));
        }
        Ok(Self { lo, h, shape, far_field: false })
    }

    /// Smallest lattice anchored at `lo` with spacing `h` whose nodes reach `hi`.
    pub fn from_box(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let shape = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| {
                let steps = (b - a) / h;
                let r = steps.round();
                let k = if (steps - r).abs() < 1e-9 * steps.abs().max(1.0) { r } else { steps.ceil() };
                k.max(0.0) as usize + 1
            })
            .collect();
        Self::new(lo.to_vec(), h, shape)
    }

    /// Lattice covering `d` (or the truncation box for unbounded `d`) plus a halo.
    pub fn build_grid(d: &DomainSpec, h: f64, halo: f64, truncation: Option<(&[f64], &[f64])>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("spacing must be positive"));
        }
        let (lo, hi, far) = match (d.bounding_box(), truncation) {
            (_, Some((lo, hi))) => {
                if lo.len() != d.dim() || hi.len() != d.dim() {
                    return Err(Error::DimensionMismatch { expected: d.dim(), got: lo.len() });
                }
                (lo.to_vec(), hi.to_vec(), d.bounding_box().is_none())
            }
            (Some((lo, hi)), None) => (lo, hi, false),
            (None, None) => return Err(Error::Unbounded),
        };
        let lo: Vec<f64> = lo.iter().map(|v| v - halo).collect();
        let hi: Vec<f64> = hi.iter().map(|v| v + halo).collect();
        let mut lat = Self::from_box(&lo, &hi, h)?;
        lat.far_field = far;
        Ok(lat)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.shape).map(|(a, m)| a + (*m as f64 - 1.0) * self.h).collect()
    }
    /// Set when the lattice truncates an unbounded region.
    pub fn far_field_flag(&self) -> bool {
        self.far_field
    }
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = i % self.shape[k];
            i /= self.shape[k];
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, m)| acc * m + i)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(i, &mut x);
        x
    }

    pub fn point_into(&self, mut i: usize, x: &mut [f64]) {
        for k in (0..self.dim()).rev() {
            let j = i % self.shape[k];
            i /= self.shape[k];
            x[k] = self.lo[k] + j as f64 * self.h;
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Node reached from `i` by an integer offset, if inside the lattice.
    pub fn offset(&self, i: usize, off: &[isize]) -> Option<usize> {
        let mut idx = self.multi_index(i);
        for k in 0..self.dim() {
            let v = idx[k] as isize + off[k];
            if v < 0 || v >= self.shape[k] as isize {
                return None;
            }
            idx[k] = v as usize;
        }
        Some(self.flat(&idx))
    }

    pub fn axis_neighbor(&self, i: usize, axis: usize, step: isize) -> Option<usize> {
        let mut off = vec![0isize; self.dim()];
        off[axis] = step;
        self.offset(i, &off)
    }

    /// Index of the node at `x` (within `1e-9 h`).
    pub fn node_index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut idx = vec![0; self.dim()];
        for k in 0..self.dim() {
            let t = (x[k] - self.lo[k]) / self.h;
            let r = t.round();
            if (t - r).abs() > 1e-9 || r < 0.0 || r >= self.shape[k] as f64 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(self.flat(&idx))
    }

    /// Whether `x` lies in the union of cells.
    pub fn in_cells(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|k| {
            let t = (x[k] - self.lo[k]) / self.h;
            t >= -0.5 && t < self.shape[k] as f64 - 0.5
        })
    }

    /// Multilinear interpolation of node values; `None` outside the node hull.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Option<f64> {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for k in 0..n {
            let t = (x[k] - self.lo[k]) / self.h;
            let last = (self.shape[k] - 1) as f64;
            if t < -1e-12 || t > last + 1e-12 {
                return None;
            }
            let t = t.clamp(0.0, last);
            let b = (t.floor() as usize).min(self.shape[k].saturating_sub(2));
            base[k] = b;
            frac[k] = if self.shape[k] == 1 { 0.0 } else { t - b as f64 };
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for k in 0..n {
                let bit = (corner >> k) & 1;
                if bit == 1 {
                    if self.shape[k] == 1 {
                        w = 0.0;
                        break;
                    }
                    idx[k] += 1;
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * values[self.flat(&idx)];
            }
        }
        Some(acc)
    }

    /// Fraction of each node's cell lying inside `d`, by sub-cell sampling.
    pub fn occupancy(&self, d: &DomainSpec) -> Vec<f64> {
        let n = self.dim();
        if d.is_full_space() {
            return vec![1.0; self.len()];
        }
        if d.is_empty_union() {
            return vec![0.0; self.len()];
        }
        let m: usize = if n <= 2 { 4 } else { 2 };
        let reach = 0.5 * self.h * (n as f64).sqrt() * (1.0 + 1e-9);
        let total = m.pow(n as u32);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        (0..self.len())
            .map(|i| {
                self.point_into(i, &mut x);
                let sd = d.signed_distance(&x);
                if sd.abs() > reach {
                    return if d.contains_unchecked(&x) { 1.0 } else { 0.0 };
                }
                let mut inside = 0;
                for sub in 0..total {
                    let mut r = sub;
                    for k in 0..n {
                        let a = r % m;
                        r /= m;
                        y[k] = x[k] + ((a as f64 + 0.5) / m as f64 - 0.5) * self.h;
                    }
                    if d.contains_unchecked(&y) {
                        inside += 1;
                    }
                }
                inside as f64 / total as f64
            })
            .collect()
    }

    pub fn flags(&self, z: &InteractionSet, g: Option<&DomainSpec>) -> Vec<PointFlags> {
        (0..self.len())
            .map(|i| {
                let x = self.point(i);
                PointFlags {
                    in_omega: z.omega().contains_unchecked(&x),
                    in_u1: z.u1().contains_unchecked(&x),
                    in_u2: z.u2().contains_unchecked(&x),
                    in_g: g.map(|g| g.contains_unchecked(&x)).unwrap_or(false),
                    boundary_adjacent: z.omega().signed_distance(&x).abs() < 0.5 * self.h,
                }
            })
            .collect()
    }

    /// Every other node; requires an odd point count in each dimension.
    pub fn coarsen(&self) -> Result<Lattice> {
        if self.shape.iter().any(|m| m % 2 == 0 || *m < 3) {
            return Err(Error::LatticeMismatch("coarsening needs an odd point count >= 3 per dimension".into()));
        }
        let mut c = Self::new(self.lo.clone(), 2.0 * self.h, self.shape.iter().map(|m| (m + 1) / 2).collect())?;
        c.far_field = self.far_field;
        Ok(c)
    }

    /// Fine-lattice index of each coarse node.
    pub fn coarse_to_fine(&self, coarse: &Lattice) -> Vec<usize> {
        (0..coarse.len())
            .map(|c| {
                let idx: Vec<usize> = coarse.multi_index(c).iter().map(|k| 2 * k).collect();
                self.flat(&idx)
            })
            .collect()
    }

    pub fn same_as(&self, other: &Lattice) -> bool {
        self.shape == other.shape
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && self.lo.iter().zip(&other.lo).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}
