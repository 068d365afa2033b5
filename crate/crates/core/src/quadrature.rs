//! Lattice quadrature engine shared by the operators and the forms: midpoint
//! rows with the lattice-defect near-field correction, exact exterior
//! integrals outside the lattice box, and cell membership classes.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::kernel::{CorrectionMode, QuadratureScheme};
use crate::lattice::Lattice;
use crate::special::{ball_moment, lattice_defect, unit_ball_volume};

/// Gauss-Legendre nodes and weights on `(0, 1)`.
pub(crate) fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for k in 0..m {
        let mut x = (PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs.push(0.5 * (1.0 - x));
        ws.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

struct SphereRule {
    dirs: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn sphere_rule(n: usize) -> &'static SphereRule {
    static RULES: [OnceLock<SphereRule>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    RULES[n - 1].get_or_init(|| match n {
        1 => SphereRule { dirs: vec![vec![-1.0], vec![1.0]], weights: vec![1.0, 1.0] },
        2 => {
            let m = 2048;
            let dirs = (0..m)
                .map(|k| {
                    let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            SphereRule { dirs, weights: vec![2.0 * PI / m as f64; m] }
        }
        _ => {
            let (zs, zw) = gauss_legendre_unit(64);
            let m = 128;
            let mut dirs = Vec::new();
            let mut weights = Vec::new();
            for (z, wz) in zs.iter().zip(&zw) {
                let c = 2.0 * z - 1.0;
                let r = (1.0 - c * c).sqrt();
                for k in 0..m {
                    let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    dirs.push(vec![r * t.cos(), r * t.sin(), c]);
                    weights.push(2.0 * wz * 2.0 * PI / m as f64);
                }
            }
            SphereRule { dirs, weights }
        }
    })
}

/// Errors unless every bounded feature of `region` lies inside the lattice
/// cells, so that membership outside the box equals `contains_infinity`.
pub(crate) fn check_features(lat: &Lattice, region: &DomainSpec) -> Result<()> {
    if let Some((lo, hi)) = region.feature_box() {
        let h = lat.h();
        let top = lat.hi();
        for k in 0..lat.dim() {
            if lo[k] < lat.lo()[k] - 0.5 * h - 1e-12 || hi[k] > top[k] + 0.5 * h + 1e-12 {
                return Err(Error::LatticeMismatch("lattice box does not cover the bounded parts of a region".into()));
            }
        }
    }
    Ok(())
}

pub(crate) struct RowEngine<'a> {
    lat: &'a Lattice,
    n: usize,
    s: f64,
    h: f64,
    hn: f64,
    kappa: f64,
    mode: CorrectionMode,
    table: Vec<f64>,
    strides: Vec<usize>,
    midx: Vec<usize>,
    near: Vec<Vec<isize>>,
    cell_lo: Vec<f64>,
    cell_hi: Vec<f64>,
}

impl<'a> RowEngine<'a> {
    pub(crate) fn new(lat: &'a Lattice, s: f64, q: &QuadratureScheme) -> Result<Self> {
        let n = lat.dim();
        if n > 3 {
            return Err(crate::error::invalid("dimension above 3 is not supported"));
        }
        let h = lat.h();
        let shape = lat.shape().to_vec();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        let expo = -(n as f64 + 2.0 * s) / 2.0;
        let table = (0..lat.len())
            .map(|i| {
                let idx = lat.multi_index(i);
                let r2: f64 = idx.iter().map(|d| (*d as f64 * h).powi(2)).sum();
                if r2 == 0.0 {
                    0.0
                } else {
                    r2.powf(expo)
                }
            })
            .collect();
        let midx = (0..lat.len()).flat_map(|i| lat.multi_index(i)).collect();
        let m = (q.delta / h).ceil() as usize;
        let side = 2 * m + 1;
        let mut near = Vec::new();
        for c in 0..side.pow(n as u32) {
            let mut r = c;
            let mut off = vec![0isize; n];
            for o in off.iter_mut() {
                *o = (r % side) as isize - m as isize;
                r /= side;
            }
            let d2: f64 = off.iter().map(|v| (*v as f64 * h).powi(2)).sum();
            if d2 > 0.0 && d2.sqrt() < q.delta - 1e-9 * h {
                near.push(off);
            }
        }
        let kappa = if q.correction_mode == CorrectionMode::None { 0.0 } else { lattice_defect(n, s) };
        let cell_lo = lat.lo().iter().map(|v| v - 0.5 * h).collect();
        let cell_hi = lat.hi().iter().map(|v| v + 0.5 * h).collect();
        Ok(Self { lat, n, s, h, hn: lat.cell_volume(), kappa, mode: q.correction_mode, table, strides, midx, near, cell_lo, cell_hi })
    }

    #[inline]
    pub(crate) fn kernel(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.midx[i * self.n..(i + 1) * self.n], &self.midx[j * self.n..(j + 1) * self.n]);
        let mut t = 0;
        for k in 0..self.n {
            t += a[k].abs_diff(b[k]) * self.strides[k];
        }
        self.table[t]
    }

    pub(crate) fn lattice(&self) -> &Lattice {
        self.lat
    }

    fn stencil(&self, i: usize) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            out.push(self.lat.axis_neighbor(i, k, 1)?);
            out.push(self.lat.axis_neighbor(i, k, -1)?);
        }
        Some(out)
    }

    /// Coefficients `a_j` with `∫_S f(y) K(x_i, y) dy ≈ Σ_j a_j f_j` over the
    /// lattice box, for region weights `w` (cell occupancy of `S`).
    pub(crate) fn row_weights(&self, i: usize, w: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = w[j] * self.hn * self.kernel(i, j);
        }
        out[i] = 0.0;
        if self.mode == CorrectionMode::None {
            return;
        }
        let Some(stencil) = self.stencil(i) else { return };
        let two_n = 2.0 * self.n as f64;
        if self.mode == CorrectionMode::SymmetricPair && w[i] == 1.0 {
            let paired = self.near.iter().all(|off| {
                let neg: Vec<isize> = off.iter().map(|v| -v).collect();
                matches!((self.lat.offset(i, off), self.lat.offset(i, &neg)),
                    (Some(a), Some(b)) if w[a] == 1.0 && w[b] == 1.0)
            });
            if paired {
                let c = self.kappa * self.h.powf(-2.0 * self.s) / two_n;
                for &j in &stencil {
                    out[j] += c;
                }
                out[i] -= two_n * c;
                return;
            }
        }
        // Taylor fallback: drop the near cells and integrate the second-order
        // term over a ball of the same volume.
        let mut occ = w[i];
        let mut count = 1usize;
        for off in &self.near {
            if let Some(j) = self.lat.offset(i, off) {
                occ += w[j];
                out[j] = 0.0;
            }
            count += 1;
        }
        let occ = occ / count as f64;
        let r_eff = (count as f64 * self.hn / unit_ball_volume(self.n)).powf(1.0 / self.n as f64);
        let c = occ * ball_moment(self.n, self.s, r_eff) / (two_n * self.h * self.h);
        for &j in &stencil {
            out[j] += c;
        }
        out[i] -= two_n * c;
    }

    /// `∫_{outside the lattice cells} |y|^{-q} |x-y|^{-(n+2s)} dy` for `x`
    /// inside the cells.
    pub(crate) fn exterior(&self, x: &[f64], q: f64) -> f64 {
        exterior_integral(x, &self.cell_lo, &self.cell_hi, self.s, q)
    }
}

/// Exterior integral of the box `[lo, hi]` seen from an interior point, by
/// radial substitution along each direction of a sphere rule.
pub(crate) fn exterior_integral(x: &[f64], lo: &[f64], hi: &[f64], s: f64, q: f64) -> f64 {
    let rule = sphere_rule(x.len());
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (vs, vw) = GL.get_or_init(|| gauss_legendre_unit(24));
    let mut acc = 0.0;
    let mut y = vec![0.0; x.len()];
    for (dir, w) in rule.dirs.iter().zip(&rule.weights) {
        let mut rho = f64::INFINITY;
        for k in 0..x.len() {
            if dir[k] > 1e-300 {
                rho = rho.min((hi[k] - x[k]) / dir[k]);
            } else if dir[k] < -1e-300 {
                rho = rho.min((lo[k] - x[k]) / dir[k]);
            }
        }
        let base = w * rho.powf(-2.0 * s);
        if q == 0.0 {
            acc += base / (2.0 * s);
        } else {
            let p = 2.0 * s + q;
            let mut inner = 0.0;
            for (v, vwt) in vs.iter().zip(vw) {
                let t = v.powf(1.0 / p);
                for k in 0..x.len() {
                    y[k] = t * x[k] + rho * dir[k];
                }
                inner += vwt * y.iter().map(|c| c * c).sum::<f64>().powf(-q / 2.0);
            }
            acc += base / p * inner;
        }
    }
    acc
}

/// `∫_{outside [lo,hi]} |y|^{-q} / (1 + |y|^{n+2s}) dy` for a box containing
/// the origin.
pub(crate) fn exterior_weighted_l1(lo: &[f64], hi: &[f64], s: f64, q: f64) -> f64 {
    let n = lo.len();
    let rule = sphere_rule(n);
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (vs, vw) = GL.get_or_init(|| gauss_legendre_unit(48));
    let p = 2.0 * s + q;
    let order = n as f64 + 2.0 * s;
    let mut acc = 0.0;
    for (dir, w) in rule.dirs.iter().zip(&rule.weights) {
        let mut rho = f64::INFINITY;
        for k in 0..n {
            if dir[k] > 1e-300 {
                rho = rho.min(hi[k] / dir[k]);
            } else if dir[k] < -1e-300 {
                rho = rho.min(lo[k] / dir[k]);
            }
        }
        let inner: f64 = vs
            .iter()
            .zip(vw)
            .map(|(v, vwt)| vwt / (v.powf(1.0 / p).powf(order) + rho.powf(order)))
            .sum();
        acc += w * rho.powf(n as f64 - q) / p * inner;
    }
    acc
}

/// Membership bit pattern of a point with respect to up to eight domains.
pub(crate) type ClassBits = u8;

/// Per-node distribution of sub-cell membership classes. Pure nodes carry a
/// single class with weight 1.
pub(crate) fn cell_classes(lat: &Lattice, domains: &[&DomainSpec]) -> Vec<Vec<(ClassBits, f64)>> {
    let n = lat.dim();
    let m: usize = if n <= 2 { 4 } else { 2 };
    let total = m.pow(n as u32);
    let reach = 0.5 * lat.h() * (n as f64).sqrt() * (1.0 + 1e-9);
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    (0..lat.len())
        .map(|i| {
            lat.point_into(i, &mut x);
            let pure = domains.iter().all(|d| d.is_full_space() || d.is_empty_union() || d.signed_distance(&x).abs() > reach);
            if pure {
                return vec![(bits(domains, &x), 1.0)];
            }
            let mut counts = [0usize; 256];
            for sub in 0..total {
                let mut r = sub;
                for k in 0..n {
                    let a = r % m;
                    r /= m;
                    y[k] = x[k] + ((a as f64 + 0.5) / m as f64 - 0.5) * lat.h();
                }
                counts[bits(domains, &y) as usize] += 1;
            }
            counts
                .iter()
                .enumerate()
                .filter(|(_, c)| **c > 0)
                .map(|(b, c)| (b as ClassBits, *c as f64 / total as f64))
                .collect()
        })
        .collect()
}

pub(crate) fn bits(domains: &[&DomainSpec], x: &[f64]) -> ClassBits {
    domains.iter().enumerate().fold(0, |acc, (k, d)| if d.contains_unchecked(x) { acc | (1 << k) } else { acc })
}

pub(crate) fn bits_at_infinity(domains: &[&DomainSpec]) -> ClassBits {
    domains.iter().enumerate().fold(0, |acc, (k, d)| if d.contains_infinity() { acc | (1 << k) } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((v - 0.1).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exterior_matches_closed_form_in_1d() {
        let s = 0.3;
        let v = exterior_integral(&[0.2], &[-1.0], &[2.0], s, 0.0);
        let exact = (1.2f64.powf(-2.0 * s) + 1.8f64.powf(-2.0 * s)) / (2.0 * s);
        assert!((v - exact).abs() < 1e-14);
        // decay |y|^{-1} from the centre: ∫_1^∞ y^{-1} y^{-1-2s} dy twice
        let v = exterior_integral(&[0.0], &[-1.0], &[1.0], s, 1.0);
        assert!((v - 2.0 / (1.0 + 2.0 * s)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn exterior_of_square_against_disk_bounds() {
        // the square [-1,1]^2 lies between the disks of radius 1 and sqrt 2
        let s = 0.5;
        let v = exterior_integral(&[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], s, 0.0);
        let disk = |r: f64| 2.0 * PI * r.powf(-2.0 * s) / (2.0 * s);
        assert!(v < disk(1.0) && v > disk(2f64.sqrt()));
        // s = 1/2: ∫ max(|cos|, |sin|) dθ = 4 sqrt 2
        let exact = 4.0 * 2f64.sqrt();
        assert!((v - exact).abs() / exact < 1e-5, "{v} {exact}");
    }
}
