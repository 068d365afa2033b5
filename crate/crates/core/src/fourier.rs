//! Spectral-multiplier oracle: FFT, multiply by `|ξ|^{2s}`, inverse FFT.
//!
//! The lattice data is zero-padded to a power of two at least four times its
//! size per axis. The periodic result differs from the whole-space operator by
//! the contribution of the periodic images, `-C m0 Σ_{k≠0} |kL|^{-(n+2s)}`
//! to leading order (`m0` is the mass of `u`). That term is added back: a
//! direct sum over nearby images plus the exact exterior integral beyond them.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{FarField, GridFunction};
use crate::kernel::FracParams;
use crate::quadrature::exterior_integral;

/// `(-Δ)^s u` on the lattice of `u` through the Fourier symbol.
pub fn fourier_symbol_oracle(u: &GridFunction, p: &FracParams) -> Result<GridFunction> {
    if u.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: u.dim() });
    }
    if !u.farfield().terms().is_empty() {
        return Err(Error::SupportViolation("the oracle needs compactly supported data".into()));
    }
    let lat = u.lattice().clone();
    let scale = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(GridFunction::zeros(lat));
    }
    let shape = lat.shape().to_vec();
    for i in 0..lat.len() {
        let idx = lat.multi_index(i);
        let on_edge = idx.iter().zip(&shape).any(|(k, m)| *k == 0 || *k + 1 == *m);
        if on_edge && u.values()[i].abs() >= 1e-10 * scale {
            return Err(Error::SupportViolation("data reaches the lattice box edge".into()));
        }
    }

    let n = p.n;
    let h = lat.h();
    let padded: Vec<usize> = shape.iter().map(|m| (4 * m).next_power_of_two()).collect();
    let total: usize = padded.iter().product();
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    let pflat = |idx: &[usize]| idx.iter().zip(&padded).fold(0, |acc, (k, m)| acc * m + k);
    for (i, v) in u.values().iter().enumerate() {
        buf[pflat(&lat.multi_index(i))] = Complex64::new(*v, 0.0);
    }

    let mut planner = FftPlanner::new();
    for axis in 0..n {
        let fft = planner.plan_fft_forward(padded[axis]);
        transform_axis(&mut buf, &padded, axis, &*fft);
    }
    let mut idx = vec![0usize; n];
    for (k, z) in buf.iter_mut().enumerate() {
        let mut r = k;
        for a in (0..n).rev() {
            idx[a] = r % padded[a];
            r /= padded[a];
        }
        let mut xi2 = 0.0;
        for a in 0..n {
            let m = padded[a];
            let f = if idx[a] <= m / 2 { idx[a] as f64 } else { idx[a] as f64 - m as f64 };
            let xi = 2.0 * PI * f / (m as f64 * h);
            xi2 += xi * xi;
        }
        *z *= xi2.powf(p.s);
    }
    for axis in 0..n {
        let ifft = planner.plan_fft_inverse(padded[axis]);
        transform_axis(&mut buf, &padded, axis, &*ifft);
    }
    let norm = total as f64;

    let mass = u.values().iter().sum::<f64>() * lat.cell_volume();
    let periods: Vec<f64> = padded.iter().map(|m| *m as f64 * h).collect();
    let reach = match n {
        1 => 8,
        2 => 4,
        _ => 2,
    };
    let images = p.c_ns * mass * image_sum(&periods, reach, p);
    let values = (0..lat.len()).map(|i| buf[pflat(&lat.multi_index(i))].re / norm + images).collect();
    GridFunction::new(lat, values, FarField::CompactSupport)
}

/// `Σ_{k≠0} |kL|^{-(n+2s)}`: nearby images summed directly, the remainder
/// integrated.
fn image_sum(periods: &[f64], reach: i64, p: &FracParams) -> f64 {
    let n = periods.len();
    let cell: f64 = periods.iter().product();
    let mut acc = 0.0;
    let mut k = vec![-reach; n];
    loop {
        if k.iter().any(|v| *v != 0) {
            let d2: f64 = (0..n).map(|a| (k[a] as f64 * periods[a]).powi(2)).sum();
            acc += d2.powf(-p.order() / 2.0);
        }
        let mut a = 0;
        while a < n {
            k[a] += 1;
            if k[a] <= reach {
                break;
            }
            k[a] = -reach;
            a += 1;
        }
        if a == n {
            break;
        }
    }
    let lo: Vec<f64> = periods.iter().map(|l| -(reach as f64 + 0.5) * l).collect();
    let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
    acc + exterior_integral(&vec![0.0; n], &lo, &hi, p.s, 0.0) / cell
}

fn transform_axis(buf: &mut [Complex64], shape: &[usize], axis: usize, fft: &dyn rustfft::Fft<f64>) {
    let len = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * len * stride + inner;
            for (k, z) in line.iter_mut().enumerate() {
                *z = buf[base + k * stride];
            }
            fft.process(&mut line);
            for (k, z) in line.iter().enumerate() {
                buf[base + k * stride] = *z;
            }
        }
    }
}
