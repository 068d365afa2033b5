//! Special functions used by the quadrature: Gamma, Riemann zeta, sphere
//! areas and the lattice defect constant that corrects punctured lattice sums
//! of `|t|^{2-n-2s}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Surface area of the unit sphere in `R^n` (`2` for `n = 1`).
pub fn unit_sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n) / n as f64
}

// B_2, B_4, ..., B_24
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Riemann zeta function for real arguments `x != 1`, by Euler-Maclaurin
/// summation (valid on the whole analytic continuation).
pub fn zeta(x: f64) -> f64 {
    assert!((x - 1.0).abs() > 1e-14, "zeta has a pole at 1");
    const N: usize = 16;
    let nf = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-x)).sum();
    sum += nf.powf(1.0 - x) / (x - 1.0) + 0.5 * nf.powf(-x);
    // rising product x (x+1) ... (x+2j-2) / (2j)!
    let mut rising = x;
    let mut fact = 2.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let j = j + 1;
        if j > 1 {
            let k = (2 * j - 3) as f64;
            rising *= (x + k) * (x + k + 1.0);
            fact *= (2 * j - 1) as f64 * (2 * j) as f64;
        }
        sum += b / fact * rising * nf.powf(-x - (2 * j) as f64 + 1.0);
    }
    sum
}

/// Defect constant `kappa(n, s)` of the punctured lattice sum:
///
/// `∫ |t|^{2-n-2s} psi(t) dt = h^n Σ_{j != 0} |jh|^{2-n-2s} psi(jh) + kappa h^{2-2s} psi(0) + O(h^{4-2s})`
///
/// for smooth `psi` with cubic symmetry. In one dimension it equals
/// `-2 zeta(2s - 1)`; in higher dimensions it is an Epstein zeta value,
/// evaluated by Gaussian regularization plus Richardson extrapolation.
pub fn lattice_defect(n: usize, s: f64) -> f64 {
    if n == 1 {
        return -2.0 * zeta(2.0 * s - 1.0);
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, s.to_bits());
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return *v;
    }
    let v = lattice_defect_regularized(n, s);
    cache.lock().unwrap().insert(key, v);
    v
}

/// Regularized evaluation of the lattice defect, usable in every dimension.
pub fn lattice_defect_regularized(n: usize, s: f64) -> f64 {
    let eps0 = if n >= 3 { 0.04 } else { 0.02 };
    let d = |eps: f64| regularized_difference(n, s, eps);
    let (d1, d2, d4) = (d(eps0), d(eps0 / 2.0), d(eps0 / 4.0));
    (8.0 * d4 - 6.0 * d2 + d1) / 3.0
}

fn regularized_difference(n: usize, s: f64, eps: f64) -> f64 {
    let beta = 2.0 - n as f64 - 2.0 * s;
    let half = (n as f64 + beta) / 2.0;
    let integral = unit_sphere_area(n) * gamma(half) / (2.0 * eps.powf(half));
    let m = (44.0 / eps).sqrt().ceil() as i64;
    let mut sum = 0.0;
    match n {
        2 => {
            for a in -m..=m {
                for b in -m..=m {
                    let r2 = (a * a + b * b) as f64;
                    if r2 > 0.0 {
                        sum += r2.powf(beta / 2.0) * (-eps * r2).exp();
                    }
                }
            }
        }
        3 => {
            for a in -m..=m {
                for b in -m..=m {
                    let mut row = 0.0;
                    for c in -m..=m {
                        let r2 = (a * a + b * b + c * c) as f64;
                        if r2 > 0.0 {
                            row += r2.powf(beta / 2.0) * (-eps * r2).exp();
                        }
                    }
                    sum += row;
                }
            }
        }
        _ => {
            for a in 1..=m {
                let r2 = (a * a) as f64;
                sum += 2.0 * r2.powf(beta / 2.0) * (-eps * r2).exp();
            }
        }
    }
    integral - sum
}

/// `∫_{|t| < delta} |t|^{2-n-2s} dt`.
pub fn ball_moment(n: usize, s: f64, delta: f64) -> f64 {
    unit_sphere_area(n) * delta.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((zeta(0.0) + 0.5).abs() < 1e-13);
        assert!((zeta(-1.0) + 1.0 / 12.0).abs() < 1e-13);
        assert!((zeta(0.5) + 1.4603545088095868).abs() < 1e-12);
        assert!((zeta(-0.5) + 0.207886224977355).abs() < 1e-12);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn regularized_defect_matches_zeta_in_one_dimension() {
        for s in [0.1, 0.25, 0.5, 0.7, 0.9] {
            let exact = -2.0 * zeta(2.0 * s - 1.0);
            let reg = lattice_defect_regularized(1, s);
            assert!((exact - reg).abs() < 1e-6, "s={s}: {exact} vs {reg}");
        }
    }

    #[test]
    fn defect_at_half_is_one_cell() {
        // psi == 1, s = 1/2, n = 1: the punctured sum misses exactly one cell.
        assert!((lattice_defect(1, 0.5) - 1.0).abs() < 1e-13);
    }
}
