//! Smooth profiles and generated function families used by the verifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{dist2, DomainSpec};
use crate::error::{invalid, Result};
use crate::grid::{FarField, GridFunction};
use crate::lattice::Lattice;

/// `exp(1 - 1/(1 - t^2))` on `|t| < 1`, zero outside; equals 1 at 0.
pub fn mollifier(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Smooth step: 1 for `t ≤ 0`, 0 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (f(1.0 - t), f(t));
    a / (a + b)
}

/// A smooth nonnegative bump of radius `width` around `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "one")]
    pub height: f64,
}

fn one() -> f64 {
    1.0
}

impl Bump {
    pub fn new(center: Vec<f64>, width: f64) -> Self {
        Self { center, width, height: 1.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.height * mollifier(dist2(x, &self.center).sqrt() / self.width)
    }

    pub fn sample(&self, lat: &Lattice) -> Result<GridFunction> {
        GridFunction::from_fn(lat.clone(), FarField::CompactSupport, |x| self.eval(x))
    }
}

/// Bumps of widths `4h, 8h, 16h` centred at every node whose bump support
/// stays at least one cell inside `omega`.
pub fn standard_bumps(lat: &Lattice, omega: &DomainSpec) -> Vec<Bump> {
    let h = lat.h();
    let mut out = Vec::new();
    for w in [4.0 * h, 8.0 * h, 16.0 * h] {
        for i in 0..lat.len() {
            let x = lat.point(i);
            if omega.signed_distance(&x) <= -(w + h) {
                out.push(Bump::new(x, w));
            }
        }
    }
    out
}

/// Smooth plateau: 1 on `omega`, decaying to 0 within distance `ramp`.
pub fn plateau(lat: &Lattice, omega: &DomainSpec, ramp: f64) -> Result<GridFunction> {
    if !(ramp > 0.0) {
        return Err(invalid("ramp width must be positive"));
    }
    GridFunction::from_fn(lat.clone(), FarField::CompactSupport, |x| smooth_step(omega.signed_distance(x) / ramp))
}

/// A random sum of three signed smooth bumps inside the ball `B_radius(center)`.
pub fn random_smooth(lat: &Lattice, center: &[f64], radius: f64, rng: &mut impl Rng) -> Result<GridFunction> {
    let n = lat.dim();
    let mut bumps = Vec::new();
    for _ in 0..3 {
        let width = radius * rng.random_range(0.25..0.6);
        let reach = radius - width;
        let c: Vec<f64> = loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
                break v.iter().zip(center).map(|(a, c)| c + a * reach).collect();
            }
        };
        let height = rng.random_range(-1.0..1.0);
        bumps.push(Bump { center: c, width, height });
    }
    GridFunction::from_fn(lat.clone(), FarField::CompactSupport, |x| bumps.iter().map(|b| b.eval(x)).sum())
}

/// Deterministic generator for a family member.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
