//! Python bindings: one-dimensional lattices given as `(lo, h, values)`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nonlocal_mp::barrier;
use nonlocal_mp::domain::{DomainSpec, InteractionSet};
use nonlocal_mp::error::Error;
use nonlocal_mp::forms;
use nonlocal_mp::grid::{FarField, GridFunction};
use nonlocal_mp::kernel::{self, FracParams, QuadratureScheme};
use nonlocal_mp::lattice::Lattice;
use nonlocal_mp::levy;
use nonlocal_mp::operators;
use nonlocal_mp::spectral::{self, BoundaryCondition};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Divergent(_) | Error::SingularSystem(_) | Error::SearchFailed(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn grid(lo: f64, h: f64, values: Vec<f64>, far: f64) -> Result<GridFunction, Error> {
    let lat = Lattice::new(vec![lo], h, vec![values.len()])?;
    let farfield = if far == 0.0 { FarField::CompactSupport } else { FarField::Constant { c: far } };
    GridFunction::new(lat, values, farfield)
}

fn interaction(preset: &str, a: f64, b: f64) -> Result<InteractionSet, Error> {
    let omega = DomainSpec::interval(a, b)?;
    match preset {
        "dirichlet" => Ok(InteractionSet::dirichlet(omega)),
        "restricted" => Ok(InteractionSet::restricted(omega)),
        "semirestricted" => Ok(InteractionSet::semirestricted(omega)),
        other => Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
    }
}

#[pyfunction]
fn kernel_constant(n: usize, s: f64) -> PyResult<f64> {
    kernel::kernel_constant(n, s).map_err(to_py)
}

#[pyfunction]
fn bar_p_exponent(n: usize, s: f64) -> PyResult<f64> {
    kernel::bar_p_exponent(n, s).map_err(to_py)
}

/// `𝔏ˢ_Z u` at the given nodes; `Omega = (a, b)`.
#[pyfunction]
#[pyo3(signature = (values, lo, h, s, points, preset="dirichlet", a=-1.0, b=1.0, far=0.0))]
#[allow(clippy::too_many_arguments)]
fn apply_operator(values: Vec<f64>, lo: f64, h: f64, s: f64, points: Vec<f64>, preset: &str, a: f64, b: f64, far: f64) -> PyResult<Vec<f64>> {
    let run = || -> Result<Vec<f64>, Error> {
        let u = grid(lo, h, values, far)?;
        let z = interaction(preset, a, b)?;
        let p = FracParams::new(1, s)?;
        let q = QuadratureScheme::for_spacing(h);
        points.iter().map(|x| operators::general_pointwise(&u, &[*x], &z, &p, &q)).collect()
    };
    run().map_err(to_py)
}

/// `(value, error_estimate)` of `ℰ_s(u; G×G)` with `G = (a, b)`.
#[pyfunction]
#[pyo3(signature = (values, lo, h, s, a, b, far=0.0))]
fn energy(values: Vec<f64>, lo: f64, h: f64, s: f64, a: f64, b: f64, far: f64) -> PyResult<(f64, f64)> {
    let run = || -> Result<(f64, f64), Error> {
        let u = grid(lo, h, values, far)?;
        let g = DomainSpec::interval(a, b)?;
        let e = forms::energy(&u, &g, &g, None, &FracParams::new(1, s)?)?;
        Ok((e.value, e.error_estimate))
    };
    run().map_err(to_py)
}

/// Killing measure of `G = (a, b)` at `x` for the full-space operator.
#[pyfunction]
fn killing_measure(x: f64, a: f64, b: f64, s: f64) -> PyResult<f64> {
    let run = || -> Result<f64, Error> {
        let g = DomainSpec::interval(a, b)?;
        let z = InteractionSet::dirichlet(DomainSpec::full_space(1));
        forms::killing_measure(&[x], &g, &z, &FracParams::new(1, s)?, &QuadratureScheme::default())
    };
    run().map_err(to_py)
}

/// Barrier around `center`: returns `(lo, h, values)`.
#[pyfunction]
#[pyo3(signature = (center, inner_radius, outer_radius, s, delta=0.025))]
fn build_barrier(center: f64, inner_radius: f64, outer_radius: f64, s: f64, delta: f64) -> PyResult<(f64, f64, Vec<f64>)> {
    let run = || -> Result<(f64, f64, Vec<f64>), Error> {
        let q = QuadratureScheme { delta, ..Default::default() };
        let phi = barrier::build_barrier(&[center], inner_radius, outer_radius, &FracParams::new(1, s)?, &q)?;
        Ok((phi.lattice().lo()[0], phi.lattice().h(), phi.values().to_vec()))
    };
    run().map_err(to_py)
}

/// Spectral power of the Dirichlet (or Neumann) Laplacian on the lattice interval.
#[pyfunction]
#[pyo3(signature = (values, lo, h, s, modes, neumann=false))]
fn spectral_power(values: Vec<f64>, lo: f64, h: f64, s: f64, modes: usize, neumann: bool) -> PyResult<Vec<f64>> {
    let run = || -> Result<Vec<f64>, Error> {
        let u = grid(lo, h, values, 0.0)?;
        let bc = if neumann { BoundaryCondition::Neumann } else { BoundaryCondition::Dirichlet };
        Ok(spectral::spectral_1d(&u, bc, s, modes)?.values().to_vec())
    };
    run().map_err(to_py)
}

/// Monte Carlo killing rate at `x` for `G = (a, b)` against quadrature.
#[pyfunction]
#[pyo3(signature = (x, a, b, s, n_samples=100_000, seed=0))]
fn killing_rate_crosscheck<'py>(py: Python<'py>, x: f64, a: f64, b: f64, s: f64, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let g = DomainSpec::interval(a, b).map_err(to_py)?;
    let p = FracParams::new(1, s).map_err(to_py)?;
    let k = levy::killing_rate_crosscheck(&[x], &g, &p, n_samples, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mc_rate", k.mc_rate.value)?;
    d.set_item("mc_stderr", k.mc_rate.stderr)?;
    d.set_item("quadrature_rate", k.quadrature_rate)?;
    Ok(d)
}

/// Runs the command-line front end with the given arguments; returns the exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    let mut argv = vec!["nonlocal-mp".to_string()];
    argv.extend(args);
    nonlocal_mp::cli::run(argv)
}

#[pymodule]
fn nonlocal_mp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kernel_constant, m)?)?;
    m.add_function(wrap_pyfunction!(bar_p_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(apply_operator, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(killing_measure, m)?)?;
    m.add_function(wrap_pyfunction!(build_barrier, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_power, m)?)?;
    m.add_function(wrap_pyfunction!(killing_rate_crosscheck, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
