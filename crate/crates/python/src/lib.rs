//! Python bindings: the main types (spatial loops, ensemble samples) and
//! operations (fixed-point residuals, circulation, Monte Carlo loop
//! functional, totient law, rotation check) exposed in-process.
//!
//! Complex 3-vectors cross the boundary as lists of three (re, im) pairs;
//! real vectors as 3-tuples.

use mloop_core::euler::{EnsembleSampler, PairMeasure};
use mloop_core::init_measure::{single_link_integral, single_link_oracle, w_measure};
use mloop_core::loops::{
    circulation_scale, circulation_sum, make_circle_loop, make_fourier_loop, tensor_area,
};
use mloop_core::mle::{fixed_point_residual, integrate_mle, SimParams};
use mloop_core::number_theory::{ks_weighted, totient_sieve, CotDistLaw};
use mloop_core::observables::loop_functional_mc;
use mloop_core::rotation::{calibration_report, exact_psi_rotation, mc_psi_rotation};
use mloop_core::vec3::{AntisymMatrix, CVec3, Rotation, Vec3};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: mloop_core::Error) -> PyErr {
    PyValueError::new_err(format!("{e}"))
}

type PyCVec = [(f64, f64); 3];

fn cvec_out(v: CVec3) -> PyCVec {
    [
        (v.0[0].re, v.0[0].im),
        (v.0[1].re, v.0[1].im),
        (v.0[2].re, v.0[2].im),
    ]
}

/// Closed polygon of real 3-vectors.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct SpatialLoop {
    inner: mloop_core::loops::SpatialLoop,
}

#[pymethods]
impl SpatialLoop {
    #[new]
    fn new(vertices: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let v = vertices
            .into_iter()
            .map(|(x, y, z)| Vec3::new(x, y, z))
            .collect();
        Ok(SpatialLoop {
            inner: mloop_core::loops::SpatialLoop::new(v).map_err(err)?,
        })
    }

    #[staticmethod]
    fn circle(radius: f64, n: usize) -> PyResult<Self> {
        Ok(SpatialLoop {
            inner: make_circle_loop(radius, n, &Rotation::identity()).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (seed, n, modes=6, decay=2.0, amplitude=1.0))]
    fn fourier(seed: u64, n: usize, modes: usize, decay: f64, amplitude: f64) -> PyResult<Self> {
        Ok(SpatialLoop {
            inner: make_fourier_loop(seed, n, modes, decay, amplitude).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn vertices(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .vertices()
            .iter()
            .map(|v| (v.0[0], v.0[1], v.0[2]))
            .collect()
    }

    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }

    /// Antisymmetric tensor area Σ_{αβ} as a 3×3 nested list.
    fn tensor_area(&self) -> [[f64; 3]; 3] {
        tensor_area(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SpatialLoop(n={})", self.inner.n())
    }
}

/// One element of the fixed ensemble: a closed ±1 walk on the star polygon
/// {q/p}, rotated by Ω, with its complex F-polygon.
#[pyclass]
struct EulerSample {
    inner: mloop_core::euler::EulerSample,
}

#[pymethods]
impl EulerSample {
    #[getter]
    fn p(&self) -> u64 {
        self.inner.p
    }

    #[getter]
    fn q(&self) -> u64 {
        self.inner.q
    }

    #[getter]
    fn r(&self) -> i64 {
        self.inner.r
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n()
    }

    #[getter]
    fn sigma(&self) -> Vec<i8> {
        self.inner.sigma.clone()
    }

    #[getter]
    fn omega(&self) -> [[f64; 3]; 3] {
        self.inner.omega.0
    }

    /// F-polygon vertices as lists of three (re, im) pairs.
    fn vertices(&self) -> Vec<PyCVec> {
        self.inner
            .momentum_loop()
            .vertices()
            .iter()
            .map(|&v| cvec_out(v))
            .collect()
    }

    /// Largest relative residual of the stationarity relations at this γ.
    fn fixed_point_residual(&self, gamma: f64) -> f64 {
        fixed_point_residual(&self.inner.momentum_loop(), gamma).max_overall()
    }

    /// Circulation Σ ΔC_k·F_k over a spatial loop (resampled to N), as
    /// ((re, im), scale) with scale = Σ|ΔC||F|.
    fn circulation(&self, c: &SpatialLoop) -> PyResult<((f64, f64), f64)> {
        let f = self.inner.momentum_loop();
        let cn = c.inner.resample(f.n()).map_err(err)?;
        let g = circulation_sum(&cn, &f).map_err(err)?;
        let s = circulation_scale(&cn, &f).map_err(err)?;
        Ok(((g.re, g.im), s))
    }

    fn __repr__(&self) -> String {
        format!(
            "EulerSample(p={}, q={}, r={}, n={})",
            self.inner.p,
            self.inner.q,
            self.inner.r,
            self.inner.n()
        )
    }
}

/// Draw sample `index` of the deterministic ensemble stream.
#[pyfunction]
fn sample_ensemble(n: u64, q_max: u64, seed: u64, index: u64) -> PyResult<EulerSample> {
    let sampler = EnsembleSampler::new(n, q_max, seed, PairMeasure::CoprimeUniform).map_err(err)?;
    Ok(EulerSample {
        inner: sampler.sample(index),
    })
}

/// Assemble and validate a sample from explicit (p, q, r, σ, Ω).
#[pyfunction]
fn build_sample(
    p: u64,
    q: u64,
    r: i64,
    sigma: Vec<i8>,
    omega: [[f64; 3]; 3],
) -> PyResult<EulerSample> {
    Ok(EulerSample {
        inner: mloop_core::euler::build_sample(p, q, r, sigma, Rotation(omega)).map_err(err)?,
    })
}

/// Star-polygon radius R = 1/(2 sin(πp/q)) and height A = 1/(2 tan(πp/q)).
#[pyfunction]
fn radius_and_a(p: u64, q: u64) -> PyResult<(f64, f64)> {
    let s = mloop_core::euler::radius_and_a(p, q).map_err(err)?;
    Ok((s.radius, s.height))
}

/// Winding counts compatible with an N-step closed walk on a q-gon.
#[pyfunction]
fn feasible_r(n: u64, q: u64) -> Vec<i64> {
    mloop_core::euler::feasible_r(n, q)
}

/// Monte Carlo loop functional Ψ(C, t) over the ensemble:
/// returns (re, im, stderr_re, stderr_im).
#[pyfunction]
#[pyo3(signature = (c, t, nu=1.0, gamma=1.0, t0=0.1, n=48, q_max=16, samples=20_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn loop_functional(
    c: &SpatialLoop,
    t: f64,
    nu: f64,
    gamma: f64,
    t0: f64,
    n: usize,
    q_max: u64,
    samples: u64,
    seed: u64,
) -> PyResult<(f64, f64, f64, f64)> {
    let params = SimParams {
        nu,
        gamma,
        t0,
        n,
        seed,
        ..Default::default()
    };
    params.validate().map_err(err)?;
    let sampler = EnsembleSampler::new(n as u64, q_max, seed, PairMeasure::CoprimeUniform)
        .map_err(err)?;
    let e = loop_functional_mc(&c.inner, t, &params, &sampler, samples).map_err(err)?;
    Ok((e.mean.re, e.mean.im, e.stderr[0], e.stderr[1]))
}

/// Integrate the momentum-loop flow from a complex initial polygon; returns
/// the final vertices.
#[pyfunction]
#[pyo3(signature = (vertices, t_end, nu=1.0, gamma=1.0, t0=0.1, rtol=1e-9, atol=1e-12))]
fn integrate(
    vertices: Vec<PyCVec>,
    t_end: f64,
    nu: f64,
    gamma: f64,
    t0: f64,
    rtol: f64,
    atol: f64,
) -> PyResult<Vec<PyCVec>> {
    let v: Vec<CVec3> = vertices
        .iter()
        .map(|t| {
            CVec3::new(
                Complex64::new(t[0].0, t[0].1),
                Complex64::new(t[1].0, t[1].1),
                Complex64::new(t[2].0, t[2].1),
            )
        })
        .collect();
    let n = v.len();
    let p0 = mloop_core::loops::MomentumLoop::new(v, false).map_err(err)?;
    let params = SimParams {
        nu,
        gamma,
        t0,
        n,
        integrator: mloop_core::integrate::IntegratorOpts {
            rtol,
            atol,
            ..Default::default()
        },
        ..Default::default()
    };
    let traj = integrate_mle(&p0, &params, t_end, 1).map_err(err)?;
    if !traj.completed() {
        return Err(PyValueError::new_err(format!(
            "integration stopped early: {:?}",
            traj.outcome
        )));
    }
    let (_, last) = traj.last();
    Ok(last.vertices().iter().map(|&x| cvec_out(x)).collect())
}

/// Euler totients φ(n) and the summatory Φ(n) for n = 1..=limit.
#[pyfunction]
fn totients(limit: u64) -> PyResult<Vec<(u64, u64, u64)>> {
    let t = totient_sieve(limit).map_err(err)?;
    Ok((1..=limit)
        .map(|i| (i, t.phi(i) as u64, t.phi_sum(i)))
        .collect())
}

/// Atom weight w₀ = 1 − π²/(675 ζ(5)) of the cotangent-squared law.
#[pyfunction]
fn cot_atom_weight() -> PyResult<f64> {
    Ok(CotDistLaw::new(1000).map_err(err)?.atom_weight())
}

/// KS distance of the X²-weighted empirical X-distribution (coprime pairs
/// q < n) from the law's continuous part.
#[pyfunction]
#[pyo3(signature = (n, branches=200_000))]
fn cot_ks_distance(n: u64, branches: u64) -> PyResult<f64> {
    let law = CotDistLaw::new(branches).map_err(err)?;
    ks_weighted(n, &law).map_err(err)
}

/// Uniform-rotation check: returns a dict with the exact and Monte Carlo
/// loop functionals for a unit circle and the covariance calibration.
#[pyfunction]
#[pyo3(signature = (n=64, phi=0.1, samples=20_000, seed=1))]
fn rotation_check<'py>(
    py: Python<'py>,
    n: usize,
    phi: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let gen = AntisymMatrix::new(phi, 0.0, 0.0);
    let cal = calibration_report(&gen, n);
    let c = make_circle_loop(1.0, n, &Rotation::identity()).map_err(err)?;
    let exact = exact_psi_rotation(&c, &gen);
    let mc = mc_psi_rotation(&c, &gen, n, samples, seed).map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("exact", (exact.re, exact.im))?;
    dict.set_item("mc", (mc.mean.re, mc.mean.im))?;
    dict.set_item("stderr", (mc.stderr[0], mc.stderr[1]))?;
    dict.set_item("covariance_max_err", cal.max_err_calibrated)?;
    dict.set_item("calibration_scale", cal.scale)?;
    Ok(dict)
}

/// Single-link integral ∫d³η exp(−m₀|η| + iη·v): (closed form, quadrature).
#[pyfunction]
fn single_link(v: (f64, f64, f64), m0: f64) -> PyResult<(f64, f64)> {
    let vv = Vec3::new(v.0, v.1, v.2);
    Ok((
        single_link_integral(vv, m0).map_err(err)?,
        single_link_oracle(vv, m0, 1e-9).map_err(err)?,
    ))
}

/// Unnormalized single-link measure W(P_1..P_N); returns (value, ln_value).
#[pyfunction]
#[pyo3(signature = (points, m0=1.0, tol=1e-7))]
fn w_measure_value(points: Vec<(f64, f64, f64)>, m0: f64, tol: f64) -> PyResult<(f64, f64)> {
    let pts: Vec<Vec3> = points
        .into_iter()
        .map(|(x, y, z)| Vec3::new(x, y, z))
        .collect();
    let w = w_measure(&pts, m0, tol).map_err(err)?;
    Ok((w.value, w.ln_value))
}

#[pymodule]
fn mloop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SpatialLoop>()?;
    m.add_class::<EulerSample>()?;
    m.add_function(wrap_pyfunction!(sample_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(build_sample, m)?)?;
    m.add_function(wrap_pyfunction!(radius_and_a, m)?)?;
    m.add_function(wrap_pyfunction!(feasible_r, m)?)?;
    m.add_function(wrap_pyfunction!(loop_functional, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(totients, m)?)?;
    m.add_function(wrap_pyfunction!(cot_atom_weight, m)?)?;
    m.add_function(wrap_pyfunction!(cot_ks_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_check, m)?)?;
    m.add_function(wrap_pyfunction!(single_link, m)?)?;
    m.add_function(wrap_pyfunction!(w_measure_value, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
