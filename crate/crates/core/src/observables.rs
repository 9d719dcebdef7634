//! Monte Carlo estimators over the fixed ensemble: the loop functional, the
//! vorticity operator and its n-point correlators on zero-area spokes
//! contours, and the dissipation proxy.
//!
//! All proportionality constants left free by the defining relations are
//! fixed to one; only shapes, symmetries and ratios are asserted anywhere.
//! Estimators are deterministic-parallel: sample i is fully determined by
//! (seed, i).

use crate::error::Error;
use crate::euler::EnsembleSampler;
use crate::loops::{
    circulation_sum, MomentumLoop, SpatialLoop, SpokesLoop,
};
use crate::mc::{mc_mean_complex, mc_mean_tensor, Estimate, TensorEstimate};
use crate::mle::{from_dimensionless, SimParams};
use crate::rng::{stream_rng, Stream};
use crate::vec3::{CVec3, Vec3};
use crate::Result;
use num_complex::Complex64;
use rand::Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Vorticity operator at vertex k: `ω̂_k = (iγ/ν)·M_k × Δ_k` with the
/// backward midpoint and difference. Exactly zero when M ∥ Δ.
pub fn vorticity_hat(p: &MomentumLoop, k: usize, gamma: f64, nu: f64) -> CVec3 {
    p.midpoint(k).cross(p.delta(k)).scale(I * (gamma / nu))
}

/// Line integral of P along the spokes contour:
/// `Γ = Σ_k ∫_0^1 dη (r_k − r_C) · [P(θ̃_k(1−η)+θ_k η) − P(θ̃_{k+1}η+θ_k(1−η))]`.
///
/// With P piecewise constant between vertices the η-integrals are exact
/// Lebesgue sums over the vertex cells met by each arc (`resolution = None`);
/// a midpoint-rule subdivision with the given number of η-points is kept as
/// an independent cross-check route.
pub fn spokes_circulation(
    p: &MomentumLoop,
    spokes: &SpokesLoop,
    resolution: Option<usize>,
) -> Result<Complex64> {
    let n = spokes.n();
    if n > p.n() / 2 {
        return Err(Error::invalid(format!(
            "spokes: {n} spokes on an N = {} momentum polygon leaves empty arcs; need n <= N/2",
            p.n()
        )));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut total = Complex64::default();
    for k in 0..n {
        let lever = spokes.points[k] - spokes.center;
        let a = spokes.mid_angles[k];
        let b = spokes.angles[k];
        let c = if k + 1 < n {
            spokes.mid_angles[k + 1]
        } else {
            spokes.mid_angles[0] + tau
        };
        let q_int = match resolution {
            None => arc_average(p, a, b) - arc_average(p, b, c),
            Some(res) => arc_average_midpoint(p, a, b, res) - arc_average_midpoint(p, b, c, res),
        };
        total += q_int.dot_real(lever);
    }
    Ok(total)
}

/// `(1/(b−a))·∫_a^b P(θ) dθ` for piecewise-constant P, exact cell walk.
/// Angles are unwrapped reals with a < b; P is 2π-periodic.
fn arc_average(p: &MomentumLoop, a: f64, b: f64) -> CVec3 {
    if b - a <= 0.0 {
        return p.at_angle(a);
    }
    let n = p.n();
    let cell = 2.0 * std::f64::consts::PI / n as f64;
    let mut acc = CVec3::ZERO;
    // Walk cells by index so rounding at a boundary cannot stall the sweep;
    // b − a < 2π keeps the index range within 2n + 2 cells.
    let j0 = (a / cell).floor() as i64;
    let mut j = j0;
    loop {
        let lo = j as f64 * cell;
        let hi = lo + cell;
        let seg_lo = lo.max(a);
        let seg_hi = hi.min(b);
        if seg_hi > seg_lo {
            let idx = j.rem_euclid(n as i64) as usize;
            acc += p.vertices()[idx] * (seg_hi - seg_lo);
        }
        if hi >= b || j - j0 > 2 * n as i64 + 2 {
            break;
        }
        j += 1;
    }
    acc * (1.0 / (b - a))
}

/// Midpoint-rule version of [`arc_average`], the cross-check route.
fn arc_average_midpoint(p: &MomentumLoop, a: f64, b: f64, res: usize) -> CVec3 {
    let res = res.max(1);
    let mut acc = CVec3::ZERO;
    for j in 0..res {
        let eta = (j as f64 + 0.5) / res as f64;
        acc += p.at_angle(a + (b - a) * eta);
    }
    acc * (1.0 / res as f64)
}

/// Monte Carlo loop functional over the ensemble at time t:
/// `Ψ = ⟨exp(i Σ ΔC_k·F_k / √(2ν(t+t₀)))⟩`.
pub fn loop_functional_mc(
    c: &SpatialLoop,
    t: f64,
    params: &SimParams,
    sampler: &EnsembleSampler,
    n_samples: u64,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples: must be > 0"));
    }
    if !(t + params.t0 > 0.0) {
        return Err(Error::invalid("t: t + t0 must be > 0"));
    }
    if c.perimeter() == 0.0 {
        // Point loop: every phase is exactly zero.
        return Ok(Estimate {
            mean: Complex64::new(1.0, 0.0),
            stderr: [0.0, 0.0],
            n_samples,
            seed: 0,
            wall_secs: 0.0,
        });
    }
    let cn = c.resample(sampler.n() as usize)?;
    let denom = (2.0 * params.nu * (t + params.t0)).sqrt();
    Ok(mc_mean_complex(n_samples, 0, |i| {
        let s = sampler.sample(i);
        let f = s.momentum_loop();
        let gamma_f = circulation_sum(&cn, &f).expect("matched N");
        (I * gamma_f / denom).exp()
    }))
}

/// Request for an n-point vorticity correlator.
#[derive(Clone, Debug)]
pub struct CorrelatorRequest {
    pub points: Vec<Vec3>,
    pub t: f64,
    pub params: SimParams,
    /// Largest star-polygon denominator drawn by the sampler.
    pub q_max: u64,
    pub n_samples: u64,
    /// η-subdivision for the quadrature cross-check route; the estimator
    /// itself uses exact arc sums.
    pub theta_resolution: Option<usize>,
}

impl CorrelatorRequest {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid("points: need n >= 1"));
        }
        if !(self.t >= 0.0) {
            return Err(Error::invalid("t: must be >= 0"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples: must be > 0"));
        }
        self.params.validate()
    }
}

/// n-point vorticity correlator over the ensemble:
/// `⟨ ω(r_1) ⊗ … ⊗ ω(r_n) ⟩ = ⟨ e^{i(γ/ν)Γ_spokes[P]} ⊗_k ω̂(θ_k) ⟩`,
/// sampled over ensemble elements and over ordered angle sets (sorted
/// uniforms; the n!/(2π)ⁿ ordered-simplex factor is applied analytically by
/// this sampling, not by rejection). The physical correlator is the real
/// part of the returned tensor.
pub fn vorticity_npoint(req: &CorrelatorRequest) -> Result<TensorEstimate> {
    req.validate()?;
    let n_pts = req.points.len();
    let sampler = EnsembleSampler::new(
        req.params.n as u64,
        req.q_max,
        req.params.seed,
        crate::euler::PairMeasure::CoprimeUniform,
    )?;
    let dim = 3usize.pow(n_pts as u32);
    let shape = vec![3usize; n_pts];
    let gamma = req.params.gamma;
    let nu = req.params.nu;
    let tau = 2.0 * std::f64::consts::PI;
    let est = mc_mean_tensor(req.n_samples, req.params.seed, shape, |i, out| {
        let s = sampler.sample(i);
        let f = s.momentum_loop();
        let p = from_dimensionless(&f, req.t, &req.params).expect("t + t0 > 0 validated");
        // Ordered angles: sorted iid uniforms on (0, 2π).
        let mut rng = stream_rng(req.params.seed, Stream::CorrelatorAngles, i);
        let mut angles: Vec<f64> = (0..n_pts)
            .map(|_| {
                let u: f64 = rng.random();
                (u * tau).clamp(f64::MIN_POSITIVE, tau * (1.0 - 1e-16))
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Coincident draws have probability zero; nudge defensively.
        for j in 1..n_pts {
            if angles[j] <= angles[j - 1] {
                angles[j] = angles[j - 1] + 1e-12;
            }
        }
        let spokes =
            crate::loops::make_spokes_loop(&req.points, &angles).expect("validated angles");
        let gamma_spokes =
            spokes_circulation(&p, &spokes, req.theta_resolution).expect("validated spokes");
        let phase = (I * (gamma / nu) * gamma_spokes).exp();
        let omegas: Vec<CVec3> = angles
            .iter()
            .map(|&th| vorticity_hat(&p, p.nearest_index(th), gamma, nu))
            .collect();
        // Tensor product ⊗_k ω̂(θ_k), row-major.
        for (flat, slot) in out.iter_mut().enumerate().take(dim) {
            let mut idx = flat;
            let mut prod = phase;
            for om in omegas.iter().rev() {
                prod *= om.0[idx % 3];
                idx /= 3;
            }
            *slot = prod;
        }
    });
    Ok(est)
}

/// Dissipation proxy at time t:
/// `(1/(ν(t+t₀)²))·⟨ (Σ_k F_k×ΔF_k)² · exp(iΓ_F/√(2ν(t+t₀))) ⟩` with
/// `Γ_F = Σ ΔC_k·F_k` over the phase loop C. `freeze_phase` replaces the
/// phase factor by 1 to isolate the (t+t₀)⁻² prefactor trend.
pub fn dissipation_estimate(
    t: f64,
    params: &SimParams,
    c: &SpatialLoop,
    sampler: &EnsembleSampler,
    n_samples: u64,
    freeze_phase: bool,
) -> Result<Estimate> {
    if !(t + params.t0 > 0.0) {
        return Err(Error::invalid("t: t + t0 must be > 0"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples: must be > 0"));
    }
    let cn = c.resample(sampler.n() as usize)?;
    let t_eff = t + params.t0;
    let denom = (2.0 * params.nu * t_eff).sqrt();
    let prefactor = 1.0 / (params.nu * t_eff * t_eff);
    Ok(mc_mean_complex(n_samples, 0, |i| {
        let s = sampler.sample(i);
        let f = s.momentum_loop();
        let mut spin = CVec3::ZERO;
        for k in 0..f.n() {
            spin += f.vertex(k).cross(f.delta(k));
        }
        let pair_sum = spin.square(); // Σ_{k,n}(F_k×ΔF_k)·(F_n×ΔF_n)
        let phase = if freeze_phase {
            Complex64::new(1.0, 0.0)
        } else {
            let gamma_f = circulation_sum(&cn, &f).expect("matched N");
            (I * gamma_f / denom).exp()
        };
        pair_sum * phase * prefactor
    }))
}
