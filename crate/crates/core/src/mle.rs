//! The discrete momentum-loop equation and its residuals.
//!
//! Per vertex k, with the backward pair Δ = P_k − P_{k−1} and midpoint
//! M = (P_k + P_{k−1})/2 (all dots unconjugated complex bilinear forms):
//!
//! ```text
//! ν ∂t P_k = −γ²Δ²M + Δ·( γ² M·Δ + iγ( (M·Δ)²/Δ² − M² ) )
//! ```
//!
//! The rescaling `P = √(ν/(2(t+t₀)))·F/γ`, `τ = log((t+t₀)/t₀)` removes the
//! viscosity and yields the dimensionless flow
//!
//! ```text
//! 2 ∂τ F_k = (1 − Δ²)M + Δ·( M·Δ + (i/γ)( (M·Δ)²/Δ² − M² ) )
//! ```
//!
//! obtained by direct substitution; it is validated against integrating the
//! physical equation and transporting the result (the two routes must agree
//! for every γ, see the dual-integration tests). Stationary points satisfy
//! `(ΔF)² = 1` and `F² − γ²/4 = (F·ΔF − iγ/2)²` at every vertex, for any γ.

use crate::error::Error;
use crate::integrate::{integrate_adaptive, IntegratorOpts, Trajectory};
use crate::loops::MomentumLoop;
use crate::vec3::CVec3;
use crate::Result;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Guard on |Δ²| below which the singular ratio (M·Δ)²/Δ² is replaced by its
/// Δ → 0 limit (zero); avoids 0/0 at bit level.
pub const DELTA_SQ_GUARD: f64 = 1e-30;

/// Which vertex the backward-pair derivative is assigned to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DerivativeAssignment {
    /// The pair (P_{k−1}, P_k) produces the derivative at vertex k. Exact on
    /// the fixed ensemble, where both scalar brackets vanish vertex-wise.
    #[default]
    Backward,
    /// Average of the two adjacent backward stencils; for sensitivity
    /// studies of the assignment choice.
    Symmetric,
}

/// Physical and numerical parameters of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimParams {
    /// Viscosity (L²/T).
    pub nu: f64,
    /// Dimensionless spectral parameter γ ≠ 0.
    pub gamma: f64,
    /// Time offset t₀ > 0.
    pub t0: f64,
    /// Vertex count.
    pub n: usize,
    pub integrator: IntegratorOpts,
    pub seed: u64,
    #[serde(default)]
    pub assignment: DerivativeAssignment,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::invalid(format!("nu: must be > 0, got {}", self.nu)));
        }
        if self.gamma == 0.0 || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma: must be finite and nonzero"));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::invalid(format!("t0: must be > 0, got {}", self.t0)));
        }
        if self.n < 3 {
            return Err(Error::invalid(format!("N: must be >= 3, got {}", self.n)));
        }
        self.integrator.validate()
    }
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            nu: 1.0,
            gamma: 1.0,
            t0: 0.1,
            n: 16,
            integrator: IntegratorOpts::default(),
            seed: 0,
        assignment: DerivativeAssignment::Backward,
        }
    }
}

/// The three summands of ν·∂tP at one vertex pair; each scales cubically
/// under P → sP.
fn pair_terms(mid: CVec3, delta: CVec3, gamma: f64) -> (CVec3, CVec3, CVec3) {
    let i = Complex64::new(0.0, 1.0);
    let d2 = delta.square();
    let md = mid.dot(delta);
    let m2 = mid.square();
    let ratio = if d2.norm() > DELTA_SQ_GUARD {
        md * md / d2
    } else {
        Complex64::new(0.0, 0.0)
    };
    let t1 = mid.scale(-gamma * gamma * d2);
    let t2 = delta.scale(gamma * gamma * md);
    let t3 = delta.scale(i * gamma * (ratio - m2));
    (t1, t2, t3)
}

fn backward_rhs(p: &MomentumLoop, gamma: f64, nu: f64) -> Vec<CVec3> {
    let n = p.n();
    (0..n)
        .map(|k| {
            let (t1, t2, t3) = pair_terms(p.midpoint(k), p.delta(k), gamma);
            (t1 + t2 + t3).scale(Complex64::new(1.0 / nu, 0.0))
        })
        .collect()
}

/// Time derivative of the momentum loop, per vertex.
pub fn mle_rhs(p: &MomentumLoop, gamma: f64, nu: f64, assignment: DerivativeAssignment) -> Vec<CVec3> {
    let b = backward_rhs(p, gamma, nu);
    match assignment {
        DerivativeAssignment::Backward => b,
        DerivativeAssignment::Symmetric => {
            let n = b.len();
            (0..n).map(|k| (b[k] + b[(k + 1) % n]) * 0.5).collect()
        }
    }
}

/// ∂τ derivative of the dimensionless loop F at vertex k:
/// `2∂τF_k = F_k − Δ²M + Δ·(M·Δ + (i/γ)((M·Δ)²/Δ² − M²))`.
///
/// This is the exact image of [`mle_rhs`] under the rescaling: the linear
/// term is the chain-rule contribution of the vertex value F_k, so a
/// physical trajectory mapped to F-variables and a direct τ-integration of
/// this flow agree to integrator tolerance for every γ (the
/// dual-integration oracle). The variant with the midpoint in the linear
/// term is the drift of the pair system, [`f_pair_drift`]; the two differ
/// by Δ/4 per vertex at finite N.
pub fn f_rhs(f: &MomentumLoop, gamma: f64, assignment: DerivativeAssignment) -> Vec<CVec3> {
    let backward: Vec<CVec3> = (0..f.n())
        .map(|k| {
            let i = Complex64::new(0.0, 1.0);
            let mid = f.midpoint(k);
            let delta = f.delta(k);
            let d2 = delta.square();
            let md = mid.dot(delta);
            let m2 = mid.square();
            let ratio = if d2.norm() > DELTA_SQ_GUARD {
                md * md / d2
            } else {
                Complex64::new(0.0, 0.0)
            };
            let lin = f.vertex(k) - mid.scale(d2);
            let drift = delta.scale(md + i / gamma * (ratio - m2));
            (lin + drift) * 0.5
        })
        .collect();
    match assignment {
        DerivativeAssignment::Backward => backward,
        DerivativeAssignment::Symmetric => {
            let n = backward.len();
            (0..n)
                .map(|k| (backward[k] + backward[(k + 1) % n]) * 0.5)
                .collect()
        }
    }
}

/// Drift of the dimensionless flow in the equation's own pair variables:
/// `2·d/dτ(AF)_k = (1 − Δ²)M + Δ·(M·Δ + (i/γ)((M·Δ)²/Δ² − M²))` with A the
/// backward midpoint average. On the fixed ensemble both the coefficient of
/// M and the bracket vanish vertex-wise, so this drift is identically zero
/// for every γ; it is the stationarity statement the fixed manifold obeys at
/// finite N.
pub fn f_pair_drift(f: &MomentumLoop, gamma: f64) -> Vec<CVec3> {
    (0..f.n())
        .map(|k| {
            let i = Complex64::new(0.0, 1.0);
            let mid = f.midpoint(k);
            let delta = f.delta(k);
            let d2 = delta.square();
            let md = mid.dot(delta);
            let m2 = mid.square();
            let ratio = if d2.norm() > DELTA_SQ_GUARD {
                md * md / d2
            } else {
                Complex64::new(0.0, 0.0)
            };
            let lin = mid.scale(Complex64::new(1.0, 0.0) - d2);
            let drift = delta.scale(md + i / gamma * (ratio - m2));
            (lin + drift) * 0.5
        })
        .collect()
}

/// Map the physical momentum loop to the dimensionless variable,
/// `F = γ·√(2(t+t₀)/ν)·P`.
pub fn to_dimensionless(p: &MomentumLoop, t: f64, params: &SimParams) -> Result<MomentumLoop> {
    if !(t + params.t0 > 0.0) {
        return Err(Error::invalid("t: t + t0 must be > 0"));
    }
    let s = params.gamma * (2.0 * (t + params.t0) / params.nu).sqrt();
    let mut f = p.scaled(Complex64::new(s, 0.0));
    f.dimensionless = true;
    Ok(f)
}

/// Inverse of [`to_dimensionless`]: `P = √(ν/(2(t+t₀)))·F/γ`.
pub fn from_dimensionless(f: &MomentumLoop, t: f64, params: &SimParams) -> Result<MomentumLoop> {
    if !(t + params.t0 > 0.0) {
        return Err(Error::invalid("t: t + t0 must be > 0"));
    }
    let s = (params.nu / (2.0 * (t + params.t0))).sqrt() / params.gamma;
    let mut p = f.scaled(Complex64::new(s, 0.0));
    p.dimensionless = false;
    Ok(p)
}

/// Integrate the momentum-loop equation from `p0` over [0, t_end], saving
/// `save_points + 1` equally spaced snapshots (including both ends).
pub fn integrate_mle(
    p0: &MomentumLoop,
    params: &SimParams,
    t_end: f64,
    save_points: usize,
) -> Result<Trajectory> {
    params.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::invalid(format!("t_end: must be > 0, got {t_end}")));
    }
    let gamma = params.gamma;
    let nu = params.nu;
    let assignment = params.assignment;
    let save: Vec<f64> = (0..=save_points.max(1))
        .map(|i| t_end * i as f64 / save_points.max(1) as f64)
        .collect();
    integrate_adaptive(
        |state: &MomentumLoop, out: &mut Vec<CVec3>| {
            *out = mle_rhs(state, gamma, nu, assignment);
        },
        p0,
        &save,
        &params.integrator,
    )
}

/// Integrate the dimensionless flow in τ from `f0` over [0, τ_end].
pub fn integrate_f(
    f0: &MomentumLoop,
    gamma: f64,
    assignment: DerivativeAssignment,
    opts: &IntegratorOpts,
    tau_end: f64,
    save_points: usize,
) -> Result<Trajectory> {
    if !(tau_end > 0.0) {
        return Err(Error::invalid("tau_end: must be > 0"));
    }
    let save: Vec<f64> = (0..=save_points.max(1))
        .map(|i| tau_end * i as f64 / save_points.max(1) as f64)
        .collect();
    integrate_adaptive(
        |state: &MomentumLoop, out: &mut Vec<CVec3>| {
            *out = f_rhs(state, gamma, assignment);
        },
        f0,
        &save,
        opts,
    )
}

/// Per-vertex residuals of the stationarity relations, relative to the
/// magnitude of the terms entering them.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// |(Δ²−1)M − Δ(γ²M·Δ + iγ((M·Δ)²/Δ² − M²))| per vertex, normalized.
    pub vector: Vec<f64>,
    /// |Δ² − 1| per vertex, normalized.
    pub side: Vec<f64>,
    /// |M² − γ²/4 − (M·Δ − iγ/2)²| per vertex, normalized.
    pub bracket: Vec<f64>,
    pub max_vector: f64,
    pub max_side: f64,
    pub max_bracket: f64,
    pub mean_vector: f64,
    pub mean_side: f64,
    pub mean_bracket: f64,
}

impl ResidualReport {
    fn from_parts(vector: Vec<f64>, side: Vec<f64>, bracket: Vec<f64>) -> Self {
        let stats = |v: &[f64]| {
            let max = v.iter().cloned().fold(0.0, f64::max);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (max, mean)
        };
        let (max_vector, mean_vector) = stats(&vector);
        let (max_side, mean_side) = stats(&side);
        let (max_bracket, mean_bracket) = stats(&bracket);
        ResidualReport {
            vector,
            side,
            bracket,
            max_vector,
            max_side,
            max_bracket,
            mean_vector,
            mean_side,
            mean_bracket,
        }
    }

    /// Largest of the three per-vertex maxima.
    pub fn max_overall(&self) -> f64 {
        self.max_vector.max(self.max_side).max(self.max_bracket)
    }
}

/// Residuals of the decay fixed point `(Δ² − 1)F = Δ·(γ²F·Δ + iγ(...))` and
/// of the two scalar relations it implies. On the fixed ensemble all three
/// vanish for every γ.
pub fn fixed_point_residual(f: &MomentumLoop, gamma: f64) -> ResidualReport {
    let n = f.n();
    let i = Complex64::new(0.0, 1.0);
    let mut vector = Vec::with_capacity(n);
    let mut side = Vec::with_capacity(n);
    let mut bracket = Vec::with_capacity(n);
    for k in 0..n {
        let mid = f.midpoint(k);
        let delta = f.delta(k);
        let d2 = delta.square();
        let md = mid.dot(delta);
        let m2 = mid.square();
        let ratio = if d2.norm() > DELTA_SQ_GUARD {
            md * md / d2
        } else {
            Complex64::new(0.0, 0.0)
        };
        let ratio_scale = if d2.norm() > DELTA_SQ_GUARD {
            md.norm() * md.norm() / d2.norm()
        } else {
            0.0
        };
        let br = gamma * gamma * md + i * gamma * (ratio - m2);
        let res = mid.scale(d2 - Complex64::new(1.0, 0.0)) - delta.scale(br);
        let scale = (d2.norm() + 1.0) * mid.modulus()
            + delta.modulus()
                * (gamma * gamma * md.norm() + gamma.abs() * (ratio_scale + m2.norm()));
        vector.push(res.modulus() / scale.max(1.0));

        let s1 = (d2 - Complex64::new(1.0, 0.0)).norm();
        side.push(s1 / (d2.norm() + 1.0));

        let g2 = Complex64::new(gamma * gamma / 4.0, 0.0);
        let sq = md - i * Complex64::new(gamma / 2.0, 0.0);
        let s2 = (m2 - g2 - sq * sq).norm();
        let s2_scale = m2.norm() + gamma * gamma / 4.0 + sq.norm() * sq.norm();
        bracket.push(s2 / s2_scale.max(1.0));
    }
    ResidualReport::from_parts(vector, side, bracket)
}

/// Blow-up profile report: residual of
/// `(Δf² + 1)f = Δf·(γ²f·Δf + iγ((f·Δf)²/Δf² − f²))` per vertex, and the
/// coefficient `a = (Re Δf)² + 1` which can never vanish for the real
/// discontinuities forced by real circulation.
#[derive(Clone, Debug, Serialize)]
pub struct ExplosionReport {
    pub residual: Vec<f64>,
    pub coefficient_a: Vec<f64>,
    pub max_residual: f64,
    pub min_residual: f64,
    pub min_a: f64,
}

pub fn explosion_residual(f: &MomentumLoop, gamma: f64) -> ExplosionReport {
    let n = f.n();
    let i = Complex64::new(0.0, 1.0);
    let mut residual = Vec::with_capacity(n);
    let mut coeff = Vec::with_capacity(n);
    for k in 0..n {
        let mid = f.midpoint(k);
        let delta = f.delta(k);
        let d2 = delta.square();
        let md = mid.dot(delta);
        let m2 = mid.square();
        let ratio = if d2.norm() > DELTA_SQ_GUARD {
            md * md / d2
        } else {
            Complex64::new(0.0, 0.0)
        };
        let ratio_scale = if d2.norm() > DELTA_SQ_GUARD {
            md.norm() * md.norm() / d2.norm()
        } else {
            0.0
        };
        let br = gamma * gamma * md + i * gamma * (ratio - m2);
        let res = mid.scale(d2 + Complex64::new(1.0, 0.0)) - delta.scale(br);
        let scale = (d2.norm() + 1.0) * mid.modulus()
            + delta.modulus()
                * (gamma * gamma * md.norm() + gamma.abs() * (ratio_scale + m2.norm()));
        residual.push(res.modulus() / scale.max(1e-300));
        let dre = delta.re();
        coeff.push(dre.dot(dre) + 1.0);
    }
    let max_residual = residual.iter().cloned().fold(0.0, f64::max);
    let min_residual = residual.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_a = coeff.iter().cloned().fold(f64::INFINITY, f64::min);
    ExplosionReport {
        residual,
        coefficient_a: coeff,
        max_residual,
        min_residual,
        min_a,
    }
}

/// Result of comparing an integrated trajectory against the linearized
/// small-amplitude solution, where P stays frozen at P₀ and
/// `F(t) = γ√(2(t+t₀)/ν)·P₀`.
#[derive(Clone, Debug, Serialize)]
pub struct LaminarReport {
    /// γ²·max|P₀|²·2(t_end+t₀)/ν, the size of the neglected nonlinearity.
    pub small_parameter: f64,
    /// Max over saved times of max_k |P(t)_k − P₀_k| / max|P₀|.
    pub max_rel_deviation: f64,
    /// Set when the small parameter is not ≪ 1; the comparison is still run.
    pub precondition_warning: bool,
}

pub fn laminar_check(
    p0: &MomentumLoop,
    params: &SimParams,
    t_end: f64,
    save_points: usize,
) -> Result<LaminarReport> {
    let amp = p0.max_modulus();
    let small = params.gamma * params.gamma * amp * amp * 2.0 * (t_end + params.t0) / params.nu;
    let warn = !(small < 0.1);
    if amp == 0.0 {
        return Ok(LaminarReport {
            small_parameter: 0.0,
            max_rel_deviation: 0.0,
            precondition_warning: false,
        });
    }
    let traj = integrate_mle(p0, params, t_end, save_points)?;
    let mut worst: f64 = 0.0;
    for (_, state) in traj.iter() {
        let dev = state
            .vertices()
            .iter()
            .zip(p0.vertices())
            .map(|(a, b)| (*a - *b).modulus())
            .fold(0.0, f64::max);
        worst = worst.max(dev / amp);
    }
    Ok(LaminarReport {
        small_parameter: small,
        max_rel_deviation: worst,
        precondition_warning: warn,
    })
}
