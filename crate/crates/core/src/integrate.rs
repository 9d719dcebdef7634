//! Adaptive explicit Runge–Kutta integration of loop-valued ODEs.
//!
//! Dormand–Prince 5(4) with FSAL and PI step-size control, operating on the
//! 3N complex components of a momentum loop. Deterministic: no randomness,
//! no thread dependence.

use crate::error::Error;
use crate::loops::MomentumLoop;
use crate::vec3::CVec3;
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegratorOpts {
    /// Initial step; 0 means choose automatically.
    pub h0: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        IntegratorOpts {
            h0: 0.0,
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorOpts {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be > 0"));
        }
        if self.h0 < 0.0 || !self.h0.is_finite() {
            return Err(Error::invalid("integrator h0 must be finite and >= 0"));
        }
        Ok(())
    }
}

/// How an integration ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IntegrationOutcome {
    Completed,
    /// The controller drove the step below the representable minimum; the
    /// trajectory holds every snapshot reached. This is a diagnostic
    /// (stiffness or blow-up suspected), not a claim of physical explosion.
    StepUnderflow { t: f64, reason: String },
}

/// Time-ordered snapshots of a loop trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<MomentumLoop>,
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
    pub outcome: IntegrationOutcome,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &MomentumLoop {
        &self.states[i]
    }

    pub fn last(&self) -> (&f64, &MomentumLoop) {
        (self.times.last().unwrap(), self.states.last().unwrap())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &MomentumLoop)> {
        self.times.iter().cloned().zip(self.states.iter())
    }

    pub fn completed(&self) -> bool {
        self.outcome == IntegrationOutcome::Completed
    }
}

struct Work {
    y: Vec<CVec3>,
}

impl Work {
    fn axpy(out: &mut Vec<CVec3>, base: &[CVec3], terms: &[(f64, &[CVec3])]) {
        out.clear();
        out.extend_from_slice(base);
        for &(c, v) in terms {
            for (o, x) in out.iter_mut().zip(v) {
                *o += *x * c;
            }
        }
    }
}

/// Integrate `dy/dt = rhs(y)` from the state `y0` at t = 0 through every
/// time in `save_at` (strictly increasing, starting at 0 or later).
pub fn integrate_adaptive<F>(
    mut rhs: F,
    y0: &MomentumLoop,
    save_at: &[f64],
    opts: &IntegratorOpts,
) -> Result<Trajectory>
where
    F: FnMut(&MomentumLoop, &mut Vec<CVec3>),
{
    opts.validate()?;
    if save_at.is_empty() {
        return Err(Error::invalid("save_at: need at least one time"));
    }
    for w in save_at.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid("save_at: times must be strictly increasing"));
        }
    }

    // Dormand–Prince 5(4) tableau.
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // b − b̂ (5th minus embedded 4th order weights).
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let n = y0.n();
    let mut state = y0.clone();
    let mut t = 0.0f64;

    let mut times = Vec::with_capacity(save_at.len() + 1);
    let mut states = Vec::with_capacity(save_at.len() + 1);
    let mut save_iter = save_at.iter().cloned().peekable();
    if let Some(&first) = save_iter.peek() {
        if first == 0.0 {
            times.push(0.0);
            states.push(state.clone());
            save_iter.next();
        }
    }

    let mut k1 = Vec::new();
    let mut k2 = Vec::new();
    let mut k3 = Vec::new();
    let mut k4 = Vec::new();
    let mut k5 = Vec::new();
    let mut k6 = Vec::new();
    let mut k7 = Vec::new();
    let mut ytmp = Work { y: Vec::new() };
    let mut rhs_evals: u64 = 0;
    let mut accepted: u64 = 0;
    let mut rejected: u64 = 0;

    rhs(&state, &mut k1);
    rhs_evals += 1;

    // Automatic initial step from the scale of y and f.
    let weighted = |v: &[CVec3], y: &[CVec3]| -> f64 {
        let mut s = 0.0;
        for (vi, yi) in v.iter().zip(y) {
            let w = opts.atol + opts.rtol * yi.modulus();
            let r = vi.modulus() / w;
            s += r * r;
        }
        (s / v.len() as f64).sqrt()
    };
    let t_final = *save_at.last().unwrap();
    let mut h = if opts.h0 > 0.0 {
        opts.h0
    } else {
        let d0 = weighted(state.vertices(), state.vertices());
        let d1 = weighted(&k1, state.vertices());
        let guess = if d1 > 1e-10 { 0.01 * d0 / d1 } else { 1e-6 };
        guess.min(t_final / 10.0).max(1e-12)
    };

    let mut err_prev: f64 = 1e-4;
    let mut just_rejected = false;

    while let Some(&target) = save_iter.peek() {
        while t < target {
            if accepted + rejected > opts.max_steps {
                return Ok(Trajectory {
                    times,
                    states,
                    accepted,
                    rejected,
                    rhs_evals,
                    outcome: IntegrationOutcome::StepUnderflow {
                        t,
                        reason: "step budget exhausted".into(),
                    },
                });
            }
            let h_min = 16.0 * f64::EPSILON * t.abs().max(t_final.abs());
            if h < h_min {
                return Ok(Trajectory {
                    times,
                    states,
                    accepted,
                    rejected,
                    rhs_evals,
                    outcome: IntegrationOutcome::StepUnderflow {
                        t,
                        reason: "step-size underflow: stiffness/blow-up suspected".into(),
                    },
                });
            }
            let clipped = h.min(target - t);
            let hs = clipped;
            let y = state.vertices();

            Work::axpy(&mut ytmp.y, y, &[(hs * A21, &k1)]);
            let s2 = MomentumLoop::new(ytmp.y.clone(), state.dimensionless)?;
            rhs(&s2, &mut k2);
            Work::axpy(&mut ytmp.y, y, &[(hs * A31, &k1), (hs * A32, &k2)]);
            let s3 = MomentumLoop::new(ytmp.y.clone(), state.dimensionless)?;
            rhs(&s3, &mut k3);
            Work::axpy(
                &mut ytmp.y,
                y,
                &[(hs * A41, &k1), (hs * A42, &k2), (hs * A43, &k3)],
            );
            let s4 = MomentumLoop::new(ytmp.y.clone(), state.dimensionless)?;
            rhs(&s4, &mut k4);
            Work::axpy(
                &mut ytmp.y,
                y,
                &[
                    (hs * A51, &k1),
                    (hs * A52, &k2),
                    (hs * A53, &k3),
                    (hs * A54, &k4),
                ],
            );
            let s5 = MomentumLoop::new(ytmp.y.clone(), state.dimensionless)?;
            rhs(&s5, &mut k5);
            Work::axpy(
                &mut ytmp.y,
                y,
                &[
                    (hs * A61, &k1),
                    (hs * A62, &k2),
                    (hs * A63, &k3),
                    (hs * A64, &k4),
                    (hs * A65, &k5),
                ],
            );
            let s6 = MomentumLoop::new(ytmp.y.clone(), state.dimensionless)?;
            rhs(&s6, &mut k6);
            Work::axpy(
                &mut ytmp.y,
                y,
                &[
                    (hs * B1, &k1),
                    (hs * B3, &k3),
                    (hs * B4, &k4),
                    (hs * B5, &k5),
                    (hs * B6, &k6),
                ],
            );
            let ynew = ytmp.y.clone();
            let snew = MomentumLoop::new(ynew.clone(), state.dimensionless)?;
            rhs(&snew, &mut k7);
            rhs_evals += 6;

            // Weighted RMS error over all complex components.
            let mut err_sq = 0.0;
            let mut finite = true;
            for i in 0..n {
                let e = k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6
                    + k7[i] * E7;
                let em = e.modulus() * hs;
                if !em.is_finite() || !ynew[i].is_finite() {
                    finite = false;
                    break;
                }
                let w = opts.atol + opts.rtol * y[i].modulus().max(ynew[i].modulus());
                let r = em / w;
                err_sq += r * r;
            }
            let err = if finite {
                (err_sq / n as f64).sqrt()
            } else {
                f64::INFINITY
            };

            if err <= 1.0 {
                t += hs;
                state = snew;
                std::mem::swap(&mut k1, &mut k7); // FSAL
                accepted += 1;
                let e = err.max(1e-10);
                let fac = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                let cap = if just_rejected { 1.0 } else { 5.0 };
                h = (clipped * fac.clamp(0.2, cap)).max(h_min);
                err_prev = e.max(1e-4);
                just_rejected = false;
            } else {
                rejected += 1;
                just_rejected = true;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.7)
                } else {
                    0.1
                };
                h = clipped * fac;
            }
        }
        times.push(target);
        states.push(state.clone());
        save_iter.next();
    }

    Ok(Trajectory {
        times,
        states,
        accepted,
        rejected,
        rhs_evals,
        outcome: IntegrationOutcome::Completed,
    })
}
