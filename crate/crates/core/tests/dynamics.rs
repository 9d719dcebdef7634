//! Trajectory-level checks of the momentum-loop dynamics: symmetries of the
//! flow, the dimensionless/physical duality, the laminar regime, and the
//! stationarity of ensemble samples under the dimensionless flow.

use mloop_core::euler::{EnsembleSampler, PairMeasure};
use mloop_core::integrate::IntegratorOpts;
use mloop_core::loops::{make_fourier_momentum_loop, MomentumLoop};
use mloop_core::mle::{
    f_pair_drift, fixed_point_residual, integrate_f, integrate_mle, laminar_check,
    to_dimensionless, DerivativeAssignment, SimParams,
};
use mloop_core::vec3::CVec3;
use num_complex::Complex64;

fn max_rel_diff(a: &MomentumLoop, b: &MomentumLoop) -> f64 {
    let scale = a.max_modulus().max(b.max_modulus()).max(1e-300);
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(x, y)| (*x - *y).modulus())
        .fold(0.0, f64::max)
        / scale
}

fn tight_opts() -> IntegratorOpts {
    IntegratorOpts {
        h0: 0.0,
        rtol: 1e-10,
        atol: 1e-13,
        max_steps: 10_000_000,
    }
}

#[test]
fn constant_initial_loop_stays_constant() {
    let p0 = MomentumLoop::constant(
        CVec3::from_re_im(
            mloop_core::vec3::Vec3::new(0.7, -0.2, 0.4),
            mloop_core::vec3::Vec3::new(0.1, 0.3, 0.0),
        ),
        12,
        false,
    )
    .unwrap();
    let params = SimParams {
        n: 12,
        ..Default::default()
    };
    let traj = integrate_mle(&p0, &params, 2.0, 8).unwrap();
    assert!(traj.completed());
    for (_, state) in traj.iter() {
        assert!(max_rel_diff(state, &p0) < 1e-14);
    }
}

#[test]
fn tolerance_refinement_converges() {
    let p0 = make_fourier_momentum_loop(3, 16, 4, 2.0, 0.6, 0.3).unwrap();
    let run = |rtol: f64| {
        let params = SimParams {
            n: 16,
            integrator: IntegratorOpts {
                rtol,
                atol: rtol * 1e-3,
                ..Default::default()
            },
            ..Default::default()
        };
        let traj = integrate_mle(&p0, &params, 1.0, 1).unwrap();
        assert!(traj.completed());
        traj.state(traj.len() - 1).clone()
    };
    let ref_state = run(1e-12);
    let e6 = max_rel_diff(&run(1e-6), &ref_state);
    let e8 = max_rel_diff(&run(1e-8), &ref_state);
    let e10 = max_rel_diff(&run(1e-10), &ref_state);
    assert!(e8 < e6, "e6 {e6} e8 {e8}");
    assert!(e10 < e8, "e8 {e8} e10 {e10}");
}

/// Rescaling t ↦ λt, P ↦ √λ·P maps solutions to solutions: integrating the
/// rescaled initial data must land on the rescaled solution.
#[test]
fn time_rescaling_symmetry() {
    let lambda = 2.0f64;
    for seed in [1u64, 2, 3] {
        let p0 = make_fourier_momentum_loop(seed, 16, 4, 2.0, 0.5, 0.4).unwrap();
        let params = SimParams {
            n: 16,
            integrator: tight_opts(),
            ..Default::default()
        };
        let t_end = 0.8;
        let base = integrate_mle(&p0, &params, t_end, 4).unwrap();
        let scaled0 = p0.scaled(Complex64::new(lambda.sqrt(), 0.0));
        let rescaled = integrate_mle(&scaled0, &params, t_end / lambda, 4).unwrap();
        assert!(base.completed() && rescaled.completed());
        for i in 0..base.len() {
            let expect = base.state(i).scaled(Complex64::new(lambda.sqrt(), 0.0));
            let got = rescaled.state(i);
            // Times match: rescaled save grid is base grid / λ.
            assert!((rescaled.times()[i] * lambda - base.times()[i]).abs() < 1e-12);
            let d = max_rel_diff(&expect, got);
            assert!(d <= 10.0 * params.integrator.rtol * 1e2, "seed {seed} snap {i}: {d}");
        }
    }
}

/// No explicit time dependence: restarting from an intermediate snapshot
/// continues the same trajectory.
#[test]
fn time_translation_invariance() {
    let p0 = make_fourier_momentum_loop(9, 16, 4, 2.0, 0.5, 0.2).unwrap();
    let params = SimParams {
        n: 16,
        integrator: tight_opts(),
        ..Default::default()
    };
    let full = integrate_mle(&p0, &params, 1.0, 2).unwrap(); // saves at 0, 0.5, 1.0
    let restart = integrate_mle(full.state(1), &params, 0.5, 1).unwrap();
    let d = max_rel_diff(restart.state(restart.len() - 1), full.state(2));
    assert!(d < 1e-7, "restart deviation {d}");
}

/// The dimensionless flow in τ is the exact image of the physical flow:
/// integrate both and compare through the rescaling map, for several γ.
#[test]
fn dual_integration_consistency() {
    for &gamma in &[0.5f64, 1.0, 2.0] {
        let params = SimParams {
            nu: 1.0,
            gamma,
            t0: 0.5,
            n: 16,
            integrator: tight_opts(),
            ..Default::default()
        };
        let p0 = make_fourier_momentum_loop(13, 16, 4, 2.0, 0.4, 0.5).unwrap();
        let t_end = 1.5;
        let traj = integrate_mle(&p0, &params, t_end, 4).unwrap();
        assert!(traj.completed());

        let f0 = to_dimensionless(&p0, 0.0, &params).unwrap();
        let tau_end = ((t_end + params.t0) / params.t0).ln();
        let ftraj = integrate_f(
            &f0,
            gamma,
            DerivativeAssignment::Backward,
            &params.integrator,
            tau_end,
            40,
        )
        .unwrap();
        assert!(ftraj.completed());

        for i in 0..traj.len() {
            let t = traj.times()[i];
            let f_expect = to_dimensionless(traj.state(i), t, &params).unwrap();
            // Find the matching τ snapshot.
            let tau = ((t + params.t0) / params.t0).ln();
            let j = ftraj
                .times()
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (a.1 - tau).abs().partial_cmp(&(b.1 - tau).abs()).unwrap()
                })
                .unwrap()
                .0;
            if (ftraj.times()[j] - tau).abs() > 1e-9 {
                continue; // only compare aligned snapshots
            }
            let d = max_rel_diff(&f_expect, ftraj.state(j));
            assert!(d < 1e-6, "gamma {gamma} t {t}: rel diff {d}");
        }
    }
}

/// Ensemble samples are stationary under the dimensionless flow in the
/// pair variables, for any γ.
#[test]
fn ensemble_samples_are_fixed_points_of_f_flow() {
    let sampler = EnsembleSampler::new(36, 11, 21, PairMeasure::CoprimeUniform).unwrap();
    for idx in 0..10 {
        let s = sampler.sample(idx);
        let f = s.momentum_loop();
        for &gamma in &[0.5, 1.0, 2.0, 3.7] {
            let drift = f_pair_drift(&f, gamma);
            let scale = f.max_modulus().powi(3).max(1.0);
            let worst = drift.iter().map(|v| v.modulus()).fold(0.0, f64::max) / scale;
            assert!(worst <= 1e-10, "sample {idx} gamma {gamma}: drift {worst}");
            let rep = fixed_point_residual(&f, gamma);
            assert!(rep.max_overall() <= 1e-10);
        }
    }
}

/// A perturbed sample is detected: the residual rises to the perturbation
/// scale at the touched vertices.
#[test]
fn fixed_point_residual_detects_perturbations() {
    let sampler = EnsembleSampler::new(32, 9, 8, PairMeasure::CoprimeUniform).unwrap();
    let s = sampler.sample(0);
    let mut f = s.momentum_loop();
    let k = 7usize;
    let bump = 1e-3;
    f.vertices_mut()[k].0[0] += Complex64::new(bump, 0.0);
    let rep = fixed_point_residual(&f, 1.0);
    let local = rep.vector[k]
        .max(rep.side[k])
        .max(rep.vector[(k + 1) % 32])
        .max(rep.side[(k + 1) % 32]);
    assert!(local >= 1e-4, "perturbation missed: {local}");
}

#[test]
fn laminar_window_tracks_the_linearized_solution() {
    // Nonlinearity parameter γ²·max|P₀|²·2(t_end+t₀)/ν = 1e−3.
    let p0 = make_fourier_momentum_loop(7, 24, 5, 2.2, 0.5, 0.0).unwrap();
    let amp = p0.max_modulus();
    let t0 = 0.1;
    let t_end = 0.9; // a decade: (t_end + t0)/t0 = 10
    let nu = 1e3 * amp * amp * 2.0 * (t_end + t0);
    let params = SimParams {
        nu,
        gamma: 1.0,
        t0,
        n: 24,
        integrator: tight_opts(),
        ..Default::default()
    };
    let rep = laminar_check(&p0, &params, t_end, 20).unwrap();
    assert!((rep.small_parameter - 1e-3).abs() < 1e-12);
    assert!(!rep.precondition_warning);
    assert!(rep.max_rel_deviation <= 0.01, "dev {}", rep.max_rel_deviation);

    // Zero initial data: exactly zero deviation.
    let z = MomentumLoop::constant(CVec3::ZERO, 24, false).unwrap();
    let zrep = laminar_check(&z, &params, t_end, 4).unwrap();
    assert_eq!(zrep.max_rel_deviation, 0.0);

    // Ten times smaller viscosity: larger deviation (nonlinearity onset).
    let params_nl = SimParams {
        nu: nu / 10.0,
        ..params
    };
    let rep_nl = laminar_check(&p0, &params_nl, t_end, 20).unwrap();
    assert!(rep_nl.max_rel_deviation > rep.max_rel_deviation);
}
