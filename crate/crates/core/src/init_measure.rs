//! Noisy initial data for the loop functional.
//!
//! Gaussian velocity noise with correlation length r₀ multiplies the initial
//! loop functional by `exp(−½(γ/ν)²·K[C])`, where K is the double contour
//! integral of the noise kernel; as r₀ → 0, `K → m₀·|C|` with
//! `m₀ = ∫dx g(x²)`. The induced distribution of the initial momentum
//! polygon is the positive single-link measure
//!
//! ```text
//! W(P_1..P_N) ∝ ∫d³q Π_k m₀ / (m₀² + |P_k − q|²)²
//! ```
//!
//! which tends to a Gaussian in the spread ΔP = P_k − P̄ at large N. All
//! densities here are unnormalized; only ratios and shapes are asserted.

use crate::error::Error;
use crate::loops::SpatialLoop;
use crate::quad::{adaptive_gk, adaptive_gk_halfline, gauss_legendre};
use crate::rng::{stream_rng, Stream};
use crate::vec3::Vec3;
use crate::Result;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Shape of the noise correlation profile g(ρ²).
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelProfile {
    #[default]
    Gaussian,
    Exponential,
}

/// Short-range velocity noise: amplitude σ, correlation length r₀.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma: f64,
    pub r0: f64,
    #[serde(default)]
    pub profile: KernelProfile,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("sigma: must be >= 0"));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::invalid("r0: must be > 0"));
        }
        Ok(())
    }

    /// Kernel normalization m₀ = ∫dx g(x²) = σ²/r₀².
    pub fn m0_kernel(&self) -> f64 {
        self.sigma * self.sigma / (self.r0 * self.r0)
    }

    /// The measure mass parameter m₀ = γ²σ²/(2ν²r₀²).
    pub fn m0_phys(&self, gamma: f64, nu: f64) -> f64 {
        gamma * gamma * self.sigma * self.sigma / (2.0 * nu * nu * self.r0 * self.r0)
    }

    /// Kernel value g(ρ²), normalized so ∫dx g(x²) = σ²/r₀².
    pub fn kernel(&self, rho_sq: f64) -> f64 {
        let r0 = self.r0;
        let s2 = self.sigma * self.sigma;
        match self.profile {
            KernelProfile::Gaussian => {
                let a = s2 / (r0 * r0 * r0 * std::f64::consts::PI.sqrt());
                a * (-rho_sq / (r0 * r0)).exp()
            }
            KernelProfile::Exponential => {
                let a = s2 / (2.0 * r0 * r0 * r0);
                a * (-rho_sq.sqrt() / r0).exp()
            }
        }
    }
}

/// Double contour integral `∮ds ∮ds' C'(s)·C'(s') g((C(s)−C(s'))²)` by
/// midpoint quadrature on an arc-length resampled polygon.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub value: f64,
    /// The r₀ → 0 limit m₀·|C| this should approach.
    pub limit: f64,
    pub perimeter: f64,
    /// Set when r₀ is not small against the loop's minimal curvature
    /// radius; both numbers are reported.
    pub warning: Option<(f64, f64)>,
}

pub fn contour_noise_contraction(
    c: &SpatialLoop,
    noise: &NoiseParams,
    oversample: f64,
) -> Result<ContractionReport> {
    noise.validate()?;
    let per = c.perimeter();
    if per <= 0.0 {
        return Err(Error::invalid("loop: degenerate, zero perimeter"));
    }
    let m = ((oversample.max(4.0) * per / noise.r0).ceil() as usize).clamp(512, 6144);
    let fine = c.resample(m)?;
    // Midpoint rule over edges: tangent = ΔC, point = edge midpoint.
    let mids: Vec<Vec3> = (0..m).map(|k| fine.edge_midpoint(k)).collect();
    let tans: Vec<Vec3> = (0..m).map(|k| fine.edge(k)).collect();
    let mut total = 0.0;
    for i in 0..m {
        // Diagonal term plus symmetric off-diagonal pairs.
        total += tans[i].dot(tans[i]) * noise.kernel(0.0);
        for j in (i + 1)..m {
            let rho = mids[i] - mids[j];
            total += 2.0 * tans[i].dot(tans[j]) * noise.kernel(rho.dot(rho));
        }
    }
    // Minimal curvature radius proxy from discrete second differences.
    let mut min_curv_radius = f64::INFINITY;
    for k in 0..m {
        let d1 = fine.edge(k);
        let d2 = fine.edge((k + 1) % m) - d1;
        let kappa = d2.norm() / d1.norm_sq().max(1e-300);
        if kappa > 0.0 {
            min_curv_radius = min_curv_radius.min(1.0 / kappa);
        }
    }
    let warning = if noise.r0 > 0.2 * min_curv_radius {
        Some((noise.r0, min_curv_radius))
    } else {
        None
    };
    Ok(ContractionReport {
        value: total,
        limit: noise.m0_kernel() * per,
        perimeter: per,
        warning,
    })
}

/// Noise-averaged initial loop functional for a spatially constant mean
/// velocity: `exp(i(γ/ν)∮dC·v₀ − ½(γ/ν)²·K[C])`. The phase vanishes for a
/// closed loop (the gradient of a single-valued function integrates to
/// zero); it is computed anyway and carried through.
pub fn noisy_psi0(
    c: &SpatialLoop,
    v0: Vec3,
    noise: &NoiseParams,
    gamma: f64,
    nu: f64,
) -> Result<Complex64> {
    noise.validate()?;
    if !(nu > 0.0) {
        return Err(Error::invalid("nu: must be > 0"));
    }
    let mut phase = 0.0;
    for k in 0..c.n() {
        phase += c.edge(k).dot(v0);
    }
    phase *= gamma / nu;
    if noise.sigma == 0.0 {
        return Ok(Complex64::from_polar(1.0, phase));
    }
    let k = contour_noise_contraction(c, noise, 16.0)?;
    let damping = 0.5 * (gamma / nu) * (gamma / nu) * k.value;
    Ok(Complex64::from_polar((-damping).exp(), phase))
}

/// Closed form of the single-link integral `∫d³η exp(−m₀|η| + iη·v)`:
/// `8π·m₀/(m₀² + |v|²)²`, normalization fixed by the v = 0 value 8π/m₀³.
pub fn single_link_integral(v: Vec3, m0: f64) -> Result<f64> {
    if !(m0 > 0.0) {
        return Err(Error::invalid("m0: must be > 0"));
    }
    let v2 = v.dot(v);
    Ok(8.0 * std::f64::consts::PI * m0 / ((m0 * m0 + v2) * (m0 * m0 + v2)))
}

/// Independent oracle: the same integral by nested quadrature in spherical
/// coordinates (azimuth exact by symmetry; polar and radial numeric).
pub fn single_link_oracle(v: Vec3, m0: f64, tol: f64) -> Result<f64> {
    if !(m0 > 0.0) {
        return Err(Error::invalid("m0: must be > 0"));
    }
    let speed = v.norm();
    let radial = |mu: f64| -> f64 {
        adaptive_gk_halfline(
            &|r: f64| r * r * (-m0 * r).exp() * (speed * r * mu).cos(),
            3.0 / m0,
            tol * 0.1,
            18,
        )
        .map(|(val, _)| val)
        .unwrap_or(f64::NAN)
    };
    let (polar, _) = adaptive_gk(&radial, -1.0, 1.0, tol * 0.5, 14)?;
    Ok(2.0 * std::f64::consts::PI * polar)
}

/// Unnormalized single-link measure value with a convergence report.
#[derive(Clone, Debug, Serialize)]
pub struct WMeasureValue {
    pub value: f64,
    pub ln_value: f64,
    pub rel_err_bound: f64,
    pub converged: bool,
}

/// `W(P_1..P_N) = ∫d³q Π_k m₀/(m₀² + |P_k − q|²)²` by mode-centered
/// spherical quadrature: Gauss–Legendre in cos θ, uniform in φ, adaptive
/// Gauss–Kronrod on the compactified radius, with angular refinement until
/// the relative change is below `tol_rel`.
pub fn w_measure(points: &[Vec3], m0: f64, tol_rel: f64) -> Result<WMeasureValue> {
    if points.is_empty() {
        return Err(Error::invalid("points: need N >= 1"));
    }
    if !(m0 > 0.0) {
        return Err(Error::invalid("m0: must be > 0"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("points: non-finite entry"));
    }
    let n = points.len();

    // Log-density and its mode (mean-shift iteration on the stationarity
    // condition q* = Σ w_k P_k / Σ w_k, w_k = 1/(m₀² + r_k²)).
    let log_f = |q: Vec3| -> f64 {
        let mut s = 0.0;
        for p in points {
            let r2 = (*p - q).norm_sq();
            s += m0.ln() - 2.0 * (m0 * m0 + r2).ln();
        }
        s
    };
    let mut mode = {
        let mut c = Vec3::ZERO;
        for p in points {
            c += *p;
        }
        c / n as f64
    };
    for _ in 0..200 {
        let mut num = Vec3::ZERO;
        let mut den = 0.0;
        for p in points {
            let w = 1.0 / (m0 * m0 + (*p - mode).norm_sq());
            num += *p * w;
            den += w;
        }
        let next = num / den;
        let step = (next - mode).norm();
        mode = next;
        if step < 1e-13 * m0 {
            break;
        }
    }
    let ln_f0 = log_f(mode);

    let r_data = points
        .iter()
        .map(|p| (*p - mode).norm())
        .fold(0.0, f64::max);
    let r_scale = m0 + r_data;

    let radial = |dir: Vec3| -> f64 {
        adaptive_gk_halfline(
            &|r: f64| {
                let q = mode + dir * r;
                r * r * (log_f(q) - ln_f0).exp()
            },
            r_scale,
            (tol_rel * 0.1).max(1e-12),
            18,
        )
        .map(|(v, _)| v)
        .unwrap_or(f64::NAN)
    };

    let sphere_integral = |n_mu: usize, n_phi: usize| -> f64 {
        let (mu_nodes, mu_wts) = gauss_legendre(n_mu);
        let mut acc = 0.0;
        for (mu, wmu) in mu_nodes.iter().zip(&mu_wts) {
            let sint = (1.0 - mu * mu).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_phi as f64;
                let dir = Vec3::new(sint * phi.cos(), sint * phi.sin(), *mu);
                acc += wmu * (2.0 * std::f64::consts::PI / n_phi as f64) * radial(dir);
            }
        }
        acc
    };

    let mut n_mu = 6;
    let mut n_phi = 8;
    let mut prev = sphere_integral(n_mu, n_phi);
    let mut converged = false;
    let mut rel = f64::INFINITY;
    for _ in 0..5 {
        n_mu *= 2;
        n_phi *= 2;
        let cur = sphere_integral(n_mu, n_phi);
        rel = (cur - prev).abs() / cur.abs().max(1e-300);
        prev = cur;
        if rel <= tol_rel {
            converged = true;
            break;
        }
    }
    let ln_value = ln_f0 + prev.ln();
    Ok(WMeasureValue {
        value: ln_value.exp(),
        ln_value,
        rel_err_bound: rel,
        converged,
    })
}

/// Least-squares comparison of ln W against the large-N Gaussian form
/// `−2 Σ_k |P_k − P̄|²/m₀² + const` over random configurations near their
/// mean; returns the Pearson correlation of the fit.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianLimitReport {
    pub correlation: f64,
    pub n_configs: usize,
    pub spread_range: (f64, f64),
}

pub fn gaussian_limit_check(
    n: usize,
    m0: f64,
    seed: u64,
    spread_range: (f64, f64),
    n_configs: usize,
) -> Result<GaussianLimitReport> {
    if n < 1 {
        return Err(Error::invalid("N: must be >= 1"));
    }
    if n_configs < 3 {
        return Err(Error::invalid("n_configs: need >= 3 for a correlation"));
    }
    let normal = StandardNormal;
    let mut xs = Vec::with_capacity(n_configs);
    let mut ys = Vec::with_capacity(n_configs);
    for cfg in 0..n_configs {
        let mut rng = stream_rng(seed, Stream::WMeasure, cfg as u64);
        let frac = cfg as f64 / (n_configs - 1).max(1) as f64;
        let spread = spread_range.0 + (spread_range.1 - spread_range.0) * frac;
        let mut base = Vec3::ZERO;
        for i in 0..3 {
            let g: f64 = normal.sample(&mut rng);
            base.0[i] = m0 * g;
        }
        let points: Vec<Vec3> = (0..n)
            .map(|_| {
                // Uniform direction, radius ≤ spread·m₀.
                let mut d = Vec3::ZERO;
                loop {
                    for i in 0..3 {
                        let g: f64 = normal.sample(&mut rng);
                        d.0[i] = g;
                    }
                    if d.norm() > 1e-9 {
                        break;
                    }
                }
                let u: f64 = rng.random::<f64>();
                base + d * (spread * m0 * u.cbrt() / d.norm())
            })
            .collect();
        let mut mean = Vec3::ZERO;
        for p in &points {
            mean += *p;
        }
        let mean = mean / n as f64;
        let x: f64 = points
            .iter()
            .map(|p| -2.0 * (*p - mean).norm_sq() / (m0 * m0))
            .sum();
        let w = w_measure(&points, m0, 1e-7)?;
        xs.push(x);
        ys.push(w.ln_value);
    }
    Ok(GaussianLimitReport {
        correlation: pearson(&xs, &ys),
        n_configs,
        spread_range,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt().max(1e-300)
}

use rand::Rng;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::{make_circle_loop, make_fourier_loop};
    use crate::vec3::Rotation;

    #[test]
    fn kernel_normalization_matches_m0() {
        for profile in [KernelProfile::Gaussian, KernelProfile::Exponential] {
            let noise = NoiseParams {
                sigma: 0.7,
                r0: 0.3,
                profile,
            };
            let (integral, _) = adaptive_gk(
                &|x: f64| noise.kernel(x * x),
                -20.0 * noise.r0,
                20.0 * noise.r0,
                1e-10,
                20,
            )
            .unwrap();
            assert!(
                (integral - noise.m0_kernel()).abs() < 1e-8 * noise.m0_kernel(),
                "{profile:?}"
            );
        }
    }

    #[test]
    fn contraction_approaches_m0_perimeter() {
        let c = make_circle_loop(1.0, 2048, &Rotation::identity()).unwrap();
        let noise = NoiseParams {
            sigma: 1.0,
            r0: 1e-2,
            profile: KernelProfile::Gaussian,
        };
        let rep = contour_noise_contraction(&c, &noise, 16.0).unwrap();
        let rel = (rep.value - rep.limit).abs() / rep.limit;
        assert!(rel < 1e-2, "rel {rel}");
        assert!(rep.warning.is_none());

        // Halving r₀ shrinks the relative deviation.
        let tighter = NoiseParams {
            r0: 5e-3,
            ..noise
        };
        let rep2 = contour_noise_contraction(&c, &tighter, 16.0).unwrap();
        let rel2 = (rep2.value - rep2.limit).abs() / rep2.limit;
        assert!(rel2 < rel, "rel {rel} rel2 {rel2}");

        // Large r₀ triggers the curvature warning.
        let fat = NoiseParams { r0: 0.5, ..noise };
        let rep3 = contour_noise_contraction(&c, &fat, 16.0).unwrap();
        assert!(rep3.warning.is_some());
    }

    #[test]
    fn contraction_is_parametrization_invariant() {
        let a = make_circle_loop(1.0, 777, &Rotation::identity()).unwrap();
        let b = make_circle_loop(1.0, 2000, &Rotation::identity()).unwrap();
        let noise = NoiseParams {
            sigma: 1.0,
            r0: 2e-2,
            profile: KernelProfile::Gaussian,
        };
        let ra = contour_noise_contraction(&a, &noise, 16.0).unwrap();
        let rb = contour_noise_contraction(&b, &noise, 16.0).unwrap();
        assert!((ra.value - rb.value).abs() < 2e-3 * ra.value.abs());
    }

    #[test]
    fn noisy_psi0_basics() {
        let c = make_fourier_loop(7, 128, 5, 2.0, 1.0).unwrap();
        // σ = 0: pure phase of modulus exactly 1 and zero phase for a
        // closed loop with constant v₀.
        let silent = NoiseParams {
            sigma: 0.0,
            r0: 0.1,
            profile: KernelProfile::Gaussian,
        };
        let z = noisy_psi0(&c, Vec3::new(2.0, -1.0, 0.5), &silent, 1.3, 0.8).unwrap();
        assert_eq!(z.norm(), 1.0);
        assert!(z.arg().abs() < 1e-10);

        // Modulus nonincreasing in σ.
        let mk = |sigma: f64| NoiseParams {
            sigma,
            r0: 0.05,
            profile: KernelProfile::Gaussian,
        };
        let m1 = noisy_psi0(&c, Vec3::ZERO, &mk(0.1), 1.0, 1.0).unwrap().norm();
        let m2 = noisy_psi0(&c, Vec3::ZERO, &mk(0.2), 1.0, 1.0).unwrap().norm();
        let m3 = noisy_psi0(&c, Vec3::ZERO, &mk(0.4), 1.0, 1.0).unwrap().norm();
        assert!(m1 <= 1.0 && m2 <= m1 && m3 <= m2, "{m1} {m2} {m3}");
    }

    #[test]
    fn single_link_closed_form_vs_quadrature() {
        // v = 0: 8π/m₀³, the radial integral 4π∫r²e^{−r} = 8π at m₀ = 1.
        let v0 = single_link_integral(Vec3::ZERO, 1.0).unwrap();
        assert!((v0 - 8.0 * std::f64::consts::PI).abs() < 1e-12);
        let o0 = single_link_oracle(Vec3::ZERO, 1.0, 1e-9).unwrap();
        assert!((o0 - v0).abs() < 1e-6 * v0);

        // |v| = 1, m₀ = 1: 8π/4 = 2π.
        let v1 = single_link_integral(Vec3::new(0.0, 1.0, 0.0), 1.0).unwrap();
        assert!((v1 - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let o1 = single_link_oracle(Vec3::new(0.0, 1.0, 0.0), 1.0, 1e-9).unwrap();
        assert!((o1 - v1).abs() < 1e-6 * v1);

        // Scaling: value(λm₀, λv) = λ⁻³·value(m₀, v).
        let lam = 1.9;
        let a = single_link_integral(Vec3::new(0.3, -0.4, 1.0), 0.8).unwrap();
        let b = single_link_integral(Vec3::new(0.3, -0.4, 1.0) * lam, 0.8 * lam).unwrap();
        assert!((b - a / (lam * lam * lam)).abs() < 1e-12 * a);
    }

    #[test]
    fn single_link_grid_accuracy() {
        for &m0 in &[0.5, 1.0, 2.0] {
            for &speed in &[0.0, 1.0, 5.0] {
                let v = Vec3::new(0.0, 0.0, speed);
                let cf = single_link_integral(v, m0).unwrap();
                let or = single_link_oracle(v, m0, 1e-9).unwrap();
                assert!(
                    (cf - or).abs() <= 1e-6 * cf.abs(),
                    "m0={m0} v={speed}: {cf} vs {or}"
                );
            }
        }
    }

    #[test]
    fn w_measure_translation_invariance_and_n1_value() {
        // N = 1: ∫ m₀ d³q/(m₀²+q²)² = π², independent of P and m₀.
        let w1 = w_measure(&[Vec3::new(0.3, 0.4, -0.2)], 1.0, 1e-8).unwrap();
        assert!(w1.converged);
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        assert!((w1.value - pi2).abs() < 1e-5 * pi2, "{}", w1.value);
        let w2 = w_measure(&[Vec3::new(-5.0, 2.0, 7.0)], 1.0, 1e-8).unwrap();
        assert!((w1.value - w2.value).abs() < 1e-6 * pi2);
        let w3 = w_measure(&[Vec3::new(0.3, 0.4, -0.2)], 0.35, 1e-8).unwrap();
        assert!((w3.value - pi2).abs() < 1e-5 * pi2);
    }

    #[test]
    fn w_measure_global_shift_invariance() {
        let pts = vec![
            Vec3::new(0.2, 0.0, -0.1),
            Vec3::new(-0.3, 0.4, 0.0),
            Vec3::new(0.1, -0.2, 0.3),
            Vec3::new(0.0, 0.1, 0.1),
        ];
        let shift = Vec3::new(2.0, -7.0, 4.0);
        let shifted: Vec<Vec3> = pts.iter().map(|&p| p + shift).collect();
        let a = w_measure(&pts, 1.0, 1e-7).unwrap();
        let b = w_measure(&shifted, 1.0, 1e-7).unwrap();
        assert!((a.value - b.value).abs() <= 1e-6 * a.value);
        assert!(a.value > 0.0);
    }

    #[test]
    fn w_measure_concentrated_beats_spread() {
        let tight = vec![Vec3::new(0.1, 0.0, 0.0); 6];
        let spread = vec![
            Vec3::new(1.5, 0.0, 0.0),
            Vec3::new(-1.5, 0.2, 0.0),
            Vec3::new(0.0, 1.5, -0.3),
            Vec3::new(0.0, -1.5, 0.1),
            Vec3::new(0.3, 0.0, 1.5),
            Vec3::new(-0.2, 0.1, -1.5),
        ];
        let a = w_measure(&tight, 1.0, 1e-7).unwrap();
        let b = w_measure(&spread, 1.0, 1e-7).unwrap();
        assert!(a.value > b.value);
        assert!(b.value > 0.0);
    }

    #[test]
    fn gaussian_limit_holds_at_large_n_small_spread() {
        let rep = gaussian_limit_check(64, 1.0, 3, (0.02, 0.1), 24).unwrap();
        assert!(rep.correlation >= 0.99, "corr {}", rep.correlation);
        // Negative control: small N, large spread.
        let bad = gaussian_limit_check(4, 1.0, 3, (1.0, 3.0), 24).unwrap();
        assert!(bad.correlation < 0.99, "corr {}", bad.correlation);
    }
}
