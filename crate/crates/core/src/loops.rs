//! Spatial and momentum polygons.
//!
//! A loop is stored as its N vertices; closure is implicit (vertex N ≡ vertex
//! 0) so the edge sum `Σ_k ΔC_k` telescopes to zero by construction. The
//! discrete circulation contracts edges of the spatial polygon with vertex
//! values of the momentum polygon (a Lebesgue sum); a midpoint variant is
//! provided and must agree within O(1/N) on smooth data. The two conventions
//! coincide exactly on the decaying-turbulence fixed point, where the
//! realness of the circulation telescopes vertex-wise in the default one.

use crate::error::Error;
use crate::rng::{stream_rng, Stream};
use crate::vec3::{CVec3, Rotation, Vec3};
use crate::Result;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

/// Closed polygon of N real 3-vectors (the contour carrying circulation).
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialLoop {
    vertices: Vec<Vec3>,
}

/// Closed polygon of N complex 3-vectors: the momentum loop `P` (velocity
/// units) or its dimensionless rescaling `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumLoop {
    vertices: Vec<CVec3>,
    /// True if this stores the dimensionless variable F rather than P.
    pub dimensionless: bool,
}

impl SpatialLoop {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "vertices: a loop needs N >= 3 vertices, got {}",
                vertices.len()
            )));
        }
        if !vertices.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("vertices: non-finite coordinate"));
        }
        Ok(SpatialLoop { vertices })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, k: usize) -> Vec3 {
        self.vertices[k % self.n()]
    }

    /// Edge `ΔC_k = C_{k+1} − C_k` with cyclic indexing.
    pub fn edge(&self, k: usize) -> Vec3 {
        let n = self.n();
        self.vertices[(k + 1) % n] - self.vertices[k % n]
    }

    /// Midpoint of edge k.
    pub fn edge_midpoint(&self, k: usize) -> Vec3 {
        let n = self.n();
        (self.vertices[(k + 1) % n] + self.vertices[k % n]) * 0.5
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.n()).map(|k| self.edge(k).norm()).sum()
    }

    /// Sum of all edges; zero up to rounding for any closed polygon.
    pub fn closure_defect(&self) -> Vec3 {
        let mut s = Vec3::ZERO;
        for k in 0..self.n() {
            s += self.edge(k);
        }
        s
    }

    pub fn translated(&self, shift: Vec3) -> SpatialLoop {
        SpatialLoop {
            vertices: self.vertices.iter().map(|&v| v + shift).collect(),
        }
    }

    pub fn reversed(&self) -> SpatialLoop {
        let mut v = self.vertices.clone();
        v.reverse();
        SpatialLoop { vertices: v }
    }

    /// Reflect every vertex through the origin.
    pub fn reflected(&self) -> SpatialLoop {
        SpatialLoop {
            vertices: self.vertices.iter().map(|&v| -v).collect(),
        }
    }

    pub fn cyclic_shift(&self, by: usize) -> SpatialLoop {
        let n = self.n();
        SpatialLoop {
            vertices: (0..n).map(|k| self.vertices[(k + by) % n]).collect(),
        }
    }

    /// Resample to `m` vertices equidistributed in arc length along the
    /// polygon boundary. Circulation sums require the two polygons to share
    /// N, so Monte Carlo estimators resample the contour to each sample's N.
    pub fn resample(&self, m: usize) -> Result<SpatialLoop> {
        if m < 3 {
            return Err(Error::invalid("resample: need m >= 3"));
        }
        let n = self.n();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for k in 0..n {
            cum.push(cum[k] + self.edge(k).norm());
        }
        let total = cum[n];
        if total <= 0.0 {
            return Err(Error::invalid("resample: degenerate loop with zero perimeter"));
        }
        let mut out = Vec::with_capacity(m);
        let mut seg = 0usize;
        for j in 0..m {
            let s = total * (j as f64) / (m as f64);
            while seg + 1 < n && cum[seg + 1] <= s {
                seg += 1;
            }
            let ds = cum[seg + 1] - cum[seg];
            let t = if ds > 0.0 { (s - cum[seg]) / ds } else { 0.0 };
            out.push(self.vertices[seg] + self.edge(seg) * t);
        }
        SpatialLoop::new(out)
    }
}

impl MomentumLoop {
    pub fn new(vertices: Vec<CVec3>, dimensionless: bool) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "vertices: a momentum loop needs N >= 3 vertices, got {}",
                vertices.len()
            )));
        }
        if !vertices.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("vertices: non-finite entry"));
        }
        Ok(MomentumLoop {
            vertices,
            dimensionless,
        })
    }

    /// A loop with all vertices equal (its evolution is frozen: ΔP = 0).
    pub fn constant(v: CVec3, n: usize, dimensionless: bool) -> Result<Self> {
        MomentumLoop::new(vec![v; n], dimensionless)
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[CVec3] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [CVec3] {
        &mut self.vertices
    }

    pub fn vertex(&self, k: usize) -> CVec3 {
        self.vertices[k % self.n()]
    }

    /// Backward difference `ΔP_k = P_k − P_{k−1}` (cyclic).
    pub fn delta(&self, k: usize) -> CVec3 {
        let n = self.n();
        self.vertices[k % n] - self.vertices[(k + n - 1) % n]
    }

    /// Backward midpoint `(P_k + P_{k−1})/2` (cyclic).
    pub fn midpoint(&self, k: usize) -> CVec3 {
        let n = self.n();
        (self.vertices[k % n] + self.vertices[(k + n - 1) % n]) * 0.5
    }

    /// Value at angle θ under the piecewise-constant convention:
    /// `P(θ) = P_j` for θ ∈ [2πj/N, 2π(j+1)/N).
    pub fn at_angle(&self, theta: f64) -> CVec3 {
        let n = self.n();
        let tau = 2.0 * std::f64::consts::PI;
        let mut t = theta % tau;
        if t < 0.0 {
            t += tau;
        }
        let j = ((t / tau) * n as f64).floor() as usize;
        self.vertices[j.min(n - 1)]
    }

    /// Nearest vertex index for an angle θ.
    pub fn nearest_index(&self, theta: f64) -> usize {
        let n = self.n();
        let tau = 2.0 * std::f64::consts::PI;
        let mut t = theta % tau;
        if t < 0.0 {
            t += tau;
        }
        (((t / tau) * n as f64).round() as usize) % n
    }

    pub fn scaled(&self, s: Complex64) -> MomentumLoop {
        MomentumLoop {
            vertices: self.vertices.iter().map(|v| v.scale(s)).collect(),
            dimensionless: self.dimensionless,
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.modulus())
            .fold(0.0, f64::max)
    }
}

/// Circle of given radius in the plane `orientation · {z = 0}`, N vertices.
pub fn make_circle_loop(radius: f64, n: usize, orientation: &Rotation) -> Result<SpatialLoop> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius: must be > 0, got {radius}")));
    }
    if n < 3 {
        return Err(Error::invalid(format!("N: must be >= 3, got {n}")));
    }
    let vertices = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
            orientation.apply(Vec3::new(radius * th.cos(), radius * th.sin(), 0.0))
        })
        .collect();
    SpatialLoop::new(vertices)
}

/// Axis-aligned planar square in the xy plane with the given circumradius.
pub fn make_square_loop(circumradius: f64) -> Result<SpatialLoop> {
    if !(circumradius > 0.0) {
        return Err(Error::invalid("circumradius: must be > 0"));
    }
    let r = circumradius;
    SpatialLoop::new(vec![
        Vec3::new(r, 0.0, 0.0),
        Vec3::new(0.0, r, 0.0),
        Vec3::new(-r, 0.0, 0.0),
        Vec3::new(0.0, -r, 0.0),
    ])
}

/// Random smooth loop from a truncated Fourier series with decaying mode
/// amplitudes. `spectral_decay > 1` keeps consecutive edges close,
/// `|ΔC_{k+1} − ΔC_k| ≪ |ΔC_k|`, which is the smoothness premise of the
/// discrete circulation sum.
pub fn make_fourier_loop(
    seed: u64,
    n: usize,
    mode_count: usize,
    spectral_decay: f64,
    amplitude: f64,
) -> Result<SpatialLoop> {
    if n < 3 {
        return Err(Error::invalid(format!("N: must be >= 3, got {n}")));
    }
    if mode_count < 1 {
        return Err(Error::invalid("mode_count: must be >= 1"));
    }
    if !(spectral_decay > 1.0) {
        return Err(Error::invalid(format!(
            "spectral_decay: must be > 1 for smoothness, got {spectral_decay}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::FourierLoop, 0);
    let normal = StandardNormal;
    let mut cos_amp = vec![Vec3::ZERO; mode_count];
    let mut sin_amp = vec![Vec3::ZERO; mode_count];
    for m in 0..mode_count {
        let w = amplitude * ((m + 1) as f64).powf(-spectral_decay);
        for i in 0..3 {
            let gc: f64 = normal.sample(&mut rng);
            let gs: f64 = normal.sample(&mut rng);
            cos_amp[m].0[i] = w * gc;
            sin_amp[m].0[i] = w * gs;
        }
    }
    let vertices: Vec<Vec3> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
            let mut v = Vec3::ZERO;
            for m in 0..mode_count {
                let a = ((m + 1) as f64) * th;
                v += cos_amp[m] * a.cos() + sin_amp[m] * a.sin();
            }
            v
        })
        .collect();
    let lp = SpatialLoop::new(vertices)?;
    if lp.perimeter() <= 0.0 {
        return Err(Error::invalid(
            "amplitude: all Fourier modes vanish, degenerate loop",
        ));
    }
    Ok(lp)
}

/// Random smooth momentum loop (complex), built from two Fourier loops.
pub fn make_fourier_momentum_loop(
    seed: u64,
    n: usize,
    mode_count: usize,
    spectral_decay: f64,
    amplitude: f64,
    imag_fraction: f64,
) -> Result<MomentumLoop> {
    let re = make_fourier_loop(seed, n, mode_count, spectral_decay, amplitude)?;
    let im = make_fourier_loop(seed ^ 0x9e37_79b9_7f4a_7c15, n, mode_count, spectral_decay, amplitude)?;
    let vertices = (0..n)
        .map(|k| CVec3::from_re_im(re.vertices()[k], im.vertices()[k] * imag_fraction))
        .collect();
    MomentumLoop::new(vertices, false)
}

/// Discrete circulation `Σ_k ΔC_k · F_k` (vertex convention, the default).
pub fn circulation_sum(c: &SpatialLoop, f: &MomentumLoop) -> Result<Complex64> {
    if c.n() != f.n() {
        return Err(Error::LengthMismatch {
            context: "circulation_sum",
            left: c.n(),
            right: f.n(),
        });
    }
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..c.n() {
        s += f.vertex(k).dot_real(c.edge(k));
    }
    Ok(s)
}

/// Midpoint variant `Σ_k ΔC_k · (F_k + F_{k+1})/2`; agrees with the vertex
/// convention within O(1/N) on smooth data.
pub fn circulation_sum_midpoint(c: &SpatialLoop, f: &MomentumLoop) -> Result<Complex64> {
    if c.n() != f.n() {
        return Err(Error::LengthMismatch {
            context: "circulation_sum_midpoint",
            left: c.n(),
            right: f.n(),
        });
    }
    let n = c.n();
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mid = (f.vertex(k) + f.vertex((k + 1) % n)) * 0.5;
        s += mid.dot_real(c.edge(k));
    }
    Ok(s)
}

/// Scale of a circulation sum, `Σ_k |ΔC_k||F_k|`, used to normalize realness
/// checks.
pub fn circulation_scale(c: &SpatialLoop, f: &MomentumLoop) -> Result<f64> {
    if c.n() != f.n() {
        return Err(Error::LengthMismatch {
            context: "circulation_scale",
            left: c.n(),
            right: f.n(),
        });
    }
    Ok((0..c.n())
        .map(|k| c.edge(k).norm() * f.vertex(k).modulus())
        .sum())
}

/// Discrete tensor area `Σ_{αβ} = Σ_k ΔC_{k,α} C̄_{k,β}` with `C̄` the edge
/// midpoint; the midpoint makes antisymmetry exact at finite N because the
/// symmetric part telescopes.
pub fn tensor_area(c: &SpatialLoop) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for k in 0..c.n() {
        let d = c.edge(k);
        let m = c.edge_midpoint(k);
        for a in 0..3 {
            for b in 0..3 {
                t[a][b] += d.0[a] * m.0[b];
            }
        }
    }
    // Drop the (rounding-level) symmetric residue.
    let mut anti = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            anti[a][b] = 0.5 * (t[a][b] - t[b][a]);
        }
    }
    anti
}

/// Zero-area contour from the centroid out to each correlation point and
/// back: n "spokes" with tips at angles θ_1 < … < θ_n on the unit circle.
#[derive(Clone, Debug)]
pub struct SpokesLoop {
    pub points: Vec<Vec3>,
    pub center: Vec3,
    /// Strictly increasing tip angles in (0, 2π).
    pub angles: Vec<f64>,
    /// Arc midpoints θ̃_k = (θ_{k−1} + θ_k)/2 mod 2π; θ̃_1 wraps through 0.
    pub mid_angles: Vec<f64>,
}

/// Build a spokes loop from points and their tip angles.
///
/// Angles must be strictly increasing in (0, 2π); duplicates are rejected
/// because two spokes then occupy the same arc.
pub fn make_spokes_loop(points: &[Vec3], angles: &[f64]) -> Result<SpokesLoop> {
    let n = points.len();
    if n == 0 {
        return Err(Error::invalid("points: need n >= 1"));
    }
    if angles.len() != n {
        return Err(Error::LengthMismatch {
            context: "make_spokes_loop",
            left: n,
            right: angles.len(),
        });
    }
    let tau = 2.0 * std::f64::consts::PI;
    for (i, &a) in angles.iter().enumerate() {
        if !(a > 0.0 && a < tau) {
            return Err(Error::invalid(format!(
                "angles[{i}]: must lie strictly inside (0, 2п), got {a}"
            )));
        }
        if i > 0 && a <= angles[i - 1] {
            return Err(Error::invalid(format!(
                "angles[{i}]: duplicate or non-increasing angle {a}"
            )));
        }
    }
    let mut center = Vec3::ZERO;
    for &p in points {
        center += p;
    }
    let center = center / (n as f64);
    // θ̃_1 is the midpoint of the wrap-around arc from θ_n back to θ_1.
    let mut mid = Vec::with_capacity(n);
    mid.push(0.5 * (angles[n - 1] - tau + angles[0]));
    for k in 1..n {
        mid.push(0.5 * (angles[k - 1] + angles[k]));
    }
    Ok(SpokesLoop {
        points: points.to_vec(),
        center,
        angles: angles.to_vec(),
        mid_angles: mid,
    })
}

impl SpokesLoop {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Polygonal rendering (out-and-back along each spoke), mainly for area
    /// and circulation checks; `sub` points per half-spoke.
    pub fn to_spatial(&self, sub: usize) -> Result<SpatialLoop> {
        let sub = sub.max(1);
        let mut v = Vec::new();
        for k in 0..self.n() {
            for j in 0..sub {
                let t = j as f64 / sub as f64;
                v.push(self.center + (self.points[k] - self.center) * t);
            }
            for j in 0..sub {
                let t = j as f64 / sub as f64;
                v.push(self.points[k] + (self.center - self.points[k]) * t);
            }
        }
        SpatialLoop::new(v)
    }
}
