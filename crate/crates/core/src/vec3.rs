//! Real and complex 3-vectors.
//!
//! All complex dot products in this crate are unconjugated bilinear forms,
//! `a·b = Σ aᵢbᵢ`: the momentum-loop algebra manipulates complex squares
//! without conjugation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Real 3-vector.
#[derive(Copy, Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

/// Complex 3-vector.
#[derive(Copy, Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CVec3(pub [Complex64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        let a = self.0;
        let b = other.0;
        Vec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Lift to a complex vector with zero imaginary part.
    pub fn to_complex(self) -> CVec3 {
        CVec3([
            Complex64::new(self.0[0], 0.0),
            Complex64::new(self.0[1], 0.0),
            Complex64::new(self.0[2], 0.0),
        ])
    }
}

impl CVec3 {
    pub const ZERO: CVec3 = CVec3([Complex64::new(0.0, 0.0); 3]);

    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        CVec3([x, y, z])
    }

    pub fn from_re_im(re: Vec3, im: Vec3) -> Self {
        CVec3([
            Complex64::new(re.0[0], im.0[0]),
            Complex64::new(re.0[1], im.0[1]),
            Complex64::new(re.0[2], im.0[2]),
        ])
    }

    /// Unconjugated bilinear dot: `Σ aᵢbᵢ`.
    pub fn dot(self, other: CVec3) -> Complex64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    /// Dot with a real vector.
    pub fn dot_real(self, other: Vec3) -> Complex64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: CVec3) -> CVec3 {
        let a = self.0;
        let b = other.0;
        CVec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    /// Unconjugated square `v·v` (complex).
    pub fn square(self) -> Complex64 {
        self.dot(self)
    }

    /// Euclidean modulus `sqrt(Σ |vᵢ|²)` (real, conjugating).
    pub fn modulus(self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn re(self) -> Vec3 {
        Vec3([self.0[0].re, self.0[1].re, self.0[2].re])
    }

    pub fn im(self) -> Vec3 {
        Vec3([self.0[0].im, self.0[1].im, self.0[2].im])
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(self, s: Complex64) -> CVec3 {
        CVec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3([self.0[0] / s, self.0[1] / s, self.0[2] / s])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        for i in 0..3 {
            self.0[i] += o.0[i];
        }
    }
}

impl Add for CVec3 {
    type Output = CVec3;
    fn add(self, o: CVec3) -> CVec3 {
        CVec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for CVec3 {
    type Output = CVec3;
    fn sub(self, o: CVec3) -> CVec3 {
        CVec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for CVec3 {
    type Output = CVec3;
    fn neg(self) -> CVec3 {
        CVec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for CVec3 {
    type Output = CVec3;
    fn mul(self, s: f64) -> CVec3 {
        CVec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl AddAssign for CVec3 {
    fn add_assign(&mut self, o: CVec3) {
        for i in 0..3 {
            self.0[i] += o.0[i];
        }
    }
}

/// 3×3 rotation matrix (row-major).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Build from a unit quaternion `(w, x, y, z)`; the input is normalized.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Rotation([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }

    pub fn apply_complex(&self, v: CVec3) -> CVec3 {
        let re = self.apply(v.re());
        let im = self.apply(v.im());
        CVec3::from_re_im(re, im)
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max deviation of `RᵀR` from the identity plus `|det − 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += t.0[i][k] * t.0[j][k];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst.max((self.det() - 1.0).abs())
    }

    /// Rotation by `angle` about the z axis.
    pub fn about_z(angle: f64) -> Rotation {
        let (s, c) = angle.sin_cos();
        Rotation([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }
}

/// Real antisymmetric 3×3 matrix, the generator of a uniform rotation flow
/// `v_α(r) = φ_{αβ} r_β`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntisymMatrix(pub [[f64; 3]; 3]);

impl AntisymMatrix {
    /// Build from the three independent components `(φ_xy, φ_xz, φ_yz)`.
    pub fn new(xy: f64, xz: f64, yz: f64) -> Self {
        AntisymMatrix([[0.0, xy, xz], [-xy, 0.0, yz], [-xz, -yz, 0.0]])
    }

    pub fn zero() -> Self {
        AntisymMatrix::new(0.0, 0.0, 0.0)
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[a][b]
    }

    /// Frobenius norm divided by √2, i.e. the magnitude of the generator:
    /// equals `|φ_xy|` for a pure xy rotation.
    pub fn magnitude(&self) -> f64 {
        let m = &self.0;
        (m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2]).sqrt()
    }

    /// Contract with another 3×3 matrix: `Σ_{αβ} φ_{αβ} M_{αβ}`.
    pub fn contract(&self, m: &[[f64; 3]; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += self.0[a][b] * m[a][b];
            }
        }
        s
    }

    /// Apply to a real vector: `(φ v)_α = φ_{αβ} v_β`.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }
}
