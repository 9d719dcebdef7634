//! Totients, coprime enumeration, and the cotangent-squared distribution law
//! for star-polygon radii.
//!
//! A regular star polygon {q/p} with unit side has circumradius
//! `R = 1/(2 sin(πp/q))`, so `X(p,q) = cot²(πp/q)/N² = (4R² − 1)/N²`. Over
//! coprime pairs `1 ≤ p < q < N` the limiting law of X is an atom at zero of
//! weight `w₀ = 1 − π²/(675 ζ(5))` plus the continuous density
//! `f_X(X) = (π³/3)·X^{3/2}·Φ(⌊1/(π√X)⌋)`, where Φ is the totient summatory
//! function. The continuous branch is reproduced empirically by weighting
//! each pair with X² ∝ (4R²−1)²; unweighted pair counting concentrates all
//! mass at the atom as N → ∞.

use crate::error::Error;
use crate::quad::adaptive_gk;
use crate::Result;

/// Hard cap on sieve size: Φ stays well inside u64 and memory stays sane.
pub const MAX_SIEVE: u64 = 100_000_000;

/// Exact totients φ(n) for n ≤ limit, with prefix sums Φ.
pub struct TotientTable {
    limit: u64,
    phi: Vec<u32>,
    phi_sum: Vec<u64>,
}

/// Linear sieve of Euler totients up to `q_max`.
pub fn totient_sieve(q_max: u64) -> Result<TotientTable> {
    if q_max < 1 {
        return Err(Error::invalid("q_max: must be >= 1"));
    }
    if q_max > MAX_SIEVE {
        return Err(Error::invalid(format!(
            "q_max: {q_max} exceeds the sieve cap {MAX_SIEVE}"
        )));
    }
    let n = q_max as usize;
    let mut phi: Vec<u32> = vec![0; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    phi[1] = 1;
    for i in 2..=n {
        if phi[i] == 0 {
            phi[i] = (i - 1) as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip > n {
                break;
            }
            if i % p as usize == 0 {
                phi[ip] = phi[i] * p;
                break;
            } else {
                phi[ip] = phi[i] * (p - 1);
            }
        }
    }
    let mut phi_sum = vec![0u64; n + 1];
    for i in 1..=n {
        phi_sum[i] = phi_sum[i - 1] + phi[i] as u64;
    }
    Ok(TotientTable {
        limit: q_max,
        phi,
        phi_sum,
    })
}

impl TotientTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn phi(&self, n: u64) -> u32 {
        self.phi[n as usize]
    }

    /// Totient summatory function Φ(q) = Σ_{n≤q} φ(n); Φ(0) = 0.
    pub fn phi_sum(&self, q: u64) -> u64 {
        if q == 0 {
            0
        } else {
            self.phi_sum[(q.min(self.limit)) as usize]
        }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Iterator over coprime pairs (p, q), 1 ≤ p < q ≤ q_max, each exactly once,
/// ordered by q then p. Total count is Φ(q_max) − 1.
pub fn coprime_pairs(q_max: u64) -> impl Iterator<Item = (u64, u64)> {
    (2..=q_max).flat_map(move |q| (1..q).filter(move |&p| gcd(p, q) == 1).map(move |p| (p, q)))
}

/// ζ(5) by direct series summed small-to-large plus an Euler–Maclaurin tail;
/// remainder below 1e−15.
pub fn zeta5() -> f64 {
    let n = 1_000_000u64;
    let mut s = 0.0;
    for k in (1..=n).rev() {
        let x = k as f64;
        s += 1.0 / (x * x * x * x * x);
    }
    let m = (n + 1) as f64;
    s + 1.0 / (4.0 * m.powi(4)) + 1.0 / (2.0 * m.powi(5)) + 5.0 / (12.0 * m.powi(6))
}

/// The distribution law of X = cot²(πp/q)/N²: atom at zero plus a piecewise
/// power density with jumps at X = 1/(πm)².
pub struct CotDistLaw {
    zeta5: f64,
    /// Cumulative continuous mass in (X_{m+1}, ∞) for m = 0..branches.
    mass_above: Vec<f64>,
    table_limit: u64,
    table: TotientTable,
}

impl CotDistLaw {
    /// Build the law using exact totients up to `branches` (the number of
    /// density branches resolved; X below 1/(π·branches)² carries mass
    /// O(branches⁻³) which is clamped to zero).
    pub fn new(branches: u64) -> Result<Self> {
        let table = totient_sieve(branches.max(2))?;
        let z5 = zeta5();
        let mut mass_above = Vec::with_capacity(branches as usize + 1);
        mass_above.push(0.0);
        let mut acc = 0.0;
        for m in 1..=branches {
            acc += branch_mass(&table, m);
            mass_above.push(acc);
        }
        Ok(CotDistLaw {
            zeta5: z5,
            mass_above,
            table_limit: branches,
            table,
        })
    }

    /// Weight of the delta function at X = 0: `1 − π²/(675 ζ(5))`.
    pub fn atom_weight(&self) -> f64 {
        let pi = std::f64::consts::PI;
        1.0 - pi * pi / (675.0 * self.zeta5)
    }

    /// Total mass of the continuous part, `π²/(675 ζ(5)) = 1 − w₀`.
    pub fn continuous_mass(&self) -> f64 {
        let pi = std::f64::consts::PI;
        pi * pi / (675.0 * self.zeta5)
    }

    /// Continuous density `f_X(X) = (π³/3)·X√X·Φ(⌊1/(π√X)⌋)` for X > 0.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::invalid("X: must be >= 0"));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let pi = std::f64::consts::PI;
        let m = (1.0 / (pi * x.sqrt())).floor() as u64;
        if m == 0 {
            return Ok(0.0); // beyond the support (0, 1/π²]
        }
        if m > self.table_limit {
            return Err(Error::invalid(format!(
                "X = {x:e} needs totient branch {m} beyond the resolved {}",
                self.table_limit
            )));
        }
        Ok(pi.powi(3) / 3.0 * x * x.sqrt() * self.table.phi_sum(m) as f64)
    }

    /// Unnormalized continuous CDF `∫_0^x f_X`, branchwise closed form.
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let pi = std::f64::consts::PI;
        let m = (1.0 / (pi * x.sqrt())).floor() as u64;
        if m == 0 {
            return self.continuous_mass();
        }
        if m > self.table_limit {
            return 0.0; // residual mass O(limit⁻³), clamped
        }
        let xm = 1.0 / (pi * pi * (m * m) as f64);
        let partial = pi.powi(3) / 3.0
            * self.table.phi_sum(m) as f64
            * 0.4
            * (xm.powf(2.5) - x.powf(2.5));
        let above = self.mass_above[(m - 1) as usize] + partial;
        (self.continuous_mass() - above).max(0.0)
    }

    /// Continuous CDF normalized to 1 over the continuous part.
    pub fn continuous_cdf_normalized(&self, x: f64) -> f64 {
        self.continuous_cdf(x) / self.continuous_mass()
    }

    /// Integrate the density by adaptive quadrature, splitting at every jump
    /// point 1/(πm)², until the remaining branch mass bound drops below
    /// `tail_bound`. Independent check that atom + density is a probability
    /// distribution.
    pub fn continuous_mass_by_quadrature(&self, tail_bound: f64) -> Result<f64> {
        let pi = std::f64::consts::PI;
        let mut total = 0.0;
        for m in 1..=self.table_limit {
            let hi = 1.0 / (pi * pi * (m * m) as f64);
            let lo = 1.0 / (pi * pi * ((m + 1) * (m + 1)) as f64);
            let (v, _) = adaptive_gk(
                &|x| {
                    let phi_m = self.table.phi_sum(m) as f64;
                    pi.powi(3) / 3.0 * x * x.sqrt() * phi_m
                },
                lo,
                hi,
                1e-12,
                16,
            )?;
            total += v;
            // Φ(m) ≤ m² gives Σ_{m'>m} mass ≤ (2/9π²)·m⁻³.
            let remaining = 2.0 / (9.0 * pi * pi) * ((m * m * m) as f64).recip();
            if remaining < tail_bound {
                return Ok(total);
            }
        }
        Err(Error::QuadratureAccuracy {
            achieved: 2.0 / (9.0 * pi * pi) * (self.table_limit as f64).powi(-3),
            requested: tail_bound,
        })
    }
}

/// Continuous mass of branch m, `(π³/3)Φ(m)·(2/5)(X_m^{5/2} − X_{m+1}^{5/2})`.
fn branch_mass(table: &TotientTable, m: u64) -> f64 {
    let pi = std::f64::consts::PI;
    let xm = 1.0 / (pi * pi * (m * m) as f64);
    let xm1 = 1.0 / (pi * pi * ((m + 1) * (m + 1)) as f64);
    pi.powi(3) / 3.0 * table.phi_sum(m) as f64 * 0.4 * (xm.powf(2.5) - xm1.powf(2.5))
}

/// Exact enumeration of X(p,q) = cot²(πp/q)/N² over all coprime pairs with
/// q < N: histogram (unweighted counts and X²-weighted mass) plus the KS
/// distance of the weighted empirical CDF from the law's continuous part.
pub struct CotDistEmpirical {
    pub n: u64,
    pub pair_count: u64,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// X²-weighted mass per bin, normalized to sum to 1.
    pub weighted_mass: Vec<f64>,
    /// Law's continuous mass per bin (normalized), for side-by-side output.
    pub law_mass: Vec<f64>,
    pub ks_weighted: f64,
}

/// All X values with their X² weights, sorted ascending.
pub fn cot_x_values(n: u64) -> Vec<f64> {
    let mut xs: Vec<f64> = coprime_pairs(n - 1)
        .map(|(p, q)| {
            let a = std::f64::consts::PI * p as f64 / q as f64;
            let c = a.cos() / a.sin();
            c * c / ((n * n) as f64)
        })
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs
}

/// Kolmogorov–Smirnov distance between the X²-weighted empirical CDF and the
/// law's normalized continuous CDF.
pub fn ks_weighted(n: u64, law: &CotDistLaw) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("N: must be >= 3"));
    }
    let xs = cot_x_values(n);
    let wsum: f64 = xs.iter().map(|x| x * x).sum();
    if wsum <= 0.0 {
        return Err(Error::invalid("N: no nonzero X values"));
    }
    let mut cdf = 0.0;
    let mut d: f64 = 0.0;
    for &x in &xs {
        let g = law.continuous_cdf_normalized(x);
        d = d.max((cdf - g).abs());
        cdf += x * x / wsum;
        d = d.max((cdf - g).abs());
    }
    Ok(d)
}

pub fn empirical_cot_dist(n: u64, bins: usize, law: &CotDistLaw) -> Result<CotDistEmpirical> {
    if n < 3 {
        return Err(Error::invalid("N: must be >= 3"));
    }
    if bins < 1 {
        return Err(Error::invalid("bins: must be >= 1"));
    }
    let xs = cot_x_values(n);
    let pair_count = xs.len() as u64;
    let pi = std::f64::consts::PI;
    let hi = 1.0 / (pi * pi);
    let edges: Vec<f64> = (0..=bins).map(|i| hi * i as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    let mut weighted = vec![0.0; bins];
    let wsum: f64 = xs.iter().map(|x| x * x).sum();
    for &x in &xs {
        let mut b = ((x / hi) * bins as f64).floor() as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
        weighted[b] += x * x / wsum;
    }
    let law_mass: Vec<f64> = (0..bins)
        .map(|b| {
            (law.continuous_cdf(edges[b + 1]) - law.continuous_cdf(edges[b]))
                / law.continuous_mass()
        })
        .collect();
    let ks = ks_weighted(n, law)?;
    Ok(CotDistEmpirical {
        n,
        pair_count,
        bin_edges: edges,
        counts,
        weighted_mass: weighted,
        law_mass,
        ks_weighted: ks,
    })
}
