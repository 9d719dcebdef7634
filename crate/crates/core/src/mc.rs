//! Deterministic parallel Monte Carlo reduction.
//!
//! Work is cut into fixed-size chunks of sample indices; chunks are mapped in
//! parallel and their partial sums are folded in chunk order, so the result
//! is bit-identical for any worker count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Samples per reduction chunk. Fixed: part of the reproducibility contract.
pub const CHUNK: u64 = 1024;

/// Monte Carlo estimate of a complex mean.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub stderr: [f64; 2],
    pub n_samples: u64,
    pub seed: u64,
    /// Wall-clock seconds; excluded from serialized artifacts so outputs
    /// stay byte-reproducible.
    #[serde(skip)]
    pub wall_secs: f64,
}

impl Estimate {
    /// Combined standard error magnitude.
    pub fn stderr_norm(&self) -> f64 {
        (self.stderr[0] * self.stderr[0] + self.stderr[1] * self.stderr[1]).sqrt()
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    sum_re: f64,
    sum_im: f64,
    sq_re: f64,
    sq_im: f64,
}

impl Acc {
    fn push(&mut self, z: Complex64) {
        self.sum_re += z.re;
        self.sum_im += z.im;
        self.sq_re += z.re * z.re;
        self.sq_im += z.im * z.im;
    }

    fn merge(&mut self, o: &Acc) {
        self.sum_re += o.sum_re;
        self.sum_im += o.sum_im;
        self.sq_re += o.sq_re;
        self.sq_im += o.sq_im;
    }
}

/// Mean of `f(index)` over `n_samples` indices, chunk-parallel and
/// order-stable.
pub fn mc_mean_complex<F>(n_samples: u64, seed: u64, f: F) -> Estimate
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let t0 = std::time::Instant::now();
    let n_chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<Acc> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n_samples);
            let mut acc = Acc::default();
            for i in lo..hi {
                acc.push(f(i));
            }
            acc
        })
        .collect();
    let mut total = Acc::default();
    for p in &partials {
        total.merge(p);
    }
    let n = n_samples as f64;
    let mean = Complex64::new(total.sum_re / n, total.sum_im / n);
    let var_re = (total.sq_re / n - mean.re * mean.re).max(0.0);
    let var_im = (total.sq_im / n - mean.im * mean.im).max(0.0);
    Estimate {
        mean,
        stderr: [(var_re / n).sqrt(), (var_im / n).sqrt()],
        n_samples,
        seed,
        wall_secs: t0.elapsed().as_secs_f64(),
    }
}

/// Monte Carlo estimate of a complex tensor mean (row-major over `shape`).
#[derive(Clone, Debug, Serialize)]
pub struct TensorEstimate {
    pub shape: Vec<usize>,
    pub mean: Vec<Complex64>,
    /// Standard errors [re, im] per component.
    pub stderr: Vec<[f64; 2]>,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(skip)]
    pub wall_secs: f64,
}

impl TensorEstimate {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Mean of a tensor-valued sampler; `dim` is the flattened length.
pub fn mc_mean_tensor<F>(n_samples: u64, seed: u64, shape: Vec<usize>, f: F) -> TensorEstimate
where
    F: Fn(u64, &mut [Complex64]) + Sync,
{
    let t0 = std::time::Instant::now();
    let dim: usize = shape.iter().product();
    let n_chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<(Vec<Complex64>, Vec<[f64; 2]>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n_samples);
            let mut sum = vec![Complex64::default(); dim];
            let mut sq = vec![[0.0f64; 2]; dim];
            let mut buf = vec![Complex64::default(); dim];
            for i in lo..hi {
                f(i, &mut buf);
                for (j, z) in buf.iter().enumerate() {
                    sum[j] += z;
                    sq[j][0] += z.re * z.re;
                    sq[j][1] += z.im * z.im;
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![Complex64::default(); dim];
    let mut sq = vec![[0.0f64; 2]; dim];
    for (s, q) in &partials {
        for j in 0..dim {
            sum[j] += s[j];
            sq[j][0] += q[j][0];
            sq[j][1] += q[j][1];
        }
    }
    let n = n_samples as f64;
    let mean: Vec<Complex64> = sum.iter().map(|z| z / n).collect();
    let stderr: Vec<[f64; 2]> = (0..dim)
        .map(|j| {
            let vr = (sq[j][0] / n - mean[j].re * mean[j].re).max(0.0);
            let vi = (sq[j][1] / n - mean[j].im * mean[j].im).max(0.0);
            [(vr / n).sqrt(), (vi / n).sqrt()]
        })
        .collect();
    TensorEstimate {
        shape,
        mean,
        stderr,
        n_samples,
        seed,
        wall_secs: t0.elapsed().as_secs_f64(),
    }
}

/// Run a closure inside a dedicated rayon pool with `workers` threads
/// (0 = rayon default). Results must not depend on the choice; reductions
/// above guarantee it.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use rand::Rng;

    #[test]
    fn worker_count_does_not_change_bits() {
        let f = |i: u64| {
            let mut rng = stream_rng(5, Stream::Generic, i);
            Complex64::new(rng.random::<f64>(), rng.random::<f64>() - 0.5)
        };
        let a = with_workers(1, || mc_mean_complex(10_000, 5, f));
        let b = with_workers(8, || mc_mean_complex(10_000, 5, f));
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn stderr_scales_with_sample_count() {
        let f = |i: u64| {
            let mut rng = stream_rng(6, Stream::Generic, i);
            Complex64::new(rng.random::<f64>(), 0.0)
        };
        let a = mc_mean_complex(4_000, 6, f);
        let b = mc_mean_complex(16_000, 6, f);
        let ratio = a.stderr[0] / b.stderr[0];
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }
}
