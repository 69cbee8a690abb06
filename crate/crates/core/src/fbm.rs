//! Fractional Brownian motion sampling and its canonical rough-path lift.
//!
//! Increments are exact fractional Gaussian noise drawn by circulant
//! embedding: the Toeplitz covariance of n steps embeds into a 2n circulant
//! whose eigenvalues come from one FFT; for H <= 1/2 the embedding is
//! positive semidefinite, so the method is exact in distribution. A dense
//! Cholesky factorization of the Toeplitz matrix backs it up in case a
//! numerically negative eigenvalue ever shows up.
//!
//! The lift uses the piecewise-linear (geometric) second level,
//! x2_step[i] = (increment)^2 / 2, so the additivity identity holds to
//! machine precision by construction.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rough_path::{validate_alpha, RoughPath};

pub const GENERATOR_CIRCULANT: &str = "fgn-circulant-v1";
pub const GENERATOR_CHOLESKY: &str = "fgn-cholesky-v1";

pub const HURST_MIN: f64 = 1.0 / 3.0;
pub const HURST_MAX: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct FbmLift {
    pub path: RoughPath,
    /// Which sampler produced the increments; recorded in path files so runs
    /// stay byte-reproducible across versions.
    pub generator: &'static str,
}

pub fn validate_hurst(h: f64) -> Result<()> {
    if !(h.is_finite() && h > HURST_MIN && h <= HURST_MAX) {
        return Err(Error::InvalidHurst { h });
    }
    Ok(())
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag k.
pub fn fgn_autocovariance(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let two_h = 2.0 * h;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn draw_standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// One exact fGN sample of length n with unit spacing, or an error if the
/// circulant embedding is not positive semidefinite.
fn fgn_circulant(h: f64, n: usize, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut row = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        let lag = j.min(m - j);
        row[j].re = fgn_autocovariance(h, lag);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let mut eigen = vec![0.0f64; m];
    let scale = row.iter().map(|c| c.re.abs()).fold(0.0f64, f64::max);
    for (j, c) in row.iter().enumerate() {
        if c.re < -1e-12 * scale.max(1.0) {
            return Err(Error::CovarianceFactorization {
                h,
                n,
                eigenvalue: c.re,
            });
        }
        eigen[j] = c.re.max(0.0);
    }

    // Hermitian spectral noise; draw order is fixed so seeds reproduce bytes.
    let mf = m as f64;
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    w[0] = Complex64::new((eigen[0] / mf).sqrt() * draw_standard_normal(rng), 0.0);
    for j in 1..n {
        let a = draw_standard_normal(rng);
        let b = draw_standard_normal(rng);
        let s = (eigen[j] / (2.0 * mf)).sqrt();
        w[j] = Complex64::new(s * a, s * b);
        w[m - j] = w[j].conj();
    }
    w[n] = Complex64::new((eigen[n] / mf).sqrt() * draw_standard_normal(rng), 0.0);

    fft.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}

/// Dense Cholesky sampler; O(n^3) but only used when the embedding fails.
fn fgn_cholesky(h: f64, n: usize, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = fgn_autocovariance(h, i - j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::CovarianceFactorization {
                        h,
                        n,
                        eigenvalue: s,
                    });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let z: Vec<f64> = (0..n).map(|_| draw_standard_normal(rng)).collect();
    Ok((0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect())
}

/// Fractional Brownian path over [0, horizon] on a uniform grid with n steps,
/// lifted to a rough path. `alpha` defaults to h - 0.01; pass it explicitly
/// when h is too close to 1/3 for the default to stay admissible.
pub fn fbm_lift(h: f64, n: usize, horizon: f64, seed: u64, alpha: Option<f64>) -> Result<FbmLift> {
    validate_hurst(h)?;
    let alpha = alpha.unwrap_or(h - 0.01);
    validate_alpha(alpha)?;
    let grid = TimeGrid::uniform(n, horizon)?;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (fgn, generator) = match fgn_circulant(h, n, &mut rng) {
        Ok(v) => (v, GENERATOR_CIRCULANT),
        Err(Error::CovarianceFactorization { .. }) => {
            // Redraw from a fresh stream so the fallback is self-contained.
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (fgn_cholesky(h, n, &mut rng)?, GENERATOR_CHOLESKY)
        }
        Err(e) => return Err(e),
    };

    // Self-similarity: unit-spacing noise scales by (horizon / n)^H.
    let scale = (horizon / n as f64).powf(h);
    let mut x = Vec::with_capacity(n + 1);
    let mut x2_step = Vec::with_capacity(n);
    x.push(0.0);
    let mut acc = 0.0;
    for g in &fgn {
        let d = scale * g;
        acc += d;
        x.push(acc);
        x2_step.push(0.5 * d * d);
    }
    let path = RoughPath::new(grid, x, x2_step, alpha)?;
    Ok(FbmLift { path, generator })
}
