//! Truncated Fourier fields on the d-torus and the interpolation scale of
//! norms the solver works in.
//!
//! A field stores complex coefficients u_hat(k) for all multi-indices k with
//! |k_j| <= cutoff, flattened row-major with axis index k_j + cutoff. The
//! squared norm at level gamma weights mode k by (1 + |k|^2)^(2 gamma), so
//! consecutive levels are one power of (1 + |k|^2) apart and the scale
//! interpolates with constant 1 (log-convexity of the weights in gamma).
//!
//! The generator is A = Laplacian - c Id with mass shift c >= 0; its
//! semigroup acts diagonally, multiplying mode k by exp(-t (|k|^2 + c)).
//! Pointwise products are evaluated by collocation on at least 3 cutoff + 1
//! points per axis, which makes the truncated product of two band-limited
//! fields alias-free.

use std::cell::RefCell;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place DFT along every axis of a row-major array.
fn fftnd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        for (axis, &len) in shape.iter().enumerate() {
            if len == 1 {
                continue;
            }
            let fft = if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            };
            let stride: usize = shape[axis + 1..].iter().product();
            let outer: usize = shape[..axis].iter().product();
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            for o in 0..outer {
                let base_o = o * len * stride;
                for s in 0..stride {
                    let base = base_o + s;
                    for j in 0..len {
                        line[j] = data[base + j * stride];
                    }
                    fft.process(&mut line);
                    for j in 0..len {
                        data[base + j * stride] = line[j];
                    }
                }
            }
        }
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    dim: usize,
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(dim: usize, cutoff: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid_config("field dimension must be at least 1"));
        }
        let side = 2 * cutoff + 1;
        let len = side.checked_pow(dim as u32).ok_or_else(|| {
            Error::invalid_config(format!("mode box overflows: side {side}, dim {dim}"))
        })?;
        Ok(SpectralField {
            dim,
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn from_coeffs(dim: usize, cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let mut f = SpectralField::zero(dim, cutoff)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::format(format!(
                "expected {} coefficients, got {}",
                f.coeffs.len(),
                coeffs.len()
            )));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    pub fn single_mode(dim: usize, cutoff: usize, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let mut f = SpectralField::zero(dim, cutoff)?;
        let idx = f.flat_index(k)?;
        f.coeffs[idx] = amplitude;
        Ok(f)
    }

    /// Real field amplitude * cos(k . x): half the amplitude on k and -k.
    pub fn real_cosine(dim: usize, cutoff: usize, k: &[i64], amplitude: f64) -> Result<Self> {
        let mut f = SpectralField::zero(dim, cutoff)?;
        let idx = f.flat_index(k)?;
        let half = Complex64::new(0.5 * amplitude, 0.0);
        f.coeffs[idx] += half;
        let conj_idx = f.coeffs.len() - 1 - idx;
        f.coeffs[conj_idx] += half;
        Ok(f)
    }

    /// Real-valued Gaussian field with mode standard deviation
    /// (1 + |k|^2)^(-decay); conjugate symmetry is enforced by construction.
    pub fn random<R: Rng>(dim: usize, cutoff: usize, decay: f64, rng: &mut R) -> Result<Self> {
        let mut f = SpectralField::zero(dim, cutoff)?;
        let k2 = k2_table(dim, cutoff)?;
        let len = f.coeffs.len();
        let center = (len - 1) / 2;
        for i in 0..center {
            let s = (1.0 + k2[i]).powf(-decay);
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            let c = Complex64::new(s * a, s * b);
            f.coeffs[i] = c;
            f.coeffs[len - 1 - i] = c.conj();
        }
        let a: f64 = StandardNormal.sample(rng);
        f.coeffs[center] = Complex64::new(a, 0.0);
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn flat_index(&self, k: &[i64]) -> Result<usize> {
        if k.len() != self.dim {
            return Err(Error::format(format!(
                "multi-index has {} components, field has dimension {}",
                k.len(),
                self.dim
            )));
        }
        let n = self.cutoff as i64;
        let side = self.side();
        let mut flat = 0usize;
        for &kj in k {
            if kj < -n || kj > n {
                return Err(Error::format(format!(
                    "mode component {kj} outside [-{n}, {n}]"
                )));
            }
            flat = flat * side + (kj + n) as usize;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<i64> {
        let n = self.cutoff as i64;
        let side = self.side() as i64;
        let mut k = vec![0i64; self.dim];
        let mut rest = flat as i64;
        for j in (0..self.dim).rev() {
            k[j] = rest % side - n;
            rest /= side;
        }
        k
    }

    pub fn coeff(&self, k: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.flat_index(k)?])
    }

    pub fn set_coeff(&mut self, k: &[i64], v: Complex64) -> Result<()> {
        let idx = self.flat_index(k)?;
        self.coeffs[idx] = v;
        Ok(())
    }

    pub fn check_shape(&self, other: &SpectralField) -> Result<()> {
        if self.dim != other.dim || self.cutoff != other.cutoff {
            return Err(Error::ShapeMismatch {
                left_dim: self.dim,
                left_cutoff: self.cutoff,
                right_dim: other.dim,
                right_cutoff: other.cutoff,
            });
        }
        Ok(())
    }

    pub fn plus(&self, other: &SpectralField) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    pub fn minus(&self, other: &SpectralField) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= a;
        }
        out
    }

    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_shape(other)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
        Ok(())
    }

    /// a * u + b * v without intermediate allocations.
    pub fn combine(a: f64, u: &SpectralField, b: f64, v: &SpectralField) -> Result<Self> {
        u.check_shape(v)?;
        let coeffs = u
            .coeffs
            .iter()
            .zip(&v.coeffs)
            .map(|(cu, cv)| a * cu + b * cv)
            .collect();
        SpectralField::from_coeffs(u.dim, u.cutoff, coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of conjugate symmetry; 0 for exactly real fields.
    pub fn reality_defect(&self) -> f64 {
        let len = self.coeffs.len();
        let mut m = 0.0f64;
        for i in 0..=(len - 1) / 2 {
            let d = (self.coeffs[i] - self.coeffs[len - 1 - i].conj()).norm();
            m = m.max(d);
        }
        m
    }

    /// Project onto the conjugate-symmetric (real-valued) part.
    pub fn symmetrize_real(&mut self) {
        let len = self.coeffs.len();
        for i in 0..len / 2 {
            let avg = 0.5 * (self.coeffs[i] + self.coeffs[len - 1 - i].conj());
            self.coeffs[i] = avg;
            self.coeffs[len - 1 - i] = avg.conj();
        }
        let center = (len - 1) / 2;
        self.coeffs[center] = Complex64::new(self.coeffs[center].re, 0.0);
    }

    pub fn norm_with_weights(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.coeffs.len());
        let mut s = 0.0;
        for (c, w) in self.coeffs.iter().zip(weights) {
            s += w * c.norm_sqr();
        }
        s.sqrt()
    }

    /// Norm at level gamma of the scale; builds the weight table on the fly.
    pub fn norm_gamma(&self, gamma: f64) -> Result<f64> {
        let w = weight_table(self.dim, self.cutoff, gamma)?;
        Ok(self.norm_with_weights(&w))
    }

    /// Values on the m^d collocation grid x_j = 2 pi j / m per axis.
    pub fn collocation_values(&self, m: usize) -> Result<Vec<Complex64>> {
        if m < self.side() {
            return Err(Error::invalid_config(format!(
                "collocation grid {m} too small for side {}",
                self.side()
            )));
        }
        let shape = vec![m; self.dim];
        let total: usize = shape.iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        let n = self.cutoff as i64;
        for (flat, c) in self.coeffs.iter().enumerate() {
            let k = self.multi_index(flat);
            let mut bin = 0usize;
            for &kj in &k {
                let b = kj.rem_euclid(m as i64) as usize;
                bin = bin * m + b;
            }
            data[bin] = *c;
            let _ = n;
        }
        fftnd(&mut data, &shape, true);
        Ok(data)
    }

    /// Inverse of [`Self::collocation_values`]: truncate the DFT of grid
    /// values back to the mode box.
    pub fn from_collocation_values(
        dim: usize,
        cutoff: usize,
        m: usize,
        mut values: Vec<Complex64>,
    ) -> Result<Self> {
        let mut f = SpectralField::zero(dim, cutoff)?;
        if m < f.side() {
            return Err(Error::invalid_config(format!(
                "collocation grid {m} too small for side {}",
                f.side()
            )));
        }
        let shape = vec![m; dim];
        let total: usize = shape.iter().product();
        if values.len() != total {
            return Err(Error::format(format!(
                "expected {total} collocation values, got {}",
                values.len()
            )));
        }
        fftnd(&mut values, &shape, false);
        let scale = 1.0 / total as f64;
        for flat in 0..f.coeffs.len() {
            let k = f.multi_index(flat);
            let mut bin = 0usize;
            for &kj in &k {
                let b = kj.rem_euclid(m as i64) as usize;
                bin = bin * m + b;
            }
            f.coeffs[flat] = values[bin] * scale;
        }
        Ok(f)
    }

    /// Band-limited sampling of a real function on the dealiasing grid.
    pub fn from_function<F>(dim: usize, cutoff: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let m = 3 * cutoff + 1;
        let shape = vec![m; dim];
        let total: usize = shape.iter().product();
        let mut values = vec![Complex64::new(0.0, 0.0); total];
        let step = 2.0 * std::f64::consts::PI / m as f64;
        let mut x = vec![0.0f64; dim];
        for (flat, v) in values.iter_mut().enumerate() {
            let mut rest = flat;
            for j in (0..dim).rev() {
                x[j] = (rest % m) as f64 * step;
                rest /= m;
            }
            *v = Complex64::new(f(&x), 0.0);
        }
        let mut out = SpectralField::from_collocation_values(dim, cutoff, m, values)?;
        out.symmetrize_real();
        Ok(out)
    }

    /// Apply a real scalar function pointwise on the dealiasing grid and
    /// truncate back. Exact only for band-limited results; the fixed grid
    /// makes the operation deterministic and shape-preserving.
    pub fn pointwise_map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        let m = 3 * self.cutoff + 1;
        let mut values = self.collocation_values(m)?;
        for v in values.iter_mut() {
            *v = Complex64::new(f(v.re), 0.0);
        }
        let mut out = SpectralField::from_collocation_values(self.dim, self.cutoff, m, values)?;
        out.symmetrize_real();
        Ok(out)
    }
}

/// |k|^2 for every flat index of the mode box.
pub fn k2_table(dim: usize, cutoff: usize) -> Result<Vec<f64>> {
    let probe = SpectralField::zero(dim, cutoff)?;
    let side = probe.side();
    let n = cutoff as i64;
    let mut axis = vec![0.0f64; side];
    for (a, v) in axis.iter_mut().enumerate() {
        let k = a as i64 - n;
        *v = (k * k) as f64;
    }
    let mut out = vec![0.0f64; probe.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let mut rest = flat;
        let mut s = 0.0;
        for _ in 0..dim {
            s += axis[rest % side];
            rest /= side;
        }
        *o = s;
    }
    Ok(out)
}

/// Norm weights (1 + |k|^2)^(2 gamma) for every flat index.
pub fn weight_table(dim: usize, cutoff: usize, gamma: f64) -> Result<Vec<f64>> {
    if !gamma.is_finite() {
        return Err(Error::InvalidRegularity {
            message: format!("norm level must be finite, got {gamma}"),
        });
    }
    let mut t = k2_table(dim, cutoff)?;
    for v in t.iter_mut() {
        *v = (1.0 + *v).powf(2.0 * gamma);
    }
    Ok(t)
}

/// Alias-free truncated product of two fields of the same shape via
/// collocation on 3 cutoff + 1 points per axis.
pub fn multiply_smooth(u: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    u.check_shape(g)?;
    let m = 3 * u.cutoff() + 1;
    let a = u.collocation_values(m)?;
    let mut b = g.collocation_values(m)?;
    for (x, y) in b.iter_mut().zip(&a) {
        *x *= y;
    }
    SpectralField::from_collocation_values(u.dim(), u.cutoff(), m, b)
}

/// Fractional Laplacian (-Laplacian)^sigma: mode k scales by (|k|^2)^sigma.
/// For sigma = 0 this is the identity (0^0 = 1); for sigma > 0 the zero mode
/// is annihilated.
pub fn frac_laplacian(u: &SpectralField, sigma: f64) -> Result<SpectralField> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidRegularity {
            message: format!("fractional order must be nonnegative, got {sigma}"),
        });
    }
    let k2 = k2_table(u.dim(), u.cutoff())?;
    let mut out = u.clone();
    for (c, &q) in out.coeffs.iter_mut().zip(&k2) {
        *c *= q.powf(sigma);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct InterpolationCheck {
    /// |u|_beta ^ (gamma - theta)
    pub lhs: f64,
    /// |u|_theta ^ (gamma - beta) * |u|_gamma ^ (beta - theta)
    pub rhs: f64,
}

/// Three-level interpolation inequality along the scale; holds with constant
/// 1, with equality for single-mode fields.
pub fn interpolation_check(
    u: &SpectralField,
    theta: f64,
    beta: f64,
    gamma: f64,
) -> Result<InterpolationCheck> {
    if !(theta <= beta && beta <= gamma) {
        return Err(Error::InvalidRegularity {
            message: format!(
                "levels must be ordered, got theta {theta}, beta {beta}, gamma {gamma}"
            ),
        });
    }
    let nb = u.norm_gamma(beta)?;
    let nt = u.norm_gamma(theta)?;
    let ng = u.norm_gamma(gamma)?;
    Ok(InterpolationCheck {
        lhs: nb.powf(gamma - theta),
        rhs: nt.powf(gamma - beta) * ng.powf(beta - theta),
    })
}

/// The spatial scale: mode box plus the mass shift c in A = Laplacian - c Id.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceScale {
    dim: usize,
    cutoff: usize,
    mass_shift: f64,
}

impl SpaceScale {
    pub fn new(dim: usize, cutoff: usize, mass_shift: f64) -> Result<Self> {
        SpectralField::zero(dim, cutoff)?;
        if !(mass_shift.is_finite() && mass_shift >= 0.0) {
            return Err(Error::invalid_config(format!(
                "mass shift must be nonnegative, got {mass_shift}"
            )));
        }
        Ok(SpaceScale {
            dim,
            cutoff,
            mass_shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn mass_shift(&self) -> f64 {
        self.mass_shift
    }

    pub fn check_field(&self, u: &SpectralField) -> Result<()> {
        if u.dim() != self.dim || u.cutoff() != self.cutoff {
            return Err(Error::ShapeMismatch {
                left_dim: self.dim,
                left_cutoff: self.cutoff,
                right_dim: u.dim(),
                right_cutoff: u.cutoff(),
            });
        }
        Ok(())
    }

    /// Symbol mu_k = |k|^2 + c of -A.
    pub fn mu(&self, k2: f64) -> f64 {
        k2 + self.mass_shift
    }

    pub fn mu_table(&self) -> Result<Vec<f64>> {
        let mut t = k2_table(self.dim, self.cutoff)?;
        for v in t.iter_mut() {
            *v += self.mass_shift;
        }
        Ok(t)
    }

    /// S(t) u: mode k scales by exp(-t mu_k). Requires t >= 0.
    pub fn semigroup_apply(&self, u: &SpectralField, t: f64) -> Result<SpectralField> {
        self.check_field(u)?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::NegativeTime { t });
        }
        let mu = self.mu_table()?;
        let mut out = u.clone();
        for (c, &m) in out.coeffs_mut().iter_mut().zip(&mu) {
            *c *= (-t * m).exp();
        }
        Ok(out)
    }

    /// Best constants over the probe times for the two smoothing bounds at
    /// order sigma: identity-minus-semigroup losing sigma, and the semigroup
    /// gaining sigma at cost t^(-sigma).
    pub fn verify_sg_bounds(&self, sigma: f64, times: &[f64]) -> Result<SgBoundReport> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidRegularity {
                message: format!("smoothing order must be nonnegative, got {sigma}"),
            });
        }
        let k2 = k2_table(self.dim, self.cutoff)?;
        let mut c_loss = 0.0f64;
        let mut c_gain = 0.0f64;
        for &t in times {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::NegativeTime { t });
            }
            for &q in &k2 {
                let mu = self.mu(q);
                let w = (1.0 + q).powf(sigma) * t.powf(sigma);
                c_loss = c_loss.max((-(-t * mu).exp_m1()) / w);
                c_gain = c_gain.max(w * (-t * mu).exp());
            }
        }
        Ok(SgBoundReport {
            sigma,
            constant_loss: c_loss,
            constant_gain: c_gain,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SgBoundReport {
    pub sigma: f64,
    /// sup (1 - exp(-t mu_k)) / (t^sigma (1 + |k|^2)^sigma); at most 1 for
    /// mass shifts c <= 1.
    pub constant_loss: f64,
    /// sup t^sigma (1 + |k|^2)^sigma exp(-t mu_k).
    pub constant_gain: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const SQRT_2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn single_mode_norm_at_half_level() {
        // |k|^2 = 1 and gamma = 1/2 weight the mode by (1+1)^1 = 2.
        let u = SpectralField::single_mode(1, 4, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let n = u.norm_gamma(0.5).unwrap();
        assert!((n - SQRT_2).abs() < 1e-14, "expected sqrt(2), got {n}");
        assert!((u.norm_gamma(0.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norms_increase_along_the_scale() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let u = SpectralField::random(2, 5, 1.0, &mut rng).unwrap();
        let a = u.norm_gamma(-0.25).unwrap();
        let b = u.norm_gamma(0.0).unwrap();
        let c = u.norm_gamma(0.75).unwrap();
        assert!(a <= b && b <= c);
    }

    #[test]
    fn interpolation_equality_for_single_modes() {
        let u = SpectralField::single_mode(1, 6, &[3], Complex64::new(0.7, -0.2)).unwrap();
        let c = interpolation_check(&u, -0.5, 0.25, 1.0).unwrap();
        assert!(
            (c.lhs - c.rhs).abs() <= 1e-12 * c.rhs.max(1.0),
            "single mode should saturate the inequality: {} vs {}",
            c.lhs,
            c.rhs
        );
    }

    #[test]
    fn interpolation_holds_for_random_fields() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..50 {
            let u = SpectralField::random(1, 12, 0.6, &mut rng).unwrap();
            let c = interpolation_check(&u, -1.0, 0.3, 1.2).unwrap();
            assert!(c.lhs <= c.rhs * (1.0 + 1e-10), "{} > {}", c.lhs, c.rhs);
        }
    }

    #[test]
    fn semigroup_factor_on_unit_mode() {
        // mu = |k|^2 + c = 1 with c = 0, so S(1) scales the mode by e^{-1}.
        let scale = SpaceScale::new(1, 4, 0.0).unwrap();
        let u = SpectralField::single_mode(1, 4, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let v = scale.semigroup_apply(&u, 1.0).unwrap();
        let got = v.coeff(&[1]).unwrap().re;
        assert!((got - (-1.0f64).exp()).abs() < 1e-15);
        assert!(scale.semigroup_apply(&u, -0.5).is_err());
    }

    #[test]
    fn semigroup_law_composes() {
        let scale = SpaceScale::new(2, 3, 0.7).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let u = SpectralField::random(2, 3, 0.5, &mut rng).unwrap();
        let a = scale
            .semigroup_apply(&scale.semigroup_apply(&u, 0.3).unwrap(), 0.45)
            .unwrap();
        let b = scale.semigroup_apply(&u, 0.75).unwrap();
        let d = a.minus(&b).unwrap().max_abs();
        assert!(d < 1e-13, "semigroup law violated by {d}");
        // t = 0 is the identity.
        let id = scale.semigroup_apply(&u, 0.0).unwrap();
        assert_eq!(id, u);
    }

    #[test]
    fn smoothing_constants_stay_bounded() {
        let times: Vec<f64> = (1..=40).map(|i| i as f64 * 0.025).collect();
        for &c in &[0.0, 1.0] {
            let scale = SpaceScale::new(1, 16, c).unwrap();
            for &sigma in &[0.0, 0.25, 0.5, 1.0] {
                let r = scale.verify_sg_bounds(sigma, &times).unwrap();
                assert!(
                    r.constant_loss <= 1.0 + 1e-10,
                    "loss constant {} at sigma {sigma}, c {c}",
                    r.constant_loss
                );
                assert!(r.constant_gain.is_finite() && r.constant_gain > 0.0);
            }
        }
    }

    #[test]
    fn gain_constant_known_value() {
        // Single relevant scale: sigma = 1/2, c = 1, k = 0 gives
        // t^(1/2) e^{-t} maximized at t = 1/2: value sqrt(1/2) e^{-1/2}.
        let scale = SpaceScale::new(1, 0, 1.0).unwrap();
        let r = scale.verify_sg_bounds(0.5, &[0.5]).unwrap();
        let expected = 0.5f64.sqrt() * (-0.5f64).exp();
        assert!((r.constant_gain - expected).abs() < 1e-14);
    }

    #[test]
    fn frac_laplacian_symbol() {
        let u = SpectralField::single_mode(1, 4, &[2], Complex64::new(1.0, 0.0)).unwrap();
        let v = frac_laplacian(&u, 0.5).unwrap();
        // (|k|^2)^(1/2) = 2 at k = 2.
        assert!((v.coeff(&[2]).unwrap().re - 2.0).abs() < 1e-14);
        let w = frac_laplacian(&u, 1.0).unwrap();
        assert!((w.coeff(&[2]).unwrap().re - 4.0).abs() < 1e-14);

        let z = SpectralField::single_mode(1, 4, &[0], Complex64::new(3.0, 0.0)).unwrap();
        let fz = frac_laplacian(&z, 0.5).unwrap();
        assert_eq!(fz.coeff(&[0]).unwrap().re, 0.0, "zero mode must vanish");
        let id = frac_laplacian(&z, 0.0).unwrap();
        assert_eq!(id.coeff(&[0]).unwrap().re, 3.0, "order 0 is the identity");
    }

    #[test]
    fn product_of_unit_modes_adds_frequencies() {
        // e^{ix} * e^{ix} = e^{2ix}: with cutoff 2 the result survives.
        let u = SpectralField::single_mode(1, 2, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let p = multiply_smooth(&u, &u).unwrap();
        assert!((p.coeff(&[2]).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        for &k in &[-2i64, -1, 0, 1] {
            assert!(p.coeff(&[k]).unwrap().norm() < 1e-12);
        }

        // With cutoff 1 the product leaves the box and truncates to zero,
        // with no aliased contamination of retained modes.
        let v = SpectralField::single_mode(1, 1, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let q = multiply_smooth(&v, &v).unwrap();
        assert!(q.max_abs() < 1e-12, "aliasing detected: {}", q.max_abs());
    }

    #[test]
    fn multiplying_by_one_is_identity() {
        let one = SpectralField::single_mode(2, 3, &[0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let u = SpectralField::random(2, 3, 0.4, &mut rng).unwrap();
        let p = multiply_smooth(&u, &one).unwrap();
        let d = p.minus(&u).unwrap().max_abs();
        assert!(d < 1e-12 * u.max_abs().max(1.0), "deviation {d}");
    }

    #[test]
    fn product_of_real_fields_is_real() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let u = SpectralField::random(1, 8, 0.8, &mut rng).unwrap();
        let g = SpectralField::random(1, 8, 1.2, &mut rng).unwrap();
        let p = multiply_smooth(&u, &g).unwrap();
        let scale = p.max_abs().max(1.0);
        assert!(p.reality_defect() < 1e-12 * scale);
    }

    #[test]
    fn product_matches_direct_convolution() {
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let u = SpectralField::random(1, 4, 0.3, &mut rng).unwrap();
        let g = SpectralField::random(1, 4, 0.3, &mut rng).unwrap();
        let p = multiply_smooth(&u, &g).unwrap();
        // Direct convolution truncated to the box.
        let n = 4i64;
        for k in -n..=n {
            let mut s = Complex64::new(0.0, 0.0);
            for l in -n..=n {
                let m = k - l;
                if m.abs() <= n {
                    s += u.coeff(&[l]).unwrap() * g.coeff(&[m]).unwrap();
                }
            }
            let got = p.coeff(&[k]).unwrap();
            assert!(
                (got - s).norm() < 1e-12,
                "mode {k}: collocation {got} vs convolution {s}"
            );
        }
    }

    #[test]
    fn collocation_roundtrip_2d() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let u = SpectralField::random(2, 3, 0.2, &mut rng).unwrap();
        let m = 3 * 3 + 1;
        let vals = u.collocation_values(m).unwrap();
        let back = SpectralField::from_collocation_values(2, 3, m, vals).unwrap();
        let d = back.minus(&u).unwrap().max_abs();
        assert!(d < 1e-12, "roundtrip deviation {d}");
    }

    #[test]
    fn from_function_reproduces_band_limited_samples() {
        let f = |x: &[f64]| 1.5 + (x[0]).cos() - 0.25 * (2.0 * x[0]).sin();
        let u = SpectralField::from_function(1, 4, f).unwrap();
        assert!((u.coeff(&[0]).unwrap().re - 1.5).abs() < 1e-12);
        assert!((u.coeff(&[1]).unwrap().re - 0.5).abs() < 1e-12);
        assert!((u.coeff(&[2]).unwrap().im - 0.125).abs() < 1e-12);
        assert!(u.reality_defect() < 1e-13);
    }

    #[test]
    fn real_cosine_field_is_real() {
        let u = SpectralField::real_cosine(1, 3, &[2], 2.0).unwrap();
        assert_eq!(u.reality_defect(), 0.0);
        assert!((u.coeff(&[2]).unwrap().re - 1.0).abs() < 1e-15);
        assert!((u.coeff(&[-2]).unwrap().re - 1.0).abs() < 1e-15);
    }
}
