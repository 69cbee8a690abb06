//! Trajectories controlled by a scalar rough signal.
//!
//! A controlled path is a pair (y, y') of field trajectories on the signal's
//! grid: y takes values at level gamma of the scale, the derivative y' one
//! level down at gamma - alpha. The remainder
//!
//! ```text
//! R_{s,t} = y_t - y_s - y'_s X_{s,t}
//! ```
//!
//! is never stored; it is recomputed from this definition wherever it is
//! needed, so the first-order structure cannot drift out of sync with the
//! trajectories.
//!
//! The controlled norm has five components: sup of |y| at gamma, sup of |y'|
//! at gamma - alpha, the alpha-Hoelder seminorm of y' at gamma - 2 alpha, and
//! the remainder seminorms at exponent alpha / level gamma - alpha and
//! exponent 2 alpha / level gamma - 2 alpha.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::par;
use crate::rough_path::{validate_alpha, RoughPath};
use crate::spectral::{weight_table, SpectralField};

#[derive(Debug, Clone)]
pub struct ControlledPath {
    grid: TimeGrid,
    y: Vec<SpectralField>,
    y_prime: Vec<SpectralField>,
    gamma: f64,
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlledNormBreakdown {
    pub sup_y: f64,
    pub sup_yp: f64,
    pub hol_yp: f64,
    pub hol_r: f64,
    pub hol2_r: f64,
    pub total: f64,
}

impl ControlledNormBreakdown {
    pub fn new(sup_y: f64, sup_yp: f64, hol_yp: f64, hol_r: f64, hol2_r: f64) -> Self {
        ControlledNormBreakdown {
            sup_y,
            sup_yp,
            hol_yp,
            hol_r,
            hol2_r,
            total: sup_y + sup_yp + hol_yp + hol_r + hol2_r,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HolderBoundCheck {
    pub theta: f64,
    /// alpha-Hoelder seminorm of y at level gamma - theta.
    pub lhs: f64,
    /// sup |y'| at gamma - theta times the signal norm, plus the remainder
    /// seminorm at the same level.
    pub rhs: f64,
}

impl ControlledPath {
    pub fn new(
        grid: TimeGrid,
        y: Vec<SpectralField>,
        y_prime: Vec<SpectralField>,
        gamma: f64,
        alpha: f64,
    ) -> Result<Self> {
        validate_alpha(alpha)?;
        if !gamma.is_finite() {
            return Err(Error::InvalidRegularity {
                message: format!("trajectory level must be finite, got {gamma}"),
            });
        }
        if y.len() != grid.len() || y_prime.len() != grid.len() {
            return Err(Error::GridMismatch {
                left_len: grid.len(),
                left_span: grid.span(),
                right_len: y.len().min(y_prime.len()),
                right_span: f64::NAN,
            });
        }
        let shape = &y[0];
        for f in y.iter().chain(y_prime.iter()) {
            shape.check_shape(f)?;
        }
        Ok(ControlledPath {
            grid,
            y,
            y_prime,
            gamma,
            alpha,
        })
    }

    pub fn constant(grid: TimeGrid, value: SpectralField, gamma: f64, alpha: f64) -> Result<Self> {
        let n = grid.len();
        let zero = SpectralField::zero(value.dim(), value.cutoff())?;
        ControlledPath::new(grid, vec![value; n], vec![zero; n], gamma, alpha)
    }

    /// y_t = base + x_t * slope with constant derivative slope; remainder is
    /// identically zero.
    pub fn exactly_controlled(
        x: &RoughPath,
        base: &SpectralField,
        slope: &SpectralField,
    ) -> Result<Self> {
        base.check_shape(slope)?;
        let mut y = Vec::with_capacity(x.grid().len());
        for i in 0..x.grid().len() {
            let mut f = base.clone();
            f.add_scaled(x.x()[i], slope)?;
            y.push(f);
        }
        let y_prime = vec![slope.clone(); x.grid().len()];
        ControlledPath::new(x.grid().clone(), y, y_prime, 0.0, x.alpha())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn y(&self) -> &[SpectralField] {
        &self.y
    }

    pub fn y_prime(&self) -> &[SpectralField] {
        &self.y_prime
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.y[0].dim()
    }

    pub fn cutoff(&self) -> usize {
        self.y[0].cutoff()
    }

    /// Override the level annotation, e.g. after applying an operator that
    /// shifts regularity.
    pub fn at_level(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    fn check_signal(&self, x: &RoughPath) -> Result<()> {
        self.grid.check_aligned(x.grid())?;
        if self.alpha != x.alpha() {
            return Err(Error::InvalidRegularity {
                message: format!(
                    "path and signal carry different Hoelder exponents: {} vs {}",
                    self.alpha,
                    x.alpha()
                ),
            });
        }
        Ok(())
    }

    /// R_{s,t} = y_t - y_s - y'_s X_{s,t}, recomputed from the definition.
    pub fn remainder(&self, x: &RoughPath, s: usize, t: usize) -> Result<SpectralField> {
        self.check_signal(x)?;
        self.grid.check_pair(s, t)?;
        let mut r = self.y[t].minus(&self.y[s])?;
        r.add_scaled(-x.increment(s, t), &self.y_prime[s])?;
        Ok(r)
    }

    pub fn difference(&self, other: &ControlledPath) -> Result<ControlledPath> {
        self.grid.check_aligned(&other.grid)?;
        if self.gamma != other.gamma || self.alpha != other.alpha {
            return Err(Error::InvalidRegularity {
                message: format!(
                    "paths live at different levels: ({}, {}) vs ({}, {})",
                    self.gamma, self.alpha, other.gamma, other.alpha
                ),
            });
        }
        let y = self
            .y
            .iter()
            .zip(&other.y)
            .map(|(a, b)| a.minus(b))
            .collect::<Result<Vec<_>>>()?;
        let y_prime = self
            .y_prime
            .iter()
            .zip(&other.y_prime)
            .map(|(a, b)| a.minus(b))
            .collect::<Result<Vec<_>>>()?;
        ControlledPath::new(self.grid.clone(), y, y_prime, self.gamma, self.alpha)
    }

    /// Keep grid points 0..=e.
    pub fn restrict(&self, e: usize) -> Result<ControlledPath> {
        self.grid.check_pair(0, e)?;
        if e == 0 {
            return Err(Error::EmptyGrid);
        }
        ControlledPath::new(
            self.grid.window(0, e)?,
            self.y[..=e].to_vec(),
            self.y_prime[..=e].to_vec(),
            self.gamma,
            self.alpha,
        )
    }

    pub fn controlled_norm(&self, x: &RoughPath) -> Result<ControlledNormBreakdown> {
        self.controlled_norm_strided(x, 1)
    }

    /// Controlled norm with the pair suprema restricted to every `stride`-th
    /// grid point (endpoint kept); the two sup-in-time components always use
    /// the full grid. stride = 1 is the exact norm.
    pub fn controlled_norm_strided(
        &self,
        x: &RoughPath,
        stride: usize,
    ) -> Result<ControlledNormBreakdown> {
        self.check_signal(x)?;
        let dim = self.dim();
        let cutoff = self.cutoff();
        let w_g = weight_table(dim, cutoff, self.gamma)?;
        let w_ga = weight_table(dim, cutoff, self.gamma - self.alpha)?;
        let w_g2a = weight_table(dim, cutoff, self.gamma - 2.0 * self.alpha)?;

        let sup_y = par::index_sup(self.y.len(), |i| self.y[i].norm_with_weights(&w_g));
        let sup_yp = par::index_sup(self.y_prime.len(), |i| {
            self.y_prime[i].norm_with_weights(&w_ga)
        });

        let stride = stride.max(1);
        let mut idx: Vec<usize> = (0..self.grid.len()).step_by(stride).collect();
        if *idx.last().unwrap() != self.grid.len() - 1 {
            idx.push(self.grid.len() - 1);
        }

        let alpha = self.alpha;
        let grid = &self.grid;
        let hol_yp = par::pair_sup(idx.len() - 1, |p, q| {
            let (i, j) = (idx[p], idx[q]);
            let dt = grid.t(j) - grid.t(i);
            increment_norm(&self.y_prime[j], &self.y_prime[i], &w_g2a) / dt.powf(alpha)
        });

        let (hol_r, hol2_r) = par::pair_sup2(idx.len() - 1, |p, q| {
            let (i, j) = (idx[p], idx[q]);
            let dt = grid.t(j) - grid.t(i);
            let a = x.increment(i, j);
            let (na, n2a) =
                remainder_norms(&self.y[j], &self.y[i], &self.y_prime[i], a, &w_ga, &w_g2a);
            (na / dt.powf(alpha), n2a / dt.powf(2.0 * alpha))
        });

        Ok(ControlledNormBreakdown::new(
            sup_y, sup_yp, hol_yp, hol_r, hol2_r,
        ))
    }

    /// Triangle-inequality consistency of the first-order expansion at
    /// theta = alpha and theta = 2 alpha: the Hoelder seminorm of y at level
    /// gamma - theta is bounded by sup |y'| times the signal norm plus the
    /// remainder seminorm at the same level.
    pub fn holder_bound_check(&self, x: &RoughPath) -> Result<Vec<HolderBoundCheck>> {
        self.check_signal(x)?;
        let x_norm = x.alpha_norm();
        let mut out = Vec::with_capacity(2);
        for mult in [1.0, 2.0] {
            let theta = mult * self.alpha;
            let w = weight_table(self.dim(), self.cutoff(), self.gamma - theta)?;
            let alpha = self.alpha;
            let grid = &self.grid;
            let lhs = par::pair_sup(grid.len() - 1, |i, j| {
                let dt = grid.t(j) - grid.t(i);
                increment_norm(&self.y[j], &self.y[i], &w) / dt.powf(alpha)
            });
            let sup_yp = par::index_sup(self.y_prime.len(), |i| {
                self.y_prime[i].norm_with_weights(&w)
            });
            let hol_r = par::pair_sup(grid.len() - 1, |i, j| {
                let dt = grid.t(j) - grid.t(i);
                let a = x.increment(i, j);
                let (na, _) = remainder_norms(&self.y[j], &self.y[i], &self.y_prime[i], a, &w, &w);
                na / dt.powf(alpha)
            });
            out.push(HolderBoundCheck {
                theta,
                lhs,
                rhs: sup_yp * x_norm + hol_r,
            });
        }
        Ok(out)
    }
}

/// |a - b| in the weighted norm without allocating the difference.
fn increment_norm(a: &SpectralField, b: &SpectralField, weights: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((ca, cb), w) in a.coeffs().iter().zip(b.coeffs()).zip(weights) {
        let d = ca - cb;
        s += w * d.norm_sqr();
    }
    s.sqrt()
}

/// Norms of y_t - y_s - a y'_s under two weight tables in one pass.
fn remainder_norms(
    yt: &SpectralField,
    ys: &SpectralField,
    yps: &SpectralField,
    a: f64,
    w1: &[f64],
    w2: &[f64],
) -> (f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (((ct, cs), cp), (u, v)) in yt
        .coeffs()
        .iter()
        .zip(ys.coeffs())
        .zip(yps.coeffs())
        .zip(w1.iter().zip(w2))
    {
        let d = ct - cs - a * cp;
        let q = d.norm_sqr();
        s1 += u * q;
        s2 += v * q;
    }
    (s1.sqrt(), s2.sqrt())
}

/// Controlled-norm distance between two paths over the same signal.
pub fn controlled_distance(a: &ControlledPath, b: &ControlledPath, x: &RoughPath) -> Result<f64> {
    Ok(a.difference(b)?.controlled_norm(x)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use num_complex::Complex64;

    fn linear_signal(n: usize) -> RoughPath {
        let grid = TimeGrid::uniform(n, 1.0).unwrap();
        let samples = grid.points().to_vec();
        RoughPath::canonical_lift_smooth(&samples, grid, 0.4).unwrap()
    }

    fn mode(k: i64, amp: f64) -> SpectralField {
        SpectralField::single_mode(1, 4, &[k], Complex64::new(amp, 0.0)).unwrap()
    }

    #[test]
    fn exactly_controlled_has_zero_remainder() {
        let x = linear_signal(16);
        let p = ControlledPath::exactly_controlled(&x, &mode(2, 0.5), &mode(1, 1.0)).unwrap();
        for &(s, t) in &[(0usize, 16usize), (3, 11), (7, 8)] {
            let r = p.remainder(&x, s, t).unwrap();
            assert!(r.max_abs() < 1e-14, "remainder at ({s}, {t})");
        }
        let b = p.controlled_norm(&x).unwrap();
        assert_eq!(b.hol_yp, 0.0, "constant derivative");
        assert!(b.hol_r < 1e-12 && b.hol2_r < 1e-12);
        assert!((b.total - (b.sup_y + b.sup_yp)).abs() < 1e-12);
    }

    #[test]
    fn norm_components_for_linear_trajectory() {
        // y_t = x_t * v with x_t = t: sup |y| = |v| at t = 1, and the
        // derivative is constant.
        let x = linear_signal(10);
        let v = mode(1, 1.0);
        let zero = SpectralField::zero(1, 4).unwrap();
        let p = ControlledPath::exactly_controlled(&x, &zero, &v)
            .unwrap()
            .at_level(0.5);
        let b = p.controlled_norm(&x).unwrap();
        let v_g = v.norm_gamma(0.5).unwrap();
        let v_ga = v.norm_gamma(0.1).unwrap();
        assert!((b.sup_y - v_g).abs() < 1e-12);
        assert!((b.sup_yp - v_ga).abs() < 1e-12);
        assert_eq!(b.hol_yp, 0.0);
    }

    #[test]
    fn quadratic_remainder_matches_closed_form() {
        // y_t = x_t * v + t^2 * w gives R_{s,t} = (t^2 - s^2) w.
        let x = linear_signal(8);
        let v = mode(1, 1.0);
        let w = mode(2, 0.3);
        let grid = x.grid().clone();
        let mut y = Vec::new();
        for i in 0..grid.len() {
            let t = grid.t(i);
            let mut f = v.scaled(x.x()[i]);
            f.add_scaled(t * t, &w).unwrap();
            y.push(f);
        }
        let yp = vec![v.clone(); grid.len()];
        let p = ControlledPath::new(grid.clone(), y, yp, 0.5, x.alpha()).unwrap();
        let r = p.remainder(&x, 2, 6).unwrap();
        let expected = grid.t(6) * grid.t(6) - grid.t(2) * grid.t(2);
        let d = r.minus(&w.scaled(expected)).unwrap().max_abs();
        assert!(d < 1e-14, "remainder deviates by {d}");

        let checks = p.holder_bound_check(&x).unwrap();
        assert_eq!(checks.len(), 2);
        for c in checks {
            assert!(
                c.lhs <= c.rhs * (1.0 + 1e-12),
                "first-order bound violated at theta {}: {} > {}",
                c.theta,
                c.lhs,
                c.rhs
            );
        }
    }

    #[test]
    fn remainder_is_linear_in_the_path_pair() {
        let x = linear_signal(12);
        let p = ControlledPath::exactly_controlled(&x, &mode(2, 0.7), &mode(1, 0.9)).unwrap();
        let grid = x.grid().clone();
        let mut y = Vec::new();
        for i in 0..grid.len() {
            let t = grid.t(i);
            y.push(mode(3, 1.0).scaled((2.1 * t).sin()));
        }
        let yp = vec![mode(1, 0.2); grid.len()];
        let q = ControlledPath::new(grid, y, yp, 0.0, x.alpha()).unwrap();

        let mut sum_y = Vec::new();
        let mut sum_yp = Vec::new();
        for i in 0..x.grid().len() {
            sum_y.push(p.y()[i].plus(&q.y()[i]).unwrap());
            sum_yp.push(p.y_prime()[i].plus(&q.y_prime()[i]).unwrap());
        }
        let sum = ControlledPath::new(x.grid().clone(), sum_y, sum_yp, 0.0, x.alpha()).unwrap();
        let r_sum = sum.remainder(&x, 1, 9).unwrap();
        let r_parts = p
            .remainder(&x, 1, 9)
            .unwrap()
            .plus(&q.remainder(&x, 1, 9).unwrap())
            .unwrap();
        assert!(r_sum.minus(&r_parts).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn strided_norm_is_a_lower_bound() {
        let x = linear_signal(32);
        let grid = x.grid().clone();
        let mut y = Vec::new();
        for i in 0..grid.len() {
            let t = grid.t(i);
            y.push(mode(1, 1.0).scaled((5.0 * t).cos()));
        }
        let yp = vec![mode(1, 0.4); grid.len()];
        let p = ControlledPath::new(grid, y, yp, 0.3, x.alpha()).unwrap();
        let full = p.controlled_norm(&x).unwrap();
        let coarse = p.controlled_norm_strided(&x, 4).unwrap();
        assert!(coarse.total <= full.total + 1e-12);
        assert_eq!(full.sup_y, coarse.sup_y, "sup components use the full grid");
        let again = p.controlled_norm_strided(&x, 1).unwrap();
        assert_eq!(full.total, again.total);
    }

    #[test]
    fn difference_with_self_is_zero() {
        let x = linear_signal(6);
        let p = ControlledPath::exactly_controlled(&x, &mode(0, 1.0), &mode(1, 2.0)).unwrap();
        let d = p.difference(&p).unwrap();
        let b = d.controlled_norm(&x).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(controlled_distance(&p, &p, &x).unwrap(), 0.0);
    }

    #[test]
    fn constructors_validate_shapes() {
        let x = linear_signal(4);
        let grid = x.grid().clone();
        let y = vec![mode(1, 1.0); 3];
        let yp = vec![mode(1, 1.0); 5];
        assert!(ControlledPath::new(grid.clone(), y, yp, 0.0, 0.4).is_err());

        let other_shape = SpectralField::zero(1, 2).unwrap();
        let mut y = vec![mode(1, 1.0); 5];
        y[2] = other_shape;
        let yp = vec![mode(1, 1.0); 5];
        assert!(ControlledPath::new(grid.clone(), y, yp, 0.0, 0.4).is_err());

        let y = vec![mode(1, 1.0); 5];
        let yp = vec![mode(1, 1.0); 5];
        assert!(ControlledPath::new(grid, y, yp, 0.0, 0.55).is_err());
    }
}
