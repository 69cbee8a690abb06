//! Semigroup-compensated rough integration on the grid.
//!
//! The rough convolution of a controlled path (y, y') against the signal X is
//! the limit over partitions pi of [0, t] of
//!
//! ```text
//! sum_{[u,v] in pi} S(t - u) [ y_u X_{u,v} + y'_u X2_{u,v} ],
//! ```
//!
//! evaluated here over dyadic refinements snapped to the grid; at full depth
//! the partition is the grid itself and the sum is the discrete integral the
//! solver uses. The drift term is a semigroup convolution with the exact
//! per-mode kernel of A = Laplacian - c Id and left-point evaluation of the
//! integrand.

use crate::coefficients::{Coefficients, Diffusion};
use crate::controlled::{ControlledNormBreakdown, ControlledPath};
use crate::error::{Error, Result};
use crate::rough_path::RoughPath;
use crate::spectral::{weight_table, SpaceScale, SpectralField};

/// Indices of the depth-d dyadic partition of [s, e], snapped to the grid and
/// deduplicated; saturates at the full grid once 2^depth >= e - s.
pub fn dyadic_partition(s: usize, e: usize, depth: u32) -> Vec<usize> {
    let span = e - s;
    let pieces_cap = span.max(1);
    let pieces = (1usize << depth.min(usize::BITS - 2)).min(pieces_cap);
    let mut out = Vec::with_capacity(pieces + 1);
    for j in 0..=pieces {
        let idx = s + ((j as f64 * span as f64 / pieces as f64).round() as usize).min(span);
        if out.last() != Some(&idx) {
            out.push(idx);
        }
    }
    out
}

fn check_triple(p: &ControlledPath, x: &RoughPath, scale: &SpaceScale) -> Result<()> {
    p.grid().check_aligned(x.grid())?;
    scale.check_field(&p.y()[0])?;
    Ok(())
}

/// Compensated Riemann sum over the depth-d dyadic partition of [s, e].
pub fn rough_convolution_over(
    p: &ControlledPath,
    x: &RoughPath,
    scale: &SpaceScale,
    s: usize,
    e: usize,
    depth: u32,
) -> Result<SpectralField> {
    check_triple(p, x, scale)?;
    p.grid().check_pair(s, e)?;
    let mu = scale.mu_table()?;
    let mut acc = SpectralField::zero(p.dim(), p.cutoff())?;
    if s == e {
        return Ok(acc);
    }
    let te = p.grid().t(e);
    let part = dyadic_partition(s, e, depth);
    for w in part.windows(2) {
        let (u, v) = (w[0], w[1]);
        let a = x.increment(u, v);
        let b = x.chen_reconstruct(u, v)?;
        let integrand = SpectralField::combine(a, &p.y()[u], b, &p.y_prime()[u])?;
        let dt = te - p.grid().t(u);
        for ((acc_c, int_c), &m) in acc.coeffs_mut().iter_mut().zip(integrand.coeffs()).zip(&mu) {
            *acc_c += int_c * (-dt * m).exp();
        }
    }
    Ok(acc)
}

/// Rough convolution over [0, t_idx].
pub fn rough_convolution(
    p: &ControlledPath,
    x: &RoughPath,
    scale: &SpaceScale,
    t_idx: usize,
    depth: u32,
) -> Result<SpectralField> {
    rough_convolution_over(p, x, scale, 0, t_idx, depth)
}

/// Full-grid convolution at every grid point by the semigroup-property scan
///
/// ```text
/// z_0 = 0,   z_{i+1} = S(dt_i) (z_i + y_i X_{i,i+1} + y'_i X2_{i,i+1}),
/// ```
///
/// which agrees with [`rough_convolution`] at full depth up to the order in
/// which per-mode exponentials are multiplied.
pub fn rough_convolution_trajectory(
    p: &ControlledPath,
    x: &RoughPath,
    scale: &SpaceScale,
) -> Result<Vec<SpectralField>> {
    check_triple(p, x, scale)?;
    let mu = scale.mu_table()?;
    let n = p.grid().len();
    let mut out = Vec::with_capacity(n);
    let mut z = SpectralField::zero(p.dim(), p.cutoff())?;
    out.push(z.clone());
    for i in 0..n - 1 {
        let a = x.increment(i, i + 1);
        let b = x.x2_step()[i];
        let dt = p.grid().step(i);
        for (((zc, yc), ypc), &m) in z
            .coeffs_mut()
            .iter_mut()
            .zip(p.y()[i].coeffs())
            .zip(p.y_prime()[i].coeffs())
            .zip(&mu)
        {
            *zc = (*zc + yc * a + ypc * b) * (-dt * m).exp();
        }
        out.push(z.clone());
    }
    Ok(out)
}

/// Depth-refined convolution that certifies the refinements contract. Errors
/// when the final refinement gap exceeds both the relative tolerance and the
/// first gap, i.e. when successive partitions drift apart instead of
/// settling.
pub fn rough_convolution_checked(
    p: &ControlledPath,
    x: &RoughPath,
    scale: &SpaceScale,
    t_idx: usize,
    tol_rel: f64,
) -> Result<(SpectralField, Vec<f64>)> {
    let span = t_idx.max(1);
    let max_depth = usize::BITS - span.leading_zeros();
    let w = weight_table(p.dim(), p.cutoff(), p.gamma() - 2.0 * p.alpha())?;
    let mut gaps = Vec::new();
    let mut prev = rough_convolution(p, x, scale, t_idx, 0)?;
    for d in 1..=max_depth {
        let cur = rough_convolution(p, x, scale, t_idx, d)?;
        gaps.push(cur.minus(&prev)?.norm_with_weights(&w));
        prev = cur;
        if 1usize << d >= span {
            break;
        }
    }
    if let (Some(&first), Some(&last)) = (gaps.first(), gaps.last()) {
        let floor = tol_rel * prev.norm_with_weights(&w).max(1.0);
        if last > floor && last > first {
            return Err(Error::NonCauchyRefinement {
                t: p.grid().t(t_idx),
                depth: gaps.len() as u32,
                delta: last,
                tol: floor,
            });
        }
    }
    Ok((prev, gaps))
}

#[derive(Debug, Clone)]
pub struct SewingProbe {
    /// (window length, error) pairs, longest window first.
    pub windows: Vec<(f64, f64)>,
    /// Least-squares slope of log error against log window length.
    pub fitted_rate: f64,
    /// Error on the longest window.
    pub error_full: f64,
}

/// Distance between the one-step germ S(e - s)(y_s X + y'_s X2) and the full
/// grid integral over geometrically shrinking windows anchored at s, measured
/// at level gamma - 2 alpha + beta. The expected decay exponent is
/// 3 alpha - beta.
pub fn sewing_error_probe(
    p: &ControlledPath,
    x: &RoughPath,
    scale: &SpaceScale,
    s: usize,
    e: usize,
    beta: f64,
    max_halvings: u32,
) -> Result<SewingProbe> {
    check_triple(p, x, scale)?;
    p.grid().check_pair(s, e)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidRegularity {
            message: format!("norm gain must be nonnegative, got {beta}"),
        });
    }
    let w = weight_table(p.dim(), p.cutoff(), p.gamma() - 2.0 * p.alpha() + beta)?;
    let mu = scale.mu_table()?;
    let mut windows = Vec::new();
    for j in 0..=max_halvings {
        let span = (e - s) >> j;
        if span < 2 {
            break;
        }
        let end = s + span;
        let full = rough_convolution_over(p, x, scale, s, end, u32::MAX)?;
        let dt = p.grid().t(end) - p.grid().t(s);
        let a = x.increment(s, end);
        let b = x.chen_reconstruct(s, end)?;
        let mut germ = SpectralField::combine(a, &p.y()[s], b, &p.y_prime()[s])?;
        for (c, &m) in germ.coeffs_mut().iter_mut().zip(&mu) {
            *c *= (-dt * m).exp();
        }
        let err = full.minus(&germ)?.norm_with_weights(&w);
        windows.push((dt, err));
    }
    let fitted_rate = fit_log_slope(&windows);
    let error_full = windows.first().map(|w| w.1).unwrap_or(0.0);
    Ok(SewingProbe {
        windows,
        fitted_rate,
        error_full,
    })
}

/// Least-squares slope of ln(err) vs ln(len), ignoring error values at the
/// round-off floor.
pub fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 1e-15)
        .map(|&(l, e)| (l.ln(), e.ln()))
        .collect();
    if data.len() < 2 {
        return f64::NAN;
    }
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in data {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Per-mode exact kernel values integral_0^dt exp(-mu s) ds.
pub fn drift_kernel(mu: &[f64], dt: f64) -> Vec<f64> {
    mu.iter()
        .map(|&m| {
            if m == 0.0 {
                dt
            } else {
                (-(-m * dt).exp_m1()) / m
            }
        })
        .collect()
}

/// Semigroup convolution of the drift with left-point quadrature: per mode k,
///
/// ```text
/// d(t_e) = sum_{j < e} exp(-mu_k (t_e - t_{j+1})) K_k(dt_j) F(y_j)_k,
/// ```
///
/// where K is the exact kernel over one step, so the only quadrature error is
/// freezing F(y) at the left endpoint.
pub fn drift_convolution(
    y: &[SpectralField],
    coeffs: &Coefficients,
    scale: &SpaceScale,
    grid: &crate::grid::TimeGrid,
    e: usize,
) -> Result<SpectralField> {
    if y.len() != grid.len() {
        return Err(Error::GridMismatch {
            left_len: grid.len(),
            left_span: grid.span(),
            right_len: y.len(),
            right_span: f64::NAN,
        });
    }
    grid.check_pair(0, e)?;
    scale.check_field(&y[0])?;
    let mu = scale.mu_table()?;
    let te = grid.t(e);
    let mut acc = SpectralField::zero(y[0].dim(), y[0].cutoff())?;
    for j in 0..e {
        let fy = coeffs.drift.apply(&y[j])?;
        let dt = grid.step(j);
        let tail = te - grid.t(j + 1);
        for ((a, f), &m) in acc.coeffs_mut().iter_mut().zip(fy.coeffs()).zip(&mu) {
            let k = if m == 0.0 {
                dt
            } else {
                (-(-m * dt).exp_m1()) / m
            };
            *a += f * ((-tail * m).exp() * k);
        }
    }
    Ok(acc)
}

/// Push a controlled path through the diffusion: (y, y') becomes
/// (G(y), DG(y)[y']), one fractional order sigma lower on the scale.
pub fn compose_diffusion(p: &ControlledPath, diffusion: &dyn Diffusion) -> Result<ControlledPath> {
    let mut y = Vec::with_capacity(p.y().len());
    let mut yp = Vec::with_capacity(p.y().len());
    for i in 0..p.y().len() {
        y.push(diffusion.apply(&p.y()[i])?);
        yp.push(diffusion.derivative(&p.y()[i], &p.y_prime()[i])?);
    }
    ControlledPath::new(
        p.grid().clone(),
        y,
        yp,
        p.gamma() - diffusion.sigma(),
        p.alpha(),
    )
}

#[derive(Debug, Clone, Copy)]
pub struct CompositionCheck {
    /// Controlled norm of (G(y), DG(y)[y']).
    pub lhs: f64,
    /// 1 + controlled norm of (y, y').
    pub rhs_scale: f64,
    /// lhs / rhs_scale; bounded for admissible diffusions, and affine in the
    /// size of the input path rather than quadratic.
    pub constant: f64,
}

pub fn composition_bound_check(
    p: &ControlledPath,
    diffusion: &dyn Diffusion,
    x: &RoughPath,
) -> Result<CompositionCheck> {
    let composed = compose_diffusion(p, diffusion)?;
    let lhs = composed.controlled_norm(x)?.total;
    let rhs_scale = 1.0 + p.controlled_norm(x)?.total;
    Ok(CompositionCheck {
        lhs,
        rhs_scale,
        constant: lhs / rhs_scale,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct IntegralBoundSample {
    pub horizon: f64,
    /// Controlled norm of the integral path (z, y) at level gamma + sigma.
    pub lhs: f64,
    /// |y_0| + |y'_0| + horizon^(alpha - sigma) times the norm of (y, y').
    pub rhs: f64,
    pub constant: f64,
}

/// Norm bound for the compensated integral over shrinking horizons: the
/// quotient lhs / rhs should stay bounded as the horizon shrinks, with the
/// sigma fractional orders regained by the semigroup.
pub fn rough_integral_bound_check(
    p: &ControlledPath,
    x: &RoughPath,
    scale: &SpaceScale,
    sigma: f64,
    ends: &[usize],
) -> Result<Vec<IntegralBoundSample>> {
    check_triple(p, x, scale)?;
    if !(0.0..p.alpha()).contains(&sigma) {
        return Err(Error::InvalidRegularity {
            message: format!("sigma must lie in [0, alpha), got {sigma}"),
        });
    }
    let z_all = rough_convolution_trajectory(p, x, scale)?;
    let mut out = Vec::with_capacity(ends.len());
    for &e in ends {
        p.grid().check_pair(1, e)?;
        let grid_e = p.grid().window(0, e)?;
        let z = ControlledPath::new(
            grid_e,
            z_all[..=e].to_vec(),
            p.y()[..=e].to_vec(),
            p.gamma() + sigma,
            p.alpha(),
        )?;
        let xe = x.restrict(e)?;
        let lhs = z.controlled_norm(&xe)?.total;
        let pe = p.restrict(e)?;
        let pe_norm = pe.controlled_norm(&xe)?.total;
        let horizon = p.grid().t(e);
        let rhs = p.y()[0].norm_gamma(p.gamma())?
            + p.y_prime()[0].norm_gamma(p.gamma() - p.alpha())?
            + horizon.powf(p.alpha() - sigma) * pe_norm;
        out.push(IntegralBoundSample {
            horizon,
            lhs,
            rhs,
            constant: lhs / rhs.max(1e-300),
        });
    }
    Ok(out)
}

/// Controlled norm of the difference of the germ expansions of two paths;
/// convenience wrapper used by diagnostics.
pub fn controlled_norm_difference(
    a: &ControlledPath,
    b: &ControlledPath,
    x: &RoughPath,
) -> Result<ControlledNormBreakdown> {
    a.difference(b)?.controlled_norm(x)
}
