//! Drift and diffusion operators for the semilinear equation
//! dy = (A y + F(y)) dt + G(y) dX.
//!
//! F maps level gamma to gamma - delta for some delta in [0, 1); G loses a
//! fractional order sigma in [0, alpha) and carries its Frechet derivative
//! explicitly, because the rough integrand needs DG(y) G(y) alongside G(y).
//! Implementations that cannot provide an analytic derivative can wrap a
//! closure in [`FnDiffusion`], which falls back to a central difference with
//! a relative step.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{frac_laplacian, multiply_smooth, SpectralField};

pub trait Drift: Send + Sync {
    /// Regularity loss delta: F maps level gamma into gamma - delta.
    fn delta(&self) -> f64;
    fn apply(&self, u: &SpectralField) -> Result<SpectralField>;
}

pub trait Diffusion: Send + Sync {
    /// Fractional order lost by one application of G.
    fn sigma(&self) -> f64;
    fn apply(&self, u: &SpectralField) -> Result<SpectralField>;
    /// Frechet derivative DG(at)[dir].
    fn derivative(&self, at: &SpectralField, dir: &SpectralField) -> Result<SpectralField>;
    /// DG(at)[G(at)], the second-level coefficient of the rough integrand.
    fn derivative_of_self(&self, at: &SpectralField) -> Result<SpectralField> {
        self.derivative(at, &self.apply(at)?)
    }
}

pub struct ZeroDrift;

impl Drift for ZeroDrift {
    fn delta(&self) -> f64 {
        0.0
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        SpectralField::zero(u.dim(), u.cutoff())
    }
}

pub struct IdentityDrift;

impl Drift for IdentityDrift {
    fn delta(&self) -> f64 {
        0.0
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(u.clone())
    }
}

/// F(u)(x) = f(u(x)) evaluated on the dealiasing collocation grid.
pub struct PointwiseDrift<F: Fn(f64) -> f64 + Send + Sync> {
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> PointwiseDrift<F> {
    pub fn new(f: F) -> Self {
        PointwiseDrift { f }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Drift for PointwiseDrift<F> {
    fn delta(&self) -> f64 {
        0.0
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        u.pointwise_map(&self.f)
    }
}

pub struct ZeroDiffusion;

impl Diffusion for ZeroDiffusion {
    fn sigma(&self) -> f64 {
        0.0
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        SpectralField::zero(u.dim(), u.cutoff())
    }
    fn derivative(&self, at: &SpectralField, _dir: &SpectralField) -> Result<SpectralField> {
        SpectralField::zero(at.dim(), at.cutoff())
    }
}

/// G(u) = lambda * g * (-Laplacian)^sigma u with an optional smooth
/// multiplier g; linear, so DG(u)[v] = G(v).
pub struct LinearDiffusion {
    lambda: f64,
    sigma: f64,
    multiplier: Option<SpectralField>,
}

impl LinearDiffusion {
    pub fn new(lambda: f64, sigma: f64, multiplier: Option<SpectralField>) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidRegularity {
                message: format!("diffusion order must be nonnegative, got {sigma}"),
            });
        }
        if !lambda.is_finite() {
            return Err(Error::invalid_config("diffusion amplitude must be finite"));
        }
        Ok(LinearDiffusion {
            lambda,
            sigma,
            multiplier,
        })
    }
}

impl Diffusion for LinearDiffusion {
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        let v = if self.sigma == 0.0 {
            u.clone()
        } else {
            frac_laplacian(u, self.sigma)?
        };
        let v = v.scaled(self.lambda);
        match &self.multiplier {
            Some(g) => multiply_smooth(&v, g),
            None => Ok(v),
        }
    }
    fn derivative(&self, _at: &SpectralField, dir: &SpectralField) -> Result<SpectralField> {
        self.apply(dir)
    }
}

/// G(u) = u^2 (dealiased). Quadratic growth violates the boundedness the
/// contraction theory needs; kept to exercise blow-up detection.
pub struct QuadraticDiffusion;

impl Diffusion for QuadraticDiffusion {
    fn sigma(&self) -> f64 {
        0.0
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        multiply_smooth(u, u)
    }
    fn derivative(&self, at: &SpectralField, dir: &SpectralField) -> Result<SpectralField> {
        Ok(multiply_smooth(at, dir)?.scaled(2.0))
    }
}

/// Diffusion from a closure with a finite-difference derivative:
/// DG(u)[v] ~ (G(u + h v) - G(u - h v)) / (2 h), h chosen relative to the
/// magnitudes of u and v.
pub struct FnDiffusion<F>
where
    F: Fn(&SpectralField) -> Result<SpectralField> + Send + Sync,
{
    f: F,
    sigma: f64,
    fd_step_rel: f64,
}

impl<F> FnDiffusion<F>
where
    F: Fn(&SpectralField) -> Result<SpectralField> + Send + Sync,
{
    pub fn new(f: F, sigma: f64) -> Self {
        FnDiffusion {
            f,
            sigma,
            fd_step_rel: 1e-5,
        }
    }

    pub fn with_step(mut self, fd_step_rel: f64) -> Self {
        self.fd_step_rel = fd_step_rel;
        self
    }
}

impl<F> Diffusion for FnDiffusion<F>
where
    F: Fn(&SpectralField) -> Result<SpectralField> + Send + Sync,
{
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        (self.f)(u)
    }
    fn derivative(&self, at: &SpectralField, dir: &SpectralField) -> Result<SpectralField> {
        let dir_scale = dir.norm_gamma(0.0)?;
        if dir_scale == 0.0 {
            return SpectralField::zero(at.dim(), at.cutoff());
        }
        let at_scale = at.norm_gamma(0.0)?.max(1.0);
        let h = self.fd_step_rel * at_scale / dir_scale;
        let mut up = at.clone();
        up.add_scaled(h, dir)?;
        let mut down = at.clone();
        down.add_scaled(-h, dir)?;
        Ok((self.f)(&up)?.minus(&(self.f)(&down)?)?.scaled(0.5 / h))
    }
}

/// The pair (F, G) the solver consumes. Arc-backed so configurations clone
/// cheaply across windows and sweeps.
#[derive(Clone)]
pub struct Coefficients {
    pub drift: Arc<dyn Drift>,
    pub diffusion: Arc<dyn Diffusion>,
}

impl Coefficients {
    pub fn new(drift: Arc<dyn Drift>, diffusion: Arc<dyn Diffusion>) -> Self {
        Coefficients { drift, diffusion }
    }

    /// F = 0, G = 0: the solution is the semigroup flow of the initial datum.
    pub fn zero() -> Self {
        Coefficients::new(Arc::new(ZeroDrift), Arc::new(ZeroDiffusion))
    }

    /// F = 0, G = lambda (-Laplacian)^sigma.
    pub fn linear_diffusion(lambda: f64, sigma: f64) -> Result<Self> {
        Ok(Coefficients::new(
            Arc::new(ZeroDrift),
            Arc::new(LinearDiffusion::new(lambda, sigma, None)?),
        ))
    }

    /// F = identity (exponential forcing), G = lambda (-Laplacian)^sigma.
    pub fn identity_drift_linear_diffusion(lambda: f64, sigma: f64) -> Result<Self> {
        Ok(Coefficients::new(
            Arc::new(IdentityDrift),
            Arc::new(LinearDiffusion::new(lambda, sigma, None)?),
        ))
    }

    /// Reaction-diffusion showcase: F(u) = sin(u) pointwise and
    /// G = lambda * g * (-Laplacian)^sigma with g(x) = 1 + cos(x_1) / 2.
    pub fn reaction_diffusion(lambda: f64, sigma: f64, dim: usize, cutoff: usize) -> Result<Self> {
        let g = SpectralField::from_function(dim, cutoff, |x| 1.0 + 0.5 * x[0].cos())?;
        Ok(Coefficients::new(
            Arc::new(PointwiseDrift::new(f64::sin)),
            Arc::new(LinearDiffusion::new(lambda, sigma, Some(g))?),
        ))
    }

    /// F = 0, G(u) = u^2; outside the contraction theory, used to exercise
    /// blow-up detection.
    pub fn quadratic_unsafe() -> Self {
        Coefficients::new(Arc::new(ZeroDrift), Arc::new(QuadraticDiffusion))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoefficientBounds {
    /// sup |F(u)|_{gamma - delta} / (1 + |u|_gamma): linear-growth constant.
    pub drift_growth: f64,
    /// sup |G(u)|_{gamma - sigma} over the probe set.
    pub diffusion_sup: f64,
    /// sup |G(u) - G(v)|_{gamma - sigma} / |u - v|_gamma.
    pub diffusion_lip: f64,
    /// sup |DG(u)G(u) - DG(v)G(v)|_{gamma - alpha - sigma} / |u - v|_{gamma - alpha}.
    pub dgg_lip: f64,
}

/// Empirical operator bounds over a probe set; pairwise quotients for the
/// Lipschitz components.
pub fn measure_bounds(
    coeffs: &Coefficients,
    gamma: f64,
    alpha: f64,
    probes: &[SpectralField],
) -> Result<CoefficientBounds> {
    let delta = coeffs.drift.delta();
    let sigma = coeffs.diffusion.sigma();
    let mut drift_growth = 0.0f64;
    let mut diffusion_sup = 0.0f64;
    let mut g_values = Vec::with_capacity(probes.len());
    let mut dgg_values = Vec::with_capacity(probes.len());
    for u in probes {
        let fu = coeffs.drift.apply(u)?;
        drift_growth =
            drift_growth.max(fu.norm_gamma(gamma - delta)? / (1.0 + u.norm_gamma(gamma)?));
        let gu = coeffs.diffusion.apply(u)?;
        diffusion_sup = diffusion_sup.max(gu.norm_gamma(gamma - sigma)?);
        dgg_values.push(coeffs.diffusion.derivative_of_self(u)?);
        g_values.push(gu);
    }
    let mut diffusion_lip = 0.0f64;
    let mut dgg_lip = 0.0f64;
    for i in 0..probes.len() {
        for j in (i + 1)..probes.len() {
            let du = probes[i].minus(&probes[j])?;
            let d_gamma = du.norm_gamma(gamma)?;
            if d_gamma > 1e-14 {
                let dg = g_values[i].minus(&g_values[j])?.norm_gamma(gamma - sigma)?;
                diffusion_lip = diffusion_lip.max(dg / d_gamma);
            }
            let d_ga = du.norm_gamma(gamma - alpha)?;
            if d_ga > 1e-14 {
                let dd = dgg_values[i]
                    .minus(&dgg_values[j])?
                    .norm_gamma(gamma - alpha - sigma)?;
                dgg_lip = dgg_lip.max(dd / d_ga);
            }
        }
    }
    Ok(CoefficientBounds {
        drift_growth,
        diffusion_sup,
        diffusion_lip,
        dgg_lip,
    })
}
