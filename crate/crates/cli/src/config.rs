//! JSON run configuration and its translation into library objects.
//!
//! Unknown fields are rejected so typos fail loudly; every field has a
//! default, so `{}` is a complete (if small) scenario.

use std::sync::Arc;

use rpde_core::num_complex::Complex64;
use serde::Deserialize;

use rpde_core::coefficients::{PointwiseDrift, ZeroDiffusion};
use rpde_core::fbm::fbm_lift;
use rpde_core::rough_path::RoughPath;
use rpde_core::solver::{SolverConfig, WindowPolicy};
use rpde_core::spectral::{SpaceScale, SpectralField};
use rpde_core::{Coefficients, TimeGrid};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub driver: DriverSpec,
    pub space: SpaceSpec,
    pub coefficients: CoefficientSpec,
    pub initial: InitialSpec,
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverSpec {
    /// "fbm", "sine", or "zero".
    pub kind: String,
    pub hurst: f64,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Hoelder exponent of the lift; defaults to hurst - 0.01 for "fbm".
    pub alpha: Option<f64>,
    /// Amplitude for the "sine" driver.
    pub amplitude: f64,
}

impl Default for DriverSpec {
    fn default() -> Self {
        DriverSpec {
            kind: "fbm".into(),
            hurst: 0.45,
            steps: 256,
            horizon: 1.0,
            seed: 1,
            alpha: None,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceSpec {
    pub dim: usize,
    pub cutoff: usize,
    pub mass_shift: f64,
}

impl Default for SpaceSpec {
    fn default() -> Self {
        SpaceSpec {
            dim: 1,
            cutoff: 8,
            mass_shift: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSpec {
    /// "zero", "linear_diffusion", "identity_drift_linear_diffusion",
    /// "reaction_diffusion", "sine_drift", or "quadratic_unsafe".
    pub preset: String,
    pub lambda: f64,
    pub sigma: f64,
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        CoefficientSpec {
            preset: "linear_diffusion".into(),
            lambda: 0.5,
            sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeSpec {
    pub k: Vec<i64>,
    pub amplitude: f64,
}

impl Default for ModeSpec {
    fn default() -> Self {
        ModeSpec {
            k: vec![1],
            amplitude: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub mean: f64,
    pub modes: Vec<ModeSpec>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            mean: 1.0,
            modes: vec![ModeSpec::default()],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    /// "auto", "fixed_count", or "fixed_length".
    pub policy: String,
    pub count: usize,
    pub length: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            policy: "auto".into(),
            count: 4,
            length: 0.25,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub delta: f64,
    pub picard_tol: f64,
    pub max_iters: usize,
    pub depth: u32,
    pub window: WindowSpec,
    pub blowup_factor: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            gamma: 0.9,
            alpha: 0.44,
            sigma: 0.0,
            delta: 0.0,
            picard_tol: 1e-8,
            max_iters: 60,
            depth: 4,
            window: WindowSpec::default(),
            blowup_factor: 1e6,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Effective Hoelder exponent of the driver lift.
    pub fn lift_alpha(&self) -> f64 {
        self.driver
            .alpha
            .unwrap_or(match self.driver.kind.as_str() {
                "fbm" => self.driver.hurst - 0.01,
                _ => self.solver.alpha,
            })
    }

    pub fn build_driver(&self) -> Result<DriverBuild, CliError> {
        let d = &self.driver;
        match d.kind.as_str() {
            "fbm" => {
                let lift = fbm_lift(d.hurst, d.steps, d.horizon, d.seed, d.alpha)?;
                Ok(DriverBuild {
                    path: lift.path,
                    generator: Some(lift.generator),
                })
            }
            "sine" => {
                let grid = TimeGrid::uniform(d.steps, d.horizon)?;
                let samples: Vec<f64> = (0..=d.steps)
                    .map(|i| d.amplitude * (2.0 * std::f64::consts::PI * grid.t(i)).sin())
                    .collect();
                Ok(DriverBuild {
                    path: RoughPath::canonical_lift_smooth(&samples, grid, self.lift_alpha())?,
                    generator: None,
                })
            }
            "zero" => Ok(DriverBuild {
                path: RoughPath::zero(TimeGrid::uniform(d.steps, d.horizon)?, self.lift_alpha())?,
                generator: None,
            }),
            other => Err(CliError::Config(format!(
                "unknown driver kind '{other}' (expected fbm, sine, or zero)"
            ))),
        }
    }

    pub fn build_scale(&self) -> Result<SpaceScale, CliError> {
        Ok(SpaceScale::new(
            self.space.dim,
            self.space.cutoff,
            self.space.mass_shift,
        )?)
    }

    pub fn build_initial(&self) -> Result<SpectralField, CliError> {
        let mut field = SpectralField::zero(self.space.dim, self.space.cutoff)?;
        if self.initial.mean != 0.0 {
            let zero_mode = vec![0i64; self.space.dim];
            field.set_coeff(&zero_mode, Complex64::new(self.initial.mean, 0.0))?;
        }
        for mode in &self.initial.modes {
            let cosine = SpectralField::real_cosine(
                self.space.dim,
                self.space.cutoff,
                &mode.k,
                mode.amplitude,
            )?;
            field.add_scaled(1.0, &cosine)?;
        }
        Ok(field)
    }

    pub fn build_coefficients(&self) -> Result<Coefficients, CliError> {
        let c = &self.coefficients;
        Ok(match c.preset.as_str() {
            "zero" => Coefficients::zero(),
            "linear_diffusion" => Coefficients::linear_diffusion(c.lambda, c.sigma)?,
            "identity_drift_linear_diffusion" => {
                Coefficients::identity_drift_linear_diffusion(c.lambda, c.sigma)?
            }
            "reaction_diffusion" => Coefficients::reaction_diffusion(
                c.lambda,
                c.sigma,
                self.space.dim,
                self.space.cutoff,
            )?,
            "sine_drift" => Coefficients::new(
                Arc::new(PointwiseDrift::new(f64::sin)),
                Arc::new(ZeroDiffusion),
            ),
            "quadratic_unsafe" => Coefficients::quadratic_unsafe(),
            other => {
                return Err(CliError::Config(format!(
                    "unknown coefficient preset '{other}'"
                )))
            }
        })
    }

    pub fn build_solver_config(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let window = match s.window.policy.as_str() {
            "auto" => WindowPolicy::Auto,
            "fixed_count" => WindowPolicy::FixedCount(s.window.count),
            "fixed_length" => WindowPolicy::FixedLength(s.window.length),
            other => {
                return Err(CliError::Config(format!(
                    "unknown window policy '{other}' (expected auto, fixed_count, or fixed_length)"
                )))
            }
        };
        let cfg = SolverConfig {
            gamma: s.gamma,
            alpha: s.alpha,
            sigma: s.sigma,
            delta: s.delta,
            picard_tol: s.picard_tol,
            max_iters: s.max_iters,
            depth: s.depth,
            window,
            blowup_factor: s.blowup_factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Metadata written into the driver file header.
    pub fn driver_metadata(
        &self,
        generator: Option<&str>,
    ) -> std::collections::BTreeMap<String, String> {
        let mut meta = std::collections::BTreeMap::new();
        meta.insert("kind".into(), self.driver.kind.clone());
        meta.insert("seed".into(), self.driver.seed.to_string());
        meta.insert("steps".into(), self.driver.steps.to_string());
        meta.insert(
            "horizon".into(),
            rpde_core::io::format_float(self.driver.horizon),
        );
        if self.driver.kind == "fbm" {
            meta.insert(
                "hurst".into(),
                rpde_core::io::format_float(self.driver.hurst),
            );
        }
        if let Some(g) = generator {
            meta.insert("generator".into(), g.to_string());
        }
        meta
    }
}

/// A built driver plus the tag of the sampler that produced it, if any.
pub struct DriverBuild {
    pub path: RoughPath,
    pub generator: Option<&'static str>,
}
