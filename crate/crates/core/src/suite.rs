//! Built-in verification suite.
//!
//! Each check exercises one load-bearing guarantee of the library on a fixed,
//! seeded scenario and reports pass/fail with a one-line detail string. The
//! checks are self-contained (they build their own drivers, fields, and
//! configurations) so they can run from the test harness and from the CLI
//! alike. Every check also carries a wall-clock budget; exceeding it fails
//! the check even when the numbers are good, because the guarantees are only
//! useful if they are cheap enough to verify routinely.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::calculus::{
    compose_diffusion, drift_convolution, rough_convolution, sewing_error_probe,
};
use crate::coefficients::{
    Coefficients, IdentityDrift, LinearDiffusion, QuadraticDiffusion, ZeroDiffusion,
};
use crate::controlled::ControlledPath;
use crate::error::Result;
use crate::fbm::fbm_lift;
use crate::grid::TimeGrid;
use crate::par::batch_map;
use crate::rough_path::RoughPath;
use crate::solver::{cocycle_check, global_solve, SolverConfig, WindowPolicy};
use crate::spectral::{interpolation_check, weight_table, SpaceScale, SpectralField};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

fn timed(
    name: &'static str,
    budget_seconds: f64,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CheckOutcome {
    let start = Instant::now();
    let result = body();
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok((ok, mut detail)) => {
            let within = seconds <= budget_seconds;
            if !within {
                detail = format!("{detail}; over budget of {budget_seconds:.0}s");
            }
            CheckOutcome {
                name,
                passed: ok && within,
                detail,
                seconds,
            }
        }
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
            seconds,
        },
    }
}

/// Least-squares affine fit y = a + b x; returns (a, b, r_squared).
fn affine_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (a, b, r2)
}

/// Second-level increments reconstructed from per-step data must satisfy the
/// additivity identity on every sampled driver, and on smooth canonical
/// lifts, to near machine precision.
pub fn check_second_level_additivity() -> CheckOutcome {
    timed("second-level-additivity", 10.0, || {
        let n = 512;
        let hursts = [0.35, 0.40, 0.50];
        let defects = batch_map(100, |i| -> Result<f64> {
            let h = hursts[i % hursts.len()];
            let lift = fbm_lift(h, n, 1.0, 1000 + i as u64, Some(0.34))?;
            Ok(lift.path.chen_defect())
        });
        let mut max_sampled = 0.0f64;
        for d in defects {
            max_sampled = max_sampled.max(d?);
        }

        let grid = TimeGrid::uniform(n, 1.0)?;
        let mut max_smooth = 0.0f64;
        for f in [
            |t: f64| t,
            |t: f64| (2.0 * PI * t).sin(),
            |t: f64| t * t - 0.5 * t,
        ] {
            let samples: Vec<f64> = (0..=n).map(|i| f(grid.t(i))).collect();
            let path = RoughPath::canonical_lift_smooth(&samples, grid.clone(), 0.4)?;
            max_smooth = max_smooth.max(path.chen_defect());
        }

        let ok = max_sampled < 1e-12 && max_smooth < 1e-12;
        Ok((ok, format!(
            "max defect over 100 sampled lifts (n={n}) {max_sampled:.3e}, over smooth lifts {max_smooth:.3e}, tolerance 1e-12"
        )))
    })
}

/// The three-level norm interpolation inequality holds with constant one on
/// random fields, with equality on single modes.
pub fn check_interpolation_inequality() -> CheckOutcome {
    timed("interpolation-inequality", 5.0, || {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let decays = [0.3, 0.7, 1.1];
        let mut max_ratio = 0.0f64;
        for i in 0..1000 {
            let (dim, cutoff) = if i % 2 == 0 { (1, 16) } else { (2, 5) };
            let u = SpectralField::random(dim, cutoff, decays[i % 3], &mut rng)?;
            let mut levels = [0.0f64; 3];
            for l in &mut levels {
                *l = rng.gen_range(-1.0..1.5);
            }
            levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let check = interpolation_check(&u, levels[0], levels[1], levels[2])?;
            if check.rhs > 0.0 {
                max_ratio = max_ratio.max(check.lhs / check.rhs);
            }
        }

        let single = SpectralField::single_mode(1, 16, &[5], Complex64::new(0.7, -0.2))?;
        let eq = interpolation_check(&single, -0.5, 0.3, 1.2)?;
        let eq_defect = (eq.lhs / eq.rhs - 1.0).abs();

        let ok = max_ratio <= 1.0 + 1e-10 && eq_defect <= 1e-12;
        Ok((ok, format!(
            "max ratio over 1000 random fields {max_ratio:.12}, single-mode equality defect {eq_defect:.3e}"
        )))
    })
}

/// Semigroup smoothing: the loss constant stays at most one for mass shifts
/// up to one, and the gain constant is finite and stable under doubling the
/// mode cutoff.
pub fn check_semigroup_smoothing() -> CheckOutcome {
    timed("semigroup-smoothing", 5.0, || {
        let times: Vec<f64> = (0..20)
            .map(|j| 2e-3 * 500f64.powf(j as f64 / 19.0))
            .collect();
        let sigmas = [0.0, 0.25, 0.5, 1.0];
        let mut worst_loss = 0.0f64;
        let mut worst_gain_drift = 0.0f64;
        let mut max_gain = 0.0f64;
        for &c in &[0.0, 1.0] {
            let scale = SpaceScale::new(1, 32, c)?;
            let fine = SpaceScale::new(1, 64, c)?;
            for &sigma in &sigmas {
                let report = scale.verify_sg_bounds(sigma, &times)?;
                let report_fine = fine.verify_sg_bounds(sigma, &times)?;
                worst_loss = worst_loss.max(report.constant_loss);
                max_gain = max_gain.max(report.constant_gain);
                if !report.constant_gain.is_finite() || report.constant_gain <= 0.0 {
                    return Ok((
                        false,
                        format!(
                            "gain constant not finite-positive at sigma {sigma}, mass shift {c}"
                        ),
                    ));
                }
                let drift = (report.constant_gain - report_fine.constant_gain).abs()
                    / report_fine.constant_gain;
                worst_gain_drift = worst_gain_drift.max(drift);
            }
        }
        let ok = worst_loss <= 1.0 + 1e-10 && worst_gain_drift <= 0.05;
        Ok((ok, format!(
            "max loss constant {worst_loss:.12} (bound 1), max gain {max_gain:.4}, gain drift under cutoff doubling {worst_gain_drift:.2e} (bound 5e-2)"
        )))
    })
}

/// Builds the canonical sewing probe: a controlled path whose remainder is
/// exactly the second level of the driver, so the germ error decays at the
/// generic rate rather than an accidentally better one.
fn sewing_probe_path(x: &RoughPath, gamma: f64) -> Result<ControlledPath> {
    let dim = 1;
    let cutoff = 8;
    let base = SpectralField::from_function(dim, cutoff, |p| 1.0 + p[0].cos())?;
    let v = SpectralField::real_cosine(dim, cutoff, &[1], 1.0)?;
    let w = SpectralField::real_cosine(dim, cutoff, &[2], 0.8)?;
    let n = x.grid().len();
    let mut y = Vec::with_capacity(n);
    let mut yp = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x.x()[i];
        let x2i = if i == 0 {
            0.0
        } else {
            x.chen_reconstruct(0, i)?
        };
        let mut f = base.clone();
        f.add_scaled(xi, &v)?;
        f.add_scaled(x2i, &w)?;
        y.push(f);
        let mut d = v.clone();
        d.add_scaled(xi, &w)?;
        yp.push(d);
    }
    ControlledPath::new(x.grid().clone(), y, yp, gamma, x.alpha())
}

/// Germ-versus-integral errors over halving windows decay at least at the
/// compensated sewing rate for each admissible norm-level gain.
pub fn check_sewing_rates() -> CheckOutcome {
    timed("sewing-rates", 120.0, || {
        let alpha = 0.40;
        let lift = fbm_lift(0.41, 256, 1.0, 2024, Some(alpha))?;
        let x = lift.path;
        let p = sewing_probe_path(&x, 0.85)?;
        let scale = SpaceScale::new(1, 8, 1.0)?;
        let mut details = Vec::new();
        let mut ok = true;
        for beta in [0.0, alpha, 2.0 * alpha] {
            let probe = sewing_error_probe(&p, &x, &scale, 0, 256, beta, 6)?;
            let floor = 3.0 * alpha - beta - 0.1;
            let pass = probe.fitted_rate >= floor;
            ok &= pass;
            details.push(format!(
                "beta {beta:.2}: rate {:.3} (floor {floor:.2})",
                probe.fitted_rate
            ));
        }
        Ok((ok, details.join(", ")))
    })
}

/// Exact oracles: the compensated integral of the driver against itself
/// telescopes to the second level at every partition depth; the drift
/// convolution of a constant is exact; and a purely geometric scenario with a
/// one-step closed form is reproduced with errors that shrink under grid
/// refinement.
pub fn check_exact_oracles() -> CheckOutcome {
    timed("exact-oracles", 120.0, || {
        // Driver integrated against itself under the identity semigroup.
        let lift = fbm_lift(0.45, 128, 1.0, 77, None)?;
        let x = lift.path;
        let one = SpectralField::single_mode(1, 0, &[0], Complex64::new(1.0, 0.0))?;
        let zero = SpectralField::zero(1, 0)?;
        let p = ControlledPath::exactly_controlled(&x, &zero, &one)?.at_level(0.9);
        let flat = SpaceScale::new(1, 0, 0.0)?;
        let exact2 = x.chen_reconstruct(0, 128)?;
        let mut integral_defect = 0.0f64;
        for depth in 0..=4 {
            let val = rough_convolution(&p, &x, &flat, 128, depth)?;
            integral_defect = integral_defect.max((val.coeffs()[0].re - exact2).abs());
            integral_defect = integral_defect.max(val.coeffs()[0].im.abs());
        }

        // Drift convolution of the constant one under unit mass shift.
        let grid = TimeGrid::uniform(64, 1.0)?;
        let ones = vec![one.clone(); grid.len()];
        let coeffs = Coefficients::new(Arc::new(IdentityDrift), Arc::new(ZeroDiffusion));
        let unit_scale = SpaceScale::new(1, 0, 1.0)?;
        let hot = drift_convolution(&ones, &coeffs, &unit_scale, &grid, 64)?;
        let drift_defect = (hot.coeffs()[0].re - (1.0 - (-1.0f64).exp())).abs();

        // Geometric scenario: linear multiplicative noise, no drift, mode-wise
        // closed form, compared across nested grid refinements.
        let lambda = 0.7;
        let gamma = 0.9;
        let mut y0 = SpectralField::zero(1, 2)?;
        y0.set_coeff(&[0], Complex64::new(1.0, 0.0))?;
        y0.set_coeff(&[1], Complex64::new(0.4, 0.0))?;
        y0.set_coeff(&[-1], Complex64::new(0.4, 0.0))?;
        y0.set_coeff(&[2], Complex64::new(0.2, 0.0))?;
        y0.set_coeff(&[-2], Complex64::new(0.2, 0.0))?;
        let scale = SpaceScale::new(1, 2, 0.0)?;
        let geo = Coefficients::linear_diffusion(lambda, 0.0)?;
        let cfg = SolverConfig {
            gamma,
            alpha: 0.45,
            sigma: 0.0,
            delta: 0.0,
            picard_tol: 1e-9,
            max_iters: 60,
            depth: 5,
            window: WindowPolicy::Auto,
            blowup_factor: 1e6,
        };
        // Terminal errors on nested grids shrink in the mean but not along
        // every single realization, so average over a few seeded drivers and
        // require the mean to decay monotonically; the finest-grid error must
        // beat the bound for every driver individually.
        let seeds = [2468u64, 606, 12345];
        let mu = scale.mu_table()?;
        let mut errors = [0.0f64; 3];
        let mut final_worst = 0.0f64;
        for &seed in &seeds {
            let master = fbm_lift(0.5, 512, 1.0, seed, Some(0.45))?.path;
            let x_end = master.x()[512];
            let mut exact = y0.clone();
            for (c, m) in exact.coeffs_mut().iter_mut().zip(&mu) {
                *c *= (-m + lambda * x_end).exp();
            }
            let exact_norm = exact.norm_gamma(gamma)?;
            for (slot, stride) in [4usize, 2, 1].into_iter().enumerate() {
                let xs = master.restrict_stride(stride)?;
                let rec = global_solve(&y0, &geo, &xs, &scale, &cfg)?;
                let last = rec.path.y().last().unwrap();
                let err = last.minus(&exact)?.norm_gamma(gamma)? / exact_norm;
                errors[slot] += err / seeds.len() as f64;
                if stride == 1 {
                    final_worst = final_worst.max(err);
                }
            }
        }
        let monotone = errors[0] > errors[1] && errors[1] > errors[2];
        let ok = integral_defect < 1e-12 && drift_defect < 1e-10 && monotone && final_worst < 1e-3;
        Ok((ok, format!(
            "self-integral defect {integral_defect:.2e}, constant-drift defect {drift_defect:.2e}, geometric mean errors n=128/256/512: {:.3e}/{:.3e}/{:.3e} (monotone: {monotone}), worst finest-grid error {final_worst:.3e} (bound 1e-3)",
            errors[0], errors[1], errors[2]
        )))
    })
}

/// Composition through a multiplication-type diffusion grows affinely with
/// the amplitude of the input path; a quadratic diffusion visibly does not.
pub fn check_composition_affinity() -> CheckOutcome {
    timed("composition-affinity", 60.0, || {
        let n = 64;
        let grid = TimeGrid::uniform(n, 1.0)?;
        let samples: Vec<f64> = (0..=n)
            .map(|i| 0.5 * (2.0 * PI * grid.t(i)).sin())
            .collect();
        let x = RoughPath::canonical_lift_smooth(&samples, grid, 0.45)?;
        let base =
            SpectralField::from_function(1, 4, |p| 0.4 * p[0].cos() + 0.1 * (2.0 * p[0]).cos())?;
        let slope = SpectralField::from_function(1, 4, |p| 0.3 * p[0].cos())?;
        let g = SpectralField::from_function(1, 4, |p| 1.0 + 0.5 * p[0].cos())?;
        let lin = LinearDiffusion::new(0.8, 0.0, Some(g))?;
        let quad = QuadraticDiffusion;

        let mut lin_points = Vec::new();
        let mut quad_points = Vec::new();
        for lambda in [1.0f64, 2.0, 4.0, 8.0] {
            let p = ControlledPath::exactly_controlled(
                &x,
                &base.scaled(lambda),
                &slope.scaled(lambda),
            )?
            .at_level(0.95);
            lin_points.push((
                lambda,
                compose_diffusion(&p, &lin)?.controlled_norm(&x)?.total,
            ));
            quad_points.push((
                lambda,
                compose_diffusion(&p, &quad)?.controlled_norm(&x)?.total,
            ));
        }
        let (_, _, r2_lin) = affine_fit(&lin_points);
        let (_, _, r2_quad) = affine_fit(&quad_points);
        let ratios: Vec<f64> = lin_points.iter().map(|(l, v)| v / l).collect();
        let ratio_spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
            / ratios.iter().cloned().fold(f64::MAX, f64::min)
            - 1.0;
        let ok = r2_lin >= 0.999 && ratio_spread.abs() < 1e-9 && r2_quad < 0.99;
        Ok((ok, format!(
            "affine fit R^2 {r2_lin:.6} (floor 0.999, per-amplitude spread {ratio_spread:.1e}), quadratic contrast R^2 {r2_quad:.4} (must stay below 0.99)"
        )))
    })
}

/// Windowed continuation runs to several horizons without blow-up, window
/// norms stay under the geometric growth envelope, the a-priori exponential
/// fit is stable, and refining the window partition does not move the
/// solution beyond the Picard tolerance.
pub fn check_globalization() -> CheckOutcome {
    timed("globalization", 300.0, || {
        let alpha = 0.42;
        let coeffs = Coefficients::reaction_diffusion(0.4, 0.2, 1, 8)?;
        let scale = SpaceScale::new(1, 8, 1.0)?;
        let y0 = SpectralField::from_function(1, 8, |p| 0.6 + 0.4 * p[0].cos())?;
        let cfg = SolverConfig {
            gamma: 0.9,
            alpha,
            sigma: 0.2,
            delta: 0.0,
            picard_tol: 1e-8,
            max_iters: 80,
            depth: 4,
            window: WindowPolicy::Auto,
            blowup_factor: 1e6,
        };
        let r = y0.norm_gamma(cfg.gamma)?;
        let mut details = Vec::new();
        let mut ok = true;
        for horizon in [1usize, 2, 4] {
            let n = 128 * horizon;
            let x = fbm_lift(0.45, n, horizon as f64, 31 + horizon as u64, Some(alpha))?.path;
            let rec = global_solve(&y0, &coeffs, &x, &scale, &cfg)?;
            let c = rec.constants.c.max(1.0);
            let mut envelope_ok = true;
            let mut max_norm = 0.0f64;
            for (k, win) in rec.windows.iter().enumerate() {
                max_norm = max_norm.max(win.controlled_norm);
                let bound = (2.0 * c).powi(k as i32 + 1) * (1.0 + r);
                envelope_ok &= win.controlled_norm <= bound;
            }
            let finite = rec.sup_history.iter().all(|v| v.is_finite());
            ok &= envelope_ok && finite && rec.constants.apriori_ok;
            details.push(format!(
                "T={horizon}: {} windows, max window norm {max_norm:.3}, C {:.2}, envelope {}, apriori m1 {:.2} m2 {:.2}",
                rec.windows.len(),
                rec.constants.c,
                if envelope_ok { "ok" } else { "VIOLATED" },
                rec.constants.m1,
                rec.constants.m2,
            ));
        }

        // Window-partition refinement: same horizon solved on k and 2k fixed
        // windows must agree to within the fixed-point tolerance.
        let mild = Coefficients::linear_diffusion(0.25, 0.1)?;
        let x = fbm_lift(0.45, 128, 1.0, 9001, Some(alpha))?.path;
        let mut cfg_k = cfg.clone();
        cfg_k.sigma = 0.1;
        cfg_k.window = WindowPolicy::FixedCount(8);
        let a = global_solve(&y0, &mild, &x, &scale, &cfg_k)?;
        cfg_k.window = WindowPolicy::FixedCount(16);
        let b = global_solve(&y0, &mild, &x, &scale, &cfg_k)?;
        let wts = weight_table(1, 8, cfg.gamma)?;
        let mut dist = 0.0f64;
        for (ya, yb) in a.path.y().iter().zip(b.path.y()) {
            dist = dist.max(ya.minus(yb)?.norm_with_weights(&wts));
        }
        let refine_ok = dist <= 10.0 * cfg.picard_tol;
        ok &= refine_ok;
        details.push(format!(
            "window refinement distance {dist:.2e} (bound {:.0e})",
            10.0 * cfg.picard_tol
        ));
        Ok((ok, details.join("; ")))
    })
}

/// Restarting the solver from its own state reproduces the uninterrupted
/// trajectory: exactly for deterministic drivers and trivial split points,
/// and to within the fixed-point tolerance for sampled drivers.
pub fn check_flow_property() -> CheckOutcome {
    timed("flow-property", 60.0, || {
        let alpha = 0.42;
        let scale = SpaceScale::new(1, 8, 1.0)?;
        let y0 = SpectralField::from_function(1, 8, |p| 1.0 + 0.5 * p[0].cos())?;
        let coeffs = Coefficients::linear_diffusion(0.5, 0.1)?;
        let cfg = SolverConfig {
            gamma: 0.9,
            alpha,
            sigma: 0.1,
            delta: 0.0,
            picard_tol: 1e-9,
            max_iters: 80,
            depth: 4,
            window: WindowPolicy::Auto,
            blowup_factor: 1e6,
        };
        let x = fbm_lift(0.45, 256, 1.0, 555, Some(alpha))?.path;
        let sampled = cocycle_check(&y0, &coeffs, &x, &scale, &cfg, 96)?;
        let trivial = cocycle_check(&y0, &coeffs, &x, &scale, &cfg, 0)?;

        let still = RoughPath::zero(TimeGrid::uniform(256, 1.0)?, alpha)?;
        let det = cocycle_check(&y0, &Coefficients::zero(), &still, &scale, &cfg, 128)?;

        let ok = sampled < 1e-6 && trivial == 0.0 && det == 0.0;
        Ok((ok, format!(
            "sampled-driver discrepancy {sampled:.2e} (bound 1e-6), trivial split {trivial:.1e}, deterministic driver {det:.1e} (both must be exactly zero)"
        )))
    })
}

/// Runs every check in order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_second_level_additivity(),
        check_interpolation_inequality(),
        check_semigroup_smoothing(),
        check_sewing_rates(),
        check_exact_oracles(),
        check_composition_affinity(),
        check_globalization(),
        check_flow_property(),
    ]
}
