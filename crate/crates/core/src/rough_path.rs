//! Scalar alpha-Hoelder rough paths on a finite time grid.
//!
//! A rough path is the pair (X, X2): first-level increments X_{s,t} = x_t - x_s
//! and the iterated integral X2_{s,t} of X against itself over [s, t]. Storage
//! is O(n): only the per-interval values x2_step[i] = X2 over [t_i, t_{i+1}]
//! are kept, and general X2_{s,t} are reconstructed through the additivity
//! identity
//!
//! ```text
//! X2_{s,t} = X2_{s,u} + X2_{u,t} + X_{s,u} X_{u,t},
//! ```
//!
//! which every valid second level satisfies exactly. The reconstruction is a
//! single left-to-right scan, so a full row { X2_{s,t} : t >= s } costs O(n).

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::par;

pub const ALPHA_MIN: f64 = 1.0 / 3.0;
pub const ALPHA_MAX: f64 = 0.5;

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > ALPHA_MIN && alpha < ALPHA_MAX) {
        return Err(Error::InvalidAlpha { alpha });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RoughPath {
    grid: TimeGrid,
    x: Vec<f64>,
    x2_step: Vec<f64>,
    alpha: f64,
}

impl RoughPath {
    /// Invariants checked: value vectors sized to the grid, finite entries,
    /// x[0] = 0, alpha in (1/3, 1/2).
    pub fn new(grid: TimeGrid, x: Vec<f64>, x2_step: Vec<f64>, alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        if x.len() != grid.len() || x2_step.len() != grid.len() - 1 {
            return Err(Error::GridMismatch {
                left_len: grid.len(),
                left_span: grid.span(),
                right_len: x.len(),
                right_span: f64::NAN,
            });
        }
        for (i, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { index: i });
            }
        }
        for (i, v) in x2_step.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { index: i });
            }
        }
        if x[0] != 0.0 {
            return Err(Error::format(format!(
                "path must start at 0, got x[0] = {}",
                x[0]
            )));
        }
        Ok(RoughPath {
            grid,
            x,
            x2_step,
            alpha,
        })
    }

    pub fn zero(grid: TimeGrid, alpha: f64) -> Result<Self> {
        let n = grid.len();
        RoughPath::new(grid, vec![0.0; n], vec![0.0; n - 1], alpha)
    }

    /// Lift of sampled values of a piecewise-linear function: first level is
    /// the increment from the starting value, second level per interval is the
    /// exact integral of the linear interpolant against itself, (increment)^2/2.
    pub fn canonical_lift_smooth(samples: &[f64], grid: TimeGrid, alpha: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch {
                left_len: grid.len(),
                left_span: grid.span(),
                right_len: samples.len(),
                right_span: f64::NAN,
            });
        }
        for (i, v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { index: i });
            }
        }
        let x: Vec<f64> = samples.iter().map(|v| v - samples[0]).collect();
        let x2_step: Vec<f64> = samples
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                0.5 * d * d
            })
            .collect();
        RoughPath::new(grid, x, x2_step, alpha)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x2_step(&self) -> &[f64] {
        &self.x2_step
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn increment(&self, s: usize, t: usize) -> f64 {
        self.x[t] - self.x[s]
    }

    /// X2_{s,t} by scanning the additivity identity across [s, t].
    pub fn chen_reconstruct(&self, s: usize, t: usize) -> Result<f64> {
        self.grid.check_pair(s, t)?;
        let mut acc = 0.0;
        for i in s..t {
            acc += self.x2_step[i] + (self.x[i] - self.x[s]) * (self.x[i + 1] - self.x[i]);
        }
        Ok(acc)
    }

    /// Full table of second-level increments; O(n) per row via the same scan.
    pub fn increment_table(&self) -> IncrementTable {
        let n = self.grid.len() - 1;
        let w = n + 1;
        let mut data = vec![0.0f64; w * w];
        for s in 0..=n {
            let xs = self.x[s];
            let mut acc = 0.0;
            for i in s..n {
                acc += self.x2_step[i] + (self.x[i] - xs) * (self.x[i + 1] - self.x[i]);
                data[s * w + i + 1] = acc;
            }
        }
        IncrementTable { n, data }
    }

    /// Hoelder norm of the first level, sup |x_t - x_s| / (t - s)^alpha.
    pub fn alpha_norm(&self) -> f64 {
        holder_norm(&self.x, &self.grid, self.alpha).unwrap()
    }

    /// sup |X2_{s,t}| / (t - s)^(2 alpha).
    pub fn second_level_norm(&self) -> f64 {
        let n = self.grid.len() - 1;
        par::index_sup(n, |s| {
            let xs = self.x[s];
            let ts = self.grid.t(s);
            let mut acc = 0.0;
            let mut m = 0.0f64;
            for i in s..n {
                acc += self.x2_step[i] + (self.x[i] - xs) * (self.x[i + 1] - self.x[i]);
                let dt = self.grid.t(i + 1) - ts;
                m = m.max(acc.abs() / dt.powf(2.0 * self.alpha));
            }
            m
        })
    }

    /// Distance to the zero path in the inhomogeneous metric.
    pub fn rho_alpha(&self) -> f64 {
        self.alpha_norm() + self.second_level_norm()
    }

    /// Restart the path at grid point s: increments are preserved, the window
    /// grid is shifted so time starts at 0. Used for window concatenation and
    /// for evaluating the driver under the time shift.
    pub fn shift(&self, s: usize) -> Result<Self> {
        let n = self.grid.len() - 1;
        self.grid.check_pair(s, n)?;
        if s == n {
            return Err(Error::EmptyGrid);
        }
        let grid = self.grid.window(s, n)?;
        let xs = self.x[s];
        let x: Vec<f64> = self.x[s..].iter().map(|v| v - xs).collect();
        let x2_step = self.x2_step[s..].to_vec();
        RoughPath::new(grid, x, x2_step, self.alpha)
    }

    /// Keep only grid points 0..=e.
    pub fn restrict(&self, e: usize) -> Result<Self> {
        self.grid.check_pair(0, e)?;
        if e == 0 {
            return Err(Error::EmptyGrid);
        }
        let grid = self.grid.window(0, e)?;
        RoughPath::new(
            grid,
            self.x[..=e].to_vec(),
            self.x2_step[..e].to_vec(),
            self.alpha,
        )
    }

    /// Coarse path on every `stride`-th grid point. Second-level steps are
    /// reconstructed, so the result is exactly the restriction of this lift.
    pub fn restrict_stride(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let n = self.grid.len() - 1;
        let mut idx: Vec<usize> = (0..=n).step_by(stride).collect();
        if *idx.last().unwrap() != n {
            idx.push(n);
        }
        let grid = TimeGrid::new(idx.iter().map(|&i| self.grid.t(i)).collect())?;
        let x: Vec<f64> = idx.iter().map(|&i| self.x[i]).collect();
        let mut x2_step = Vec::with_capacity(idx.len() - 1);
        for w in idx.windows(2) {
            x2_step.push(self.chen_reconstruct(w[0], w[1])?);
        }
        RoughPath::new(grid, x, x2_step, self.alpha)
    }

    /// Defect of the additivity identity over all triples of this path's own
    /// reconstructed table. Small values certify the O(n) storage scheme.
    pub fn chen_defect(&self) -> f64 {
        chen_defect(&self.increment_table(), &self.x)
    }
}

/// Dense (n+1) x (n+1) table of second-level increments; entries with t < s
/// are unused and zero.
#[derive(Debug, Clone)]
pub struct IncrementTable {
    n: usize,
    data: Vec<f64>,
}

impl IncrementTable {
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != (n + 1) * (n + 1) {
            return Err(Error::format(format!(
                "expected {} entries for an order-{} table, got {}",
                (n + 1) * (n + 1),
                n,
                data.len()
            )));
        }
        Ok(IncrementTable { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.data[s * (self.n + 1) + t]
    }

    pub fn set(&mut self, s: usize, t: usize, v: f64) {
        self.data[s * (self.n + 1) + t] = v;
    }

    fn row(&self, s: usize) -> &[f64] {
        let w = self.n + 1;
        &self.data[s * w..(s + 1) * w]
    }
}

/// max over s <= u <= t of |X2_{s,t} - X2_{s,u} - X2_{u,t} - X_{s,u} X_{u,t}|.
///
/// The inner loop runs over contiguous rows so it vectorizes; the outer loop
/// parallelizes over s.
pub fn chen_defect(table: &IncrementTable, x: &[f64]) -> f64 {
    let n = table.n;
    assert_eq!(x.len(), n + 1, "first level must match table order");
    par::index_sup(n + 1, |s| {
        let row_s = table.row(s);
        let xs = x[s];
        let mut m = 0.0f64;
        for u in s..=n {
            let row_u = table.row(u);
            let a = row_s[u];
            let b = x[u] - xs;
            let xu = x[u];
            let mut local = 0.0f64;
            for t in u..=n {
                let d = row_s[t] - a - row_u[t] - b * (x[t] - xu);
                local = local.max(d.abs());
            }
            m = m.max(local);
        }
        m
    })
}

/// sup over s < t of |v_t - v_s| / (t - s)^theta.
pub fn holder_norm(values: &[f64], grid: &TimeGrid, theta: f64) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch {
            left_len: grid.len(),
            left_span: grid.span(),
            right_len: values.len(),
            right_span: f64::NAN,
        });
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidRegularity {
            message: format!("Hoelder exponent must be positive, got {theta}"),
        });
    }
    Ok(par::pair_sup(grid.len() - 1, |i, j| {
        (values[j] - values[i]).abs() / (grid.t(j) - grid.t(i)).powf(theta)
    }))
}

/// Inhomogeneous rough-path distance: sup-ratio of first-level differences at
/// exponent alpha plus sup-ratio of second-level differences at 2 alpha.
pub fn rp_distance(a: &RoughPath, b: &RoughPath) -> Result<f64> {
    a.grid.check_aligned(&b.grid)?;
    if a.alpha != b.alpha {
        return Err(Error::InvalidRegularity {
            message: format!(
                "paths carry different Hoelder exponents: {} vs {}",
                a.alpha, b.alpha
            ),
        });
    }
    let n = a.grid.len() - 1;
    let alpha = a.alpha;
    let (first, second) = {
        let f = |s: usize| -> (f64, f64) {
            let ts = a.grid.t(s);
            let mut acc_a = 0.0;
            let mut acc_b = 0.0;
            let mut m1 = 0.0f64;
            let mut m2 = 0.0f64;
            for i in s..n {
                acc_a += a.x2_step[i] + (a.x[i] - a.x[s]) * (a.x[i + 1] - a.x[i]);
                acc_b += b.x2_step[i] + (b.x[i] - b.x[s]) * (b.x[i + 1] - b.x[i]);
                let dt = a.grid.t(i + 1) - ts;
                let d1 = ((a.x[i + 1] - a.x[s]) - (b.x[i + 1] - b.x[s])).abs();
                m1 = m1.max(d1 / dt.powf(alpha));
                m2 = m2.max((acc_a - acc_b).abs() / dt.powf(2.0 * alpha));
            }
            (m1, m2)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..n)
                .into_par_iter()
                .map(f)
                .reduce(|| (0.0, 0.0), |(p, q), (x, y)| (p.max(x), q.max(y)))
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n)
                .map(f)
                .fold((0.0f64, 0.0f64), |(p, q), (x, y)| (p.max(x), q.max(y)))
        }
    };
    Ok(first + second)
}
