use crate::error::{Error, Result};

/// Partition of a time interval [0, T].
///
/// Invariants: at least two points, strictly increasing, first point exactly 0.
/// All path and field trajectories in this crate are indexed by positions in
/// such a grid; two-parameter quantities use index pairs (i, j) with i <= j.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptyGrid);
        }
        if points[0] != 0.0 {
            return Err(Error::GridOrigin { t0: points[0] });
        }
        for (i, w) in points.windows(2).enumerate() {
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::NonFiniteSample { index: i + 1 });
            }
            if w[1] <= w[0] {
                return Err(Error::GridNotIncreasing { index: i + 1 });
            }
        }
        Ok(TimeGrid { points })
    }

    /// Uniform grid with `steps` intervals over [0, horizon].
    pub fn uniform(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid_config(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let h = horizon / steps as f64;
        let mut points: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
        // Pin the endpoint so restricting a path to [0, T] keeps the horizon exact.
        points[steps] = horizon;
        TimeGrid::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn span(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn step(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.points.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.points.len(),
            });
        }
        Ok(())
    }

    pub fn check_pair(&self, s: usize, t: usize) -> Result<()> {
        self.check_index(t)?;
        if s > t {
            return Err(Error::IndexOrder { s, t });
        }
        Ok(())
    }

    /// Grid of the points s..=e shifted so the window starts at time 0.
    pub fn window(&self, s: usize, e: usize) -> Result<Self> {
        self.check_pair(s, e)?;
        if s == e {
            return Err(Error::EmptyGrid);
        }
        let t0 = self.points[s];
        TimeGrid::new(self.points[s..=e].iter().map(|t| t - t0).collect())
    }

    /// Every `stride`-th point, always keeping the endpoint.
    pub fn strided(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        let last = self.points.len() - 1;
        let mut points: Vec<f64> = self.points.iter().copied().step_by(stride).collect();
        if *points.last().unwrap() != self.points[last] {
            points.push(self.points[last]);
        }
        TimeGrid::new(points)
    }

    /// Pointwise agreement within `tol` absolute. Used to guard binary
    /// operations between trajectories produced by different constructions.
    pub fn approx_eq(&self, other: &TimeGrid, tol: f64) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn check_aligned(&self, other: &TimeGrid) -> Result<()> {
        let tol = 1e-9 * self.span().max(other.span());
        if self.approx_eq(other, tol) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_len: self.points.len(),
                left_span: self.span(),
                right_len: other.points.len(),
                right_span: other.span(),
            })
        }
    }

    /// Largest m >= 1 with t(start + m) - t(start) <= h, clamped to the grid end.
    pub fn steps_within(&self, start: usize, h: f64) -> usize {
        let last = self.points.len() - 1;
        debug_assert!(start < last);
        let mut m = 1;
        while start + m < last && self.points[start + m + 1] - self.points[start] <= h {
            m += 1;
        }
        m
    }
}
