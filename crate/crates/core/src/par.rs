//! Data-parallel reduction primitives with sequential fallbacks.
//!
//! Every reduction here is a max (or an ordered collect), never a float sum,
//! so the parallel and sequential variants return bit-identical results:
//! f64 max is associative and commutative for the finite values produced by
//! the callers. The `parallel` feature (on by default) routes the plain
//! entry points through rayon; the `_seq` variants are always available and
//! are what the benchmarks compare against.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// max over ordered pairs 0 <= i < j <= n of f(i, j). Returns 0 when n == 0.
pub fn pair_sup_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64,
{
    let mut m = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..=n {
            m = m.max(f(i, j));
        }
    }
    m
}

#[cfg(feature = "parallel")]
pub fn pair_sup_par<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0f64;
            for j in (i + 1)..=n {
                m = m.max(f(i, j));
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

pub fn pair_sup<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        pair_sup_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        pair_sup_seq(n, f)
    }
}

/// Componentwise max of f(i, j) over ordered pairs; one pass for callers that
/// extract two ratios from a shared intermediate.
pub fn pair_sup2_seq<F>(n: usize, f: F) -> (f64, f64)
where
    F: Fn(usize, usize) -> (f64, f64),
{
    let mut a = 0.0f64;
    let mut b = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..=n {
            let (x, y) = f(i, j);
            a = a.max(x);
            b = b.max(y);
        }
    }
    (a, b)
}

#[cfg(feature = "parallel")]
pub fn pair_sup2_par<F>(n: usize, f: F) -> (f64, f64)
where
    F: Fn(usize, usize) -> (f64, f64) + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut a = 0.0f64;
            let mut b = 0.0f64;
            for j in (i + 1)..=n {
                let (x, y) = f(i, j);
                a = a.max(x);
                b = b.max(y);
            }
            (a, b)
        })
        .reduce(|| (0.0, 0.0), |(a, b), (x, y)| (a.max(x), b.max(y)))
}

pub fn pair_sup2<F>(n: usize, f: F) -> (f64, f64)
where
    F: Fn(usize, usize) -> (f64, f64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        pair_sup2_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        pair_sup2_seq(n, f)
    }
}

/// max over i in 0..n of f(i); f typically runs an inner loop itself.
pub fn index_sup_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).fold(0.0f64, |m, i| m.max(f(i)))
}

#[cfg(feature = "parallel")]
pub fn index_sup_par<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max)
}

pub fn index_sup<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        index_sup_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        index_sup_seq(n, f)
    }
}

/// Ordered map over 0..n. Output order is by index regardless of scheduling,
/// so Monte-Carlo sweeps are reproducible under both execution modes.
pub fn batch_map_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn batch_map_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

pub fn batch_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        batch_map_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        batch_map_seq(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_sup_matches_sequential() {
        let f = |i: usize, j: usize| (i * 31 + j) as f64 * 0.001;
        assert_eq!(pair_sup(100, f), pair_sup_seq(100, f));
    }

    #[test]
    fn pair_sup_empty_is_zero() {
        assert_eq!(pair_sup(0, |_, _| 1.0), 0.0);
    }

    #[test]
    fn pair_sup2_tracks_both_components() {
        let f = |i: usize, j: usize| (i as f64, (j as f64) * 0.5);
        let (a, b) = pair_sup2(10, f);
        assert_eq!(a, 9.0);
        assert_eq!(b, 5.0);
        assert_eq!((a, b), pair_sup2_seq(10, f));
    }

    #[test]
    fn batch_map_preserves_order() {
        let v = batch_map(64, |i| i * i);
        let w = batch_map_seq(64, |i| i * i);
        assert_eq!(v, w);
    }
}
