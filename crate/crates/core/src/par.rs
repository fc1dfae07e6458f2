//! Deterministic chunked map-reduce.
//!
//! Work is split into chunks of [`CHUNK`] consecutive sample indices. Each
//! chunk is processed independently (on rayon when the `parallel` feature is
//! on) and the per-chunk partials are combined by a pairwise tree whose shape
//! depends only on the number of chunks. Results therefore never depend on
//! the scheduler.

use std::ops::Range;

/// Samples per work item.
pub const CHUNK: usize = 2048;

/// Applies `f` to every chunk of `0..len` and returns the results in chunk order.
pub fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let range = move |c: usize| c * CHUNK..((c + 1) * CHUNK).min(len);

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(|c| f(range(c))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(|c| f(range(c))).collect()
    }
}

/// Maps `f` over a slice, preserving order.
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Pairwise reduction in a fixed tree order. Returns `None` for an empty input.
pub fn tree_reduce<T, F>(mut items: Vec<T>, combine: F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Running sum of `exp(l)` over log-weights `l`, kept relative to a shift.
///
/// `total` and `total_sq` hold `Σ exp(l - shift)` and `Σ exp(2(l - shift))`;
/// `hit` holds the same sum restricted to flagged terms. All three sums use
/// the same shift, so a flagged subset can never exceed the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    pub shift: f64,
    pub total: f64,
    pub total_sq: f64,
    pub hit: f64,
    pub count: usize,
    pub hit_count: usize,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::empty()
    }
}

impl LogSumExp {
    pub const fn empty() -> Self {
        Self { shift: f64::NEG_INFINITY, total: 0.0, total_sq: 0.0, hit: 0.0, count: 0, hit_count: 0 }
    }

    /// Builds the accumulator for a batch with an optional hit mask.
    pub fn from_batch<'a>(log_weights: &[f64], hits: impl IntoIterator<Item = &'a bool>) -> Self {
        let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Self { count: log_weights.len(), ..Self::empty() };
        }
        let mut acc = Self { shift, count: log_weights.len(), ..Self::empty() };
        let mut hits = hits.into_iter();
        for &l in log_weights {
            let w = (l - shift).exp();
            acc.total += w;
            acc.total_sq += w * w;
            if hits.next().copied().unwrap_or(false) {
                acc.hit += w;
                acc.hit_count += 1;
            }
        }
        acc
    }

    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        Self::from_batch(log_weights, std::iter::empty())
    }

    pub fn merge(self, other: Self) -> Self {
        let shift = self.shift.max(other.shift);
        if shift == f64::NEG_INFINITY {
            return Self { count: self.count + other.count, ..Self::empty() };
        }
        let a = (self.shift - shift).exp();
        let b = (other.shift - shift).exp();
        Self {
            shift,
            total: self.total * a + other.total * b,
            total_sq: self.total_sq * a * a + other.total_sq * b * b,
            hit: self.hit * a + other.hit * b,
            count: self.count + other.count,
            hit_count: self.hit_count + other.hit_count,
        }
    }

    /// `log Σ exp(l)`.
    pub fn log_sum(&self) -> f64 {
        self.shift + self.total.ln()
    }

    /// `log` of the mean weight.
    pub fn log_mean(&self) -> f64 {
        self.log_sum() - (self.count as f64).ln()
    }

    /// Fraction of the total weight carried by flagged terms.
    pub fn hit_fraction(&self) -> f64 {
        if self.total > 0.0 {
            self.hit / self.total
        } else {
            0.0
        }
    }

    /// Effective sample size `(Σw)² / Σw²`.
    pub fn ess(&self) -> f64 {
        if self.total_sq > 0.0 {
            self.total * self.total / self.total_sq
        } else {
            0.0
        }
    }
}

/// Normalizes log-weights into probabilities with a max shift.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - shift).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
