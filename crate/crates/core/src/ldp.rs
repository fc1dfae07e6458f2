//! Large deviations of moment observables.
//!
//! `ν_n(K)` is the share of the tilted weight `exp(S_nγ + log‖∧ D fⁿ‖)`
//! carried by samples with `δ_n(x)(g) ∈ K`. Its exponential decay rate is
//! compared against the rate function
//! `J_g(α) = sup_β (β·α − Q_γ(β·g))`, computed as a discrete Legendre
//! transform over a β grid from pressure estimates on shared samples.

use crate::empirical::OrbitWalker;
use crate::manifold::{draw_point, point_stream, TestFunctionBasis};
use crate::par::{self, LogSumExp};
use crate::pressure::{accumulate_weights, fit_estimate, PressureParams};
use crate::stats::linear_fit;
use crate::systems::{check_compatible, Potential, SmoothSystem};
use crate::{Error, Result};

/// Samples needed at a given `n` before `log ν_n` enters the slope fit.
pub const DEFAULT_MIN_COUNT: usize = 30;

/// Closed interval `[lo, hi]`, endpoints possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidParameter(format!("interval [{lo}, {hi}] is not well ordered")));
        }
        Ok(Self { lo, hi })
    }

    pub const fn full() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    /// The interval containing nothing.
    pub const fn empty() -> Self {
        Self { lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }
}

/// `{m : m(g) ∈ K}` with `g` a vector of basis functions and `K` a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    /// 1-based basis indices.
    pub observables: Vec<usize>,
    pub region: Vec<Interval>,
}

impl ConstraintSet {
    pub fn new(observables: Vec<usize>, region: Vec<Interval>) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::InvalidParameter("constraint needs at least one observable".into()));
        }
        if observables.contains(&0) {
            return Err(Error::InvalidParameter("basis indices start at 1".into()));
        }
        if observables.len() != region.len() {
            return Err(Error::LengthMismatch { left: observables.len(), right: region.len() });
        }
        Ok(Self { observables, region })
    }

    pub fn dim(&self) -> usize {
        self.observables.len()
    }

    pub fn contains(&self, alpha: impl IntoIterator<Item = f64>) -> bool {
        self.region.iter().zip(alpha).all(|(iv, a)| iv.contains(a))
    }

    fn basis(&self, dim: usize) -> Result<TestFunctionBasis> {
        TestFunctionBasis::new(dim, *self.observables.iter().max().expect("non-empty"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpEstimate {
    pub n_values: Vec<usize>,
    pub nu: Vec<f64>,
    /// `log ν_n / n`; `-inf` where no sample satisfies the constraint.
    pub log_nu_over_n: Vec<f64>,
    pub satisfying: Vec<usize>,
    /// Whether each `n` entered the slope regression.
    pub used: Vec<bool>,
    /// Slope of `log ν_n` against `n`; `None` when fewer than two `n` qualify.
    pub slope: Option<f64>,
    pub min_count: usize,
}

impl LdpEstimate {
    /// Degenerate path: `ν_n` vanishes or rests on too few samples to fit a rate.
    pub fn decay_too_fast(&self) -> bool {
        self.slope.is_none()
    }
}

/// `ν_n(K)` over the orbit lengths in `params`.
pub fn estimate_nu_n(
    system: &SmoothSystem,
    potential: &Potential,
    cs: &ConstraintSet,
    params: &PressureParams,
    min_count: usize,
) -> Result<LdpEstimate> {
    check_compatible(system, potential)?;
    let basis = cs.basis(system.dim())?;
    let acc = accumulate_weights(system, potential, params, Some((&basis, &cs.observables)), |w: &OrbitWalker<'_>, _| {
        cs.contains(w.observable_means())
    });
    let nu: Vec<f64> = acc.iter().map(LogSumExp::hit_fraction).collect();
    let satisfying: Vec<usize> = acc.iter().map(|a| a.hit_count).collect();
    let log_nu_over_n = nu.iter().zip(&params.n_values).map(|(v, &n)| v.ln() / n as f64).collect();
    let used: Vec<bool> = nu.iter().zip(&satisfying).map(|(&v, &c)| v > 0.0 && c >= min_count).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = params
        .n_values
        .iter()
        .zip(&nu)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((&n, v), _)| (n as f64, v.ln()))
        .unzip();
    let slope = linear_fit(&xs, &ys).map(|f| f.slope);
    Ok(LdpEstimate { n_values: params.n_values.clone(), nu, log_nu_over_n, satisfying, used, slope, min_count })
}

/// Per-sample log-weights and observable Birkhoff sums, kept so that any tilt
/// `γ + β·g` can be re-weighted without re-running orbits.
struct TiltCache {
    params: PressureParams,
    dim: usize,
    // (chunk length, log-weights [j*len + i], sums [(j*len + i)*dim + c])
    chunks: Vec<(usize, Vec<f64>, Vec<f64>)>,
}

impl TiltCache {
    fn build(system: &SmoothSystem, potential: &Potential, observables: &[usize], params: &PressureParams) -> Result<Self> {
        let basis = TestFunctionBasis::new(system.dim(), *observables.iter().max().expect("non-empty"))?;
        let ns = &params.n_values;
        let dim = observables.len();
        let d = system.dim();
        let chunks = par::map_chunks(params.samples, |range| {
            let len = range.len();
            let mut logw = vec![0.0; ns.len() * len];
            let mut sums = vec![0.0; ns.len() * len * dim];
            let mut rng = point_stream(params.seed, d, range.start);
            for i in 0..len {
                let mut walker = OrbitWalker::new(system, potential, draw_point(&mut rng, d)).with_observables(&basis, observables);
                let mut next = 0;
                while next < ns.len() {
                    walker.step();
                    if walker.steps() == ns[next] {
                        let slot = next * len + i;
                        logw[slot] = walker.log_weight();
                        sums[slot * dim..(slot + 1) * dim].copy_from_slice(walker.observable_sums());
                        next += 1;
                    }
                }
            }
            (len, logw, sums)
        });
        Ok(Self { params: params.clone(), dim, chunks })
    }

    /// Pressure slope of `γ + β·g` and the smallest ESS across `n`.
    fn pressure(&self, beta: &[f64]) -> (f64, f64) {
        let width = self.params.n_values.len();
        let partials: Vec<Vec<LogSumExp>> = self
            .chunks
            .iter()
            .map(|(len, logw, sums)| {
                let mut buf = vec![0.0; *len];
                (0..width)
                    .map(|j| {
                        for (i, b) in buf.iter_mut().enumerate() {
                            let slot = j * len + i;
                            let tilt: f64 = beta.iter().zip(&sums[slot * self.dim..(slot + 1) * self.dim]).map(|(b, s)| b * s).sum();
                            *b = logw[slot] + tilt;
                        }
                        LogSumExp::from_log_weights(&buf)
                    })
                    .collect()
            })
            .collect();
        let acc = crate::pressure::transpose_reduce(partials, width);
        let est = fit_estimate(
            &self.params,
            acc.iter().map(LogSumExp::log_mean).collect(),
            acc.iter().map(LogSumExp::ess).collect(),
        );
        (est.pressure(), est.min_ess())
    }
}

/// Discrete Legendre transform of `β ↦ Q̂_γ(β·g)` on a product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionTable {
    pub observables: Vec<usize>,
    pub alpha_axes: Vec<Vec<f64>>,
    pub beta_axes: Vec<Vec<f64>>,
    /// Grid points, row-major over the axes (last axis fastest).
    pub alphas: Vec<Vec<f64>>,
    pub betas: Vec<Vec<f64>>,
    /// `Q̂_γ(β·g)` at each β grid point.
    pub q: Vec<f64>,
    /// Minimum ESS over `n` for each β.
    pub ess: Vec<f64>,
    /// `max_β (β·α − Q̂)` before capping.
    pub raw: Vec<f64>,
    pub beta_argmax: Vec<Vec<f64>>,
    /// Entries whose supremum is not resolved by the β box (argmax on its
    /// boundary) or exceeds `cap`; their true value may be infinite.
    pub capped: Vec<bool>,
    pub cap: f64,
}

fn product_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

impl RateFunctionTable {
    pub fn dim(&self) -> usize {
        self.observables.len()
    }

    /// `J_g(α)` at grid point `i`, `+inf` for capped entries.
    pub fn value(&self, i: usize) -> f64 {
        if self.capped[i] {
            f64::INFINITY
        } else {
            self.raw[i]
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.alphas.len()).map(|i| self.value(i)).collect()
    }

    /// Index of the minimizing grid point.
    ///
    /// The discrete transform is flat near its minimum (every α whose
    /// supporting β is 0 gets exactly 0), so ties within `1e-12` resolve to
    /// the tied point nearest their centroid.
    pub fn argmin(&self) -> usize {
        let best = self.raw.iter().copied().fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = (0..self.raw.len()).filter(|&i| self.raw[i] <= best + 1e-12).collect();
        let d = self.dim();
        let centroid: Vec<f64> = (0..d)
            .map(|c| tied.iter().map(|&i| self.alphas[i][c]).sum::<f64>() / tied.len() as f64)
            .collect();
        let dist = |i: usize| -> f64 { self.alphas[i].iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum() };
        *tied.iter().min_by(|&&a, &&b| dist(a).total_cmp(&dist(b))).expect("non-empty table")
    }

    /// Smallest second difference of the raw values along any grid line.
    pub fn min_second_difference(&self) -> f64 {
        let shape: Vec<usize> = self.alpha_axes.iter().map(Vec::len).collect();
        let strides: Vec<usize> = (0..shape.len()).map(|a| shape[a + 1..].iter().product()).collect();
        let mut worst = f64::INFINITY;
        for i in 0..self.raw.len() {
            for (a, &stride) in strides.iter().enumerate() {
                let pos = (i / stride) % shape[a];
                if pos >= 1 && pos + 1 < shape[a] {
                    worst = worst.min(self.raw[i - stride] - 2.0 * self.raw[i] + self.raw[i + stride]);
                }
            }
        }
        worst
    }

    /// `J_g(K) = min` over grid points inside the region.
    pub fn region_min(&self, cs: &ConstraintSet) -> Result<f64> {
        if cs.observables != self.observables {
            return Err(Error::InvalidParameter("constraint observables differ from the table's".into()));
        }
        self.alphas
            .iter()
            .enumerate()
            .filter(|(_, a)| cs.contains(a.iter().copied()))
            .map(|(i, _)| self.value(i))
            .min_by(f64::total_cmp)
            .ok_or(Error::RegionMissesGrid)
    }
}

/// `J_g(α)` on the α grid from pressure estimates of `γ + β·g` on shared samples.
///
/// Each β axis must be sorted and contain 0, so that `Q̂(0) = 0` exactly.
pub fn rate_function(
    system: &SmoothSystem,
    potential: &Potential,
    observables: &[usize],
    alpha_axes: Vec<Vec<f64>>,
    beta_axes: Vec<Vec<f64>>,
    params: &PressureParams,
    cap: f64,
) -> Result<RateFunctionTable> {
    check_compatible(system, potential)?;
    let d = observables.len();
    if d == 0 || alpha_axes.len() != d || beta_axes.len() != d {
        return Err(Error::InvalidParameter(format!(
            "need one α axis and one β axis per observable ({d} observables)"
        )));
    }
    for axis in alpha_axes.iter().chain(&beta_axes) {
        if axis.is_empty() || axis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("grid axes must be non-empty and strictly increasing".into()));
        }
    }
    if beta_axes.iter().any(|axis| !axis.contains(&0.0)) {
        return Err(Error::InvalidParameter("every β axis must contain 0".into()));
    }
    if params.n_values.len() < 3 {
        return Err(Error::InvalidParameter("pressure regression needs at least three orbit lengths".into()));
    }

    let cache = TiltCache::build(system, potential, observables, params)?;
    let betas = product_grid(&beta_axes);
    let (p0, _) = cache.pressure(&vec![0.0; d]);
    let evaluated = par::map_items(&betas, |b| cache.pressure(b));
    let q: Vec<f64> = evaluated.iter().map(|(p, _)| p - p0).collect();
    let ess: Vec<f64> = evaluated.iter().map(|(_, e)| *e).collect();

    let alphas = product_grid(&alpha_axes);
    let mut raw = Vec::with_capacity(alphas.len());
    let mut beta_argmax = Vec::with_capacity(alphas.len());
    let mut capped = Vec::with_capacity(alphas.len());
    for alpha in &alphas {
        let (best, arg) = betas
            .iter()
            .zip(&q)
            .map(|(b, qb)| (b.iter().zip(alpha).map(|(x, y)| x * y).sum::<f64>() - qb, b))
            .fold((f64::NEG_INFINITY, &betas[0]), |acc, cur| if cur.0 > acc.0 { cur } else { acc });
        let on_boundary = arg
            .iter()
            .zip(&beta_axes)
            .any(|(b, axis)| b == axis.first().unwrap() || b == axis.last().unwrap());
        raw.push(best);
        beta_argmax.push(arg.clone());
        capped.push(on_boundary || best >= cap);
    }
    Ok(RateFunctionTable {
        observables: observables.to_vec(),
        alpha_axes,
        beta_axes,
        alphas,
        betas,
        q,
        ess,
        raw,
        beta_argmax,
        capped,
        cap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionStatus {
    Measured,
    /// `ν_n` vanished or rested on too few samples; no decay rate reported.
    DecayTooFast,
}

/// Empirical decay rate of `ν_n(K)` against `J_g(K)` from the table.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub status: ContractionStatus,
    /// `−slope` of `log ν_n`.
    pub decay_rate: Option<f64>,
    pub rate: f64,
    pub abs_gap: Option<f64>,
    /// `abs_gap / J_g(K)`, when `J_g(K) > 0`.
    pub rel_gap: Option<f64>,
}

pub fn contraction_report(ldp: &LdpEstimate, table: &RateFunctionTable, cs: &ConstraintSet) -> Result<ContractionReport> {
    let rate = table.region_min(cs)?;
    let Some(slope) = ldp.slope else {
        return Ok(ContractionReport { status: ContractionStatus::DecayTooFast, decay_rate: None, rate, abs_gap: None, rel_gap: None });
    };
    let decay = -slope;
    let abs_gap = (decay - rate).abs();
    Ok(ContractionReport {
        status: ContractionStatus::Measured,
        decay_rate: Some(decay),
        rate,
        abs_gap: Some(abs_gap),
        rel_gap: (rate > 0.0 && rate.is_finite()).then(|| abs_gap / rate),
    })
}
