//! Volume-growth pressure estimator.
//!
//! `P(γ) = lim (1/n) log ∫ exp(S_nγ(x)) ‖∧(D_x fⁿ)‖ dx`, with the integral
//! estimated by plain Monte Carlo over uniform points. Each `log Z_n` is a
//! max-shifted log-mean-exp, and the headline value is the slope of
//! `log Z_n` against `n`, which cancels the `O(1)` offset carried by
//! `log Z_n / n`.

use crate::empirical::OrbitWalker;
use crate::manifold::{draw_point, point_stream, TestFunctionBasis};
use crate::par::{self, LogSumExp};
use crate::stats::linear_fit;
use crate::systems::{check_compatible, Potential, SmoothSystem};
use crate::{Error, Result, ESS_WARN_FRACTION};

/// Sampling parameters shared by every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureParams {
    /// Orbit lengths, strictly increasing.
    pub n_values: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
}

impl PressureParams {
    pub fn new(n_values: Vec<usize>, samples: usize, seed: u64) -> Result<Self> {
        if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "orbit lengths must be positive and strictly increasing, got {n_values:?}"
            )));
        }
        if samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        Ok(Self { n_values, samples, seed })
    }

    /// Regression window `n_max/2 ..= n_max`.
    pub fn with_n_max(n_max: usize, samples: usize, seed: u64) -> Result<Self> {
        Self::new(((n_max / 2).max(1)..=n_max).collect(), samples, seed)
    }

    pub fn n_max(&self) -> usize {
        *self.n_values.last().expect("validated non-empty")
    }
}

/// Result of a pressure run.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    pub n_values: Vec<usize>,
    pub log_zn: Vec<f64>,
    /// `log Z_n / n`.
    pub pn: Vec<f64>,
    /// Slope of `log Z_n` against `n`: the headline estimate.
    pub slope: f64,
    pub intercept: f64,
    /// Effective sample size of the weights at each `n`.
    pub ess: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl PressureEstimate {
    pub fn pressure(&self) -> f64 {
        self.slope
    }

    pub fn p_nmax(&self) -> f64 {
        *self.pn.last().expect("non-empty")
    }

    /// `|slope − P_{n_max}|`, a convergence indicator.
    pub fn convergence_gap(&self) -> f64 {
        (self.slope - self.p_nmax()).abs()
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Warning text when the weights degenerate.
    pub fn ess_warning(&self) -> Option<String> {
        let min = self.min_ess();
        (min < ESS_WARN_FRACTION * self.samples as f64).then(|| {
            format!(
                "effective sample size {min:.1} is below {ESS_WARN_FRACTION} x {} samples",
                self.samples
            )
        })
    }
}

/// Per-`n` weight accumulators, one entry per orbit length in `n_values`.
///
/// When `observables` is given the walker also tracks those test functions,
/// and `mark(walker, n_index)` flags samples whose weight goes into the `hit`
/// sum; pass `|_, _| false` for plain pressure runs.
pub(crate) fn accumulate_weights<M>(
    system: &SmoothSystem,
    potential: &Potential,
    params: &PressureParams,
    observables: Option<(&TestFunctionBasis, &[usize])>,
    mark: M,
) -> Vec<LogSumExp>
where
    M: Fn(&OrbitWalker<'_>, usize) -> bool + Sync + Send,
{
    let d = system.dim();
    let ns = &params.n_values;
    let partials = par::map_chunks(params.samples, |range| {
        let len = range.len();
        let mut logw = vec![0.0; ns.len() * len];
        let mut hits = vec![false; ns.len() * len];
        let mut rng = point_stream(params.seed, d, range.start);
        for i in 0..len {
            let x = draw_point(&mut rng, d);
            let mut walker = OrbitWalker::new(system, potential, x);
            if let Some((basis, obs)) = observables {
                walker = walker.with_observables(basis, obs);
            }
            let mut next = 0;
            while next < ns.len() {
                walker.step();
                if walker.steps() == ns[next] {
                    logw[next * len + i] = walker.log_weight();
                    hits[next * len + i] = mark(&walker, next);
                    next += 1;
                }
            }
        }
        (0..ns.len())
            .map(|j| {
                let s = j * len..(j + 1) * len;
                LogSumExp::from_batch(&logw[s.clone()], &hits[s])
            })
            .collect::<Vec<_>>()
    });
    transpose_reduce(partials, ns.len())
}

/// Reduces `chunks × n` partials into one accumulator per `n`.
pub(crate) fn transpose_reduce(partials: Vec<Vec<LogSumExp>>, width: usize) -> Vec<LogSumExp> {
    (0..width)
        .map(|j| {
            let column: Vec<LogSumExp> = partials.iter().map(|p| p[j]).collect();
            par::tree_reduce(column, LogSumExp::merge).unwrap_or_default()
        })
        .collect()
}

/// `log Z_n`: the log of the sample mean of `exp(S_nγ + log‖∧ D fⁿ‖)`.
pub fn log_zn(system: &SmoothSystem, potential: &Potential, n: usize, samples: usize, seed: u64) -> Result<f64> {
    check_compatible(system, potential)?;
    let params = PressureParams::new(vec![n], samples, seed)?;
    Ok(accumulate_weights(system, potential, &params, None, |_, _| false)[0].log_mean())
}

/// Assembles a [`PressureEstimate`] from `log Z_n` values.
pub(crate) fn fit_estimate(params: &PressureParams, log_zn: Vec<f64>, ess: Vec<f64>) -> PressureEstimate {
    let xs: Vec<f64> = params.n_values.iter().map(|&n| n as f64).collect();
    let fit = linear_fit(&xs, &log_zn).expect("at least three orbit lengths");
    PressureEstimate {
        pn: log_zn.iter().zip(&xs).map(|(z, n)| z / n).collect(),
        n_values: params.n_values.clone(),
        log_zn,
        slope: fit.slope,
        intercept: fit.intercept,
        ess,
        samples: params.samples,
        seed: params.seed,
    }
}

/// Pressure estimate over the orbit lengths in `params` (at least three).
pub fn estimate_pressure(system: &SmoothSystem, potential: &Potential, params: &PressureParams) -> Result<PressureEstimate> {
    check_compatible(system, potential)?;
    if params.n_values.len() < 3 {
        return Err(Error::InvalidParameter("pressure regression needs at least three orbit lengths".into()));
    }
    let acc = accumulate_weights(system, potential, params, None, |_, _| false);
    Ok(fit_estimate(
        params,
        acc.iter().map(LogSumExp::log_mean).collect(),
        acc.iter().map(LogSumExp::ess).collect(),
    ))
}

/// `Q_γ(ω) = P(γ + ω) − P(γ)` with both estimates on the same samples.
pub fn q_functional(system: &SmoothSystem, gamma: &Potential, omega: &Potential, params: &PressureParams) -> Result<f64> {
    let tilted = estimate_pressure(system, &(gamma.clone() + omega.clone()), params)?;
    let base = estimate_pressure(system, gamma, params)?;
    Ok(tilted.pressure() - base.pressure())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{OracleConfig, TransferOperatorModel};
    use crate::systems::{cat_map, doubling, make_expanding_circle};
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn golden_log() -> f64 {
        ((3.0 + 5f64.sqrt()) / 2.0).ln()
    }

    fn cos_pot(a: f64) -> Potential {
        Potential::trig(1, vec![(1, a)]).unwrap()
    }

    #[test]
    fn doubling_log_zn_is_exact() {
        for n in [1, 5, 16] {
            let z = log_zn(&doubling(), &Potential::zero(), n, 1000, 3).unwrap();
            assert!((z - n as f64 * LN2).abs() < 1e-12);
            let zc = log_zn(&doubling(), &Potential::Constant(0.4), n, 1000, 3).unwrap();
            assert!((zc - n as f64 * (LN2 + 0.4)).abs() < 1e-12);
        }
    }

    #[test]
    fn cat_log_zn_is_exact() {
        let z = log_zn(&cat_map(), &Potential::zero(), 12, 500, 1).unwrap();
        assert!((z - 12.0 * golden_log()).abs() < 1e-10);
    }

    #[test]
    fn doubling_pressure_is_log_two() {
        let params = PressureParams::with_n_max(16, 2000, 7).unwrap();
        let est = estimate_pressure(&doubling(), &Potential::zero(), &params).unwrap();
        assert!((est.pressure() - LN2).abs() < 1e-12);
        assert!(est.pn.iter().all(|p| (p - LN2).abs() < 1e-12));
        assert!(est.ess_warning().is_none());
    }

    #[test]
    fn geometric_potential_has_zero_pressure() {
        let params = PressureParams::with_n_max(16, 20_000, 7).unwrap();
        let d = doubling();
        let est = estimate_pressure(&d, &Potential::geometric(1.0, &d).unwrap(), &params).unwrap();
        assert!(est.pressure().abs() < 0.02);
    }

    #[test]
    fn perturbed_map_matches_oracle() {
        let sys = make_expanding_circle(2, 0.05).unwrap();
        let params = PressureParams::with_n_max(16, 50_000, 11).unwrap();
        let est = estimate_pressure(&sys, &Potential::zero(), &params).unwrap();
        let oracle = TransferOperatorModel::build(&sys, &Potential::zero(), &OracleConfig::default()).unwrap();
        assert!((est.pressure() - oracle.pressure()).abs() < 0.03);
    }

    #[test]
    fn q_functional_examples() {
        let d = doubling();
        let params = PressureParams::with_n_max(16, 20_000, 5).unwrap();
        let g = cos_pot(0.3);
        assert_eq!(q_functional(&d, &g, &Potential::zero(), &params).unwrap(), 0.0);
        let q = q_functional(&d, &g, &Potential::Constant(-0.8), &params).unwrap();
        assert!((q + 0.8).abs() < 1e-12);
        let q = q_functional(&d, &Potential::zero(), &cos_pot(0.5), &params).unwrap();
        let oracle = TransferOperatorModel::build(&d, &cos_pot(0.5), &OracleConfig::default()).unwrap();
        assert!((q - (oracle.pressure() - LN2)).abs() < 0.03, "q {q} oracle {}", oracle.pressure());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PressureParams::new(vec![3, 2, 4], 10, 0).is_err());
        assert!(PressureParams::new(vec![1, 2], 0, 0).is_err());
        let p = PressureParams::new(vec![4, 8], 10, 0).unwrap();
        assert!(estimate_pressure(&doubling(), &Potential::zero(), &p).is_err());
        let trig2 = Potential::trig(2, vec![(1, 1.0)]).unwrap();
        assert!(matches!(log_zn(&doubling(), &trig2, 3, 10, 0), Err(Error::InvalidPotential(_))));
    }

    #[test]
    fn convexity_in_tilt_parameter() {
        let d = make_expanding_circle(2, 0.05).unwrap();
        let params = PressureParams::with_n_max(12, 10_000, 3).unwrap();
        let betas: Vec<f64> = (-6..=6).map(|i| i as f64 * 0.5).collect();
        let q: Vec<f64> = betas
            .iter()
            .map(|&b| q_functional(&d, &Potential::zero(), &cos_pot(b), &params).unwrap())
            .collect();
        for w in q.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -0.02);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn constant_shift_is_exact(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -2.0f64..2.0, seed in 0u64..1000) {
            let sys = make_expanding_circle(2, 0.05).unwrap();
            let params = PressureParams::with_n_max(10, 3000, seed).unwrap();
            let g = Potential::trig(1, vec![(1, a), (2, b)]).unwrap();
            let base = estimate_pressure(&sys, &g, &params).unwrap();
            let shifted = estimate_pressure(&sys, &(g.clone() + Potential::Constant(c)), &params).unwrap();
            prop_assert!((shifted.pressure() - base.pressure() - c).abs() < 1e-12);
        }

        #[test]
        fn lipschitz_and_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0, delta in 0.0f64..0.5, seed in 0u64..1000) {
            let sys = make_expanding_circle(2, 0.05).unwrap();
            let params = PressureParams::with_n_max(12, 5000, seed).unwrap();
            let g1 = Potential::trig(1, vec![(1, a)]).unwrap();
            let g2 = Potential::trig(1, vec![(1, b)]).unwrap();
            let p1 = estimate_pressure(&sys, &g1, &params).unwrap().pressure();
            let p2 = estimate_pressure(&sys, &g2, &params).unwrap().pressure();
            prop_assert!((p1 - p2).abs() <= (a - b).abs() + 0.02);
            // g1 + δ(1 + cos)/2 >= g1 pointwise
            let bump = Potential::Constant(delta / 2.0) + cos_pot(delta / 2.0);
            let p3 = estimate_pressure(&sys, &(g1 + bump), &params).unwrap().pressure();
            prop_assert!(p1 <= p3 + 0.02);
        }
    }
}
