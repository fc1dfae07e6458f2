//! Weighted empirical measures `μ_n` approximating equilibrium states.
//!
//! Sample `x_i` carries log-weight `S_nγ(x_i) + log‖∧(D_{x_i} fⁿ)‖`; `μ_n` is
//! the weight-averaged empirical measure `Σ w̄_i δ_n(x_i)`. Each sample keeps
//! its orbit of length `n + 1` so that `μ_n(g∘f)` is available without
//! re-running the dynamics.

use crate::empirical::{orbit_moments, OrbitWalker};
use crate::manifold::{draw_point, histogram, point_stream, weak_distance, HistogramMeasure, Point, TestFunctionBasis};
use crate::par::{self, LogSumExp};
use crate::systems::{check_compatible, Potential, SmoothSystem};
use crate::{Error, Result, ESS_WARN_FRACTION};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    pub n: usize,
    pub seed: Option<u64>,
    /// Orbit `x_i, f x_i, …, fⁿ x_i` of sample `i` at `[i*(n+1) .. (i+1)*(n+1)]`.
    orbits: Vec<Point>,
    pub log_weights: Vec<f64>,
}

fn trace(system: &SmoothSystem, potential: &Potential, x: Point, n: usize, out: &mut Vec<Point>) -> f64 {
    let mut walker = OrbitWalker::new(system, potential, x);
    out.push(x);
    for _ in 0..n {
        walker.step();
        out.push(walker.point());
    }
    walker.log_weight()
}

/// Monte Carlo discretization of `μ_n` over `samples` uniform points.
pub fn build_ensemble(system: &SmoothSystem, potential: &Potential, n: usize, samples: usize, seed: u64) -> Result<WeightedEnsemble> {
    check_compatible(system, potential)?;
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("ensemble needs n >= 1 and at least one sample".into()));
    }
    let d = system.dim();
    let parts = par::map_chunks(samples, |range| {
        let mut rng = point_stream(seed, d, range.start);
        let mut orbits = Vec::with_capacity(range.len() * (n + 1));
        let logw: Vec<f64> = range.map(|_| trace(system, potential, draw_point(&mut rng, d), n, &mut orbits)).collect();
        (orbits, logw)
    });
    let mut ens = WeightedEnsemble { n, seed: Some(seed), orbits: Vec::with_capacity(samples * (n + 1)), log_weights: Vec::with_capacity(samples) };
    for (o, w) in parts {
        ens.orbits.extend(o);
        ens.log_weights.extend(w);
    }
    Ok(ens)
}

/// Ensemble over explicit base points.
pub fn build_ensemble_at(system: &SmoothSystem, potential: &Potential, n: usize, points: &[Point]) -> Result<WeightedEnsemble> {
    check_compatible(system, potential)?;
    if n == 0 || points.is_empty() {
        return Err(Error::InvalidParameter("ensemble needs n >= 1 and at least one point".into()));
    }
    let mut orbits = Vec::with_capacity(points.len() * (n + 1));
    let log_weights = points.iter().map(|&x| trace(system, potential, x, n, &mut orbits)).collect();
    Ok(WeightedEnsemble { n, seed: None, orbits, log_weights })
}

impl WeightedEnsemble {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// The stored orbit of sample `i`, `n + 1` points.
    pub fn orbit(&self, i: usize) -> &[Point] {
        &self.orbits[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    /// `exp(ℓ_i − max ℓ)`.
    fn shifted_weights(&self) -> Vec<f64> {
        let shift = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_weights.iter().map(|l| (l - shift).exp()).collect()
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        par::normalize_log_weights(&self.log_weights)
    }

    pub fn ess(&self) -> f64 {
        LogSumExp::from_log_weights(&self.log_weights).ess()
    }

    pub fn ess_warning(&self) -> Option<String> {
        let ess = self.ess();
        (ess < ESS_WARN_FRACTION * self.len() as f64)
            .then(|| format!("effective sample size {ess:.1} is below {ESS_WARN_FRACTION} x {} samples", self.len()))
    }

    /// `δ_n(x_i)(g_k)` for every sample, row-major `[i][k]`.
    pub fn sample_moments(&self, basis: &TestFunctionBasis) -> Vec<Vec<f64>> {
        self.per_sample(|orbit| orbit_moments(&orbit[..self.n], basis))
    }

    fn per_sample<T: Send>(&self, f: impl Fn(&[Point]) -> T + Sync + Send) -> Vec<T> {
        par::map_chunks(self.len(), |range| range.map(|i| f(self.orbit(i))).collect::<Vec<_>>()).into_iter().flatten().collect()
    }

    /// `Σ w_i v_i / Σ w_i`, summed in sample order.
    fn weighted_mean(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let w = self.shifted_weights();
        let mut acc = vec![0.0; rows.first().map_or(0, Vec::len)];
        let mut total = 0.0;
        for (wi, row) in w.iter().zip(rows) {
            total += wi;
            acc.iter_mut().zip(row).for_each(|(a, v)| *a += wi * v);
        }
        acc.iter_mut().for_each(|a| *a /= total);
        acc
    }

    /// `μ_n(g_k)`.
    pub fn moments(&self, basis: &TestFunctionBasis) -> Vec<f64> {
        self.weighted_mean(&self.sample_moments(basis))
    }

    /// `max_k |μ_n(g_k∘f) − μ_n(g_k)|`.
    pub fn invariance_defect(&self, basis: &TestFunctionBasis) -> f64 {
        let n = self.n;
        let shifted = self.weighted_mean(&self.per_sample(|orbit| orbit_moments(&orbit[1..=n], basis)));
        let base = self.moments(basis);
        shifted.iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Histogram of all orbit points, weight `w̄_i / n` each.
    pub fn histogram(&self, bins: usize) -> Result<HistogramMeasure> {
        let w = self.normalized_weights();
        let n = self.n;
        let w = &w;
        let pts: Vec<(Point, f64)> = (0..self.len())
            .flat_map(|i| self.orbit(i)[..n].iter().map(move |&p| (p, w[i] / n as f64)))
            .collect();
        histogram(&pts, bins)
    }

    /// Normalized weight of samples whose moment vector lies within weak
    /// distance `radius` of `target`.
    pub fn concentration_mass(&self, basis: &TestFunctionBasis, target: &[f64], radius: f64) -> Result<f64> {
        if target.len() != basis.len() {
            return Err(Error::LengthMismatch { left: basis.len(), right: target.len() });
        }
        let w = self.normalized_weights();
        let moments = self.sample_moments(basis);
        let mut mass = 0.0;
        for (wi, m) in w.iter().zip(&moments) {
            if weak_distance(m, target)? <= radius {
                mass += wi;
            }
        }
        Ok(mass)
    }
}

/// `μ_n(g_k)` for `k = 1..=K`.
pub fn ensemble_moments(ens: &WeightedEnsemble, basis: &TestFunctionBasis) -> Vec<f64> {
    ens.moments(basis)
}

pub fn invariance_defect(ens: &WeightedEnsemble, basis: &TestFunctionBasis) -> f64 {
    ens.invariance_defect(basis)
}

pub fn equilibrium_histogram(ens: &WeightedEnsemble, bins: usize) -> Result<HistogramMeasure> {
    ens.histogram(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{moments, EmpiricalMeasure};
    use crate::oracle::{OracleConfig, TransferOperatorModel};
    use crate::systems::{cat_map, doubling};
    use proptest::prelude::*;

    fn basis() -> TestFunctionBasis {
        TestFunctionBasis::new(1, 8).unwrap()
    }

    #[test]
    fn single_sample_is_its_empirical_measure() {
        let d = doubling();
        let g = Potential::trig(1, vec![(1, 1.3)]).unwrap();
        let x = Point::circle(0.2);
        let ens = build_ensemble_at(&d, &g, 5, &[x]).unwrap();
        assert_eq!(ens.normalized_weights(), vec![1.0]);
        let em = moments(&EmpiricalMeasure::new(&d, &x, 5), &basis());
        assert_eq!(ens.moments(&basis()), em);
        let ens = build_ensemble_at(&d, &g, 4, &[Point::circle(0.0)]).unwrap();
        assert_eq!(ens.moments(&basis())[0], 1.0);
    }

    #[test]
    fn constant_weights_give_plain_averages() {
        let b = TestFunctionBasis::new(2, 12).unwrap();
        for (sys, want) in [(doubling(), 10.0 * 2f64.ln()), (cat_map(), 10.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln())] {
            let bb = if sys.dim() == 1 { basis() } else { b.clone() };
            let ens = build_ensemble(&sys, &Potential::zero(), 10, 3000, 8).unwrap();
            assert!(ens.log_weights.iter().all(|&l| l == ens.log_weights[0]));
            assert!((ens.log_weights[0] - want).abs() < 1e-9);
            let rows = ens.sample_moments(&bb);
            let mut avg = vec![0.0; bb.len()];
            for r in &rows {
                avg.iter_mut().zip(r).for_each(|(a, v)| *a += v);
            }
            avg.iter_mut().for_each(|a| *a /= rows.len() as f64);
            assert_eq!(ens.moments(&bb), avg);
        }
    }

    #[test]
    fn doubling_zero_potential_is_lebesgue() {
        let ens = build_ensemble(&doubling(), &Potential::zero(), 16, 100_000, 21).unwrap();
        assert!(ens.moments(&basis()).iter().all(|m| m.abs() < 0.02));
        assert!(ens.histogram(16).unwrap().max_deviation_from_uniform() < 0.02);
    }

    #[test]
    fn tilted_moment_matches_oracle() {
        let d = doubling();
        let g = Potential::trig(1, vec![(1, 0.5)]).unwrap();
        let oracle = TransferOperatorModel::build(&d, &g, &OracleConfig::default()).unwrap().gibbs_moments(&basis());
        let ens = build_ensemble(&d, &g, 16, 100_000, 2).unwrap();
        assert!((ens.moments(&basis())[0] - oracle[0]).abs() < 0.05);
    }

    #[test]
    fn periodic_orbit_has_no_defect() {
        let d = doubling();
        let pts = [Point::circle(1.0 / 7.0)];
        let ens = build_ensemble_at(&d, &Potential::zero(), 6, &pts).unwrap();
        assert!(ens.invariance_defect(&basis()) < 1e-10);
        let grid: Vec<Point> = (0..64).map(|i| Point::circle(i as f64 / 64.0)).collect();
        let ens = build_ensemble_at(&d, &Potential::zero(), 1, &grid).unwrap();
        assert!(ens.invariance_defect(&basis()) < 1e-12);
    }

    #[test]
    fn defect_decreases_with_n() {
        let d = doubling();
        let b = basis();
        let d4 = build_ensemble(&d, &Potential::zero(), 4, 100_000, 5).unwrap().invariance_defect(&b);
        let d16 = build_ensemble(&d, &Potential::zero(), 16, 100_000, 5).unwrap().invariance_defect(&b);
        assert!(d16 < d4 && d16 < 0.05, "{d4} {d16}");
    }

    #[test]
    fn histograms() {
        let d = doubling();
        let ens = build_ensemble_at(&d, &Potential::zero(), 3, &[Point::circle(0.0)]).unwrap();
        let h = ens.histogram(16).unwrap();
        assert_eq!(h.masses[0], 1.0);
        let g = Potential::trig(1, vec![(1, 2.0)]).unwrap();
        let h = build_ensemble(&d, &g, 12, 50_000, 3).unwrap().histogram(16).unwrap();
        let near_zero = h.masses[0] + h.masses[15];
        let near_half = h.masses[7] + h.masses[8];
        assert!(near_zero > near_half);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn normalized_weights_sum_to_one(a in -3.0f64..3.0, b in -3.0f64..3.0, n in 1usize..20, seed in 0u64..100) {
            let g = Potential::trig(1, vec![(1, a), (4, b)]).unwrap();
            let ens = build_ensemble(&doubling(), &g, n, 500, seed).unwrap();
            let w = ens.normalized_weights();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
        }
    }
}
