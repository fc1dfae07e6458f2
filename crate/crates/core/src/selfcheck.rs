//! Invariant suites run by the `selfcheck` study.
//!
//! Every check reduces to a single "worst violation" number that passes when
//! it does not exceed the suite's tolerance, so reports compare directly.

use crate::cocycle::{cocycle_spectrum, log_wedge_norm};
use crate::equilibrium::build_ensemble;
use crate::manifold::{sample_uniform, weak_distance, TestFunctionBasis};
use crate::pressure::{estimate_pressure, PressureParams};
use crate::stats::grid;
use crate::systems::{cat_map, doubling, jacobian_selfcheck, make_expanding_circle, make_torus_endomorphism, Potential, SmoothSystem};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sizes for the suites; the defaults finish in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfcheckConfig {
    /// Base points per system for the pointwise suites.
    pub points: usize,
    /// Samples per pressure / ensemble estimate.
    pub samples: usize,
    /// Largest orbit length.
    pub n_max: usize,
    pub seed: u64,
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        Self { points: 200, samples: 20_000, n_max: 12, seed: 20240611 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub system: String,
    pub cases: usize,
    /// Largest violation found; the check passes when `worst <= tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

/// Systems every suite runs on.
pub fn benchmark_systems() -> Result<Vec<SmoothSystem>> {
    Ok(vec![
        doubling(),
        make_expanding_circle(2, 0.05)?,
        make_expanding_circle(3, 0.02)?,
        cat_map(),
        make_torus_endomorphism([[3, 1], [1, 2]])?,
    ])
}

/// `log|det D_x fⁿ|` from the singular values against the sum of one-step
/// log-determinants along the orbit.
pub fn determinant_consistency(system: &SmoothSystem, cfg: &SelfcheckConfig) -> CheckOutcome {
    let pts = sample_uniform(system.dim(), cfg.points, cfg.seed);
    let mut worst = 0.0f64;
    for p in &pts {
        let spec = cocycle_spectrum(system, p, cfg.n_max);
        let mut q = *p;
        let mut direct = 0.0;
        for _ in 0..cfg.n_max {
            direct += system.jacobian(&q).det().abs().ln();
            q = system.apply(&q);
        }
        worst = worst.max((spec.log_det() - direct).abs() / direct.abs().max(1.0));
    }
    CheckOutcome { suite: "cocycle_determinant", system: system.name.clone(), cases: pts.len(), worst, tolerance: 1e-10 }
}

/// `log‖∧D_x f^{n+m}‖ ≤ log‖∧D_x fⁿ‖ + log‖∧D_{fⁿx} f^m‖` over all splits.
pub fn submultiplicativity(system: &SmoothSystem, cfg: &SelfcheckConfig) -> CheckOutcome {
    let pts = sample_uniform(system.dim(), cfg.points, cfg.seed ^ 0x5u64);
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for p in &pts {
        let total = cfg.n_max;
        let whole = log_wedge_norm(&cocycle_spectrum(system, p, total));
        let mut q = *p;
        for n in 1..total {
            q = system.apply(&q);
            let head = log_wedge_norm(&cocycle_spectrum(system, p, n));
            let tail = log_wedge_norm(&cocycle_spectrum(system, &q, total - n));
            worst = worst.max(whole - head - tail);
            cases += 1;
        }
    }
    CheckOutcome { suite: "submultiplicativity", system: system.name.clone(), cases, worst, tolerance: 1e-9 }
}

/// Second differences of `t ↦ Q̂_0(t·g_1)` on `t ∈ [−2, 2]`, shared seeds.
pub fn q_convexity(system: &SmoothSystem, cfg: &SelfcheckConfig) -> Result<CheckOutcome> {
    let params = PressureParams::with_n_max(cfg.n_max, cfg.samples, cfg.seed)?;
    let ts = grid(-2.0, 2.0, 0.25);
    let q = ts
        .iter()
        .map(|&t| Ok(estimate_pressure(system, &Potential::tilt(system.dim(), &[1], &[t])?, &params)?.pressure()))
        .collect::<Result<Vec<f64>>>()?;
    let worst = q.windows(3).map(|w| -(w[0] - 2.0 * w[1] + w[2])).fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckOutcome { suite: "q_convexity", system: system.name.clone(), cases: q.len() - 2, worst, tolerance: 0.02 })
}

/// Normalized ensemble weights are non-negative and sum to one; the ESS lies
/// in `[1, N]`; histogram masses sum to one.
pub fn weight_normalization(system: &SmoothSystem, cfg: &SelfcheckConfig) -> Result<CheckOutcome> {
    let pot = Potential::tilt(system.dim(), &[1, 2], &[0.5, -0.3])?;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [1, cfg.n_max / 2, cfg.n_max] {
        let ens = build_ensemble(system, &pot, n.max(1), cfg.samples / 4, cfg.seed)?;
        let w = ens.normalized_weights();
        let total: f64 = w.iter().sum();
        let negative = w.iter().map(|&x| -x).fold(0.0, f64::max);
        let ess = ens.ess();
        let ess_violation = (1.0 - ess).max(ess - w.len() as f64).max(0.0) / w.len() as f64;
        let hist = ens.histogram(8)?;
        let hist_total: f64 = hist.masses.iter().sum();
        worst = worst.max((total - 1.0).abs()).max(negative).max(ess_violation).max((hist_total - 1.0).abs());
        cases += 1;
    }
    Ok(CheckOutcome { suite: "weight_normalization", system: system.name.clone(), cases, worst, tolerance: 1e-12 })
}

/// Identity, symmetry, non-negativity and triangle inequality of the
/// truncated weak distance on random and orbit-derived moment vectors.
pub fn metric_axioms(dim: usize, cfg: &SelfcheckConfig) -> Result<CheckOutcome> {
    let basis = TestFunctionBasis::default_for(dim)?;
    let k = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vectors: Vec<Vec<f64>> = (0..cfg.points / 4).map(|_| (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
    let mut buf = vec![0.0; k];
    for p in sample_uniform(dim, cfg.points / 4, cfg.seed) {
        basis.eval_all(&p, &mut buf);
        vectors.push(buf.clone());
    }
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (i, a) in vectors.iter().enumerate() {
        worst = worst.max(weak_distance(a, a)?);
        let b = &vectors[(i * 7 + 1) % vectors.len()];
        let c = &vectors[(i * 13 + 5) % vectors.len()];
        let ab = weak_distance(a, b)?;
        let ba = weak_distance(b, a)?;
        let bc = weak_distance(b, c)?;
        let ac = weak_distance(a, c)?;
        worst = worst.max((ab - ba).abs()).max(-ab).max(ac - ab - bc - 1e-15);
        cases += 1;
    }
    Ok(CheckOutcome { suite: "metric_axioms", system: format!("T{dim}"), cases, worst, tolerance: 0.0 })
}

/// Analytic Jacobians against central finite differences.
pub fn jacobian_consistency(system: &SmoothSystem, cfg: &SelfcheckConfig) -> CheckOutcome {
    let worst = jacobian_selfcheck(system, cfg.points, cfg.seed);
    CheckOutcome { suite: "jacobian", system: system.name.clone(), cases: cfg.points, worst, tolerance: 1e-6 }
}

/// Every suite on every benchmark system, in a fixed order.
pub fn run_all(cfg: &SelfcheckConfig) -> Result<Vec<CheckOutcome>> {
    let systems = benchmark_systems()?;
    let mut out = Vec::new();
    for s in &systems {
        out.push(determinant_consistency(s, cfg));
        out.push(submultiplicativity(s, cfg));
        out.push(jacobian_consistency(s, cfg));
        out.push(q_convexity(s, cfg)?);
        out.push(weight_normalization(s, cfg)?);
    }
    out.push(metric_axioms(1, cfg)?);
    out.push(metric_axioms(2, cfg)?);
    Ok(out)
}
