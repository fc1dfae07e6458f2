//! Transfer-operator ground truth for expanding circle maps.
//!
//! `(Lh)(x) = Σ_{f(y)=x} e^{γ(y)} h(y)` is collocated on the uniform grid
//! `x_i = i/M`; `h` at each preimage is reconstructed by periodic Lagrange
//! interpolation from the grid values (cubic by default). The leading eigenvalue `λ` gives the
//! pressure `log λ`, the right eigenvector `h` and left eigenvector `ρ` give
//! the Gibbs state with grid masses `ρ_i h_i`.

use crate::manifold::{Point, TestFunctionBasis};
use crate::par;
use crate::systems::{check_compatible, MapKind, Potential, SmoothSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Grid size `M`.
    pub grid: usize,
    /// Interpolation stencil width; 2 is linear interpolation.
    pub stencil: usize,
    /// Power-iteration tolerance on the max-norm change of the eigenvector.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid: 512, stencil: 4, tolerance: 1e-13, max_iterations: 100_000 }
    }
}

impl OracleConfig {
    pub fn with_grid(grid: usize) -> Self {
        Self { grid, ..Self::default() }
    }
}

/// Discretized transfer operator with converged leading eigendata.
#[derive(Debug, Clone)]
pub struct TransferOperatorModel {
    pub grid: usize,
    /// Sparse rows: `(column, weight)` pairs.
    rows: Vec<Vec<(usize, f64)>>,
    /// Potential sampled on the grid.
    gamma: Vec<f64>,
    pub lambda: f64,
    /// Right eigenvector, normalized so that `Σ ρ_i h_i = 1`.
    pub h: Vec<f64>,
    /// Left eigenvector, `Σ ρ_i = 1`.
    pub rho: Vec<f64>,
    pub iterations: usize,
}

/// Solves `F(y) = target` on `[0, 1]` for an increasing lift `F`.
fn invert_branch(system: &SmoothSystem, target: f64, k: f64) -> f64 {
    let lift = |y: f64| system.circle_lift(y).expect("circle map");
    let deriv = |y: f64| system.jacobian(&Point::circle(y)).det();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut y = target / k;
    for _ in 0..200 {
        let g = lift(y) - target;
        if g > 0.0 {
            hi = hi.min(y);
        } else {
            lo = lo.max(y);
        }
        let mut next = y - g / deriv(y);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() < 1e-16 || hi - lo < 1e-15 {
            return next;
        }
        y = next;
    }
    y
}

/// Periodic Lagrange weights for reconstructing a grid function at `y`.
fn stencil_weights(y: f64, m: usize, width: usize) -> Vec<(usize, f64)> {
    let pos = y * m as f64;
    let base = pos.floor() as i64 - (width as i64 / 2 - 1);
    let t = pos - base as f64;
    (0..width)
        .map(|j| {
            let w: f64 = (0..width)
                .filter(|&l| l != j)
                .map(|l| (t - l as f64) / (j as f64 - l as f64))
                .product();
            ((base + j as i64).rem_euclid(m as i64) as usize, w)
        })
        .collect()
}

fn apply(rows: &[Vec<(usize, f64)>], v: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(rows) {
        *o = row.iter().map(|&(j, w)| w * v[j]).sum();
    }
}

fn apply_transpose(rows: &[Vec<(usize, f64)>], v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (vi, row) in v.iter().zip(rows) {
        for &(j, w) in row {
            out[j] += w * vi;
        }
    }
}

/// Power iteration; returns the eigenvalue estimate, the max-normalized
/// vector and the iteration count.
fn power_iterate(
    op: impl Fn(&[f64], &mut [f64]),
    m: usize,
    cfg: &OracleConfig,
) -> Result<(f64, Vec<f64>, usize)> {
    let mut v = vec![1.0; m];
    let mut w = vec![0.0; m];
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        op(&v, &mut w);
        let lambda = w.iter().copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::NoConvergence { iterations: it, residual: f64::NAN });
        }
        change = 0.0;
        for (a, b) in v.iter_mut().zip(&w) {
            let nb = b / lambda;
            change = change.max((nb - *a).abs());
            *a = nb;
        }
        if change <= cfg.tolerance {
            return Ok((lambda, v, it));
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iterations, residual: change })
}

impl TransferOperatorModel {
    pub fn build(system: &SmoothSystem, potential: &Potential, cfg: &OracleConfig) -> Result<Self> {
        let MapKind::ExpandingCircle { k, eps } = system.kind else {
            return Err(Error::InvalidSystem(format!("transfer-operator oracle needs an expanding circle map, got {system}")));
        };
        if k as f64 - std::f64::consts::TAU * eps.abs() <= 1.0 {
            return Err(Error::InvalidSystem(format!("{system} is not uniformly expanding")));
        }
        check_compatible(system, potential)?;
        if cfg.grid < cfg.stencil || cfg.stencil < 2 || !cfg.stencil.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "grid {} with stencil {} (stencil must be even, at least 2, at most the grid)",
                cfg.grid, cfg.stencil
            )));
        }
        let m = cfg.grid;
        let nodes: Vec<usize> = (0..m).collect();
        let rows = par::map_items(&nodes, |&i| {
            let x = i as f64 / m as f64;
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(k as usize * cfg.stencil);
            for b in 0..k {
                let y = invert_branch(system, x + b as f64, k as f64);
                let weight = potential.eval(&Point::circle(y)).exp();
                for (j, w) in stencil_weights(y, m, cfg.stencil) {
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += weight * w,
                        None => row.push((j, weight * w)),
                    }
                }
            }
            row
        });
        let gamma: Vec<f64> = nodes.iter().map(|&i| potential.eval(&Point::circle(i as f64 / m as f64))).collect();

        let (lambda, mut h, it_right) = power_iterate(|v, out| apply(&rows, v, out), m, cfg)?;
        let (_, mut rho, it_left) = power_iterate(|v, out| apply_transpose(&rows, v, out), m, cfg)?;
        let rho_sum: f64 = rho.iter().sum();
        rho.iter_mut().for_each(|r| *r /= rho_sum);
        let pairing: f64 = rho.iter().zip(&h).map(|(r, x)| r * x).sum();
        h.iter_mut().for_each(|x| *x /= pairing);

        if h.iter().chain(&rho).any(|&v| v.is_nan() || v <= 0.0) {
            return Err(Error::NoConvergence { iterations: it_right.max(it_left), residual: f64::NAN });
        }
        Ok(Self { grid: m, rows, gamma, lambda, h, rho, iterations: it_right.max(it_left) })
    }

    /// `log λ`.
    pub fn pressure(&self) -> f64 {
        self.lambda.ln()
    }

    /// `max |L h − λ h|` relative to `max h`.
    pub fn residual(&self) -> f64 {
        let mut out = vec![0.0; self.grid];
        apply(&self.rows, &self.h, &mut out);
        let scale = self.h.iter().copied().fold(0.0, f64::max);
        out.iter().zip(&self.h).map(|(a, b)| (a - self.lambda * b).abs()).fold(0.0, f64::max) / scale
    }

    /// Gibbs masses `ρ_i h_i` on the grid nodes.
    pub fn gibbs_masses(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.h).map(|(r, h)| r * h).collect()
    }

    /// `∫ g_k dμ` for the equilibrium state `μ`.
    pub fn gibbs_moments(&self, basis: &TestFunctionBasis) -> Vec<f64> {
        let mut acc = vec![0.0; basis.len()];
        let mut buf = vec![0.0; basis.len()];
        for (i, mass) in self.gibbs_masses().into_iter().enumerate() {
            basis.eval_all(&Point::circle(i as f64 / self.grid as f64), &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, g)| *a += mass * g);
        }
        acc
    }

    /// `∫ γ dμ`.
    pub fn mean_potential(&self) -> f64 {
        self.gibbs_masses().iter().zip(&self.gamma).map(|(m, g)| m * g).sum()
    }

    /// Metric entropy of the equilibrium state, `log λ − ∫ γ dμ`.
    pub fn entropy(&self) -> f64 {
        self.pressure() - self.mean_potential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{cat_map, doubling, make_expanding_circle};

    const LN2: f64 = std::f64::consts::LN_2;

    fn build(sys: &SmoothSystem, pot: &Potential) -> TransferOperatorModel {
        TransferOperatorModel::build(sys, pot, &OracleConfig::default()).unwrap()
    }

    fn benchmark_potentials(sys: &SmoothSystem) -> Vec<Potential> {
        vec![
            Potential::zero(),
            Potential::trig(1, vec![(1, 0.5)]).unwrap(),
            Potential::trig(1, vec![(1, -0.3), (2, 0.7), (3, 0.2)]).unwrap(),
            Potential::geometric(1.0, sys).unwrap(),
        ]
    }

    #[test]
    fn doubling_eigenvalues() {
        let d = doubling();
        let m = build(&d, &Potential::zero());
        assert!((m.lambda - 2.0).abs() < 1e-12);
        assert!(m.h.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let m = build(&d, &Potential::Constant(0.3));
        assert!((m.lambda - 2.0 * 0.3f64.exp()).abs() < 1e-12);
        let m = build(&d, &Potential::geometric(1.0, &d).unwrap());
        assert!((m.lambda - 1.0).abs() < 1e-12);
        assert!(m.residual() < 1e-10);
    }

    #[test]
    fn pressure_of_constant_multiples_of_log_two() {
        let d = doubling();
        for t in [-1.0, 0.0, 0.5, 2.0] {
            let m = build(&d, &Potential::Constant(-t * LN2));
            assert!((m.pressure() - (1.0 - t) * LN2).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_inversion_is_accurate() {
        let s = make_expanding_circle(3, 0.1).unwrap();
        for i in 0..50 {
            let target = i as f64 * 0.0597;
            let y = invert_branch(&s, target, 3.0);
            assert!((s.circle_lift(y).unwrap() - target).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_reproduces_polynomials() {
        for width in [2, 4, 8] {
            let w = stencil_weights(0.3712, 64, width);
            assert!((w.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(stencil_weights(0.25, 4, 2), vec![(1, 1.0), (2, 0.0)]);
    }

    #[test]
    fn grid_self_convergence() {
        let s = make_expanding_circle(2, 0.05).unwrap();
        for pot in benchmark_potentials(&s) {
            let a = TransferOperatorModel::build(&s, &pot, &OracleConfig::with_grid(512)).unwrap();
            let b = TransferOperatorModel::build(&s, &pot, &OracleConfig::with_grid(1024)).unwrap();
            assert!((a.pressure() - b.pressure()).abs() <= 1e-8, "{}: {}", pot.name(), a.pressure() - b.pressure());
        }
    }

    #[test]
    fn shift_covariance() {
        let s = make_expanding_circle(2, 0.05).unwrap();
        let g = Potential::trig(1, vec![(1, 0.5)]).unwrap();
        let base = build(&s, &g).pressure();
        for c in [-1.3, 0.2, 2.0] {
            let shifted = build(&s, &(g.clone() + Potential::Constant(c))).pressure();
            assert!((shifted - base - c).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_moments_examples() {
        let d = doubling();
        let basis = TestFunctionBasis::new(1, 8).unwrap();
        let lebesgue = build(&d, &Potential::zero()).gibbs_moments(&basis);
        assert!(lebesgue.iter().all(|v| v.abs() < 1e-10));
        let tilted = build(&d, &Potential::trig(1, vec![(1, 0.5)]).unwrap()).gibbs_moments(&basis);
        assert!(tilted[0] > 0.0);
        let shifted = build(&d, &Potential::Constant(1.7)).gibbs_moments(&basis);
        for (a, b) in lebesgue.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_examples() {
        let d = doubling();
        assert!((build(&d, &Potential::zero()).entropy() - LN2).abs() < 1e-12);
        assert!((build(&d, &Potential::Constant(-LN2)).entropy() - LN2).abs() < 1e-12);
        let srb = build(&d, &Potential::geometric(1.0, &d).unwrap());
        assert!(srb.pressure().abs() < 1e-12);
        assert!((srb.entropy() - LN2).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounds_and_variational_identity() {
        for sys in [doubling(), make_expanding_circle(2, 0.05).unwrap(), make_expanding_circle(3, 0.1).unwrap()] {
            let k = sys.degree() as f64;
            for pot in benchmark_potentials(&sys) {
                let m = build(&sys, &pot);
                let h = m.entropy();
                assert!(h >= -1e-12 && h <= k.ln() + 1e-12, "{}: entropy {h}", pot.name());
                assert!((h + m.mean_potential() - m.pressure()).abs() < 1e-10);
                assert!(m.residual() < 1e-10);
                assert!((m.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_circle_systems() {
        assert!(matches!(
            TransferOperatorModel::build(&cat_map(), &Potential::zero(), &OracleConfig::default()),
            Err(Error::InvalidSystem(_))
        ));
        let bad = OracleConfig { stencil: 3, ..OracleConfig::default() };
        assert!(TransferOperatorModel::build(&doubling(), &Potential::zero(), &bad).is_err());
    }
}
