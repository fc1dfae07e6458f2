//! Orbits, Birkhoff sums and empirical measures `δ_n(x)`.

use crate::cocycle::CocycleAccumulator;
use crate::manifold::{Point, TestFunctionBasis};
use crate::systems::{Potential, SmoothSystem};

/// The first `n` points `x, f x, …, f^{n-1} x`.
pub fn orbit(system: &SmoothSystem, x: &Point, n: usize) -> Vec<Point> {
    std::iter::successors(Some(*x), |p| Some(system.apply(p))).take(n).collect()
}

/// `S_n γ(x) = Σ_{i<n} γ(f^i x)`.
pub fn birkhoff_sum(system: &SmoothSystem, potential: &Potential, x: &Point, n: usize) -> f64 {
    let mut p = *x;
    let mut s = 0.0;
    for _ in 0..n {
        s += potential.eval(&p);
        p = system.apply(&p);
    }
    s
}

/// Uniform measure on `n` consecutive orbit points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub base: Point,
    pub points: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new(system: &SmoothSystem, x: &Point, n: usize) -> Self {
        assert!(n >= 1, "empirical measure needs n >= 1");
        Self { base: *x, points: orbit(system, x, n) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `δ_n(x)(g_k)` for every basis element.
pub fn moments(em: &EmpiricalMeasure, basis: &TestFunctionBasis) -> Vec<f64> {
    orbit_moments(&em.points, basis)
}

pub(crate) fn orbit_moments(points: &[Point], basis: &TestFunctionBasis) -> Vec<f64> {
    let mut acc = vec![0.0; basis.len()];
    let mut buf = vec![0.0; basis.len()];
    for p in points {
        basis.eval_all(p, &mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
    }
    let n = points.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Walks an orbit while accumulating the Birkhoff sum of a potential, the
/// Jacobian cocycle and the Birkhoff sums of selected test functions.
#[derive(Debug, Clone)]
pub struct OrbitWalker<'a> {
    system: &'a SmoothSystem,
    potential: &'a Potential,
    observables: &'a [usize],
    basis: Option<&'a TestFunctionBasis>,
    point: Point,
    steps: usize,
    birkhoff: f64,
    cocycle: CocycleAccumulator,
    observable_sums: Vec<f64>,
}

impl<'a> OrbitWalker<'a> {
    pub fn new(system: &'a SmoothSystem, potential: &'a Potential, x: Point) -> Self {
        Self {
            system,
            potential,
            observables: &[],
            basis: None,
            point: x,
            steps: 0,
            birkhoff: 0.0,
            cocycle: CocycleAccumulator::new(system.dim()),
            observable_sums: Vec::new(),
        }
    }

    /// Also accumulates `Σ g_k(f^i x)` for the 1-based basis indices given.
    pub fn with_observables(mut self, basis: &'a TestFunctionBasis, observables: &'a [usize]) -> Self {
        self.basis = Some(basis);
        self.observables = observables;
        self.observable_sums = vec![0.0; observables.len()];
        self
    }

    /// Current point `f^steps(x)`.
    pub fn point(&self) -> Point {
        self.point
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self) {
        let p = self.point;
        self.birkhoff += self.potential.eval(&p);
        self.cocycle.push(&self.system.jacobian(&p));
        if let Some(basis) = self.basis {
            for (s, &k) in self.observable_sums.iter_mut().zip(self.observables) {
                *s += basis.g(k, &p);
            }
        }
        self.point = self.system.apply(&p);
        self.steps += 1;
    }

    pub fn birkhoff(&self) -> f64 {
        self.birkhoff
    }

    pub fn log_wedge_norm(&self) -> f64 {
        self.cocycle.log_wedge_norm()
    }

    /// `S_n γ(x) + log‖∧(D_x fⁿ)‖`.
    pub fn log_weight(&self) -> f64 {
        self.birkhoff + self.cocycle.log_wedge_norm()
    }

    /// `δ_n(x)(g_k)` for the tracked observables.
    pub fn observable_means(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.steps as f64;
        self.observable_sums.iter().map(move |s| s / n)
    }

    pub fn observable_sums(&self) -> &[f64] {
        &self.observable_sums
    }
}
