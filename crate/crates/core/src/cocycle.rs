//! Log singular values of the Jacobian cocycle `D_x fⁿ`.
//!
//! The product `D_{f^{n-1}x}f ··· D_x f` is carried in SVD form
//! `U·diag(e^{s})·Vᵀ`. Multiplying by the next Jacobian `A` only requires the
//! SVD of `A·U·diag(e^{s})`; the right factor never matters for singular
//! values. Everything is rescaled by `e^{-s₁}` first, so no intermediate
//! quantity exceeds the size of a single Jacobian.

use crate::manifold::Point;
use crate::systems::{Jacobian, SmoothSystem};

/// Descending log singular values of `D_x fⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleSpectrum {
    pub n: usize,
    pub logsv: Vec<f64>,
}

impl CocycleSpectrum {
    /// `log|det D_x fⁿ|`.
    pub fn log_det(&self) -> f64 {
        self.logsv.iter().sum()
    }
}

/// Incremental cocycle, one Jacobian per step.
#[derive(Debug, Clone, Copy)]
pub struct CocycleAccumulator {
    dim: usize,
    steps: usize,
    // left singular frame, columns u1 and u2
    u: [[f64; 2]; 2],
    logsv: [f64; 2],
}

impl CocycleAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { dim, steps: 0, u: [[1.0, 0.0], [0.0, 1.0]], logsv: [0.0, 0.0] }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Left-multiplies the accumulated product by `a`.
    pub fn push(&mut self, a: &Jacobian) {
        self.steps += 1;
        if self.dim == 1 {
            self.logsv[0] += a.m[0][0].abs().ln();
            return;
        }
        let m = &a.m;
        let [s1, s2] = self.logsv;
        let col = |j: usize| {
            let (x, y) = (self.u[0][j], self.u[1][j]);
            [m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y]
        };
        let c1 = col(0);
        let c2 = col(1);
        // B' = [c1, r·c2] = A·U·diag(e^s)·e^{-s1}
        let r = (s2 - s1).exp();
        let r2 = r * r;
        let sxx = c1[0] * c1[0] + r2 * c2[0] * c2[0];
        let syy = c1[1] * c1[1] + r2 * c2[1] * c2[1];
        let sxy = c1[0] * c1[1] + r2 * c2[0] * c2[1];
        let frob = sxx + syy;
        let log_det_a = a.det().abs().ln();
        let disc = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
        let top = 0.5 * (frob + disc);
        debug_assert!(top > 0.0 || frob == 0.0, "singular Jacobian in cocycle");
        let new_s1 = s1 + 0.5 * top.ln();
        let new_s2 = log_det_a + s1 + s2 - new_s1;
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let (sn, cs) = theta.sin_cos();
        self.u = [[cs, -sn], [sn, cs]];
        self.logsv = [new_s1, new_s2];
    }

    pub fn spectrum(&self) -> CocycleSpectrum {
        CocycleSpectrum { n: self.steps, logsv: self.logsv[..self.dim].to_vec() }
    }

    /// `log‖∧(D_x fⁿ)‖` for the current product.
    pub fn log_wedge_norm(&self) -> f64 {
        self.logsv[..self.dim].iter().filter(|&&s| s > 0.0).sum()
    }
}

/// Log singular values of `D_x fⁿ`, `n ≥ 1`.
pub fn cocycle_spectrum(system: &SmoothSystem, x: &Point, n: usize) -> CocycleSpectrum {
    assert!(n >= 1, "cocycle needs at least one step");
    let mut acc = CocycleAccumulator::new(system.dim());
    let mut p = *x;
    for _ in 0..n {
        acc.push(&system.jacobian(&p));
        p = system.apply(&p);
    }
    acc.spectrum()
}

/// `max_{0≤j≤d}` of the sum of the top `j` log singular values, i.e. the sum
/// of the positive ones. `j = 0` contributes 0, so the result is never negative.
pub fn log_wedge_norm(spec: &CocycleSpectrum) -> f64 {
    let mut best = 0.0f64;
    let mut partial = 0.0;
    for &s in &spec.logsv {
        partial += s;
        best = best.max(partial);
    }
    best
}
