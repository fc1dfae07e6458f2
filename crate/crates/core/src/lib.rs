//! Numerical thermodynamic formalism for smooth maps on flat tori.
//!
//! The crate estimates topological pressure from the volume growth of the
//! Jacobian cocycle weighted by Birkhoff sums of a potential, builds the
//! weighted empirical measures that converge to equilibrium states, and
//! computes large-deviation rate functions for moment observables. Expanding
//! circle maps get an independent transfer-operator oracle.
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled
//! (the default). Reductions are performed over fixed-size chunks in a fixed
//! order, so every estimate is bit-identical for a given seed regardless of
//! the worker count or of whether the feature is enabled.

pub mod cocycle;
pub mod empirical;
pub mod equilibrium;
mod error;
pub mod ldp;
pub mod manifold;
pub mod oracle;
pub mod par;
pub mod pressure;
pub mod selfcheck;
pub mod stats;
pub mod systems;

pub use cocycle::{cocycle_spectrum, log_wedge_norm, CocycleSpectrum};
pub use empirical::{birkhoff_sum, moments, orbit, EmpiricalMeasure};
pub use equilibrium::{build_ensemble, WeightedEnsemble};
pub use error::{Error, Result};
pub use ldp::{ConstraintSet, Interval, LdpEstimate, RateFunctionTable};
pub use manifold::{histogram, sample_uniform, weak_distance, HistogramMeasure, Point, TestFunctionBasis};
pub use oracle::TransferOperatorModel;
pub use pressure::{estimate_pressure, log_zn, q_functional, PressureEstimate, PressureParams};
pub use systems::{Potential, SmoothSystem};

/// Effective sample sizes below this fraction of the sample count trigger a
/// weight-degeneracy warning.
pub const ESS_WARN_FRACTION: f64 = 0.01;
