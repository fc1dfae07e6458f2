use thermolab::equilibrium::build_ensemble;
use thermolab::ldp::{contraction_report, estimate_nu_n, rate_function, ContractionStatus, DEFAULT_MIN_COUNT};
use thermolab::manifold::{weak_distance, TestFunctionBasis};
use thermolab::oracle::{OracleConfig, TransferOperatorModel};
use thermolab::pressure::{estimate_pressure, PressureParams};
use thermolab::stats::grid;
use thermolab::systems::{cat_map, doubling, make_expanding_circle, make_torus_endomorphism, Potential};
use thermolab::{ConstraintSet, Interval};

fn cos_pot(a: f64) -> Potential {
    Potential::trig(1, vec![(1, a)]).unwrap()
}

fn region(lo: f64, hi: f64) -> ConstraintSet {
    ConstraintSet::new(vec![1], vec![Interval::new(lo, hi).unwrap()]).unwrap()
}

#[test]
fn degree_three_map_matches_oracle() {
    let sys = make_expanding_circle(3, 0.1).unwrap();
    let pot = Potential::trig(1, vec![(1, 0.3), (4, -0.2)]).unwrap();
    let est = estimate_pressure(&sys, &pot, &PressureParams::with_n_max(12, 50_000, 11).unwrap()).unwrap();
    let oracle = TransferOperatorModel::build(&sys, &pot, &OracleConfig::default()).unwrap();
    assert!((est.pressure() - oracle.pressure()).abs() < 0.03);
    assert!(est.ess_warning().is_none());
}

#[test]
fn toral_pressure_is_topological_entropy() {
    for m in [[[2, 1], [1, 1]], [[3, 1], [1, 2]], [[2, 0], [0, 3]]] {
        let sys = make_torus_endomorphism(m).unwrap();
        let est = estimate_pressure(&sys, &Potential::zero(), &PressureParams::with_n_max(10, 2000, 1).unwrap()).unwrap();
        let h = sys.known.topological_entropy.unwrap();
        assert!((est.pressure() - h).abs() < 1e-9, "{m:?}: {} vs {h}", est.pressure());
    }
}

#[test]
fn geometric_potential_gives_srb_pressure_zero() {
    let sys = make_expanding_circle(2, 0.05).unwrap();
    let pot = Potential::geometric(1.0, &sys).unwrap();
    let est = estimate_pressure(&sys, &pot, &PressureParams::with_n_max(12, 20_000, 2).unwrap()).unwrap();
    assert!(est.pressure().abs() < 1e-9);
}

#[test]
fn lebesgue_is_the_equilibrium_state_of_zero_potential() {
    let ens = build_ensemble(&doubling(), &Potential::zero(), 8, 100_000, 3).unwrap();
    let hist = ens.histogram(16).unwrap();
    assert!(hist.max_deviation_from_uniform() < 0.01);
    let basis = TestFunctionBasis::new(1, 8).unwrap();
    assert!(weak_distance(&ens.moments(&basis), &[0.0; 8]).unwrap() < 0.01);
}

#[test]
fn cat_map_equilibrium_is_near_uniform() {
    let ens = build_ensemble(&cat_map(), &Potential::zero(), 8, 50_000, 4).unwrap();
    let basis = TestFunctionBasis::default_for(2).unwrap();
    assert!(weak_distance(&ens.moments(&basis), &vec![0.0; basis.len()]).unwrap() < 0.02);
    assert!(ens.invariance_defect(&basis) < 0.02);
}

#[test]
fn constraint_extremes() {
    let params = PressureParams::new((4..=10).collect(), 5000, 5).unwrap();
    let all = ConstraintSet::new(vec![1], vec![Interval::full()]).unwrap();
    let none = ConstraintSet::new(vec![1], vec![Interval::empty()]).unwrap();
    let full = estimate_nu_n(&doubling(), &cos_pot(0.3), &all, &params, DEFAULT_MIN_COUNT).unwrap();
    assert!(full.nu.iter().all(|&v| v == 1.0));
    assert_eq!(full.slope, Some(0.0));
    let empty = estimate_nu_n(&doubling(), &cos_pot(0.3), &none, &params, DEFAULT_MIN_COUNT).unwrap();
    assert!(empty.nu.iter().all(|&v| v == 0.0));
    assert!(empty.satisfying.iter().all(|&c| c == 0));
    assert!(empty.decay_too_fast());
}

#[test]
fn nested_regions_are_monotone_per_n() {
    let params = PressureParams::new((2..=12).collect(), 20_000, 6).unwrap();
    let regions = [region(0.5, 0.6), region(0.4, 0.8), region(0.3, 1.0), region(-1.0, 1.0)];
    let nus: Vec<Vec<f64>> = regions
        .iter()
        .map(|cs| estimate_nu_n(&doubling(), &cos_pot(0.2), cs, &params, DEFAULT_MIN_COUNT).unwrap().nu)
        .collect();
    for pair in nus.windows(2) {
        assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a <= b));
    }
}

#[test]
fn rate_table_caps_unreachable_moments() {
    let table = rate_function(
        &doubling(),
        &Potential::zero(),
        &[1],
        vec![grid(-1.5, 1.5, 0.1)],
        vec![grid(-4.0, 4.0, 0.25)],
        &PressureParams::with_n_max(12, 20_000, 7).unwrap(),
        50.0,
    )
    .unwrap();
    for (i, a) in table.alphas.iter().enumerate() {
        if a[0].abs() > 1.0 {
            assert!(table.capped[i] && table.value(i).is_infinite(), "α = {}", a[0]);
        }
    }
    assert!(table.min_second_difference() >= -1e-9);
}

#[test]
fn contraction_in_the_typical_region_has_small_gap() {
    let params = PressureParams::new((6..=12).collect(), 50_000, 8).unwrap();
    let cs = region(-0.5, 0.5);
    let ldp = estimate_nu_n(&doubling(), &Potential::zero(), &cs, &params, DEFAULT_MIN_COUNT).unwrap();
    let table = rate_function(
        &doubling(),
        &Potential::zero(),
        &[1],
        vec![grid(-1.0, 1.0, 0.05)],
        vec![grid(-4.0, 4.0, 0.25)],
        &PressureParams::with_n_max(12, 50_000, 8).unwrap(),
        50.0,
    )
    .unwrap();
    let report = contraction_report(&ldp, &table, &cs).unwrap();
    assert_eq!(report.status, ContractionStatus::Measured);
    assert!(report.rate.abs() <= 0.02);
    assert!(report.decay_rate.unwrap().abs() <= 0.02);
}

#[test]
fn tilted_sampler_concentrates_on_the_tilted_moment() {
    // Tilting by β·g moves the equilibrium moment to α_β; the weight of the
    // region around α_β grows with n (not step by step at very small n).
    let beta = 1.0;
    let tilted = cos_pot(beta);
    let alpha = TransferOperatorModel::build(&doubling(), &tilted, &OracleConfig::default())
        .unwrap()
        .gibbs_moments(&TestFunctionBasis::new(1, 1).unwrap())[0];
    let cs = region(alpha - 0.15, alpha + 0.15);
    let params = PressureParams::new(vec![4, 16, 40], 50_000, 9).unwrap();
    let nu = estimate_nu_n(&doubling(), &tilted, &cs, &params, DEFAULT_MIN_COUNT).unwrap().nu;
    assert!(nu[0] < nu[1] && nu[1] < nu[2], "{nu:?}");
}

#[cfg(feature = "parallel")]
#[test]
fn results_do_not_depend_on_thread_count() {
    let sys = make_expanding_circle(2, 0.05).unwrap();
    let pot = cos_pot(0.5);
    let params = PressureParams::with_n_max(10, 3 * 2048 + 17, 12).unwrap();
    let compute = || {
        let est = estimate_pressure(&sys, &pot, &params).unwrap();
        let ens = build_ensemble(&sys, &pot, 6, 5000, 12).unwrap();
        (est, ens)
    };
    let reference = compute();
    for threads in [1, 2, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        assert_eq!(pool.install(compute), reference, "{threads} threads");
    }
}
