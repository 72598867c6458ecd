//! Counts generated by the event simulator fed through the direct metrics and
//! tomography.

use paircert_core::analytic::{DetectorParams, RateSet};
use paircert_core::metrics::{
    average_visibility, average_visibility_standard_error, coincidence_entropies, entropy_settings, qber, BasisCounts,
};
use paircert_core::sim::{run_counts, ExperimentConfig};
use paircert_core::state::{bell_state, werner, Axis, BellKind, Side, SourceStateModel};
use paircert_core::tomography::{
    mle_reconstruct, overcomplete_settings, qst_metrics, simulate_settings, simulate_tomography, state_visibility, MleOptions,
    TomographyCounts,
};

fn simulated_counts(model: SourceStateModel, settings: &[(Axis, Axis)], seed: u64) -> BasisCounts {
    let rates = RateSet {
        pair_rate_hz: 1e5,
        total_rate_hz: 1e5,
        transmissivity_a: 1.0,
        transmissivity_b: 1.0,
        window_s: 1e-9,
    };
    let mut counts = BasisCounts::new();
    for (i, &(a, b)) in settings.iter().enumerate() {
        let mut c = ExperimentConfig::ideal(model, rates, DetectorParams::ideal(1.0, 0.0), 0.05);
        c.analyzer_a = Some(a);
        c.analyzer_b = Some(b);
        c.seed = seed + i as u64;
        counts.insert_record(a, b, &run_counts(&c, 0).unwrap()).unwrap();
    }
    counts
}

#[test]
fn ideal_source_through_simulator() {
    let counts = simulated_counts(SourceStateModel::pure(BellKind::PhiPlus), &entropy_settings(), 1);
    assert_eq!(average_visibility(&counts, Axis::H, BellKind::PhiPlus).unwrap(), 1.0);
    assert_eq!(average_visibility(&counts, Axis::D, BellKind::PhiPlus).unwrap(), 1.0);
    assert_eq!(qber(&counts, BellKind::PhiPlus).unwrap(), 0.0);
    for side in [Side::A, Side::B] {
        // Cross-basis pairs are only statistically balanced.
        let r = coincidence_entropies(&counts, side).unwrap();
        assert!(r.h_same.iter().all(|&h| h == 1.0));
        assert!(r.total > 7.99 && r.total <= 8.0, "{}", r.total);
    }
}

#[test]
fn werner_qber_tracks_visibility() {
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let rho = werner(p).unwrap();
        // Totals per basis setting pair are ~1e5 coincidences.
        let counts = simulate_settings(&rho, &entropy_settings(), 2e5, 77).unwrap();
        let q = qber(&counts, BellKind::PhiPlus).unwrap();
        assert!((q - (1.0 - p) / 2.0).abs() <= 0.01, "p={p}: {q}");
    }
}

#[test]
fn tomography_of_simulated_event_counts() {
    let mut model = SourceStateModel::pure(BellKind::PhiPlus);
    model.bell_fraction = 0.85;
    model.depolarized_fraction = 0.15;
    let truth = model.to_density_matrix().unwrap();
    let counts = simulated_counts(model, &overcomplete_settings(), 100);
    let result = mle_reconstruct(&TomographyCounts::new(counts.clone()).unwrap(), MleOptions::default()).unwrap();
    assert!(result.converged);
    assert!(result.rho.fidelity(&truth) > 0.99);

    // The reconstructed state predicts the directly measured visibilities.
    for basis in [Axis::H, Axis::D] {
        let direct = average_visibility(&counts, basis, BellKind::PhiPlus).unwrap();
        let se = average_visibility_standard_error(&counts, basis).unwrap();
        let from_state = (state_visibility(&result.rho, basis) + state_visibility(&result.rho, basis.partner())) / 2.0;
        assert!((direct - from_state).abs() <= 3.0 * se, "{basis}: {direct} vs {from_state} (se {se})");
    }
    let m = qst_metrics(&result.rho);
    assert_eq!(m.nearest_bell, BellKind::PhiPlus);
    assert!((m.renyi2_a - std::f64::consts::LN_2).abs() < 0.01);
}

#[test]
fn every_bell_state_round_trips() {
    for (i, kind) in BellKind::ALL.into_iter().enumerate() {
        let truth = bell_state(kind);
        let r = mle_reconstruct(&simulate_tomography(&truth, 1e5, i as u64).unwrap(), MleOptions::default()).unwrap();
        assert!(r.rho.fidelity(&truth) >= 0.99, "{kind:?}");
        assert_eq!(qst_metrics(&r.rho).nearest_bell, kind);
    }
}
