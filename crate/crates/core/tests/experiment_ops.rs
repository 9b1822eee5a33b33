//! Experiment-level operations: growth calibration edges, baseline
//! sampling edges, and push-disabled trending.

mod common;

use flocksim_core::experiment::{
    baseline_times, calibrate_growth, run_phase1, sample_baseline, trend_report, ExperimentError,
    Simulation,
};
use flocksim_core::rng::derive_stream;
use flocksim_core::time::SimTime;

#[test]
fn growth_calibration_target_zero_returns_zero_probability() {
    let loaded = common::small_hybrid_config(80, 2, 0);
    let fit = calibrate_growth(&loaded, 0.0, 0.1, &[1]).unwrap();
    assert_eq!(fit.follow_back_prob, 0.0);
    assert_eq!(fit.achieved_mean, 0.0);
}

#[test]
fn growth_calibration_reports_max_when_target_unreachable() {
    let loaded = common::small_hybrid_config(60, 2, 0);
    let err = calibrate_growth(&loaded, 50_000.0, 0.1, &[1]).unwrap_err();
    match err {
        ExperimentError::Unreachable { target, max_achievable } => {
            assert_eq!(target, 50_000.0);
            assert!(max_achievable < 1_000.0, "max {max_achievable}");
        }
        other => panic!("expected Unreachable, got {other:?}"),
    }
}

#[test]
fn baseline_sampling_edges() {
    let loaded = common::small_hybrid_config(200, 3, 1);
    let (_, mut sim) = run_phase1(&loaded, Some(31)).unwrap();
    sim.run_until(sim.end()).unwrap();
    let end = sim.end();
    let times = baseline_times(&sim);

    // Coverage zero: empty set.
    let mut rng = derive_stream(1, "b0").unwrap();
    let empty = sample_baseline(&sim.platform, &times, 0.0, 3_600, end, None, &mut rng).unwrap();
    assert!(empty.is_empty());

    // Accounts active at several sample times appear once (set semantics),
    // and every sampled author exists.
    let mut rng = derive_stream(1, "b1").unwrap();
    let set = sample_baseline(&sim.platform, &times, 1.0, 3_600, end, None, &mut rng).unwrap();
    assert!(!set.is_empty());
    for id in &set {
        sim.platform.account(*id).unwrap();
    }

    // Locale filter keeps only that locale.
    let mut rng = derive_stream(1, "b2").unwrap();
    let de = sample_baseline(&sim.platform, &times, 1.0, 3_600, end, Some("de"), &mut rng).unwrap();
    for id in &de {
        assert_eq!(sim.platform.account(*id).unwrap().locale.as_ref(), "de");
    }

    // A window outside the simulated span is rejected.
    let mut rng = derive_stream(1, "b3").unwrap();
    let err = sample_baseline(
        &sim.platform,
        &[end + 86_400],
        0.5,
        3_600,
        end,
        None,
        &mut rng,
    )
    .unwrap_err();
    assert!(matches!(err, ExperimentError::TimeOutOfRange { .. }));
}

#[test]
fn disabled_push_never_ranks_the_push_hashtag() {
    let mut loaded = common::small_hybrid_config(200, 4, 2);
    loaded.cfg.experiment.push_enabled = false;
    let mut sim = Simulation::build(&loaded, Some(5)).unwrap();
    sim.run_all().unwrap();
    let report = trend_report(&sim);
    assert!(report.push_window.is_none());
    assert!(
        report.entries.iter().all(|e| e.rank.is_none() && e.count == 0),
        "push hashtag appeared without a push"
    );
    // Absent from the top 100 of every window, by definition.
    assert!(report.all_below_after(SimTime::ZERO, 100));
}
