use echoroom::config::{ExperimentConfig, OracleKind, Scenario};
use echoroom::report::{write_batch, AGGREGATE_FILE, CSV_FILE};
use echoroom::{run_batch, run_trial, HarnessError};

#[test]
fn noiseless_exact_trial_is_exact() {
    let cfg = ExperimentConfig {
        oracle: OracleKind::Exact,
        snr_db: f64::INFINITY,
        ..ExperimentConfig::default()
    };
    for i in 0..3 {
        let r = run_trial(&cfg, i).unwrap();
        assert!(r.success, "trial {i}: {:?}", r.failure);
        assert_eq!(r.wall_errors.len(), 4);
        for e in &r.wall_errors {
            assert!(e.unwrap() < 1e-6, "trial {i}: {e:?}");
        }
        assert_eq!(r.steps, r.trace.last().unwrap().stop_index);
    }
}

#[test]
fn noisy_trial_zero_is_within_a_centimetre() {
    let r = run_trial(&ExperimentConfig::default(), 0).unwrap();
    assert!(r.success, "{:?}", r.failure);
    for e in &r.wall_errors {
        assert!(e.unwrap() < 0.01, "{e:?}");
    }
}

#[test]
fn zero_trials_is_a_config_error() {
    let cfg = ExperimentConfig {
        trials: 0,
        ..ExperimentConfig::default()
    };
    assert!(matches!(run_batch(&cfg), Err(HarnessError::Config(_))));
    assert!(matches!(run_trial(&cfg, 0), Err(HarnessError::Config(_))));
}

#[test]
fn steps_count_stops_not_orientations() {
    let cfg = ExperimentConfig {
        oracle: OracleKind::Exact,
        snr_db: f64::INFINITY,
        ..ExperimentConfig::default()
    };
    let r = run_trial(&cfg, 1).unwrap();
    let travelled: usize = r.trace.iter().map(|s| s.legs).sum();
    assert_eq!(r.steps, 1 + travelled);
    assert!(r.steps < 36);
}

#[test]
fn batches_are_bit_identical_across_runs_and_worker_counts() {
    let base = ExperimentConfig {
        trials: 3,
        scenario: Scenario::Random,
        traces: true,
        master_seed: 42,
        ..ExperimentConfig::default()
    };
    let mut outputs = Vec::new();
    for workers in [1, 2, 1] {
        let cfg = ExperimentConfig { workers, ..base.clone() };
        let dir = tempfile::tempdir().unwrap();
        write_batch(dir.path(), &base, &run_batch(&cfg).unwrap()).unwrap();
        let mut files = Vec::new();
        for name in [CSV_FILE, AGGREGATE_FILE, "traces/trial_00000.json", "traces/trial_00002.json"] {
            files.push(std::fs::read(dir.path().join(name)).unwrap());
        }
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn master_seed_changes_the_outcome() {
    let a = ExperimentConfig {
        trials: 1,
        oracle: OracleKind::Exact,
        ..ExperimentConfig::default()
    };
    let b = ExperimentConfig { master_seed: 1, ..a.clone() };
    assert_ne!(run_trial(&a, 0).unwrap().start, run_trial(&b, 0).unwrap().start);
}
