mod support;

use srv_core::augment::{train, AugmentConfig, TrainConfig};
use srv_core::csi::CsiInstance;
use srv_core::eval::{
    cross_rate_grid, emit_report, evaluate, parse_report, Classifier, EvalOptions, EvalReport,
    ReportFormat,
};
use srv_core::model::{ModelConfig, SrvModel};
use srv_core::traffic::{synth_dataset, SynthConfig};
use srv_core::{Error, Result};
use support::two_pass_mean_var;

fn data(per_class: usize, seed: u64) -> Vec<CsiInstance> {
    synth_dataset(&SynthConfig {
        instances_per_class: per_class,
        base_rate: 60.0,
        subcarriers: 4,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
    .into_instances()
}

struct Perfect;

impl Classifier for Perfect {
    fn classes(&self) -> usize {
        3
    }

    fn predict_proba(&self, instance: &CsiInstance) -> Result<Vec<f64>> {
        let mut p = vec![0.0; 3];
        p[instance.label().unwrap()] = 1.0;
        Ok(p)
    }
}

/// Correct only when at least `min_rows` rows survive downsampling.
struct NeedsRows(usize);

impl Classifier for NeedsRows {
    fn classes(&self) -> usize {
        3
    }

    fn predict_proba(&self, instance: &CsiInstance) -> Result<Vec<f64>> {
        let label = instance.label().unwrap();
        let guess = if instance.len() >= self.0 {
            label
        } else {
            (label + 1) % 3
        };
        let mut p = vec![0.0; 3];
        p[guess] = 1.0;
        Ok(p)
    }
}

#[test]
fn perfect_and_rate_sensitive_classifiers() {
    let test = data(5, 1);
    let rates = [5.0, 10.0, 30.0, 60.0];
    let report = evaluate(&Perfect, &test, &rates, &EvalOptions::default(), 0).unwrap();
    assert_eq!(report.accuracies, vec![1.0; 4]);
    assert_eq!((report.avg_accuracy, report.variance), (1.0, 0.0));
    assert_eq!(
        report.confusion[0],
        vec![vec![15, 0, 0], vec![0, 15, 0], vec![0, 0, 15]]
    );

    let report = evaluate(&NeedsRows(20), &test, &rates, &EvalOptions::default(), 0).unwrap();
    assert_eq!(report.accuracies, vec![0.0, 0.0, 1.0, 1.0]);
    assert_eq!(report.avg_accuracy, 0.5);
    assert_eq!(report.variance, 0.25);
    assert_eq!(report.accuracy_at(30.0), Some(1.0));
    assert_eq!(report.confusion[0][0], vec![0, 15, 0]);
}

#[test]
fn evaluation_errors() {
    let test = data(2, 1);
    assert!(matches!(
        evaluate(&Perfect, &test, &[], &EvalOptions::default(), 0),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        evaluate(&Perfect, &test, &[120.0], &EvalOptions::default(), 0),
        Err(Error::RateTooHigh { .. })
    ));
}

#[test]
fn evaluation_is_seeded() {
    let test = data(10, 2);
    let model = SrvModel::new(ModelConfig::new(4, 1, 1, 8, 3)).unwrap();
    let a = evaluate(&model, &test, &[5.0, 10.0], &EvalOptions::default(), 3).unwrap();
    let b = evaluate(&model, &test, &[5.0, 10.0], &EvalOptions::default(), 3).unwrap();
    assert_eq!(a, b);
    let (mean, var) = two_pass_mean_var(&a.accuracies);
    assert!((a.avg_accuracy - mean).abs() < 1e-12 && (a.variance - var).abs() < 1e-12);
}

#[test]
fn reports_survive_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = EvalReport::from_accuracies(
        vec![5.0, 10.0, 25.0],
        vec![0.1 + 0.2, 2.0 / 3.0, 0.987654321],
        vec![vec![vec![1, 0], vec![2, 3]]; 3],
        42,
        3,
    )
    .unwrap();
    for (format, name) in [
        (ReportFormat::Csv, "r.csv"),
        (ReportFormat::JsonLines, "r.jsonl"),
    ] {
        let path = dir.path().join(name);
        emit_report(&report, &path, format).unwrap();
        let back = parse_report(&std::fs::read_to_string(&path).unwrap(), format).unwrap();
        assert_eq!(back.accuracies, report.accuracies);
        assert_eq!(back.variance.to_bits(), report.variance.to_bits());
        if format == ReportFormat::JsonLines {
            assert_eq!(back, report);
        }
    }
    assert!(matches!(
        emit_report(
            &report,
            dir.path().join("missing/dir/r.csv"),
            ReportFormat::Csv
        ),
        Err(Error::Io { .. })
    ));
    assert!(matches!(
        parse_report("nonsense", ReportFormat::Csv),
        Err(Error::Format(_))
    ));
}

#[test]
fn one_by_one_grid_equals_scalar_evaluation() {
    let train_set = data(6, 1);
    let val_set = data(2, 2);
    let test_set = data(3, 3);
    let model_cfg = ModelConfig::new(4, 1, 1, 8, 3);
    let tcfg = TrainConfig {
        lr: 1e-3,
        max_epochs: 2,
        batch_size: 6,
        ..TrainConfig::default()
    };
    let opts = EvalOptions::default();
    let grid = cross_rate_grid(
        &train_set,
        &val_set,
        &test_set,
        &[20.0],
        &[20.0],
        &model_cfg,
        &tcfg,
        &opts,
        5,
    )
    .unwrap();
    let outcome = train(
        SrvModel::new(model_cfg.clone()).unwrap(),
        &train_set,
        &val_set,
        &tcfg,
        &AugmentConfig::fixed_rate(20.0),
    )
    .unwrap();
    let scalar = evaluate(&outcome.best, &test_set, &[20.0], &opts, 5).unwrap();
    assert_eq!(grid.accuracy, vec![vec![scalar.avg_accuracy]]);
    assert!(matches!(
        cross_rate_grid(
            &train_set,
            &val_set,
            &test_set,
            &[],
            &[20.0],
            &model_cfg,
            &tcfg,
            &opts,
            5
        ),
        Err(Error::Config(_))
    ));
}
