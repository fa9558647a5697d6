mod support;

use ndarray::Array2;
use proptest::prelude::*;
use srv_core::csi::CsiInstance;
use srv_core::seed::rng_from_seed;
use srv_core::traffic::{resample, resampled_len, synth_dataset, ResampleMode, SynthConfig};
use srv_core::Error;
use support::nearest_centroid_accuracy;

fn instance(n: usize, duration: f64) -> CsiInstance {
    let values = Array2::from_shape_fn((n, 3), |(i, j)| (i * 3 + j) as f32);
    let ts = (0..n).map(|i| i as f64 * duration / n as f64).collect();
    CsiInstance::new(values, ts, duration, Some(0)).unwrap()
}

#[test]
fn clean_synthetic_classes_are_separable() {
    let cfg = SynthConfig {
        noise_sigma: 0.0,
        instances_per_class: 4,
        ..SynthConfig::default()
    };
    let ds = synth_dataset(&cfg).unwrap();
    let acc = nearest_centroid_accuracy(ds.instances(), ds.instances(), 3);
    assert_eq!(acc, 1.0);
}

#[test]
fn noisy_synthetic_classes_stay_separable() {
    let train = synth_dataset(&SynthConfig {
        instances_per_class: 20,
        ..SynthConfig::default()
    })
    .unwrap();
    let test = synth_dataset(&SynthConfig {
        instances_per_class: 20,
        seed: 99,
        ..SynthConfig::default()
    })
    .unwrap();
    assert_eq!(
        nearest_centroid_accuracy(train.instances(), test.instances(), 3),
        1.0
    );
}

#[test]
fn synth_rejects_single_class() {
    let cfg = SynthConfig {
        num_classes: 1,
        ..SynthConfig::default()
    };
    assert!(matches!(synth_dataset(&cfg), Err(Error::Config(_))));
}

#[test]
fn full_window_counts() {
    let inst = instance(600, 1.0);
    let mut rng = rng_from_seed(3);
    let out = resample(&inst, 100.0, ResampleMode::StochasticIntervals, &mut rng).unwrap();
    assert_eq!(out.len(), 100);
    assert!((out.rate() - 100.0).abs() < 1e-9);
    assert!(matches!(
        resample(&inst, 601.0, ResampleMode::UniformIntervals, &mut rng),
        Err(Error::RateTooHigh { .. })
    ));
}

#[test]
fn resampling_is_deterministic_per_seed() {
    let inst = instance(300, 1.0);
    let a = resample(
        &inst,
        25.0,
        ResampleMode::StochasticIntervals,
        &mut rng_from_seed(8),
    )
    .unwrap();
    let b = resample(
        &inst,
        25.0,
        ResampleMode::StochasticIntervals,
        &mut rng_from_seed(8),
    )
    .unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn resample_invariants(n in 2usize..400, frac in 0.001f64..=1.0, duration in 0.1f64..5.0, seed: u64, stochastic: bool) {
        let inst = instance(n, duration);
        let rate = inst.rate();
        let target = frac * rate;
        let mode = if stochastic { ResampleMode::StochasticIntervals } else { ResampleMode::UniformIntervals };
        let out = resample(&inst, target, mode, &mut rng_from_seed(seed)).unwrap();
        let expected = ((n as f64 * target / rate).round() as usize).max(2);
        prop_assert_eq!(out.len(), expected);
        let ts = out.timestamps();
        prop_assert!(ts.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(ts[0], inst.timestamps()[0]);
        prop_assert_eq!(ts[ts.len() - 1], inst.timestamps()[n - 1]);
        prop_assert_eq!(out.duration(), duration);
        prop_assert_eq!(out.label(), inst.label());
        // every kept row is an unmodified source row
        for (k, t) in ts.iter().enumerate() {
            let i = inst.timestamps().iter().position(|s| s == t).unwrap();
            prop_assert_eq!(out.values().row(k), inst.values().row(i));
        }
    }

    #[test]
    fn two_step_count_matches_direct(n in 10usize..600, a in 0.05f64..=1.0, b in 0.05f64..=1.0, seed: u64) {
        let inst = instance(n, 1.0);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let rate = inst.rate();
        let mut rng = rng_from_seed(seed);
        let mid = resample(&inst, hi * rate, ResampleMode::StochasticIntervals, &mut rng).unwrap();
        let target = (lo * rate).min(mid.rate());
        let twice = resample(&mid, target, ResampleMode::StochasticIntervals, &mut rng).unwrap();
        let direct = resampled_len(n, rate, target);
        prop_assert_eq!(twice.len(), direct);
    }
}
