//! Seeded corruption of clean CSI with recorded spike positions.

use ndarray::Array2;
use rand::Rng;
use srv_core::csi::CsiInstance;
use srv_core::seed::rng_from_seed;

pub struct Corrupted {
    pub instance: CsiInstance,
    /// `bad[i][j]` is true where a spike or dropout was written.
    pub bad: Vec<Vec<bool>>,
}

/// Clean amplitudes in [1, 3], then scattered spikes, occasional NaN
/// dropouts, and with some probability heavily corrupted rows and columns.
pub fn corrupted_instance(seed: u64) -> Corrupted {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(20..60);
    let c = rng.random_range(6..16);
    let mut values = Array2::from_shape_fn((n, c), |_| rng.random_range(1.0f32..3.0));
    let mut bad = vec![vec![false; c]; n];
    let scattered = rng.random_range(0..(n * c) / 20 + 1);
    for _ in 0..scattered {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..c));
        bad[i][j] = true;
    }
    if rng.random_bool(0.6) {
        for _ in 0..rng.random_range(1..4) {
            let i = rng.random_range(0..n);
            for j in 0..c {
                if rng.random_bool(0.5) {
                    bad[i][j] = true;
                }
            }
        }
    }
    if rng.random_bool(0.5) {
        // columns beyond temporal repair; rows hit in several of them drop
        let hopeless = rng.random_range(2..=c / 2);
        for j in 0..hopeless {
            for row in bad.iter_mut() {
                if rng.random_bool(0.4) {
                    row[j] = true;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..c {
            if bad[i][j] {
                values[[i, j]] = if rng.random_bool(0.2) { f32::NAN } else { 1e6 };
            }
        }
    }
    let ts = (0..n).map(|i| i as f64 / n as f64).collect();
    Corrupted {
        instance: CsiInstance::new(values, ts, 1.0, Some(0)).unwrap(),
        bad,
    }
}
