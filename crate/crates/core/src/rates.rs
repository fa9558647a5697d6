//! Standard evaluation rate lists (Hz) for the four reference CSI datasets.

pub const SRV_ACTIVITY: [f64; 12] = [
    5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0,
];
pub const SRV_GESTURE: [f64; 12] = SRV_ACTIVITY;
pub const SHARP: [f64; 12] = [
    5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 90.0, 100.0, 120.0, 140.0, 160.0, 173.0,
];
pub const WIDAR: [f64; 12] = [
    5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0, 200.0, 400.0, 600.0, 800.0, 1000.0,
];

/// `low, low + step, ...` for every value not above `upper`.
pub fn range(low: f64, upper: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(step > 0.0) || !(low > 0.0) || upper < low {
        return out;
    }
    let slack = upper.abs() * 1e-12;
    let mut k = 0u32;
    loop {
        let r = low + step * f64::from(k);
        if r > upper + slack {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}
