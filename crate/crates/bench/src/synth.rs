//! Seeded synthetic series (sine / trend / autoregressive mixtures) for
//! smoke grids and the directional reproduction suite.

use bamoes::data::Series;
use bamoes::rng::{DetRng, UniformStream};

/// Standard normal draw via Box-Muller from the deterministic stream.
fn gaussian(stream: &mut DetRng) -> f64 {
    let u1 = stream.next_f64().max(1e-12);
    let u2 = stream.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One synthetic series. The family cycles with `index`; all three are
/// nonstationary mixtures whose tail drifts away from the training range,
/// the regime where interval width has to react to unfamiliar inputs:
/// 0: sine with growing amplitude + noise;
/// 1: trend with a late slope break + AR(1) noise;
/// 2: sine * (1 + trend) + AR(1) noise.
pub fn synth_series(
    index: usize,
    len: usize,
    horizon: usize,
    lag: usize,
    seed: u64,
) -> Series<f64> {
    let mut stream = DetRng::for_task(seed, &["synth"], index as u64);
    let family = index % 3;
    let period = 12.0 + 8.0 * stream.next_f64();
    let amp = 1.0 + stream.next_f64();
    let slope = 0.02 + 0.04 * stream.next_f64();
    let phi = 0.5 + 0.3 * stream.next_f64();
    let noise = 0.08 + 0.12 * stream.next_f64();
    let growth = 1.0 + 1.5 * stream.next_f64();
    let break_at = (0.75 + 0.1 * stream.next_f64()) * len as f64;

    let mut ar = 0.0;
    let values = (0..len)
        .map(|t| {
            let tf = t as f64;
            let scale = 1.0 + tf / len as f64; // noise grows toward the tail
            ar = phi * ar + gaussian(&mut stream) * noise * scale;
            let wave = amp * (2.0 * std::f64::consts::PI * tf / period).sin();
            match family {
                0 => {
                    wave * (1.0 + growth * tf / len as f64) + gaussian(&mut stream) * noise * scale
                }
                1 => {
                    let bent = if tf < break_at {
                        slope * tf
                    } else {
                        slope * break_at + 4.0 * slope * (tf - break_at)
                    };
                    bent + ar
                }
                _ => wave * (1.0 + slope * tf) + ar,
            }
        })
        .collect();

    Series {
        id: format!("synth-{index:02}"),
        values,
        horizon_h: horizon,
        lag_k: lag,
    }
}

/// A deterministic suite of `count` mixed series.
pub fn standard_suite(
    count: usize,
    len: usize,
    horizon: usize,
    lag: usize,
    seed: u64,
) -> Vec<Series<f64>> {
    (0..count)
        .map(|i| synth_series(i, len, horizon, lag, seed))
        .collect()
}

/// Write a suite as the dataset + metadata CSV pair the CLI consumes.
pub fn write_suite_csv(
    series: &[Series<f64>],
    data_path: &std::path::Path,
    meta_path: &std::path::Path,
) -> std::io::Result<()> {
    let mut data = String::from("series_id,t,value\n");
    let mut meta = String::from("series_id,horizon,lag\n");
    for s in series {
        for (t, v) in s.values.iter().enumerate() {
            data.push_str(&format!("{},{},{}\n", s.id, t, v));
        }
        meta.push_str(&format!("{},{},{}\n", s.id, s.horizon_h, s.lag_k));
    }
    std::fs::write(data_path, data)?;
    std::fs::write(meta_path, meta)
}
