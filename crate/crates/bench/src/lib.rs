//! Shared inputs for the criterion benches.

use vitalguard::bpnet::Sample;
use vitalguard::predictor::{fit_normalizer, make_windows, LOOKBACK};
use vitalguard::signals::load_fixtures;

/// Normalized one-step windows over the built-in heart-rate training rows.
pub fn fixture_samples() -> Vec<Sample> {
    let rows = load_fixtures().training_series();
    let all: Vec<f64> = rows.iter().flatten().copied().collect();
    let norm = fit_normalizer(&all).expect("fixture rows are not constant");
    rows.iter()
        .flat_map(|r| make_windows(r, LOOKBACK).expect("rows are longer than the lookback"))
        .map(|w| Sample {
            input: w.input.iter().map(|&x| norm.normalize(x)).collect(),
            target: norm.normalize(w.target),
        })
        .collect()
}
