//! One-step-ahead forecasting: the previous eight readings of a channel
//! predict the next one.
//!
//! Training pipeline: sliding windows per series, a channel-wide min-max
//! normalizer, genetic search for the starting weights, then momentum
//! backpropagation from the best chromosome.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::bpnet::{self, NetConfig, NetParams, Sample, TrainConfig};
use crate::error::{Error, Result};
use crate::ga::{self, GaConfig};
use crate::signals::VitalChannel;

pub const LOOKBACK: usize = 8;

/// Inference inputs are clamped to this range after normalization.
pub const CLAMP_RANGE: (f64, f64) = (-0.2, 1.2);

pub type WindowPair = Sample;

static CLAMP_WARNED: [AtomicBool; 4] = [const { AtomicBool::new(false) }; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub min: f64,
    pub max: f64,
}

impl Normalizer {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InsufficientData(format!(
                "normalizer needs max > min, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.min) / self.span()
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        z * self.span() + self.min
    }
}

pub fn fit_normalizer(values: &[f64]) -> Result<Normalizer> {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Normalizer::new(min, max)
}

/// `len - lookback` pairs; pair `i` maps `series[i..i+lookback]` to
/// `series[i+lookback]`.
pub fn make_windows(series: &[f64], lookback: usize) -> Result<Vec<WindowPair>> {
    if lookback == 0 || series.len() <= lookback {
        return Err(Error::InsufficientData(format!(
            "series of length {} is too short for lookback {lookback}",
            series.len()
        )));
    }
    Ok(series
        .windows(lookback + 1)
        .map(|w| Sample {
            input: w[..lookback].to_vec(),
            target: w[lookback],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub hidden_nodes: usize,
    pub seed: u64,
    pub epochs_run: usize,
    pub final_error_rate: f64,
    /// Milliseconds since the epoch; 0 when not stamped.
    pub trained_at: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub channel: VitalChannel,
    pub net: NetParams,
    pub normalizer: Normalizer,
    pub meta: ModelMeta,
}

/// Windows over every series long enough to yield one, normalized.
fn normalized_windows(series_set: &[Vec<f64>], norm: &Normalizer) -> Vec<Sample> {
    series_set
        .iter()
        .filter(|s| s.len() > LOOKBACK)
        .flat_map(|s| make_windows(s, LOOKBACK).unwrap_or_default())
        .map(|w| Sample {
            input: w.input.iter().map(|&x| norm.normalize(x)).collect(),
            target: norm.normalize(w.target),
        })
        .collect()
}

pub fn train_model(
    channel: VitalChannel,
    series_set: &[Vec<f64>],
    net_config: NetConfig,
    ga_config: &GaConfig,
    train_config: &TrainConfig,
) -> Result<Model> {
    if net_config.n_in != LOOKBACK {
        return Err(Error::Config(format!(
            "forecasting network needs {LOOKBACK} inputs, got {}",
            net_config.n_in
        )));
    }
    let all: Vec<f64> = series_set.iter().flatten().copied().collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training series"));
    }
    let normalizer = fit_normalizer(&all)?;
    let samples = normalized_windows(series_set, &normalizer);
    if samples.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} training windows, need at least 10",
            samples.len()
        )));
    }

    let init = if ga_config.max_generations == 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(train_config.rng_seed);
        let (lo, hi) = ga_config.gene_bounds;
        NetParams::random_uniform(net_config, lo, hi, &mut rng)
    } else {
        ga::evolve(net_config, ga_config, &samples)?.best
    };

    let tcfg = TrainConfig {
        error_scale: normalizer.span() / channel.normal_width(),
        ..train_config.clone()
    };
    let (net, history) = bpnet::train(net_config, &tcfg, init, &samples)?;
    Ok(Model {
        channel,
        net,
        normalizer,
        meta: ModelMeta {
            hidden_nodes: net_config.n_hidden,
            seed: ga_config.rng_seed,
            epochs_run: history.epochs_run,
            final_error_rate: history.final_error_rate,
            trained_at: 0,
        },
    })
}

impl Model {
    fn normalized_input(&self, last8: &[f64]) -> Result<Vec<f64>> {
        if last8.len() != LOOKBACK {
            return Err(Error::Dimension(format!(
                "prediction window has {} values, need {LOOKBACK}",
                last8.len()
            )));
        }
        if last8.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction window"));
        }
        Ok(last8
            .iter()
            .map(|&x| {
                let z = self.normalizer.normalize(x);
                let c = z.clamp(CLAMP_RANGE.0, CLAMP_RANGE.1);
                if c != z {
                    // first occurrence per channel at warn, the rest at debug
                    if !CLAMP_WARNED[self.channel.index()].swap(true, Ordering::Relaxed) {
                        log::warn!("{} input {x} outside the trained range, clamped", self.channel);
                    } else {
                        log::debug!("{} input {x} clamped", self.channel);
                    }
                }
                c
            })
            .collect())
    }

    /// An untrained one-hidden-node model that repeats the latest reading,
    /// to within 1e-9 of the normalizer span. The hidden node runs in the
    /// near-linear part of the sigmoid.
    pub fn persistence(channel: VitalChannel, normalizer: Normalizer) -> Self {
        const SLOPE: f64 = 1e-3;
        let mut net = NetParams::zeros(NetConfig::forecaster(1));
        net.w1[LOOKBACK - 1] = SLOPE;
        net.w2[0] = 4.0 / SLOPE;
        net.b2 = -2.0 / SLOPE;
        Self {
            channel,
            net,
            normalizer,
            meta: ModelMeta {
                hidden_nodes: 1,
                seed: 0,
                epochs_run: 0,
                final_error_rate: f64::NAN,
                trained_at: 0,
            },
        }
    }

    pub fn predict_next(&self, last8: &[f64]) -> Result<f64> {
        let z = self.net.predict(&self.normalized_input(last8)?)?;
        Ok(self.normalizer.denormalize(z))
    }

    /// Feeds each forecast back as input for `steps` steps. This is an
    /// extrapolation of the one-step model; errors compound with the horizon.
    pub fn predict_horizon(&self, last8: &[f64], steps: usize) -> Result<Vec<f64>> {
        let mut window = last8.to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let next = self.predict_next(&window)?;
            out.push(next);
            window.remove(0);
            window.push(next);
        }
        Ok(out)
    }
}

pub fn predict_next(model: &Model, last8: &[f64]) -> Result<f64> {
    model.predict_next(last8)
}

pub fn predict_horizon(model: &Model, last8: &[f64], steps: usize) -> Result<Vec<f64>> {
    model.predict_horizon(last8, steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub hidden_nodes: usize,
    pub error_rate: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub selected: usize,
}

/// First row meeting `target`, else the lowest error rate.
pub fn select_hidden(rows: &[SweepRow], target: f64) -> Option<usize> {
    rows.iter()
        .find(|r| r.error_rate <= target)
        .or_else(|| rows.iter().min_by(|a, b| a.error_rate.total_cmp(&b.error_rate)))
        .map(|r| r.hidden_nodes)
}

/// Trains one model per candidate hidden-layer size with the same seeds.
pub fn sweep_hidden_nodes(
    candidates: &[usize],
    channel: VitalChannel,
    series_set: &[Vec<f64>],
    ga_config: &GaConfig,
    train_config: &TrainConfig,
) -> Result<Sweep> {
    if candidates.is_empty() {
        return Err(Error::Config("no hidden-node candidates".into()));
    }
    let rows = candidates
        .iter()
        .map(|&h| {
            let m = train_model(channel, series_set, NetConfig::forecaster(h), ga_config, train_config)?;
            Ok(SweepRow {
                hidden_nodes: h,
                error_rate: m.meta.final_error_rate,
                epochs_run: m.meta.epochs_run,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = select_hidden(&rows, train_config.target_error_rate).expect("rows is non-empty");
    Ok(Sweep { rows, selected })
}

// ---- model files ----

const MAGIC: &str = "vitalguard-model";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

fn digest(payload: &str) -> String {
    Sha256::digest(payload.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Model {
    /// Versioned text encoding; every float written with 17 significant
    /// digits so it parses back bit-exact.
    pub fn to_text(&self) -> String {
        let cfg = self.net.config;
        let mut out = format!("{MAGIC} v1 {} {}\n", self.channel.key(), cfg.n_hidden);
        push_row(&mut out, "normalizer", &[self.normalizer.min, self.normalizer.max]);
        let m = &self.meta;
        out.push_str(&format!(
            "meta seed={} epochs={} error_rate={} trained_at={}\n",
            m.seed,
            m.epochs_run,
            fmt_f64(m.final_error_rate),
            m.trained_at
        ));
        for row in self.net.w1.chunks(cfg.n_in) {
            push_row(&mut out, "w1", row);
        }
        push_row(&mut out, "b1", &self.net.b1);
        push_row(&mut out, "w2", &self.net.w2);
        push_row(&mut out, "b2", &[self.net.b2]);
        let sum = digest(&out);
        out.push_str(&format!("checksum {sum}\n"));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let corrupt = |msg: &str| Error::CorruptModel(msg.to_string());
        let header = text.lines().next().ok_or_else(|| corrupt("empty file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 || head[0] != MAGIC {
            return Err(corrupt("bad header"));
        }
        if head[1] != "v1" {
            return Err(Error::VersionMismatch {
                found: head[1].trim_start_matches('v').to_string(),
            });
        }

        let body_end = text.rfind("checksum ").ok_or_else(|| corrupt("missing checksum"))?;
        let (payload, tail) = text.split_at(body_end);
        let stated = tail.trim_start_matches("checksum ").trim();
        if !payload.ends_with('\n') || stated != digest(payload) {
            return Err(corrupt("checksum mismatch"));
        }

        let channel: VitalChannel = head[2].parse().map_err(|_| corrupt("unknown channel"))?;
        let hidden: usize = head[3].parse().map_err(|_| corrupt("bad hidden size"))?;
        let cfg = NetConfig::forecaster(hidden);
        cfg.validate()?;

        let num = |s: &str| s.parse::<f64>().map_err(|_| corrupt(&format!("bad number {s:?}")));
        let mut normalizer = None;
        let mut meta = None;
        let (mut w1, mut b1, mut w2, mut b2) = (Vec::new(), None, None, None);
        for line in payload.lines().skip(1) {
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or("");
            let rest: Vec<&str> = parts.collect();
            match tag {
                "normalizer" => {
                    if rest.len() != 2 {
                        return Err(Error::Dimension("normalizer needs min and max".into()));
                    }
                    normalizer = Some(Normalizer::new(num(rest[0])?, num(rest[1])?)?);
                }
                "meta" => {
                    let field = |key: &str| {
                        rest.iter()
                            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                            .ok_or_else(|| corrupt(&format!("meta lacks {key}")))
                    };
                    let int = |key: &str| -> Result<u64> {
                        field(key)?.parse().map_err(|_| corrupt(&format!("bad meta {key}")))
                    };
                    meta = Some(ModelMeta {
                        hidden_nodes: hidden,
                        seed: int("seed")?,
                        epochs_run: int("epochs")? as usize,
                        final_error_rate: num(field("error_rate")?)?,
                        trained_at: int("trained_at")?,
                    });
                }
                "w1" => w1.push(rest.iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?),
                "b1" => b1 = Some(rest.iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?),
                "w2" => w2 = Some(rest.iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?),
                "b2" => {
                    if rest.len() != 1 {
                        return Err(Error::Dimension("b2 must be a scalar".into()));
                    }
                    b2 = Some(num(rest[0])?);
                }
                other => return Err(corrupt(&format!("unknown record {other:?}"))),
            }
        }

        if w1.len() != hidden || w1.iter().any(|r| r.len() != cfg.n_in) {
            return Err(Error::Dimension(format!("w1 is not {hidden}x{}", cfg.n_in)));
        }
        let b1 = b1.ok_or_else(|| corrupt("missing b1"))?;
        let w2 = w2.ok_or_else(|| corrupt("missing w2"))?;
        if b1.len() != hidden || w2.len() != hidden {
            return Err(Error::Dimension(format!("b1/w2 length differs from {hidden}")));
        }
        let net = NetParams {
            config: cfg,
            w1: w1.concat(),
            b1,
            w2,
            b2: b2.ok_or_else(|| corrupt("missing b2"))?,
        };
        Ok(Model {
            channel,
            net,
            normalizer: normalizer.ok_or_else(|| corrupt("missing normalizer"))?,
            meta: meta.ok_or_else(|| corrupt("missing meta"))?,
        })
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_text())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    Model::from_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::load_fixtures;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn windows_from_fixture_row() {
        let row = load_fixtures().training_rows[0];
        let w = make_windows(&row, LOOKBACK).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].input, vec![79., 80., 80., 81., 82., 80., 81., 80.]);
        assert_eq!(w[0].target, 81.);
        assert_eq!(w[1].input, vec![80., 80., 81., 82., 80., 81., 80., 81.]);
        assert_eq!(w[1].target, 81.);
        assert_eq!(make_windows(&row[..9], LOOKBACK).unwrap().len(), 1);
        assert!(make_windows(&row[..8], LOOKBACK).is_err());
    }

    #[test]
    fn normalizer_examples() {
        let n = fit_normalizer(&[0.0, 10.0]).unwrap();
        assert_eq!(n.normalize(5.0), 0.5);
        assert!(fit_normalizer(&[3.0, 3.0]).is_err());

        let all: Vec<f64> = load_fixtures().training_rows.iter().flatten().copied().collect();
        let n = fit_normalizer(&all).unwrap();
        assert_eq!((n.min, n.max), (72.0, 98.0));
        assert_eq!(n.normalize(85.0), 0.5);
    }

    #[test]
    fn normalizer_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Normalizer::new(72.0, 98.0).unwrap();
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-500.0..500.0);
            let back = n.denormalize(n.normalize(x));
            assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    fn random_model(rng: &mut ChaCha8Rng, hidden: usize) -> Model {
        let lo = rng.gen_range(20.0..100.0);
        Model {
            channel: VitalChannel::ALL[rng.gen_range(0..4)],
            net: NetParams::random_uniform(NetConfig::forecaster(hidden), -2.0, 2.0, rng),
            normalizer: Normalizer::new(lo, lo + rng.gen_range(1.0..50.0)).unwrap(),
            meta: ModelMeta {
                hidden_nodes: hidden,
                seed: rng.gen(),
                epochs_run: rng.gen_range(0..10_000),
                final_error_rate: rng.gen(),
                trained_at: rng.gen_range(0..u64::MAX / 2),
            },
        }
    }

    #[test]
    fn constant_net_predicts_constant() {
        let norm = Normalizer::new(60.0, 100.0).unwrap();
        let mut net = NetParams::zeros(NetConfig::forecaster(4));
        net.w1.fill(0.3);
        net.b2 = norm.normalize(77.0);
        let m = Model {
            channel: VitalChannel::Hr,
            net,
            normalizer: norm,
            meta: ModelMeta {
                hidden_nodes: 4,
                seed: 0,
                epochs_run: 0,
                final_error_rate: 0.0,
                trained_at: 0,
            },
        };
        for w in [[70.0; 8], [90.0, 80.0, 85.0, 60.0, 100.0, 81.0, 82.0, 83.0]] {
            assert!((m.predict_next(&w).unwrap() - 77.0).abs() < 1e-12);
        }
        assert_eq!(m.predict_horizon(&[70.0; 8], 3).unwrap().len(), 3);
        assert!(m.predict_next(&[70.0; 7]).is_err());
        assert!(m.predict_next(&[f64::NAN; 8]).is_err());
    }

    #[test]
    fn persistence_baseline_on_first_test_row() {
        let row = load_fixtures().test_rows[0];
        assert_eq!((row[8] - row[7]).abs(), 2.0);
    }

    #[test]
    fn prediction_consistent_under_affine_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_model(&mut rng, 6);
        let window: Vec<f64> = (0..8).map(|i| m.normalizer.min + 0.1 * i as f64 * m.normalizer.span()).collect();
        let (a, b) = (2.5, -13.0);
        let mut scaled = m.clone();
        scaled.normalizer = Normalizer::new(a * m.normalizer.min + b, a * m.normalizer.max + b).unwrap();
        let scaled_window: Vec<f64> = window.iter().map(|x| a * x + b).collect();
        let p = m.predict_next(&window).unwrap();
        let q = scaled.predict_next(&scaled_window).unwrap();
        assert!((q - (a * p + b)).abs() < 1e-9 * q.abs().max(1.0));
    }

    #[test]
    fn model_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..100 {
            let m = random_model(&mut rng, 1 + i % 30);
            let back = Model::from_text(&m.to_text()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn model_file_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let text = random_model(&mut rng, 5).to_text();

        let truncated = &text[..text.len() / 2];
        assert!(matches!(Model::from_text(truncated), Err(Error::CorruptModel(_))));

        let v99 = text.replacen(" v1 ", " v99 ", 1);
        match Model::from_text(&v99) {
            Err(Error::VersionMismatch { found }) => assert_eq!(found, "99"),
            other => panic!("{other:?}"),
        }

        let tampered = text.replacen("b2 ", "b2 1", 1);
        assert!(matches!(Model::from_text(&tampered), Err(Error::CorruptModel(_))));

        assert!(Model::from_text("").is_err());
    }

    #[test]
    fn model_file_dimension_check() {
        // a consistent checksum over a payload with a missing w1 row
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let text = random_model(&mut rng, 3).to_text();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let w1_row = lines.iter().position(|l| l.starts_with("w1")).unwrap();
        lines.remove(w1_row);
        let payload = lines.join("\n") + "\n";
        let doctored = format!("{payload}checksum {}\n", digest(&payload));
        assert!(matches!(Model::from_text(&doctored), Err(Error::Dimension(_))));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vgm");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_model(&mut rng, 7);
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        for i in 0..1000 {
            let w: Vec<f64> = (0..8).map(|j| 50.0 + ((i * 7 + j * 13) % 100) as f64 * 0.5).collect();
            assert_eq!(m.predict_next(&w).unwrap().to_bits(), back.predict_next(&w).unwrap().to_bits());
        }
    }

    #[test]
    fn selection_rule() {
        let row = |h, e| SweepRow {
            hidden_nodes: h,
            error_rate: e,
            epochs_run: 0,
        };
        let rows = [row(12, 0.0071), row(16, 0.0066), row(25, 0.0044), row(30, 0.0040)];
        assert_eq!(select_hidden(&rows, 0.005), Some(25));
        assert_eq!(select_hidden(&rows[..2], 0.005), Some(16));
        assert_eq!(select_hidden(&rows[..1], 0.005), Some(12));
        assert_eq!(select_hidden(&[], 0.005), None);
    }

    fn quick_configs(seed: u64) -> (GaConfig, TrainConfig) {
        (
            GaConfig {
                population_size: 10,
                max_generations: 5,
                rng_seed: seed,
                ..GaConfig::default()
            },
            TrainConfig {
                max_epochs: 300,
                rng_seed: seed,
                ..TrainConfig::default()
            },
        )
    }

    #[test]
    fn trains_on_fixtures_with_requested_size() {
        let series = load_fixtures().training_series();
        let (ga, tc) = quick_configs(1);
        let m = train_model(VitalChannel::Hr, &series, NetConfig::forecaster(25), &ga, &tc).unwrap();
        assert_eq!(m.meta.hidden_nodes, 25);
        assert_eq!(m.net.config, NetConfig::forecaster(25));
        assert_eq!((m.normalizer.min, m.normalizer.max), (72.0, 98.0));
        assert!(m.meta.final_error_rate.is_finite());

        let no_ga = GaConfig {
            max_generations: 0,
            ..ga
        };
        let m = train_model(VitalChannel::Hr, &series, NetConfig::forecaster(5), &no_ga, &tc).unwrap();
        assert!(m.predict_next(&[80.0; 8]).unwrap().is_finite());
    }

    #[test]
    fn identical_seeds_identical_files() {
        let series = load_fixtures().training_series();
        let (ga, tc) = quick_configs(3);
        let a = train_model(VitalChannel::Hr, &series, NetConfig::forecaster(6), &ga, &tc).unwrap();
        let b = train_model(VitalChannel::Hr, &series, NetConfig::forecaster(6), &ga, &tc).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn too_little_data() {
        let (ga, tc) = quick_configs(0);
        let series = vec![(0..12).map(f64::from).collect::<Vec<_>>()];
        assert!(matches!(
            train_model(VitalChannel::Hr, &series, NetConfig::forecaster(3), &ga, &tc),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn sweep_single_candidate() {
        let series = load_fixtures().training_series();
        let (ga, tc) = quick_configs(2);
        let s = sweep_hidden_nodes(&[4], VitalChannel::Hr, &series, &ga, &tc).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.selected, 4);
        assert!(sweep_hidden_nodes(&[], VitalChannel::Hr, &series, &ga, &tc).is_err());
    }

    #[test]
    fn sweep_picks_first_candidate_meeting_target() {
        let series = load_fixtures().training_series();
        let (ga, mut tc) = quick_configs(3);
        let loose = sweep_hidden_nodes(&[2, 6], VitalChannel::Hr, &series, &ga, &tc).unwrap();
        let (a, b) = (loose.rows[0].error_rate, loose.rows[1].error_rate);
        assert_ne!(a, b);
        // a target between the two error rates admits exactly one candidate
        tc.target_error_rate = 0.5 * (a + b);
        let s = sweep_hidden_nodes(&[2, 6], VitalChannel::Hr, &series, &ga, &tc).unwrap();
        assert_eq!(s.selected, if a < b { 2 } else { 6 });
        // no candidate meets a zero target: the lowest error rate wins
        tc.target_error_rate = 0.0;
        let s = sweep_hidden_nodes(&[2, 6], VitalChannel::Hr, &series, &ga, &tc).unwrap();
        assert_eq!(s.selected, if a < b { 2 } else { 6 });
    }

    proptest! {
        #[test]
        fn window_count(len in 9usize..200) {
            let series: Vec<f64> = (0..len).map(|i| i as f64).collect();
            let w = make_windows(&series, LOOKBACK).unwrap();
            prop_assert_eq!(w.len(), len - 8);
            prop_assert_eq!(w.last().unwrap().target, (len - 1) as f64);
        }
    }
}
