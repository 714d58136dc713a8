//! Vital-sign domain types, the CSV record format, the embedded heart-rate
//! fixtures and a seeded synthetic trace generator.
//!
//! Record format (one line per reading, `.` as decimal point):
//!
//! ```text
//! driver_id,timestamp_ms,hr,rr,t,spo2
//! d1,1000,82,16,36.5,97
//! ```

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Nominal sensor cadence.
pub const CADENCE_MS: i64 = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VitalChannel {
    /// Heart rate, beats/min.
    Hr,
    /// Respiratory rate, breaths/min.
    Rr,
    /// Body temperature, °C.
    T,
    /// Blood oxygen saturation, percent.
    Spo2,
}

impl VitalChannel {
    pub const ALL: [VitalChannel; 4] = [Self::Hr, Self::Rr, Self::T, Self::Spo2];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lower-case key used in files and on the command line.
    pub fn key(self) -> &'static str {
        match self {
            Self::Hr => "hr",
            Self::Rr => "rr",
            Self::T => "t",
            Self::Spo2 => "spo2",
        }
    }

    /// Range accepted at ingestion. Wider than the normal bands so that
    /// abnormal but physically real readings get through.
    pub fn plausibility(self) -> (f64, f64) {
        match self {
            Self::Hr => (20.0, 250.0),
            Self::Rr => (2.0, 60.0),
            Self::T => (30.0, 43.0),
            Self::Spo2 => (50.0, 100.0),
        }
    }

    /// Normal thresholds from the clinical reference table.
    pub fn normal_range(self) -> (f64, f64) {
        match self {
            Self::Hr => (60.0, 100.0),
            Self::Rr => (12.0, 17.0),
            Self::T => (36.0, 37.3),
            Self::Spo2 => (93.0, 100.0),
        }
    }

    pub fn normal_width(self) -> f64 {
        let (lo, hi) = self.normal_range();
        hi - lo
    }
}

impl fmt::Display for VitalChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hr => "HR",
            Self::Rr => "RR",
            Self::T => "T",
            Self::Spo2 => "SPO2",
        })
    }
}

impl FromStr for VitalChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hr" => Ok(Self::Hr),
            "rr" => Ok(Self::Rr),
            "t" | "temp" => Ok(Self::T),
            "spo2" => Ok(Self::Spo2),
            other => Err(Error::Config(format!("unknown channel {other:?}"))),
        }
    }
}

/// One timestamped reading of all four channels for one driver.
#[derive(Debug, Clone, PartialEq)]
pub struct VitalSample {
    pub driver_id: String,
    pub timestamp_ms: i64,
    pub hr: f64,
    pub rr: f64,
    pub t: f64,
    pub spo2: f64,
}

impl VitalSample {
    pub fn get(&self, channel: VitalChannel) -> f64 {
        match channel {
            VitalChannel::Hr => self.hr,
            VitalChannel::Rr => self.rr,
            VitalChannel::T => self.t,
            VitalChannel::Spo2 => self.spo2,
        }
    }

    pub fn set(&mut self, channel: VitalChannel, value: f64) {
        match channel {
            VitalChannel::Hr => self.hr = value,
            VitalChannel::Rr => self.rr = value,
            VitalChannel::T => self.t = value,
            VitalChannel::Spo2 => self.spo2 = value,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.hr, self.rr, self.t, self.spo2]
    }

    pub fn validate(&self) -> Result<()> {
        for ch in VitalChannel::ALL {
            check_plausible(ch, self.get(ch), &format_value(self.get(ch)))?;
        }
        Ok(())
    }
}

/// Renders the record line (without newline). Vitals use at most two
/// fraction digits with trailing zeros trimmed.
impl fmt::Display for VitalSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.driver_id,
            self.timestamp_ms,
            format_value(self.hr),
            format_value(self.rr),
            format_value(self.t),
            format_value(self.spo2)
        )
    }
}

/// Fixed decimal rendering: two fraction digits, trailing zeros removed.
pub fn format_value(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn check_plausible(channel: VitalChannel, value: f64, text: &str) -> Result<()> {
    let (lo, hi) = channel.plausibility();
    if !(lo..=hi).contains(&value) {
        return Err(Error::Implausible {
            channel,
            text: text.to_string(),
            lo,
            hi,
        });
    }
    Ok(())
}

const FIELD_NAMES: [&str; 6] = ["driver_id", "timestamp_ms", "hr", "rr", "t", "spo2"];

pub fn parse_record(line: &str) -> Result<VitalSample> {
    let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(Error::FieldCount { found: fields.len() });
    }
    if fields[0].is_empty() {
        return Err(Error::Malformed {
            field: FIELD_NAMES[0],
            text: String::new(),
        });
    }
    let timestamp_ms = fields[1].parse::<i64>().map_err(|_| Error::Malformed {
        field: FIELD_NAMES[1],
        text: fields[1].to_string(),
    })?;

    let mut vals = [0.0; 4];
    for (i, ch) in VitalChannel::ALL.into_iter().enumerate() {
        let text = fields[i + 2];
        let v = text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Malformed {
                field: FIELD_NAMES[i + 2],
                text: text.to_string(),
            })?;
        check_plausible(ch, v, text)?;
        vals[i] = v;
    }

    Ok(VitalSample {
        driver_id: fields[0].to_string(),
        timestamp_ms,
        hr: vals[0],
        rr: vals[1],
        t: vals[2],
        spo2: vals[3],
    })
}

/// Reads a record file. Blank lines, `#` comments and a leading
/// `driver_id,...` header are skipped; errors carry the 1-based line number.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<VitalSample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("driver_id") {
            continue;
        }
        let sample = parse_record(trimmed).map_err(|e| Error::Malformed {
            field: "line",
            text: format!("{}: {e}", i + 1),
        })?;
        out.push(sample);
    }
    Ok(out)
}

/// Groups samples by driver (first-seen order) and checks that each
/// driver's timestamps strictly increase.
pub fn split_by_driver(samples: &[VitalSample]) -> Result<Vec<(String, Vec<&VitalSample>)>> {
    let mut groups: Vec<(String, Vec<&VitalSample>)> = Vec::new();
    for s in samples {
        let pos = match groups.iter().position(|(d, _)| *d == s.driver_id) {
            Some(p) => p,
            None => {
                groups.push((s.driver_id.clone(), Vec::new()));
                groups.len() - 1
            }
        };
        let group = &mut groups[pos].1;
        if let Some(prev) = group.last() {
            if s.timestamp_ms <= prev.timestamp_ms {
                return Err(Error::TimestampRegression {
                    previous: prev.timestamp_ms,
                    current: s.timestamp_ms,
                });
            }
        }
        group.push(s);
    }
    Ok(groups)
}

/// Splits one driver's channel into contiguous runs, breaking wherever
/// consecutive timestamps are more than `max_gap_ms` apart.
pub fn contiguous_runs(samples: &[&VitalSample], channel: VitalChannel, max_gap_ms: i64) -> Vec<Vec<f64>> {
    let mut runs: Vec<Vec<f64>> = Vec::new();
    let mut last_ts: Option<i64> = None;
    for s in samples {
        let gap_ok = last_ts.is_some_and(|t| s.timestamp_ms - t <= max_gap_ms);
        if !gap_ok {
            runs.push(Vec::new());
        }
        runs.last_mut().unwrap().push(s.get(channel));
        last_ts = Some(s.timestamp_ms);
    }
    runs
}

// Heart-rate fixtures, beats/min, one reading every 3 s (3 s .. 30 s).
const TRAINING_ROWS: [[f64; 10]; 15] = [
    [79., 80., 80., 81., 82., 80., 81., 80., 81., 81.],
    [96., 98., 98., 97., 95., 91., 90., 90., 89., 90.],
    [93., 92., 88., 86., 83., 79., 75., 72., 73., 73.],
    [80., 84., 85., 85., 84., 83., 83., 82., 81., 82.],
    [89., 88., 88., 91., 92., 92., 89., 87., 84., 86.],
    [79., 81., 83., 84., 86., 86., 84., 82., 78., 79.],
    [97., 95., 94., 95., 95., 94., 94., 93., 92., 91.],
    [86., 87., 87., 86., 85., 82., 81., 79., 79., 80.],
    [84., 85., 86., 86., 87., 87., 87., 85., 82., 83.],
    [93., 95., 96., 98., 97., 96., 95., 94., 92., 93.],
    [90., 93., 95., 93., 90., 87., 84., 81., 77., 80.],
    [83., 81., 81., 80., 79., 80., 81., 83., 84., 83.],
    [87., 90., 91., 90., 89., 88., 86., 85., 85., 86.],
    [84., 86., 88., 89., 90., 89., 88., 86., 86., 88.],
    [94., 95., 96., 98., 97., 95., 94., 94., 93., 93.],
];

const TEST_ROWS: [[f64; 10]; 5] = [
    [82., 80., 79., 80., 81., 82., 84., 86., 88., 86.],
    [80., 79., 78., 77., 77., 78., 79., 79., 80., 80.],
    [91., 90., 88., 87., 86., 84., 85., 84., 85., 87.],
    [93., 91., 91., 90., 90., 91., 92., 94., 95., 93.],
    [73., 74., 73., 74., 74., 73., 72., 71., 71., 72.],
];

/// The 15 training and 5 test heart-rate sequences (10 readings each).
#[derive(Debug, Clone, Copy)]
pub struct FixtureSet {
    pub training_rows: &'static [[f64; 10]; 15],
    pub test_rows: &'static [[f64; 10]; 5],
}

impl FixtureSet {
    pub fn training_series(&self) -> Vec<Vec<f64>> {
        self.training_rows.iter().map(|r| r.to_vec()).collect()
    }

    pub fn test_series(&self) -> Vec<Vec<f64>> {
        self.test_rows.iter().map(|r| r.to_vec()).collect()
    }
}

pub fn load_fixtures() -> FixtureSet {
    FixtureSet {
        training_rows: &TRAINING_ROWS,
        test_rows: &TEST_ROWS,
    }
}

/// Generator profile for one channel: baseline with sinusoidal drift and
/// Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub baseline: f64,
    pub drift_amplitude: f64,
    pub drift_period_s: f64,
    pub noise_sd: f64,
}

impl ChannelProfile {
    pub fn steady(baseline: f64) -> Self {
        Self {
            baseline,
            drift_amplitude: 0.0,
            drift_period_s: 600.0,
            noise_sd: 0.0,
        }
    }

    /// Resting defaults, centered in the score-0 bands.
    pub fn resting(channel: VitalChannel) -> Self {
        let baseline = match channel {
            VitalChannel::Hr => 78.0,
            VitalChannel::Rr => 16.0,
            VitalChannel::T => 36.65,
            VitalChannel::Spo2 => 97.5,
        };
        Self::steady(baseline)
    }

    /// Resting baseline with slow drift and sensor noise. Stays inside the
    /// score-0 band beyond three standard deviations.
    pub fn typical(channel: VitalChannel) -> Self {
        let (baseline, drift_amplitude, noise_sd) = match channel {
            VitalChannel::Hr => (78.0, 4.0, 1.5),
            VitalChannel::Rr => (17.0, 1.0, 0.5),
            VitalChannel::T => (36.65, 0.15, 0.05),
            VitalChannel::Spo2 => (97.5, 0.8, 0.4),
        };
        Self {
            baseline,
            drift_amplitude,
            drift_period_s: 600.0,
            noise_sd,
        }
    }
}

/// A step anomaly: from `onset_ms` for `duration_ms` the channel sits at
/// `level` (plus noise), clamped into `[clamp_lo, clamp_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalySpec {
    pub channel: VitalChannel,
    pub onset_ms: i64,
    pub duration_ms: i64,
    pub level: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
}

impl AnomalySpec {
    /// Anomaly that holds the channel inside the band `[lo, hi]`
    /// (either end may be infinite). The step level is the band midpoint
    /// after intersecting with the plausibility range.
    pub fn in_band(channel: VitalChannel, onset_s: f64, duration_s: f64, lo: f64, hi: f64) -> Self {
        let (plo, phi) = channel.plausibility();
        let lo = lo.max(plo);
        let hi = hi.min(phi);
        Self {
            channel,
            onset_ms: (onset_s * 1000.0).round() as i64,
            duration_ms: (duration_s * 1000.0).round() as i64,
            level: 0.5 * (lo + hi),
            clamp_lo: lo,
            clamp_hi: hi,
        }
    }

    pub fn end_ms(&self) -> i64 {
        self.onset_ms + self.duration_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub driver_id: String,
    pub start_ms: i64,
    pub profiles: [ChannelProfile; 4],
    pub anomalies: Vec<AnomalySpec>,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            driver_id: "d1".to_string(),
            start_ms: 0,
            profiles: VitalChannel::ALL.map(ChannelProfile::resting),
            anomalies: Vec::new(),
            rng_seed: 0,
        }
    }
}

/// Sample trace with per-channel ground-truth abnormal intervals
/// `[start_ms, end_ms)`, indexed by [`VitalChannel::index`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledTrace {
    pub samples: Vec<VitalSample>,
    pub abnormal_intervals: [Vec<(i64, i64)>; 4],
}

impl LabeledTrace {
    pub fn is_abnormal(&self, channel: VitalChannel, timestamp_ms: i64) -> bool {
        self.abnormal_intervals[channel.index()]
            .iter()
            .any(|&(s, e)| (s..e).contains(&timestamp_ms))
    }

    /// Label file body: `channel,start_ms,end_ms` per interval.
    pub fn labels_csv(&self) -> String {
        let mut out = String::new();
        for ch in VitalChannel::ALL {
            for (s, e) in &self.abnormal_intervals[ch.index()] {
                out.push_str(&format!("{},{s},{e}\n", ch.key()));
            }
        }
        out
    }

    pub fn parse_labels(&mut self, text: &str) -> Result<()> {
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Malformed {
                field: "label",
                text: line.to_string(),
            };
            if parts.len() != 3 {
                return Err(bad());
            }
            let ch: VitalChannel = parts[0].parse()?;
            let s: i64 = parts[1].parse().map_err(|_| bad())?;
            let e: i64 = parts[2].parse().map_err(|_| bad())?;
            self.abnormal_intervals[ch.index()].push((s, e));
        }
        Ok(())
    }
}

/// Generates `duration_s` seconds of samples at the nominal cadence.
/// Values are rounded to two decimals so the trace survives a CSV
/// round trip unchanged.
pub fn synth_generate(config: &SynthConfig, duration_s: f64) -> Result<LabeledTrace> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::Config(format!("duration must be positive, got {duration_s}")));
    }
    let duration_ms = (duration_s * 1000.0).round() as i64;
    let mut intervals: [Vec<(i64, i64)>; 4] = Default::default();
    for a in &config.anomalies {
        if a.onset_ms < 0 || a.duration_ms <= 0 || a.end_ms() > duration_ms {
            return Err(Error::Schedule(format!(
                "{} anomaly [{} ms, {} ms) outside trace [0, {duration_ms} ms)",
                a.channel,
                a.onset_ms,
                a.end_ms()
            )));
        }
        if a.clamp_lo > a.clamp_hi {
            return Err(Error::Schedule(format!("{} anomaly has empty band", a.channel)));
        }
        let list = &mut intervals[a.channel.index()];
        if list.iter().any(|&(s, e)| a.onset_ms < e && s < a.end_ms()) {
            return Err(Error::Schedule(format!("overlapping {} anomalies", a.channel)));
        }
        list.push((config.start_ms + a.onset_ms, config.start_ms + a.end_ms()));
    }
    for list in &mut intervals {
        list.sort_unstable();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let n = ((duration_ms + CADENCE_MS - 1) / CADENCE_MS) as usize;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let offset_ms = k as i64 * CADENCE_MS;
        let t_s = offset_ms as f64 / 1000.0;
        let mut vals = [0.0; 4];
        for ch in VitalChannel::ALL {
            let p = &config.profiles[ch.index()];
            // always draw so the noise stream does not depend on the schedule
            let noise = if p.noise_sd > 0.0 {
                Normal::new(0.0, p.noise_sd)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            let anomaly = config
                .anomalies
                .iter()
                .find(|a| a.channel == ch && (a.onset_ms..a.end_ms()).contains(&offset_ms));
            let (plo, phi) = ch.plausibility();
            let v = match anomaly {
                Some(a) => (a.level + noise).clamp(a.clamp_lo, a.clamp_hi),
                None => {
                    let drift = if p.drift_period_s > 0.0 {
                        p.drift_amplitude * (std::f64::consts::TAU * t_s / p.drift_period_s).sin()
                    } else {
                        0.0
                    };
                    p.baseline + drift + noise
                }
            };
            vals[ch.index()] = ((v.clamp(plo, phi)) * 100.0).round() / 100.0;
        }
        samples.push(VitalSample {
            driver_id: config.driver_id.clone(),
            timestamp_ms: config.start_ms + offset_ms,
            hr: vals[0],
            rr: vals[1],
            t: vals[2],
            spo2: vals[3],
        });
    }

    Ok(LabeledTrace {
        samples,
        abnormal_intervals: intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_valid_record() {
        let s = parse_record("d1,1000,82,16,36.5,97").unwrap();
        assert_eq!(
            s,
            VitalSample {
                driver_id: "d1".into(),
                timestamp_ms: 1000,
                hr: 82.0,
                rr: 16.0,
                t: 36.5,
                spo2: 97.0
            }
        );
        let s2 = parse_record("  d1 , 1000, 82 ,16,36.5 , 97 \n").unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn rejects_short_record() {
        let err = parse_record("d1,1000,82,16").unwrap_err();
        assert!(matches!(err, Error::FieldCount { found: 4 }));
        assert_eq!(err.to_string(), "field count 4 != 6");
    }

    #[test]
    fn rejects_implausible_hr() {
        let err = parse_record("d1,1000,300,16,36.5,97").unwrap_err();
        assert!(matches!(err, Error::Implausible { channel: VitalChannel::Hr, .. }));
        assert_eq!(err.to_string(), "HR 300 outside plausibility 20-250");
    }

    #[test]
    fn rejects_non_numeric() {
        let err = parse_record("d1,1000,82,abc,36.5,97").unwrap_err();
        match err {
            Error::Malformed { field, text } => {
                assert_eq!(field, "rr");
                assert_eq!(text, "abc");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(parse_record("d1,1000,NaN,16,36.5,97").is_err());
        assert!(parse_record("d1,10x0,82,16,36.5,97").is_err());
    }

    #[test]
    fn fixtures_match_tables() {
        let f = load_fixtures();
        assert_eq!(f.training_rows[0], [79., 80., 80., 81., 82., 80., 81., 80., 81., 81.]);
        assert_eq!(f.test_rows[0], [82., 80., 79., 80., 81., 82., 84., 86., 88., 86.]);
        assert_eq!(f.test_rows[4], [73., 74., 73., 74., 74., 73., 72., 71., 71., 72.]);
    }

    #[test]
    fn fixture_checksums() {
        // Sums computed once by an independent script over the source tables.
        let f = load_fixtures();
        let train: Vec<f64> = f.training_rows.iter().flatten().copied().collect();
        let test: Vec<f64> = f.test_rows.iter().flatten().copied().collect();
        assert_eq!(train.len(), 150);
        assert_eq!(test.len(), 50);
        assert_eq!(train.iter().sum::<f64>(), 13_048.0);
        assert_eq!(test.iter().sum::<f64>(), 4_129.0);
    }

    #[test]
    fn zero_noise_trace_is_baseline() {
        let trace = synth_generate(&SynthConfig::default(), 300.0).unwrap();
        assert_eq!(trace.samples.len(), 100);
        assert!(trace.samples.iter().all(|s| s.hr == 78.0));
        assert_eq!(trace.samples[1].timestamp_ms - trace.samples[0].timestamp_ms, CADENCE_MS);
    }

    #[test]
    fn same_seed_same_trace() {
        let mut cfg = SynthConfig::default();
        for p in &mut cfg.profiles {
            p.noise_sd = 0.5;
            p.drift_amplitude = 1.0;
        }
        cfg.rng_seed = 42;
        let a = synth_generate(&cfg, 600.0).unwrap();
        let b = synth_generate(&cfg, 600.0).unwrap();
        assert_eq!(a, b);
        cfg.rng_seed = 43;
        assert_ne!(a, synth_generate(&cfg, 600.0).unwrap());
    }

    #[test]
    fn anomaly_lands_in_band() {
        let mut cfg = SynthConfig::default();
        cfg.profiles[0].noise_sd = 2.0;
        cfg.rng_seed = 9;
        cfg.anomalies.push(AnomalySpec::in_band(VitalChannel::Hr, 60.0, 30.0, 128.0, f64::INFINITY));
        let trace = synth_generate(&cfg, 180.0).unwrap();
        assert_eq!(trace.abnormal_intervals[0], vec![(60_000, 90_000)]);
        let mut in_window = 0;
        for s in &trace.samples {
            let labeled = trace.is_abnormal(VitalChannel::Hr, s.timestamp_ms);
            assert_eq!(labeled, (60_000..90_000).contains(&s.timestamp_ms));
            if labeled {
                in_window += 1;
                assert!(s.hr >= 128.0, "{}", s.hr);
            } else {
                assert!(s.hr < 128.0);
            }
        }
        assert_eq!(in_window, 10);
    }

    #[test]
    fn anomaly_outside_duration_is_rejected() {
        let mut cfg = SynthConfig::default();
        cfg.anomalies.push(AnomalySpec::in_band(VitalChannel::Rr, 100.0, 50.0, 34.0, f64::INFINITY));
        assert!(matches!(synth_generate(&cfg, 120.0), Err(Error::Schedule(_))));
        assert!(synth_generate(&cfg, 0.0).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let mut cfg = SynthConfig::default();
        cfg.anomalies.push(AnomalySpec::in_band(VitalChannel::Spo2, 30.0, 30.0, 85.0, 90.0));
        let trace = synth_generate(&cfg, 120.0).unwrap();
        let mut back = LabeledTrace::default();
        back.parse_labels(&trace.labels_csv()).unwrap();
        assert_eq!(back.abnormal_intervals, trace.abnormal_intervals);
    }

    #[test]
    fn runs_split_on_gaps() {
        let mk = |ts| VitalSample {
            driver_id: "d".into(),
            timestamp_ms: ts,
            hr: ts as f64,
            rr: 16.0,
            t: 36.5,
            spo2: 97.0,
        };
        let samples: Vec<VitalSample> = [0, 3000, 6000, 20000, 23000].into_iter().map(mk).collect();
        let refs: Vec<&VitalSample> = samples.iter().collect();
        let runs = contiguous_runs(&refs, VitalChannel::Hr, 2 * CADENCE_MS);
        assert_eq!(runs, vec![vec![0.0, 3000.0, 6000.0], vec![20000.0, 23000.0]]);
    }

    #[test]
    fn driver_split_detects_regression() {
        let text = "a,1,80,16,36.5,97\nb,1,80,16,36.5,97\na,1,80,16,36.5,97\n";
        let recs = read_records(text.as_bytes()).unwrap();
        assert!(matches!(split_by_driver(&recs), Err(Error::TimestampRegression { .. })));
    }

    fn vital(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
        ((lo * 100.0) as i64..=(hi * 100.0) as i64).prop_map(|c| c as f64 / 100.0)
    }

    proptest! {
        #[test]
        fn record_round_trip(
            id in "[a-z][a-z0-9_]{0,8}",
            ts in 0i64..4_000_000_000_000,
            hr in vital(20.0, 250.0),
            rr in vital(2.0, 60.0),
            t in vital(30.0, 43.0),
            spo2 in vital(50.0, 100.0),
        ) {
            let s = VitalSample { driver_id: id, timestamp_ms: ts, hr, rr, t, spo2 };
            prop_assert_eq!(parse_record(&s.to_string()).unwrap(), s);
        }
    }
}
