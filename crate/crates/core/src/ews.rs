//! Early-warning scores (0-3 per channel) and duration-based severity.
//!
//! The default bands are closed integer (or 0.1 °C) intervals, so
//! continuous values can fall between two bands, e.g. HR 104.49. Such a
//! value takes the higher of the two neighbouring scores.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signals::{VitalChannel, VitalSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub score: u8,
}

const fn band(lo: f64, hi: f64, score: u8) -> Band {
    Band { lo, hi, score }
}

const NEG: f64 = f64::NEG_INFINITY;
const POS: f64 = f64::INFINITY;

const HR_BANDS: [Band; 7] = [
    band(NEG, 50.0, 3),
    band(51.0, 58.0, 2),
    band(59.0, 63.0, 1),
    band(64.0, 104.0, 0),
    band(105.0, 112.0, 1),
    band(113.0, 127.0, 2),
    band(128.0, POS, 3),
];

const RR_BANDS: [Band; 7] = [
    band(NEG, 7.0, 3),
    band(8.0, 10.0, 2),
    band(11.0, 13.0, 1),
    band(14.0, 25.0, 0),
    band(26.0, 28.0, 1),
    band(29.0, 33.0, 2),
    band(34.0, POS, 3),
];

// no score-2 rows for temperature
const T_BANDS: [Band; 5] = [
    band(NEG, 35.4, 3),
    band(35.5, 35.9, 1),
    band(36.0, 37.3, 0),
    band(37.4, 38.3, 1),
    band(38.4, POS, 3),
];

const SPO2_BANDS: [Band; 4] = [
    band(NEG, 84.0, 3),
    band(85.0, 90.0, 2),
    band(91.0, 93.0, 1),
    band(94.0, POS, 0),
];

/// Ordered, disjoint score bands for each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBands {
    bands: [Vec<Band>; 4],
}

impl Default for ScoreBands {
    fn default() -> Self {
        Self {
            bands: [HR_BANDS.to_vec(), RR_BANDS.to_vec(), T_BANDS.to_vec(), SPO2_BANDS.to_vec()],
        }
    }
}

impl ScoreBands {
    pub fn new(bands: [Vec<Band>; 4]) -> Result<Self> {
        for ch in VitalChannel::ALL {
            validate_channel(ch, &bands[ch.index()])?;
        }
        Ok(Self { bands })
    }

    pub fn channel(&self, channel: VitalChannel) -> &[Band] {
        &self.bands[channel.index()]
    }

    /// Parses `channel, lo, hi, score` rows (`-inf`/`inf` allowed). Channels
    /// named in the file replace their defaults; others keep them.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut listed: [Option<Vec<Band>>; 4] = Default::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("bands line {}: {what}", n + 1));
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(bad("expected channel, lo, hi, score"));
            }
            let ch: VitalChannel = parts[0].parse()?;
            let lo: f64 = parts[1].parse().map_err(|_| bad("bad lower bound"))?;
            let hi: f64 = parts[2].parse().map_err(|_| bad("bad upper bound"))?;
            let score: u8 = parts[3].parse().map_err(|_| bad("bad score"))?;
            listed[ch.index()].get_or_insert_with(Vec::new).push(Band { lo, hi, score });
        }
        let defaults = Self::default();
        let bands = VitalChannel::ALL.map(|ch| listed[ch.index()].take().unwrap_or_else(|| defaults.channel(ch).to_vec()));
        Self::new(bands)
    }

    /// Score of `value`, resolving inter-band gaps to the higher neighbour.
    pub fn score(&self, channel: VitalChannel, value: f64) -> u8 {
        let bands = self.channel(channel);
        if !value.is_finite() {
            return bands.iter().map(|b| b.score).max().unwrap_or(0);
        }
        for (i, b) in bands.iter().enumerate() {
            if value < b.lo {
                return match i {
                    0 => b.score,
                    _ => b.score.max(bands[i - 1].score),
                };
            }
            if value <= b.hi {
                return b.score;
            }
        }
        bands.last().map_or(0, |b| b.score)
    }
}

fn validate_channel(ch: VitalChannel, bands: &[Band]) -> Result<()> {
    if bands.is_empty() {
        return Err(Error::Config(format!("{ch} has no score bands")));
    }
    for b in bands {
        if b.lo.is_nan() || b.hi.is_nan() || b.lo > b.hi {
            return Err(Error::Config(format!("{ch} band [{}, {}] is empty", b.lo, b.hi)));
        }
        if b.score > 3 {
            return Err(Error::Config(format!("{ch} band score {} exceeds 3", b.score)));
        }
    }
    if let Some(w) = bands.windows(2).find(|w| w[0].hi >= w[1].lo) {
        return Err(Error::Config(format!(
            "{ch} bands [{}, {}] and [{}, {}] overlap or are out of order",
            w[0].lo, w[0].hi, w[1].lo, w[1].hi
        )));
    }
    Ok(())
}

/// Score with the default bands.
pub fn score_value(channel: VitalChannel, value: f64) -> u8 {
    thread_local! {
        static DEFAULT: ScoreBands = ScoreBands::default();
    }
    DEFAULT.with(|b| b.score(channel, value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarningAssessment {
    /// Indexed by [`VitalChannel::index`].
    pub scores: [u8; 4],
    pub total: u8,
    pub timestamp_ms: i64,
}

impl WarningAssessment {
    pub fn from_scores(scores: [u8; 4], timestamp_ms: i64) -> Self {
        Self {
            scores,
            total: scores.iter().sum(),
            timestamp_ms,
        }
    }

    pub fn score(&self, channel: VitalChannel) -> u8 {
        self.scores[channel.index()]
    }
}

pub fn score_values(bands: &ScoreBands, values: [f64; 4], timestamp_ms: i64) -> WarningAssessment {
    WarningAssessment::from_scores(VitalChannel::ALL.map(|ch| bands.score(ch, values[ch.index()])), timestamp_ms)
}

pub fn score_sample(bands: &ScoreBands, sample: &VitalSample) -> WarningAssessment {
    score_values(bands, sample.values(), sample.timestamp_ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Severity {
    Normal,
    General,
    Emergency,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Normal => "normal",
            Self::General => "general",
            Self::Emergency => "emergency",
        })
    }
}

/// What counts as an abnormal instant for severity tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbnormalTrigger {
    /// Total score of at least 1.
    Total,
    /// Score of at least 1 on one channel.
    Channel(VitalChannel),
}

impl FromStr for AbnormalTrigger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "total" => Ok(Self::Total),
            other => other.parse().map(Self::Channel),
        }
    }
}

impl AbnormalTrigger {
    pub fn is_abnormal(&self, a: &WarningAssessment) -> bool {
        match self {
            Self::Total => a.total >= 1,
            Self::Channel(ch) => a.score(*ch) >= 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeverityEvent {
    pub from: Severity,
    pub to: Severity,
    pub timestamp_ms: i64,
    /// Length of the abnormal run so far, counting each sample as one period.
    pub abnormal_ms: i64,
}

/// Normal → General on the first abnormal instant; General → Emergency once
/// the continuous abnormal span exceeds `t_threshold_ms`; any normal
/// instant returns to Normal.
///
/// A run of `n` abnormal samples spans `n · sample_period_ms`: the span is
/// `now - first_abnormal + sample_period_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeverityTracker {
    pub state: Severity,
    pub abnormal_since: Option<i64>,
    pub t_threshold_ms: i64,
    pub sample_period_ms: i64,
    pub trigger: AbnormalTrigger,
    last_timestamp: Option<i64>,
}

impl Default for SeverityTracker {
    fn default() -> Self {
        Self::new(60_000)
    }
}

impl SeverityTracker {
    pub fn new(t_threshold_ms: i64) -> Self {
        Self {
            state: Severity::Normal,
            abnormal_since: None,
            t_threshold_ms,
            sample_period_ms: crate::signals::CADENCE_MS,
            trigger: AbnormalTrigger::Total,
            last_timestamp: None,
        }
    }

    pub fn with_trigger(mut self, trigger: AbnormalTrigger) -> Self {
        self.trigger = trigger;
        self
    }

    pub fn update(&mut self, assessment: &WarningAssessment) -> Result<Option<SeverityEvent>> {
        let now = assessment.timestamp_ms;
        if let Some(prev) = self.last_timestamp {
            if now < prev {
                return Err(Error::TimestampRegression { previous: prev, current: now });
            }
        }
        self.last_timestamp = Some(now);

        let from = self.state;
        if !self.trigger.is_abnormal(assessment) {
            self.abnormal_since = None;
            self.state = Severity::Normal;
            return Ok((from != Severity::Normal).then_some(SeverityEvent {
                from,
                to: Severity::Normal,
                timestamp_ms: now,
                abnormal_ms: 0,
            }));
        }

        let since = *self.abnormal_since.get_or_insert(now);
        let span = now - since + self.sample_period_ms;
        self.state = match from {
            Severity::Normal => Severity::General,
            Severity::General if span > self.t_threshold_ms => Severity::Emergency,
            s => s,
        };
        Ok((self.state != from).then_some(SeverityEvent {
            from,
            to: self.state,
            timestamp_ms: now,
            abnormal_ms: span,
        }))
    }
}

pub fn update_severity(tracker: &mut SeverityTracker, assessment: &WarningAssessment) -> Result<Option<SeverityEvent>> {
    tracker.update(assessment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use VitalChannel::*;

    #[test]
    fn printed_band_values() {
        assert_eq!(score_value(Hr, 82.0), 0);
        assert_eq!(score_value(Hr, 50.0), 3);
        assert_eq!(score_value(Hr, 128.0), 3);
        assert_eq!(score_value(Rr, 26.0), 1);
        assert_eq!(score_value(T, 38.4), 3);
        assert_eq!(score_value(Spo2, 95.0), 0);
    }

    #[test]
    fn gaps_take_higher_neighbour() {
        assert_eq!(score_value(Hr, 104.49), 1);
        assert_eq!(score_value(Spo2, 90.51), 2);
        assert_eq!(score_value(T, 35.89), 1);
        assert_eq!(score_value(T, 35.95), 1);
        assert_eq!(score_value(T, 38.35), 3);
        assert_eq!(score_value(Rr, 13.5), 1);
    }

    #[test]
    fn non_finite_is_worst_case() {
        assert_eq!(score_value(Spo2, f64::NAN), 3);
    }

    #[test]
    fn sample_scores() {
        let bands = ScoreBands::default();
        let s = |hr, rr, t, spo2| VitalSample {
            driver_id: "d".into(),
            timestamp_ms: 0,
            hr,
            rr,
            t,
            spo2,
        };
        let a = score_sample(&bands, &s(82.0, 18.0, 36.2, 97.0));
        assert_eq!((a.scores, a.total), ([0, 0, 0, 0], 0));
        let a = score_sample(&bands, &s(89.0, 17.0, 36.0, 91.0));
        assert_eq!((a.scores, a.total), ([0, 0, 0, 1], 1));
    }

    #[test]
    fn band_config_override() {
        let b = ScoreBands::from_config("# custom HR\nhr, -inf, 40, 3\nhr, 41, 120, 0\nhr, 121, inf, 3\n").unwrap();
        assert_eq!(b.score(Hr, 110.0), 0);
        assert_eq!(b.score(Hr, 120.5), 3);
        assert_eq!(b.score(Rr, 26.0), 1);

        assert!(ScoreBands::from_config("hr, 0, 50, 0\nhr, 40, 100, 1\n").is_err());
        assert!(ScoreBands::from_config("hr, 60, 50, 0\n").is_err());
        assert!(ScoreBands::from_config("hr, 0, 50, 4\n").is_err());
        assert!(ScoreBands::from_config("hr, 0, 50\n").is_err());
    }

    fn assess(total: u8, ts: i64) -> WarningAssessment {
        WarningAssessment::from_scores([total.min(3), total.saturating_sub(3).min(3), 0, 0], ts)
    }

    #[test]
    fn stays_normal() {
        let mut t = SeverityTracker::default();
        for k in 0..3 {
            assert_eq!(t.update(&assess(0, k * 3000)).unwrap(), None);
        }
        assert_eq!(t.state, Severity::Normal);
    }

    #[test]
    fn emergency_after_63_seconds() {
        let mut t = SeverityTracker::new(60_000);
        let mut events = Vec::new();
        for k in 0..21 {
            if let Some(e) = t.update(&assess(1, k * 3000)).unwrap() {
                events.push((k + 1, e.to, e.abnormal_ms));
            }
        }
        assert_eq!(
            events,
            vec![(1, Severity::General, 3000), (21, Severity::Emergency, 63_000)]
        );
    }

    #[test]
    fn resets_on_normal() {
        let mut t = SeverityTracker::default();
        let mut events = Vec::new();
        for k in 0..6 {
            let total = if k < 5 { 2 } else { 0 };
            if let Some(e) = t.update(&assess(total, k * 3000)).unwrap() {
                events.push(e.to);
            }
        }
        assert_eq!(events, vec![Severity::General, Severity::Normal]);
        assert!(t.abnormal_since.is_none());
    }

    #[test]
    fn rejects_regression() {
        let mut t = SeverityTracker::default();
        t.update(&assess(0, 6000)).unwrap();
        assert!(t.update(&assess(0, 6000)).is_ok());
        assert!(matches!(t.update(&assess(0, 3000)), Err(Error::TimestampRegression { .. })));
    }

    #[test]
    fn channel_trigger() {
        let mut t = SeverityTracker::default().with_trigger(AbnormalTrigger::Channel(Spo2));
        let hr_only = WarningAssessment::from_scores([2, 0, 0, 0], 0);
        assert_eq!(t.update(&hr_only).unwrap(), None);
        let spo2 = WarningAssessment::from_scores([0, 0, 0, 1], 3000);
        assert_eq!(t.update(&spo2).unwrap().map(|e| e.to), Some(Severity::General));
    }

    proptest! {
        #[test]
        fn sweep_is_total(ch in 0usize..4, cents in -100_000i64..100_000) {
            let s = score_value(VitalChannel::ALL[ch], cents as f64 / 100.0);
            prop_assert!(s <= 3);
        }
    }
}
