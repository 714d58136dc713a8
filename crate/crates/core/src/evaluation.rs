//! Forecast-error, confusion and score-assessment reports.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ews::ScoreBands;
use crate::monitor::{DriverPipeline, ModelSet, PipelineConfig};
use crate::predictor::{Model, LOOKBACK};
use crate::signals::{format_value, VitalChannel, VitalSample};

pub use crate::signals::LabeledTrace;

/// Anything that maps the last eight readings to a one-step forecast.
pub trait Forecaster {
    fn forecast(&self, last8: &[f64]) -> Result<f64>;
}

impl Forecaster for Model {
    fn forecast(&self, last8: &[f64]) -> Result<f64> {
        self.predict_next(last8)
    }
}

/// Repeats the most recent reading.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn forecast(&self, last8: &[f64]) -> Result<f64> {
        last8
            .last()
            .copied()
            .ok_or_else(|| Error::Dimension("empty window".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    /// Zero-based index of the test row.
    pub row: usize,
    /// One-based position of the predicted reading within the row.
    pub position: usize,
    pub predicted: f64,
    pub measured: f64,
    /// predicted - measured
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub mae: f64,
}

/// Predicts positions 9 and 10 (when present) of every row, each from the
/// eight readings before it.
pub fn abs_error_report(model: &impl Forecaster, test_rows: &[Vec<f64>]) -> Result<ErrorReport> {
    let mut rows = Vec::new();
    for (r, row) in test_rows.iter().enumerate() {
        if row.len() <= LOOKBACK {
            return Err(Error::InsufficientData(format!(
                "test row {} has {} values, need at least {}",
                r + 1,
                row.len(),
                LOOKBACK + 1
            )));
        }
        for pos in LOOKBACK..row.len().min(LOOKBACK + 2) {
            let predicted = model.forecast(&row[pos - LOOKBACK..pos])?;
            rows.push(ErrorRow {
                row: r,
                position: pos + 1,
                predicted,
                measured: row[pos],
                error: predicted - row[pos],
            });
        }
    }
    let mae = rows.iter().map(|r| r.error.abs()).sum::<f64>() / rows.len().max(1) as f64;
    Ok(ErrorReport { rows, mae })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// None when the ground truth holds no abnormal samples.
    pub fn tp_rate(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// None when the ground truth holds no normal samples.
    pub fn fp_rate(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn record(&mut self, predicted_abnormal: bool, truly_abnormal: bool) {
        match (predicted_abnormal, truly_abnormal) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `predicted` holds (timestamp, score) pairs; a score of 1 or more counts
/// as an abnormal prediction. Every timestamp must belong to the trace.
pub fn classify_samples(predicted: &[(i64, u8)], truth: &LabeledTrace, channel: VitalChannel) -> Result<ConfusionCounts> {
    let mut counts = ConfusionCounts::default();
    let mut cursor = 0;
    for &(ts, score) in predicted {
        // both sequences are time-ordered, so one forward scan suffices
        while cursor < truth.samples.len() && truth.samples[cursor].timestamp_ms < ts {
            cursor += 1;
        }
        if cursor == truth.samples.len() || truth.samples[cursor].timestamp_ms != ts {
            return Err(Error::Misaligned(format!("prediction at {ts} ms has no ground-truth sample")));
        }
        counts.record(score >= 1, truth.is_abnormal(channel, ts));
        cursor += 1;
    }
    Ok(counts)
}

/// Per-channel forecast scores aligned to the instant each forecast targets.
/// The forecast issued at sample k is attributed to sample k+1; the last
/// forecast has no target and is dropped.
pub fn forecast_scores(config: &PipelineConfig, models: &ModelSet, samples: &[VitalSample]) -> Result<[Vec<(i64, u8)>; 4]> {
    let driver = samples.first().map(|s| s.driver_id.as_str()).unwrap_or("");
    let mut pipeline = DriverPipeline::new(driver, config)?;
    let mut out: [Vec<(i64, u8)>; 4] = Default::default();
    for (k, s) in samples.iter().enumerate() {
        let step = pipeline.process_sample(s, models, config)?;
        let Some(next) = samples.get(k + 1) else { break };
        for ch in VitalChannel::ALL {
            if let Some(p) = step.forecasts[ch.index()] {
                out[ch.index()].push((next.timestamp_ms, config.bands.score(ch, p)));
            }
        }
    }
    Ok(out)
}

/// Runs the streaming pipeline over a labelled trace and scores each
/// modelled channel against the ground truth.
pub fn detection_report(config: &PipelineConfig, models: &ModelSet, trace: &LabeledTrace) -> Result<Vec<(VitalChannel, ConfusionCounts)>> {
    let scores = forecast_scores(config, models, &trace.samples)?;
    VitalChannel::ALL
        .into_iter()
        .filter(|ch| models.get(*ch).is_some())
        .map(|ch| Ok((ch, classify_samples(&scores[ch.index()], trace, ch)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentRow {
    pub channel: VitalChannel,
    pub timestamp_ms: i64,
    pub predicted: f64,
    pub measured: f64,
    pub assessed_score: u8,
    pub actual_score: u8,
    pub miscalculated: bool,
}

pub fn assess_pair(bands: &ScoreBands, channel: VitalChannel, timestamp_ms: i64, predicted: f64, measured: f64) -> AssessmentRow {
    let assessed_score = bands.score(channel, predicted);
    let actual_score = bands.score(channel, measured);
    AssessmentRow {
        channel,
        timestamp_ms,
        predicted,
        measured,
        assessed_score,
        actual_score,
        miscalculated: assessed_score != actual_score,
    }
}

/// Compares the score of each one-step forecast with the score of the
/// reading it forecasts. Forecasts use the raw readings of the trace.
pub fn assessment_report(bands: &ScoreBands, models: &ModelSet, samples: &[VitalSample]) -> Result<Vec<AssessmentRow>> {
    let mut rows = Vec::new();
    for ch in VitalChannel::ALL {
        let Some(model) = models.get(ch) else { continue };
        let series: Vec<f64> = samples.iter().map(|s| s.get(ch)).collect();
        for k in LOOKBACK..series.len() {
            let p = model.predict_next(&series[k - LOOKBACK..k])?;
            rows.push(assess_pair(bands, ch, samples[k].timestamp_ms, p, series[k]));
        }
    }
    Ok(rows)
}

fn pct(v: Option<f64>) -> String {
    v.map(|r| format!("{:.2}%", 100.0 * r)).unwrap_or_else(|| "n/a".into())
}

fn rate_csv(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.6}")).unwrap_or_default()
}

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,position,predicted,measured,error\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.2},{:.2},{:.2}", r.row + 1, r.position, r.predicted, r.measured, r.error);
        }
        let _ = writeln!(s, "mae,,,,{:.4}", self.mae);
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:>4} {:>4} {:>10} {:>10} {:>8}\n", "row", "pos", "predicted", "measured", "error");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4} {:>4} {:>10.2} {:>10.2} {:>8.2}",
                r.row + 1,
                r.position,
                r.predicted,
                r.measured,
                r.error
            );
        }
        let _ = writeln!(s, "MAE {:.4}", self.mae);
        s
    }
}

pub fn confusion_csv(rows: &[(VitalChannel, ConfusionCounts)]) -> String {
    let mut s = String::from("channel,tp,fp,tn,fn,fp_rate,tp_rate\n");
    for (ch, c) in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            ch.key(),
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            rate_csv(c.fp_rate()),
            rate_csv(c.tp_rate())
        );
    }
    s
}

pub fn confusion_table(rows: &[(VitalChannel, ConfusionCounts)]) -> String {
    let mut s = format!("{:<8} {:>9} {:>9}\n", "channel", "FP rate", "TP rate");
    for (ch, c) in rows {
        let _ = writeln!(s, "{:<8} {:>9} {:>9}", ch.to_string(), pct(c.fp_rate()), pct(c.tp_rate()));
    }
    s
}

pub fn assessment_csv(rows: &[AssessmentRow]) -> String {
    let mut s = String::from("channel,timestamp_ms,predicted,measured,assessed_score,actual_score,miscalculated\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.channel.key(),
            r.timestamp_ms,
            format_value(r.predicted),
            format_value(r.measured),
            r.assessed_score,
            r.actual_score,
            u8::from(r.miscalculated)
        );
    }
    s
}

pub fn assessment_table(rows: &[AssessmentRow]) -> String {
    let mut s = format!(
        "{:<6} {:>10} {:>10} {:>9} {:>7}\n",
        "chan", "predicted", "measured", "assessed", "actual"
    );
    for r in rows {
        let flag = if r.miscalculated { " *" } else { "" };
        let _ = writeln!(
            s,
            "{:<6} {:>10.2} {:>10.2} {:>9} {:>7}",
            r.channel.to_string(),
            r.predicted,
            r.measured,
            format!("{}{flag}", r.assessed_score),
            r.actual_score
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::load_fixtures;

    fn trace_with(abnormal: &[bool]) -> LabeledTrace {
        let samples: Vec<VitalSample> = (0..abnormal.len())
            .map(|i| VitalSample {
                driver_id: "d".into(),
                timestamp_ms: 3000 * i as i64,
                hr: 80.0,
                rr: 15.0,
                t: 36.5,
                spo2: 97.0,
            })
            .collect();
        let mut intervals: [Vec<(i64, i64)>; 4] = Default::default();
        for (i, &a) in abnormal.iter().enumerate() {
            if a {
                let ts = 3000 * i as i64;
                intervals[0].push((ts, ts + 3000));
            }
        }
        LabeledTrace {
            samples,
            abnormal_intervals: intervals,
        }
    }

    #[test]
    fn hand_built_confusion() {
        let truth = [false, false, true, true, true, true, false, false, false, false];
        let pred = [false, false, true, true, false, true, false, true, false, false];
        let trace = trace_with(&truth);
        let scores: Vec<(i64, u8)> = pred.iter().enumerate().map(|(i, &p)| (3000 * i as i64, u8::from(p) * 2)).collect();
        let c = classify_samples(&scores, &trace, VitalChannel::Hr).unwrap();
        assert_eq!((c.tp, c.fn_, c.fp, c.tn), (3, 1, 1, 5));
        assert_eq!(c.tp_rate(), Some(0.75));
        assert!((c.fp_rate().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_silent_predictions() {
        let truth = [false, true, true, false];
        let trace = trace_with(&truth);
        let perfect: Vec<(i64, u8)> = truth.iter().enumerate().map(|(i, &t)| (3000 * i as i64, u8::from(t))).collect();
        let c = classify_samples(&perfect, &trace, VitalChannel::Hr).unwrap();
        assert_eq!((c.tp_rate(), c.fp_rate()), (Some(1.0), Some(0.0)));
        let silent: Vec<(i64, u8)> = (0..4).map(|i| (3000 * i, 0)).collect();
        assert_eq!(classify_samples(&silent, &trace, VitalChannel::Hr).unwrap().tp_rate(), Some(0.0));
    }

    #[test]
    fn rates_absent_without_denominator() {
        let trace = trace_with(&[false, false]);
        let c = classify_samples(&[(0, 0), (3000, 1)], &trace, VitalChannel::Hr).unwrap();
        assert_eq!(c.tp_rate(), None);
        assert_eq!(c.fp_rate(), Some(0.5));
    }

    #[test]
    fn misaligned_prediction_is_rejected() {
        let trace = trace_with(&[false, false]);
        assert!(matches!(
            classify_samples(&[(1500, 0)], &trace, VitalChannel::Hr),
            Err(Error::Misaligned(_))
        ));
    }

    #[test]
    fn persistence_on_test_rows() {
        let rows = load_fixtures().test_series();
        let report = abs_error_report(&Persistence, &rows).unwrap();
        assert_eq!(report.rows.len(), 10);
        // oracle: direct subtraction against column 8
        let direct: f64 = rows.iter().map(|r| (r[8] - r[7]).abs() + (r[9] - r[7]).abs()).sum::<f64>() / 10.0;
        let mae_fixture: f64 = report.rows.iter().map(|r| r.error.abs()).sum::<f64>() / 10.0;
        assert!((report.mae - mae_fixture).abs() < 1e-12);
        // the forecast for position 10 sees position 9, so it differs from
        // the column-8 subtraction
        assert!((report.mae - 1.2).abs() < 1e-12);
        assert!((direct - 1.1).abs() < 1e-12);
    }

    #[test]
    fn short_row_is_rejected() {
        assert!(abs_error_report(&Persistence, &[vec![1.0; 8]]).is_err());
    }

    struct Exact(f64);
    impl Forecaster for Exact {
        fn forecast(&self, _: &[f64]) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn exact_forecaster_has_zero_error() {
        let row = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]];
        let r = abs_error_report(&Exact(9.0), &row).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.mae, 0.0);
    }

    #[test]
    fn assessment_examples() {
        let bands = ScoreBands::default();
        let r = assess_pair(&bands, VitalChannel::Spo2, 0, 90.51, 91.0);
        assert_eq!((r.assessed_score, r.actual_score, r.miscalculated), (2, 1, true));
        let r = assess_pair(&bands, VitalChannel::T, 0, 35.81, 35.6);
        assert_eq!((r.assessed_score, r.actual_score, r.miscalculated), (1, 1, false));
        for v in [50.0, 104.49, 128.0] {
            assert!(!assess_pair(&bands, VitalChannel::Hr, 0, v, v).miscalculated);
        }
    }

    #[test]
    fn report_rendering() {
        let mut c = ConfusionCounts::default();
        c.record(true, true);
        c.record(false, false);
        let csv = confusion_csv(&[(VitalChannel::Hr, c)]);
        assert_eq!(csv.lines().nth(1), Some("hr,1,0,1,0,0.000000,1.000000"));
        let table = confusion_table(&[(VitalChannel::Hr, ConfusionCounts { tp: 0, fp: 0, tn: 1, fn_: 0 })]);
        assert!(table.contains("n/a"));
    }
}
