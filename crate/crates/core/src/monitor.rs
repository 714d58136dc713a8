//! Per-driver streaming pipeline: LMS line enhancer → 8-slot window →
//! one-step forecast → early-warning score → severity tracking.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ews::{score_values, AbnormalTrigger, ScoreBands, Severity, SeverityTracker, WarningAssessment};
use crate::lms::{FilterConfig, LineEnhancer};
use crate::predictor::{load_model, Model, LOOKBACK};
use crate::signals::{contiguous_runs, format_value, split_by_driver, VitalChannel, VitalSample, CADENCE_MS};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub bands: ScoreBands,
    pub t_threshold_ms: i64,
    pub trigger: AbnormalTrigger,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig::smoothing(8, 0.01),
            bands: ScoreBands::default(),
            t_threshold_ms: 60_000,
            trigger: AbnormalTrigger::Total,
        }
    }
}

/// Forecasting models, at most one per channel. Channels without a model
/// are filtered but never forecast or scored.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    models: [Option<Arc<Model>>; 4],
}

impl ModelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: Model) {
        let idx = model.channel.index();
        self.models[idx] = Some(Arc::new(model));
    }

    pub fn get(&self, channel: VitalChannel) -> Option<&Model> {
        self.models[channel.index()].as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.models.iter().all(Option::is_none)
    }

    /// Loads `<dir>/<channel>.vgm` for every channel file present.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = Self::new();
        for ch in VitalChannel::ALL {
            let path = dir.join(format!("{}.vgm", ch.key()));
            if path.exists() {
                let model = load_model(&path)?;
                if model.channel != ch {
                    return Err(Error::CorruptModel(format!(
                        "{} holds a {} model",
                        path.display(),
                        model.channel
                    )));
                }
                set.insert(model);
            }
        }
        if set.is_empty() {
            return Err(Error::InsufficientData(format!("no *.vgm models in {}", dir.display())));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSource {
    Channel(VitalChannel),
    Severity,
}

impl fmt::Display for EventSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Channel(ch) => f.write_str(ch.key()),
            Self::Severity => f.write_str("severity"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarningEvent {
    pub driver_id: String,
    pub timestamp_ms: i64,
    pub source: EventSource,
    pub predicted: Option<f64>,
    pub score: u8,
    pub severity: Severity,
    pub message: String,
}

pub const EVENT_HEADER: &str = "driver_id,timestamp_ms,channel,predicted,score,severity,message";

impl WarningEvent {
    /// One CSV line, no trailing newline. Fixed two-decimal rendering keeps
    /// logs byte-identical across runs and platforms.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.driver_id,
            self.timestamp_ms,
            self.source,
            self.predicted.map(|p| format!("{p:.2}")).unwrap_or_default(),
            self.score,
            self.severity,
            self.message
        )
    }
}

/// Result of feeding one sample through a driver's pipeline.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepResult {
    /// Forecast of the next reading, per channel.
    pub forecasts: [Option<f64>; 4],
    pub assessment: Option<WarningAssessment>,
    pub events: Vec<WarningEvent>,
}

/// State for one driver stream. Single writer: samples must arrive in
/// timestamp order.
#[derive(Debug, Clone)]
pub struct DriverPipeline {
    driver_id: String,
    filters: [Option<LineEnhancer>; 4],
    windows: [VecDeque<f64>; 4],
    tracker: SeverityTracker,
    last_timestamp: Option<i64>,
}

impl DriverPipeline {
    pub fn new(driver_id: &str, config: &PipelineConfig) -> Result<Self> {
        let mut filters: [Option<LineEnhancer>; 4] = Default::default();
        for ch in VitalChannel::ALL {
            filters[ch.index()] = Some(LineEnhancer::for_channel(ch, &config.filter)?);
        }
        Ok(Self {
            driver_id: driver_id.to_string(),
            filters,
            windows: Default::default(),
            tracker: SeverityTracker::new(config.t_threshold_ms).with_trigger(config.trigger),
            last_timestamp: None,
        })
    }

    pub fn severity(&self) -> Severity {
        self.tracker.state
    }

    /// Filtered values currently buffered for `channel`, oldest first.
    pub fn window(&self, channel: VitalChannel) -> Vec<f64> {
        self.windows[channel.index()].iter().copied().collect()
    }

    pub fn process_sample(&mut self, sample: &VitalSample, models: &ModelSet, config: &PipelineConfig) -> Result<StepResult> {
        if let Some(prev) = self.last_timestamp {
            if sample.timestamp_ms <= prev {
                return Err(Error::TimestampRegression {
                    previous: prev,
                    current: sample.timestamp_ms,
                });
            }
        }
        self.last_timestamp = Some(sample.timestamp_ms);
        let ts = sample.timestamp_ms;
        let mut out = StepResult::default();

        for ch in VitalChannel::ALL {
            let i = ch.index();
            let Some(filter) = self.filters[i].as_mut() else {
                continue;
            };
            let filtered = match filter.process(sample.get(ch)) {
                Ok(f) => f.filtered,
                Err(e) => {
                    self.filters[i] = None;
                    self.windows[i].clear();
                    out.events.push(WarningEvent {
                        driver_id: self.driver_id.clone(),
                        timestamp_ms: ts,
                        source: EventSource::Channel(ch),
                        predicted: None,
                        score: 0,
                        severity: self.tracker.state,
                        message: format!("{e}; {ch} stream quarantined").replace(',', ";"),
                    });
                    continue;
                }
            };
            let window = &mut self.windows[i];
            if window.len() == LOOKBACK {
                window.pop_front();
            }
            window.push_back(filtered);
            if window.len() == LOOKBACK {
                if let Some(model) = models.get(ch) {
                    let w: Vec<f64> = window.iter().copied().collect();
                    out.forecasts[i] = Some(model.predict_next(&w)?);
                }
            }
        }

        if out.forecasts.iter().all(Option::is_none) {
            return Ok(out);
        }

        // channels without a forecast contribute 0
        let values = VitalChannel::ALL.map(|ch| out.forecasts[ch.index()]);
        let mut assessment = score_values(&config.bands, values.map(|v| v.unwrap_or(f64::NAN)), ts);
        for ch in VitalChannel::ALL {
            if values[ch.index()].is_none() {
                assessment.scores[ch.index()] = 0;
            }
        }
        assessment = WarningAssessment::from_scores(assessment.scores, ts);
        let transition = self.tracker.update(&assessment)?;

        for ch in VitalChannel::ALL {
            let score = assessment.score(ch);
            if let (Some(p), true) = (values[ch.index()], score >= 1) {
                out.events.push(WarningEvent {
                    driver_id: self.driver_id.clone(),
                    timestamp_ms: ts,
                    source: EventSource::Channel(ch),
                    predicted: Some(p),
                    score,
                    severity: self.tracker.state,
                    message: format!("{ch} forecast {} scores {score}", format_value(p)),
                });
            }
        }
        if let Some(t) = transition {
            out.events.push(WarningEvent {
                driver_id: self.driver_id.clone(),
                timestamp_ms: ts,
                source: EventSource::Severity,
                predicted: None,
                score: assessment.total,
                severity: t.to,
                message: format!("{} -> {} after {} s abnormal", t.from, t.to, t.abnormal_ms / 1000),
            });
        }
        out.assessment = Some(assessment);
        Ok(out)
    }
}

/// Offline multi-driver monitor over an in-memory record stream.
#[derive(Debug)]
pub struct Monitor {
    config: PipelineConfig,
    models: ModelSet,
    drivers: HashMap<String, DriverPipeline>,
}

impl Monitor {
    pub fn new(config: PipelineConfig, models: ModelSet) -> Self {
        Self {
            config,
            models,
            drivers: HashMap::new(),
        }
    }

    pub fn process(&mut self, sample: &VitalSample) -> Result<StepResult> {
        let pipeline = match self.drivers.get_mut(&sample.driver_id) {
            Some(p) => p,
            None => {
                let p = DriverPipeline::new(&sample.driver_id, &self.config)?;
                self.drivers.entry(sample.driver_id.clone()).or_insert(p)
            }
        };
        pipeline.process_sample(sample, &self.models, &self.config)
    }

    pub fn driver(&self, driver_id: &str) -> Option<&DriverPipeline> {
        self.drivers.get(driver_id)
    }
}

/// Runs every sample through a fresh monitor and collects the events.
pub fn run_offline(config: &PipelineConfig, models: &ModelSet, samples: &[VitalSample]) -> Result<Vec<WarningEvent>> {
    let mut monitor = Monitor::new(config.clone(), models.clone());
    let mut events = Vec::new();
    for s in samples {
        events.extend(monitor.process(s)?.events);
    }
    Ok(events)
}

/// Training series for `channel`: one per contiguous run of each driver,
/// breaking at gaps longer than two sampling periods. With `filter`, each
/// run passes through a fresh line enhancer first, matching what the live
/// pipeline feeds its models.
pub fn channel_series(samples: &[VitalSample], channel: VitalChannel, filter: Option<&FilterConfig>) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (_, group) in split_by_driver(samples)? {
        for run in contiguous_runs(&group, channel, 2 * CADENCE_MS) {
            match filter {
                Some(cfg) => {
                    let mut enhancer = LineEnhancer::for_channel(channel, cfg)?;
                    let filtered = run
                        .iter()
                        .map(|&x| enhancer.process(x).map(|f| f.filtered))
                        .collect::<Result<Vec<f64>>>()?;
                    out.push(filtered);
                }
                None => out.push(run),
            }
        }
    }
    Ok(out)
}

pub fn events_csv(events: &[WarningEvent]) -> String {
    events.iter().map(|e| e.to_csv() + "\n").collect()
}
