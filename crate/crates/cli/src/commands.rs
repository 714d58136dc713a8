use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::Ordering;
use std::time::{SystemTime, UNIX_EPOCH};

use vitalguard::config::Settings;
use vitalguard::evaluation::{
    abs_error_report, assessment_csv, assessment_report, assessment_table, confusion_csv, confusion_table,
    detection_report, LabeledTrace,
};
use vitalguard::ews::{score_values, ScoreBands};
use vitalguard::lms::LineEnhancer;
use vitalguard::monitor::{channel_series, run_offline, ModelSet};
use vitalguard::predictor::{load_model, save_model, sweep_hidden_nodes, train_model};
use vitalguard::service::serve;
use vitalguard::signals::{
    format_value, load_fixtures, read_records, synth_generate, AnomalySpec, ChannelProfile, SynthConfig,
    VitalSample,
};
use vitalguard::{Error, VitalChannel};

use crate::{Cli, Command, DataArgs, FixtureSet, Format, Report, SynthArgs};

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation: exit 1.
    Usage(String),
    /// Bad data, model or I/O: exit 2.
    Data(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "{m}"),
            Self::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Self::Usage(m),
            other => Self::Data(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Data(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read_input(path: &Path) -> io::Result<Box<dyn BufRead>> {
    Ok(if path == Path::new("-") {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(BufReader::new(File::open(path).map_err(|e| {
            io::Error::new(e.kind(), format!("{}: {e}", path.display()))
        })?))
    })
}

fn read_samples(path: &Path) -> Result<Vec<VitalSample>, Failure> {
    Ok(read_records(read_input(path)?)?)
}

/// Comma-separated readings, one series per line.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let mut rows = Vec::new();
    for line in read_input(path)?.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Malformed {
                    field: "reading",
                    text: f.trim().to_string(),
                })
            })
            .collect::<vitalguard::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn load_models(path: &Path) -> Result<ModelSet, Failure> {
    if path.is_dir() {
        Ok(ModelSet::load_dir(path)?)
    } else {
        let mut set = ModelSet::new();
        set.insert(load_model(path)?);
        Ok(set)
    }
}

pub fn run(cli: Cli) -> Outcome {
    let mut settings = Settings::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Fixtures { set } => fixtures(set),
        Command::Synth(args) => synth(&args),
        Command::Filter {
            input,
            channel,
            pipeline,
            out,
        } => {
            pipeline.apply(&mut settings)?;
            filter(&settings, &input, channel, out.as_deref())
        }
        Command::Train {
            channel,
            data,
            train,
            out,
        } => {
            train.apply(&mut settings)?;
            let series = training_data(&settings, channel, &data)?;
            let mut model = train_model(
                channel,
                &series,
                settings.net_config(),
                &settings.ga_config(),
                &settings.train_config(),
            )?;
            model.meta.trained_at = now_ms();
            save_model(&model, &out)?;
            println!(
                "{channel} model: {} hidden nodes, {} epochs, error rate {:.4}% -> {}",
                model.meta.hidden_nodes,
                model.meta.epochs_run,
                100.0 * model.meta.final_error_rate,
                out.display()
            );
            Ok(())
        }
        Command::Sweep {
            channel,
            candidates,
            data,
            train,
        } => {
            train.apply(&mut settings)?;
            let series = training_data(&settings, channel, &data)?;
            let sweep = sweep_hidden_nodes(
                &candidates,
                channel,
                &series,
                &settings.ga_config(),
                &settings.train_config(),
            )?;
            println!("{:>6} {:>10} {:>7}", "hidden", "error rate", "epochs");
            for r in &sweep.rows {
                println!("{:>6} {:>9.2}% {:>7}", r.hidden_nodes, 100.0 * r.error_rate, r.epochs_run);
            }
            println!("selected {}", sweep.selected);
            Ok(())
        }
        Command::Predict { model, values, steps } => {
            let model = load_model(&model)?;
            if values.len() != 8 {
                return Err(usage(format!("--values needs 8 readings, got {}", values.len())));
            }
            if steps == 0 {
                return Err(usage("--steps must be at least 1"));
            }
            for v in model.predict_horizon(&values, steps)? {
                println!("{}", format_value(v));
            }
            Ok(())
        }
        Command::Score { hr, rr, t, spo2, bands } => {
            if let Some(p) = bands {
                settings.bands = Some(p);
            }
            score(&settings, [hr, rr, t, spo2])
        }
        Command::Monitor {
            input,
            models,
            pipeline,
            out,
        } => {
            pipeline.apply(&mut settings)?;
            let config = settings.pipeline_config()?;
            let models = load_models(&models)?;
            let samples = read_samples(&input)?;
            let events = run_offline(&config, &models, &samples)?;
            let mut w = open_output(out.as_deref())?;
            for e in &events {
                writeln!(w, "{}", e.to_csv())?;
            }
            w.flush()?;
            log::info!("{} samples, {} events", samples.len(), events.len());
            Ok(())
        }
        Command::Evaluate {
            model,
            data,
            labels,
            report,
            format,
            pipeline,
        } => {
            pipeline.apply(&mut settings)?;
            evaluate(&settings, &model, data.as_deref(), labels.as_deref(), report, format)
        }
        Command::Serve {
            bind,
            models,
            pipeline,
            events,
        } => {
            pipeline.apply(&mut settings)?;
            if let Some(b) = bind {
                settings.bind = b;
            }
            let config = settings.pipeline_config()?;
            let models = load_models(&models)?;
            let sink: Box<dyn Write + Send> = match &events {
                Some(p) => Box::new(BufWriter::new(OpenOptions::new().create(true).append(true).open(p)?)),
                None => Box::new(BufWriter::new(io::stdout())),
            };
            let handle = serve(&settings.bind, config, models, sink)?;
            eprintln!("listening on {}", handle.local_addr());
            let flag = handle.shutdown_flag();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))
                .map_err(|e| Failure::Data(io::Error::other(e).into()))?;
            handle.wait()?;
            Ok(())
        }
    }
}

fn fixtures(set: FixtureSet) -> Outcome {
    let fx = load_fixtures();
    let mut out = String::new();
    let mut emit = |name: &str, rows: Vec<Vec<f64>>| {
        out.push_str(&format!("# {name}\n"));
        for r in rows {
            let fields: Vec<String> = r.iter().map(|v| format_value(*v)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    };
    if set != FixtureSet::Test {
        emit("training", fx.training_series());
    }
    if set != FixtureSet::Training {
        emit("test", fx.test_series());
    }
    print!("{out}");
    Ok(())
}

fn parse_bound(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        v => v.parse().ok(),
    }
}

fn parse_anomaly(spec: &str) -> Result<AnomalySpec, Failure> {
    let bad = || usage(format!("bad --anomaly {spec:?}; expected channel:onset_s:duration_s:lo:hi"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    let ch: VitalChannel = parts[0].parse().map_err(|_| bad())?;
    let num = |i: usize| parse_bound(parts[i]).ok_or_else(bad);
    Ok(AnomalySpec::in_band(ch, num(1)?, num(2)?, num(3)?, num(4)?))
}

fn synth(args: &SynthArgs) -> Outcome {
    let mut cfg = SynthConfig {
        driver_id: args.driver.clone(),
        rng_seed: args.seed,
        profiles: VitalChannel::ALL.map(ChannelProfile::typical),
        anomalies: args.anomaly.iter().map(|a| parse_anomaly(a)).collect::<Result<_, _>>()?,
        ..SynthConfig::default()
    };
    if args.driver.is_empty() || args.driver.contains(',') {
        return Err(usage("--driver must be non-empty and contain no commas"));
    }
    if args.steady {
        cfg.profiles = VitalChannel::ALL.map(ChannelProfile::resting);
    } else if let Some(sd) = args.noise {
        if !(sd >= 0.0) {
            return Err(usage("--noise must be non-negative"));
        }
        for p in &mut cfg.profiles {
            p.noise_sd = sd;
        }
    }
    let trace = synth_generate(&cfg, args.duration_s)?;
    let mut w = open_output(args.out.as_deref())?;
    for s in &trace.samples {
        writeln!(w, "{s}")?;
    }
    w.flush()?;
    if let Some(p) = &args.labels {
        fs::write(p, trace.labels_csv())?;
    }
    Ok(())
}

fn filter(settings: &Settings, input: &Path, channel: VitalChannel, out: Option<&Path>) -> Outcome {
    let cfg = settings.filter_config();
    let samples = read_samples(input)?;
    let mut w = open_output(out)?;
    writeln!(w, "driver_id,timestamp_ms,raw,filtered,error")?;
    let mut enhancers = std::collections::HashMap::new();
    for s in &samples {
        let enhancer = match enhancers.entry(s.driver_id.clone()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(LineEnhancer::for_channel(channel, &cfg)?),
        };
        let f = enhancer.process(s.get(channel))?;
        writeln!(w, "{},{},{},{:.4},{:.4}", s.driver_id, s.timestamp_ms, format_value(f.raw), f.filtered, f.error)?;
    }
    w.flush()?;
    Ok(())
}

fn training_data(settings: &Settings, channel: VitalChannel, data: &DataArgs) -> Result<Vec<Vec<f64>>, Failure> {
    if let Some(p) = &data.input {
        let samples = read_samples(p)?;
        let filter = data.filtered.then(|| settings.filter_config());
        return Ok(channel_series(&samples, channel, filter.as_ref())?);
    }
    if let Some(p) = &data.rows {
        return read_rows(p);
    }
    if data.fixtures {
        if channel != VitalChannel::Hr {
            return Err(usage("built-in fixtures are heart-rate only"));
        }
        return Ok(load_fixtures().training_series());
    }
    Err(usage("no training data: pass --in, --rows or --fixtures"))
}

fn score(settings: &Settings, values: [Option<f64>; 4]) -> Outcome {
    let given: Vec<VitalChannel> = VitalChannel::ALL.into_iter().filter(|c| values[c.index()].is_some()).collect();
    if given.is_empty() {
        return Err(usage("score needs at least one of --hr --rr --t --spo2"));
    }
    let bands = settings.pipeline_config()?.bands;
    if let [ch] = given[..] {
        println!("{}", bands.score(ch, values[ch.index()].unwrap_or(f64::NAN)));
        return Ok(());
    }
    let a = score_values(&bands, values.map(|v| v.unwrap_or(f64::NAN)), 0);
    let mut total = 0;
    for ch in given {
        println!("{} {}", ch.key(), a.score(ch));
        total += a.score(ch);
    }
    println!("total {total}");
    Ok(())
}

fn evaluate(
    settings: &Settings,
    model: &Path,
    data: Option<&Path>,
    labels: Option<&Path>,
    report: Report,
    format: Format,
) -> Outcome {
    let models = load_models(model)?;
    let text = match report {
        Report::Error => {
            let rows = match data {
                Some(p) => read_rows(p)?,
                None => load_fixtures().test_series(),
            };
            let mut out = String::new();
            for ch in VitalChannel::ALL {
                if let Some(m) = models.get(ch) {
                    let r = abs_error_report(m, &rows)?;
                    out.push_str(&match format {
                        Format::Csv => r.to_csv(),
                        Format::Table => r.to_table(),
                    });
                }
            }
            out
        }
        Report::Confusion => {
            let data = data.ok_or_else(|| usage("--report confusion needs --data"))?;
            let labels = labels.ok_or_else(|| usage("--report confusion needs --labels"))?;
            let mut trace = LabeledTrace {
                samples: read_samples(data)?,
                ..LabeledTrace::default()
            };
            trace.parse_labels(&fs::read_to_string(labels)?)?;
            let rows = detection_report(&settings.pipeline_config()?, &models, &trace)?;
            match format {
                Format::Csv => confusion_csv(&rows),
                Format::Table => confusion_table(&rows),
            }
        }
        Report::Assessment => {
            let data = data.ok_or_else(|| usage("--report assessment needs --data"))?;
            let bands: ScoreBands = settings.pipeline_config()?.bands;
            let rows = assessment_report(&bands, &models, &read_samples(data)?)?;
            match format {
                Format::Csv => assessment_csv(&rows),
                Format::Table => assessment_table(&rows),
            }
        }
    };
    print!("{text}");
    Ok(())
}
