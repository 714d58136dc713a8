mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vitalguard::config::Settings;
use vitalguard::VitalChannel;

/// Vital-sign forecasting and early-warning engine.
#[derive(Debug, Parser)]
#[command(name = "vitalguard", version, arg_required_else_help = true)]
pub struct Cli {
    /// Settings file of `key = value` lines; defaults to $VITALGUARD_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the built-in heart-rate training and test rows.
    Fixtures {
        #[arg(long, value_enum, default_value_t = FixtureSet::All)]
        set: FixtureSet,
    },
    /// Generate a labelled synthetic trace.
    Synth(SynthArgs),
    /// Run one channel of a trace through the adaptive line enhancer.
    Filter {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, default_value = "hr")]
        channel: VitalChannel,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Train a forecasting model for one channel.
    Train {
        #[arg(long, default_value = "hr")]
        channel: VitalChannel,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Model file to write.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Train one model per hidden-layer size and pick the smallest that
    /// reaches the target error rate.
    Sweep {
        #[arg(long, default_value = "hr")]
        channel: VitalChannel,
        #[arg(long, value_delimiter = ',', default_value = "12,16,18,21,22,25")]
        candidates: Vec<usize>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Forecast the reading after eight given ones.
    Predict {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Eight readings, oldest first.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
        /// Forecast this many steps by feeding forecasts back in.
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Score vital-sign values against the warning bands.
    Score {
        #[arg(long, allow_negative_numbers = true)]
        hr: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        rr: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        spo2: Option<f64>,
        /// Score-band override file.
        #[arg(long, value_name = "PATH")]
        bands: Option<PathBuf>,
    },
    /// Run a recorded trace through the streaming pipeline offline.
    Monitor {
        /// Record file, or `-` for standard input.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Directory holding `<channel>.vgm` model files.
        #[arg(long, value_name = "DIR")]
        models: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Event log to write; standard output when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Produce error, confusion or score-assessment reports.
    Evaluate {
        /// A model file, or a directory of `<channel>.vgm` files.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Rows file for `error` (default: built-in test rows); record file otherwise.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
        /// Ground-truth intervals for `confusion`.
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
        #[arg(long, value_enum)]
        report: Report,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Accept records over TCP and log warning events.
    Serve {
        #[arg(long, value_name = "ADDR")]
        bind: Option<String>,
        #[arg(long, value_name = "DIR")]
        models: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Event log to append to; standard output when absent.
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureSet {
    Training,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Report {
    Error,
    Confusion,
    Assessment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3600.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "d1")]
    pub driver: String,
    /// `channel:onset_s:duration_s:lo:hi`, holding the channel inside
    /// the band [lo, hi]; `inf` and `-inf` are allowed. Repeatable.
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    pub anomaly: Vec<String>,
    /// Noise standard deviation for every channel, in channel units.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Constant baselines with no drift and no noise.
    #[arg(long, conflicts_with = "noise")]
    pub steady: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Where to write the ground-truth abnormal intervals.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Record file to train on.
    #[arg(long = "in", value_name = "PATH", conflicts_with_all = ["rows", "fixtures"])]
    pub input: Option<PathBuf>,
    /// File of comma-separated reading rows, one series per line.
    #[arg(long, value_name = "PATH", conflicts_with = "fixtures")]
    pub rows: Option<PathBuf>,
    /// Train on the built-in heart-rate rows.
    #[arg(long)]
    pub fixtures: bool,
    /// Pass record data through the line enhancer before training.
    #[arg(long, requires = "input")]
    pub filtered: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// `downward` or `symmetric`.
    #[arg(long)]
    pub mutation_variant: Option<String>,
    #[arg(long)]
    pub lr_start: Option<f64>,
    #[arg(long)]
    pub lr_end: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub target_error_rate: Option<f64>,
    /// Filter settings used with `--filtered`.
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, visible_alias = "order")]
    pub filter_order: Option<usize>,
    #[arg(long, visible_alias = "mu")]
    pub filter_mu: Option<f64>,
    #[arg(long)]
    pub t_threshold_s: Option<f64>,
    /// `total` or a channel name.
    #[arg(long)]
    pub trigger: Option<String>,
    /// Score-band override file.
    #[arg(long = "bands-file", value_name = "PATH")]
    pub bands_file: Option<PathBuf>,
}

fn set_opt<T: ToString>(s: &mut Settings, key: &str, v: &Option<T>) -> vitalguard::Result<()> {
    match v {
        Some(v) => s.set(key, &v.to_string()),
        None => Ok(()),
    }
}

impl PipelineArgs {
    pub fn apply(&self, s: &mut Settings) -> vitalguard::Result<()> {
        set_opt(s, "filter_order", &self.filter_order)?;
        set_opt(s, "filter_mu", &self.filter_mu)?;
        set_opt(s, "t_threshold_s", &self.t_threshold_s)?;
        set_opt(s, "trigger", &self.trigger)?;
        if let Some(p) = &self.bands_file {
            s.bands = Some(p.clone());
        }
        Ok(())
    }
}

impl TrainArgs {
    pub fn apply(&self, s: &mut Settings) -> vitalguard::Result<()> {
        set_opt(s, "hidden_nodes", &self.hidden)?;
        set_opt(s, "seed", &self.seed)?;
        set_opt(s, "population", &self.population)?;
        set_opt(s, "generations", &self.generations)?;
        set_opt(s, "crossover_rate", &self.crossover_rate)?;
        set_opt(s, "mutation_rate", &self.mutation_rate)?;
        set_opt(s, "mutation_variant", &self.mutation_variant)?;
        set_opt(s, "lr_start", &self.lr_start)?;
        set_opt(s, "lr_end", &self.lr_end)?;
        set_opt(s, "momentum", &self.momentum)?;
        set_opt(s, "max_epochs", &self.max_epochs)?;
        set_opt(s, "target_error_rate", &self.target_error_rate)?;
        self.pipeline.apply(s)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("vitalguard: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
