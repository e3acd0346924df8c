use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pdm_core::dataset::{read_truth_jsonl, write_truth_jsonl, Dataset};
use pdm_core::decision::{cost_report, read_cost_csv, AlertPolicy};
use pdm_core::fusion::{evaluate_models, ModelSet, MODEL_ORDER};
use pdm_core::lstm::{LstmModel, RulLinearModel};
use pdm_core::monitor::{AlertLine, Monitor};
use pdm_core::pipeline::{lead_times, train_linear, train_lstm, train_svm};
use pdm_core::signal::{group_by_machine, load_csv, save_csv, ReadingStream};
use pdm_core::svm::SvmModel;
use pdm_core::synth::{derive_seed, generate_dataset, run_benchmark, TAG_LSTM, TAG_SVM};
use pdm_core::Error;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "pdm", version, about = "Predictive maintenance pipeline")]
pub struct Cli {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic run-to-failure telemetry and ground truth.
    Simulate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Smooth, window and featurize a telemetry CSV.
    Features {
        #[arg(long)]
        input: PathBuf,
        /// Ground-truth JSONL; windows stay unlabeled without it.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the SVM fault classifier on a labeled features CSV.
    TrainSvm {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the LSTM RUL regressor on a labeled features CSV.
    TrainLstm {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV.
        #[arg(long)]
        loss_curve: Option<PathBuf>,
    },
    /// Fit the linear RUL baseline on a labeled features CSV.
    TrainRul {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score all models and the hybrid on a labeled features CSV.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        svm: PathBuf,
        #[arg(long)]
        lstm: PathBuf,
        #[arg(long)]
        rul: PathBuf,
        /// Ground truth for lead-time statistics.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream a telemetry CSV and print one line per completed window.
    Monitor {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lstm: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Before/after maintenance cost comparison.
    Cost {
        /// CSV with exactly two ledger rows, before then after.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full synthetic benchmark: generate, train, evaluate, lead times.
    Benchmark {
        #[arg(long)]
        out: PathBuf,
    },
}

pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn with_path<T>(path: &Path, r: pdm_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut c = CliError::from(e);
        c.message = format!("{}: {}", path.display(), c.message);
        c
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    with_path(path, fs::read_to_string(path).map_err(Error::from))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    with_path(path, fs::write(path, text).map_err(Error::from))
}

fn read_features(path: &Path) -> CliResult<Dataset> {
    let f = with_path(path, File::open(path).map_err(Error::from))?;
    with_path(path, Dataset::read_csv(BufReader::new(f)))
}

fn read_truth(path: &Path) -> CliResult<std::collections::BTreeMap<String, pdm_core::dataset::FaultTruth>> {
    let f = with_path(path, File::open(path).map_err(Error::from))?;
    with_path(path, read_truth_jsonl(BufReader::new(f)))
}

pub fn run(cli: Cli) -> CliResult {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate { out } => simulate(&cfg, &out),
        Command::Features { input, truth, out } => features(&cfg, &input, truth.as_deref(), &out),
        Command::TrainSvm { features, out } => {
            let ds = read_features(&features)?;
            let model = train_svm(&ds, &cfg.svm, derive_seed(cfg.seed, TAG_SVM, 0))?;
            write_text(&out, &model.to_json()?)
        }
        Command::TrainLstm { features, out, loss_curve } => {
            let ds = read_features(&features)?;
            let mut settings = cfg.lstm;
            settings.train.seed = derive_seed(cfg.seed, TAG_LSTM, 0);
            let (model, curve) = train_lstm(&ds, &settings)?;
            write_text(&out, &model.to_json()?)?;
            if let Some(p) = loss_curve {
                let mut s = String::from("epoch,loss\n");
                for (i, l) in curve.iter().enumerate() {
                    s.push_str(&format!("{i},{l}\n"));
                }
                write_text(&p, &s)?;
            }
            Ok(())
        }
        Command::TrainRul { features, out } => {
            let ds = read_features(&features)?;
            write_text(&out, &train_linear(&ds)?.to_json()?)
        }
        Command::Evaluate {
            features,
            svm,
            lstm,
            rul,
            truth,
            out,
        } => evaluate(&cfg, &features, [&svm, &lstm, &rul], truth.as_deref(), &out),
        Command::Monitor { input, lstm, out } => monitor(&cfg, &input, &lstm, out.as_deref()),
        Command::Cost { input, out } => cost(&input, &out),
        Command::Benchmark { out } => benchmark(&cfg, &out),
    }
}

fn simulate(cfg: &RunConfig, out: &Path) -> CliResult {
    let data = generate_dataset(cfg.n_runs, &cfg.dataset, cfg.seed)?;
    fs::create_dir_all(out)?;
    let series: Vec<_> = data.runs.into_iter().flat_map(|r| r.series.into_series()).collect();
    let csv_path = out.join("telemetry.csv");
    with_path(&csv_path, save_csv(&csv_path, &series))?;
    let mut buf = Vec::new();
    write_truth_jsonl(&mut buf, &data.truth)?;
    write_text(&out.join("ground_truth.jsonl"), &String::from_utf8_lossy(&buf))
}

fn features(cfg: &RunConfig, input: &Path, truth: Option<&Path>, out: &Path) -> CliResult {
    let series = with_path(input, load_csv(input))?;
    let machines = with_path(input, group_by_machine(series))?;
    let truth = match truth {
        Some(p) => read_truth(p)?,
        None => Default::default(),
    };
    let ds = Dataset::build(&machines, &cfg.windowing(), &truth, cfg.dataset.horizon_ms())?;
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    write_text(out, &String::from_utf8_lossy(&buf))
}

fn evaluate(cfg: &RunConfig, features: &Path, models: [&Path; 3], truth: Option<&Path>, out: &Path) -> CliResult {
    let ds = read_features(features)?;
    let [svm_p, lstm_p, rul_p] = models;
    let svm = with_path(svm_p, SvmModel::from_json(&read_text(svm_p)?))?;
    let lstm = with_path(lstm_p, LstmModel::from_json(&read_text(lstm_p)?))?;
    let rul = with_path(rul_p, RulLinearModel::from_json(&read_text(rul_p)?))?;
    let set = ModelSet {
        svm: &svm,
        lstm: &lstm,
        rul_linear: &rul,
        history: cfg.lstm.history,
    };
    let (report, preds) = evaluate_models(&ds, &set, cfg.tau(), cfg.fusion)?;
    fs::create_dir_all(out)?;
    write_text(&out.join("metrics.json"), &serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    write_text(&out.join("metrics.csv"), &report.to_csv())?;

    let mut s = String::from("machine_id,end_timestamp_ms,label,svm_score,lstm_rul_ms,linear_rul_ms,hybrid\n");
    for (i, sample) in ds.samples.iter().enumerate() {
        let label = sample.label.map(|l| l.label.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sample.machine_id,
            sample.end_timestamp_ms,
            label,
            preds.svm_scores[i],
            preds.lstm_rul[i],
            preds.linear_rul[i],
            preds.hybrid[i]
        ));
    }
    write_text(&out.join("predictions.csv"), &s)?;

    if let Some(tp) = truth {
        let truth = read_truth(tp)?;
        let period = cfg.dataset.template.sample_period_ms;
        let mut s = String::from("model,run_id,detected,lead_time_ms\n");
        for (name, labels) in MODEL_ORDER.iter().zip([&preds.svm, &preds.lstm, &preds.rul_linear, &preds.hybrid]) {
            let stats = lead_times(&ds, labels, &truth, cfg.sustain, period)?;
            for r in stats.per_run {
                let lead = r.lead_time_ms.map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!("{name},{},{},{lead}\n", r.run_id, r.detected));
            }
        }
        write_text(&out.join("lead_times.csv"), &s)?;
    }
    Ok(())
}

fn monitor(cfg: &RunConfig, input: &Path, lstm: &Path, out: Option<&Path>) -> CliResult {
    let model = with_path(lstm, LstmModel::from_json(&read_text(lstm)?))?;
    let policy = AlertPolicy::new(cfg.tau())?;
    let mut mon = Monitor::new(&model, cfg.windowing(), cfg.lstm.history, policy)?;
    let file = with_path(input, File::open(input).map_err(Error::from))?;
    let stream = with_path(input, ReadingStream::new(BufReader::new(file)))?;

    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let emit = |sink: &mut Box<dyn Write>, lines: Vec<AlertLine>| -> std::io::Result<()> {
        for l in lines {
            writeln!(sink, "{}", l.to_csv_line())?;
        }
        Ok(())
    };
    writeln!(sink, "{}", AlertLine::HEADER)?;
    for reading in stream {
        let reading = with_path(input, reading)?;
        emit(&mut sink, mon.push(reading)?)?;
    }
    emit(&mut sink, mon.finish()?)?;
    sink.flush()?;
    Ok(())
}

fn cost(input: &Path, out: &Path) -> CliResult {
    let f = with_path(input, File::open(input).map_err(Error::from))?;
    let ledgers = with_path(input, read_cost_csv(BufReader::new(f)))?;
    let [before, after] = ledgers.as_slice() else {
        return Err(Error::InvalidConfig(format!(
            "{}: expected 2 ledger rows (before, after), found {}",
            input.display(),
            ledgers.len()
        ))
        .into());
    };
    let report = cost_report(before, after);
    fs::create_dir_all(out)?;
    write_text(&out.join("cost_report.json"), &report.to_json()?)?;
    write_text(&out.join("cost_report.csv"), &report.to_csv())
}

fn benchmark(cfg: &RunConfig, out: &Path) -> CliResult {
    fs::create_dir_all(out)?;
    let (report, models) = match run_benchmark(&cfg.bench()) {
        Ok(r) => r,
        Err(abort) => {
            if let Some(partial) = abort.partial {
                write_text(&out.join("report.json"), &partial.to_json()?)?;
            }
            return Err(abort.error.into());
        }
    };
    write_text(&out.join("report.json"), &report.to_json()?)?;
    if let Some(m) = &report.metrics {
        write_text(&out.join("metrics.csv"), &m.to_csv())?;
    }
    write_text(&out.join("lead_times.csv"), &report.lead_times_csv())?;
    write_text(&out.join("loss_curve.csv"), &report.loss_curve_csv())?;
    let models_dir = out.join("models");
    write_text(&models_dir.join("svm.json"), &models.svm.to_json()?)?;
    write_text(&models_dir.join("lstm.json"), &models.lstm.to_json()?)?;
    write_text(&models_dir.join("rul_linear.json"), &models.rul_linear.to_json()?)
}
