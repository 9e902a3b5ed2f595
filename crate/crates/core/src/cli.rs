//! The `slova` command-line tool. All file I/O of the crate happens here or in
//! [`crate::io`].
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid input, 4 numeric failure.
//! Errors are printed to stderr as one line, `error[CODE]: message`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::calibrate::{
    build_calibration_dataset, fit_exponential, make_noise_samples, CalibrationModel,
};
use crate::error::{Error, Result};
use crate::experiments::{self as ex, CalibrationSettings, Method, ToyBundle, ToyConfig};
use crate::io::{self, fmt_f64, Table};
use crate::matrix::{LabelVector, LogitMatrix, Matrix, ProbKind, ProbMatrix};
use crate::metrics::{self, EvalReport};
use crate::nets::{Generator, Head, MlpModel};
use crate::probs;

/// Version of every JSON report written by the CLI.
pub const REPORT_VERSION: u32 = 1;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error
  3  invalid input (validation, I/O, format version)
  4  numeric failure (non-finite values, diverged training)";

#[derive(Debug, Parser)]
#[command(name = "slova", version, about = "Single-label one-vs-all probabilities, calibration and metrics", after_help = EXIT_CODES)]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config file; unknown keys are rejected. Flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for all outputs (created if missing).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Suppress progress messages and warnings.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a logit CSV into probabilities and confidence columns.
    Transform {
        /// Logit CSV, one row per sample.
        logits: PathBuf,
        /// Output head the logits came from.
        #[arg(long, value_enum, default_value = "ova")]
        head: HeadArg,
    },
    /// Fit an exponential calibration map to SLOVA probabilities.
    Calibrate {
        /// SLOVA probabilities; `slova_*` columns are used when present.
        probs: PathBuf,
        /// Integer class labels, one per row.
        labels: PathBuf,
        /// SLOVA probabilities of noise inputs, labelled "none".
        #[arg(long, conflicts_with_all = ["model", "features"])]
        noise_probs: Option<PathBuf>,
        /// OVA network used to score generated noise inputs (needs --features).
        #[arg(long, requires = "features")]
        model: Option<PathBuf>,
        /// Validation features; noise is drawn from their ranges (needs --model).
        #[arg(long, requires = "model")]
        features: Option<PathBuf>,
        /// Number of power terms in the calibration map.
        #[arg(long = "M")]
        m: Option<usize>,
        /// Number of generated noise inputs.
        #[arg(long)]
        n_b: Option<usize>,
        /// Adam epochs; raised when needed to reach the minimum step count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Compute accuracy, ECE, NLL, Brier and MMC for a probability CSV.
    Evaluate {
        /// Probability CSV, one row per sample.
        probs: PathBuf,
        /// Integer class labels, one per row.
        labels: PathBuf,
        /// Calibration model applied to the (SLOVA) probabilities first.
        #[arg(long)]
        model: Option<PathBuf>,
        /// How the probabilities were produced.
        #[arg(long, value_enum, default_value = "slova")]
        kind: KindArg,
        /// Number of ECE bins.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Generate the synthetic splits and train the OVA and softmax networks.
    TrainToy {
        /// Synthetic data generator.
        #[arg(long, value_enum)]
        generator: Option<GeneratorArg>,
        /// Number of classes.
        #[arg(long)]
        n_classes: Option<usize>,
        /// Input dimension.
        #[arg(long)]
        dim: Option<usize>,
        /// Standard deviation of the class noise.
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Training epochs for both networks.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Run one of the experiment harnesses end to end.
    Experiment {
        /// Experiment to run.
        #[arg(value_enum)]
        name: ExperimentName,
        /// Trained OVA network (JSON); trained from the config when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Trained softmax network (JSON); trained from the config when omitted.
        #[arg(long)]
        softmax_model: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadArg {
    Ova,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Slova,
    Sigmoid,
    Softmax,
    Calibrated,
}

impl KindArg {
    fn kind(self) -> ProbKind {
        match self {
            KindArg::Slova => ProbKind::Slova,
            KindArg::Sigmoid => ProbKind::Sigmoid,
            KindArg::Softmax => ProbKind::Softmax,
            KindArg::Calibrated => ProbKind::Calibrated,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            KindArg::Slova => "slova_",
            KindArg::Sigmoid => "sigmoid_",
            KindArg::Softmax => "softmax_",
            KindArg::Calibrated => "calibrated_",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    GaussianBlobs,
    TwoMoons,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Saturation,
    Plane,
    Shift,
    Ood,
    Ablation,
    Stability,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Saturation => "saturation",
            ExperimentName::Plane => "plane",
            ExperimentName::Shift => "shift",
            ExperimentName::Ood => "ood",
            ExperimentName::Ablation => "ablation",
            ExperimentName::Stability => "stability",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSettings {
    pub bins: usize,
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            bins: metrics::DEFAULT_BINS,
        }
    }
}

/// Effective configuration; echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub calibration: CalibrationSettings,
    pub metric: MetricSettings,
    pub toy: ToyConfig,
    pub saturation: ex::SaturationConfig,
    pub plane: ex::PlaneConfig,
    pub shift: ex::ShiftConfig,
    pub ood: ex::OodConfig,
    pub stability: ex::StabilityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: "out".into(),
            calibration: CalibrationSettings::default(),
            metric: MetricSettings::default(),
            toy: ToyConfig::default(),
            saturation: Default::default(),
            plane: Default::default(),
            shift: Default::default(),
            ood: Default::default(),
            stability: Default::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))
    }
}

/// JSON envelope of every report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report<T> {
    pub schema: String,
    pub version: u32,
    pub config: RunConfig,
    /// Input file paths as given on the command line.
    pub inputs: BTreeMap<String, String>,
    pub result: T,
}

/// Result of `train-toy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainToyResult {
    pub layer_dims: Vec<usize>,
    pub ova_final_loss: f64,
    pub softmax_final_loss: f64,
    pub ova_train_accuracy: f64,
    pub ova_test_accuracy: f64,
    pub softmax_train_accuracy: f64,
    pub softmax_test_accuracy: f64,
}

/// Result of `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateResult {
    pub model: CalibrationModel,
    pub n_pairs: usize,
    pub n_noise_rows: usize,
    pub window_size: usize,
    pub n_fit_points: usize,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    eprint!("{}", e.render());
                    eprintln!("error[E_USAGE]: missing command");
                    2
                }
                _ => {
                    eprintln!("error[E_USAGE]: {}", clap_message(&e));
                    2
                }
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            e.exit_code()
        }
    }
}

fn clap_message(e: &clap::Error) -> String {
    let text = e.render().to_string();
    let parts: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| {
            !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information")
        })
        .map(|l| l.strip_prefix("error: ").unwrap_or(l))
        .collect();
    parts.join(" ")
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        io::write_string(&p, contents)?;
        self.note(format!("wrote {}", p.display()));
        Ok(())
    }

    fn write_report<T: Serialize>(
        &self,
        name: &str,
        schema: &str,
        inputs: BTreeMap<String, String>,
        result: T,
    ) -> Result<()> {
        let report = Report {
            schema: schema.to_string(),
            version: REPORT_VERSION,
            config: self.cfg.clone(),
            inputs,
            result,
        };
        let mut s = serde_json::to_string_pretty(&report)?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_json(&io::read_to_string(p)?)
            .map_err(|e| Error::validation(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.display().to_string();
    }
    let mut inputs = BTreeMap::new();
    let mut add = |k: &str, p: &Path| {
        inputs.insert(k.to_string(), p.display().to_string());
    };
    match &cli.command {
        Command::Transform { logits, .. } => add("logits", logits),
        Command::Calibrate {
            probs,
            labels,
            noise_probs,
            model,
            features,
            m,
            n_b,
            epochs,
        } => {
            add("probs", probs);
            add("labels", labels);
            for (k, v) in [
                ("noise_probs", noise_probs),
                ("model", model),
                ("features", features),
            ] {
                if let Some(p) = v {
                    add(k, p);
                }
            }
            if let Some(v) = m {
                cfg.calibration.m = *v;
            }
            if let Some(v) = n_b {
                cfg.calibration.n_b = *v;
            }
            if let Some(v) = epochs {
                cfg.calibration.epochs = *v;
            }
        }
        Command::Evaluate {
            probs,
            labels,
            model,
            bins,
            ..
        } => {
            add("probs", probs);
            add("labels", labels);
            if let Some(p) = model {
                add("model", p);
            }
            if let Some(b) = bins {
                cfg.metric.bins = *b;
            }
        }
        Command::TrainToy {
            generator,
            n_classes,
            dim,
            noise_sigma,
            epochs,
        } => {
            if let Some(g) = generator {
                cfg.toy.generator = match g {
                    GeneratorArg::GaussianBlobs => Generator::GaussianBlobs,
                    GeneratorArg::TwoMoons => Generator::TwoMoons,
                };
            }
            if let Some(v) = n_classes {
                cfg.toy.n_classes = *v;
            }
            if let Some(v) = dim {
                cfg.toy.dim = *v;
            }
            if let Some(v) = noise_sigma {
                cfg.toy.noise_sigma = *v;
            }
            if let Some(v) = epochs {
                cfg.toy.epochs = *v;
            }
        }
        Command::Experiment {
            model,
            softmax_model,
            ..
        } => {
            if let Some(p) = model {
                add("model", p);
            }
            if let Some(p) = softmax_model {
                add("softmax_model", p);
            }
        }
    }
    let ctx = Ctx {
        out: PathBuf::from(&cfg.out_dir),
        cfg,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Transform { logits, head } => cmd_transform(&ctx, logits, *head),
        Command::Calibrate {
            probs,
            labels,
            noise_probs,
            model,
            features,
            ..
        } => cmd_calibrate(
            &ctx,
            inputs,
            probs,
            labels,
            noise_probs.as_deref(),
            model.as_deref().zip(features.as_deref()),
        ),
        Command::Evaluate {
            probs,
            labels,
            model,
            kind,
            ..
        } => cmd_evaluate(&ctx, inputs, probs, labels, model.as_deref(), *kind),
        Command::TrainToy { .. } => cmd_train_toy(&ctx),
        Command::Experiment {
            name,
            model,
            softmax_model,
        } => cmd_experiment(
            &ctx,
            inputs,
            *name,
            model.as_deref(),
            softmax_model.as_deref(),
        ),
    }
}

/// Output column names: `<prefix><input column>` for each input column.
fn prefixed(prefix: &str, header: &[String]) -> Vec<String> {
    header.iter().map(|h| format!("{prefix}{h}")).collect()
}

pub fn transform_table(table: &Table, head: HeadArg) -> Result<Table> {
    let logits = LogitMatrix::new(table.values.clone())?;
    let n = logits.n_samples();
    let (header, blocks): (Vec<String>, Vec<Vec<f64>>) = match head {
        HeadArg::Ova => {
            let sig = probs::sigmoid_probs(&logits);
            let slova = probs::slova_probs(&sig);
            let mut h = prefixed("sigmoid_", &table.header);
            h.extend(prefixed("slova_", &table.header));
            h.extend(["conf_ova", "conf_slova", "none_prob"].map(String::from));
            (
                h,
                vec![
                    sig.values().as_slice().to_vec(),
                    slova.values().as_slice().to_vec(),
                    sig.confidences(),
                    slova.confidences(),
                    probs::none_prob(&sig),
                ],
            )
        }
        HeadArg::Softmax => {
            let p = probs::softmax_probs(&logits, 1.0);
            let mut h = prefixed("softmax_", &table.header);
            h.push("conf_softmax".into());
            (h, vec![p.values().as_slice().to_vec(), p.confidences()])
        }
    };
    let mut data = Vec::with_capacity(n * header.len());
    for i in 0..n {
        for b in &blocks {
            let w = b.len() / n;
            data.extend_from_slice(&b[i * w..(i + 1) * w]);
        }
    }
    Ok(Table {
        values: Matrix::from_vec(n, header.len(), data)?,
        header,
    })
}

fn cmd_transform(ctx: &Ctx, logits: &Path, head: HeadArg) -> Result<()> {
    let table = io::read_matrix_csv(logits)?;
    let out = transform_table(&table, head)?;
    ctx.write(
        "transform.csv",
        &io::matrix_csv_string(&out.header, &out.values)?,
    )
}

/// Picks the `prefix*` columns when any exist, else every column.
fn prob_columns(table: &Table, prefix: &str) -> Matrix {
    let idx: Vec<usize> = table
        .header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with(prefix))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return table.values.clone();
    }
    let mut data = Vec::with_capacity(table.values.rows() * idx.len());
    for row in table.values.iter_rows() {
        data.extend(idx.iter().map(|&j| row[j]));
    }
    Matrix::from_vec(table.values.rows(), idx.len(), data).expect("shape is consistent")
}

fn read_probs(path: &Path, kind: KindArg) -> Result<ProbMatrix> {
    let table = io::read_matrix_csv(path)?;
    ProbMatrix::new(prob_columns(&table, kind.prefix()), kind.kind())
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<MlpModel> {
    MlpModel::from_json(&io::read_to_string(path)?)
}

fn cmd_calibrate(
    ctx: &Ctx,
    inputs: BTreeMap<String, String>,
    probs_path: &Path,
    labels_path: &Path,
    noise_probs: Option<&Path>,
    model_and_features: Option<(&Path, &Path)>,
) -> Result<()> {
    let cal = &ctx.cfg.calibration;
    let p = read_probs(probs_path, KindArg::Slova)?;
    let labels = io::read_labels(labels_path, p.n_classes())?;
    let noise = match (noise_probs, model_and_features) {
        (Some(np), _) => Some(read_probs(np, KindArg::Slova)?),
        (None, Some((model_path, features_path))) => {
            let model = read_model(model_path)?;
            let features = io::read_matrix_csv(features_path)?.values;
            let count = cal.noise_count(features.rows());
            let x = make_noise_samples(&features, count, ctx.cfg.seed, cal.noise_mode);
            if count == 0 {
                None
            } else {
                Some(ex::slova_of(&model, &x)?)
            }
        }
        (None, None) => None,
    };
    let ds = build_calibration_dataset(&p, &labels, noise.as_ref(), cal.n_b)?;
    if ds.fit_points.len() < cal.n_b {
        ctx.note(format!(
            "warning: n_b = {} exceeds the {} averaged points; using all of them",
            cal.n_b,
            ds.fit_points.len()
        ));
    }
    let model = fit_exponential(&ds, &cal.fit_config(ctx.cfg.seed))?;
    ctx.write("model.json", &format!("{}\n", model.to_json()?))?;

    let mut diag = String::from("avg_conf,avg_acc,fitted\n");
    for &(c, a) in &ds.fit_points {
        diag.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(c),
            fmt_f64(a),
            fmt_f64(model.eval(c))
        ));
    }
    ctx.write("fit_diagnostics.csv", &diag)?;
    let result = CalibrateResult {
        n_pairs: ds.sorted_probs.len(),
        n_noise_rows: noise.as_ref().map_or(0, ProbMatrix::n_samples),
        window_size: ds.window_size,
        n_fit_points: ds.fit_points.len(),
        model,
    };
    ctx.write_report("calibrate.report.json", "slova.calibrate", inputs, result)
}

fn cmd_evaluate(
    ctx: &Ctx,
    inputs: BTreeMap<String, String>,
    probs_path: &Path,
    labels_path: &Path,
    model: Option<&Path>,
    kind: KindArg,
) -> Result<()> {
    let mut p = read_probs(probs_path, kind)?;
    let labels = io::read_labels(labels_path, p.n_classes())?;
    if let Some(mp) = model {
        if kind != KindArg::Slova {
            return Err(Error::Usage(
                "--model applies to SLOVA probabilities only (use --kind slova)".into(),
            ));
        }
        let m = CalibrationModel::from_json(&io::read_to_string(mp)?)?;
        p = m.apply(&p);
    }
    let report = EvalReport::evaluate(&p, &labels, ctx.cfg.metric.bins)?;
    ctx.write("reliability.csv", &io::bins_csv_string(&report.bins))?;
    ctx.write_report("report.json", "slova.evaluate", inputs, report)
}

fn accuracy_of(model: &MlpModel, x: &Matrix, labels: &LabelVector) -> Result<f64> {
    let logits = model.forward(x)?;
    let hits = logits
        .values()
        .iter_rows()
        .zip(labels.as_slice())
        .filter(|(r, &y)| crate::matrix::argmax(r) == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

fn cmd_train_toy(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    ctx.note("training OVA and softmax networks");
    let bundle = ex::prepare_toy(&cfg.toy, cfg.seed)?;
    for (name, ds) in [
        ("train", &bundle.train),
        ("val", &bundle.val),
        ("test", &bundle.test),
    ] {
        ctx.write(
            &format!("{name}.csv"),
            &io::dataset_csv_string(&ds.features, ds.labels.as_slice())?,
        )?;
    }
    ctx.write("model_ova.json", &format!("{}\n", bundle.ova.to_json()?))?;
    ctx.write(
        "model_softmax.json",
        &format!("{}\n", bundle.softmax.to_json()?),
    )?;
    let result = TrainToyResult {
        layer_dims: cfg.toy.layer_dims(),
        ova_final_loss: bundle.ova_loss,
        softmax_final_loss: bundle.softmax_loss,
        ova_train_accuracy: accuracy_of(&bundle.ova, &bundle.train.features, &bundle.train.labels)?,
        ova_test_accuracy: accuracy_of(&bundle.ova, &bundle.test.features, &bundle.test.labels)?,
        softmax_train_accuracy: accuracy_of(
            &bundle.softmax,
            &bundle.train.features,
            &bundle.train.labels,
        )?,
        softmax_test_accuracy: accuracy_of(
            &bundle.softmax,
            &bundle.test.features,
            &bundle.test.labels,
        )?,
    };
    ctx.write_report(
        "train_toy.report.json",
        "slova.train_toy",
        BTreeMap::new(),
        result,
    )
}

fn check_model(model: &MlpModel, head: Head, toy: &ToyConfig, path: &Path) -> Result<()> {
    if model.head() != head || model.input_dim() != toy.dim || model.n_classes() != toy.n_classes {
        return Err(Error::validation(format!(
            "{}: expected a {:?} model with {} inputs and {} classes, found {:?} with {} and {}",
            path.display(),
            head,
            toy.dim,
            toy.n_classes,
            model.head(),
            model.input_dim(),
            model.n_classes()
        )));
    }
    Ok(())
}

/// Data splits from the config plus the networks, loaded or trained.
fn load_bundle(
    ctx: &Ctx,
    ova: Option<&Path>,
    softmax: Option<&Path>,
    need_softmax: bool,
) -> Result<ToyBundle> {
    let cfg = &ctx.cfg;
    let [train, val, test] = ex::make_splits(&cfg.toy, cfg.seed)?;
    let get = |path: Option<&Path>, head: Head| -> Result<(MlpModel, f64)> {
        match path {
            Some(p) => {
                let m = read_model(p)?;
                check_model(&m, head, &cfg.toy, p)?;
                Ok((m, f64::NAN))
            }
            None => {
                ctx.note(format!("training {head:?} network"));
                let out = ex::train_toy_model(&cfg.toy, &train, head, cfg.seed)?;
                Ok((out.model, out.final_loss))
            }
        }
    };
    let (ova, ova_loss) = get(ova, Head::OvaSigmoid)?;
    let (softmax, softmax_loss) = if need_softmax {
        get(softmax, Head::Softmax)?
    } else {
        (
            MlpModel::zeros(&cfg.toy.layer_dims(), Head::Softmax)?,
            f64::NAN,
        )
    };
    Ok(ToyBundle {
        train,
        val,
        test,
        ova,
        softmax,
        ova_loss,
        softmax_loss,
    })
}

fn cmd_experiment(
    ctx: &Ctx,
    inputs: BTreeMap<String, String>,
    name: ExperimentName,
    ova: Option<&Path>,
    softmax: Option<&Path>,
) -> Result<()> {
    let cfg = &ctx.cfg;
    let seed = cfg.seed;
    let bins = cfg.metric.bins;
    let need_softmax = matches!(
        name,
        ExperimentName::Shift | ExperimentName::Ood | ExperimentName::Ablation
    );
    let bundle = load_bundle(ctx, ova, softmax, need_softmax)?;
    let schema = format!("slova.experiment.{}", name.as_str());
    let report_name = format!("{}.report.json", name.as_str());
    let csv_name = format!("{}.csv", name.as_str());
    let post = || -> Result<ex::PostHoc> {
        ctx.note("fitting temperature and calibration on the validation split");
        ex::fit_post_hoc(&bundle, &cfg.calibration, seed)
    };
    match name {
        ExperimentName::Saturation => {
            let r = ex::saturation_experiment(
                &bundle.ova,
                &bundle.test.features,
                &cfg.saturation,
                seed,
            )?;
            if r.summary.degenerate {
                ctx.note("warning: degenerate model (no saturated direction or constant output)");
            }
            ctx.write(&csv_name, &ex::saturation_csv(&r))?;
            ctx.write_report(&report_name, &schema, inputs, r)
        }
        ExperimentName::Plane => {
            let triplets =
                ex::random_triplets(bundle.test.features.rows(), cfg.plane.n_triplets, seed);
            let r =
                ex::plane_experiment(&bundle.ova, &bundle.test.features, &triplets, &cfg.plane)?;
            if r.n_skipped_collinear > 0 {
                ctx.note(format!(
                    "warning: skipped {} collinear triplets",
                    r.n_skipped_collinear
                ));
            }
            ctx.write(&csv_name, &ex::plane_csv(&r))?;
            ctx.write_report(&report_name, &schema, inputs, r)
        }
        ExperimentName::Shift => {
            let post = post()?;
            let r = ex::shift_experiment(&bundle, &post, &cfg.shift, &Method::ALL, bins, seed)?;
            ctx.write(&csv_name, &ex::shift_csv(&r))?;
            ctx.write_report(&report_name, &schema, inputs, r)
        }
        ExperimentName::Ood => {
            let post = post()?;
            let sets = ex::ood_datasets(&bundle.train, &cfg.ood, seed)?;
            let r = ex::ood_experiment(&bundle, &post, &sets, &Method::ALL)?;
            ctx.write(&csv_name, &ex::ood_csv(&r))?;
            ctx.write_report(&report_name, &schema, inputs, r)
        }
        ExperimentName::Ablation => {
            let post = post()?;
            let r = ex::ablation_experiment(&bundle, &post, &cfg.shift, bins, seed)?;
            if !r.ova_variants_same_accuracy {
                return Err(Error::Numeric(
                    "OVA-derived variants disagree on accuracy".into(),
                ));
            }
            ctx.write_report(&report_name, &schema, inputs, r)
        }
        ExperimentName::Stability => {
            let data = ex::StabilityData::from_bundle(&bundle, &cfg.calibration, seed)?;
            let r = ex::stability_experiment(&data, &cfg.calibration, &cfg.stability, bins, seed)?;
            ctx.write(&csv_name, &ex::stability_csv(&r))?;
            ctx.write_report(&report_name, &schema, inputs, r)
        }
    }
}
