//! The `pnu-auc` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
//! 4 numeric failure. Tables are written as CSV with a header row.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::analysis::{
    self, model_auc, PuVsBiasedConfig, SensitivityConfig, VarianceRatioConfig,
};
use crate::basis::{BasisConfig, KernelKind, DEFAULT_MAX_CENTERS};
use crate::data::{self, ClassPrior, Loaded, SyntheticSpec, TrainingData};
use crate::error::{Error, Result};
use crate::modelsel::{self, CvMode, HyperGrid};
use crate::oracle;
use crate::risk::{empirical_combined_risk, RiskFamily, RiskSpec, Scores};
use crate::solver::{BaseForms, Designs, TrainedModel};

#[derive(Debug, Parser)]
#[command(name = "pnu-auc", version, about = "AUC optimisation from positive, negative and unlabeled data")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "PNU_AUC_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the command's CSV table (default: stdout).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and print a one-row CSV summary
    /// (mode, family, parameter, sigma_factor, bandwidth, lambda, b, training_risk).
    Train(TrainArgs),
    /// Print `n_p,n_n,auc` for a model on labeled data.
    Eval(EvalArgs),
    /// Run a synthetic experiment and print its table.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Write a synthetic two-Gaussian dataset.
    Datagen(DatagenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pn,
    Pu,
    Nu,
    Pnu,
    Pnpu,
    Pnnu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Linear,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Labeled data file (labels 1, -1, 0 for unlabeled).
    #[arg(long)]
    pub data: PathBuf,

    /// File format (default: libsvm for .libsvm/.svm files, otherwise csv).
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Zero-based CSV column holding the label.
    #[arg(long, default_value_t = 0)]
    pub label_column: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Positive class prior theta_P in (0, 1).
    #[arg(long)]
    pub prior: Option<f64>,

    #[arg(long, value_enum)]
    pub mode: Mode,

    /// Combination weight for pnpu/pnnu.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Combination parameter for pnu, in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,

    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    pub kernel: KernelArg,

    /// Select hyperparameters by cross-validation. Pinned values
    /// (--lambda, --sigma-factor, --eta) fix their axis of the grid.
    #[arg(long)]
    pub cv: bool,

    #[arg(long, default_value_t = 5)]
    pub folds: usize,

    /// Regularization (default 0.1 without --cv).
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Multiplier of the median-distance bandwidth (default 1 without --cv).
    #[arg(long)]
    pub sigma_factor: Option<f64>,

    /// Maximum number of kernel centers.
    #[arg(long, default_value_t = DEFAULT_MAX_CENTERS)]
    pub max_centers: usize,

    /// Model file to write.
    #[arg(long)]
    pub model: PathBuf,

    /// Write the cross-validation table here.
    #[arg(long)]
    pub cv_report: Option<PathBuf>,

    /// Check the trained risk against a brute-force evaluation (exit 4 on
    /// disagreement above 1e-8).
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args, Clone)]
pub struct GeneratorArgs {
    /// Feature dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    /// Distance between the class means along the first axis.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,

    /// Standard deviation of the positive class.
    #[arg(long, default_value_t = 1.0)]
    pub scale_p: f64,

    /// Standard deviation of the negative class.
    #[arg(long, default_value_t = 1.0)]
    pub scale_n: f64,
}

impl GeneratorArgs {
    fn spec(&self, prior: f64, seed: u64) -> Result<SyntheticSpec> {
        if self.dim == 0 {
            return Err(Error::config("--dim must be at least 1"));
        }
        let mut s = SyntheticSpec::separated(self.dim, self.separation, ClassPrior::new(prior)?, seed);
        s.scale_p = self.scale_p;
        s.scale_n = self.scale_n;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Var[R_PNU^eta] / Var[R_PN] at the PN minimiser.
    /// Columns: eta, ratio, stderr, var_pn, var_pnu.
    VarianceRatio(VarianceRatioArgs),
    /// Held-out AUC under a perturbed prior.
    /// Columns: rho, prior_used, mean_auc, stderr.
    Sensitivity(SensitivityArgs),
    /// PU training against the unlabeled-as-negative baseline.
    /// Columns: prior, auc_pu, stderr_pu, auc_biased, stderr_biased, gap, stderr_gap.
    PuVsBiased(PuVsBiasedArgs),
}

#[derive(Debug, Args)]
pub struct VarianceRatioArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0.1)]
    pub prior: f64,
    #[arg(long, default_value_t = 10)]
    pub n_p: usize,
    #[arg(long, default_value_t = 10)]
    pub n_n: usize,
    #[arg(long, default_value_t = 10)]
    pub n_eval_p: usize,
    #[arg(long, default_value_t = 10)]
    pub n_eval_n: usize,
    #[arg(long, default_value_t = 300)]
    pub n_eval_u: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Spacing of the eta grid on [-1, 1].
    #[arg(long, default_value_t = 0.1)]
    pub eta_step: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_factor: f64,
    /// Train the PN scorer once instead of in every trial.
    #[arg(long)]
    pub fixed_classifier: bool,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// True prior.
    #[arg(long, default_value_t = 0.1)]
    pub prior: f64,
    /// Comma-separated noise values (default -0.09..0.09 in steps of 0.01).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rhos: Option<Vec<f64>>,
    /// Labeled positives (default round(50 prior)).
    #[arg(long)]
    pub n_p: Option<usize>,
    /// Labeled negatives (default round(50 (1 - prior))).
    #[arg(long)]
    pub n_n: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub n_u: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Fixed PNU eta; without it eta is cross-validated per trial.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Spacing of the cross-validated eta grid on [-1, 1].
    #[arg(long, default_value_t = 0.1)]
    pub eta_step: f64,
    #[arg(long, default_value_t = 2)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_factor: f64,
}

#[derive(Debug, Args)]
pub struct PuVsBiasedArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Comma-separated priors.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
    pub priors: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub n_p: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_u: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_factor: f64,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub prior: f64,
    #[arg(long, default_value_t = 0)]
    pub n_p: usize,
    #[arg(long, default_value_t = 0)]
    pub n_n: usize,
    #[arg(long, default_value_t = 0)]
    pub n_u: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Dataset file to write.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::config("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Train(a) => cmd_train(a, cli.seed, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Experiment(e) => cmd_experiment(e, cli.seed, out),
        Command::Datagen(a) => cmd_datagen(a, cli.seed),
    }
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn load_labeled(a: &DataArgs) -> Result<TrainingData> {
    let format = a.format.unwrap_or_else(|| {
        match a.data.extension().and_then(|e| e.to_str()) {
            Some("libsvm" | "svm") => Format::Libsvm,
            _ => Format::Csv,
        }
    });
    match format {
        Format::Libsvm => data::load_libsvm(&a.data),
        Format::Csv => match data::load_csv(&a.data, Some(a.label_column))? {
            Loaded::Labeled(d) => Ok(d),
            Loaded::Unlabeled(_) => Err(Error::data(format!("{}: no labeled rows", a.data.display()))),
        },
    }
}

fn mode_name(m: Mode) -> String {
    m.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string())
}

fn mode_family(a: &TrainArgs) -> Result<(Option<RiskFamily>, CvMode)> {
    let reject = |flag: &str| Err(Error::config(format!("{flag} is not used by {} mode", mode_name(a.mode))));
    if a.gamma.is_some() && !matches!(a.mode, Mode::Pnpu | Mode::Pnnu) {
        return reject("--gamma");
    }
    if a.eta.is_some() && a.mode != Mode::Pnu {
        return reject("--eta");
    }
    let gamma = || {
        a.gamma
            .ok_or_else(|| Error::config(format!("--gamma is required in {} mode", mode_name(a.mode))))
    };
    Ok(match a.mode {
        Mode::Pn => (Some(RiskFamily::Pn), CvMode::Pn),
        Mode::Pu => (Some(RiskFamily::Pu), CvMode::Pu),
        Mode::Nu => (Some(RiskFamily::Nu), CvMode::Nu),
        Mode::Pnpu => {
            let g = gamma()?;
            (Some(RiskFamily::Pnpu(g).validate()?), CvMode::Pnpu(g))
        }
        Mode::Pnnu => {
            let g = gamma()?;
            (Some(RiskFamily::Pnnu(g).validate()?), CvMode::Pnnu(g))
        }
        Mode::Pnu => match a.eta {
            Some(e) => (Some(RiskFamily::Pnu(e).validate()?), CvMode::Pnu),
            None if a.cv => (None, CvMode::Pnu),
            None => return Err(Error::config("--eta is required in pnu mode without --cv")),
        },
    })
}

fn cmd_train(a: &TrainArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let (family, cv_mode) = mode_family(a)?;
    let may_need_prior = family.is_none_or(|f| f.canonical().needs_prior());
    let prior = match a.prior {
        Some(p) => Some(ClassPrior::new(p)?),
        None if may_need_prior => {
            return Err(Error::config(format!(
                "--prior is required in {} mode",
                mode_name(a.mode)
            )))
        }
        None => None,
    };
    if a.max_centers == 0 {
        return Err(Error::config("--max-centers must be at least 1"));
    }
    if !a.cv && a.cv_report.is_some() {
        return Err(Error::config("--cv-report needs --cv"));
    }
    let basis = BasisConfig {
        kernel: match a.kernel {
            KernelArg::Gaussian => KernelKind::Gaussian,
            KernelArg::Linear => KernelKind::Linear,
        },
        max_centers: a.max_centers,
        ..BasisConfig::default()
    };
    let mut data = load_labeled(&a.data)?;
    if let Some(p) = prior {
        data = data.with_prior(p);
    }

    let (model, factor) = if a.cv {
        let defaults = HyperGrid::default();
        let grid = HyperGrid {
            bandwidth_factors: a.sigma_factor.map_or(defaults.bandwidth_factors, |f| vec![f]),
            lambdas: a.lambda.map_or(defaults.lambdas, |l| vec![l]),
            etas: a.eta.map_or(defaults.etas, |e| vec![e]),
            folds: a.folds,
            basis,
        };
        let (report, model) = modelsel::cross_validate(&data, &grid, cv_mode, seed)?;
        if let Some(p) = &a.cv_report {
            report.save(p)?;
        }
        (model, report.selected().candidate.bandwidth_factor)
    } else {
        let family = family.expect("pinned training has a family");
        let factor = a.sigma_factor.unwrap_or(1.0);
        let model = modelsel::fit(&data, &basis, factor, family, a.lambda.unwrap_or(0.1), seed)?;
        (model, factor)
    };

    let risk = training_risk(&model, &data)?;
    if a.verify {
        verify(&model, &data, risk)?;
    }
    model.save(&a.model)?;

    let family = model.family();
    let bandwidth = match model.map().kernel() {
        crate::basis::Kernel::Gaussian { bandwidth } => bandwidth.to_string(),
        crate::basis::Kernel::Linear => String::new(),
    };
    let row = vec![
        format!("{:?}", a.mode).to_lowercase(),
        family.name().to_string(),
        family.parameter().map_or_else(String::new, |p| p.to_string()),
        factor.to_string(),
        bandwidth,
        model.lambda().to_string(),
        model.map().len().to_string(),
        risk.to_string(),
    ];
    with_output(out, |w| {
        analysis::write_table(
            w,
            &["mode", "family", "parameter", "sigma_factor", "bandwidth", "lambda", "b", "training_risk"],
            [row],
        )
    })
}

struct TrainScores {
    p: Vec<f64>,
    n: Vec<f64>,
    u: Vec<f64>,
}

fn scores_of(model: &TrainedModel, data: &TrainingData) -> Result<TrainScores> {
    Ok(TrainScores {
        p: model.score(data.positives())?,
        n: model.score(data.negatives())?,
        u: model.score(data.unlabeled())?,
    })
}

/// Squared-loss risk of the model's own family on its training data.
fn training_risk(model: &TrainedModel, data: &TrainingData) -> Result<f64> {
    let s = scores_of(model, data)?;
    let scores = Scores {
        positive: &s.p,
        negative: &s.n,
        unlabeled: &s.u,
    };
    empirical_combined_risk(&RiskSpec::squared(model.family())?, &scores, model.prior())
}

/// Compares the fast risk, the quadratic form at the trained weights and a
/// nested-loop evaluation.
fn verify(model: &TrainedModel, data: &TrainingData, risk: f64) -> Result<()> {
    let family = model.family();
    let spec = RiskSpec::squared(family)?;
    let s = scores_of(model, data)?;
    let scores = Scores {
        positive: &s.p,
        negative: &s.n,
        unlabeled: &s.u,
    };
    let naive = oracle::naive_risk(&spec, &scores, model.prior())?;
    let designs = Designs::for_families(model.map(), data, &[family])?;
    let form = BaseForms::for_families(&designs, model.prior(), &[family])?.combine(family)?;
    let value = form.value(&DVector::from_column_slice(model.weights()));
    let scale = naive.abs().max(1.0);
    for (name, v) in [("closed-form risk", risk), ("quadratic form", value)] {
        let gap = (v - naive).abs() / scale;
        if gap.is_nan() || gap > 1e-8 {
            return Err(Error::numeric(format!(
                "verification failed: {name} {v} differs from brute force {naive} (relative {gap:.3e})"
            )));
        }
    }
    eprintln!("verified: training risk {naive} agrees across implementations");
    Ok(())
}

fn cmd_eval(a: &EvalArgs, out: Option<&Path>) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let data = load_labeled(&a.data)?;
    if data.n_p() == 0 || data.n_n() == 0 {
        return Err(Error::data("evaluation needs positive and negative samples"));
    }
    if data.dim() != model.map().dim() {
        return Err(Error::data(format!(
            "data has dimension {}, model expects {}",
            data.dim(),
            model.map().dim()
        )));
    }
    let auc = model_auc(&model, &data)?;
    let row = vec![data.n_p().to_string(), data.n_n().to_string(), format!("{auc:.6}")];
    with_output(out, |w| analysis::write_table(w, &["n_p", "n_n", "auc"], [row]))
}

fn eta_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::config("--eta-step must lie in (0, 1]"));
    }
    let k = (1.0 / step).round() as i64;
    if ((k as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::config("--eta-step must divide 1"));
    }
    Ok((-k..=k).map(|i| i as f64 / k as f64).collect())
}

fn cmd_experiment(e: &ExperimentCommand, seed: u64, out: Option<&Path>) -> Result<()> {
    match e {
        ExperimentCommand::VarianceRatio(a) => {
            let mut cfg = VarianceRatioConfig::new(a.generator.spec(a.prior, seed)?, a.n_p, a.n_n);
            cfg.n_eval_p = a.n_eval_p;
            cfg.n_eval_n = a.n_eval_n;
            cfg.n_eval_u = a.n_eval_u;
            cfg.trials = a.trials;
            cfg.etas = eta_grid(a.eta_step)?;
            cfg.lambda = a.lambda;
            cfg.bandwidth_factor = a.sigma_factor;
            cfg.fixed_classifier = a.fixed_classifier;
            cfg.bootstrap = a.bootstrap;
            cfg.seed = seed;
            let curve = analysis::variance_ratio_experiment(&cfg)?;
            with_output(out, |w| curve.write_csv(w))
        }
        ExperimentCommand::Sensitivity(a) => {
            let mut cfg = SensitivityConfig::new(a.generator.spec(a.prior, seed)?);
            if let Some(r) = &a.rhos {
                cfg.rhos = r.clone();
            }
            if let Some(n) = a.n_p {
                cfg.n_p = n;
            }
            if let Some(n) = a.n_n {
                cfg.n_n = n;
            }
            cfg.n_u = a.n_u;
            cfg.trials = a.trials;
            cfg.eta = a.eta;
            cfg.etas = eta_grid(a.eta_step)?;
            cfg.folds = a.folds;
            cfg.lambda = a.lambda;
            cfg.bandwidth_factor = a.sigma_factor;
            cfg.seed = seed;
            let rows = analysis::prior_sensitivity_experiment(&cfg)?;
            with_output(out, |w| analysis::write_sensitivity_csv(&rows, w))
        }
        ExperimentCommand::PuVsBiased(a) => {
            if a.priors.is_empty() {
                return Err(Error::config("--priors is empty"));
            }
            let results = a
                .priors
                .iter()
                .map(|&p| {
                    let mut cfg = PuVsBiasedConfig::new(a.generator.spec(p, seed)?);
                    cfg.n_p = a.n_p;
                    cfg.n_u = a.n_u;
                    cfg.trials = a.trials;
                    cfg.lambda = a.lambda;
                    cfg.bandwidth_factor = a.sigma_factor;
                    cfg.seed = seed;
                    analysis::pu_vs_biased_experiment(&cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            with_output(out, |w| analysis::write_pu_vs_biased_csv(&results, w))
        }
    }
}

fn cmd_datagen(a: &DatagenArgs, seed: u64) -> Result<()> {
    let spec = a.generator.spec(a.prior, seed)?;
    let data = data::generate_synthetic(&spec, a.n_p, a.n_n, a.n_u)?;
    data::save(&data, &a.out, a.format == Format::Libsvm)
}
