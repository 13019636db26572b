//! AUC, variance analysis of the risk estimators and the synthetic
//! experiments built on them.
//!
//! Every experiment derives its random streams from `(seed, trial)` and runs
//! trials in parallel, gathering results by trial index, so tables do not
//! depend on the thread count.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::basis::{BasisConfig, FeatureMap};
use crate::data::{generate_synthetic, ClassPrior, SampleMatrix, SyntheticSpec, TrainingData};
use crate::error::{Error, Result};
use crate::modelsel::{cross_validate, fit, CvMode, HyperGrid};
use crate::risk::{empirical_combined_risk, ranked_fraction, LossKind, RiskFamily, RiskSpec, Scores};
use crate::rng;
use crate::solver::{self, Scorer, TrainedModel};

/// Fraction of positive/negative pairs ranked correctly, ties counting 1/2.
pub fn auc(scores_p: &[f64], scores_n: &[f64]) -> Result<f64> {
    if scores_p.is_empty() || scores_n.is_empty() {
        return Err(Error::data("AUC needs positive and negative scores"));
    }
    Ok(ranked_fraction(scores_p, scores_n))
}

/// AUC of `model` on labeled data.
pub fn model_auc(model: &TrainedModel, data: &TrainingData) -> Result<f64> {
    auc(&model.score(data.positives())?, &model.score(data.negatives())?)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0)
}

fn stderr(v: &[f64]) -> f64 {
    (variance(v) / v.len() as f64).sqrt()
}

/// Variances and covariances of pairwise losses at a fixed scorer.
///
/// Pairs sharing a sample share it in the same position: `pp = l(P - P')`
/// with the first positive of `l(P - N)` and `l(P - U)`, and `nn = l(N' - N)`
/// with the negative of `l(P - N)` and `l(U - N)`. Negating every score maps
/// the N-side quantities onto the P-side ones.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossMoments {
    pub sigma2_pn: f64,
    pub sigma2_pp: f64,
    pub sigma2_nn: f64,
    pub tau_pn_pp: f64,
    pub tau_pn_nn: f64,
    pub tau_pu_pp: f64,
    pub tau_nu_nn: f64,
    pub tau_pn_pu: f64,
    pub tau_pn_nu: f64,
}

/// Loss moments together with the aggregates `psi_*` that give the
/// large-`n_U` variance of the combined estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceComponents {
    pub moments: LossMoments,
    pub prior: ClassPrior,
    pub n_p: usize,
    pub n_n: usize,
    pub psi_pn: f64,
    pub psi_pu: f64,
    pub psi_pp: f64,
    pub psi_nu: f64,
    pub psi_nn: f64,
    /// Monte Carlo standard error of `sigma2_pn` (0 when built by hand).
    pub sigma2_pn_stderr: f64,
}

impl VarianceComponents {
    pub fn new(moments: LossMoments, prior: ClassPrior, n_p: usize, n_n: usize) -> Result<Self> {
        if n_p == 0 || n_n == 0 {
            return Err(Error::config("variance components need positive class counts"));
        }
        let m = &moments;
        if [m.sigma2_pn, m.sigma2_pp, m.sigma2_nn].iter().any(|v| *v < 0.0) {
            return Err(Error::config("variances must be non-negative"));
        }
        let (tp, tn) = (prior.theta_p(), prior.theta_n());
        let (np, nn) = (n_p as f64, n_n as f64);
        Ok(Self {
            moments,
            prior,
            n_p,
            n_n,
            psi_pn: m.sigma2_pn / (np * nn),
            psi_pu: tp * tp / (tn * tn * np * np) * m.sigma2_pp - tp / (tn * tn * np) * m.tau_pu_pp,
            psi_pp: m.tau_pn_pu / (tn * np) - tp / (tn * np) * m.tau_pn_pp,
            psi_nu: tn * tn / (tp * tp * nn * nn) * m.sigma2_nn - tn / (tp * tp * nn) * m.tau_nu_nn,
            psi_nn: m.tau_pn_nu / (tp * nn) - tn / (tp * nn) * m.tau_pn_nn,
            sigma2_pn_stderr: 0.0,
        })
    }

    /// `(1-g)^2 psi_PN + g^2 psi_XU + g(1-g) psi_XX`.
    pub fn predicted_variance(&self, which: Combination, gamma: f64) -> f64 {
        let (xu, xx) = self.pair(which);
        (1.0 - gamma).powi(2) * self.psi_pn + gamma * gamma * xu + gamma * (1.0 - gamma) * xx
    }

    fn pair(&self, which: Combination) -> (f64, f64) {
        match which {
            Combination::Pnpu => (self.psi_pu, self.psi_pp),
            Combination::Pnnu => (self.psi_nu, self.psi_nn),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    Pnpu,
    Pnnu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalGamma {
    pub gamma: f64,
    /// Whether the sufficient conditions for a variance below the PN
    /// estimator's on `(0, 2 gamma)` hold.
    pub conditions_hold: bool,
}

/// The variance-minimising combination weight
/// `(psi_PN - psi_XX/2) / (psi_PN + psi_XU - psi_XX)`.
pub fn optimal_gamma(c: &VarianceComponents, which: Combination) -> Result<OptimalGamma> {
    let (xu, xx) = c.pair(which);
    let denom = c.psi_pn + xu - xx;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::numeric(
            "optimal combination weight is undefined: zero denominator",
        ));
    }
    Ok(OptimalGamma {
        gamma: (c.psi_pn - xx / 2.0) / denom,
        conditions_hold: c.psi_pn + xu > xx && 2.0 * c.psi_pn > xx,
    })
}

const TAG_MC: u64 = 40;

/// Monte Carlo plug-in estimates of the loss moments of `f` under
/// `generator`, assembled into components for class counts `(n_p, n_n)`.
pub fn estimate_variance_components(
    f: &dyn Scorer,
    generator: &SyntheticSpec,
    n_p: usize,
    n_n: usize,
    mc_samples: usize,
    loss: LossKind,
    seed: u64,
) -> Result<VarianceComponents> {
    if mc_samples < 1000 {
        return Err(Error::config(format!(
            "need at least 1000 Monte Carlo samples, got {mc_samples}"
        )));
    }
    generator.validate()?;
    let draw = |part: u64, d: fn(&SyntheticSpec, &mut rng::StreamRng, &mut Vec<f64>)| {
        let m = generator.sample_with(&mut rng::stream(seed, &[TAG_MC, part]), mc_samples, d);
        f.score_rows(&m)
    };
    let p = draw(0, SyntheticSpec::draw_positive);
    let p_bar = draw(1, SyntheticSpec::draw_positive);
    let n = draw(2, SyntheticSpec::draw_negative);
    let n_bar = draw(3, SyntheticSpec::draw_negative);
    let u = draw(4, SyntheticSpec::draw_unlabeled);
    let l = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| loss.eval(x - y)).collect() };
    let pn = l(&p, &n);
    let pp = l(&p, &p_bar);
    let nn = l(&n_bar, &n);
    let pu = l(&p, &u);
    let un = l(&u, &n);
    let moments = LossMoments {
        sigma2_pn: variance(&pn),
        sigma2_pp: variance(&pp),
        sigma2_nn: variance(&nn),
        tau_pn_pp: covariance(&pn, &pp),
        tau_pn_nn: covariance(&pn, &nn),
        tau_pu_pp: covariance(&pu, &pp),
        tau_nu_nn: covariance(&un, &nn),
        tau_pn_pu: covariance(&pn, &pu),
        tau_pn_nu: covariance(&pn, &un),
    };
    let mut c = VarianceComponents::new(moments, generator.prior, n_p, n_n)?;
    let m = mean(&pn);
    let sq: Vec<f64> = pn.iter().map(|x| (x - m) * (x - m)).collect();
    c.sigma2_pn_stderr = stderr(&sq);
    Ok(c)
}

fn score_set(f: &dyn Scorer, m: &SampleMatrix) -> Vec<f64> {
    if m.is_empty() {
        Vec::new()
    } else {
        f.score_rows(m)
    }
}

fn risks_on(f: &dyn Scorer, data: &TrainingData, specs: &[RiskSpec]) -> Result<Vec<f64>> {
    let (sp, sn, su) = (
        score_set(f, data.positives()),
        score_set(f, data.negatives()),
        score_set(f, data.unlabeled()),
    );
    let s = Scores {
        positive: &sp,
        negative: &sn,
        unlabeled: &su,
    };
    specs.iter().map(|spec| empirical_combined_risk(spec, &s, data.prior_opt())).collect()
}

/// Sample variance, over `trials` fresh evaluation sets, of each family's
/// empirical risk at a fixed scorer.
#[allow(clippy::too_many_arguments)]
pub fn measure_risk_variance(
    f: &dyn Scorer,
    generator: &SyntheticSpec,
    counts: (usize, usize, usize),
    families: &[RiskFamily],
    loss: LossKind,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials < 2 {
        return Err(Error::config("need at least 2 trials"));
    }
    let specs: Vec<RiskSpec> = families.iter().map(|fam| RiskSpec::new(*fam, loss)).collect::<Result<_>>()?;
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = generator.with_seed(rng::derive_seed(seed, &[rng::TAG_TEST, t as u64]));
            let data = generate_synthetic(&g, counts.0, counts.1, counts.2)?;
            risks_on(f, &data, &specs)
        })
        .collect::<Result<_>>()?;
    Ok((0..specs.len())
        .map(|k| variance(&per_trial.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect())
}

/// Settings of [`variance_ratio_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRatioConfig {
    pub generator: SyntheticSpec,
    pub n_p: usize,
    pub n_n: usize,
    pub n_eval_p: usize,
    pub n_eval_n: usize,
    pub n_eval_u: usize,
    pub trials: usize,
    pub etas: Vec<f64>,
    pub lambda: f64,
    pub bandwidth_factor: f64,
    pub basis: BasisConfig,
    pub loss: LossKind,
    /// Train the PN scorer once instead of once per trial.
    pub fixed_classifier: bool,
    /// Evaluate the PN risk at every eta (harness self-check; ratios are 1).
    pub substitute_pn: bool,
    pub bootstrap: usize,
    pub seed: u64,
}

impl VarianceRatioConfig {
    pub fn new(generator: SyntheticSpec, n_p: usize, n_n: usize) -> Self {
        Self {
            generator,
            n_p,
            n_n,
            n_eval_p: 10,
            n_eval_n: 10,
            n_eval_u: 300,
            trials: 100,
            etas: (-10..=10).map(|i| i as f64 / 10.0).collect(),
            lambda: 0.1,
            bandwidth_factor: 1.0,
            basis: BasisConfig::default(),
            loss: LossKind::Squared,
            fixed_classifier: false,
            substitute_pn: false,
            bootstrap: 1000,
            seed: 0,
        }
    }
}

/// `r(eta) = Var[R_PNU^eta(f)] / Var[R_PN(f)]` with bootstrap standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRatioCurve {
    pub etas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub var_pn: f64,
    pub var_pnu: Vec<f64>,
}

impl VarianceRatioCurve {
    /// Columns `eta, ratio, stderr, var_pn, var_pnu`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self.etas.iter().enumerate().map(|(i, e)| {
            vec![
                e.to_string(),
                self.ratios[i].to_string(),
                self.stderrs[i].to_string(),
                self.var_pn.to_string(),
                self.var_pnu[i].to_string(),
            ]
        });
        write_table(out, &["eta", "ratio", "stderr", "var_pn", "var_pnu"], rows)
    }
}

pub fn write_table<W: Write, I: IntoIterator<Item = Vec<String>>>(
    out: W,
    header: &[&str],
    rows: I,
) -> Result<()> {
    let err = |e: csv::Error| Error::io("<output>", std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::derive_seed(seed, &[rng::TAG_TRIAL, trial as u64])
}

fn test_seed(seed: u64, trial: usize) -> u64 {
    rng::derive_seed(seed, &[rng::TAG_TEST, trial as u64])
}

pub fn variance_ratio_experiment(cfg: &VarianceRatioConfig) -> Result<VarianceRatioCurve> {
    if cfg.trials < 2 {
        return Err(Error::config("variance ratio needs at least 2 trials"));
    }
    if cfg.etas.is_empty() {
        return Err(Error::config("eta grid is empty"));
    }
    let families: Vec<RiskFamily> = cfg
        .etas
        .iter()
        .map(|e| {
            if cfg.substitute_pn {
                Ok(RiskFamily::Pn)
            } else {
                RiskFamily::Pnu(*e).validate()
            }
        })
        .collect::<Result<_>>()?;
    let mut specs = vec![RiskSpec::new(RiskFamily::Pn, cfg.loss)?];
    for f in &families {
        specs.push(RiskSpec::new(*f, cfg.loss)?);
    }
    let train = |t: usize| -> Result<TrainedModel> {
        let s = trial_seed(cfg.seed, t);
        let data = generate_synthetic(&cfg.generator.with_seed(s), cfg.n_p, cfg.n_n, 0)?;
        fit(&data, &cfg.basis, cfg.bandwidth_factor, RiskFamily::Pn, cfg.lambda, s)
    };
    let fixed = if cfg.fixed_classifier { Some(train(0)?) } else { None };

    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let model = match &fixed {
                Some(m) => m.clone(),
                None => train(t)?,
            };
            let g = cfg.generator.with_seed(test_seed(cfg.seed, t));
            let eval = generate_synthetic(&g, cfg.n_eval_p, cfg.n_eval_n, cfg.n_eval_u)?;
            risks_on(&model, &eval, &specs)
        })
        .collect::<Result<_>>()?;

    let column = |k: usize, idx: &[usize]| -> Vec<f64> { idx.iter().map(|&t| per_trial[t][k]).collect() };
    let all: Vec<usize> = (0..cfg.trials).collect();
    let var_pn = variance(&column(0, &all));
    if var_pn.is_nan() || var_pn <= 0.0 {
        return Err(Error::numeric("PN risk has zero variance across trials"));
    }
    let var_pnu: Vec<f64> = (1..specs.len()).map(|k| variance(&column(k, &all))).collect();
    let ratios: Vec<f64> = var_pnu.iter().map(|v| v / var_pn).collect();

    // Bootstrap over trials; a resample with zero PN variance is skipped.
    let mut rng = rng::stream(cfg.seed, &[rng::TAG_BOOTSTRAP]);
    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.bootstrap); cfg.etas.len()];
    let mut idx = vec![0usize; cfg.trials];
    for _ in 0..cfg.bootstrap {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..cfg.trials);
        }
        let vp = variance(&column(0, &idx));
        if vp > 0.0 {
            for (k, b) in boot.iter_mut().enumerate() {
                b.push(variance(&column(k + 1, &idx)) / vp);
            }
        }
    }
    let stderrs = boot
        .iter()
        .map(|b| if b.len() >= 2 { variance(b).sqrt() } else { f64::NAN })
        .collect();
    Ok(VarianceRatioCurve {
        etas: cfg.etas.clone(),
        ratios,
        stderrs,
        var_pn,
        var_pnu,
    })
}

/// Settings of [`prior_sensitivity_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityConfig {
    /// Carries the true prior.
    pub generator: SyntheticSpec,
    pub rhos: Vec<f64>,
    pub n_p: usize,
    pub n_n: usize,
    pub n_u: usize,
    pub n_test_p: usize,
    pub n_test_n: usize,
    pub trials: usize,
    /// Training family is `PNU(eta)`. `None` picks eta from `etas` by
    /// cross-validation, which also sees the perturbed prior.
    pub eta: Option<f64>,
    pub etas: Vec<f64>,
    pub folds: usize,
    pub lambda: f64,
    pub bandwidth_factor: f64,
    pub basis: BasisConfig,
    pub seed: u64,
}

impl SensitivityConfig {
    /// Labeled counts `theta * 50` and `(1 - theta) * 50`, 1000 unlabeled.
    pub fn new(generator: SyntheticSpec) -> Self {
        let tp = generator.prior.theta_p();
        Self {
            rhos: (-9..=9).map(|i| i as f64 / 100.0).collect(),
            n_p: (tp * 50.0).round() as usize,
            n_n: ((1.0 - tp) * 50.0).round() as usize,
            n_u: 1000,
            n_test_p: 500,
            n_test_n: 500,
            trials: 50,
            eta: None,
            etas: (-10..=10).map(|i| i as f64 / 10.0).collect(),
            folds: 2,
            lambda: 0.1,
            bandwidth_factor: 1.0,
            basis: BasisConfig::default(),
            seed: 0,
            generator,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub rho: f64,
    pub prior_used: f64,
    pub mean_auc: f64,
    pub stderr: f64,
    pub aucs: Vec<f64>,
}

/// Columns `rho, prior_used, mean_auc, stderr`.
pub fn write_sensitivity_csv<W: Write>(rows: &[SensitivityRow], out: W) -> Result<()> {
    write_table(
        out,
        &["rho", "prior_used", "mean_auc", "stderr"],
        rows.iter().map(|r| {
            vec![r.rho.to_string(), r.prior_used.to_string(), r.mean_auc.to_string(), r.stderr.to_string()]
        }),
    )
}

/// Held-out AUC of PNU training with the prior perturbed by each `rho`. The
/// training and test data of a trial are shared by every `rho`.
pub fn prior_sensitivity_experiment(cfg: &SensitivityConfig) -> Result<Vec<SensitivityRow>> {
    if cfg.trials == 0 || cfg.rhos.is_empty() {
        return Err(Error::config("sensitivity needs trials and a noise grid"));
    }
    let truth = cfg.generator.prior.theta_p();
    let priors: Vec<ClassPrior> = cfg
        .rhos
        .iter()
        .map(|r| {
            ClassPrior::new(truth + r).map_err(|_| {
                Error::config(format!(
                    "perturbed prior {truth} + {r} = {} is outside (0, 1)",
                    truth + r
                ))
            })
        })
        .collect::<Result<_>>()?;
    let grid = HyperGrid {
        bandwidth_factors: vec![cfg.bandwidth_factor],
        lambdas: vec![cfg.lambda],
        etas: cfg.etas.clone(),
        folds: cfg.folds,
        basis: cfg.basis,
    };
    let family = match cfg.eta {
        Some(eta) => Some(RiskFamily::Pnu(eta).validate()?),
        None => {
            grid.validate()?;
            None
        }
    };
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(cfg.seed, t);
            let data = generate_synthetic(&cfg.generator.with_seed(s), cfg.n_p, cfg.n_n, cfg.n_u)?;
            let g = cfg.generator.with_seed(test_seed(cfg.seed, t));
            let test = generate_synthetic(&g, cfg.n_test_p, cfg.n_test_n, 0)?;
            priors
                .iter()
                .map(|pr| {
                    let d = data.clone().with_prior(*pr);
                    let model = match family {
                        Some(f) => fit(&d, &cfg.basis, cfg.bandwidth_factor, f, cfg.lambda, s)?,
                        None => cross_validate(&d, &grid, CvMode::Pnu, s)?.1,
                    };
                    model_auc(&model, &test)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .rhos
        .iter()
        .enumerate()
        .map(|(k, &rho)| {
            let aucs: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
            SensitivityRow {
                rho,
                prior_used: priors[k].theta_p(),
                mean_auc: mean(&aucs),
                stderr: if aucs.len() > 1 { stderr(&aucs) } else { 0.0 },
                aucs,
            }
        })
        .collect())
}

/// Minimises `(1/theta_N) mean_{P x U} l(g(x_p) - g(x_u)) + lambda |w|^2`: the
/// PU risk without its positive-pair correction, i.e. unlabeled data treated
/// as negative. The stored model is tagged as PN without a prior.
pub fn biased_baseline_train(data: &TrainingData, map: &FeatureMap, lambda: f64) -> Result<TrainedModel> {
    if data.positives().is_empty() || data.unlabeled().is_empty() {
        return Err(Error::data("baseline needs positive and unlabeled samples"));
    }
    let prior = data.prior()?;
    let phi_p = crate::basis::design_matrix(map, data.positives())?;
    let phi_u = crate::basis::design_matrix(map, data.unlabeled())?;
    let pn = solver::build_pn_form(&phi_p, &phi_u)?;
    let form = solver::QuadraticForm::combine(&[(1.0 / prior.theta_n(), &pn)])?;
    let w = solver::solve(&form, lambda)?;
    TrainedModel::new(w.iter().copied().collect(), map.clone(), RiskFamily::Pn, lambda, None)
}

/// Settings of [`pu_vs_biased_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct PuVsBiasedConfig {
    pub generator: SyntheticSpec,
    pub n_p: usize,
    pub n_u: usize,
    pub n_test_p: usize,
    pub n_test_n: usize,
    pub trials: usize,
    pub lambda: f64,
    pub bandwidth_factor: f64,
    pub basis: BasisConfig,
    pub seed: u64,
}

impl PuVsBiasedConfig {
    pub fn new(generator: SyntheticSpec) -> Self {
        Self {
            generator,
            n_p: 100,
            n_u: 1000,
            n_test_p: 500,
            n_test_n: 500,
            trials: 20,
            lambda: 0.1,
            bandwidth_factor: 1.0,
            basis: BasisConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuVsBiasedResult {
    pub prior: f64,
    pub pu_aucs: Vec<f64>,
    pub biased_aucs: Vec<f64>,
}

impl PuVsBiasedResult {
    pub fn mean_pu(&self) -> f64 {
        mean(&self.pu_aucs)
    }

    pub fn mean_biased(&self) -> f64 {
        mean(&self.biased_aucs)
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.pu_aucs.iter().zip(&self.biased_aucs).map(|(a, b)| a - b).collect()
    }

    pub fn mean_gap(&self) -> f64 {
        mean(&self.gaps())
    }

    fn se(v: &[f64]) -> f64 {
        if v.len() > 1 {
            stderr(v)
        } else {
            0.0
        }
    }
}

/// Columns `prior, auc_pu, stderr_pu, auc_biased, stderr_biased, gap, stderr_gap`.
pub fn write_pu_vs_biased_csv<W: Write>(results: &[PuVsBiasedResult], out: W) -> Result<()> {
    write_table(
        out,
        &["prior", "auc_pu", "stderr_pu", "auc_biased", "stderr_biased", "gap", "stderr_gap"],
        results.iter().map(|r| {
            vec![
                r.prior.to_string(),
                r.mean_pu().to_string(),
                PuVsBiasedResult::se(&r.pu_aucs).to_string(),
                r.mean_biased().to_string(),
                PuVsBiasedResult::se(&r.biased_aucs).to_string(),
                r.mean_gap().to_string(),
                PuVsBiasedResult::se(&r.gaps()).to_string(),
            ]
        }),
    )
}

/// Held-out AUC of PU training and of the biased baseline on the same data
/// and basis, per trial.
pub fn pu_vs_biased_experiment(cfg: &PuVsBiasedConfig) -> Result<PuVsBiasedResult> {
    if cfg.trials == 0 {
        return Err(Error::config("need at least 1 trial"));
    }
    let spec = RiskSpec::squared(RiskFamily::Pu)?;
    let pairs: Vec<(f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(cfg.seed, t);
            let data = generate_synthetic(&cfg.generator.with_seed(s), cfg.n_p, 0, cfg.n_u)?;
            let g = cfg.generator.with_seed(test_seed(cfg.seed, t));
            let test = generate_synthetic(&g, cfg.n_test_p, cfg.n_test_n, 0)?;
            let map = cfg.basis.build(&data.pooled(), cfg.bandwidth_factor, s)?;
            let pu = solver::train(&data, &map, &spec, cfg.lambda)?;
            let biased = biased_baseline_train(&data, &map, cfg.lambda)?;
            Ok((model_auc(&pu, &test)?, model_auc(&biased, &test)?))
        })
        .collect::<Result<_>>()?;
    Ok(PuVsBiasedResult {
        prior: cfg.generator.prior.theta_p(),
        pu_aucs: pairs.iter().map(|p| p.0).collect(),
        biased_aucs: pairs.iter().map(|p| p.1).collect(),
    })
}
