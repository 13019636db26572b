//! Hyperparameter selection by k-fold cross-validation.
//!
//! Candidates are scored with the zero-one version of a combined risk. Models
//! trained with `eta > 0` are scored by the PNPU risk and `eta < 0` by the
//! PNNU risk, both at the variance-balancing weight [`gamma_bar_pnpu`] /
//! [`gamma_bar_pnnu`] computed from the validation fold's class counts.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::basis::{design_matrix, BasisConfig, DesignMatrix, FeatureMap};
use crate::data::{assign_folds, split_with, ClassPrior, TrainingData};
use crate::error::{Error, Result};
use crate::risk::{empirical_combined_risk, LossKind, RiskFamily, RiskSpec, Scores};
use crate::rng;
use crate::solver::{self, BaseForms, Designs, TrainedModel};

/// The grid searched by [`cross_validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    /// Multipliers of the median-heuristic bandwidth (ignored by linear kernels).
    pub bandwidth_factors: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Only searched in [`CvMode::Pnu`].
    pub etas: Vec<f64>,
    pub folds: usize,
    pub basis: BasisConfig,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            bandwidth_factors: vec![0.125, 0.25, 0.5, 1.0, 2.0],
            lambdas: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            etas: (-9..=9).map(|i| i as f64 / 10.0).collect(),
            folds: 5,
            basis: BasisConfig::default(),
        }
    }
}

impl HyperGrid {
    /// A grid holding exactly one candidate.
    pub fn single(bandwidth_factor: f64, lambda: f64, eta: f64) -> Self {
        Self {
            bandwidth_factors: vec![bandwidth_factor],
            lambdas: vec![lambda],
            etas: vec![eta],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth_factors.is_empty() || self.lambdas.is_empty() || self.etas.is_empty() {
            return Err(Error::config("hyperparameter grid lists must be non-empty"));
        }
        if let Some(f) = self.bandwidth_factors.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::config(format!("bandwidth factor must be positive, got {f}")));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::config(format!("regularization must be non-negative, got {l}")));
        }
        if let Some(e) = self.etas.iter().find(|e| !(-1.0..=1.0).contains(*e)) {
            return Err(Error::config(format!("eta must lie in [-1, 1], got {e}")));
        }
        if self.folds < 2 {
            return Err(Error::config(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }
}

/// What is being trained, which fixes the candidate families and the score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvMode {
    Pn,
    Pu,
    Nu,
    Pnpu(f64),
    Pnnu(f64),
    /// Searches `eta` over the grid.
    Pnu,
}

impl CvMode {
    /// The signed `eta` whose PNU family equals this mode's family, or `None`
    /// when `eta` is searched.
    fn fixed_eta(self) -> Option<f64> {
        match self {
            CvMode::Pn => Some(0.0),
            CvMode::Pu => Some(1.0),
            CvMode::Nu => Some(-1.0),
            CvMode::Pnpu(g) => Some(g),
            CvMode::Pnnu(g) => Some(-g),
            CvMode::Pnu => None,
        }
    }

    fn etas(self, grid: &HyperGrid) -> Vec<f64> {
        self.fixed_eta().map_or_else(|| grid.etas.clone(), |e| vec![e])
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub bandwidth_factor: f64,
    pub lambda: f64,
    /// Training family is `PNU(eta)`.
    pub eta: f64,
}

impl Candidate {
    pub fn family(&self) -> RiskFamily {
        RiskFamily::Pnu(self.eta).canonical()
    }
}

/// `1 / (1 + theta_P^2 n_N / (theta_N^2 n_P))`. Lies in (0, 1) for positive counts.
pub fn gamma_bar_pnpu(prior: ClassPrior, n_p: usize, n_n: usize) -> f64 {
    let (tp, tn) = (prior.theta_p(), prior.theta_n());
    1.0 / (1.0 + tp * tp * n_n as f64 / (tn * tn * n_p as f64))
}

/// `1 / (1 + theta_N^2 n_P / (theta_P^2 n_N))`. Lies in (0, 1) for positive counts.
pub fn gamma_bar_pnnu(prior: ClassPrior, n_p: usize, n_n: usize) -> f64 {
    gamma_bar_pnpu(prior.flipped(), n_n, n_p)
}

/// The zero-one risk a model trained in `mode` with parameter `eta` is scored
/// by, given the class counts of the evaluation sample.
pub fn scoring_spec(
    mode: CvMode,
    eta: f64,
    prior: Option<ClassPrior>,
    n_p: usize,
    n_n: usize,
) -> Result<RiskSpec> {
    let family = match mode {
        CvMode::Pn => RiskFamily::Pn,
        CvMode::Pu => RiskFamily::Pu,
        CvMode::Nu => RiskFamily::Nu,
        _ if eta == 0.0 => RiskFamily::Pn,
        _ => {
            let prior = prior.ok_or_else(|| Error::config("PNU scoring needs a class prior"))?;
            if n_p == 0 || n_n == 0 {
                return Err(Error::data(
                    "PNU scoring needs positive and negative validation samples",
                ));
            }
            if eta > 0.0 {
                RiskFamily::Pnpu(gamma_bar_pnpu(prior, n_p, n_n))
            } else {
                RiskFamily::Pnnu(gamma_bar_pnnu(prior, n_p, n_n))
            }
        }
    };
    RiskSpec::new(family, LossKind::ZeroOne)
}

/// Zero-one validation risk of `model` under `spec` (lower is better).
pub fn cv_score(spec: &RiskSpec, validation: &TrainingData, model: &TrainedModel) -> Result<f64> {
    let sp = model.score(validation.positives())?;
    let sn = model.score(validation.negatives())?;
    let su = model.score(validation.unlabeled())?;
    let scores = Scores {
        positive: &sp,
        negative: &sn,
        unlabeled: &su,
    };
    empirical_combined_risk(spec, &scores, validation.prior_opt())
}

/// Fits `family` on all of `data`: median-heuristic bandwidth of the pooled
/// samples times `bandwidth_factor`, centers drawn with `seed`.
pub fn fit(
    data: &TrainingData,
    basis: &BasisConfig,
    bandwidth_factor: f64,
    family: RiskFamily,
    lambda: f64,
    seed: u64,
) -> Result<TrainedModel> {
    let map = basis.build(&data.pooled(), bandwidth_factor, seed)?;
    solver::train(data, &map, &RiskSpec::squared(family)?, lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub candidate: Candidate,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub rows: Vec<CandidateScore>,
    pub selected: usize,
}

impl CvReport {
    pub fn selected(&self) -> &CandidateScore {
        &self.rows[self.selected]
    }

    /// Columns `sigma_factor, lambda, eta, fold_1..fold_k, mean`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.rows.first().map_or(0, |r| r.fold_scores.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sigma_factor".to_string(), "lambda".into(), "eta".into()];
        header.extend((1..=k).map(|i| format!("fold_{i}")));
        header.push("mean".into());
        let csv_err = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let c = r.candidate;
            let mut rec = vec![c.bandwidth_factor.to_string(), c.lambda.to_string(), c.eta.to_string()];
            rec.extend(r.fold_scores.iter().map(f64::to_string));
            rec.push(r.mean.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// The candidate with the lowest mean score; exact ties go to the smallest
/// lambda, then the smallest bandwidth factor, then `|eta|`, then grid order.
fn select(rows: &[CandidateScore]) -> Option<usize> {
    let key = |i: usize| {
        let r = &rows[i];
        (r.mean, r.candidate.lambda, r.candidate.bandwidth_factor, r.candidate.eta.abs(), i)
    };
    (0..rows.len()).filter(|&i| rows[i].mean.is_finite()).min_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
            .then(ka.4.cmp(&kb.4))
    })
}

struct ValidationDesigns {
    p: Option<DesignMatrix>,
    n: Option<DesignMatrix>,
    u: Option<DesignMatrix>,
}

fn scores_of(phi: &Option<DesignMatrix>, w: &DVector<f64>) -> Vec<f64> {
    phi.as_ref()
        .map(|m| (m.matrix() * w).iter().copied().collect())
        .unwrap_or_default()
}

/// Scores of every `(lambda, eta)` candidate for one fold and bandwidth.
fn score_unit(
    map: &FeatureMap,
    train: &TrainingData,
    validation: &TrainingData,
    grid: &HyperGrid,
    etas: &[f64],
    specs: &[RiskSpec],
) -> Result<Vec<f64>> {
    let families: Vec<RiskFamily> = etas.iter().map(|e| RiskFamily::Pnu(*e).canonical()).collect();
    let designs = Designs::for_families(map, train, &families)?;
    let forms = BaseForms::for_families(&designs, train.prior_opt(), &families)?;
    let forms: Vec<_> = families.iter().map(|f| forms.combine(*f)).collect::<Result<_>>()?;
    let design = |m: &crate::data::SampleMatrix| -> Result<Option<DesignMatrix>> {
        if m.is_empty() {
            Ok(None)
        } else {
            design_matrix(map, m).map(Some)
        }
    };
    let val = ValidationDesigns {
        p: design(validation.positives())?,
        n: design(validation.negatives())?,
        u: design(validation.unlabeled())?,
    };
    let mut out = Vec::with_capacity(grid.lambdas.len() * etas.len());
    for &lambda in &grid.lambdas {
        for (form, spec) in forms.iter().zip(specs) {
            let w = match solver::solve(form, lambda) {
                Ok(w) => w,
                Err(Error::Numeric(_)) => {
                    out.push(f64::INFINITY);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (sp, sn, su) = (scores_of(&val.p, &w), scores_of(&val.n, &w), scores_of(&val.u, &w));
            let s = Scores {
                positive: &sp,
                negative: &sn,
                unlabeled: &su,
            };
            out.push(empirical_combined_risk(spec, &s, validation.prior_opt())?);
        }
    }
    Ok(out)
}

/// k-fold cross-validation over `grid`, then a refit of the winner on all data.
///
/// Bandwidths and centers are recomputed from each fold's training portion.
/// Folds and bandwidths run in parallel; results are gathered by index so the
/// report does not depend on the thread count.
pub fn cross_validate(
    data: &TrainingData,
    grid: &HyperGrid,
    mode: CvMode,
    seed: u64,
) -> Result<(CvReport, TrainedModel)> {
    grid.validate()?;
    let etas = mode.etas(grid);
    let probe: Vec<RiskFamily> = etas.iter().map(|e| RiskFamily::Pnu(*e).validate().map(RiskFamily::canonical)).collect::<Result<_>>()?;
    if probe.iter().any(|f| f.needs_prior()) {
        data.prior()?;
    }
    let assignment = assign_folds(data, grid.folds, seed)?;
    let folds = split_with(data, &assignment)?;

    let per_fold: Vec<Vec<Vec<f64>>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let unit_seed = rng::derive_seed(seed, &[rng::TAG_FOLDS, f as u64]);
            let pool = fold.train.pooled();
            let base = grid.basis.base_bandwidth(&pool, unit_seed)?;
            let centers = grid.basis.centers(&pool, unit_seed)?;
            let v = &fold.validation;
            let specs: Vec<RiskSpec> = etas
                .iter()
                .map(|e| scoring_spec(mode, *e, v.prior_opt(), v.n_p(), v.n_n()))
                .collect::<Result<_>>()?;
            grid.bandwidth_factors
                .par_iter()
                .map(|&factor| {
                    let map = grid.basis.map(centers.clone(), base, factor)?;
                    score_unit(&map, &fold.train, v, grid, &etas, &specs)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let k = folds.len();
    let mut rows = Vec::new();
    for (fi, &factor) in grid.bandwidth_factors.iter().enumerate() {
        for (li, &lambda) in grid.lambdas.iter().enumerate() {
            for (ei, &eta) in etas.iter().enumerate() {
                let idx = li * etas.len() + ei;
                let fold_scores: Vec<f64> = (0..k).map(|f| per_fold[f][fi][idx]).collect();
                let mean = fold_scores.iter().sum::<f64>() / k as f64;
                rows.push(CandidateScore {
                    candidate: Candidate {
                        bandwidth_factor: factor,
                        lambda,
                        eta,
                    },
                    fold_scores,
                    mean,
                });
            }
        }
    }
    let selected = select(&rows).ok_or_else(|| {
        Error::numeric("every candidate failed to solve; add larger regularization values")
    })?;
    let report = CvReport { rows, selected };
    let best = report.selected().candidate;
    let model = fit(data, &grid.basis, best.bandwidth_factor, best.family(), best.lambda, seed)?;
    Ok((report, model))
}
