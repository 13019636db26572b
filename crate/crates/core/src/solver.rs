//! Closed-form minimisers of the l2-regularised squared-loss AUC risks.
//!
//! With the squared loss every empirical risk of `w` is a quadratic
//! `c - 2 w^T h + w^T H w`, assembled from per-class means and covariances of
//! the design matrices in `O(n b^2)`. The regularised minimiser solves
//! `(H + lambda I) w = h`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::basis::{design_matrix, DesignMatrix, FeatureMap, Kernel};
use crate::data::{ClassPrior, SampleMatrix, TrainingData};
use crate::error::{Error, Result};
use crate::risk::{LossKind, RiskFamily, RiskSpec};

/// Systems whose condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// `risk(w) = c - 2 w^T h + w^T H w`, with `H` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub h: DVector<f64>,
    pub hmat: DMatrix<f64>,
    pub c: f64,
}

impl QuadraticForm {
    fn new(h: DVector<f64>, hmat: DMatrix<f64>, c: f64) -> Result<Self> {
        let hmat = symmetrize(hmat);
        if h.iter().chain(hmat.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::numeric("quadratic form has non-finite entries"));
        }
        Ok(Self { h, hmat, c })
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn value(&self, w: &DVector<f64>) -> f64 {
        self.c - 2.0 * w.dot(&self.h) + w.dot(&(&self.hmat * w))
    }

    /// `value(w) + lambda |w|^2`
    pub fn objective(&self, w: &DVector<f64>, lambda: f64) -> f64 {
        self.value(w) + lambda * w.norm_squared()
    }

    /// Gradient of [`objective`](Self::objective): `2 (H + lambda I) w - 2 h`.
    pub fn gradient(&self, w: &DVector<f64>, lambda: f64) -> DVector<f64> {
        (&self.hmat * w + w * lambda - &self.h) * 2.0
    }

    /// `sum_k weight_k * form_k`, skipping zero weights.
    pub fn combine(parts: &[(f64, &QuadraticForm)]) -> Result<Self> {
        let mut it = parts.iter().filter(|(wt, _)| *wt != 0.0);
        let (w0, f0) = it
            .next()
            .ok_or_else(|| Error::config("empty combination of quadratic forms"))?;
        let mut acc = Self {
            h: &f0.h * *w0,
            hmat: &f0.hmat * *w0,
            c: f0.c * w0,
        };
        for (wt, f) in it {
            if f.dim() != acc.dim() {
                return Err(Error::config("combining forms of different sizes"));
            }
            acc.h += &f.h * *wt;
            acc.hmat += &f.hmat * *wt;
            acc.c += f.c * wt;
        }
        Ok(acc)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Column means and population covariance of the rows of `phi`.
struct Moments {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    n: usize,
}

impl Moments {
    fn of(phi: &DesignMatrix) -> Self {
        let m = phi.matrix();
        let n = m.nrows();
        let mean = m.row_mean().transpose();
        let mut centered = m.clone();
        for (j, mut col) in centered.column_iter_mut().enumerate() {
            col.add_scalar_mut(-mean[j]);
        }
        let cov = (centered.transpose() * &centered) / n as f64;
        Self { mean, cov, n }
    }
}

/// Mean of `(1 - w^T (phi(a) - phi(b)))^2` over all pairs from two sets:
/// `h = m_a - m_b`, `H = C_a + C_b + (m_a - m_b)(m_a - m_b)^T`, `c = 1`.
fn pair_form(a: &Moments, b: &Moments) -> (DVector<f64>, DMatrix<f64>) {
    let delta = &a.mean - &b.mean;
    let h = &a.cov + &b.cov + &delta * delta.transpose();
    (delta, h)
}

fn check_cols(a: &DesignMatrix, b: &DesignMatrix) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::data(format!(
            "design matrices have {} and {} columns",
            a.cols(),
            b.cols()
        )));
    }
    Ok(())
}

pub fn build_pn_form(phi_p: &DesignMatrix, phi_n: &DesignMatrix) -> Result<QuadraticForm> {
    check_cols(phi_p, phi_n)?;
    if phi_p.rows() == 0 || phi_n.rows() == 0 {
        return Err(Error::data("PN form needs positive and negative samples"));
    }
    let (h, hm) = pair_form(&Moments::of(phi_p), &Moments::of(phi_n));
    QuadraticForm::new(h, hm, 1.0)
}

/// `h = (m_a - m_b)/theta_b`, `H = H_ab/theta_b - H_aa`. `a` is the labeled
/// class shared by the correction term, `theta_b` the prior of the other class.
fn one_sided_form(labeled: &Moments, unlabeled: &Moments, theta_same: f64, theta_other: f64, labeled_first: bool) -> Result<QuadraticForm> {
    let (delta, h_pair) = if labeled_first {
        pair_form(labeled, unlabeled)
    } else {
        pair_form(unlabeled, labeled)
    };
    let n = labeled.n as f64;
    // All-ordered-pairs mean of (w^T (phi_i - phi_i'))^2 is 2 w^T C w; with the
    // n/(n-1) rescale and weight theta_same/theta_other this is H_PP (or H_NN).
    let h_same = &labeled.cov * (2.0 * theta_same * n / (theta_other * (n - 1.0)));
    let hmat = h_pair / theta_other - h_same;
    let h = delta / theta_other;
    // 1/theta_other - (theta_same/theta_other)(n/(n-1) - 1/(n-1)) = 1.
    let c = (1.0 - theta_same) / theta_other;
    QuadraticForm::new(h, hmat, c)
}

pub fn build_pu_form(
    phi_p: &DesignMatrix,
    phi_u: &DesignMatrix,
    prior: ClassPrior,
) -> Result<QuadraticForm> {
    check_cols(phi_p, phi_u)?;
    if phi_p.rows() < 2 {
        return Err(Error::data("PU form needs at least 2 positive samples"));
    }
    if phi_u.rows() == 0 {
        return Err(Error::data("PU form needs unlabeled samples"));
    }
    one_sided_form(&Moments::of(phi_p), &Moments::of(phi_u), prior.theta_p(), prior.theta_n(), true)
}

pub fn build_nu_form(
    phi_n: &DesignMatrix,
    phi_u: &DesignMatrix,
    prior: ClassPrior,
) -> Result<QuadraticForm> {
    check_cols(phi_n, phi_u)?;
    if phi_n.rows() < 2 {
        return Err(Error::data("NU form needs at least 2 negative samples"));
    }
    if phi_u.rows() == 0 {
        return Err(Error::data("NU form needs unlabeled samples"));
    }
    one_sided_form(&Moments::of(phi_n), &Moments::of(phi_u), prior.theta_n(), prior.theta_p(), false)
}

/// Design matrices of the three sample sets under one feature map. Sets that
/// were not requested are left out.
#[derive(Debug, Clone)]
pub struct Designs {
    pub positive: Option<DesignMatrix>,
    pub negative: Option<DesignMatrix>,
    pub unlabeled: Option<DesignMatrix>,
}

impl Designs {
    /// Designs for every non-empty sample set.
    pub fn of(map: &FeatureMap, data: &TrainingData) -> Result<Self> {
        Self::build(map, data, Needs::ALL)
    }

    /// Designs for the sample sets that `families` use.
    pub fn for_families(map: &FeatureMap, data: &TrainingData, families: &[RiskFamily]) -> Result<Self> {
        Self::build(map, data, Needs::of(families))
    }

    fn build(map: &FeatureMap, data: &TrainingData, needs: Needs) -> Result<Self> {
        let build = |m: &SampleMatrix, wanted: bool| -> Result<Option<DesignMatrix>> {
            if m.is_empty() || !wanted {
                Ok(None)
            } else {
                design_matrix(map, m).map(Some)
            }
        };
        Ok(Self {
            positive: build(data.positives(), needs.pn || needs.pu)?,
            negative: build(data.negatives(), needs.pn || needs.nu)?,
            unlabeled: build(data.unlabeled(), needs.pu || needs.nu)?,
        })
    }
}

/// Which base forms a set of families draws on.
#[derive(Debug, Clone, Copy)]
struct Needs {
    pn: bool,
    pu: bool,
    nu: bool,
}

impl Needs {
    const ALL: Needs = Needs { pn: true, pu: true, nu: true };

    fn of(families: &[RiskFamily]) -> Self {
        families.iter().fold(Needs { pn: false, pu: false, nu: false }, |acc, f| {
            let w = f.weights();
            Needs {
                pn: acc.pn || w.pn != 0.0,
                pu: acc.pu || w.pu != 0.0,
                nu: acc.nu || w.nu != 0.0,
            }
        })
    }
}

/// The PN, PU and NU forms available from a set of designs.
#[derive(Debug, Clone)]
pub struct BaseForms {
    pub pn: Option<QuadraticForm>,
    pub pu: Option<QuadraticForm>,
    pub nu: Option<QuadraticForm>,
}

impl BaseForms {
    /// Builds every form the available samples support. Forms that need a
    /// prior are skipped when `prior` is `None`.
    pub fn build(designs: &Designs, prior: Option<ClassPrior>) -> Result<Self> {
        let (p, n, u) = (&designs.positive, &designs.negative, &designs.unlabeled);
        let pn = match (p, n) {
            (Some(p), Some(n)) => Some(build_pn_form(p, n)?),
            _ => None,
        };
        let pu = match (p, u, prior) {
            (Some(p), Some(u), Some(pr)) if p.rows() >= 2 => Some(build_pu_form(p, u, pr)?),
            _ => None,
        };
        let nu = match (n, u, prior) {
            (Some(n), Some(u), Some(pr)) if n.rows() >= 2 => Some(build_nu_form(n, u, pr)?),
            _ => None,
        };
        Ok(Self { pn, pu, nu })
    }

    /// Builds exactly the forms `families` use, failing with the reason when
    /// one of them cannot be formed.
    pub fn for_families(designs: &Designs, prior: Option<ClassPrior>, families: &[RiskFamily]) -> Result<Self> {
        let needs = Needs::of(families);
        let missing = |what: &str| Error::data(format!("training needs {what} samples"));
        let need_prior = || prior.ok_or_else(|| Error::config("class prior required (--prior)"));
        let (p, n, u) = (&designs.positive, &designs.negative, &designs.unlabeled);
        let pn = if needs.pn {
            let p = p.as_ref().ok_or_else(|| missing("positive"))?;
            let n = n.as_ref().ok_or_else(|| missing("negative"))?;
            Some(build_pn_form(p, n)?)
        } else {
            None
        };
        let pu = if needs.pu {
            let pr = need_prior()?;
            let p = p.as_ref().ok_or_else(|| missing("positive"))?;
            let u = u.as_ref().ok_or_else(|| missing("unlabeled"))?;
            Some(build_pu_form(p, u, pr)?)
        } else {
            None
        };
        let nu = if needs.nu {
            let pr = need_prior()?;
            let n = n.as_ref().ok_or_else(|| missing("negative"))?;
            let u = u.as_ref().ok_or_else(|| missing("unlabeled"))?;
            Some(build_nu_form(n, u, pr)?)
        } else {
            None
        };
        Ok(Self { pn, pu, nu })
    }

    /// The form of `family` as a weighted sum of the base forms.
    pub fn combine(&self, family: RiskFamily) -> Result<QuadraticForm> {
        let w = family.validate()?.weights();
        let pick = |weight: f64, form: &Option<QuadraticForm>, name: &str| -> Result<Option<(f64, QuadraticForm)>> {
            if weight == 0.0 {
                return Ok(None);
            }
            form.clone().map(|f| Some((weight, f))).ok_or_else(|| {
                Error::data(format!(
                    "{} training needs the {name} part, which the data or prior cannot provide",
                    family.name()
                ))
            })
        };
        let parts: Vec<(f64, QuadraticForm)> = [
            pick(w.pn, &self.pn, "PN")?,
            pick(w.pu, &self.pu, "PU")?,
            pick(w.nu, &self.nu, "NU")?,
        ]
        .into_iter()
        .flatten()
        .collect();
        let refs: Vec<(f64, &QuadraticForm)> = parts.iter().map(|(w, f)| (*w, f)).collect();
        QuadraticForm::combine(&refs)
    }
}

fn diag_ratio(d: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = d.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `(H + lambda I) w = h`.
///
/// Cholesky is tried first; `H` may be indefinite (the subtracted same-class
/// term of the PU/NU forms), in which case a partially pivoted LU is used.
/// The condition number is estimated from the factor's pivots.
pub fn solve(form: &QuadraticForm, lambda: f64) -> Result<DVector<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!(
            "regularization must be finite and non-negative, got {lambda}"
        )));
    }
    let b = form.dim();
    let mut a = form.hmat.clone();
    for i in 0..b {
        a[(i, i)] += lambda;
    }
    let a = symmetrize(a);
    let ill = |cond: f64| {
        Error::numeric(format!(
            "linear system is singular or ill-conditioned (condition estimate {cond:.3e}); \
             increase the regularization"
        ))
    };

    let solve_with = |f: &dyn Fn(&DVector<f64>) -> Option<DVector<f64>>| -> Result<DVector<f64>> {
        let mut w = f(&form.h).ok_or_else(|| ill(f64::INFINITY))?;
        // One round of refinement against the symmetrised system.
        let r = &form.h - &a * &w;
        if let Some(dw) = f(&r) {
            w += dw;
        }
        Ok(w)
    };

    let w = match a.clone().cholesky() {
        Some(ch) => {
            let cond = diag_ratio(ch.l_dirty().diagonal().iter().copied()).powi(2);
            if cond > MAX_CONDITION {
                return Err(ill(cond));
            }
            solve_with(&|rhs| Some(ch.solve(rhs)))?
        }
        None => {
            let lu = a.clone().lu();
            let cond = diag_ratio(lu.u().diagonal().iter().copied());
            if cond > MAX_CONDITION {
                return Err(ill(cond));
            }
            solve_with(&|rhs| lu.solve(rhs))?
        }
    };

    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("solution has non-finite weights"));
    }
    let residual = (&a * &w - &form.h).norm();
    if residual > 1e-8 * (1.0 + form.h.norm()) {
        return Err(Error::numeric(format!(
            "linear solve residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(w)
}

/// Anything that assigns a real score to a sample.
pub trait Scorer: Sync {
    fn score_row(&self, x: &[f64]) -> f64;

    fn score_rows(&self, x: &SampleMatrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.score_row(r)).collect()
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for F {
    fn score_row(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// `g(x) = w^T phi(x)` with the settings it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    weights: Vec<f64>,
    map: FeatureMap,
    family: RiskFamily,
    lambda: f64,
    prior: Option<ClassPrior>,
}

impl TrainedModel {
    pub fn new(
        weights: Vec<f64>,
        map: FeatureMap,
        family: RiskFamily,
        lambda: f64,
        prior: Option<ClassPrior>,
    ) -> Result<Self> {
        if weights.len() != map.len() {
            return Err(Error::data(format!(
                "{} weights for {} basis functions",
                weights.len(),
                map.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::numeric("model weights must be finite"));
        }
        Ok(Self {
            weights,
            map,
            family,
            lambda,
            prior,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn family(&self) -> RiskFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prior(&self) -> Option<ClassPrior> {
        self.prior
    }

    /// Scores of every row of `x` through one design-matrix product.
    pub fn score(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        if x.is_empty() {
            return Ok(Vec::new());
        }
        let phi = design_matrix(&self.map, x)?;
        Ok((phi.matrix() * DVector::from_column_slice(&self.weights))
            .iter()
            .copied()
            .collect())
    }
}

impl Scorer for TrainedModel {
    fn score_row(&self, x: &[f64]) -> f64 {
        let mut phi = vec![0.0; self.map.len()];
        self.map.eval_into(x, &mut phi);
        phi.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    fn score_rows(&self, x: &SampleMatrix) -> Vec<f64> {
        self.score(x).expect("dimension checked by caller")
    }
}

/// Minimises the regularised squared-loss risk of `spec` in closed form.
///
/// The stored family is the canonical one, so e.g. `PNU(0)` and `PN` produce
/// identical models.
pub fn train(
    data: &TrainingData,
    map: &FeatureMap,
    spec: &RiskSpec,
    lambda: f64,
) -> Result<TrainedModel> {
    if spec.loss != LossKind::Squared {
        return Err(Error::config(format!(
            "the closed-form solver supports the squared loss only, got {}",
            spec.loss.name()
        )));
    }
    let family = spec.family.validate()?.canonical();
    let prior = if family.needs_prior() {
        Some(data.prior()?)
    } else {
        None
    };
    let designs = Designs::for_families(map, data, &[family])?;
    let form = BaseForms::for_families(&designs, prior, &[family])?.combine(family)?;
    train_form(&form, map, family, lambda, prior)
}

pub(crate) fn train_form(
    form: &QuadraticForm,
    map: &FeatureMap,
    family: RiskFamily,
    lambda: f64,
    prior: Option<ClassPrior>,
) -> Result<TrainedModel> {
    let w = solve(form, lambda)?;
    TrainedModel::new(w.iter().copied().collect(), map.clone(), family, lambda, prior)
}

const MODEL_MAGIC: &str = "pnu-auc-model 1";

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl TrainedModel {
    /// Text serialisation: a `key value` header, the centers one per line and
    /// the weights one per line. Reals carry 17 significant digits, so a
    /// reload is bit-identical.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (kind, bw) = match self.map.kernel() {
            Kernel::Gaussian { bandwidth } => ("gaussian", fmt17(bandwidth)),
            Kernel::Linear => ("linear", "none".to_string()),
        };
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt17);
        let _ = writeln!(s, "{MODEL_MAGIC}");
        let _ = writeln!(s, "kernel {kind}");
        let _ = writeln!(s, "bandwidth {bw}");
        let _ = writeln!(s, "b {}", self.map.len());
        let _ = writeln!(s, "dim {}", self.map.dim());
        let _ = writeln!(s, "lambda {}", fmt17(self.lambda));
        let _ = writeln!(s, "family {}", self.family.name());
        let _ = writeln!(s, "parameter {}", opt(self.family.parameter()));
        let _ = writeln!(s, "prior {}", opt(self.prior.map(ClassPrior::theta_p)));
        s.push_str("centers\n");
        for row in self.map.centers().iter_rows() {
            let line: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s.push_str("weights\n");
        for w in &self.weights {
            s.push_str(&fmt17(*w));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
        let mut next = |expect: &str| -> Result<(usize, String)> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.to_string()))
                .ok_or_else(|| Error::data(format!("model file ends before {expect}")))
        };
        let bad = |line: usize, msg: String| Error::data(format!("model file line {line}: {msg}"));
        let num = |line: usize, tok: &str| -> Result<f64> {
            tok.parse::<f64>()
                .map_err(|_| bad(line, format!("cannot parse number {tok:?}")))
        };
        let (l, magic) = next("header")?;
        if magic != MODEL_MAGIC {
            return Err(bad(l, "not a model file".into()));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (l, line) = next(key)?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok((l, v.trim().to_string())),
                _ => Err(bad(l, format!("expected `{key} <value>`"))),
            }
        };
        let (_, kind) = field("kernel")?;
        let (lb, bw) = field("bandwidth")?;
        let (lb2, b) = field("b")?;
        let (ld, dim) = field("dim")?;
        let (ll, lambda) = field("lambda")?;
        let (lf, family) = field("family")?;
        let (lpar, param) = field("parameter")?;
        let (lpr, prior) = field("prior")?;
        let b: usize = b.parse().map_err(|_| bad(lb2, "bad basis count".into()))?;
        let dim: usize = dim.parse().map_err(|_| bad(ld, "bad dimension".into()))?;
        let lambda = num(ll, &lambda)?;
        let kernel = match kind.as_str() {
            "gaussian" => Kernel::Gaussian {
                bandwidth: num(lb, &bw)?,
            },
            "linear" => Kernel::Linear,
            other => return Err(bad(lb - 1, format!("unknown kernel {other:?}"))),
        };
        let param = if param == "none" { None } else { Some(num(lpar, &param)?) };
        let need = |v: Option<f64>| v.ok_or_else(|| bad(lpar, "family needs a parameter".into()));
        let family = match family.as_str() {
            "pn" => RiskFamily::Pn,
            "pu" => RiskFamily::Pu,
            "nu" => RiskFamily::Nu,
            "pnpu" => RiskFamily::Pnpu(need(param)?),
            "pnnu" => RiskFamily::Pnnu(need(param)?),
            "pnu" => RiskFamily::Pnu(need(param)?),
            other => return Err(bad(lf, format!("unknown family {other:?}"))),
        }
        .validate()?;
        let prior = if prior == "none" {
            None
        } else {
            Some(ClassPrior::new(num(lpr, &prior)?)?)
        };

        let (lc, tag) = next("centers")?;
        if tag != "centers" {
            return Err(bad(lc, "expected `centers`".into()));
        }
        let mut centers = Vec::with_capacity(b * dim);
        for _ in 0..b {
            let (l, row) = next("center rows")?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| num(l, t))
                .collect::<Result<_>>()?;
            if vals.len() != dim {
                return Err(bad(l, format!("center has {} values, expected {dim}", vals.len())));
            }
            centers.extend(vals);
        }
        let (lw, tag) = next("weights")?;
        if tag != "weights" {
            return Err(bad(lw, "expected `weights`".into()));
        }
        let mut weights = Vec::with_capacity(b);
        for _ in 0..b {
            let (l, v) = next("weights")?;
            weights.push(num(l, v.trim())?);
        }
        let map = FeatureMap::new(kernel, SampleMatrix::new(b, dim, centers)?)?;
        Self::new(weights, map, family, lambda, prior)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
