//! Sample storage, dataset ingestion, synthetic generation and fold splitting.
//!
//! Labels follow one convention everywhere: `+1` positive, `-1` negative and
//! `0` unlabeled.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major matrix of samples. Every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * dim {
            return Err(Error::data(format!(
                "expected {} values for a {rows}x{dim} matrix, got {}",
                rows * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite value at row {}, column {}",
                pos / dim.max(1),
                pos % dim.max(1)
            )));
        }
        Ok(Self { rows, dim, values })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            rows: 0,
            dim,
            values: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::data(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            dim: self.dim,
            values,
        }
    }

    /// Vertical concatenation; empty matrices of any width are skipped.
    pub fn stack(parts: &[&SampleMatrix]) -> Result<Self> {
        let dim = parts
            .iter()
            .find(|m| !m.is_empty())
            .map_or_else(|| parts.first().map_or(0, |m| m.dim), |m| m.dim);
        let mut values = Vec::new();
        let mut rows = 0;
        for m in parts.iter().filter(|m| !m.is_empty()) {
            if m.dim != dim {
                return Err(Error::data(format!(
                    "cannot stack matrices of width {} and {dim}",
                    m.dim
                )));
            }
            values.extend_from_slice(&m.values);
            rows += m.rows;
        }
        Ok(Self { rows, dim, values })
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            dim: self.dim,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Positive-class prior `theta_p`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrior(f64);

impl ClassPrior {
    pub fn new(theta_p: f64) -> Result<Self> {
        if theta_p.is_finite() && theta_p > 0.0 && theta_p < 1.0 {
            Ok(Self(theta_p))
        } else {
            Err(Error::config(format!(
                "class prior must lie in (0, 1), got {theta_p}"
            )))
        }
    }

    pub fn theta_p(self) -> f64 {
        self.0
    }

    pub fn theta_n(self) -> f64 {
        1.0 - self.0
    }

    /// The prior of the label-swapped problem.
    pub fn flipped(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Positive, negative and unlabeled samples, optionally with a class prior.
///
/// File loaders cannot know the prior, so it is attached separately with
/// [`TrainingData::with_prior`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    positives: SampleMatrix,
    negatives: SampleMatrix,
    unlabeled: SampleMatrix,
    prior: Option<ClassPrior>,
}

impl TrainingData {
    pub fn new(
        positives: SampleMatrix,
        negatives: SampleMatrix,
        unlabeled: SampleMatrix,
        prior: Option<ClassPrior>,
    ) -> Result<Self> {
        let dims: Vec<usize> = [&positives, &negatives, &unlabeled]
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| m.dim())
            .collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::data(format!(
                "sample sets have different dimensions: {dims:?}"
            )));
        }
        if !positives.is_empty() && negatives.is_empty() && unlabeled.is_empty() {
            return Err(Error::data(
                "positive samples need negative or unlabeled samples alongside",
            ));
        }
        let mut data = Self {
            positives,
            negatives,
            unlabeled,
            prior,
        };
        let dim = data.dim();
        for m in [&mut data.positives, &mut data.negatives, &mut data.unlabeled] {
            if m.is_empty() {
                *m = SampleMatrix::empty(dim);
            }
        }
        Ok(data)
    }

    pub fn with_prior(mut self, prior: ClassPrior) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn positives(&self) -> &SampleMatrix {
        &self.positives
    }

    pub fn negatives(&self) -> &SampleMatrix {
        &self.negatives
    }

    pub fn unlabeled(&self) -> &SampleMatrix {
        &self.unlabeled
    }

    pub fn n_p(&self) -> usize {
        self.positives.rows()
    }

    pub fn n_n(&self) -> usize {
        self.negatives.rows()
    }

    pub fn n_u(&self) -> usize {
        self.unlabeled.rows()
    }

    pub fn dim(&self) -> usize {
        [&self.positives, &self.negatives, &self.unlabeled]
            .iter()
            .find(|m| !m.is_empty())
            .map_or(self.positives.dim(), |m| m.dim())
    }

    pub fn prior_opt(&self) -> Option<ClassPrior> {
        self.prior
    }

    /// The class prior, or a configuration error when none is attached.
    pub fn prior(&self) -> Result<ClassPrior> {
        self.prior
            .ok_or_else(|| Error::config("a class prior is required (--prior)"))
    }

    /// All samples pooled as P, then N, then U.
    pub fn pooled(&self) -> SampleMatrix {
        SampleMatrix::stack(&[&self.positives, &self.negatives, &self.unlabeled])
            .expect("dimensions validated at construction")
    }
}

/// Result of reading a CSV file: labeled data when a label column is present.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Labeled(TrainingData),
    Unlabeled(SampleMatrix),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Label {
    Positive,
    Negative,
    Unlabeled,
}

fn parse_label(token: &str) -> Option<Label> {
    let v: f64 = token.trim().parse().ok()?;
    if v == 1.0 {
        Some(Label::Positive)
    } else if v == -1.0 {
        Some(Label::Negative)
    } else if v == 0.0 {
        Some(Label::Unlabeled)
    } else {
        None
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct RoutedRows {
    positives: Vec<f64>,
    negatives: Vec<f64>,
    unlabeled: Vec<f64>,
}

impl RoutedRows {
    fn push(&mut self, label: Label, row: &[f64]) {
        match label {
            Label::Positive => self.positives.extend_from_slice(row),
            Label::Negative => self.negatives.extend_from_slice(row),
            Label::Unlabeled => self.unlabeled.extend_from_slice(row),
        }
    }

    fn finish(self, dim: usize) -> Result<TrainingData> {
        let build = |v: Vec<f64>| {
            let rows = v.len().checked_div(dim).unwrap_or(0);
            SampleMatrix::new(rows, dim, v)
        };
        TrainingData::new(
            build(self.positives)?,
            build(self.negatives)?,
            build(self.unlabeled)?,
            None,
        )
    }
}

/// Reads a comma-separated file without header. When `label_column` is given
/// that column holds labels and the rest are features.
pub fn load_csv(path: &Path, label_column: Option<usize>) -> Result<Loaded> {
    parse_csv(&read_text(path)?, path, label_column)
}

pub fn parse_csv(text: &str, path: &Path, label_column: Option<usize>) -> Result<Loaded> {
    let mut width: Option<usize> = None;
    let mut routed = RoutedRows::default();
    let mut bare = Vec::new();
    let mut row = Vec::new();
    let mut saw_rows = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("expected {w} columns, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        if let Some(c) = label_column {
            if c >= fields.len() {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("label column {c} out of range"),
                ));
            }
        }
        row.clear();
        let mut label = None;
        for (j, field) in fields.iter().enumerate() {
            if Some(j) == label_column {
                label = Some(parse_label(field).ok_or_else(|| {
                    parse_error(path, lineno, format!("invalid label {field:?}"))
                })?);
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("cannot parse {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, lineno, format!("non-finite value {field:?}")));
            }
            row.push(v);
        }
        saw_rows = true;
        match label {
            Some(l) => routed.push(l, &row),
            None => bare.extend_from_slice(&row),
        }
    }

    if !saw_rows {
        return Ok(Loaded::Unlabeled(SampleMatrix::empty(0)));
    }
    let width = width.unwrap_or(0);
    match label_column {
        Some(_) => Ok(Loaded::Labeled(routed.finish(width - 1)?)),
        None => {
            let rows = bare.len() / width.max(1);
            Ok(Loaded::Unlabeled(SampleMatrix::new(rows, width, bare)?))
        }
    }
}

/// Reads `<label> <idx>:<val> ...` lines with 1-based strictly increasing
/// indices. The result is dense with width equal to the largest index seen.
pub fn load_libsvm(path: &Path) -> Result<TrainingData> {
    parse_libsvm(&read_text(path)?, path)
}

pub fn parse_libsvm(text: &str, path: &Path) -> Result<TrainingData> {
    let mut parsed: Vec<(Label, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label = parse_label(label_tok)
            .ok_or_else(|| parse_error(path, lineno, format!("invalid label {label_tok:?}")))?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(path, lineno, format!("malformed token {tok:?}")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("bad index in {tok:?}")))?;
            if i < 1 {
                return Err(parse_error(path, lineno, "indices are 1-based"));
            }
            if i <= last {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("index {i} is not greater than previous index {last}"),
                ));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("bad value in {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, lineno, format!("non-finite value in {tok:?}")));
            }
            last = i;
            entries.push((i, v));
        }
        dim = dim.max(last);
        parsed.push((label, entries));
    }

    let mut routed = RoutedRows::default();
    let mut dense = vec![0.0; dim];
    for (label, entries) in &parsed {
        dense.iter_mut().for_each(|v| *v = 0.0);
        for &(i, v) in entries {
            dense[i - 1] = v;
        }
        routed.push(*label, &dense);
    }
    if dim == 0 {
        // Rows without any features: keep counts with zero width.
        let count = |l: Label| parsed.iter().filter(|(x, _)| *x == l).count();
        return TrainingData::new(
            SampleMatrix::new(count(Label::Positive), 0, Vec::new())?,
            SampleMatrix::new(count(Label::Negative), 0, Vec::new())?,
            SampleMatrix::new(count(Label::Unlabeled), 0, Vec::new())?,
            None,
        );
    }
    routed.finish(dim)
}

fn labeled_rows(data: &TrainingData) -> impl Iterator<Item = (&'static str, &[f64])> {
    data.positives
        .iter_rows()
        .map(|r| ("1", r))
        .chain(data.negatives.iter_rows().map(|r| ("-1", r)))
        .chain(data.unlabeled.iter_rows().map(|r| ("0", r)))
}

/// Label-first CSV. Values use the shortest representation that parses back
/// to the same `f64`, so a reload is value-identical.
pub fn write_csv<W: Write>(data: &TrainingData, mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for (label, row) in labeled_rows(data) {
        line.clear();
        line.push_str(label);
        for v in row {
            write!(line, ",{v}").expect("writing to a String");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Sparse LIBSVM text; zero entries are omitted.
pub fn write_libsvm<W: Write>(data: &TrainingData, mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for (label, row) in labeled_rows(data) {
        line.clear();
        line.push_str(if label == "1" { "+1" } else { label });
        for (j, v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            write!(line, " {}:{v}", j + 1).expect("writing to a String");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn save(data: &TrainingData, path: &Path, libsvm: bool) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let res = if libsvm {
        write_libsvm(data, &mut w)
    } else {
        write_csv(data, &mut w)
    };
    res.and_then(|_| w.flush())
        .map_err(|e| Error::io(PathBuf::from(path), e))
}

/// Two isotropic Gaussian class-conditionals and a class prior.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub mean_p: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub scale_p: f64,
    pub scale_n: f64,
    pub prior: ClassPrior,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Means `+separation/2` and `-separation/2` along the first axis, unit
    /// scales.
    pub fn separated(dim: usize, separation: f64, prior: ClassPrior, seed: u64) -> Self {
        let mut mean_p = vec![0.0; dim];
        let mut mean_n = vec![0.0; dim];
        if dim > 0 {
            mean_p[0] = separation / 2.0;
            mean_n[0] = -separation / 2.0;
        }
        Self {
            mean_p,
            mean_n,
            scale_p: 1.0,
            scale_n: 1.0,
            prior,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_p.len()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean_p.len() != self.mean_n.len() {
            return Err(Error::config("mean vectors must have equal length"));
        }
        if self.mean_p.iter().chain(&self.mean_n).any(|v| !v.is_finite()) {
            return Err(Error::config("means must be finite"));
        }
        if !(self.scale_p > 0.0 && self.scale_n > 0.0)
            || !self.scale_p.is_finite()
            || !self.scale_n.is_finite()
        {
            return Err(Error::config("class scales must be positive and finite"));
        }
        Ok(())
    }

    pub(crate) fn draw_positive<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        draw_gaussian(rng, &self.mean_p, self.scale_p, out);
    }

    pub(crate) fn draw_negative<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        draw_gaussian(rng, &self.mean_n, self.scale_n, out);
    }

    /// A draw from the marginal `theta_p p_P + theta_n p_N`.
    pub(crate) fn draw_unlabeled<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        if rng.random::<f64>() < self.prior.theta_p() {
            self.draw_positive(rng, out);
        } else {
            self.draw_negative(rng, out);
        }
    }

    pub(crate) fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
        draw: fn(&Self, &mut R, &mut Vec<f64>),
    ) -> SampleMatrix {
        let mut values = Vec::with_capacity(count * self.dim());
        for _ in 0..count {
            draw(self, rng, &mut values);
        }
        SampleMatrix {
            rows: count,
            dim: self.dim(),
            values,
        }
    }
}

fn draw_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], scale: f64, out: &mut Vec<f64>) {
    for &m in mean {
        let z: f64 = StandardNormal.sample(rng);
        out.push(m + scale * z);
    }
}

/// Draws `n_p` positives, `n_n` negatives and `n_u` unlabeled samples, each set
/// from its own seeded stream. The result carries the spec's prior.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    n_p: usize,
    n_n: usize,
    n_u: usize,
) -> Result<TrainingData> {
    spec.validate()?;
    let positives = spec.sample_with(
        &mut rng::stream(spec.seed, &[rng::TAG_POSITIVE]),
        n_p,
        SyntheticSpec::draw_positive,
    );
    let negatives = spec.sample_with(
        &mut rng::stream(spec.seed, &[rng::TAG_NEGATIVE]),
        n_n,
        SyntheticSpec::draw_negative,
    );
    let unlabeled = spec.sample_with(
        &mut rng::stream(spec.seed, &[rng::TAG_UNLABELED]),
        n_u,
        SyntheticSpec::draw_unlabeled,
    );
    TrainingData::new(positives, negatives, unlabeled, Some(spec.prior))
}

/// Fold membership for every sample, per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

impl FoldAssignment {
    fn indices(ids: &[usize], fold: usize, validation: bool) -> Vec<usize> {
        ids.iter()
            .enumerate()
            .filter(|(_, &f)| (f == fold) == validation)
            .map(|(i, _)| i)
            .collect()
    }

    /// `(train, validation)` row indices of `class` (0 = P, 1 = N, 2 = U).
    pub fn split_indices(&self, class: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let ids = match class {
            0 => &self.positives,
            1 => &self.negatives,
            _ => &self.unlabeled,
        };
        (
            Self::indices(ids, fold, false),
            Self::indices(ids, fold, true),
        )
    }
}

fn assign_class(n: usize, k: usize, seed: u64, class: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[rng::TAG_FOLDS, class]));
    let (base, extra) = (n / k, n % k);
    let mut ids = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            ids[i] = fold;
        }
        pos += size;
    }
    ids
}

/// Stratified assignment: each class is shuffled by its own stream and cut into
/// `k` parts whose sizes differ by at most one.
pub fn assign_folds(data: &TrainingData, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::config(format!("fold count must be at least 2, got {k}")));
    }
    for (name, n) in [("positive", data.n_p()), ("negative", data.n_n()), ("unlabeled", data.n_u())] {
        if n > 0 && n < k {
            return Err(Error::data(format!(
                "{name} class has {n} samples, fewer than {k} folds"
            )));
        }
    }
    Ok(FoldAssignment {
        k,
        positives: assign_class(data.n_p(), k, seed, 0),
        negatives: assign_class(data.n_n(), k, seed, 1),
        unlabeled: assign_class(data.n_u(), k, seed, 2),
    })
}

#[derive(Debug, Clone)]
pub struct Fold {
    pub train: TrainingData,
    pub validation: TrainingData,
}

pub fn split_folds(data: &TrainingData, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let assignment = assign_folds(data, k, seed)?;
    split_with(data, &assignment)
}

pub fn split_with(data: &TrainingData, assignment: &FoldAssignment) -> Result<Vec<Fold>> {
    let sets = [&data.positives, &data.negatives, &data.unlabeled];
    (0..assignment.k)
        .map(|fold| {
            let mut train = Vec::with_capacity(3);
            let mut valid = Vec::with_capacity(3);
            for (class, m) in sets.iter().enumerate() {
                let (t, v) = assignment.split_indices(class, fold);
                train.push(m.select(&t));
                valid.push(m.select(&v));
            }
            let [vp, vn, vu]: [SampleMatrix; 3] = valid.try_into().expect("three classes");
            let [tp, tn, tu]: [SampleMatrix; 3] = train.try_into().expect("three classes");
            Ok(Fold {
                train: TrainingData::new(tp, tn, tu, data.prior)?,
                validation: TrainingData::new(vp, vn, vu, data.prior)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.csv")
    }

    #[test]
    fn csv_routes_rows_by_label() {
        let text = "1,0.5,0.2\n-1,0.1,0.9\n0,0.3,0.3\n";
        let Loaded::Labeled(d) = parse_csv(text, p(), Some(0)).unwrap() else {
            panic!("expected labeled data");
        };
        assert_eq!((d.n_p(), d.n_n(), d.n_u(), d.dim()), (1, 1, 1, 2));
        assert_eq!(d.negatives().row(0), &[0.1, 0.9]);
    }

    #[test]
    fn csv_accepts_crlf_and_plus_sign() {
        let text = "+1,1\r\n-1,2\r\n";
        let Loaded::Labeled(d) = parse_csv(text, p(), Some(0)).unwrap() else {
            panic!();
        };
        assert_eq!((d.n_p(), d.n_n()), (1, 1));
    }

    #[test]
    fn csv_empty_file_is_empty_matrix() {
        match parse_csv("", p(), Some(0)).unwrap() {
            Loaded::Unlabeled(m) => assert_eq!(m.rows(), 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_without_labels_is_bare_matrix() {
        match parse_csv("1,2\n3,4\n", p(), None).unwrap() {
            Loaded::Unlabeled(m) => {
                assert_eq!((m.rows(), m.dim()), (2, 2));
                assert_eq!(m.row(1), &[3.0, 4.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let err = parse_csv("1,abc\n", p(), Some(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_csv("1,1\n-1,2\n0,1,2\n", p(), Some(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_csv("1,nan\n", p(), Some(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_csv("2,1\n", p(), Some(0)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn libsvm_expands_sparse_rows() {
        let d = parse_libsvm("+1 3:2.0\n", p()).unwrap_err();
        // A lone positive violates the P-needs-N-or-U invariant.
        assert!(matches!(d, Error::Data(_)));
        let d = parse_libsvm("+1 3:2.0\n0 1:1\n", p()).unwrap();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.positives().row(0), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn libsvm_global_dimension_pads_rows() {
        let d = parse_libsvm("+1 2:1\n0 5:1\n", p()).unwrap();
        assert_eq!(d.dim(), 5);
        assert_eq!(d.positives().row(0), &[0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.unlabeled().row(0), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn libsvm_rejects_bad_indices() {
        assert!(matches!(
            parse_libsvm("-1 1:1 1:2\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("-1 0:1\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("0 1:1\n-1 2:x\n", p()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_libsvm("-1 3:1 2:1\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn prior_bounds() {
        assert!(ClassPrior::new(0.0).is_err());
        assert!(ClassPrior::new(1.0).is_err());
        assert!(ClassPrior::new(f64::NAN).is_err());
        let p = ClassPrior::new(0.3).unwrap();
        assert_eq!(p.theta_n(), 1.0 - 0.3);
    }

    fn spec(theta: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec::separated(2, 10.0, ClassPrior::new(theta).unwrap(), seed)
    }

    #[test]
    fn synthetic_mixing_fraction() {
        // Nearest-mean classification of the unlabeled draws recovers the mixing
        // weight; with means 10 apart the misassignment rate is negligible.
        let s = spec(0.2, 11);
        let d = generate_synthetic(&s, 0, 0, 100_000).unwrap();
        let near_p = d
            .unlabeled()
            .iter_rows()
            .filter(|r| {
                let dp: f64 = r.iter().zip(&s.mean_p).map(|(a, b)| (a - b).powi(2)).sum();
                let dn: f64 = r.iter().zip(&s.mean_n).map(|(a, b)| (a - b).powi(2)).sum();
                dp < dn
            })
            .count();
        let frac = near_p as f64 / 100_000.0;
        assert!((frac - 0.2).abs() <= 0.01, "fraction {frac}");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let s = spec(0.3, 5);
        assert_eq!(
            generate_synthetic(&s, 4, 5, 6).unwrap(),
            generate_synthetic(&s, 4, 5, 6).unwrap()
        );
        assert_ne!(
            generate_synthetic(&s, 4, 5, 6).unwrap(),
            generate_synthetic(&s.with_seed(6), 4, 5, 6).unwrap()
        );
    }

    #[test]
    fn synthetic_unlabeled_only() {
        let d = generate_synthetic(&spec(0.3, 1), 0, 0, 5).unwrap();
        assert_eq!((d.n_p(), d.n_n(), d.n_u()), (0, 0, 5));
    }

    #[test]
    fn synthetic_rejects_bad_scale() {
        let mut s = spec(0.3, 1);
        s.scale_n = 0.0;
        assert!(generate_synthetic(&s, 1, 1, 1).is_err());
    }

    fn sizes(ids: &[usize], k: usize) -> Vec<usize> {
        let mut s = vec![0; k];
        ids.iter().for_each(|&f| s[f] += 1);
        s
    }

    #[test]
    fn folds_are_balanced() {
        let d = generate_synthetic(&spec(0.3, 2), 10, 11, 0).unwrap();
        let a = assign_folds(&d, 5, 3).unwrap();
        assert_eq!(sizes(&a.positives, 5), vec![2; 5]);
        let mut s = sizes(&a.negatives, 5);
        s.sort_unstable();
        assert_eq!(s, vec![2, 2, 2, 2, 3]);
        for fold in split_folds(&d, 5, 3).unwrap() {
            assert_eq!(fold.validation.n_p(), 2);
            assert_eq!(fold.train.n_p(), 8);
        }
    }

    #[test]
    fn folds_reject_small_classes() {
        let d = generate_synthetic(&spec(0.3, 2), 3, 10, 10).unwrap();
        assert!(matches!(split_folds(&d, 5, 0), Err(Error::Data(_))));
        assert!(matches!(split_folds(&d, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn fold_validations_partition_the_data() {
        let d = generate_synthetic(&spec(0.3, 8), 11, 7, 13).unwrap();
        let folds = split_folds(&d, 5, 9).unwrap();
        let mut seen: Vec<Vec<f64>> = folds
            .iter()
            .flat_map(|f| f.validation.positives().iter_rows().map(<[f64]>::to_vec))
            .collect();
        let mut orig: Vec<Vec<f64>> = d.positives().iter_rows().map(<[f64]>::to_vec).collect();
        let key = |a: &Vec<f64>, b: &Vec<f64>| a.partial_cmp(b).unwrap();
        seen.sort_by(key);
        orig.sort_by(key);
        assert_eq!(seen, orig);
        assert_eq!(
            folds.iter().map(|f| f.validation.n_u()).sum::<usize>(),
            d.n_u()
        );
    }
}
