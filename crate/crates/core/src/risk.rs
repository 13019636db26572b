//! Empirical AUC risks over score vectors.
//!
//! A scorer `g` induces the composite classifier `f(x, x') = g(x) - g(x')`, so
//! every risk here is a function of per-sample scores only. Pairwise means are
//! evaluated in linear time for the squared and exponential losses, by sorting
//! for the zero-one loss, and by the plain double loop for the logistic loss.

use crate::data::ClassPrior;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(1 - m)^2`
    Squared,
    /// `exp(-m)`
    Exponential,
    /// `log(1 + exp(-m))`
    Logistic,
    /// `(1 - sign(m)) / 2` with `sign(0) = 0`.
    ZeroOne,
}

impl LossKind {
    pub fn eval(self, m: f64) -> f64 {
        match self {
            LossKind::Squared => (1.0 - m) * (1.0 - m),
            LossKind::Exponential => (-m).exp(),
            LossKind::Logistic => softplus(-m),
            LossKind::ZeroOne => {
                if m > 0.0 {
                    0.0
                } else if m < 0.0 {
                    1.0
                } else {
                    0.5
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Exponential => "exponential",
            LossKind::Logistic => "logistic",
            LossKind::ZeroOne => "zero-one",
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Which risk to evaluate or minimise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskFamily {
    Pn,
    Pu,
    Nu,
    /// `(1 - gamma) PN + gamma PU`
    Pnpu(f64),
    /// `(1 - gamma) PN + gamma NU`
    Pnnu(f64),
    /// `PNPU(eta)` for `eta >= 0`, `PNNU(-eta)` otherwise.
    Pnu(f64),
}

/// Mixing weights of the three base risks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskWeights {
    pub pn: f64,
    pub pu: f64,
    pub nu: f64,
}

impl RiskFamily {
    pub fn validate(self) -> Result<Self> {
        match self {
            RiskFamily::Pnpu(g) | RiskFamily::Pnnu(g) if !(0.0..=1.0).contains(&g) => Err(
                Error::config(format!("gamma must lie in [0, 1], got {g}")),
            ),
            RiskFamily::Pnu(e) if !(-1.0..=1.0).contains(&e) => Err(Error::config(format!(
                "eta must lie in [-1, 1], got {e}"
            ))),
            f => Ok(f),
        }
    }

    pub fn weights(self) -> RiskWeights {
        let w = |pn, pu, nu| RiskWeights { pn, pu, nu };
        match self {
            RiskFamily::Pn => w(1.0, 0.0, 0.0),
            RiskFamily::Pu => w(0.0, 1.0, 0.0),
            RiskFamily::Nu => w(0.0, 0.0, 1.0),
            RiskFamily::Pnpu(g) => w(1.0 - g, g, 0.0),
            RiskFamily::Pnnu(g) => w(1.0 - g, 0.0, g),
            RiskFamily::Pnu(e) if e >= 0.0 => w(1.0 - e, e, 0.0),
            RiskFamily::Pnu(e) => w(1.0 + e, 0.0, -e),
        }
    }

    /// The simplest family with the same weights: `PNU(0)` is `PN`,
    /// `PNPU(1)` is `PU`, `PNU(-0.3)` is `PNNU(0.3)` and so on.
    pub fn canonical(self) -> Self {
        let RiskWeights { pn, pu, nu } = self.weights();
        match (pn == 0.0, pu == 0.0, nu == 0.0) {
            (_, true, true) => RiskFamily::Pn,
            (true, false, true) => RiskFamily::Pu,
            (true, true, false) => RiskFamily::Nu,
            (false, false, _) => RiskFamily::Pnpu(pu),
            _ => RiskFamily::Pnnu(nu),
        }
    }

    pub fn needs_prior(self) -> bool {
        let w = self.weights();
        w.pu != 0.0 || w.nu != 0.0
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskFamily::Pn => "pn",
            RiskFamily::Pu => "pu",
            RiskFamily::Nu => "nu",
            RiskFamily::Pnpu(_) => "pnpu",
            RiskFamily::Pnnu(_) => "pnnu",
            RiskFamily::Pnu(_) => "pnu",
        }
    }

    /// The `gamma` or `eta` parameter, if the family has one.
    pub fn parameter(self) -> Option<f64> {
        match self {
            RiskFamily::Pnpu(v) | RiskFamily::Pnnu(v) | RiskFamily::Pnu(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSpec {
    pub family: RiskFamily,
    pub loss: LossKind,
}

impl RiskSpec {
    pub fn new(family: RiskFamily, loss: LossKind) -> Result<Self> {
        Ok(Self {
            family: family.validate()?,
            loss,
        })
    }

    pub fn squared(family: RiskFamily) -> Result<Self> {
        Self::new(family, LossKind::Squared)
    }
}

/// Per-sample scores `g(x)` of the three sample sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct Scores<'a> {
    pub positive: &'a [f64],
    pub negative: &'a [f64],
    pub unlabeled: &'a [f64],
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_and_var(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var)
}

/// Counts of pairs `(i, j)` with `a_i > b_j`, `a_i == b_j` and `a_i < b_j`.
pub fn rank_counts(a: &[f64], b: &[f64]) -> (u64, u64, u64) {
    let mut sorted = b.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (mut greater, mut ties) = (0u64, 0u64);
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let not_above = sorted.partition_point(|&y| y <= x);
        greater += below as u64;
        ties += (not_above - below) as u64;
    }
    let total = a.len() as u64 * b.len() as u64;
    (greater, ties, total - greater - ties)
}

/// Fraction of pairs ranked correctly, ties counting one half.
///
/// Swapping the arguments gives exactly `1 - value`: the smaller of the two
/// fractions is always the one divided out, the larger its complement.
pub fn ranked_fraction(a: &[f64], b: &[f64]) -> f64 {
    let (greater, ties, less) = rank_counts(a, b);
    let denom = 2.0 * (a.len() as f64) * (b.len() as f64);
    let (up, down) = (2 * greater + ties, 2 * less + ties);
    if up <= down {
        up as f64 / denom
    } else {
        1.0 - down as f64 / denom
    }
}

/// Mean of `loss(a_i - b_j)` over all pairs. Both slices must be non-empty.
pub fn pair_mean(a: &[f64], b: &[f64], loss: LossKind) -> f64 {
    debug_assert!(!a.is_empty() && !b.is_empty());
    match loss {
        LossKind::Squared => {
            let (ma, va) = mean_and_var(a);
            let (mb, vb) = mean_and_var(b);
            let r = 1.0 - (ma - mb);
            r * r + va + vb
        }
        LossKind::Exponential => {
            // sum_i exp(-a_i) * sum_j exp(b_j), shifted against overflow.
            let sa = a.iter().map(|x| -x).fold(f64::NEG_INFINITY, f64::max);
            let sb = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ea = a.iter().map(|x| (-x - sa).exp()).sum::<f64>() / a.len() as f64;
            let eb = b.iter().map(|x| (x - sb).exp()).sum::<f64>() / b.len() as f64;
            (sa + sb).exp() * ea * eb
        }
        LossKind::ZeroOne => 1.0 - ranked_fraction(a, b),
        LossKind::Logistic => {
            let total: f64 = a
                .iter()
                .map(|x| b.iter().map(|y| softplus(y - x)).sum::<f64>())
                .sum();
            total / (a.len() as f64 * b.len() as f64)
        }
    }
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::data(what.to_string()))
    }
}

pub fn empirical_pn_risk(scores_p: &[f64], scores_n: &[f64], loss: LossKind) -> Result<f64> {
    require(!scores_p.is_empty(), "PN risk needs positive samples")?;
    require(!scores_n.is_empty(), "PN risk needs negative samples")?;
    Ok(pair_mean(scores_p, scores_n, loss))
}

/// Unbiased estimate of `E[l(f(x, x'))]` over independent same-class pairs
/// from one sample: the all-ordered-pairs mean rescaled by `n/(n-1)` minus the
/// diagonal's `l(0)/(n-1)`.
fn same_class_term(scores: &[f64], loss: LossKind) -> f64 {
    let n = scores.len() as f64;
    n / (n - 1.0) * pair_mean(scores, scores, loss) - loss.eval(0.0) / (n - 1.0)
}

/// PU-AUC risk estimated from positive and unlabeled scores.
pub fn empirical_pu_risk(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    loss: LossKind,
) -> Result<f64> {
    require(scores_p.len() >= 2, "PU risk needs at least 2 positive samples")?;
    require(!scores_u.is_empty(), "PU risk needs unlabeled samples")?;
    let (tp, tn) = (prior.theta_p(), prior.theta_n());
    Ok(pair_mean(scores_p, scores_u, loss) / tn - tp / tn * same_class_term(scores_p, loss))
}

/// NU-AUC risk estimated from negative and unlabeled scores.
pub fn empirical_nu_risk(
    scores_n: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    loss: LossKind,
) -> Result<f64> {
    require(scores_n.len() >= 2, "NU risk needs at least 2 negative samples")?;
    require(!scores_u.is_empty(), "NU risk needs unlabeled samples")?;
    let (tp, tn) = (prior.theta_p(), prior.theta_n());
    Ok(pair_mean(scores_u, scores_n, loss) / tp - tn / tp * same_class_term(scores_n, loss))
}

/// Any family as the weighted sum of its PN, PU and NU parts. Parts with zero
/// weight are not evaluated, so their sample sets may be empty.
pub fn empirical_combined_risk(
    spec: &RiskSpec,
    scores: &Scores<'_>,
    prior: Option<ClassPrior>,
) -> Result<f64> {
    let w = spec.family.validate()?.weights();
    let prior = || {
        prior.ok_or_else(|| {
            Error::config(format!("{} risk needs a class prior", spec.family.name()))
        })
    };
    let mut total = 0.0;
    if w.pn != 0.0 {
        total += w.pn * empirical_pn_risk(scores.positive, scores.negative, spec.loss)?;
    }
    if w.pu != 0.0 {
        total += w.pu * empirical_pu_risk(scores.positive, scores.unlabeled, prior()?, spec.loss)?;
    }
    if w.nu != 0.0 {
        total += w.nu * empirical_nu_risk(scores.negative, scores.unlabeled, prior()?, spec.loss)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    const ALL_LOSSES: [LossKind; 4] = [
        LossKind::Squared,
        LossKind::Exponential,
        LossKind::Logistic,
        LossKind::ZeroOne,
    ];

    fn prior(t: f64) -> ClassPrior {
        ClassPrior::new(t).unwrap()
    }

    #[test]
    fn loss_values() {
        assert_eq!(LossKind::Squared.eval(0.0), 1.0);
        assert_eq!(LossKind::ZeroOne.eval(0.0), 0.5);
        assert_eq!(LossKind::ZeroOne.eval(1e-300), 0.0);
        assert_eq!(LossKind::ZeroOne.eval(-2.0), 1.0);
        assert!((LossKind::Logistic.eval(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((LossKind::Logistic.eval(-800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn pn_examples() {
        let r = empirical_pn_risk(&[0.3, 0.3], &[0.3], LossKind::Squared).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert_eq!(empirical_pn_risk(&[1.0], &[0.0], LossKind::ZeroOne).unwrap(), 0.0);
        // (e^-1 + e^1) / 2, enumerated by hand.
        let r = empirical_pn_risk(&[2.0, 0.0], &[1.0], LossKind::Exponential).unwrap();
        assert!((r - 1.543_080_634_815_243_7).abs() < 1e-12, "{r}");
        assert!(empirical_pn_risk(&[], &[1.0], LossKind::Squared).is_err());
    }

    #[test]
    fn pu_and_nu_zero_scorer() {
        for t in [0.05, 0.3, 0.7, 0.95] {
            let zeros = [0.0; 4];
            let pu = empirical_pu_risk(&zeros[..3], &zeros, prior(t), LossKind::Squared).unwrap();
            let nu = empirical_nu_risk(&zeros[..2], &zeros, prior(t), LossKind::Squared).unwrap();
            assert!((pu - 1.0).abs() < 1e-12, "{pu}");
            assert!((nu - 1.0).abs() < 1e-12, "{nu}");
        }
    }

    #[test]
    fn pu_needs_two_positives() {
        assert!(empirical_pu_risk(&[1.0], &[0.0], prior(0.3), LossKind::Squared).is_err());
        assert!(empirical_nu_risk(&[1.0], &[0.0], prior(0.3), LossKind::Squared).is_err());
        assert!(empirical_pu_risk(&[1.0, 2.0], &[], prior(0.3), LossKind::Squared).is_err());
    }

    #[test]
    fn pu_small_prior_approaches_plain_mean() {
        let (p, u) = ([0.4, -1.0, 2.0], [0.1, 0.5, -0.2, 1.5]);
        let t = 1e-12;
        for loss in ALL_LOSSES {
            let r = empirical_pu_risk(&p, &u, prior(t), loss).unwrap();
            assert!((r - pair_mean(&p, &u, loss)).abs() < 1e-9);
            let r = empirical_nu_risk(&p, &u, prior(1.0 - t), loss).unwrap();
            assert!((r - pair_mean(&u, &p, loss)).abs() < 1e-9);
        }
    }

    #[test]
    fn pnu_endpoints_are_exact() {
        let (p, n, u) = ([0.4, -1.0, 2.0], [0.1, -0.7], [0.1, 0.5, -0.2, 1.5]);
        let s = Scores { positive: &p, negative: &n, unlabeled: &u };
        let pr = Some(prior(0.3));
        for loss in ALL_LOSSES {
            let eval = |f| empirical_combined_risk(&RiskSpec::new(f, loss).unwrap(), &s, pr).unwrap();
            assert_eq!(eval(RiskFamily::Pnu(0.0)), eval(RiskFamily::Pn));
            assert_eq!(eval(RiskFamily::Pnpu(0.0)), eval(RiskFamily::Pn));
            assert_eq!(eval(RiskFamily::Pnnu(0.0)), eval(RiskFamily::Pn));
            assert_eq!(eval(RiskFamily::Pnu(1.0)), eval(RiskFamily::Pu));
            assert_eq!(eval(RiskFamily::Pnu(-1.0)), eval(RiskFamily::Nu));
            assert_eq!(eval(RiskFamily::Pn), empirical_pn_risk(&p, &n, loss).unwrap());
        }
    }

    #[test]
    fn combined_reports_missing_classes() {
        let s = Scores { positive: &[1.0, 2.0], negative: &[], unlabeled: &[0.0] };
        let spec = RiskSpec::squared(RiskFamily::Pnu(0.5)).unwrap();
        assert!(empirical_combined_risk(&spec, &s, Some(prior(0.5))).is_err());
        let spec = RiskSpec::squared(RiskFamily::Pu).unwrap();
        assert!(matches!(empirical_combined_risk(&spec, &s, None), Err(Error::Config(_))));
        assert!(empirical_combined_risk(&spec, &s, Some(prior(0.5))).is_ok());
    }

    #[test]
    fn family_validation_and_canonical_form() {
        assert!(RiskFamily::Pnpu(1.5).validate().is_err());
        assert!(RiskFamily::Pnu(-1.01).validate().is_err());
        assert_eq!(RiskFamily::Pnu(0.0).canonical(), RiskFamily::Pn);
        assert_eq!(RiskFamily::Pnu(-1.0).canonical(), RiskFamily::Nu);
        assert_eq!(RiskFamily::Pnpu(1.0).canonical(), RiskFamily::Pu);
        assert_eq!(RiskFamily::Pnu(-0.25).canonical(), RiskFamily::Pnnu(0.25));
        assert_eq!(RiskFamily::Pnu(0.25).canonical(), RiskFamily::Pnpu(0.25));
        assert!(!RiskFamily::Pnu(0.0).needs_prior());
    }

    fn scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 2..max)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn fast_paths_match_naive_loops(
            p in scores(20), n in scores(20), u in scores(20), t in 0.05f64..0.95,
            eta in -1.0f64..1.0,
        ) {
            let s = Scores { positive: &p, negative: &n, unlabeled: &u };
            for loss in ALL_LOSSES {
                for fam in [RiskFamily::Pn, RiskFamily::Pu, RiskFamily::Nu, RiskFamily::Pnu(eta)] {
                    let spec = RiskSpec::new(fam, loss).unwrap();
                    let fast = empirical_combined_risk(&spec, &s, Some(prior(t))).unwrap();
                    let slow = oracle::naive_risk(&spec, &s, Some(prior(t))).unwrap();
                    prop_assert!(rel_close(fast, slow, 1e-10), "{:?} {:?}: {} vs {}", fam, loss, fast, slow);
                }
            }
        }

        #[test]
        fn nu_is_sign_flipped_pu(n in scores(15), u in scores(15), t in 0.05f64..0.95) {
            let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
            for loss in ALL_LOSSES {
                let a = empirical_nu_risk(&n, &u, prior(t), loss).unwrap();
                let b = empirical_pu_risk(&neg(&n), &neg(&u), prior(1.0 - t), loss).unwrap();
                prop_assert!(rel_close(a, b, 1e-12), "{:?}: {} vs {}", loss, a, b);
            }
        }

        #[test]
        fn risks_are_shift_invariant(
            p in scores(12), n in scores(12), u in scores(12), c in -5.0f64..5.0, eta in -1.0f64..1.0,
        ) {
            let sh = |v: &[f64]| v.iter().map(|x| x + c).collect::<Vec<_>>();
            let (p2, n2, u2) = (sh(&p), sh(&n), sh(&u));
            for loss in ALL_LOSSES {
                let spec = RiskSpec::new(RiskFamily::Pnu(eta), loss).unwrap();
                let a = empirical_combined_risk(&spec, &Scores { positive: &p, negative: &n, unlabeled: &u }, Some(prior(0.4))).unwrap();
                let b = empirical_combined_risk(&spec, &Scores { positive: &p2, negative: &n2, unlabeled: &u2 }, Some(prior(0.4))).unwrap();
                // Zero-one comparisons can flip on rounding of the shifted scores.
                if loss != LossKind::ZeroOne {
                    prop_assert!(rel_close(a, b, 1e-9), "{:?}: {} vs {}", loss, a, b);
                }
            }
        }

        #[test]
        fn zero_one_shift_invariance_on_integer_scores(
            p in prop::collection::vec(-5i32..5, 2..10),
            n in prop::collection::vec(-5i32..5, 2..10),
            c in -100i32..100,
        ) {
            let f = |v: &[i32], s: i32| v.iter().map(|&x| f64::from(x + s)).collect::<Vec<_>>();
            prop_assert_eq!(
                empirical_pn_risk(&f(&p, 0), &f(&n, 0), LossKind::ZeroOne).unwrap(),
                empirical_pn_risk(&f(&p, c), &f(&n, c), LossKind::ZeroOne).unwrap()
            );
        }

        #[test]
        fn ranked_fraction_is_antisymmetric(
            a in prop::collection::vec(-3i32..3, 1..30),
            b in prop::collection::vec(-3i32..3, 1..30),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            prop_assert_eq!(ranked_fraction(&a, &b) + ranked_fraction(&b, &a), 1.0);
        }
    }
}
