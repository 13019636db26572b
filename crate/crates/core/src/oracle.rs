//! Brute-force reference implementations.
//!
//! Nothing here calls into the optimised risk or solver code: losses are
//! re-stated, every pairwise mean is an explicit double loop and the minimiser
//! only sees the objective as a black box. These are used by the test suites
//! and by `train --verify`.

use crate::data::ClassPrior;
use crate::error::{Error, Result};
use crate::risk::{LossKind, RiskFamily, RiskSpec, Scores};

fn loss(kind: LossKind, m: f64) -> f64 {
    match kind {
        LossKind::Squared => (1.0 - m).powi(2),
        LossKind::Exponential => (-m).exp(),
        LossKind::Logistic => {
            if m > 0.0 {
                (-m).exp().ln_1p()
            } else {
                -m + m.exp().ln_1p()
            }
        }
        LossKind::ZeroOne => (1.0 - sign(m)) / 2.0,
    }
}

fn sign(m: f64) -> f64 {
    if m > 0.0 {
        1.0
    } else if m < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `(1 / (|a| |b|)) sum_i sum_j loss(a_i - b_j)`
fn double_loop(a: &[f64], b: &[f64], kind: LossKind) -> f64 {
    let mut total = 0.0;
    for &x in a {
        for &y in b {
            total += loss(kind, x - y);
        }
    }
    total / (a.len() as f64 * b.len() as f64)
}

fn naive_pn(p: &[f64], n: &[f64], kind: LossKind) -> Result<f64> {
    if p.is_empty() || n.is_empty() {
        return Err(Error::data("PN risk needs positive and negative scores"));
    }
    Ok(double_loop(p, n, kind))
}

/// Single-sample PU estimator written exactly as summed: the P x P sum runs
/// over all ordered pairs and the diagonal is removed through `l(0)/(n-1)`.
fn naive_pu(p: &[f64], u: &[f64], prior: ClassPrior, kind: LossKind) -> Result<f64> {
    if p.len() < 2 || u.is_empty() {
        return Err(Error::data("PU risk needs >= 2 positive and >= 1 unlabeled scores"));
    }
    let (tp, tn) = (prior.theta_p(), prior.theta_n());
    let n_p = p.len() as f64;
    let mut pp = 0.0;
    for &x in p {
        for &y in p {
            pp += loss(kind, x - y);
        }
    }
    let correction = pp / (n_p * (n_p - 1.0)) - loss(kind, 0.0) / (n_p - 1.0);
    Ok(double_loop(p, u, kind) / tn - tp / tn * correction)
}

fn naive_nu(n: &[f64], u: &[f64], prior: ClassPrior, kind: LossKind) -> Result<f64> {
    if n.len() < 2 || u.is_empty() {
        return Err(Error::data("NU risk needs >= 2 negative and >= 1 unlabeled scores"));
    }
    let (tp, tn) = (prior.theta_p(), prior.theta_n());
    let n_n = n.len() as f64;
    let mut nn = 0.0;
    for &x in n {
        for &y in n {
            nn += loss(kind, x - y);
        }
    }
    let correction = nn / (n_n * (n_n - 1.0)) - loss(kind, 0.0) / (n_n - 1.0);
    Ok(double_loop(u, n, kind) / tp - tn / tp * correction)
}

/// Literal nested-loop evaluation of any risk family.
pub fn naive_risk(spec: &RiskSpec, scores: &Scores<'_>, prior: Option<ClassPrior>) -> Result<f64> {
    let need_prior = || prior.ok_or_else(|| Error::config("class prior required"));
    let (p, n, u) = (scores.positive, scores.negative, scores.unlabeled);
    let kind = spec.loss;
    let pnpu = |g: f64| -> Result<f64> {
        let mut r = 0.0;
        if g != 1.0 {
            r += (1.0 - g) * naive_pn(p, n, kind)?;
        }
        if g != 0.0 {
            r += g * naive_pu(p, u, need_prior()?, kind)?;
        }
        Ok(r)
    };
    let pnnu = |g: f64| -> Result<f64> {
        let mut r = 0.0;
        if g != 1.0 {
            r += (1.0 - g) * naive_pn(p, n, kind)?;
        }
        if g != 0.0 {
            r += g * naive_nu(n, u, need_prior()?, kind)?;
        }
        Ok(r)
    };
    match spec.family {
        RiskFamily::Pn => naive_pn(p, n, kind),
        RiskFamily::Pu => naive_pu(p, u, need_prior()?, kind),
        RiskFamily::Nu => naive_nu(n, u, need_prior()?, kind),
        RiskFamily::Pnpu(g) => pnpu(g),
        RiskFamily::Pnnu(g) => pnnu(g),
        RiskFamily::Pnu(e) if e >= 0.0 => pnpu(e),
        RiskFamily::Pnu(e) => pnnu(-e),
    }
}

/// PU estimator with an independent second positive sample `p_bar`; no
/// diagonal correction is needed.
pub fn two_sample_pu_risk(
    scores_p: &[f64],
    scores_p_bar: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    kind: LossKind,
) -> Result<f64> {
    if scores_p.is_empty() || scores_p_bar.is_empty() || scores_u.is_empty() {
        return Err(Error::data("two-sample PU risk needs non-empty score sets"));
    }
    let (tp, tn) = (prior.theta_p(), prior.theta_n());
    Ok(double_loop(scores_p, scores_u, kind) / tn - tp / tn * double_loop(scores_p, scores_p_bar, kind))
}

/// Final iterate and the objective after every accepted step.
#[derive(Debug, Clone)]
pub struct Descent {
    pub weights: Vec<f64>,
    pub trace: Vec<f64>,
}

impl Descent {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("trace holds the starting value")
    }
}

fn central_gradient<F: Fn(&[f64]) -> f64>(objective: &F, w: &[f64]) -> Vec<f64> {
    let mut probe = w.to_vec();
    (0..w.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + w[i].abs());
            probe[i] = w[i] + h;
            let up = objective(&probe);
            probe[i] = w[i] - h;
            let down = objective(&probe);
            probe[i] = w[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Plain gradient descent on `objective(w) + lambda |w|^2` from `w = 0`, with a
/// central-difference gradient and Armijo backtracking. The step grows after
/// each accepted move, so the trace is monotone non-increasing.
pub fn gradient_descent_minimize<F: Fn(&[f64]) -> f64>(
    objective: F,
    b: usize,
    lambda: f64,
    steps: usize,
    step_size: f64,
) -> Result<Descent> {
    if steps == 0 {
        return Err(Error::config("gradient descent needs at least one step"));
    }
    let total = |w: &[f64]| objective(w) + lambda * w.iter().map(|v| v * v).sum::<f64>();
    let mut w = vec![0.0; b];
    let mut value = total(&w);
    if !value.is_finite() {
        return Err(Error::numeric("objective is not finite at the start"));
    }
    let mut trace = vec![value];
    let mut t = step_size;
    let mut candidate = vec![0.0; b];
    for _ in 0..steps {
        let g = central_gradient(&total, &w);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 {
            break;
        }
        let mut accepted = false;
        while t > 1e-20 {
            for ((c, wi), gi) in candidate.iter_mut().zip(&w).zip(&g) {
                *c = wi - t * gi;
            }
            let next = total(&candidate);
            if !next.is_finite() {
                return Err(Error::numeric("objective became non-finite"));
            }
            if next <= value - 0.5 * t * g2 {
                w.copy_from_slice(&candidate);
                value = next;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(value);
        t *= 2.0;
    }
    Ok(Descent { weights: w, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic() {
        let d = gradient_descent_minimize(|w| (1.0 - w[0]).powi(2), 1, 0.0, 200, 0.1).unwrap();
        assert!((d.weights[0] - 1.0).abs() < 1e-6, "{:?}", d.weights);
        assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn regularised_quadratic_minimum() {
        // (1 - w)^2 + w^2 is minimised at w = 1/2.
        let d = gradient_descent_minimize(|w| (1.0 - w[0]).powi(2), 1, 1.0, 500, 1.0).unwrap();
        assert!((d.weights[0] - 0.5).abs() < 1e-6);
        assert!((d.objective() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_finite_objectives_and_zero_steps() {
        assert!(gradient_descent_minimize(|_| f64::NAN, 2, 0.0, 5, 0.1).is_err());
        assert!(gradient_descent_minimize(|w| w[0] * w[0], 1, 0.0, 0, 0.1).is_err());
    }

    #[test]
    fn naive_zero_scorer_is_one() {
        let zeros = [0.0; 3];
        let s = Scores { positive: &zeros, negative: &zeros, unlabeled: &zeros };
        let prior = ClassPrior::new(0.3).unwrap();
        for fam in [RiskFamily::Pn, RiskFamily::Pu, RiskFamily::Nu] {
            let r = naive_risk(&RiskSpec::squared(fam).unwrap(), &s, Some(prior)).unwrap();
            assert!((r - 1.0).abs() < 1e-12);
        }
        let r = two_sample_pu_risk(&zeros, &zeros, &zeros, prior, LossKind::Squared).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn naive_combination_is_linear() {
        let (p, n, u) = ([0.4, -1.0, 2.0], [0.1, -0.7], [0.1, 0.5, -0.2, 1.5]);
        let s = Scores { positive: &p, negative: &n, unlabeled: &u };
        let pr = Some(ClassPrior::new(0.2).unwrap());
        let r = |f| naive_risk(&RiskSpec::squared(f).unwrap(), &s, pr).unwrap();
        let expected = 0.7 * r(RiskFamily::Pn) + 0.3 * r(RiskFamily::Pu);
        assert!((r(RiskFamily::Pnu(0.3)) - expected).abs() < 1e-12);
    }

    #[test]
    fn two_sample_differs_when_the_copy_is_the_sample() {
        // With a single positive reused as its own copy the P x P term is l(0),
        // the diagonal contamination the single-sample correction removes.
        let prior = ClassPrior::new(0.4).unwrap();
        let r = two_sample_pu_risk(&[1.0], &[1.0], &[0.0, 0.5], prior, LossKind::Squared).unwrap();
        let first = ((1.0f64 - 1.0).powi(2) + (1.0f64 - 0.5).powi(2)) / 2.0;
        let expected = first / 0.6 - 0.4 / 0.6 * 1.0;
        assert!((r - expected).abs() < 1e-12);
        assert!(naive_pu(&[1.0], &[0.0, 0.5], prior, LossKind::Squared).is_err());
    }
}
