//! Targeted maximum likelihood with a one-dimensional logistic fluctuation.
//!
//! The outcome is min-max scaled into (0, 1) with bounds taken over the
//! observed outcomes and the initial counterfactual predictions (widened by
//! [`BOUND_MARGIN`] of the range), so the initial predictions have finite
//! logits. The fluctuation submodel is
//! `logit Q_ε(t, w) = logit Q(t, w) + ε H(t, w)` with clever covariate
//!
//! | estimand | `H(1, w)`      | `H(0, w)`           |
//! |----------|----------------|---------------------|
//! | BATE     | `1/g(w)`       | `-1/(1 - g(w))`     |
//! | PEB(1)   | `1 - 1/g(w)`   | `1`                 |
//! | PEB(0)   | `1`            | `1 - 1/(1 - g(w))`  |
//!
//! and `ε` solves the score equation `Σ H(T_i, W_i)(Y_i - Q_ε(T_i, W_i)) = 0`.
//! The targeted plug-in is `mean(Q*(1,W) - Q*(0,W))` for BATE and
//! `mean(Q*(arm,W) - Q*(T,W))` for PEB.

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::estimators::aipw::{centered_at, eif_terms, InfluenceRecord};
use crate::nuisance::{expit, logit, Nuisance};
use crate::report::{EstimandSpec, EstimateReport, EstimatorKind};

pub const BOUND_MARGIN: f64 = 0.01;
const MAX_NEWTON: usize = 100;
const EPS_TOLERANCE: f64 = 1e-12;

/// Result of the targeting step, on the original outcome scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TmleFit {
    pub epsilon: f64,
    pub iterations: usize,
    pub point: f64,
    pub q0_star: Vec<f64>,
    pub q1_star: Vec<f64>,
    pub influence: InfluenceRecord,
}

/// Clever covariate `(H(0, w), H(1, w))` for propensity `g`.
fn clever(estimand: &EstimandSpec, g: f64) -> (f64, f64) {
    match estimand.peb_arm() {
        None => (-1.0 / (1.0 - g), 1.0 / g),
        Some(1) => (1.0, 1.0 - 1.0 / g),
        Some(_) => (1.0 - 1.0 / (1.0 - g), 1.0),
    }
}

/// Fluctuation coefficient maximizing the quasi-binomial log likelihood.
fn solve_fluctuation(y: &[f64], offset: &[f64], h: &[f64]) -> Result<(f64, usize)> {
    let loglik = |eps: f64| -> f64 {
        y.iter()
            .zip(offset)
            .zip(h)
            .map(|((&y, &o), &h)| {
                let eta = o + eps * h;
                // y·log p + (1-y)·log(1-p) in a form that stays finite for large |eta|
                y * eta - softplus(eta)
            })
            .sum()
    };
    let mut eps = 0.0;
    let mut current = loglik(eps);
    for iter in 1..=MAX_NEWTON {
        let (mut score, mut info) = (0.0, 0.0);
        for ((&y, &o), &h) in y.iter().zip(offset).zip(h) {
            let p = expit(o + eps * h);
            score += h * (y - p);
            info += h * h * p * (1.0 - p);
        }
        if score == 0.0 {
            return Ok((eps, iter - 1));
        }
        if info.is_nan() || info <= 0.0 {
            return Err(Error::NonConvergence {
                what: "TMLE fluctuation",
                iterations: iter,
                trace: format!("zero information at epsilon = {eps:.3e}"),
            });
        }
        let mut step = score / info;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = loglik(eps + step);
            if cand >= current - 1e-12 * current.abs() {
                eps += step;
                current = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < EPS_TOLERANCE * (1.0 + eps.abs()) {
            return Ok((eps, iter));
        }
    }
    Err(Error::NonConvergence {
        what: "TMLE fluctuation",
        iterations: MAX_NEWTON,
        trace: format!("epsilon = {eps:.6e}"),
    })
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn tmle_fit(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    nuisance: &Nuisance,
) -> Result<TmleFit> {
    nuisance.check_dims(data)?;
    let n = data.n();
    let (m0, m1) = nuisance.outcome.predict_arms(data);
    let g = nuisance.propensity.predict_all(data);
    let t = data.t();
    let y = data.y();

    let (lo, hi) = y
        .iter()
        .chain(&m0)
        .chain(&m1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;

    let (epsilon, iterations, q0_star, q1_star) = if range > 0.0 {
        let lo = lo - BOUND_MARGIN * range;
        let scale = range * (1.0 + 2.0 * BOUND_MARGIN);
        let to_unit = |v: f64| (v - lo) / scale;
        let ys: Vec<f64> = y.iter().map(|&v| to_unit(v)).collect();
        let l0: Vec<f64> = m0.iter().map(|&v| logit(to_unit(v))).collect();
        let l1: Vec<f64> = m1.iter().map(|&v| logit(to_unit(v))).collect();
        let hs: Vec<(f64, f64)> = g.iter().map(|&gi| clever(estimand, gi)).collect();
        let offset: Vec<f64> = (0..n)
            .map(|i| if t[i] == 1 { l1[i] } else { l0[i] })
            .collect();
        let h_obs: Vec<f64> = (0..n)
            .map(|i| if t[i] == 1 { hs[i].1 } else { hs[i].0 })
            .collect();
        let (eps, iters) = solve_fluctuation(&ys, &offset, &h_obs)?;
        let back = |l: f64, h: f64| lo + scale * expit(l + eps * h);
        let q0: Vec<f64> = (0..n).map(|i| back(l0[i], hs[i].0)).collect();
        let q1: Vec<f64> = (0..n).map(|i| back(l1[i], hs[i].1)).collect();
        (eps, iters, q0, q1)
    } else {
        // Outcome and predictions are all one constant: nothing to target.
        (0.0, 0, m0, m1)
    };

    let point = match estimand.peb_arm() {
        None => (0..n).map(|i| q1_star[i] - q0_star[i]).sum::<f64>() / n as f64,
        Some(arm) => {
            (0..n)
                .map(|i| {
                    let q_arm = if arm == 1 { q1_star[i] } else { q0_star[i] };
                    let q_obs = if t[i] == 1 { q1_star[i] } else { q0_star[i] };
                    q_arm - q_obs
                })
                .sum::<f64>()
                / n as f64
        }
    };
    let influence = centered_at(
        eif_terms(data, estimand, &q0_star, &q1_star, &g),
        point,
        estimand,
    );

    Ok(TmleFit {
        epsilon,
        iterations,
        point,
        q0_star,
        q1_star,
        influence,
    })
}

pub fn estimate_tmle_with(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    nuisance: &Nuisance,
    ci_level: f64,
) -> Result<EstimateReport> {
    let fit = tmle_fit(data, estimand, nuisance)?;
    EstimateReport::normal(
        *estimand,
        EstimatorKind::Tmle,
        fit.point,
        fit.influence.se(),
        ci_level,
        data.n(),
    )
}

pub fn estimate_tmle(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    ci_level: f64,
) -> Result<EstimateReport> {
    let nuisance = Nuisance::fit(data)?;
    estimate_tmle_with(data, estimand, &nuisance, ci_level)
}
