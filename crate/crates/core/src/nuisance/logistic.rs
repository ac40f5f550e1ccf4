//! Propensity score `Pr(T = 1 | W = w)` by logistic regression, fit with IRLS.

use nalgebra::{DMatrix, DVector};

use crate::data::ObservationSet;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const COEF_TOLERANCE: f64 = 1e-10;
/// A coefficient larger than this in magnitude is treated as diverging.
pub const SEPARATION_BOUND: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

const P_FLOOR: f64 = f64::MIN_POSITIVE;
const P_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

impl PropensityModel {
    /// A model that ignores the covariates and predicts `prob` everywhere.
    pub fn constant(prob: f64, p: usize) -> Result<Self> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::Validation(format!(
                "constant propensity must lie in (0, 1), got {prob}"
            )));
        }
        Ok(Self {
            intercept: logit(prob),
            coef: vec![0.0; p],
        })
    }

    pub fn p(&self) -> usize {
        self.coef.len()
    }

    pub fn linear_predictor(&self, w: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(w).map(|(b, x)| b * x).sum::<f64>()
    }

    /// `π̂(w)`, always strictly inside (0, 1).
    pub fn predict(&self, w: &[f64]) -> f64 {
        expit(self.linear_predictor(w)).clamp(P_FLOOR, P_CEIL)
    }

    pub fn predict_all(&self, data: &ObservationSet) -> Vec<f64> {
        let w = data.w();
        (0..data.n())
            .map(|i| {
                let eta = self.intercept
                    + self
                        .coef
                        .iter()
                        .enumerate()
                        .map(|(j, b)| b * w[(i, j)])
                        .sum::<f64>();
                expit(eta).clamp(P_FLOOR, P_CEIL)
            })
            .collect()
    }

    pub fn log_likelihood(&self, data: &ObservationSet) -> f64 {
        self.predict_all(data)
            .iter()
            .zip(data.t())
            .map(|(&p, &t)| if t == 1 { p.ln() } else { (1.0 - p).ln() })
            .sum()
    }
}

/// Maximum-likelihood logistic regression of `t` on `[1, w]`.
pub fn fit_logistic(data: &ObservationSet) -> Result<PropensityModel> {
    fit_logistic_from(data, None)
}

/// As [`fit_logistic`], starting Newton iterations from `start` instead of zero.
/// The solution does not depend on the start; a nearby start only saves iterations.
pub fn fit_logistic_from(
    data: &ObservationSet,
    start: Option<&PropensityModel>,
) -> Result<PropensityModel> {
    data.require_both_arms()?;
    let (n, p) = (data.n(), data.p());
    let k = p + 1;
    let w = data.w();
    let t = data.t();

    let mut beta = DVector::<f64>::zeros(k);
    if let Some(s) = start {
        if s.p() != p {
            return Err(Error::Validation(format!(
                "start model has {} covariates, data has {p}",
                s.p()
            )));
        }
        beta[0] = s.intercept;
        for j in 0..p {
            beta[j + 1] = s.coef[j];
        }
    }

    let mut trace = Vec::new();
    let mut hess = DMatrix::<f64>::zeros(k, k);
    let mut score = DVector::<f64>::zeros(k);
    let mut x = vec![0.0; k];
    for _ in 0..MAX_ITERATIONS {
        hess.fill(0.0);
        score.fill(0.0);
        for i in 0..n {
            x[0] = 1.0;
            for j in 0..p {
                x[j + 1] = w[(i, j)];
            }
            let eta: f64 = x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            let pi = expit(eta);
            let wt = pi * (1.0 - pi);
            let resid = f64::from(t[i]) - pi;
            for r in 0..k {
                score[r] += x[r] * resid;
                for c in 0..=r {
                    hess[(r, c)] += wt * x[r] * x[c];
                }
            }
        }
        for r in 0..k {
            for c in (r + 1)..k {
                hess[(r, c)] = hess[(c, r)];
            }
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&score),
            None => {
                let magnitude = beta.amax();
                if magnitude > SEPARATION_BOUND / 2.0 {
                    return Err(Error::Separation { magnitude });
                }
                return Err(Error::Singular(
                    "logistic information matrix is not positive definite".into(),
                ));
            }
        };
        beta += &step;
        let change = step.amax();
        trace.push(change);
        let magnitude = beta.amax();
        if !magnitude.is_finite() || magnitude > SEPARATION_BOUND {
            return Err(Error::Separation { magnitude });
        }
        if change < COEF_TOLERANCE {
            return Ok(PropensityModel {
                intercept: beta[0],
                coef: beta.rows(1, p).iter().copied().collect(),
            });
        }
    }
    let tail: Vec<String> = trace
        .iter()
        .rev()
        .take(5)
        .rev()
        .map(|c| format!("{c:.2e}"))
        .collect();
    Err(Error::NonConvergence {
        what: "logistic IRLS",
        iterations: MAX_ITERATIONS,
        trace: format!("last max coefficient changes [{}]", tail.join(", ")),
    })
}
