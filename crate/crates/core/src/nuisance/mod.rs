//! Nuisance functions: the outcome regression `m(t, w) = E[Y | T = t, W = w]`
//! and the propensity score `π(w) = Pr(T = 1 | W = w)`.

mod logistic;
mod ols;

pub use logistic::{
    expit, fit_logistic, fit_logistic_from, logit, PropensityModel, COEF_TOLERANCE, MAX_ITERATIONS,
    SEPARATION_BOUND,
};
pub use ols::{design_column_names, fit_ols_interacted, RegressionFit, RANK_TOLERANCE};

pub(crate) use ols::design_matrix;

use crate::data::ObservationSet;
use crate::error::{Error, Result};

/// Outcome regression evaluated on the binarized scale.
///
/// `columns` selects which covariates of the full row the regression uses, so a
/// model can deliberately omit covariates (e.g. to study misspecification).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub fit: RegressionFit,
    pub columns: Vec<usize>,
}

impl OutcomeModel {
    /// Interacted OLS on every covariate.
    pub fn fit(data: &ObservationSet) -> Result<Self> {
        Ok(Self {
            fit: fit_ols_interacted(data)?,
            columns: (0..data.p()).collect(),
        })
    }

    /// Interacted OLS on the covariate subset `columns`.
    pub fn fit_with_columns(data: &ObservationSet, columns: &[usize]) -> Result<Self> {
        let sub = data.select_covariates(columns)?;
        Ok(Self {
            fit: fit_ols_interacted(&sub)?,
            columns: columns.to_vec(),
        })
    }

    /// `m̂(t, w)` where `w` is a full covariate row.
    pub fn predict(&self, t: u8, w: &[f64]) -> f64 {
        if self.columns.len() == w.len() && self.columns.iter().enumerate().all(|(i, &c)| i == c) {
            self.fit.predict(t, w)
        } else {
            let sub: Vec<f64> = self.columns.iter().map(|&c| w[c]).collect();
            self.fit.predict(t, &sub)
        }
    }

    /// `(m̂(0, w_i), m̂(1, w_i))` for every row.
    pub fn predict_arms(&self, data: &ObservationSet) -> (Vec<f64>, Vec<f64>) {
        let mut m0 = Vec::with_capacity(data.n());
        let mut m1 = Vec::with_capacity(data.n());
        let mut row = vec![0.0; data.p()];
        for i in 0..data.n() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = data.w()[(i, j)];
            }
            m0.push(self.predict(0, &row));
            m1.push(self.predict(1, &row));
        }
        (m0, m1)
    }
}

/// Convenience free function mirroring [`OutcomeModel::predict`].
pub fn predict_outcome(model: &OutcomeModel, t: u8, w: &[f64]) -> f64 {
    model.predict(t, w)
}

/// Both nuisance fits for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Nuisance {
    pub outcome: OutcomeModel,
    pub propensity: PropensityModel,
}

impl Nuisance {
    /// Correctly specified parametric fits on every covariate.
    pub fn fit(data: &ObservationSet) -> Result<Self> {
        Ok(Self {
            outcome: OutcomeModel::fit(data)?,
            propensity: fit_logistic(data)?,
        })
    }

    pub(crate) fn check_dims(&self, data: &ObservationSet) -> Result<()> {
        if self.propensity.p() != data.p() {
            return Err(Error::Validation(format!(
                "propensity model has {} covariates, data has {}",
                self.propensity.p(),
                data.p()
            )));
        }
        if let Some(&c) = self.outcome.columns.iter().find(|&&c| c >= data.p()) {
            return Err(Error::Validation(format!(
                "outcome model uses covariate {c}, data has {}",
                data.p()
            )));
        }
        Ok(())
    }
}
