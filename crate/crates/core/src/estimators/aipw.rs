//! Augmented IPW estimators and influence-function standard errors.

use crate::data::ObservationSet;
use crate::error::Result;
use crate::nuisance::Nuisance;
use crate::report::{EstimandSpec, EstimateReport, EstimatorKind};

/// Estimated influence values `φ̂(O_i)` for one estimand.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceRecord {
    pub phi: Vec<f64>,
    pub estimand: EstimandSpec,
}

impl InfluenceRecord {
    pub fn mean(&self) -> f64 {
        self.phi.iter().sum::<f64>() / self.phi.len() as f64
    }

    /// `sqrt( (Σ φ̂² / n) / n )`: the standard error of the estimator, not of `φ`.
    pub fn se(&self) -> f64 {
        let n = self.phi.len() as f64;
        (self.phi.iter().map(|v| v * v).sum::<f64>() / n / n).sqrt()
    }
}

/// Uncentered EIF terms evaluated at nuisance values `(m0, m1, g)`.
/// Their mean is the AIPW point estimate.
pub(crate) fn eif_terms(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    m0: &[f64],
    m1: &[f64],
    g: &[f64],
) -> Vec<f64> {
    let arm = estimand.peb_arm();
    (0..data.n())
        .map(|i| {
            let y = data.y()[i];
            let treated = data.t()[i] == 1;
            match arm {
                None => {
                    let (m_obs, h) = if treated {
                        (m1[i], 1.0 / g[i])
                    } else {
                        (m0[i], -1.0 / (1.0 - g[i]))
                    };
                    h * (y - m_obs) + m1[i] - m0[i]
                }
                Some(1) => {
                    let aug = if treated { (y - m1[i]) / g[i] } else { 0.0 };
                    aug + m1[i] - y
                }
                Some(_) => {
                    let aug = if treated {
                        0.0
                    } else {
                        (y - m0[i]) / (1.0 - g[i])
                    };
                    aug + m0[i] - y
                }
            }
        })
        .collect()
}

/// Center uncentered EIF terms at their mean; returns `(point, record)`.
pub(crate) fn center(terms: Vec<f64>, estimand: &EstimandSpec) -> (f64, InfluenceRecord) {
    let point = terms.iter().sum::<f64>() / terms.len() as f64;
    (point, centered_at(terms, point, estimand))
}

pub(crate) fn centered_at(terms: Vec<f64>, point: f64, estimand: &EstimandSpec) -> InfluenceRecord {
    InfluenceRecord {
        phi: terms.into_iter().map(|v| v - point).collect(),
        estimand: *estimand,
    }
}

/// AIPW point estimate and influence record for given nuisance fits.
pub fn aipw_point(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    nuisance: &Nuisance,
) -> Result<(f64, InfluenceRecord)> {
    nuisance.check_dims(data)?;
    let (m0, m1) = nuisance.outcome.predict_arms(data);
    let g = nuisance.propensity.predict_all(data);
    Ok(center(eif_terms(data, estimand, &m0, &m1, &g), estimand))
}

pub fn estimate_aipw_with(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    nuisance: &Nuisance,
    ci_level: f64,
) -> Result<EstimateReport> {
    let (point, record) = aipw_point(data, estimand, nuisance)?;
    EstimateReport::normal(
        *estimand,
        EstimatorKind::Aipw,
        point,
        record.se(),
        ci_level,
        data.n(),
    )
}

/// AIPW with interacted-OLS outcome model and logistic propensity on all covariates.
pub fn estimate_aipw(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    ci_level: f64,
) -> Result<EstimateReport> {
    let nuisance = Nuisance::fit(data)?;
    estimate_aipw_with(data, estimand, &nuisance, ci_level)
}
