//! Point estimates and standard errors for BATE and PEB.

pub mod aipw;
pub mod bootstrap;
pub mod ipw;
pub mod regression;
pub mod tmle;

pub use aipw::{aipw_point, estimate_aipw, estimate_aipw_with, InfluenceRecord};
pub use bootstrap::{
    bootstrap_draws, bootstrap_se, sample_sd, BootstrapConfig, BootstrapDraws, BootstrapSummary,
    CiMethod,
};
pub use ipw::{estimate_ipw, estimate_ipw_many, ipw_point};
pub use regression::{
    delta_gradient, delta_method_se, estimate_reg, reg_point, sandwich_variance, SandwichComponents,
};
pub use tmle::{estimate_tmle, estimate_tmle_with, tmle_fit, TmleFit};

use crate::data::ObservationSet;
use crate::diagnostics::{positivity_diagnostic, summarize_warnings};
use crate::error::{Error, Result};
use crate::nuisance::{fit_logistic, fit_ols_interacted, Nuisance, OutcomeModel};
use crate::report::{EstimandSpec, EstimateReport, EstimatorKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub ci_level: f64,
    pub bootstrap: BootstrapConfig,
    /// Propensities within this distance of 0 or 1 are reported.
    pub positivity_eps: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            ci_level: 0.95,
            bootstrap: BootstrapConfig::default(),
            positivity_eps: 0.01,
        }
    }
}

const MAX_POSITIVITY_LINES: usize = 5;

/// Estimate every `(estimator, estimand)` pair, fitting each nuisance model once.
///
/// Results are ordered estimator-major. A failure in one estimator does not
/// prevent the others from being reported.
pub fn estimate_many(
    data: &ObservationSet,
    estimators: &[EstimatorKind],
    estimands: &[EstimandSpec],
    config: &EstimationConfig,
) -> Vec<Result<EstimateReport>> {
    let needs = |k: EstimatorKind| estimators.contains(&k);
    let reg_fit =
        (needs(EstimatorKind::Reg) || needs(EstimatorKind::Aipw) || needs(EstimatorKind::Tmle))
            .then(|| fit_ols_interacted(data));
    let propensity =
        (needs(EstimatorKind::Ipw) || needs(EstimatorKind::Aipw) || needs(EstimatorKind::Tmle))
            .then(|| fit_logistic(data));

    let positivity: Vec<String> = match &propensity {
        Some(Ok(model)) => summarize_warnings(
            &positivity_diagnostic(model, data, config.positivity_eps),
            MAX_POSITIVITY_LINES,
        ),
        _ => Vec::new(),
    };
    let nuisance = match (&reg_fit, &propensity) {
        (Some(Ok(fit)), Some(Ok(model))) => Some(Ok(Nuisance {
            outcome: OutcomeModel {
                fit: fit.clone(),
                columns: (0..data.p()).collect(),
            },
            propensity: model.clone(),
        })),
        (Some(Err(e)), _) | (_, Some(Err(e))) => Some(Err(clone_err(e))),
        _ => None,
    };

    let mut out = Vec::with_capacity(estimators.len() * estimands.len());
    for &kind in estimators {
        match kind {
            EstimatorKind::Reg => {
                let fit = reg_fit.as_ref().expect("fit for reg");
                let sw = fit
                    .as_ref()
                    .map_err(clone_err)
                    .and_then(|f| sandwich_variance(f, data).map(|s| (f, s)));
                for e in estimands {
                    out.push(match &sw {
                        Ok((f, s)) => EstimateReport::normal(
                            *e,
                            kind,
                            reg_point(f, e),
                            delta_method_se(s, e),
                            config.ci_level,
                            data.n(),
                        ),
                        Err(err) => Err(clone_err(err)),
                    });
                }
            }
            EstimatorKind::Ipw => {
                let model = propensity.as_ref().expect("propensity for ipw");
                let reports = model.as_ref().map_err(clone_err).and_then(|m| {
                    ipw::estimate_ipw_many_with(
                        data,
                        estimands,
                        m,
                        &config.bootstrap,
                        config.ci_level,
                    )
                });
                match reports {
                    Ok(rs) => out.extend(rs.into_iter().map(|mut r| {
                        r.warnings.extend(positivity.iter().cloned());
                        Ok(r)
                    })),
                    Err(err) => out.extend(estimands.iter().map(|_| Err(clone_err(&err)))),
                }
            }
            EstimatorKind::Aipw | EstimatorKind::Tmle => {
                let nuis = nuisance.as_ref().expect("nuisance for aipw/tmle");
                for e in estimands {
                    let report = nuis.as_ref().map_err(clone_err).and_then(|nu| {
                        if kind == EstimatorKind::Aipw {
                            estimate_aipw_with(data, e, nu, config.ci_level)
                        } else {
                            estimate_tmle_with(data, e, nu, config.ci_level)
                        }
                    });
                    out.push(report.map(|mut r| {
                        r.warnings.extend(positivity.iter().cloned());
                        r
                    }));
                }
            }
        }
    }
    out
}

/// Single estimator, single estimand.
pub fn estimate(
    data: &ObservationSet,
    estimator: EstimatorKind,
    estimand: &EstimandSpec,
    config: &EstimationConfig,
) -> Result<EstimateReport> {
    estimate_many(data, &[estimator], std::slice::from_ref(estimand), config)
        .pop()
        .expect("one pair in, one result out")
}

// `Error` holds io/csv sources that are not `Clone`; nuisance failures never carry them.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::Validation(s) => Error::Validation(s.clone()),
        Error::Parse {
            row,
            column,
            message,
        } => Error::Parse {
            row: *row,
            column: column.clone(),
            message: message.clone(),
        },
        Error::MissingColumn(s) => Error::MissingColumn(s.clone()),
        Error::SingularDesign { columns } => Error::SingularDesign {
            columns: columns.clone(),
        },
        Error::DegenerateArm(a) => Error::DegenerateArm(*a),
        Error::Separation { magnitude } => Error::Separation {
            magnitude: *magnitude,
        },
        Error::NonConvergence {
            what,
            iterations,
            trace,
        } => Error::NonConvergence {
            what,
            iterations: *iterations,
            trace: trace.clone(),
        },
        Error::Quadrature { lo, hi, message } => Error::Quadrature {
            lo: *lo,
            hi: *hi,
            message: message.clone(),
        },
        Error::Singular(s) => Error::Singular(s.clone()),
        Error::Io(e) => Error::Validation(e.to_string()),
        Error::Csv(e) => Error::Validation(e.to_string()),
    }
}
