//! Estimation of the binarized average treatment effect (BATE) and the policy
//! effect of binarization (PEB) from observational data.
//!
//! A continuous treatment `A` is dichotomized into `T = 1{A in region}`. The
//! BATE contrasts the mean outcome under two cutoff policies that confine
//! treatment to each side of the cutoff while keeping relative treatment
//! preferences within that side. PEB contrasts one such policy with the status
//! quo. Both are estimable from `(W, T, Y)` alone.
//!
//! Four estimators are provided (regression, IPW, AIPW, TMLE), together with a
//! simulation subsystem that computes exact parameter values for a reference
//! data-generating process and runs Monte Carlo studies.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod nuisance;
pub mod report;
pub mod simulation;

pub use data::{
    binarize, load_csv, read_csv, read_header, save_csv, write_csv, BinarizationRule, CsvSchema,
    Direction, ObservationSet, TreatmentColumn,
};
pub use diagnostics::{positivity_diagnostic, PositivityWarning};
pub use error::{Error, Result};
pub use estimators::{
    estimate, estimate_aipw, estimate_ipw, estimate_many, estimate_reg, estimate_tmle,
    BootstrapConfig, CiMethod, EstimationConfig,
};
pub use nuisance::{
    fit_logistic, fit_ols_interacted, predict_outcome, Nuisance, OutcomeModel, PropensityModel,
    RegressionFit,
};
pub use report::{z_critical, EstimandKind, EstimandSpec, EstimateReport, EstimatorKind};
