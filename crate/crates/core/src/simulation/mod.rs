//! Simulation study: a binary-covariate / normal-treatment data-generating
//! process, its exact parameter values, policy densities, and a Monte Carlo driver.

pub mod density;
pub mod dgp;
pub mod monte_carlo;
pub mod quadrature;
pub mod truth;

pub use density::{density_curve, parse_grid, PolicyArm};
pub use dgp::{sample_dgp, DgpSpec, OutcomeSurface};
pub use monte_carlo::{
    run_monte_carlo, run_replicate, sig6, tables_csv, tables_text, McConfig, McResult, McRow,
};
pub use quadrature::{integrate, Integral, QuadratureOptions};
pub use truth::{true_propensity, truth_oracle, truth_oracle_with, TruthReport};
