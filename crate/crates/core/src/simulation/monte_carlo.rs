//! Repeated sampling from a [`DgpSpec`] to measure estimator bias, standard-error
//! calibration and interval coverage.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::bootstrap::{mean, replicate_rng, sample_sd};
use crate::estimators::{estimate_many, BootstrapConfig, CiMethod, EstimationConfig};
use crate::report::{EstimandSpec, EstimateReport, EstimatorKind};
use crate::simulation::dgp::{sample_with_rng, DgpSpec};
use crate::simulation::truth::{truth_oracle, TruthReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub estimators: Vec<EstimatorKind>,
    pub estimands: Vec<EstimandSpec>,
    /// Bootstrap resamples per replicate for IPW standard errors.
    pub bootstrap_replicates: usize,
    pub seed: u64,
    pub ci_level: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_list: vec![150, 300, 500],
            replicates: 2000,
            estimators: vec![EstimatorKind::Reg, EstimatorKind::Ipw],
            estimands: vec![EstimandSpec::BATE, EstimandSpec::peb(1).expect("valid arm")],
            bootstrap_replicates: 200,
            seed: 2024,
            ci_level: 0.95,
        }
    }
}

/// Summary of one estimator/estimand pair over the successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub estimator: EstimatorKind,
    pub estimand: EstimandSpec,
    pub truth: f64,
    pub successes: usize,
    pub failures: usize,
    pub mean_estimate: f64,
    pub bias: f64,
    /// Mean of the per-replicate estimated standard errors.
    pub mean_se: f64,
    /// Standard deviation of the estimates across replicates.
    pub sim_se: f64,
    /// Share of replicates whose interval contains the truth.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub truth: TruthReport,
    pub rows: Vec<McRow>,
}

impl McResult {
    pub fn row(&self, estimator: EstimatorKind, estimand: &EstimandSpec) -> Option<&McRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.estimand == *estimand)
    }
}

/// Replicate `r` at sample size `n` uses ChaCha stream `(n << 32) | r` of `seed`.
fn replicate_stream(n: usize, r: usize) -> u64 {
    ((n as u64) << 32) | r as u64
}

/// Estimates from a single simulated sample, estimator-major.
pub fn run_replicate(
    spec: &DgpSpec,
    config: &McConfig,
    n: usize,
    r: usize,
) -> Vec<Result<EstimateReport>> {
    let mut rng = replicate_rng(config.seed, replicate_stream(n, r));
    let data = match sample_with_rng(spec, n, &mut rng) {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            return (0..config.estimators.len() * config.estimands.len())
                .map(|_| Err(Error::Validation(msg.clone())))
                .collect();
        }
    };
    let est_config = EstimationConfig {
        ci_level: config.ci_level,
        bootstrap: BootstrapConfig {
            replicates: config.bootstrap_replicates,
            seed: rng.next_u64(),
            ci_method: CiMethod::Normal,
        },
        positivity_eps: 0.0,
    };
    estimate_many(&data, &config.estimators, &config.estimands, &est_config)
}

pub fn run_monte_carlo(spec: &DgpSpec, config: &McConfig) -> Result<Vec<McResult>> {
    spec.validate()?;
    if config.replicates < 2 {
        return Err(Error::Validation(format!(
            "Monte Carlo needs at least 2 replicates, got {}",
            config.replicates
        )));
    }
    if config.n_list.is_empty() || config.n_list.contains(&0) {
        return Err(Error::Validation("sample sizes must be positive".into()));
    }
    if config.estimators.contains(&EstimatorKind::Ipw) && config.bootstrap_replicates < 2 {
        return Err(Error::Validation(
            "IPW needs at least 2 bootstrap replicates".into(),
        ));
    }
    crate::report::z_critical(config.ci_level)?;
    let truth = truth_oracle(spec)?;

    config
        .n_list
        .iter()
        .map(|&n| {
            let per_rep: Vec<Vec<Result<EstimateReport>>> = (0..config.replicates)
                .into_par_iter()
                .map(|r| run_replicate(spec, config, n, r))
                .collect();
            let mut rows = Vec::new();
            let mut k = 0;
            for &estimator in &config.estimators {
                for estimand in &config.estimands {
                    let reports: Vec<&EstimateReport> = per_rep
                        .iter()
                        .filter_map(|rep| rep[k].as_ref().ok())
                        .collect();
                    rows.push(summarize(
                        estimator,
                        estimand,
                        truth.value(estimand),
                        &reports,
                        config.replicates,
                    ));
                    k += 1;
                }
            }
            Ok(McResult {
                n,
                replicates: config.replicates,
                seed: config.seed,
                truth,
                rows,
            })
        })
        .collect()
}

fn summarize(
    estimator: EstimatorKind,
    estimand: &EstimandSpec,
    truth: f64,
    reports: &[&EstimateReport],
    replicates: usize,
) -> McRow {
    let points: Vec<f64> = reports.iter().map(|r| r.point).collect();
    let ses: Vec<f64> = reports.iter().map(|r| r.se).collect();
    let mean_estimate = mean(&points);
    let covered = reports.iter().filter(|r| r.covers(truth)).count();
    McRow {
        estimator,
        estimand: *estimand,
        truth,
        successes: reports.len(),
        failures: replicates - reports.len(),
        mean_estimate,
        bias: mean_estimate - truth,
        mean_se: mean(&ses),
        sim_se: sample_sd(&points),
        coverage: covered as f64 / reports.len() as f64,
    }
}

/// One CSV line per (estimand, n): `n`, then Estimate, Bias, Est SE, Sim SE per estimator.
pub fn tables_csv(results: &[McResult]) -> String {
    let Some(first) = results.first() else {
        return String::new();
    };
    let estimators: Vec<EstimatorKind> = unique(first.rows.iter().map(|r| r.estimator));
    let estimands: Vec<EstimandSpec> = unique(first.rows.iter().map(|r| r.estimand));
    let mut out = String::from("estimand,n");
    for e in &estimators {
        for col in ["estimate", "bias", "est_se", "sim_se"] {
            out.push_str(&format!(",{e}_{col}"));
        }
    }
    out.push('\n');
    for estimand in &estimands {
        for res in results {
            out.push_str(&format!("{},{}", estimand.label(), res.n));
            for e in &estimators {
                match res.row(*e, estimand) {
                    Some(r) => out.push_str(&format!(
                        ",{},{},{},{}",
                        r.mean_estimate, r.bias, r.mean_se, r.sim_se
                    )),
                    None => out.push_str(",,,,"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Fixed-width rendering of [`tables_csv`] with six significant digits.
pub fn tables_text(results: &[McResult]) -> String {
    let Some(first) = results.first() else {
        return String::new();
    };
    let estimators: Vec<EstimatorKind> = unique(first.rows.iter().map(|r| r.estimator));
    let estimands: Vec<EstimandSpec> = unique(first.rows.iter().map(|r| r.estimand));
    let mut out = String::new();
    for estimand in &estimands {
        out.push_str(&format!(
            "{} (truth {})\n",
            estimand.label(),
            sig6(first.truth.value(estimand))
        ));
        out.push_str(&format!("{:>6}", "n"));
        for e in &estimators {
            for col in ["Estimate", "Bias", "Est SE", "Sim SE"] {
                out.push_str(&format!(" {:>12}", format!("{e} {col}")));
            }
        }
        out.push('\n');
        for res in results {
            out.push_str(&format!("{:>6}", res.n));
            for e in &estimators {
                if let Some(r) = res.row(*e, estimand) {
                    for v in [r.mean_estimate, r.bias, r.mean_se, r.sim_se] {
                        out.push_str(&format!(" {:>12}", sig6(v)));
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Six significant digits, no exponent for ordinary magnitudes.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

fn unique<T: PartialEq + Copy>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for v in it {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_run_is_well_formed() {
        let config = McConfig {
            n_list: vec![60],
            replicates: 2,
            bootstrap_replicates: 10,
            estimators: EstimatorKind::ALL.to_vec(),
            ..Default::default()
        };
        let res = run_monte_carlo(&DgpSpec::default(), &config).unwrap();
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].rows.len(), 8);
        for row in &res[0].rows {
            assert_eq!(row.successes, 2);
            assert!(row.sim_se.is_finite() && row.mean_se.is_finite());
            assert!((row.bias - (row.mean_estimate - row.truth)).abs() < 1e-12);
        }
        let csv = tables_csv(&res);
        assert_eq!(csv.lines().count(), 3);
        assert!(
            csv.starts_with("estimand,n,reg_estimate,reg_bias,reg_est_se,reg_sim_se,ipw_estimate")
        );
    }

    #[test]
    fn rejects_single_replicate() {
        let config = McConfig {
            replicates: 1,
            ..Default::default()
        };
        assert!(run_monte_carlo(&DgpSpec::default(), &config).is_err());
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(201.80645), "201.806");
        assert_eq!(sig6(-0.5151234), "-0.515123");
        assert_eq!(sig6(7.0), "7.00000");
    }
}
