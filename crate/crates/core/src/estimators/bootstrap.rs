//! Nonparametric row bootstrap.
//!
//! Replicate `b` draws its indices from a ChaCha stream keyed by `(seed, b)`, so
//! results do not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::report::z_critical;

/// Resamples that fail to fit are redrawn; give up after this many attempts for one replicate.
const MAX_REDRAWS_PER_REPLICATE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    #[default]
    Normal,
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub ci_method: CiMethod,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            seed: 20240917,
            ci_method: CiMethod::Normal,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Validation(format!(
                "bootstrap needs at least 2 replicates, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

/// Replicate estimates, one row per replicate, one column per statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub draws: Vec<Vec<f64>>,
    /// Resamples discarded because the statistic could not be computed on them.
    pub redraws: usize,
}

impl BootstrapDraws {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    pub fn se(&self, k: usize) -> f64 {
        sample_sd(&self.column(k))
    }

    /// Warning text when more than 1% of resamples had to be redrawn.
    pub fn redraw_warning(&self) -> Option<String> {
        let b = self.draws.len();
        (self.redraws * 100 > b).then(|| {
            format!(
                "{} of {} bootstrap resamples were degenerate and redrawn",
                self.redraws,
                b + self.redraws
            )
        })
    }
}

pub(crate) fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run `stat` on `boot.replicates` resamples of `data`.
///
/// A resample on which `stat` fails with a non-validation error (degenerate
/// arm, separation, singular design) is replaced by a fresh draw and counted.
pub fn bootstrap_draws<F>(
    data: &ObservationSet,
    boot: &BootstrapConfig,
    stat: F,
) -> Result<BootstrapDraws>
where
    F: Fn(&ObservationSet) -> Result<Vec<f64>> + Sync,
{
    boot.validate()?;
    let n = data.n();
    if n == 0 {
        return Err(Error::Validation("cannot bootstrap an empty sample".into()));
    }
    let results: Vec<Result<(Vec<f64>, usize)>> = (0..boot.replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(boot.seed, b);
            let mut idx = vec![0usize; n];
            let mut redraws = 0;
            loop {
                for v in idx.iter_mut() {
                    *v = rng.random_range(0..n);
                }
                match stat(&data.select_rows(&idx)) {
                    Ok(v) => return Ok((v, redraws)),
                    Err(e) if e.is_validation() => return Err(e),
                    Err(e) => {
                        redraws += 1;
                        if redraws >= MAX_REDRAWS_PER_REPLICATE {
                            return Err(Error::NonConvergence {
                                what: "bootstrap resampling",
                                iterations: redraws,
                                trace: format!(
                                    "replicate {b}: every resample failed, last error: {e}"
                                ),
                            });
                        }
                    }
                }
            }
        })
        .collect();
    let mut draws = Vec::with_capacity(boot.replicates);
    let mut redraws = 0;
    for r in results {
        let (v, k) = r?;
        draws.push(v);
        redraws += k;
    }
    Ok(BootstrapDraws { draws, redraws })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub point: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub redraws: usize,
}

/// Bootstrap standard error and interval for a scalar statistic.
pub fn bootstrap_se<F>(
    data: &ObservationSet,
    stat: F,
    boot: &BootstrapConfig,
    ci_level: f64,
) -> Result<BootstrapSummary>
where
    F: Fn(&ObservationSet) -> Result<f64> + Sync,
{
    let point = stat(data)?;
    let draws = bootstrap_draws(data, boot, |d| stat(d).map(|v| vec![v]))?;
    let column = draws.column(0);
    let se = sample_sd(&column);
    let ci = interval(point, se, &column, boot.ci_method, ci_level)?;
    Ok(BootstrapSummary {
        point,
        se,
        ci,
        redraws: draws.redraws,
    })
}

pub(crate) fn interval(
    point: f64,
    se: f64,
    draws: &[f64],
    method: CiMethod,
    ci_level: f64,
) -> Result<(f64, f64)> {
    match method {
        CiMethod::Normal => {
            let z = z_critical(ci_level)?;
            Ok((point - z * se, point + z * se))
        }
        CiMethod::Percentile => {
            z_critical(ci_level)?;
            let alpha = 1.0 - ci_level;
            let mut sorted = draws.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok((
                quantile(&sorted, alpha / 2.0),
                quantile(&sorted, 1.0 - alpha / 2.0),
            ))
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard deviation with `n - 1` denominator.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}
