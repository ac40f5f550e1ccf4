use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{BinarizationRule, Direction, ObservationSet};
use crate::error::{Error, Result};
use crate::estimators::bootstrap::replicate_rng;

/// `μ(a, w) = Σ_k poly[k]·a^k + sin_coef·sin(a) + w_coef·w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSurface {
    pub poly: Vec<f64>,
    pub sin_coef: f64,
    pub w_coef: f64,
}

impl OutcomeSurface {
    /// `a³ + sin(a) + 100·w`.
    pub fn cubic_sine() -> Self {
        Self {
            poly: vec![0.0, 0.0, 0.0, 1.0],
            sin_coef: 1.0,
            w_coef: 100.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            poly: vec![c],
            sin_coef: 0.0,
            w_coef: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, a: f64, w: f64) -> f64 {
        let poly = self.poly.iter().rev().fold(0.0, |acc, &c| acc * a + c);
        poly + self.sin_coef * a.sin() + self.w_coef * w
    }
}

/// Binary covariate, normal treatment whose mean depends on it, and outcome
/// `μ(A, W) + N(0, noise_sd²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub w_prob: f64,
    pub a_mean_base: f64,
    pub a_mean_slope: f64,
    pub a_sd: f64,
    pub outcome: OutcomeSurface,
    pub noise_sd: f64,
    pub cutoff: f64,
    pub direction: Direction,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            w_prob: 0.5,
            a_mean_base: 5.0,
            a_mean_slope: 2.0,
            a_sd: 1.0,
            outcome: OutcomeSurface::cubic_sine(),
            noise_sd: 1.0,
            cutoff: 6.0,
            direction: Direction::Geq,
        }
    }
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_sd > 0.0 && self.a_sd.is_finite()) {
            return Err(Error::Validation(format!(
                "a_sd must be positive, got {}",
                self.a_sd
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Validation(format!(
                "noise_sd must be non-negative, got {}",
                self.noise_sd
            )));
        }
        if !(self.w_prob > 0.0 && self.w_prob < 1.0) {
            return Err(Error::Validation(format!(
                "w_prob must lie in (0, 1), got {}",
                self.w_prob
            )));
        }
        if !(self.cutoff.is_finite()
            && self.a_mean_base.is_finite()
            && self.a_mean_slope.is_finite())
        {
            return Err(Error::Validation("DGP parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn rule(&self) -> BinarizationRule {
        BinarizationRule {
            cutoff: self.cutoff,
            direction: self.direction,
        }
    }

    /// Mean of `A | W = w`.
    pub fn a_mean(&self, w: u8) -> f64 {
        self.a_mean_base + self.a_mean_slope * f64::from(w)
    }

    pub fn w_mass(&self, w: u8) -> f64 {
        if w == 1 {
            self.w_prob
        } else {
            1.0 - self.w_prob
        }
    }
}

pub(crate) fn sample_with_rng<R: Rng>(
    spec: &DgpSpec,
    n: usize,
    rng: &mut R,
) -> Result<ObservationSet> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Validation("sample size must be at least 1".into()));
    }
    let bern = Bernoulli::new(spec.w_prob).map_err(|e| Error::Validation(e.to_string()))?;
    let std_normal = Normal::new(0.0, 1.0).expect("valid");
    let mut w = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let wi = u8::from(bern.sample(rng));
        let ai = spec.a_mean(wi) + spec.a_sd * std_normal.sample(rng);
        let noise = spec.noise_sd * std_normal.sample(rng);
        y.push(spec.outcome.eval(ai, f64::from(wi)) + noise);
        a.push(ai);
        w.push(f64::from(wi));
    }
    ObservationSet::from_continuous(DMatrix::from_vec(n, 1, w), a, y, spec.rule())?
        .with_covariate_names(vec!["w".into()])
}

/// `n` i.i.d. draws; identical `(spec, n, seed)` give identical data.
pub fn sample_dgp(spec: &DgpSpec, n: usize, seed: u64) -> Result<ObservationSet> {
    sample_with_rng(spec, n, &mut replicate_rng(seed, 0))
}
