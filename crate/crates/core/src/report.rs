use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimandKind {
    /// Binarized average treatment effect, `E[m(1,W)] - E[m(0,W)]`.
    Bate,
    /// Policy effect of binarization, `E[m(arm,W)] - E[Y]`.
    Peb,
}

/// Target parameter. `arm` is meaningful only for [`EstimandKind::Peb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EstimandSpec {
    #[serde(rename = "estimand")]
    pub kind: EstimandKind,
    pub arm: Option<u8>,
}

impl EstimandSpec {
    pub const BATE: EstimandSpec = EstimandSpec {
        kind: EstimandKind::Bate,
        arm: None,
    };

    pub fn bate() -> Self {
        Self::BATE
    }

    pub fn peb(arm: u8) -> Result<Self> {
        if arm > 1 {
            return Err(Error::Validation(format!(
                "PEB arm must be 0 or 1, got {arm}"
            )));
        }
        Ok(Self {
            kind: EstimandKind::Peb,
            arm: Some(arm),
        })
    }

    /// The PEB arm; `None` for BATE.
    pub fn peb_arm(&self) -> Option<u8> {
        match self.kind {
            EstimandKind::Bate => None,
            EstimandKind::Peb => Some(self.arm.unwrap_or(1)),
        }
    }

    pub fn label(&self) -> String {
        match self.peb_arm() {
            None => "BATE".into(),
            Some(a) => format!("PEB({a})"),
        }
    }
}

impl fmt::Display for EstimandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Reg,
    Ipw,
    Aipw,
    Tmle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Reg,
        EstimatorKind::Ipw,
        EstimatorKind::Aipw,
        EstimatorKind::Tmle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Reg => "reg",
            EstimatorKind::Ipw => "ipw",
            EstimatorKind::Aipw => "aipw",
            EstimatorKind::Tmle => "tmle",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reg" | "regression" => Ok(EstimatorKind::Reg),
            "ipw" => Ok(EstimatorKind::Ipw),
            "aipw" | "a-ipw" => Ok(EstimatorKind::Aipw),
            "tmle" => Ok(EstimatorKind::Tmle),
            other => Err(Error::Validation(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Two-sided standard normal critical value for a confidence level.
pub fn z_critical(ci_level: f64) -> Result<f64> {
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::Validation(format!(
            "confidence level must lie in (0, 1), got {ci_level}"
        )));
    }
    let std = Normal::standard();
    Ok(std.inverse_cdf(0.5 + ci_level / 2.0))
}

/// Point estimate, standard error and interval for one estimand/estimator pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub estimand: EstimandSpec,
    pub estimator: EstimatorKind,
    pub point: f64,
    pub se: f64,
    pub ci_level: f64,
    pub ci: (f64, f64),
    pub n: usize,
    pub warnings: Vec<String>,
    pub seed: Option<u64>,
}

impl EstimateReport {
    /// Report with a normal-based interval `point ± z(ci_level)·se`.
    pub fn normal(
        estimand: EstimandSpec,
        estimator: EstimatorKind,
        point: f64,
        se: f64,
        ci_level: f64,
        n: usize,
    ) -> Result<Self> {
        let z = z_critical(ci_level)?;
        Ok(Self {
            estimand,
            estimator,
            point,
            se,
            ci_level,
            ci: (point - z * se, point + z * se),
            n,
            warnings: Vec::new(),
            seed: None,
        })
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci.0 <= value && value <= self.ci.1
    }
}
