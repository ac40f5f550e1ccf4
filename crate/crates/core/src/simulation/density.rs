//! Treatment densities under the status quo and under the two cutoff policies.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Normal};

use crate::error::{Error, Result};
use crate::simulation::dgp::DgpSpec;
use crate::simulation::truth::true_propensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyArm {
    StatusQuo,
    /// Treatment restricted to the `t = 1` region.
    Tilde1,
    /// Treatment restricted to the `t = 0` region.
    Tilde0,
}

impl fmt::Display for PolicyArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyArm::StatusQuo => "status_quo",
            PolicyArm::Tilde1 => "tilde1",
            PolicyArm::Tilde0 => "tilde0",
        })
    }
}

impl std::str::FromStr for PolicyArm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "status_quo" | "status-quo" | "sq" => Ok(PolicyArm::StatusQuo),
            "tilde1" => Ok(PolicyArm::Tilde1),
            "tilde0" => Ok(PolicyArm::Tilde0),
            other => Err(Error::Validation(format!(
                "unknown arm `{other}` (expected status_quo, tilde1 or tilde0)"
            ))),
        }
    }
}

/// Density of `A | W = w` under `arm`, at each grid point.
///
/// Policy densities are the status-quo density zeroed outside the arm's region
/// and divided by the region's probability.
pub fn density_curve(
    spec: &DgpSpec,
    arm: PolicyArm,
    w: u8,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    if w > 1 {
        return Err(Error::Validation(format!("w must be 0 or 1, got {w}")));
    }
    if let Some(bad) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("grid point {bad} is not finite")));
    }
    let dist =
        Normal::new(spec.a_mean(w), spec.a_sd).map_err(|e| Error::Validation(e.to_string()))?;
    let rule = spec.rule();
    let pi1 = true_propensity(spec, w);
    Ok(grid
        .iter()
        .map(|&a| {
            let base = dist.pdf(a);
            let d = match arm {
                PolicyArm::StatusQuo => base,
                PolicyArm::Tilde1 if rule.contains(a) => base / pi1,
                PolicyArm::Tilde0 if !rule.contains(a) => base / (1.0 - pi1),
                _ => 0.0,
            };
            (a, d)
        })
        .collect())
}

/// Parse `start:stop:step` into an inclusive, increasing grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Validation(format!("grid `{s}` must look like start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    // index-based so accumulated rounding cannot add or drop the last point
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // snap to 12 decimals so `0.1 * 61` prints as 6.1
    Ok((0..count)
        .map(|i| {
            let v = start + i as f64 * step;
            format!("{v:.12}").parse().unwrap_or(v)
        })
        .collect())
}
