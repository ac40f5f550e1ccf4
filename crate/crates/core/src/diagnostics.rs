use std::fmt;

use crate::data::ObservationSet;
use crate::nuisance::PropensityModel;

/// A unit whose estimated propensity is within `eps` of 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityWarning {
    pub unit: usize,
    pub propensity: f64,
    pub eps: f64,
}

impl fmt::Display for PositivityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = if self.propensity < self.eps {
            "below"
        } else {
            "above 1 -"
        };
        write!(
            f,
            "unit {}: estimated propensity {:.3e} is {side} {}",
            self.unit, self.propensity, self.eps
        )
    }
}

/// Flags every unit with `π̂ < eps` or `π̂ > 1 - eps`. Never fails.
pub fn positivity_diagnostic(
    model: &PropensityModel,
    data: &ObservationSet,
    eps: f64,
) -> Vec<PositivityWarning> {
    model
        .predict_all(data)
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p < eps || p > 1.0 - eps)
        .map(|(unit, propensity)| PositivityWarning {
            unit,
            propensity,
            eps,
        })
        .collect()
}

/// Collapse per-unit warnings into at most `limit` report lines.
pub fn summarize_warnings(warnings: &[PositivityWarning], limit: usize) -> Vec<String> {
    let mut out: Vec<String> = warnings.iter().take(limit).map(|w| w.to_string()).collect();
    if warnings.len() > limit {
        out.push(format!(
            "{} more units with extreme propensity (weights left untruncated)",
            warnings.len() - limit
        ));
    }
    out
}
