use crate::data::ObservationSet;
use crate::error::Result;
use crate::estimators::bootstrap::{bootstrap_draws, interval, BootstrapConfig, CiMethod};
use crate::nuisance::{fit_logistic, fit_logistic_from, PropensityModel};
use crate::report::{EstimandSpec, EstimateReport, EstimatorKind};

/// Horvitz-Thompson point estimate given per-unit propensities `π̂(w_i)`.
pub fn ipw_point(data: &ObservationSet, estimand: &EstimandSpec, propensity: &[f64]) -> f64 {
    let n = data.n() as f64;
    let (mut treated, mut control, mut total) = (0.0, 0.0, 0.0);
    for ((&t, &y), &g) in data.t().iter().zip(data.y()).zip(propensity) {
        if t == 1 {
            treated += y / g;
        } else {
            control += y / (1.0 - g);
        }
        total += y;
    }
    match estimand.peb_arm() {
        None => (treated - control) / n,
        Some(1) => (treated - total) / n,
        Some(_) => (control - total) / n,
    }
}

/// Point estimates for several estimands, refitting the propensity model.
/// `start` seeds the IRLS iterations; it does not change the solution.
pub fn ipw_points_refit(
    data: &ObservationSet,
    estimands: &[EstimandSpec],
    start: Option<&PropensityModel>,
) -> Result<Vec<f64>> {
    let model = fit_logistic_from(data, start)?;
    let g = model.predict_all(data);
    Ok(estimands.iter().map(|e| ipw_point(data, e, &g)).collect())
}

/// IPW estimates for several estimands sharing one set of bootstrap resamples.
pub fn estimate_ipw_many(
    data: &ObservationSet,
    estimands: &[EstimandSpec],
    boot: &BootstrapConfig,
    ci_level: f64,
) -> Result<Vec<EstimateReport>> {
    let model = fit_logistic(data)?;
    estimate_ipw_many_with(data, estimands, &model, boot, ci_level)
}

pub(crate) fn estimate_ipw_many_with(
    data: &ObservationSet,
    estimands: &[EstimandSpec],
    model: &PropensityModel,
    boot: &BootstrapConfig,
    ci_level: f64,
) -> Result<Vec<EstimateReport>> {
    let g = model.predict_all(data);
    let draws = bootstrap_draws(data, boot, |d| ipw_points_refit(d, estimands, Some(model)))?;
    estimands
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let point = ipw_point(data, e, &g);
            let se = draws.se(k);
            let mut report =
                EstimateReport::normal(*e, EstimatorKind::Ipw, point, se, ci_level, data.n())?;
            if boot.ci_method == CiMethod::Percentile {
                report.ci = interval(point, se, &draws.column(k), CiMethod::Percentile, ci_level)?;
                report
                    .warnings
                    .push("interval is a bootstrap percentile interval".into());
            }
            report.warnings.extend(draws.redraw_warning());
            report.seed = Some(boot.seed);
            Ok(report)
        })
        .collect()
}

/// IPW estimate with a bootstrap standard error; the propensity model is refit in every resample.
pub fn estimate_ipw(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    boot: &BootstrapConfig,
    ci_level: f64,
) -> Result<EstimateReport> {
    Ok(
        estimate_ipw_many(data, std::slice::from_ref(estimand), boot, ci_level)?
            .pop()
            .expect("one estimand in, one report out"),
    )
}
