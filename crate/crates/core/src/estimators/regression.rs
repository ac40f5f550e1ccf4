//! Regression (plug-in) estimator with M-estimation sandwich variance.
//!
//! The stacked parameter is ordered
//! `θ = (t̄, mean(t·w̌), β0, βT, βW, βint)`, of length `3 + 3p`, with per-unit
//! estimating function
//!
//! ```text
//! ψ_i = ( t_i - t̄ ;  t_i w̌_i - mean(t·w̌) ;  x_i r_i ),   x_i = (1, t_i, w̌_i, t_i w̌_i)
//! ```
//!
//! The bread `A_n` is block diagonal (identity for the two means, `X'X / n` for
//! the regression block) and the meat is `B_n = Σ ψ_i ψ_i' / n`.

use nalgebra::{DMatrix, DVector};

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::nuisance::{design_matrix, fit_ols_interacted, RegressionFit};
use crate::report::{EstimandSpec, EstimateReport, EstimatorKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichComponents {
    pub theta_hat: Vec<f64>,
    pub a_n: DMatrix<f64>,
    pub b_n: DMatrix<f64>,
    /// `A_n⁻¹ B_n A_n⁻ᵀ`: asymptotic covariance of `√n (θ̂ - θ)`.
    pub vcov: DMatrix<f64>,
    pub n: usize,
    pub p: usize,
}

impl SandwichComponents {
    /// Position of `βT` in `θ`.
    pub fn beta_t_index(&self) -> usize {
        self.p + 2
    }

    pub fn dim(&self) -> usize {
        3 + 3 * self.p
    }
}

/// Point estimate of BATE or PEB from a fitted interacted regression.
pub fn reg_point(fit: &RegressionFit, estimand: &EstimandSpec) -> f64 {
    let tw_int: f64 = fit
        .tw_bar
        .iter()
        .zip(&fit.beta_interact)
        .map(|(a, b)| a * b)
        .sum();
    match estimand.peb_arm() {
        None => fit.beta_t,
        Some(1) => (1.0 - fit.t_bar) * fit.beta_t - tw_int,
        Some(_) => -fit.t_bar * fit.beta_t - tw_int,
    }
}

pub fn sandwich_variance(fit: &RegressionFit, data: &ObservationSet) -> Result<SandwichComponents> {
    let (n, p) = (data.n(), data.p());
    if fit.p() != p || fit.residuals.len() != n {
        return Err(Error::Validation(
            "regression fit does not belong to this data set".into(),
        ));
    }
    let k = 2 + 2 * p;
    let d = 1 + p + k;
    let nf = n as f64;
    let x = design_matrix(data, &fit.w_mean);

    let mut theta = Vec::with_capacity(d);
    theta.push(fit.t_bar);
    theta.extend_from_slice(&fit.tw_bar);
    theta.extend(fit.coefficients());

    let xtx = x.tr_mul(&x) / nf;
    let mut a_n = DMatrix::<f64>::identity(d, d);
    a_n.view_mut((1 + p, 1 + p), (k, k)).copy_from(&xtx);

    let mut b_n = DMatrix::<f64>::zeros(d, d);
    let mut psi = DVector::<f64>::zeros(d);
    for i in 0..n {
        let ti = f64::from(data.t()[i]);
        psi[0] = ti - fit.t_bar;
        for j in 0..p {
            psi[1 + j] = x[(i, 2 + p + j)] - fit.tw_bar[j];
        }
        let r = fit.residuals[i];
        for c in 0..k {
            psi[1 + p + c] = x[(i, c)] * r;
        }
        b_n.ger(1.0 / nf, &psi, &psi, 1.0);
    }

    let xtx_inv = xtx
        .cholesky()
        .ok_or_else(|| Error::Singular("regression bread X'X/n is singular".into()))?
        .inverse();
    let mut a_inv = DMatrix::<f64>::identity(d, d);
    a_inv.view_mut((1 + p, 1 + p), (k, k)).copy_from(&xtx_inv);
    let vcov = &a_inv * &b_n * a_inv.transpose();
    let vcov = (&vcov + vcov.transpose()) * 0.5;

    Ok(SandwichComponents {
        theta_hat: theta,
        a_n,
        b_n,
        vcov,
        n,
        p,
    })
}

/// Gradient of the estimand with respect to `θ`.
pub fn delta_gradient(components: &SandwichComponents, estimand: &EstimandSpec) -> DVector<f64> {
    let p = components.p;
    let th = &components.theta_hat;
    let t_bar = th[0];
    let tw_bar = &th[1..1 + p];
    let beta_t = th[p + 2];
    let beta_int = &th[3 + 2 * p..3 + 3 * p];
    let mut g = DVector::<f64>::zeros(components.dim());
    match estimand.peb_arm() {
        None => g[p + 2] = 1.0,
        Some(arm) => {
            g[0] = -beta_t;
            for j in 0..p {
                g[1 + j] = -beta_int[j];
                g[3 + 2 * p + j] = -tw_bar[j];
            }
            g[p + 2] = if arm == 1 { 1.0 - t_bar } else { -t_bar };
        }
    }
    g
}

/// `sqrt(g' V g / n)`.
pub fn delta_method_se(components: &SandwichComponents, estimand: &EstimandSpec) -> f64 {
    let g = delta_gradient(components, estimand);
    let var = (g.transpose() * &components.vcov * &g)[(0, 0)] / components.n as f64;
    var.max(0.0).sqrt()
}

pub fn estimate_reg(
    data: &ObservationSet,
    estimand: &EstimandSpec,
    ci_level: f64,
) -> Result<EstimateReport> {
    let fit = fit_ols_interacted(data)?;
    let sw = sandwich_variance(&fit, data)?;
    EstimateReport::normal(
        *estimand,
        EstimatorKind::Reg,
        reg_point(&fit, estimand),
        delta_method_se(&sw, estimand),
        ci_level,
        data.n(),
    )
}
