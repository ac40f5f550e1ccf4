//! Interacted least squares on the binarized treatment:
//! `y ~ 1 + t + w̌ + t·w̌` with `w̌ = w - mean(w)`.

use nalgebra::{DMatrix, DVector};

use crate::data::ObservationSet;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest mark the design as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub beta0: f64,
    pub beta_t: f64,
    pub beta_w: Vec<f64>,
    pub beta_interact: Vec<f64>,
    /// Demeaning center, frozen at the training-sample mean.
    pub w_mean: Vec<f64>,
    /// Sample mean of `t`.
    pub t_bar: f64,
    /// Sample mean of `t·w̌`.
    pub tw_bar: Vec<f64>,
    pub residuals: Vec<f64>,
    pub design_dim: usize,
}

impl RegressionFit {
    pub fn p(&self) -> usize {
        self.w_mean.len()
    }

    /// `m̂(t, w)` for a raw (not demeaned) covariate row.
    pub fn predict(&self, t: u8, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.p());
        let tf = f64::from(t);
        let mut m = self.beta0 + tf * self.beta_t;
        for (j, &wj) in w.iter().enumerate() {
            let wc = wj - self.w_mean[j];
            m += wc * (self.beta_w[j] + tf * self.beta_interact[j]);
        }
        m
    }

    /// Coefficients in design-column order `(β0, βT, βW, βint)`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.design_dim);
        c.push(self.beta0);
        c.push(self.beta_t);
        c.extend_from_slice(&self.beta_w);
        c.extend_from_slice(&self.beta_interact);
        c
    }
}

/// Names of the design columns, used in rank-deficiency errors.
pub fn design_column_names(covariates: &[String]) -> Vec<String> {
    let mut names = vec!["intercept".to_string(), "t".to_string()];
    names.extend(covariates.iter().cloned());
    names.extend(covariates.iter().map(|c| format!("t:{c}")));
    names
}

pub(crate) fn column_means(data: &ObservationSet) -> Vec<f64> {
    let n = data.n() as f64;
    (0..data.p())
        .map(|j| data.w().column(j).sum() / n)
        .collect()
}

/// Design matrix `[1, t, w̌, t·w̌]` around the given center.
pub(crate) fn design_matrix(data: &ObservationSet, w_mean: &[f64]) -> DMatrix<f64> {
    let (n, p) = (data.n(), data.p());
    let t = data.t();
    let w = data.w();
    DMatrix::from_fn(n, 2 + 2 * p, |i, c| {
        let tf = f64::from(t[i]);
        match c {
            0 => 1.0,
            1 => tf,
            c if c < 2 + p => w[(i, c - 2)] - w_mean[c - 2],
            c => tf * (w[(i, c - 2 - p)] - w_mean[c - 2 - p]),
        }
    })
}

pub fn fit_ols_interacted(data: &ObservationSet) -> Result<RegressionFit> {
    let (n, p) = (data.n(), data.p());
    let k = 2 + 2 * p;
    data.require_both_arms()?;
    if n <= k {
        return Err(Error::Validation(format!(
            "interacted regression needs n > {k} rows, got {n}"
        )));
    }

    let w_mean = column_means(data);
    let x = design_matrix(data, &w_mean);
    let y = DVector::from_column_slice(data.y());

    let qr = x.clone().qr();
    let r = qr.r();
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty_k = qty.rows(0, k).into_owned();

    let svd = r.svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = RANK_TOLERANCE * smax;
    if smax == 0.0 || svd.singular_values.iter().any(|&s| s < cutoff) {
        let v_t = svd.v_t.as_ref().expect("requested V");
        let names = design_column_names(data.covariate_names());
        let mut flagged = vec![false; k];
        for (idx, &s) in svd.singular_values.iter().enumerate() {
            if s < cutoff || smax == 0.0 {
                let row = v_t.row(idx);
                let scale = row.amax();
                for c in 0..k {
                    if row[c].abs() > 1e-6 * scale {
                        flagged[c] = true;
                    }
                }
            }
        }
        let columns = names
            .into_iter()
            .zip(flagged)
            .filter_map(|(name, f)| f.then_some(name))
            .collect();
        return Err(Error::SingularDesign { columns });
    }
    let beta = svd
        .solve(&qty_k, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))?;

    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let t_bar = data.n_treated() as f64 / n as f64;
    let tw_bar = (0..p)
        .map(|j| {
            (0..n)
                .map(|i| f64::from(data.t()[i]) * (data.w()[(i, j)] - w_mean[j]))
                .sum::<f64>()
                / n as f64
        })
        .collect();

    Ok(RegressionFit {
        beta0: beta[0],
        beta_t: beta[1],
        beta_w: beta.rows(2, p).iter().copied().collect(),
        beta_interact: beta.rows(2 + p, p).iter().copied().collect(),
        w_mean,
        t_bar,
        tw_bar,
        residuals,
        design_dim: k,
    })
}
