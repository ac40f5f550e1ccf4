use nalgebra::DMatrix;
use peb_core::nuisance::{expit, fit_logistic, fit_ols_interacted, OutcomeModel};
use peb_core::simulation::{sample_dgp, DgpSpec};
use peb_core::ObservationSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(n: usize, p: usize, seed: u64) -> ObservationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(n, p);
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut lin = 0.0;
        for j in 0..p {
            let v: f64 = rng.random_range(-2.0..2.0);
            w[(i, j)] = v;
            lin += 0.4 * v * if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        let ti = u8::from(rng.random::<f64>() < expit(lin));
        let noise: f64 = rng.random_range(-1.0..1.0);
        let wsum: f64 = (0..p).map(|j| w[(i, j)] * (j + 1) as f64).sum();
        y.push(1.0 + 2.0 * f64::from(ti) + wsum + f64::from(ti) * 0.5 * w[(i, 0)] + noise);
        t.push(ti);
    }
    ObservationSet::from_binary(w, t, y).unwrap()
}

/// Gauss–Jordan with partial pivoting on the normal equations.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut m = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in x.iter().zip(y) {
        for a in 0..k {
            for b in 0..k {
                m[a][b] += row[a] * row[b];
            }
            m[a][k] += row[a] * yi;
        }
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..k).map(|i| m[i][k] / m[i][i]).collect()
}

#[test]
fn ols_matches_normal_equations() {
    for (p, seed) in [(1, 1), (3, 2), (5, 3)] {
        let data = synthetic(300, p, seed);
        let fit = fit_ols_interacted(&data).unwrap();
        let means: Vec<f64> = (0..p)
            .map(|j| (0..data.n()).map(|i| data.w()[(i, j)]).sum::<f64>() / data.n() as f64)
            .collect();
        let rows: Vec<Vec<f64>> = (0..data.n())
            .map(|i| {
                let t = f64::from(data.t()[i]);
                let wc: Vec<f64> = (0..p).map(|j| data.w()[(i, j)] - means[j]).collect();
                let mut r = vec![1.0, t];
                r.extend(&wc);
                r.extend(wc.iter().map(|v| t * v));
                r
            })
            .collect();
        let beta = normal_equations(&rows, data.y());
        let got = fit.coefficients();
        assert_eq!(got.len(), beta.len());
        for (g, b) in got.iter().zip(&beta) {
            assert!((g - b).abs() < 1e-8, "p={p}: {g} vs {b}");
        }
    }
}

#[test]
fn ols_reports_collinear_columns() {
    let base = synthetic(100, 1, 7);
    let mut w = DMatrix::zeros(100, 2);
    for i in 0..100 {
        w[(i, 0)] = base.w()[(i, 0)];
        w[(i, 1)] = 3.0 * base.w()[(i, 0)];
    }
    let data = ObservationSet::from_binary(w, base.t().to_vec(), base.y().to_vec()).unwrap();
    let err = fit_ols_interacted(&data).unwrap_err().to_string();
    assert!(err.contains("w1") && err.contains("w2"), "{err}");
}

fn log_lik(data: &ObservationSet, b0: f64, b1: f64) -> f64 {
    (0..data.n())
        .map(|i| {
            let eta = b0 + b1 * data.w()[(i, 0)];
            let p = expit(eta);
            if data.t()[i] == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

#[test]
fn logistic_matches_grid_search() {
    let data = synthetic(400, 1, 11);
    let model = fit_logistic(&data).unwrap();
    let (lo, hi, steps) = (-2.0, 2.0, 200);
    let h = (hi - lo) / steps as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for a in 0..=steps {
        for b in 0..=steps {
            let (b0, b1) = (lo + a as f64 * h, lo + b as f64 * h);
            let ll = log_lik(&data, b0, b1);
            if ll > best.0 {
                best = (ll, b0, b1);
            }
        }
    }
    assert!(
        (model.intercept - best.1).abs() <= h,
        "{} vs {}",
        model.intercept,
        best.1
    );
    assert!(
        (model.coef[0] - best.2).abs() <= h,
        "{} vs {}",
        model.coef[0],
        best.2
    );
    assert!(log_lik(&data, model.intercept, model.coef[0]) >= best.0 - 1e-9);
}

#[test]
fn logistic_solves_score_equations() {
    let data = synthetic(500, 4, 5);
    let model = fit_logistic(&data).unwrap();
    let g = model.predict_all(&data);
    let mut score = vec![0.0; 1 + data.p()];
    for i in 0..data.n() {
        let r = f64::from(data.t()[i]) - g[i];
        score[0] += r;
        for j in 0..data.p() {
            score[j + 1] += r * data.w()[(i, j)];
        }
    }
    for s in score {
        assert!(s.abs() < 1e-8, "score component {s}");
    }
}

#[test]
fn logistic_flags_separation() {
    let n = 50;
    let w = DMatrix::from_fn(n, 1, |i, _| i as f64 - 25.0);
    let t: Vec<u8> = (0..n).map(|i| u8::from(i >= 25)).collect();
    let data = ObservationSet::from_binary(w, t, vec![0.0; n]).unwrap();
    let err = fit_logistic(&data).unwrap_err();
    assert!(
        err.to_string().to_lowercase().contains("separation"),
        "{err}"
    );
}

#[test]
fn dgp_propensities_match_normal_cdf() {
    // 1 - Φ(1) and 1 - Φ(-1)
    let (p0, p1) = (0.158_655_253_931_457, 0.841_344_746_068_543);
    let data = sample_dgp(&DgpSpec::default(), 200_000, 99).unwrap();
    let model = fit_logistic(&data).unwrap();
    assert!((model.predict(&[0.0]) - p0).abs() < 0.005);
    assert!((model.predict(&[1.0]) - p1).abs() < 0.005);
}

#[test]
fn outcome_model_with_subset_ignores_other_columns() {
    let data = synthetic(200, 3, 21);
    let model = OutcomeModel::fit_with_columns(&data, &[1]).unwrap();
    let a = model.predict(1, &[0.3, 0.7, -1.0]);
    let b = model.predict(1, &[9.0, 0.7, 5.0]);
    assert_eq!(a, b);
}
