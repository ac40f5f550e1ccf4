//! Observation data, binarization of a continuous treatment, and CSV ingestion.
//!
//! Every estimator consumes an [`ObservationSet`]: covariates `w` (n x p), an
//! optional continuous treatment `a`, the binary treatment `t`, and the outcome
//! `y`. When `a` is present the set also carries the [`BinarizationRule`] that
//! produced `t`, and construction checks that the two agree row by row.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the cutoff is mapped to `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `t = 1` when `a >= cutoff`.
    Geq,
    /// `t = 1` when `a < cutoff`.
    Lt,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Geq => f.write_str("geq"),
            Direction::Lt => f.write_str("lt"),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geq" | ">=" | "ge" => Ok(Direction::Geq),
            "lt" | "<" => Ok(Direction::Lt),
            other => Err(Error::Validation(format!(
                "unknown direction `{other}` (expected `geq` or `lt`)"
            ))),
        }
    }
}

/// A half-line treatment region: the set of `a` values that are binarized to `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinarizationRule {
    pub cutoff: f64,
    pub direction: Direction,
}

impl BinarizationRule {
    pub fn new(cutoff: f64, direction: Direction) -> Result<Self> {
        if !cutoff.is_finite() {
            return Err(Error::Validation(format!(
                "cutoff must be finite, got {cutoff}"
            )));
        }
        Ok(Self { cutoff, direction })
    }

    pub fn geq(cutoff: f64) -> Self {
        Self {
            cutoff,
            direction: Direction::Geq,
        }
    }

    /// Whether `a` lies in the region mapped to `t = 1`.
    #[inline]
    pub fn contains(&self, a: f64) -> bool {
        match self.direction {
            Direction::Geq => a >= self.cutoff,
            Direction::Lt => a < self.cutoff,
        }
    }

    #[inline]
    pub fn apply(&self, a: f64) -> u8 {
        u8::from(self.contains(a))
    }
}

/// Binarize a vector of continuous treatments.
pub fn binarize(a: &[f64], rule: &BinarizationRule) -> Result<Vec<u8>> {
    a.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.is_finite() {
                Ok(rule.apply(v))
            } else {
                Err(Error::Validation(format!(
                    "treatment value at index {i} is not finite ({v})"
                )))
            }
        })
        .collect()
}

/// An immutable, validated sample of `(w, a?, t, y)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    w: DMatrix<f64>,
    a: Option<Vec<f64>>,
    t: Vec<u8>,
    y: Vec<f64>,
    rule: Option<BinarizationRule>,
    covariate_names: Vec<String>,
}

impl ObservationSet {
    /// Build a set from an already-binary treatment.
    pub fn from_binary(w: DMatrix<f64>, t: Vec<u8>, y: Vec<f64>) -> Result<Self> {
        Self::build(w, None, t, y, None)
    }

    /// Build a set from a continuous treatment, deriving `t` with `rule`.
    pub fn from_continuous(
        w: DMatrix<f64>,
        a: Vec<f64>,
        y: Vec<f64>,
        rule: BinarizationRule,
    ) -> Result<Self> {
        let t = binarize(&a, &rule)?;
        Self::build(w, Some(a), t, y, Some(rule))
    }

    /// Build a set from all parts; checks every invariant, including `t == rule(a)`.
    pub fn new(
        w: DMatrix<f64>,
        a: Option<Vec<f64>>,
        t: Vec<u8>,
        y: Vec<f64>,
        rule: Option<BinarizationRule>,
    ) -> Result<Self> {
        Self::build(w, a, t, y, rule)
    }

    fn build(
        w: DMatrix<f64>,
        a: Option<Vec<f64>>,
        t: Vec<u8>,
        y: Vec<f64>,
        rule: Option<BinarizationRule>,
    ) -> Result<Self> {
        let n = y.len();
        if t.len() != n || w.nrows() != n {
            return Err(Error::Validation(format!(
                "column lengths disagree: y has {n}, t has {}, w has {} rows",
                t.len(),
                w.nrows()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("y[{i}] is not finite")));
        }
        if let Some(i) = t.iter().position(|&v| v > 1) {
            return Err(Error::Validation(format!(
                "t[{i}] = {} is not 0 or 1",
                t[i]
            )));
        }
        for j in 0..w.ncols() {
            if let Some(i) = w.column(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("w[{i}, {j}] is not finite")));
            }
        }
        if let Some(a) = &a {
            if a.len() != n {
                return Err(Error::Validation(format!(
                    "a has {} entries but y has {n}",
                    a.len()
                )));
            }
            if let Some(i) = a.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("a[{i}] is not finite")));
            }
            if let Some(rule) = &rule {
                if let Some(i) = (0..n).find(|&i| rule.apply(a[i]) != t[i]) {
                    return Err(Error::Validation(format!(
                        "t[{i}] = {} disagrees with rule applied to a[{i}] = {}",
                        t[i], a[i]
                    )));
                }
            }
        }
        let covariate_names = (1..=w.ncols()).map(|j| format!("w{j}")).collect();
        Ok(Self {
            w,
            a,
            t,
            y,
            rule,
            covariate_names,
        })
    }

    /// Replace the default `w1..wp` covariate names.
    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Validation(format!(
                "{} covariate names given for {} covariates",
                names.len(),
                self.p()
            )));
        }
        self.covariate_names = names;
        Ok(self)
    }

    /// Attach (or re-attach) a binarization rule, recomputing `t` from `a`.
    pub fn with_rule(self, rule: BinarizationRule) -> Result<Self> {
        let a = self.a.ok_or_else(|| {
            Error::Validation("cannot attach a rule: no continuous treatment column".into())
        })?;
        let names = self.covariate_names;
        Self::from_continuous(self.w, a, self.y, rule)?.with_covariate_names(names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn a(&self) -> Option<&[f64]> {
        self.a.as_deref()
    }

    pub fn t(&self) -> &[u8] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn rule(&self) -> Option<&BinarizationRule> {
        self.rule.as_ref()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn w_row(&self, i: usize) -> Vec<f64> {
        self.w.row(i).iter().copied().collect()
    }

    pub fn n_treated(&self) -> usize {
        self.t.iter().filter(|&&v| v == 1).count()
    }

    /// Errors when every unit sits in the same arm.
    pub fn require_both_arms(&self) -> Result<()> {
        let n1 = self.n_treated();
        if n1 == 0 {
            Err(Error::DegenerateArm(0))
        } else if n1 == self.n() {
            Err(Error::DegenerateArm(1))
        } else {
            Ok(())
        }
    }

    /// Rows `idx` (with repetition allowed) as a new set. Invariants carry over.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let p = self.p();
        let w = DMatrix::from_fn(idx.len(), p, |i, j| self.w[(idx[i], j)]);
        Self {
            w,
            a: self.a.as_ref().map(|a| idx.iter().map(|&i| a[i]).collect()),
            t: idx.iter().map(|&i| self.t[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            rule: self.rule,
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Keep only the covariate columns in `cols`.
    pub fn select_covariates(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.p()) {
            return Err(Error::Validation(format!(
                "covariate index {bad} out of range (p = {})",
                self.p()
            )));
        }
        let w = DMatrix::from_fn(self.n(), cols.len(), |i, j| self.w[(i, cols[j])]);
        Ok(Self {
            w,
            a: self.a.clone(),
            t: self.t.clone(),
            y: self.y.clone(),
            rule: self.rule,
            covariate_names: cols
                .iter()
                .map(|&c| self.covariate_names[c].clone())
                .collect(),
        })
    }
}

/// How the treatment is stored in a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum TreatmentColumn {
    /// Column already holds 0/1 values.
    Binary(String),
    /// Column holds a continuous treatment; `t` is derived with `rule`.
    Continuous {
        column: String,
        rule: BinarizationRule,
    },
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub outcome: String,
    pub treatment: TreatmentColumn,
    /// `None` takes every remaining column, in header order.
    pub covariates: Option<Vec<String>>,
}

impl CsvSchema {
    /// The standard layout: `y`, then `t` (no rule) or `a` (with rule), then covariates.
    pub fn standard(rule: Option<BinarizationRule>) -> Self {
        let treatment = match rule {
            Some(rule) => TreatmentColumn::Continuous {
                column: "a".into(),
                rule,
            },
            None => TreatmentColumn::Binary("t".into()),
        };
        Self {
            outcome: "y".into(),
            treatment,
            covariates: None,
        }
    }
}

/// Header names of a CSV file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<ObservationSet> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<ObservationSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let y_col = find(&schema.outcome)?;
    let (t_name, t_col) = match &schema.treatment {
        TreatmentColumn::Binary(c) | TreatmentColumn::Continuous { column: c, .. } => {
            (c.clone(), find(c)?)
        }
    };
    let cov_names: Vec<String> = match &schema.covariates {
        Some(names) => names.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != y_col && *i != t_col)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let cov_cols = cov_names
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut treat = Vec::new();
    let mut w_rows: Vec<f64> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).ok_or_else(|| Error::Parse {
                row,
                column: name.to_string(),
                message: "missing cell".into(),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("`{raw}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.to_string(),
                    message: format!("`{raw}` is not finite"),
                });
            }
            Ok(v)
        };
        y.push(cell(y_col, &schema.outcome)?);
        let tv = cell(t_col, &t_name)?;
        if matches!(schema.treatment, TreatmentColumn::Binary(_)) && tv != 0.0 && tv != 1.0 {
            return Err(Error::Parse {
                row,
                column: t_name.clone(),
                message: format!(
                    "binary treatment must be 0 or 1, got {tv}; continuous treatments need a binarization rule"
                ),
            });
        }
        treat.push(tv);
        for (&c, name) in cov_cols.iter().zip(&cov_names) {
            w_rows.push(cell(c, name)?);
        }
    }

    let n = y.len();
    let w = DMatrix::from_row_slice(n, cov_cols.len(), &w_rows);
    let set = match &schema.treatment {
        TreatmentColumn::Binary(_) => {
            let t = treat.iter().map(|&v| v as u8).collect();
            ObservationSet::from_binary(w, t, y)?
        }
        TreatmentColumn::Continuous { rule, .. } => {
            ObservationSet::from_continuous(w, treat, y, *rule)?
        }
    };
    set.with_covariate_names(cov_names)
}

pub fn save_csv(set: &ObservationSet, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(set, file)
}

/// Writes `y`, then `a` when present (otherwise `t`), then the covariates.
/// Floats use shortest round-trip formatting, so reading back is lossless.
pub fn write_csv<W: Write>(set: &ObservationSet, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string()];
    header.push(if set.a().is_some() { "a" } else { "t" }.to_string());
    header.extend(set.covariate_names().iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..set.n() {
        let mut rec = vec![set.y()[i].to_string()];
        match set.a() {
            Some(a) => rec.push(a[i].to_string()),
            None => rec.push(set.t()[i].to_string()),
        }
        rec.extend(set.w().row(i).iter().map(f64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
