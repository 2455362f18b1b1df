//! In-memory data model for missing-outcome and two-arm (ATE) datasets.
//!
//! Outcomes that are not observed are carried behind an explicit validity
//! mask. Reads of masked cells go through [`MaskedOutcome::get`], which
//! counts every attempted access so tests can assert that estimators never
//! touch them.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("bad value {value:?} in column `{column}` at data row {row}")]
    BadValue { column: String, row: usize, value: String },
    #[error("row {0} has response 1 but no outcome")]
    InconsistentRow(usize),
    #[error("treatment arm {0} has no units")]
    EmptyArm(u8),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Outcome vector whose entries are defined only where the unit is labeled.
#[derive(Debug)]
pub struct MaskedOutcome {
    values: Vec<f64>,
    observed: Vec<bool>,
    masked_reads: AtomicUsize,
}

impl Clone for MaskedOutcome {
    fn clone(&self) -> Self {
        Self {
            values: self.values.clone(),
            observed: self.observed.clone(),
            masked_reads: AtomicUsize::new(self.masked_reads.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for MaskedOutcome {
    fn eq(&self, other: &Self) -> bool {
        self.observed == other.observed
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.observed)
                .all(|((a, b), &ok)| !ok || a.to_bits() == b.to_bits())
    }
}

impl MaskedOutcome {
    /// Builds from optional cells; `None` marks a masked entry.
    pub fn from_options(cells: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (values, observed) = cells
            .into_iter()
            .map(|c| match c {
                Some(v) => (v, true),
                None => (0.0, false),
            })
            .unzip();
        Self {
            values,
            observed,
            masked_reads: AtomicUsize::new(0),
        }
    }

    /// Masks `values[i]` wherever `response[i] == 0`.
    pub fn from_response(values: Vec<f64>, response: &[u8]) -> Self {
        assert_eq!(values.len(), response.len());
        let observed = response.iter().map(|&r| r == 1).collect();
        Self {
            values,
            observed,
            masked_reads: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.observed[i]
    }

    /// Returns the outcome at `i`, or `None` (and bumps the access counter)
    /// if the cell is masked.
    pub fn get(&self, i: usize) -> Option<f64> {
        if self.observed[i] {
            Some(self.values[i])
        } else {
            self.masked_reads.fetch_add(1, Ordering::Relaxed);
            None
        }
    }

    /// Number of attempted reads of masked cells since construction.
    pub fn masked_reads(&self) -> usize {
        self.masked_reads.load(Ordering::Relaxed)
    }

    /// Dense copy with masked cells replaced by `fill`. Does not count as a
    /// masked read.
    pub fn filled(&self, fill: f64) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.observed)
            .map(|(&v, &ok)| if ok { v } else { fill })
            .collect()
    }

    pub fn masked_count(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }
}

/// Missing-outcome dataset: covariates, response indicator, masked outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: DMatrix<f64>,
    response: Vec<u8>,
    outcome: MaskedOutcome,
}

impl Dataset {
    pub fn new(covariates: DMatrix<f64>, response: Vec<u8>, outcome: MaskedOutcome) -> Result<Self, DataError> {
        let n = covariates.nrows();
        if n == 0 || covariates.ncols() == 0 {
            return Err(DataError::Invalid("need at least one row and one covariate".into()));
        }
        if response.len() != n || outcome.len() != n {
            return Err(DataError::Invalid("length mismatch".into()));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite covariate".into()));
        }
        for (i, &r) in response.iter().enumerate() {
            match r {
                0 => {}
                1 => match outcome.get(i) {
                    Some(y) if y.is_finite() => {}
                    Some(_) => return Err(DataError::Invalid(format!("non-finite outcome at row {i}"))),
                    None => return Err(DataError::InconsistentRow(i)),
                },
                _ => return Err(DataError::Invalid(format!("response {r} at row {i}"))),
            }
        }
        Ok(Self {
            covariates,
            response,
            outcome,
        })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn response(&self) -> &[u8] {
        &self.response
    }

    pub fn outcome(&self) -> &MaskedOutcome {
        &self.outcome
    }

    /// Writes the dataset using the column names of `schema`. Masked
    /// outcomes become empty cells.
    pub fn write_csv(&self, path: &Path, schema: &MissingSchema) -> Result<(), DataError> {
        if schema.covariates.len() != self.p() {
            return Err(DataError::Invalid("schema covariate count differs from p".into()));
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = schema.covariates.iter().map(String::as_str).collect();
        header.push(&schema.response);
        header.push(&schema.outcome);
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.covariates.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.response[i].to_string());
            rec.push(if self.outcome.is_observed(i) {
                self.outcome.values[i].to_string()
            } else {
                String::new()
            });
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Two-arm dataset with a fully observed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct AteDataset {
    pub name: String,
    covariates: DMatrix<f64>,
    treatment: Vec<u8>,
    outcome: Vec<f64>,
}

impl AteDataset {
    pub fn new(
        name: impl Into<String>,
        covariates: DMatrix<f64>,
        treatment: Vec<u8>,
        outcome: Vec<f64>,
    ) -> Result<Self, DataError> {
        let n = covariates.nrows();
        if treatment.len() != n || outcome.len() != n {
            return Err(DataError::Invalid("length mismatch".into()));
        }
        if covariates.iter().chain(&outcome).any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite value".into()));
        }
        if treatment.iter().any(|&a| a > 1) {
            return Err(DataError::Invalid("treatment not in {0,1}".into()));
        }
        for arm in [1u8, 0] {
            if !treatment.contains(&arm) {
                return Err(DataError::EmptyArm(arm));
            }
        }
        Ok(Self {
            name: name.into(),
            covariates,
            treatment,
            outcome,
        })
    }

    pub fn n(&self) -> usize {
        self.treatment.len()
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    /// Views one arm as a missing-outcome problem: response is the arm
    /// indicator and outcomes of the other arm are masked.
    pub fn arm_view(&self, arm: u8) -> (Vec<u8>, MaskedOutcome) {
        let r: Vec<u8> = self.treatment.iter().map(|&a| u8::from(a == arm)).collect();
        let y = MaskedOutcome::from_response(self.outcome.clone(), &r);
        (r, y)
    }
}

/// Column names for a missing-outcome CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingSchema {
    pub covariates: Vec<String>,
    pub response: String,
    pub outcome: String,
}

/// Column names for a two-arm CSV. Outcome columns are passed separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AteSchema {
    pub covariates: Vec<String>,
    pub treatment: String,
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

struct Table {
    header: HashMap<String, usize>,
    names: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(File::open(path)?);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let header = names.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        let rows = rdr.records().collect::<Result<Vec<_>, _>>()?;
        Ok(Self { header, names, rows })
    }

    fn col(&self, name: &str) -> Result<usize, DataError> {
        self.header
            .get(name)
            .copied()
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    fn cell<'a>(&self, row: &'a csv::StringRecord, j: usize) -> &'a str {
        row.get(j).unwrap_or("")
    }

    fn number(&self, row: usize, j: usize) -> Result<f64, DataError> {
        let raw = self.cell(&self.rows[row], j);
        parse_finite(raw).ok_or_else(|| DataError::BadValue {
            column: self.names[j].clone(),
            row,
            value: raw.to_string(),
        })
    }

    fn binary(&self, row: usize, j: usize) -> Result<u8, DataError> {
        let v = self.number(row, j)?;
        if v == 0.0 {
            Ok(0)
        } else if v == 1.0 {
            Ok(1)
        } else {
            Err(DataError::BadValue {
                column: self.names[j].clone(),
                row,
                value: self.cell(&self.rows[row], j).to_string(),
            })
        }
    }

    fn covariates(&self, cols: &[usize]) -> Result<DMatrix<f64>, DataError> {
        let mut m = DMatrix::zeros(self.rows.len(), cols.len());
        for i in 0..self.rows.len() {
            for (k, &j) in cols.iter().enumerate() {
                m[(i, k)] = self.number(i, j)?;
            }
        }
        Ok(m)
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a missing-outcome CSV. Outcome cells may be empty (or `NA`) only
/// where the response is 0; rows with missing covariates are rejected.
pub fn load_missing_csv(path: &Path, schema: &MissingSchema) -> Result<Dataset, DataError> {
    let t = Table::read(path)?;
    let cov_cols = schema
        .covariates
        .iter()
        .map(|c| t.col(c))
        .collect::<Result<Vec<_>, _>>()?;
    let r_col = t.col(&schema.response)?;
    let y_col = t.col(&schema.outcome)?;

    let covariates = t.covariates(&cov_cols)?;
    let mut response = Vec::with_capacity(t.rows.len());
    let mut cells = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        let r = t.binary(i, r_col)?;
        let raw = t.cell(&t.rows[i], y_col);
        let y = if is_missing_token(raw) {
            if r == 1 {
                return Err(DataError::InconsistentRow(i));
            }
            None
        } else if r == 0 {
            // unlabeled rows never expose their outcome
            None
        } else {
            Some(t.number(i, y_col)?)
        };
        response.push(r);
        cells.push(y);
    }
    Dataset::new(covariates, response, MaskedOutcome::from_options(cells))
}

/// Loads a multi-outcome two-arm CSV, one [`AteDataset`] per outcome column.
/// `outcome_columns` empty means every column not used as covariate or
/// treatment.
pub fn load_ate_csv(path: &Path, schema: &AteSchema, outcome_columns: &[String]) -> Result<Vec<AteDataset>, DataError> {
    let t = Table::read(path)?;
    let cov_cols = schema
        .covariates
        .iter()
        .map(|c| t.col(c))
        .collect::<Result<Vec<_>, _>>()?;
    let a_col = t.col(&schema.treatment)?;
    let outcomes: Vec<String> = if outcome_columns.is_empty() {
        t.names
            .iter()
            .filter(|n| **n != schema.treatment && !schema.covariates.contains(n))
            .cloned()
            .collect()
    } else {
        outcome_columns.to_vec()
    };
    let y_cols = outcomes.iter().map(|c| t.col(c)).collect::<Result<Vec<_>, _>>()?;

    let covariates = t.covariates(&cov_cols)?;
    let treatment = (0..t.rows.len())
        .map(|i| t.binary(i, a_col))
        .collect::<Result<Vec<_>, _>>()?;
    for arm in [1u8, 0] {
        if !treatment.contains(&arm) {
            return Err(DataError::EmptyArm(arm));
        }
    }
    outcomes
        .iter()
        .zip(&y_cols)
        .map(|(name, &j)| {
            let y = (0..t.rows.len())
                .map(|i| t.number(i, j))
                .collect::<Result<Vec<_>, _>>()?;
            AteDataset::new(name.clone(), covariates.clone(), treatment.clone(), y)
        })
        .collect()
}

/// Writes a two-arm table (shared covariates/treatment, several outcomes).
pub fn write_ate_csv(path: &Path, schema: &AteSchema, data: &[AteDataset]) -> Result<(), DataError> {
    let first = data.first().ok_or_else(|| DataError::Invalid("no outcomes".into()))?;
    let mut f = std::io::BufWriter::new(File::create(path)?);
    let mut header = schema.covariates.clone();
    header.push(schema.treatment.clone());
    header.extend(data.iter().map(|d| d.name.clone()));
    writeln!(f, "{}", header.join(","))?;
    for i in 0..first.n() {
        let mut rec: Vec<String> = first.covariates.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(first.treatment[i].to_string());
        rec.extend(data.iter().map(|d| d.outcome[i].to_string()));
        writeln!(f, "{}", rec.join(","))?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema() -> MissingSchema {
        MissingSchema {
            covariates: ["x1", "x2", "x3", "x4"].map(String::from).to_vec(),
            response: "r".into(),
            outcome: "y".into(),
        }
    }

    fn tmp_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_labeled_row() {
        let f = tmp_csv("x1,x2,x3,x4,r,y\n1.0,10.0,0.216,400.0,1,210.0\n");
        let d = load_missing_csv(f.path(), &schema()).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.response(), &[1]);
        assert_eq!(d.outcome().get(0), Some(210.0));
        assert_eq!(d.covariates()[(0, 2)], 0.216);
    }

    #[test]
    fn empty_outcome_is_masked() {
        let f = tmp_csv("x1,x2,x3,x4,r,y\n1.0,10.0,0.216,400.0,0,\n2,3,4,5,1,7\n");
        let d = load_missing_csv(f.path(), &schema()).unwrap();
        assert!(!d.outcome().is_observed(0));
        assert_eq!(d.outcome().masked_count(), 1);
        assert_eq!(d.outcome().masked_reads(), 0);
    }

    #[test]
    fn na_outcome_is_masked() {
        let f = tmp_csv("x1,x2,x3,x4,r,y\n1,2,3,4,0,NA\n");
        let d = load_missing_csv(f.path(), &schema()).unwrap();
        assert!(!d.outcome().is_observed(0));
    }

    #[test]
    fn missing_response_column() {
        let f = tmp_csv("x1,x2,x3,x4,y\n1,2,3,4,5\n");
        assert!(matches!(
            load_missing_csv(f.path(), &schema()),
            Err(DataError::MissingColumn(c)) if c == "r"
        ));
    }

    #[test]
    fn labeled_row_without_outcome() {
        let f = tmp_csv("x1,x2,x3,x4,r,y\n1,2,3,4,1,\n");
        assert!(matches!(
            load_missing_csv(f.path(), &schema()),
            Err(DataError::InconsistentRow(0))
        ));
    }

    #[test]
    fn bad_tokens() {
        for body in [
            "x1,x2,x3,x4,r,y\n1,2,3,4,2,5\n",
            "x1,x2,x3,x4,r,y\nabc,2,3,4,1,5\n",
            "x1,x2,x3,x4,r,y\n1,2,3,4,1,foo\n",
            "x1,x2,x3,x4,r,y\n1,inf,3,4,1,5\n",
            "x1,x2,x3,x4,r,y\n,2,3,4,1,5\n",
        ] {
            let f = tmp_csv(body);
            assert!(
                matches!(load_missing_csv(f.path(), &schema()), Err(DataError::BadValue { .. })),
                "{body}"
            );
        }
    }

    fn ate_schema() -> AteSchema {
        AteSchema {
            covariates: vec!["age".into()],
            treatment: "a".into(),
        }
    }

    #[test]
    fn ate_two_outcomes() {
        let f = tmp_csv("age,a,p1,p2\n50,1,1.0,2.0\n60,1,1.5,2.5\n55,0,0.5,1.0\n65,0,0.7,1.1\n");
        let ds = load_ate_csv(f.path(), &ate_schema(), &["p1".into(), "p2".into()]).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.iter().all(|d| d.n() == 4));
        assert_eq!(ds[1].outcome(), &[2.0, 2.5, 1.0, 1.1]);
        assert_eq!(ds[0].treatment(), &[1, 1, 0, 0]);
        // empty list selects all remaining columns
        let all = load_ate_csv(f.path(), &ate_schema(), &[]).unwrap();
        assert_eq!(all.iter().map(|d| d.name.as_str()).collect::<Vec<_>>(), ["p1", "p2"]);
    }

    #[test]
    fn ate_empty_arm() {
        let f = tmp_csv("age,a,p1\n50,1,1\n60,1,2\n");
        assert!(matches!(
            load_ate_csv(f.path(), &ate_schema(), &["p1".into()]),
            Err(DataError::EmptyArm(0))
        ));
    }

    #[test]
    fn ate_na_outcome_is_bad_value() {
        let f = tmp_csv("age,a,p1\n50,1,NA\n60,0,2\n");
        assert!(matches!(
            load_ate_csv(f.path(), &ate_schema(), &["p1".into()]),
            Err(DataError::BadValue { .. })
        ));
    }

    #[test]
    fn arm_view_masks_other_arm() {
        let d = AteDataset::new(
            "y",
            DMatrix::from_element(3, 1, 1.0),
            vec![1, 0, 1],
            vec![3.0, 4.0, 5.0],
        )
        .unwrap();
        let (r, y) = d.arm_view(0);
        assert_eq!(r, vec![0, 1, 0]);
        assert_eq!(y.masked_count(), 2);
        assert_eq!(y.get(1), Some(4.0));
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in prop::collection::vec(
                (prop::array::uniform4(-1e6f64..1e6), any::<bool>(), -1e9f64..1e9),
                1..20,
            )
        ) {
            let n = rows.len();
            let cov = DMatrix::from_fn(n, 4, |i, j| rows[i].0[j]);
            let r: Vec<u8> = rows.iter().map(|x| u8::from(x.1)).collect();
            let y = MaskedOutcome::from_response(rows.iter().map(|x| x.2).collect(), &r);
            let d = Dataset::new(cov, r, y).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            d.write_csv(f.path(), &schema()).unwrap();
            let back = load_missing_csv(f.path(), &schema()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
