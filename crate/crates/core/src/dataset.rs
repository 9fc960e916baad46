//! Immutable columnar table of named real-valued variables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::mean;

/// Rows are exchangeable units (grid cells); columns are named variables.
///
/// All columns share one length `n >= 1`, names are unique and non-empty and
/// every value is finite. The table cannot be mutated after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::Schema("table has no columns".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Schema(format!("column {i} has an empty name")));
            }
            if names[..i].contains(name) {
                return Err(Error::Schema(format!("duplicate column name `{name}`")));
            }
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::InsufficientSample { needed: 1, got: 0 });
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    found: col.len(),
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row,
                    column: name.clone(),
                });
            }
        }
        Ok(Dataset { names, columns, n })
    }

    /// Convenience constructor from `(name, column)` pairs.
    pub fn from_columns<S: Into<String>>(pairs: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let (names, columns) = pairs.into_iter().map(|(s, c)| (s.into(), c)).unzip();
        Dataset::new(names, columns)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    /// Borrowed columns in the requested order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<&[f64]>> {
        names.iter().map(|n| self.column(n.as_ref())).collect()
    }

    /// Z-scores every column (divisor `n - 1`).
    pub fn standardize(&self) -> Result<(Dataset, StandardizationRecord)> {
        let mut record = BTreeMap::new();
        let mut columns = Vec::with_capacity(self.columns.len());
        for (name, col) in self.names.iter().zip(&self.columns) {
            let (m, sd) = mean_sd(col);
            if !(sd > 0.0) {
                return Err(Error::DegenerateColumn(name.clone()));
            }
            columns.push(col.iter().map(|x| (x - m) / sd).collect());
            record.insert(name.clone(), ColumnScale { mean: m, sd });
        }
        let out = Dataset {
            names: self.names.clone(),
            columns,
            n: self.n,
        };
        Ok((out, StandardizationRecord(record)))
    }
}

/// Sample mean and standard deviation with divisor `n - 1` (0 for `n < 2`).
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    if x.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (m, libm::sqrt(ss / (x.len() - 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

/// Affine parameters used by [`Dataset::standardize`], keyed by variable name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StandardizationRecord(pub BTreeMap<String, ColumnScale>);

impl StandardizationRecord {
    pub fn get(&self, name: &str) -> Option<ColumnScale> {
        self.0.get(name).copied()
    }

    /// Maps a z-score back to the original units of `name`.
    pub fn unstandardize(&self, name: &str, z: f64) -> Option<f64> {
        self.get(name).map(|s| s.mean + s.sd * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ds(pairs: Vec<(&str, Vec<f64>)>) -> Dataset {
        Dataset::from_columns(pairs).unwrap()
    }

    #[test]
    fn minimal_table() {
        let d = ds(vec![("a", vec![1.0, 3.0]), ("y", vec![2.0, 4.0])]);
        assert_eq!(d.n(), 2);
        assert_eq!(d.names(), &["a".to_string(), "y".to_string()]);
    }

    #[test]
    fn rejects_duplicate_and_empty_names() {
        let e = Dataset::from_columns(vec![("a", vec![1.0]), ("a", vec![2.0])]).unwrap_err();
        assert!(matches!(e, Error::Schema(_)));
        let e = Dataset::from_columns(vec![("", vec![1.0])]).unwrap_err();
        assert!(matches!(e, Error::Schema(_)));
    }

    #[test]
    fn rejects_non_finite_with_location() {
        let e = Dataset::from_columns(vec![("a", vec![1.0, 2.0]), ("b", vec![0.0, f64::NAN])]).unwrap_err();
        assert_eq!(
            e,
            Error::NonFinite {
                row: 1,
                column: "b".into()
            }
        );
        let e = Dataset::from_columns(vec![("a", vec![f64::INFINITY])]).unwrap_err();
        assert!(matches!(e, Error::NonFinite { row: 0, .. }));
    }

    #[test]
    fn rejects_ragged_and_empty() {
        let e = Dataset::from_columns(vec![("a", vec![1.0, 2.0]), ("b", vec![0.0])]).unwrap_err();
        assert!(matches!(e, Error::Shape { .. }));
        let e = Dataset::from_columns(vec![("a", Vec::new())]).unwrap_err();
        assert!(matches!(e, Error::InsufficientSample { .. }));
    }

    #[test]
    fn standardize_hand_example() {
        let d = ds(vec![("x", vec![1.0, 2.0, 3.0])]);
        let (s, rec) = d.standardize().unwrap();
        assert_eq!(s.column("x").unwrap(), &[-1.0, 0.0, 1.0]);
        assert_eq!(rec.get("x"), Some(ColumnScale { mean: 2.0, sd: 1.0 }));
        assert_eq!(rec.unstandardize("x", 1.0), Some(3.0));
    }

    #[test]
    fn standardize_constant_column_names_it() {
        let d = ds(vec![("ok", vec![1.0, 2.0, 3.0]), ("flat", vec![5.0, 5.0, 5.0])]);
        assert_eq!(d.standardize().unwrap_err(), Error::DegenerateColumn("flat".into()));
    }

    #[test]
    fn select_order_and_errors() {
        let d = ds(vec![
            ("a", vec![1.0, 2.0]),
            ("y", vec![3.0, 4.0]),
            ("z", vec![5.0, 6.0]),
        ]);
        let cols = d.select(&["y", "a"]).unwrap();
        assert_eq!(cols, vec![&[3.0, 4.0][..], &[1.0, 2.0][..]]);
        assert!(d.select::<&str>(&[]).unwrap().is_empty());
        assert_eq!(d.select(&["q"]).unwrap_err(), Error::UnknownVariable("q".into()));
    }
}
