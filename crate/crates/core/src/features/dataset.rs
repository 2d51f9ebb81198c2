use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::format_f64;

/// M observations (rows) by N variables with 0-based class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Frequency of each variable, when the variables are spectral bins.
    pub frequencies: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        frequencies: Option<Vec<f64>>,
    ) -> Result<Self> {
        let d = Self {
            x,
            labels,
            class_names,
            frequencies,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.nrows() != self.labels.len() {
            return Err(Error::Dimension {
                expected: self.x.nrows(),
                found: self.labels.len(),
            });
        }
        if self.x.nrows() < 2 {
            return Err(Error::domain("a dataset needs at least two observations"));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(Error::domain(format!(
                "label {bad} has no class name ({} classes)",
                self.class_names.len()
            )));
        }
        if let Some(f) = &self.frequencies {
            if f.len() != self.x.ncols() {
                return Err(Error::Dimension {
                    expected: self.x.ncols(),
                    found: f.len(),
                });
            }
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("dataset contains non-finite values"));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            frequencies: self.frequencies.clone(),
        }
    }

    /// M × k indicator matrix of the labels.
    pub fn one_hot(&self) -> DMatrix<f64> {
        one_hot(&self.labels, self.n_classes())
    }
}

/// Indicator matrix with a 1 at (i, labels[i]).
pub fn one_hot(labels: &[usize], classes: usize) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(labels.len(), classes);
    for (i, &l) in labels.iter().enumerate() {
        y[(i, l)] = 1.0;
    }
    y
}

/// Extracted features, one row per source observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub y: DMatrix<f64>,
    pub labels: Vec<usize>,
    /// Extractor name and parameters.
    pub extractor: String,
}

impl FeatureSet {
    pub fn new(y: DMatrix<f64>, labels: Vec<usize>, extractor: impl Into<String>) -> Result<Self> {
        if y.nrows() != labels.len() {
            return Err(Error::Dimension {
                expected: y.nrows(),
                found: labels.len(),
            });
        }
        if y.ncols() == 0 {
            return Err(Error::domain("feature set has no components"));
        }
        Ok(Self {
            y,
            labels,
            extractor: extractor.into(),
        })
    }

    /// Header `f1,...,fP,label`; one row per observation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.y.ncols()).map(|i| format!("f{i}")).collect();
        writeln!(out, "{},label", header.join(","))?;
        for (r, label) in self.labels.iter().enumerate() {
            for c in 0..self.y.ncols() {
                write!(out, "{},", format_f64(self.y[(r, c)]))?;
            }
            writeln!(out, "{label}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_labels() {
        let x = DMatrix::zeros(3, 2);
        assert!(Dataset::new(x.clone(), vec![0, 1], vec!["a".into(), "b".into()], None).is_err());
        assert!(Dataset::new(x.clone(), vec![0, 1, 2], vec!["a".into(), "b".into()], None).is_err());
        assert!(Dataset::new(x, vec![0, 1, 1], vec!["a".into(), "b".into()], None).is_ok());
    }

    #[test]
    fn feature_csv_has_label_last() {
        let fs = FeatureSet::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), vec![0, 1], "pca").unwrap();
        let mut buf = Vec::new();
        fs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "f1,f2,label");
        assert!(lines[2].ends_with(",1"));
        assert_eq!(lines.len(), 3);
    }
}
