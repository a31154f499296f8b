//! Per-sample feature vectors and their CSV table form.
//!
//! CSV layout: a header `sample_id,label,f0,f1,...` then one row per sample.
//! The label column is `control`, `patient` or empty when unknown. Values use
//! Rust's shortest round-trip float formatting, so a table reloads
//! bit-identically.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::cgr::{build_cube, CgrError, Resolution};
use crate::empr::{decompose_oneway, EmprDecomposition, EmprError};
use crate::seq::{Label, NetworkSample};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sample id '{0}' contains a comma or line break")]
    BadId(String),
    #[error("feature length {got} differs from table width {expected}")]
    Width { expected: usize, got: usize },
    #[error("loading sample: {0}")]
    Source(String),
    #[error(transparent)]
    Cgr(#[from] CgrError),
    #[error(transparent)]
    Empr(#[from] EmprError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub sample_id: String,
    pub label: Option<Label>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    /// Concatenated one-way components `[g1; g2; g3]`.
    pub fn from_decomposition(
        sample_id: impl Into<String>,
        label: Option<Label>,
        d: &EmprDecomposition,
    ) -> Self {
        FeatureVector {
            sample_id: sample_id.into(),
            label,
            values: d.feature_values(),
        }
    }
}

/// Convenience for [`FeatureVector::from_decomposition`] without provenance.
pub fn feature_vector(d: &EmprDecomposition) -> Vec<f64> {
    d.feature_values()
}

/// Cube, one-way decomposition and feature vector of one sample.
pub fn sample_features(
    sample: &NetworkSample,
    resolution: Resolution,
) -> Result<FeatureVector, FeatureError> {
    let cube = build_cube(sample, resolution)?;
    let d = decompose_oneway(&cube)?;
    Ok(FeatureVector::from_decomposition(
        sample.sample_id.clone(),
        Some(sample.label),
        &d,
    ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureVector>,
}

impl FeatureTable {
    /// Features for `count` samples produced by `fetch`, in index order.
    pub fn build<F>(count: usize, resolution: Resolution, fetch: F) -> Result<Self, FeatureError>
    where
        F: Fn(usize) -> Result<NetworkSample, FeatureError> + Sync,
    {
        let rows = (0..count)
            .into_par_iter()
            .map(|i| sample_features(&fetch(i)?, resolution))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureTable { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.values.len())
    }

    pub fn to_csv(&self) -> Result<String, FeatureError> {
        let width = self.width();
        let mut out = String::from("sample_id,label");
        for c in 0..width {
            write!(out, ",f{c}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            if row.sample_id.contains([',', '\n', '\r']) {
                return Err(FeatureError::BadId(row.sample_id.clone()));
            }
            if row.values.len() != width {
                return Err(FeatureError::Width {
                    expected: width,
                    got: row.values.len(),
                });
            }
            out.push_str(&row.sample_id);
            out.push(',');
            out.push_str(row.label.map_or("", Label::as_str));
            for v in &row.values {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self, FeatureError> {
        let mut lines = text.lines().enumerate();
        let width = match lines.next() {
            None => return Ok(FeatureTable::default()),
            Some((_, header)) => {
                let cols: Vec<&str> = header.split(',').collect();
                if cols.len() < 2 || cols[0] != "sample_id" || cols[1] != "label" {
                    return Err(FeatureError::Parse {
                        line: 1,
                        msg: "expected 'sample_id,label,...' header".into(),
                    });
                }
                cols.len() - 2
            }
        };
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let mut fields = line.split(',');
            let sample_id = fields.next().unwrap_or_default().to_string();
            let label = match fields.next().unwrap_or_default() {
                "" => None,
                s => Some(Label::parse(s).ok_or_else(|| FeatureError::Parse {
                    line: line_no,
                    msg: format!("unknown label '{s}'"),
                })?),
            };
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|e| FeatureError::Parse {
                        line: line_no,
                        msg: format!("value '{f}': {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != width {
                return Err(FeatureError::Width {
                    expected: width,
                    got: values.len(),
                });
            }
            rows.push(FeatureVector {
                sample_id,
                label,
                values,
            });
        }
        Ok(FeatureTable { rows })
    }
}
