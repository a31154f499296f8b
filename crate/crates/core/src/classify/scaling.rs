use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ClassifyError;

/// Per-dimension min-max map onto `[0, 1]`, learned from training rows.
/// Dimensions that are constant in training map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingTransform {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        if row.len() != self.dim() {
            return Err(ClassifyError::Dimension {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }
}

pub fn fit_scaling(train: ArrayView2<'_, f64>) -> Result<ScalingTransform, ClassifyError> {
    if train.nrows() == 0 {
        return Err(ClassifyError::Empty);
    }
    let mut min = vec![f64::INFINITY; train.ncols()];
    let mut max = vec![f64::NEG_INFINITY; train.ncols()];
    for row in train.axis_iter(Axis(0)) {
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ClassifyError::NonFinite);
            }
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    Ok(ScalingTransform { min, max })
}

/// Test rows may land outside `[0, 1]`; they are not clamped.
pub fn apply_scaling(
    t: &ScalingTransform,
    features: ArrayView2<'_, f64>,
) -> Result<Array2<f64>, ClassifyError> {
    if features.ncols() != t.dim() {
        return Err(ClassifyError::Dimension {
            expected: t.dim(),
            got: features.ncols(),
        });
    }
    let mut out = features.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        for (c, v) in row.iter_mut().enumerate() {
            let (lo, hi) = (t.min[c], t.max[c]);
            *v = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
        }
    }
    Ok(out)
}
