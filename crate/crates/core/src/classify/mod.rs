//! Binary RBF-kernel support vector classification.
//!
//! Labels are `Label::Patient` (+1) and `Label::Control` (-1). Feature rows
//! passed to [`fit_svm`] and [`SvmModel::decision_value`] are expected to be
//! already scaled; [`train`] and [`SvmModel::decision_value_raw`] handle the
//! scaling transform for callers holding raw features.

mod cv;
mod kernel;
mod scaling;
mod smo;

pub use cv::{grid_search_cv, default_grid, stratified_folds, CvResult, GridCell};
pub use kernel::{
    rbf_kernel, squared_distance, squared_distances, KernelSource, PrecomputedRows, RbfRows,
    RowCache,
};
pub use scaling::{apply_scaling, fit_scaling, ScalingTransform};
pub use smo::{solve_dual, DualSolution, SolverConfig};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seq::Label;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("no training rows")]
    Empty,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("features contain NaN or infinity")]
    NonFinite,
    #[error("expected dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("class {label} has {count} samples, fewer than {folds} folds")]
    TooFewForFolds {
        label: Label,
        count: usize,
        folds: usize,
    },
    #[error("hyperparameters must be positive (c = {c}, gamma = {gamma})")]
    BadParams { c: f64, gamma: f64 },
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperparams {
    pub c: f64,
    pub gamma: f64,
}

/// Training options beyond the two hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub solver: SolverConfig,
    /// Multiplies `c` per class, `(control, patient)`. Off unless set.
    pub class_weights: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub bias: f64,
    /// `α_i y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingTransform>,
    pub iterations: usize,
    pub converged: bool,
    pub dual_objective: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `Σ α_i y_i K(x_i, x) + b` for an already scaled row.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        if !self.support_vectors.is_empty() && x.len() != self.dim() {
            return Err(ClassifyError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * (-self.gamma * squared_distance(sv, x)).exp())
            .sum();
        Ok(sum + self.bias)
    }

    /// Ties (`f = 0`) go to the positive class.
    pub fn predict(&self, x: &[f64]) -> Result<Label, ClassifyError> {
        Ok(Label::from_sign(self.decision_value(x)?))
    }

    /// Applies the model's scaling transform first, if any.
    pub fn decision_value_raw(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        match &self.scaling {
            Some(t) => self.decision_value(&t.apply_row(x)?),
            None => self.decision_value(x),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        serde_json::from_str(text).map_err(|e| ClassifyError::Format(e.to_string()))
    }
}

pub(crate) fn validate(
    features: ArrayView2<'_, f64>,
    labels: &[Label],
) -> Result<(), ClassifyError> {
    if features.nrows() != labels.len() {
        return Err(ClassifyError::LabelCount {
            rows: features.nrows(),
            labels: labels.len(),
        });
    }
    if features.nrows() == 0 {
        return Err(ClassifyError::Empty);
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    let positives = labels.iter().filter(|&&l| l == Label::Patient).count();
    if positives == 0 || positives == labels.len() {
        return Err(ClassifyError::SingleClass);
    }
    Ok(())
}

fn check_params(p: SvmHyperparams) -> Result<(), ClassifyError> {
    if !(p.c > 0.0 && p.gamma > 0.0 && p.c.is_finite() && p.gamma.is_finite()) {
        return Err(ClassifyError::BadParams {
            c: p.c,
            gamma: p.gamma,
        });
    }
    Ok(())
}

fn upper_bounds(labels: &[Label], c: f64, weights: Option<(f64, f64)>) -> Vec<f64> {
    let (wc, wp) = weights.unwrap_or((1.0, 1.0));
    labels
        .iter()
        .map(|l| match l {
            Label::Control => c * wc,
            Label::Patient => c * wp,
        })
        .collect()
}

/// Assembles a model from a dual solution over `rows`.
pub(crate) fn model_from_solution(
    rows: impl Fn(usize) -> Vec<f64>,
    labels: &[Label],
    params: SvmHyperparams,
    sol: &DualSolution,
) -> SvmModel {
    let mut coefficients = Vec::new();
    let mut support_vectors = Vec::new();
    for (i, (&a, l)) in sol.alpha.iter().zip(labels).enumerate() {
        if a > 0.0 {
            coefficients.push(a * l.sign());
            support_vectors.push(rows(i));
        }
    }
    SvmModel {
        gamma: params.gamma,
        c: params.c,
        bias: -sol.rho,
        coefficients,
        support_vectors,
        scaling: None,
        iterations: sol.iterations,
        converged: sol.converged,
        dual_objective: sol.objective,
    }
}

pub fn fit_svm(
    features: ArrayView2<'_, f64>,
    labels: &[Label],
    params: SvmHyperparams,
) -> Result<SvmModel, ClassifyError> {
    fit_svm_with(features, labels, params, &FitOptions::default())
}

pub fn fit_svm_with(
    features: ArrayView2<'_, f64>,
    labels: &[Label],
    params: SvmHyperparams,
    options: &FitOptions,
) -> Result<SvmModel, ClassifyError> {
    validate(features, labels)?;
    check_params(params)?;
    let points: Vec<Vec<f64>> = features.outer_iter().map(|r| r.to_vec()).collect();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let upper = upper_bounds(labels, params.c, options.class_weights);
    let sol = solve_dual(
        RbfRows {
            points: &points,
            gamma: params.gamma,
        },
        &y,
        &upper,
        &options.solver,
    );
    Ok(model_from_solution(
        |i| points[i].clone(),
        labels,
        params,
        &sol,
    ))
}

/// Fits a scaling transform on `raw`, trains on the scaled rows and attaches
/// the transform to the model.
pub fn train(
    raw: ArrayView2<'_, f64>,
    labels: &[Label],
    params: SvmHyperparams,
    options: &FitOptions,
) -> Result<SvmModel, ClassifyError> {
    let t = fit_scaling(raw)?;
    let scaled = apply_scaling(&t, raw)?;
    let mut model = fit_svm_with(scaled.view(), labels, params, options)?;
    model.scaling = Some(t);
    Ok(model)
}

/// Largest KKT violation of a trained model on its own training set,
/// together with `|Σ α_i y_i|` and the worst box violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub max_violation: f64,
    pub equality_residual: f64,
    pub box_violation: f64,
}

/// Checks the optimality conditions of `model` on `(features, labels)`:
/// `y f(x) ≥ 1` where `α = 0`, `= 1` where free and `≤ 1` where `α = C`.
pub fn kkt_report(
    model: &SvmModel,
    features: ArrayView2<'_, f64>,
    labels: &[Label],
) -> Result<KktReport, ClassifyError> {
    let mut alpha = vec![0.0; labels.len()];
    for (sv, coef) in model.support_vectors.iter().zip(&model.coefficients) {
        let idx = features
            .outer_iter()
            .position(|r| r.iter().zip(sv).all(|(a, b)| a == b))
            .ok_or_else(|| {
                ClassifyError::Format("support vector not among training rows".into())
            })?;
        alpha[idx] += coef.abs();
    }
    let mut report = KktReport {
        max_violation: 0.0,
        equality_residual: 0.0,
        box_violation: 0.0,
    };
    let mut eq = 0.0;
    for (i, row) in features.outer_iter().enumerate() {
        let y = labels[i].sign();
        let margin = y * model.decision_value(&row.to_vec())?;
        let a = alpha[i];
        eq += a * y;
        report.box_violation = report.box_violation.max(-a).max(a - model.c);
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= model.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        report.max_violation = report.max_violation.max(v);
    }
    report.equality_residual = eq.abs();
    Ok(report)
}
