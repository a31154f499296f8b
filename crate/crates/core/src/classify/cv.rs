//! Stratified k-fold cross-validation over a (c, gamma) grid.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{squared_distances, PrecomputedRows};
use super::smo::solve_dual;
use super::{check_params, upper_bounds, validate, ClassifyError, FitOptions, SvmHyperparams};
use crate::seq::Label;

/// `[1e-4, 1e-3, ..., 1e4]`.
pub fn default_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4]
}

/// Fold index per sample. Each class is shuffled with `seed` and dealt
/// round-robin, so fold sizes per class differ by at most one.
pub fn stratified_folds(
    labels: &[Label],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, ClassifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    for class in [Label::Control, Label::Patient] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(ClassifyError::TooFewForFolds {
                label: class,
                count: members.len(),
                folds: k,
            });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    /// Mean of the per-fold validation accuracies, in [0, 1].
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best: SvmHyperparams,
    pub cv_accuracy: f64,
    /// Every evaluated cell, ordered by c then gamma.
    pub cells: Vec<GridCell>,
}

/// Evaluates every `(c, gamma)` pair of `c_grid × gamma_grid` by k-fold
/// cross-validation on already scaled features. The best cell maximizes
/// mean validation accuracy; ties prefer smaller c, then smaller gamma.
pub fn grid_search_cv(
    features: ArrayView2<'_, f64>,
    labels: &[Label],
    k: usize,
    c_grid: &[f64],
    gamma_grid: &[f64],
    seed: u64,
    options: &FitOptions,
) -> Result<CvResult, ClassifyError> {
    validate(features, labels)?;
    for &c in c_grid {
        for &gamma in gamma_grid {
            check_params(SvmHyperparams { c, gamma })?;
        }
    }
    let folds = stratified_folds(labels, k, seed)?;
    let dist = squared_distances(features);
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();

    let split: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let train = (0..labels.len()).filter(|&i| folds[i] != f).collect();
            let val = (0..labels.len()).filter(|&i| folds[i] == f).collect();
            (train, val)
        })
        .collect();

    // accuracy[g][c]
    let by_gamma: Vec<Vec<f64>> = gamma_grid
        .par_iter()
        .map(|&gamma| {
            let kernel: Array2<f64> = dist.mapv(|d| (-gamma * d).exp());
            c_grid
                .iter()
                .map(|&c| {
                    let total: f64 = split
                        .iter()
                        .map(|(train, val)| {
                            fold_accuracy(&kernel, &y, labels, train, val, c, options)
                        })
                        .sum();
                    total / k as f64
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::with_capacity(c_grid.len() * gamma_grid.len());
    let mut best: Option<GridCell> = None;
    for (ci, &c) in c_grid.iter().enumerate() {
        for (gi, &gamma) in gamma_grid.iter().enumerate() {
            let cell = GridCell {
                c,
                gamma,
                accuracy: by_gamma[gi][ci],
            };
            let better = match best {
                None => true,
                Some(b) => {
                    cell.accuracy > b.accuracy
                        || (cell.accuracy == b.accuracy && (c, gamma) < (b.c, b.gamma))
                }
            };
            if better {
                best = Some(cell);
            }
            cells.push(cell);
        }
    }
    let best = best.expect("nonempty grid");
    Ok(CvResult {
        best: SvmHyperparams {
            c: best.c,
            gamma: best.gamma,
        },
        cv_accuracy: best.accuracy,
        cells,
    })
}

fn fold_accuracy(
    kernel: &Array2<f64>,
    y: &[f64],
    labels: &[Label],
    train: &[usize],
    val: &[usize],
    c: f64,
    options: &FitOptions,
) -> f64 {
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let l_train: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
    let upper = upper_bounds(&l_train, c, options.class_weights);
    let sol = solve_dual(
        PrecomputedRows {
            kernel,
            subset: train,
        },
        &y_train,
        &upper,
        &options.solver,
    );
    let correct = val
        .iter()
        .filter(|&&v| {
            let f: f64 = train
                .iter()
                .zip(&sol.alpha)
                .filter(|(_, &a)| a > 0.0)
                .map(|(&t, &a)| a * y[t] * kernel[[t, v]])
                .sum::<f64>()
                - sol.rho;
            Label::from_sign(f) == labels[v]
        })
        .count();
    correct as f64 / val.len() as f64
}
