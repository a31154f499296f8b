//! Enhanced multivariance products representation of 3-D arrays.
//!
//! A cube `G` (n1 x n2 x n3) is written as the sum of eight terms: a constant
//! `g0 s1⊗s2⊗s3`, three one-way terms (`g1⊗s2⊗s3`, ...), three two-way terms
//! (`g12⊗s3`, ...) and the residual `g123`. Supports are averaged directional
//! supports: weighted averages of the cube over every axis but one, scaled to
//! unit weighted norm. Components satisfy the vanishing conditions
//! `Σ_i w_i s_i g_{..i..} = 0` along each of their own axes.
//!
//! Only the one-way components feed the classifier. Two-way and residual
//! components are computed on request, for verification.

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cgr::CgrCube;

#[derive(Debug, Error, PartialEq)]
pub enum EmprError {
    #[error("axis {axis} averaged direction vanishes; cannot normalize its support")]
    DegenerateSupport { axis: usize },
    #[error("axis sizes must be at least 1, got {0:?}")]
    EmptyAxis((usize, usize, usize)),
    #[error("vector lengths {got:?} do not match cube dimensions {expected:?}")]
    Shape {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("decomposition was computed one-way only; two-way and residual terms are missing")]
    Incomplete,
}

/// Read access to a 3-D array for the contractions EMPR needs.
pub trait CubeData {
    fn dims(&self) -> (usize, usize, usize);

    /// Leave-one-axis-out contractions with per-axis coefficient vectors:
    /// `c1_i = Σ_jk a2_j a3_k G_ijk`, `c2_j = Σ_ik a1_i a3_k G_ijk`,
    /// `c3_k = Σ_ij a1_i a2_j G_ijk`.
    fn contract(&self, a1: &[f64], a2: &[f64], a3: &[f64]) -> [Vec<f64>; 3];
}

impl CubeData for Array3<f64> {
    fn dims(&self) -> (usize, usize, usize) {
        self.dim()
    }

    /// Two sweeps, each a pair of single-axis contractions:
    /// `M_ij = Σ_k a3_k G_ijk` gives `c1` and `c2`; `N_jk = Σ_i a1_i G_ijk`
    /// gives `c3`.
    fn contract(&self, a1: &[f64], a2: &[f64], a3: &[f64]) -> [Vec<f64>; 3] {
        let (n1, n2, n3) = self.dim();
        let mut m = Array2::<f64>::zeros((n1, n2));
        let mut n = Array2::<f64>::zeros((n2, n3));
        for (i, plane) in self.axis_iter(Axis(0)).enumerate() {
            for (j, fiber) in plane.axis_iter(Axis(0)).enumerate() {
                let mut acc = 0.0;
                for (k, &g) in fiber.iter().enumerate() {
                    acc += a3[k] * g;
                    n[[j, k]] += a1[i] * g;
                }
                m[[i, j]] = acc;
            }
        }
        let c1 = (0..n1)
            .map(|i| (0..n2).map(|j| a2[j] * m[[i, j]]).sum())
            .collect();
        let c2 = (0..n2)
            .map(|j| (0..n1).map(|i| a1[i] * m[[i, j]]).sum())
            .collect();
        let c3 = (0..n3)
            .map(|k| (0..n2).map(|j| a2[j] * n[[j, k]]).sum())
            .collect();
        [c1, c2, c3]
    }
}

impl CubeData for CgrCube {
    fn dims(&self) -> (usize, usize, usize) {
        CgrCube::dims(self)
    }

    /// Visits set voxels only, accumulating per slice before folding in `a3`.
    fn contract(&self, a1: &[f64], a2: &[f64], a3: &[f64]) -> [Vec<f64>; 3] {
        let (n1, n2, n3) = CgrCube::dims(self);
        let mut c1 = vec![0.0; n1];
        let mut c2 = vec![0.0; n2];
        let mut c3 = vec![0.0; n3];
        let mut rows = vec![0.0; n1];
        let mut cols = vec![0.0; n2];
        for (k, slice) in self.slices().iter().enumerate() {
            rows.iter_mut().for_each(|v| *v = 0.0);
            cols.iter_mut().for_each(|v| *v = 0.0);
            for (i, j) in slice.iter_set() {
                rows[i] += a2[j];
                cols[j] += a1[i];
            }
            for (c, r) in c1.iter_mut().zip(&rows) {
                *c += a3[k] * r;
            }
            for (c, r) in c2.iter_mut().zip(&cols) {
                *c += a3[k] * r;
            }
            c3[k] = rows.iter().zip(a1).map(|(r, a)| r * a).sum();
        }
        [c1, c2, c3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVectors {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
}

impl WeightVectors {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.len(), self.w2.len(), self.w3.len())
    }

    pub fn axes(&self) -> [&[f64]; 3] {
        [&self.w1, &self.w2, &self.w3]
    }
}

/// Uniform weights `1/n_r` on every axis.
pub fn constant_weights(n1: usize, n2: usize, n3: usize) -> Result<WeightVectors, EmprError> {
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(EmprError::EmptyAxis((n1, n2, n3)));
    }
    let uniform = |n: usize| vec![1.0 / n as f64; n];
    Ok(WeightVectors {
        w1: uniform(n1),
        w2: uniform(n2),
        w3: uniform(n3),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVectors {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
}

impl SupportVectors {
    pub fn axes(&self) -> [&[f64]; 3] {
        [&self.s1, &self.s2, &self.s3]
    }
}

/// `Σ_i w_i v_i^2`.
pub fn weighted_square_norm(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(w, v)| w * v * v).sum()
}

fn check_shape(cube: (usize, usize, usize), got: (usize, usize, usize)) -> Result<(), EmprError> {
    if cube != got {
        return Err(EmprError::Shape {
            expected: cube,
            got,
        });
    }
    Ok(())
}

/// Unnormalized averaged directions `S^(r)`.
pub fn averaged_directions<C: CubeData + ?Sized>(
    cube: &C,
    weights: &WeightVectors,
) -> Result<[Vec<f64>; 3], EmprError> {
    check_shape(cube.dims(), weights.dims())?;
    Ok(cube.contract(&weights.w1, &weights.w2, &weights.w3))
}

/// Averaged directional supports, each divided by its weighted norm. The
/// sign of every entry follows the averaged direction.
pub fn ads_supports<C: CubeData + ?Sized>(
    cube: &C,
    weights: &WeightVectors,
) -> Result<SupportVectors, EmprError> {
    let dirs = averaged_directions(cube, weights)?;
    let mut normalized = Vec::with_capacity(3);
    for (axis, (dir, w)) in dirs.into_iter().zip(weights.axes()).enumerate() {
        let eta = weighted_square_norm(w, &dir).sqrt();
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(EmprError::DegenerateSupport { axis: axis + 1 });
        }
        normalized.push(dir.into_iter().map(|v| v / eta).collect::<Vec<_>>());
    }
    let s3 = normalized.pop().unwrap();
    let s2 = normalized.pop().unwrap();
    let s1 = normalized.pop().unwrap();
    Ok(SupportVectors { s1, s2, s3 })
}

fn products(weights: &WeightVectors, supports: &SupportVectors) -> [Vec<f64>; 3] {
    let mul = |w: &[f64], s: &[f64]| w.iter().zip(s).map(|(a, b)| a * b).collect::<Vec<_>>();
    [
        mul(&weights.w1, &supports.s1),
        mul(&weights.w2, &supports.s2),
        mul(&weights.w3, &supports.s3),
    ]
}

fn check_supports(cube: (usize, usize, usize), s: &SupportVectors) -> Result<(), EmprError> {
    check_shape(cube, (s.s1.len(), s.s2.len(), s.s3.len()))
}

/// Zero-way component: the triple weighted, support-scaled sum of the cube.
pub fn zeroth_component<C: CubeData + ?Sized>(
    cube: &C,
    weights: &WeightVectors,
    supports: &SupportVectors,
) -> Result<f64, EmprError> {
    check_shape(cube.dims(), weights.dims())?;
    check_supports(cube.dims(), supports)?;
    let a = products(weights, supports);
    let [c1, _, _] = cube.contract(&a[0], &a[1], &a[2]);
    Ok(c1.iter().zip(&a[0]).map(|(c, a)| c * a).sum())
}

/// One-way components: each axis-pair contraction minus `g0 s^(r)`.
pub fn oneway_components<C: CubeData + ?Sized>(
    cube: &C,
    weights: &WeightVectors,
    supports: &SupportVectors,
    g0: f64,
) -> Result<[Vec<f64>; 3], EmprError> {
    check_shape(cube.dims(), weights.dims())?;
    check_supports(cube.dims(), supports)?;
    let a = products(weights, supports);
    Ok(oneway_from_contractions(
        cube.contract(&a[0], &a[1], &a[2]),
        supports,
        g0,
    ))
}

fn oneway_from_contractions(c: [Vec<f64>; 3], supports: &SupportVectors, g0: f64) -> [Vec<f64>; 3] {
    let [c1, c2, c3] = c;
    let sub = |c: Vec<f64>, s: &[f64]| c.into_iter().zip(s).map(|(c, s)| c - g0 * s).collect();
    [
        sub(c1, &supports.s1),
        sub(c2, &supports.s2),
        sub(c3, &supports.s3),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayComponents {
    pub g12: Array2<f64>,
    pub g13: Array2<f64>,
    pub g23: Array2<f64>,
}

/// Two-way components: each single-axis contraction minus the outer
/// products of every lower-order component with the remaining supports.
pub fn twoway_components(
    cube: &Array3<f64>,
    weights: &WeightVectors,
    supports: &SupportVectors,
    g0: f64,
    oneways: &[Vec<f64>; 3],
) -> Result<TwoWayComponents, EmprError> {
    check_shape(cube.dim(), weights.dims())?;
    check_supports(cube.dim(), supports)?;
    let (n1, n2, n3) = cube.dim();
    let a = products(weights, supports);
    let (s1, s2, s3) = (&supports.s1, &supports.s2, &supports.s3);
    let [g1, g2, g3] = oneways;

    let mut g12 = Array2::zeros((n1, n2));
    let mut g13 = Array2::zeros((n1, n3));
    let mut g23 = Array2::zeros((n2, n3));
    for ((i, j, k), &g) in cube.indexed_iter() {
        g12[[i, j]] += a[2][k] * g;
        g13[[i, k]] += a[1][j] * g;
        g23[[j, k]] += a[0][i] * g;
    }
    for ((i, j), v) in g12.indexed_iter_mut() {
        *v -= g1[i] * s2[j] + g2[j] * s1[i] + g0 * s1[i] * s2[j];
    }
    for ((i, k), v) in g13.indexed_iter_mut() {
        *v -= g1[i] * s3[k] + g3[k] * s1[i] + g0 * s1[i] * s3[k];
    }
    for ((j, k), v) in g23.indexed_iter_mut() {
        *v -= g2[j] * s3[k] + g3[k] * s2[j] + g0 * s2[j] * s3[k];
    }
    Ok(TwoWayComponents { g12, g13, g23 })
}

/// The eight EMPR terms expanded to full cubes, in the order
/// `[0, 1, 2, 3, 12, 13, 23]`; the residual is the eighth.
pub fn lower_terms(
    dims: (usize, usize, usize),
    supports: &SupportVectors,
    g0: f64,
    oneways: &[Vec<f64>; 3],
    twoways: &TwoWayComponents,
) -> [Array3<f64>; 7] {
    let (s1, s2, s3) = (&supports.s1, &supports.s2, &supports.s3);
    let [g1, g2, g3] = oneways;
    let build = |f: &dyn Fn(usize, usize, usize) -> f64| {
        Array3::from_shape_fn(dims, |(i, j, k)| f(i, j, k))
    };
    [
        build(&|i, j, k| g0 * s1[i] * s2[j] * s3[k]),
        build(&|i, j, k| g1[i] * s2[j] * s3[k]),
        build(&|i, j, k| s1[i] * g2[j] * s3[k]),
        build(&|i, j, k| s1[i] * s2[j] * g3[k]),
        build(&|i, j, k| twoways.g12[[i, j]] * s3[k]),
        build(&|i, j, k| twoways.g13[[i, k]] * s2[j]),
        build(&|i, j, k| s1[i] * twoways.g23[[j, k]]),
    ]
}

/// `G` minus the seven lower terms.
pub fn residual_component(
    cube: &Array3<f64>,
    supports: &SupportVectors,
    g0: f64,
    oneways: &[Vec<f64>; 3],
    twoways: &TwoWayComponents,
) -> Array3<f64> {
    let mut residual = cube.clone();
    for term in lower_terms(cube.dim(), supports, g0, oneways, twoways) {
        residual -= &term;
    }
    residual
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Depth {
    #[default]
    OneWay,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmprDecomposition {
    pub weights: WeightVectors,
    pub supports: SupportVectors,
    pub g0: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    pub twoway: Option<TwoWayComponents>,
    pub residual: Option<Array3<f64>>,
}

impl EmprDecomposition {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.g1.len(), self.g2.len(), self.g3.len())
    }

    pub fn oneways(&self) -> [Vec<f64>; 3] {
        [self.g1.clone(), self.g2.clone(), self.g3.clone()]
    }

    /// `[g1; g2; g3]`, length `n1 + n2 + n3`.
    pub fn feature_values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.g1.len() + self.g2.len() + self.g3.len());
        v.extend_from_slice(&self.g1);
        v.extend_from_slice(&self.g2);
        v.extend_from_slice(&self.g3);
        v
    }
}

/// Constant weights, per-cube averaged directional supports, then `g0` and
/// the one-way components.
pub fn decompose_oneway<C: CubeData + ?Sized>(cube: &C) -> Result<EmprDecomposition, EmprError> {
    let (n1, n2, n3) = cube.dims();
    let weights = constant_weights(n1, n2, n3)?;
    let supports = ads_supports(cube, &weights)?;
    decompose_oneway_with(cube, weights, supports)
}

/// One-way decomposition under caller-supplied weights and supports.
pub fn decompose_oneway_with<C: CubeData + ?Sized>(
    cube: &C,
    weights: WeightVectors,
    supports: SupportVectors,
) -> Result<EmprDecomposition, EmprError> {
    check_shape(cube.dims(), weights.dims())?;
    check_supports(cube.dims(), &supports)?;
    let a = products(&weights, &supports);
    let c = cube.contract(&a[0], &a[1], &a[2]);
    let g0 = c[0].iter().zip(&a[0]).map(|(c, a)| c * a).sum();
    let [g1, g2, g3] = oneway_from_contractions(c, &supports, g0);
    Ok(EmprDecomposition {
        weights,
        supports,
        g0,
        g1,
        g2,
        g3,
        twoway: None,
        residual: None,
    })
}

/// All eight components of a dense cube.
pub fn decompose_full(cube: &Array3<f64>) -> Result<EmprDecomposition, EmprError> {
    let mut d = decompose_oneway(cube)?;
    complete(cube, &mut d)?;
    Ok(d)
}

/// Fills in the two-way and residual components of a one-way decomposition.
pub fn complete(cube: &Array3<f64>, d: &mut EmprDecomposition) -> Result<(), EmprError> {
    let oneways = d.oneways();
    let twoway = twoway_components(cube, &d.weights, &d.supports, d.g0, &oneways)?;
    d.residual = Some(residual_component(
        cube,
        &d.supports,
        d.g0,
        &oneways,
        &twoway,
    ));
    d.twoway = Some(twoway);
    Ok(())
}

/// Sum of all eight terms.
pub fn reconstruct(d: &EmprDecomposition) -> Result<Array3<f64>, EmprError> {
    let (twoway, residual) = match (&d.twoway, &d.residual) {
        (Some(t), Some(r)) => (t, r),
        _ => return Err(EmprError::Incomplete),
    };
    let mut out = residual.clone();
    for term in lower_terms(d.dims(), &d.supports, d.g0, &d.oneways(), twoway) {
        out += &term;
    }
    Ok(out)
}
