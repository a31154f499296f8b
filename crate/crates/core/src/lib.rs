//! Classification of gene-network variant combinations.
//!
//! Each sample's genes are rendered as binary chaos game representation
//! rasters and stacked into a cube. The cube's one-way EMPR components form
//! a feature vector, which an RBF-kernel SVM classifies as control or
//! patient. [`datagen`] produces synthetic cohorts and [`pipeline`] runs the
//! repeated train/test experiments end to end.

pub mod cgr;
pub mod classify;
pub mod datagen;
pub mod empr;
pub mod features;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod seq;

pub use cgr::{build_cube, cgr_trajectory, rasterize, CgrCube, CgrImage, CgrPoint, Resolution};
pub use datagen::{generate_cohort, Cohort, CohortSpec};
pub use empr::{decompose_oneway, EmprDecomposition};
pub use features::{FeatureTable, FeatureVector};
pub use seq::{GeneSequence, Label, NetworkSample, Nucleotide};
