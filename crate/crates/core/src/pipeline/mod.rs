//! Repeated train/test experiments: cohort → features → splits → reports.
//!
//! Features are computed once per cohort and cached as a CSV next to a key
//! file describing what produced them; every run only indexes into that
//! table. Each (training size, run) pair draws its split from its own
//! sub-seed, so adding or removing schedule entries never changes the others.

mod report;

pub use report::{emit_report, Formats, ACCURACY_COLUMNS, RUN_COLUMNS};

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cgr::{CgrError, Resolution};
use crate::classify::{
    apply_scaling, fit_scaling, fit_svm_with, grid_search_cv, default_grid, ClassifyError, FitOptions,
};

use crate::datagen::{
    generate_cohort, generate_references, CohortManifest, CohortSpec, DatagenError, PathogenicLists,
};
use crate::features::{FeatureError, FeatureTable};
use crate::metrics::{
    confusion, overall_accuracy, roc_and_auc, summary_metrics, ConfusionMatrix, MetricsError,
    RocCurve,
};
use crate::seed::{derive_seed, rng_from};
use crate::seq::{GeneSequence, Label};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("not enough samples: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cgr(#[from] CgrError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Synthetic cohort description: random references plus the variant protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    #[serde(default = "d_genes")]
    pub genes: usize,
    #[serde(default = "d_min_length")]
    pub min_length: usize,
    #[serde(default = "d_max_length")]
    pub max_length: usize,
    pub n_control: usize,
    pub n_patient: usize,
    #[serde(default = "d_maf_poly")]
    pub maf_polymorphic: f64,
    #[serde(default = "d_maf_control")]
    pub maf_pathogenic_control: f64,
    #[serde(default = "d_maf_patient")]
    pub maf_pathogenic_patient: f64,
    #[serde(default = "d_poly")]
    pub poly_interval: usize,
    #[serde(default = "d_patho")]
    pub patho_interval: usize,
    #[serde(default)]
    pub pathogenic_lists: PathogenicLists,
}

fn d_genes() -> usize {
    31
}
fn d_min_length() -> usize {
    10_000
}
fn d_max_length() -> usize {
    50_000
}
fn d_maf_poly() -> f64 {
    0.40
}
fn d_maf_control() -> f64 {
    0.25
}
fn d_maf_patient() -> f64 {
    0.30
}
fn d_poly() -> usize {
    100
}
fn d_patho() -> usize {
    200
}
fn d_resolution() -> usize {
    700
}
fn d_runs() -> usize {
    100
}
fn d_folds() -> usize {
    5
}
fn d_name() -> String {
    "cohort".into()
}

impl GenerateSpec {
    pub fn new(
        genes: usize,
        min_length: usize,
        max_length: usize,
        n_control: usize,
        n_patient: usize,
    ) -> Self {
        GenerateSpec {
            genes,
            min_length,
            max_length,
            n_control,
            n_patient,
            maf_polymorphic: d_maf_poly(),
            maf_pathogenic_control: d_maf_control(),
            maf_pathogenic_patient: d_maf_patient(),
            poly_interval: d_poly(),
            patho_interval: d_patho(),
            pathogenic_lists: PathogenicLists::default(),
        }
    }

    /// Cohort spec over freshly generated references. References and variants
    /// use separate sub-seeds of `seed`.
    pub fn cohort_spec(&self, seed: u64) -> Result<CohortSpec, DatagenError> {
        let refs = generate_references(
            self.genes,
            self.min_length,
            self.max_length,
            derive_seed(seed, &[1]),
        )?;
        let spec = self.cohort_spec_from(refs, seed);
        spec.validate()?;
        Ok(spec)
    }

    /// Cohort spec over given references; the gene count and length fields
    /// are ignored.
    pub fn cohort_spec_from(&self, references: Vec<GeneSequence>, seed: u64) -> CohortSpec {
        let mut spec = CohortSpec::new(
            references,
            self.n_control,
            self.n_patient,
            derive_seed(seed, &[2]),
        );
        spec.maf_polymorphic = self.maf_polymorphic;
        spec.maf_pathogenic_control = self.maf_pathogenic_control;
        spec.maf_pathogenic_patient = self.maf_pathogenic_patient;
        spec.poly_interval = self.poly_interval;
        spec.patho_interval = self.patho_interval;
        spec.pathogenic_lists = self.pathogenic_lists;
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Generate(GenerateSpec),
    CohortDir { path: PathBuf },
}

/// Balanced: per-class training counts. Imbalanced: per-group fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Schedule {
    Balanced { sizes: Vec<usize> },
    Imbalanced { ratios: Vec<f64> },
}

impl Schedule {
    pub fn standard_balanced() -> Self {
        Schedule::Balanced {
            sizes: vec![10, 20, 30, 40, 50],
        }
    }

    pub fn standard_imbalanced() -> Self {
        Schedule::Imbalanced {
            ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }

    fn mode(&self) -> &'static str {
        match self {
            Schedule::Balanced { .. } => "balanced",
            Schedule::Imbalanced { .. } => "imbalanced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset name written into the per-run table.
    #[serde(default = "d_name")]
    pub name: String,
    pub source: DataSource,
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    pub schedule: Schedule,
    #[serde(default = "d_runs")]
    pub runs: usize,
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default = "d_folds")]
    pub folds: usize,
    /// Permutation baseline: labels are shuffled once before any split.
    #[serde(default)]
    pub shuffle_labels: bool,
    /// Penalize each class by `n / (2 n_class)` times `c`; off by default.
    #[serde(default)]
    pub class_weighted: bool,
    /// Feature cache location; defaults to `<output>/features.csv`.
    #[serde(default)]
    pub feature_cache: Option<PathBuf>,
}

impl ExperimentConfig {
    /// 31 genes of 10⁴ bases, resolution 128, 100+100 samples, 20 runs.
    pub fn desk(seed: u64, output: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            name: "desk".into(),
            source: DataSource::Generate(GenerateSpec::new(31, 10_000, 10_000, 100, 100)),
            resolution: 128,
            schedule: Schedule::standard_balanced(),
            runs: 20,
            seed,
            output: output.into(),
            folds: 5,
            shuffle_labels: false,
            class_weighted: false,
            feature_cache: None,
        }
    }

    /// 31 genes of 10⁴–5·10⁴ bases, resolution 700, 400+400 samples.
    pub fn full(seed: u64, output: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            name: "full".into(),
            source: DataSource::Generate(GenerateSpec::new(31, 10_000, 50_000, 400, 400)),
            resolution: 700,
            runs: 100,
            ..Self::desk(seed, output)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let config: Self =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        Resolution::new(self.resolution)?;
        match &self.schedule {
            Schedule::Balanced { sizes } => {
                if sizes.is_empty() || sizes.contains(&0) {
                    return bad("balanced schedule needs nonzero sizes");
                }
            }
            Schedule::Imbalanced { ratios } => {
                if ratios.is_empty() || ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
                    return bad("imbalanced ratios must lie in (0, 1)");
                }
            }
        }
        if let DataSource::Generate(g) = &self.source {
            if g.genes == 0 || g.min_length == 0 || g.min_length > g.max_length {
                return bad("generate: need genes ≥ 1 and 1 ≤ min_length ≤ max_length");
            }
        }
        Ok(())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.feature_cache
            .clone()
            .unwrap_or_else(|| self.output.join("features.csv"))
    }
}

/// What produced a feature table; a cache is reused only when this matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheKey {
    source: DataSource,
    resolution: usize,
    seed: u64,
}

fn cache_key_path(cache: &Path) -> PathBuf {
    let mut name = cache.file_name().unwrap_or_default().to_os_string();
    name.push(".key.json");
    cache.with_file_name(name)
}

/// Computes the feature table of the configured cohort without touching the
/// cache.
pub fn compute_features(config: &ExperimentConfig) -> Result<FeatureTable, PipelineError> {
    let res = Resolution::new(config.resolution)?;
    match &config.source {
        DataSource::Generate(g) => {
            let cohort = generate_cohort(&g.cohort_spec(config.seed)?)?;
            Ok(FeatureTable::build(cohort.len(), res, |i| {
                Ok(cohort.sample(i))
            })?)
        }
        DataSource::CohortDir { path } => {
            let manifest = CohortManifest::load(path)?;
            Ok(FeatureTable::build(manifest.samples.len(), res, |i| {
                manifest
                    .read_sample(path, i)
                    .map_err(|e| FeatureError::Source(e.to_string()))
            })?)
        }
    }
}

/// Loads the cached feature table when its key matches `config`, otherwise
/// computes and writes it.
pub fn load_or_build_features(config: &ExperimentConfig) -> Result<FeatureTable, PipelineError> {
    let cache = config.cache_path();
    let key_path = cache_key_path(&cache);
    let key = CacheKey {
        source: config.source.clone(),
        resolution: config.resolution,
        seed: config.seed,
    };
    let key_text = serde_json::to_string_pretty(&key).expect("key serializes") + "\n";
    if fs::read_to_string(&key_path).ok().as_deref() == Some(key_text.as_str()) {
        if let Ok(text) = fs::read_to_string(&cache) {
            if let Ok(table) = FeatureTable::from_csv(&text) {
                return Ok(table);
            }
        }
    }
    let table = compute_features(config)?;
    if let Some(dir) = cache.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&cache, table.to_csv()?).map_err(io_err(&cache))?;
    fs::write(&key_path, key_text).map_err(io_err(&key_path))?;
    Ok(table)
}

/// Mean over the defined values of one metric, with the skipped count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetric {
    pub mean: Option<f64>,
    pub undefined: usize,
}

impl MeanMetric {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (mut sum, mut n, mut undefined) = (0.0, 0usize, 0usize);
        for v in values {
            match v {
                Some(v) => {
                    sum += v;
                    n += 1;
                }
                None => undefined += 1,
            }
        }
        MeanMetric {
            mean: (n > 0).then(|| sum / n as f64),
            undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub c: f64,
    pub gamma: f64,
    /// Percent.
    pub cv_accuracy: f64,
    /// Percent.
    pub oa: f64,
    pub confusion: ConfusionMatrix,
    pub precision: Option<f64>,
    pub npv: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub mcc: Option<f64>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    /// `"50"` in balanced mode, `"patients/controls"` in imbalanced mode.
    pub label: String,
    pub ratio: Option<f64>,
    pub train_patient: usize,
    pub train_control: usize,
    pub mean_oa: f64,
    pub mean_cv_accuracy: f64,
    pub precision: MeanMetric,
    pub npv: MeanMetric,
    pub recall: MeanMetric,
    pub specificity: MeanMetric,
    pub mcc: MeanMetric,
    pub mean_auc: f64,
    /// ROC of run 0.
    pub roc: RocCurve,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub mode: String,
    pub shuffled_labels: bool,
    pub samples: usize,
    pub sizes: Vec<SizeReport>,
}

/// Everything a run needs from the cohort.
pub struct ExperimentData {
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub features: Array2<f64>,
}

impl ExperimentData {
    pub fn from_table(table: &FeatureTable) -> Result<Self, PipelineError> {
        let width = table.width();
        let labels = table
            .rows
            .iter()
            .map(|r| {
                r.label.ok_or_else(|| {
                    PipelineError::Config(format!("sample '{}' has no label", r.sample_id))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut features = Array2::zeros((table.len(), width));
        for (mut dst, row) in features.outer_iter_mut().zip(&table.rows) {
            dst.assign(&ndarray::ArrayView1::from(&row.values[..]));
        }
        Ok(ExperimentData {
            ids: table.rows.iter().map(|r| r.sample_id.clone()).collect(),
            labels,
            features,
        })
    }

    fn members(&self, label: Label) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    /// Permutes the labels among samples with a seeded shuffle.
    pub fn shuffle_labels(&mut self, seed: u64) {
        self.labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
}

/// One training-size entry of a schedule, resolved to per-group counts.
#[derive(Debug, Clone, PartialEq)]
struct Step {
    label: String,
    ratio: Option<f64>,
    patient: usize,
    control: usize,
    seed_path: Vec<u64>,
}

fn steps(
    schedule: &Schedule,
    n_patient: usize,
    n_control: usize,
) -> Result<Vec<Step>, PipelineError> {
    let out: Vec<Step> = match schedule {
        Schedule::Balanced { sizes } => sizes
            .iter()
            .map(|&s| Step {
                label: s.to_string(),
                ratio: None,
                patient: s,
                control: s,
                seed_path: vec![s as u64],
            })
            .collect(),
        Schedule::Imbalanced { ratios } => ratios
            .iter()
            .map(|&r| {
                let p = (r * n_patient as f64).round() as usize;
                let c = (r * n_control as f64).round() as usize;
                Step {
                    label: format!("{p}/{c}"),
                    ratio: Some(r),
                    patient: p,
                    control: c,
                    seed_path: vec![p as u64, c as u64],
                }
            })
            .collect(),
    };
    for s in &out {
        // Each group needs a test member and enough training members per fold.
        if s.patient >= n_patient || s.control >= n_control {
            return Err(PipelineError::Insufficient(format!(
                "training {} patients / {} controls leaves no test samples from {n_patient} / {n_control}",
                s.patient, s.control
            )));
        }
    }
    Ok(out)
}

/// Runs the configured experiment: features (cached), then every schedule
/// entry. Writes nothing but the feature cache.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    config.validate()?;
    let table = load_or_build_features(config)?;
    let mut data = ExperimentData::from_table(&table)?;
    run_on_data(config, &mut data)
}

/// [`run_experiment`] requiring a balanced schedule.
pub fn run_balanced_experiment(
    config: &ExperimentConfig,
) -> Result<ExperimentReport, PipelineError> {
    if !matches!(config.schedule, Schedule::Balanced { .. }) {
        return Err(PipelineError::Config("expected a balanced schedule".into()));
    }
    run_experiment(config)
}

/// [`run_experiment`] requiring an imbalanced schedule.
pub fn run_imbalanced_experiment(
    config: &ExperimentConfig,
) -> Result<ExperimentReport, PipelineError> {
    if !matches!(config.schedule, Schedule::Imbalanced { .. }) {
        return Err(PipelineError::Config(
            "expected an imbalanced schedule".into(),
        ));
    }
    run_experiment(config)
}

/// Runs the schedule on features already in memory.
pub fn run_on_data(
    config: &ExperimentConfig,
    data: &mut ExperimentData,
) -> Result<ExperimentReport, PipelineError> {
    config.validate()?;
    if config.shuffle_labels {
        data.shuffle_labels(derive_seed(config.seed, &[0x5_4FF1E]));
    }
    let patients = data.members(Label::Patient);
    let controls = data.members(Label::Control);
    let steps = steps(&config.schedule, patients.len(), controls.len())?;
    let mut sizes = Vec::with_capacity(steps.len());
    for step in &steps {
        let runs = (0..config.runs)
            .into_par_iter()
            .map(|run| single_run(config, data, &patients, &controls, step, run))
            .collect::<Result<Vec<_>, _>>()?;
        let roc = runs[0].1.clone();
        let runs: Vec<RunRecord> = runs.into_iter().map(|(r, _)| r).collect();
        sizes.push(summarize(step, roc, runs));
    }
    Ok(ExperimentReport {
        name: config.name.clone(),
        mode: config.schedule.mode().into(),
        shuffled_labels: config.shuffle_labels,
        samples: data.labels.len(),
        sizes,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn summarize(step: &Step, roc: RocCurve, runs: Vec<RunRecord>) -> SizeReport {
    SizeReport {
        label: step.label.clone(),
        ratio: step.ratio,
        train_patient: step.patient,
        train_control: step.control,
        mean_oa: mean(runs.iter().map(|r| r.oa)),
        mean_cv_accuracy: mean(runs.iter().map(|r| r.cv_accuracy)),
        precision: MeanMetric::of(runs.iter().map(|r| r.precision)),
        npv: MeanMetric::of(runs.iter().map(|r| r.npv)),
        recall: MeanMetric::of(runs.iter().map(|r| r.recall)),
        specificity: MeanMetric::of(runs.iter().map(|r| r.specificity)),
        mcc: MeanMetric::of(runs.iter().map(|r| r.mcc)),
        mean_auc: mean(runs.iter().map(|r| r.auc)),
        roc,
        runs,
    }
}

fn single_run(
    config: &ExperimentConfig,
    data: &ExperimentData,
    patients: &[usize],
    controls: &[usize],
    step: &Step,
    run: usize,
) -> Result<(RunRecord, RocCurve), PipelineError> {
    let mut path = step.seed_path.clone();
    path.push(run as u64);
    let seed = derive_seed(config.seed, &path);
    let mut rng = rng_from(seed, &[0]);

    let mut train: Vec<usize> = Vec::with_capacity(step.patient + step.control);
    train.extend(patients.choose_multiple(&mut rng, step.patient));
    train.extend(controls.choose_multiple(&mut rng, step.control));
    train.sort_unstable();
    let mut in_train = vec![false; data.labels.len()];
    for &i in &train {
        in_train[i] = true;
    }
    let test: Vec<usize> = (0..data.labels.len()).filter(|&i| !in_train[i]).collect();

    let raw_train = data.features.select(Axis(0), &train);
    let scaling = fit_scaling(raw_train.view())?;
    let x_train = apply_scaling(&scaling, raw_train.view())?;
    let x_test = apply_scaling(&scaling, data.features.select(Axis(0), &test).view())?;
    let y_train: Vec<Label> = train.iter().map(|&i| data.labels[i]).collect();
    let y_test: Vec<Label> = test.iter().map(|&i| data.labels[i]).collect();

    let options = FitOptions {
        class_weights: config.class_weighted.then(|| {
            let n = y_train.len() as f64;
            let np = step.patient as f64;
            let nc = step.control as f64;
            (n / (2.0 * np), n / (2.0 * nc))
        }),
        ..FitOptions::default()
    };
    let grid = default_grid();
    let cv = grid_search_cv(
        x_train.view(),
        &y_train,
        config.folds,
        &grid,
        &grid,
        derive_seed(seed, &[1]),
        &options,
    )?;
    let model = fit_svm_with(x_train.view(), &y_train, cv.best, &options)?;

    let scores = x_test
        .outer_iter()
        .map(|row| model.decision_value(row.as_slice().expect("standard layout")))
        .collect::<Result<Vec<_>, _>>()?;
    let predictions: Vec<Label> = scores.iter().map(|&s| Label::from_sign(s)).collect();
    let cm = confusion(&predictions, &y_test)?;
    let m = summary_metrics(&cm);
    let roc = roc_and_auc(&scores, &y_test)?;
    let record = RunRecord {
        run,
        seed,
        train_ids: train.iter().map(|&i| data.ids[i].clone()).collect(),
        test_ids: test.iter().map(|&i| data.ids[i].clone()).collect(),
        c: cv.best.c,
        gamma: cv.best.gamma,
        cv_accuracy: 100.0 * cv.cv_accuracy,
        oa: overall_accuracy(&cm)?,
        confusion: cm,
        precision: m.precision,
        npv: m.npv,
        recall: m.recall,
        specificity: m.specificity,
        mcc: m.mcc,
        auc: roc.auc,
    };
    Ok((record, roc))
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(rx.iter().copied()), mean(ry.iter().copied()));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
