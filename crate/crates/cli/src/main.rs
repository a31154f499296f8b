//! `geneteam` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use geneteam::cgr::{build_cube, CgrCube, Resolution};
use geneteam::classify::{
    fit_scaling, grid_search_cv, default_grid, train, FitOptions, SvmHyperparams, SvmModel,
};
use geneteam::datagen::{
    cohort_audit, generate_cohort, write_cohort_dir, CohortManifest, PathogenicLists,
};
use geneteam::empr::{decompose_full, decompose_oneway, reconstruct};
use geneteam::features::{FeatureTable, FeatureVector};
use geneteam::metrics::{confusion, overall_accuracy, roc_and_auc, summary_metrics};
use geneteam::pipeline::{emit_report, run_experiment, ExperimentConfig, Formats, GenerateSpec};
use geneteam::seq::{parse_fasta, Label};

#[derive(Parser)]
#[command(
    name = "geneteam",
    version,
    about = "Gene-network variant classification via CGR, EMPR and SVM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic control/patient cohort directory.
    Datagen(DatagenArgs),
    /// Render each sample of a cohort as a CGR cube file.
    Cubes(CubesArgs),
    /// Compute the EMPR feature table of a cohort or of a cube directory.
    Features(FeaturesArgs),
    /// Train an RBF SVM on a feature table.
    Train(TrainArgs),
    /// Evaluate a trained model on a labeled feature table.
    Eval(EvalArgs),
    /// Run a full repeated train/test experiment from a config file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct DatagenArgs {
    /// Output cohort directory.
    #[arg(long)]
    out: PathBuf,
    /// FASTA of reference genes; random references are generated when absent.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 31)]
    genes: usize,
    #[arg(long, default_value_t = 10_000)]
    min_length: usize,
    #[arg(long, default_value_t = 50_000)]
    max_length: usize,
    #[arg(long, default_value_t = 400)]
    n_control: usize,
    #[arg(long, default_value_t = 400)]
    n_patient: usize,
    #[arg(long, default_value_t = 0.40)]
    maf_polymorphic: f64,
    #[arg(long, default_value_t = 0.25)]
    maf_pathogenic_control: f64,
    #[arg(long, default_value_t = 0.30)]
    maf_pathogenic_patient: f64,
    #[arg(long, default_value_t = 100)]
    poly_interval: usize,
    #[arg(long, default_value_t = 200)]
    patho_interval: usize,
    /// Whether patients and controls draw separate pathogenic position lists.
    #[arg(long, value_enum, default_value_t = ListMode::PerGroup)]
    pathogenic_lists: ListMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListMode {
    Shared,
    PerGroup,
}

#[derive(Args)]
struct CubesArgs {
    #[arg(long)]
    cohort: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 700)]
    resolution: usize,
    /// Also export gene slice K (0-based) of every cube as a PGM image.
    #[arg(long, value_name = "K")]
    pgm_slice: Option<usize>,
    /// Only the first N samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Accepted for uniformity; rendering uses no randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Depth {
    /// One-way components only.
    OneWay,
    /// All eight components; reports each sample's reconstruction error.
    Full,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Cohort directory (rendered at --resolution).
    #[arg(long, conflicts_with = "cubes", required_unless_present = "cubes")]
    cohort: Option<PathBuf>,
    /// Directory written by `cubes`.
    #[arg(long)]
    cubes: Option<PathBuf>,
    #[arg(long, default_value_t = 700)]
    resolution: usize,
    #[arg(long, value_enum, default_value_t = Depth::OneWay)]
    depth: Depth,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Accepted for uniformity; feature extraction uses no randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
    /// Fixed c; with --gamma, skips the grid search.
    #[arg(long, requires = "gamma")]
    c: Option<f64>,
    #[arg(long, requires = "c")]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Penalize classes inversely to their frequency.
    #[arg(long)]
    class_weighted: bool,
    /// Seeds the cross-validation folds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Write the metrics JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for uniformity; evaluation uses no randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML config; required unless --preset is given.
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "config")]
    preset: Option<Preset>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the config's run count.
    #[arg(long)]
    runs: Option<usize>,
    /// Permutation baseline: shuffle labels before splitting.
    #[arg(long)]
    shuffle_labels: bool,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

/// Input data problem; exits with 2.
struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, DataError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Datagen(a) => datagen(a),
        Command::Cubes(a) => cubes(a),
        Command::Features(a) => features(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn datagen(a: DatagenArgs) -> Result<()> {
    let generate = GenerateSpec {
        genes: a.genes,
        min_length: a.min_length,
        max_length: a.max_length,
        n_control: a.n_control,
        n_patient: a.n_patient,
        maf_polymorphic: a.maf_polymorphic,
        maf_pathogenic_control: a.maf_pathogenic_control,
        maf_pathogenic_patient: a.maf_pathogenic_patient,
        poly_interval: a.poly_interval,
        patho_interval: a.patho_interval,
        pathogenic_lists: match a.pathogenic_lists {
            ListMode::Shared => PathogenicLists::Shared,
            ListMode::PerGroup => PathogenicLists::PerGroup,
        },
    };
    let spec = match &a.reference {
        None => generate.cohort_spec(a.seed)?,
        Some(path) => {
            let refs = parse_fasta(&read(path)?)?;
            let spec = generate.cohort_spec_from(refs, a.seed);
            spec.validate()?;
            spec
        }
    };
    let cohort = generate_cohort(&spec)?;
    let audit = cohort_audit(&cohort)?;
    if !audit.is_exact() {
        return Err(DataError(format!(
            "{} sites deviate from the requested carrier counts",
            audit.deviations
        )));
    }
    write_cohort_dir(&cohort, &a.out)?;
    eprintln!(
        "wrote {} samples ({} control, {} patient) over {} genes to {}",
        cohort.len(),
        a.n_control,
        a.n_patient,
        cohort.genes.len(),
        a.out.display()
    );
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DataError(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

const CUBE_INDEX: &str = "index.csv";

fn cubes(a: CubesArgs) -> Result<()> {
    let res = Resolution::new(a.resolution)?;
    let manifest = CohortManifest::load(&a.cohort)?;
    fs::create_dir_all(&a.out).map_err(|e| DataError(format!("{}: {e}", a.out.display())))?;
    let count = a
        .limit
        .unwrap_or(manifest.samples.len())
        .min(manifest.samples.len());
    let mut index = String::from("sample_id,label,file\n");
    for i in 0..count {
        let sample = manifest.read_sample(&a.cohort, i)?;
        let cube = build_cube(&sample, res)?;
        let file = format!("{}.cube", sample.sample_id);
        let f = fs::File::create(a.out.join(&file))?;
        cube.write_binary(BufWriter::new(f))?;
        if let Some(k) = a.pgm_slice {
            if k >= cube.dims().2 {
                return Err(DataError(format!(
                    "slice {k} out of range for {} genes",
                    cube.dims().2
                )));
            }
            let f = fs::File::create(a.out.join(format!("{}_slice{k}.pgm", sample.sample_id)))?;
            cube.slice(k).write_pgm(BufWriter::new(f))?;
        }
        index.push_str(&format!(
            "{},{},{file}\n",
            sample.sample_id,
            sample.label.as_str()
        ));
    }
    write(&a.out.join(CUBE_INDEX), &index)?;
    eprintln!("wrote {count} cubes to {}", a.out.display());
    Ok(())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let mut items: Vec<(String, Option<Label>, CgrCube)> = Vec::new();
    if let Some(dir) = &a.cubes {
        for (n, line) in read(&dir.join(CUBE_INDEX))?.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(DataError(format!(
                    "{CUBE_INDEX} line {}: expected 3 columns",
                    n + 1
                )));
            }
            let label = if cols[1].is_empty() {
                None
            } else {
                Some(
                    Label::parse(cols[1])
                        .ok_or_else(|| DataError(format!("unknown label '{}'", cols[1])))?,
                )
            };
            let f = fs::File::open(dir.join(cols[2]))?;
            items.push((
                cols[0].to_string(),
                label,
                CgrCube::read_binary(std::io::BufReader::new(f))?,
            ));
        }
    } else if let Some(dir) = &a.cohort {
        let res = Resolution::new(a.resolution)?;
        let manifest = CohortManifest::load(dir)?;
        for i in 0..manifest.samples.len() {
            let sample = manifest.read_sample(dir, i)?;
            items.push((
                sample.sample_id.clone(),
                Some(sample.label),
                build_cube(&sample, res)?,
            ));
        }
    }
    let mut rows = Vec::with_capacity(items.len());
    let mut worst: f64 = 0.0;
    for (id, label, cube) in &items {
        let d = match a.depth {
            Depth::OneWay => decompose_oneway(cube)?,
            Depth::Full => {
                let dense = cube.to_dense();
                let d = decompose_full(&dense)?;
                let back = reconstruct(&d)?;
                let err = (&back - &dense)
                    .mapv(f64::abs)
                    .fold(0.0f64, |m, &v| m.max(v));
                worst = worst.max(err);
                d
            }
        };
        rows.push(FeatureVector::from_decomposition(id.clone(), *label, &d));
    }
    let table = FeatureTable { rows };
    write(&a.out, &table.to_csv()?)?;
    if let Depth::Full = a.depth {
        eprintln!("max reconstruction error {worst:e}");
    }
    eprintln!(
        "wrote {} feature rows of width {} to {}",
        table.len(),
        table.width(),
        a.out.display()
    );
    Ok(())
}

fn load_table(path: &Path) -> Result<(Vec<String>, Vec<Option<Label>>, Array2<f64>)> {
    let table = FeatureTable::from_csv(&read(path)?)?;
    if table.is_empty() {
        return Err(DataError(format!("{}: no rows", path.display())));
    }
    let mut x = Array2::zeros((table.len(), table.width()));
    for (mut dst, row) in x.outer_iter_mut().zip(&table.rows) {
        dst.assign(&ndarray::ArrayView1::from(&row.values[..]));
    }
    let ids = table.rows.iter().map(|r| r.sample_id.clone()).collect();
    let labels = table.rows.iter().map(|r| r.label).collect();
    Ok((ids, labels, x))
}

fn require_labels(labels: Vec<Option<Label>>, ids: &[String]) -> Result<Vec<Label>> {
    labels
        .into_iter()
        .zip(ids)
        .map(|(l, id)| l.ok_or_else(|| DataError(format!("sample '{id}' has no label"))))
        .collect()
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let (ids, labels, x) = load_table(&a.features)?;
    let labels = require_labels(labels, &ids)?;
    let options = FitOptions {
        class_weights: a.class_weighted.then(|| {
            let n = labels.len() as f64;
            let np = labels.iter().filter(|&&l| l == Label::Patient).count() as f64;
            (n / (2.0 * np), n / (2.0 * (n - np)))
        }),
        ..FitOptions::default()
    };
    let params = match (a.c, a.gamma) {
        (Some(c), Some(gamma)) => SvmHyperparams { c, gamma },
        _ => {
            let t = fit_scaling(x.view())?;
            let scaled = geneteam::classify::apply_scaling(&t, x.view())?;
            let grid = default_grid();
            let cv = grid_search_cv(
                scaled.view(),
                &labels,
                a.folds,
                &grid,
                &grid,
                a.seed,
                &options,
            )?;
            eprintln!(
                "grid search: c={} gamma={} cv accuracy {:.2}%",
                cv.best.c,
                cv.best.gamma,
                100.0 * cv.cv_accuracy
            );
            cv.best
        }
    };
    let model = train(x.view(), &labels, params, &options)?;
    write(&a.out, &model.to_json())?;
    eprintln!(
        "trained on {} samples: {} support vectors, converged: {}",
        labels.len(),
        model.support_vectors.len(),
        model.converged
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = SvmModel::from_json(&read(&a.model)?)?;
    let (ids, labels, x) = load_table(&a.features)?;
    let labels = require_labels(labels, &ids)?;
    let scores = x
        .outer_iter()
        .map(|r| model.decision_value_raw(&r.to_vec()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let predictions: Vec<Label> = scores.iter().map(|&s| Label::from_sign(s)).collect();
    let cm = confusion(&predictions, &labels)?;
    let auc = roc_and_auc(&scores, &labels).ok().map(|r| r.auc);
    let out = serde_json::json!({
        "samples": labels.len(),
        "confusion": cm,
        "overall_accuracy": overall_accuracy(&cm)?,
        "metrics": summary_metrics(&cm),
        "auc": auc,
    });
    let text = serde_json::to_string_pretty(&out)? + "\n";
    match &a.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut config = match (&a.config, a.preset) {
        (Some(path), _) => ExperimentConfig::from_toml(&read(path)?)?,
        (None, Some(Preset::Desk)) => ExperimentConfig::desk(a.seed.unwrap_or(0), "desk-report"),
        (None, Some(Preset::Full)) => ExperimentConfig::full(a.seed.unwrap_or(0), "full-report"),
        (None, None) => unreachable!("clap requires one of --config / --preset"),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(out) = a.output {
        config.output = out;
    }
    if let Some(runs) = a.runs {
        config.runs = runs;
    }
    config.shuffle_labels |= a.shuffle_labels;
    config.validate()?;
    if a.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let report = run_experiment(&config)?;
    emit_report(&report, &config, &config.output, Formats::default())?;
    for s in &report.sizes {
        eprintln!(
            "{:>8}: OA {:6.2}%  CV {:6.2}%  AUC {:.4}",
            s.label, s.mean_oa, s.mean_cv_accuracy, s.mean_auc
        );
    }
    eprintln!("report written to {}", config.output.display());
    Ok(())
}
