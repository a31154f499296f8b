//! Report files: CSV tables, SVG plots and a manifest.
//!
//! Every number is written with a fixed format, so emitting the same report
//! twice gives byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{io_err, ExperimentConfig, ExperimentReport, MeanMetric, PipelineError};

/// Header of `runs.csv`, one row per (dataset, training size, run).
pub const RUN_COLUMNS: [&str; 21] = [
    "dataset",
    "training_size",
    "run",
    "seed",
    "train_patient",
    "train_control",
    "test_count",
    "c",
    "gamma",
    "cv_accuracy",
    "oa",
    "tp",
    "fp",
    "tn",
    "fn",
    "precision",
    "npv",
    "recall",
    "specificity",
    "mcc",
    "auc",
];

/// Header of `accuracy.csv`.
pub const ACCURACY_COLUMNS: [&str; 5] = [
    "training_size",
    "train_patient",
    "train_control",
    "mean_oa",
    "mean_cv_accuracy",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            csv: true,
            svg: true,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    master_seed: u64,
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn file_stem(label: &str) -> String {
    label.replace('/', "-")
}

/// Writes the report into `dir` and returns the written paths in order.
///
/// Always: `report.json`, `manifest.json`. CSV: `runs.csv`, `summary.csv`
/// (metrics by training size), `accuracy.csv`, `roc_<size>.csv`. SVG:
/// `accuracy.svg`, `roc_<size>.svg`.
pub fn emit_report(
    report: &ExperimentReport,
    config: &ExperimentConfig,
    dir: &Path,
    formats: Formats,
) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files: Vec<(String, String)> = Vec::new();
    files.push((
        "report.json".into(),
        serde_json::to_string_pretty(report).expect("report serializes") + "\n",
    ));
    if formats.csv {
        files.push(("runs.csv".into(), runs_csv(report)));
        files.push(("summary.csv".into(), summary_csv(report)));
        files.push(("accuracy.csv".into(), accuracy_csv(report)));
        for size in &report.sizes {
            let mut csv = String::from("fpr,tpr\n");
            for (x, y) in &size.roc.points {
                writeln!(csv, "{x},{y}").unwrap();
            }
            files.push((format!("roc_{}.csv", file_stem(&size.label)), csv));
        }
    }
    if formats.svg {
        files.push(("accuracy.svg".into(), accuracy_svg(report)));
        for size in &report.sizes {
            files.push((
                format!("roc_{}.svg", file_stem(&size.label)),
                roc_svg(&size.label, &size.roc.points, size.roc.auc),
            ));
        }
    }
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: config.seed,
        config,
        files: files.iter().map(|(n, _)| n.clone()).collect(),
    };
    files.push((
        "manifest.json".into(),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    ));

    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn runs_csv(report: &ExperimentReport) -> String {
    let mut out = RUN_COLUMNS.join(",") + "\n";
    for size in &report.sizes {
        for r in &size.runs {
            let cm = &r.confusion;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                report.name,
                size.label,
                r.run,
                r.seed,
                size.train_patient,
                size.train_control,
                r.test_ids.len(),
                r.c,
                r.gamma,
                r.cv_accuracy,
                r.oa,
                cm.tp,
                cm.fp,
                cm.tn,
                cm.fn_,
                opt(r.precision),
                opt(r.npv),
                opt(r.recall),
                opt(r.specificity),
                opt(r.mcc),
                r.auc
            )
            .unwrap();
        }
    }
    out
}

/// Metrics as rows, training sizes as columns. Undefined-run counts follow
/// in `<metric> undefined` rows when any run skipped a metric.
fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("metric");
    for size in &report.sizes {
        write!(out, ",{}", size.label).unwrap();
    }
    out.push('\n');
    let rows: [(&str, fn(&super::SizeReport) -> MeanMetric); 5] = [
        ("True Neg. Rate", |s| s.npv),
        ("True Pos. Rate (precision)", |s| s.precision),
        ("Recall", |s| s.recall),
        ("Specificity", |s| s.specificity),
        ("MCC", |s| s.mcc),
    ];
    for (name, get) in rows {
        out.push_str(name);
        for size in &report.sizes {
            write!(out, ",{}", opt(get(size).mean)).unwrap();
        }
        out.push('\n');
    }
    for (name, get) in rows {
        if report.sizes.iter().any(|s| get(s).undefined > 0) {
            write!(out, "{name} undefined").unwrap();
            for size in &report.sizes {
                write!(out, ",{}", get(size).undefined).unwrap();
            }
            out.push('\n');
        }
    }
    let scalar: [(&str, fn(&super::SizeReport) -> f64); 3] = [
        ("Overall accuracy", |s| s.mean_oa),
        ("CV accuracy", |s| s.mean_cv_accuracy),
        ("AUC", |s| s.mean_auc),
    ];
    for (name, get) in scalar {
        out.push_str(name);
        for size in &report.sizes {
            write!(out, ",{}", get(size)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn accuracy_csv(report: &ExperimentReport) -> String {
    let mut out = ACCURACY_COLUMNS.join(",") + "\n";
    for s in &report.sizes {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.label, s.train_patient, s.train_control, s.mean_oa, s.mean_cv_accuracy
        )
        .unwrap();
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Plot {
    svg: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Plot {
    fn new(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Self {
        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            escape(title)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + (W - LEFT - RIGHT) / 2.0,
            H - 15.0,
            escape(x_label)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="18" y="{0:.1}" text-anchor="middle" transform="rotate(-90 18 {0:.1})">{1}</text>"#,
            TOP + (H - TOP - BOTTOM) / 2.0,
            escape(y_label)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - LEFT - RIGHT,
            H - TOP - BOTTOM
        )
        .unwrap();
        Plot {
            svg,
            x_range,
            y_range,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        H - BOTTOM - (y - a) / (b - a) * (H - TOP - BOTTOM)
    }

    fn x_tick(&mut self, x: f64, label: &str) {
        let px = self.px(x);
        writeln!(
            self.svg,
            r#"<line x1="{px:.2}" y1="{0:.2}" x2="{px:.2}" y2="{1:.2}" stroke="black"/><text x="{px:.2}" y="{2:.2}" text-anchor="middle">{3}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0,
            H - BOTTOM + 20.0,
            escape(label)
        )
        .unwrap();
    }

    fn y_tick(&mut self, y: f64, label: &str) {
        let py = self.py(y);
        writeln!(
            self.svg,
            r#"<line x1="{0:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{1:.2}" y="{2:.2}" text-anchor="end">{3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            escape(label)
        )
        .unwrap();
    }

    fn line(&mut self, points: &[(f64, f64)], color: &str, dashed: bool, markers: bool) {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        writeln!(
            self.svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        )
        .unwrap();
        if markers {
            for &(x, y) in points {
                writeln!(
                    self.svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                    self.px(x),
                    self.py(y)
                )
                .unwrap();
            }
        }
    }

    fn legend(&mut self, row: usize, text: &str, color: &str) {
        let y = TOP + 18.0 + 18.0 * row as f64;
        let x = W - RIGHT - 200.0;
        writeln!(
            self.svg,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(text)
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn accuracy_svg(report: &ExperimentReport) -> String {
    let n = report.sizes.len();
    let all = report
        .sizes
        .iter()
        .flat_map(|s| [s.mean_oa, s.mean_cv_accuracy]);
    let lo = all.fold(100.0f64, f64::min);
    let y_lo = ((lo / 10.0).floor() * 10.0).clamp(0.0, 90.0);
    let mut plot = Plot::new(
        &format!("{}: average accuracies", report.name),
        "training samples (patient/control)",
        "accuracy (%)",
        (-0.5, n as f64 - 0.5),
        (y_lo, 100.0),
    );
    for (i, s) in report.sizes.iter().enumerate() {
        let label = if s.label.contains('/') {
            s.label.clone()
        } else {
            format!("{0}/{0}", s.label)
        };
        plot.x_tick(i as f64, &label);
    }
    let mut y = y_lo;
    while y <= 100.0 + 1e-9 {
        plot.y_tick(y, &format!("{y:.0}"));
        y += if 100.0 - y_lo > 50.0 { 10.0 } else { 5.0 };
    }
    let oa: Vec<(f64, f64)> = report
        .sizes
        .iter()
        .enumerate()
        .map(|(i, s)| (i as f64, s.mean_oa))
        .collect();
    let cv: Vec<(f64, f64)> = report
        .sizes
        .iter()
        .enumerate()
        .map(|(i, s)| (i as f64, s.mean_cv_accuracy))
        .collect();
    plot.line(&oa, "#1f77b4", false, true);
    plot.line(&cv, "#d62728", true, true);
    plot.legend(0, "overall accuracy", "#1f77b4");
    plot.legend(1, "cross-validation accuracy", "#d62728");
    plot.finish()
}

fn roc_svg(label: &str, points: &[(f64, f64)], auc: f64) -> String {
    let mut plot = Plot::new(
        &format!("ROC, training size {label}"),
        "false positive rate",
        "true positive rate",
        (0.0, 1.0),
        (0.0, 1.0),
    );
    for t in 0..=5 {
        let v = t as f64 / 5.0;
        plot.x_tick(v, &format!("{v:.1}"));
        plot.y_tick(v, &format!("{v:.1}"));
    }
    plot.line(&[(0.0, 0.0), (1.0, 1.0)], "#7f7f7f", true, false);
    plot.line(points, "#1f77b4", false, false);
    plot.legend(0, &format!("AUC = {auc:.4}"), "#1f77b4");
    plot.legend(1, "random classifier", "#7f7f7f");
    plot.finish()
}
