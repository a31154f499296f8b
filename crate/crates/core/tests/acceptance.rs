//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! per criterion and exits non-zero if any of them failed.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use geneteam::cgr::{cgr_trajectory, CgrCube, CgrImage, CgrPoint, Resolution};
use geneteam::classify::{fit_svm, kkt_report, SvmHyperparams, SvmModel};
use geneteam::empr::{decompose_full, decompose_oneway, reconstruct, EmprDecomposition};
use geneteam::metrics::{confusion, overall_accuracy, roc_and_auc, summary_metrics};
use geneteam::pipeline::{
    emit_report, run_experiment, spearman, DataSource, ExperimentConfig, ExperimentReport, Formats,
    GenerateSpec, Schedule,
};
use geneteam::{GeneSequence, Label, Nucleotide};
use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let dir = scratch.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 EMPR correctness", Box::new(empr_correctness)),
        ("2 CGR exactness", Box::new(cgr_exactness)),
        ("3 SVM oracle equivalence", Box::new(svm_oracle)),
        ("4 metrics oracle equivalence", Box::new(metrics_oracle)),
        (
            "5 balanced replication",
            Box::new(|| balanced_replication(dir)),
        ),
        (
            "6 imbalanced replication",
            Box::new(|| imbalanced_replication(dir)),
        ),
        ("7 determinism", Box::new(|| determinism(dir))),
        (
            "8 permutation baseline",
            Box::new(|| permutation_baseline(dir)),
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {}", panic_text(&e))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// EMPR

/// Independent EMPR evaluation straight from the defining sums.
struct Oracle {
    s: [Vec<f64>; 3],
    g0: f64,
    g: [Vec<f64>; 3],
    g12: Array2<f64>,
    g13: Array2<f64>,
    g23: Array2<f64>,
    g123: Array3<f64>,
}

fn oracle(cube: &Array3<f64>) -> Oracle {
    let (n1, n2, n3) = cube.dim();
    let w = [1.0 / n1 as f64, 1.0 / n2 as f64, 1.0 / n3 as f64];
    let mut dir = [vec![0.0; n1], vec![0.0; n2], vec![0.0; n3]];
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let v = cube[[i, j, k]];
                dir[0][i] += w[1] * w[2] * v;
                dir[1][j] += w[0] * w[2] * v;
                dir[2][k] += w[0] * w[1] * v;
            }
        }
    }
    let s: [Vec<f64>; 3] = std::array::from_fn(|r| {
        let eta = dir[r].iter().map(|v| w[r] * v * v).sum::<f64>().sqrt();
        dir[r].iter().map(|v| v / eta).collect()
    });
    let a: [Vec<f64>; 3] = std::array::from_fn(|r| s[r].iter().map(|v| w[r] * v).collect());

    let mut g0 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                g0 += a[0][i] * a[1][j] * a[2][k] * cube[[i, j, k]];
            }
        }
    }
    let mut g = [vec![0.0; n1], vec![0.0; n2], vec![0.0; n3]];
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let v = cube[[i, j, k]];
                g[0][i] += a[1][j] * a[2][k] * v;
                g[1][j] += a[0][i] * a[2][k] * v;
                g[2][k] += a[0][i] * a[1][j] * v;
            }
        }
    }
    for r in 0..3 {
        for (gv, sv) in g[r].iter_mut().zip(&s[r]) {
            *gv -= g0 * sv;
        }
    }
    let mut g12 = Array2::zeros((n1, n2));
    let mut g13 = Array2::zeros((n1, n3));
    let mut g23 = Array2::zeros((n2, n3));
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let v = cube[[i, j, k]];
                g12[[i, j]] += a[2][k] * v;
                g13[[i, k]] += a[1][j] * v;
                g23[[j, k]] += a[0][i] * v;
            }
        }
    }
    for i in 0..n1 {
        for j in 0..n2 {
            g12[[i, j]] -= g0 * s[0][i] * s[1][j] + g[0][i] * s[1][j] + s[0][i] * g[1][j];
        }
        for k in 0..n3 {
            g13[[i, k]] -= g0 * s[0][i] * s[2][k] + g[0][i] * s[2][k] + s[0][i] * g[2][k];
        }
    }
    for j in 0..n2 {
        for k in 0..n3 {
            g23[[j, k]] -= g0 * s[1][j] * s[2][k] + g[1][j] * s[2][k] + s[1][j] * g[2][k];
        }
    }
    let mut g123 = cube.clone();
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                g123[[i, j, k]] -= g0 * s[0][i] * s[1][j] * s[2][k]
                    + g[0][i] * s[1][j] * s[2][k]
                    + s[0][i] * g[1][j] * s[2][k]
                    + s[0][i] * s[1][j] * g[2][k]
                    + g12[[i, j]] * s[2][k]
                    + g13[[i, k]] * s[1][j]
                    + s[0][i] * g23[[j, k]];
            }
        }
    }
    Oracle {
        s,
        g0,
        g,
        g12,
        g13,
        g23,
        g123,
    }
}

fn max_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest `|Σ_i w_i s_i g_{..i..}|` over every component and each of its axes.
fn worst_vanishing(d: &EmprDecomposition) -> f64 {
    let w = d.weights.axes();
    let s = d.supports.axes();
    let ws = |r: usize, i: usize| w[r][i] * s[r][i];
    let mut worst: f64 = 0.0;
    for (r, g) in d.oneways().iter().enumerate() {
        worst = worst.max(
            g.iter()
                .enumerate()
                .map(|(i, v)| ws(r, i) * v)
                .sum::<f64>()
                .abs(),
        );
    }
    let two = d.twoway.as_ref().unwrap();
    for (m, (ra, rb)) in [(&two.g12, (0, 1)), (&two.g13, (0, 2)), (&two.g23, (1, 2))] {
        let (na, nb) = m.dim();
        for b in 0..nb {
            let sum: f64 = (0..na).map(|a| ws(ra, a) * m[[a, b]]).sum();
            worst = worst.max(sum.abs());
        }
        for a in 0..na {
            let sum: f64 = (0..nb).map(|b| ws(rb, b) * m[[a, b]]).sum();
            worst = worst.max(sum.abs());
        }
    }
    let res = d.residual.as_ref().unwrap();
    let (n1, n2, n3) = res.dim();
    for j in 0..n2 {
        for k in 0..n3 {
            let sum: f64 = (0..n1).map(|i| ws(0, i) * res[[i, j, k]]).sum();
            worst = worst.max(sum.abs());
        }
    }
    for i in 0..n1 {
        for k in 0..n3 {
            let sum: f64 = (0..n2).map(|j| ws(1, j) * res[[i, j, k]]).sum();
            worst = worst.max(sum.abs());
        }
        for j in 0..n2 {
            let sum: f64 = (0..n3).map(|k| ws(2, k) * res[[i, j, k]]).sum();
            worst = worst.max(sum.abs());
        }
    }
    worst
}

fn random_cube(r: &mut ChaCha8Rng, binary: bool) -> Array3<f64> {
    let n1 = r.gen_range(if binary { 2 } else { 1 }..=64);
    let n2 = if binary { n1 } else { r.gen_range(1..=64) };
    let n3 = r.gen_range(1..=16);
    let density = r.gen_range(0.02..0.6);
    let mut cube = Array3::from_shape_fn((n1, n2, n3), |_| {
        if binary {
            f64::from(u8::from(r.gen_bool(density)))
        } else {
            r.gen_range(0.0..1.0)
        }
    });
    if cube.iter().all(|&v| v == 0.0) {
        cube[[0, 0, 0]] = 1.0;
    }
    cube
}

fn cgr_cube_of(cube: &Array3<f64>) -> CgrCube {
    let (n, _, n3) = cube.dim();
    let slices = (0..n3)
        .map(|k| {
            let mut img = CgrImage::empty(Resolution::new(n).unwrap());
            for i in 0..n {
                for j in 0..n {
                    if cube[[i, j, k]] != 0.0 {
                        img.set(i, j);
                    }
                }
            }
            img
        })
        .collect();
    CgrCube::from_slices(slices)
}

fn empr_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(0xE3);
    let (mut rec, mut van, mut norm, mut orc): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for case in 0..200 {
        let binary = case % 2 == 0;
        let cube = random_cube(&mut r, binary);
        let d = decompose_full(&cube).map_err(|e| format!("case {case}: {e}"))?;

        let back = reconstruct(&d).map_err(|e| e.to_string())?;
        let err = (&back - &cube).iter().map(|v| v * v).sum::<f64>().sqrt()
            / cube.iter().map(|v| v * v).sum::<f64>().sqrt();
        rec = rec.max(err);
        van = van.max(worst_vanishing(&d));
        for (w, s) in d.weights.axes().into_iter().zip(d.supports.axes()) {
            let n: f64 = w.iter().zip(s).map(|(w, s)| w * s * s).sum();
            norm = norm.max((n - 1.0).abs());
        }

        let o = oracle(&cube);
        let two = d.twoway.as_ref().unwrap();
        let mut diff: f64 = (d.g0 - o.g0).abs();
        for r in 0..3 {
            diff = diff.max(max_diff(d.supports.axes()[r], &o.s[r]));
            diff = diff.max(max_diff(&d.oneways()[r], &o.g[r]));
        }
        diff = diff
            .max(max_diff(&two.g12, &o.g12))
            .max(max_diff(&two.g13, &o.g13))
            .max(max_diff(&two.g23, &o.g23))
            .max(max_diff(d.residual.as_ref().unwrap(), &o.g123));
        if binary {
            // The sparse bitset path must agree with the oracle as well.
            let sparse = decompose_oneway(&cgr_cube_of(&cube)).map_err(|e| e.to_string())?;
            diff = diff.max((sparse.g0 - o.g0).abs());
            for r in 0..3 {
                diff = diff.max(max_diff(&sparse.oneways()[r], &o.g[r]));
            }
        }
        orc = orc.max(diff);
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "reconstruction {rec:.1e}, vanishing {van:.1e}, normalization {norm:.1e}, oracle {orc:.1e}, {:.1} s",
        elapsed.as_secs_f64()
    );
    ensure!(rec <= 1e-9, "reconstruction error too large: {detail}");
    ensure!(van <= 1e-10, "vanishing conditions violated: {detail}");
    ensure!(norm <= 1e-10, "support normalization off: {detail}");
    ensure!(orc <= 1e-12, "oracle mismatch: {detail}");
    ensure!(elapsed < Duration::from_secs(60), "too slow: {detail}");
    Ok(detail)
}

// ---------------------------------------------------------------------------
// CGR

fn cgr_exactness() -> Outcome {
    let seq = GeneSequence::from_str_bases("g", "ACGT").unwrap();
    let expected = [
        (0.25, 0.25),
        (0.125, 0.625),
        (0.5625, 0.3125),
        (0.78125, 0.65625),
    ];
    let got = cgr_trajectory(&seq);
    ensure!(got.len() == 4, "expected 4 points, got {}", got.len());
    for (p, &(x, y)) in got.iter().zip(&expected) {
        ensure!(
            *p == CgrPoint { x, y },
            "point {p:?} differs from ({x}, {y})"
        );
    }

    let mut r = rng(0xC6);
    let bases = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];
    for case in 0..100 {
        let len = r.gen_range(1..=2000);
        let original: Vec<Nucleotide> = (0..len).map(|_| *bases.choose(&mut r).unwrap()).collect();
        let i = r.gen_range(0..len);
        let mut mutated = original.clone();
        while mutated[i] == original[i] {
            mutated[i] = *bases.choose(&mut r).unwrap();
        }
        let a = cgr_trajectory(&GeneSequence::new("a", original));
        let b = cgr_trajectory(&GeneSequence::new("b", mutated));
        ensure!(
            a[..i] == b[..i],
            "case {case}: substitution at {i} moved an earlier point"
        );
        ensure!(
            a[i] != b[i],
            "case {case}: substitution at {i} left its own point unchanged"
        );
    }
    Ok("ACGT exact, 100 prefix cases".into())
}

// ---------------------------------------------------------------------------
// SVM

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

/// Exact dual optimum by enumerating every (lower, upper, free) assignment
/// and solving the equality-constrained stationarity system on the free set.
fn brute_force_dual(q: &[Vec<f64>], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let objective = |a: &[f64]| {
        let quad: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i] * a[j] * q[i][j])
            .sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let bound_sum: f64 = (0..n)
            .filter(|&i| state[i] != 2)
            .map(|i| y[i] * alpha[i])
            .sum();
        if free.is_empty() {
            if bound_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let f = free.len();
            let mut m = vec![vec![0.0; f + 1]; f + 1];
            let mut rhs = vec![0.0; f + 1];
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    m[a][b] = q[i][j];
                }
                m[a][f] = y[i];
                m[f][a] = y[i];
                rhs[a] = 1.0
                    - (0..n)
                        .filter(|&j| state[j] != 2)
                        .map(|j| q[i][j] * alpha[j])
                        .sum::<f64>();
            }
            rhs[f] = -bound_sum;
            let Some(x) = solve_linear(m, rhs) else {
                continue;
            };
            if x[..f].iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                continue;
            }
            for (a, &i) in free.iter().enumerate() {
                alpha[i] = x[a].clamp(0.0, c);
            }
        }
        let obj = objective(&alpha);
        if best.as_ref().map_or(true, |(_, b)| obj > *b) {
            best = Some((alpha, obj));
        }
    }
    best.expect("the all-zero point is always feasible")
}

/// Offset from the KKT conditions: the mean over free multipliers, or the
/// midpoint of the feasible interval when every multiplier is at a bound.
fn oracle_bias(q_rows: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let u: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| alpha[j] * y[j] * q_rows[i][j]).sum())
        .collect();
    let tol = 1e-9 * c.max(1.0);
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > tol && alpha[i] < c - tol)
        .collect();
    if !free.is_empty() {
        return free.iter().map(|&i| y[i] - u[i]).sum::<f64>() / free.len() as f64;
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let at_upper = alpha[i] >= c - tol;
        // y = +1 and alpha = 0, or y = -1 and alpha = C: b >= y - u.
        if (y[i] > 0.0) != at_upper {
            lo = lo.max(y[i] - u[i]);
        } else {
            hi = hi.min(y[i] - u[i]);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

fn svm_oracle() -> Outcome {
    let mut r = rng(0x5F3);
    let (mut worst_obj, mut worst_kkt, mut checked): (f64, f64, usize) = (0.0, 0.0, 0);
    for case in 0..500 {
        let n = r.gen_range(2..=6);
        let dim = r.gen_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.gen_range(0.0..1.0)).collect())
            .collect();
        let mut labels: Vec<Label> = (0..n)
            .map(|_| {
                if r.gen_bool(0.5) {
                    Label::Patient
                } else {
                    Label::Control
                }
            })
            .collect();
        labels[0] = Label::Patient;
        labels[1] = Label::Control;
        labels.shuffle(&mut r);
        let c = 10f64.powf(r.gen_range(-2.0..3.0));
        let gamma = 10f64.powf(r.gen_range(-2.0..2.0));

        let x = Array2::from_shape_fn((n, dim), |(i, j)| points[i][j]);
        let model: SvmModel = fit_svm(x.view(), &labels, SvmHyperparams { c, gamma })
            .map_err(|e| format!("case {case}: {e}"))?;

        let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
        let k: Vec<Vec<f64>> = points
            .iter()
            .map(|a| points.iter().map(|b| rbf(a, b, gamma)).collect())
            .collect();
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect())
            .collect();
        let (alpha, best) = brute_force_dual(&q, &y, c);
        let gap = (model.dual_objective - best).abs();
        worst_obj = worst_obj.max(gap);
        ensure!(
            gap <= 1e-4,
            "case {case} (n {n}, c {c:.3e}, gamma {gamma:.3e}, converged {}, iterations {}): SMO objective {} vs oracle {best}",
            model.converged,
            model.iterations,
            model.dual_objective
        );

        let bias = oracle_bias(&k, &y, &alpha, c);
        let oracle_f = |p: &[f64]| {
            (0..n)
                .map(|j| alpha[j] * y[j] * rbf(&points[j], p, gamma))
                .sum::<f64>()
                + bias
        };
        let probes: Vec<Vec<f64>> = points
            .iter()
            .cloned()
            .chain((0..20).map(|_| (0..dim).map(|_| r.gen_range(-0.5..1.5)).collect()))
            .collect();
        for p in &probes {
            let ours = model.predict(p).map_err(|e| e.to_string())?;
            let theirs = Label::from_sign(oracle_f(p));
            ensure!(
                ours == theirs,
                "case {case}: prediction at {p:?} disagrees (model {}, oracle {})",
                model.decision_value(p).unwrap(),
                oracle_f(p)
            );
            checked += 1;
        }

        let kkt = kkt_report(&model, x.view(), &labels).map_err(|e| e.to_string())?;
        worst_kkt = worst_kkt.max(kkt.max_violation);
        ensure!(
            kkt.max_violation <= 1e-3
                && kkt.equality_residual <= 1e-9
                && kkt.box_violation <= 1e-12,
            "case {case}: KKT/feasibility violated: {kkt:?}"
        );
    }
    Ok(format!(
        "500 datasets, worst objective gap {worst_obj:.1e}, {checked} predictions agree, worst KKT {worst_kkt:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// Metrics

fn mann_whitney(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (sp, lp) in scores.iter().zip(labels) {
        if *lp != Label::Patient {
            continue;
        }
        for (sn, ln) in scores.iter().zip(labels) {
            if *ln != Label::Control {
                continue;
            }
            pairs += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

fn metrics_oracle() -> Outcome {
    let mut r = rng(0xA0C);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = r.gen_range(2..=80);
        let mut labels: Vec<Label> = (0..n)
            .map(|_| {
                if r.gen_bool(0.5) {
                    Label::Patient
                } else {
                    Label::Control
                }
            })
            .collect();
        labels[0] = Label::Patient;
        labels[1] = Label::Control;
        let scores: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| r.gen_range(-3.0..3.0)).collect()
        } else {
            (0..n).map(|_| f64::from(r.gen_range(0..5))).collect()
        };
        let roc = roc_and_auc(&scores, &labels).map_err(|e| e.to_string())?;
        let diff = (roc.auc - mann_whitney(&scores, &labels)).abs();
        worst = worst.max(diff);
        ensure!(
            diff <= 1e-12,
            "case {case}: AUC {} vs pairwise {}",
            roc.auc,
            mann_whitney(&scores, &labels)
        );
    }

    for case in 0..1000 {
        let counts: [u64; 4] = std::array::from_fn(|_| {
            if r.gen_bool(0.15) {
                0
            } else {
                r.gen_range(0..40)
            }
        });
        let [tp, fp, tn, fn_] = counts;
        if tp + fp + tn + fn_ == 0 {
            continue;
        }
        let mut pairs: Vec<(Label, Label)> = Vec::new();
        pairs.extend((0..tp).map(|_| (Label::Patient, Label::Patient)));
        pairs.extend((0..fp).map(|_| (Label::Patient, Label::Control)));
        pairs.extend((0..tn).map(|_| (Label::Control, Label::Control)));
        pairs.extend((0..fn_).map(|_| (Label::Control, Label::Patient)));
        pairs.shuffle(&mut r);
        let (pred, truth): (Vec<Label>, Vec<Label>) = pairs.into_iter().unzip();
        let cm = confusion(&pred, &truth).map_err(|e| e.to_string())?;
        ensure!(
            (cm.tp, cm.fp, cm.tn, cm.fn_) == (tp, fp, tn, fn_),
            "case {case}: confusion {cm:?} vs {counts:?}"
        );

        let (tp, fp, tn, fn_) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
        let frac = |a: f64, b: f64| (b > 0.0).then(|| a / b);
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        let mcc = (den > 0.0).then(|| (tp * tn - fp * fn_) / den.sqrt());
        let m = summary_metrics(&cm);
        ensure!(
            close(m.precision, frac(tp, tp + fp))
                && close(m.npv, frac(tn, tn + fn_))
                && close(m.recall, frac(tp, tp + fn_))
                && close(m.specificity, frac(tn, tn + fp))
                && close(m.mcc, mcc),
            "case {case}: metrics {m:?} disagree with the formulas for {counts:?}"
        );
        let oa = overall_accuracy(&cm).map_err(|e| e.to_string())?;
        ensure!(
            (oa - 100.0 * (tp + tn) / (tp + fp + tn + fn_)).abs() <= 1e-12,
            "case {case}: OA {oa}"
        );
    }
    Ok(format!(
        "1000 AUC instances (worst {worst:.1e}), 1000 confusion matrices"
    ))
}

// ---------------------------------------------------------------------------
// Experiments

fn run_timed(config: &ExperimentConfig) -> Result<(ExperimentReport, Duration), String> {
    let start = Instant::now();
    let report = run_experiment(config).map_err(|e| e.to_string())?;
    Ok((report, start.elapsed()))
}

fn oa_curve(report: &ExperimentReport) -> (Vec<f64>, Vec<f64>) {
    let sizes = report
        .sizes
        .iter()
        .map(|s| s.train_patient as f64)
        .collect();
    let oa = report.sizes.iter().map(|s| s.mean_oa).collect();
    (sizes, oa)
}

fn fmt_curve(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.2}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn balanced_replication(dir: &Path) -> Outcome {
    let mut full = ExperimentConfig::full(1, dir.join("full"));
    full.runs = 20;
    let (report, elapsed) = run_timed(&full)?;
    let (sizes, oa) = oa_curve(&report);
    let rho = spearman(&sizes, &oa);
    let oa50 = report
        .sizes
        .iter()
        .find(|s| s.train_patient == 50)
        .map(|s| s.mean_oa);

    let desk = ExperimentConfig::desk(1, dir.join("desk5"));
    let (desk_report, desk_elapsed) = run_timed(&desk)?;
    let (desk_sizes, desk_oa) = oa_curve(&desk_report);
    let desk_rho = spearman(&desk_sizes, &desk_oa);

    let detail = format!(
        "full-scale OA {} (rho {rho:?}, {:.0} s); desk OA {} (rho {desk_rho:?}, {:.0} s)",
        fmt_curve(&oa),
        elapsed.as_secs_f64(),
        fmt_curve(&desk_oa),
        desk_elapsed.as_secs_f64()
    );
    ensure!(
        oa50.is_some_and(|v| v >= 90.0),
        "mean OA at S=50 below 90%: {detail}"
    );
    ensure!(
        rho.is_some_and(|r| r >= 0.9),
        "full-scale Spearman rho below 0.9 or undefined: {detail}"
    );
    ensure!(
        elapsed <= Duration::from_secs(2 * 3600),
        "full scale too slow: {detail}"
    );
    ensure!(
        desk_rho.is_some_and(|r| r >= 0.9),
        "desk Spearman rho below 0.9 or undefined: {detail}"
    );
    ensure!(
        desk_elapsed <= Duration::from_secs(600),
        "desk preset too slow: {detail}"
    );
    Ok(detail)
}

fn imbalanced_replication(dir: &Path) -> Outcome {
    let source = DataSource::Generate(GenerateSpec::new(31, 10_000, 50_000, 400, 100));
    let mut config = ExperimentConfig::full(1, dir.join("imbalanced"));
    config.name = "imbalanced".into();
    config.source = source;
    config.runs = 20;
    config.schedule = Schedule::standard_imbalanced();
    config.feature_cache = Some(dir.join("imbalanced_features.csv"));
    let (report, _) = run_timed(&config)?;

    let mut balanced = config.clone();
    balanced.output = dir.join("imbalanced_balanced");
    balanced.schedule = Schedule::Balanced { sizes: vec![25] };
    let (matched, _) = run_timed(&balanced)?;

    let ratio = |r: f64| {
        report
            .sizes
            .iter()
            .find(|s| s.ratio.is_some_and(|x| (x - r).abs() < 1e-9))
            .ok_or_else(|| format!("ratio {r} missing"))
    };
    let first = ratio(0.1)?;
    ensure!(
        (first.train_patient, first.train_control) == (10, 40),
        "10% ratio trains on {}/{}",
        first.train_patient,
        first.train_control
    );
    let recalls: Vec<Option<f64>> = [0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|&r| ratio(r).map(|s| s.recall.mean))
        .collect::<Result<_, _>>()?;
    let recall = first.recall.mean;
    let specificity = first.specificity.mean;
    let mcc = first.mcc.mean;
    let balanced_mcc = matched.sizes[0].mcc.mean;
    let detail = format!(
        "10/40 recall {recall:?} specificity {specificity:?} mcc {mcc:?}; balanced 25/25 mcc {balanced_mcc:?}; recall by ratio {recalls:?}"
    );
    let (Some(recall), Some(specificity)) = (recall, specificity) else {
        return Err(format!("undefined recall or specificity: {detail}"));
    };
    ensure!(
        recall < specificity - 0.2,
        "recall not depressed at 10%: {detail}"
    );
    ensure!(
        matches!((mcc, balanced_mcc), (Some(a), Some(b)) if a < b),
        "MCC at 10% not below the balanced MCC: {detail}"
    );
    let increasing = recalls
        .windows(2)
        .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a < b));
    ensure!(
        increasing,
        "recall not strictly increasing from 10% to 40%: {detail}"
    );
    Ok(detail)
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.strip_prefix(dir).unwrap().to_path_buf(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

/// One `experiment` execution: features (cached), runs, report files.
fn execute(config: &ExperimentConfig) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let report = run_experiment(config).map_err(|e| e.to_string())?;
    emit_report(&report, config, &config.output, Formats::default()).map_err(|e| e.to_string())?;
    Ok(snapshot(&config.output))
}

fn determinism(dir: &Path) -> Outcome {
    let config = ExperimentConfig::desk(7, dir.join("determinism"));
    let cold = execute(&config)?;
    let warm = execute(&config)?;
    fs::remove_dir_all(&config.output).map_err(|e| e.to_string())?;
    let again = execute(&config)?;
    ensure!(cold.len() > 3, "only {} files written", cold.len());
    for (label, other) in [("cached rerun", &warm), ("fresh rerun", &again)] {
        ensure!(
            cold.iter().map(|f| &f.0).eq(other.iter().map(|f| &f.0)),
            "{label} wrote a different file set"
        );
        for (a, b) in cold.iter().zip(other.iter()) {
            ensure!(a.1 == b.1, "{label}: {} differs", a.0.display());
        }
    }
    Ok(format!(
        "{} files byte-identical across three executions",
        cold.len()
    ))
}

fn permutation_baseline(dir: &Path) -> Outcome {
    let mut config = ExperimentConfig::desk(3, dir.join("permutation"));
    // Features come from the cache written by the unshuffled run.
    run_experiment(&config).map_err(|e| e.to_string())?;
    config.shuffle_labels = true;
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    ensure!(report.shuffled_labels, "report does not record the shuffle");
    let oa: Vec<f64> = report.sizes.iter().map(|s| s.mean_oa).collect();
    let auc: Vec<f64> = report.sizes.iter().map(|s| s.mean_auc).collect();
    let detail = format!("OA {}, AUC {}", fmt_curve(&oa), fmt_curve(&auc));
    for s in &report.sizes {
        ensure!(
            s.runs.len() == 20,
            "{} runs at size {}",
            s.runs.len(),
            s.label
        );
        ensure!(
            (45.0..=55.0).contains(&s.mean_oa),
            "OA outside [45, 55] at S={}: {detail}",
            s.label
        );
        ensure!(
            (0.45..=0.55).contains(&s.mean_auc),
            "AUC outside [0.45, 0.55] at S={}: {detail}",
            s.label
        );
    }
    Ok(detail)
}
