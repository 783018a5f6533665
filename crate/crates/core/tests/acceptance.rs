//! Acceptance suite.
//!
//! Each test prints one `ACCEPTANCE <id> PASS/SKIP` line (run with
//! `--nocapture` to see them; a failed assertion is the FAIL line).
//!
//! Criteria 1–4 reproduce the published experiment and need the real
//! three-class power-system disturbance dataset: 15 CSV captures totalling
//! 73 037 rows. Point `POWER_DATASET_DIR` at the directory holding them
//! (default: `data/` at the workspace root). Without the dataset those
//! tests print SKIP and succeed vacuously — everything in criterion 5 runs
//! on seeded synthetic data and always executes.

use std::path::PathBuf;
use std::time::Instant;

use pmuclass_core::analyze::{self, mutual_information};
use pmuclass_core::eval::{
    self, ConfusionMatrix, CvOptions, LeakageMode, ModelSpec, SmoteSettings, compute_metrics,
    cross_validate, grid_search, stratified_kfold,
};
use pmuclass_core::models::{Design, KnnParams, RandomForestParams, SoftmaxParams, softmax};
use pmuclass_core::preprocess::{
    IsolationForest, IsolationForestParams, SmoteParams, anomaly_score, average_path_length,
    drop_nonfinite, remove_outliers, smote,
};
use pmuclass_core::rng::{Rng, derive};
use pmuclass_core::table::{ClassLabel, MeasurementTable, N_CLASSES, SampleSpec};
use pmuclass_core::{StandardScaler, TrainedModel};

const SEEDS: [u64; 5] = [101, 102, 103, 104, 105];

// Stage tags matching the CLI's seed derivation, so these runs are
// reproducible through the command-line pipeline as well.
const STREAM_SAMPLE: u64 = 10;
const STREAM_IFOREST: u64 = 11;

// ---------------------------------------------------------------------------
// Criteria 1–4: reproduction on the real dataset
// ---------------------------------------------------------------------------

fn dataset_dir() -> Option<PathBuf> {
    let dir = match std::env::var("POWER_DATASET_DIR") {
        Ok(v) => PathBuf::from(v),
        Err(_) => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    };
    dir.is_dir().then_some(dir)
}

fn load_real_dataset(dir: &PathBuf) -> MeasurementTable {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .expect("dataset dir readable")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"))
        })
        .collect();
    files.sort();
    assert_eq!(
        files.len(),
        15,
        "expected the 15 capture files in {}",
        dir.display()
    );
    let tables: Vec<MeasurementTable> = files
        .iter()
        .map(|p| MeasurementTable::load_csv(p, None).expect("capture loads"))
        .collect();
    let merged = MeasurementTable::merge(&tables).expect("captures share one schema");
    assert_eq!(
        merged.n_rows(),
        73_037,
        "merged dataset must have 73037 rows"
    );
    assert_eq!(
        merged.n_features(),
        128,
        "dataset must have 128 feature columns"
    );
    merged
}

/// The per-seed experiment behind criteria 1–3: 2% stratified sample,
/// non-finite drop, isolation-forest outlier removal, then paper-literal
/// 10-fold CV (whole-table scaling + SMOTE) of the three default models,
/// plus a default RF on the MI top-40 subset.
struct SeedOutcome {
    rf_accuracy: f64,
    rf_f1: f64,
    knn_f1: f64,
    lr_f1: f64,
    rf_top40_f1: f64,
}

fn preprocess_sample(merged: &MeasurementTable, seed: u64) -> MeasurementTable {
    let sample = merged
        .stratified_sample(&SampleSpec {
            fraction: 0.02,
            seed: derive(seed, STREAM_SAMPLE),
            stratified: true,
        })
        .expect("sampling succeeds");
    if merged.n_rows() == 73_037 {
        // Sum of per-class round(0.02·count) can land within ±2 of 1460.
        assert!(
            (1458..=1462).contains(&sample.n_rows()),
            "2% sample drew {} rows",
            sample.n_rows()
        );
    }
    let (finite, _) = drop_nonfinite(&sample).expect("rows survive");
    let params = IsolationForestParams {
        n_trees: 100,
        subsample_size: finite.n_rows().min(256),
        seed: derive(seed, STREAM_IFOREST),
    };
    let forest = IsolationForest::fit(&finite, &params).expect("forest fits");
    let (cleaned, _) = remove_outliers(&finite, &forest, 0.05).expect("outlier removal");
    cleaned
}

fn paper_literal_opts(seed: u64) -> CvOptions {
    CvOptions {
        n_folds: 10,
        seed,
        leakage: LeakageMode::PaperLiteral,
        smote: Some(SmoteSettings {
            k_neighbors: 5,
            classes: None,
        }),
        smote_before_scaling: false,
        feature_subset: None,
    }
}

fn run_seed_experiment(merged: &MeasurementTable, seed: u64) -> SeedOutcome {
    let cleaned = preprocess_sample(merged, seed);
    let opts = paper_literal_opts(seed);

    let rf = cross_validate(
        &cleaned,
        &ModelSpec::RandomForest(RandomForestParams::default()),
        &opts,
    )
    .expect("rf cv");
    let knn =
        cross_validate(&cleaned, &ModelSpec::Knn(KnnParams::default()), &opts).expect("knn cv");
    let lr = cross_validate(
        &cleaned,
        &ModelSpec::Softmax(SoftmaxParams::default()),
        &opts,
    )
    .expect("lr cv");

    let ranking = mutual_information(&cleaned, 20).expect("mi ranking");
    let top40 = ranking.select_top_k(40).expect("top 40");
    let fs_opts = CvOptions {
        feature_subset: Some(top40),
        ..opts
    };
    let rf_fs = cross_validate(
        &cleaned,
        &ModelSpec::RandomForest(RandomForestParams::default()),
        &fs_opts,
    )
    .expect("rf top-40 cv");

    SeedOutcome {
        rf_accuracy: rf.aggregate.accuracy,
        rf_f1: rf.aggregate.f1_macro,
        knn_f1: knn.aggregate.f1_macro,
        lr_f1: lr.aggregate.f1_macro,
        rf_top40_f1: rf_fs.aggregate.f1_macro,
    }
}

#[test]
fn criteria_1_2_3_paper_reproduction() {
    let Some(dir) = dataset_dir() else {
        println!("ACCEPTANCE 1 SKIP — real dataset not found (set POWER_DATASET_DIR)");
        println!("ACCEPTANCE 2 SKIP — real dataset not found (set POWER_DATASET_DIR)");
        println!("ACCEPTANCE 3 SKIP — real dataset not found (set POWER_DATASET_DIR)");
        return;
    };
    let start = Instant::now();
    let merged = load_real_dataset(&dir);
    let outcomes: Vec<SeedOutcome> = SEEDS
        .iter()
        .map(|&seed| run_seed_experiment(&merged, seed))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();

    let mut failures = Vec::new();

    // Criterion 1: mean accuracy within ±0.05 of 0.9056 and mean macro-F1
    // within ±0.05 of 0.9046, in under ten minutes.
    let mean_acc: f64 = outcomes.iter().map(|o| o.rf_accuracy).sum::<f64>() / SEEDS.len() as f64;
    let mean_f1: f64 = outcomes.iter().map(|o| o.rf_f1).sum::<f64>() / SEEDS.len() as f64;
    let c1 =
        (mean_acc - 0.9056).abs() <= 0.05 && (mean_f1 - 0.9046).abs() <= 0.05 && elapsed < 600.0;
    println!(
        "ACCEPTANCE 1 {} — RF accuracy {mean_acc:.4} (target 0.9056±0.05), \
         macro-F1 {mean_f1:.4} (target 0.9046±0.05), {elapsed:.0}s",
        if c1 { "PASS" } else { "FAIL" }
    );
    if !c1 {
        failures.push("criterion 1");
    }

    // Criterion 2: RF > KNN > LR on macro-F1 for at least 4 of 5 seeds.
    let ordered = outcomes
        .iter()
        .filter(|o| o.rf_f1 > o.knn_f1 && o.knn_f1 > o.lr_f1)
        .count();
    let c2 = ordered >= 4;
    println!(
        "ACCEPTANCE 2 {} — RF>KNN>LR ordering held on {ordered}/5 seeds (need ≥4)",
        if c2 { "PASS" } else { "FAIL" }
    );
    if !c2 {
        failures.push("criterion 2");
    }

    // Criterion 3: top-40 MI features score below all 128 for ≥4 of 5 seeds.
    let lower = outcomes.iter().filter(|o| o.rf_top40_f1 < o.rf_f1).count();
    let c3 = lower >= 4;
    println!(
        "ACCEPTANCE 3 {} — top-40 macro-F1 below full features on {lower}/5 seeds (need ≥4)",
        if c3 { "PASS" } else { "FAIL" }
    );
    if !c3 {
        failures.push("criterion 3");
    }

    assert!(failures.is_empty(), "failed: {failures:?}");
}

#[test]
fn criterion_4_tuning_non_regression() {
    let Some(dir) = dataset_dir() else {
        println!("ACCEPTANCE 4 SKIP — real dataset not found (set POWER_DATASET_DIR)");
        return;
    };
    let merged = load_real_dataset(&dir);
    let base = RandomForestParams::default();
    let grid = eval::TuneGrid::default();
    let mut all_improved = true;
    for &seed in &SEEDS {
        let cleaned = preprocess_sample(&merged, seed);
        let opts = paper_literal_opts(seed);
        let baseline = cross_validate(&cleaned, &ModelSpec::RandomForest(base.clone()), &opts)
            .expect("baseline cv")
            .aggregate
            .accuracy;
        let (_, trace) = grid_search(&cleaned, &base, &grid, &opts).expect("grid search");
        let best = trace
            .iter()
            .map(|p| p.mean_accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        if best < baseline {
            all_improved = false;
            println!("  seed {seed}: tuned {best:.4} < baseline {baseline:.4}");
        }
    }
    println!(
        "ACCEPTANCE 4 {} — tuned mean CV accuracy ≥ default-params accuracy on every seed",
        if all_improved { "PASS" } else { "FAIL" }
    );
    assert!(all_improved);
}

/// The reproduction harness itself must keep working even when the real
/// dataset is absent: drive `run_seed_experiment` end to end on a synthetic
/// dataset of the same width (128 features, three imbalanced classes).
#[test]
fn experiment_harness_runs_on_synthetic_shape() {
    let merged = pmuclass_core::synth::generate(&pmuclass_core::synth::SynthSpec {
        rows: 4000,
        features: 128,
        informative: 24,
        separation: 1.0,
        nonfinite_fraction: 0.002,
        seed: 31,
        ..Default::default()
    });
    let outcome = run_seed_experiment(&merged, SEEDS[0]);
    for (name, value) in [
        ("rf_accuracy", outcome.rf_accuracy),
        ("rf_f1", outcome.rf_f1),
        ("knn_f1", outcome.knn_f1),
        ("lr_f1", outcome.lr_f1),
        ("rf_top40_f1", outcome.rf_top40_f1),
    ] {
        assert!((0.0..=1.0).contains(&value), "{name} = {value}");
    }
    // Informative structure exists, so the forest must beat chance.
    assert!(outcome.rf_f1 > 0.5, "rf_f1 = {}", outcome.rf_f1);
}

// ---------------------------------------------------------------------------
// Criterion 5: oracle suite (synthetic data only)
// ---------------------------------------------------------------------------

fn synth_table(seed: u64, rows: usize, features: usize) -> MeasurementTable {
    let mut rng = Rng::new(seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..rows {
        let code = i % N_CLASSES;
        data.push(
            (0..features)
                .map(|f| {
                    if f == 0 {
                        code as f64 + 0.8 * rng.next_gaussian()
                    } else {
                        rng.next_gaussian()
                    }
                })
                .collect::<Vec<f64>>(),
        );
        labels.push(ClassLabel::from_code(code).unwrap());
    }
    let names = (0..features).map(|f| format!("f{f:02}")).collect();
    MeasurementTable::from_rows(names, data, labels).unwrap()
}

/// Brute-force joint-histogram MI, written independently of the library
/// path: per (bin, class) cell, scan every row.
fn mi_bruteforce(values: &[f64], codes: &[usize], n_bins: usize) -> f64 {
    let n = values.len() as f64;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let bin_of = |v: f64| -> usize {
        if min == max {
            0
        } else {
            (((v - min) / ((max - min) / n_bins as f64)) as usize).min(n_bins - 1)
        }
    };
    let mut mi = 0.0;
    for bin in 0..n_bins {
        for class in 0..N_CLASSES {
            let mut joint = 0u64;
            let mut in_bin = 0u64;
            let mut in_class = 0u64;
            for (&v, &y) in values.iter().zip(codes) {
                let hit_bin = bin_of(v) == bin;
                let hit_class = y == class;
                in_bin += u64::from(hit_bin);
                in_class += u64::from(hit_class);
                joint += u64::from(hit_bin && hit_class);
            }
            if joint > 0 {
                let p_xy = joint as f64 / n;
                mi += p_xy * (p_xy / ((in_bin as f64 / n) * (in_class as f64 / n))).ln();
            }
        }
    }
    mi.max(0.0)
}

#[test]
fn criterion_5a_mutual_information_oracle() {
    let start = Instant::now();
    let mut rng = Rng::new(501);
    for case in 0..30 {
        let rows = 2 + rng.below(99);
        let features = 1 + rng.below(5);
        let table = synth_table(derive(501, case), rows, features);
        let codes: Vec<usize> = table.labels().iter().map(|l| l.code()).collect();
        let ranking = mutual_information(&table, 20).unwrap();
        for entry in &ranking.entries {
            let values: Vec<f64> = (0..table.n_rows())
                .map(|r| table.value(r, entry.index))
                .collect();
            let expected = mi_bruteforce(&values, &codes, 20);
            assert!(
                (entry.score - expected).abs() < 1e-12,
                "case {case} feature {}: {} vs {}",
                entry.feature,
                entry.score,
                expected
            );
        }
    }

    // MI of a uniform binary feature with itself as the label is ln 2.
    let rows: Vec<Vec<f64>> = (0..10_000).map(|i| vec![(i % 2) as f64]).collect();
    let labels: Vec<ClassLabel> = (0..10_000)
        .map(|i| ClassLabel::from_code(i % 2).unwrap())
        .collect();
    let table = MeasurementTable::from_rows(vec!["x".into()], rows, labels).unwrap();
    let mi = mutual_information(&table, 20).unwrap().entries[0].score;
    assert!(
        (mi - std::f64::consts::LN_2).abs() < 1e-12,
        "MI(X;X) = {mi}"
    );

    println!(
        "ACCEPTANCE 5a PASS — MI matches brute force to 1e-12; MI(X;X)=ln2 ({:.1}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_5b_metrics_enumeration_oracle() {
    let mut rng = Rng::new(502);
    let mut checked = 0;
    while checked < 1000 {
        let mut cm = ConfusionMatrix::default();
        for t in 0..N_CLASSES {
            for p in 0..N_CLASSES {
                cm.counts[t][p] = if rng.below(4) == 0 {
                    0
                } else {
                    rng.below(100) as u64
                };
            }
        }
        if cm.total() == 0 {
            continue;
        }
        let (got, _) = compute_metrics(&cm).unwrap();

        // Independent enumeration in class order.
        let mut correct = 0u64;
        let mut precision_sum = 0.0;
        let mut recall_sum = 0.0;
        let mut f1_sum = 0.0;
        for c in 0..N_CLASSES {
            correct += cm.counts[c][c];
            let mut col = 0u64;
            let mut row = 0u64;
            for o in 0..N_CLASSES {
                col += cm.counts[o][c];
                row += cm.counts[c][o];
            }
            let p = if col == 0 {
                0.0
            } else {
                cm.counts[c][c] as f64 / col as f64
            };
            let r = if row == 0 {
                0.0
            } else {
                cm.counts[c][c] as f64 / row as f64
            };
            precision_sum += p;
            recall_sum += r;
            f1_sum += if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            };
        }
        assert_eq!(got.accuracy, correct as f64 / cm.total() as f64);
        assert_eq!(got.precision_macro, precision_sum / N_CLASSES as f64);
        assert_eq!(got.recall_macro, recall_sum / N_CLASSES as f64);
        assert_eq!(got.f1_macro, f1_sum / N_CLASSES as f64);
        checked += 1;
    }
    println!("ACCEPTANCE 5b PASS — metrics equal enumeration on 1000 random matrices, exactly");
}

#[test]
fn criterion_5c_smote_segment_and_balance() {
    let mut rng = Rng::new(503);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (code, n) in [(0usize, 70), (1, 22), (2, 37)] {
        for _ in 0..n {
            rows.push(vec![
                code as f64 * 3.0 + rng.next_gaussian(),
                rng.next_gaussian(),
                code as f64 - rng.next_gaussian(),
            ]);
            labels.push(ClassLabel::from_code(code).unwrap());
        }
    }
    let names = (0..3).map(|f| format!("f{f}")).collect();
    let table = MeasurementTable::from_rows(names, rows, labels).unwrap();
    let params = SmoteParams {
        k_neighbors: 5,
        seed: 99,
        classes: None,
    };
    let (augmented, records) = smote(&table, &params).unwrap();

    assert_eq!(augmented.class_counts(), [70, 70, 70]);
    let mut worst = 0.0f64;
    for (i, record) in records.iter().enumerate() {
        let synth = augmented.row(table.n_rows() + i);
        let x = table.row(record.parent);
        let x_hat = table.row(record.neighbor);
        let diff: Vec<f64> = x_hat.iter().zip(x).map(|(a, b)| a - b).collect();
        let offset: Vec<f64> = synth.iter().zip(x).map(|(a, b)| a - b).collect();
        let denom: f64 = diff.iter().map(|d| d * d).sum();
        let u = if denom == 0.0 {
            0.0
        } else {
            diff.iter().zip(&offset).map(|(d, o)| d * o).sum::<f64>() / denom
        };
        let residual: f64 = offset
            .iter()
            .zip(&diff)
            .map(|(o, d)| (o - u * d) * (o - u * d))
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-9, "row {i} residual {residual}");
        assert!((-1e-12..=1.0 + 1e-12).contains(&u), "row {i} u={u}");
        worst = worst.max(residual);
    }
    println!(
        "ACCEPTANCE 5c PASS — {} synthetic rows on parent→neighbour segments \
         (worst residual {worst:.2e}); classes balanced",
        records.len()
    );
}

#[test]
fn criterion_5d_isolation_forest_analytics() {
    assert!((average_path_length(2) - 0.1544313298).abs() < 1e-9);
    for psi in [2, 8, 64, 256] {
        let score = anomaly_score(average_path_length(psi), psi);
        assert!((score - 0.5).abs() < 1e-12, "psi={psi}: {score}");
    }

    // Planted outlier must rank first in a 100-point blob, 10 seeds.
    for seed in 0..10u64 {
        let mut rng = Rng::new(1000 + seed);
        let mut rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..4).map(|_| rng.next_gaussian()).collect())
            .collect();
        rows.push(vec![18.0, -22.0, 30.0, -17.0]);
        let labels = vec![ClassLabel::Attack; rows.len()];
        let names = (0..4).map(|f| format!("f{f}")).collect();
        let table = MeasurementTable::from_rows(names, rows, labels).unwrap();
        let forest = IsolationForest::fit(
            &table,
            &IsolationForestParams {
                n_trees: 100,
                subsample_size: 64,
                seed,
            },
        )
        .unwrap();
        let scores = forest.score_table(&table).unwrap();
        let top = (0..scores.len())
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .unwrap();
        assert_eq!(top, 100, "seed {seed}: outlier not ranked first");
    }
    println!(
        "ACCEPTANCE 5d PASS — c(2)=0.1544313298, score(E[h]=c(n))=0.5, \
         planted outlier first on 10/10 seeds"
    );
}

#[test]
fn criterion_5e_softmax_gradient_and_monotonicity() {
    let mut rng = Rng::new(505);
    for case in 0..5 {
        let n = 10;
        let d = 4;
        let values: Vec<f64> = (0..n * d).map(|_| rng.next_gaussian()).collect();
        let codes: Vec<usize> = (0..n).map(|_| rng.below(3)).collect();
        let design = Design::new(&values, n, d);
        let w: Vec<f64> = (0..(d + 1) * N_CLASSES)
            .map(|_| 0.5 * rng.next_gaussian())
            .collect();
        let l2 = 1e-3;
        let (_, grad) = softmax::loss_and_gradient(design, &codes, &w, l2);
        let h = 1e-5;
        for i in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let numeric = (softmax::loss_only(design, &codes, &wp, l2)
                - softmax::loss_only(design, &codes, &wm, l2))
                / (2.0 * h);
            let denom = numeric.abs().max(grad[i].abs()).max(1e-8);
            assert!(
                ((grad[i] - numeric) / denom).abs() < 1e-4,
                "case {case} weight {i}: {} vs {}",
                grad[i],
                numeric
            );
        }
    }

    // Loss is non-increasing across accepted steps on a real fit.
    let table = synth_table(506, 120, 5);
    let scaled = StandardScaler::fit(&table).unwrap().apply(&table).unwrap();
    let model = softmax::train(
        Design::from_table(&scaled),
        scaled.labels(),
        &SoftmaxParams::default(),
    )
    .unwrap();
    for pair in model.fit_info.loss_trace.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-15,
            "loss increased {} -> {}",
            pair[0],
            pair[1]
        );
    }
    println!(
        "ACCEPTANCE 5e PASS — gradient matches central differences (<1e-4 rel); \
         loss monotone over {} accepted steps",
        model.fit_info.loss_trace.len().saturating_sub(1)
    );
}

#[test]
fn criterion_5f_pca_orthonormal_and_oracle() {
    // Orthonormality on a bigger random table.
    let table = synth_table(507, 60, 8);
    let model = analyze::pca_fit(&table).unwrap();
    let [u, w] = &model.components;
    assert!((u.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
    assert!((w.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
    assert!(u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-9);

    // Against a power-iteration-with-deflation oracle on small matrices.
    for seed in [508u64, 509, 510] {
        let mut rng = Rng::new(seed);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                (0..5)
                    .map(|c| rng.next_gaussian() * (c + 1) as f64 * 1.7)
                    .collect()
            })
            .collect();
        let labels = vec![ClassLabel::Attack; rows.len()];
        let names = (0..5).map(|f| format!("f{f}")).collect();
        let small = MeasurementTable::from_rows(names, rows, labels).unwrap();
        let model = analyze::pca_fit(&small).unwrap();

        let n = small.n_rows();
        let d = small.n_features();
        let mut means = vec![0.0; d];
        for r in 0..n {
            for (m, v) in means.iter_mut().zip(small.row(r)) {
                *m += v / n as f64;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for r in 0..n {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] +=
                        (small.value(r, i) - means[i]) * (small.value(r, j) - means[j]) / n as f64;
                }
            }
        }
        for component in &model.components {
            // Power iteration from the component itself converges to the
            // dominant eigenvector of the (possibly deflated) matrix; the
            // component must be a fixed point up to sign.
            let mut v = component.clone();
            for _ in 0..10_000 {
                let mut next = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        next[i] += cov[i][j] * v[j];
                    }
                }
                let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
                for x in &mut next {
                    *x /= norm;
                }
                v = next;
            }
            let cos: f64 = component.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!(cos.abs() > 1.0 - 1e-9, "seed {seed}: |cos|={}", cos.abs());
            // Deflate with the oracle's eigenvalue for the second round.
            let mut av = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    av[i] += cov[i][j] * v[j];
                }
            }
            let lambda: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] -= lambda * v[i] * v[j];
                }
            }
        }
    }
    println!(
        "ACCEPTANCE 5f PASS — PCA components orthonormal (1e-9) and match the eigensolver oracle"
    );
}

#[test]
fn criterion_5g_stratified_folds() {
    let mut rng = Rng::new(511);
    for case in 0..20 {
        let counts = [10 + rng.below(60), 10 + rng.below(60), 10 + rng.below(60)];
        let n_folds = 2 + rng.below(9);
        if counts.iter().any(|&c| c < n_folds) {
            continue;
        }
        let mut labels = Vec::new();
        for (code, &n) in counts.iter().enumerate() {
            labels.extend(std::iter::repeat_n(ClassLabel::from_code(code).unwrap(), n));
        }
        rng.shuffle(&mut labels);
        let plan = stratified_kfold(&labels, n_folds, derive(511, case)).unwrap();

        let mut seen = vec![0usize; labels.len()];
        for fold in 0..n_folds {
            let mut got = [0usize; 3];
            for r in plan.test_rows(fold) {
                seen[r] += 1;
                got[labels[r].code()] += 1;
            }
            for c in 0..3 {
                let ideal = counts[c] as f64 / n_folds as f64;
                assert!(
                    (got[c] as f64 - ideal).abs() <= 1.0,
                    "case {case} fold {fold} class {c}: {} vs {ideal}",
                    got[c]
                );
            }
        }
        assert!(seen.iter().all(|&s| s == 1), "case {case}: not a partition");
    }
    println!("ACCEPTANCE 5g PASS — fold class proportions within ±1 row; exact partition");
}

#[test]
fn criterion_5h_knn_oracle() {
    use pmuclass_core::models::knn;

    let mut rng = Rng::new(512);
    let n_train = 200;
    let train_rows: Vec<Vec<f64>> = (0..n_train)
        .map(|_| {
            vec![
                rng.below(8) as f64,
                rng.below(8) as f64,
                rng.below(8) as f64,
            ]
        })
        .collect();
    let train_labels: Vec<ClassLabel> = (0..n_train)
        .map(|_| ClassLabel::from_code(rng.below(3)).unwrap())
        .collect();
    let queries: Vec<Vec<f64>> = (0..80)
        .map(|_| {
            vec![
                rng.next_f64() * 8.0,
                rng.below(8) as f64,
                rng.below(8) as f64,
            ]
        })
        .collect();

    let mut train_values = Vec::new();
    for row in &train_rows {
        train_values.extend_from_slice(row);
    }
    let mut query_values = Vec::new();
    for row in &queries {
        query_values.extend_from_slice(row);
    }

    for k in [1, 4, 9, 25] {
        let model = knn::fit(
            Design::new(&train_values, n_train, 3),
            &train_labels,
            &KnnParams { k },
        )
        .unwrap();
        let (predicted, _) =
            knn::predict(&model, Design::new(&query_values, queries.len(), 3)).unwrap();

        for (q, query) in queries.iter().enumerate() {
            // All-pairs oracle with explicit selection loops.
            let mut taken = vec![false; n_train];
            let mut votes = [0u64; N_CLASSES];
            for _ in 0..k {
                let mut best: Option<(f64, usize)> = None;
                for (t, row) in train_rows.iter().enumerate() {
                    if taken[t] {
                        continue;
                    }
                    let d2: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                    if best.is_none_or(|(bd, _)| d2 < bd) {
                        best = Some((d2, t));
                    }
                }
                let (_, chosen) = best.unwrap();
                taken[chosen] = true;
                votes[train_labels[chosen].code()] += 1;
            }
            let mut expect = 0;
            for c in 1..N_CLASSES {
                if votes[c] > votes[expect] {
                    expect = c;
                }
            }
            assert_eq!(
                predicted[q].code(),
                expect,
                "query {q} k={k}: {:?} vs oracle {expect}",
                predicted[q]
            );
        }
    }
    println!("ACCEPTANCE 5h PASS — k-NN equals the all-pairs brute-force oracle exactly");
}

// ---------------------------------------------------------------------------
// Library-level end-to-end check with artifacts (always runs)
// ---------------------------------------------------------------------------

/// The pipeline holds together on synthetic data: sample → preprocess →
/// evaluate, artifact round-trip, deterministic reports.
#[test]
fn synthetic_end_to_end_pipeline() {
    let spec = pmuclass_core::synth::SynthSpec {
        rows: 900,
        features: 12,
        informative: 4,
        separation: 1.2,
        nonfinite_fraction: 0.02,
        seed: 77,
        ..Default::default()
    };
    let raw = pmuclass_core::synth::generate(&spec);
    let (finite, dropped) = drop_nonfinite(&raw).unwrap();
    assert!(dropped > 0);

    let forest = IsolationForest::fit(
        &finite,
        &IsolationForestParams {
            n_trees: 50,
            subsample_size: finite.n_rows().min(256),
            seed: 5,
        },
    )
    .unwrap();
    let (cleaned, removed) = remove_outliers(&finite, &forest, 0.05).unwrap();
    assert_eq!(
        removed.len(),
        (0.05 * finite.n_rows() as f64).ceil() as usize
    );

    let opts = CvOptions {
        n_folds: 5,
        seed: 3,
        ..Default::default()
    };
    let specs = vec![
        ModelSpec::RandomForest(RandomForestParams {
            n_trees: 30,
            ..Default::default()
        }),
        ModelSpec::Knn(KnnParams::default()),
        ModelSpec::Softmax(SoftmaxParams {
            max_iters: 150,
            ..Default::default()
        }),
    ];
    let ranked = eval::compare_models(&cleaned, &specs, &opts).unwrap();
    assert_eq!(ranked.len(), 3);
    // Informative features exist, so the winner must beat chance.
    assert!(ranked[0].report.aggregate.f1_macro > 0.5);

    // Train-final + artifact round trip through JSON.
    let scaler = StandardScaler::fit(&cleaned).unwrap();
    let scaled = scaler.apply(&cleaned).unwrap();
    let model = pmuclass_core::models::forest::train(
        Design::from_table(&scaled),
        scaled.labels(),
        &RandomForestParams {
            n_trees: 30,
            seed: 9,
            ..Default::default()
        },
    )
    .unwrap();
    let trained = TrainedModel {
        version: pmuclass_core::models::ARTIFACT_VERSION,
        meta: Default::default(),
        feature_subset: cleaned.feature_names().to_vec(),
        scaler,
        variant: pmuclass_core::models::ModelVariant::RandomForest(model),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    trained.save(&path).unwrap();
    let reloaded = TrainedModel::load(&path).unwrap();
    let (a, _) = trained.predict(&cleaned).unwrap();
    let (b, _) = reloaded.predict(&cleaned).unwrap();
    assert_eq!(a, b);
}
