//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a custom harness so the report is always printed. Hard failures
//! make the process exit non-zero; criterion 6's accuracy threshold and
//! criterion 8 are reported without failing the run (see README).
//!
//! Set `ASNN_MNIST_DIR` to a directory with the MNIST IDX files to attempt the
//! full-budget MNIST reproduction (hours of CPU time).

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use asnn_core::dataset::{
    shuffle_samples, AsnnDataset, AsnnSample, AugmentConfig, TrialCountPolicy,
};
use asnn_core::io;
use asnn_core::model::{train_asnn, AsnnConfig};
use asnn_core::nn::{adam_update, AdamConfig, OutputHead};
use asnn_core::search::{
    compare_strategies, median, LoopConfig, RandomSearchConfig, Strategy, TabularOracle,
};
use asnn_core::tables;
use asnn_core::task::{
    load_mnist_idx, make_synthetic, Architecture, EvalBudget, Evaluator, MnistPaths, RealTrainer,
    SyntheticSpec,
};

type Criterion = (&'static str, fn() -> Verdict);

/// Outcome of one criterion.
enum Verdict {
    Pass(String),
    /// Measured and below target, reported without failing the suite.
    Unmet(String),
    /// Not attempted in this run.
    Skipped(String),
    Fail(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn asnn_bin() -> &'static str {
    env!("CARGO_BIN_EXE_asnn")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn criterion_1() -> Verdict {
    let out = scratch("c1");
    let (status, elapsed) = timed(|| {
        Command::new(asnn_bin())
            .args(["verify-tables", "--out"])
            .arg(&out)
            .output()
            .unwrap()
    });
    let report = tables::verify_embedded_tables();
    let mean_of = |recs: Vec<asnn_core::dataset::ArchRecord>, w: &[usize]| {
        recs.into_iter()
            .find(|r| r.arch.widths() == w)
            .map(|r| r.recomputed_mean())
            .unwrap()
    };
    let a = mean_of(tables::layer2_records(), &[256, 16]);
    let b = mean_of(tables::layer3_records(), &[128, 128, 16]);
    let counts: Vec<usize> = report.rows_per_table.iter().map(|(_, n)| *n).collect();
    let ok = status.status.success()
        && report.is_clean()
        && counts == [25, 64]
        && (a - 0.98310).abs() <= 5e-6
        && (b - 0.98171).abs() <= 5e-6
        && elapsed < Duration::from_secs(1);
    check(
        ok,
        format!(
            "89 rows, max deviation {:.1e}; (256,16) {a:.5}, (128,128,16) {b:.5}; {elapsed:.2?}",
            report.max_deviation
        ),
    )
}

fn criterion_2() -> Verdict {
    let (worst, elapsed) = timed(|| {
        (0..25u64)
            .map(|s| common::check_one(1000 + s, OutputHead::SoftmaxCrossEntropy, false))
            .chain(
                (0..25u64)
                    .map(|s| common::check_one(2000 + s, OutputHead::MeanSquaredError, false)),
            )
            .fold(0.0, f64::max)
    });
    check(
        worst < common::MAX_REL_ERR && elapsed < Duration::from_secs(30),
        format!("50 nets, max relative error {worst:.2e} (< 1e-4); {elapsed:.2?}"),
    )
}

fn criterion_3() -> Verdict {
    // First step from zero state: m_hat = g, v_hat = g^2, so w1 = w0 - lr * g / (|g| + eps).
    let cfg = AdamConfig::default();
    let mut worst: f64 = 0.0;
    for (w0, g) in [(0.0, 1.0), (0.5, -2.5), (-1.25, 0.003)] {
        let mut w = [w0];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_update(&mut w, &[g], &mut m, &mut v, 1, &cfg);
        let expected = w0 - 0.001 * g / (f64::abs(g) + 1e-7);
        worst = worst.max((w[0] - expected).abs());
    }
    check(
        worst <= 1e-12,
        format!("3 first steps, max |error| {worst:.1e} (<= 1e-12)"),
    )
}

fn criterion_4() -> Verdict {
    let records = tables::layer2_records();
    let ((ok_perm, counts, ok_shuffle), elapsed) = timed(|| {
        let d = AsnnDataset::ingest(records.clone(), TrialCountPolicy::Strict).unwrap();
        let samples = d
            .augment(&AugmentConfig {
                target_size: 10_000,
                seed: 42,
                ..AugmentConfig::default()
            })
            .unwrap();
        let sorted = |v: &[f64]| {
            let mut b: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            b.sort_unstable();
            b
        };
        let mut counts = vec![0usize; records.len()];
        let ok_perm = samples.iter().all(|s| {
            counts[s.source] += 1;
            let scaled: Vec<f64> = records[s.source]
                .accuracies
                .iter()
                .map(|a| a * 100.0)
                .collect();
            sorted(&s.input) == sorted(&scaled)
        });
        let key = |s: &AsnnSample| (s.source, s.input.map(f64::to_bits));
        let mut before: BTreeMap<_, usize> = BTreeMap::new();
        samples
            .iter()
            .for_each(|s| *before.entry(key(s)).or_default() += 1);
        let mut after: BTreeMap<_, usize> = BTreeMap::new();
        shuffle_samples(samples, 7)
            .iter()
            .for_each(|s| *after.entry(key(s)).or_default() += 1);
        (ok_perm, counts, before == after)
    });
    let balanced = counts.iter().all(|&c| c == 400);
    check(
        ok_perm && balanced && ok_shuffle && elapsed < Duration::from_secs(5),
        format!(
            "10000 samples, permutations {}, 400 per record {}, shuffle multiset {}; {elapsed:.2?}",
            ok_perm, balanced, ok_shuffle
        ),
    )
}

fn criterion_5() -> Verdict {
    let (errors, elapsed) = timed(|| {
        [[16.0, 16.0], [256.0, 256.0]].map(|target| {
            let samples: Vec<AsnnSample> = (0..500)
                .map(|i| AsnnSample {
                    input: [100.0; 10],
                    target: target.to_vec(),
                    source: i,
                })
                .collect();
            let model = train_asnn(&samples, &AsnnConfig::default()).unwrap();
            let p = model.predict_canonical().unwrap();
            p.0.iter()
                .zip(&target)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    });
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    check(
        worst <= 0.5 && elapsed < Duration::from_secs(60),
        format!(
            "default config, |error| (16,16) {:.3}, (256,256) {:.3} (<= 0.5); {elapsed:.2?}",
            errors[0], errors[1]
        ),
    )
}

/// ASNN settings for the 200-fit oracle benchmark. Topology, optimiser and
/// sample count are the defaults; epochs are cut to fit the runtime budget.
fn benchmark_asnn() -> AsnnConfig {
    AsnnConfig {
        epochs: 5,
        ..AsnnConfig::default()
    }
}

fn criterion_6() -> Verdict {
    const THRESHOLD: f64 = 0.9825;
    const SEEDS: usize = 20;
    const ITERATIONS: usize = 10;

    // Calibration: brute force over every integer 2-layer architecture in the hull.
    let quiet = TabularOracle::embedded(2)
        .unwrap()
        .with_noise_scale(0.0)
        .unwrap();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut above = 0usize;
    for l1 in 16..=256 {
        for l2 in 16..=256 {
            let m = quiet
                .mean_of(&Architecture::new(vec![l1, l2]).unwrap())
                .unwrap();
            if m > best.0 {
                best = (m, l1, l2);
            }
            above += usize::from(m >= THRESHOLD);
        }
    }
    let total = 241 * 241;
    let calibrated = (best.0 - 0.98310).abs() <= 5e-6 && best.0 >= THRESHOLD && above > 0;

    let oracle = TabularOracle::embedded(2).unwrap();
    let strategies = [
        Strategy::Asnn {
            name: "asnn".into(),
            config: LoopConfig {
                max_iterations: ITERATIONS,
                asnn: benchmark_asnn(),
                ..LoopConfig::default()
            },
            initial_records: tables::layer2_records(),
        },
        Strategy::Random {
            name: "random".into(),
            config: RandomSearchConfig {
                iterations: ITERATIONS,
                ..RandomSearchConfig::default()
            },
        },
    ];
    let (report, elapsed) =
        timed(|| compare_strategies(&strategies, SEEDS, 0, Some(THRESHOLD), &oracle).unwrap());
    let out = scratch("c6");
    fs::write(out.join("compare.csv"), io::compare_csv(&report)).unwrap();
    fs::write(
        out.join("summary.csv"),
        io::compare_summary_csv(&report, oracle.label()),
    )
    .unwrap();

    let asnn_median = report.summaries[0].median_best;
    let random_median = report.summaries[1].median_best;
    let suggested: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.strategy == "asnn")
        .map(|r| r.arch.widths()[0] as f64)
        .collect();
    let detail = format!(
        "sweep max {:.5} at ({},{}), {above}/{total} archs >= {THRESHOLD}; \
         ASNN median best {asnn_median:.5} (median suggested L1 {:.0}), random {random_median:.5}; \
         {elapsed:.1?}; curves in {}",
        best.0,
        best.1,
        best.2,
        median(&suggested),
        out.display()
    );
    if !calibrated
        || elapsed >= Duration::from_secs(300)
        || report.rows.len() != 2 * SEEDS * ITERATIONS
    {
        Verdict::Fail(detail)
    } else if asnn_median >= THRESHOLD {
        Verdict::Pass(detail)
    } else {
        Verdict::Unmet(detail)
    }
}

fn criterion_7() -> Verdict {
    let (result, elapsed) = timed(|| {
        let trainer = RealTrainer {
            dataset: make_synthetic(&SyntheticSpec::default()).unwrap(),
            budget: EvalBudget::desk(),
        };
        trainer
            .evaluate(&Architecture::new(vec![64, 32]).unwrap(), 3, 0)
            .unwrap()
    });
    check(
        result.mean >= 0.95 && result.accuracies.len() == 3 && elapsed < Duration::from_secs(120),
        format!(
            "(64,32) desk budget, K=3 accuracies {:?}, mean {:.4} (>= 0.95); {elapsed:.1?}",
            result
                .accuracies
                .iter()
                .map(|a| format!("{a:.4}"))
                .collect::<Vec<_>>(),
            result.mean
        ),
    )
}

fn criterion_8() -> Verdict {
    let Some(dir) = std::env::var_os("ASNN_MNIST_DIR") else {
        return Verdict::Skipped(
            "full-budget MNIST not reproducible at desk scale; set ASNN_MNIST_DIR to attempt \
             (448,65) vs 0.98363 +/- 0.005"
                .into(),
        );
    };
    let paths = MnistPaths::in_dir(Path::new(&dir));
    let trainer = RealTrainer {
        dataset: load_mnist_idx(&paths).unwrap(),
        budget: EvalBudget::paper(),
    };
    let (r, elapsed) = timed(|| {
        trainer
            .evaluate(&Architecture::new(vec![448, 65]).unwrap(), 10, 0)
            .unwrap()
    });
    check(
        (r.mean - 0.98363).abs() <= 0.005,
        format!(
            "(448,65) paper budget mean {:.5} vs 0.98363 +/- 0.005; {elapsed:.0?}",
            r.mean
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
depth = 2
seed = 17
trials = 3

[dataset.synthetic]
classes = 3
dim = 6
n_train = 300
n_test = 100
margin = 5.0

[search]
max_iterations = 3
augment_size = 400

[search.asnn]
hidden_widths = [8, 8]
epochs = 3

[random]
iterations = 4

[grid]
nodes = [4, 8]

[compare]
seeds = 3
"#;

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn criterion_9() -> Verdict {
    let root = scratch("c9");
    let config = root.join("run.toml");
    fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let runs: [(&str, &[&str]); 6] = [
        ("verify-tables", &[]),
        ("collect-grid", &["--backend", "oracle"]),
        ("collect-grid", &["--backend", "real"]),
        ("search-asnn", &["--backend", "oracle"]),
        ("search-random", &["--backend", "oracle"]),
        ("compare", &["--backend", "oracle"]),
    ];
    let mut problems = Vec::new();
    let mut files = 0;
    for (i, (cmd, extra)) in runs.iter().enumerate() {
        let out = root.join(format!("{i}-{cmd}"));
        let mut snaps = Vec::new();
        for _ in 0..2 {
            let _ = fs::remove_dir_all(&out);
            let status = Command::new(asnn_bin())
                .arg(cmd)
                .args(*extra)
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            if !status.status.success() {
                problems.push(format!(
                    "{cmd} failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            snaps.push(snapshot(&out));
        }
        files += snaps[0].len();
        if snaps[0] != snaps[1] || snaps[0].is_empty() {
            problems.push(format!("{cmd} {extra:?} output differs between runs"));
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("6 invocations x 2 runs, {files} files byte-identical")
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("table integrity", criterion_1),
        ("gradient correctness", criterion_2),
        ("Adam first step", criterion_3),
        ("augmentation faithfulness", criterion_4),
        ("ASNN constant fit", criterion_5),
        ("oracle end-to-end", criterion_6),
        ("desk real-trainer smoke", criterion_7),
        ("paper-scale MNIST", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let line = match run() {
            Verdict::Pass(d) => format!("PASS  {name}: {d}"),
            Verdict::Unmet(d) => format!("FAIL  {name} (reported, known gap): {d}"),
            Verdict::Skipped(d) => format!("SKIP  {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                format!("FAIL  {name}: {d}")
            }
        };
        println!("criterion {}  {line}", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
