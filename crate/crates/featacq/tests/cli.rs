//! CLI contract tests: exit codes, error messages that name the offending
//! input, and persistence round trips through the command surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use featacq::acquisition::predict;
use featacq::dataset::NormStats;
use featacq::io::{load_csv, TargetSpec};
use featacq::model::{fit_engine, EngineChoice, Model};
use featacq::state::ObservedState;
use featacq::synth::{asia_dag, gen_linear_gaussian_bn, LinearGaussianBnSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_featacq")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin())
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("spawn CLI");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Fresh scratch directory per test so parallel tests never collide.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("featacq-cli-{}-{name}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// CLI-generated asia classification benchmark: 600 rows, 7 features plus
/// a label column.
fn gen_asia_csv(root: &Path) -> PathBuf {
    let out = root.join("gen");
    let (code, _, err) = run(&[
        "gen-data",
        "--generator",
        "asia",
        "--n",
        "600",
        "--bn-target",
        "7",
        "--seed",
        "11",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0, "gen-data failed: {err}");
    out.join("data.csv")
}

#[test]
fn missing_data_file_exits_3_and_names_the_path() {
    let root = scratch("missing");
    let gone = root.join("no-such-file.csv");
    let (code, _, err) = run(&[
        "fit",
        "--data",
        &gone.display().to_string(),
        "--label",
        "label",
        "--engine",
        "gaussian",
        "--out",
        &root.join("out").display().to_string(),
    ]);
    assert_eq!(code, 3, "stderr: {err}");
    assert!(err.contains("no-such-file.csv"), "stderr does not name the file: {err}");
}

#[test]
fn unknown_config_key_exits_2() {
    let root = scratch("badkey");
    let cfg = root.join("cfg.toml");
    std::fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let (code, _, err) = run(&["fit", "--config", &cfg.display().to_string()]);
    assert_eq!(code, 2, "stderr: {err}");
    assert!(err.contains("bogus_key"), "stderr does not name the key: {err}");
}

#[test]
fn unknown_engine_exits_2() {
    let root = scratch("badengine");
    let csv = gen_asia_csv(&root);
    let (code, _, err) = run(&[
        "fit",
        "--data",
        &csv.display().to_string(),
        "--label",
        "label",
        "--engine",
        "kernel:3",
        "--out",
        &root.join("out").display().to_string(),
    ]);
    assert_eq!(code, 2, "stderr: {err}");
}

#[test]
fn unknown_policy_exits_2() {
    let root = scratch("badpolicy");
    let csv = gen_asia_csv(&root);
    let model = root.join("out").join("model.json");
    let (code, _, err) = run(&[
        "fit",
        "--data",
        &csv.display().to_string(),
        "--label",
        "label",
        "--engine",
        "class-conditional:1",
        "--seed",
        "5",
        "--out",
        &root.join("out").display().to_string(),
    ]);
    assert_eq!(code, 0, "fit failed: {err}");
    let (code, _, err) = run(&[
        "acquire",
        "--data",
        &csv.display().to_string(),
        "--label",
        "label",
        "--model",
        &model.display().to_string(),
        "--policy",
        "oracle",
        "--budget",
        "2",
        "--out",
        &root.join("acq").display().to_string(),
    ]);
    assert_eq!(code, 2, "stderr: {err}");
}

#[test]
fn unknown_flag_exits_2() {
    let (code, _, _) = run(&["fit", "--no-such-flag"]);
    assert_eq!(code, 2);
}

#[test]
fn too_few_rows_to_fit_exits_4() {
    let root = scratch("toofew");
    let csv = root.join("tiny.csv");
    let mut text = String::new();
    for f in 0..20 {
        text.push_str(&format!("f{f},"));
    }
    text.push_str("label\n");
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    for r in 0..12 {
        for _ in 0..20 {
            text.push_str(&format!("{:.4},", rng.random_range(-1.0..1.0f64)));
        }
        text.push_str(&format!("{}\n", r % 2));
    }
    std::fs::write(&csv, text).unwrap();
    let (code, _, err) = run(&[
        "fit",
        "--data",
        &csv.display().to_string(),
        "--label",
        "label",
        "--engine",
        "class-conditional:1",
        "--out",
        &root.join("out").display().to_string(),
    ]);
    assert_eq!(code, 4, "stderr: {err}");
    assert!(err.contains("samples"), "stderr: {err}");
}

#[test]
fn non_numeric_cell_exits_3_naming_row_and_column() {
    let root = scratch("badcell");
    let csv = root.join("bad.csv");
    std::fs::write(&csv, "a,b,label\n0.1,0.2,0\n0.3,oops,1\n0.5,0.6,0\n").unwrap();
    let (code, _, err) = run(&[
        "fit",
        "--data",
        &csv.display().to_string(),
        "--label",
        "label",
        "--engine",
        "gaussian",
        "--out",
        &root.join("out").display().to_string(),
    ]);
    assert_eq!(code, 3, "stderr: {err}");
    assert!(
        err.contains("row 2, column 2") && err.contains("oops"),
        "stderr does not locate the cell: {err}"
    );
}

#[test]
fn fitted_model_reloads_with_identical_densities() {
    let root = scratch("reload");
    let csv = gen_asia_csv(&root);
    let out = root.join("out");
    let (code, _, err) = run(&[
        "fit",
        "--data",
        &csv.display().to_string(),
        "--label",
        "label",
        "--engine",
        "class-conditional:2",
        "--seed",
        "5",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0, "fit failed: {err}");
    let reloaded = Model::load(&out.join("model.json")).unwrap();

    // The same pipeline in process: load, split, normalize on training
    // statistics, fit.
    let (ds, _) = load_csv(&csv, TargetSpec::Label("label".into()), false).unwrap();
    let (mut train, _, _) = ds.split((0.8, 0.1, 0.1), 5).unwrap();
    let stats = NormStats::fit(&train.rows);
    train.rows = stats.apply(&train.rows);
    let reference = fit_engine(&train, EngineChoice::ClassConditional(2), 5).unwrap();

    // 100 probe states: random observation subsets with values taken from
    // the dataset itself.
    let d = ds.d();
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for probe in 0..100 {
        let r = rng.random_range(0..ds.n());
        let row = ds.row(r);
        let k = rng.random_range(0..d);
        let mut pairs = Vec::new();
        let mut free: Vec<usize> = (0..d).collect();
        for _ in 0..k {
            let pick = free.swap_remove(rng.random_range(0..free.len()));
            pairs.push((pick, row[pick]));
        }
        let state = ObservedState::from_pairs(d, &pairs).unwrap();
        let a = predict(&reference.engine, &state, None).unwrap();
        let b = predict(&reloaded.engine, &state, None).unwrap();
        match (a, b) {
            (
                featacq::acquisition::Prediction::Class { posterior: pa, .. },
                featacq::acquisition::Prediction::Class { posterior: pb, .. },
            ) => {
                for (x, y) in pa.iter().zip(&pb) {
                    assert!(
                        (x - y).abs() <= 1e-12,
                        "probe {probe}: posterior {x} vs reloaded {y}"
                    );
                }
            }
            _ => panic!("expected class predictions"),
        }
    }
}

#[test]
fn generated_csv_round_trips_exactly() {
    let root = scratch("roundtrip");
    let csv = gen_asia_csv(&root);
    let (loaded, _) = load_csv(&csv, TargetSpec::Label("label".into()), false).unwrap();

    let (dag, names) = asia_dag();
    let spec = LinearGaussianBnSpec { n: 600, target: 7, classify: true, seed: 11 };
    let expected = gen_linear_gaussian_bn(&dag, &names, &spec).unwrap().dataset;

    assert_eq!(loaded.feature_names, expected.feature_names);
    assert_eq!(loaded.labels, expected.labels);
    assert_eq!(loaded.n(), expected.n());
    assert_eq!(loaded.d(), expected.d());
    // Floats are written in shortest-roundtrip form, so the parsed matrix
    // is bit-identical to the generated one.
    assert_eq!(loaded.rows, expected.rows);
}
