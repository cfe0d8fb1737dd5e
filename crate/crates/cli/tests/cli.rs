use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use sphquant_cli::{run, sidecar_path, CliError, ExperimentSpec, Recipe};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphquant"))
}

fn spec(recipe: Recipe, params: &[(&str, &str)], out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        recipe,
        params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        output: out.to_path_buf(),
        seed: None,
    }
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn optimize_row_for_d3_n9() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt.csv");
    let status = bin()
        .args(["optimize", "--d", "3", "--n", "9", "--s", "2", "--target", "sphere", "--family", "sphere"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = data_rows(&out);
    assert_eq!(rows[0], "d,n,s,param_star,distortion");
    assert_eq!(rows[1], "3,9,2,0.8,0.36");
}

#[test]
fn evt_row_for_d3_n100() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("evt.csv");
    run(&spec(Recipe::Evt, &[("d", "3"), ("n", "100"), ("s", "2")], &out)).unwrap();
    let rows = data_rows(&out);
    assert_eq!(rows[0], "d,n,s,kappa,a_hat,e_s");
    assert_eq!(rows[1], "3,100,2,0.01,0.98,0.0396");
}

#[test]
fn sphere_left_figure_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    let summary = run(&spec(Recipe::Figure, &[("name", "sphere-left")], &out)).unwrap();
    assert_eq!(summary.rows, 48 * 5);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1 + 48 * 5);
    let first: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(&first[..3], ["3", "10", "1"]);
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(&last[..3], ["50", "100000", "1"]);
    for row in &rows[1..] {
        let a: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(a > 0.0 && a < 1.0, "{row}");
    }
}

#[test]
fn sidecar_records_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    run(&spec(Recipe::Bounds, &[("d", "5:7"), ("n", "100,1e3")], &out)).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&out)).unwrap()).unwrap();
    assert_eq!(meta["recipe"], "bounds");
    assert_eq!(meta["params"]["d"], "5:7");
    assert_eq!(meta["rows"], 6);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let params = [
        ("d", "4,6"),
        ("n", "10,50"),
        ("s", "2"),
        ("target", "ball"),
        ("family", "ball"),
        ("param", "0.7"),
        ("samples", "4000"),
        ("batches", "10"),
    ];
    let mut outputs = vec![];
    for i in 0..2 {
        let out = dir.path().join(format!("mc{i}.csv"));
        let mut s = spec(Recipe::Mc, &params, &out);
        s.seed = Some(42);
        run(&s).unwrap();
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn every_cell_is_finite() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(Recipe, Vec<(&str, &str)>)> = vec![
        (Recipe::Distortion, vec![("d", "2,5,20"), ("n", "1,30"), ("s", "1,4"), ("target", "normal"), ("family", "sphere"), ("param", "0.5,1.5")]),
        (Recipe::Optimize, vec![("d", "4"), ("n", "20"), ("s", "2"), ("target", "ball"), ("family", "atom-sphere"), ("radius", "0.8")]),
        (Recipe::Evt, vec![("d", "3:12:3"), ("n", "2,1e4"), ("s", "1,2,4"), ("target", "normal")]),
        (Recipe::Factorial, vec![("d", "2,9")]),
        (Recipe::Figure, vec![("name", "kappa"), ("d", "3,30"), ("n", "10,1e5")]),
        (Recipe::Crossover, vec![("d", "4"), ("n-hi", "64")]),
    ];
    for (i, (recipe, params)) in cases.iter().enumerate() {
        let out = dir.path().join(format!("c{i}.csv"));
        run(&spec(*recipe, params, &out)).unwrap_or_else(|e| panic!("{recipe:?}: {e}"));
        for row in &data_rows(&out)[1..] {
            for cell in row.split(',') {
                if let Ok(v) = cell.parse::<f64>() {
                    assert!(v.is_finite(), "{recipe:?}: {row}");
                }
            }
        }
    }
}

fn expect_invalid(recipe: Recipe, params: &[(&str, &str)], key: &str) {
    let dir = tempfile::tempdir().unwrap();
    match run(&spec(recipe, params, &dir.path().join("x.csv"))) {
        Err(e @ CliError::Invalid { .. }) => {
            assert_eq!(e.exit_code(), 2);
            let CliError::Invalid { key: k, .. } = e else { unreachable!() };
            assert_eq!(k, key);
        }
        other => panic!("expected invalid `{key}`, got {other:?}"),
    }
}

#[test]
fn invalid_specs_name_the_key() {
    expect_invalid(Recipe::Optimize, &[("d", "3"), ("s", "2")], "n");
    expect_invalid(Recipe::Optimize, &[("d", "3"), ("n", "9"), ("s", "2"), ("colour", "red")], "colour");
    expect_invalid(Recipe::Distortion, &[("d", "1"), ("n", "9"), ("s", "2")], "d");
    expect_invalid(Recipe::Distortion, &[("d", "3"), ("n", "0"), ("s", "2")], "n");
    expect_invalid(Recipe::Distortion, &[("d", "3"), ("n", "9"), ("s", "2"), ("target", "cube")], "target");
    expect_invalid(Recipe::Figure, &[("name", "nope")], "name");
    expect_invalid(Recipe::Bounds, &[("d", "4"), ("n", "10")], "d");
}

#[test]
fn exit_codes_from_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let missing = bin().args(["evt", "--d", "3", "--s", "2", "--out"]).arg(&out).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("`n`"));

    let failing = bin()
        .args(["distortion", "--d", "10", "--n", "100", "--s", "2", "--target", "normal", "--family", "normal"])
        .args(["--rel-tol", "1e-300", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&failing.stderr).contains("d=10 n=100 s=2"));

    let spec_file = dir.path().join("spec.json");
    let mut params = BTreeMap::new();
    params.insert("d", "3");
    params.insert("n", "9");
    params.insert("s", "2");
    params.insert("typo", "1");
    let json = serde_json::json!({ "recipe": "optimize", "params": params, "output": out });
    std::fs::write(&spec_file, json.to_string()).unwrap();
    let bad = bin().args(["run", "--spec"]).arg(&spec_file).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("`typo`"));
}

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let spec_file = dir.path().join("spec.json");
    let json = serde_json::json!({ "recipe": "factorial", "params": { "d": "3", "s": "2" }, "output": out });
    std::fs::write(&spec_file, json.to_string()).unwrap();
    assert!(bin().args(["run", "--spec"]).arg(&spec_file).status().unwrap().success());
    assert_eq!(data_rows(&out)[1], "3,2,0.5,0.25");
}
