use std::path::Path;
use std::process::{Command, Output};

use dptlab::exact::ratio;
use dptlab::parse_fraction;
use dptlab_cli::{compute_experiment, ExperimentConfig, Row};

fn dptlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dptlab")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_rows(path: &Path) -> Vec<Row> {
    csv::Reader::from_path(path).unwrap().deserialize().map(|r| r.unwrap()).collect()
}

const SLIDING: &str = r#"
seed = 100
instances = 50

[family]
kind = "sliding-window"
n = 24
k = 6

[corruption]
kind = "random-set-corruption"
delta = 0.1

[output]
csv = "rows.csv"
"#;

#[test]
fn sliding_window_rows_satisfy_four_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "sliding.toml", SLIDING);
    let out = dptlab(&["run", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(&dir.path().join("rows.csv"));
    assert_eq!(rows.len(), 50);
    let seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, (100..150).collect::<Vec<_>>());
    for row in &rows {
        assert_eq!((row.family.as_str(), row.n, row.k, row.t), ("sliding-window", 24, 6, None));
        // 24 windows, ⌈2.4⌉ = 3 corrupted
        assert_eq!(parse_fraction(&row.delta_planted).unwrap(), ratio(1, 8));
        let (eps, beta) = (parse_fraction(&row.epsilon).unwrap(), parse_fraction(&row.beta).unwrap());
        let bound = parse_fraction(&row.bound).unwrap();
        assert_eq!(bound, &eps * ratio(4, 1));
        assert!(beta <= bound);
        assert_eq!(row.pass, "true");
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["rows"], 50);
    assert_eq!(summary["passed"], 50);
}

#[test]
fn codeword_rows_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = SLIDING.replace("kind = \"random-set-corruption\"\ndelta = 0.1", "kind = \"none\"");
    let config = write(dir.path(), "codeword.toml", &text);
    let out = dptlab(&["run", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for row in read_rows(&dir.path().join("rows.csv")) {
        assert_eq!((row.delta_planted.as_str(), row.epsilon.as_str(), row.beta.as_str()), ("0", "0", "0"));
        assert_eq!(row.pass, "true");
    }
}

#[test]
fn missing_file_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "missing.toml",
        "seed = 1\n[family]\nkind = \"graph-file\"\npath = \"nowhere.json\"\n[output]\ncsv = \"x.csv\"\n",
    );
    let out = dptlab(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config stage") && err.contains("nowhere.json"), "{err}");

    let out = dptlab(&["run", "absent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = dptlab(&["test", "--graph", "g.json", "--table", "t.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("load stage"));
}

#[test]
fn randomized_steps_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "noseed.toml", &SLIDING.replace("seed = 100\n", ""));
    let out = dptlab(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // the global flag supplies it
    let out = dptlab(&["--seed", "5", "run", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_rows(&dir.path().join("rows.csv"))[0].seed, 5);
}

#[test]
fn invalid_family_parameters_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", &SLIDING.replace("k = 6", "k = 30"));
    let out = dptlab(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("build stage"));
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mc = SLIDING.replace("[output]", "[tester]\nmode = \"monte-carlo\"\ntrials = 2000\n\n[output]");
    for (name, text) in [("exact.toml", SLIDING.to_string()), ("mc.toml", mc)] {
        let config = write(dir.path(), name, &text);
        let mut outputs = Vec::new();
        for out in ["a.csv", "b.csv"] {
            let status = dptlab(&["run", config.to_str().unwrap(), "--out", out], dir.path());
            assert!(status.status.success());
            outputs.push(std::fs::read(dir.path().join(out)).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name}");
    }
}

#[test]
fn pass_column_is_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let text = SLIDING.replace("delta = 0.1", "delta = \"1/2\"").replace("instances = 50", "instances = 20");
    let config = ExperimentConfig::load(&write(dir.path(), "half.toml", &text)).unwrap();
    let (rows, _) = compute_experiment(&config).unwrap();
    for row in rows {
        let beta = parse_fraction(&row.beta).unwrap();
        let bound = parse_fraction(&row.bound).unwrap();
        assert_eq!(row.pass, (beta <= bound).to_string());
    }
}

#[test]
fn families_without_a_bound_report_na() {
    let dir = tempfile::tempdir().unwrap();
    let text = "seed = 3\ninstances = 4\n[family]\nkind = \"johnson\"\nn = 8\nk = 3\nt = 1\n\
                [corruption]\nkind = \"per-set-single-flip\"\n\
                [certify]\nlambda = \"1/2\"\nrho = \"1/2\"\n\
                [output]\ncsv = \"j.csv\"\ncertificate = \"cert.json\"\n";
    let config = write(dir.path(), "johnson.toml", text);
    let out = dptlab(&["run", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for row in read_rows(&dir.path().join("j.csv")) {
        assert_eq!((row.t, row.bound.as_str(), row.pass.as_str()), (Some(1), "", "na"));
        assert_eq!(parse_fraction(&row.delta_planted).unwrap(), ratio(1, 1));
    }
    let cert: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert["overall"], false);
}

#[test]
fn subcommands_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let out = dptlab(args, d);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    ok(&["build-domain", "--family", "clique-slice", "--n", "8", "-o", "g.json"]);
    ok(&["adversary", "--domain", "g.json", "--kind", "cluster", "--coord", "1", "--seed", "2", "-o", "t.json"]);
    let test: serde_json::Value = serde_json::from_slice(&ok(&["test", "--graph", "g.json", "--table", "t.json"])).unwrap();
    assert_eq!(test["exact"], "0");
    let decode: serde_json::Value =
        serde_json::from_slice(&ok(&["decode", "--domain", "g.json", "--table", "t.json"])).unwrap();
    assert_eq!(decode["beta"], "0");

    let spectrum = ok(&["spectrum", "--graph", "g.json", "--format", "csv"]);
    assert!(String::from_utf8(spectrum).unwrap().starts_with("index,eigenvalue\n"));
    let cert: serde_json::Value =
        serde_json::from_slice(&ok(&["certify", "--graph", "g.json", "--lambda", "1/2", "--rho", "1/2"])).unwrap();
    assert_eq!(cert["cond2"]["min_retention"], "1/2");

    let amp = ok(&["amplify", "--n", "12", "--d", "3", "--seed", "4", "--format", "csv"]);
    assert_eq!(String::from_utf8(amp).unwrap().lines().count(), 1 + 4);
    let out = dptlab(&["amplify", "--n", "12", "--d", "3"], d);
    assert_eq!(out.status.code(), Some(2));
}
