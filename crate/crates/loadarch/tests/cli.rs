use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn loadarch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadarch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_suite(dir: &Path, extra: &str) -> String {
    let path = dir.join("suite.toml");
    let text = format!(
        r#"
seed = 2
[data.generate]
preset = "three_group"
households_per_group = 3
[evaluation]
threshold = 5
[[experiment]]
name = "km"
algorithm = "kmeans"
m = [2, 3]
normalization = ["unit", "zero_one"]
kmeans = {{ n_init = 2 }}
{extra}
"#
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_score_export_archetype() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "");
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let run = loadarch(&[
        "run",
        "--config",
        &config,
        "--out-dir",
        out,
        "--threads",
        "2",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("4 cells, 0 failed"));
    assert!(stdout.contains("SCORE"));

    let score = loadarch(&["score", "--out-dir", out]);
    assert_eq!(code(&score), 0);
    assert_eq!(
        fs::read_to_string(Path::new(out).join("scorecard.txt")).unwrap(),
        String::from_utf8_lossy(&score.stdout)
    );

    let export = loadarch(&["export", "km.unit.none.z0.m3", "--out-dir", out]);
    assert_eq!(code(&export), 0);
    let csv =
        fs::read_to_string(Path::new(out).join("cells/km.unit.none.z0.m3/daytype_likelihood.csv"))
            .unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "cluster,members,mon,tue,wed,thu,fri,sat,sun"
    );
    for line in lines {
        let sum: f64 = line
            .split(',')
            .skip(2)
            .map(|v| v.parse::<f64>().unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    let rdlps = loadarch(&[
        "export",
        "km.unit.none.z0.m3",
        "--kind",
        "rdlps",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&rdlps), 0);

    let arch = loadarch(&["archetype", "--config", &config, "--out-dir", out]);
    assert_eq!(code(&arch), 0, "{}", String::from_utf8_lossy(&arch.stderr));
    assert!(String::from_utf8_lossy(&arch.stdout).contains("archetype rural"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(code(&loadarch(&["run", "--out-dir", out])), 1);
    assert_eq!(code(&loadarch(&["frobnicate"])), 1);
    assert_eq!(code(&loadarch(&["--help"])), 0);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\n[[experiment]]\nname = \"x\"\n").unwrap();
    assert_eq!(
        code(&loadarch(&[
            "run",
            "--config",
            bad.to_str().unwrap(),
            "--out-dir",
            out
        ])),
        1
    );

    let extra = "[[experiment]]\nname = \"bad\"\nalgorithm = \"som_kmeans\"\ns = 2\nm = 5\nnormalization = \"unit\"\n";
    let config = write_suite(dir.path(), extra);
    let run = loadarch(&["run", "--config", &config, "--out-dir", out]);
    assert_eq!(code(&run), 2);
    assert!(String::from_utf8_lossy(&run.stderr).contains("bad.unit.none.z0.s2.m5"));
    assert_eq!(code(&loadarch(&["export", "nope", "--out-dir", out])), 1);
}

#[test]
fn generate_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let g = loadarch(&[
        "generate",
        "--households-per-group",
        "2",
        "--seed",
        "9",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&g), 0);
    for f in ["profiles.csv", "survey.csv", "truth.csv"] {
        assert!(dir.path().join(f).is_file());
    }
    let profiles = loadarch::io::read_profiles(&dir.path().join("profiles.csv")).unwrap();
    assert_eq!(profiles.len(), 6 * 60);
}

#[test]
fn suite_on_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let g = loadarch(&[
        "generate",
        "--households-per-group",
        "3",
        "--out-dir",
        data.to_str().unwrap(),
    ]);
    assert_eq!(code(&g), 0);
    let config = dir.path().join("files.toml");
    fs::write(
        &config,
        r#"
seed = 4
[data]
profiles = "data/profiles.csv"
survey = "data/survey.csv"
[evaluation]
threshold = 5
[[experiment]]
name = "som"
algorithm = "som"
s = [2, 3]
normalization = "unit"
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = loadarch(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let ids: Vec<&str> = manifest["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["som.unit.none.z0.s2", "som.unit.none.z0.s3"]);
    assert!(!out.join("data").exists());
}
