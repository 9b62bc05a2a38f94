//! Acceptance criterion 12: full-pipeline reproducibility. `run` twice with
//! an identical config must produce byte-identical report CSVs.

use std::fs;
use std::path::Path;
use std::process::Command;

const CONFIG: &str = "\
[generate]
mode = synthetic
count = 6
iterations = 1
random_axioms = 6
concept_headroom = 6
role_headroom = 2
seed = 42

[train]
architectures = flat,deep,piecewise
epochs = 60
piecewise_epochs = 30
learning_rate = 0.0001
folds = 3
seed = 7

[eval]
levels = 0.0,0.3,0.6
seed = 11
";

fn elstm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elstm"))
}

fn run_dir(out: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = fs::read_dir(out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("run-"))
        .map(|e| e.path())
        .collect();
    assert_eq!(dirs.len(), 1, "expected exactly one run directory");
    dirs.pop().unwrap()
}

#[test]
fn criterion_12_full_pipeline_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("exp.cfg");
    fs::write(&config_path, CONFIG).unwrap();
    let out = tmp.path().join("out");

    let status = elstm()
        .args(["generate", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let status =
        elstm().args(["run", "--config"]).arg(&config_path).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let dir = run_dir(&out);
    let reports = ["report_flat.csv", "report_deep.csv", "report_piecewise.csv"];
    let first: Vec<Vec<u8>> = reports.iter().map(|r| fs::read(dir.join(r)).unwrap()).collect();

    // Second run of the same config lands in the same hash-named directory
    // and must overwrite it with identical bytes.
    let status =
        elstm().args(["run", "--config"]).arg(&config_path).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let second: Vec<Vec<u8>> = reports.iter().map(|r| fs::read(dir.join(r)).unwrap()).collect();

    for ((name, a), b) in reports.iter().zip(&first).zip(&second) {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    println!("criterion 12: {} report CSVs byte-identical across reruns", reports.len());
}
