use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn evogen(args: &[&str], data_env: bool) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_evogen"));
    cmd.args(args).env_remove("EVOGEN_DATA_DIR");
    if data_env {
        cmd.env("EVOGEN_DATA_DIR", data_dir());
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn quick_cfg(dir: &Path) -> String {
    let path = dir.join("quick.cfg");
    std::fs::write(&path, "ga.generations = 3\nga.population_size = 4\n").unwrap();
    path.to_string_lossy().to_string()
}

#[test]
fn missing_data_file_without_default_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evogen(&["generate", "--dataset", "iris", "--out", tmp.path().to_str().unwrap()], false);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data-file"));
}

#[test]
fn bad_flags_exit_with_two() {
    assert_eq!(code(&evogen(&["generate", "--dataset", "iris", "--bogus"], true)), 2);
    assert_eq!(code(&evogen(&["generate", "--dataset", "mnist"], true)), 2);
    assert_eq!(code(&evogen(&["generate", "--dataset", "iris", "--seed", "minus one"], true)), 2);
    assert_eq!(code(&evogen(&[], true)), 2);
}

#[test]
fn too_few_model_runs_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evogen(
        &["experiment", "--dataset", "iris", "--model-runs", "2", "--out", tmp.path().to_str().unwrap()],
        true,
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("5 model runs"));
}

#[test]
fn empty_bench_sizes_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evogen(&["bench", "--dataset", "iris", "--sizes", "", "--out", tmp.path().to_str().unwrap()], true);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "ga.populaton_size = 4\n").unwrap();
    let out = evogen(
        &["generate", "--dataset", "iris", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()],
        true,
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn unreadable_data_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.data");
    let out = evogen(
        &[
            "generate",
            "--dataset",
            "iris",
            "--data-file",
            missing.to_str().unwrap(),
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        false,
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn generate_writes_balanced_data_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_cfg(tmp.path());
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let out = evogen(
            &["generate", "--dataset", "iris", "--regime", "scarcity", "--n-generated", "150", "--seed", "7",
              "--config", &cfg, "--out", dir.to_str().unwrap()],
            true,
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let a = run("a");
    let csv = std::fs::read_to_string(a.join("generated.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len(), 150);
    for class in ["0", "1", "2"] {
        assert_eq!(labels.iter().filter(|&&l| l == class).count(), 50);
    }
    assert_eq!(std::fs::read_to_string(a.join("trace.csv")).unwrap().lines().count(), 4);
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.starts_with('#'));
    assert!(manifest.contains("command = generate"));
    assert!(manifest.contains("ga.generations = 3"));
    assert!(manifest.contains("seed = 7"));

    let b = run("b");
    assert_eq!(std::fs::read(a.join("generated.csv")).unwrap(), std::fs::read(b.join("generated.csv")).unwrap());
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_cfg(tmp.path());
    let dir = tmp.path().join("o");
    let out = evogen(
        &["generate", "--dataset", "iris", "--config", &cfg, "--generations", "2", "--out", dir.to_str().unwrap()],
        true,
    );
    assert_eq!(code(&out), 0);
    let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("ga.generations = 2"));
    assert!(manifest.contains("ga.population_size = 4"));
}

#[test]
fn distribution_checks_attribute_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let five = tmp.path().join("five.csv");
    std::fs::write(&five, "a,b,c,d,e,label\n1,2,3,4,5,0\n2,3,4,5,6,1\n3,4,5,6,7,2\n").unwrap();
    let out = evogen(
        &["distribution", "--dataset", "iris", "--generated", five.to_str().unwrap(), "--out", tmp.path().join("d").to_str().unwrap()],
        true,
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn self_comparison_has_unit_p_values() {
    let tmp = tempfile::tempdir().unwrap();
    let iris = std::fs::read_to_string(data_dir().join("iris.data")).unwrap();
    let mut csv = String::from("a,b,c,d,label\n");
    for line in iris.lines().filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let label = match f[4] {
            "Iris-setosa" => 0,
            "Iris-versicolor" => 1,
            _ => 2,
        };
        csv += &format!("{},{},{},{},{label}\n", f[0], f[1], f[2], f[3]);
    }
    let same = tmp.path().join("same.csv");
    std::fs::write(&same, csv).unwrap();
    let dir = tmp.path().join("d");
    let out = evogen(
        &["distribution", "--dataset", "iris", "--generated", same.to_str().unwrap(), "--out", dir.to_str().unwrap()],
        true,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.join("distribution.csv")).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split(',').collect();
    let p_col = header.iter().position(|h| *h == "p_value").unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 8, "two rows per attribute");
    for row in rows {
        let p = row.split(',').nth(p_col).unwrap();
        assert_eq!(p.parse::<f64>().unwrap(), 1.0, "{row}");
    }
    let scatter = std::fs::read_to_string(dir.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + 2 * 150 * 4);
}

#[test]
fn bench_writes_tables_and_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    let out = evogen(
        &["bench", "--dataset", "iris", "--sizes", "30,60,120,240", "--generations", "2", "--repeats", "1",
          "--out", dir.to_str().unwrap()],
        true,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["bench_time.csv", "bench_memory.csv"] {
        assert_eq!(std::fs::read_to_string(dir.join(name)).unwrap().lines().count(), 5, "{name}");
    }
    let fits = std::fs::read_to_string(dir.join("bench_fits.csv")).unwrap();
    let memory = fits.lines().find(|l| l.starts_with("memory,linear")).unwrap();
    assert_eq!(memory.rsplit(',').next().unwrap().parse::<f64>().unwrap(), 1.0);
    let time_fits = std::fs::read_to_string(dir.join("bench_time_fits.csv")).unwrap();
    assert!(time_fits.contains("time,linear") && time_fits.contains("time,quadratic"));
}

#[test]
fn replay_rejects_manifest_without_command() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("manifest.txt");
    std::fs::write(&manifest, "dataset = iris\n").unwrap();
    assert_eq!(code(&evogen(&["replay", "--manifest", manifest.to_str().unwrap()], true)), 2);
}
