use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qframe(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qframe")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn flip(c: char) -> char {
    if c == '1' {
        '0'
    } else {
        '1'
    }
}

const FAST: &str = "seed = 3\n[schedule]\ngate_rate = 20000.0\n[ldpc]\ntrials = 50\n";

#[test]
fn help_lists_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qframe(&["--help"], tmp.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("did not converge"));
}

#[test]
fn invalid_config_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[link]\nmu = -1.0\n");
    assert_eq!(code(&qframe(&["--config", &cfg, "keyrate"], tmp.path())), 2);
    let cfg = write(tmp.path(), "typo.toml", "[lnik]\nmu = 0.5\n");
    assert_eq!(code(&qframe(&["--config", &cfg, "simulate"], tmp.path())), 2);
    let missing = tmp.path().join("absent.toml").to_string_lossy().into_owned();
    assert_eq!(code(&qframe(&["--config", &missing, "simulate"], tmp.path())), 2);
    // 700 rows for n = 4000 at 3 % is under the Shannon bound
    assert_eq!(code(&qframe(&["ldpc", "design", "--n", "4000", "--m", "700", "--row-weight", "20"], tmp.path())), 2);
    assert_eq!(code(&qframe(&["ldpc", "sim", "--arithmetic", "fixed7"], tmp.path())), 2);
}

#[test]
fn malformed_inputs_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let counts = write(tmp.path(), "counts.csv", "schema_version,pol_cframe,pol_qubit\n1,H\n");
    assert_eq!(code(&qframe(&["keyrate", "--counts", &counts], tmp.path())), 3);
    let alist = write(tmp.path(), "h.alist", "not a matrix\n");
    let key = write(tmp.path(), "key.txt", "0101\n");
    assert_eq!(code(&qframe(&["ldpc", "syndrome", "--matrix", &alist, "--key", &key], tmp.path())), 3);
}

#[test]
fn ldpc_round_trip_and_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "run.toml", FAST);
    assert_eq!(code(&qframe(&["--config", &cfg, "ldpc", "design"], &d.join("design"))), 0);
    let alist = d.join("design/matrix.alist").to_string_lossy().into_owned();

    let key: String = (0..200).map(|i| if (i * 31) % 7 < 3 { '1' } else { '0' }).collect();
    let mut noisy: Vec<char> = key.chars().collect();
    for j in [5, 77, 150] {
        noisy[j] = flip(noisy[j]);
    }
    let noisy: String = noisy.into_iter().collect();
    let key_path = write(d, "key.txt", &key);
    let rec_path = write(d, "received.txt", &noisy);
    let o = qframe(&["ldpc", "syndrome", "--matrix", &alist, "--key", &key_path], d);
    assert_eq!(code(&o), 0);
    let syn = d.join("syndrome.txt").to_string_lossy().into_owned();
    assert_eq!(fs::read_to_string(&syn).unwrap().trim().len(), 60);

    let o =
        qframe(&["--config", &cfg, "ldpc", "decode", "--matrix", &alist, "--received", &rec_path, "--syndrome", &syn, "--qber", "0.02"], d);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["corrected"].as_str().unwrap(), key);

    // half the bits flipped cannot be corrected
    let garbage: String = key.chars().enumerate().map(|(i, c)| if i % 2 == 0 { flip(c) } else { c }).collect();
    let g = write(d, "garbage.txt", &garbage);
    let o = qframe(&["ldpc", "decode", "--matrix", &alist, "--received", &g, "--syndrome", &syn, "--qber", "0.02", "--max-iter", "5"], d);
    assert_eq!(code(&o), 4);
    assert!(d.join("decoded.json").exists());
}

#[test]
fn simulate_then_keyrate_with_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "run.toml", FAST);
    let o = qframe(&["--config", &cfg, "simulate", "--duration", "70"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["frames"], 10);
    for f in ["session.jsonl", "counts.csv", "summary.json"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let log = fs::read_to_string(d.join("session.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 20);
    for line in log.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }

    let counts = d.join("counts.csv").to_string_lossy().into_owned();
    let o = qframe(&["--config", &cfg, "keyrate", "--counts", &counts], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let k: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(k["mu_opt"].as_f64().unwrap() > 0.1);
    assert!(k["rate_c"].is_number());
    let rates = fs::read_to_string(d.join("rates.csv")).unwrap();
    assert!(rates.lines().count() > 10);
}

#[test]
fn table_format_switches_extension() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "run.toml", FAST);
    assert_eq!(code(&qframe(&["--config", &cfg, "--format", "jsonl", "simulate", "--duration", "14"], d)), 0);
    let names: Vec<String> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(names.iter().any(|n| n.starts_with("qber") && n.ends_with(".jsonl")), "{names:?}");
    assert!(!names.iter().any(|n| n.starts_with("qber") && n.ends_with(".csv")), "{names:?}");
    let qber = names.iter().find(|n| n.starts_with("qber")).unwrap();
    let text = fs::read_to_string(d.join(qber)).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "run.toml", FAST);
    let run = |seed: &str, sub: &str| {
        let out = d.join(sub);
        assert_eq!(code(&qframe(&["--config", &cfg, "--seed", seed, "simulate", "--duration", "14"], &out)), 0);
        fs::read(out.join("counts.csv")).unwrap()
    };
    assert_eq!(run("5", "a"), run("5", "b"));
    assert_ne!(run("5", "c"), run("6", "d"));
}
