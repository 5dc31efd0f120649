use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prandtl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prandtl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SHORT: &str = "nx = 16\nny = 321\nymax = 16.0\ndt = 1e-2\nt_final = 0.5\noutput_every = 5\neta = 1e-2\nk0 = 2\n";

#[test]
fn zero_data_writes_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "z.toml", "preset = \"zero-data\"\n");
    let out = dir.path().join("out");
    let o = prandtl(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..3], &["t", "theta", "radius"]);
    let mut rows = 0;
    for l in lines {
        for (name, v) in header.iter().zip(l.split(',')).skip(3) {
            if *name != "radius_used" && !v.is_empty() {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{name}");
            }
        }
        rows += 1;
    }
    assert_eq!(rows, 11);
    let bin = fs::read(out.join("final_state.bin")).unwrap();
    assert_eq!(&bin[..8], &16.0f64.to_le_bytes());
    assert_eq!(&bin[8..16], &120.0f64.to_le_bytes());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["exit_code"], 0);
    assert_eq!(summary["breach"], false);
}

#[test]
fn large_data_breaches_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "big.toml", "preset = \"large-eta\"\n");
    let out = dir.path().join("out");
    let o = prandtl(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["breach"], true);
    assert_eq!(summary["status"]["status"], "breach");
    let rows = fs::read_to_string(out.join("diagnostics.csv")).unwrap().lines().count() - 1;
    assert!(rows >= 1 && rows < 1001, "{rows}");
}

#[test]
fn config_errors_exit_5_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "delta = -0.1\n");
    let o = prandtl(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
    let cfg = write_config(dir.path(), "unknown.toml", "gamma = 1\n");
    let o = prandtl(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn cfl_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfl.toml",
        "nx = 16\nny = 321\nymax = 16.0\neta = 5.0\nk0 = 2\ndt = 0.2\nt_final = 1.0\noutput_every = 1\n",
    );
    let o = prandtl(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn identical_configs_give_identical_outputs_and_cache_hits_match() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let plain = write_config(dir.path(), "a.toml", SHORT);
    let cached = write_config(
        dir.path(),
        "b.toml",
        &format!("{SHORT}cache_dir = \"{}\"\n", cache.display()),
    );
    let outs: Vec<_> = ["o1", "o2", "o3", "o4"].iter().map(|n| dir.path().join(n)).collect();
    for (cfg, out) in [(&plain, &outs[0]), (&plain, &outs[1]), (&cached, &outs[2]), (&cached, &outs[3])] {
        let o = prandtl(&["run", cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &Path, f: &str| fs::read(p.join(f)).unwrap();
    for f in ["diagnostics.csv", "final_state.bin"] {
        let cold = read(&outs[0], f);
        for o in &outs[1..] {
            assert_eq!(read(o, f), cold, "{f}");
        }
    }
    assert_eq!(read(&outs[0], "summary.json"), read(&outs[1], "summary.json"));
    // the cached config differs only in cache_dir, which the summary echoes
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&read(p, "summary.json")).unwrap();
        v["config"]["cache_dir"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&outs[2]), strip(&outs[0]));
    assert_eq!(strip(&outs[3]), strip(&outs[0]));
    let o = prandtl(&["corrector-cache", "clear", "--dir", cache.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("removed 2 files"));
}

#[test]
fn cache_build_then_hit() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c");
    let cfg = write_config(dir.path(), "a.toml", SHORT);
    let args = ["corrector-cache", "build", &cfg, "--dir", cache.to_str().unwrap()];
    let first = prandtl(&args);
    assert_eq!(first.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&first.stdout).starts_with("built"));
    let second = prandtl(&args);
    assert!(String::from_utf8_lossy(&second.stdout).starts_with("present"));
}

#[test]
fn presets_list_and_show() {
    let o = prandtl(&["presets", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["zero-data", "smalldata-decay", "large-eta", "corrector-only"] {
        assert!(text.contains(name));
    }
    let o = prandtl(&["presets", "show", "large-eta"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("eta = 1.0"));
    assert_eq!(prandtl(&["presets", "show", "nope"]).status.code(), Some(5));
}

#[test]
fn verify_reports_machine_readable_checks() {
    let o = prandtl(&["verify", "heat", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = &v["checks"][0];
    assert_eq!(c["suite"], "heat");
    assert_eq!(c["passed"], true);
    assert!(c["measured"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    let o = prandtl(&["verify", "treves"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("PASS")));
    assert_eq!(prandtl(&["verify", "bogus"]).status.code(), Some(5));
}
