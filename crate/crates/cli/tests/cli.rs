use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIO: &str = r#"
seed = 11
ports = 2
[grid]
start = 1e9
stop = 170e9
points = 61
[dut]
kind = "random-reciprocal"
[mtrl]
ports = [0, 1]
"#;

fn vnacal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnacal")).args(args).env_remove("VNACAL_CONFIG_DIR").output().expect("run vnacal")
}

fn ok(out: &Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(out.status.success(), "status {:?}\nstdout:\n{stdout}\nstderr:\n{}", out.status, String::from_utf8_lossy(&out.stderr));
    stdout
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulated(dir: &TempDir, scenario: &str) -> PathBuf {
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, scenario).unwrap();
    let out = dir.path().join("sim");
    ok(&vnacal(&["simulate", "--config", s(&cfg), "--out", s(&out)]));
    out
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn simulate_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let noisy = SCENARIO.replace("ports = 2\n", "ports = 2\nnoise_db = -70.0\n");
    let ta = tree(&simulated(&a, &noisy));
    let tb = tree(&simulated(&b, &noisy));
    assert!(ta.len() > 10);
    assert_eq!(ta, tb);
}

#[test]
fn seed_flag_overrides_scenario() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, SCENARIO).unwrap();
    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    ok(&vnacal(&["simulate", "--config", s(&cfg), "--out", s(&x)]));
    ok(&vnacal(&["simulate", "--config", s(&cfg), "--seed", "12", "--out", s(&y)]));
    let read = |d: &Path| std::fs::read(d.join("raw/thru_0_1.s2p")).unwrap();
    assert_ne!(read(&x), read(&y));
}

#[test]
fn solr_pipeline_recovers_dut() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(&dir, SCENARIO);
    let cal = dir.path().join("cal");
    let stdout = ok(&vnacal(&["cal-solr", "--config", s(&sim.join("session.toml")), "--out", s(&cal)]));
    assert!(stdout.contains("cal valid to"), "{stdout}");
    let r = report(&cal.join("solr-report.json"));
    assert!(r["validation"]["max_abs_error"].as_f64().unwrap() < 1e-9);
    assert!(r["pairs"][0]["corrected_thru_reciprocity_max"].as_f64().unwrap() < 1e-9);

    let corr = dir.path().join("corr");
    ok(&vnacal(&["correct", s(&cal.join("solr.cal")), s(&sim.join("raw/dut.s2p")), "--out", s(&corr)]));
    ok(&vnacal(&["check", s(&corr.join("dut_corrected.s2p"))]));
    let cr = report(&corr.join("dut_correct-report.json"));
    assert_eq!(cr["trace"], "S21");
    assert_eq!(cr["corrected"]["magnitude_db"].as_array().unwrap().len(), 61);
}

#[test]
fn identity_boxes_round_trip() {
    let dir = TempDir::new().unwrap();
    let scn = format!("fixture = false\n{}", SCENARIO.replace("[dut]", "[boxes]\nkind = \"identity\"\n[dut]"));
    let sim = simulated(&dir, &scn);
    let raw = std::fs::read_to_string(sim.join("raw/dut.s2p")).unwrap();
    let truth = std::fs::read_to_string(sim.join("dut_truth.s2p")).unwrap();
    let data = |t: &str| t.lines().filter(|l| !l.starts_with('!')).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(data(&raw), data(&truth));
}

#[test]
fn mtrl_and_characterize() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(&dir, SCENARIO);
    let session = sim.join("session.toml");
    let out = dir.path().join("mtrl");
    ok(&vnacal(&["cal-mtrl", "--config", s(&session), "--out", s(&out)]));
    let r = report(&out.join("mtrl-report.json"));
    let eps: Vec<f64> = r["gamma"]["eps_eff"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(eps.iter().all(|e| (e - 4.0).abs() < 1e-6));
    assert!(r["validation"]["max_abs_error"].as_f64().unwrap() < 1e-9);

    let ch = dir.path().join("char");
    ok(&vnacal(&["characterize", "--config", s(&session), "--out", s(&ch)]));
    let c = report(&ch.join("characterization.json"));
    assert!((c["open"]["coeffs"][0].as_f64().unwrap() - 5e-15).abs() < 1e-20);
    let cal = dir.path().join("cal2");
    ok(&vnacal(&["cal-solr", "--config", s(&ch.join("session-characterized.toml")), "--out", s(&cal)]));
    assert!(report(&cal.join("solr-report.json"))["validation"]["max_abs_error"].as_f64().unwrap() < 1e-7);
}

#[test]
fn config_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("scenario.toml"), SCENARIO).unwrap();
    let out = dir.path().join("o");
    let status = Command::new(env!("CARGO_BIN_EXE_vnacal"))
        .args(["simulate", "--config", "scenario.toml", "--out", s(&out)])
        .env("VNACAL_CONFIG_DIR", dir.path())
        .current_dir(std::env::temp_dir())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("session.toml").exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(vnacal(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(vnacal(&["report", s(&dir.path().join("missing.s1p"))]).status.code(), Some(1));

    let bad = dir.path().join("bad.s1p");
    std::fs::write(&bad, "# GHz S RI R 50\n1.0 0.5\n").unwrap();
    assert_eq!(vnacal(&["report", s(&bad)]).status.code(), Some(3));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\n").unwrap();
    assert_eq!(vnacal(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]).status.code(), Some(3));

    // |S11| = 0.5 fails a -15 dB threshold at the first point.
    let refl = dir.path().join("refl.s1p");
    std::fs::write(&refl, "# GHz S RI R 50\n1.0 0.5 0.0\n2.0 0.5 0.0\n").unwrap();
    let out = vnacal(&["report", s(&refl)]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stdout).contains("cal invalid"));
    assert_eq!(vnacal(&["report", s(&refl), "--threshold-db", "-3"]).status.code(), Some(0));

    let iso = dir.path().join("iso.s2p");
    std::fs::write(&iso, "# GHz S RI R 50\n1.0 0 0 1 0 0 0 0 0\n").unwrap();
    assert_eq!(vnacal(&["check", s(&iso)]).status.code(), Some(5));

    // An isolator used as the thru is rejected by the solver.
    let sim = simulated(&dir, SCENARIO);
    let thru = sim.join("raw/thru_0_1.s2p");
    let text = std::fs::read_to_string(&thru).unwrap();
    let isolated: String = text
        .lines()
        .map(|l| {
            if l.starts_with(['!', '#']) {
                return l.to_string();
            }
            let mut v: Vec<&str> = l.split_whitespace().collect();
            v[5] = "0";
            v[6] = "0";
            v.join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&thru, isolated).unwrap();
    let out = vnacal(&["cal-solr", "--config", s(&sim.join("session.toml")), "--out", s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fuzz_seeds_parse() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    for (target, parse) in [
        ("session_parse", (|t: &str| vnacal_cli::session::parse_session(t).map(drop)) as fn(&str) -> Result<(), String>),
        ("scenario_parse", |t: &str| vnacal_cli::scenario::parse_scenario(t).map(drop)),
    ] {
        let mut n = 0;
        for e in std::fs::read_dir(corpus.join(target)).unwrap() {
            let p = e.unwrap().path();
            parse(&std::fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
        assert!(n > 0, "{target}");
    }
}
