use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phaselab"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("phaselab-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn phaselab")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn emitted_bargmann_passes_check() {
    let d = scratch("bs");
    let o = run(&["models", "bargmann", "--n", "1", "--emit", "bs.phase"], &d);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["check", "bs.phase"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = run(&["check", "--phase", "bs.phase", "--json"], &d);
    let r = json(&o);
    assert_eq!(r["pass"], true);
    assert_eq!(r["command"], "check");
}

#[test]
fn critical_residuals_below_tolerance() {
    let d = scratch("crit");
    run(&["models", "bargmann", "--n", "1", "--emit", "bs.phase"], &d);
    let o = run(&["critical", "bs.phase", "--seed", "7", "--tol", "1e-10", "--json"], &d);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    for k in ["reproducing_residual", "associativity_residual", "d_critique_residual"] {
        assert!(r["entries"][k]["residual"].as_f64().unwrap() < 1e-10, "{k}");
    }
}

#[test]
fn reports_are_byte_identical() {
    let d = scratch("det");
    run(&["models", "scrambled", "--n", "2", "--seed", "11", "--emit", "s.phase"], &d);
    for cmd in ["check", "geometry", "critical", "symplin"] {
        let args: &[&str] = if cmd == "symplin" {
            &[cmd, "s.phase", "--json"]
        } else {
            &[cmd, "s.phase", "--seed", "3", "--json"]
        };
        let a = run(args, &d);
        let b = run(args, &d);
        assert_eq!(a.status.code(), Some(0), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    // the digest ignores the file name but not its contents
    fs::copy(d.join("s.phase"), d.join("t.phase")).unwrap();
    let a = json(&run(&["check", "s.phase", "--json"], &d));
    let b = json(&run(&["check", "t.phase", "--json"], &d));
    assert_eq!(a["inputs_digest"], b["inputs_digest"]);
    let c = json(&run(&["check", "s.phase", "--seed", "1", "--json"], &d));
    assert_ne!(a["inputs_digest"], c["inputs_digest"]);
}

#[test]
fn malformed_spec_names_the_field() {
    let d = scratch("bad");
    fs::write(d.join("a.phase"), r#"{"kind": "scrambled", "n": 1}"#).unwrap();
    let o = run(&["check", "a.phase"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"seed\""));
    fs::write(d.join("b.phase"), r#"{"kind": "bargmann", "n": 1, "colour": 3}"#).unwrap();
    let o = run(&["check", "b.phase"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = run(&["check", "missing.phase"], &d);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["sweep", "a.phase"], &d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    let d = scratch("fail");
    run(&["models", "fs", "--emit", "fs.phase"], &d);
    // the order-0 amplitude is only accurate to O(h)
    let o = run(&["project", "fs.phase", "--h", "0.1", "--tol", "1e-6", "--json"], &d);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["entries"]["idempotence_defect"]["pass"], false);
    assert!(r["resolved"]["spacing"].as_f64().unwrap() <= 0.1f64.sqrt() / 4.0);
}

#[test]
fn fubini_study_sweep_slope_near_one() {
    let d = scratch("sweep");
    run(&["models", "fs", "--emit", "fs.phase"], &d);
    let o = run(
        &["sweep", "fs.phase", "--h-list", "0.2,0.1,0.05,0.025", "--grid", "auto", "--json"],
        &d,
    );
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let s = r["data"]["fit"]["loglog_slope"].as_f64().unwrap();
    assert!((s - 1.0).abs() < 0.3, "{s}");
    assert_eq!(r["resolved"]["window_factor"], 3.0);
}

#[test]
fn project_dump_round_trips() {
    let d = scratch("dump");
    run(&["models", "bargmann", "--emit", "bs.phase"], &d);
    // at h = 0.1 the packet needs a wider box than the default 1.2
    let o = run(&["project", "bs.phase", "--h", "0.1", "--box", "2", "--emit", "pf.bin"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("pf.bin.json")).unwrap()).unwrap();
    let counts: Vec<u64> = side["counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let len = fs::metadata(d.join("pf.bin")).unwrap().len();
    assert_eq!(len, 16 * counts.iter().product::<u64>());
}
