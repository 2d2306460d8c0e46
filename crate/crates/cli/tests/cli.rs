use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_asymflat"));
    c.env_remove("GRAV_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn validate(text: &str) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), text);
    bin().arg("validate").arg("--config").arg(&p).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CHARGES: &str = r#"
schema_version = 1
lmax = 16
radii = [100.0, 200.0, 400.0, 800.0, 1600.0]
[family]
kind = "schwarzschild"
mass = 1.5
center = [1.0, 2.0, -1.0]
[[tasks]]
kind = "charges"
assert = [{ metric = "m", expected = 1.5, tol = 1e-6 }]
"#;

#[test]
fn empty_task_list() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("empty.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["tasks"].as_array().unwrap().len(), 0);
    assert_eq!(r["passed"], true);
}

#[test]
fn schwarzschild_mass_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CHARGES);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    let t = &r["tasks"][0];
    assert_eq!(t["status"], "ok");
    let m = &t["metrics"]["m"];
    assert!((m["value"].as_f64().unwrap() - 1.5).abs() < 1e-6);
    assert!(m["error"].as_f64().unwrap() >= 0.0);
    assert_eq!(t["lmax"], 16);
    assert_eq!(t["radii"].as_array().unwrap().len(), 5);
    assert_eq!(t["assertions"][0]["passed"], true);

    let table = std::fs::read_to_string(out.join("tasks/00-charges.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("radius,m,"));
    assert_eq!(lines.count(), 5);
    let plot = std::fs::read_to_string(out.join("plotdata/00-charges-m.csv")).unwrap();
    assert!(plot.starts_with("radius,value\n100,"));
}

#[test]
fn flat_foliation_is_an_expected_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("flat-foliation.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t = &report(dir.path())["tasks"][0];
    assert_eq!(t["kind"], "foliation");
    assert_eq!(t["status"], "refused");
    assert_eq!(t["passed"], true);
    assert!(t["message"].as_str().unwrap().contains("m = 0"));
}

#[test]
fn failed_assertion_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CHARGES.replace("expected = 1.5", "expected = 2.0"));
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["passed"], false);
    assert_eq!(r["tasks"][0]["assertions"][0]["passed"], false);
}

#[test]
fn unexpected_completion_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CHARGES.replace("kind = \"charges\"", "kind = \"charges\"\nexpect_refusal = true"));
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_is_reproducible_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CHARGES);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &["--threads", "1"]).status.code(), Some(0));
    let strip = |p: &Path| {
        let mut v = report(p);
        v.as_object_mut().unwrap().remove("timing").unwrap();
        serde_json::to_string_pretty(&v).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
    let ra = report(&a);
    assert_eq!(ra["config_sha256"].as_str().unwrap().len(), 64);
    // Key order is stable: the timing block comes last.
    let keys: Vec<&String> = ra.as_object().unwrap().keys().collect();
    assert_eq!(keys.last().unwrap().as_str(), "timing");
}

#[test]
fn cli_overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CHARGES);
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["--lmax", "12", "--force-rt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["config"]["lmax"], 12);
    assert_eq!(r["config"]["force_rt"], true);
    assert_eq!(r["tasks"][0]["lmax"], 12);
}

#[test]
fn env_threads_override_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("GRAV_THREADS", "2")
        .args(["run", "--threads", "3", "--config"])
        .arg(configs().join("empty.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report(dir.path())["timing"]["threads"], 2);
}

#[test]
fn sample_configs_validate() {
    let mut n = 0;
    for e in std::fs::read_dir(configs()).unwrap() {
        let p = e.unwrap().path();
        let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("valid"));
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn decay_rate_at_most_half_is_rejected() {
    let o = validate(
        r#"
schema_version = 1
[family]
kind = "perturbed"
eps = 1.0
perturbation = { profile = "gauge", q = 0.4 }
[family.base]
kind = "schwarzschild"
mass = 1.0
"#,
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("family") && e.contains("greater than 1/2"), "{e}");
}

#[test]
fn negative_lmax_is_rejected() {
    let o = validate("schema_version = 1\nlmax = -4\n[family]\nkind = \"flat\"\n");
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains(":2"), "{e}");
}

#[test]
fn unknown_keys_are_rejected() {
    let o = validate("schema_version = 1\ncolour = 1\n[family]\nkind = \"flat\"\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    let o = validate("schema_version = 1\n[family]\nkind = \"flat\"\n[[tasks]]\nkind = \"foliation\"\nleafnodes = true\n");
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("tasks[0]") && e.contains("leafnodes"), "{e}");
}

#[test]
fn wrong_schema_version_is_rejected() {
    let o = validate("schema_version = 7\n[family]\nkind = \"flat\"\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema_version"));
}

#[test]
fn config_error_on_run_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "schema_version = 1\n[family]\nkind = \"nowhere\"\n");
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("report.json").exists());
}

#[test]
fn list_families_names_every_kind() {
    let o = bin().arg("list-families").output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    for k in ["flat", "schwarzschild", "harmonic", "kerr", "rt-violating", "perturbed", "transformed"] {
        assert!(s.lines().any(|l| l.starts_with(k)), "{k}");
    }
}

#[test]
fn foliation_writes_leaf_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
schema_version = 1
lmax = 12
radii = [100.0, 200.0]
[family]
kind = "schwarzschild"
mass = 1.0
[[tasks]]
kind = "foliation"
leaf_nodes = true
assert = [{ metric = "disjoint", expected = 1.0, tol = 0.0 }]
"#,
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let leaf = std::fs::read_to_string(out.join("leaves/00-foliation-R100.csv")).unwrap();
    assert!(leaf.starts_with("theta,phi,x,y,z,psi,H\n"));
    let t = &report(&out)["tasks"][0];
    assert_eq!(t["detail"]["leaves"].as_array().unwrap().len(), 2);
    assert_eq!(t["files"]["leaves"].as_array().unwrap().len(), 2);
}
