//! Assembly of report.json and the CSV outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, TaskSpec};
use crate::tasks::{Status, Table, TaskOutput};

#[derive(Debug, Clone, Serialize)]
pub struct AssertionResult {
    pub check: String,
    pub value: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Verdicts of one task against its declared assertions.
pub fn judge(task: &TaskSpec, out: &TaskOutput) -> (bool, Vec<AssertionResult>) {
    let mut results = Vec::new();
    let mut passed = match out.status {
        Status::Error => false,
        Status::Refused => task.common.expect_refusal,
        Status::Ok => !task.common.expect_refusal,
    };
    if out.status == Status::Ok && task.common.expect_refusal {
        results.push(AssertionResult {
            check: "task refuses".into(),
            value: None,
            passed: false,
            note: Some("the task completed".into()),
        });
    }
    // A refusal without expectation is recorded but only fails through assertions.
    if out.status == Status::Refused && !task.common.expect_refusal {
        passed = true;
    }
    for a in &task.common.assertions {
        let v = out.metric_value(&a.metric);
        let ok = v.is_some_and(|v| a.holds(v));
        passed &= ok;
        results.push(AssertionResult {
            check: a.describe(),
            value: v,
            passed: ok,
            note: v.is_none().then(|| "metric not produced".to_string()),
        });
    }
    (passed, results)
}

pub fn config_hash(echo: &Value) -> String {
    let bytes = serde_json::to_vec(echo).expect("config echo serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_table(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| cell(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV files of one task and returns their paths relative to `dir`.
pub fn write_task_files(dir: &Path, label: &str, out: &TaskOutput) -> Result<Value> {
    let stem = file_stem(label);
    let mut files = Map::new();
    if !out.table.header.is_empty() {
        let rel = PathBuf::from("tasks").join(format!("{stem}.csv"));
        write_table(&dir.join(&rel), &out.table)?;
        files.insert("table".into(), json!(rel.to_string_lossy()));
    }
    let mut plots = Vec::new();
    for s in &out.series {
        let rel = PathBuf::from("plotdata").join(format!("{stem}-{}.csv", file_stem(&s.name)));
        let t = Table {
            header: vec!["radius".into(), "value".into()],
            rows: s.radius.iter().zip(&s.value).map(|(r, v)| vec![Some(*r), Some(*v)]).collect(),
        };
        write_table(&dir.join(&rel), &t)?;
        plots.push(json!(rel.to_string_lossy()));
    }
    if !plots.is_empty() {
        files.insert("plotdata".into(), Value::Array(plots));
    }
    let mut leaves = Vec::new();
    for l in &out.leaves {
        let rel = PathBuf::from("leaves").join(format!("{stem}-R{}.csv", l.radius));
        write_table(&dir.join(&rel), &l.table)?;
        leaves.push(json!(rel.to_string_lossy()));
    }
    if !leaves.is_empty() {
        files.insert("leaves".into(), Value::Array(leaves));
    }
    Ok(Value::Object(files))
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    for sub in ["tasks", "plotdata", "leaves"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
    }
    Ok(())
}

pub struct TaskRecord {
    pub label: String,
    pub task: TaskSpec,
    pub output: TaskOutput,
    pub files: Value,
    pub seconds: f64,
}

/// The report as written to report.json; everything except `timing` is deterministic.
pub fn build_report(cfg: &RunConfig, records: &[TaskRecord], threads: usize, total_seconds: f64) -> (Value, bool) {
    let echo = serde_json::to_value(cfg).expect("config serializes");
    let mut all = true;
    let mut tasks = Vec::new();
    let (mut n_pass, mut n_fail) = (0, 0);
    for r in records {
        let (passed, checks) = judge(&r.task, &r.output);
        all &= passed;
        if passed {
            n_pass += 1;
        } else {
            n_fail += 1;
        }
        let o = &r.output;
        let metrics: Map<String, Value> = o
            .metrics
            .iter()
            .map(|(n, m)| (n.clone(), serde_json::to_value(m).expect("metric serializes")))
            .collect();
        let refusals: Vec<Value> = o
            .refusals
            .iter()
            .map(|(q, why)| json!({ "quantity": q, "reason": why }))
            .collect();
        tasks.push(json!({
            "label": r.label,
            "kind": r.task.kind.name(),
            "status": o.status,
            "message": o.message,
            "expect_refusal": r.task.common.expect_refusal,
            "passed": passed,
            "radii": o.radii,
            "lmax": o.lmax,
            "metrics": metrics,
            "assertions": checks,
            "refusals": refusals,
            "files": r.files,
            "detail": o.detail,
        }));
    }
    let timing: Vec<Value> = records
        .iter()
        .map(|r| json!({ "label": r.label, "seconds": r.seconds }))
        .collect();
    let report = json!({
        "tool": "asymflat",
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": cfg.schema_version,
        "config_sha256": config_hash(&echo),
        "config": echo,
        "passed": all,
        "summary": { "tasks": records.len(), "passed": n_pass, "failed": n_fail },
        "tasks": tasks,
        "timing": { "threads": threads, "total_seconds": total_seconds, "tasks": timing },
    });
    (report, all)
}
