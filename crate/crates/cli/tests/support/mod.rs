//! Helpers for driving the `agreement` binary and checking its outputs.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use passive_agreement_cli::load_scenario;
use passive_agreement_cli::scenario::parse_scenario;
use serde_json::Value;

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Every `.scn` file shipped with the repository, sorted by name.
pub fn bundled() -> Vec<PathBuf> {
    let mut files: Vec<_> = fs::read_dir(scenario_dir())
        .expect("scenarios directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    files.sort();
    files
}

pub fn agreement(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agreement"))
        .args(args)
        .output()
        .expect("spawn agreement")
}

pub fn run_into(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    agreement(&args)
}

pub struct Artifacts {
    pub csv: String,
    pub svg: String,
    pub report: String,
}

impl Artifacts {
    pub fn read(dir: &Path, name: &str) -> std::io::Result<Self> {
        Ok(Self {
            csv: fs::read_to_string(dir.join(format!("{name}.trajectory.csv")))?,
            svg: fs::read_to_string(dir.join(format!("{name}.svg")))?,
            report: fs::read_to_string(dir.join(format!("{name}.report.json")))?,
        })
    }

    pub fn report_json(&self) -> Value {
        serde_json::from_str(&self.report).expect("report is JSON")
    }

    /// The report text with the wall-clock line removed.
    pub fn report_without_clock(&self) -> String {
        self.report
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"wall_clock_seconds\""))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Header layout, numeric cells with at most 12 significant digits, and
/// strictly increasing time.
pub fn check_csv(csv: &str, agents: usize, edges: usize, samples: usize) -> Result<(), String> {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header.first().map(String::as_str) != Some("t") || header.last().map(String::as_str) != Some("disagreement_norm") {
        return Err(format!("header ends: {header:?}"));
    }
    let xs = header.iter().filter(|h| h.starts_with("x_")).count();
    if xs < agents {
        return Err(format!("{xs} state columns for {agents} agents"));
    }
    let mut expected: Vec<String> = vec!["t".into()];
    expected.extend(header[1..1 + xs].iter().cloned());
    for (prefix, count) in [("y", agents), ("u", agents), ("zeta", edges), ("mu", edges)] {
        expected.extend((1..=count).map(|i| format!("{prefix}_{i}")));
    }
    expected.push("disagreement_norm".into());
    if header != expected {
        return Err(format!("header {header:?}, expected {expected:?}"));
    }
    let mut last_t = f64::NEG_INFINITY;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() != header.len() {
            return Err(format!("row {rows} has {} cells", record.len()));
        }
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| format!("row {rows}: `{cell}` is not a number"))?;
            if !v.is_finite() {
                return Err(format!("row {rows}: non-finite `{cell}`"));
            }
            let mantissa = cell.trim_start_matches('-').split(['e', 'E']).next().unwrap();
            let digits = mantissa.chars().filter(char::is_ascii_digit).collect::<String>();
            if digits.trim_start_matches('0').len() > 12 {
                return Err(format!("row {rows}: `{cell}` has more than 12 significant digits"));
            }
        }
        let t: f64 = record[0].parse().unwrap();
        if t <= last_t {
            return Err(format!("row {rows}: time {t} after {last_t}"));
        }
        last_t = t;
        rows += 1;
    }
    if rows != samples {
        return Err(format!("{rows} rows, expected {samples}"));
    }
    Ok(())
}

/// One polyline per agent and a legend entry for each.
pub fn check_svg(svg: &str, agents: usize) -> Result<(), String> {
    if !svg.starts_with("<svg") || !svg.trim_end().ends_with("</svg>") {
        return Err("not an svg document".into());
    }
    let polylines = svg.matches("<polyline").count();
    if polylines != agents {
        return Err(format!("{polylines} polylines for {agents} agents"));
    }
    for i in 1..=agents {
        if !svg.contains(&format!(">y_{i}</text>")) {
            return Err(format!("legend misses y_{i}"));
        }
    }
    if !svg.contains(">time</text>") {
        return Err("time axis is unlabeled".into());
    }
    Ok(())
}

fn require<'a>(v: &'a Value, path: &str) -> Result<&'a Value, String> {
    path.split('.')
        .try_fold(v, |v, key| v.get(key))
        .ok_or_else(|| format!("report lacks `{path}`"))
}

/// Stable keys, types, and one entry per requested audit.
pub fn check_report(report: &Value, name: &str, audits: &[&str]) -> Result<(), String> {
    if require(report, "scenario")?.as_str() != Some(name) {
        return Err(format!("scenario is not `{name}`"));
    }
    for key in [
        "graph.vertices",
        "graph.edges",
        "graph.max_out_degree",
        "solver.steps",
        "solver.record_stride",
    ] {
        require(report, key)?.as_u64().ok_or(format!("`{key}` is not an integer"))?;
    }
    for key in ["graph.lambda2", "graph.lambda_max", "solver.dt", "solver.t_end", "wall_clock_seconds"] {
        require(report, key)?.as_f64().ok_or(format!("`{key}` is not a number"))?;
    }
    for key in ["graph.globally_reachable", "graph.balanced"] {
        require(report, key)?.as_bool().ok_or(format!("`{key}` is not a bool"))?;
    }
    let mode = require(report, "mode")?.as_str().ok_or("mode is not a string")?;
    if !["simulate", "check_only"].contains(&mode) {
        return Err(format!("mode `{mode}`"));
    }
    require(report, "certificate")?;
    let agreement = require(report, "agreement")?;
    if mode == "simulate" {
        require(agreement, "detected")?.as_bool().ok_or("agreement.detected is not a bool")?;
        require(agreement, "final_disagreement")?.as_f64().ok_or("final_disagreement is not a number")?;
    }
    let listed = require(report, "audits")?.as_array().ok_or("audits is not a list")?;
    let ids: Vec<&str> = listed.iter().filter_map(|a| a.get("id")?.as_str()).collect();
    if ids != audits {
        return Err(format!("audits {ids:?}, requested {audits:?}"));
    }
    for a in listed {
        let status = a.get("status").and_then(Value::as_str).ok_or("audit without status")?;
        if !["passed", "failed", "skipped", "not_run"].contains(&status) {
            return Err(format!("audit status `{status}`"));
        }
    }
    require(report, "artifacts")?.as_array().ok_or("artifacts is not a list")?;
    Ok(())
}

/// Everything criterion-level about one bundled scenario: it parses, is a
/// fixed point of serialization, runs with exit code 0 twice, and both runs
/// agree byte for byte apart from the wall clock.
pub fn round_trip(path: &Path) -> Result<String, String> {
    let scenario = load_scenario(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let again = parse_scenario(&scenario.to_toml()).map_err(|e| format!("reserialized: {e}"))?;
    if again != scenario {
        return Err("serialization is not a fixed point".into());
    }
    let prepared = scenario.prepare().map_err(|e| e.to_string())?;
    let name = prepared.name.clone();
    let agents = prepared.network.graph().vertex_count();
    let edges = prepared.network.graph().edge_count();
    let audits: Vec<&str> = scenario.audits.iter().map(|a| a.id.get_ref().as_str()).collect();

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut runs = Vec::new();
    for dir in &dirs {
        let out = run_into(path, dir.path(), &[]);
        if out.status.code() != Some(0) {
            return Err(format!(
                "exit {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        runs.push(Artifacts::read(dir.path(), &name).map_err(|e| e.to_string())?);
    }
    let report = runs[0].report_json();
    let samples = report["solver"]["samples"].as_u64().ok_or("solver.samples missing")? as usize;
    check_csv(&runs[0].csv, agents, edges, samples)?;
    check_svg(&runs[0].svg, agents)?;
    check_report(&report, &name, &audits)?;
    if runs[0].csv != runs[1].csv || runs[0].svg != runs[1].svg {
        return Err("repeated runs differ".into());
    }
    if runs[0].report_without_clock() != runs[1].report_without_clock() {
        return Err("repeated reports differ beyond the wall clock".into());
    }
    Ok(format!("{name}: {samples} samples"))
}
