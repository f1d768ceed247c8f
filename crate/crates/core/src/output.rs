//! Plain-text result files: CSV tables, key-value summaries and manifests.
//!
//! Numbers are printed with six significant digits so files diff cleanly
//! across platforms. Outputs are assembled in memory and written in one go
//! after all computation has finished.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::dynamics::RunResult;
use crate::experiments::{AggregateTrajectory, ExperimentResult};
use crate::graph::{GraphFingerprint, SocialGraph};
use crate::stats::GraphStats;

/// Formats like C's `%.6g`: six significant digits, trailing zeros removed,
/// exponent form outside `[1e-4, 1e6)`.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // round first so the exponent reflects the rounded value (999999.5 -> 1e+06)
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_owned());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

/// Files produced by one command, keyed by path relative to the output dir.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct OutputSet {
    files: BTreeMap<PathBuf, String>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<PathBuf>, contents: String) {
        self.files.insert(name.into(), contents);
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(Path::new(name)).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &Path> {
        self.files.keys().map(PathBuf::as_path)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        for (name, contents) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, contents)?;
        }
        Ok(())
    }
}

/// Makes sure `dir` exists and is writable before any work starts.
pub fn preflight(dir: &Path) -> io::Result<()> {
    let check = || -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let probe = dir.join(".opiniond-write-test");
        fs::write(&probe, b"")?;
        fs::remove_file(probe)
    };
    check().map_err(|e| io::Error::new(e.kind(), format!("output directory {}: {e}", dir.display())))
}

pub const TRAJECTORY_HEADER: &str = "step,prop_A,mean_payoff,flips";
pub const SUMMARY_HEADER: &str = "variation_value,mean_relax,std_relax,mean_final_prop,std_final_prop";

pub fn trajectory_csv(run: &RunResult) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for m in &run.trajectory {
        let _ = writeln!(s, "{},{},{},{}", m.step, fmt_sig6(m.prop_a), fmt_sig6(m.mean_payoff), m.flips);
    }
    s
}

pub fn run_summary_csv(run: &RunResult) -> String {
    format!(
        "relaxation_time,final_prop_A,converged\n{},{},{}\n",
        run.relaxation_time,
        fmt_sig6(run.final_prop_a),
        run.converged
    )
}

/// Mean trajectory in the single-run schema (flips is the mean flip count).
pub fn mean_trajectory_csv(agg: &AggregateTrajectory) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for a in &agg.steps {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            a.step,
            fmt_sig6(a.mean_prop_a),
            fmt_sig6(a.mean_payoff),
            fmt_sig6(a.mean_flips)
        );
    }
    s
}

pub fn std_trajectory_csv(agg: &AggregateTrajectory) -> String {
    let mut s = String::from("step,std_prop_A,std_mean_payoff\n");
    for a in &agg.steps {
        let _ = writeln!(s, "{},{},{}", a.step, fmt_sig6(a.std_prop_a), fmt_sig6(a.std_payoff));
    }
    s
}

pub fn summary_csv(result: &ExperimentResult) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for p in &result.points {
        let a = &p.aggregate;
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.label,
            fmt_sig6(a.mean_relaxation),
            fmt_sig6(a.std_relaxation),
            fmt_sig6(a.mean_final_prop),
            fmt_sig6(a.std_final_prop)
        );
    }
    s
}

/// One row per replication of every point.
pub fn runs_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("variation_value,replication,relaxation_time,final_prop_A,converged\n");
    for p in &result.points {
        for (r, run) in p.aggregate.runs.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{r},{},{},{}",
                p.label,
                run.relaxation_time,
                fmt_sig6(run.final_prop_a),
                run.converged
            );
        }
    }
    s
}

/// Two whitespace-separated columns, in-degree and node count.
pub fn histogram_text(hist: &BTreeMap<usize, usize>) -> String {
    let mut s = String::from("# in_degree count\n");
    for (k, c) in hist {
        let _ = writeln!(s, "{k} {c}");
    }
    s
}

pub fn stats_text(stats: &GraphStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes = {}", stats.node_count);
    let _ = writeln!(s, "edges = {}", stats.edge_count);
    let _ = writeln!(s, "undirected_edges = {}", stats.undirected_edge_count);
    let _ = writeln!(s, "avg_degree_directed = {}", fmt_sig6(stats.avg_degree_directed));
    let _ = writeln!(s, "avg_degree_undirected = {}", fmt_sig6(stats.avg_degree_undirected));
    let _ = writeln!(s, "diameter = {}", stats.diameter);
    let _ = writeln!(s, "avg_path_length = {}", fmt_sig6(stats.avg_path_length));
    let _ = writeln!(s, "avg_clustering = {}", fmt_sig6(stats.avg_clustering));
    let _ = writeln!(s, "bfs_sources = {}", stats.bfs_sources);
    s
}

/// Edge list with original labels, readable by `load_edge_list`.
pub fn edge_list_text(g: &SocialGraph) -> String {
    let mut s = String::from("# follower leader\n");
    for (f, l) in g.edges() {
        let _ = writeln!(s, "{} {}", g.label(f as usize), g.label(l as usize));
    }
    s
}

pub fn id_map_text(g: &SocialGraph) -> String {
    let mut s = String::from("# id label\n");
    for (i, l) in g.labels().iter().enumerate() {
        let _ = writeln!(s, "{i} {l}");
    }
    s
}

pub fn attributes_text(attrs: &crate::agents::AgentAttributes, opinions: &[crate::agents::Opinion]) -> String {
    let mut s = String::from("id\texpertise_raw\ttrust_raw\tstubborn_raw\texpertise\ttrust\tstubborn\topinion\n");
    for (i, op) in opinions.iter().enumerate().take(attrs.len()) {
        let _ = writeln!(
            s,
            "{i}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            fmt_sig6(attrs.expertise_raw[i]),
            fmt_sig6(attrs.trust_raw[i]),
            fmt_sig6(attrs.stubborn_raw[i]),
            fmt_sig6(attrs.expertise[i]),
            fmt_sig6(attrs.trust[i]),
            fmt_sig6(attrs.stubborn[i]),
            op.value()
        );
    }
    s
}

/// Manifest: a `[manifest]` header followed by the canonical config, so
/// the file can be passed back as `--config` to reproduce the run.
pub fn manifest_text(command: &str, config: &RunConfig, fp: &GraphFingerprint) -> String {
    let mut s = String::from("[manifest]\n");
    let _ = writeln!(s, "tool = opiniond");
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "config_hash = {}", config.config_hash());
    let _ = writeln!(s, "master_seed = {}", config.master_seed);
    let _ = writeln!(s, "graph_nodes = {}", fp.node_count);
    let _ = writeln!(s, "graph_edges = {}", fp.edge_count);
    let _ = writeln!(s, "graph_histogram_hash = {}", fp.histogram_hash);
    let _ = writeln!(s, "graph_edge_hash = {}", fp.edge_hash);
    s.push('\n');
    s.push_str(&config.canonical());
    s
}
