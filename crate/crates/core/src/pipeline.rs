//! End-to-end execution of the `stats | prune | generate | simulate | sweep`
//! commands: obtain the graph, compute, and assemble the output files.

use std::fs::File;
use std::io::BufReader;

use crate::config::{GraphSource, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, run_replication};
use crate::graph::{generate_scale_free, load_edge_list, prune_leaves, SocialGraph};
use crate::output::{self, fmt_sig6, OutputSet};
use crate::seed::child_seed;
use crate::stats::{compute_stats_with, StatsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stats,
    Prune,
    Generate,
    Simulate { dump_attributes: bool },
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Prune => "prune",
            Command::Generate => "generate",
            Command::Simulate { .. } => "simulate",
            Command::Sweep => "sweep",
        }
    }
}

/// A graph ready for use plus human-readable notes on how it was obtained.
pub struct PreparedGraph {
    pub graph: SocialGraph,
    pub from_file: bool,
    pub notes: Vec<(String, String)>,
}

/// Loads or generates the configured graph. `force_prune` applies leaf
/// pruning (threshold 1 unless configured) even when the config leaves it off.
pub fn prepare_graph(cfg: &RunConfig, force_prune: bool) -> Result<PreparedGraph> {
    let mut notes = Vec::new();
    let (graph, from_file, threshold) = match &cfg.graph {
        GraphSource::File { path, prune_threshold } => {
            let file = File::open(path)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            let loaded = load_edge_list(BufReader::new(file))?;
            notes.push(("input_nodes".into(), loaded.graph.node_count().to_string()));
            notes.push(("input_edges".into(), loaded.graph.edge_count().to_string()));
            notes.push(("self_loops_dropped".into(), loaded.self_loops_dropped.to_string()));
            notes.push(("duplicates_collapsed".into(), loaded.duplicates_collapsed.to_string()));
            (loaded.graph, true, *prune_threshold)
        }
        GraphSource::Generate { nodes, m_attach, seed } => {
            (generate_scale_free(*nodes, *m_attach, *seed)?, false, 0)
        }
    };
    let threshold = if force_prune { threshold.max(1) } else { threshold };
    let graph = if threshold > 0 {
        let r = prune_leaves(&graph, threshold)?;
        notes.push(("prune_threshold".into(), threshold.to_string()));
        notes.push(("prune_rounds".into(), r.rounds.to_string()));
        notes.push(("prune_removed".into(), r.removed.to_string()));
        r.graph
    } else {
        graph
    };
    Ok(PreparedGraph { graph, from_file, notes })
}

fn notes_text(notes: &[(String, String)], g: &SocialGraph) -> String {
    let mut s = String::new();
    for (k, v) in notes {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s.push_str(&format!("nodes = {}\nedges = {}\n", g.node_count(), g.edge_count()));
    s
}

/// Runs `command` and returns its files without touching the disk.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<OutputSet> {
    let prepared = prepare_graph(cfg, command == Command::Prune)?;
    let g = &prepared.graph;
    let mut out = OutputSet::new();
    if prepared.from_file {
        out.add("id_map.txt", output::id_map_text(g));
    }
    out.add("in_degree_histogram.txt", output::histogram_text(&g.in_degree_histogram()));

    match command {
        Command::Stats => {
            let stats = compute_stats_with(g, StatsOptions { seed: cfg.master_seed, ..Default::default() });
            let mut text: String = prepared.notes.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            text.push_str(&output::stats_text(&stats));
            out.add("stats.txt", text);
        }
        Command::Prune | Command::Generate => {
            out.add("edges.txt", output::edge_list_text(g));
            let mut text = notes_text(&prepared.notes, g);
            text.push_str(&format!(
                "mean_in_degree = {}\n",
                fmt_sig6(g.edge_count() as f64 / g.node_count() as f64)
            ));
            out.add(format!("{}.txt", command.name()), text);
        }
        Command::Simulate { dump_attributes } => {
            cfg.sim.validate(g.node_count())?;
            let seed = child_seed(cfg.master_seed, 0, 0);
            let run = run_replication(g, &cfg.sim, None, seed)?;
            out.add("trajectory.csv", output::trajectory_csv(&run));
            out.add("summary.csv", output::run_summary_csv(&run));
            if dump_attributes {
                let attrs = crate::agents::AgentAttributes::sample(g, &cfg.sim.params, seed)?;
                let initial = crate::agents::assign_opinions_seeded(g, &attrs, &cfg.sim.seeding, seed)?;
                out.add("attributes.tsv", output::attributes_text(&attrs, &initial));
            }
            out.add("manifest.ini", output::manifest_text(command.name(), cfg, &g.fingerprint()));
        }
        Command::Sweep => {
            let result = run_experiment(&cfg.experiment(), g)?;
            out.add("summary.csv", output::summary_csv(&result));
            out.add("runs.csv", output::runs_csv(&result));
            for (i, p) in result.points.iter().enumerate() {
                out.add(format!("points/{i:02}_{}.csv", p.label), output::mean_trajectory_csv(&p.aggregate));
                out.add(format!("points/{i:02}_{}_std.csv", p.label), output::std_trajectory_csv(&p.aggregate));
            }
            out.add("manifest.ini", output::manifest_text(command.name(), cfg, &g.fingerprint()));
        }
    }
    Ok(out)
}

/// Pre-flight check of the output directory, then execute and write.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<OutputSet> {
    output::preflight(&cfg.out_dir).map_err(Error::Io)?;
    let out = execute(command, cfg)?;
    out.write_to(&cfg.out_dir)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(extra: &[(&str, &str)]) -> RunConfig {
        let mut o: Vec<(String, String)> = vec![
            ("nodes".into(), "200".into()),
            ("m_attach".into(), "2".into()),
            ("replications".into(), "3".into()),
            ("leader_count".into(), "10".into()),
        ];
        o.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
        parse_config("", &o).unwrap()
    }

    #[test]
    fn simulate_schema() {
        let out = execute(Command::Simulate { dump_attributes: true }, &cfg(&[])).unwrap();
        let traj = out.get("trajectory.csv").unwrap();
        assert!(traj.starts_with("step,prop_A,mean_payoff,flips\n0,0.55,"));
        assert!(out.get("summary.csv").unwrap().starts_with("relaxation_time,final_prop_A,converged\n"));
        assert_eq!(out.get("attributes.tsv").unwrap().lines().count(), 201);
        assert!(out.get("manifest.ini").unwrap().contains("config_hash = "));
    }

    #[test]
    fn sweep_summary_has_one_row_per_point() {
        let out = execute(Command::Sweep, &cfg(&[("vary", "bc"), ("values", "0.5,1,2")])).unwrap();
        let summary = out.get("summary.csv").unwrap();
        assert_eq!(summary.lines().count(), 1 + 3);
        assert!(summary.starts_with(output::SUMMARY_HEADER));
        assert_eq!(out.get("runs.csv").unwrap().lines().count(), 1 + 9);
        assert!(out.get("points/01_1.csv").is_some());
    }

    #[test]
    fn sweep_is_deterministic() {
        let c = cfg(&[("vary", "seeding")]);
        assert_eq!(execute(Command::Sweep, &c).unwrap(), execute(Command::Sweep, &c).unwrap());
    }

    #[test]
    fn prune_generated_graph_is_noop() {
        let out = execute(Command::Prune, &cfg(&[])).unwrap();
        let text = out.get("prune.txt").unwrap();
        assert!(text.contains("prune_removed = 0"), "{text}");
    }

    #[test]
    fn file_graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.txt");
        std::fs::write(&path, "# x\nu1 u2\nu2 u3\nu3 u1\nu4 u1\n").unwrap();
        let c = parse_config(&format!("[graph]\npath = {}\n", path.display()), &[("out".into(), dir.path().join("o").display().to_string())]).unwrap();
        let out = run_command(Command::Stats, &c).unwrap();
        assert!(out.get("id_map.txt").unwrap().contains("3 u4"));
        let stats = std::fs::read_to_string(dir.path().join("o/stats.txt")).unwrap();
        assert!(stats.contains("nodes = 4"));

        let out = execute(Command::Prune, &c).unwrap();
        assert!(out.get("prune.txt").unwrap().contains("prune_removed = 1"));
        assert_eq!(out.get("edges.txt").unwrap().lines().count(), 4);
    }

    #[test]
    fn missing_file_is_io_error() {
        let c = parse_config("[graph]\npath = /nonexistent/edges.txt\n", &[]).unwrap();
        assert!(matches!(execute(Command::Stats, &c), Err(Error::Io(_))));
    }
}
