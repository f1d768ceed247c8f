//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [model]
//! b = 1.5
//! [seeding]
//! strategy = top_in_degree
//! ```
//!
//! Every key belongs to exactly one section and key names are unique across
//! sections, so flag overrides may use either `b` or `model.b`. Unknown
//! keys are rejected. A `[manifest]` section is skipped so that a run's
//! manifest can be fed straight back in as a config.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::agents::SeedingKind;
use crate::error::{Error, Result};
use crate::experiments::{default_bc_ratios, default_proportions, ExperimentSpec, SimulationConfig, Variation};

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    /// Edge list on disk, optionally leaf-pruned (`prune_threshold > 0`).
    File { path: PathBuf, prune_threshold: usize },
    Generate { nodes: usize, m_attach: usize, seed: u64 },
}

impl Default for GraphSource {
    fn default() -> Self {
        GraphSource::Generate {
            nodes: 5000,
            m_attach: 4,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: GraphSource,
    pub sim: SimulationConfig,
    pub replications: usize,
    pub variation: Variation,
    pub common_random_numbers: bool,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph: GraphSource::default(),
            sim: SimulationConfig::default(),
            replications: 100,
            variation: Variation::InitialProportion(default_proportions()),
            common_random_numbers: false,
            master_seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("graph", &["source", "path", "prune_threshold", "nodes", "m_attach", "graph_seed"]),
    ("model", &["b", "c", "omega1", "omega2", "omega3", "alpha", "beta", "mu", "sigma2"]),
    ("seeding", &["strategy", "initial_fraction", "leader_count"]),
    ("relaxation", &["epsilon", "window", "t_max"]),
    ("experiment", &["replications", "vary", "values", "resample_expertise", "common_random_numbers"]),
    ("run", &["seed", "out"]),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

/// Raw key/value assignments before they are applied.
#[derive(Default)]
struct Assignments {
    source: Option<String>,
    path: Option<String>,
    prune_threshold: Option<String>,
    nodes: Option<String>,
    m_attach: Option<String>,
    graph_seed: Option<String>,
    vary: Option<String>,
    values: Option<String>,
    rest: Vec<(String, String)>,
}

impl Assignments {
    fn set(&mut self, key: &str, value: String) {
        let slot = match key {
            "source" => &mut self.source,
            "path" => &mut self.path,
            "prune_threshold" => &mut self.prune_threshold,
            "nodes" => &mut self.nodes,
            "m_attach" => &mut self.m_attach,
            "graph_seed" => &mut self.graph_seed,
            "vary" => &mut self.vary,
            "values" => &mut self.values,
            _ => {
                self.rest.retain(|(k, _)| k != key);
                self.rest.push((key.to_owned(), value));
                return;
            }
        };
        *slot = Some(value);
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Reads the config text, applies `overrides` on top and validates.
///
/// Errors from the file carry its line number; errors from overrides name
/// the offending key.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut asg = Assignments::default();
    let mut section: Option<String> = None;
    let mut origin: Vec<(String, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with(';') {
            continue;
        }
        if let Some(name) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if name != "manifest" && !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(Error::ConfigLine { line, message: format!("unknown section `[{name}]`") });
            }
            section = Some(name.to_owned());
            continue;
        }
        if section.as_deref() == Some("manifest") {
            continue;
        }
        let Some((k, v)) = l.split_once('=') else {
            return Err(Error::ConfigLine { line, message: format!("expected `key = value`, found `{l}`") });
        };
        let (key, value) = (k.trim(), v.trim());
        let (sec, key) = match key.split_once('.') {
            Some((s, k)) => (Some(s.to_owned()), k),
            None => (section.clone(), key),
        };
        let Some(home) = section_of(key) else {
            return Err(Error::ConfigLine { line, message: format!("unknown key `{key}`") });
        };
        match sec.as_deref() {
            Some(s) if s == home => {}
            Some(s) => {
                return Err(Error::ConfigLine {
                    line,
                    message: format!("key `{key}` belongs in [{home}], not [{s}]"),
                })
            }
            None => return Err(Error::ConfigLine { line, message: format!("key `{key}` outside a section") }),
        }
        origin.retain(|(k, _)| k != key);
        origin.push((key.to_owned(), line));
        asg.set(key, value.to_owned());
    }

    for (k, v) in overrides {
        let key = k.rsplit('.').next().unwrap_or(k).trim_start_matches("--").replace('-', "_");
        let Some(home) = section_of(&key) else {
            return Err(Error::Config(format!("unknown option `{k}`")));
        };
        if let Some((s, _)) = k.split_once('.') {
            if s != home {
                return Err(Error::Config(format!("option `{k}`: `{key}` belongs in [{home}]")));
            }
        }
        origin.retain(|(o, _)| *o != key);
        asg.set(&key, v.trim().to_owned());
    }

    // locate an error at its line when it came from the file
    let locate = |key: &str, e: Error| -> Error {
        match origin.iter().find(|(k, _)| k == key) {
            Some((_, line)) => Error::ConfigLine { line: *line, message: e.to_string() },
            None => e,
        }
    };

    let mut cfg = RunConfig::default();
    apply(&mut cfg, &asg).map_err(|(key, e)| locate(&key, e))?;
    validate(&cfg).map_err(|(key, e)| locate(&key, e))?;
    Ok(cfg)
}

type Keyed<T> = std::result::Result<T, (String, Error)>;

fn keyed<T>(key: &str, r: Result<T>) -> Keyed<T> {
    r.map_err(|e| (key.to_owned(), e))
}

fn apply(cfg: &mut RunConfig, a: &Assignments) -> Keyed<()> {
    let source = a.source.as_deref().unwrap_or(if a.path.is_some() { "file" } else { "generate" });
    cfg.graph = match source {
        "generate" => {
            let GraphSource::Generate { mut nodes, mut m_attach, mut seed } = GraphSource::default() else {
                unreachable!()
            };
            if let Some(v) = &a.nodes {
                nodes = keyed("nodes", parse_num("nodes", v))?;
            }
            if let Some(v) = &a.m_attach {
                m_attach = keyed("m_attach", parse_num("m_attach", v))?;
            }
            if let Some(v) = &a.graph_seed {
                seed = keyed("graph_seed", parse_num("graph_seed", v))?;
            }
            GraphSource::Generate { nodes, m_attach, seed }
        }
        "file" => {
            let path = a
                .path
                .clone()
                .ok_or_else(|| ("source".to_owned(), Error::Config("`source = file` requires `path`".into())))?;
            let prune_threshold = match &a.prune_threshold {
                Some(v) => keyed("prune_threshold", parse_num("prune_threshold", v))?,
                None => 0,
            };
            GraphSource::File { path: PathBuf::from(path), prune_threshold }
        }
        other => {
            return Err((
                "source".into(),
                Error::Config(format!("`source` must be `generate` or `file`, got `{other}`")),
            ))
        }
    };

    for (key, v) in &a.rest {
        let k = key.as_str();
        let p = &mut cfg.sim.params;
        let r: Result<()> = (|| {
            match k {
                "b" => p.b = parse_num(k, v)?,
                "c" => p.c = parse_num(k, v)?,
                "omega1" => p.omega1 = parse_num(k, v)?,
                "omega2" => p.omega2 = parse_num(k, v)?,
                "omega3" => p.omega3 = parse_num(k, v)?,
                "alpha" => p.alpha = parse_num(k, v)?,
                "beta" => p.beta = parse_num(k, v)?,
                "mu" => p.mu = parse_num(k, v)?,
                "sigma2" => p.sigma2 = parse_num(k, v)?,
                "strategy" => cfg.sim.seeding.kind = v.parse()?,
                "initial_fraction" => cfg.sim.seeding.initial_fraction = parse_num(k, v)?,
                "leader_count" => cfg.sim.seeding.leader_count = parse_num(k, v)?,
                "epsilon" => cfg.sim.criterion.epsilon = parse_num(k, v)?,
                "window" => cfg.sim.criterion.window = parse_num(k, v)?,
                "t_max" => cfg.sim.criterion.t_max = parse_num(k, v)?,
                "replications" => cfg.replications = parse_num(k, v)?,
                "resample_expertise" => cfg.sim.resample_expertise = parse_bool(k, v)?,
                "common_random_numbers" => cfg.common_random_numbers = parse_bool(k, v)?,
                "seed" => cfg.master_seed = parse_num(k, v)?,
                "out" => cfg.out_dir = PathBuf::from(v),
                _ => return Err(Error::Config(format!("unknown key `{k}`"))),
            }
            Ok(())
        })();
        keyed(k, r)?;
    }

    let vary = a.vary.as_deref().unwrap_or("init-prop");
    let values = a.values.as_deref();
    cfg.variation = keyed(
        if values.is_some() { "values" } else { "vary" },
        parse_variation(vary, values),
    )?;
    Ok(())
}

fn parse_variation(vary: &str, values: Option<&str>) -> Result<Variation> {
    let nums = |default: Vec<f64>| -> Result<Vec<f64>> {
        match values {
            Some(v) => parse_list("values", v),
            None => Ok(default),
        }
    };
    Ok(match vary {
        "init-prop" | "init_prop" => Variation::InitialProportion(nums(default_proportions())?),
        "bc" => Variation::BcRatio(nums(default_bc_ratios())?),
        "alpha" => Variation::Alpha(nums(vec![0.5, 1.0, 2.0])?),
        "sigma2" => Variation::Sigma2(nums(vec![0.1, 0.25, 1.0])?),
        "seeding" => Variation::Seeding(match values {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_>>()?,
            None => SeedingKind::ALL.to_vec(),
        }),
        other => {
            return Err(Error::Config(format!(
                "`vary` must be one of init-prop, bc, seeding, alpha, sigma2; got `{other}`"
            )))
        }
    })
}

fn validate(cfg: &RunConfig) -> Keyed<()> {
    let relocate = |e: Error| -> (String, Error) {
        let key = match &e {
            Error::Param { name, .. } => name.to_string(),
            Error::Config(_) => "leader_count".into(),
            _ => String::new(),
        };
        (key, e)
    };
    cfg.sim.params.validate().map_err(relocate)?;
    cfg.sim.seeding.validate_fraction().map_err(relocate)?;
    cfg.sim.criterion.validate().map_err(relocate)?;
    match &cfg.graph {
        GraphSource::Generate { nodes, m_attach, .. } => {
            if *m_attach < 1 || nodes <= m_attach {
                return Err((
                    "nodes".into(),
                    Error::param("nodes", format!("need nodes > m_attach >= 1, got {nodes} and {m_attach}")),
                ));
            }
            cfg.experiment().validate(*nodes).map_err(relocate)?;
        }
        GraphSource::File { .. } => {
            // node count is unknown until the graph is read; check what we can
            if cfg.replications < 1 {
                return Err(relocate(Error::param("replications", "must be at least 1")));
            }
            if cfg.variation.is_empty() {
                return Err(relocate(Error::param("values", "variation list is empty")));
            }
        }
    }
    Ok(())
}

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

impl RunConfig {
    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            base: self.sim,
            replications: self.replications,
            variation: self.variation.clone(),
            master_seed: self.master_seed,
            common_random_numbers: self.common_random_numbers,
        }
    }

    /// Canonical config text covering everything that affects results. The
    /// output directory is left out.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let p = &self.sim.params;
        s.push_str("[graph]\n");
        match &self.graph {
            GraphSource::File { path, prune_threshold } => {
                let _ = writeln!(s, "source = file\npath = {}\nprune_threshold = {prune_threshold}", path.display());
            }
            GraphSource::Generate { nodes, m_attach, seed } => {
                let _ = writeln!(s, "source = generate\nnodes = {nodes}\nm_attach = {m_attach}\ngraph_seed = {seed}");
            }
        }
        let _ = writeln!(
            s,
            "\n[model]\nb = {}\nc = {}\nomega1 = {}\nomega2 = {}\nomega3 = {}\nalpha = {}\nbeta = {}\nmu = {}\nsigma2 = {}",
            num(p.b),
            num(p.c),
            num(p.omega1),
            num(p.omega2),
            num(p.omega3),
            num(p.alpha),
            num(p.beta),
            num(p.mu),
            num(p.sigma2)
        );
        let sd = &self.sim.seeding;
        let _ = writeln!(
            s,
            "\n[seeding]\nstrategy = {}\ninitial_fraction = {}\nleader_count = {}",
            sd.kind,
            num(sd.initial_fraction),
            sd.leader_count
        );
        let c = &self.sim.criterion;
        let _ = writeln!(s, "\n[relaxation]\nepsilon = {}\nwindow = {}\nt_max = {}", num(c.epsilon), c.window, c.t_max);
        let values = match &self.variation {
            Variation::InitialProportion(v) | Variation::BcRatio(v) | Variation::Alpha(v) | Variation::Sigma2(v) => {
                v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
            }
            Variation::Seeding(v) => v.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","),
        };
        let _ = writeln!(
            s,
            "\n[experiment]\nreplications = {}\nvary = {}\nvalues = {values}\nresample_expertise = {}\ncommon_random_numbers = {}",
            self.replications,
            self.variation.name(),
            self.sim.resample_expertise,
            self.common_random_numbers
        );
        let _ = writeln!(s, "\n[run]\nseed = {}", self.master_seed);
        s
    }

    /// Full config text including the output directory.
    pub fn to_config_string(&self) -> String {
        let mut s = self.canonical();
        let _ = writeln!(s, "out = {}", self.out_dir.display());
        s
    }

    /// SHA-256 of [`RunConfig::canonical`].
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
