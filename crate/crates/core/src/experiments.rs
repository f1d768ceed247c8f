//! Replicated runs and the three studies built on them: initial proportion,
//! benefit/cost ratio and opinion-leader guidance.
//!
//! Replication `r` of variation point `v` draws all of its randomness from
//! `child_seed(master, v, r)`. Runs execute in parallel and are reduced in
//! replication order, so aggregates do not depend on scheduling.

use std::fmt;

use rayon::prelude::*;

use crate::agents::{
    assign_opinions_seeded, sample_expertise, AgentAttributes, ModelParams, SeedingKind, SeedingStrategy,
};
use crate::dynamics::{RelaxationCriterion, RunResult, Simulator};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::seed::child_seed;

/// Everything needed to run one simulation on a fixed graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub params: ModelParams,
    pub seeding: SeedingStrategy,
    pub criterion: RelaxationCriterion,
    /// Redraw expertise for every replication; otherwise one draw per study.
    pub resample_expertise: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            params: ModelParams::default(),
            seeding: SeedingStrategy::default(),
            criterion: RelaxationCriterion::default(),
            resample_expertise: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        self.params.validate()?;
        self.seeding.validate(n)?;
        self.criterion.validate()
    }
}

/// The quantity a study varies.
#[derive(Debug, Clone, PartialEq)]
pub enum Variation {
    InitialProportion(Vec<f64>),
    /// `b` takes each value while `c` stays at 1.
    BcRatio(Vec<f64>),
    Seeding(Vec<SeedingKind>),
    Alpha(Vec<f64>),
    Sigma2(Vec<f64>),
}

impl Variation {
    pub fn name(&self) -> &'static str {
        match self {
            Variation::InitialProportion(_) => "init-prop",
            Variation::BcRatio(_) => "bc",
            Variation::Seeding(_) => "seeding",
            Variation::Alpha(_) => "alpha",
            Variation::Sigma2(_) => "sigma2",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Variation::InitialProportion(v)
            | Variation::BcRatio(v)
            | Variation::Alpha(v)
            | Variation::Sigma2(v) => v.len(),
            Variation::Seeding(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Label of point `i` as written to the summary.
    pub fn label(&self, i: usize) -> String {
        match self {
            Variation::InitialProportion(v)
            | Variation::BcRatio(v)
            | Variation::Alpha(v)
            | Variation::Sigma2(v) => crate::output::fmt_sig6(v[i]),
            Variation::Seeding(v) => v[i].to_string(),
        }
    }

    /// `base` with point `i` applied.
    pub fn apply(&self, base: &SimulationConfig, i: usize) -> SimulationConfig {
        let mut cfg = *base;
        match self {
            Variation::InitialProportion(v) => cfg.seeding.initial_fraction = v[i],
            Variation::BcRatio(v) => {
                cfg.params.b = v[i];
                cfg.params.c = 1.0;
            }
            Variation::Seeding(v) => cfg.seeding.kind = v[i],
            Variation::Alpha(v) => cfg.params.alpha = v[i],
            Variation::Sigma2(v) => cfg.params.sigma2 = v[i],
        }
        cfg
    }
}

impl fmt::Display for Variation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimulationConfig,
    pub replications: usize,
    pub variation: Variation,
    pub master_seed: u64,
    /// Reuse the same per-replication seeds at every variation point.
    pub common_random_numbers: bool,
}

impl ExperimentSpec {
    pub fn new(base: SimulationConfig, variation: Variation, replications: usize, master_seed: u64) -> Self {
        ExperimentSpec {
            base,
            replications,
            variation,
            master_seed,
            common_random_numbers: false,
        }
    }

    /// Checks every variation point before any run starts.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::param("replications", "must be at least 1"));
        }
        if self.variation.is_empty() {
            return Err(Error::param("values", "variation list is empty"));
        }
        if let Variation::BcRatio(r) = &self.variation {
            if r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::param("values", "b/c ratios must be strictly increasing"));
            }
        }
        for i in 0..self.variation.len() {
            self.variation.apply(&self.base, i).validate(n)?;
        }
        Ok(())
    }

    fn stream_index(&self, point: usize) -> u64 {
        if self.common_random_numbers {
            0
        } else {
            point as u64
        }
    }
}

/// Mean and population standard deviation of one step across replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStep {
    pub step: usize,
    pub mean_prop_a: f64,
    pub std_prop_a: f64,
    pub mean_payoff: f64,
    pub std_payoff: f64,
    pub mean_flips: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTrajectory {
    /// Padded to the longest run; shorter runs hold their last value.
    pub steps: Vec<AggregateStep>,
    pub runs: Vec<RunResult>,
    pub mean_relaxation: f64,
    pub std_relaxation: f64,
    pub mean_final_prop: f64,
    pub std_final_prop: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Standard error of the mean using the unbiased variance.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let (_, pop_std) = mean_std(values.iter().copied());
    pop_std * (n as f64 / (n - 1) as f64).sqrt() / (n as f64).sqrt()
}

impl AggregateTrajectory {
    pub fn from_runs(runs: Vec<RunResult>) -> Self {
        assert!(!runs.is_empty(), "need at least one run");
        let len = runs.iter().map(|r| r.trajectory.len()).max().unwrap_or(0);
        let steps = (0..len)
            .map(|t| {
                let at = runs.iter().map(|r| r.metrics_at(t));
                let (mean_prop_a, std_prop_a) = mean_std(at.clone().map(|m| m.prop_a));
                let (mean_payoff, std_payoff) = mean_std(at.clone().map(|m| m.mean_payoff));
                // a run that already stopped contributes no further flips
                let mean_flips = runs
                    .iter()
                    .map(|r| r.trajectory.get(t).map_or(0, |m| m.flips) as f64)
                    .sum::<f64>()
                    / runs.len() as f64;
                AggregateStep {
                    step: t,
                    mean_prop_a,
                    std_prop_a,
                    mean_payoff,
                    std_payoff,
                    mean_flips,
                }
            })
            .collect();
        let (mean_relaxation, std_relaxation) = mean_std(runs.iter().map(|r| r.relaxation_time as f64));
        let (mean_final_prop, std_final_prop) = mean_std(runs.iter().map(|r| r.final_prop_a));
        AggregateTrajectory {
            steps,
            runs,
            mean_relaxation,
            std_relaxation,
            mean_final_prop,
            std_final_prop,
        }
    }

    pub fn final_props(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_prop_a).collect()
    }

    pub fn relaxation_times(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.relaxation_time as f64).collect()
    }

    pub fn converged_fraction(&self) -> f64 {
        self.runs.iter().filter(|r| r.converged).count() as f64 / self.runs.len() as f64
    }

    /// Mean of the per-step std of prop_A over `from..=to` (padded steps included).
    pub fn mean_std_band(&self, from: usize, to: usize) -> f64 {
        let (sum, count) = (from..=to).fold((0.0, 0usize), |(s, c), t| {
            let std = self.step_at(t).std_prop_a;
            (s + std, c + 1)
        });
        sum / count as f64
    }

    /// Aggregate at step `t`; beyond the padded length every run sits at its final value.
    pub fn step_at(&self, t: usize) -> AggregateStep {
        let last = self.steps.len() - 1;
        AggregateStep { step: t, ..self.steps[t.min(last)] }
    }
}

/// Runs a single replication with its own seed.
pub fn run_replication(g: &SocialGraph, cfg: &SimulationConfig, shared_expertise: Option<&[f64]>, seed: u64) -> Result<RunResult> {
    let attrs = match shared_expertise {
        Some(e) => AgentAttributes::from_expertise(g, &cfg.params, e.to_vec())?,
        None => AgentAttributes::sample(g, &cfg.params, seed)?,
    };
    let initial = assign_opinions_seeded(g, &attrs, &cfg.seeding, seed)?;
    Ok(Simulator::new(g, &attrs, &cfg.params).run(initial, &cfg.criterion))
}

fn replicate_point(
    g: &SocialGraph,
    cfg: &SimulationConfig,
    replications: usize,
    master_seed: u64,
    stream: u64,
) -> Result<AggregateTrajectory> {
    cfg.validate(g.node_count())?;
    let shared = if cfg.resample_expertise {
        None
    } else {
        Some(sample_expertise(g.node_count(), &cfg.params, child_seed(master_seed, stream, u64::MAX))?)
    };
    let runs = (0..replications as u64)
        .into_par_iter()
        .map(|r| run_replication(g, cfg, shared.as_deref(), child_seed(master_seed, stream, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AggregateTrajectory::from_runs(runs))
}

/// `replications` independent runs of `cfg` on `g`.
pub fn replicate(g: &SocialGraph, cfg: &SimulationConfig, replications: usize, master_seed: u64) -> Result<AggregateTrajectory> {
    if replications < 1 {
        return Err(Error::param("replications", "must be at least 1"));
    }
    replicate_point(g, cfg, replications, master_seed, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationPoint {
    pub label: String,
    pub config: SimulationConfig,
    pub aggregate: AggregateTrajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub variation: Variation,
    pub points: Vec<VariationPoint>,
}

/// Runs every variation point of `spec`. All points are validated first.
pub fn run_experiment(spec: &ExperimentSpec, g: &SocialGraph) -> Result<ExperimentResult> {
    spec.validate(g.node_count())?;
    let points = (0..spec.variation.len())
        .map(|i| {
            let config = spec.variation.apply(&spec.base, i);
            let aggregate = replicate_point(g, &config, spec.replications, spec.master_seed, spec.stream_index(i))?;
            Ok(VariationPoint {
                label: spec.variation.label(i),
                config,
                aggregate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        variation: spec.variation.clone(),
        points,
    })
}

/// Initial proportions used by the topic-type study.
pub fn default_proportions() -> Vec<f64> {
    vec![0.55, 0.60, 0.65, 0.70, 0.75, 0.80]
}

/// b/c grid from 0.25 to 3.0 in steps of 0.25.
pub fn default_bc_ratios() -> Vec<f64> {
    (1..=12).map(|i| i as f64 * 0.25).collect()
}

pub fn sweep_initial_proportion(
    g: &SocialGraph,
    base: &SimulationConfig,
    replications: usize,
    master_seed: u64,
    proportions: &[f64],
) -> Result<ExperimentResult> {
    let spec = ExperimentSpec::new(*base, Variation::InitialProportion(proportions.to_vec()), replications, master_seed);
    run_experiment(&spec, g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub bc_ratio: f64,
    pub mean_relaxation: f64,
    pub std_relaxation: f64,
    pub mean_final_prop: f64,
    pub std_final_prop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub experiment: ExperimentResult,
}

impl SweepResult {
    fn argmax_by(&self, key: impl Fn(&SweepPoint) -> f64) -> usize {
        // first maximum wins
        let mut best = 0;
        for (i, p) in self.points.iter().enumerate() {
            if key(p) > key(&self.points[best]) {
                best = i;
            }
        }
        best
    }

    pub fn argmax_relaxation(&self) -> usize {
        self.argmax_by(|p| p.mean_relaxation)
    }

    pub fn argmax_final_prop(&self) -> usize {
        self.argmax_by(|p| p.mean_final_prop)
    }
}

/// Varies `b` over `ratios` with `c = 1`.
pub fn sweep_bc(
    g: &SocialGraph,
    base: &SimulationConfig,
    replications: usize,
    master_seed: u64,
    ratios: &[f64],
) -> Result<SweepResult> {
    let spec = ExperimentSpec::new(*base, Variation::BcRatio(ratios.to_vec()), replications, master_seed);
    let experiment = run_experiment(&spec, g)?;
    let points = experiment
        .points
        .iter()
        .map(|p| SweepPoint {
            bc_ratio: p.config.params.b,
            mean_relaxation: p.aggregate.mean_relaxation,
            std_relaxation: p.aggregate.std_relaxation,
            mean_final_prop: p.aggregate.mean_final_prop,
            std_final_prop: p.aggregate.std_final_prop,
        })
        .collect();
    Ok(SweepResult { points, experiment })
}

/// Random seeding against top-K in-degree and top-K expertise seeding, all
/// with `leader_count` leaders and the same initial fraction.
pub fn guidance_study(
    g: &SocialGraph,
    base: &SimulationConfig,
    replications: usize,
    master_seed: u64,
    leader_count: usize,
    initial_fraction: f64,
) -> Result<ExperimentResult> {
    let mut cfg = *base;
    cfg.seeding.leader_count = leader_count;
    cfg.seeding.initial_fraction = initial_fraction;
    let spec = ExperimentSpec::new(cfg, Variation::Seeding(SeedingKind::ALL.to_vec()), replications, master_seed);
    run_experiment(&spec, g)
}

/// Finds the point for a seeding kind in a guidance study result.
pub fn point_for(result: &ExperimentResult, kind: SeedingKind) -> Option<&VariationPoint> {
    result.points.iter().find(|p| p.config.seeding.kind == kind)
}
