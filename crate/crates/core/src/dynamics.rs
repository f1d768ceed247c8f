//! Payoff evaluation and synchronous opinion updates.
//!
//! A node collects `b * w(x)` from every leader `x` that shares its opinion
//! and pays `c * (w(x) - omega3 * s(i))` for every leader that does not,
//! where `w(x) = 1 + omega1 * t(x) + omega2 * e(x)` uses normalized leader
//! attributes and `s(i)` is the recipient's normalized stubbornness. A node
//! with negative payoff switches opinion on the next step; zero keeps it.

use rayon::prelude::*;

use crate::agents::{AgentAttributes, ModelParams, Opinion};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Node count above which payoffs are evaluated in parallel within a step.
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionState {
    pub step: usize,
    pub opinions: Vec<Opinion>,
    /// Nodes that changed opinion entering this step (0 for the initial state).
    pub flips: usize,
}

impl OpinionState {
    pub fn initial(opinions: Vec<Opinion>) -> Self {
        OpinionState { step: 0, opinions, flips: 0 }
    }

    pub fn prop_a(&self) -> f64 {
        prop_a(&self.opinions)
    }
}

pub fn prop_a(opinions: &[Opinion]) -> f64 {
    if opinions.is_empty() {
        return 0.0;
    }
    opinions.iter().filter(|&&o| o == Opinion::A).count() as f64 / opinions.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub step: usize,
    pub prop_a: f64,
    pub mean_payoff: f64,
    pub flips: usize,
}

/// When a run counts as settled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationCriterion {
    /// Largest `|Δ prop_A|` that still counts as quiet. Zero means no flips at all.
    pub epsilon: f64,
    /// Consecutive quiet steps required.
    pub window: usize,
    pub t_max: usize,
}

impl Default for RelaxationCriterion {
    fn default() -> Self {
        RelaxationCriterion { epsilon: 0.0, window: 10, t_max: 500 }
    }
}

impl RelaxationCriterion {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::param("epsilon", "must be finite and >= 0"));
        }
        if self.window < 1 {
            return Err(Error::param("window", "must be at least 1"));
        }
        if self.t_max < self.window {
            return Err(Error::param("t_max", "must be at least the quiet window"));
        }
        Ok(())
    }

    fn is_quiet(&self, prev: &StepMetrics, cur: &StepMetrics) -> bool {
        cur.flips == 0 || (self.epsilon > 0.0 && (cur.prop_a - prev.prop_a).abs() <= self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub trajectory: Vec<StepMetrics>,
    /// First step of the quiet window, or `t_max` when the run never settled.
    pub relaxation_time: usize,
    pub final_prop_a: f64,
    pub converged: bool,
}

impl RunResult {
    pub fn final_metrics(&self) -> &StepMetrics {
        self.trajectory.last().expect("trajectory is never empty")
    }

    pub fn metrics_at(&self, step: usize) -> &StepMetrics {
        &self.trajectory[step.min(self.trajectory.len() - 1)]
    }
}

/// Payoff of node `i` under the given opinions.
pub fn payoff(
    i: usize,
    opinions: &[Opinion],
    g: &SocialGraph,
    attrs: &AgentAttributes,
    params: &ModelParams,
) -> f64 {
    let own = opinions[i];
    let relief = params.omega3 * attrs.stubborn[i];
    let (mut gain, mut loss) = (0.0, 0.0);
    for &x in g.leaders_of(i) {
        let x = x as usize;
        let w = 1.0 + params.omega1 * attrs.trust[x] + params.omega2 * attrs.expertise[x];
        if opinions[x] == own {
            gain += w;
        } else {
            loss += w - relief;
        }
    }
    params.b * gain - params.c * loss
}

/// Precomputed per-node terms plus double buffers for repeated stepping.
pub struct Simulator<'a> {
    graph: &'a SocialGraph,
    b: f64,
    c: f64,
    /// `1 + omega1 * t(x) + omega2 * e(x)` for every node as a leader.
    leader_weight: Vec<f64>,
    /// `omega3 * s(i)` for every node as a recipient.
    relief: Vec<f64>,
    payoffs: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(graph: &'a SocialGraph, attrs: &AgentAttributes, params: &ModelParams) -> Self {
        let n = graph.node_count();
        assert_eq!(attrs.len(), n, "attribute vectors must cover every node");
        let leader_weight = (0..n)
            .map(|x| 1.0 + params.omega1 * attrs.trust[x] + params.omega2 * attrs.expertise[x])
            .collect();
        let relief = attrs.stubborn.iter().map(|s| params.omega3 * s).collect();
        Simulator {
            graph,
            b: params.b,
            c: params.c,
            leader_weight,
            relief,
            payoffs: vec![0.0; n],
        }
    }

    #[inline]
    fn node_payoff(&self, i: usize, opinions: &[Opinion]) -> f64 {
        let own = opinions[i];
        let relief = self.relief[i];
        let (mut gain, mut loss) = (0.0, 0.0);
        for &x in self.graph.leaders_of(i) {
            let x = x as usize;
            let w = self.leader_weight[x];
            if opinions[x] == own {
                gain += w;
            } else {
                loss += w - relief;
            }
        }
        self.b * gain - self.c * loss
    }

    /// Fills the internal payoff buffer for `opinions` and returns it.
    pub fn compute_payoffs(&mut self, opinions: &[Opinion]) -> &[f64] {
        let mut payoffs = std::mem::take(&mut self.payoffs);
        if payoffs.len() >= PAR_THRESHOLD {
            payoffs
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, p)| *p = self.node_payoff(i, opinions));
        } else {
            for (i, p) in payoffs.iter_mut().enumerate() {
                *p = self.node_payoff(i, opinions);
            }
        }
        self.payoffs = payoffs;
        &self.payoffs
    }

    /// Evaluates `current`, writes its successor into `next` and returns the
    /// metrics of `current`.
    pub fn step_into(&mut self, current: &OpinionState, next: &mut OpinionState) -> StepMetrics {
        self.compute_payoffs(&current.opinions);
        let n = current.opinions.len();
        next.opinions.clear();
        let mut flips = 0;
        next.opinions.extend(current.opinions.iter().zip(&self.payoffs).map(|(&o, &p)| {
            if p < 0.0 {
                flips += 1;
                o.flipped()
            } else {
                o
            }
        }));
        next.step = current.step + 1;
        next.flips = flips;
        StepMetrics {
            step: current.step,
            prop_a: current.prop_a(),
            mean_payoff: if n == 0 { 0.0 } else { self.payoffs.iter().sum::<f64>() / n as f64 },
            flips: current.flips,
        }
    }

    /// Runs from `initial` until `criterion` is met or `t_max` is reached.
    pub fn run(&mut self, initial: Vec<Opinion>, criterion: &RelaxationCriterion) -> RunResult {
        let mut current = OpinionState::initial(initial);
        let mut next = OpinionState { step: 0, opinions: Vec::with_capacity(current.opinions.len()), flips: 0 };
        let mut trajectory: Vec<StepMetrics> = Vec::new();
        let mut quiet_run = 0;
        let mut converged = false;

        loop {
            let t = current.step;
            // with no flips the state is a fixed point, so its metrics repeat
            let metrics = match trajectory.last() {
                Some(prev) if current.flips == 0 && t > 0 => {
                    next.opinions.clone_from(&current.opinions);
                    next.step = t + 1;
                    next.flips = 0;
                    StepMetrics { step: t, flips: 0, ..*prev }
                }
                _ => self.step_into(&current, &mut next),
            };
            let quiet = trajectory.last().is_some_and(|prev| criterion.is_quiet(prev, &metrics));
            trajectory.push(metrics);
            quiet_run = if quiet { quiet_run + 1 } else { 0 };
            if quiet_run >= criterion.window {
                converged = true;
                break;
            }
            if t >= criterion.t_max {
                break;
            }
            std::mem::swap(&mut current, &mut next);
        }

        let last = trajectory.last().expect("at least one step recorded");
        let relaxation_time = if converged { last.step + 1 - criterion.window } else { criterion.t_max };
        RunResult {
            final_prop_a: last.prop_a,
            relaxation_time,
            converged,
            trajectory,
        }
    }
}

/// One synchronous update: every node is judged against the step-`t` state.
pub fn update_step(
    state: &OpinionState,
    g: &SocialGraph,
    attrs: &AgentAttributes,
    params: &ModelParams,
) -> (OpinionState, StepMetrics) {
    let mut sim = Simulator::new(g, attrs, params);
    let mut next = OpinionState { step: 0, opinions: Vec::new(), flips: 0 };
    let metrics = sim.step_into(state, &mut next);
    (next, metrics)
}

pub fn run_simulation(
    g: &SocialGraph,
    attrs: &AgentAttributes,
    params: &ModelParams,
    initial: Vec<Opinion>,
    criterion: &RelaxationCriterion,
) -> RunResult {
    Simulator::new(g, attrs, params).run(initial, criterion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;

    fn graph(text: &str) -> SocialGraph {
        load_edge_list(text.as_bytes()).unwrap().graph
    }

    fn attrs(trust: Vec<f64>, expertise: Vec<f64>, stubborn: Vec<f64>) -> AgentAttributes {
        AgentAttributes {
            expertise_raw: expertise.clone(),
            trust_raw: trust.clone(),
            stubborn_raw: stubborn.clone(),
            expertise,
            trust,
            stubborn,
        }
    }

    fn id(g: &SocialGraph, label: &str) -> usize {
        g.labels().iter().position(|l| l == label).unwrap()
    }

    #[test]
    fn worked_two_leader_example() {
        let g = graph("i x1\ni x2\n");
        let (i, x1, x2) = (id(&g, "i"), id(&g, "x1"), id(&g, "x2"));
        let mut t = vec![0.0; 3];
        let mut e = vec![0.0; 3];
        let mut s = vec![0.0; 3];
        t[x1] = 0.5;
        e[x1] = 0.2;
        t[x2] = 0.1;
        e[x2] = 0.9;
        s[i] = 0.3;
        let a = attrs(t, e, s);
        let mut o = vec![Opinion::A; 3];
        o[x2] = Opinion::B;
        let p = payoff(i, &o, &g, &a, &ModelParams::default());
        assert!(p.abs() < 1e-12, "p = {p}");
    }

    #[test]
    fn no_leaders_no_payoff() {
        let g = graph("a b\n");
        let a = attrs(vec![0.3; 2], vec![0.7; 2], vec![0.1; 2]);
        let o = vec![Opinion::A, Opinion::B];
        assert_eq!(payoff(id(&g, "b"), &o, &g, &a, &ModelParams::default()), 0.0);
    }

    #[test]
    fn single_disagreeing_leader_flips_follower() {
        let g = graph("i x\n");
        let (i, x) = (id(&g, "i"), id(&g, "x"));
        let a = attrs(vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]);
        let mut o = vec![Opinion::A; 2];
        o[i] = Opinion::B;
        assert_eq!(payoff(i, &o, &g, &a, &ModelParams::default()), -1.0);
        let (next, m) = update_step(&OpinionState::initial(o), &g, &a, &ModelParams::default());
        assert_eq!(next.opinions[i], Opinion::A);
        assert_eq!(next.opinions[x], Opinion::A);
        assert_eq!(next.flips, 1);
        assert_eq!(m.step, 0);
        assert_eq!(m.mean_payoff, -0.5);
    }

    #[test]
    fn mutual_followers_oscillate() {
        let g = graph("a b\nb a\n");
        let a = attrs(vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]);
        let p = ModelParams::default();
        let s0 = OpinionState::initial(vec![Opinion::A, Opinion::B]);
        let (s1, _) = update_step(&s0, &g, &a, &p);
        assert_eq!(s1.opinions, vec![Opinion::B, Opinion::A]);
        assert_eq!(s1.flips, 2);
        let (s2, m1) = update_step(&s1, &g, &a, &p);
        assert_eq!(s2.opinions, s0.opinions);
        assert_eq!(s2.flips, 2);
        assert_eq!(m1.flips, 2);

        let r = run_simulation(&g, &a, &p, s0.opinions, &RelaxationCriterion { t_max: 40, ..Default::default() });
        assert!(!r.converged);
        assert_eq!(r.relaxation_time, 40);
        assert_eq!(r.trajectory.len(), 41);
        assert!(r.trajectory[1..].iter().all(|m| m.flips == 2));
    }

    #[test]
    fn unanimous_start_settles_immediately() {
        let g = graph("a b\nb c\nc a\nd a\n");
        let a = attrs(vec![0.5; 4], vec![0.5; 4], vec![0.5; 4]);
        let r = run_simulation(&g, &a, &ModelParams::default(), vec![Opinion::A; 4], &RelaxationCriterion::default());
        assert!(r.converged);
        assert_eq!(r.relaxation_time, 1);
        assert_eq!(r.final_prop_a, 1.0);
        assert_eq!(r.trajectory.len(), 11);
        assert!(r.trajectory.iter().all(|m| m.mean_payoff >= 0.0));
    }

    #[test]
    fn epsilon_tolerates_small_moves() {
        let g = graph("a b\nb a\nc d\nd e\n");
        let a = attrs(vec![0.0; 5], vec![0.0; 5], vec![0.0; 5]);
        let o = vec![Opinion::A, Opinion::B, Opinion::A, Opinion::A, Opinion::A];
        // the a/b pair swaps forever but prop_A never moves
        let strict = RelaxationCriterion { t_max: 30, ..Default::default() };
        assert!(!run_simulation(&g, &a, &ModelParams::default(), o.clone(), &strict).converged);
        let loose = RelaxationCriterion { epsilon: 0.01, window: 3, t_max: 30 };
        let r = run_simulation(&g, &a, &ModelParams::default(), o, &loose);
        assert!(r.converged);
        assert_eq!(r.relaxation_time, 1);
    }

    #[test]
    fn criterion_validation() {
        assert!(RelaxationCriterion::default().validate().is_ok());
        assert!(RelaxationCriterion { window: 0, ..Default::default() }.validate().is_err());
        assert!(RelaxationCriterion { t_max: 5, ..Default::default() }.validate().is_err());
        assert!(RelaxationCriterion { epsilon: -1.0, ..Default::default() }.validate().is_err());
    }
}
