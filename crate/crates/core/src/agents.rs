//! Per-agent attributes and initial opinion assignment.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::seed::{stream_rng, Stream};

/// One of the two competing opinions. `A` is encoded `+1`, `B` is `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Opinion {
    A = 1,
    B = -1,
}

impl Opinion {
    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn flipped(self) -> Opinion {
        match self {
            Opinion::A => Opinion::B,
            Opinion::B => Opinion::A,
        }
    }
}

/// Coefficients of the persuasion payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Benefit per agreeing leader.
    pub b: f64,
    /// Cost per disagreeing leader.
    pub c: f64,
    /// Weight of leader trustworthiness.
    pub omega1: f64,
    /// Weight of leader expertise.
    pub omega2: f64,
    /// Weight of recipient stubbornness (reduces cost).
    pub omega3: f64,
    /// Trustworthiness exponent on in-degree.
    pub alpha: f64,
    /// Stubbornness per unit of expertise.
    pub beta: f64,
    /// Expertise mean.
    pub mu: f64,
    /// Expertise variance.
    pub sigma2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            b: 1.0,
            c: 1.0,
            omega1: 1.0,
            omega2: 1.0,
            omega3: 1.0,
            alpha: 1.0,
            beta: 1.0,
            mu: 10.0,
            sigma2: 0.25,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("b", self.b), ("c", self.c), ("alpha", self.alpha), ("sigma2", self.sigma2)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        let non_negative = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("omega3", self.omega3),
            ("beta", self.beta),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        Ok(())
    }
}

/// Raw and min-max normalized agent attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentAttributes {
    pub expertise_raw: Vec<f64>,
    pub trust_raw: Vec<f64>,
    pub stubborn_raw: Vec<f64>,
    pub expertise: Vec<f64>,
    pub trust: Vec<f64>,
    pub stubborn: Vec<f64>,
}

impl AgentAttributes {
    /// Derives every attribute from a given expertise draw.
    pub fn from_expertise(g: &SocialGraph, params: &ModelParams, expertise_raw: Vec<f64>) -> Result<Self> {
        assert_eq!(expertise_raw.len(), g.node_count());
        let trust_raw = compute_trust(g, params);
        let stubborn_raw: Vec<f64> = expertise_raw.iter().map(|e| params.beta * e).collect();
        Ok(AgentAttributes {
            expertise: normalize(&expertise_raw)?,
            trust: normalize(&trust_raw)?,
            stubborn: normalize(&stubborn_raw)?,
            expertise_raw,
            trust_raw,
            stubborn_raw,
        })
    }

    /// Samples expertise from the run seed's expertise stream and derives the rest.
    pub fn sample(g: &SocialGraph, params: &ModelParams, run_seed: u64) -> Result<Self> {
        let e = sample_expertise(g.node_count(), params, run_seed)?;
        Self::from_expertise(g, params, e)
    }

    pub fn len(&self) -> usize {
        self.expertise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expertise.is_empty()
    }
}

/// Draws `n` expertise values from `N(mu, sigma2)`, redrawing any value
/// that is not strictly positive.
pub fn sample_expertise(n: usize, params: &ModelParams, run_seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(params.mu, params.sigma2.sqrt())
        .map_err(|e| Error::param("sigma2", e.to_string()))?;
    // rejection would effectively never terminate
    if params.mu + 8.0 * params.sigma2.sqrt() <= 0.0 {
        return Err(Error::param("mu", "expertise distribution has no positive mass"));
    }
    let mut rng = stream_rng(run_seed, Stream::Expertise);
    Ok((0..n)
        .map(|_| loop {
            let v = normal.sample(&mut rng);
            if v > 0.0 {
                break v;
            }
        })
        .collect())
}

/// Trustworthiness `k_i ^ alpha`; nodes without followers get 0.
pub fn compute_trust(g: &SocialGraph, params: &ModelParams) -> Vec<f64> {
    g.in_degrees()
        .iter()
        .map(|&k| if k == 0 { 0.0 } else { (k as f64).powf(params.alpha) })
        .collect()
}

/// Min-max scaling onto `[0, 1]`. A constant vector maps to all zeros.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::param("values", "need at least one value"));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| ((v - min) / range).clamp(0.0, 1.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedingKind {
    Random,
    TopInDegree,
    TopExpertise,
}

impl SeedingKind {
    pub const ALL: [SeedingKind; 3] = [SeedingKind::Random, SeedingKind::TopInDegree, SeedingKind::TopExpertise];

    pub fn as_str(self) -> &'static str {
        match self {
            SeedingKind::Random => "random",
            SeedingKind::TopInDegree => "top_in_degree",
            SeedingKind::TopExpertise => "top_expertise",
        }
    }
}

impl fmt::Display for SeedingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeedingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SeedingKind::Random),
            "top_in_degree" | "top-in-degree" | "in_degree" => Ok(SeedingKind::TopInDegree),
            "top_expertise" | "top-expertise" | "expertise" => Ok(SeedingKind::TopExpertise),
            other => Err(Error::Config(format!("unknown seeding strategy `{other}`"))),
        }
    }
}

/// How the initial holders of opinion A are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedingStrategy {
    pub kind: SeedingKind,
    pub initial_fraction: f64,
    /// Number of guaranteed leaders for the top-K kinds.
    pub leader_count: usize,
}

impl Default for SeedingStrategy {
    fn default() -> Self {
        SeedingStrategy {
            kind: SeedingKind::Random,
            initial_fraction: 0.55,
            leader_count: 500,
        }
    }
}

impl SeedingStrategy {
    /// Number of nodes that start with opinion A.
    pub fn seed_count(&self, n: usize) -> usize {
        (self.initial_fraction * n as f64).round() as usize
    }

    pub fn validate_fraction(&self) -> Result<()> {
        let f = self.initial_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::param("initial_fraction", format!("must lie in (0, 1), got {f}")));
        }
        Ok(())
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_fraction()?;
        if self.kind != SeedingKind::Random && self.leader_count > self.seed_count(n) {
            return Err(Error::Config(format!(
                "leader_count {} exceeds the {} seeded nodes (initial_fraction {} of {n})",
                self.leader_count,
                self.seed_count(n),
                self.initial_fraction
            )));
        }
        Ok(())
    }
}

/// The `k` indices with the largest `key`, ties going to the lower index.
fn top_k(key: impl Fn(usize) -> f64, n: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let cmp = |a: &usize, b: &usize| {
        key(*b)
            .partial_cmp(&key(*a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k < n {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Assigns initial opinions. Exactly `round(f * N)` nodes get opinion A.
pub fn assign_opinions<R: Rng + ?Sized>(
    g: &SocialGraph,
    attrs: &AgentAttributes,
    strategy: &SeedingStrategy,
    rng: &mut R,
) -> Result<Vec<Opinion>> {
    let n = g.node_count();
    strategy.validate(n)?;
    let total = strategy.seed_count(n);
    let mut opinions = vec![Opinion::B; n];

    let leaders = match strategy.kind {
        SeedingKind::Random => Vec::new(),
        SeedingKind::TopInDegree => top_k(|i| g.in_degree(i) as f64, n, strategy.leader_count),
        SeedingKind::TopExpertise => top_k(|i| attrs.expertise_raw[i], n, strategy.leader_count),
    };
    for &i in &leaders {
        opinions[i] = Opinion::A;
    }

    let rest: Vec<usize> = (0..n).filter(|&i| opinions[i] == Opinion::B).collect();
    for j in sample(rng, rest.len(), total - leaders.len()) {
        opinions[rest[j]] = Opinion::A;
    }
    Ok(opinions)
}

/// Convenience wrapper drawing from the run seed's seeding stream.
pub fn assign_opinions_seeded(
    g: &SocialGraph,
    attrs: &AgentAttributes,
    strategy: &SeedingStrategy,
    run_seed: u64,
) -> Result<Vec<Opinion>> {
    assign_opinions(g, attrs, strategy, &mut stream_rng(run_seed, Stream::Seeding))
}
