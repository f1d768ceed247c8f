//! Topological summary statistics.
//!
//! Diameter, path length and clustering are measured on the undirected
//! projection of the follow graph (an edge in either direction makes two
//! nodes neighbours). Edge counts and mean degree are reported for both the
//! directed graph and the projection.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::SocialGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    pub node_count: usize,
    /// Directed edge count.
    pub edge_count: usize,
    /// Edge count of the undirected projection.
    pub undirected_edge_count: usize,
    /// `M / N` on the directed graph (mean in-degree).
    pub avg_degree_directed: f64,
    /// `2 M_u / N` on the undirected projection.
    pub avg_degree_undirected: f64,
    pub diameter: usize,
    /// Mean shortest-path length over connected ordered pairs.
    pub avg_path_length: f64,
    pub avg_clustering: f64,
    pub in_degree_histogram: BTreeMap<usize, usize>,
    /// Number of BFS sources used; equals `node_count` when exact.
    pub bfs_sources: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StatsOptions {
    /// Graphs up to this size get all-pairs BFS.
    pub max_exact_nodes: usize,
    /// BFS sources sampled for larger graphs.
    pub sample_sources: usize,
    pub seed: u64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            max_exact_nodes: 20_000,
            sample_sources: 2_000,
            seed: 0,
        }
    }
}

/// Sorted, deduplicated neighbour lists of the undirected projection.
pub fn undirected_projection(g: &SocialGraph) -> Vec<Vec<u32>> {
    (0..g.node_count())
        .map(|i| {
            let mut nbrs: Vec<u32> = g
                .leaders_of(i)
                .iter()
                .chain(g.followers_of(i))
                .copied()
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            nbrs
        })
        .collect()
}

pub fn compute_stats(g: &SocialGraph) -> GraphStats {
    compute_stats_with(g, StatsOptions::default())
}

pub fn compute_stats_with(g: &SocialGraph, opts: StatsOptions) -> GraphStats {
    let n = g.node_count();
    let adj = undirected_projection(g);
    let undirected_edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;

    let sources: Vec<usize> = if n <= opts.max_exact_nodes || opts.sample_sources >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut s = sample(&mut rng, n, opts.sample_sources).into_vec();
        s.sort_unstable();
        s
    };

    // (max eccentricity, sum of distances, reachable pairs)
    let (diameter, dist_sum, pairs) = sources
        .par_iter()
        .map_init(
            || (vec![u32::MAX; n], VecDeque::new()),
            |(dist, queue), &s| bfs_summary(&adj, s, dist, queue),
        )
        .reduce(|| (0, 0, 0), |a, b| (a.0.max(b.0), a.1 + b.1, a.2 + b.2));

    let clustering_sum: f64 = (0..n)
        .into_par_iter()
        .map_init(|| vec![false; n], |mark, v| local_clustering(&adj, v, mark))
        .collect::<Vec<_>>()
        .iter()
        .sum();

    GraphStats {
        node_count: n,
        edge_count: g.edge_count(),
        undirected_edge_count,
        avg_degree_directed: if n > 0 { g.edge_count() as f64 / n as f64 } else { 0.0 },
        avg_degree_undirected: if n > 0 { 2.0 * undirected_edge_count as f64 / n as f64 } else { 0.0 },
        diameter: diameter as usize,
        avg_path_length: if pairs > 0 { dist_sum as f64 / pairs as f64 } else { 0.0 },
        avg_clustering: if n > 0 { clustering_sum / n as f64 } else { 0.0 },
        in_degree_histogram: g.in_degree_histogram(),
        bfs_sources: sources.len(),
    }
}

fn bfs_summary(
    adj: &[Vec<u32>],
    source: usize,
    dist: &mut [u32],
    queue: &mut VecDeque<usize>,
) -> (u32, u64, u64) {
    let mut visited = Vec::new();
    dist[source] = 0;
    queue.push_back(source);
    visited.push(source);
    let (mut ecc, mut sum, mut count) = (0u32, 0u64, 0u64);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > 0 {
            ecc = ecc.max(d);
            sum += d as u64;
            count += 1;
        }
        for &u in &adj[v] {
            let u = u as usize;
            if dist[u] == u32::MAX {
                dist[u] = d + 1;
                queue.push_back(u);
                visited.push(u);
            }
        }
    }
    for v in visited {
        dist[v] = u32::MAX;
    }
    (ecc, sum, count)
}

fn local_clustering(adj: &[Vec<u32>], v: usize, mark: &mut [bool]) -> f64 {
    let nbrs = &adj[v];
    let d = nbrs.len();
    if d < 2 {
        return 0.0;
    }
    for &u in nbrs {
        mark[u as usize] = true;
    }
    let mut links = 0usize;
    for &u in nbrs {
        links += adj[u as usize].iter().filter(|&&w| mark[w as usize]).count();
    }
    for &u in nbrs {
        mark[u as usize] = false;
    }
    // each neighbour pair was counted from both ends
    (links as f64 / 2.0) / (d * (d - 1) / 2) as f64
}

/// Least-squares line through `(ln k, ln P(k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits the in-degree distribution tail `k >= k_min` (only non-empty bins)
/// on log-log axes.
pub fn fit_power_law(histogram: &BTreeMap<usize, usize>, k_min: usize) -> Option<PowerLawFit> {
    let total: usize = histogram.values().sum();
    let pts: Vec<(f64, f64)> = histogram
        .iter()
        .filter(|(&k, &c)| k >= k_min.max(1) && c > 0)
        .map(|(&k, &c)| ((k as f64).ln(), (c as f64 / total as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(PowerLawFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: pts.len(),
    })
}
