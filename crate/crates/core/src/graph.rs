//! Directed follower → leader graphs stored as twin CSR adjacency arrays.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense node index in `0..node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed social graph. An edge `f -> l` means `f` follows `l`, so
/// opinions flow from `l` (leader) to `f` (follower).
///
/// Both directions are kept in compressed sparse row form with each
/// neighbour list sorted ascending. Self-loops and duplicate edges never
/// make it into the structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    leader_offsets: Vec<usize>,
    leaders: Vec<u32>,
    follower_offsets: Vec<usize>,
    followers: Vec<u32>,
    in_degree: Vec<u32>,
    labels: Vec<String>,
}

/// Outcome of [`load_edge_list`].
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: SocialGraph,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

/// Outcome of [`prune_leaves`].
#[derive(Debug, Clone)]
pub struct PruneReport {
    pub graph: SocialGraph,
    pub rounds: usize,
    pub removed: usize,
}

fn csr(n: usize, pairs: &[(u32, u32)]) -> (Vec<usize>, Vec<u32>) {
    // `pairs` must be sorted by (source, target)
    let mut offsets = vec![0usize; n + 1];
    for &(s, _) in pairs {
        offsets[s as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, pairs.iter().map(|&(_, t)| t).collect())
}

impl SocialGraph {
    /// Builds a graph over `labels.len()` nodes from `(follower, leader)`
    /// pairs. Returns the graph, the number of self-loops dropped and the
    /// number of duplicate edges collapsed.
    pub fn from_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> (Self, usize, usize) {
        let n = labels.len();
        let mut self_loops = 0;
        let mut fwd: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|&(f, l)| {
                assert!((f as usize) < n && (l as usize) < n, "edge endpoint out of range");
                if f == l {
                    self_loops += 1;
                    false
                } else {
                    true
                }
            })
            .collect();
        fwd.sort_unstable();
        let before = fwd.len();
        fwd.dedup();
        let duplicates = before - fwd.len();

        let mut rev: Vec<(u32, u32)> = fwd.iter().map(|&(f, l)| (l, f)).collect();
        rev.sort_unstable();

        let (leader_offsets, leaders) = csr(n, &fwd);
        let (follower_offsets, followers) = csr(n, &rev);
        let in_degree = (0..n)
            .map(|i| (follower_offsets[i + 1] - follower_offsets[i]) as u32)
            .collect();

        let g = SocialGraph {
            leader_offsets,
            leaders,
            follower_offsets,
            followers,
            in_degree,
            labels,
        };
        (g, self_loops, duplicates)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.leaders.len()
    }

    /// Accounts that `i` follows.
    #[inline]
    pub fn leaders_of(&self, i: usize) -> &[u32] {
        &self.leaders[self.leader_offsets[i]..self.leader_offsets[i + 1]]
    }

    /// Accounts that follow `i`.
    #[inline]
    pub fn followers_of(&self, i: usize) -> &[u32] {
        &self.followers[self.follower_offsets[i]..self.follower_offsets[i + 1]]
    }

    /// Follower count `k_i`.
    #[inline]
    pub fn in_degree(&self, i: usize) -> usize {
        self.in_degree[i] as usize
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degree
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> usize {
        self.leader_offsets[i + 1] - self.leader_offsets[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// All edges as `(follower, leader)`, ordered by follower then leader.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |f| {
            self.leaders_of(f).iter().map(move |&l| (f as u32, l))
        })
    }

    /// In-degree → number of nodes with that in-degree.
    pub fn in_degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for &k in &self.in_degree {
            *hist.entry(k as usize).or_insert(0) += 1;
        }
        hist
    }

    /// Stable identity of the graph structure: node count, edge count and a
    /// SHA-256 digest over the in-degree histogram and the edge list.
    pub fn fingerprint(&self) -> GraphFingerprint {
        let mut h = Sha256::new();
        for (k, c) in self.in_degree_histogram() {
            h.update((k as u64).to_le_bytes());
            h.update((c as u64).to_le_bytes());
        }
        let histogram_hash = hex::encode(h.finalize());
        let mut h = Sha256::new();
        for (f, l) in self.edges() {
            h.update(f.to_le_bytes());
            h.update(l.to_le_bytes());
        }
        GraphFingerprint {
            node_count: self.node_count(),
            edge_count: self.edge_count(),
            histogram_hash,
            edge_hash: hex::encode(h.finalize()),
        }
    }

    /// Keeps the nodes with `keep[i] == true`, renumbering them densely in
    /// their original order.
    fn retain(&self, keep: &[bool]) -> SocialGraph {
        let mut remap = vec![u32::MAX; self.node_count()];
        let mut labels = Vec::new();
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            remap[i] = labels.len() as u32;
            labels.push(self.labels[i].clone());
        }
        let edges = self
            .edges()
            .filter(|&(f, l)| keep[f as usize] && keep[l as usize])
            .map(|(f, l)| (remap[f as usize], remap[l as usize]))
            .collect::<Vec<_>>();
        SocialGraph::from_edges(labels, edges).0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFingerprint {
    pub node_count: usize,
    pub edge_count: usize,
    pub histogram_hash: String,
    pub edge_hash: String,
}

/// Reads a whitespace separated `follower leader` edge list. Blank lines and
/// lines starting with `#` are skipped. Labels are compacted to dense ids in
/// order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph> {
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();

    let mut intern = |label: &str| -> u32 {
        match ids.entry(label.to_owned()) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = labels.len() as u32;
                labels.push(label.to_owned());
                *e.insert(id)
            }
        }
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                tokens: tokens.len(),
            });
        }
        let f = intern(tokens[0]);
        let l = intern(tokens[1]);
        edges.push((f, l));
    }

    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let (graph, self_loops_dropped, duplicates_collapsed) = SocialGraph::from_edges(labels, edges);
    if self_loops_dropped > 0 {
        log_warn(&format!("dropped {self_loops_dropped} self-loop(s)"));
    }
    Ok(LoadedGraph {
        graph,
        self_loops_dropped,
        duplicates_collapsed,
    })
}

fn log_warn(msg: &str) {
    eprintln!("warning: {msg}");
}

/// Repeatedly removes every node whose total degree (in + out, counting only
/// surviving neighbours) is at most `threshold`, until nothing changes.
pub fn prune_leaves(g: &SocialGraph, threshold: usize) -> Result<PruneReport> {
    if threshold < 1 {
        return Err(Error::param("degree_threshold", "must be at least 1"));
    }
    let n = g.node_count();
    let mut degree: Vec<usize> = (0..n).map(|i| g.in_degree(i) + g.out_degree(i)).collect();
    let mut alive = vec![true; n];
    let mut frontier: Vec<usize> = (0..n).filter(|&i| degree[i] <= threshold).collect();
    let mut rounds = 0;
    let mut removed = 0;

    while !frontier.is_empty() {
        rounds += 1;
        for &v in &frontier {
            alive[v] = false;
        }
        removed += frontier.len();
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in g.leaders_of(v).iter().chain(g.followers_of(v)) {
                let u = u as usize;
                if alive[u] {
                    degree[u] -= 1;
                    if degree[u] == threshold {
                        next.push(u);
                    }
                }
            }
        }
        // a node can only cross the threshold once, so `next` has no repeats
        frontier = next;
    }

    if removed == n {
        return Err(Error::EmptyAfterPrune { threshold });
    }
    Ok(PruneReport {
        graph: g.retain(&alive),
        rounds,
        removed,
    })
}

/// Directed preferential attachment. Nodes `0..m_attach` start with no
/// edges; every later node follows `m_attach` distinct earlier nodes, each
/// picked with probability proportional to its in-degree plus one.
pub fn generate_scale_free(n: usize, m_attach: usize, seed: u64) -> Result<SocialGraph> {
    if m_attach < 1 {
        return Err(Error::param("m_attach", "must be at least 1"));
    }
    if n <= m_attach {
        return Err(Error::param(
            "n",
            format!("node count {n} must exceed m_attach {m_attach}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // every node appears once for the +1, then once per follower gained
    let mut urn: Vec<u32> = (0..m_attach as u32).collect();
    let mut edges = Vec::with_capacity((n - m_attach) * m_attach);
    let mut picked: Vec<u32> = Vec::with_capacity(m_attach);

    for v in m_attach..n {
        picked.clear();
        while picked.len() < m_attach {
            let target = urn[rng.random_range(0..urn.len())];
            if !picked.contains(&target) {
                picked.push(target);
            }
        }
        for &t in &picked {
            edges.push((v as u32, t));
            urn.push(t);
        }
        urn.push(v as u32);
    }

    let labels = (0..n).map(|i| i.to_string()).collect();
    Ok(SocialGraph::from_edges(labels, edges).0)
}
