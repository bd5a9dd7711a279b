//! Signed digraphs: generators, structural metrics, and serialization.
//!
//! Entry `(i, j)` of the weight matrix is the influence of agent `j` on
//! agent `i`, so a nonzero `w_ij` is an edge from `j` to `i`. Every agent
//! carries a unit self-loop.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expm::{trace_expm, Matrix};
use crate::{Error, Result};

pub const MAX_GENERATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DenseGraph", into = "DenseGraph")]
pub struct SignedDigraph {
    n: usize,
    weights: Vec<i8>,
    /// Nonzero entries of each row, self-loop included, ascending by source.
    in_neighbours: Vec<Vec<(usize, i8)>>,
}

/// Dense JSON form: `{"n": 3, "weights": [[1,0,-1],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DenseGraph {
    n: usize,
    weights: Vec<Vec<i8>>,
}

impl TryFrom<DenseGraph> for SignedDigraph {
    type Error = Error;

    fn try_from(dense: DenseGraph) -> Result<Self> {
        if dense.weights.len() != dense.n {
            return Err(Error::Dimension {
                expected: dense.n,
                got: dense.weights.len(),
            });
        }
        let mut flat = Vec::with_capacity(dense.n * dense.n);
        for row in &dense.weights {
            if row.len() != dense.n {
                return Err(Error::Dimension {
                    expected: dense.n,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        SignedDigraph::new(dense.n, flat)
    }
}

impl From<SignedDigraph> for DenseGraph {
    fn from(g: SignedDigraph) -> Self {
        DenseGraph {
            n: g.n,
            weights: g.weights.chunks(g.n.max(1)).map(<[i8]>::to_vec).collect(),
        }
    }
}

impl SignedDigraph {
    /// Builds a digraph from a row-major weight matrix, checking that every
    /// entry is in {-1, 0, 1} and that the diagonal is all ones.
    pub fn new(n: usize, weights: Vec<i8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("digraph needs at least one agent"));
        }
        if weights.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !matches!(w, -1..=1)) {
            return Err(Error::Parameter(format!("weight {w} not in {{-1, 0, 1}}")));
        }
        if let Some(i) = (0..n).find(|&i| weights[i * n + i] != 1) {
            return Err(Error::Parameter(format!(
                "self-loop of agent {i} must be 1"
            )));
        }
        let in_neighbours = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| match weights[i * n + j] {
                        0 => None,
                        w => Some((j, w)),
                    })
                    .collect()
            })
            .collect();
        Ok(SignedDigraph {
            n,
            weights,
            in_neighbours,
        })
    }

    /// Self-loops only.
    pub fn isolated(n: usize) -> Result<Self> {
        let mut w = vec![0; n * n];
        for i in 0..n {
            w[i * n + i] = 1;
        }
        Self::new(n, w)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> i8 {
        self.weights[i * self.n + j]
    }

    /// Sources `j` with `w_ij != 0`, including `i` itself.
    pub fn in_neighbours(&self, i: usize) -> &[(usize, i8)] {
        &self.in_neighbours[i]
    }

    pub fn weights(&self) -> &[i8] {
        &self.weights
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0).count()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0)
    }

    /// True iff every ordered pair is joined by a directed path of nonzero edges.
    pub fn is_strongly_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let forward = self.out_adjacency();
        let backward: Vec<Vec<usize>> = (0..self.n)
            .map(|i| {
                self.in_neighbours[i]
                    .iter()
                    .map(|&(j, _)| j)
                    .filter(|&j| j != i)
                    .collect()
            })
            .collect();
        reaches_all(&forward, 0) && reaches_all(&backward, 0)
    }

    /// Out-adjacency without self-loops: `out[j]` holds every `i` with `w_ij != 0`.
    fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for &(j, _) in &self.in_neighbours[i] {
                if j != i {
                    out[j].push(i);
                }
            }
        }
        out
    }

    fn to_matrix(&self, magnitude: bool) -> Matrix {
        let data = self
            .weights
            .iter()
            .map(|&w| if magnitude { w.abs() as f64 } else { w as f64 })
            .collect();
        Matrix::from_row_major(self.n, data)
    }

    /// Edge-list text: header `n <size>` then one `i j w` line per nonzero entry.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n {}", self.n);
        for i in 0..self.n {
            for &(j, w) in &self.in_neighbours[i] {
                let _ = writeln!(s, "{i} {j} {w}");
            }
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("edge list is empty".into()))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["n", size] => size
                .parse::<usize>()
                .map_err(|_| Error::Schema(format!("bad size in header '{header}'")))?,
            _ => {
                return Err(Error::Schema(format!(
                    "expected 'n <size>' header, got '{header}'"
                )))
            }
        };
        let mut weights = vec![0i8; n * n];
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [i, j, w] => i
                    .parse::<usize>()
                    .ok()
                    .zip(j.parse::<usize>().ok())
                    .zip(w.parse::<i8>().ok()),
                _ => None,
            };
            let ((i, j), w) =
                parsed.ok_or_else(|| Error::Schema(format!("malformed edge line '{line}'")))?;
            if i >= n || j >= n {
                return Err(Error::Schema(format!(
                    "edge '{line}' out of range for n = {n}"
                )));
            }
            if w != 1 && w != -1 {
                return Err(Error::Schema(format!(
                    "edge weight must be 1 or -1 in '{line}'"
                )));
            }
            weights[i * n + j] = w;
        }
        Self::new(n, weights).map_err(|e| Error::Schema(e.to_string()))
    }
}

fn reaches_all(adj: &[Vec<usize>], start: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adj.len()
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Complete,
    Ring,
    Lattice,
    SmallWorld,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Topology::Complete),
            "ring" => Ok(Topology::Ring),
            "lattice" => Ok(Topology::Lattice),
            "small-world" | "small_world" | "smallworld" => Ok(Topology::SmallWorld),
            other => Err(Error::Parameter(format!("unknown topology '{other}'"))),
        }
    }
}

/// Full generator specification; `k_in` and `p_rewire` are ignored by
/// topologies that do not use them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub topology: Topology,
    pub n: usize,
    pub k_in: usize,
    pub p_rewire: f64,
    pub p_positive: f64,
}

impl GraphSpec {
    pub fn generate(&self, seed: u64) -> Result<SignedDigraph> {
        match self.topology {
            Topology::Complete => gen_complete(self.n, self.p_positive, seed),
            Topology::Ring => gen_ring(self.n, self.p_positive, seed),
            Topology::Lattice => gen_lattice(self.n, self.k_in, self.p_positive, seed),
            Topology::SmallWorld => {
                gen_small_world(self.n, self.k_in, self.p_rewire, self.p_positive, seed)
            }
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} = {p} is not a probability"
        )))
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 agents, got {n}")));
    }
    Ok(())
}

fn check_degree(n: usize, k_in: usize) -> Result<()> {
    if k_in >= n {
        return Err(Error::Parameter(format!(
            "k_in = {k_in} must be below n = {n}"
        )));
    }
    if !k_in.is_multiple_of(2) {
        return Err(Error::Parameter(format!("k_in = {k_in} must be even")));
    }
    Ok(())
}

/// Runs `build` until it yields a strongly connected digraph. All attempts
/// draw from one seeded stream, so the result is a function of the seed.
fn generate_connected<F>(seed: u64, mut build: F) -> Result<SignedDigraph>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<SignedDigraph>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let g = build(&mut rng)?;
        if g.is_strongly_connected() {
            return Ok(g);
        }
    }
    Err(Error::Generation {
        attempts: MAX_GENERATION_ATTEMPTS,
        reason: "no strongly connected realisation".into(),
    })
}

/// Turns per-agent source lists into a signed digraph, drawing one sign per
/// off-diagonal edge in row-major order.
fn sign_edges(
    n: usize,
    sources: &[Vec<usize>],
    p_positive: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SignedDigraph> {
    let mut weights = vec![0i8; n * n];
    for (i, src) in sources.iter().enumerate() {
        let mut sorted = src.clone();
        sorted.sort_unstable();
        for j in sorted {
            debug_assert_ne!(i, j);
            weights[i * n + j] = if rng.gen_bool(p_positive) { 1 } else { -1 };
        }
        weights[i * n + i] = 1;
    }
    SignedDigraph::new(n, weights)
}

fn lattice_sources(n: usize, k_in: usize) -> Vec<Vec<usize>> {
    let half = k_in / 2;
    (0..n)
        .map(|i| {
            (1..=half)
                .flat_map(|d| [(i + n - d) % n, (i + d) % n])
                .collect()
        })
        .collect()
}

pub fn gen_complete(n: usize, p_positive: f64, seed: u64) -> Result<SignedDigraph> {
    check_size(n)?;
    check_probability("p_positive", p_positive)?;
    let sources: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect();
    generate_connected(seed, |rng| sign_edges(n, &sources, p_positive, rng))
}

/// Directed ring: agent `i` listens to agent `i - 1`.
pub fn gen_ring(n: usize, p_positive: f64, seed: u64) -> Result<SignedDigraph> {
    check_size(n)?;
    check_probability("p_positive", p_positive)?;
    let sources: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + n - 1) % n]).collect();
    generate_connected(seed, |rng| sign_edges(n, &sources, p_positive, rng))
}

/// Directed ring lattice: agent `i` listens to the `k_in / 2` nearest agents
/// on each side.
pub fn gen_lattice(n: usize, k_in: usize, p_positive: f64, seed: u64) -> Result<SignedDigraph> {
    check_size(n)?;
    check_degree(n, k_in)?;
    check_probability("p_positive", p_positive)?;
    let sources = lattice_sources(n, k_in);
    generate_connected(seed, |rng| sign_edges(n, &sources, p_positive, rng))
}

/// Directed Watts-Strogatz: each lattice in-edge is rewired with
/// probability `p_rewire` to a uniformly drawn source that is neither the
/// agent itself nor already one of its sources.
pub fn gen_small_world(
    n: usize,
    k_in: usize,
    p_rewire: f64,
    p_positive: f64,
    seed: u64,
) -> Result<SignedDigraph> {
    check_size(n)?;
    check_degree(n, k_in)?;
    check_probability("p_rewire", p_rewire)?;
    check_probability("p_positive", p_positive)?;
    let lattice = lattice_sources(n, k_in);
    generate_connected(seed, |rng| {
        let mut sources = lattice.clone();
        for (i, src) in sources.iter_mut().enumerate() {
            for slot in 0..src.len() {
                if !rng.gen_bool(p_rewire) {
                    continue;
                }
                let free: Vec<usize> = (0..n).filter(|&j| j != i && !src.contains(&j)).collect();
                if let Some(&new_source) = free.choose(rng) {
                    src[slot] = new_source;
                }
            }
        }
        sign_edges(n, &sources, p_positive, rng)
    })
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub average_path_length: f64,
    pub clustering_coefficient: f64,
    pub positive_edges: usize,
    pub negative_edges: usize,
    pub diameter: usize,
    pub balance_index: f64,
}

/// All-pairs BFS distances along edge direction; `None` where unreachable.
fn distances(graph: &SignedDigraph) -> Vec<Vec<Option<usize>>> {
    let out = graph.out_adjacency();
    (0..graph.n)
        .map(|s| {
            let mut dist = vec![None; graph.n];
            dist[s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let du = dist[u].unwrap_or(0);
                for &v in &out[u] {
                    if dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Mean local clustering over agents with at least one in-neighbour other
/// than themselves. `None` if no agent qualifies.
pub fn clustering_coefficient(graph: &SignedDigraph) -> Option<f64> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..graph.n {
        let nbrs: Vec<usize> = graph
            .in_neighbours(i)
            .iter()
            .map(|&(j, _)| j)
            .filter(|&j| j != i)
            .collect();
        let k = nbrs.len();
        let c = match k {
            0 => continue,
            1 => 1.0,
            _ => {
                // ordered pairs (j, l) with an edge from j to l, i.e. w_lj != 0
                let present = nbrs
                    .iter()
                    .flat_map(|&j| nbrs.iter().map(move |&l| (j, l)))
                    .filter(|&(j, l)| j != l && graph.weight(l, j) != 0)
                    .count();
                present as f64 / (k * (k - 1)) as f64
            }
        };
        total += c;
        counted += 1;
    }
    (counted > 0).then(|| total / counted as f64)
}

/// trace(exp(W)) / trace(exp(|W|)).
pub fn balance_index(graph: &SignedDigraph) -> f64 {
    trace_expm(&graph.to_matrix(false)) / trace_expm(&graph.to_matrix(true))
}

pub fn metrics(graph: &SignedDigraph) -> Result<NetworkMetrics> {
    if graph.n < 2 {
        return Err(Error::Parameter("metrics need at least 2 agents".into()));
    }
    let dist = distances(graph);
    let mut sum = 0usize;
    let mut diameter = 0usize;
    for (i, row) in dist.iter().enumerate() {
        for (j, d) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = d.ok_or(Error::NotStronglyConnected)?;
            sum += d;
            diameter = diameter.max(d);
        }
    }
    let pairs = graph.n * (graph.n - 1);
    let positive_edges = graph.weights.iter().filter(|&&w| w > 0).count();
    let negative_edges = graph.weights.iter().filter(|&&w| w < 0).count();
    Ok(NetworkMetrics {
        average_path_length: sum as f64 / pairs as f64,
        clustering_coefficient: clustering_coefficient(graph).unwrap_or(f64::NAN),
        positive_edges,
        negative_edges,
        diameter,
        balance_index: balance_index(graph),
    })
}
