//! Spanning tree counts: brute force, Kirchhoff, spectral, the truncated
//! return-probability series, and a local sampling estimator that only talks
//! to the graph through an oracle.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{bareiss_determinant, ln_bigint, GroundedLaplacian};
use crate::graph::WeightedGraph;
use crate::spectral::Spectrum;
use crate::walk::run_chunked;

pub const BRUTE_FORCE_LIMIT: usize = 10;

struct RollbackUnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl RollbackUnionFind {
    fn new(n: usize) -> Self {
        RollbackUnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Joins the classes of a and b; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.history.push((a, b));
        true
    }

    fn undo(&mut self) {
        let (a, b) = self.history.pop().expect("undo without union");
        self.parent[b] = b;
        self.size[a] -= self.size[b];
    }
}

/// Counts spanning trees by enumerating acyclic edge subsets of size n − 1.
pub fn brute_force_tree_count(g: &WeightedGraph) -> Result<u64> {
    g.require_unweighted()?;
    if g.n() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n: g.n(), limit: BRUTE_FORCE_LIMIT });
    }
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    let need = g.n() - 1;
    let mut uf = RollbackUnionFind::new(g.n());

    fn go(edges: &[(usize, usize)], next: usize, need: usize, uf: &mut RollbackUnionFind) -> u64 {
        if need == 0 {
            return 1;
        }
        if edges.len() - next < need {
            return 0;
        }
        let (u, v) = edges[next];
        let mut total = 0;
        if uf.union(u, v) {
            total += go(edges, next + 1, need - 1, uf);
            uf.undo();
        }
        total + go(edges, next + 1, need, uf)
    }

    Ok(go(&edges, 0, need, &mut uf))
}

/// τ(G) = scaled_det / 2^{shift_bits}, exact for any f64 weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeCount {
    pub scaled_det: BigInt,
    pub shift_bits: u64,
}

impl TreeCount {
    /// The count as an integer when the weights make it one.
    pub fn to_integer(&self) -> Option<BigInt> {
        let low = self.scaled_det.trailing_zeros().unwrap_or(u64::MAX);
        (self.shift_bits == 0 || low >= self.shift_bits).then(|| &self.scaled_det >> self.shift_bits)
    }

    pub fn ln(&self) -> f64 {
        ln_bigint(&self.scaled_det) - self.shift_bits as f64 * std::f64::consts::LN_2
    }
}

/// Matrix-tree theorem: determinant of the grounded Laplacian by
/// fraction-free elimination.
pub fn spanning_tree_count_exact(g: &WeightedGraph) -> Result<TreeCount> {
    g.require_connected()?;
    if g.n() == 1 {
        return Ok(TreeCount { scaled_det: BigInt::one(), shift_bits: 0 });
    }
    let gl = GroundedLaplacian::new(g);
    let det = bareiss_determinant(gl.rows);
    if !det.is_positive() {
        return Err(Error::SpectrumInconsistent("grounded Laplacian determinant is not positive".into()));
    }
    Ok(TreeCount {
        scaled_det: det,
        shift_bits: gl.shift as u64 * (g.n() as u64 - 1),
    })
}

fn degree_log_terms(g: &WeightedGraph) -> f64 {
    let two_w: Vec<f64> = g.degrees().iter().map(|w| 2.0 * w).collect();
    -two_w.iter().sum::<f64>().ln() + two_w.iter().map(|v| v.ln()).sum::<f64>()
}

/// ln τ(G) = −ln Σ_x 2w(x) + Σ_x ln 2w(x) + Σ_{j>=2} ln(λ_j/2).
pub fn log_tau_spectral(g: &WeightedGraph, s: &Spectrum) -> Result<f64> {
    g.require_connected()?;
    if s.n() != g.n() {
        return Err(Error::SpectrumInconsistent("spectrum and graph sizes differ".into()));
    }
    if g.n() == 1 {
        return Ok(0.0);
    }
    let mut acc = degree_log_terms(g);
    for &l in &s.eigenvalues[1..] {
        if !(l > 0.0) {
            return Err(Error::SpectrumInconsistent(format!("nonpositive eigenvalue {l} beyond the kernel")));
        }
        acc += (l / 2.0).ln();
    }
    Ok(acc)
}

/// Σ_{j>=2} θ_j^t = Σ_x p_t(x, x) − 1.
fn trace_excess(s: &Spectrum, t: u32) -> f64 {
    s.eigenvalues[1..].iter().map(|l| (1.0 - l / 2.0).max(0.0).powi(t as i32)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// 45 n / r^{1/3}.
    pub error_bound: f64,
}

/// −ln(4|E|) + Σ_x ln 2w(x) − Σ_{1<=t<2r} (1/t)(Σ_x p_t(x, x) − 1).
pub fn log_tau_series_truncated(g: &WeightedGraph, s: &Spectrum, r: u32) -> Result<SeriesValue> {
    g.require_unweighted()?;
    g.require_connected()?;
    if r < 2 {
        return Err(Error::InvalidParameter(format!("series truncation r = {r} must be at least 2")));
    }
    if s.n() != g.n() {
        return Err(Error::SpectrumInconsistent("spectrum and graph sizes differ".into()));
    }
    let tail: f64 = (1..2 * r).map(|t| trace_excess(s, t) / t as f64).sum();
    Ok(SeriesValue {
        value: degree_log_terms(g) - tail,
        error_bound: 45.0 * g.n() as f64 / (r as f64).cbrt(),
    })
}

/// Local access to a graph, counting every call.
pub trait GraphOracle {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn random_vertex(&mut self) -> usize;
    /// Uniform neighbor of x (x itself if it has none).
    fn random_neighbor(&mut self, x: usize) -> usize;
    fn degree(&mut self, x: usize) -> f64;
    fn query_count(&self) -> u64;
    /// An independent copy with its own random stream and a zero counter.
    fn fork(&self, stream: u64) -> Self
    where
        Self: Sized;
    /// Adds the queries made by a fork.
    fn absorb(&mut self, queries: u64);
}

#[derive(Debug, Clone)]
pub struct InMemoryOracle<'a> {
    graph: &'a WeightedGraph,
    seed: u64,
    rng: ChaCha8Rng,
    queries: u64,
}

/// Oracle backed by an unweighted in-memory graph, deterministic in `seed`.
pub fn in_memory_oracle(g: &WeightedGraph, seed: u64) -> Result<InMemoryOracle<'_>> {
    g.require_unweighted()?;
    g.require_connected()?;
    Ok(InMemoryOracle {
        graph: g,
        seed,
        rng: ChaCha8Rng::seed_from_u64(seed),
        queries: 0,
    })
}

impl GraphOracle for InMemoryOracle<'_> {
    fn n(&self) -> usize {
        self.graph.n()
    }

    fn m(&self) -> usize {
        self.graph.m()
    }

    fn random_vertex(&mut self) -> usize {
        self.queries += 1;
        self.rng.gen_range(0..self.graph.n())
    }

    fn random_neighbor(&mut self, x: usize) -> usize {
        self.queries += 1;
        let nbrs = self.graph.neighbors(x);
        if nbrs.is_empty() {
            return x;
        }
        nbrs[self.rng.gen_range(0..nbrs.len())].0
    }

    fn degree(&mut self, x: usize) -> f64 {
        self.queries += 1;
        self.graph.degree(x)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }

    fn fork(&self, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream + 1);
        InMemoryOracle {
            graph: self.graph,
            seed: self.seed,
            rng,
            queries: 0,
        }
    }

    fn absorb(&mut self, queries: u64) {
        self.queries += queries;
    }
}

/// Replacements for the default sample sizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOverrides {
    pub r: Option<u64>,
    pub samples: Option<u64>,
    pub degree_samples: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    pub r: u64,
    /// Σ_{1<=t<2r} 1/t.
    pub s: f64,
    #[serde(rename = "N")]
    pub samples: u64,
    pub degree_samples: u64,
}

/// Sample sizes of the local estimator for a graph on n vertices:
/// r = ⌈90/ε³⌉, N = ⌈64 ln(1/δ) s²/ε²⌉, ⌈256 ln(1/δ)(ln n)²/ε²⌉ degree draws.
pub fn estimator_params(n: usize, epsilon: f64, delta_fail: f64, overrides: EstimatorOverrides) -> Result<EstimatorParams> {
    if !(epsilon > 0.0 && epsilon < 1.0 + f64::EPSILON) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    if !(delta_fail > 0.0 && delta_fail < 1.0) {
        return Err(Error::InvalidParameter(format!("failure probability {delta_fail} outside (0, 1)")));
    }
    let r = overrides.r.unwrap_or_else(|| (90.0 / epsilon.powi(3)).ceil() as u64);
    if r < 1 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    let s: f64 = (1..2 * r).map(|t| 1.0 / t as f64).sum();
    let log_inv = (1.0 / delta_fail).ln();
    let samples = overrides
        .samples
        .unwrap_or_else(|| (64.0 * log_inv * s * s / (epsilon * epsilon)).ceil() as u64);
    let ln_n = (n as f64).ln();
    let degree_samples = overrides
        .degree_samples
        .unwrap_or_else(|| (256.0 * log_inv * ln_n * ln_n / (epsilon * epsilon)).ceil() as u64);
    if samples == 0 || degree_samples == 0 {
        return Err(Error::InvalidParameter("sample counts must be positive".into()));
    }
    Ok(EstimatorParams {
        r,
        s,
        samples,
        degree_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEstimate {
    /// Estimate of ln τ(G) / n.
    pub value: f64,
    #[serde(flatten)]
    pub params: EstimatorParams,
    pub epsilon: f64,
    pub delta_fail: f64,
    pub n: usize,
    pub m: usize,
    /// Mean of ln 2w over the degree draws.
    pub w_tilde: f64,
    /// Fraction of walks that ended at their start.
    pub y_mean: f64,
    pub queries_used: u64,
    pub seed: u64,
}

/// Local estimate of ln τ(G)/n from random vertices and random lazy walks of
/// length t <= 2r − 1, with t drawn with probability 1/(st).
#[allow(clippy::too_many_arguments)]
pub fn estimate_log_tau_local<O: GraphOracle + Sync + Send>(
    oracle: &mut O,
    n: usize,
    m: usize,
    epsilon: f64,
    delta_fail: f64,
    seed: u64,
    overrides: EstimatorOverrides,
    jobs: usize,
) -> Result<TreeEstimate> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("published n and m must be positive".into()));
    }
    let params = estimator_params(n, epsilon, delta_fail, overrides)?;
    let n_sq = (n as f64) * (n as f64);

    let mut w_sum = 0.0;
    for _ in 0..params.degree_samples {
        let y = oracle.random_vertex();
        let w = oracle.degree(y);
        if 2.0 * w > n_sq {
            return Err(Error::DegreeTooLarge { degree: w, n });
        }
        w_sum += (2.0 * w).ln();
    }
    let w_tilde = w_sum / params.degree_samples as f64;

    // cumulative weights of t = 1..2r−1 proportional to 1/t
    let mut cumulative = Vec::with_capacity(2 * params.r as usize);
    let mut acc = 0.0;
    for t in 1..2 * params.r {
        acc += 1.0 / t as f64;
        cumulative.push(acc);
    }
    let shared: &O = oracle;
    let chunks = run_chunked(params.samples, seed, jobs, |c, size, rng| {
        let mut local = shared.fork(c);
        let mut hits = 0u64;
        for _ in 0..size {
            let u = rng.gen::<f64>() * acc;
            let t = cumulative.partition_point(|&v| v <= u).min(cumulative.len() - 1) + 1;
            let start = local.random_vertex();
            let mut x = start;
            for _ in 0..t {
                if rng.gen::<bool>() {
                    x = local.random_neighbor(x);
                }
            }
            hits += (x == start) as u64;
        }
        (hits, local.query_count())
    });
    let mut hits = 0;
    for (h, q) in chunks {
        hits += h;
        oracle.absorb(q);
    }
    let y_mean = hits as f64 / params.samples as f64;
    let nf = n as f64;
    let value = -(4.0 * m as f64).ln() / nf + w_tilde - params.s * y_mean + params.s / nf;
    Ok(TreeEstimate {
        value,
        params,
        epsilon,
        delta_fail,
        n,
        m,
        w_tilde,
        y_mean,
        queries_used: oracle.query_count(),
        seed,
    })
}

/// High-probability bound on |estimate − ln τ(G)/n|: the exact truncation
/// tail of the series plus Hoeffding deviations of the walk and degree
/// averages, jointly holding with probability at least 1 − `confidence_fail`.
pub fn estimator_error_bound(g: &WeightedGraph, s: &Spectrum, params: &EstimatorParams, confidence_fail: f64) -> Result<f64> {
    let n = g.n() as f64;
    let full = -s.eigenvalues[1..].iter().map(|l| (l / 2.0).ln()).sum::<f64>();
    let partial: f64 = (1..2 * params.r as u32).map(|t| trace_excess(s, t) / t as f64).sum();
    let tail = (full - partial).max(0.0) / n;
    let log_term = (4.0 / confidence_fail).ln();
    let walk_dev = params.s * (log_term / (2.0 * params.samples as f64)).sqrt();
    let range = (2.0 * n.ln() - 2f64.ln()).max(0.0);
    let degree_dev = range * (log_term / (2.0 * params.degree_samples as f64)).sqrt();
    Ok(tail + walk_dev + degree_dev)
}
