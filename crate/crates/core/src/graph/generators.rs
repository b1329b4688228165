//! Generators for the graph families used throughout the test corpus.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FamilyInfo, WeightedGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphFamily {
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Star { leaves: usize },
    /// Two floor(n/3)-cliques joined by a path through the remaining vertices.
    Barbell { n: usize },
    /// k cliques of size floor(2n/3k) joined in a cycle by bridges of
    /// floor(n/3k) internal vertices; leftover vertices go to the last bridge.
    CliqueCycle { n: usize, k: usize },
    Torus { dims: Vec<usize> },
    Hypercube { dim: usize },
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamily::Cycle { n } => write!(f, "cycle:{n}"),
            GraphFamily::Path { n } => write!(f, "path:{n}"),
            GraphFamily::Complete { n } => write!(f, "complete:{n}"),
            GraphFamily::Star { leaves } => write!(f, "star:{leaves}"),
            GraphFamily::Barbell { n } => write!(f, "barbell:{n}"),
            GraphFamily::CliqueCycle { n, k } => write!(f, "clique_cycle:{n}:{k}"),
            GraphFamily::Torus { dims } => {
                let d: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                write!(f, "torus:{}", d.join("x"))
            }
            GraphFamily::Hypercube { dim } => write!(f, "hypercube:{dim}"),
        }
    }
}

impl FromStr for GraphFamily {
    type Err = Error;

    /// Accepts `kind:args` or whitespace separated `kind args...`, e.g.
    /// `cycle:8`, `clique_cycle 60 3`, `torus:8x8`, `torus 8 8`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s
            .split(|c: char| c == ':' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        let bad = || Error::InvalidParameter(format!("unrecognized family spec {s:?}"));
        let (kind, args) = parts.split_first().ok_or_else(bad)?;
        let nums = |args: &[&str]| -> Result<Vec<usize>> {
            args.iter()
                .flat_map(|a| a.split('x'))
                .map(|a| a.parse::<usize>().map_err(|_| bad()))
                .collect()
        };
        let v = nums(args)?;
        let one = |v: &[usize]| if v.len() == 1 { Ok(v[0]) } else { Err(bad()) };
        Ok(match kind.to_ascii_lowercase().replace('-', "_").as_str() {
            "cycle" => GraphFamily::Cycle { n: one(&v)? },
            "path" => GraphFamily::Path { n: one(&v)? },
            "complete" => GraphFamily::Complete { n: one(&v)? },
            "star" => GraphFamily::Star { leaves: one(&v)? },
            "barbell" => GraphFamily::Barbell { n: one(&v)? },
            "clique_cycle" => match v.as_slice() {
                [n, k] => GraphFamily::CliqueCycle { n: *n, k: *k },
                _ => return Err(bad()),
            },
            "torus" if !v.is_empty() => GraphFamily::Torus { dims: v },
            "hypercube" => GraphFamily::Hypercube { dim: one(&v)? },
            _ => return Err(bad()),
        })
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn clique(vertices: &[usize], edges: &mut Vec<(usize, usize, f64)>) {
    for (i, &a) in vertices.iter().enumerate() {
        for &b in &vertices[i + 1..] {
            edges.push((a, b, 1.0));
        }
    }
}

fn chain(vertices: &[usize], edges: &mut Vec<(usize, usize, f64)>) {
    for pair in vertices.windows(2) {
        edges.push((pair[0], pair[1], 1.0));
    }
}

/// Builds the requested family member. All members are unweighted and connected.
pub fn generate(spec: &GraphFamily) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let (n, transitive, dim) = match spec {
        &GraphFamily::Cycle { n } => {
            if n < 3 {
                return Err(invalid("cycle requires n >= 3"));
            }
            let vs: Vec<usize> = (0..n).chain([0]).collect();
            chain(&vs, &mut edges);
            (n, true, Some(1.0))
        }
        &GraphFamily::Path { n } => {
            if n < 1 {
                return Err(invalid("path requires n >= 1"));
            }
            let vs: Vec<usize> = (0..n).collect();
            chain(&vs, &mut edges);
            (n, false, None)
        }
        &GraphFamily::Complete { n } => {
            if n < 2 {
                return Err(invalid("complete graph requires n >= 2"));
            }
            let vs: Vec<usize> = (0..n).collect();
            clique(&vs, &mut edges);
            (n, true, Some(1.0))
        }
        &GraphFamily::Star { leaves } => {
            if leaves < 1 {
                return Err(invalid("star requires at least one leaf"));
            }
            edges.extend((1..=leaves).map(|y| (0, y, 1.0)));
            (leaves + 1, false, None)
        }
        &GraphFamily::Barbell { n } => {
            let c = n / 3;
            if c < 2 {
                return Err(invalid("barbell requires n >= 6"));
            }
            let a: Vec<usize> = (0..c).collect();
            let b: Vec<usize> = (c..2 * c).collect();
            clique(&a, &mut edges);
            clique(&b, &mut edges);
            let bridge: Vec<usize> = std::iter::once(c - 1).chain(2 * c..n).chain([c]).collect();
            chain(&bridge, &mut edges);
            (n, false, None)
        }
        &GraphFamily::CliqueCycle { n, k } => {
            if k == 0 || 6 * k >= n {
                return Err(invalid(format!("clique_cycle requires 1 <= k < n/6, got n={n}, k={k}")));
            }
            let size = 2 * n / (3 * k);
            let bridge_len = n / (3 * k);
            let mut next = 0;
            let mut cliques = Vec::with_capacity(k);
            for _ in 0..k {
                let vs: Vec<usize> = (next..next + size).collect();
                next += size;
                clique(&vs, &mut edges);
                cliques.push(vs);
            }
            let spare = n - k * size;
            for i in 0..k {
                let count = if i + 1 < k { bridge_len } else { spare - (k - 1) * bridge_len };
                let path: Vec<usize> = std::iter::once(cliques[i][size - 1])
                    .chain(next..next + count)
                    .chain([cliques[(i + 1) % k][0]])
                    .collect();
                next += count;
                chain(&path, &mut edges);
            }
            (n, false, None)
        }
        GraphFamily::Torus { dims } => {
            if dims.is_empty() || dims.iter().any(|&d| d < 3) {
                return Err(invalid("torus requires every side length >= 3"));
            }
            let n: usize = dims.iter().product();
            let mut stride = 1;
            for &side in dims {
                for x in 0..n {
                    let coord = (x / stride) % side;
                    let y = x - coord * stride + ((coord + 1) % side) * stride;
                    edges.push((x.min(y), x.max(y), 1.0));
                }
                stride *= side;
            }
            (n, true, Some(dims.len() as f64))
        }
        &GraphFamily::Hypercube { dim } => {
            if dim == 0 || dim > 16 {
                return Err(invalid("hypercube requires 1 <= dim <= 16"));
            }
            let n = 1usize << dim;
            for x in 0..n {
                for b in 0..dim {
                    let y = x ^ (1 << b);
                    if x < y {
                        edges.push((x, y, 1.0));
                    }
                }
            }
            (n, true, Some(dim as f64))
        }
    };
    let g = WeightedGraph::from_edges(n, edges)?;
    debug_assert!(g.is_connected());
    Ok(g.with_family(FamilyInfo {
        name: spec.to_string(),
        vertex_transitive: transitive,
        growth_dimension: dim,
    }))
}

/// G(n, p) conditioned on connectivity by rejection, reproducible from `seed`.
pub fn erdos_renyi_connected(n: usize, p: f64, seed: u64) -> Result<WeightedGraph> {
    if n < 2 || !(p > 0.0 && p <= 1.0) {
        return Err(invalid("erdos_renyi requires n >= 2 and 0 < p <= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..10_000 {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((u, v, 1.0));
                }
            }
        }
        let g = WeightedGraph::from_edges(n, edges)?;
        if g.is_connected() {
            return Ok(g.with_family(FamilyInfo {
                name: format!("erdos_renyi:{n}:{p}:{seed}"),
                vertex_transitive: false,
                growth_dimension: None,
            }));
        }
    }
    Err(invalid(format!("no connected G({n}, {p}) sample found")))
}
