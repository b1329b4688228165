//! Finite simple weighted graphs.
//!
//! Vertices are dense ids `0..n`. Neighbor lists are kept sorted by id so
//! every traversal is deterministic. A graph may be built disconnected; the
//! spectral, walk and tree layers reject such graphs via
//! [`WeightedGraph::require_connected`].

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod generators;

pub use generators::{erdos_renyi_connected, generate, GraphFamily};

/// Structural facts a generator knows about its output.
///
/// Vertex transitivity is declared, not detected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyInfo {
    pub name: String,
    pub vertex_transitive: bool,
    /// Growth dimension used for polynomial-growth checks on transitive members.
    pub growth_dimension: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    vol_total: f64,
    unweighted: bool,
    connected: bool,
    family: Option<FamilyInfo>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list, enforcing the simple-graph rules.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = BTreeMap::new();
        let mut list = Vec::new();
        for (u, v, w) in edges {
            check_edge(n, u, v, w)?;
            let key = (u.min(v), u.max(v));
            if seen.insert(key, ()).is_some() {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            list.push(Edge { u, v, w });
        }
        Ok(Self::assemble(n, list))
    }

    fn assemble(n: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.u].push((e.v, e.w));
            adjacency[e.v].push((e.u, e.w));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(y, _)| y);
        }
        let degree: Vec<f64> = adjacency.iter().map(|nb| nb.iter().map(|&(_, w)| w).sum()).collect();
        let vol_total = degree.iter().sum();
        let unweighted = edges.iter().all(|e| e.w == 1.0);
        let connected = is_connected(&adjacency);
        WeightedGraph {
            n,
            edges,
            adjacency,
            degree,
            vol_total,
            unweighted,
            connected,
            family: None,
        }
    }

    pub(crate) fn with_family(mut self, info: FamilyInfo) -> Self {
        self.family = Some(info);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `x` with edge weights, ascending by id.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// Weighted degree w(x).
    pub fn degree(&self, x: usize) -> f64 {
        self.degree[x]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    pub fn vol_total(&self) -> f64 {
        self.vol_total
    }

    pub fn vol(&self, set: impl IntoIterator<Item = usize>) -> f64 {
        set.into_iter().map(|x| self.degree[x]).sum()
    }

    pub fn is_unweighted(&self) -> bool {
        self.unweighted
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn min_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(f64::INFINITY, f64::min)
    }

    /// Regular in the weighted-degree sense.
    pub fn is_regular(&self) -> bool {
        let d0 = self.degree[0];
        self.degree.iter().all(|&d| d == d0)
    }

    pub fn family(&self) -> Option<&FamilyInfo> {
        self.family.as_ref()
    }

    pub fn is_vertex_transitive(&self) -> bool {
        self.family.as_ref().is_some_and(|f| f.vertex_transitive)
    }

    pub fn edge_weight(&self, x: usize, y: usize) -> Option<f64> {
        let nb = &self.adjacency[x];
        nb.binary_search_by_key(&y, |&(z, _)| z).ok().map(|i| nb[i].1)
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.connected {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    pub fn require_unweighted(&self) -> Result<()> {
        if self.unweighted {
            Ok(())
        } else {
            Err(Error::Weighted)
        }
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { id: x, n: self.n })
        }
    }

    /// Copy of the graph with one edge removed (may disconnect it).
    pub fn without_edge(&self, index: usize) -> Self {
        let mut edges = self.edges.clone();
        edges.remove(index);
        Self::assemble(self.n, edges)
    }

    /// Hop distances from `x`, ignoring weights. Unreachable vertices get `usize::MAX`.
    pub fn distances_from(&self, x: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[x] = 0;
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Count N(x,r) and volume vol(x,r) of the hop ball of radius floor(r).
    pub fn ball_volume(&self, x: usize, r: f64) -> (usize, f64) {
        let radius = if r.is_finite() { r.max(0.0).floor() } else { f64::MAX };
        let dist = self.distances_from(x);
        let mut count = 0;
        let mut vol = 0.0;
        for (y, &d) in dist.iter().enumerate() {
            if d != usize::MAX && (d as f64) <= radius {
                count += 1;
                vol += self.degree[y];
            }
        }
        (count, vol)
    }

    /// Eccentricity diam(x).
    pub fn eccentricity(&self, x: usize) -> usize {
        self.distances_from(x).into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
    }

    pub fn diameter(&self) -> Result<usize> {
        self.require_connected()?;
        Ok((0..self.n).map(|x| self.eccentricity(x)).max().unwrap_or(0))
    }

    /// Stationary distribution π(x) = w(x)/vol(V).
    pub fn stationary(&self) -> Result<Vec<f64>> {
        self.require_connected()?;
        Ok(self.degree.iter().map(|&d| d / self.vol_total).collect())
    }

    /// Edge-list text: "n m" header, then "u v [w]" with w omitted when 1.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for e in &self.edges {
            if e.w == 1.0 {
                let _ = writeln!(out, "{} {}", e.u, e.v);
            } else {
                let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
            }
        }
        out
    }
}

fn check_edge(n: usize, u: usize, v: usize, w: f64) -> Result<()> {
    for id in [u, v] {
        if id >= n {
            return Err(Error::VertexOutOfRange { id, n });
        }
    }
    if u == v {
        return Err(Error::LoopEdge(u));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::NonPositiveWeight { u, v, w });
    }
    Ok(())
}

fn is_connected(adjacency: &[Vec<(usize, f64)>]) -> bool {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Parses the edge-list format. Errors carry 1-based line numbers.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing \"n m\" header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("expected \"n m\", got {header:?}"),
        });
    }
    let n = parse_usize(fields[0], hline)?;
    let m = parse_usize(fields[1], hline)?;
    if n == 0 {
        return Err(Error::Parse {
            line: hline,
            msg: "graph must have at least one vertex".into(),
        });
    }

    let mut seen = BTreeMap::new();
    let mut edges = Vec::with_capacity(m);
    for (line, body) in lines {
        if edges.len() == m {
            return Err(Error::Parse {
                line,
                msg: format!("more than the declared {m} edges"),
            });
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 2 && f.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected \"u v [w]\", got {body:?}"),
            });
        }
        let u = parse_usize(f[0], line)?;
        let v = parse_usize(f[1], line)?;
        let w = match f.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad weight {s:?}"),
            })?,
            None => 1.0,
        };
        check_edge(n, u, v, w).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if let Some(first) = seen.insert((u.min(v), u.max(v)), line) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate edge ({u}, {v}), first seen on line {first}"),
            });
        }
        edges.push(Edge { u, v, w });
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: format!("declared {m} edges, found {}", edges.len()),
        });
    }
    Ok(WeightedGraph::assemble(n, edges))
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a nonnegative integer, got {s:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle(n: usize) -> WeightedGraph {
        generate(&GraphFamily::Cycle { n }).unwrap()
    }

    #[test]
    fn parses_single_edge() {
        let g = parse_edge_list("2 1\n0 1").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.degrees(), &[1.0, 1.0]);
        assert!(g.is_unweighted());
        assert!(g.is_connected());
    }

    #[test]
    fn rejects_duplicate_edge_with_line() {
        match parse_edge_list("2 2\n0 1\n0 1") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list("2 2\n0 1\n1 0"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn rejects_loop() {
        match parse_edge_list("1 1\n0 0") {
            Err(Error::Parse { line: 2, msg }) => assert!(msg.contains("loop")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_weight_range_and_syntax() {
        assert!(matches!(parse_edge_list("2 1\n0 1 0"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("2 1\n0 1 -2.5"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("2 1\n0 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("2 1\n0 x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_edge_list("2 1 3\n0 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("3 2\n0 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_edge_list("3 1\n0 1\n1 2"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_edge_list("").is_err());
    }

    #[test]
    fn weights_and_flags() {
        let g = parse_edge_list("3 2\n0 1 2.5\n1 2").unwrap();
        assert!(!g.is_unweighted());
        assert_eq!(g.degree(1), 3.5);
        assert_eq!(g.vol_total(), 7.0);
        let d = parse_edge_list("4 2\n0 1\n2 3").unwrap();
        assert!(!d.is_connected());
        assert_eq!(d.stationary(), Err(Error::Disconnected));
        assert_eq!(d.diameter(), Err(Error::Disconnected));
    }

    #[test]
    fn distances_and_balls() {
        let c6 = cycle(6);
        assert_eq!(c6.distances_from(0), vec![0, 1, 2, 3, 2, 1]);
        assert_eq!(c6.ball_volume(0, 1.0), (3, 6.0));
        assert_eq!(c6.ball_volume(0, 1.7), (3, 6.0));
        assert_eq!(c6.ball_volume(2, 0.0), (1, 2.0));
        assert_eq!(c6.ball_volume(0, 3.0), (6, 12.0));
        assert_eq!(c6.ball_volume(0, 10.0), (6, 12.0));

        let k4 = generate(&GraphFamily::Complete { n: 4 }).unwrap();
        assert_eq!(*k4.distances_from(2).iter().max().unwrap(), 1);
        let p5 = generate(&GraphFamily::Path { n: 5 }).unwrap();
        assert_eq!(*p5.distances_from(0).iter().max().unwrap(), 4);
    }

    #[test]
    fn diameters() {
        assert_eq!(cycle(4).diameter().unwrap(), 2);
        assert_eq!(generate(&GraphFamily::Complete { n: 7 }).unwrap().diameter().unwrap(), 1);
        assert_eq!(generate(&GraphFamily::Path { n: 9 }).unwrap().diameter().unwrap(), 8);
    }

    #[test]
    fn stationary_distribution() {
        assert_eq!(cycle(4).stationary().unwrap(), vec![0.25; 4]);
        assert_eq!(parse_edge_list("2 1\n0 1").unwrap().stationary().unwrap(), vec![0.5, 0.5]);
        let star = generate(&GraphFamily::Star { leaves: 3 }).unwrap();
        assert_eq!(star.stationary().unwrap()[0], 0.5);
    }

    #[test]
    fn serializer_omits_unit_weights() {
        let g = parse_edge_list("3 2\n0 1 2.5\n1 2").unwrap();
        assert_eq!(g.to_edge_list(), "3 2\n0 1 2.5\n1 2\n");
    }

    #[test]
    fn regular_ball_growth_on_small_regular_graphs() {
        // vol(x,r) >= d^2 r / 3 for 1 <= r <= diam(x), hence diam(x) <= 3n/d
        for g in [
            cycle(11),
            generate(&GraphFamily::Torus { dims: vec![5, 7] }).unwrap(),
            generate(&GraphFamily::Hypercube { dim: 5 }).unwrap(),
            generate(&GraphFamily::Complete { n: 6 }).unwrap(),
        ] {
            let d = g.degree(0);
            for x in 0..g.n() {
                let ecc = g.eccentricity(x);
                assert!(ecc as f64 <= 3.0 * g.n() as f64 / d);
                for r in 1..=ecc {
                    let (_, vol) = g.ball_volume(x, r as f64);
                    assert!(vol >= d * d * r as f64 / 3.0);
                }
            }
        }
    }

    fn arb_graph() -> impl Strategy<Value = WeightedGraph> {
        (2usize..12).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let len = pairs.len();
            (
                Just(n),
                Just(pairs),
                proptest::collection::vec(any::<bool>(), len),
                proptest::collection::vec(prop_oneof![Just(1.0), 0.25f64..8.0], len),
            )
                .prop_map(|(n, pairs, keep, ws)| {
                    let edges = pairs
                        .into_iter()
                        .zip(keep)
                        .zip(ws)
                        .filter(|((_, k), _)| *k)
                        .map(|((p, _), w)| (p.0, p.1, w));
                    WeightedGraph::from_edges(n, edges).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn handshake_identity(g in arb_graph()) {
            let edge_sum: f64 = g.edges().iter().map(|e| e.w).sum();
            prop_assert!((g.vol_total() - 2.0 * edge_sum).abs() <= 1e-9 * (1.0 + edge_sum));
        }

        #[test]
        fn serialize_parse_roundtrip(g in arb_graph()) {
            let back = parse_edge_list(&g.to_edge_list()).unwrap();
            let key = |e: &Edge| (e.u.min(e.v), e.u.max(e.v), e.w.to_bits());
            let mut a: Vec<_> = g.edges().iter().map(key).collect();
            let mut b: Vec<_> = back.edges().iter().map(key).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.n(), g.n());
            prop_assert_eq!(back.is_unweighted(), g.is_unweighted());
        }
    }
}
