//! Effective resistance, resistance diameter and commute times.
//!
//! Up to `EXACT_LIMIT` vertices every resistance is an exact rational
//! computed from the integer (dyadically scaled) grounded Laplacian and only
//! rounded at the end. Larger graphs use a Cholesky solve whose residual is
//! checked against `FLOAT_RESIDUAL_TOL`.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{bareiss_solve, ratio_to_f64, GroundedLaplacian};
use crate::graph::WeightedGraph;
use crate::linalg::{cholesky, cholesky_solve, Matrix};

pub const EXACT_LIMIT: usize = 64;
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-10;

fn exact_quadratic(gl: &GroundedLaplacian, b: &[Vec<BigInt>]) -> Result<(BigInt, Vec<Vec<BigInt>>)> {
    bareiss_solve(&gl.rows, b).ok_or_else(|| Error::SpectrumInconsistent("singular grounded Laplacian".into()))
}

fn scale_back(num: &BigInt, det: &BigInt, shift: u32) -> f64 {
    ratio_to_f64(&(num << shift), det)
}

/// Grounded Laplacian (last vertex removed) as a float matrix.
fn grounded_float(g: &WeightedGraph) -> Matrix {
    let m = g.n() - 1;
    let mut a = Matrix::zeros(m);
    for e in g.edges() {
        for (x, y) in [(e.u, e.v), (e.v, e.u)] {
            if x < m {
                a[(x, x)] += e.w;
                if y < m {
                    a[(x, y)] -= e.w;
                }
            }
        }
    }
    a
}

/// Solves the grounded system with one step of iterative refinement if the
/// first residual is too large.
fn float_solve(a: &Matrix, l: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let residual = |z: &[f64]| -> (Vec<f64>, f64) {
        let r: Vec<f64> = a.mul_vec(z).iter().zip(b).map(|(az, bi)| bi - az).collect();
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (r, worst)
    };
    let mut z = cholesky_solve(l, b);
    let (r, worst) = residual(&z);
    if worst <= FLOAT_RESIDUAL_TOL {
        return Ok(z);
    }
    let dz = cholesky_solve(l, &r);
    z.iter_mut().zip(dz).for_each(|(v, d)| *v += d);
    let (_, worst) = residual(&z);
    if worst <= FLOAT_RESIDUAL_TOL {
        Ok(z)
    } else {
        Err(Error::SolveResidual { residual: worst, tol: FLOAT_RESIDUAL_TOL })
    }
}

/// R_eff(s, t) = (1_s − 1_t)ᵀ L⁺ (1_s − 1_t).
pub fn effective_resistance(g: &WeightedGraph, s: usize, t: usize) -> Result<f64> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    if s == t {
        return Err(Error::InvalidParameter(format!("effective resistance needs s != t (got {s})")));
    }
    g.require_connected()?;
    let m = g.n() - 1;
    // 1_s − 1_t restricted to the non-ground coordinates
    let b: Vec<(usize, i64)> = [(s, 1), (t, -1)].into_iter().filter(|&(v, _)| v < m).collect();
    if g.n() <= EXACT_LIMIT {
        let gl = GroundedLaplacian::new(g);
        let mut col = vec![vec![BigInt::zero()]; m];
        for &(v, c) in &b {
            col[v][0] = BigInt::from(c);
        }
        let (det, x) = exact_quadratic(&gl, &col)?;
        let num: BigInt = b.iter().map(|&(v, c)| &x[v][0] * c).sum();
        return Ok(scale_back(&num, &det, gl.shift));
    }
    let a = grounded_float(g);
    let l = cholesky(&a)?;
    let mut rhs = vec![0.0; m];
    for &(v, c) in &b {
        rhs[v] = c as f64;
    }
    let z = float_solve(&a, &l, &rhs)?;
    Ok(b.iter().map(|&(v, c)| z[v] * c as f64).sum())
}

/// All-pairs resistances with their maxima and the derived commute times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceProfile {
    /// `pairs[s][t]` = R_eff(s, t), zero on the diagonal.
    pub pairs: Vec<Vec<f64>>,
    /// max_t R_eff(x, t) for each x.
    pub r_diam_vertex: Vec<f64>,
    pub r_diam: f64,
    /// vol(V) · r_diam(x).
    pub commute_vertex: Vec<f64>,
    /// vol(V) · r_diam.
    pub commute_max: f64,
    /// True when computed with exact rational elimination.
    pub exact: bool,
}

impl ResistanceProfile {
    pub fn compute(g: &WeightedGraph) -> Result<Self> {
        g.require_connected()?;
        let n = g.n();
        let m = n - 1;
        // inverse of the grounded Laplacian, padded with a zero row/column for
        // the ground vertex
        let mut inv = vec![vec![0.0; n]; n];
        let exact = n <= EXACT_LIMIT;
        let pairs = if exact {
            let gl = GroundedLaplacian::new(g);
            let id: Vec<Vec<BigInt>> = (0..m)
                .map(|i| (0..m).map(|j| BigInt::from((i == j) as i64)).collect())
                .collect();
            let (det, adj) = exact_quadratic(&gl, &id)?;
            let mut pairs = vec![vec![0.0; n]; n];
            for s in 0..n {
                for t in s + 1..n {
                    let entry = |a: usize, b: usize| -> BigInt {
                        if a < m && b < m {
                            adj[a][b].clone()
                        } else {
                            BigInt::zero()
                        }
                    };
                    let num = entry(s, s) + entry(t, t) - (entry(s, t) << 1u32);
                    let r = scale_back(&num, &det, gl.shift);
                    pairs[s][t] = r;
                    pairs[t][s] = r;
                }
            }
            pairs
        } else {
            let a = grounded_float(g);
            let l = cholesky(&a)?;
            for j in 0..m {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                let z = float_solve(&a, &l, &e)?;
                for i in 0..m {
                    inv[i][j] = z[i];
                }
            }
            let mut pairs = vec![vec![0.0; n]; n];
            for s in 0..n {
                for t in s + 1..n {
                    let r = inv[s][s] + inv[t][t] - inv[s][t] - inv[t][s];
                    pairs[s][t] = r;
                    pairs[t][s] = r;
                }
            }
            pairs
        };
        let r_diam_vertex: Vec<f64> = pairs.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
        let r_diam = r_diam_vertex.iter().cloned().fold(0.0, f64::max);
        let vol = g.vol_total();
        Ok(ResistanceProfile {
            commute_vertex: r_diam_vertex.iter().map(|r| vol * r).collect(),
            commute_max: vol * r_diam,
            pairs,
            r_diam_vertex,
            r_diam,
            exact,
        })
    }
}

/// (per-vertex r_diam(x), global r_diam).
pub fn resistance_diameter(g: &WeightedGraph) -> Result<(Vec<f64>, f64)> {
    let p = ResistanceProfile::compute(g)?;
    Ok((p.r_diam_vertex, p.r_diam))
}

/// (t↔ˣ per vertex, t↔*).
pub fn commute_times(g: &WeightedGraph) -> Result<(Vec<f64>, f64)> {
    let p = ResistanceProfile::compute(g)?;
    Ok((p.commute_vertex, p.commute_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi_connected, generate, GraphFamily};
    use proptest::prelude::*;

    fn fam(f: GraphFamily) -> WeightedGraph {
        generate(&f).unwrap()
    }

    #[test]
    fn series_and_parallel_examples() {
        let p3 = fam(GraphFamily::Path { n: 3 });
        assert_eq!(effective_resistance(&p3, 0, 2).unwrap(), 2.0);
        let c4 = fam(GraphFamily::Cycle { n: 4 });
        assert_eq!(effective_resistance(&c4, 0, 1).unwrap(), 0.75);
        assert_eq!(effective_resistance(&c4, 0, 2).unwrap(), 1.0);
        assert_eq!(effective_resistance(&c4, 3, 1).unwrap(), 1.0);
        assert!(effective_resistance(&c4, 2, 2).is_err());
        assert!(effective_resistance(&c4, 0, 4).is_err());
    }

    #[test]
    fn weighted_series() {
        // conductances 0.5 and 3 in series: 2 + 1/3
        let g = WeightedGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 3.0)]).unwrap();
        let r = effective_resistance(&g, 0, 2).unwrap();
        assert!((r - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn diameters_and_commute_times() {
        let (per, d) = resistance_diameter(&fam(GraphFamily::Cycle { n: 4 })).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(per, vec![1.0; 4]);
        for n in 2..10 {
            assert_eq!(resistance_diameter(&fam(GraphFamily::Path { n })).unwrap().1, (n - 1) as f64);
        }
        let k2 = WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(commute_times(&k2).unwrap().1, 2.0);
        assert_eq!(commute_times(&fam(GraphFamily::Cycle { n: 4 })).unwrap().1, 8.0);
        assert_eq!(commute_times(&fam(GraphFamily::Path { n: 3 })).unwrap(), (vec![8.0, 4.0, 8.0], 8.0));
        let single = WeightedGraph::from_edges(1, []).unwrap();
        assert_eq!(resistance_diameter(&single).unwrap().1, 0.0);
    }

    #[test]
    fn complete_graph_closed_form() {
        // R_eff = 2/n between any two vertices of K_n
        for n in [3, 5, 8] {
            let p = ResistanceProfile::compute(&fam(GraphFamily::Complete { n })).unwrap();
            assert!((p.r_diam - 2.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn float_path_agrees_with_exact_path() {
        let g = fam(GraphFamily::Cycle { n: 70 });
        let p = ResistanceProfile::compute(&g).unwrap();
        assert!(!p.exact);
        // cycle: R(0, j) = j (n − j) / n
        for j in 1..70 {
            let want = (j * (70 - j)) as f64 / 70.0;
            assert!((p.pairs[0][j] - want).abs() < 1e-9);
        }
        assert!((effective_resistance(&g, 0, 35).unwrap() - 17.5).abs() < 1e-9);
    }

    #[test]
    fn bounded_by_distance_and_diameter() {
        for seed in 0..5 {
            let g = erdos_renyi_connected(20, 0.2, seed).unwrap();
            let p = ResistanceProfile::compute(&g).unwrap();
            for s in 0..20 {
                let dist = g.distances_from(s);
                for t in 0..20 {
                    assert_eq!(p.pairs[s][t], p.pairs[t][s]);
                    if s != t {
                        assert!(p.pairs[s][t] > 0.0 && p.pairs[s][t] <= dist[t] as f64 + 1e-12);
                    }
                }
            }
            assert!(p.r_diam <= g.diameter().unwrap() as f64 + 1e-12);
        }
    }

    #[test]
    fn variational_lower_bound_and_harmonic_equality() {
        let g = erdos_renyi_connected(9, 0.4, 3).unwrap();
        let (s, t) = (0, 8);
        let c = 1.0 / effective_resistance(&g, s, t).unwrap();
        let energy = |f: &[f64]| -> f64 { g.edges().iter().map(|e| e.w * (f[e.u] - f[e.v]).powi(2)).sum() };
        let mut state = 12345u64;
        for _ in 0..200 {
            let f: Vec<f64> = (0..9)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect();
            let d = (f[s] - f[t]).powi(2);
            if d > 1e-6 {
                assert!(energy(&f) / d >= c - 1e-9);
            }
        }
        // potential v = L⁺(1_s − 1_t) realizes the minimum
        let m = 8;
        let a = grounded_float(&g);
        let mut b = vec![0.0; m];
        b[s] = 1.0;
        let mut v = cholesky_solve(&cholesky(&a).unwrap(), &b);
        v.push(0.0);
        let d = (v[s] - v[t]).powi(2);
        assert!((energy(&v) / d - c).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn deleting_an_edge_never_decreases_resistance(seed in 0u64..1000, n in 3usize..=8) {
            let g = erdos_renyi_connected(n, 0.6, seed).unwrap();
            let before = ResistanceProfile::compute(&g).unwrap();
            for i in 0..g.m() {
                let h = g.without_edge(i);
                if !h.is_connected() {
                    continue;
                }
                let after = ResistanceProfile::compute(&h).unwrap();
                for s in 0..n {
                    for t in 0..n {
                        prop_assert!(after.pairs[s][t] >= before.pairs[s][t]);
                    }
                }
            }
        }
    }
}
