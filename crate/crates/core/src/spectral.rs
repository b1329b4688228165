//! Normalized Laplacian spectra, spectral measures and the spectral embedding.
//!
//! For a finite connected graph the resolution of the identity of ℒ is a sum
//! of eigenprojections, so every measure here is a finite sum over atoms.
//! Membership of λ_j in `[0, δ]` is decided as `λ_j <= δ + THRESHOLD_TOL`.
//! The kernel atom is always index 0 and is skipped by index, never by
//! comparing λ_1 against a threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{dot, symmetric_eigen, Matrix};

/// Slack used when deciding whether an eigenvalue lies at or below δ.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// ℒ = I − D^{-1/2} A D^{-1/2}.
pub fn normalized_laplacian(g: &WeightedGraph) -> Result<Matrix> {
    g.require_connected()?;
    let n = g.n();
    let mut m = Matrix::identity(n);
    if n == 1 {
        // a single vertex has no edges; ℒ is the 1x1 zero operator
        m[(0, 0)] = 0.0;
        return Ok(m);
    }
    let inv_sqrt: Vec<f64> = g.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    for e in g.edges() {
        let v = -e.w * inv_sqrt[e.u] * inv_sqrt[e.v];
        m[(e.u, e.v)] = v;
        m[(e.v, e.u)] = v;
    }
    Ok(m)
}

/// Combinatorial Laplacian L = D − A.
pub fn combinatorial_laplacian(g: &WeightedGraph) -> Matrix {
    let mut m = Matrix::zeros(g.n());
    for x in 0..g.n() {
        m[(x, x)] = g.degree(x);
    }
    for e in g.edges() {
        m[(e.u, e.v)] -= e.w;
        m[(e.v, e.u)] -= e.w;
    }
    m
}

/// Sorted eigenvalues with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j][x]` is g_j(x).
    pub eigenvectors: Vec<Vec<f64>>,
    /// Largest observed eigen-residual or orthonormality defect.
    pub residual_tol: f64,
}

/// Full diagonalization of a symmetric matrix, with the residual contract
/// `‖M g_j − λ_j g_j‖ <= residual_tol <= 1e-9 n` checked.
pub fn eigendecompose(m: &Matrix) -> Result<Spectrum> {
    let n = m.dim();
    let (eigenvalues, eigenvectors) = symmetric_eigen(m)?;
    let mut worst: f64 = 0.0;
    for (j, g) in eigenvectors.iter().enumerate() {
        let mg = m.mul_vec(g);
        let r = mg
            .iter()
            .zip(g)
            .map(|(a, b)| (a - eigenvalues[j] * b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
        for h in &eigenvectors[j..] {
            let want = if std::ptr::eq(g, h) { 1.0 } else { 0.0 };
            worst = worst.max((dot(g, h) - want).abs());
        }
    }
    let limit = 1e-9 * n.max(1) as f64;
    if !(worst <= limit) {
        return Err(Error::ResidualTooLarge { residual: worst, tol: limit });
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residual_tol: worst.max(f64::EPSILON),
    })
}

/// Spectrum of ℒ for a connected graph, with the kernel vector sign fixed to
/// be positive and the range `0 = λ_1 <= ... <= λ_n <= 2` verified.
pub fn graph_spectrum(g: &WeightedGraph) -> Result<Spectrum> {
    let mut s = eigendecompose(&normalized_laplacian(g)?)?;
    let tol = 1e-9 * g.n() as f64;
    let first = s.eigenvalues[0];
    let last = *s.eigenvalues.last().unwrap();
    if first.abs() > tol || last > 2.0 + tol {
        return Err(Error::SpectrumInconsistent(format!(
            "eigenvalues span [{first}, {last}], expected [0, 2]"
        )));
    }
    for l in s.eigenvalues.iter_mut().filter(|l| **l > 2.0) {
        *l = 2.0;
    }
    if s.eigenvectors[0].iter().sum::<f64>() < 0.0 {
        s.eigenvectors[0].iter_mut().for_each(|v| *v = -*v);
    }
    Ok(s)
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// |{k : λ_k <= δ}| with the threshold slack.
    pub fn count_at_most(&self, delta: f64) -> usize {
        self.eigenvalues.iter().take_while(|&&l| l <= delta + THRESHOLD_TOL).count()
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    /// Π(δ) = Σ_{λ_j <= δ} g_j g_jᵀ.
    pub fn projection(&self, delta: f64) -> Matrix {
        let n = self.n();
        let mut p = Matrix::zeros(n);
        for g in &self.eigenvectors[..self.count_at_most(delta)] {
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += g[i] * g[j];
                }
            }
        }
        p
    }

    /// Evaluates h(ℒ) = Σ_j h(λ_j) g_j g_jᵀ at the (x, y) entry.
    pub fn functional_entry(&self, x: usize, y: usize, h: impl Fn(f64) -> f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&l, g)| h(l) * g[x] * g[y])
            .sum()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=2.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 2]")))
    }
}

/// (μ_x(δ), μ*_x(δ)).
pub fn vertex_measure(s: &Spectrum, g: &WeightedGraph, x: usize, delta: f64) -> Result<(f64, f64)> {
    check_delta(delta)?;
    g.check_vertex(x)?;
    if s.n() != g.n() {
        return Err(Error::SpectrumInconsistent("spectrum and graph sizes differ".into()));
    }
    let count = s.count_at_most(delta);
    let atoms = |from: usize| -> f64 { s.eigenvectors[from..count].iter().map(|v| v[x] * v[x]).sum() };
    let mu = atoms(0);
    let mu_star = if count == 0 { 0.0 } else { atoms(1) };
    Ok((mu, mu_star))
}

/// (μ(δ), μ*(δ)) from eigenvalue counts.
pub fn graph_measure(s: &Spectrum, delta: f64) -> (f64, f64) {
    let n = s.n() as f64;
    let count = s.count_at_most(delta);
    (count as f64 / n, count.saturating_sub(1) as f64 / n)
}

/// Σ_{x∈S} μ*_x(δ).
pub fn set_measure(s: &Spectrum, g: &WeightedGraph, set: &[usize], delta: f64) -> Result<f64> {
    set.iter().map(|&x| vertex_measure(s, g, x, delta).map(|m| m.1)).sum()
}

/// The map x ↦ F(x) = I*(δ) e_x in eigenvector coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEmbedding {
    pub delta: f64,
    /// Number of eigenvalues in (0, δ]; equals n μ*(δ).
    pub dims: usize,
    /// `coords[x][j]` = g_{j+2}(x) / √w(x).
    pub coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SpectralEmbedding {
    /// Builds F without requiring a nonzero eigenvalue below δ; when there is
    /// none every F(x) is the empty (zero) vector.
    pub fn build(s: &Spectrum, g: &WeightedGraph, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if s.n() != g.n() {
            return Err(Error::SpectrumInconsistent("spectrum and graph sizes differ".into()));
        }
        let count = s.count_at_most(delta).max(1);
        let selected = &s.eigenvectors[1..count];
        let coords = (0..g.n())
            .map(|x| {
                let scale = 1.0 / g.degree(x).sqrt();
                selected.iter().map(|v| v[x] * scale).collect()
            })
            .collect();
        Ok(SpectralEmbedding {
            delta,
            dims: count - 1,
            coords,
            weights: g.degrees().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sq(&self, x: usize) -> f64 {
        dot(&self.coords[x], &self.coords[x])
    }

    pub fn norm(&self, x: usize) -> f64 {
        self.norm_sq(x).sqrt()
    }

    pub fn dist_sq(&self, x: usize, y: usize) -> f64 {
        self.coords[x].iter().zip(&self.coords[y]).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// μ*_x(δ) recovered as w(x)‖F(x)‖².
    pub fn vertex_mass(&self, x: usize) -> f64 {
        self.weights[x] * self.norm_sq(x)
    }

    /// B_F(x, r) = {y : ‖F(x) − F(y)‖ <= r}.
    pub fn ball(&self, x: usize, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        (0..self.n()).filter(|&y| self.dist_sq(x, y) <= r2).collect()
    }

    /// Σ_x w(x) F(x).
    pub fn weighted_center(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dims];
        for (x, f) in self.coords.iter().enumerate() {
            for (ci, fi) in c.iter_mut().zip(f) {
                *ci += self.weights[x] * fi;
            }
        }
        c
    }

    /// Σ_x w(x) ⟨v, F(x)⟩² for a vector v in embedding coordinates.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.coords
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * dot(v, f).powi(2))
            .sum()
    }
}

/// Spectral embedding at threshold δ; errors when it would be identically zero.
pub fn spectral_embedding(s: &Spectrum, g: &WeightedGraph, delta: f64) -> Result<SpectralEmbedding> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be in (0, 2]")));
    }
    let emb = SpectralEmbedding::build(s, g, delta)?;
    if emb.dims == 0 {
        return Err(Error::TrivialEmbedding(delta));
    }
    Ok(emb)
}

/// Σ_{x~y} w(x,y)|f(x)−f(y)|² / Σ_x w(x) f(x)².
pub fn rayleigh_quotient(g: &WeightedGraph, f: &[f64]) -> Result<f64> {
    if f.len() != g.n() {
        return Err(Error::InvalidParameter("function length differs from n".into()));
    }
    let den: f64 = f.iter().zip(g.degrees()).map(|(v, w)| w * v * v).sum();
    if den == 0.0 {
        return Err(Error::InvalidParameter("Rayleigh quotient of the zero function".into()));
    }
    let num: f64 = g.edges().iter().map(|e| e.w * (f[e.u] - f[e.v]).powi(2)).sum();
    Ok(num / den)
}

/// Which edges an energy sum ranges over.
#[derive(Debug, Clone, Copy)]
pub enum EdgeSelection<'a> {
    All,
    /// Explicit edges given by endpoints; each must be an edge of the graph.
    Edges(&'a [(usize, usize)]),
    /// Edges with both endpoints in the vertex set.
    Induced(&'a [usize]),
}

/// ℰ_F(E') = Σ_{(x,y)∈E'} w(x,y) ‖F(x) − F(y)‖².
pub fn embedding_energy(g: &WeightedGraph, emb: &SpectralEmbedding, sel: EdgeSelection<'_>) -> Result<f64> {
    match sel {
        EdgeSelection::All => Ok(g.edges().iter().map(|e| e.w * emb.dist_sq(e.u, e.v)).sum()),
        EdgeSelection::Edges(list) => list
            .iter()
            .map(|&(x, y)| {
                let w = g
                    .edge_weight(x, y)
                    .ok_or_else(|| Error::InvalidParameter(format!("({x}, {y}) is not an edge")))?;
                Ok(w * emb.dist_sq(x, y))
            })
            .sum(),
        EdgeSelection::Induced(set) => {
            let mut member = vec![false; g.n()];
            for &x in set {
                g.check_vertex(x)?;
                member[x] = true;
            }
            Ok(g.edges()
                .iter()
                .filter(|e| member[e.u] && member[e.v])
                .map(|e| e.w * emb.dist_sq(e.u, e.v))
                .sum())
        }
    }
}

/// Output of the greedy ball selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSelection {
    pub delta: f64,
    pub alpha: f64,
    pub k: usize,
    pub centers: Vec<usize>,
    /// B_F(x_i, α‖F(x_i)‖).
    pub balls: Vec<Vec<usize>>,
    /// B_F(x_i, α‖F(x_i)‖ / 2).
    pub half_balls: Vec<Vec<usize>>,
}

pub const DEFAULT_ALPHA: f64 = 0.25;

/// Greedily picks k = ⌊μ*(δ)n/2⌋ + 1 centers of maximal vertex mass, removing
/// the α-ball around each pick. Ties go to the lowest vertex id.
pub fn ball_selection(g: &WeightedGraph, emb: &SpectralEmbedding, alpha: f64) -> Result<BallSelection> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1/2)")));
    }
    if emb.n() != g.n() {
        return Err(Error::InvalidParameter("embedding and graph sizes differ".into()));
    }
    let k = emb.dims / 2 + 1;
    let mass: Vec<f64> = (0..g.n()).map(|x| emb.vertex_mass(x)).collect();
    let mut remaining = vec![true; g.n()];
    let mut centers = Vec::with_capacity(k);
    let mut balls = Vec::with_capacity(k);
    let mut half_balls = Vec::with_capacity(k);
    for found in 0..k {
        let mut best: Option<usize> = None;
        for x in (0..g.n()).filter(|&x| remaining[x]) {
            match best {
                Some(b) if mass[x] <= mass[b] + 1e-12 * mass[b].abs().max(1e-300) => {}
                _ => best = Some(x),
            }
        }
        let x = best.ok_or(Error::BallSelectionExhausted { found, wanted: k })?;
        let radius = alpha * emb.norm(x);
        let ball = emb.ball(x, radius);
        for &y in &ball {
            remaining[y] = false;
        }
        centers.push(x);
        half_balls.push(emb.ball(x, radius / 2.0));
        balls.push(ball);
    }
    Ok(BallSelection {
        delta: emb.delta,
        alpha,
        k,
        centers,
        balls,
        half_balls,
    })
}

/// Minimum distance between a grid point and any eigenvalue.
pub const GRID_AVOIDANCE: f64 = 1e-6;

/// Up to `count` thresholds in (0, 2), each at least `GRID_AVOIDANCE` away
/// from every eigenvalue. About half sit just above distinct eigenvalues
/// (where measures jump), the rest are geometrically spaced from below λ₂.
pub fn delta_grid(s: &Spectrum, count: usize) -> Vec<f64> {
    let clear = |d: f64| d > 0.0 && d < 2.0 && s.eigenvalues.iter().all(|l| (l - d).abs() >= GRID_AVOIDANCE);
    let mut above: Vec<f64> = Vec::new();
    for &l in s.eigenvalues.iter().skip(1) {
        let d = l + 2.0 * GRID_AVOIDANCE;
        if clear(d) && above.last().is_none_or(|&p| d - p > GRID_AVOIDANCE) {
            above.push(d);
        }
    }
    let take_even = |v: &[f64], k: usize| -> Vec<f64> {
        if v.len() <= k {
            return v.to_vec();
        }
        (0..k).map(|i| v[i * (v.len() - 1) / (k - 1).max(1)]).collect()
    };
    let mut grid = take_even(&above, count / 2);
    let lambda2 = s.eigenvalues.get(1).copied().filter(|&l| l > 0.0).unwrap_or(1.0);
    let lo = (lambda2 / 8.0).max(1e-9).ln();
    let hi = (2.0f64 - 1e-3).ln();
    let geometric = count - grid.len();
    for i in 0..geometric {
        let t = if geometric == 1 { 0.5 } else { i as f64 / (geometric - 1) as f64 };
        let mut d = (lo + t * (hi - lo)).exp();
        if !clear(d) {
            d += 3.0 * GRID_AVOIDANCE;
        }
        if clear(d) {
            grid.push(d);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < GRID_AVOIDANCE);
    grid
}

/// JSON export of a spectrum; eigenvectors are vertex-indexed rows
/// (`rows[x][j]` = g_j(x)) when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumExport {
    pub schema: String,
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub residual_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

pub const SPECTRUM_SCHEMA: &str = "specgraph.spectrum/1";

impl Spectrum {
    pub fn export(&self, with_vectors: bool) -> SpectrumExport {
        let n = self.n();
        let eigenvectors = with_vectors.then(|| {
            (0..n)
                .map(|x| self.eigenvectors.iter().map(|g| g[x]).collect())
                .collect()
        });
        SpectrumExport {
            schema: SPECTRUM_SCHEMA.to_string(),
            n,
            eigenvalues: self.eigenvalues.clone(),
            residual_tol: self.residual_tol,
            eigenvectors,
        }
    }
}
