//! Lazy random walks P = (I + D⁻¹A)/2 and the continuous-time heat kernel.
//!
//! Exact probabilities come from the spectrum of ℒ: P has eigenvalues
//! θ_j = 1 − λ_j/2 and p_t(x, y) = √(w(y)/w(x)) Σ_j θ_j^t g_j(x) g_j(y).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::{vertex_measure, Spectrum};

/// Relative slack applied when a mixing condition is compared with its target.
const MIXING_GUARD: f64 = 1e-12;

fn pow_nonneg(theta: f64, t: u64) -> f64 {
    if t <= i32::MAX as u64 {
        theta.powi(t as i32)
    } else {
        theta.powf(t as f64)
    }
}

/// A graph together with its normalized Laplacian spectrum.
#[derive(Debug, Clone, Copy)]
pub struct WalkKernel<'a> {
    pub graph: &'a WeightedGraph,
    pub spectrum: &'a Spectrum,
}

impl<'a> WalkKernel<'a> {
    pub fn new(graph: &'a WeightedGraph, spectrum: &'a Spectrum) -> Result<Self> {
        graph.require_connected()?;
        if spectrum.n() != graph.n() {
            return Err(Error::SpectrumInconsistent("spectrum and graph sizes differ".into()));
        }
        Ok(WalkKernel { graph, spectrum })
    }

    fn n(&self) -> usize {
        self.graph.n()
    }

    /// Eigenvalues 1 − λ_j/2 of P.
    pub fn walk_eigenvalues(&self) -> Vec<f64> {
        self.spectrum.eigenvalues.iter().map(|l| (1.0 - l / 2.0).max(0.0)).collect()
    }

    fn pi(&self, x: usize) -> f64 {
        self.graph.degree(x) / self.graph.vol_total()
    }

    /// p_t(x, x).
    pub fn return_probability(&self, x: usize, t: u64) -> Result<f64> {
        self.graph.check_vertex(x)?;
        Ok(self.diag_sum(x, |l| pow_nonneg((1.0 - l / 2.0).max(0.0), t)))
    }

    fn diag_sum(&self, x: usize, h: impl Fn(f64) -> f64) -> f64 {
        self.spectrum
            .eigenvalues
            .iter()
            .zip(&self.spectrum.eigenvectors)
            .map(|(&l, g)| h(l) * g[x] * g[x])
            .sum()
    }

    /// p_t(x, y) = P^t(x, y).
    pub fn transition_probability(&self, x: usize, y: usize, t: u64) -> Result<f64> {
        self.graph.check_vertex(x)?;
        self.graph.check_vertex(y)?;
        let s = self.spectrum.functional_entry(x, y, |l| pow_nonneg((1.0 - l / 2.0).max(0.0), t));
        Ok((self.graph.degree(y) / self.graph.degree(x)).sqrt() * s)
    }

    /// The full matrix P^t, row x holding p_t(x, ·).
    pub fn transition_matrix(&self, t: u64) -> Vec<Vec<f64>> {
        let n = self.n();
        let powers: Vec<f64> = self.walk_eigenvalues().iter().map(|&th| pow_nonneg(th, t)).collect();
        let sqrt_w: Vec<f64> = self.graph.degrees().iter().map(|d| d.sqrt()).collect();
        // scaled[j][x] = θ_j^t g_j(x) / √w(x)
        let scaled: Vec<Vec<f64>> = self
            .spectrum
            .eigenvectors
            .iter()
            .zip(&powers)
            .map(|(g, p)| g.iter().zip(&sqrt_w).map(|(v, s)| p * v / s).collect())
            .collect();
        let mut out = vec![vec![0.0; n]; n];
        for (j, g) in self.spectrum.eigenvectors.iter().enumerate() {
            if powers[j] == 0.0 {
                continue;
            }
            for x in 0..n {
                let a = scaled[j][x];
                let row = &mut out[x];
                for y in 0..n {
                    row[y] += a * g[y] * sqrt_w[y];
                }
            }
        }
        out
    }

    /// q_t(x, x) for the continuous-time walk e^{−tℒ}.
    pub fn heat_return_probability(&self, x: usize, t: f64) -> Result<f64> {
        self.graph.check_vertex(x)?;
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time t = {t} must be nonnegative")));
        }
        Ok(self.diag_sum(x, |l| (-l * t).exp()))
    }

    /// max_x p_t(x, x) / π(x).
    fn max_return_ratio(&self, t: u64) -> f64 {
        (0..self.n())
            .map(|x| self.diag_sum(x, |l| pow_nonneg((1.0 - l / 2.0).max(0.0), t)) / self.pi(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max_{x,y} |p_t(x, y)/π(y) − 1| with a maximizing pair (lowest ids first).
    pub fn linf_distance(&self, t: u64) -> (f64, (usize, usize)) {
        let m = self.transition_matrix(t);
        let mut best = (f64::NEG_INFINITY, (0, 0));
        for (x, row) in m.iter().enumerate() {
            for (y, p) in row.iter().enumerate() {
                let d = (p / self.pi(y) - 1.0).abs();
                if d > best.0 {
                    best = (d, (x, y));
                }
            }
        }
        best
    }

    fn scan_limit(&self) -> u64 {
        16 * (self.n() as u64).pow(3).max(1)
    }

    /// τ₂(ε) = min{t >= 1 : max_x p_{2t}(x, x)/π(x) <= 1 + ε²}.
    pub fn l2_mixing_time(&self, epsilon: f64) -> Result<u64> {
        check_epsilon(epsilon)?;
        let target = 1.0 + epsilon * epsilon;
        let limit = self.scan_limit();
        first_true(1, limit / 2, |t| within(self.max_return_ratio(2 * t), target))
            .ok_or(Error::MixingScanLimit { limit })
    }

    /// τ∞(ε) = min{t >= 1 : max_{x,y} |p_t(x, y)/π(y) − 1| <= ε}.
    ///
    /// The distance is nonincreasing in t, so the search doubles and then
    /// bisects instead of visiting every t.
    pub fn linf_mixing_time(&self, epsilon: f64) -> Result<u64> {
        check_epsilon(epsilon)?;
        let limit = self.scan_limit();
        first_true(1, limit, |t| within(self.linf_distance(t).0, epsilon)).ok_or(Error::MixingScanLimit { limit })
    }

    /// Both mixing times at ε plus τ₂(√ε), with the pair that is worst one
    /// step before τ∞.
    pub fn mixing_report(&self, epsilon: f64) -> Result<MixingReport> {
        let tau_inf = self.linf_mixing_time(epsilon)?;
        let (witness_value, witness) = self.linf_distance(tau_inf - 1);
        Ok(MixingReport {
            epsilon,
            tau_2: self.l2_mixing_time(epsilon)?,
            tau_2_sqrt: self.l2_mixing_time(epsilon.sqrt())?,
            tau_inf,
            witness,
            witness_value,
        })
    }

    /// Smallest real t (to bisection precision, rounded up) with
    /// max_x q_{2t}(x, x)/π(x) <= 1 + ε².
    pub fn continuous_l2_mixing_time(&self, epsilon: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        let target = 1.0 + epsilon * epsilon;
        let cond = |t: f64| {
            let worst = (0..self.n())
                .map(|x| self.diag_sum(x, |l| (-2.0 * l * t).exp()) / self.pi(x))
                .fold(f64::NEG_INFINITY, f64::max);
            worst <= target
        };
        if cond(0.0) {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while !cond(hi) {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(Error::MixingScanLimit { limit: 1e15 as u64 });
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if cond(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// (μ*_x(δ), 2e(p_{⌊2/δ⌋}(x,x) − π(x)), e(q_{1/δ}(x,x) − π(x))).
    /// The discrete bound is only defined for δ <= 1.
    pub fn measure_return_bounds(&self, x: usize, delta: f64) -> Result<MeasureReturnBounds> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 2]")));
        }
        let lhs = vertex_measure(self.spectrum, self.graph, x, delta)?.1;
        let pi = self.pi(x);
        let e = std::f64::consts::E;
        let rhs_discrete = if delta <= 1.0 {
            let t = (2.0 / delta).floor() as u64;
            Some(2.0 * e * (self.return_probability(x, t)? - pi))
        } else {
            None
        };
        let rhs_continuous = e * (self.heat_return_probability(x, 1.0 / delta)? - pi);
        Ok(MeasureReturnBounds {
            lhs,
            rhs_discrete,
            rhs_continuous,
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")))
    }
}

fn within(value: f64, target: f64) -> bool {
    value <= target * (1.0 + MIXING_GUARD)
}

/// Smallest t in [lo, hi] with `pred(t)` for a predicate that is monotone
/// (false then true).
fn first_true(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if pred(lo) {
        return Some(lo);
    }
    // gallop: pred(a) is false, look for some b with pred(b)
    let (mut a, mut step) = (lo, 1u64);
    let mut b = loop {
        if a >= hi {
            return None;
        }
        let c = a.saturating_add(step).min(hi);
        if pred(c) {
            break c;
        }
        a = c;
        step = step.saturating_mul(2);
    };
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Some(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub epsilon: f64,
    pub tau_2: u64,
    pub tau_2_sqrt: u64,
    pub tau_inf: u64,
    pub witness: (usize, usize),
    pub witness_value: f64,
}

impl MixingReport {
    /// ⌈τ∞(ε)/2⌉ = τ₂(√ε).
    pub fn relation_holds(&self) -> bool {
        self.tau_inf.div_ceil(2) == self.tau_2_sqrt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureReturnBounds {
    pub lhs: f64,
    pub rhs_discrete: Option<f64>,
    pub rhs_continuous: f64,
}

/// Weighted neighbor sampling tables for simulating the lazy walk.
#[derive(Debug, Clone)]
pub struct LazyWalker<'a> {
    graph: &'a WeightedGraph,
    cumulative: Vec<Vec<f64>>,
}

impl<'a> LazyWalker<'a> {
    pub fn new(graph: &'a WeightedGraph) -> Self {
        let cumulative = (0..graph.n())
            .map(|x| {
                let mut acc = 0.0;
                graph
                    .neighbors(x)
                    .iter()
                    .map(|&(_, w)| {
                        acc += w;
                        acc
                    })
                    .collect()
            })
            .collect();
        LazyWalker { graph, cumulative }
    }

    pub fn step<R: Rng>(&self, x: usize, rng: &mut R) -> usize {
        if rng.gen::<bool>() {
            return x;
        }
        let cum = &self.cumulative[x];
        let Some(&total) = cum.last() else {
            return x;
        };
        let u = rng.gen::<f64>() * total;
        let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.graph.neighbors(x)[i].0
    }

    pub fn walk<R: Rng>(&self, mut x: usize, t: u64, rng: &mut R) -> usize {
        for _ in 0..t {
            x = self.step(x, rng);
        }
        x
    }
}

/// Samples handled by one stream of the fixed chunk schedule.
pub const CHUNK_SAMPLES: u64 = 4096;

/// Runs `chunk(c, samples_in_chunk, rng)` for every chunk c of the fixed
/// schedule, each with the ChaCha stream c of `seed`, on up to `jobs` threads,
/// and returns the per-chunk results in chunk order. The result does not
/// depend on `jobs`.
pub fn run_chunked<T: Send>(
    samples: u64,
    seed: u64,
    jobs: usize,
    chunk: impl Fn(u64, u64, &mut ChaCha8Rng) -> T + Sync,
) -> Vec<T> {
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let run = |c: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let size = CHUNK_SAMPLES.min(samples - c * CHUNK_SAMPLES);
        chunk(c, size, &mut rng)
    };
    let jobs = jobs.max(1).min(chunks.max(1) as usize);
    if jobs == 1 {
        return (0..chunks).map(run).collect();
    }
    let mut slots: Vec<Option<T>> = (0..chunks).map(|_| None).collect();
    std::thread::scope(|scope| {
        let run = &run;
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                scope.spawn(move || {
                    (w as u64..chunks)
                        .step_by(jobs)
                        .map(|c| (c, run(c)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (c, v) in h.join().expect("sampling worker panicked") {
                slots[c as usize] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every chunk ran")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// Hoeffding half-width at 95% confidence.
    pub half_width: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Empirical frequency of X_t = x over `samples` lazy walks started at x.
pub fn monte_carlo_return(g: &WeightedGraph, x: usize, t: u64, samples: u64, seed: u64, jobs: usize) -> Result<MonteCarloEstimate> {
    g.check_vertex(x)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let walker = LazyWalker::new(g);
    let hits: u64 = run_chunked(samples, seed, jobs, |_, size, rng| {
        (0..size).filter(|_| walker.walk(x, t, rng) == x).count() as u64
    })
    .into_iter()
    .sum();
    Ok(MonteCarloEstimate {
        estimate: hits as f64 / samples as f64,
        half_width: (40f64.ln() / (2.0 * samples as f64)).sqrt(),
        samples,
        seed,
    })
}
