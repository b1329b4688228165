//! Exact integer linear algebra on graph Laplacians.
//!
//! Weights are arbitrary `f64`s, which are dyadic rationals, so multiplying
//! every weight by a common power of two yields an integer Laplacian whose
//! determinants and adjugates can be computed without rounding.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::graph::WeightedGraph;

/// Integer combinatorial Laplacian `2^shift * L` with the last vertex grounded
/// (its row and column removed).
pub struct GroundedLaplacian {
    pub rows: Vec<Vec<BigInt>>,
    /// Weights were multiplied by `2^shift`.
    pub shift: u32,
}

fn decode(w: f64) -> (BigInt, i32) {
    // w = mantissa * 2^exp exactly
    let bits = w.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let tz = mantissa.trailing_zeros().min(63);
    (BigInt::from(mantissa >> tz), exp + tz as i32)
}

impl GroundedLaplacian {
    pub fn new(g: &WeightedGraph) -> Self {
        let n = g.n();
        let decoded: Vec<(BigInt, i32)> = g.edges().iter().map(|e| decode(e.w)).collect();
        let min_exp = decoded.iter().map(|&(_, e)| e).min().unwrap_or(0).min(0);
        let shift = (-min_exp) as u32;
        let m = n.saturating_sub(1);
        let mut rows = vec![vec![BigInt::zero(); m]; m];
        for (e, (mant, exp)) in g.edges().iter().zip(decoded) {
            let w: BigInt = mant << ((exp - min_exp) as u32);
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if a < m {
                    rows[a][a] += &w;
                    if b < m {
                        rows[a][b] -= &w;
                    }
                }
            }
        }
        GroundedLaplacian { rows, shift }
    }
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let m = a.len();
    if m == 0 {
        return BigInt::one();
    }
    let mut prev = BigInt::one();
    let mut sign = 1;
    for k in 0..m - 1 {
        if a[k][k].is_zero() {
            match (k + 1..m).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        let (head, tail) = a.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for row in tail.iter_mut() {
            for j in k + 1..m {
                let v = &pivot_row[k] * &row[j] - &row[k] * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[m - 1][m - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Fraction-free Gauss–Jordan on `[A | B]` for a matrix `A` whose leading
/// principal minors are all nonzero (true for grounded Laplacians of connected
/// graphs). Returns `(det A, X)` with `A X = det(A) B`, i.e. `X = adj(A) B`.
pub fn bareiss_solve(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Option<(BigInt, Vec<Vec<BigInt>>)> {
    let m = a.len();
    if m == 0 {
        return Some((BigInt::one(), Vec::new()));
    }
    let r = b.first().map_or(0, |row| row.len());
    let mut aug: Vec<Vec<BigInt>> = a
        .iter()
        .zip(b)
        .map(|(ar, br)| ar.iter().chain(br).cloned().collect())
        .collect();
    let cols = m + r;
    let mut prev = BigInt::one();
    for k in 0..m {
        if aug[k][k].is_zero() {
            return None;
        }
        let pivot_row = aug[k].clone();
        for (i, row) in aug.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let factor = row[k].clone();
            for j in 0..cols {
                if j == k {
                    continue;
                }
                let v = &pivot_row[k] * &row[j] - &factor * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = pivot_row[k].clone();
    }
    let det = prev;
    let x = aug.into_iter().map(|row| row[m..].to_vec()).collect();
    Some((det, x))
}

/// `num / den` rounded to `f64`, accurate for arbitrarily large operands.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let negative = num.is_negative() != den.is_negative();
    let (n, d) = (num.abs(), den.abs());
    // scale so the integer quotient carries ~64 significant bits
    let shift = 64 + d.bits() as i64 - n.bits() as i64;
    let q = if shift >= 0 {
        (n << shift as u64) / d
    } else {
        (n >> (-shift) as u64) / d
    };
    let v = q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-shift as i32);
    if negative {
        -v
    } else {
        v
    }
}

/// Natural log of a positive big integer.
pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "ln of nonpositive integer");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}
