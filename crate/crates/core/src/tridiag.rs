//! Real symmetric tridiagonal eigensolvers.
//!
//! Eigenvalues come from the implicit-shift QL iteration (Wilkinson shift,
//! Givens plane rotations). Eigenvectors are either accumulated during QL,
//! which costs O(n³), or recovered one at a time by inverse iteration on a
//! pivoted LU factorization of `T - sigma I`, which costs O(n) per vector.

use crate::{Error, Result};

const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Symmetric tridiagonal matrix; `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
///
/// `vectors` holds one eigenvector per row, row `k` belonging to
/// `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl EigenPairs {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[k * n..(k + 1) * n]
    }
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            off.len() + 1 == diag.len() || (diag.is_empty() && off.is_empty()),
            "off-diagonal must have exactly one fewer entry than the diagonal"
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Max row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut d = self.diag.clone();
        let mut e = self.padded_off();
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// All eigenpairs, ascending, via QL with rotation accumulation.
    pub fn eigenpairs(&self) -> Result<EigenPairs> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.padded_off();
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        ql_implicit(&mut d, &mut e, Some(&mut z))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&k| d[k]).collect();
        let mut vectors = Vec::with_capacity(n * n);
        for &k in &order {
            vectors.extend_from_slice(&z[k * n..(k + 1) * n]);
        }
        Ok(EigenPairs { values, vectors })
    }

    fn padded_off(&self) -> Vec<f64> {
        let mut e = self.off.clone();
        e.push(0.0);
        e
    }
}

/// Implicit QL on `(d, e)` in place. `e` has length `n` with `e[n-1]`
/// ignored. When `z` is given it holds `n` row-vectors that receive the
/// same rotations; starting from the identity they end up as eigenvectors.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_VALUE {
                return Err(Error::IterationFailure {
                    size: n,
                    iterations: iter,
                });
            }

            // Wilkinson shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;

            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = fast_hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                if let Some(z) = z.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zj = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zj.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[inline]
fn fast_hypot(a: f64, b: f64) -> f64 {
    let s = a * a + b * b;
    if s.is_finite() && s >= f64::MIN_POSITIVE {
        s.sqrt()
    } else {
        a.hypot(b)
    }
}

/// Pivoted LU factorization of `T - shift * I`, reusable for repeated
/// solves during inverse iteration.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.dim();
        let mut u0: Vec<f64> = t.diag.iter().map(|&a| a - shift).collect();
        let mut u1 = t.off.clone();
        let mut u2 = vec![0.0; n.saturating_sub(1)];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for k in 0..n.saturating_sub(1) {
            let sub = t.off[k];
            if u0[k].abs() >= sub.abs() {
                if u0[k] == 0.0 {
                    u0[k] = tiny;
                }
                mult[k] = sub / u0[k];
                u0[k + 1] -= mult[k] * u1[k];
            } else {
                swapped[k] = true;
                mult[k] = u0[k] / sub;
                let old_u1 = u1[k];
                u0[k] = sub;
                u1[k] = u0[k + 1];
                u2[k] = if k + 2 < n { u1[k + 1] } else { 0.0 };
                u0[k + 1] = old_u1 - mult[k] * u1[k];
                if k + 2 < n {
                    u1[k + 1] = -mult[k] * u2[k];
                }
            }
        }
        if let Some(last) = u0.last_mut() {
            if *last == 0.0 {
                *last = tiny;
            }
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve_in_place(&self, y: &mut [f64]) {
        let n = y.len();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                y.swap(k, k + 1);
            }
            y[k + 1] -= self.mult[k] * y[k];
        }
        for k in (0..n).rev() {
            let mut acc = y[k];
            if k + 1 < n {
                acc -= self.u1[k] * y[k + 1];
            }
            if k + 2 < n {
                acc -= self.u2[k] * y[k + 2];
            }
            y[k] = acc / self.u0[k];
        }
    }
}

/// Eigenvector for a known (accurate) eigenvalue by inverse iteration.
///
/// `previous` lists already computed unit eigenvectors; those whose
/// eigenvalue lies within `1e-8 * ||T||` of `value` are projected out on
/// every step so that tight clusters still come back orthogonal.
pub fn inverse_iteration(
    t: &SymTridiagonal,
    value: f64,
    previous: &[(f64, &[f64])],
) -> Vec<f64> {
    let n = t.dim();
    if n == 1 {
        return vec![1.0];
    }
    let norm = t.norm_inf().max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let lu = ShiftedLu::factor(t, value, tiny);
    let cluster: Vec<&[f64]> = previous
        .iter()
        .filter(|(v, _)| (v - value).abs() <= 1e-8 * norm)
        .map(|&(_, vec)| vec)
        .collect();

    // Deterministic start with no special symmetry.
    let mut x: Vec<f64> = (0..n)
        .map(|k| 1.0 + 0.5 * ((k as f64) * 0.7548776662466927).fract())
        .collect();
    let mut tx = vec![0.0; n];
    for _ in 0..6 {
        for q in &cluster {
            let dot: f64 = x.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(q.iter()).for_each(|(a, b)| *a -= dot * b);
        }
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x.iter_mut().for_each(|v| *v /= scale);
        lu.solve_in_place(&mut x);
        normalize(&mut x);

        t.mul_vec(&x, &mut tx);
        let residual = tx
            .iter()
            .zip(x.iter())
            .map(|(a, b)| (a - value * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-13 * norm {
            break;
        }
    }
    for q in &cluster {
        let dot: f64 = x.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(q.iter()).for_each(|(a, b)| *a -= dot * b);
    }
    normalize(&mut x);
    x
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}
