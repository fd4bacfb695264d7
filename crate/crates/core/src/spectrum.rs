//! Fock-sector Hamiltonian, its spectrum, and the mode-swap parity.
//!
//! In the sector with `M` bosons the basis `|n>_1 |M-n>_2` (n = 0..=M)
//! makes `H_M` tridiagonal:
//!
//! ```text
//! <n|H|n>   = -(lambda/M) (n² + (M-n)²)
//! <n+1|H|n> = sqrt((n+1)(M-n))
//! ```
//!
//! Both arrays are symmetric under `n <-> M-n`, so the sector splits into an
//! even and an odd block under the swap of the two modes. The eigensolvers
//! work on those blocks: they are half the size and, unlike the full matrix,
//! never carry the near-degenerate doublets of the `lambda > 1` phase.

use crate::tridiag::{inverse_iteration, EigenPairs, SymTridiagonal};
use crate::{Error, Result};

/// `H_M` in the Fock basis.
///
/// `M = 0` is stored as the 1x1 zero matrix acting on the vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    pub m: usize,
    pub lambda: f64,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub m: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Row `k` is the unit eigenvector of `eigenvalues[k]` in the Fock basis.
    pub eigenvectors: Option<Vec<f64>>,
    pub parities: Option<Vec<i8>>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, k: usize) -> Option<&[f64]> {
        let n = self.dim();
        self.eigenvectors.as_ref().map(|v| &v[k * n..(k + 1) * n])
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}

/// `n² + (M-n)²` in exact integer arithmetic.
pub(crate) fn interaction_count(m: usize, n: usize) -> f64 {
    let a = n as u128;
    let b = (m - n) as u128;
    (a * a + b * b) as f64
}

pub fn build_hamiltonian(m: usize, lambda: f64) -> TridiagonalHamiltonian {
    if m == 0 {
        return TridiagonalHamiltonian {
            m,
            lambda,
            diag: vec![0.0],
            offdiag: vec![],
        };
    }
    let scale = lambda / m as f64;
    let diag = (0..=m)
        .map(|n| -scale * interaction_count(m, n))
        .collect();
    let offdiag = (0..m)
        .map(|n| (((n + 1) as f64) * ((m - n) as f64)).sqrt())
        .collect();
    TridiagonalHamiltonian {
        m,
        lambda,
        diag,
        offdiag,
    }
}

impl TridiagonalHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn as_tridiagonal(&self) -> SymTridiagonal {
        SymTridiagonal::new(self.diag.clone(), self.offdiag.clone())
    }

    /// Reduced matrices of the even and odd swap-parity sectors.
    ///
    /// The odd block is empty for `M = 0`.
    pub fn parity_blocks(&self) -> (SymTridiagonal, SymTridiagonal) {
        let m = self.m;
        if m == 0 {
            return (
                SymTridiagonal::new(vec![0.0], vec![]),
                SymTridiagonal::new(vec![], vec![]),
            );
        }
        let d = &self.diag;
        let o = &self.offdiag;
        let half = m / 2;
        if m.is_multiple_of(2) {
            // Pairs n = 0..half-1 plus the self-mirrored centre |half>.
            let mut even_d = d[..half].to_vec();
            even_d.push(d[half]);
            let mut even_o = o[..half - 1].to_vec();
            even_o.push(std::f64::consts::SQRT_2 * o[half - 1]);
            let odd_d = d[..half].to_vec();
            let odd_o = o[..half - 1].to_vec();
            (
                SymTridiagonal::new(even_d, even_o),
                SymTridiagonal::new(odd_d, odd_o),
            )
        } else {
            // Pairs n = 0..=half; the innermost pair is coupled by o[half].
            let mut even_d = d[..=half].to_vec();
            let mut odd_d = d[..=half].to_vec();
            even_d[half] += o[half];
            odd_d[half] -= o[half];
            let off = o[..half].to_vec();
            (
                SymTridiagonal::new(even_d, off.clone()),
                SymTridiagonal::new(odd_d, off),
            )
        }
    }
}

/// Expand a parity-block vector to the full Fock basis.
pub(crate) fn expand_block_vector(m: usize, block: &[f64], even: bool, out: &mut [f64]) {
    debug_assert_eq!(out.len(), m + 1);
    if m == 0 {
        out[0] = block[0];
        return;
    }
    let half = m / 2;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if even { 1.0 } else { -1.0 };
    let pairs = if m.is_multiple_of(2) { half } else { half + 1 };
    for (n, &c) in block.iter().take(pairs).enumerate() {
        out[n] = c * r;
        out[m - n] = sign * c * r;
    }
    if m.is_multiple_of(2) {
        out[half] = if even { block[half] } else { 0.0 };
    }
}

fn merge_sorted(even: &[f64], odd: &[f64]) -> Vec<(f64, bool, usize)> {
    let mut all: Vec<(f64, bool, usize)> = even
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, true, k))
        .chain(odd.iter().enumerate().map(|(k, &v)| (v, false, k)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all
}

/// Sorted eigenvalues of `H_M`.
pub fn eigenvalues(h: &TridiagonalHamiltonian) -> Result<Spectrum> {
    let (even, odd) = h.parity_blocks();
    let ev = even.eigenvalues()?;
    let od = odd.eigenvalues()?;
    let eigenvalues = merge_sorted(&ev, &od).into_iter().map(|t| t.0).collect();
    Ok(Spectrum {
        m: h.m,
        eigenvalues,
        eigenvectors: None,
        parities: None,
    })
}

/// Eigenvalues and eigenvectors of `H_M`, vectors in eigenvalue order.
///
/// Every vector is an exact swap-parity eigenstate, including the members
/// of numerically degenerate doublets.
pub fn eigensystem(h: &TridiagonalHamiltonian) -> Result<Spectrum> {
    let (even, odd) = h.parity_blocks();
    let ep = even.eigenpairs()?;
    let op = odd.eigenpairs()?;
    let order = merge_sorted(&ep.values, &op.values);
    let n = h.dim();
    let mut vectors = vec![0.0; n * n];
    let mut eigenvalues = Vec::with_capacity(n);
    for (row, &(value, is_even, k)) in order.iter().enumerate() {
        let block: &EigenPairs = if is_even { &ep } else { &op };
        expand_block_vector(
            h.m,
            block.vector(k),
            is_even,
            &mut vectors[row * n..(row + 1) * n],
        );
        eigenvalues.push(value);
    }
    let mut spectrum = Spectrum {
        m: h.m,
        eigenvalues,
        eigenvectors: Some(vectors),
        parities: None,
    };
    spectrum.parities = Some(parity_labels(&spectrum)?);
    Ok(spectrum)
}

/// Swap parity of each eigenvector: `+1` if reversing the Fock amplitudes
/// leaves it unchanged, `-1` if it flips sign (tolerance `1e-8`).
pub fn parity_labels(spectrum: &Spectrum) -> Result<Vec<i8>> {
    let n = spectrum.dim();
    let Some(vectors) = spectrum.eigenvectors.as_ref() else {
        return Err(Error::InvalidParameter(
            "parity labels need eigenvectors".into(),
        ));
    };
    (0..n)
        .map(|k| {
            let v = &vectors[k * n..(k + 1) * n];
            let even = (0..n).all(|i| (v[i] - v[n - 1 - i]).abs() <= 1e-8);
            let odd = (0..n).all(|i| (v[i] + v[n - 1 - i]).abs() <= 1e-8);
            match (even, odd) {
                (true, false) => Ok(1),
                (false, true) => Ok(-1),
                _ => Err(Error::UnlabeledState { index: k }),
            }
        })
        .collect()
}

/// `2 Jz - (2 lambda / M) Jx² - M lambda / 2` in the spin-`M/2` basis where
/// `Jz` is diagonal (`m_z = -M/2 ..= M/2`).
pub fn build_lmg_matrix(m: usize, lambda: f64) -> Result<DenseMatrix> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "LMG representation needs M >= 1".into(),
        ));
    }
    let dim = m + 1;
    let j = m as f64 / 2.0;
    let mz = |k: usize| k as f64 - j;
    // <k+1| J+ |k>
    let raise = |k: usize| (j * (j + 1.0) - mz(k) * (mz(k) + 1.0)).max(0.0).sqrt();

    // Jx = (J+ + J-)/2 as a tridiagonal matrix, then square it.
    let mut jx = DenseMatrix::zeros(dim);
    for k in 0..m {
        let v = 0.5 * raise(k);
        jx.set(k + 1, k, v);
        jx.set(k, k + 1, v);
    }
    let coupling = 2.0 * lambda / m as f64;
    let mut out = DenseMatrix::zeros(dim);
    for r in 0..dim {
        for c in r.saturating_sub(2)..(r + 3).min(dim) {
            let lo = r.max(c).saturating_sub(1);
            let hi = (r.min(c) + 2).min(dim);
            let jx2: f64 = (lo..hi).map(|k| jx.get(r, k) * jx.get(k, c)).sum();
            let mut v = -coupling * jx2;
            if r == c {
                v += 2.0 * mz(r) - m as f64 * lambda / 2.0;
            }
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// Per-state expectation values of `F_M = (n1² + n2²)/M` for every state
/// whose Boltzmann weight relative to the sector ground state is non-zero
/// in double precision. Returns `(energy, <F>)` pairs in ascending energy.
///
/// Vectors come from inverse iteration on the parity blocks, so the cost
/// per kept state is linear in `M`.
pub(crate) fn boltzmann_f_expectations(
    h: &TridiagonalHamiltonian,
    beta: f64,
) -> Result<Vec<(f64, f64)>> {
    let m = h.m;
    if m == 0 {
        return Ok(vec![(0.0, 0.0)]);
    }
    let (even, odd) = h.parity_blocks();
    let ev = even.eigenvalues()?;
    let od = odd.eigenvalues()?;
    let e0 = ev.first().copied().unwrap_or(f64::INFINITY).min(
        od.first().copied().unwrap_or(f64::INFINITY),
    );
    let mf = m as f64;
    let half = m / 2;
    let pairs = if m.is_multiple_of(2) { half } else { half + 1 };
    // F in block coordinates: paired states carry (n² + (M-n)²)/M, the even
    // centre state carries the same expression at n = M/2.
    let f_block: Vec<f64> = (0..=half).map(|n| interaction_count(m, n) / mf).collect();

    let mut out = Vec::new();
    for (block, values) in [(&even, &ev), (&odd, &od)] {
        let mut done: Vec<(f64, Vec<f64>)> = Vec::new();
        for &value in values.iter() {
            if (-beta * (value - e0)).exp() == 0.0 {
                break;
            }
            let prev: Vec<(f64, &[f64])> =
                done.iter().map(|(v, x)| (*v, x.as_slice())).collect();
            let x = inverse_iteration(block, value, &prev);
            let f: f64 = x
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let fi = if i < pairs { f_block[i] } else { f_block[half] };
                    c * c * fi
                })
                .sum();
            out.push((value, f));
            done.push((value, x));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}
