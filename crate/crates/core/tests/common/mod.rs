//! Independent reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

/// Row-major dense `H_M` in the Fock basis `|n, M-n>`, built directly from
/// the second-quantized action of the hopping and interaction terms.
pub fn dense_fock_hamiltonian(m: usize, lambda: f64) -> Vec<Vec<f64>> {
    let dim = m + 1;
    let mut h = vec![vec![0.0; dim]; dim];
    if m == 0 {
        return h;
    }
    let mf = m as f64;
    for n in 0..=m {
        let (n1, n2) = (n as f64, (m - n) as f64);
        h[n][n] = -lambda / mf * (n1 * n1 + n2 * n2);
        // a1† a2 |n1, n2> = sqrt((n1 + 1) n2) |n1 + 1, n2 - 1>
        if n < m {
            let amp = ((n1 + 1.0) * n2).sqrt();
            h[n + 1][n] += amp;
            h[n][n + 1] += amp;
        }
    }
    h
}

/// Cyclic Jacobi rotations on a dense symmetric matrix; sorted eigenvalues.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1.0);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `Xi` at `lambda = 0`: two free modes at energies `-1` and `+1`.
pub fn free_xi(beta: f64, mu: f64) -> f64 {
    1.0 / ((1.0 - (beta * (mu + 1.0)).exp()) * (1.0 - (beta * (mu - 1.0)).exp()))
}
