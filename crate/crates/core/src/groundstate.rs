//! Variational ground state `|G(theta)> = (b†)^M |0> / sqrt(M!)` with
//! `b† = cos(theta) a1† - sin(theta) a2†`.
//!
//! With `u = sin(2 theta)` the exact expectation value in the sector is
//!
//! ```text
//! E(theta) = -M u - lambda u² / 2 - lambda M (1 - u² / 2)
//! ```
//!
//! which is symmetric under `theta -> pi/2 - theta`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

const SCAN_POINTS: usize = 1000;
const THETA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    /// One angle for `lambda < 1`, the pair `(theta_1, pi/2 - theta_1)` for
    /// `lambda >= 1`.
    pub theta_stars: Vec<f64>,
    pub energy: f64,
    pub energy_density: f64,
}

pub fn variational_energy(theta: f64, m: usize, lambda: f64) -> f64 {
    let u = (2.0 * theta).sin();
    let mf = m as f64;
    -mf * u - 0.5 * lambda * u * u - lambda * mf * (1.0 - 0.5 * u * u)
}

/// Golden-section minimization of `f` on `[a, b]` down to width `tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn refine<F: Fn(f64) -> f64>(f: &F, grid: &[f64], lo: f64, hi: f64) -> f64 {
    let (best, _) = grid
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lo && t <= hi)
        .map(|(i, &t)| (i, f(t)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let step = grid[1] - grid[0];
    let a = (grid[best] - step).max(lo);
    let b = (grid[best] + step).min(hi);
    golden_section(f, a, b, THETA_TOL)
}

/// Global minimum of the variational energy over `theta in [0, pi]`.
///
/// A 1000-point scan brackets the minimum, golden-section search polishes it.
/// For `lambda >= 1` both symmetric minima are returned, one from each half
/// of `[0, pi/2]`; they coincide at `pi/4` when the surface has a single
/// minimum there.
pub fn minimize_theta(m: usize, lambda: f64) -> GroundStateResult {
    assert!(m >= 1, "variational ground state needs M >= 1");
    let f = |t: f64| variational_energy(t, m, lambda);
    let grid: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| PI * i as f64 / SCAN_POINTS as f64)
        .collect();

    let global = refine(&f, &grid, 0.0, PI);
    let theta_stars = if lambda >= 1.0 {
        let first = refine(&f, &grid, 0.0, FRAC_PI_4);
        if f(first) <= f(global) + 1e-9 * f(global).abs() {
            // The surface is symmetric about pi/4.
            vec![first, FRAC_PI_2 - first]
        } else {
            vec![global, global]
        }
    } else {
        vec![global]
    };
    let energy = theta_stars
        .iter()
        .map(|&t| f(t))
        .fold(f64::INFINITY, f64::min);
    GroundStateResult {
        theta_stars,
        energy,
        energy_density: energy / m as f64,
    }
}

/// Thermodynamic-limit ground-state energy per particle.
pub fn gs_energy_density(lambda: f64) -> f64 {
    if lambda < 1.0 {
        -(1.0 + lambda / 2.0)
    } else {
        -(lambda + 1.0 / (2.0 * lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `<G|H|G>` from the binomial occupation distribution of `|G(theta)>`.
    fn fock_expectation(theta: f64, m: usize, lambda: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let mf = m as f64;
        // Amplitudes of |n>_1 |M-n>_2: sqrt(C(M,n)) c^n (-s)^(M-n).
        let mut amp = vec![0.0; m + 1];
        let mut log_binom = 0.0f64;
        for (n, a) in amp.iter_mut().enumerate() {
            if n > 0 {
                log_binom += ((m - n + 1) as f64).ln() - (n as f64).ln();
            }
            let mag = (0.5 * log_binom).exp() * c.abs().powi(n as i32) * s.abs().powi((m - n) as i32);
            let sign = c.signum().powi(n as i32) * (-s.signum()).powi((m - n) as i32);
            *a = sign * mag;
        }
        let mut e = 0.0;
        for n in 0..=m {
            let nn = n as f64;
            e += -lambda / mf * (nn * nn + (mf - nn).powi(2)) * amp[n] * amp[n];
            if n < m {
                let hop = ((nn + 1.0) * (mf - nn)).sqrt();
                e += 2.0 * hop * amp[n] * amp[n + 1];
            }
        }
        e
    }

    #[test]
    fn closed_form_matches_fock_expectation() {
        for m in 1..=16usize {
            for lambda in [0.0, 0.5, 1.0, 2.3] {
                for k in 0..=40 {
                    let theta = PI * k as f64 / 40.0;
                    let a = variational_energy(theta, m, lambda);
                    let b = fock_expectation(theta, m, lambda);
                    assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "M={m} l={lambda} t={theta}");
                }
            }
        }
    }

    #[test]
    fn special_angles() {
        assert!((variational_energy(0.0, 12, 0.7) + 0.7 * 12.0).abs() < 1e-12);
        assert!((variational_energy(FRAC_PI_4, 9, 0.0) + 9.0).abs() < 1e-12);
        let m = 100_000;
        let e = variational_energy(FRAC_PI_4, m, 0.6);
        assert!((e + m as f64 * 1.3).abs() < 1.0);
    }

    #[test]
    fn swap_symmetry_of_surface() {
        for k in 0..=200 {
            let t = FRAC_PI_2 * k as f64 / 200.0;
            let a = variational_energy(t, 37, 1.4);
            let b = variational_energy(FRAC_PI_2 - t, 37, 1.4);
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn large_m_weak_coupling() {
        let g = minimize_theta(1_000_000, 0.5);
        assert_eq!(g.theta_stars.len(), 1);
        assert!((g.theta_stars[0] - FRAC_PI_4).abs() < 1e-4);
        assert!((g.energy_density + 1.25).abs() < 1e-4);
    }

    #[test]
    fn large_m_strong_coupling() {
        let g = minimize_theta(1_000_000, 2.0);
        let t1 = 0.5 * 0.5f64.asin();
        assert!((g.theta_stars[0] - t1).abs() < 1e-4);
        assert!((g.theta_stars[1] - (FRAC_PI_2 - t1)).abs() < 1e-4);
        assert!((g.theta_stars[0] + g.theta_stars[1] - FRAC_PI_2).abs() < 1e-8);
        assert!((g.energy_density + 2.25).abs() < 1e-4);
    }

    #[test]
    fn minima_merge_at_critical_coupling() {
        let g = minimize_theta(1_000_000, 1.0);
        assert!((g.theta_stars[0] - FRAC_PI_4).abs() < 1e-3);
        assert!((g.theta_stars[1] - FRAC_PI_4).abs() < 1e-3);
    }

    #[test]
    fn density_branches() {
        assert_eq!(gs_energy_density(1.0), -1.5);
        assert!((gs_energy_density(1.0 - 1e-15) + 1.5).abs() < 1e-14);
        assert_eq!(gs_energy_density(0.5), -1.25);
        assert_eq!(gs_energy_density(2.0), -2.25);
        for lambda in [0.1, 0.5, 1.0, 1.7, 5.0] {
            assert!(gs_energy_density(lambda) <= -1.0);
            assert!(minimize_theta(50, lambda).energy_density <= -1.0 + 1e-12);
        }
    }

    #[test]
    fn density_second_derivative_jumps_by_one() {
        let h = 1e-3;
        let left = (gs_energy_density(1.0 - 2.0 * h) - 2.0 * gs_energy_density(1.0 - h)
            + gs_energy_density(1.0))
            / (h * h);
        let right = (gs_energy_density(1.0 + 2.0 * h) - 2.0 * gs_energy_density(1.0 + h)
            + gs_energy_density(1.0))
            / (h * h);
        assert!(((left - right) - 1.0).abs() < 1e-2, "{left} {right}");
        // First derivative is continuous.
        let dl = (gs_energy_density(1.0) - gs_energy_density(1.0 - h)) / h;
        let dr = (gs_energy_density(1.0 + h) - gs_energy_density(1.0)) / h;
        assert!((dl - dr).abs() < 2e-3);
    }
}
