//! Closed-form mean-field analytics near the divergence of `Xi`.
//!
//! The grand sum converges only for `lambda < lambda_D(mu)`, where
//!
//! ```text
//! lambda_D = -2 (1 + mu)                     (-3/2 <= mu < -1, lambda_D <= 1)
//! lambda_D = (-mu + sqrt(mu² - 2)) / 2        (mu < -3/2,       lambda_D > 1)
//! ```
//!
//! The inverse map `mu(lambda_D)` coincides with the thermodynamic-limit
//! ground-state energy density, see [`crate::groundstate::gs_energy_density`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::{Error, Result};

/// Minimum distance from `lambda_D` at which the double integrals are
/// attempted.
pub const QUADRATURE_GUARD: f64 = 1e-3;

const CRITICAL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `0 < lambda_D <= 1`.
    Le1,
    /// `lambda_D > 1`.
    Gt1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergencePoint {
    pub lambda_d: f64,
    pub mu: f64,
    pub branch: Branch,
}

pub fn lambda_d_of_mu(mu: f64) -> Result<DivergencePoint> {
    if mu.is_nan() || mu >= -1.0 {
        return Err(Error::NoDivergencePoint { mu });
    }
    let (lambda_d, branch) = if mu >= -1.5 {
        (-2.0 * (1.0 + mu), Branch::Le1)
    } else {
        (0.5 * (-mu + (mu * mu - 2.0).sqrt()), Branch::Gt1)
    };
    Ok(DivergencePoint {
        lambda_d,
        mu,
        branch,
    })
}

pub fn mu_of_lambda_d(lambda_d: f64) -> Result<DivergencePoint> {
    if !(lambda_d > 0.0 && lambda_d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda_D must be positive and finite, got {lambda_d}"
        )));
    }
    let (mu, branch) = if lambda_d <= 1.0 {
        (-(1.0 + lambda_d / 2.0), Branch::Le1)
    } else {
        (-(lambda_d + 1.0 / (2.0 * lambda_d)), Branch::Gt1)
    };
    Ok(DivergencePoint {
        lambda_d,
        mu,
        branch,
    })
}

fn is_critical(lambda_d: f64) -> bool {
    (lambda_d - 1.0).abs() <= CRITICAL_EPS
}

/// The finite prefactor `xi_<=` (for `lambda_D <= 1`) or `xi_>` (for
/// `lambda_D > 1`) of the simple pole of `Xi` at `lambda_D`.
pub fn xi_coefficient(lambda: f64, lambda_d: f64, beta: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= lambda_d && beta > 0.0) {
        return Err(Error::Domain(format!(
            "xi coefficient needs 0 < lambda <= lambda_D and beta > 0 (lambda = {lambda}, lambda_D = {lambda_d}, beta = {beta})"
        )));
    }
    if lambda_d <= 1.0 {
        let one_minus = 1.0 - lambda;
        // lambda² (lambda_D - lambda) / (1 - lambda), which is exactly
        // lambda² on the critical line.
        let pole_ratio = if is_critical(lambda_d) {
            lambda * lambda
        } else {
            lambda * lambda * (lambda_d - lambda) / one_minus
        };
        let inner = (1.5 * (one_minus + pole_ratio)).sqrt() + 1.5 * one_minus.sqrt();
        Ok(PI / (beta * (1.0 - (-2.0 * beta).exp())) / inner.sqrt())
    } else {
        if lambda <= 1.0 {
            return Err(Error::Domain(format!(
                "xi_> needs lambda > 1 (lambda = {lambda})"
            )));
        }
        let shifted = lambda - 1.0 / (2.0 * lambda_d);
        let l2m1 = lambda * lambda - 1.0;
        let arg = (3.0 * l2m1 * l2m1 / (4.0 * lambda * lambda * (lambda_d - lambda) * shifted)).sqrt();
        let bracket = FRAC_PI_2 + arg.atan();
        Ok(lambda * lambda * bracket
            / (beta * (1.0 - (-2.0 * beta * lambda).exp()) * (1.5 * l2m1).sqrt() * shifted))
    }
}

/// Divergent part of the mean-field `Xi`:
/// `xi_<= / ((lambda_D - lambda)(1 - lambda)^{1/4})` or
/// `xi_> / (lambda_D - lambda)`.
pub fn xi_divergent_form(lambda: f64, lambda_d: f64, beta: f64) -> Result<f64> {
    if lambda >= lambda_d {
        return Err(Error::Domain(format!(
            "pole: lambda = {lambda} >= lambda_D = {lambda_d}"
        )));
    }
    let xi = xi_coefficient(lambda, lambda_d, beta)?;
    let distance = lambda_d - lambda;
    if lambda_d <= 1.0 {
        Ok(xi / (distance * (1.0 - lambda).powf(0.25)))
    } else {
        Ok(xi / distance)
    }
}

/// The two csch² double integrals of the linearized grand sum,
/// `Xi ≈ 1 + xi1 + xi2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xi12 {
    pub xi1: f64,
    pub xi2: f64,
    /// Relative error estimate, quadrature plus domain truncation.
    pub rel_error: f64,
    /// Half-width of the square the integrals were truncated to.
    pub radius: f64,
}

struct Integrand {
    lambda: f64,
    beta: f64,
    mu: f64,
    /// `+1` for `xi1`, `-1` for `xi2`.
    sign: f64,
}

impl Integrand {
    fn eval(&self, v: f64, w: f64) -> f64 {
        let root = (self.beta * (self.lambda * w * w + self.beta)).sqrt();
        let z = 0.5 * (v * v + w * w) - v * (self.beta * self.lambda).sqrt() - self.mu * self.beta
            - self.sign * root;
        let s = (0.5 * z).sinh();
        let csch2 = 1.0 / (s * s);
        csch2 / (1.0 - (-self.sign * 2.0 * root).exp()) / (8.0 * PI)
    }

    /// Lowest value of the csch argument times two, and the `w >= 0` where
    /// it is attained.
    fn minimum(&self) -> (f64, f64) {
        let b = self.beta;
        let l = self.lambda;
        if self.sign > 0.0 && l > 1.0 {
            let w = (b * (l - 1.0 / l)).sqrt();
            (b * (-l - 1.0 / (2.0 * l) - self.mu), w)
        } else {
            (b * (-l / 2.0 - self.mu) - self.sign * b, 0.0)
        }
    }

    fn integrate(&self, radius: f64) -> (f64, f64) {
        let v0 = (self.beta * self.lambda).sqrt();
        let (zmin, w_star) = self.minimum();
        let width = zmin.max(0.0).sqrt();
        let inner_opts = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_intervals: 4000,
        };
        let outer_opts = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-9,
            max_intervals: 4000,
        };
        let v_breaks = sorted_breaks(&[v0 - radius, v0 - width, v0, v0 + width, v0 + radius]);
        let mut w_points = vec![0.0, radius];
        for p in [w_star - width, w_star, w_star + width] {
            if p > 0.0 && p < radius {
                w_points.push(p);
            }
        }
        let w_breaks = sorted_breaks(&w_points);

        let inner = |w: f64| integrate_with_breaks(|v| self.eval(v, w), &v_breaks, &inner_opts).value;
        let outer = integrate_with_breaks(inner, &w_breaks, &outer_opts);
        // Symmetric in w.
        (2.0 * outer.value, 2.0 * outer.error)
    }
}

fn sorted_breaks(points: &[f64]) -> Vec<f64> {
    let mut p = points.to_vec();
    p.sort_by(f64::total_cmp);
    p.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    p
}

/// Numerical `(Xi_1, Xi_2)`. Requires `lambda <= lambda_D(mu) - 1e-3`.
pub fn xi12_quadrature(lambda: f64, beta: f64, mu: f64) -> Result<Xi12> {
    if !(lambda >= 0.0 && beta > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need lambda >= 0, beta > 0, finite mu (lambda = {lambda}, beta = {beta}, mu = {mu})"
        )));
    }
    let first = Integrand {
        lambda,
        beta,
        mu,
        sign: 1.0,
    };
    let (zmin, _) = first.minimum();
    if zmin <= 0.0 {
        return Err(Error::SingularIntegrand {
            min_argument: 0.5 * zmin,
        });
    }
    let point = lambda_d_of_mu(mu)?;
    if lambda > point.lambda_d - QUADRATURE_GUARD {
        return Err(Error::Domain(format!(
            "lambda = {lambda} is within {QUADRATURE_GUARD} of lambda_D = {}",
            point.lambda_d
        )));
    }
    let second = Integrand { sign: -1.0, ..first };

    // Grow the square until doubling it no longer changes either integral.
    let (_, w_star) = first.minimum();
    let mut radius = 8.0 + 2.0 * w_star.max((beta * lambda).sqrt());
    let mut prev = (first.integrate(radius), second.integrate(radius));
    loop {
        let next_radius = 2.0 * radius;
        let next = (first.integrate(next_radius), second.integrate(next_radius));
        let change1 = ((next.0 .0 - prev.0 .0) / next.0 .0).abs();
        let change2 = ((next.1 .0 - prev.1 .0) / next.1 .0).abs();
        radius = next_radius;
        if (change1 <= 1e-8 && change2 <= 1e-8) || radius > 1e3 {
            let total = next.0 .0.abs() + next.1 .0.abs();
            let quad_err = (next.0 .1 + next.1 .1) / total;
            return Ok(Xi12 {
                xi1: next.0 .0,
                xi2: next.1 .0,
                rel_error: quad_err + change1.max(change2),
                radius,
            });
        }
        prev = next;
    }
}

/// Divergence coefficient `c` in `<M> ≈ c / (beta (lambda_D - lambda))`.
pub fn divergence_coefficient_of(lambda_d: f64) -> f64 {
    if is_critical(lambda_d) {
        2.5
    } else if lambda_d < 1.0 {
        2.0
    } else {
        1.0 / (1.0 - 1.0 / (2.0 * lambda_d * lambda_d))
    }
}

/// Ratio `<F>/<M>` near the divergence.
pub fn interaction_ratio_of(lambda_d: f64) -> f64 {
    if lambda_d <= 1.0 {
        0.5
    } else {
        1.0 - 1.0 / (2.0 * lambda_d * lambda_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrediction {
    pub mean_m: f64,
    pub mean_f: f64,
    pub energy: f64,
    pub sigma_m: f64,
    /// `c(lambda_D)`; the `1/beta` is kept out of it.
    pub coefficient: f64,
}

/// Leading-order observables as `lambda -> lambda_D` from below.
pub fn asymptotics(lambda: f64, lambda_d: f64, beta: f64) -> Result<AsymptoticPrediction> {
    if !(lambda > 0.0 && lambda < lambda_d && beta > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotics need 0 < lambda < lambda_D and beta > 0 (lambda = {lambda}, lambda_D = {lambda_d}, beta = {beta})"
        )));
    }
    let coefficient = divergence_coefficient_of(lambda_d);
    let mean_m = coefficient / (beta * (lambda_d - lambda));
    let mu = mu_of_lambda_d(lambda_d)?.mu;
    let sigma_ratio = if is_critical(lambda_d) {
        (4.0f64 / 5.0).sqrt()
    } else {
        1.0
    };
    Ok(AsymptoticPrediction {
        mean_m,
        mean_f: interaction_ratio_of(lambda_d) * mean_m,
        energy: mu * mean_m,
        sigma_m: sigma_ratio * mean_m,
        coefficient,
    })
}
