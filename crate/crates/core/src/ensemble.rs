//! Grand partition function and ensemble averages.
//!
//! ```text
//! Xi  = sum_M  e^{beta mu M} Tr e^{-beta H_M}
//! <O> = sum_M  Tr(O_M e^{-beta (H_M - mu M)}) / Xi
//! ```
//!
//! Sector terms are evaluated in the log domain and reduced in ascending
//! `M`. Sectors may be diagonalized in parallel; the reduction order is
//! fixed, so results do not depend on the worker count.

use rayon::prelude::*;

use crate::cache::SpectrumSource;
use crate::meanfield::lambda_d_of_mu;
use crate::spectrum::{boltzmann_f_expectations, build_hamiltonian};
use crate::summation::{LogSumAccumulator, NeumaierSum};
use crate::{Error, Result};

/// Consecutive small, decreasing sectors required before the sum stops.
pub const STOP_RUN: usize = 10;

/// One thermodynamic point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub beta: f64,
    pub mu: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, beta: f64, mu: f64) -> Self {
        Self { lambda, beta, mu }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and positive, got {}",
                self.beta
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite, got {}",
                self.mu
            )));
        }
        Ok(())
    }

    /// Fails with `DivergentRegime` unless `mu < -1` and `lambda < lambda_D(mu)`.
    pub fn check_convergent(&self) -> Result<()> {
        self.validate()?;
        let divergent = |lambda_d: f64| Error::DivergentRegime {
            lambda: self.lambda,
            lambda_d,
            mu: self.mu,
        };
        let point = lambda_d_of_mu(self.mu).map_err(|_| divergent(0.0))?;
        if self.lambda >= point.lambda_d {
            return Err(divergent(point.lambda_d));
        }
        Ok(())
    }
}

/// Truncation controls for the sector sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumControl {
    /// Relative size of the last sector term below which the tail counts
    /// as negligible.
    pub tol: f64,
    /// Largest sector that may be summed.
    pub m_cap: usize,
}

impl Default for SumControl {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            m_cap: 50_000,
        }
    }
}

impl SumControl {
    pub fn new(tol: f64, m_cap: usize) -> Self {
        Self { tol, m_cap }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.m_cap < 1 {
            return Err(Error::InvalidParameter("m_cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub params: ModelParams,
    pub log_xi: f64,
    /// `None` when `Xi` overflows a double.
    pub xi: Option<f64>,
    pub mean_m: f64,
    /// `<M²>`.
    pub mean_m2: f64,
    /// `<H>`.
    pub energy: f64,
    pub mean_f: Option<f64>,
    pub sigma_m: f64,
    /// Last sector included in the sum.
    pub m_max_used: usize,
    pub converged: bool,
    /// Last term divided by the partial sum at the stopping sector.
    pub tolerance: f64,
}

/// Per-sector trace data, all relative to the sector ground energy.
#[derive(Debug, Clone, Copy)]
struct SectorTrace {
    /// `ln(e^{beta mu M} Tr e^{-beta H_M})`.
    log_term: f64,
    /// `Tr(H e^{-beta H}) / Tr e^{-beta H}`.
    mean_energy: f64,
    mean_f: f64,
}

fn sector_trace(
    m: usize,
    params: &ModelParams,
    source: &dyn SpectrumSource,
    with_f: bool,
) -> Result<SectorTrace> {
    let beta = params.beta;
    let shift = beta * params.mu * m as f64;
    if m == 0 {
        return Ok(SectorTrace {
            log_term: 0.0,
            mean_energy: 0.0,
            mean_f: 0.0,
        });
    }
    if with_f {
        let states = boltzmann_f_expectations(&build_hamiltonian(m, params.lambda), beta)?;
        let e0 = states[0].0;
        let mut z = NeumaierSum::new();
        let mut ez = NeumaierSum::new();
        let mut fz = NeumaierSum::new();
        for &(e, f) in &states {
            let w = (-beta * (e - e0)).exp();
            z += w;
            ez += (e - e0) * w;
            fz += f * w;
        }
        let z = z.value();
        return Ok(SectorTrace {
            log_term: shift - beta * e0 + z.ln(),
            mean_energy: e0 + ez.value() / z,
            mean_f: fz.value() / z,
        });
    }

    let spectrum = source.spectrum(m, params.lambda)?;
    let e0 = spectrum.ground_energy();
    let mut z = NeumaierSum::new();
    let mut ez = NeumaierSum::new();
    for &e in &spectrum.eigenvalues {
        let w = (-beta * (e - e0)).exp();
        if w == 0.0 {
            break;
        }
        z += w;
        ez += (e - e0) * w;
    }
    let z = z.value();
    Ok(SectorTrace {
        log_term: shift - beta * e0 + z.ln(),
        mean_energy: e0 + ez.value() / z,
        mean_f: f64::NAN,
    })
}

/// `ln(e^{beta mu M} sum_k e^{-beta E_k})` for one sector.
pub fn log_partition_term(m: usize, params: &ModelParams, source: &dyn SpectrumSource) -> Result<f64> {
    params.validate()?;
    Ok(sector_trace(m, params, source, false)?.log_term)
}

/// `Xi` with truncation diagnostics. Moments that only need eigenvalues
/// are filled in as well; `mean_f` stays `None`.
pub fn grand_partition(
    params: &ModelParams,
    control: &SumControl,
    source: &dyn SpectrumSource,
) -> Result<EnsembleResult> {
    observables(params, control, source, false)
}

/// `Xi`, `<M>`, `sigma_M`, `E` and optionally the eigenvector-based `<F>`.
pub fn observables(
    params: &ModelParams,
    control: &SumControl,
    source: &dyn SpectrumSource,
    with_f: bool,
) -> Result<EnsembleResult> {
    control.validate()?;
    params.check_convergent()?;

    let mut sectors: Vec<SectorTrace> = Vec::new();
    let mut acc = LogSumAccumulator::new();
    let mut run = 0usize;
    let mut last_ratio = f64::INFINITY;
    let mut stopped = false;
    let batch = (4 * rayon::current_num_threads()).max(16);

    let mut next = 0usize;
    'outer: while next <= control.m_cap {
        let end = (next + batch).min(control.m_cap + 1);
        let chunk: Vec<SectorTrace> = (next..end)
            .into_par_iter()
            .map(|m| sector_trace(m, params, source, with_f))
            .collect::<Result<_>>()?;
        for trace in chunk {
            let m = sectors.len();
            let prev = sectors.last().map(|s| s.log_term);
            sectors.push(trace);
            acc.push(trace.log_term);
            let log_ratio = trace.log_term - acc.log_value();
            last_ratio = log_ratio.exp();
            let decreasing = prev.is_some_and(|p| trace.log_term < p);
            if m > 0 && last_ratio < control.tol && decreasing {
                run += 1;
            } else {
                run = 0;
            }
            if run >= STOP_RUN {
                stopped = true;
                break 'outer;
            }
        }
        next = end;
    }

    let result = reduce(params, &sectors, acc.log_value(), with_f, stopped, last_ratio);
    if stopped {
        Ok(result)
    } else {
        Err(Error::NotConverged {
            partial: Box::new(result),
        })
    }
}

fn reduce(
    params: &ModelParams,
    sectors: &[SectorTrace],
    log_xi: f64,
    with_f: bool,
    converged: bool,
    tolerance: f64,
) -> EnsembleResult {
    let weights: Vec<f64> = sectors.iter().map(|s| (s.log_term - log_xi).exp()).collect();
    let mean_m: f64 = weights
        .iter()
        .enumerate()
        .map(|(m, w)| m as f64 * w)
        .collect::<NeumaierSum>()
        .value();
    let variance: f64 = weights
        .iter()
        .enumerate()
        .map(|(m, w)| (m as f64 - mean_m).powi(2) * w)
        .collect::<NeumaierSum>()
        .value()
        .max(0.0);
    let energy = weights
        .iter()
        .zip(sectors)
        .map(|(w, s)| w * s.mean_energy)
        .collect::<NeumaierSum>()
        .value();
    let mean_f = with_f.then(|| {
        weights
            .iter()
            .zip(sectors)
            .map(|(w, s)| w * s.mean_f)
            .collect::<NeumaierSum>()
            .value()
    });
    let xi = log_xi.exp();
    EnsembleResult {
        params: *params,
        log_xi,
        xi: xi.is_finite().then_some(xi),
        mean_m,
        mean_m2: variance + mean_m * mean_m,
        energy,
        mean_f,
        sigma_m: variance.sqrt(),
        m_max_used: sectors.len().saturating_sub(1),
        converged,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::DirectSource;

    /// Free bosons: two independent single-particle levels at -1 and +1.
    fn free_log_xi(beta: f64, mu: f64) -> f64 {
        -(1.0 - (beta * (mu + 1.0)).exp()).ln() - (1.0 - (beta * (mu - 1.0)).exp()).ln()
    }

    #[test]
    fn free_closed_form_value() {
        // Sum of the two geometric series at beta = 1, mu = -2.
        let xi = free_log_xi(1.0, -2.0).exp();
        assert!((xi - 1.664865478).abs() < 1e-8);
    }

    #[test]
    fn sector_terms() {
        let src = DirectSource;
        let p = ModelParams::new(0.0, 1.0, -2.0);
        assert_eq!(log_partition_term(0, &p, &src).unwrap(), 0.0);
        let t1 = log_partition_term(1, &p, &src).unwrap();
        assert!((t1 - (-2.0 + (2.0 * 1f64.cosh()).ln())).abs() < 1e-14);

        let p = ModelParams::new(1.0, 1.0, -2.0);
        let r17 = 17f64.sqrt();
        let levels = [(-3.0 - r17) / 2.0, -2.0, (-3.0 + r17) / 2.0];
        let expect = -4.0 + levels.iter().map(|e: &f64| (-e).exp()).sum::<f64>().ln();
        let t2 = log_partition_term(2, &p, &src).unwrap();
        assert!((t2 - expect).abs() < 1e-13);
    }

    #[test]
    fn free_bosons_match_closed_form() {
        let p = ModelParams::new(0.0, 1.0, -2.0);
        let r = grand_partition(&p, &SumControl::default(), &DirectSource).unwrap();
        let exact = free_log_xi(1.0, -2.0).exp();
        assert!(r.converged);
        assert!(((r.xi.unwrap() - exact) / exact).abs() < 1e-7);
    }

    #[test]
    fn empty_system_limit() {
        let p = ModelParams::new(0.5, 1.0, -50.0);
        let r = observables(&p, &SumControl::default(), &DirectSource, true).unwrap();
        assert!((r.xi.unwrap() - 1.0).abs() < 1e-20);
        assert!(r.mean_m <= 1e-15);
        assert!(r.energy.abs() <= 1e-15);
        assert!(r.sigma_m <= 1e-7);
        assert!(r.mean_f.unwrap().abs() <= 1e-15);
    }

    #[test]
    fn divergent_regime_is_rejected() {
        let p = ModelParams::new(1.2, 1.0, -1.5);
        assert!(matches!(
            grand_partition(&p, &SumControl::default(), &DirectSource),
            Err(Error::DivergentRegime { .. })
        ));
        let p = ModelParams::new(0.1, 1.0, -0.5);
        assert!(matches!(
            grand_partition(&p, &SumControl::default(), &DirectSource),
            Err(Error::DivergentRegime { .. })
        ));
    }

    #[test]
    fn cap_reached_reports_partial_sum() {
        let p = ModelParams::new(0.9, 1.0, -1.5);
        match grand_partition(&p, &SumControl::new(1e-7, 20), &DirectSource) {
            Err(Error::NotConverged { partial }) => {
                assert_eq!(partial.m_max_used, 20);
                assert!(!partial.converged);
                assert!(partial.log_xi > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn invalid_controls() {
        let p = ModelParams::new(0.5, 1.0, -2.0);
        assert!(grand_partition(&p, &SumControl::new(0.0, 10), &DirectSource).is_err());
        assert!(grand_partition(&p, &SumControl::new(1e-7, 0), &DirectSource).is_err());
        let bad = ModelParams::new(0.5, -1.0, -2.0);
        assert!(matches!(
            grand_partition(&bad, &SumControl::default(), &DirectSource),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn moment_invariants() {
        let p = ModelParams::new(0.8, 1.0, -1.8);
        let r = observables(&p, &SumControl::default(), &DirectSource, true).unwrap();
        assert!(r.xi.unwrap() >= 1.0);
        assert!(r.mean_m >= 0.0 && r.sigma_m >= 0.0);
        assert!(r.mean_m2 >= r.mean_m * r.mean_m);
        // F = (n1² + n2²)/M lies in [M/2, M].
        let f = r.mean_f.unwrap();
        assert!(f >= 0.5 * r.mean_m - 1e-12 && f <= r.mean_m + 1e-12);
    }
}
