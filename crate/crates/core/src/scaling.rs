//! Sweeps toward the divergence at fixed `lambda_D` and the fits that
//! extract exponents and coefficients from them.

use crate::cache::SpectrumSource;
use crate::ensemble::{observables, EnsembleResult, ModelParams, SumControl};
use crate::meanfield::mu_of_lambda_d;
use crate::{Error, Result};

/// Geometric grid of distances `lambda_D - lambda` in `[d_min, d_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            d_min: 1e-2,
            d_max: 1e-1,
            points: 8,
        }
    }
}

impl GridSpec {
    pub fn new(d_min: f64, d_max: f64, points: usize) -> Self {
        Self {
            d_min,
            d_max,
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0 && self.d_max.is_finite() && self.d_max >= self.d_min) {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < dmin <= dmax (dmin = {}, dmax = {})",
                self.d_min, self.d_max
            )));
        }
        Ok(())
    }

    /// Distances in decreasing order, i.e. `lambda` increasing.
    pub fn distances(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.d_min],
            n => {
                let ratio = (self.d_min / self.d_max).ln() / (n - 1) as f64;
                (0..n)
                    .map(|i| match i {
                        0 => self.d_max,
                        _ if i == n - 1 => self.d_min,
                        _ => self.d_max * (ratio * i as f64).exp(),
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    /// `lambda_D - lambda`.
    pub distance: f64,
    pub result: EnsembleResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub lambda_d: f64,
    pub beta: f64,
    pub mu: f64,
    /// Ordered by increasing `lambda`.
    pub points: Vec<SweepPoint>,
}

impl SweepSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.result.converged)
    }

    /// Copy of the series keeping only the points accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&SweepPoint) -> bool) -> SweepSeries {
        SweepSeries {
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
            ..self.clone()
        }
    }

    /// The `k` converged points with the largest `<M>`, in `lambda` order.
    pub fn largest_mean_m(&self, k: usize) -> SweepSeries {
        let mut by_m: Vec<&SweepPoint> = self.points.iter().filter(|p| p.result.converged).collect();
        by_m.sort_by(|a, b| b.result.mean_m.total_cmp(&a.result.mean_m));
        let mut top: Vec<SweepPoint> = by_m.into_iter().take(k).cloned().collect();
        top.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        SweepSeries {
            points: top,
            ..self.clone()
        }
    }

    /// Merge in more points, keeping `lambda` order.
    pub fn extend(&mut self, other: SweepSeries) {
        self.points.extend(other.points);
        self.points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        self.points.dedup_by(|a, b| a.lambda == b.lambda);
    }
}

/// Ensemble results along `lambda = lambda_D - d` for every grid distance,
/// with `mu = mu(lambda_D)`. Points that hit the sector cap are kept and
/// marked unconverged.
pub fn sweep(
    lambda_d: f64,
    beta: f64,
    grid: &GridSpec,
    control: &SumControl,
    source: &dyn SpectrumSource,
    with_f: bool,
) -> Result<SweepSeries> {
    let mu = mu_of_lambda_d(lambda_d)?.mu;
    let mut series = SweepSeries {
        lambda_d,
        beta,
        mu,
        points: Vec::new(),
    };
    if grid.points == 0 {
        return Ok(series);
    }
    grid.validate()?;
    for d in grid.distances() {
        let lambda = lambda_d - d;
        let params = ModelParams::new(lambda, beta, mu);
        let result = match observables(&params, control, source, with_f) {
            Ok(r) => r,
            Err(Error::NotConverged { partial }) => *partial,
            Err(e) => return Err(e),
        };
        series.points.push(SweepPoint {
            lambda,
            distance: d,
            result,
        });
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    /// `(min, max)` of the distances used.
    pub window: (f64, f64),
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| (y - intercept - slope * x).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

const MIN_POWERLAW_POINTS: usize = 5;
const MIN_LINEAR_POINTS: usize = 3;

fn loglog_fit(xs: &[f64], log_ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() < MIN_POWERLAW_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_POWERLAW_POINTS,
            got: xs.len(),
        });
    }
    if let Some(i) = xs.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::NonPositiveData { index: i });
    }
    let log_xs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let fit = ols(&log_xs, log_ys);
    let window = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(ScalingFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        r_squared: fit.r_squared,
        window,
        n_points: xs.len(),
    })
}

/// Least-squares line through `(ln x, ln y)`.
pub fn powerlaw_fit(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    assert_eq!(xs.len(), ys.len(), "xs and ys differ in length");
    if let Some(i) = ys.iter().position(|&y| !(y > 0.0 && y.is_finite())) {
        if xs.len() >= MIN_POWERLAW_POINTS {
            return Err(Error::NonPositiveData { index: i });
        }
    }
    let log_ys: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    loglog_fit(xs, &log_ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitTarget {
    #[default]
    Xi,
    XiMinusOne,
}

/// Power-law fit of `Xi` (or `Xi - 1`) against `lambda_D - lambda` over the
/// converged points of a series.
pub fn fit_series(series: &SweepSeries, target: FitTarget) -> Result<ScalingFit> {
    let pts: Vec<&SweepPoint> = series.points.iter().filter(|p| p.result.converged).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.distance).collect();
    let log_ys: Vec<f64> = pts
        .iter()
        .map(|p| match target {
            FitTarget::Xi => p.result.log_xi,
            // ln(Xi - 1) = ln Xi + ln(1 - 1/Xi)
            FitTarget::XiMinusOne => p.result.log_xi + (-(-p.result.log_xi).exp()).ln_1p(),
        })
        .collect();
    if xs.len() >= MIN_POWERLAW_POINTS {
        if let Some(i) = log_ys.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonPositiveData { index: i });
        }
    }
    loglog_fit(&xs, &log_ys)
}

/// Extrapolation of `<M> beta (lambda_D - lambda)` to zero distance, by a
/// straight line in the distance through the converged points.
pub fn divergence_coefficient(series: &SweepSeries) -> Result<f64> {
    let pts: Vec<&SweepPoint> = series.points.iter().filter(|p| p.result.converged).collect();
    if pts.len() < MIN_LINEAR_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_LINEAR_POINTS,
            got: pts.len(),
        });
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.distance).collect();
    let ys: Vec<f64> = pts
        .iter()
        .map(|p| p.result.mean_m * series.beta * p.distance)
        .collect();
    Ok(ols(&xs, &ys).intercept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    MeanM,
    Energy,
    MeanF,
    SigmaM,
    LogXi,
}

impl Observable {
    pub fn of(self, r: &EnsembleResult) -> Option<f64> {
        match self {
            Observable::MeanM => Some(r.mean_m),
            Observable::Energy => Some(r.energy),
            Observable::MeanF => r.mean_f,
            Observable::SigmaM => Some(r.sigma_m),
            Observable::LogXi => Some(r.log_xi),
        }
    }
}

/// Ordinary least squares of `y` against `x` over the converged points.
/// Points missing either observable (e.g. no `<F>`) are skipped.
pub fn linear_relation_fit(series: &SweepSeries, x: Observable, y: Observable) -> Result<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .points
        .iter()
        .filter(|p| p.result.converged)
        .filter_map(|p| Some((x.of(&p.result)?, y.of(&p.result)?)))
        .unzip();
    if xs.len() < MIN_LINEAR_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_LINEAR_POINTS,
            got: xs.len(),
        });
    }
    Ok(ols(&xs, &ys))
}
