//! Compensated and log-domain summation.

use std::ops::AddAssign;

/// Kahan-Babuska-Neumaier running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Multiply the accumulated value by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.compensation *= factor;
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        let t = self.sum + rhs;
        if self.sum.abs() >= rhs.abs() {
            self.compensation += (self.sum - t) + rhs;
        } else {
            self.compensation += (rhs - t) + self.sum;
        }
        self.sum = t;
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// `ln(sum(exp(x_i)))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let acc: NeumaierSum = xs.iter().map(|&x| (x - max).exp()).collect();
    max + acc.value().ln()
}

/// Running `ln(sum(exp(x_i)))` over a stream of log-terms.
///
/// The linear-domain residual is kept relative to the largest term seen so
/// far and accumulated with compensation, so a stream whose terms span
/// hundreds of e-folds neither overflows nor loses the small tail.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAccumulator {
    reference: f64,
    scaled: NeumaierSum,
}

impl Default for LogSumAccumulator {
    fn default() -> Self {
        Self {
            reference: f64::NEG_INFINITY,
            scaled: NeumaierSum::new(),
        }
    }
}

impl LogSumAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term > self.reference {
            if self.reference.is_finite() {
                self.scaled.scale((self.reference - log_term).exp());
            }
            self.reference = log_term;
        }
        self.scaled += (log_term - self.reference).exp();
    }

    pub fn log_value(&self) -> f64 {
        if !self.reference.is_finite() {
            return self.reference;
        }
        self.reference + self.scaled.value().ln()
    }
}
