//! Log-domain summation primitives.
//!
//! The perturbed solution formula exponentiates `nu*t + N*Y_t`, which at
//! population scale reaches magnitudes of several hundred; sums of such terms
//! must be accumulated as log-sum-exp or they overflow.

/// `ln(e^a + e^b)` without leaving the log domain.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Stores the running maximum exponent and the log of the max-shifted sum, so
/// terms of wildly different magnitude can be added without overflow.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    ln_shifted_sum: f64,
}

impl LogSumExp {
    /// Empty sum, value `-inf`.
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            ln_shifted_sum: f64::NEG_INFINITY,
        }
    }

    /// Add a term given as its logarithm.
    pub fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term <= self.max {
            self.ln_shifted_sum = log_add_exp(self.ln_shifted_sum, ln_term - self.max);
        } else {
            self.ln_shifted_sum = log_add_exp(self.ln_shifted_sum + self.max - ln_term, 0.0);
            self.max = ln_term;
        }
    }

    /// `ln` of the accumulated sum.
    pub fn ln_value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.ln_shifted_sum
        }
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}
