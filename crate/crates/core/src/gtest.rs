//! Fisher's g-test for a hidden periodicity.
//!
//! The statistic is `g = max_j I(ω_j) / Σ_j I(ω_j)`. Under i.i.d. Gaussian
//! noise its survival function is Fisher's alternating binomial series
//!
//! ```text
//! P(g > x) = Σ_{j=1}^{p} (-1)^{j-1} C(q, j) (1 - j x)^{q-1},   p = min(floor(1/x), q)
//! ```
//!
//! The Gumbel approximation uses the studentized maximum
//! `y = q·g - log q` and the tail `1 - exp(-exp(-y))`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dd::DoubleDouble;
use crate::error::{invalid, Error, Result};
use crate::spectral::Periodogram;

/// Which null tail drives downstream decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullTailMethod {
    #[default]
    FisherExact,
    Gumbel,
}

impl FromStr for NullTailMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fisher" | "fisher-exact" | "exact" => Ok(NullTailMethod::FisherExact),
            "gumbel" => Ok(NullTailMethod::Gumbel),
            other => Err(invalid(format!("unknown null tail method '{other}'"))),
        }
    }
}

impl fmt::Display for NullTailMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NullTailMethod::FisherExact => "fisher-exact",
            NullTailMethod::Gumbel => "gumbel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GTestResult {
    pub g: f64,
    /// Studentized maximum centred by `log q`.
    pub y: f64,
    /// 1-based index of the largest ordinate (smallest index on ties).
    pub argmax_index: usize,
    pub q: usize,
    pub p_exact: f64,
    pub p_gumbel: f64,
    pub method: NullTailMethod,
}

impl GTestResult {
    /// The p-value selected by `method`.
    pub fn p_value(&self) -> f64 {
        match self.method {
            NullTailMethod::FisherExact => self.p_exact,
            NullTailMethod::Gumbel => self.p_gumbel,
        }
    }
}

/// `(g, argmax_index)` for a periodogram.
pub fn g_statistic(p: &Periodogram) -> Result<(f64, usize)> {
    g_from_ordinates(p.ordinates())
}

pub(crate) fn g_from_ordinates(ordinates: &[f64]) -> Result<(f64, usize)> {
    let mut best = 0usize;
    let mut sum = 0.0;
    for (i, &v) in ordinates.iter().enumerate() {
        sum += v;
        if v > ordinates[best] {
            best = i;
        }
    }
    if ordinates.is_empty() || sum <= 0.0 {
        return Err(Error::DegenerateInput);
    }
    Ok(((ordinates[best] / sum).min(1.0), best + 1))
}

/// Fisher's exact survival function for a fixed `q`, with the log binomial
/// coefficients cached for repeated evaluation.
#[derive(Debug, Clone)]
pub struct FisherExactTail {
    q: usize,
    ln_binom: Vec<f64>,
}

impl FisherExactTail {
    pub fn new(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(invalid("q must be positive"));
        }
        let ln_q_fact = libm::lgamma(q as f64 + 1.0);
        let ln_binom = (0..=q)
            .map(|j| ln_q_fact - libm::lgamma(j as f64 + 1.0) - libm::lgamma((q - j) as f64 + 1.0))
            .collect();
        Ok(FisherExactTail { q, ln_binom })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// `P(g > x)` under Gaussian noise.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(invalid("x is NaN"));
        }
        let q = self.q;
        if x >= 1.0 {
            return Ok(0.0);
        }
        if x <= 1.0 / q as f64 {
            return Ok(1.0);
        }
        let terms = ((1.0 / x).floor() as usize).min(q);
        let exponent = (q - 1) as f64;
        let mut sum = NeumaierSum::default();
        let mut largest = f64::NEG_INFINITY;
        for j in 1..=terms {
            let jx = j as f64 * x;
            if jx >= 1.0 {
                break;
            }
            let ln_term = self.ln_binom[j] + exponent * (-jx).ln_1p();
            largest = largest.max(ln_term);
            let magnitude = ln_term.exp();
            if j % 2 == 1 {
                sum.add(magnitude);
            } else {
                sum.add(-magnitude);
            }
        }
        if largest > LN_MAX_TERM {
            // Terms beyond f64 range only occur where the tail is 1 to
            // double precision.
            return Ok(1.0);
        }
        if largest > LN_CANCELLATION && q <= DD_MAX_Q {
            return Ok(self.survival_dd(x, terms).clamp(0.0, 1.0));
        }
        Ok(sum.total().clamp(0.0, 1.0))
    }

    /// Same series in double-double arithmetic with exact binomials.
    fn survival_dd(&self, x: f64, terms: usize) -> f64 {
        let q = self.q;
        let mut binom = DoubleDouble::ONE;
        let mut acc = DoubleDouble::ZERO;
        for j in 1..=terms {
            binom = binom.mul_f64((q - j + 1) as f64).div_f64(j as f64);
            let base = DoubleDouble::ONE + -DoubleDouble::product(j as f64, x);
            if base.to_f64() <= 0.0 {
                break;
            }
            let term = binom * base.powi((q - 1) as u64);
            acc = if j % 2 == 1 { acc + term } else { acc + -term };
        }
        acc.to_f64()
    }
}

/// Above this log term size plain f64 summation starts losing digits.
const LN_CANCELLATION: f64 = 3.0;
/// Binomials up to `C(1000, 500) ≈ 2.7e299` stay finite.
const DD_MAX_Q: usize = 1000;
const LN_MAX_TERM: f64 = 690.0;

/// Fisher's exact null tail `P(g > x)` for `q` ordinates.
pub fn fisher_exact_tail(x: f64, q: usize) -> Result<f64> {
    FisherExactTail::new(q)?.survival(x)
}

/// `1 - exp(-exp(-y))`, evaluated as `-expm1(-exp(-y))`.
pub fn gumbel_tail(y: f64) -> Result<f64> {
    if y.is_nan() {
        return Err(invalid("y is NaN"));
    }
    Ok((-(-(-y).exp()).exp_m1()).clamp(0.0, 1.0))
}

pub fn g_test(p: &Periodogram, method: NullTailMethod) -> Result<GTestResult> {
    let tail = FisherExactTail::new(p.q())?;
    g_test_with(&tail, p.ordinates(), method)
}

/// [`g_test`] against a cached tail; `ordinates.len()` must equal `tail.q()`.
pub fn g_test_with(
    tail: &FisherExactTail,
    ordinates: &[f64],
    method: NullTailMethod,
) -> Result<GTestResult> {
    if ordinates.len() != tail.q() {
        return Err(invalid(format!(
            "expected {} ordinates, got {}",
            tail.q(),
            ordinates.len()
        )));
    }
    let (g, argmax_index) = g_from_ordinates(ordinates)?;
    let q = tail.q();
    let y = q as f64 * g - (q as f64).ln();
    Ok(GTestResult {
        g,
        y,
        argmax_index,
        q,
        p_exact: tail.survival(g)?,
        p_gumbel: gumbel_tail(y)?,
        method,
    })
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}
