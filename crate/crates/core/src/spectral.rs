//! Periodogram ordinates at the standard Fourier frequencies.
//!
//! For a series `X_1, ..., X_n` the ordinate at `ω_j = 2πj/n` is
//! `I(ω_j) = |Σ_k X_k e^{ikω_j}|² / n`, evaluated for `j = 1..q` with
//! `q = floor((n-1)/2)`. The Nyquist ordinate of even-length series is
//! never part of the grid.
//!
//! [`periodogram`] is the reference path (direct summation over a table of
//! exact-phase twiddles). [`PeriodogramPlan`] is the FFT-backed path used by
//! the Monte Carlo drivers; it is tested against the reference.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Result};

/// Smallest series length for which the grid is non-empty.
pub const MIN_LEN: usize = 3;

/// One real-valued series (one gene's observations at `t = 1..n`).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSample {
    values: Vec<f64>,
}

impl SeriesSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        Ok(SeriesSample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for SeriesSample {
    type Error = crate::Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        SeriesSample::new(values)
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.len() < MIN_LEN {
        return Err(invalid(format!(
            "series length {} is below the minimum of {MIN_LEN}",
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite value at position {}", pos + 1)));
    }
    Ok(())
}

/// Standard frequencies `ω_j = 2πj/n`, `j = 1..q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    n: usize,
    q: usize,
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Angular frequency of 1-based index `j`.
    pub fn omega(&self, j: usize) -> f64 {
        self.omegas[j - 1]
    }
}

/// Number of standard frequencies for a series of length `n`.
pub fn grid_size(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

pub fn fourier_grid(n: usize) -> Result<FrequencyGrid> {
    if n < MIN_LEN {
        return Err(invalid(format!(
            "n = {n} is below the minimum of {MIN_LEN}"
        )));
    }
    let q = grid_size(n);
    let omegas = (1..=q).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    Ok(FrequencyGrid { n, q, omegas })
}

/// `Σ_{k=1}^{n} X_k e^{ikω}` with the 1-based phase convention.
pub fn dft_at_frequency(series: &SeriesSample, omega: f64) -> Result<Complex64> {
    if !omega.is_finite() {
        return Err(invalid("frequency must be finite"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, &x) in series.values().iter().enumerate() {
        let phase = (idx + 1) as f64 * omega;
        acc += Complex64::new(x * phase.cos(), x * phase.sin());
    }
    Ok(acc)
}

/// Ordinates `I(ω_1), ..., I(ω_q)` together with their grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Periodogram {
    grid: FrequencyGrid,
    ordinates: Vec<f64>,
}

impl Periodogram {
    /// Builds a periodogram from precomputed ordinates, e.g. those returned by
    /// [`PeriodogramPlan::ordinates`].
    pub fn from_ordinates(grid: FrequencyGrid, ordinates: Vec<f64>) -> Result<Self> {
        if ordinates.len() != grid.q {
            return Err(invalid(format!(
                "expected {} ordinates, got {}",
                grid.q,
                ordinates.len()
            )));
        }
        if ordinates.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("ordinates must be finite and non-negative"));
        }
        Ok(Periodogram { grid, ordinates })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn q(&self) -> usize {
        self.grid.q
    }

    pub fn sum(&self) -> f64 {
        self.ordinates.iter().sum()
    }
}

impl fmt::Display for Periodogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "j,omega,ordinate")?;
        for (j, (w, v)) in self.grid.omegas.iter().zip(&self.ordinates).enumerate() {
            writeln!(f, "{},{w},{v}", j + 1)?;
        }
        Ok(())
    }
}

/// Reference periodogram by direct summation, `O(n·q)`.
///
/// Phases are reduced as `(j·k) mod n` before scaling by `2π/n`, so every
/// twiddle is one of the `n` exact roots of unity.
pub fn periodogram(series: &SeriesSample) -> Periodogram {
    let values = series.values();
    let n = values.len();
    let grid = fourier_grid(n).expect("SeriesSample guarantees n >= 3");
    let table: Vec<(f64, f64)> = (0..n)
        .map(|m| {
            let a = 2.0 * PI * m as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let ordinates = (1..=grid.q)
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for (idx, &x) in values.iter().enumerate() {
                let (c, s) = table[(j * (idx + 1)) % n];
                re += x * c;
                im += x * s;
            }
            (re * re + im * im) / n as f64
        })
        .collect();
    Periodogram { grid, ordinates }
}

pub fn periodogram_mean(p: &Periodogram) -> f64 {
    p.sum() / p.q() as f64
}

/// Reusable FFT plan for many series of one fixed length.
///
/// Not `Sync`; give each worker thread its own plan.
pub struct PeriodogramPlan {
    grid: FrequencyGrid,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl PeriodogramPlan {
    pub fn new(n: usize) -> Result<Self> {
        let grid = fourier_grid(n)?;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Ok(PeriodogramPlan {
            grid,
            fft,
            buffer: vec![Complex64::new(0.0, 0.0); n],
            scratch,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Writes the `q` ordinates of `values` into `out` (cleared first).
    ///
    /// The forward FFT uses the 0-based, negative-exponent convention; its
    /// magnitudes coincide with the 1-based positive-exponent sums because the
    /// two differ by conjugation and a unit phase.
    pub fn ordinates_into(&mut self, values: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if values.len() != self.grid.n {
            return Err(invalid(format!(
                "plan is for length {}, got {}",
                self.grid.n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("series contains non-finite values"));
        }
        for (slot, &x) in self.buffer.iter_mut().zip(values) {
            *slot = Complex64::new(x, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let n = self.grid.n as f64;
        out.clear();
        out.extend(
            self.buffer[1..=self.grid.q]
                .iter()
                .map(|z| z.norm_sqr() / n),
        );
        Ok(())
    }

    pub fn periodogram(&mut self, values: &[f64]) -> Result<Periodogram> {
        let mut ordinates = Vec::with_capacity(self.grid.q);
        self.ordinates_into(values, &mut ordinates)?;
        Ok(Periodogram {
            grid: self.grid.clone(),
            ordinates,
        })
    }
}

impl fmt::Debug for PeriodogramPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodogramPlan")
            .field("n", &self.grid.n)
            .field("q", &self.grid.q)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize, j: usize) -> SeriesSample {
        let w = 2.0 * PI * j as f64 / n as f64;
        SeriesSample::new((1..=n).map(|k| 2.0 * (k as f64 * w).cos()).collect()).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(fourier_grid(20).unwrap().q(), 9);
        assert_eq!(fourier_grid(50).unwrap().q(), 24);
        let g = fourier_grid(3).unwrap();
        assert_eq!(g.q(), 1);
        assert_eq!(g.omega(1), 2.0 * PI / 3.0);
        assert!(fourier_grid(2).is_err());
        assert!(fourier_grid(0).is_err());
    }

    #[test]
    fn grid_is_strictly_inside_zero_pi() {
        for n in 3..200 {
            let g = fourier_grid(n).unwrap();
            assert_eq!(g.q(), (n - 1) / 2);
            assert!(g.omegas()[0] > 0.0);
            assert!(g.omegas().windows(2).all(|w| w[0] < w[1]));
            assert!(*g.omegas().last().unwrap() < PI);
        }
    }

    #[test]
    fn series_validation() {
        assert!(SeriesSample::new(vec![1.0, 2.0]).is_err());
        assert!(SeriesSample::new(vec![1.0, f64::NAN, 2.0]).is_err());
        assert!(SeriesSample::new(vec![1.0, f64::INFINITY, 2.0]).is_err());
        assert!(SeriesSample::new(vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn dft_of_constant_vanishes_on_grid() {
        let n = 37;
        let c = 3.5;
        let s = SeriesSample::new(vec![c; n]).unwrap();
        for &w in fourier_grid(n).unwrap().omegas() {
            let z = dft_at_frequency(&s, w).unwrap();
            assert!(z.norm() <= 1e-9 * n as f64 * c);
        }
    }

    #[test]
    fn dft_of_cosine_is_n() {
        let n = 40;
        for j in 1..=fourier_grid(n).unwrap().q() {
            let s = tone(n, j);
            let z = dft_at_frequency(&s, 2.0 * PI * j as f64 / n as f64).unwrap();
            assert!((z.re - n as f64).abs() <= 1e-9 * n as f64);
            assert!(z.im.abs() <= 1e-9 * n as f64);
        }
    }

    #[test]
    fn dft_single_term_phase() {
        let s = SeriesSample::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let z = dft_at_frequency(&s, PI / 2.0).unwrap();
        assert!(z.re.abs() < 1e-15);
        assert!((z.im - 1.0).abs() < 1e-15);
        assert!(dft_at_frequency(&s, f64::NAN).is_err());
    }

    #[test]
    fn zero_series_has_zero_ordinates() {
        let p = periodogram(&SeriesSample::new(vec![0.0; 11]).unwrap());
        assert!(p.ordinates().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_tone_concentrates_on_one_ordinate() {
        let n = 30;
        for j in 1..=14 {
            let p = periodogram(&tone(n, j));
            for (i, &v) in p.ordinates().iter().enumerate() {
                let expected = if i + 1 == j { n as f64 } else { 0.0 };
                assert!((v - expected).abs() <= 1e-9 * n as f64, "j={j} i={i} v={v}");
            }
            let mean = periodogram_mean(&p);
            assert!((mean - n as f64 / 14.0).abs() <= 1e-9 * n as f64);
        }
    }

    #[test]
    fn mean_of_equal_ordinates() {
        let g = fourier_grid(9).unwrap();
        let p = Periodogram::from_ordinates(g, vec![2.5; 4]).unwrap();
        assert_eq!(periodogram_mean(&p), 2.5);
    }

    #[test]
    fn from_ordinates_checks_shape() {
        let g = fourier_grid(9).unwrap();
        assert!(Periodogram::from_ordinates(g.clone(), vec![1.0; 3]).is_err());
        assert!(Periodogram::from_ordinates(g, vec![1.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn plan_matches_reference() {
        for n in [3usize, 4, 5, 20, 21, 50, 97, 128, 1000] {
            let values: Vec<f64> = (0..n)
                .map(|k| ((k * 7919) % 101) as f64 / 13.0 - 3.0 + (k as f64).sin())
                .collect();
            let reference = periodogram(&SeriesSample::new(values.clone()).unwrap());
            let fast = PeriodogramPlan::new(n)
                .unwrap()
                .periodogram(&values)
                .unwrap();
            let max = reference.ordinates().iter().cloned().fold(0.0, f64::max);
            for (a, b) in reference.ordinates().iter().zip(fast.ordinates()) {
                assert!((a - b).abs() <= 1e-9 * max, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn plan_rejects_wrong_length() {
        let mut plan = PeriodogramPlan::new(8).unwrap();
        let mut out = Vec::new();
        assert!(plan.ordinates_into(&[1.0; 7], &mut out).is_err());
        assert!(plan.ordinates_into(&[f64::NAN; 8], &mut out).is_err());
    }
}
