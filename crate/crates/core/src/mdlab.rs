//! Monte Carlo and deterministic checks of the periodogram-maximum tail
//! approximations.
//!
//! Three experiments live here:
//!
//! * tail ratio curves: the empirical tail of the centred maximum (known
//!   variance or studentized) divided by the Gumbel tail `1 - exp(-exp(-y))`;
//! * the deterministic ratio between Fisher's exact tail at
//!   `x = (y + log q)/q` and the Gumbel tail;
//! * p-value accuracy: Fisher p-values of null genes under non-Gaussian noise
//!   compared with a Monte Carlo calibration table of the true null law.
//!
//! Replicate `r` always draws from its own substream of the master seed, so
//! results do not depend on thread count or scheduling.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gtest::{gumbel_tail, FisherExactTail};
use crate::screen::format_real;
use crate::simgen::{mix64, substream, NoiseFamily};
use crate::spectral::{fourier_grid, grid_size, PeriodogramPlan};

/// Standardisation of the periodogram maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// `max_j I(ω_j)/σ² - log q` with σ² = 1.
    KnownSigma,
    /// `max_j I(ω_j) / mean_j I(ω_j) - log q`.
    Studentized,
}

impl FromStr for TailMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "known-sigma" | "known" | "knownsigma" => Ok(TailMode::KnownSigma),
            "studentized" | "student" => Ok(TailMode::Studentized),
            other => Err(invalid(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for TailMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailMode::KnownSigma => "known-sigma",
            TailMode::Studentized => "studentized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailExperimentSpec {
    pub n: usize,
    pub noise: NoiseFamily,
    pub mode: TailMode,
    pub y_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

/// Minimum replicate count for tail experiments.
pub const MIN_REPLICATES: usize = 1000;

impl TailExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let grid = fourier_grid(self.n)?;
        if self.replicates < MIN_REPLICATES {
            return Err(invalid(format!(
                "replicates = {} is below the minimum of {MIN_REPLICATES}",
                self.replicates
            )));
        }
        check_y_grid(&self.y_grid, grid.q())
    }
}

fn check_y_grid(y_grid: &[f64], q: usize) -> Result<()> {
    if y_grid.is_empty() {
        return Err(invalid("y grid is empty"));
    }
    if y_grid.iter().any(|y| !y.is_finite()) {
        return Err(invalid("y grid must be finite"));
    }
    if y_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("y grid must be strictly increasing"));
    }
    let floor = -(q as f64).ln();
    if y_grid[0] < floor - 1e-12 {
        return Err(invalid(format!("y grid starts below -log q = {floor}")));
    }
    Ok(())
}

/// Evenly spaced grid of `points` values on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Tail probabilities on a `y` grid and their ratio to a reference tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCurve {
    pub y_grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub reference_tail: Vec<f64>,
    /// `empirical / reference`; NaN where the reference underflows to 0.
    pub ratio: Vec<f64>,
    /// `sqrt(p(1-p)/replicates)`; zero for deterministic curves.
    pub mc_stderr: Vec<f64>,
    /// Points where `(y + log q)/q >= 1`, so the exact tail is identically 0.
    pub out_of_range: Vec<bool>,
    pub replicates: usize,
    /// Replicates redrawn because the series was constant.
    pub resampled: usize,
}

impl RatioCurve {
    fn from_tails(
        y_grid: Vec<f64>,
        empirical_tail: Vec<f64>,
        reference_tail: Vec<f64>,
        replicates: usize,
    ) -> Self {
        let ratio = empirical_tail
            .iter()
            .zip(&reference_tail)
            .map(|(e, r)| if *r > 0.0 { e / r } else { f64::NAN })
            .collect();
        let mc_stderr = empirical_tail
            .iter()
            .map(|&p| {
                if replicates == 0 {
                    0.0
                } else {
                    (p * (1.0 - p) / replicates as f64).sqrt()
                }
            })
            .collect();
        let out_of_range = vec![false; y_grid.len()];
        RatioCurve {
            y_grid,
            empirical_tail,
            reference_tail,
            ratio,
            mc_stderr,
            out_of_range,
            replicates,
            resampled: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.y_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_grid.is_empty()
    }

    /// Largest `|ratio - 1|` over the points that are in range.
    pub fn max_abs_deviation(&self) -> f64 {
        self.ratio
            .iter()
            .zip(&self.out_of_range)
            .filter(|(_, &oor)| !oor)
            .map(|(r, _)| (r - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Columns `y,empirical,reference,ratio,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,empirical,reference,ratio,stderr\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                format_real(self.y_grid[i]),
                format_real(self.empirical_tail[i]),
                format_real(self.reference_tail[i]),
                format_real(self.ratio[i]),
                format_real(self.mc_stderr[i]),
            ));
        }
        out
    }
}

/// Maximum and total of the `q` ordinates of one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateStat {
    pub max: f64,
    pub sum: f64,
}

impl ReplicateStat {
    pub fn g(&self) -> f64 {
        self.max / self.sum
    }

    pub fn known_sigma(&self, q: usize) -> f64 {
        self.max - (q as f64).ln()
    }

    pub fn studentized(&self, q: usize) -> f64 {
        q as f64 * self.g() - (q as f64).ln()
    }

    pub fn statistic(&self, mode: TailMode, q: usize) -> f64 {
        match mode {
            TailMode::KnownSigma => self.known_sigma(q),
            TailMode::Studentized => self.studentized(q),
        }
    }
}

/// Simulates `replicates` i.i.d. series of length `n` drawn from `sampler`.
/// Returns the per-replicate statistics in replicate order and the number of
/// constant series that were redrawn.
pub fn replicate_stats<F>(
    n: usize,
    replicates: usize,
    seed: u64,
    sampler: F,
) -> Result<(Vec<ReplicateStat>, usize)>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    fourier_grid(n)?;
    let out: Vec<(ReplicateStat, usize)> = (0..replicates as u64)
        .into_par_iter()
        .map_init(
            || {
                (
                    PeriodogramPlan::new(n).expect("checked n"),
                    vec![0.0; n],
                    Vec::new(),
                )
            },
            |(plan, series, ords), r| -> Result<(ReplicateStat, usize)> {
                let mut rng = substream(seed, 0, r);
                let mut redraws = 0;
                loop {
                    for v in series.iter_mut() {
                        *v = sampler(&mut rng);
                    }
                    if series.iter().any(|&v| v != series[0]) {
                        break;
                    }
                    redraws += 1;
                }
                plan.ordinates_into(series, ords)?;
                let max = ords.iter().cloned().fold(0.0, f64::max);
                let sum = ords.iter().sum();
                Ok((ReplicateStat { max, sum }, redraws))
            },
        )
        .collect::<Result<_>>()?;
    let resampled = out.iter().map(|(_, k)| k).sum();
    Ok((out.into_iter().map(|(s, _)| s).collect(), resampled))
}

/// Fraction of `sorted` values that are `>= y`, for each `y`.
fn upper_fractions(sorted: &[f64], y_grid: &[f64]) -> Vec<f64> {
    let total = sorted.len() as f64;
    y_grid
        .iter()
        .map(|&y| (sorted.len() - sorted.partition_point(|&t| t < y)) as f64 / total)
        .collect()
}

fn sorted_statistics(stats: &[ReplicateStat], mode: TailMode, q: usize) -> Vec<f64> {
    let mut t: Vec<f64> = stats.iter().map(|s| s.statistic(mode, q)).collect();
    t.sort_by(f64::total_cmp);
    t
}

fn gumbel_reference(y_grid: &[f64]) -> Result<Vec<f64>> {
    y_grid.iter().map(|&y| gumbel_tail(y)).collect()
}

/// Empirical tail of the centred maximum against the Gumbel tail.
pub fn empirical_tail_ratio(spec: &TailExperimentSpec) -> Result<RatioCurve> {
    spec.validate()?;
    let noise = spec.noise;
    tail_ratio_with(spec, move |rng| noise.sample(rng))
}

fn tail_ratio_with<F>(spec: &TailExperimentSpec, sampler: F) -> Result<RatioCurve>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let q = grid_size(spec.n);
    let (stats, resampled) = replicate_stats(spec.n, spec.replicates, spec.seed, sampler)?;
    let t = sorted_statistics(&stats, spec.mode, q);
    let empirical = upper_fractions(&t, &spec.y_grid);
    let mut curve = RatioCurve::from_tails(
        spec.y_grid.clone(),
        empirical,
        gumbel_reference(&spec.y_grid)?,
        spec.replicates,
    );
    curve.resampled = resampled;
    Ok(curve)
}

/// Known-variance tail curve under unit-variance `t(dof)` noise.
///
/// A report for heavy-tailed noise, where the Gumbel ratio is expected to
/// blow up at large `y`; it carries no pass/fail threshold.
pub fn heavy_tail_report(
    n: usize,
    dof: f64,
    y_grid: Vec<f64>,
    replicates: usize,
    seed: u64,
) -> Result<RatioCurve> {
    if !(dof > 2.0 && dof.is_finite()) {
        return Err(invalid("t noise needs finite dof > 2 for unit variance"));
    }
    let spec = TailExperimentSpec {
        n,
        noise: NoiseFamily::ScaledT5,
        mode: TailMode::KnownSigma,
        y_grid,
        replicates,
        seed,
    };
    spec.validate()?;
    let t = StudentT::new(dof).map_err(|e| invalid(e.to_string()))?;
    let scale = ((dof - 2.0) / dof).sqrt();
    tail_ratio_with(&spec, move |rng| scale * t.sample(rng))
}

/// `f_n((y + log q)/q) / (1 - exp(-exp(-y)))` on a grid; no randomness.
///
/// The exact tail is stored in `empirical_tail` and the Gumbel tail in
/// `reference_tail`.
pub fn lemma31_curve(n: usize, y_grid: &[f64]) -> Result<RatioCurve> {
    if n < 5 {
        return Err(invalid(format!("n = {n} is below the minimum of 5")));
    }
    let q = grid_size(n);
    check_y_grid(y_grid, q)?;
    let tail = FisherExactTail::new(q)?;
    let lnq = (q as f64).ln();
    let xs: Vec<f64> = y_grid.iter().map(|&y| (y + lnq) / q as f64).collect();
    let exact = xs
        .iter()
        .map(|&x| tail.survival(x))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = RatioCurve::from_tails(y_grid.to_vec(), exact, gumbel_reference(y_grid)?, 0);
    for (i, &x) in xs.iter().enumerate() {
        if x >= 1.0 {
            curve.out_of_range[i] = true;
            curve.ratio[i] = 0.0;
        }
    }
    Ok(curve)
}

/// Result of the Gaussian exactness check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullOracleReport {
    pub n: usize,
    pub q: usize,
    /// Empirical studentized tail against Fisher's exact tail.
    pub curve: RatioCurve,
    /// Largest `|empirical - exact| / stderr`; points with zero stderr
    /// contribute only when the two tails differ.
    pub max_z: f64,
    /// Kolmogorov–Smirnov distance of the exact p-values from Uniform(0, 1).
    pub ks_statistic: f64,
    pub ks_critical: f64,
}

impl NullOracleReport {
    pub fn points_within(&self, k: f64) -> usize {
        (0..self.curve.len())
            .filter(|&i| {
                let c = &self.curve;
                (c.empirical_tail[i] - c.reference_tail[i]).abs() <= k * c.mc_stderr[i]
            })
            .count()
    }

    pub fn passed(&self) -> bool {
        self.points_within(3.0) == self.curve.len() && self.ks_statistic < self.ks_critical
    }
}

/// Upper 1% point of the Kolmogorov distribution.
pub const KOLMOGOROV_99: f64 = 1.627_623_6;

/// One-sample KS distance of `samples` from Uniform(0, 1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut u = samples.to_vec();
    u.sort_by(f64::total_cmp);
    let m = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / m - x).max(x - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// KS critical value at the 1% level with Stephens' finite-sample correction.
pub fn ks_critical_1pct(m: usize) -> f64 {
    let s = (m as f64).sqrt();
    KOLMOGOROV_99 / (s + 0.12 + 0.11 / s)
}

/// Gaussian null: the studentized maximum must follow Fisher's law exactly.
pub fn gaussian_null_oracle(
    n: usize,
    replicates: usize,
    y_grid: &[f64],
    seed: u64,
) -> Result<NullOracleReport> {
    let spec = TailExperimentSpec {
        n,
        noise: NoiseFamily::Normal01,
        mode: TailMode::Studentized,
        y_grid: y_grid.to_vec(),
        replicates,
        seed,
    };
    spec.validate()?;
    let q = grid_size(n);
    let tail = FisherExactTail::new(q)?;
    let (stats, resampled) =
        replicate_stats(n, replicates, seed, |rng| NoiseFamily::Normal01.sample(rng))?;
    let t = sorted_statistics(&stats, TailMode::Studentized, q);
    let empirical = upper_fractions(&t, y_grid);
    let lnq = (q as f64).ln();
    let exact = y_grid
        .iter()
        .map(|&y| tail.survival((y + lnq) / q as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = RatioCurve::from_tails(y_grid.to_vec(), empirical, exact, replicates);
    curve.resampled = resampled;
    let max_z = (0..curve.len())
        .map(|i| {
            let d = (curve.empirical_tail[i] - curve.reference_tail[i]).abs();
            let se = curve.mc_stderr[i];
            if se > 0.0 {
                d / se
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let pvals = stats
        .iter()
        .map(|s| tail.survival(s.g()))
        .collect::<Result<Vec<_>>>()?;
    Ok(NullOracleReport {
        n,
        q,
        curve,
        max_z,
        ks_statistic: ks_uniform(&pvals),
        ks_critical: ks_critical_1pct(replicates),
    })
}

/// Empirical survival function `P(g > x)` of the g-statistic, tabulated on a
/// uniform grid over `[1/q, 1]` and linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct NullCalibration {
    q: usize,
    samples: usize,
    grid: Vec<f64>,
    survival: Vec<f64>,
}

impl NullCalibration {
    pub fn from_g_values(mut g_values: Vec<f64>, q: usize, grid_points: usize) -> Result<Self> {
        if g_values.is_empty() {
            return Err(invalid("calibration needs at least one sample"));
        }
        if grid_points < 2 {
            return Err(invalid("calibration grid needs at least two points"));
        }
        g_values.sort_by(f64::total_cmp);
        let total = g_values.len() as f64;
        let grid = linear_grid(1.0 / q as f64, 1.0, grid_points);
        let survival = grid
            .iter()
            .map(|&x| (g_values.len() - g_values.partition_point(|&g| g <= x)) as f64 / total)
            .collect();
        Ok(NullCalibration {
            q,
            samples: g_values.len(),
            grid,
            survival,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Smallest non-zero tail probability the table can represent.
    pub fn resolution(&self) -> f64 {
        1.0 / self.samples as f64
    }

    pub fn survival(&self, x: f64) -> f64 {
        let lo = self.grid[0];
        let hi = *self.grid.last().expect("grid has >= 2 points");
        if x <= lo {
            return 1.0;
        }
        if x >= hi {
            return 0.0;
        }
        let step = (hi - lo) / (self.grid.len() - 1) as f64;
        let pos = (x - lo) / step;
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let w = pos - i as f64;
        self.survival[i] * (1.0 - w) + self.survival[i + 1] * w
    }

    /// Relative Monte Carlo error of a tail estimate `p`.
    pub fn relative_stderr(&self, p: f64) -> f64 {
        ((1.0 - p) / (p * self.samples as f64)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracySpec {
    pub noise: NoiseFamily,
    pub n: usize,
    pub genes: usize,
    pub theta: f64,
    /// Independent batches of `genes` null genes.
    pub replicates: usize,
    pub seed: u64,
    pub calibration_replicates: usize,
    pub grid_points: usize,
}

impl AccuracySpec {
    pub fn new(
        noise: NoiseFamily,
        n: usize,
        genes: usize,
        theta: f64,
        replicates: usize,
        seed: u64,
    ) -> Self {
        AccuracySpec {
            noise,
            n,
            genes,
            theta,
            replicates,
            seed,
            calibration_replicates: 1_000_000,
            grid_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub spec: AccuracySpec,
    pub q: usize,
    /// Largest `|P_g / P_true - 1|` over all batches and genes in the event
    /// `P_g > θ/(2G)` or `P_true > θ/(2G)`.
    pub worst_relative_error: f64,
    /// Mean over batches of the per-batch worst error.
    pub mean_batch_worst: f64,
    pub batch_worst: Vec<f64>,
    /// Relative Monte Carlo error of the calibration table at the smallest
    /// true p-value that entered the maximum.
    pub calibration_rel_stderr: f64,
    pub genes_considered: usize,
}

impl AccuracyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("batch,worst_relative_error\n");
        for (b, w) in self.batch_worst.iter().enumerate() {
            out.push_str(&format!("{},{}\n", b + 1, format_real(*w)));
        }
        out
    }
}

/// Compares Fisher p-values of null genes with the calibrated true null tail.
///
/// True p-values are floored at the table resolution `1/N` so that a gene
/// beyond every calibration draw still yields a finite error.
pub fn pvalue_accuracy_experiment(spec: &AccuracySpec) -> Result<AccuracyReport> {
    let q = fourier_grid(spec.n)?.q();
    if spec.genes == 0 || spec.replicates == 0 {
        return Err(invalid("genes and replicates must be positive"));
    }
    if !(spec.theta > 0.0 && spec.theta < 1.0) {
        return Err(invalid(format!(
            "theta = {} must lie in (0, 1)",
            spec.theta
        )));
    }
    let level = spec.theta / (2.0 * spec.genes as f64);
    if spec.calibration_replicates == 0 {
        return Err(invalid("calibration needs at least one replicate"));
    }
    let resolution = 1.0 / spec.calibration_replicates as f64;
    if resolution > level {
        return Err(Error::Resolution {
            resolution,
            required: level,
        });
    }

    let noise = spec.noise;
    let sampler = move |rng: &mut ChaCha8Rng| noise.sample(rng);
    let (calib_stats, _) = replicate_stats(
        spec.n,
        spec.calibration_replicates,
        mix64(spec.seed, u64::MAX, 0),
        sampler,
    )?;
    let table = NullCalibration::from_g_values(
        calib_stats.iter().map(ReplicateStat::g).collect(),
        q,
        spec.grid_points,
    )?;
    drop(calib_stats);

    let (gene_stats, _) = replicate_stats(
        spec.n,
        spec.genes * spec.replicates,
        mix64(spec.seed, u64::MAX - 1, 0),
        sampler,
    )?;
    let tail = FisherExactTail::new(q)?;
    let mut batch_worst = Vec::with_capacity(spec.replicates);
    let mut min_true = f64::INFINITY;
    let mut considered = 0;
    for batch in gene_stats.chunks(spec.genes) {
        let mut worst: f64 = 0.0;
        for s in batch {
            let g = s.g();
            let p_fisher = tail.survival(g)?;
            let p_true = table.survival(g).max(table.resolution());
            if p_fisher > level || p_true > level {
                considered += 1;
                worst = worst.max((p_fisher / p_true - 1.0).abs());
                min_true = min_true.min(p_true);
            }
        }
        batch_worst.push(worst);
    }
    let worst_relative_error = batch_worst.iter().cloned().fold(0.0, f64::max);
    let mean_batch_worst = batch_worst.iter().sum::<f64>() / batch_worst.len() as f64;
    let calibration_rel_stderr = if min_true.is_finite() {
        table.relative_stderr(min_true)
    } else {
        0.0
    };
    Ok(AccuracyReport {
        spec: spec.clone(),
        q,
        worst_relative_error,
        mean_batch_worst,
        batch_worst,
        calibration_rel_stderr,
        genes_considered: considered,
    })
}

/// Draws the noise for replicate `r` of an experiment seeded with `seed`;
/// exposed so paired experiments can reproduce individual series.
pub fn replicate_series(noise: NoiseFamily, n: usize, seed: u64, r: u64) -> Vec<f64> {
    let mut rng = substream(seed, 0, r);
    (0..n).map(|_| noise.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{periodogram, SeriesSample};
    use rand::Rng;

    #[test]
    fn lowest_y_has_full_studentized_tail() {
        let n = 31;
        let q = grid_size(n);
        let spec = TailExperimentSpec {
            n,
            noise: NoiseFamily::Exp1,
            mode: TailMode::Studentized,
            y_grid: vec![-(q as f64).ln(), 0.0],
            replicates: 2000,
            seed: 3,
        };
        let c = empirical_tail_ratio(&spec).unwrap();
        assert_eq!(c.empirical_tail[0], 1.0);
        assert_eq!(c.mc_stderr[0], 0.0);
        assert_eq!(c.resampled, 0);
    }

    #[test]
    fn spec_validation() {
        let base = TailExperimentSpec {
            n: 21,
            noise: NoiseFamily::Normal01,
            mode: TailMode::KnownSigma,
            y_grid: vec![0.0, 1.0],
            replicates: 1000,
            seed: 0,
        };
        assert!(base.validate().is_ok());
        for bad in [
            TailExperimentSpec {
                replicates: 999,
                ..base.clone()
            },
            TailExperimentSpec {
                n: 2,
                ..base.clone()
            },
            TailExperimentSpec {
                y_grid: vec![],
                ..base.clone()
            },
            TailExperimentSpec {
                y_grid: vec![1.0, 1.0],
                ..base.clone()
            },
            TailExperimentSpec {
                y_grid: vec![-3.0, 1.0],
                ..base.clone()
            },
            TailExperimentSpec {
                y_grid: vec![0.0, f64::NAN],
                ..base.clone()
            },
        ] {
            assert!(empirical_tail_ratio(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn curves_are_deterministic() {
        let spec = TailExperimentSpec {
            n: 64,
            noise: NoiseFamily::ScaledT5,
            mode: TailMode::KnownSigma,
            y_grid: linear_grid(0.0, 3.0, 7),
            replicates: 3000,
            seed: 99,
        };
        assert_eq!(
            empirical_tail_ratio(&spec).unwrap(),
            empirical_tail_ratio(&spec).unwrap()
        );
    }

    #[test]
    fn known_and_studentized_are_coupled() {
        let n = 40;
        let q = grid_size(n);
        let (stats, _) = replicate_stats(n, 200, 17, |rng| NoiseFamily::Exp1.sample(rng)).unwrap();
        for (r, s) in stats.iter().enumerate() {
            let diff = s.known_sigma(q) - s.studentized(q);
            let expected = s.max * (1.0 - q as f64 / s.sum);
            assert!((diff - expected).abs() <= 1e-9 * (1.0 + expected.abs()));

            // statistics agree with the reference periodogram of the same draw
            let series = replicate_series(NoiseFamily::Exp1, n, 17, r as u64);
            let p = periodogram(&SeriesSample::new(series).unwrap());
            let max = p.ordinates().iter().cloned().fold(0.0, f64::max);
            assert!((max - s.max).abs() <= 1e-9 * max);
            assert!((p.sum() - s.sum).abs() <= 1e-9 * p.sum());
        }
    }

    #[test]
    fn constant_draws_are_resampled() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = AtomicUsize::new(0);
        // First series of every replicate is constant zero; the redraw is not.
        let (stats, resampled) = replicate_stats(5, 3, 0, |rng| {
            let k = calls.fetch_add(1, Ordering::Relaxed);
            if k % 10 < 5 {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .unwrap();
        assert_eq!(stats.len(), 3);
        assert_eq!(resampled, 3);
        assert!(stats.iter().all(|s| s.sum > 0.0));
    }

    #[test]
    fn exact_gumbel_out_of_range_points() {
        let n = 11;
        let q = grid_size(n) as f64;
        let c = lemma31_curve(n, &[0.0, q - q.ln() + 0.5]).unwrap();
        assert!(!c.out_of_range[0]);
        assert!(c.out_of_range[1]);
        assert_eq!(c.ratio[1], 0.0);
        assert_eq!(c.empirical_tail[1], 0.0);
        assert!(c.reference_tail[1] > 0.0);
        assert!(lemma31_curve(4, &[0.0]).is_err());
    }

    #[test]
    fn ks_of_perfect_grid() {
        let m = 1000;
        let u: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        assert!((ks_uniform(&u) - 0.5 / m as f64).abs() < 1e-15);
        let expected = KOLMOGOROV_99 / (1000.0 + 0.12 + 0.11 / 1000.0);
        assert!((ks_critical_1pct(1_000_000) - expected).abs() < 1e-15);
    }

    #[test]
    fn calibration_interpolates() {
        let table = NullCalibration::from_g_values(vec![0.3, 0.5, 0.7, 0.9], 4, 6).unwrap();
        // grid 0.25, 0.40, 0.55, 0.70, 0.85, 1.00
        assert_eq!(table.survival(0.2), 1.0);
        assert_eq!(table.survival(0.25), 1.0);
        assert!((table.survival(0.4) - 0.75).abs() < 1e-12);
        assert!((table.survival(0.475) - 0.625).abs() < 1e-12);
        assert!((table.survival(0.775) - 0.25).abs() < 1e-12);
        assert_eq!(table.survival(1.0), 0.0);
        assert_eq!(table.resolution(), 0.25);
    }

    #[test]
    fn accuracy_resolution_guard() {
        let mut spec = AccuracySpec::new(NoiseFamily::Exp1, 50, 10_000, 0.05, 1, 1);
        spec.calibration_replicates = 100_000;
        assert!(matches!(
            pvalue_accuracy_experiment(&spec),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn heavy_tail_report_runs() {
        let c = heavy_tail_report(64, 2.5, vec![0.0, 2.0, 4.0], 2000, 4).unwrap();
        assert_eq!(c.len(), 3);
        assert!(heavy_tail_report(64, 2.0, vec![0.0], 2000, 4).is_err());
    }

    #[test]
    fn csv_columns() {
        let c = lemma31_curve(21, &[0.0, 1.0]).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("y,empirical,reference,ratio,stderr\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
