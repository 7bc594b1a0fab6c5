//! Synthetic expression cohorts and the replicated screening simulation.
//!
//! Periodic genes follow `Y_t = β(cos ωt + sin ωt) + ε_t`, the rest are pure
//! noise. Every noise family has unit variance; the skewed families are not
//! centred because the periodogram at non-zero frequencies ignores the mean.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fdr::{bh_select_pvals, BhDecision};
use crate::gtest::{g_test_with, FisherExactTail, NullTailMethod};
use crate::matrix::ExpressionMatrix;
use crate::spectral::{PeriodogramPlan, MIN_LEN};

/// Unit-variance noise families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// N(0, 1).
    Normal01,
    /// `sqrt(3/5) · t(5)`.
    ScaledT5,
    /// EXP(1), mean 1.
    Exp1,
    /// `χ²(2) / 2`, mean 1.
    HalfChiSq2,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 4] = [
        NoiseFamily::Normal01,
        NoiseFamily::Exp1,
        NoiseFamily::HalfChiSq2,
        NoiseFamily::ScaledT5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Normal01 => "normal",
            NoiseFamily::ScaledT5 => "t5",
            NoiseFamily::Exp1 => "exp1",
            NoiseFamily::HalfChiSq2 => "chisq2",
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" | "normal01" => Ok(NoiseFamily::Normal01),
            "t5" | "t" | "scaled-t5" => Ok(NoiseFamily::ScaledT5),
            "exp1" | "exp" | "exponential" => Ok(NoiseFamily::Exp1),
            "chisq2" | "chi2" | "chisq" | "half-chisq2" => Ok(NoiseFamily::HalfChiSq2),
            other => Err(invalid(format!("unknown noise family '{other}'"))),
        }
    }
}

impl Distribution<f64> for NoiseFamily {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Normal01 => rng.sample(StandardNormal),
            NoiseFamily::ScaledT5 => {
                let t = StudentT::new(5.0).expect("valid dof");
                (3.0f64 / 5.0).sqrt() * t.sample(rng)
            }
            NoiseFamily::Exp1 => rng.sample(Exp1),
            NoiseFamily::HalfChiSq2 => {
                let chi = ChiSquared::new(2.0).expect("valid dof");
                0.5 * chi.sample(rng)
            }
        }
    }
}

pub fn sample_noise<R: Rng + ?Sized>(family: NoiseFamily, rng: &mut R) -> f64 {
    family.sample(rng)
}

/// Single-gene model `μ + β cos(ωt + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneModelSpec {
    pub mu: f64,
    pub beta: f64,
    pub omega: f64,
    pub phi: f64,
}

impl GeneModelSpec {
    pub fn new(mu: f64, beta: f64, omega: f64, phi: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("mu must be finite"));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(invalid("beta must be finite and non-negative"));
        }
        if !(omega > 0.0 && omega < PI) {
            return Err(invalid("omega must lie in (0, pi)"));
        }
        if !(phi > -PI && phi <= PI) {
            return Err(invalid("phi must lie in (-pi, pi]"));
        }
        Ok(GeneModelSpec {
            mu,
            beta,
            omega,
            phi,
        })
    }

    /// Noise-free mean at time `t` (1-based).
    pub fn mean_at(&self, t: usize) -> f64 {
        self.mu + self.beta * (self.omega * t as f64 + self.phi).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CohortSpec {
    pub genes: usize,
    pub n: usize,
    pub periodic_count: usize,
    pub beta: f64,
    pub omega: f64,
    pub noise: NoiseFamily,
    pub seed: u64,
}

impl CohortSpec {
    /// 2000 genes, 100 periodic, `β = 1`, `ω = 2π/10`.
    pub fn reference_design(n: usize, noise: NoiseFamily, seed: u64) -> Self {
        CohortSpec {
            genes: 2000,
            n,
            periodic_count: 100,
            beta: 1.0,
            omega: 2.0 * PI / 10.0,
            noise,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.genes == 0 {
            return Err(invalid("cohort needs at least one gene"));
        }
        if self.n < MIN_LEN {
            return Err(invalid(format!(
                "n = {} is below the minimum of {MIN_LEN}",
                self.n
            )));
        }
        if self.periodic_count > self.genes {
            return Err(invalid("periodic_count exceeds the number of genes"));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid("beta must be finite and non-negative"));
        }
        if !self.omega.is_finite() {
            return Err(invalid("omega must be finite"));
        }
        Ok(())
    }
}

/// Expression matrix plus ground-truth periodicity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub matrix: ExpressionMatrix,
    pub truth: Vec<bool>,
}

/// Deterministic 64-bit mixing of a master seed with stream coordinates.
pub fn mix64(seed: u64, gene: u64, replicate: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ gene);
    splitmix64(h ^ replicate.rotate_left(32))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for one `(gene, replicate)` substream.
pub fn substream(seed: u64, gene: u64, replicate: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed, gene, replicate))
}

pub fn gene_id(index: usize) -> String {
    format!("gene{:05}", index + 1)
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    generate_replicate(spec, 0)
}

/// Cohort for one replicate; rows depend only on `(seed, gene, replicate)`.
pub fn generate_replicate(spec: &CohortSpec, replicate: u64) -> Result<Cohort> {
    build_cohort(spec, replicate, true)
}

fn build_cohort(spec: &CohortSpec, replicate: u64, with_noise: bool) -> Result<Cohort> {
    spec.validate()?;
    let n = spec.n;
    let signal: Vec<f64> = (1..=n)
        .map(|t| {
            let a = spec.omega * t as f64;
            spec.beta * (a.cos() + a.sin())
        })
        .collect();
    let mut values = vec![0.0; spec.genes * n];
    values.par_chunks_mut(n).enumerate().for_each(|(g, row)| {
        if with_noise {
            let mut rng = substream(spec.seed, g as u64, replicate);
            for v in row.iter_mut() {
                *v = spec.noise.sample(&mut rng);
            }
        }
        if g < spec.periodic_count {
            for (v, s) in row.iter_mut().zip(&signal) {
                *v += s;
            }
        }
    });
    let ids = (0..spec.genes).map(gene_id).collect();
    let truth = (0..spec.genes).map(|g| g < spec.periodic_count).collect();
    Ok(Cohort {
        matrix: ExpressionMatrix::new(ids, n, values)?,
        truth,
    })
}

/// Metrics of one screened replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateMetrics {
    /// Number of rejections.
    pub tot: usize,
    /// True periodic genes among the rejections.
    pub pos: usize,
    /// False discovery proportion, 0 for an empty rejection set.
    pub fdp: f64,
    /// True periodic genes among the `top` smallest p-values.
    pub z: usize,
}

/// Tot, Pos, FDP and Z for one replicate. Z ranks p-values ascending with
/// ties broken by gene index.
pub fn table1_metrics(
    decision: &BhDecision,
    truth: &[bool],
    pvalues: &[f64],
    top: usize,
) -> Result<ReplicateMetrics> {
    if truth.len() != pvalues.len() {
        return Err(invalid(format!(
            "{} truth flags but {} p-values",
            truth.len(),
            pvalues.len()
        )));
    }
    if decision.rejected.iter().any(|&i| i >= truth.len()) {
        return Err(invalid("rejected index out of range"));
    }
    let tot = decision.rejected.len();
    let pos = decision.rejected.iter().filter(|&&i| truth[i]).count();
    let fdp = (tot - pos) as f64 / tot.max(1) as f64;
    let mut order: Vec<usize> = (0..pvalues.len()).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let z = order.iter().take(top).filter(|&&i| truth[i]).count();
    Ok(ReplicateMetrics { tot, pos, fdp, z })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub cohort: CohortSpec,
    pub thetas: Vec<f64>,
    pub replicates: usize,
    pub method: NullTailMethod,
    /// Rank cut-off for the Z metric.
    pub top: usize,
}

impl SimulationConfig {
    pub fn reference(n: usize, noise: NoiseFamily, seed: u64) -> Self {
        SimulationConfig {
            cohort: CohortSpec::reference_design(n, noise, seed),
            thetas: vec![0.15, 0.05],
            replicates: 100,
            method: NullTailMethod::FisherExact,
            top: 100,
        }
    }
}

/// Mean and Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        if xs.len() < 2 {
            return Estimate { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Estimate {
            mean,
            stderr: (var / m).sqrt(),
        }
    }
}

/// One `(θ, noise, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionCell {
    pub theta: f64,
    pub tot: Estimate,
    pub pos: Estimate,
    /// Mean per-replicate FDP; `None` when the cohort has no periodic signal.
    pub efdr: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub cells: Vec<SelectionCell>,
    /// Mean Z; `None` when the cohort has no periodic signal.
    pub z: Option<Estimate>,
    pub degenerate_genes: usize,
    /// Per-replicate metrics, indexed `[replicate][theta]`.
    #[serde(skip)]
    pub per_replicate: Vec<Vec<ReplicateMetrics>>,
}

impl SimulationReport {
    pub fn cell(&self, theta: f64) -> Option<&SelectionCell> {
        self.cells.iter().find(|c| c.theta == theta)
    }
}

struct ReplicateOutcome {
    metrics: Vec<ReplicateMetrics>,
    degenerate: usize,
}

/// Runs `replicates` cohorts through g-test and BH selection.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport> {
    let spec = &config.cohort;
    spec.validate()?;
    if config.replicates == 0 {
        return Err(invalid("replicates must be positive"));
    }
    if config.thetas.is_empty() {
        return Err(invalid("at least one theta is required"));
    }
    for &t in &config.thetas {
        if !(t > 0.0 && t < 1.0) {
            return Err(invalid(format!("theta = {t} must lie in (0, 1)")));
        }
    }
    let signal_present = spec.beta > 0.0 && spec.periodic_count > 0;
    let tail = FisherExactTail::new(crate::spectral::grid_size(spec.n))?;

    let outcomes: Vec<ReplicateOutcome> = (0..config.replicates as u64)
        .into_par_iter()
        .map_init(
            || {
                (
                    PeriodogramPlan::new(spec.n).expect("validated n"),
                    Vec::new(),
                )
            },
            |(plan, ords), r| -> Result<ReplicateOutcome> {
                let cohort = generate_replicate(spec, r)?;
                let mut pvalues = Vec::with_capacity(spec.genes);
                let mut degenerate = 0;
                for row in cohort.matrix.rows() {
                    plan.ordinates_into(row, ords)?;
                    match g_test_with(&tail, ords, config.method) {
                        Ok(res) => pvalues.push(res.p_value()),
                        Err(Error::DegenerateInput) => {
                            degenerate += 1;
                            pvalues.push(1.0);
                        }
                        Err(e) => return Err(e),
                    }
                }
                let truth: Vec<bool> = if signal_present {
                    cohort.truth
                } else {
                    vec![false; spec.genes]
                };
                let metrics = config
                    .thetas
                    .iter()
                    .map(|&theta| {
                        let d = bh_select_pvals(&pvalues, theta)?;
                        table1_metrics(&d, &truth, &pvalues, config.top)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ReplicateOutcome {
                    metrics,
                    degenerate,
                })
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let column = |k: usize, f: &dyn Fn(&ReplicateMetrics) -> f64| -> Vec<f64> {
        outcomes.iter().map(|o| f(&o.metrics[k])).collect()
    };
    let cells = config
        .thetas
        .iter()
        .enumerate()
        .map(|(k, &theta)| SelectionCell {
            theta,
            tot: Estimate::from_samples(&column(k, &|m| m.tot as f64)),
            pos: Estimate::from_samples(&column(k, &|m| m.pos as f64)),
            efdr: signal_present.then(|| Estimate::from_samples(&column(k, &|m| m.fdp))),
        })
        .collect();
    let z = signal_present.then(|| Estimate::from_samples(&column(0, &|m| m.z as f64)));
    Ok(SimulationReport {
        config: config.clone(),
        cells,
        z,
        degenerate_genes: outcomes.iter().map(|o| o.degenerate).sum(),
        per_replicate: outcomes.into_iter().map(|o| o.metrics).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtest::g_statistic;
    use crate::spectral::{periodogram, SeriesSample};

    fn small_spec(seed: u64) -> CohortSpec {
        CohortSpec {
            genes: 40,
            n: 20,
            periodic_count: 5,
            beta: 1.0,
            omega: 2.0 * PI / 10.0,
            noise: NoiseFamily::Normal01,
            seed,
        }
    }

    fn draws(family: NoiseFamily, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| sample_noise(family, &mut rng)).collect()
    }

    #[test]
    fn noise_families_have_unit_variance() {
        for family in NoiseFamily::ALL {
            let xs = draws(family, 1_000_000, 11);
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            let (lo, hi) = match family {
                NoiseFamily::ScaledT5 | NoiseFamily::HalfChiSq2 => (0.97, 1.03),
                _ => (0.99, 1.01),
            };
            assert!(var >= lo && var <= hi, "{family}: variance {var}");
        }
    }

    #[test]
    fn exp1_mean() {
        let xs = draws(NoiseFamily::Exp1, 1_000_000, 5);
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((0.997..=1.003).contains(&m), "{m}");
    }

    #[test]
    fn same_seed_same_draws() {
        for family in NoiseFamily::ALL {
            assert_eq!(draws(family, 100, 3), draws(family, 100, 3));
            assert_ne!(draws(family, 100, 3), draws(family, 100, 4));
        }
    }

    #[test]
    fn family_names_round_trip() {
        for family in NoiseFamily::ALL {
            assert_eq!(family.name().parse::<NoiseFamily>().unwrap(), family);
        }
        assert!("cauchy".parse::<NoiseFamily>().is_err());
    }

    #[test]
    fn gene_model_matches_cos_plus_sin() {
        let beta = 1.3;
        let omega = 2.0 * PI / 10.0;
        let m = GeneModelSpec::new(0.0, beta * 2f64.sqrt(), omega, -PI / 4.0).unwrap();
        for t in 1..=50 {
            let a = omega * t as f64;
            assert!((m.mean_at(t) - beta * (a.cos() + a.sin())).abs() < 1e-12);
        }
        assert!(GeneModelSpec::new(0.0, -1.0, 1.0, 0.0).is_err());
        assert!(GeneModelSpec::new(0.0, 1.0, PI, 0.0).is_err());
        assert!(GeneModelSpec::new(0.0, 1.0, 1.0, -PI).is_err());
    }

    #[test]
    fn cohort_is_reproducible() {
        let a = generate_cohort(&small_spec(9)).unwrap();
        let b = generate_cohort(&small_spec(9)).unwrap();
        assert_eq!(a, b);
        let c = generate_cohort(&small_spec(10)).unwrap();
        assert_ne!(a.matrix, c.matrix);
        assert_ne!(
            generate_replicate(&small_spec(9), 1).unwrap().matrix,
            a.matrix
        );
    }

    #[test]
    fn rows_do_not_depend_on_cohort_size() {
        let small = generate_cohort(&small_spec(1)).unwrap();
        let big = generate_cohort(&CohortSpec {
            genes: 400,
            ..small_spec(1)
        })
        .unwrap();
        for g in 0..40 {
            assert_eq!(small.matrix.row(g), big.matrix.row(g));
        }
    }

    #[test]
    fn zero_beta_is_pure_noise() {
        let spec = CohortSpec {
            beta: 0.0,
            ..small_spec(2)
        };
        let cohort = generate_cohort(&spec).unwrap();
        assert_eq!(cohort.truth.iter().filter(|&&t| t).count(), 5);
        for g in 0..spec.genes {
            let mut rng = substream(spec.seed, g as u64, 0);
            let expected: Vec<f64> = (0..spec.n).map(|_| spec.noise.sample(&mut rng)).collect();
            assert_eq!(cohort.matrix.row(g), expected.as_slice());
        }
    }

    #[test]
    fn noiseless_on_grid_rows_have_g_one() {
        for n in [20usize, 50] {
            let spec = CohortSpec {
                n,
                beta: 2.0,
                ..small_spec(0)
            };
            let cohort = build_cohort(&spec, 0, false).unwrap();
            for g in 0..spec.periodic_count {
                let p = periodogram(&SeriesSample::new(cohort.matrix.row(g).to_vec()).unwrap());
                let (gstat, j) = g_statistic(&p).unwrap();
                assert!((gstat - 1.0).abs() < 1e-9, "n={n}: g={gstat}");
                assert_eq!(j, n / 10);
            }
            assert!(cohort
                .matrix
                .row(spec.periodic_count)
                .iter()
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn invalid_cohort_specs() {
        let base = small_spec(0);
        for bad in [
            CohortSpec { genes: 0, ..base },
            CohortSpec { n: 2, ..base },
            CohortSpec {
                periodic_count: 41,
                ..base
            },
            CohortSpec { beta: -1.0, ..base },
            CohortSpec {
                omega: f64::NAN,
                ..base
            },
        ] {
            assert!(generate_cohort(&bad).is_err());
        }
    }

    #[test]
    fn metrics_edge_cases() {
        let truth: Vec<bool> = (0..200).map(|i| i < 100).collect();
        let empty = BhDecision {
            theta: 0.05,
            i_theta: 0,
            p_threshold: None,
            rejected: vec![],
        };
        let p = vec![0.5; 200];
        let m = table1_metrics(&empty, &truth, &p, 100).unwrap();
        assert_eq!((m.tot, m.pos, m.fdp), (0, 0, 0.0));

        let pvals: Vec<f64> = (0..200).map(|i| if i < 100 { 0.0 } else { 0.9 }).collect();
        let d = bh_select_pvals(&pvals, 0.05).unwrap();
        let m = table1_metrics(&d, &truth, &pvals, 100).unwrap();
        assert_eq!((m.tot, m.pos, m.fdp, m.z), (100, 100, 0.0, 100));

        assert!(table1_metrics(&d, &truth[..10], &pvals, 100).is_err());
    }

    #[test]
    fn z_breaks_ties_by_gene_index() {
        let truth = vec![false, true, true];
        let pvals = vec![0.1, 0.1, 0.1];
        let d = bh_select_pvals(&pvals, 0.05).unwrap();
        assert_eq!(table1_metrics(&d, &truth, &pvals, 1).unwrap().z, 0);
        assert_eq!(table1_metrics(&d, &truth, &pvals, 2).unwrap().z, 1);
    }

    #[test]
    fn strong_signal_is_always_found() {
        let mut config = SimulationConfig::reference(50, NoiseFamily::Normal01, 77);
        config.cohort.beta = 10.0;
        config.thetas = vec![0.05];
        config.replicates = 100;
        let report = simulate(&config).unwrap();
        let complete = report
            .per_replicate
            .iter()
            .filter(|m| m[0].pos == 100)
            .count();
        assert!(
            complete >= 99,
            "{complete} of 100 replicates found every periodic gene"
        );
    }

    #[test]
    fn null_simulation_has_no_efdr() {
        let mut config = SimulationConfig::reference(20, NoiseFamily::Normal01, 5);
        config.cohort.beta = 0.0;
        config.replicates = 4;
        let report = simulate(&config).unwrap();
        assert!(report.z.is_none());
        for cell in &report.cells {
            assert!(cell.efdr.is_none());
            assert_eq!(cell.pos.mean, 0.0);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let mut config = SimulationConfig::reference(20, NoiseFamily::Exp1, 5);
        config.cohort.genes = 300;
        config.cohort.periodic_count = 30;
        config.top = 30;
        config.replicates = 6;
        assert_eq!(simulate(&config).unwrap(), simulate(&config).unwrap());
    }
}
