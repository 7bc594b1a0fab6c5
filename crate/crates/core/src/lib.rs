//! Periodicity screening for large collections of short time series.
//!
//! The pipeline computes each series' periodogram at the standard Fourier
//! frequencies, forms Fisher's g-statistic, converts it to a p-value with
//! Fisher's exact Gaussian null (or the Gumbel approximation of the
//! studentized maximum), and selects periodic series with the
//! Benjamini–Hochberg step-up rule.
//!
//! [`simgen`] generates synthetic cohorts and runs the screening simulation;
//! [`mdlab`] holds the Monte Carlo checks of the tail approximations.

mod dd;
pub mod error;
pub mod fdr;
pub mod gtest;
pub mod matrix;
pub mod mdlab;
pub mod screen;
pub mod simgen;
pub mod spectral;

pub use error::{Error, Result};
pub use fdr::{bh_select, bh_select_pvals, BhDecision, PValueVector};
pub use gtest::{
    fisher_exact_tail, g_statistic, g_test, g_test_with, gumbel_tail, FisherExactTail, GTestResult,
    NullTailMethod,
};
pub use matrix::{read_matrix, read_matrix_path, ExpressionMatrix, ReadOptions};
pub use mdlab::{
    empirical_tail_ratio, gaussian_null_oracle, lemma31_curve, pvalue_accuracy_experiment,
    AccuracyReport, AccuracySpec, NullOracleReport, RatioCurve, TailExperimentSpec, TailMode,
};
pub use screen::{screen, ScreenReport};
pub use simgen::{
    generate_cohort, sample_noise, simulate, table1_metrics, CohortSpec, Estimate, NoiseFamily,
    SelectionCell, SimulationConfig, SimulationReport,
};
pub use spectral::{
    dft_at_frequency, fourier_grid, periodogram, periodogram_mean, FrequencyGrid, Periodogram,
    PeriodogramPlan, SeriesSample,
};
