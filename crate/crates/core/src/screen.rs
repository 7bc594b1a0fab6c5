//! Whole-matrix screening: per-gene g-test, then BH selection.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fdr::bh_select_pvals;
use crate::gtest::{g_test_with, FisherExactTail, GTestResult, NullTailMethod};
use crate::matrix::ExpressionMatrix;
use crate::spectral::PeriodogramPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneStatus {
    Ok,
    /// Constant row; no test statistic exists.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneRow {
    pub gene_id: String,
    pub g_stat: Option<f64>,
    pub y_stat: Option<f64>,
    pub p_exact: Option<f64>,
    pub p_gumbel: Option<f64>,
    pub rejected: bool,
    pub status: GeneStatus,
    #[serde(skip)]
    pub argmax_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenSummary {
    /// Genes in the input, degenerate ones included.
    pub genes: usize,
    /// Genes entering the BH step.
    pub tested: usize,
    pub degenerate: usize,
    pub n: usize,
    pub q: usize,
    pub theta: f64,
    pub method: NullTailMethod,
    pub i_theta: usize,
    pub p_threshold: Option<f64>,
    pub total_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenReport {
    pub summary: ScreenSummary,
    pub genes: Vec<GeneRow>,
}

fn is_constant(row: &[f64]) -> bool {
    row.iter().all(|&v| v == row[0])
}

/// Screens every row of `matrix` at FDR level `theta`.
///
/// Constant rows are reported as degenerate and excluded from the BH step.
pub fn screen(
    matrix: &ExpressionMatrix,
    theta: f64,
    method: NullTailMethod,
) -> Result<ScreenReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta = {theta} must lie in (0, 1)")));
    }
    let n = matrix.n();
    let tail = FisherExactTail::new(crate::spectral::grid_size(n))?;
    let results: Vec<Option<GTestResult>> = (0..matrix.genes())
        .into_par_iter()
        .map_init(
            || {
                (
                    PeriodogramPlan::new(n).expect("matrix guarantees n >= 3"),
                    Vec::new(),
                )
            },
            |(plan, ords), g| -> Result<Option<GTestResult>> {
                let row = matrix.row(g);
                if is_constant(row) {
                    return Ok(None);
                }
                plan.ordinates_into(row, ords)?;
                match g_test_with(&tail, ords, method) {
                    Ok(r) => Ok(Some(r)),
                    Err(Error::DegenerateInput) => Ok(None),
                    Err(e) => Err(e),
                }
            },
        )
        .collect::<Result<_>>()?;

    let tested_idx: Vec<usize> = (0..results.len())
        .filter(|&g| results[g].is_some())
        .collect();
    let pvals: Vec<f64> = tested_idx
        .iter()
        .map(|&g| results[g].as_ref().map_or(1.0, |r| r.p_value()))
        .collect();
    let mut rejected = vec![false; results.len()];
    let (i_theta, p_threshold) = if pvals.is_empty() {
        (0, None)
    } else {
        let d = bh_select_pvals(&pvals, theta)?;
        for &k in &d.rejected {
            rejected[tested_idx[k]] = true;
        }
        (d.i_theta, d.p_threshold)
    };

    let genes: Vec<GeneRow> = results
        .iter()
        .zip(matrix.ids())
        .zip(&rejected)
        .map(|((r, id), &rej)| GeneRow {
            gene_id: id.clone(),
            g_stat: r.map(|r| r.g),
            y_stat: r.map(|r| r.y),
            p_exact: r.map(|r| r.p_exact),
            p_gumbel: r.map(|r| r.p_gumbel),
            rejected: rej,
            status: if r.is_some() {
                GeneStatus::Ok
            } else {
                GeneStatus::Degenerate
            },
            argmax_index: r.map(|r| r.argmax_index),
        })
        .collect();
    let summary = ScreenSummary {
        genes: matrix.genes(),
        tested: tested_idx.len(),
        degenerate: matrix.genes() - tested_idx.len(),
        n,
        q: tail.q(),
        theta,
        method,
        i_theta,
        p_threshold,
        total_rejected: rejected.iter().filter(|&&r| r).count(),
    };
    Ok(ScreenReport { summary, genes })
}

/// 17 significant digits, locale independent.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

impl ScreenReport {
    /// Gene table, a blank line, then `field,value` summary rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "gene_id", "g_stat", "y_stat", "p_exact", "p_gumbel", "rejected", "status",
        ])
        .map_err(io)?;
        for row in &self.genes {
            w.write_record([
                row.gene_id.clone(),
                opt_real(row.g_stat),
                opt_real(row.y_stat),
                opt_real(row.p_exact),
                opt_real(row.p_gumbel),
                (row.rejected as u8).to_string(),
                match row.status {
                    GeneStatus::Ok => "ok".to_string(),
                    GeneStatus::Degenerate => "degenerate".to_string(),
                },
            ])
            .map_err(io)?;
        }
        let s = &self.summary;
        let summary = [
            ("G", s.tested.to_string()),
            ("n", s.n.to_string()),
            ("q", s.q.to_string()),
            ("theta", format_real(s.theta)),
            ("i_theta", s.i_theta.to_string()),
            ("p_threshold", opt_real(s.p_threshold)),
            ("total_rejected", s.total_rejected.to_string()),
            ("genes", s.genes.to_string()),
            ("degenerate", s.degenerate.to_string()),
            ("method", s.method.to_string()),
        ];
        let mut bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        bytes.extend_from_slice(b"\nfield,value\n");
        let mut text = String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?;
        for (k, v) in summary {
            text.push_str(&format!("{k},{v}\n"));
        }
        Ok(text)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}
