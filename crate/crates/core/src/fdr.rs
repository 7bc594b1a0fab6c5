//! Benjamini–Hochberg step-up selection.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Per-gene p-values with parallel identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    pvals: Vec<f64>,
    gene_ids: Vec<String>,
}

impl PValueVector {
    pub fn new(pvals: Vec<f64>, gene_ids: Vec<String>) -> Result<Self> {
        if pvals.len() != gene_ids.len() {
            return Err(invalid(format!(
                "{} p-values but {} gene ids",
                pvals.len(),
                gene_ids.len()
            )));
        }
        check_pvals(&pvals)?;
        Ok(PValueVector { pvals, gene_ids })
    }

    /// Identifiers default to the 1-based position.
    pub fn from_pvals(pvals: Vec<f64>) -> Result<Self> {
        let gene_ids = (1..=pvals.len()).map(|i| i.to_string()).collect();
        PValueVector::new(pvals, gene_ids)
    }

    pub fn pvals(&self) -> &[f64] {
        &self.pvals
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn len(&self) -> usize {
        self.pvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvals.is_empty()
    }
}

fn check_pvals(pvals: &[f64]) -> Result<()> {
    for (i, &p) in pvals.iter().enumerate() {
        if p.is_nan() {
            return Err(invalid(format!("p-value {} is NaN", i + 1)));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!(
                "p-value {} = {p} is outside [0, 1]",
                i + 1
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BhDecision {
    pub theta: f64,
    /// Largest `i` with `P_(i) <= i·θ/G`; 0 when nothing qualifies.
    pub i_theta: usize,
    /// `P_(i_θ)`, absent when `i_theta == 0`.
    pub p_threshold: Option<f64>,
    /// 0-based indices of rejected hypotheses, ascending.
    pub rejected: Vec<usize>,
}

impl BhDecision {
    pub fn is_rejected(&self, index: usize) -> bool {
        self.rejected.binary_search(&index).is_ok()
    }
}

pub fn bh_select(pv: &PValueVector, theta: f64) -> Result<BhDecision> {
    bh_select_pvals(pv.pvals(), theta)
}

/// [`bh_select`] on a bare slice of p-values.
pub fn bh_select_pvals(pvals: &[f64], theta: f64) -> Result<BhDecision> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta = {theta} must lie in (0, 1)")));
    }
    if pvals.is_empty() {
        return Err(invalid("need at least one p-value"));
    }
    check_pvals(pvals)?;

    let g = pvals.len();
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));

    let i_theta = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(rank, &idx)| pvals[idx] <= (rank + 1) as f64 * theta / g as f64)
        .map_or(0, |(rank, _)| rank + 1);

    if i_theta == 0 {
        return Ok(BhDecision {
            theta,
            i_theta,
            p_threshold: None,
            rejected: Vec::new(),
        });
    }
    let threshold = pvals[order[i_theta - 1]];
    let rejected = (0..g).filter(|&i| pvals[i] <= threshold).collect();
    Ok(BhDecision {
        theta,
        i_theta,
        p_threshold: Some(threshold),
        rejected,
    })
}
