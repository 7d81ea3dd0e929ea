//! Patch placement along the measurement line.
//!
//! Candidate near-edge positions `0, step, 2·step, …` up to `L − l` are
//! scored by the weighted modal coupling `Σ w_i K_i²`. A single patch takes
//! the exact argmax of the scan; several patches are chosen greedily with a
//! minimum clear gap between them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::modal::ModalModel;
use crate::piezo::{coupling_factor, CouplingResult, PatchGeometry, PiezoMaterial};

#[derive(Debug, Clone)]
pub struct PlacementProblem {
    pub model: ModalModel,
    /// Patch template; its `x_start` is ignored.
    pub patch: PatchGeometry,
    pub material: PiezoMaterial,
    /// Weight per 1-based mode index.
    pub mode_weights: BTreeMap<usize, f64>,
    /// Candidate pitch (m).
    pub step: f64,
    pub n_patches: usize,
    /// Clear distance required between neighbouring patches (m).
    pub min_gap: f64,
}

impl PlacementProblem {
    pub fn validate(&self) -> Result<()> {
        if self.mode_weights.is_empty() {
            return Err(Error::invalid("no mode weights given"));
        }
        for (&i, &w) in &self.mode_weights {
            self.model.mode(i)?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("weight of mode {i} must be >= 0, got {w}")));
            }
        }
        if !self.mode_weights.values().any(|&w| w > 0.0) {
            return Err(Error::invalid("at least one mode weight must be positive"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {}", self.step)));
        }
        if self.n_patches == 0 {
            return Err(Error::invalid("n_patches must be at least 1"));
        }
        if !(self.min_gap >= 0.0 && self.min_gap.is_finite()) {
            return Err(Error::invalid(format!("min_gap must be >= 0, got {}", self.min_gap)));
        }
        self.patch.at(0.0).validate()
    }

    /// Candidate near-edge positions, in ascending order.
    pub fn candidates(&self) -> Result<Vec<f64>> {
        let span = self.model.extent() - self.patch.length;
        let slack = 1e-9 * self.step;
        if span < -slack {
            return Err(Error::Placement(format!(
                "patch length {} m exceeds the structure length {} m",
                self.patch.length,
                self.model.extent()
            )));
        }
        let count = ((span + slack) / self.step).floor() as usize + 1;
        Ok((0..count).map(|k| (k as f64 * self.step).min(span.max(0.0))).collect())
    }

    /// Weighted mode indices in ascending order.
    pub fn modes(&self) -> Vec<usize> {
        self.mode_weights.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub x_start: f64,
    pub objective: f64,
    /// One entry per weighted mode, ordered by mode index.
    pub couplings: Vec<CouplingResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    /// Chosen near-edge positions, ascending.
    pub positions: Vec<f64>,
    /// Per position, one coupling per weighted mode.
    pub couplings: Vec<Vec<CouplingResult>>,
    pub objective: f64,
}

fn evaluate(problem: &PlacementProblem, x_start: f64) -> Result<ScanRow> {
    let patch = problem.patch.at(x_start);
    let mut objective = 0.0;
    let mut couplings = Vec::with_capacity(problem.mode_weights.len());
    for (&i, &w) in &problem.mode_weights {
        let c = coupling_factor(&problem.model, &patch, &problem.material, i)?;
        objective += w * c.k2;
        couplings.push(c);
    }
    Ok(ScanRow {
        x_start,
        objective,
        couplings,
    })
}

/// Objective at every candidate position, in candidate order.
pub fn scan_objective(problem: &PlacementProblem) -> Result<Vec<ScanRow>> {
    problem.validate()?;
    problem
        .candidates()?
        .into_iter()
        .map(|x| evaluate(problem, x))
        .collect()
}

/// Index of the best row; ties resolve to the smallest `x_start`.
fn argmax(rows: &[ScanRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, row) in rows.iter().enumerate() {
        match best {
            Some(b) if row.objective <= rows[b].objective => {}
            _ => best = Some(k),
        }
    }
    best
}

pub fn optimize_placement(problem: &PlacementProblem) -> Result<PlacementResult> {
    let rows = scan_objective(problem)?;
    optimize_from_scan(problem, &rows)
}

/// Selection step of [`optimize_placement`] on a precomputed scan.
pub fn optimize_from_scan(problem: &PlacementProblem, rows: &[ScanRow]) -> Result<PlacementResult> {
    if rows.is_empty() {
        return Err(Error::Placement("no candidate positions".into()));
    }
    let chosen: Vec<usize> = if problem.n_patches == 1 {
        vec![argmax(rows).expect("rows are non-empty")]
    } else {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        // descending objective, then ascending position
        order.sort_by(|&a, &b| {
            rows[b]
                .objective
                .total_cmp(&rows[a].objective)
                .then(rows[a].x_start.total_cmp(&rows[b].x_start))
        });
        let pitch = problem.patch.length + problem.min_gap;
        let tol = 1e-9 * problem.step;
        let mut picked: Vec<usize> = Vec::with_capacity(problem.n_patches);
        for k in order {
            if picked
                .iter()
                .all(|&p| (rows[p].x_start - rows[k].x_start).abs() >= pitch - tol)
            {
                picked.push(k);
                if picked.len() == problem.n_patches {
                    break;
                }
            }
        }
        if picked.len() < problem.n_patches {
            return Err(Error::Placement(format!(
                "only {} non-overlapping patch(es) fit, {} requested",
                picked.len(),
                problem.n_patches
            )));
        }
        picked.sort_by(|&a, &b| rows[a].x_start.total_cmp(&rows[b].x_start));
        picked
    };

    Ok(PlacementResult {
        positions: chosen.iter().map(|&k| rows[k].x_start).collect(),
        couplings: chosen.iter().map(|&k| rows[k].couplings.clone()).collect(),
        objective: chosen.iter().map(|&k| rows[k].objective).sum(),
    })
}
