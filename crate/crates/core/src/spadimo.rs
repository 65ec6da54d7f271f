//! The eta-grid scan that turns a flagged case into a sparse set of
//! responsible variables.
//!
//! Starting from the sparsest setting, each grid step fits a SNIPLS model of
//! the case indicator on the weighted, centered data, flags the variables with
//! nonzero coefficients, drops their columns, and re-measures the outlyingness
//! of what is left of the case. The scan stops as soon as the reduced case
//! falls below the chi-squared cutoff.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxout::weighted_centered_design;
use crate::numerics::chi2_quantile;
use crate::robust::{
    detect_weights, outlyingness_sq, weighted_moments, CaseWeights, DataMatrix, Detector,
};
use crate::snipls::snipls_fit;

/// Tuning of a single explanation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpadimoConfig {
    pub grid_low: f64,
    pub grid_high: f64,
    pub grid_step: f64,
    /// Significance of the chi-squared stopping rule.
    pub alpha: f64,
    /// Significance of the hard-rejection rule used when case weights are
    /// recomputed on reduced data.
    pub detect_alpha: f64,
    pub h: usize,
    pub epsilon_weight: f64,
    pub refit_weights: bool,
}

impl Default for SpadimoConfig {
    fn default() -> Self {
        Self {
            grid_low: 0.1,
            grid_high: 0.9,
            grid_step: 0.05,
            alpha: 0.975,
            detect_alpha: 0.975,
            h: 1,
            epsilon_weight: 1e-4,
            refit_weights: true,
        }
    }
}

impl SpadimoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(0.0 <= self.grid_low && self.grid_low < self.grid_high && self.grid_high < 1.0) {
            return bad(format!(
                "grid bounds must satisfy 0 <= low < high < 1, got [{}, {}]",
                self.grid_low, self.grid_high
            ));
        }
        if !(self.grid_step > 0.0) {
            return bad(format!(
                "grid step must be positive, got {}",
                self.grid_step
            ));
        }
        for (name, a) in [("alpha", self.alpha), ("detect_alpha", self.detect_alpha)] {
            if !(a > 0.5 && a < 1.0) {
                return bad(format!("{name} must lie in (0.5, 1), got {a}"));
            }
        }
        if self.h == 0 {
            return bad("h must be at least 1".into());
        }
        if !(self.epsilon_weight > 0.0 && self.epsilon_weight <= 1.0) {
            return bad(format!(
                "epsilon weight must lie in (0, 1], got {}",
                self.epsilon_weight
            ));
        }
        Ok(())
    }

    /// Grid values from `grid_high` down to `grid_low`, rounded to 12
    /// decimals so that repeated subtraction does not drift.
    pub fn grid(&self) -> Vec<f64> {
        descending_grid(self.grid_low, self.grid_high, self.grid_step)
    }
}

pub(crate) fn descending_grid(low: f64, high: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let v = ((high - k as f64 * step) * 1e12).round() / 1e12;
        if v < low - 1e-9 {
            break;
        }
        out.push(v.max(0.0));
        k += 1;
    }
    out
}

/// Recommended starting configuration: scan from 0.9 when there are at least
/// five cases per variable, from 0.6 otherwise.
pub fn default_grid(n: usize, p: usize) -> SpadimoConfig {
    SpadimoConfig {
        grid_high: if n >= 5 * p { 0.9 } else { 0.6 },
        ..SpadimoConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn of(v: f64) -> Self {
        if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        }
    }
}

/// A variable flagged during the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedVariable {
    /// 0-based column index in the input data.
    pub column: usize,
    pub sign: Sign,
    pub coefficient: f64,
    /// Grid value at which the variable was flagged.
    pub eta: f64,
}

/// Outlyingness of the reduced case after one grid step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eta: f64,
    pub newly_flagged: Vec<usize>,
    pub remaining_columns: usize,
    pub effective_df: usize,
    pub outlyingness_sq: f64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    GridExhausted,
}

/// Grid value at which the sparse fit failed and was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedStep {
    pub eta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpadimoReport {
    pub case_index: usize,
    pub flagged: Vec<FlaggedVariable>,
    /// Grid value at which the stopping rule fired; `None` when the grid was
    /// exhausted first.
    pub selected_eta: Option<f64>,
    pub initial_outlyingness_sq: f64,
    pub initial_cutoff: f64,
    pub trace: Vec<TraceEntry>,
    pub skipped: Vec<SkippedStep>,
    pub terminated: Termination,
}

impl SpadimoReport {
    pub fn flagged_columns(&self) -> Vec<usize> {
        self.flagged.iter().map(|f| f.column).collect()
    }
}

/// Sparse directions of maximal outlyingness over a grid of eta values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseDirectionPath {
    /// Descending.
    pub etas: Vec<f64>,
    /// Unit-norm coefficient vectors, zero off the selected set. A fit that
    /// failed leaves an all-zero row.
    pub directions: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
    pub skipped: Vec<SkippedStep>,
}

fn indicator(n: usize, case: usize) -> DVector<f64> {
    let mut y = DVector::zeros(n);
    y[case] = 1.0;
    y
}

fn is_recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::EmptySelection { .. } | Error::ZeroCovariance | Error::DegenerateComponent { .. }
    )
}

/// Runs the eta-grid scan on case `case` of the standardized data `z`.
///
/// `w` are the detector's weights on the full data. The regression design is
/// built once from them, with a zero weight of the case raised to
/// `cfg.epsilon_weight`; removing flagged variables drops design columns.
/// When `cfg.refit_weights` is set the detector is rerun on every reduced data
/// set before measuring outlyingness; otherwise `w` is reused.
pub fn spadimo_explain(
    z: &DataMatrix,
    w: &CaseWeights,
    case: usize,
    cfg: &SpadimoConfig,
) -> Result<SpadimoReport> {
    cfg.validate()?;
    let (n, p) = (z.n(), z.p());
    if case >= n {
        return Err(Error::InvalidInput(format!(
            "case {case} out of range for {n} cases"
        )));
    }
    if w.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} weights for {n} cases",
            w.len()
        )));
    }

    let summary = weighted_moments(z, w)?;
    let initial_o2 = outlyingness_sq(&z.row(case), &summary)?;
    let initial_cutoff = chi2_quantile(cfg.alpha, summary.effective_df)?;
    if w.get(case) > 0.0 && initial_o2 < initial_cutoff {
        return Err(Error::NotOutlying {
            case,
            outlyingness_sq: initial_o2,
            cutoff: initial_cutoff,
        });
    }

    let design = weighted_centered_design(z, &w.with_floor_at(case, cfg.epsilon_weight)?);
    let y = indicator(n, case);

    let mut active: Vec<usize> = (0..p).collect();
    let mut flagged = Vec::new();
    let mut trace = Vec::new();
    let mut skipped = Vec::new();
    let mut selected_eta = None;

    for eta in cfg.grid() {
        let reduced_design = design.select_columns(active.iter());
        let model = match snipls_fit(&reduced_design, &y, cfg.h, eta) {
            Ok(m) => m,
            Err(e) if is_recoverable(&e) => {
                skipped.push(SkippedStep {
                    eta,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let newly: Vec<usize> = model.selected.iter().map(|&j| active[j]).collect();
        for &j in &model.selected {
            let coefficient = model.coefficients[j];
            flagged.push(FlaggedVariable {
                column: active[j],
                sign: Sign::of(coefficient),
                coefficient,
                eta,
            });
        }
        active.retain(|j| !newly.contains(j));
        if active.is_empty() {
            break;
        }

        let reduced = z.select_columns(&active)?;
        let weights = if cfg.refit_weights {
            detect_weights(&reduced, cfg.detect_alpha, &Detector::ConcentrationSteps)?
        } else {
            w.clone()
        };
        let summary = weighted_moments(&reduced, &weights)?;
        let o2 = outlyingness_sq(&reduced.row(case), &summary)?;
        let cutoff = chi2_quantile(cfg.alpha, summary.effective_df)?;
        trace.push(TraceEntry {
            eta,
            newly_flagged: newly,
            remaining_columns: active.len(),
            effective_df: summary.effective_df,
            outlyingness_sq: o2,
            cutoff,
        });
        if o2 < cutoff {
            selected_eta = Some(eta);
            break;
        }
    }

    Ok(SpadimoReport {
        case_index: case,
        flagged,
        selected_eta,
        initial_outlyingness_sq: initial_o2,
        initial_cutoff,
        trace,
        skipped,
        terminated: if selected_eta.is_some() {
            Termination::Converged
        } else {
            Termination::GridExhausted
        },
    })
}

/// Sparse direction of case `case` for each eta independently, on all
/// columns.
pub fn direction_path(
    z: &DataMatrix,
    w: &CaseWeights,
    case: usize,
    grid: &[f64],
    h: usize,
    epsilon_weight: f64,
) -> Result<SparseDirectionPath> {
    let n = z.n();
    if case >= n {
        return Err(Error::InvalidInput(format!(
            "case {case} out of range for {n} cases"
        )));
    }
    if let Some(eta) = grid.iter().find(|e| !(0.0..1.0).contains(*e)) {
        return Err(Error::InvalidInput(format!(
            "grid value {eta} outside [0, 1)"
        )));
    }
    let mut etas = grid.to_vec();
    etas.sort_by(|a, b| b.total_cmp(a));
    let design: DMatrix<f64> = weighted_centered_design(z, &w.with_floor_at(case, epsilon_weight)?);
    let y = indicator(n, case);

    let fits: Vec<Result<Vec<f64>>> = etas
        .par_iter()
        .map(|&eta| {
            snipls_fit(&design, &y, h, eta).map(|m| {
                let norm = m.coefficients.norm();
                m.coefficients.iter().map(|c| c / norm).collect()
            })
        })
        .collect();

    let mut directions = Vec::with_capacity(etas.len());
    let mut counts = Vec::with_capacity(etas.len());
    let mut skipped = Vec::new();
    for (eta, fit) in etas.iter().zip(fits) {
        match fit {
            Ok(d) => {
                counts.push(d.iter().filter(|&&v| v != 0.0).count());
                directions.push(d);
            }
            Err(e) if is_recoverable(&e) => {
                skipped.push(SkippedStep {
                    eta: *eta,
                    reason: e.to_string(),
                });
                counts.push(0);
                directions.push(vec![0.0; z.p()]);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SparseDirectionPath {
        etas,
        directions,
        counts,
        skipped,
    })
}
