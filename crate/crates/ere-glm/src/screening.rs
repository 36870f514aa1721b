//! Marginal screening: per-column maximum marginal likelihood estimates,
//! absolute-value thresholding, and BIC-guided threshold selection.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::fit::{bic, fit_mle_with, newton_on_matrix, NewtonOptions};

/// One marginal (intercept, slope) fit of the response on a single column.
#[derive(Debug, Clone, Copy)]
pub struct MarginalFit {
    pub intercept: f64,
    pub slope: f64,
    pub converged: bool,
    /// Constant column: the slope is pinned at zero.
    pub degenerate: bool,
}

/// One evaluated threshold candidate.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCandidate {
    pub threshold: f64,
    /// Fitted model size (screened columns plus any forced-in columns).
    pub size: usize,
    pub bic: f64,
}

/// Output of the screening stage.
#[derive(Debug, Clone)]
pub struct ScreenResult {
    /// Marginal slope estimates, one per column.
    pub mmle: Vec<f64>,
    /// Marginal intercepts, one per column.
    pub intercepts: Vec<f64>,
    /// Per-column fit flags.
    pub flags: Vec<MarginalFit>,
    /// Selected column indices `{j : |mmle_j| ≥ threshold}`.
    pub selected: Vec<usize>,
    /// The chosen threshold γ.
    pub threshold: f64,
    /// (threshold, model size, BIC) for every feasible grid point.
    pub bic_trace: Vec<ThresholdCandidate>,
    /// Grid points dropped for infeasibility (screened fit would not be
    /// computable).
    pub dropped_thresholds: Vec<f64>,
}

/// Two-parameter (intercept + slope) marginal GLM fit of the response on
/// column `j`. A constant column yields slope 0 with the degenerate flag
/// raised; non-convergence is flagged, not an error.
pub fn marginal_mmle(data: &Dataset, j: usize, family: &GlmFamily) -> Result<MarginalFit> {
    if j >= data.p() {
        return Err(Error::InvalidConfig(format!("column index {j} out of range")));
    }
    let n = data.n();
    let col = data.x.column(j);
    let mean = col.mean();
    let constant = col.iter().all(|&v| (v - mean).abs() < 1e-12 * mean.abs().max(1.0));

    let opts = NewtonOptions::default();
    if constant {
        let ones = nalgebra::DMatrix::from_element(n, 1, 1.0);
        let out = newton_on_matrix(&ones, &data.y, family, &opts)?;
        return Ok(MarginalFit {
            intercept: out.beta[0],
            slope: 0.0,
            converged: out.converged,
            degenerate: true,
        });
    }

    let mut design = nalgebra::DMatrix::from_element(n, 2, 1.0);
    design.set_column(1, &col);
    let out = newton_on_matrix(&design, &data.y, family, &opts)?;
    Ok(MarginalFit {
        intercept: out.beta[0],
        slope: out.beta[1],
        converged: out.converged,
        degenerate: false,
    })
}

/// Marginal fits for every column, computed in parallel and assembled in
/// column order.
pub fn marginal_mmle_all(data: &Dataset, family: &GlmFamily) -> Result<Vec<MarginalFit>> {
    (0..data.p())
        .into_par_iter()
        .map(|j| marginal_mmle(data, j, family))
        .collect()
}

/// Exact thresholding by absolute value: `{j : |mmle_j| ≥ gamma}`.
/// Ties at the threshold are included.
pub fn screen(mmle: &[f64], gamma: f64) -> Vec<usize> {
    mmle.iter()
        .enumerate()
        .filter(|(_, &m)| m.abs() >= gamma)
        .map(|(j, _)| j)
        .collect()
}

/// Default threshold grid: 20 logarithmically spaced points between the
/// smallest magnitude that keeps the screened fit at a moderate size
/// (at most n/2 columns, see module notes) and the 90th percentile of the
/// |mmle| values.
pub fn default_threshold_grid(mmle: &[f64], n: usize) -> Vec<f64> {
    let mut abs: Vec<f64> = mmle.iter().map(|m| m.abs()).filter(|a| a.is_finite()).collect();
    if abs.is_empty() {
        return vec![0.0];
    }
    abs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cap = (n / 2).max(1).min(abs.len());
    let lower = abs[cap - 1];
    // 90th percentile of |mmle| = the value with 10% of the (descending) list above it
    let q90 = abs[(((abs.len() as f64) * 0.10).floor() as usize).min(abs.len() - 1)];
    let upper = q90.max(lower);
    if upper <= 0.0 {
        return vec![0.0];
    }
    let lower = lower.max(upper * 1e-6);
    if (upper - lower) / upper < 1e-12 {
        return vec![lower];
    }
    let k = 20;
    let (l0, l1) = (lower.ln(), upper.ln());
    let mut grid: Vec<f64> = (0..k)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (k - 1) as f64).exp())
        .collect();
    grid.dedup();
    grid
}

/// Grid-search threshold selection. For every feasible grid point the
/// response is refit by unpenalized MLE on the screened set (plus any
/// `always_include` columns, e.g. an intercept) and its BIC recorded; the
/// selected threshold is the smallest one whose BIC is within one standard
/// error (sd over the grid divided by √grid-size) of the minimum, which
/// keeps more columns and protects the screening stage against false
/// negatives.
pub fn select_threshold(
    data: &Dataset,
    mmle: &[f64],
    grid: &[f64],
    family: &GlmFamily,
    always_include: &[usize],
) -> Result<(f64, Vec<ThresholdCandidate>, Vec<f64>)> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("threshold grid is empty".into()));
    }
    let n = data.n();

    let evaluated: Vec<(f64, std::result::Result<ThresholdCandidate, f64>)> = grid
        .par_iter()
        .map(|&gamma| {
            let mut support = screen(mmle, gamma);
            for &j in always_include {
                if !support.contains(&j) {
                    support.push(j);
                }
            }
            support.sort_unstable();
            if support.len() >= n {
                return (gamma, Err(gamma));
            }
            match fit_mle_with(data, &support, family, &NewtonOptions::default()) {
                Ok(fit) => (
                    gamma,
                    Ok(ThresholdCandidate {
                        threshold: gamma,
                        size: support.len(),
                        bic: bic(data, &fit, family),
                    }),
                ),
                Err(_) => (gamma, Err(gamma)),
            }
        })
        .collect();

    let mut trace = Vec::new();
    let mut dropped = Vec::new();
    for (_, item) in evaluated {
        match item {
            Ok(c) => trace.push(c),
            Err(g) => dropped.push(g),
        }
    }
    if trace.is_empty() {
        return Err(Error::InvalidConfig(
            "no feasible threshold in the grid (every screened fit was too large or failed)".into(),
        ));
    }

    let min_bic = trace.iter().map(|c| c.bic).fold(f64::INFINITY, f64::min);
    let se = if trace.len() > 1 {
        let mean = trace.iter().map(|c| c.bic).sum::<f64>() / trace.len() as f64;
        let var = trace.iter().map(|c| (c.bic - mean).powi(2)).sum::<f64>() / (trace.len() - 1) as f64;
        (var / trace.len() as f64).sqrt()
    } else {
        0.0
    };
    let chosen = trace
        .iter()
        .filter(|c| c.bic <= min_bic + se)
        .map(|c| c.threshold)
        .fold(f64::INFINITY, f64::min);

    Ok((chosen, trace, dropped))
}

/// Full screening pass: marginal fits, default or supplied grid, threshold
/// selection (or a fixed override), and the final selected set.
pub fn screen_dataset(
    data: &Dataset,
    family: &GlmFamily,
    grid: Option<&[f64]>,
    threshold_override: Option<f64>,
    always_include: &[usize],
) -> Result<ScreenResult> {
    let flags = marginal_mmle_all(data, family)?;
    let mmle: Vec<f64> = flags.iter().map(|f| f.slope).collect();
    let intercepts: Vec<f64> = flags.iter().map(|f| f.intercept).collect();

    let (threshold, bic_trace, dropped) = match threshold_override {
        Some(gamma) => {
            if !(gamma >= 0.0) {
                return Err(Error::InvalidConfig(format!("threshold must be ≥ 0, got {gamma}")));
            }
            (gamma, Vec::new(), Vec::new())
        }
        None => {
            let default_grid;
            let grid = match grid {
                Some(g) => g,
                None => {
                    default_grid = default_threshold_grid(&mmle, data.n());
                    &default_grid
                }
            };
            select_threshold(data, &mmle, grid, family, always_include)?
        }
    };

    let selected = screen(&mmle, threshold);
    if selected.len() + always_include.len() >= data.n() {
        return Err(Error::InvalidConfig(format!(
            "screened set of {} columns is not below n = {}",
            selected.len(),
            data.n()
        )));
    }

    Ok(ScreenResult { mmle, intercepts, flags, selected, threshold, bic_trace, dropped_thresholds: dropped })
}
