//! End-to-end analysis on user data: CSV ingestion, standardization and
//! intercept handling, screening, partially penalized fits per target
//! modality, and the final inference report.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModalityPartition};
use crate::entropy::estimate_ere;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::inference::infer;
use crate::penalized::{default_lambda_grid, select_lambda, PenalizedProblem};
use crate::penalty::{PenaltyConfig, PenaltyKind};
use crate::screening::screen_dataset;

/// One modality in the user-facing configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalitySpec {
    pub name: String,
    pub columns: Vec<String>,
}

/// The JSON configuration mapping a response column and named modalities
/// onto CSV columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalityMap {
    pub response: String,
    pub modalities: Vec<ModalitySpec>,
}

impl ModalityMap {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(std::io::BufReader::new(file))
    }
}

/// Analysis knobs for [`run_analysis`].
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub family: GlmFamily,
    /// Target modality names; empty means every modality.
    pub targets: Vec<String>,
    pub alpha: f64,
    pub one_sided: bool,
    pub threshold: Option<f64>,
    pub threshold_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub penalty_kind: PenaltyKind,
    /// Center and scale columns before fitting (coefficients and Ĥ are then
    /// on the standardized scale; the flag is recorded in the report).
    pub standardize: bool,
    /// Include an unpenalized intercept that belongs to no modality.
    pub intercept: bool,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            family: GlmFamily::gaussian(),
            targets: Vec::new(),
            alpha: 0.05,
            one_sided: false,
            threshold: None,
            threshold_grid: None,
            lambda_grid: None,
            penalty_kind: PenaltyKind::Scad,
            standardize: true,
            intercept: true,
            seed: 0,
        }
    }
}

/// Per-modality block of the analysis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalityReport {
    pub name: String,
    pub h_hat: f64,
    pub raw_deviance: f64,
    pub clamped: bool,
    pub screened_out: bool,
    pub s_tilde_m: usize,
    pub ci_lower: f64,
    pub ci_upper: Option<f64>,
    pub p_value: f64,
    pub ln_p_value: f64,
    pub r2_hat: f64,
    pub r2_ci_lower: f64,
    pub r2_ci_upper: Option<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub selected_columns: Vec<String>,
    pub full_converged: bool,
    pub reduced_converged: bool,
    pub quasi_separated: bool,
}

/// One threshold-trace row for the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdTraceRow {
    pub threshold: f64,
    pub size: usize,
    pub bic: f64,
}

/// The complete analysis report; serialized as versioned JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub family: String,
    /// False for probit: results are reported, but the χ² theory behind the
    /// interval assumes a canonical family.
    pub canonical_theory: bool,
    pub n: usize,
    pub p: usize,
    pub standardized: bool,
    pub intercept: bool,
    pub alpha: f64,
    pub one_sided: bool,
    pub seed: u64,
    pub gamma: f64,
    pub s_tilde: usize,
    pub screened_columns: Vec<String>,
    pub threshold_trace: Vec<ThresholdTraceRow>,
    pub modalities: Vec<ModalityReport>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Human-readable table mirroring the report's headline numbers.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>10} {:>22} {:>12} {:>8} {:>6}\n",
            "modality", "H_hat", &format!("{:.0}% CI", 100.0 * (1.0 - self.alpha)), "p-value", "R2", "s_m"
        ));
        for m in &self.modalities {
            let ci = match m.ci_upper {
                Some(u) => format!("({:.4}, {:.4})", m.ci_lower, u),
                None => format!("({:.4}, inf)", m.ci_lower),
            };
            let note = if m.screened_out { " [screened out]" } else { "" };
            out.push_str(&format!(
                "{:<16} {:>10.4} {:>22} {:>12.3e} {:>8.4} {:>6}{}\n",
                m.name, m.h_hat, ci, m.p_value, m.r2_hat, m.s_tilde_m, note
            ));
        }
        out
    }
}

/// Reads a CSV with a header row into a dataset plus the modality partition
/// described by the map. Rows with missing or non-numeric cells are
/// rejected with their row number.
pub fn ingest(path: &Path, map: &ModalityMap) -> Result<(Dataset, ModalityPartition)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidData(format!("cannot open {}: {e}", path.display())))?;
    ingest_reader(std::io::BufReader::new(file), map)
}

/// Same as [`ingest`] but from any reader.
pub fn ingest_reader<R: Read>(reader: R, map: &ModalityMap) -> Result<(Dataset, ModalityPartition)> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let response_pos = headers
        .iter()
        .position(|h| *h == map.response)
        .ok_or_else(|| {
            Error::InvalidConfig(format!("response column {:?} not in the header", map.response))
        })?;

    let covariate_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_pos)
        .map(|(_, h)| h.clone())
        .collect();

    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in csv.records().enumerate() {
        let record = record?;
        let row_no = idx + 2; // header is line 1
        if record.len() != headers.len() {
            return Err(Error::InvalidData(format!(
                "row {row_no}: expected {} cells, found {}",
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(covariate_names.len());
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::InvalidData(format!(
                    "row {row_no}, column {:?}: cannot parse {cell:?} as a number",
                    headers[col]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::InvalidData(format!(
                    "row {row_no}, column {:?}: non-finite value",
                    headers[col]
                )));
            }
            if col == response_pos {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("no data rows".into()));
    }

    let n = rows.len();
    let p = covariate_names.len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let data = Dataset::new(x, DVector::from_vec(y), covariate_names.clone())?;

    let mut blocks = Vec::new();
    for spec in &map.modalities {
        let mut indices = Vec::with_capacity(spec.columns.len());
        for col in &spec.columns {
            if *col == map.response {
                return Err(Error::InvalidConfig(format!(
                    "modality {:?} includes the response column",
                    spec.name
                )));
            }
            let j = covariate_names.iter().position(|c| c == col).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "modality {:?} references unknown column {:?}",
                    spec.name, col
                ))
            })?;
            indices.push(j);
        }
        blocks.push((spec.name.clone(), indices));
    }
    let partition = ModalityPartition::new(blocks)?;
    Ok((data, partition))
}

/// Runs the full two-step pipeline on in-memory data.
///
/// Screening (with BIC threshold selection unless overridden) is shared
/// across target modalities; each target then gets its partially penalized
/// full and reduced fits with BIC-tuned penalty levels, the deviance-based
/// ERE estimate, and its confidence interval and p-value.
pub fn run_analysis(
    data: &Dataset,
    partition: &ModalityPartition,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport> {
    data.check_family(&opts.family)?;
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0,1), got {}", opts.alpha)));
    }

    // Working design: optional standardization, optional intercept column.
    let n = data.n();
    let p = data.p();
    let mut x = data.x.clone();
    if opts.standardize {
        for j in 0..p {
            let mut col = x.column_mut(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let sd = var.sqrt();
            if sd > 0.0 {
                for v in col.iter_mut() {
                    *v = (*v - mean) / sd;
                }
            } else {
                for v in col.iter_mut() {
                    *v -= mean;
                }
            }
        }
    }
    let (work, intercept_idx) = if opts.intercept {
        let wide = x.insert_column(p, 1.0);
        let mut names = data.column_names.clone();
        names.push("(Intercept)".to_string());
        (Dataset::new(wide, data.y.clone(), names)?, Some(p))
    } else {
        (Dataset::new(x, data.y.clone(), data.column_names.clone())?, None)
    };

    let always: Vec<usize> = intercept_idx.into_iter().collect();
    let screening = screen_dataset(
        &work,
        &opts.family,
        opts.threshold_grid.as_deref(),
        opts.threshold,
        &always,
    )?;
    let screened: Vec<usize> = screening
        .selected
        .iter()
        .copied()
        .filter(|j| Some(*j) != intercept_idx)
        .collect();
    let s_tilde = screened.len();

    let targets: Vec<usize> = if opts.targets.is_empty() {
        (0..partition.len()).collect()
    } else {
        opts.targets
            .iter()
            .map(|name| {
                partition.index_of(name).ok_or_else(|| {
                    Error::InvalidConfig(format!("unknown target modality {name:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?
    };

    let lambda_grid = match &opts.lambda_grid {
        Some(g) => g.clone(),
        None => default_lambda_grid(s_tilde.max(1), n),
    };
    let penalty = PenaltyConfig::new(opts.penalty_kind, 1.0, match opts.penalty_kind {
        PenaltyKind::Scad => 3.7,
        PenaltyKind::Mcp => 3.0,
    })?;

    let mut fit_screened = screened.clone();
    fit_screened.extend(always.iter().copied());
    fit_screened.sort_unstable();

    let mut modality_reports = Vec::new();
    for m in targets {
        let block = partition.block(m);
        let screened_m: Vec<usize> =
            screened.iter().copied().filter(|j| block.contains(j)).collect();
        let s_tilde_m = screened_m.len();

        if s_tilde_m == 0 {
            let est = crate::entropy::EreEstimate {
                h_hat: 0.0,
                raw_diff: 0.0,
                s_tilde_m: 0,
                n,
                clamped: false,
                screened_out: true,
            };
            let inf = infer(&est, opts.alpha, !opts.one_sided)?;
            modality_reports.push(ModalityReport {
                name: partition.name(m).to_string(),
                h_hat: 0.0,
                raw_deviance: 0.0,
                clamped: false,
                screened_out: true,
                s_tilde_m: 0,
                ci_lower: inf.ci_lower,
                ci_upper: inf.ci_upper,
                p_value: inf.p_value,
                ln_p_value: inf.ln_p_value,
                r2_hat: 0.0,
                r2_ci_lower: 0.0,
                r2_ci_upper: inf.r2_ci_upper,
                lambda1: 0.0,
                lambda2: 0.0,
                selected_columns: Vec::new(),
                full_converged: true,
                reduced_converged: true,
                quasi_separated: false,
            });
            continue;
        }

        let mut unpenalized_full = screened_m.clone();
        unpenalized_full.extend(always.iter().copied());
        let full_problem = PenalizedProblem::new(
            &work,
            fit_screened.clone(),
            unpenalized_full,
            vec![],
            penalty,
            opts.family,
        )?;
        let reduced_problem = PenalizedProblem::new(
            &work,
            fit_screened.clone(),
            always.clone(),
            screened_m.clone(),
            penalty,
            opts.family,
        )?;

        let (lambda1, full, _) = select_lambda(&full_problem, &lambda_grid)?;
        let (lambda2, reduced, _) = select_lambda(&reduced_problem, &lambda_grid)?;

        let est = estimate_ere(&full, &reduced, &work, &opts.family, s_tilde_m)?;
        let inf = infer(&est, opts.alpha, !opts.one_sided)?;

        modality_reports.push(ModalityReport {
            name: partition.name(m).to_string(),
            h_hat: est.h_hat,
            raw_deviance: est.raw_diff,
            clamped: est.clamped,
            screened_out: false,
            s_tilde_m,
            ci_lower: inf.ci_lower,
            ci_upper: inf.ci_upper,
            p_value: inf.p_value,
            ln_p_value: inf.ln_p_value,
            r2_hat: inf.r2_hat,
            r2_ci_lower: inf.r2_ci_lower,
            r2_ci_upper: inf.r2_ci_upper,
            lambda1,
            lambda2,
            selected_columns: full
                .support
                .iter()
                .filter(|j| Some(**j) != intercept_idx)
                .map(|&j| work.column_names[j].clone())
                .collect(),
            full_converged: full.converged,
            reduced_converged: reduced.converged,
            quasi_separated: full.quasi_separated || reduced.quasi_separated,
        });
    }

    Ok(AnalysisReport {
        schema_version: 1,
        family: opts.family.kind.name().to_string(),
        canonical_theory: opts.family.is_canonical(),
        n,
        p,
        standardized: opts.standardize,
        intercept: opts.intercept,
        alpha: opts.alpha,
        one_sided: opts.one_sided,
        seed: opts.seed,
        gamma: screening.threshold,
        s_tilde,
        screened_columns: screened.iter().map(|&j| work.column_names[j].clone()).collect(),
        threshold_trace: screening
            .bic_trace
            .iter()
            .map(|c| ThresholdTraceRow { threshold: c.threshold, size: c.size, bic: c.bic })
            .collect(),
        modalities: modality_reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_map() -> ModalityMap {
        ModalityMap {
            response: "y".into(),
            modalities: vec![
                ModalitySpec { name: "a".into(), columns: vec!["x1".into()] },
                ModalitySpec { name: "b".into(), columns: vec!["x2".into()] },
            ],
        }
    }

    #[test]
    fn ingest_smoke() {
        let csv = "y,x1,x2\n1.0,0.5,2.0\n2.0,1.5,1.0\n3.0,2.5,0.5\n";
        let (data, partition) = ingest_reader(csv.as_bytes(), &toy_map()).unwrap();
        assert_eq!((data.n(), data.p()), (3, 2));
        assert_eq!(partition.len(), 2);
        assert_eq!(data.y[2], 3.0);
        assert_eq!(data.x[(1, 0)], 1.5);
    }

    #[test]
    fn ingest_rejects_missing_cells_with_row_number() {
        let csv = "y,x1,x2\n1.0,0.5,2.0\n2.0,NA,1.0\n";
        let err = ingest_reader(csv.as_bytes(), &toy_map()).unwrap_err();
        match err {
            Error::InvalidData(msg) => {
                assert!(msg.contains("row 3"), "message was: {msg}");
                assert!(msg.contains("x1"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_unknown_modality_column() {
        let csv = "y,x1,x2\n1.0,0.5,2.0\n2.0,1.0,1.0\n";
        let mut map = toy_map();
        map.modalities[1].columns = vec!["nope".into()];
        let err = ingest_reader(csv.as_bytes(), &map).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn ingest_rejects_response_inside_modality() {
        let csv = "y,x1,x2\n1.0,0.5,2.0\n2.0,1.0,1.0\n";
        let mut map = toy_map();
        map.modalities[0].columns = vec!["y".into()];
        assert!(ingest_reader(csv.as_bytes(), &map).is_err());
    }

    #[test]
    fn report_json_round_trips_byte_identically() {
        let report = AnalysisReport {
            schema_version: 1,
            family: "gaussian".into(),
            canonical_theory: true,
            n: 10,
            p: 3,
            standardized: true,
            intercept: true,
            alpha: 0.05,
            one_sided: false,
            seed: 7,
            gamma: 0.123456789,
            s_tilde: 2,
            screened_columns: vec!["x1".into(), "x2".into()],
            threshold_trace: vec![ThresholdTraceRow { threshold: 0.1, size: 2, bic: -3.5 }],
            modalities: vec![ModalityReport {
                name: "a".into(),
                h_hat: 0.25,
                raw_deviance: 0.25,
                clamped: false,
                screened_out: false,
                s_tilde_m: 1,
                ci_lower: 0.1,
                ci_upper: Some(0.5),
                p_value: 1.25e-7,
                ln_p_value: -15.9,
                r2_hat: 0.22,
                r2_ci_lower: 0.09,
                r2_ci_upper: Some(0.39),
                lambda1: 0.02,
                lambda2: 0.03,
                selected_columns: vec!["x1".into()],
                full_converged: true,
                reduced_converged: true,
                quasi_separated: false,
            }],
        };
        let json = report.to_json().unwrap();
        let reread = AnalysisReport::from_json(&json).unwrap();
        assert_eq!(json, reread.to_json().unwrap());
    }
}
