//! Synthetic designs, the three estimation methods (oracle, SIS+SCAD,
//! SIS+refit), the Monte Carlo coverage harness, and the non-central χ²
//! noncentrality oracle used by the distributional checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModalityPartition};
use crate::entropy::{
    estimate_ere, ere_linear_closed_form, kl2_term, EreEstimate, GroundTruthEre, GroundTruthMethod,
};
use crate::error::{Error, Result};
use crate::family::{GlmFamily, GlmKind};
use crate::fit::fit_mle;
use crate::inference::infer;
use crate::penalized::{default_lambda_grid, select_lambda, PenalizedProblem};
use crate::penalty::PenaltyConfig;
use crate::screening::{screen_dataset, ScreenResult};

/// One synthetic design: dimensions, modality blocks, scaled coefficients,
/// response family, and the equicorrelated covariate law
/// `Σ = sigma_ind·I + sigma_shared·J` (unit variance, correlation
/// `sigma_shared` when the two coefficients sum to one).
#[derive(Debug, Clone)]
pub struct SimModel {
    pub id: u8,
    pub n: usize,
    pub p: usize,
    pub modalities: ModalityPartition,
    pub beta_star: DVector<f64>,
    pub delta: f64,
    /// Family of the data-generating law.
    pub family: GlmFamily,
    /// Family maximized by the estimators (defaults to the generating
    /// family; switch to logistic for misspecification studies on the
    /// probit design).
    pub fit_family: GlmFamily,
    /// Coefficient of the identity part of Σ.
    pub sigma_ind: f64,
    /// Coefficient of the all-ones part of Σ (the shared factor).
    pub sigma_shared: f64,
    /// Designated support: the coefficient pattern positions, kept even
    /// when a block is zeroed for null studies so the oracle keeps its
    /// degrees of freedom.
    designated: Vec<usize>,
}

/// The per-block coefficient patterns of the three designs.
fn pattern(id: u8) -> Result<Vec<Vec<f64>>> {
    match id {
        1 => Ok(vec![
            vec![-1.15, 1.0, 1.75],
            vec![-0.6, -0.8, 0.45],
            vec![-0.75, 0.8, -0.75],
        ]),
        2 => Ok(vec![vec![0.5, -1.0, -1.6, 0.9], vec![0.4, 0.8, -0.7, -1.4]]),
        3 => Ok(vec![vec![0.5, 0.6, -0.7, -0.9], vec![0.4, 0.5, -0.6, -0.7]]),
        other => Err(Error::InvalidConfig(format!("model id must be 1, 2, or 3, got {other}"))),
    }
}

impl SimModel {
    /// A design at the published dimensions (n = 300, p = 600).
    pub fn model(id: u8, delta: f64) -> Result<SimModel> {
        Self::with_dims(id, delta, 300, 600)
    }

    /// Same coefficient patterns at other dimensions; blocks split p evenly.
    pub fn with_dims(id: u8, delta: f64, n: usize, p: usize) -> Result<SimModel> {
        let patterns = pattern(id)?;
        let m_count = patterns.len();
        if p < m_count * 8 {
            return Err(Error::InvalidConfig(format!("p = {p} too small for {m_count} blocks")));
        }
        let base = p / m_count;
        let mut blocks = Vec::new();
        let mut start = 0usize;
        for k in 0..m_count {
            let size = if k + 1 == m_count { p - start } else { base };
            blocks.push((format!("modality_{}", k + 1), (start..start + size).collect::<Vec<_>>()));
            start += size;
        }
        let modalities = ModalityPartition::new(blocks)?;

        let mut beta = DVector::zeros(p);
        let mut designated = Vec::new();
        for (k, pat) in patterns.iter().enumerate() {
            let block = modalities.block(k);
            for (i, &value) in pat.iter().enumerate() {
                beta[block[i]] = delta * value;
                designated.push(block[i]);
            }
        }
        designated.sort_unstable();

        let family = match id {
            1 => GlmFamily::gaussian(),
            2 => GlmFamily::logistic(),
            _ => GlmFamily::probit(),
        };
        Ok(SimModel {
            id,
            n,
            p,
            modalities,
            beta_star: beta,
            delta,
            family,
            fit_family: family,
            sigma_ind: 0.8,
            sigma_shared: 0.2,
            designated,
        })
    }

    /// The published δ grid for each design.
    pub fn default_deltas(id: u8) -> Vec<f64> {
        match id {
            1 => vec![0.6, 0.8, 1.0, 1.2, 1.6, 2.0],
            2 => vec![1.0, 1.2, 1.4, 1.7, 2.0, 2.3],
            _ => vec![1.0, 1.1, 1.2, 1.3, 1.4, 1.5],
        }
    }

    /// Zeroes the coefficients of modality `m` (for null calibration) while
    /// keeping the designated support intact.
    pub fn null_modality(mut self, m: usize) -> SimModel {
        for &j in self.modalities.block(m) {
            self.beta_star[j] = 0.0;
        }
        self
    }

    /// Fit with the logistic likelihood regardless of the generating law.
    pub fn misspecify_logit(mut self) -> SimModel {
        self.fit_family = GlmFamily::logistic();
        self
    }

    /// Indices with truly nonzero coefficients.
    pub fn true_support(&self) -> Vec<usize> {
        (0..self.p).filter(|&j| self.beta_star[j] != 0.0).collect()
    }

    /// The designated pattern positions (ignores null-zeroing).
    pub fn designated_support(&self) -> &[usize] {
        &self.designated
    }

    /// The covariate covariance as a dense matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| {
            if i == j {
                self.sigma_ind + self.sigma_shared
            } else {
                self.sigma_shared
            }
        })
    }
}

/// Draws a dataset from the design: `X = √(diag−off)·Z + √off·g·1` row by
/// row with a shared per-row normal `g`, then the response from the model's
/// law. Fully determined by the seed.
pub fn generate(model: &SimModel, seed: u64) -> Dataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (n, p) = (model.n, model.p);
    let ind_sd = model.sigma_ind.sqrt();
    let shared_sd = model.sigma_shared.sqrt();

    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let g: f64 = StandardNormal.sample(&mut rng);
        let shared = shared_sd * g;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = ind_sd * z + shared;
        }
    }

    let eta = &x * &model.beta_star;
    let y = DVector::from_fn(n, |i, _| match model.family.kind {
        GlmKind::Gaussian => {
            let e: f64 = StandardNormal.sample(&mut rng);
            eta[i] + e
        }
        GlmKind::Logistic => {
            let prob = 1.0 / (1.0 + (-eta[i]).exp());
            if rng.gen::<f64>() < prob {
                1.0
            } else {
                0.0
            }
        }
        GlmKind::Probit => {
            if rng.gen::<f64>() < crate::family::normal_cdf(eta[i]) {
                1.0
            } else {
                0.0
            }
        }
        other => unreachable!("no simulation design generates {other:?}"),
    });

    let names = (0..p)
        .map(|j| {
            let m = (0..model.modalities.len())
                .find(|&k| model.modalities.block(k).contains(&j))
                .unwrap_or(0);
            format!("m{}_x{:03}", m + 1, j)
        })
        .collect();
    Dataset::new(x, y, names).expect("generated data is always valid")
}

/// The three estimation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    SisScad,
    SisRefit,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::SisScad => "sis_scad",
            Method::SisRefit => "sis_refit",
        }
    }

    pub fn from_name(name: &str) -> Result<Method> {
        match name {
            "oracle" => Ok(Method::Oracle),
            "sis_scad" | "sis+scad" | "scad" => Ok(Method::SisScad),
            "sis_refit" | "sis+refit" | "refit" => Ok(Method::SisRefit),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}; expected oracle|sis_scad|sis_refit"
            ))),
        }
    }
}

/// Everything a coverage replication needs from one method run.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub estimate: EreEstimate,
    /// Support of the full-model fit (drives sensitivity/specificity).
    pub full_support: Vec<usize>,
    pub s_tilde: usize,
    pub s_tilde_m: usize,
    pub gamma: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub converged: bool,
}

/// Runs one estimation method on one dataset for one target modality.
///
/// The oracle needs the designated true support; both SIS methods screen
/// first and then solve the partially penalized problems (SCAD with
/// BIC-tuned λ's, refit with λ₁ = λ₂ = 0).
pub fn run_method(
    data: &Dataset,
    modalities: &ModalityPartition,
    m: usize,
    method: Method,
    family: &GlmFamily,
    oracle_support: Option<&[usize]>,
) -> Result<MethodOutput> {
    match method {
        Method::Oracle => {
            let support = oracle_support.ok_or_else(|| {
                Error::InvalidConfig("the oracle method needs the true support".into())
            })?;
            run_oracle(data, modalities, m, family, support)
        }
        Method::SisScad | Method::SisRefit => {
            let screening = screen_dataset(data, family, None, None, &[])?;
            run_with_screening(data, modalities, m, method, family, &screening)
        }
    }
}

fn run_oracle(
    data: &Dataset,
    modalities: &ModalityPartition,
    m: usize,
    family: &GlmFamily,
    support: &[usize],
) -> Result<MethodOutput> {
    let block = modalities.block(m);
    let in_m: Vec<usize> = support.iter().copied().filter(|j| block.contains(j)).collect();
    let out_m: Vec<usize> = support.iter().copied().filter(|j| !block.contains(j)).collect();
    let full = fit_mle(data, support, family)?;
    let reduced = fit_mle(data, &out_m, family)?;
    let estimate = estimate_ere(&full, &reduced, data, family, in_m.len())?;
    Ok(MethodOutput {
        estimate,
        full_support: support.to_vec(),
        s_tilde: support.len(),
        s_tilde_m: in_m.len(),
        gamma: None,
        lambda1: None,
        lambda2: None,
        converged: full.converged && reduced.converged,
    })
}

/// Shared second stage for the SIS methods (callers may reuse one screening
/// pass across methods; the first stage is identical for a given dataset).
pub fn run_with_screening(
    data: &Dataset,
    modalities: &ModalityPartition,
    m: usize,
    method: Method,
    family: &GlmFamily,
    screening: &ScreenResult,
) -> Result<MethodOutput> {
    let block = modalities.block(m);
    let screened = screening.selected.clone();
    let s_tilde = screened.len();
    let screened_m: Vec<usize> = screened.iter().copied().filter(|j| block.contains(j)).collect();
    let s_tilde_m = screened_m.len();

    let penalty = PenaltyConfig::scad(1.0)?;
    let full_problem = PenalizedProblem::new(
        data,
        screened.clone(),
        screened_m.clone(),
        vec![],
        penalty,
        *family,
    )?;
    let reduced_problem = PenalizedProblem::new(
        data,
        screened.clone(),
        vec![],
        screened_m.clone(),
        penalty,
        *family,
    )?;

    let (lambda1, lambda2, full, reduced) = match method {
        Method::SisRefit => {
            let full = crate::penalized::fit_full(&PenalizedProblem {
                penalty: penalty.with_lambda(0.0)?,
                ..full_problem.clone()
            })?;
            let reduced = crate::penalized::fit_reduced(&PenalizedProblem {
                penalty: penalty.with_lambda(0.0)?,
                ..reduced_problem.clone()
            })?;
            (0.0, 0.0, full, reduced)
        }
        Method::SisScad => {
            let grid = default_lambda_grid(s_tilde, data.n());
            let (l1, full, _) = select_lambda(&full_problem, &grid)?;
            let (l2, reduced, _) = select_lambda(&reduced_problem, &grid)?;
            (l1, l2, full, reduced)
        }
        Method::Oracle => unreachable!(),
    };

    let estimate = estimate_ere(&full, &reduced, data, family, s_tilde_m)?;
    Ok(MethodOutput {
        estimate,
        full_support: full.support.clone(),
        s_tilde,
        s_tilde_m,
        gamma: Some(screening.threshold),
        lambda1: Some(lambda1),
        lambda2: Some(lambda2),
        converged: full.converged && reduced.converged,
    })
}

/// Ground-truth ERE for one design cell: the linear closed form for the
/// gaussian design, a seeded Monte Carlo approximation (reduced-model
/// pseudo-truth fitted on an independent synthetic sample, the divergence
/// averaged over the same sample) otherwise.
pub fn ground_truth_h(model: &SimModel, m: usize, mc_samples: usize, seed: u64) -> Result<GroundTruthEre> {
    if model.family.kind == GlmKind::Gaussian {
        let h = ere_linear_closed_form(
            &model.covariance(),
            &model.beta_star,
            model.modalities.block(m),
            1.0,
        )?;
        return Ok(GroundTruthEre {
            h,
            method: GroundTruthMethod::ClosedFormLinear,
            mc_samples: 0,
            mc_std_error: 0.0,
        });
    }

    let mut fit_model = model.clone();
    fit_model.n = mc_samples;
    let sample = generate(&fit_model, seed);

    let block = model.modalities.block(m);
    let reduced_support: Vec<usize> = model
        .true_support()
        .into_iter()
        .filter(|j| !block.contains(j))
        .collect();
    let reduced = fit_mle(&sample, &reduced_support, &model.family)?;

    let theta_star = &sample.x * &model.beta_star;
    let theta_0 = &sample.x * &reduced.beta;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..mc_samples {
        let v = kl2_term(&model.family, theta_star[i], theta_0[i], &None)
            .ok_or_else(|| Error::Domain("ground-truth divergence left the family domain".into()))?;
        sum += v;
        sum_sq += v * v;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(GroundTruthEre {
        h: mean.max(0.0),
        method: GroundTruthMethod::MonteCarlo,
        mc_samples,
        mc_std_error: (var / n).sqrt(),
    })
}

/// Monte Carlo estimate of the theoretical noncentrality
/// `Γ = n·β_mᵀ Ω_mm⁻¹ β_m`, where `Ω_mm` is the modality block of the
/// inverse information `[E{w(xᵀβ*)·x_S x_Sᵀ}]⁻¹` over the designated
/// support S.
pub fn oracle_noncentrality(model: &SimModel, m: usize, mc_samples: usize, seed: u64) -> Result<f64> {
    let support = model.designated_support().to_vec();
    let s = support.len();
    let block = model.modalities.block(m);
    let positions: Vec<usize> = (0..s).filter(|&k| block.contains(&support[k])).collect();
    if positions.is_empty() {
        return Ok(0.0);
    }
    let beta_m = DVector::from_iterator(
        positions.len(),
        positions.iter().map(|&k| model.beta_star[support[k]]),
    );
    if beta_m.iter().all(|&b| b == 0.0) {
        return Ok(0.0);
    }

    let ind_sd = model.sigma_ind.sqrt();
    let shared_sd = model.sigma_shared.sqrt();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut info = DMatrix::zeros(s, s);
    let mut xs = DVector::zeros(s);
    // Only the support coordinates of x matter for the information, but the
    // linear predictor needs the full design row; with the equicorrelated
    // law the predictor only involves the support entries and the shared
    // factor, because non-support coefficients vanish.
    for _ in 0..mc_samples {
        let g: f64 = StandardNormal.sample(&mut rng);
        let shared = shared_sd * g;
        let mut theta = 0.0;
        for (k, &j) in support.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            xs[k] = ind_sd * z + shared;
            theta += xs[k] * model.beta_star[j];
        }
        let w = information_weight(&model.family, theta)?;
        for a in 0..s {
            for b in a..s {
                info[(a, b)] += w * xs[a] * xs[b];
            }
        }
    }
    for a in 0..s {
        for b in a..s {
            let v = info[(a, b)] / mc_samples as f64;
            info[(a, b)] = v;
            info[(b, a)] = v;
        }
    }

    let inv = info
        .cholesky()
        .ok_or(Error::Singular("Monte Carlo information estimate"))?
        .inverse();
    let omega_mm = inv.select_rows(positions.iter()).select_columns(positions.iter());
    let solved = omega_mm
        .cholesky()
        .ok_or(Error::Singular("modality block of the inverse information"))?
        .solve(&beta_m);
    Ok(model.n as f64 * beta_m.dot(&solved))
}

/// Expected-information weight at linear predictor `theta`: `b″(θ)` for
/// canonical families, `φ(θ)²/(Φ(θ)Φ(−θ))` for probit.
fn information_weight(family: &GlmFamily, theta: f64) -> Result<f64> {
    match family.kind {
        GlmKind::Probit => {
            let t = theta.clamp(-36.0, 36.0);
            let pdf = crate::family::normal_pdf(t);
            let p = crate::family::normal_cdf(t);
            Ok(pdf * pdf / (p * (1.0 - p)).max(1e-300))
        }
        _ => Ok(family.cumulant(theta)?.2),
    }
}

/// One aggregated cell of the coverage table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageCell {
    pub model: u8,
    pub delta: f64,
    pub method: String,
    pub modality: String,
    pub coverage: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub mean_h_hat: f64,
    pub true_h: f64,
    pub reps: usize,
    /// Replications whose target modality was screened out entirely.
    pub screened_out: usize,
    /// Replications dropped for numerical failure.
    pub failures: usize,
}

/// Coverage-study configuration.
#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub model_id: u8,
    pub deltas: Vec<f64>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub alpha: f64,
    pub base_seed: u64,
    /// Dimension overrides (`None` = published scale n=300, p=600).
    pub dims: Option<(usize, usize)>,
    /// Sample count for Monte Carlo ground truths.
    pub mc_truth_samples: usize,
    /// Restrict evaluation to these modalities (all when empty).
    pub modalities: Vec<usize>,
}

impl CoverageConfig {
    pub fn new(model_id: u8) -> Self {
        CoverageConfig {
            model_id,
            deltas: SimModel::default_deltas(model_id),
            methods: vec![Method::Oracle, Method::SisScad, Method::SisRefit],
            reps: 500,
            alpha: 0.05,
            base_seed: 20240901,
            dims: None,
            mc_truth_samples: 10_000,
            modalities: Vec::new(),
        }
    }

    /// The quick preset: n = 200, p = 400, 200 replications.
    pub fn small(mut self) -> Self {
        self.dims = Some((200, 400));
        self.reps = 200;
        self
    }
}

struct RepOutcome {
    covered: bool,
    h_hat: f64,
    sensitivity: f64,
    specificity: f64,
    screened_out: bool,
    failed: bool,
}

/// Runs the coverage study: for every (δ, method, modality) cell, `reps`
/// replications of generate → estimate → infer, each scored against the
/// cell's cached ground truth. Replication seeds are `base_seed + rep`, so
/// the table is identical across runs and thread counts.
pub fn run_coverage(cfg: &CoverageConfig) -> Result<Vec<CoverageCell>> {
    if cfg.reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let (n, p) = cfg.dims.unwrap_or((300, 600));
    let mut cells = Vec::new();

    for (d_idx, &delta) in cfg.deltas.iter().enumerate() {
        let model = SimModel::with_dims(cfg.model_id, delta, n, p)?;
        let m_count = model.modalities.len();
        let modalities: Vec<usize> = if cfg.modalities.is_empty() {
            (0..m_count).collect()
        } else {
            cfg.modalities.clone()
        };

        // ground truth per (delta, modality), cached across replications
        let mut truths = Vec::with_capacity(modalities.len());
        for &m in &modalities {
            let seed = cfg
                .base_seed
                .wrapping_mul(0x9E3779B97F4A7C15)
                .wrapping_add((d_idx * m_count + m) as u64);
            truths.push(ground_truth_h(&model, m, cfg.mc_truth_samples, seed)?);
        }

        let true_support = model.true_support();
        let designated = model.designated_support().to_vec();

        // replications, parallel, aggregated in index order
        let outcomes: Vec<Vec<RepOutcome>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let data = generate(&model, cfg.base_seed + rep as u64);
                let needs_screening = cfg
                    .methods
                    .iter()
                    .any(|m| matches!(m, Method::SisScad | Method::SisRefit));
                let screening = if needs_screening {
                    screen_dataset(&data, &model.fit_family, None, None, &[]).ok()
                } else {
                    None
                };

                let mut rep_out = Vec::with_capacity(cfg.methods.len() * modalities.len());
                for &method in &cfg.methods {
                    for (t_idx, &m) in modalities.iter().enumerate() {
                        let truth = truths[t_idx].h;
                        let result = match method {
                            Method::Oracle => {
                                run_oracle(&data, &model.modalities, m, &model.fit_family, &designated)
                            }
                            _ => match &screening {
                                Some(s) => run_with_screening(
                                    &data,
                                    &model.modalities,
                                    m,
                                    method,
                                    &model.fit_family,
                                    s,
                                ),
                                None => Err(Error::Numerical("screening failed".into())),
                            },
                        };
                        rep_out.push(match result {
                            Ok(out) => {
                                let inference = infer(&out.estimate, cfg.alpha, true);
                                match inference {
                                    Ok(inf) => {
                                        let upper = inf.ci_upper.unwrap_or(f64::INFINITY);
                                        let (sens, spec) =
                                            support_scores(&out.full_support, &true_support, p);
                                        RepOutcome {
                                            covered: inf.ci_lower <= truth && truth <= upper,
                                            h_hat: out.estimate.h_hat,
                                            sensitivity: sens,
                                            specificity: spec,
                                            screened_out: out.estimate.screened_out,
                                            failed: false,
                                        }
                                    }
                                    Err(_) => failed_outcome(),
                                }
                            }
                            Err(_) => failed_outcome(),
                        });
                    }
                }
                rep_out
            })
            .collect();

        for (k, &method) in cfg.methods.iter().enumerate() {
            for (t_idx, &m) in modalities.iter().enumerate() {
                let idx = k * modalities.len() + t_idx;
                let mut covered = 0usize;
                let mut h_sum = 0.0;
                let mut sens_sum = 0.0;
                let mut spec_sum = 0.0;
                let mut screened_out = 0usize;
                let mut failures = 0usize;
                let mut used = 0usize;
                for rep in &outcomes {
                    let o = &rep[idx];
                    if o.failed {
                        failures += 1;
                        continue;
                    }
                    used += 1;
                    if o.covered {
                        covered += 1;
                    }
                    h_sum += o.h_hat;
                    sens_sum += o.sensitivity;
                    spec_sum += o.specificity;
                    if o.screened_out {
                        screened_out += 1;
                    }
                }
                let denom = used.max(1) as f64;
                cells.push(CoverageCell {
                    model: cfg.model_id,
                    delta,
                    method: method.name().to_string(),
                    modality: model.modalities.name(m).to_string(),
                    coverage: covered as f64 / denom,
                    sensitivity: sens_sum / denom,
                    specificity: spec_sum / denom,
                    mean_h_hat: h_sum / denom,
                    true_h: truths[t_idx].h,
                    reps: used,
                    screened_out,
                    failures,
                });
            }
        }
    }
    Ok(cells)
}

fn failed_outcome() -> RepOutcome {
    RepOutcome {
        covered: false,
        h_hat: f64::NAN,
        sensitivity: 0.0,
        specificity: 0.0,
        screened_out: false,
        failed: true,
    }
}

/// Sensitivity and specificity of a fitted support against the truth.
fn support_scores(fitted: &[usize], truth: &[usize], p: usize) -> (f64, f64) {
    if truth.is_empty() {
        return (1.0, 1.0);
    }
    let fitted: std::collections::BTreeSet<usize> = fitted.iter().copied().collect();
    let truth_set: std::collections::BTreeSet<usize> = truth.iter().copied().collect();
    let tp = truth_set.iter().filter(|j| fitted.contains(j)).count();
    let fp = fitted.len() - tp;
    let negatives = p - truth_set.len();
    let sens = tp as f64 / truth_set.len() as f64;
    let spec = if negatives == 0 {
        1.0
    } else {
        (negatives - fp) as f64 / negatives as f64
    };
    (sens, spec)
}

/// Writes the coverage table as plot-ready CSV.
pub fn write_coverage_csv<W: std::io::Write>(cells: &[CoverageCell], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "model",
        "delta",
        "method",
        "modality",
        "coverage",
        "sensitivity",
        "specificity",
        "mean_h_hat",
        "true_h",
        "reps",
    ])?;
    for c in cells {
        csv.write_record([
            c.model.to_string(),
            format!("{}", c.delta),
            c.method.clone(),
            c.modality.clone(),
            format!("{:.6}", c.coverage),
            format!("{:.6}", c.sensitivity),
            format!("{:.6}", c.specificity),
            format!("{:.8}", c.mean_h_hat),
            format!("{:.8}", c.true_h),
            c.reps.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
