//! The expected-relative-entropy quantity itself: the deviance-based sample
//! estimator, the linear-model closed form, Monte Carlo ground-truth
//! evaluation for non-linear families, and the pseudo-R² transform.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{normal_cdf, GlmFamily, GlmKind};
use crate::fit::{deviance_difference, FitResult};

/// The deviance-based ERE estimate for one modality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EreEstimate {
    /// Clamped estimate: `max(raw_diff, 0)`.
    pub h_hat: f64,
    /// Unclamped deviance difference, kept for diagnostics.
    pub raw_diff: f64,
    /// Number of screened columns in the target modality.
    pub s_tilde_m: usize,
    pub n: usize,
    /// True when the raw difference was negative and clamped to zero.
    pub clamped: bool,
    /// True when the modality had no screened columns at all.
    pub screened_out: bool,
}

/// `(2/n)·(loglik_full − loglik_reduced)` clamped at zero.
///
/// The reduced fit must be zero on the target modality's screened columns;
/// the caller controls the gaussian dispersion convention through the fits'
/// stored log-likelihoods. A modality with no screened columns yields the
/// distinguished screened-out estimate.
pub fn estimate_ere(
    full: &FitResult,
    reduced: &FitResult,
    data: &Dataset,
    _family: &GlmFamily,
    s_tilde_m: usize,
) -> Result<EreEstimate> {
    let n = data.n();
    if s_tilde_m == 0 {
        return Ok(EreEstimate {
            h_hat: 0.0,
            raw_diff: 0.0,
            s_tilde_m: 0,
            n,
            clamped: false,
            screened_out: true,
        });
    }
    let raw = deviance_difference(full, reduced, n)?;
    Ok(EreEstimate {
        h_hat: raw.max(0.0),
        raw_diff: raw,
        s_tilde_m,
        n,
        clamped: raw < 0.0,
        screened_out: false,
    })
}

/// How a ground-truth ERE value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundTruthMethod {
    ClosedFormLinear,
    MonteCarlo,
}

/// A ground-truth ERE value with its provenance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroundTruthEre {
    pub h: f64,
    pub method: GroundTruthMethod,
    pub mc_samples: usize,
    pub mc_std_error: f64,
}

/// Closed-form linear-model ERE of modality `m`:
///
/// `H = log((σ²_c + σ²_ε)/σ²_ε) + (β_mᵀ Σ_m β_m − σ²_c)/(σ²_c + σ²_ε)`
///
/// where `σ²_c = β_mᵀ (Σ_m − Σ_{m,−m} Σ_{−m}⁻¹ Σ_{−m,m}) β_m` is the
/// conditional variance of the modality's linear signal given the other
/// covariates (x jointly gaussian with covariance `sigma`).
pub fn ere_linear_closed_form(
    sigma: &DMatrix<f64>,
    beta_star: &DVector<f64>,
    modality: &[usize],
    sigma_eps2: f64,
) -> Result<f64> {
    let p = sigma.nrows();
    if sigma.ncols() != p || beta_star.len() != p {
        return Err(Error::InvalidConfig(format!(
            "covariance is {}×{} but beta has length {}",
            p,
            sigma.ncols(),
            beta_star.len()
        )));
    }
    if !(sigma_eps2 > 0.0) {
        return Err(Error::InvalidConfig(format!("noise variance must be positive, got {sigma_eps2}")));
    }
    let mut modality: Vec<usize> = modality.to_vec();
    modality.sort_unstable();
    modality.dedup();
    if modality.iter().any(|&j| j >= p) {
        return Err(Error::InvalidConfig("modality index out of range".into()));
    }
    let beta_m = DVector::from_iterator(modality.len(), modality.iter().map(|&j| beta_star[j]));
    if beta_m.iter().all(|&b| b == 0.0) {
        return Ok(0.0);
    }
    let complement: Vec<usize> = (0..p).filter(|j| !modality.contains(j)).collect();

    let sigma_m = sigma.select_rows(modality.iter()).select_columns(modality.iter());
    let conditional = if complement.is_empty() {
        sigma_m.clone()
    } else {
        let sigma_c = sigma.select_rows(complement.iter()).select_columns(complement.iter());
        let cross = sigma.select_rows(complement.iter()).select_columns(modality.iter());
        let chol = sigma_c
            .cholesky()
            .ok_or(Error::Singular("complement covariance block"))?;
        let solved = chol.solve(&cross);
        &sigma_m - cross.transpose() * solved
    };

    let var_cond = (beta_m.transpose() * &conditional * &beta_m)[(0, 0)];
    let var_marginal = (beta_m.transpose() * sigma_m * &beta_m)[(0, 0)];
    if var_cond < -1e-8 * var_marginal.abs().max(1.0) {
        return Err(Error::Numerical("conditional covariance is not positive semidefinite".into()));
    }
    let var_cond = var_cond.max(0.0);
    let h = ((var_cond + sigma_eps2) / sigma_eps2).ln()
        + (var_marginal - var_cond) / (var_cond + sigma_eps2);
    Ok(h.max(0.0))
}

/// Covariate distribution for Monte Carlo evaluation.
#[derive(Debug, Clone)]
pub enum CovariateSampler {
    /// `x = √(v−c)·z + √c·g·1` with a shared standard normal `g` per draw:
    /// covariance `(v−c)·I + c·J`.
    Equicorrelated { p: usize, independent_sd: f64, shared_sd: f64 },
    /// `x = L·z` for a lower-triangular Cholesky factor `L`.
    Correlated { chol: DMatrix<f64> },
    /// The base sampler with a constant 1 prepended (for models carrying an
    /// intercept term).
    Augmented { base: Box<CovariateSampler> },
}

impl CovariateSampler {
    /// Equicorrelated covariance `variance·I + covariance·(J − I)` given as
    /// (diagonal, off-diagonal) values.
    pub fn equicorrelated(p: usize, diagonal: f64, off_diagonal: f64) -> Result<Self> {
        if off_diagonal < 0.0 || diagonal <= off_diagonal {
            return Err(Error::InvalidConfig(format!(
                "need diagonal > off-diagonal ≥ 0, got ({diagonal}, {off_diagonal})"
            )));
        }
        Ok(CovariateSampler::Equicorrelated {
            p,
            independent_sd: (diagonal - off_diagonal).sqrt(),
            shared_sd: off_diagonal.sqrt(),
        })
    }

    pub fn from_covariance(sigma: &DMatrix<f64>) -> Result<Self> {
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or(Error::Singular("covariance passed to sampler"))?;
        Ok(CovariateSampler::Correlated { chol: chol.l() })
    }

    pub fn with_intercept(self) -> Self {
        CovariateSampler::Augmented { base: Box::new(self) }
    }

    pub fn dim(&self) -> usize {
        match self {
            CovariateSampler::Equicorrelated { p, .. } => *p,
            CovariateSampler::Correlated { chol } => chol.nrows(),
            CovariateSampler::Augmented { base } => base.dim() + 1,
        }
    }

    pub fn sample_into(&self, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        match self {
            CovariateSampler::Equicorrelated { p, independent_sd, shared_sd } => {
                debug_assert_eq!(out.len(), *p);
                let g: f64 = StandardNormal.sample(rng);
                let shared = shared_sd * g;
                for slot in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *slot = independent_sd * z + shared;
                }
            }
            CovariateSampler::Correlated { chol } => {
                let d = chol.nrows();
                debug_assert_eq!(out.len(), d);
                let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
                let x = chol * z;
                out.copy_from_slice(x.as_slice());
            }
            CovariateSampler::Augmented { base } => {
                out[0] = 1.0;
                base.sample_into(rng, &mut out[1..]);
            }
        }
    }
}

/// Full- and reduced-model noise variances for gaussian Monte Carlo
/// evaluation. The reduced model marginalizes the dropped signal, so its
/// variance is inflated relative to the full model's.
#[derive(Debug, Clone, Copy)]
pub struct GaussianVars {
    pub full_var: f64,
    pub reduced_var: f64,
}

/// Options for [`mc_ere`].
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Required for the gaussian family, must be `None` otherwise.
    pub gaussian_vars: Option<GaussianVars>,
}

const MC_SHARD: usize = 8192;

/// Monte Carlo ERE: twice the covariate-averaged KL divergence between the
/// conditional model at `beta_star` and the reduced model at `beta_0`.
///
/// Canonical φ=1 families use the integrand
/// `b′(xᵀβ*)·xᵀ(β*−β₀) + b(xᵀβ₀) − b(xᵀβ*)`; probit uses the Bernoulli KL of
/// the two probit probabilities; the gaussian family uses the two-variance
/// normal KL with the variances supplied in the options.
///
/// Accumulation is sharded with per-shard seeded streams and combined in
/// shard order, so results are reproducible for a fixed seed regardless of
/// thread count.
pub fn mc_ere(
    family: &GlmFamily,
    beta_star: &DVector<f64>,
    beta_0: &DVector<f64>,
    sampler: &CovariateSampler,
    opts: &McOptions,
) -> Result<GroundTruthEre> {
    if opts.n_samples < 1000 {
        return Err(Error::InvalidConfig(format!(
            "Monte Carlo needs at least 1000 samples, got {}",
            opts.n_samples
        )));
    }
    let p = sampler.dim();
    if beta_star.len() != p || beta_0.len() != p {
        return Err(Error::InvalidConfig(format!(
            "coefficient lengths ({}, {}) do not match sampler dimension {p}",
            beta_star.len(),
            beta_0.len()
        )));
    }
    match (family.kind, &opts.gaussian_vars) {
        (GlmKind::Gaussian, None) => {
            return Err(Error::InvalidConfig(
                "gaussian Monte Carlo needs full and reduced model variances".into(),
            ))
        }
        (GlmKind::Gaussian, Some(v)) if !(v.full_var > 0.0 && v.reduced_var > 0.0) => {
            return Err(Error::InvalidConfig("model variances must be positive".into()))
        }
        (k, Some(_)) if k != GlmKind::Gaussian => {
            return Err(Error::InvalidConfig(format!(
                "gaussian variances are meaningless for the {} family",
                k.name()
            )))
        }
        _ => {}
    }

    let n_shards = opts.n_samples.div_ceil(MC_SHARD);
    let shard_stats: Vec<(f64, f64, usize, usize)> = (0..n_shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
            rng.set_stream(shard as u64 + 1);
            let lo = shard * MC_SHARD;
            let hi = ((shard + 1) * MC_SHARD).min(opts.n_samples);
            let mut x = vec![0.0; p];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut violations = 0usize;
            for _ in lo..hi {
                sampler.sample_into(&mut rng, &mut x);
                let mut theta_star = 0.0;
                let mut theta_0 = 0.0;
                for j in 0..p {
                    theta_star += x[j] * beta_star[j];
                    theta_0 += x[j] * beta_0[j];
                }
                match kl2_term(family, theta_star, theta_0, &opts.gaussian_vars) {
                    Some(v) => {
                        sum += v;
                        sum_sq += v * v;
                    }
                    None => violations += 1,
                }
            }
            (sum, sum_sq, hi - lo, violations)
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut violations = 0usize;
    for (s, ss, c, v) in shard_stats {
        sum += s;
        sum_sq += ss;
        count += c;
        violations += v;
    }
    if violations > 0 {
        return Err(Error::Domain(format!(
            "{} of {} sampled covariate vectors ({:.2}%) left the family domain",
            violations,
            count,
            100.0 * violations as f64 / count as f64
        )));
    }
    let n = count as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(GroundTruthEre {
        h: mean,
        method: GroundTruthMethod::MonteCarlo,
        mc_samples: count,
        mc_std_error: (var / n).sqrt(),
    })
}

/// Twice the per-covariate KL divergence; `None` flags a domain violation.
pub(crate) fn kl2_term(
    family: &GlmFamily,
    theta_star: f64,
    theta_0: f64,
    gaussian_vars: &Option<GaussianVars>,
) -> Option<f64> {
    match family.kind {
        GlmKind::Gaussian => {
            let v = gaussian_vars.as_ref().expect("validated upstream");
            let (v1, v0) = (v.full_var, v.reduced_var);
            let d = theta_star - theta_0;
            Some((v0 / v1).ln() + v1 / v0 + d * d / v0 - 1.0)
        }
        GlmKind::Probit => {
            let t_star = theta_star.clamp(-36.0, 36.0);
            let t_0 = theta_0.clamp(-36.0, 36.0);
            let p1 = normal_cdf(t_star);
            let q1 = normal_cdf(t_0);
            let p0 = normal_cdf(-t_star);
            let q0 = normal_cdf(-t_0);
            Some(2.0 * (p1 * (p1 / q1).ln() + p0 * (p0 / q0).ln()))
        }
        _ => {
            let (b_star, b1_star, _) = family.cumulant(theta_star).ok()?;
            let (b_0, _, _) = family.cumulant(theta_0).ok()?;
            Some(2.0 * (b1_star * (theta_star - theta_0) + b_0 - b_star))
        }
    }
}

/// Pseudo-R²: `1 − exp(−h)`, a [0,1) rescaling of the ERE. Saturates at the
/// largest double below 1 so the half-open range survives rounding.
pub fn pseudo_r2(h: f64) -> f64 {
    debug_assert!(h >= 0.0);
    (-(-h).exp_m1()).min(1.0 - f64::EPSILON / 2.0)
}

/// Inverse of [`pseudo_r2`]: `−log(1 − r)`.
pub fn pseudo_r2_inverse(r: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&r));
    -(-r).ln_1p()
}
