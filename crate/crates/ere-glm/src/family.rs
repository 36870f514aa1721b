//! Exponential-family definitions: cumulant function `b` and its first two
//! derivatives, per-observation log-likelihood terms, and the score/curvature
//! pieces consumed by the Newton/IRLS fitters.
//!
//! The canonical families model `p(y|x) ∝ exp{φ⁻¹[r(y)·θ − b(θ)]}` with
//! `θ = xᵀβ`. The response carrier `r(y)` is the identity except for the
//! exponential family, where the density `θ·exp(−θy)` (rate `θ > 0`) puts
//! `r(y) = −y` and `b(θ) = −log θ`. Probit is a Bernoulli model with a
//! non-canonical link; it has no cumulant triple and is handled through its
//! own log-likelihood, score, and observed information.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Linear predictors are clamped to this magnitude inside probability-scale
/// evaluations so `Φ` and its logs stay inside f64 range.
const ETA_CLAMP: f64 = 36.0;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, stable on both tails.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Which exponential-family (or probit) model the response follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmKind {
    /// Identity link, `b(θ) = θ²/2`.
    Gaussian,
    /// Logit link, `b(θ) = log(1 + e^θ)`.
    Logistic,
    /// Log link, `b(θ) = e^θ`.
    Poisson,
    /// Reciprocal (rate) link, `b(θ) = −log θ`, `θ > 0`.
    ExponentialReciprocal,
    /// Bernoulli response with probit link. Non-canonical: accepted by the
    /// fitters and the inference pipeline, but outside the canonical theory
    /// and flagged as such in reports.
    Probit,
}

impl GlmKind {
    pub fn name(&self) -> &'static str {
        match self {
            GlmKind::Gaussian => "gaussian",
            GlmKind::Logistic => "logistic",
            GlmKind::Poisson => "poisson",
            GlmKind::ExponentialReciprocal => "exponential",
            GlmKind::Probit => "probit",
        }
    }
}

/// How the dispersion φ is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionMode {
    /// φ ≡ 1 (binomial, Poisson, exponential, or gaussian with known unit
    /// noise variance).
    FixedOne,
    /// φ estimated from the residuals (gaussian only): φ̂ = RSS/(n − df).
    Estimated,
}

/// A response family plus its dispersion treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlmFamily {
    pub kind: GlmKind,
    pub dispersion_mode: DispersionMode,
}

impl GlmFamily {
    /// Gaussian with estimated dispersion (the default for real data).
    pub fn gaussian() -> Self {
        GlmFamily { kind: GlmKind::Gaussian, dispersion_mode: DispersionMode::Estimated }
    }

    /// Gaussian with dispersion pinned at 1.
    pub fn gaussian_unit_variance() -> Self {
        GlmFamily { kind: GlmKind::Gaussian, dispersion_mode: DispersionMode::FixedOne }
    }

    pub fn logistic() -> Self {
        GlmFamily { kind: GlmKind::Logistic, dispersion_mode: DispersionMode::FixedOne }
    }

    pub fn poisson() -> Self {
        GlmFamily { kind: GlmKind::Poisson, dispersion_mode: DispersionMode::FixedOne }
    }

    pub fn exponential() -> Self {
        GlmFamily {
            kind: GlmKind::ExponentialReciprocal,
            dispersion_mode: DispersionMode::FixedOne,
        }
    }

    pub fn probit() -> Self {
        GlmFamily { kind: GlmKind::Probit, dispersion_mode: DispersionMode::FixedOne }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::gaussian()),
            "logistic" => Ok(Self::logistic()),
            "poisson" => Ok(Self::poisson()),
            "exponential" => Ok(Self::exponential()),
            "probit" => Ok(Self::probit()),
            other => Err(Error::InvalidConfig(format!(
                "unknown family {other:?}; expected gaussian|logistic|poisson|exponential|probit"
            ))),
        }
    }

    /// True for families written in canonical form `r(y)θ − b(θ)`.
    pub fn is_canonical(&self) -> bool {
        self.kind != GlmKind::Probit
    }

    /// Checks that `theta` lies in the admissible linear-predictor domain.
    pub fn check_domain(&self, theta: f64) -> Result<()> {
        if !theta.is_finite() {
            return Err(Error::Domain(format!(
                "{}: non-finite linear predictor {theta}",
                self.kind.name()
            )));
        }
        if self.kind == GlmKind::ExponentialReciprocal && theta <= 0.0 {
            return Err(Error::Domain(format!(
                "exponential: linear predictor must be strictly positive, got {theta}"
            )));
        }
        Ok(())
    }

    /// The cumulant triple `(b, b′, b″)` at `theta`.
    ///
    /// Errors on domain violations (exponential with `θ ≤ 0`) and for probit,
    /// which has no canonical cumulant. Logit overflow is handled by stable
    /// softplus/sigmoid forms, never an error.
    pub fn cumulant(&self, theta: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(theta)?;
        match self.kind {
            GlmKind::Gaussian => Ok((0.5 * theta * theta, theta, 1.0)),
            GlmKind::Logistic => {
                // b″ as σ(θ)·σ(−θ): stays positive far past where 1 − σ(θ)
                // would round to zero
                let mu = sigmoid(theta);
                Ok((softplus(theta), mu, mu * sigmoid(-theta)))
            }
            GlmKind::Poisson => {
                let e = theta.exp();
                Ok((e, e, e))
            }
            GlmKind::ExponentialReciprocal => {
                Ok((-theta.ln(), -1.0 / theta, 1.0 / (theta * theta)))
            }
            GlmKind::Probit => Err(Error::NonCanonicalFamily("probit")),
        }
    }

    /// The response carrier `r(y)`: identity except for the exponential
    /// family, whose density `θe^{−θy}` enters the canonical form through
    /// `−y`.
    pub fn response_carrier(&self, y: f64) -> f64 {
        match self.kind {
            GlmKind::ExponentialReciprocal => -y,
            _ => y,
        }
    }

    /// Per-observation log-likelihood kernel at dispersion 1, response-only
    /// constants dropped.
    pub fn loglik_term(&self, y: f64, theta: f64) -> Result<f64> {
        match self.kind {
            GlmKind::Probit => {
                let t = theta.clamp(-ETA_CLAMP, ETA_CLAMP);
                Ok(y * normal_cdf(t).ln() + (1.0 - y) * normal_cdf(-t).ln())
            }
            _ => {
                let (b, _, _) = self.cumulant(theta)?;
                Ok(self.response_carrier(y) * theta - b)
            }
        }
    }

    /// Score `∂l/∂θ` and curvature `−∂²l/∂θ²` of the per-observation
    /// log-likelihood. For canonical families the curvature is `b″(θ)`
    /// (observed = expected); for probit it is the observed information of
    /// the Bernoulli-probit term, which is positive everywhere by
    /// log-concavity.
    pub fn score_curvature(&self, y: f64, theta: f64) -> Result<(f64, f64)> {
        match self.kind {
            GlmKind::Probit => {
                let t = theta.clamp(-ETA_CLAMP, ETA_CLAMP);
                let pdf = normal_pdf(t);
                if y > 0.5 {
                    let cdf = normal_cdf(t);
                    let ratio = pdf / cdf;
                    Ok((ratio, ratio * (t + ratio)))
                } else {
                    let cdf = normal_cdf(-t);
                    let ratio = pdf / cdf;
                    Ok((-ratio, ratio * (ratio - t)))
                }
            }
            _ => {
                let (_, b1, b2) = self.cumulant(theta)?;
                Ok((self.response_carrier(y) - b1, b2))
            }
        }
    }

    /// Conditional mean of the response at linear predictor `theta`.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        match self.kind {
            GlmKind::Probit => Ok(normal_cdf(theta.clamp(-ETA_CLAMP, ETA_CLAMP))),
            GlmKind::ExponentialReciprocal => {
                self.check_domain(theta)?;
                Ok(1.0 / theta)
            }
            _ => {
                let (_, b1, _) = self.cumulant(theta)?;
                Ok(b1)
            }
        }
    }

    /// Whether a response value is admissible for the family.
    pub fn admissible_response(&self, y: f64) -> bool {
        if !y.is_finite() {
            return false;
        }
        match self.kind {
            GlmKind::Gaussian => true,
            GlmKind::Logistic | GlmKind::Probit => y == 0.0 || y == 1.0,
            GlmKind::Poisson => y >= 0.0 && y.fract() == 0.0,
            GlmKind::ExponentialReciprocal => y > 0.0,
        }
    }
}

/// The cumulant triple `(b, b′, b″)` of a canonical family at `theta`.
pub fn family_eval(family: &GlmFamily, theta: f64) -> Result<(f64, f64, f64)> {
    family.cumulant(theta)
}
