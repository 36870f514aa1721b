//! Folded-concave penalties (SCAD and MCP).
//!
//! Both satisfy the folded-concave conditions: p(0) = 0 and p > 0 for t > 0,
//! differentiable and non-decreasing concave on t ≥ 0, p′(t) = 0 for
//! t ≥ a·λ, and 0 ≤ p′(t) ≤ λ everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    Scad,
    Mcp,
}

/// A concrete folded-concave penalty: kind, level λ, and concavity knob `a`
/// (SCAD needs a > 2, MCP needs a > 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub a: f64,
}

impl PenaltyConfig {
    pub fn scad(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Scad, lambda, 3.7)
    }

    pub fn mcp(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, lambda, 3.0)
    }

    pub fn new(kind: PenaltyKind, lambda: f64, a: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be ≥ 0, got {lambda}")));
        }
        match kind {
            PenaltyKind::Scad if a <= 2.0 => {
                return Err(Error::InvalidConfig(format!("SCAD needs a > 2, got {a}")))
            }
            PenaltyKind::Mcp if a <= 1.0 => {
                return Err(Error::InvalidConfig(format!("MCP needs a > 1, got {a}")))
            }
            _ => {}
        }
        Ok(PenaltyConfig { kind, lambda, a })
    }

    /// Same penalty shape at a different level.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, lambda, self.a)
    }

    /// p_λ(t) for t ≥ 0.
    pub fn value(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let (lambda, a) = (self.lambda, self.a);
        if lambda == 0.0 {
            return 0.0;
        }
        match self.kind {
            PenaltyKind::Scad => {
                if t <= lambda {
                    lambda * t
                } else if t < a * lambda {
                    // integral of (aλ − s)/(a−1) from λ to t, plus λ²
                    (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
            PenaltyKind::Mcp => {
                if t < a * lambda {
                    lambda * t - t * t / (2.0 * a)
                } else {
                    0.5 * a * lambda * lambda
                }
            }
        }
    }

    /// p′_λ(t) for t ≥ 0, with p′(0) read as the right limit λ.
    pub fn derivative(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let (lambda, a) = (self.lambda, self.a);
        if lambda == 0.0 {
            return 0.0;
        }
        match self.kind {
            PenaltyKind::Scad => {
                if t <= lambda {
                    lambda
                } else {
                    ((a * lambda - t) / (a - 1.0)).max(0.0)
                }
            }
            PenaltyKind::Mcp => (lambda - t / a).max(0.0),
        }
    }
}
