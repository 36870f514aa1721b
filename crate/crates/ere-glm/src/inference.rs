//! Confidence intervals and p-values for the ERE, built on the non-central
//! χ² pivot: `n·Ĥ_m` is compared against `χ²_{s̃_m, θ}` and the interval
//! endpoints are the noncentralities solving the pivotal equations.

use serde::{Deserialize, Serialize};

use crate::dist::{chi2_sf, ln_chi2_sf, solve_noncentrality};
use crate::entropy::{pseudo_r2, EreEstimate};
use crate::error::{Error, Result};

/// Inference output for one modality.
///
/// `ci_upper`/`r2_ci_upper` are `None` for one-sided intervals (the interval
/// is `[ci_lower, ∞)` on the H scale). `ln_p_value` is the natural-log
/// survival probability, stable when the p-value itself underflows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EreInference {
    pub h_hat: f64,
    pub n: usize,
    pub s_tilde_m: usize,
    pub alpha: f64,
    pub ci_lower: f64,
    pub ci_upper: Option<f64>,
    pub p_value: f64,
    pub ln_p_value: f64,
    pub r2_hat: f64,
    pub r2_ci_lower: f64,
    pub r2_ci_upper: Option<f64>,
    pub one_sided: bool,
    pub screened_out: bool,
}

/// Builds the confidence interval and p-value from an ERE estimate.
///
/// Two-sided: endpoints `C_l, C_u` solve `F_{s̃_m,C_l}(nĤ) = 1−α/2` and
/// `F_{s̃_m,C_u}(nĤ) = α/2`; the interval is `[C_l/n, C_u/n]`. One-sided:
/// the lower bound solves `F_{s̃_m,C_l}(nĤ) = 1−α` and the upper end is
/// unbounded. The p-value is `P(χ²_{s̃_m} > nĤ)`. A screened-out modality
/// (no screened columns) yields the degenerate flagged report.
pub fn infer(estimate: &EreEstimate, alpha: f64, two_sided: bool) -> Result<EreInference> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if estimate.n < 1 {
        return Err(Error::InvalidConfig("need at least one observation".into()));
    }

    if estimate.screened_out || estimate.s_tilde_m == 0 {
        return Ok(EreInference {
            h_hat: 0.0,
            n: estimate.n,
            s_tilde_m: estimate.s_tilde_m,
            alpha,
            ci_lower: 0.0,
            ci_upper: if two_sided { Some(0.0) } else { None },
            p_value: 1.0,
            ln_p_value: 0.0,
            r2_hat: 0.0,
            r2_ci_lower: 0.0,
            r2_ci_upper: if two_sided { Some(0.0) } else { None },
            one_sided: !two_sided,
            screened_out: true,
        });
    }

    let k = estimate.s_tilde_m;
    let n = estimate.n as f64;
    let nh = n * estimate.h_hat;

    let p_value = chi2_sf(k as f64, nh);
    let ln_p_value = ln_chi2_sf(k as f64, nh);

    let (ci_lower, ci_upper) = if nh <= 0.0 {
        // F_{k,θ}(0) = 0 for every θ, so both pivotal equations clamp at 0.
        (0.0, if two_sided { Some(0.0) } else { None })
    } else if two_sided {
        let c_l = solve_noncentrality(k, nh, 1.0 - alpha / 2.0)?;
        let c_u = solve_noncentrality(k, nh, alpha / 2.0)?;
        (c_l / n, Some(c_u / n))
    } else {
        let c_l = solve_noncentrality(k, nh, 1.0 - alpha)?;
        (c_l / n, None)
    };

    Ok(EreInference {
        h_hat: estimate.h_hat,
        n: estimate.n,
        s_tilde_m: k,
        alpha,
        ci_lower,
        ci_upper,
        p_value,
        ln_p_value,
        r2_hat: pseudo_r2(estimate.h_hat),
        r2_ci_lower: pseudo_r2(ci_lower),
        r2_ci_upper: ci_upper.map(pseudo_r2),
        one_sided: !two_sided,
        screened_out: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ncx2_cdf;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn estimate(h: f64, n: usize, s: usize) -> EreEstimate {
        EreEstimate { h_hat: h, raw_diff: h, s_tilde_m: s, n, clamped: false, screened_out: false }
    }

    #[test]
    fn zero_estimate_degenerates() {
        let inf = infer(&estimate(0.0, 200, 2), 0.05, true).unwrap();
        assert_eq!(inf.p_value, 1.0);
        assert_eq!(inf.ci_lower, 0.0);
        assert_eq!(inf.ci_upper, Some(0.0));
    }

    #[test]
    fn p_value_matches_central_survival() {
        // P(χ²₃ > 10) ≈ 0.01857
        let inf = infer(&estimate(0.10, 100, 3), 0.05, true).unwrap();
        assert_relative_eq!(inf.p_value, 0.018566, max_relative = 1e-4);
        assert_relative_eq!(inf.ln_p_value, inf.p_value.ln(), max_relative = 1e-10);
    }

    #[test]
    fn lower_clamp_and_upper_solution() {
        // n=300, s̃=1, nĤ = 3.8414588: the lower endpoint clamps at zero
        // because F_{1,0}(3.8414588) = 0.95 < 0.975
        let n = 300;
        let h = 3.8414588 / n as f64;
        let inf = infer(&estimate(h, n, 1), 0.05, true).unwrap();
        assert_eq!(inf.ci_lower, 0.0);
        let cu = inf.ci_upper.unwrap() * n as f64;
        assert_relative_eq!(ncx2_cdf(1, cu, 3.8414588), 0.025, epsilon = 1e-8);
    }

    #[test]
    fn screened_out_report() {
        let est = EreEstimate {
            h_hat: 0.0,
            raw_diff: 0.0,
            s_tilde_m: 0,
            n: 50,
            clamped: false,
            screened_out: true,
        };
        let inf = infer(&est, 0.05, true).unwrap();
        assert!(inf.screened_out);
        assert_eq!(inf.p_value, 1.0);
        assert_eq!((inf.ci_lower, inf.ci_upper), (0.0, Some(0.0)));
    }

    #[test]
    fn one_sided_bound_is_unbounded_above() {
        let inf = infer(&estimate(0.4, 250, 3), 0.05, false).unwrap();
        assert!(inf.one_sided);
        assert_eq!(inf.ci_upper, None);
        assert_eq!(inf.r2_ci_upper, None);
        let cl = inf.ci_lower * 250.0;
        if cl > 0.0 {
            assert_relative_eq!(ncx2_cdf(3, cl, 0.4 * 250.0), 0.95, epsilon = 1e-8);
        }
    }

    #[test]
    fn interval_properties_hold_on_random_inferences() {
        let mut rng = ChaCha12Rng::seed_from_u64(2718);
        for _ in 0..100 {
            let n = rng.gen_range(50..2000usize);
            let s = rng.gen_range(1..12usize);
            let h = rng.gen_range(0.0..0.8f64);
            let alpha = rng.gen_range(0.01..0.2);
            let inf = infer(&estimate(h, n, s), alpha, true).unwrap();
            let upper = inf.ci_upper.unwrap();
            assert!(0.0 <= inf.ci_lower && inf.ci_lower <= upper);

            // the lower endpoint clamps exactly when F_{k,0}(nĤ) ≤ 1−α/2
            let central = ncx2_cdf(s, 0.0, h * n as f64);
            if inf.ci_lower == 0.0 {
                assert!(central <= 1.0 - alpha / 2.0 + 1e-12);
            } else {
                assert!(central > 1.0 - alpha / 2.0 - 1e-12);
            }

            // R² interval is the monotone transform of the H interval
            assert_relative_eq!(inf.r2_ci_lower, pseudo_r2(inf.ci_lower), epsilon = 1e-12);
            assert_relative_eq!(inf.r2_ci_upper.unwrap(), pseudo_r2(upper), epsilon = 1e-12);
            assert_relative_eq!(inf.r2_hat, pseudo_r2(inf.h_hat), epsilon = 1e-12);
        }
    }
}
