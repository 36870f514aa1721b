//! Unpenalized maximum-likelihood fitting (Newton/IRLS with step-halving)
//! and the log-likelihood/deviance plumbing shared by every later stage.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{DispersionMode, GlmFamily, GlmKind};

/// Iteration controls for the Newton/IRLS fitter.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub loglik_tol: f64,
    pub gradient_tol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 100, loglik_tol: 1e-10, gradient_tol: 1e-8, max_halvings: 20 }
    }
}

/// Working weights are floored at this value once quasi-separation is
/// detected, keeping the curvature matrix invertible.
const WEIGHT_FLOOR: f64 = 1e-10;
/// |linear predictor| beyond which a binomial fit is flagged quasi-separated.
const SEPARATION_ETA: f64 = 30.0;

/// A fitted model: coefficients, support, and diagnostics.
///
/// `loglik` is deviance-ready: response-only constants are dropped, but for
/// the gaussian family the dispersion normalizer `−(n/2)·log(2πφ)` is kept so
/// that differences between fits carrying different dispersions are the
/// profile log-likelihood differences. For φ = 1 families it is the plain
/// kernel `Σ r(yᵢ)θᵢ − b(θᵢ)`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub support: Vec<usize>,
    pub loglik: f64,
    pub dispersion: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub quasi_separated: bool,
    pub n: usize,
}

impl FitResult {
    /// Re-expresses this fit's log-likelihood at a different dispersion,
    /// leaving coefficients untouched. Used to put nested gaussian fits on a
    /// common dispersion before differencing.
    pub fn at_dispersion(&self, data: &Dataset, family: &GlmFamily, dispersion: f64) -> Result<FitResult> {
        if dispersion <= 0.0 {
            return Err(Error::InvalidConfig(format!("dispersion must be positive, got {dispersion}")));
        }
        let mut out = self.clone();
        out.dispersion = dispersion;
        out.loglik = deviance_ready_loglik(data, &self.beta, family, dispersion)?;
        Ok(out)
    }
}

/// The log-likelihood of the spec'd form `φ⁻¹ Σ [r(Yᵢ)·Xᵢᵀβ − b(Xᵢᵀβ)]`,
/// response-only constants omitted. Errors on a family domain violation in
/// any row.
pub fn log_likelihood(
    data: &Dataset,
    beta: &DVector<f64>,
    family: &GlmFamily,
    dispersion: f64,
) -> Result<f64> {
    if dispersion <= 0.0 {
        return Err(Error::InvalidConfig(format!("dispersion must be positive, got {dispersion}")));
    }
    if beta.len() != data.p() {
        return Err(Error::InvalidData(format!(
            "coefficient length {} does not match {} columns",
            beta.len(),
            data.p()
        )));
    }
    Ok(kernel_loglik_eta(&(&data.x * beta), &data.y, family)? / dispersion)
}

/// Kernel log-likelihood at precomputed linear predictors (dispersion 1).
pub(crate) fn kernel_loglik_eta(eta: &DVector<f64>, y: &DVector<f64>, family: &GlmFamily) -> Result<f64> {
    let mut ll = 0.0;
    for i in 0..y.len() {
        ll += family.loglik_term(y[i], eta[i])?;
    }
    Ok(ll)
}

/// Deviance-ready log-likelihood (see [`FitResult::loglik`]) for arbitrary
/// coefficients.
pub fn deviance_ready_loglik(
    data: &Dataset,
    beta: &DVector<f64>,
    family: &GlmFamily,
    dispersion: f64,
) -> Result<f64> {
    let eta = &data.x * beta;
    if family.kind == GlmKind::Gaussian {
        let rss: f64 = (0..data.n()).map(|i| (data.y[i] - eta[i]).powi(2)).sum();
        let n = data.n() as f64;
        Ok(-0.5 * n * (2.0 * std::f64::consts::PI * dispersion).ln() - rss / (2.0 * dispersion))
    } else {
        Ok(kernel_loglik_eta(&eta, &data.y, family)? / dispersion)
    }
}

pub(crate) struct NewtonOutcome {
    pub beta: DVector<f64>,
    pub kernel_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub quasi_separated: bool,
    /// Accepted-iteration log-likelihoods; the ascent test reads this.
    #[allow(dead_code)]
    pub loglik_path: Vec<f64>,
}

/// Initial coefficients for the Newton iteration. Zero works for every
/// family except the exponential, whose predictor must start strictly
/// positive; there we least-squares match the constant rate 1/ȳ.
fn initial_beta(xs: &DMatrix<f64>, y: &DVector<f64>, family: &GlmFamily) -> Result<DVector<f64>> {
    let s = xs.ncols();
    if family.kind != GlmKind::ExponentialReciprocal || s == 0 {
        return Ok(DVector::zeros(s));
    }
    let ybar = y.mean();
    if ybar <= 0.0 {
        return Err(Error::Domain("exponential responses must be positive".into()));
    }
    let target = DVector::from_element(y.len(), 1.0 / ybar);
    let beta = xs
        .clone()
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::Numerical(format!("least-squares start failed: {e}")))?;
    let eta = xs * &beta;
    if eta.iter().any(|&t| t <= 0.0) {
        return Err(Error::Domain(
            "no strictly positive starting predictor found for the exponential family".into(),
        ));
    }
    Ok(beta)
}

/// Newton/IRLS on a dense design. Step-halving enforces monotone ascent of
/// the restricted log-likelihood across accepted iterations.
pub(crate) fn newton_on_matrix(
    xs: &DMatrix<f64>,
    y: &DVector<f64>,
    family: &GlmFamily,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = xs.nrows();
    let s = xs.ncols();
    let binomial = matches!(family.kind, GlmKind::Logistic | GlmKind::Probit);

    let mut beta = initial_beta(xs, y, family)?;
    let mut eta = xs * &beta;
    let mut ll = kernel_loglik_eta(&eta, y, family)?;
    let mut quasi_separated = false;
    let mut loglik_path = vec![ll];
    let mut gradient_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    if s == 0 {
        return Ok(NewtonOutcome {
            beta,
            kernel_loglik: ll,
            iterations: 0,
            converged: true,
            gradient_norm: 0.0,
            quasi_separated: false,
            loglik_path,
        });
    }

    let mut u = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    for iter in 1..=opts.max_iter {
        iterations = iter;
        let mut separated_now = false;
        for i in 0..n {
            let (ui, wi) = family.score_curvature(y[i], eta[i])?;
            u[i] = ui;
            if binomial && eta[i].abs() > SEPARATION_ETA {
                separated_now = true;
                w[i] = wi.max(WEIGHT_FLOOR);
            } else {
                w[i] = wi;
            }
        }
        quasi_separated |= separated_now;

        let grad = xs.transpose() * &u;
        gradient_norm = grad.norm();
        let scale = ll.abs().max(1.0);
        if gradient_norm <= opts.gradient_tol * scale {
            converged = true;
            break;
        }

        // H = XᵀWX
        let mut xw = xs.clone();
        for i in 0..n {
            xw.row_mut(i).scale_mut(w[i]);
        }
        let hess = xs.transpose() * xw;
        let chol = hess
            .cholesky()
            .ok_or_else(|| Error::RankDeficient((0..s).collect()))?;
        let direction = chol.solve(&grad);

        // Step-halving for monotone ascent; domain violations read as −∞.
        let mut accepted = false;
        let mut step = 1.0;
        for _ in 0..=opts.max_halvings {
            let candidate = &beta + step * &direction;
            let eta_c = xs * &candidate;
            match kernel_loglik_eta(&eta_c, y, family) {
                Ok(ll_c) if ll_c >= ll - 1e-13 * scale => {
                    beta = candidate;
                    eta = eta_c;
                    let improved = (ll_c - ll).abs() <= opts.loglik_tol * scale;
                    ll = ll_c;
                    loglik_path.push(ll);
                    accepted = true;
                    if improved {
                        // Relative log-likelihood change below tolerance:
                        // confirm the gradient before declaring convergence.
                        let mut u2 = DVector::zeros(n);
                        for i in 0..n {
                            u2[i] = family.score_curvature(y[i], eta[i])?.0;
                        }
                        gradient_norm = (xs.transpose() * u2).norm();
                        if gradient_norm <= opts.gradient_tol * ll.abs().max(1.0) {
                            converged = true;
                        }
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted || converged {
            break;
        }
    }

    Ok(NewtonOutcome {
        beta,
        kernel_loglik: ll,
        iterations,
        converged,
        gradient_norm,
        quasi_separated,
        loglik_path,
    })
}

/// Gathers `columns` of the design into a dense matrix.
pub(crate) fn gather_columns(x: &DMatrix<f64>, columns: &[usize]) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, columns.len());
    for (k, &j) in columns.iter().enumerate() {
        out.set_column(k, &x.column(j));
    }
    out
}

/// Maximum-likelihood fit restricted to `support`; coefficients outside the
/// support are exactly zero.
///
/// For gaussian fits with estimated dispersion, `dispersion = RSS/(n − |support|)`.
pub fn fit_mle(data: &Dataset, support: &[usize], family: &GlmFamily) -> Result<FitResult> {
    fit_mle_with(data, support, family, &NewtonOptions::default())
}

pub fn fit_mle_with(
    data: &Dataset,
    support: &[usize],
    family: &GlmFamily,
    opts: &NewtonOptions,
) -> Result<FitResult> {
    let n = data.n();
    let p = data.p();
    let mut support: Vec<usize> = support.to_vec();
    support.sort_unstable();
    support.dedup();
    if let Some(&bad) = support.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidConfig(format!("support index {bad} out of range for p = {p}")));
    }
    if support.len() >= n {
        return Err(Error::InvalidConfig(format!(
            "support size {} must be smaller than n = {}",
            support.len(),
            n
        )));
    }

    let xs = gather_columns(&data.x, &support);
    let out = newton_on_matrix(&xs, &data.y, family, opts)?;

    let mut beta = DVector::zeros(p);
    for (k, &j) in support.iter().enumerate() {
        beta[j] = out.beta[k];
    }

    let (dispersion, loglik) = finalize_loglik(data, &beta, family, support.len(), out.kernel_loglik)?;

    Ok(FitResult {
        beta,
        support,
        loglik,
        dispersion,
        converged: out.converged,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        quasi_separated: out.quasi_separated,
        n,
    })
}

/// Computes the fit's dispersion and deviance-ready log-likelihood from the
/// kernel value.
pub(crate) fn finalize_loglik(
    data: &Dataset,
    beta: &DVector<f64>,
    family: &GlmFamily,
    df: usize,
    kernel_loglik: f64,
) -> Result<(f64, f64)> {
    let n = data.n();
    if family.kind == GlmKind::Gaussian {
        let eta = &data.x * beta;
        let rss: f64 = (0..n).map(|i| (data.y[i] - eta[i]).powi(2)).sum();
        let dispersion = match family.dispersion_mode {
            DispersionMode::FixedOne => 1.0,
            DispersionMode::Estimated => {
                if n <= df {
                    return Err(Error::Numerical(format!(
                        "cannot estimate dispersion with df {df} and n {n}"
                    )));
                }
                (rss / (n - df) as f64).max(f64::MIN_POSITIVE)
            }
        };
        let loglik = -0.5 * n as f64 * (2.0 * std::f64::consts::PI * dispersion).ln()
            - rss / (2.0 * dispersion);
        Ok((dispersion, loglik))
    } else {
        Ok((1.0, kernel_loglik))
    }
}

/// `(2/n)·(loglik_full − loglik_reduced)`. Both fits must come from the same
/// dataset; the caller controls the dispersion convention through the fits'
/// stored log-likelihoods (see [`FitResult::at_dispersion`]).
pub fn deviance_difference(full: &FitResult, reduced: &FitResult, n: usize) -> Result<f64> {
    if full.n != n || reduced.n != n {
        return Err(Error::InvalidData(format!(
            "sample-size mismatch: fits carry n = {} and {}, caller says {}",
            full.n, reduced.n, n
        )));
    }
    if full.beta.len() != reduced.beta.len() {
        return Err(Error::InvalidData("fits come from designs of different width".into()));
    }
    Ok(2.0 / n as f64 * (full.loglik - reduced.loglik))
}

/// Bayesian information criterion used for threshold and penalty tuning:
/// `−2·loglik + df·log n` with `df` the fitted model size. For gaussian fits
/// with estimated dispersion the log-likelihood is profiled over the
/// dispersion (`n·log(RSS/n)` up to constants) so the criterion stays
/// scale-aware.
pub fn bic(data: &Dataset, fit: &FitResult, family: &GlmFamily) -> f64 {
    let n = fit.n as f64;
    let df = fit.support.len() as f64;
    if family.kind == GlmKind::Gaussian {
        let eta = &data.x * &fit.beta;
        let rss: f64 = (0..fit.n).map(|i| (data.y[i] - eta[i]).powi(2)).sum();
        return match family.dispersion_mode {
            DispersionMode::Estimated => n * (rss.max(f64::MIN_POSITIVE) / n).ln() + df * n.ln(),
            DispersionMode::FixedOne => rss + df * n.ln(),
        };
    }
    -2.0 * fit.loglik + df * n.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn toy_gaussian() -> Dataset {
        Dataset::new(
            dmatrix![1.0; 2.0; 3.0],
            dvector![2.1, 3.9, 6.0],
            vec!["x1".into()],
        )
        .unwrap()
    }

    #[test]
    fn log_likelihood_matches_direct_summation() {
        // binomial at beta = 0: every term is −log 2
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64);
        let y = DVector::from_fn(10, |i, _| (i % 2) as f64);
        let data = Dataset::new(x, y, vec!["x".into()]).unwrap();
        let ll = log_likelihood(&data, &dvector![0.0], &GlmFamily::logistic(), 1.0).unwrap();
        assert_relative_eq!(ll, -10.0 * std::f64::consts::LN_2, max_relative = 1e-14);

        // poisson at beta = 0: Σ yᵢ·0 − 5·e⁰ = −5
        let x = DMatrix::from_fn(5, 1, |i, _| i as f64);
        let y = dvector![0.0, 3.0, 1.0, 2.0, 4.0];
        let data = Dataset::new(x, y, vec!["x".into()]).unwrap();
        let ll = log_likelihood(&data, &dvector![0.0], &GlmFamily::poisson(), 1.0).unwrap();
        assert_relative_eq!(ll, -5.0, max_relative = 1e-14);

        // gaussian kernel by independent summation
        let data = toy_gaussian();
        let beta = dvector![2.0];
        let mut expect = 0.0;
        for i in 0..3 {
            let theta = 2.0 * data.x[(i, 0)];
            expect += data.y[i] * theta - 0.5 * theta * theta;
        }
        let ll = log_likelihood(&data, &beta, &GlmFamily::gaussian(), 1.0).unwrap();
        assert_relative_eq!(ll, expect, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_mle_matches_normal_equations() {
        let data = toy_gaussian();
        let fit = fit_mle(&data, &[0], &GlmFamily::gaussian()).unwrap();
        // Σxy/Σx² = 27.9/14
        assert_relative_eq!(fit.beta[0], 27.9 / 14.0, max_relative = 1e-12);
        assert!(fit.converged);
        // dispersion = RSS/(n − 1)
        let bh = 27.9 / 14.0;
        let rss: f64 = (0..3)
            .map(|i| (data.y[i] - bh * data.x[(i, 0)]).powi(2))
            .sum();
        assert_relative_eq!(fit.dispersion, rss / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_support_is_the_null_model() {
        let data = toy_gaussian();
        let family = GlmFamily::gaussian_unit_variance();
        let fit = fit_mle(&data, &[], &family).unwrap();
        assert!(fit.beta.iter().all(|&b| b == 0.0));
        let expect = deviance_ready_loglik(&data, &dvector![0.0], &family, 1.0).unwrap();
        assert_relative_eq!(fit.loglik, expect, max_relative = 1e-14);
    }

    #[test]
    fn logistic_null_fit_stays_near_zero_and_matches_grid_search() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 500;
        let x = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(n, |i, _| if (i % 2) == 0 { 1.0 } else { 0.0 });
        let data = Dataset::new(x, y, vec!["x".into()]).unwrap();
        let fit = fit_mle(&data, &[0], &GlmFamily::logistic()).unwrap();
        assert!(fit.beta[0].abs() < 0.2, "beta = {}", fit.beta[0]);
        assert!(fit.gradient_norm < 1e-8 * fit.loglik.abs().max(1.0));

        // grid-search oracle over beta confirms the maximizer
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        let mut b = -1.0;
        while b <= 1.0 {
            let ll = log_likelihood(&data, &dvector![b], &GlmFamily::logistic(), 1.0).unwrap();
            if ll > best.0 {
                best = (ll, b);
            }
            b += 1e-3;
        }
        assert!((fit.beta[0] - best.1).abs() < 2e-3);
    }

    #[test]
    fn accepted_iterations_are_monotone_in_loglik() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 120;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-2.0..2.0));
        let y = DVector::from_fn(n, |i, _| {
            let eta = 1.5 * x[(i, 0)] - 2.0 * x[(i, 1)];
            let p = 1.0 / (1.0 + (-eta as f64).exp());
            if rng.gen::<f64>() < p {
                1.0
            } else {
                0.0
            }
        });
        let data = Dataset::new(x, y, (0..3).map(|j| format!("x{j}")).collect()).unwrap();
        let xs = gather_columns(&data.x, &[0, 1, 2]);
        let out = newton_on_matrix(&xs, &data.y, &GlmFamily::logistic(), &NewtonOptions::default())
            .unwrap();
        for pair in out.loglik_path.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-10);
        }
        assert!(out.converged);
    }

    #[test]
    fn deviance_difference_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 60;
        let x = DMatrix::from_fn(n, 4, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(n, |i, _| {
            2.0 * x[(i, 0)] - x[(i, 2)] + 0.3 * rng.gen_range(-1.0..1.0)
        });
        let data = Dataset::new(x, y, (0..4).map(|j| format!("x{j}")).collect()).unwrap();
        let family = GlmFamily::gaussian_unit_variance();

        let full = fit_mle(&data, &[0, 1, 2], &family).unwrap();
        let reduced = fit_mle(&data, &[0], &family).unwrap();

        // identical fits → 0
        assert_eq!(deviance_difference(&full, &full, n).unwrap(), 0.0);

        // nested OLS at dispersion 1 → (RSS_reduced − RSS_full)/n by direct RSS
        let rss = |fit: &FitResult| -> f64 {
            let eta = &data.x * &fit.beta;
            (0..n).map(|i| (data.y[i] - eta[i]).powi(2)).sum()
        };
        let d = deviance_difference(&full, &reduced, n).unwrap();
        assert_relative_eq!(d, (rss(&reduced) - rss(&full)) / n as f64, max_relative = 1e-10);
        assert!(d >= 0.0, "nested unpenalized deviance difference must be non-negative");

        // mismatched n is an error
        assert!(deviance_difference(&full, &reduced, n + 1).is_err());
    }

    #[test]
    fn nested_monotonicity_across_families() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let n = 200;
        let x = DMatrix::from_fn(n, 5, |_, _| rng.gen_range(-1.5..1.5));
        for (family, gen_y) in [
            (
                GlmFamily::logistic(),
                Box::new(|eta: f64, rng: &mut ChaCha12Rng| {
                    if rng.gen::<f64>() < 1.0 / (1.0 + (-eta).exp()) {
                        1.0
                    } else {
                        0.0
                    }
                }) as Box<dyn Fn(f64, &mut ChaCha12Rng) -> f64>,
            ),
            (
                GlmFamily::poisson(),
                Box::new(|eta: f64, rng: &mut ChaCha12Rng| {
                    let lambda = eta.exp().min(40.0);
                    let mut k = 0.0;
                    let mut acc = (-lambda).exp();
                    let mut cum = acc;
                    let u = rng.gen::<f64>();
                    while cum < u && k < 1000.0 {
                        k += 1.0;
                        acc *= lambda / k;
                        cum += acc;
                    }
                    k
                }),
            ),
        ] {
            let y = DVector::from_fn(n, |i, _| {
                let eta = 0.8 * x[(i, 0)] - 0.5 * x[(i, 1)];
                gen_y(eta, &mut rng)
            });
            let data =
                Dataset::new(x.clone(), y, (0..5).map(|j| format!("x{j}")).collect()).unwrap();
            let full = fit_mle(&data, &[0, 1, 2, 3], &family).unwrap();
            let reduced = fit_mle(&data, &[0, 1], &family).unwrap();
            assert!(
                deviance_difference(&full, &reduced, n).unwrap() >= -1e-10,
                "{} nested deviance went negative",
                family.kind.name()
            );
        }
    }

    #[test]
    fn separation_is_flagged_and_capped() {
        // perfectly separated one-dimensional data
        let x = DMatrix::from_fn(40, 1, |i, _| if i < 20 { -1.0 - i as f64 / 20.0 } else { 1.0 + i as f64 / 20.0 });
        let y = DVector::from_fn(40, |i, _| if i < 20 { 0.0 } else { 1.0 });
        let data = Dataset::new(x, y, vec!["x".into()]).unwrap();
        let fit = fit_mle(&data, &[0], &GlmFamily::logistic()).unwrap();
        assert!(fit.quasi_separated);
        assert!(fit.beta[0].abs() < 100.0, "coefficients should be capped, got {}", fit.beta[0]);
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let n = 400;
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { rng.gen_range(-0.4..0.4) + (i as f64 * 0.0) });
        let beta_true = dvector![2.0, 1.0];
        let y = DVector::from_fn(n, |i, _| {
            let rate = x.row(i).transpose().dot(&beta_true);
            -rng.gen::<f64>().ln() / rate
        });
        let data = Dataset::new(x, y, vec!["one".into(), "x".into()]).unwrap();
        let fit = fit_mle(&data, &[0, 1], &GlmFamily::exponential()).unwrap();
        assert!(fit.converged);
        assert!((fit.beta[0] - 2.0).abs() < 0.3 && (fit.beta[1] - 1.0).abs() < 0.6);
    }
}
