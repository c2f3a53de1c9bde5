//! Parametric location/scale harmonization across sites.
//!
//! `fit` regresses out a grand mean and optional covariate effects per
//! feature, standardizes by the pooled residual scale, estimates per-site
//! additive (γ) and multiplicative (δ²) corrections on the standardized data,
//! and optionally shrinks them with an empirical-Bayes fixed point driven by
//! moment-matched normal / inverse-gamma hyperpriors. `transform` applies a
//! fitted model to new samples from known sites without refitting.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Multiplicative corrections below this are clamped so transform stays finite
/// for features that are constant within a site.
const DELTA2_FLOOR: f64 = 1e-12;

/// Variance of the scale estimates below this disables shrinkage for a site.
const DEGENERATE_S2: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombatConfig {
    /// Empirical-Bayes shrinkage of the per-site corrections.
    pub use_eb: bool,
    /// Maximum fixed-point sweeps per site.
    pub max_iters: usize,
    /// Relative-change convergence threshold of the fixed point.
    pub tol: f64,
    /// Ridge added to the normal equations; keeps the solve well-posed when
    /// a covariate is nearly collinear with the site indicators.
    pub ridge_eps: f64,
    /// Lower bound on the pooled residual scale.
    pub sigma_floor: f64,
}

impl Default for CombatConfig {
    fn default() -> Self {
        CombatConfig {
            use_eb: true,
            max_iters: 500,
            tol: 1e-4,
            ridge_eps: 1e-8,
            sigma_floor: 1e-8,
        }
    }
}

impl CombatConfig {
    fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 {
            return Err(Error::Config("combat tol must be > 0".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("combat max_iters must be >= 1".into()));
        }
        if self.sigma_floor <= 0.0 {
            return Err(Error::Config("combat sigma_floor must be > 0".into()));
        }
        if self.ridge_eps < 0.0 {
            return Err(Error::Config("combat ridge_eps must be >= 0".into()));
        }
        Ok(())
    }
}

/// Hyperprior of one site: normal prior (γ̄, τ²) for the additive corrections
/// and inverse-gamma (λ, θ) for the multiplicative ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePrior {
    pub gamma_bar: f64,
    pub tau2: f64,
    pub lambda: f64,
    pub theta: f64,
    /// Shrinkage disabled: too few features or no spread in the scale
    /// estimates (λ ≤ 2 would leave the prior variance undefined).
    pub degenerate: bool,
}

impl SitePrior {
    fn degenerate() -> SitePrior {
        SitePrior {
            gamma_bar: 0.0,
            tau2: 0.0,
            lambda: 0.0,
            theta: 0.0,
            degenerate: true,
        }
    }
}

/// Fitted harmonization parameters.
///
/// Serializes to a single JSON document: arrays are row-major with explicit
/// dimensions, the site order is explicit, and the config is embedded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombatModel {
    /// Grand mean per feature.
    pub alpha: Vec<f64>,
    /// Covariate coefficients, t×p (zero rows when fitted without covariates).
    pub beta: Array2<f64>,
    /// Pooled residual scale per feature, floored at `sigma_floor`.
    pub sigma: Vec<f64>,
    /// Known sites in lexicographic order with their fit-time sample counts.
    pub site_index: Vec<(String, usize)>,
    /// Additive corrections on the standardized scale, s×p.
    pub gamma_star: Array2<f64>,
    /// Multiplicative corrections (variances) on the standardized scale, s×p.
    pub delta_star2: Array2<f64>,
    /// Per-site hyperpriors (all degenerate when `use_eb` is off).
    pub priors: Vec<SitePrior>,
    pub config: CombatConfig,
}

impl CombatModel {
    pub fn n_features(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.beta.nrows()
    }

    pub fn site_position(&self, site: &str) -> Result<usize> {
        self.site_index
            .iter()
            .position(|(s, _)| s == site)
            .ok_or_else(|| Error::Validation(format!("unknown site {site:?}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<CombatModel> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Moment-matched inverse-gamma parameters (λ, θ) with mean `m` and
/// variance `s2`, or `None` when the spread is degenerate and shrinkage
/// must be disabled.
pub fn moment_match_inverse_gamma(m: f64, s2: f64) -> Option<(f64, f64)> {
    if !(m.is_finite() && s2.is_finite()) || m <= 0.0 || s2 <= DEGENERATE_S2 * m.mul_add(m, 1.0) {
        return None;
    }
    let lambda = (2.0 * s2 + m * m) / s2;
    let theta = (m * s2 + m * m * m) / s2;
    Some((lambda, theta))
}

struct SiteLayout {
    /// Lexicographically ordered site labels with counts.
    index: Vec<(String, usize)>,
    /// Site position per row.
    of_row: Vec<usize>,
}

fn site_layout(sites: &[String]) -> SiteLayout {
    let mut labels: Vec<String> = sites.to_vec();
    labels.sort();
    labels.dedup();
    let of_row = sites
        .iter()
        .map(|s| labels.binary_search(s).expect("label present"))
        .collect();
    let index = labels
        .into_iter()
        .map(|l| {
            let count = sites.iter().filter(|s| **s == l).count();
            (l, count)
        })
        .collect();
    SiteLayout { index, of_row }
}

fn check_finite(name: &str, m: ArrayView2<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("non-finite value in {name}")));
    }
    Ok(())
}

fn covariate_width(covariates: &Option<ArrayView2<f64>>) -> usize {
    covariates.as_ref().map_or(0, |c| c.ncols())
}

/// Fit harmonization parameters.
///
/// Per feature: solve the ridge-regularized normal equations of
/// `y = α + Xβ + γ_site` (site effects carry the weighted zero-sum
/// constraint Σᵢ nᵢ/N·γ̂ᵢ = 0), pool the residual variance, standardize, and
/// estimate per-site location/scale corrections on the standardized data,
/// optionally shrunk by the empirical-Bayes fixed point.
pub fn fit(
    features: ArrayView2<f64>,
    sites: &[String],
    covariates: Option<ArrayView2<f64>>,
    config: &CombatConfig,
) -> Result<CombatModel> {
    config.validate()?;
    let (n, p) = features.dim();
    if p < 1 || n < 1 {
        return Err(Error::Validation("empty feature matrix".into()));
    }
    if sites.len() != n {
        return Err(Error::Validation("site label count mismatch".into()));
    }
    check_finite("features", features)?;
    if let Some(c) = &covariates {
        if c.nrows() != n {
            return Err(Error::Validation("covariate row count mismatch".into()));
        }
        check_finite("covariates", *c)?;
    }

    let layout = site_layout(sites);
    let s = layout.index.len();
    if let Some((label, count)) = layout.index.iter().find(|(_, c)| *c < 2) {
        return Err(Error::Validation(format!(
            "site {label:?} has {count} sample(s); harmonization needs at least 2 per site"
        )));
    }
    let t = covariate_width(&covariates);

    // design matrix [site indicators | covariates]
    let d = s + t;
    let mut design = Array2::<f64>::zeros((n, d));
    for (j, &site) in layout.of_row.iter().enumerate() {
        design[[j, site]] = 1.0;
    }
    if let Some(c) = &covariates {
        for j in 0..n {
            for v in 0..t {
                design[[j, s + v]] = c[[j, v]];
            }
        }
    }
    let mut normal = crate::linalg::gram(design.view());
    for i in 0..d {
        normal[[i, i]] += config.ridge_eps;
    }
    let chol = Cholesky::new(normal.view()).map_err(|_| {
        Error::Numerical(
            "normal equations are singular; increase ridge_eps or check site/covariate design"
                .into(),
        )
    })?;

    let counts: Vec<f64> = layout.index.iter().map(|(_, c)| *c as f64).collect();
    let weights: Vec<f64> = counts.iter().map(|c| c / n as f64).collect();

    struct FeatureFit {
        alpha: f64,
        beta: Vec<f64>,
        sigma: f64,
        z: Vec<f64>,
    }

    let fits: Vec<FeatureFit> = (0..p)
        .into_par_iter()
        .map(|g| {
            let y = features.column(g);
            let rhs = crate::linalg::gramv(design.view(), y);
            let b = chol.solve(rhs.view());
            let alpha: f64 = (0..s).map(|i| weights[i] * b[i]).sum();
            let mut ss = 0.0;
            let mut stand = Vec::with_capacity(n);
            for j in 0..n {
                let fitted: f64 = design
                    .row(j)
                    .iter()
                    .zip(b.iter())
                    .map(|(x, w)| x * w)
                    .sum();
                let r = y[j] - fitted;
                ss += r * r;
                let cov_part: f64 = (0..t).map(|v| design[[j, s + v]] * b[s + v]).sum();
                stand.push(y[j] - alpha - cov_part);
            }
            let sigma2 = (ss / n as f64).max(config.sigma_floor * config.sigma_floor);
            let sigma = sigma2.sqrt();
            for v in &mut stand {
                *v /= sigma;
            }
            FeatureFit {
                alpha,
                beta: (s..d).map(|i| b[i]).collect(),
                sigma,
                z: stand,
            }
        })
        .collect();

    let mut alpha = Vec::with_capacity(p);
    let mut sigma = Vec::with_capacity(p);
    let mut beta = Array2::<f64>::zeros((t, p));
    let mut z = Array2::<f64>::zeros((n, p));
    for (g, f) in fits.iter().enumerate() {
        alpha.push(f.alpha);
        sigma.push(f.sigma);
        for v in 0..t {
            beta[[v, g]] = f.beta[v];
        }
        for j in 0..n {
            z[[j, g]] = f.z[j];
        }
    }

    // per-site first and second moments of the standardized data
    let mut sum_z = Array2::<f64>::zeros((s, p));
    let mut sum_z2 = Array2::<f64>::zeros((s, p));
    for j in 0..n {
        let i = layout.of_row[j];
        for g in 0..p {
            let v = z[[j, g]];
            sum_z[[i, g]] += v;
            sum_z2[[i, g]] += v * v;
        }
    }
    let mut gamma_hat = Array2::<f64>::zeros((s, p));
    let mut delta_hat2 = Array2::<f64>::zeros((s, p));
    for i in 0..s {
        let ni = counts[i];
        for g in 0..p {
            let mean = sum_z[[i, g]] / ni;
            gamma_hat[[i, g]] = mean;
            delta_hat2[[i, g]] = (sum_z2[[i, g]] / ni - mean * mean).max(0.0);
        }
    }
    // on the standardized scale the pooled variance is one, so anything this
    // small is numerically zero
    const ZERO_VARIANCE: f64 = 1e-10;
    for i in 0..s {
        if (0..p).all(|g| delta_hat2[[i, g]] < ZERO_VARIANCE) {
            return Err(Error::Validation(format!(
                "site {:?} has zero within-site variance on all features",
                layout.index[i].0
            )));
        }
    }

    let (gamma_star, delta_star2, priors) = if config.use_eb {
        shrink_sites(
            &gamma_hat,
            &delta_hat2,
            &sum_z,
            &sum_z2,
            &counts,
            config,
            &layout,
        )?
    } else {
        let priors = vec![SitePrior::degenerate(); s];
        (gamma_hat, delta_hat2, priors)
    };

    let mut delta_star2 = delta_star2;
    delta_star2.mapv_inplace(|v| v.max(DELTA2_FLOOR));

    Ok(CombatModel {
        alpha,
        beta,
        sigma,
        site_index: layout.index,
        gamma_star,
        delta_star2,
        priors,
        config: config.clone(),
    })
}

/// Empirical-Bayes posterior mean of the additive correction.
fn post_gamma(n_i: f64, tau2: f64, gamma_hat: f64, gamma_bar: f64, delta2: f64) -> f64 {
    (n_i * tau2 * gamma_hat + delta2 * gamma_bar) / (n_i * tau2 + delta2)
}

/// Empirical-Bayes posterior estimate of the multiplicative correction.
fn post_delta2(theta: f64, sum2: f64, n_i: f64, lambda: f64) -> f64 {
    (theta + 0.5 * sum2) / (n_i / 2.0 + lambda - 1.0)
}

fn rel_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(1e-12)
}

#[allow(clippy::too_many_arguments)]
fn shrink_sites(
    gamma_hat: &Array2<f64>,
    delta_hat2: &Array2<f64>,
    sum_z: &Array2<f64>,
    sum_z2: &Array2<f64>,
    counts: &[f64],
    config: &CombatConfig,
    layout: &SiteLayout,
) -> Result<(Array2<f64>, Array2<f64>, Vec<SitePrior>)> {
    let (s, p) = gamma_hat.dim();

    struct SiteResult {
        gamma: Vec<f64>,
        delta2: Vec<f64>,
        prior: SitePrior,
    }

    let results: Vec<Result<SiteResult>> = (0..s)
        .into_par_iter()
        .map(|i| {
            let g_hat: Vec<f64> = (0..p).map(|g| gamma_hat[[i, g]]).collect();
            let d_hat: Vec<f64> = (0..p).map(|g| delta_hat2[[i, g]]).collect();
            let n_i = counts[i];

            // hyperparameters by moment matching across features
            let degenerate_prior = |g: &[f64], d: &[f64]| SiteResult {
                gamma: g.to_vec(),
                delta2: d.to_vec(),
                prior: SitePrior::degenerate(),
            };
            if p < 2 {
                return Ok(degenerate_prior(&g_hat, &d_hat));
            }
            let pf = p as f64;
            let gamma_bar = g_hat.iter().sum::<f64>() / pf;
            let tau2 = g_hat
                .iter()
                .map(|v| (v - gamma_bar) * (v - gamma_bar))
                .sum::<f64>()
                / (pf - 1.0);
            let m = d_hat.iter().sum::<f64>() / pf;
            let s2 = d_hat.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (pf - 1.0);
            let Some((lambda, theta)) = moment_match_inverse_gamma(m, s2) else {
                return Ok(degenerate_prior(&g_hat, &d_hat));
            };

            let mut gamma = g_hat.clone();
            let mut delta2 = d_hat.clone();
            let mut residual = f64::INFINITY;
            for _ in 0..config.max_iters {
                // one sweep: γ from the current δ², then δ² from the new γ
                for g in 0..p {
                    let g_new = post_gamma(n_i, tau2, g_hat[g], gamma_bar, delta2[g]);
                    let sum2 = (sum_z2[[i, g]] - 2.0 * g_new * sum_z[[i, g]]
                        + n_i * g_new * g_new)
                        .max(0.0);
                    gamma[g] = g_new;
                    delta2[g] = post_delta2(theta, sum2, n_i, lambda);
                }
                // the δ² equation holds by construction after a sweep, so the
                // coupled residual reduces to the γ equation at the new δ²
                residual = (0..p)
                    .map(|g| {
                        rel_change(post_gamma(n_i, tau2, g_hat[g], gamma_bar, delta2[g]), gamma[g])
                    })
                    .fold(0.0, f64::max);
                if residual < config.tol {
                    return Ok(SiteResult {
                        gamma,
                        delta2,
                        prior: SitePrior {
                            gamma_bar,
                            tau2,
                            lambda,
                            theta,
                            degenerate: false,
                        },
                    });
                }
            }
            Err(Error::Numerical(format!(
                "empirical-Bayes fixed point for site {:?} did not converge in {} iterations \
                 (last relative change {residual:e})",
                layout.index[i].0, config.max_iters
            )))
        })
        .collect();

    let mut gamma_star = Array2::<f64>::zeros((s, p));
    let mut delta_star2 = Array2::<f64>::zeros((s, p));
    let mut priors = Vec::with_capacity(s);
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        for g in 0..p {
            gamma_star[[i, g]] = r.gamma[g];
            delta_star2[[i, g]] = r.delta2[g];
        }
        priors.push(r.prior);
    }
    Ok((gamma_star, delta_star2, priors))
}

/// Apply a fitted model: standardize with the stored α, β, σ and undo the
/// per-site corrections. No refitting occurs; applying to the fit inputs
/// reproduces the fit-time adjusted matrix bit for bit.
pub fn transform(
    model: &CombatModel,
    features: ArrayView2<f64>,
    sites: &[String],
    covariates: Option<ArrayView2<f64>>,
) -> Result<Array2<f64>> {
    let (m, p) = features.dim();
    if p != model.n_features() {
        return Err(Error::Validation(format!(
            "feature width {p} does not match the model ({})",
            model.n_features()
        )));
    }
    if sites.len() != m {
        return Err(Error::Validation("site label count mismatch".into()));
    }
    check_finite("features", features)?;
    let t = covariate_width(&covariates);
    if t != model.n_covariates() {
        return Err(Error::Validation(format!(
            "covariate width {t} does not match the model ({})",
            model.n_covariates()
        )));
    }
    if let Some(c) = &covariates {
        if c.nrows() != m {
            return Err(Error::Validation("covariate row count mismatch".into()));
        }
        check_finite("covariates", *c)?;
    }
    let site_pos: Vec<usize> = sites
        .iter()
        .map(|s| model.site_position(s))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Array2::<f64>::zeros((m, p));
    for j in 0..m {
        let i = site_pos[j];
        for g in 0..p {
            let cov_part: f64 = match &covariates {
                Some(c) => (0..t).map(|v| c[[j, v]] * model.beta[[v, g]]).sum(),
                None => 0.0,
            };
            let stand_mean = model.alpha[g] + cov_part;
            let z = (features[[j, g]] - stand_mean) / model.sigma[g];
            let delta = model.delta_star2[[i, g]].sqrt();
            out[[j, g]] = model.sigma[g] / delta * (z - model.gamma_star[[i, g]]) + stand_mean;
        }
    }
    Ok(out)
}

/// Fit and return the model together with the adjusted training data.
pub fn fit_transform(
    features: ArrayView2<f64>,
    sites: &[String],
    covariates: Option<ArrayView2<f64>>,
    config: &CombatConfig,
) -> Result<(CombatModel, Array2<f64>)> {
    let model = fit(features, sites, covariates, config)?;
    let adjusted = transform(&model, features, sites, covariates)?;
    Ok((model, adjusted))
}
