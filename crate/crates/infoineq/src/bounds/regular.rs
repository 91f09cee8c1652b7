//! Derivative-based quadratic-form bounds: the order-k escort Bhattacharyya
//! bound for scalar parameters and its multiparameter mixed-partial version.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_strict, quadratic_form_inv, Cholesky, SymMatrix};
use crate::model::{EscortPair, StatFn, Statistic};
use crate::numerics::derivative::{derivative, mixed_default_steps, mixed_partial};

use super::{
    density_expect, equality_correlation, finish_report, lambda_fn,
    probe_x, safe_step, support_breaks, BoundReport, Diagnostics, EngineCtx, ScoreBuild,
    ScoreProvenance, ScoreSet, Source, Tracker,
};

/// Scores `S_i = g^{(i)}(x,θ) / f(x,θ)` for i = 1..k (scalar parameter).
pub(crate) fn escort_derivative_scores(
    pair: &EscortPair,
    theta: f64,
    k: usize,
    ctx: &EngineCtx,
) -> Result<ScoreBuild> {
    let _ = ctx;
    let mut scores: Vec<StatFn> = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    let mut numeric = false;
    let theta_vec = vec![theta];
    let mut breaks = support_breaks(&pair.g, &theta_vec);

    for order in 1..=k {
        let have_analytic = pair.g.dtheta_at(&probe_x(&pair.g), &theta_vec, &[order]).is_some();
        let f_pdf = pair.f.pdf.clone();
        let tv = theta_vec.clone();
        if have_analytic {
            let g = pair.g.clone();
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &tv);
                if fx <= 0.0 {
                    return 0.0;
                }
                g.dtheta_at(x, &tv, &[order]).unwrap_or(f64::NAN) / fx
            }));
        } else {
            numeric = true;
            let g_pdf = pair.g.pdf.clone();
            let (lo, hi) = pair.g.param_domain[0];
            let h = safe_step(theta, lo, hi, order)?;
            for mult in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
                breaks.extend(support_breaks(&pair.g, &[theta + mult * h]));
            }
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &tv);
                if fx <= 0.0 {
                    return 0.0;
                }
                let gp = g_pdf.clone();
                let xx = x.to_vec();
                match derivative(&move |t| gp(&xx, &[t]), theta, order, h) {
                    Ok(d) => d.value / fx,
                    Err(_) => f64::NAN,
                }
            }));
        }
        labels.push(format!("d^{order}"));
    }
    Ok(ScoreBuild {
        set: ScoreSet { scores, provenance: ScoreProvenance::EscortDerivative, labels },
        numeric,
        breaks,
    })
}

/// Covariance of a score set under f(·,θ) with the diagnostics the engines
/// need to reject degenerate configurations.
pub(crate) struct CovBuild {
    pub sigma: SymMatrix,
    pub zero_mean_max: f64,
    /// Number of leading scores with genuinely positive variance. A score
    /// whose variance is pure cancellation noise against its raw second
    /// moment (a numerically constant score, as the classical score of a
    /// family whose support moves with θ) truncates the usable set here.
    pub usable: usize,
}

/// Ratio of Var(S) to E[S²] below which a score counts as constant.
const VARIANCE_FLOOR: f64 = 1e-12;

pub(crate) fn score_covariance(
    pair: &EscortPair,
    set: &ScoreSet,
    theta: &[f64],
    ctx: &EngineCtx,
    breaks: &[f64],
    tracker: &mut Tracker,
) -> Result<CovBuild> {
    let m = set.len();
    let mut means = vec![0.0; m];
    let mut zero_mean_max = 0.0_f64;
    for (i, s) in set.scores.iter().enumerate() {
        let si = s.clone();
        means[i] = density_expect(&pair.f, &|x| si(x), theta, ctx, breaks, tracker)?;
        zero_mean_max = zero_mean_max.max(means[i].abs());
    }
    let mut sigma = SymMatrix::zeros(m)?;
    let mut usable = m;
    for i in 0..m {
        for j in i..m {
            let si = set.scores[i].clone();
            let sj = set.scores[j].clone();
            let raw = density_expect(&pair.f, &|x| si(x) * sj(x), theta, ctx, breaks, tracker)?;
            if !raw.is_finite() {
                return Err(Error::NanEncountered(format!("score covariance ({i},{j})")));
            }
            let centered = raw - means[i] * means[j];
            if i == j && centered <= VARIANCE_FLOOR * raw.abs() {
                usable = usable.min(i);
            }
            sigma.set(i, j, centered);
        }
    }
    Ok(CovBuild { sigma, zero_mean_max, usable })
}

/// Factor the score covariance, retreating to the largest positive definite
/// leading principal block when necessary. Returns the factor and the block
/// size actually used.
pub(crate) fn factor_with_retreat(sigma: &SymMatrix, order: usize) -> Result<(Cholesky, usize)> {
    let mut used = sigma.dim();
    loop {
        let sub = if used == sigma.dim() { sigma.clone() } else { sigma.leading(used)? };
        match cholesky_strict(&sub) {
            Ok(c) => return Ok((c, used)),
            Err(Error::NotPositiveDefinite { pivot, .. }) => {
                if pivot <= 1 {
                    return Err(Error::SingularScoreCovariance { order });
                }
                used = pivot - 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Cap the covariance at the leading block of non-degenerate scores, then
/// factor with the positive definite retreat.
pub(crate) fn factor_capped(cov: &CovBuild, order: usize) -> Result<(Cholesky, usize)> {
    if cov.usable == 0 {
        return Err(Error::SingularScoreCovariance { order });
    }
    let capped = cov.sigma.leading(cov.usable)?;
    factor_with_retreat(&capped, order)
}

/// Order-k Bhattacharyya bound with escort scores, scalar parameter:
/// `Mᵀ Σ⁻¹ M` with `M = (λ',…,λ^{(k)})`. At k = 1 this reproduces the
/// generalized Cramér-Rao bound; with g = f it is the classical bound.
pub fn bhattacharyya_regular(
    pair: &EscortPair,
    t: &Statistic,
    theta: f64,
    k: usize,
    ctx: &EngineCtx,
) -> Result<BoundReport> {
    if pair.f.param_dim != 1 {
        return Err(Error::DimensionMismatch(
            "the derivative Bhattacharyya engine handles scalar parameters".to_string(),
        ));
    }
    if k == 0 {
        return Err(Error::Config("order k must be >= 1".to_string()));
    }
    let theta_vec = [theta];
    pair.f.check_theta(&theta_vec)?;

    let build = escort_derivative_scores(pair, theta, k, ctx)?;
    let mut tracker = Tracker::default();
    let cov = score_covariance(pair, &build.set, &theta_vec, ctx, &build.breaks, &mut tracker)?;

    // derivative vector of lambda
    let mut m_full = vec![0.0; k];
    let mut numeric_lambda = false;
    let lambda_source = if let Some(ld) = &t.lambda_deriv {
        for (i, slot) in m_full.iter_mut().enumerate() {
            *slot = ld(&theta_vec, i + 1);
        }
        Source::ClosedForm
    } else {
        let (lam, src) = lambda_fn(pair, t, ctx);
        numeric_lambda = true;
        if k > 4 {
            return Err(Error::MissingClosedForm(format!(
                "numeric differencing covers orders up to 4; order {k} needs closed λ derivatives"
            )));
        }
        let (lo, hi) = pair.f.param_domain[0];
        for (i, slot) in m_full.iter_mut().enumerate() {
            let order = i + 1;
            let h = safe_step(theta, lo, hi, order)?;
            let lam1 = lam.clone();
            *slot = derivative(&move |x| lam1(&[x]).unwrap_or(f64::NAN), theta, order, h)?.value;
        }
        src
    };

    let (chol, used) = factor_capped(&cov, k)?;
    let used_sigma = cov.sigma.leading(used)?;
    let m_used = &m_full[..used];
    let bound = quadratic_form_inv(&used_sigma, m_used)?;

    let mut diag = Diagnostics {
        sigma_condition: Some(chol.condition_estimate()),
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
        zero_mean_max: cov.zero_mean_max,
        lambda_source,
        derivative_source: if build.numeric { Source::Numeric } else { Source::ClosedForm },
        degraded_order: if used < k { Some(used) } else { None },
        assumptions_unchecked: !pair.containment_checked,
        ..Diagnostics::default()
    };

    let weights = chol.solve(m_used);
    let used_set = ScoreSet {
        scores: build.set.scores[..used].to_vec(),
        provenance: build.set.provenance,
        labels: build.set.labels[..used].to_vec(),
    };
    let mut corr_tracker = Tracker::default();
    if let Ok(corr) = equality_correlation(
        pair,
        t,
        &used_set,
        &weights,
        &theta_vec,
        ctx,
        &build.breaks,
        &mut corr_tracker,
    ) {
        diag.equality_correlation = Some(corr);
        diag.quad_error = diag.quad_error.max(corr_tracker.max_err);
    }

    let numeric_path = numeric_lambda || build.numeric;
    let report = BoundReport {
        method: "bhattacharyya-regular".to_string(),
        theta: theta_vec.to_vec(),
        order: k,
        nodes: None,
        bound,
        variance: None,
        gap: None,
        attained: None,
        diagnostics: diag,
    };
    Ok(finish_report(report, pair, t, &theta_vec, ctx, numeric_path))
}

/// Multi-indices `0 < |i| ≤ k` over `p` coordinates in graded order (all
/// first-order indices first, then second order, and so on).
pub(crate) fn multi_indices(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn compositions(p: usize, total: usize) -> Vec<Vec<usize>> {
        if p == 1 {
            return vec![vec![total]];
        }
        let mut out = Vec::new();
        for first in (0..=total).rev() {
            for mut rest in compositions(p - 1, total - first) {
                let mut v = vec![first];
                v.append(&mut rest);
                out.push(v);
            }
        }
        out
    }
    let mut out = Vec::new();
    for total in 1..=k {
        out.extend(compositions(p, total));
    }
    out
}

/// Multiparameter mixed-partial bound: scores `S^i = ∂^i g / f` over all
/// multi-indices `0 < |i| ≤ k`, bound `Mᵀ Σ⁻¹ M` with `M_i = ∂^i λ`.
///
/// With `k = 1` this is the vector-parameter generalized Cramér-Rao bound.
pub fn multiparam_bound(
    pair: &EscortPair,
    t: &Statistic,
    theta: &[f64],
    k: usize,
    ctx: &EngineCtx,
) -> Result<BoundReport> {
    pair.f.check_theta(theta)?;
    if k == 0 {
        return Err(Error::Config("max order k must be >= 1".to_string()));
    }
    let p = pair.f.param_dim;
    let indices = multi_indices(p, k);
    if indices.len() > 64 {
        return Err(Error::Config(format!(
            "{} multi-indices exceed the engine cap of 64 (p = {p}, k = {k})",
            indices.len()
        )));
    }

    // assemble scores: analytic density derivatives when wired, else nested
    // central differences pointwise in x
    let mut scores: Vec<StatFn> = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    let mut numeric = false;
    let breaks = support_breaks(&pair.g, theta);
    for multi in &indices {
        let have_analytic = pair.g.dtheta_at(&probe_x(&pair.g), theta, multi).is_some();
        let f_pdf = pair.f.pdf.clone();
        let tv = theta.to_vec();
        let mi = multi.clone();
        if have_analytic {
            let g = pair.g.clone();
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &tv);
                if fx <= 0.0 {
                    return 0.0;
                }
                g.dtheta_at(x, &tv, &mi).unwrap_or(f64::NAN) / fx
            }));
        } else {
            numeric = true;
            let g_pdf = pair.g.pdf.clone();
            let steps = mixed_default_steps(theta, multi);
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &tv);
                if fx <= 0.0 {
                    return 0.0;
                }
                let gp = g_pdf.clone();
                let xx = x.to_vec();
                match mixed_partial(&move |th: &[f64]| gp(&xx, th), &tv, &mi, &steps) {
                    Ok(d) => d / fx,
                    Err(_) => f64::NAN,
                }
            }));
        }
        labels.push(format!("{multi:?}"));
    }
    let set = ScoreSet { scores, provenance: ScoreProvenance::MixedPartial, labels };

    let mut tracker = Tracker::default();
    let cov = score_covariance(pair, &set, theta, ctx, &breaks, &mut tracker)?;

    // M: lambda mixed partials (closed derivatives for scalar θ, else numeric)
    let mut m_full = vec![0.0; indices.len()];
    let mut numeric_lambda = false;
    let lambda_source = if let (1, Some(ld)) = (p, t.lambda_deriv.as_ref()) {
        for (slot, multi) in m_full.iter_mut().zip(&indices) {
            *slot = ld(theta, multi[0]);
        }
        Source::ClosedForm
    } else if let Some(lam_closed) = &t.lambda_under_g {
        let lam = lam_closed.clone();
        for (slot, multi) in m_full.iter_mut().zip(&indices) {
            let steps = mixed_default_steps(theta, multi);
            let lam1 = lam.clone();
            *slot = mixed_partial(&move |th: &[f64]| lam1(th), theta, multi, &steps)?;
        }
        numeric_lambda = true;
        Source::ClosedForm
    } else {
        let (lam, _) = lambda_fn(pair, t, ctx);
        numeric_lambda = true;
        for (slot, multi) in m_full.iter_mut().zip(&indices) {
            let steps = mixed_default_steps(theta, multi);
            let lam1 = lam.clone();
            *slot = mixed_partial(
                &move |th: &[f64]| lam1(th).unwrap_or(f64::NAN),
                theta,
                multi,
                &steps,
            )?;
        }
        Source::Numeric
    };

    let (chol, used) = factor_capped(&cov, k)?;
    let used_sigma = cov.sigma.leading(used)?;
    let bound = quadratic_form_inv(&used_sigma, &m_full[..used])?;

    let diag = Diagnostics {
        sigma_condition: Some(chol.condition_estimate()),
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
        zero_mean_max: cov.zero_mean_max,
        lambda_source,
        derivative_source: if numeric { Source::Numeric } else { Source::ClosedForm },
        degraded_order: if used < cov.sigma.dim() { Some(used) } else { None },
        assumptions_unchecked: !pair.containment_checked,
        ..Diagnostics::default()
    };

    let numeric_path = numeric_lambda || numeric;
    let report = BoundReport {
        method: "multiparam".to_string(),
        theta: theta.to_vec(),
        order: k,
        nodes: None,
        bound,
        variance: None,
        gap: None,
        attained: None,
        diagnostics: diag,
    };
    Ok(finish_report(report, pair, t, theta, ctx, numeric_path))
}
