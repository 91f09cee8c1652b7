//! Bound engines: every supported information inequality produces a
//! [`BoundReport`] with the bound value, the variance side when computable,
//! and the diagnostics needed to judge attainment.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_strict, quadratic_form_inv, SymMatrix};
use crate::model::{EscortPair, ModelSpec, StatFn, Statistic, Support};
use crate::numerics::derivative::{derivative, mixed_default_steps, mixed_partial, stencil_halfwidth};
use crate::numerics::quadrature::{integrate_with, QuadEstimate, QuadratureSettings};

mod divided;
mod regular;
mod schur;

pub use divided::{bhattacharyya_dd, bhattacharyya_dd_sup, multiparam_dd_bound, SearchSettings};
pub use regular::{bhattacharyya_regular, multiparam_bound};
pub use schur::{vector_schur_bound, SchurReport};

/// Shared engine configuration: quadrature settings plus the attainment
/// tolerances for closed-form and all-numeric paths.
#[derive(Clone, Copy, Debug)]
pub struct EngineCtx {
    pub quad: QuadratureSettings,
    /// Relative-gap threshold declaring attainment when closed forms backed
    /// the computation.
    pub attain_tol_closed: f64,
    /// Threshold when any quantity came from quadrature plus numeric
    /// differencing.
    pub attain_tol_numeric: f64,
}

impl Default for EngineCtx {
    fn default() -> Self {
        Self {
            quad: QuadratureSettings::default(),
            attain_tol_closed: 1e-6,
            attain_tol_numeric: 1e-4,
        }
    }
}

/// Where a derived quantity came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    ClosedForm,
    Numeric,
}

/// Per-report diagnostics.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// Squared pivot-ratio estimate of the score covariance condition.
    pub sigma_condition: Option<f64>,
    /// Largest quadrature error estimate among the integrals consumed.
    pub quad_error: f64,
    /// Lattice truncation index, when a discrete support was summed.
    pub truncation: Option<usize>,
    /// Correlation between the projected score and `T − E_f[T]`; ±1 at
    /// attainment.
    pub equality_correlation: Option<f64>,
    /// Best node placement found by a sup search.
    pub argmax_nodes: Option<Vec<f64>>,
    /// Largest `|E_f[S_i]|` observed across the score set.
    pub zero_mean_max: f64,
    /// Where λ and its derivatives came from.
    pub lambda_source: Source,
    /// Where the density θ-derivatives came from.
    pub derivative_source: Source,
    /// Set when a singular score covariance forced a retreat to the largest
    /// positive definite leading block of this order.
    pub degraded_order: Option<usize>,
    /// Set when the pair never went through the containment scan.
    pub assumptions_unchecked: bool,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            sigma_condition: None,
            quad_error: 0.0,
            truncation: None,
            equality_correlation: None,
            argmax_nodes: None,
            zero_mean_max: 0.0,
            lambda_source: Source::Numeric,
            derivative_source: Source::Numeric,
            degraded_order: None,
            assumptions_unchecked: false,
        }
    }
}

/// One computed inequality: `Var_f(T) ≥ bound`, with the variance side and
/// the relative gap whenever the variance is computable.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub method: String,
    pub theta: Vec<f64>,
    pub order: usize,
    pub nodes: Option<Vec<f64>>,
    pub bound: f64,
    pub variance: Option<f64>,
    pub gap: Option<f64>,
    pub attained: Option<bool>,
    pub diagnostics: Diagnostics,
}

/// How a score set was generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreProvenance {
    EscortDerivative,
    EscortDividedDifference,
    MixedPartial,
    Custom,
}

/// Zero-mean score functions bound at a working θ.
#[derive(Clone)]
pub struct ScoreSet {
    pub scores: Vec<StatFn>,
    pub provenance: ScoreProvenance,
    pub labels: Vec<String>,
}

impl ScoreSet {
    pub fn custom(scores: Vec<StatFn>, labels: Vec<String>) -> Self {
        Self { scores, provenance: ScoreProvenance::Custom, labels }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Output of a score constructor: the set itself plus everything the
/// integrator needs to know about it.
pub(crate) struct ScoreBuild {
    pub set: ScoreSet,
    /// True when any score fell back to numeric differencing.
    pub numeric: bool,
    /// Breakpoints the score evaluations introduce (support endpoints of the
    /// escort at every θ the stencils touch).
    pub breaks: Vec<f64>,
}

/// Accumulates quadrature diagnostics across the integrals of one report.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Tracker {
    pub max_err: f64,
    pub truncation: Option<usize>,
}

impl Tracker {
    pub fn absorb(&mut self, est: &QuadEstimate) {
        self.max_err = self.max_err.max(est.error);
        if let Some(t) = est.truncation {
            self.truncation = Some(self.truncation.map_or(t, |old| old.max(t)));
        }
    }
}

/// `∫ h(x) · pdf_m(x, θ) dx` over the support of `m`.
pub(crate) fn density_expect(
    m: &ModelSpec,
    h: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    ctx: &EngineCtx,
    extra_breaks: &[f64],
    tracker: &mut Tracker,
) -> Result<f64> {
    let pdf = m.pdf.clone();
    let est = integrate_with(
        &|x: &[f64]| h(x) * pdf(x, theta),
        &m.support,
        theta,
        &ctx.quad,
        extra_breaks,
        None,
    )?;
    tracker.absorb(&est);
    Ok(est.value)
}

/// Support endpoints and declared kinks of a model at θ, used as extra panel
/// boundaries when integrating against a different parameter point.
pub(crate) fn support_breaks(m: &ModelSpec, theta: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some((a, b)) = m.support.interval_at(theta) {
        if a.is_finite() {
            out.push(a);
        }
        if b.is_finite() {
            out.push(b);
        }
    }
    out.extend(m.support.breakpoints_at(theta));
    out
}

/// A numeric-differencing step that keeps the whole stencil strictly inside
/// the open domain interval.
pub(crate) fn safe_step(theta: f64, lo: f64, hi: f64, order: usize) -> Result<f64> {
    let mut h = crate::numerics::derivative::default_step(theta);
    let width = stencil_halfwidth(order) as f64;
    let room_lo = if lo.is_finite() { (theta - lo) / (width + 1.0) } else { f64::INFINITY };
    let room_hi = if hi.is_finite() { (hi - theta) / (width + 1.0) } else { f64::INFINITY };
    h = h.min(room_lo).min(room_hi);
    if !(h > 0.0) || theta + h == theta {
        return Err(Error::Derivative(format!(
            "no room for a stencil of order {order} at theta = {theta} in ({lo}, {hi})"
        )));
    }
    Ok(h)
}

/// Variance estimate with its quadrature diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct VarianceEstimate {
    pub value: f64,
    pub quad_error: f64,
    pub truncation: Option<usize>,
}

/// `Var_f(T)` by quadrature or summation. A non-finite second moment is
/// reported as divergent rather than returned.
pub fn variance_of(
    t: &Statistic,
    m: &ModelSpec,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<VarianceEstimate> {
    m.check_theta(theta)?;
    let mut tracker = Tracker::default();
    let tf = t.eval.clone();
    let mean = density_expect(m, &|x| tf(x), theta, ctx, &[], &mut tracker)?;
    let second = density_expect(m, &|x| tf(x) * tf(x), theta, ctx, &[], &mut tracker)?;
    if !second.is_finite() || !mean.is_finite() {
        return Err(Error::DivergentMoment(second));
    }
    Ok(VarianceEstimate {
        value: second - mean * mean,
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
    })
}

/// λ(θ) = E_g[T] as a reusable function of θ, preferring the catalog closed
/// form. Returns the evaluator and its source.
pub(crate) fn lambda_fn(
    pair: &EscortPair,
    t: &Statistic,
    ctx: &EngineCtx,
) -> (Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>, Source) {
    if let Some(lam) = &t.lambda_under_g {
        let lam = lam.clone();
        return (Arc::new(move |th: &[f64]| Ok(lam(th))), Source::ClosedForm);
    }
    let g = pair.g.clone();
    let tf = t.eval.clone();
    let ctx = *ctx;
    (
        Arc::new(move |th: &[f64]| {
            let mut tracker = Tracker::default();
            density_expect(&g, &|x| tf(x), th, &ctx, &[], &mut tracker)
        }),
        Source::Numeric,
    )
}

/// A representative interior sample point used to probe whether an analytic
/// derivative family is wired.
pub(crate) fn probe_x(m: &ModelSpec) -> Vec<f64> {
    match &m.support {
        Support::Discrete { origin, step, .. } => vec![origin + step],
        Support::Product2 { .. } => vec![0.0, 1.0],
        Support::Continuous { .. } => vec![0.5],
    }
}

/// First-order escort scores `S_i = ∂_i g / f`, one per parameter coordinate.
pub(crate) fn escort_gradient_scores(
    pair: &EscortPair,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<ScoreBuild> {
    let _ = ctx;
    let p = pair.g.param_dim;
    let mut scores: Vec<StatFn> = Vec::with_capacity(p);
    let mut labels = Vec::with_capacity(p);
    let mut numeric = false;
    let mut breaks = support_breaks(&pair.g, theta);

    for c in 0..p {
        let mut multi = vec![0usize; p];
        multi[c] = 1;
        let have_analytic = pair.g.dtheta_at(&probe_x(&pair.g), theta, &multi).is_some();
        let f_pdf = pair.f.pdf.clone();
        let theta_vec = theta.to_vec();
        if have_analytic {
            let g = pair.g.clone();
            let multi_c = multi.clone();
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &theta_vec);
                if fx <= 0.0 {
                    return 0.0;
                }
                g.dtheta_at(x, &theta_vec, &multi_c).unwrap_or(f64::NAN) / fx
            }));
        } else {
            numeric = true;
            let g_pdf = pair.g.pdf.clone();
            let (lo, hi) = pair.g.param_domain[c];
            let h = safe_step(theta[c], lo, hi, 1)?;
            for offset in [-h, h] {
                let mut th = theta.to_vec();
                th[c] += offset;
                breaks.extend(support_breaks(&pair.g, &th));
            }
            let coord = c;
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &theta_vec);
                if fx <= 0.0 {
                    return 0.0;
                }
                let mut th = theta_vec.clone();
                th[coord] = theta_vec[coord] + h;
                let up = g_pdf(x, &th);
                th[coord] = theta_vec[coord] - h;
                let down = g_pdf(x, &th);
                (up - down) / (2.0 * h) / fx
            }));
        }
        labels.push(format!("d{}", c + 1));
    }
    Ok(ScoreBuild {
        set: ScoreSet { scores, provenance: ScoreProvenance::EscortDerivative, labels },
        numeric,
        breaks,
    })
}

/// First-order escort scores as a plain [`ScoreSet`], for callers assembling
/// score sets themselves (the vector Schur bound takes one explicitly).
pub fn escort_score_set(pair: &EscortPair, theta: &[f64], ctx: &EngineCtx) -> Result<ScoreSet> {
    Ok(escort_gradient_scores(pair, theta, ctx)?.set)
}

/// `E_m[h(X)]` over the model's support: the building block every engine is
/// assembled from, exposed for oracles and external cross-checks.
pub fn expectation(
    m: &ModelSpec,
    h: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<f64> {
    let mut tracker = Tracker::default();
    density_expect(m, h, theta, ctx, &[], &mut tracker)
}

/// Generalized Fisher information `N_ij(θ) = ∫ ∂_i g ∂_j g / f dx`.
///
/// Entries are raw second moments of the escort gradient scores (their means
/// vanish under the differentiation-under-the-integral assumption). The
/// matrix is rejected if any entry is non-finite or the Cholesky pivots
/// collapse.
pub fn generalized_fisher(pair: &EscortPair, theta: &[f64], ctx: &EngineCtx) -> Result<SymMatrix> {
    let (n, _diag) = generalized_fisher_tracked(pair, theta, ctx)?;
    Ok(n)
}

pub(crate) fn generalized_fisher_tracked(
    pair: &EscortPair,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<(SymMatrix, Diagnostics)> {
    pair.f.check_theta(theta)?;
    let build = escort_gradient_scores(pair, theta, ctx)?;
    let p = build.set.len();
    let mut tracker = Tracker::default();
    let mut n = SymMatrix::zeros(p)?;
    for i in 0..p {
        for j in i..p {
            let si = build.set.scores[i].clone();
            let sj = build.set.scores[j].clone();
            let v = density_expect(
                &pair.f,
                &|x| si(x) * sj(x),
                theta,
                ctx,
                &build.breaks,
                &mut tracker,
            )?;
            if !v.is_finite() {
                return Err(Error::NanEncountered(format!("fisher entry ({i},{j})")));
            }
            n.set(i, j, v);
        }
    }
    let chol = cholesky_strict(&n)?;
    let diag = Diagnostics {
        sigma_condition: Some(chol.condition_estimate()),
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
        derivative_source: if build.numeric { Source::Numeric } else { Source::ClosedForm },
        assumptions_unchecked: !pair.containment_checked,
        ..Diagnostics::default()
    };
    Ok((n, diag))
}

/// Correlation under f between the projected score `Σ w_i S_i` and the
/// centered statistic `T − E_f[T]`. Attained bounds give ±1.
#[allow(clippy::too_many_arguments)]
pub(crate) fn equality_correlation(
    pair: &EscortPair,
    t: &Statistic,
    scores: &ScoreSet,
    weights: &[f64],
    theta: &[f64],
    ctx: &EngineCtx,
    extra_breaks: &[f64],
    tracker: &mut Tracker,
) -> Result<f64> {
    let score_fns = scores.scores.clone();
    let w = weights.to_vec();
    let u = move |x: &[f64]| -> f64 { score_fns.iter().zip(&w).map(|(s, &wi)| wi * s(x)).sum() };
    let tf = t.eval.clone();
    let m_t = density_expect(&pair.f, &|x| tf(x), theta, ctx, extra_breaks, tracker)?;
    let m_u = density_expect(&pair.f, &u, theta, ctx, extra_breaks, tracker)?;
    let var_t =
        density_expect(&pair.f, &|x| (tf(x) - m_t).powi(2), theta, ctx, extra_breaks, tracker)?;
    let var_u =
        density_expect(&pair.f, &|x| (u(x) - m_u).powi(2), theta, ctx, extra_breaks, tracker)?;
    if !(var_t > 0.0) || !(var_u > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let cov = density_expect(
        &pair.f,
        &|x| (u(x) - m_u) * (tf(x) - m_t),
        theta,
        ctx,
        extra_breaks,
        tracker,
    )?;
    Ok(cov / (var_t * var_u).sqrt())
}

/// Finish a report: attach the variance side, the relative gap, and the
/// attainment flag at the tolerance matching the computation path.
pub(crate) fn finish_report(
    mut report: BoundReport,
    pair: &EscortPair,
    t: &Statistic,
    theta: &[f64],
    ctx: &EngineCtx,
    numeric_path: bool,
) -> BoundReport {
    if let Ok(var) = variance_of(t, &pair.f, theta, ctx) {
        let gap = var.value - report.bound;
        let tol = if numeric_path { ctx.attain_tol_numeric } else { ctx.attain_tol_closed };
        report.variance = Some(var.value);
        report.gap = Some(gap);
        report.attained = Some(gap / var.value.max(1e-300) <= tol);
        report.diagnostics.quad_error = report.diagnostics.quad_error.max(var.quad_error);
        if report.diagnostics.truncation.is_none() {
            report.diagnostics.truncation = var.truncation;
        }
    }
    report
}

/// The Naudts generalized Cramér-Rao bound `Mᵀ N⁻¹(θ) M` with
/// `M_i = ∂_i λ(θ)` and `λ(θ) = E_g[T]`.
pub fn naudts_bound(
    pair: &EscortPair,
    t: &Statistic,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<BoundReport> {
    pair.f.check_theta(theta)?;
    let p = pair.f.param_dim;
    let (n, mut diag) = generalized_fisher_tracked(pair, theta, ctx)?;

    // gradient of lambda: closed derivatives when present (scalar θ), else
    // numeric differencing of the λ evaluator
    let mut m = vec![0.0; p];
    let mut numeric_lambda = false;
    if let (1, Some(ld)) = (p, t.lambda_deriv.as_ref()) {
        m[0] = ld(theta, 1);
        diag.lambda_source = Source::ClosedForm;
    } else {
        let (lam, src) = lambda_fn(pair, t, ctx);
        numeric_lambda = true;
        diag.lambda_source = src;
        if p == 1 {
            let (lo, hi) = pair.f.param_domain[0];
            let h = safe_step(theta[0], lo, hi, 1)?;
            let lam1 = lam.clone();
            let d = derivative(&move |x| lam1(&[x]).unwrap_or(f64::NAN), theta[0], 1, h)?;
            m[0] = d.value;
        } else {
            for c in 0..p {
                let mut multi = vec![0usize; p];
                multi[c] = 1;
                let steps = mixed_default_steps(theta, &multi);
                let lam1 = lam.clone();
                m[c] = mixed_partial(
                    &move |th: &[f64]| lam1(th).unwrap_or(f64::NAN),
                    theta,
                    &multi,
                    &steps,
                )?;
            }
        }
    }

    let bound = quadratic_form_inv(&n, &m)?;
    let numeric_path = numeric_lambda || diag.derivative_source == Source::Numeric;

    // equality-condition correlation with weights N^{-1} M
    let weights = cholesky_strict(&n)?.solve(&m);
    if let Ok(build) = escort_gradient_scores(pair, theta, ctx) {
        let mut tracker = Tracker::default();
        if let Ok(corr) = equality_correlation(
            pair,
            t,
            &build.set,
            &weights,
            theta,
            ctx,
            &build.breaks,
            &mut tracker,
        ) {
            diag.equality_correlation = Some(corr);
            diag.quad_error = diag.quad_error.max(tracker.max_err);
        }
    }

    let report = BoundReport {
        method: "naudts".to_string(),
        theta: theta.to_vec(),
        order: 1,
        nodes: None,
        bound,
        variance: None,
        gap: None,
        attained: None,
        diagnostics: diag,
    };
    Ok(finish_report(report, pair, t, theta, ctx, numeric_path))
}
