//! Divided-difference bounds for non-regular escorts: the finite-node
//! Bhattacharyya analogue, its supremum over node placements (whose g = f,
//! k = 1 case is the Hammersley–Chapman–Robbins bound), and the
//! per-coordinate multiparameter variant.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::quadratic_form_inv;
use crate::model::{EscortPair, StatFn, Statistic, Support};
use crate::numerics::divided::{table_from_values, NodeSet};
use crate::numerics::simplex::{nelder_mead, SimplexSettings};

use super::regular::{factor_capped, score_covariance};
use super::{
    equality_correlation, finish_report, lambda_fn, support_breaks, BoundReport, Diagnostics,
    EngineCtx, ScoreProvenance, ScoreSet, Source, Tracker,
};

/// A node is feasible only when the escort support at that node sits inside
/// the model support at the base node; otherwise the score means do not
/// vanish and the quadratic form is not a bound.
fn check_node_feasible(pair: &EscortPair, node_theta: &[f64], base_theta: &[f64], index: usize) -> Result<()> {
    match (&pair.g.support, &pair.f.support) {
        (Support::Continuous { interval: gi, .. }, Support::Continuous { interval: fi, .. }) => {
            let (glo, ghi) = gi.at(node_theta);
            let (flo, fhi) = fi.at(base_theta);
            if glo < flo - 1e-12 * flo.abs().max(1.0) || ghi > fhi + 1e-12 * fhi.abs().max(1.0) {
                return Err(Error::SupportViolation { node_index: index });
            }
        }
        (
            Support::Discrete { origin: go, step: gs, .. },
            Support::Discrete { origin: fo, step: fs, .. },
        ) if go < fo || gs != fs => {
            return Err(Error::SupportViolation { node_index: index });
        }
        _ => {}
    }
    Ok(())
}

/// Scores `S_i(x) = Δ^i g_x(θ^0) / f(x, θ^0)` built pointwise in x over the
/// node set.
fn dd_scores(pair: &EscortPair, nodes: &NodeSet) -> ScoreBuildDd {
    let k = nodes.order();
    let node_vals = nodes.nodes().to_vec();
    let mut scores: Vec<StatFn> = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    for i in 1..=k {
        let f_pdf = pair.f.pdf.clone();
        let g_pdf = pair.g.pdf.clone();
        let nv = node_vals.clone();
        scores.push(Arc::new(move |x: &[f64]| {
            let fx = f_pdf(x, &[nv[0]]);
            if fx <= 0.0 {
                return 0.0;
            }
            let values: Vec<f64> = nv.iter().map(|&t| g_pdf(x, &[t])).collect();
            let rows = table_from_values(&values, &nv);
            rows[i][0] / fx
        }));
        labels.push(format!("dd^{i}"));
    }
    let mut breaks = Vec::new();
    for &t in &node_vals {
        breaks.extend(support_breaks(&pair.g, &[t]));
    }
    ScoreBuildDd {
        set: ScoreSet { scores, provenance: ScoreProvenance::EscortDividedDifference, labels },
        breaks,
    }
}

struct ScoreBuildDd {
    set: ScoreSet,
    breaks: Vec<f64>,
}

/// Divided-difference bound at the base node `θ^0 = nodes[0]`:
/// `Mᵀ Σ⁻¹ M` with `M_i = Δ^i λ(θ^0)`.
///
/// With g = f and a single node pair this is the Hammersley–Chapman–Robbins
/// quotient `(λ(θ¹) − λ(θ⁰))² / Var_f(f(x,θ¹)/f(x,θ⁰) − 1)`.
pub fn bhattacharyya_dd(
    pair: &EscortPair,
    t: &Statistic,
    nodes: &NodeSet,
    ctx: &EngineCtx,
) -> Result<BoundReport> {
    if pair.f.param_dim != 1 {
        return Err(Error::DimensionMismatch(
            "divided-difference nodes are scalar parameter points".to_string(),
        ));
    }
    let base = [nodes.base()];
    pair.f.check_theta(&base)?;
    for (j, &node) in nodes.nodes().iter().enumerate() {
        pair.f.check_theta(&[node])?;
        check_node_feasible(pair, &[node], &base, j)?;
    }

    let build = dd_scores(pair, nodes);
    let mut tracker = Tracker::default();
    let cov = score_covariance(pair, &build.set, &base, ctx, &build.breaks, &mut tracker)?;

    // M: divided differences of lambda over the same nodes
    let (lam, lambda_source) = lambda_fn(pair, t, ctx);
    let mut lam_vals = Vec::with_capacity(nodes.nodes().len());
    for &node in nodes.nodes() {
        lam_vals.push(lam(&[node])?);
    }
    let lam_rows = table_from_values(&lam_vals, nodes.nodes());
    let k = nodes.order();
    let m_full: Vec<f64> = (1..=k).map(|i| lam_rows[i][0]).collect();

    let (chol, used) = factor_capped(&cov, k)?;
    let used_sigma = cov.sigma.leading(used)?;
    let bound = quadratic_form_inv(&used_sigma, &m_full[..used])?;

    let mut diag = Diagnostics {
        sigma_condition: Some(chol.condition_estimate()),
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
        zero_mean_max: cov.zero_mean_max,
        lambda_source,
        derivative_source: Source::ClosedForm,
        degraded_order: if used < k { Some(used) } else { None },
        assumptions_unchecked: !pair.containment_checked,
        ..Diagnostics::default()
    };

    let weights = chol.solve(&m_full[..used]);
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
        &base,
        ctx,
        &build.breaks,
        &mut corr_tracker,
    ) {
        diag.equality_correlation = Some(corr);
        diag.quad_error = diag.quad_error.max(corr_tracker.max_err);
    }

    let numeric_path = lambda_source == Source::Numeric;
    let report = BoundReport {
        method: "bhattacharyya-dd".to_string(),
        theta: base.to_vec(),
        order: k,
        nodes: Some(nodes.nodes().to_vec()),
        bound,
        variance: None,
        gap: None,
        attained: None,
        diagnostics: diag,
    };
    Ok(finish_report(report, pair, t, &base, ctx, numeric_path))
}

/// Node-placement search controls for [`bhattacharyya_dd_sup`].
#[derive(Clone, Copy, Debug)]
pub struct SearchSettings {
    /// Log-spaced offset magnitudes per side in the coarse stage.
    pub grid_per_side: usize,
    /// Smallest offset as a fraction of the domain scale.
    pub span_lo_frac: f64,
    /// Largest offset as a fraction of the domain scale.
    pub span_hi_frac: f64,
    pub simplex: SimplexSettings,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid_per_side: 9,
            span_lo_frac: 1e-4,
            span_hi_frac: 0.5,
            simplex: SimplexSettings::default(),
        }
    }
}

fn offset_candidates(theta0: f64, lo: f64, hi: f64, search: &SearchSettings, per_side: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let room_lo = if lo.is_finite() { theta0 - lo } else { theta0.abs().max(1.0) };
    let room_hi = if hi.is_finite() { hi - theta0 } else { theta0.abs().max(1.0) };
    for (sign, room) in [(-1.0, room_lo), (1.0, room_hi)] {
        if !(room > 0.0) {
            continue;
        }
        let lo_off = search.span_lo_frac * room;
        let hi_off = search.span_hi_frac * room;
        let ratio = (hi_off / lo_off).powf(1.0 / (per_side.max(2) as f64 - 1.0));
        let mut off = lo_off;
        for _ in 0..per_side {
            let cand = theta0 + sign * off;
            if cand > lo && cand < hi && cand != theta0 {
                out.push(cand);
            }
            off *= ratio;
        }
    }
    out
}

/// Supremum of the divided-difference bound over feasible node placements:
/// coarse log-grid scan, then simplex refinement from the best grid point.
/// Any feasible placement already yields a valid lower bound, so partial
/// optimization is sound.
pub fn bhattacharyya_dd_sup(
    pair: &EscortPair,
    t: &Statistic,
    theta0: f64,
    k: usize,
    search: &SearchSettings,
    ctx: &EngineCtx,
) -> Result<BoundReport> {
    if k == 0 {
        return Err(Error::Config("order k must be >= 1".to_string()));
    }
    pair.f.check_theta(&[theta0])?;
    let (lo, hi) = pair.f.param_domain[0];
    let per_side = if k == 1 { search.grid_per_side } else { search.grid_per_side.min(5) };
    let candidates = offset_candidates(theta0, lo, hi, search, per_side);

    let eval_nodes = |free: &[f64]| -> Option<(BoundReport, Vec<f64>)> {
        let mut nodes = vec![theta0];
        nodes.extend_from_slice(free);
        let ns = NodeSet::new(nodes.clone()).ok()?;
        let report = bhattacharyya_dd(pair, t, &ns, ctx).ok()?;
        Some((report, nodes))
    };

    // stage 1: coarse grid over k-subsets of the candidate pool
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut scan = |free: &[f64]| {
        if let Some((rep, _)) = eval_nodes(free) {
            if best.as_ref().is_none_or(|(b, _)| rep.bound > *b) {
                best = Some((rep.bound, free.to_vec()));
            }
        }
    };
    fn combos(
        cands: &[f64],
        k: usize,
        start: usize,
        cur: &mut Vec<f64>,
        scan: &mut dyn FnMut(&[f64]),
    ) {
        if cur.len() == k {
            scan(cur);
            return;
        }
        for i in start..cands.len() {
            cur.push(cands[i]);
            combos(cands, k, i + 1, cur, scan);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    combos(&candidates, k, 0, &mut cur, &mut scan);

    let (_, grid_best) = best.ok_or(Error::NoFeasibleNodes)?;

    // stage 2: simplex refinement on the free nodes
    let mut objective = |free: &[f64]| -> f64 {
        match eval_nodes(free) {
            Some((rep, _)) => -rep.bound,
            None => f64::INFINITY,
        }
    };
    let steps: Vec<f64> = grid_best.iter().map(|&x| 0.25 * (x - theta0)).collect();
    let (refined, neg_bound) = nelder_mead(&mut objective, &grid_best, &steps, &search.simplex);
    let final_free = if neg_bound.is_finite() { refined } else { grid_best };

    let (mut report, nodes) = eval_nodes(&final_free).ok_or(Error::NoFeasibleNodes)?;
    report.method = "bhattacharyya-dd-sup".to_string();
    report.diagnostics.argmax_nodes = Some(nodes);
    Ok(report)
}

/// Per-coordinate divided-difference bound for vector parameters: coordinate
/// `c` contributes scores `Δ^j g` over its own node list with every other
/// coordinate frozen at the base point.
pub fn multiparam_dd_bound(
    pair: &EscortPair,
    t: &Statistic,
    theta0: &[f64],
    node_lists: &[Vec<f64>],
    ctx: &EngineCtx,
) -> Result<BoundReport> {
    pair.f.check_theta(theta0)?;
    let p = pair.f.param_dim;
    if node_lists.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "need one node list per coordinate ({} != {p})",
            node_lists.len()
        )));
    }
    let mut scores: Vec<StatFn> = Vec::new();
    let mut labels = Vec::new();
    let mut m_full = Vec::new();
    let mut all_nodes = Vec::new();
    let mut breaks = support_breaks(&pair.g, theta0);
    let (lam, lambda_source) = lambda_fn(pair, t, ctx);

    for (c, list) in node_lists.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        if list[0] != theta0[c] {
            return Err(Error::Config(format!(
                "node list for coordinate {c} must start at the base point"
            )));
        }
        if list.len() == 1 {
            continue;
        }
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                if list[i] == list[j] {
                    return Err(Error::CoincidentCoordinate(c));
                }
            }
        }
        // full parameter points for feasibility and λ evaluation
        let mut lam_vals = Vec::with_capacity(list.len());
        for (j, &v) in list.iter().enumerate() {
            let mut th = theta0.to_vec();
            th[c] = v;
            pair.f.check_theta(&th)?;
            check_node_feasible(pair, &th, theta0, j)?;
            breaks.extend(support_breaks(&pair.g, &th));
            lam_vals.push(lam(&th)?);
        }
        let lam_rows = table_from_values(&lam_vals, list);
        let k_c = list.len() - 1;
        for i in 1..=k_c {
            m_full.push(lam_rows[i][0]);
            let f_pdf = pair.f.pdf.clone();
            let g_pdf = pair.g.pdf.clone();
            let base = theta0.to_vec();
            let nodes_c = list.clone();
            let coord = c;
            scores.push(Arc::new(move |x: &[f64]| {
                let fx = f_pdf(x, &base);
                if fx <= 0.0 {
                    return 0.0;
                }
                let mut th = base.clone();
                let values: Vec<f64> = nodes_c
                    .iter()
                    .map(|&v| {
                        th[coord] = v;
                        g_pdf(x, &th)
                    })
                    .collect();
                let rows = table_from_values(&values, &nodes_c);
                rows[i][0] / fx
            }));
            labels.push(format!("c{coord}-dd^{i}"));
        }
        all_nodes.extend_from_slice(&list[1..]);
    }
    if scores.is_empty() {
        return Err(Error::Config("no differencing nodes supplied".to_string()));
    }

    let set = ScoreSet { scores, provenance: ScoreProvenance::EscortDividedDifference, labels };
    let mut tracker = Tracker::default();
    let cov = score_covariance(pair, &set, theta0, ctx, &breaks, &mut tracker)?;
    let (chol, used) = factor_capped(&cov, set.len())?;
    let used_sigma = cov.sigma.leading(used)?;
    let bound = quadratic_form_inv(&used_sigma, &m_full[..used])?;

    let diag = Diagnostics {
        sigma_condition: Some(chol.condition_estimate()),
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
        zero_mean_max: cov.zero_mean_max,
        lambda_source,
        derivative_source: Source::ClosedForm,
        degraded_order: if used < cov.sigma.dim() { Some(used) } else { None },
        assumptions_unchecked: !pair.containment_checked,
        ..Diagnostics::default()
    };

    let numeric_path = lambda_source == Source::Numeric;
    let report = BoundReport {
        method: "multiparam-dd".to_string(),
        theta: theta0.to_vec(),
        order: node_lists.iter().map(|l| l.len().saturating_sub(1)).max().unwrap_or(1),
        nodes: Some(all_nodes),
        bound,
        variance: None,
        gap: None,
        attained: None,
        diagnostics: diag,
    };
    Ok(finish_report(report, pair, t, theta0, ctx, numeric_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::regular::bhattacharyya_regular;
    use crate::model::catalog::catalog_lookup;
    use crate::model::EscortPair;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn hyper(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    fn classical(entry: &crate::model::CatalogEntry) -> (EscortPair, crate::model::Statistic) {
        let pair = EscortPair::self_escort(entry.pair.f.clone());
        let mut stat = entry.statistic.clone();
        stat.lambda_under_g = stat.target.clone();
        stat.lambda_deriv = stat.target_deriv.clone();
        (pair, stat)
    }

    #[test]
    fn hcr_quotient_uniform_max_hand_value() {
        // n = 1, theta0 = 1, node 0.5: bound = (1 - theta') theta' = 1/4
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 1.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let ctx = EngineCtx::default();
        let nodes = NodeSet::new(vec![1.0, 0.5]).unwrap();
        let r = bhattacharyya_dd(&pair, &stat, &nodes, &ctx).unwrap();
        assert_relative_eq!(r.bound, 0.25, max_relative = 1e-8);
    }

    #[test]
    fn infeasible_node_rejected() {
        // uniform-max: a node above theta0 pushes escort mass outside supp f
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 1.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let ctx = EngineCtx::default();
        let nodes = NodeSet::new(vec![1.0, 1.5]).unwrap();
        assert!(matches!(
            bhattacharyya_dd(&pair, &stat, &nodes, &ctx),
            Err(Error::SupportViolation { node_index: 1 })
        ));
    }

    #[test]
    fn constant_lambda_gives_zero_bound() {
        let e = catalog_lookup("expmin", &hyper(&[("n", 2.0)])).unwrap();
        let mut stat = crate::model::Statistic::new("const", |_| 1.0);
        stat.lambda_under_g = Some(Arc::new(|_: &[f64]| 1.0));
        let ctx = EngineCtx::default();
        let nodes = NodeSet::new(vec![1.0, 1.2, 1.5]).unwrap();
        let r = bhattacharyya_dd(&e.pair, &stat, &nodes, &ctx).unwrap();
        assert!(r.bound.abs() < 1e-12);
    }

    #[test]
    fn clustered_nodes_approach_regular_order2() {
        let e = catalog_lookup("normal-x4", &BTreeMap::new()).unwrap();
        let ctx = EngineCtx::default();
        let h = 1e-2;
        let nodes = NodeSet::new(vec![1.0, 1.0 + h, 1.0 + 2.0 * h]).unwrap();
        let dd = bhattacharyya_dd(&e.pair, &e.statistic, &nodes, &ctx).unwrap();
        let reg = bhattacharyya_regular(&e.pair, &e.statistic, 1.0, 2, &ctx).unwrap();
        assert_relative_eq!(dd.bound, reg.bound, max_relative = 1e-3);
    }

    #[test]
    fn hcr_sup_uniform_max_stays_below_variance() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 1.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let ctx = EngineCtx::default();
        let r =
            bhattacharyya_dd_sup(&pair, &stat, 1.0, 1, &SearchSettings::default(), &ctx).unwrap();
        // sup over theta' of (1-theta')theta' = 1/4 at theta' = 1/2
        assert_relative_eq!(r.bound, 0.25, max_relative = 1e-6);
        let var = r.variance.unwrap();
        assert_relative_eq!(var, 1.0 / 3.0, max_relative = 1e-8);
        assert!(!r.attained.unwrap());
        let nodes = r.diagnostics.argmax_nodes.as_ref().unwrap();
        assert_relative_eq!(nodes[1], 0.5, max_relative = 1e-3);
    }

    #[test]
    fn expmin_sup_clusters_to_attainment() {
        let e = catalog_lookup("expmin", &hyper(&[("n", 1.0)])).unwrap();
        let ctx = EngineCtx::default();
        let r = bhattacharyya_dd_sup(
            &e.pair,
            &e.statistic,
            1.0,
            1,
            &SearchSettings::default(),
            &ctx,
        )
        .unwrap();
        assert_relative_eq!(r.bound, 1.0, max_relative = 1e-3);
        assert!(r.attained.unwrap(), "gap = {:?}", r.gap);
        // feasible nodes sit above the base point for a support growing downward
        let nodes = r.diagnostics.argmax_nodes.as_ref().unwrap();
        assert!(nodes[1] > 1.0);
    }

    #[test]
    fn multiparam_dd_single_coordinate_matches_scalar() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 2.0)])).unwrap();
        let ctx = EngineCtx::default();
        let nodes = NodeSet::new(vec![1.0, 0.8]).unwrap();
        let scalar = bhattacharyya_dd(&e.pair, &e.statistic, &nodes, &ctx).unwrap();
        let multi =
            multiparam_dd_bound(&e.pair, &e.statistic, &[1.0], &[vec![1.0, 0.8]], &ctx).unwrap();
        assert_relative_eq!(scalar.bound, multi.bound, max_relative = 1e-12);
    }
}
