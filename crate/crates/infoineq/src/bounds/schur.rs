//! Vector-estimator bound: the covariance matrix of an unbiased vector
//! estimator dominates `J = Σ_TS Σ_S⁻¹ Σ_ST`, the Schur-complement projection
//! onto the score span. Each direction α gives the scalar inequality
//! `Var(αᵀT) ≥ αᵀ J α`, and `Σ_T = J` characterizes a minimum-variance
//! unbiased estimator for every direction simultaneously.

use crate::error::Result;
use crate::linalg::{psd_certificate, schur_complement, PsdCertificate, RectMatrix, SymMatrix};
use crate::model::{EscortPair, Statistic};

use super::{density_expect, support_breaks, Diagnostics, EngineCtx, ScoreSet, Tracker};

/// Relative tolerance for the positive-semidefiniteness certificate on
/// `Σ_T − J` (the attained direction makes it exactly singular).
pub const PSD_REL_TOL: f64 = 1e-10;

/// Result of the vector bound: the projection `J`, both covariance blocks,
/// and the certificate on their difference.
#[derive(Clone, Debug)]
pub struct SchurReport {
    pub j: SymMatrix,
    pub sigma_t: SymMatrix,
    pub complement: SymMatrix,
    pub certificate: PsdCertificate,
    pub diagnostics: Diagnostics,
}

impl SchurReport {
    /// `(αᵀ Σ_T α, αᵀ J α)`: the variance of the direction estimate and its
    /// lower bound.
    pub fn direction(&self, alpha: &[f64]) -> (f64, f64) {
        let quad = |m: &SymMatrix| {
            let mut s = 0.0;
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    s += alpha[i] * m.get(i, j) * alpha[j];
                }
            }
            s
        };
        (quad(&self.sigma_t), quad(&self.j))
    }
}

/// Assemble the joint covariance of `(T, S)` under f(·,θ) by quadrature and
/// return `J = Σ_TS Σ_S⁻¹ Σ_ST` together with the PSD certificate on
/// `Σ_T − J`.
pub fn vector_schur_bound(
    pair: &EscortPair,
    ts: &[Statistic],
    scores: &ScoreSet,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<SchurReport> {
    pair.f.check_theta(theta)?;
    let r = ts.len();
    let m = scores.len();
    let breaks = support_breaks(&pair.g, theta);
    let mut tracker = Tracker::default();

    let mut t_means = vec![0.0; r];
    for (a, t) in ts.iter().enumerate() {
        let tf = t.eval.clone();
        t_means[a] = density_expect(&pair.f, &|x| tf(x), theta, ctx, &breaks, &mut tracker)?;
    }
    let mut s_means = vec![0.0; m];
    let mut zero_mean_max = 0.0_f64;
    for (i, s) in scores.scores.iter().enumerate() {
        let sf = s.clone();
        s_means[i] = density_expect(&pair.f, &|x| sf(x), theta, ctx, &breaks, &mut tracker)?;
        zero_mean_max = zero_mean_max.max(s_means[i].abs());
    }

    let mut sigma_t = SymMatrix::zeros(r)?;
    for a in 0..r {
        for b in a..r {
            let ta = ts[a].eval.clone();
            let tb = ts[b].eval.clone();
            let (ma, mb) = (t_means[a], t_means[b]);
            let v = density_expect(
                &pair.f,
                &|x| (ta(x) - ma) * (tb(x) - mb),
                theta,
                ctx,
                &breaks,
                &mut tracker,
            )?;
            sigma_t.set(a, b, v);
        }
    }
    let mut sigma_s = SymMatrix::zeros(m)?;
    for i in 0..m {
        for j in i..m {
            let si = scores.scores[i].clone();
            let sj = scores.scores[j].clone();
            let (mi, mj) = (s_means[i], s_means[j]);
            let v = density_expect(
                &pair.f,
                &|x| (si(x) - mi) * (sj(x) - mj),
                theta,
                ctx,
                &breaks,
                &mut tracker,
            )?;
            sigma_s.set(i, j, v);
        }
    }
    let mut cross = RectMatrix::zeros(r, m);
    for a in 0..r {
        for i in 0..m {
            let ta = ts[a].eval.clone();
            let si = scores.scores[i].clone();
            let (ma, mi) = (t_means[a], s_means[i]);
            let v = density_expect(
                &pair.f,
                &|x| (ta(x) - ma) * (si(x) - mi),
                theta,
                ctx,
                &breaks,
                &mut tracker,
            )?;
            cross.set(a, i, v);
        }
    }

    let (complement, j) = schur_complement(&sigma_t, &cross, &sigma_s)?;
    let certificate = psd_certificate(&complement, PSD_REL_TOL, sigma_t.max_abs());
    let diagnostics = Diagnostics {
        quad_error: tracker.max_err,
        truncation: tracker.truncation,
        zero_mean_max,
        assumptions_unchecked: !pair.containment_checked,
        ..Diagnostics::default()
    };
    Ok(SchurReport { j, sigma_t, complement, certificate, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{escort_gradient_scores, naudts_bound};
    use crate::model::catalog::catalog_lookup;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn hyper(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn scalar_reduction_equals_naudts() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let ctx = EngineCtx::default();
        let theta = [2.0];
        let build = escort_gradient_scores(&e.pair, &theta, &ctx).unwrap();
        let rep =
            vector_schur_bound(&e.pair, std::slice::from_ref(&e.statistic), &build.set, &theta, &ctx)
                .unwrap();
        let nau = naudts_bound(&e.pair, &e.statistic, &theta, &ctx).unwrap();
        assert_relative_eq!(rep.j.get(0, 0), nau.bound, max_relative = 1e-10);
        // Cauchy-Schwarz form: J = Cov(T,S)^2 / Var(S)
        assert!(rep.certificate.psd);
    }

    #[test]
    fn gaussian_two_statistic_certificate() {
        use crate::model::catalog::{gaussian_sufficient_model, gaussian_sufficient_statistics};
        let n = 4usize;
        let f = gaussian_sufficient_model(n);
        let pair = crate::model::EscortPair::self_escort(f);
        let (xbar, s2) = gaussian_sufficient_statistics(n);
        let ctx = EngineCtx::default();
        let theta = [0.5, 1.0]; // (mu, sigma)
        let build = escort_gradient_scores(&pair, &theta, &ctx).unwrap();
        let rep = vector_schur_bound(&pair, &[xbar, s2], &build.set, &theta, &ctx).unwrap();

        let (mu, sigma) = (theta[0], theta[1]);
        let _ = mu;
        let nf = n as f64;
        // J = diag(sigma^2/n, 2 sigma^4/n); Sigma_T = diag(sigma^2/n, 2 sigma^4/(n-1))
        assert_relative_eq!(rep.j.get(0, 0), sigma * sigma / nf, max_relative = 1e-6);
        assert_relative_eq!(rep.j.get(1, 1), 2.0 * sigma.powi(4) / nf, max_relative = 1e-6);
        assert_relative_eq!(rep.sigma_t.get(0, 0), sigma * sigma / nf, max_relative = 1e-6);
        assert_relative_eq!(
            rep.sigma_t.get(1, 1),
            2.0 * sigma.powi(4) / (nf - 1.0),
            max_relative = 1e-6
        );
        assert!(rep.certificate.psd);
        // the mean component attains its bound
        let (var_dir, bound_dir) = rep.direction(&[1.0, 0.0]);
        assert!((var_dir - bound_dir).abs() <= 1e-8);
    }
}
