//! The catalog of worked examples: seven fully wired model/escort pairs with
//! their statistics, closed forms, analytic θ-derivative families, and the
//! attainment pattern each is known to exhibit.
//!
//! Conventions the closed forms rely on:
//!
//! * max-of-n-uniforms density `n x^{n-1}/θ^n` on `[0, θ]`, whose moments are
//!   `E[X^m] = n θ^m / (n + m)`;
//! * gamma scale family `x^{α-1} e^{-x/θ} / (Γ(α) θ^α)` on `(0, ∞)`;
//! * Poisson pairs reduced through the sufficient statistic `s = Σ x_i`,
//!   Poisson with mean `nθ`;
//! * the joint-uniform entry reduced through `t = max(x_1..x_n)`, whose
//!   one-dimensional density is again the max-of-uniforms density.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::special::{falling, gamma, ln_gamma};

use super::{
    AttainmentClaim, CatalogEntry, ClaimMethod, ClosedForms, EscortPair, Interval, ModelSpec,
    Statistic, Support,
};

/// Catalog names and their hyperparameter signatures, for `list-models`.
pub fn list_models() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("uniform-max", "n", "max of n uniforms on [0,theta]; T = (n+1)X/n estimates theta"),
        ("expmin", "n", "min of n shifted exponentials; T = X - 1/n estimates theta"),
        (
            "uniform-max-power",
            "n, k",
            "max of n uniforms; T = (n+k)X^k/n estimates theta^k (k >= 1)",
        ),
        (
            "gamma-scale",
            "alpha, k",
            "gamma scale family; T = G(alpha)X^k/G(alpha+k) estimates theta^k (integer k != 0, 2k+alpha > 0)",
        ),
        ("normal-x4", "-", "centered normal with scale theta; T = X^4/3 estimates theta^4"),
        ("poisson-pair", "n", "n iid Poisson(theta) via s = sum; T = s(s-1)/n^2 estimates theta^2"),
        (
            "uniform-joint-max",
            "n",
            "n iid uniforms on [0,theta] via t = max; T = t estimates n theta/(n+1)",
        ),
    ]
}

fn positive_domain() -> Vec<(f64, f64)> {
    vec![(0.0, f64::INFINITY)]
}

fn hyper_value(hyper: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    hyper
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidHyper(format!("missing '{key}'")))
}

fn hyper_int(hyper: &BTreeMap<String, f64>, key: &str) -> Result<i64> {
    let v = hyper_value(hyper, key)?;
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::InvalidHyper(format!("'{key}' must be an integer, got {v}")));
    }
    Ok(v as i64)
}

fn reject_unknown_keys(hyper: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in hyper.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidHyper(format!("unknown key '{k}'")));
        }
    }
    Ok(())
}

/// Look up a wired entry by name. Containment of the escort support in the
/// model support is scanned numerically at three reference parameter points
/// before the entry is handed out.
pub fn catalog_lookup(name: &str, hyper: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let mut entry = match name {
        "uniform-max" => {
            reject_unknown_keys(hyper, &["n"])?;
            let n = require_count(hyper, "n")?;
            uniform_power_entry("uniform-max", n, 1.0)
        }
        "uniform-max-power" => {
            reject_unknown_keys(hyper, &["n", "k"])?;
            let n = require_count(hyper, "n")?;
            let k = hyper_value(hyper, "k")?;
            if !(k >= 1.0) {
                return Err(Error::InvalidHyper(format!("'k' must be >= 1, got {k}")));
            }
            uniform_power_entry("uniform-max-power", n, k)
        }
        "expmin" => {
            reject_unknown_keys(hyper, &["n"])?;
            expmin_entry(require_count(hyper, "n")?)
        }
        "gamma-scale" => {
            reject_unknown_keys(hyper, &["alpha", "k"])?;
            let alpha = hyper_value(hyper, "alpha")?;
            let k = hyper_int(hyper, "k")?;
            gamma_scale_entry(alpha, k)?
        }
        "normal-x4" => {
            reject_unknown_keys(hyper, &[])?;
            normal_x4_entry()
        }
        "poisson-pair" => {
            reject_unknown_keys(hyper, &["n"])?;
            poisson_pair_entry(require_count(hyper, "n")?)
        }
        "uniform-joint-max" => {
            reject_unknown_keys(hyper, &["n"])?;
            uniform_joint_max_entry(require_count(hyper, "n")?)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    for theta in [0.7, 1.3, 2.6] {
        entry.pair.check_containment(&[theta], 200)?;
    }
    entry.pair.containment_checked = true;
    Ok(entry)
}

fn require_count(hyper: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let n = hyper_int(hyper, key)?;
    if n < 1 {
        return Err(Error::InvalidHyper(format!("'{key}' must be >= 1, got {n}")));
    }
    Ok(n as f64)
}

// ---------------------------------------------------------------------------
// max-of-uniforms family (power-law on [0, theta]) and its escort
// ---------------------------------------------------------------------------

fn uniform_power_models(n: f64, k: f64) -> (ModelSpec, ModelSpec) {
    let f_pdf = move |x: &[f64], th: &[f64]| {
        let (x, t) = (x[0], th[0]);
        if x >= 0.0 && x <= t {
            n * x.powf(n - 1.0) / t.powf(n)
        } else {
            0.0
        }
    };
    let f_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        let (x, t) = (x[0], th[0]);
        if !(x >= 0.0 && x <= t) {
            return Some(0.0);
        }
        Some(n * x.powf(n - 1.0) * falling(-n, m) * t.powf(-n - m as f64))
    };
    let c = n * (n + k) / k;
    let g_pdf = move |x: &[f64], th: &[f64]| {
        let (x, t) = (x[0], th[0]);
        if x >= 0.0 && x <= t {
            c * (x.powf(n - 1.0) / t.powf(n) - x.powf(n + k - 1.0) / t.powf(n + k))
        } else {
            0.0
        }
    };
    let g_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        let (x, t) = (x[0], th[0]);
        if !(x >= 0.0 && x <= t) {
            return Some(0.0);
        }
        Some(
            c * (x.powf(n - 1.0) * falling(-n, m) * t.powf(-n - m as f64)
                - x.powf(n + k - 1.0) * falling(-n - k, m) * t.powf(-n - k - m as f64)),
        )
    };
    let support = || Support::Continuous {
        interval: Interval::new(|_| 0.0, |th: &[f64]| th[0]),
        breakpoints: None,
    };
    let f = ModelSpec {
        name: format!("uniform-max f(n={n})"),
        pdf: Arc::new(f_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(f_dtheta)),
    };
    let g = ModelSpec {
        name: format!("uniform-max g(n={n}, k={k})"),
        pdf: Arc::new(g_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(g_dtheta)),
    };
    (f, g)
}

fn uniform_power_entry(name: &str, n: f64, k: f64) -> CatalogEntry {
    let (f, g) = uniform_power_models(n, k);
    let mut stat = Statistic::new("(n+k) X^k / n", move |x: &[f64]| (n + k) * x[0].powf(k) / n);
    stat.target = Some(Arc::new(move |th: &[f64]| th[0].powf(k)));
    stat.target_deriv =
        Some(Arc::new(move |th: &[f64], i| falling(k, i) * th[0].powf(k - i as f64)));
    let lam = (n + k) / (n + 2.0 * k);
    stat.lambda_under_g = Some(Arc::new(move |th: &[f64]| lam * th[0].powf(k)));
    stat.lambda_deriv =
        Some(Arc::new(move |th: &[f64], i| lam * falling(k, i) * th[0].powf(k - i as f64)));

    let var = move |th: &[f64]| k * k * th[0].powf(2.0 * k) / (n * (n + 2.0 * k));
    let fisher = move |th: &[f64]| n * (n + k) * (n + k) / ((n + 2.0 * k) * th[0] * th[0]);
    let mut claims = vec![AttainmentClaim { method: ClaimMethod::Naudts, attained: true }];
    if k == 1.0 && n == 1.0 {
        claims.push(AttainmentClaim { method: ClaimMethod::HcrSup, attained: false });
    }
    CatalogEntry {
        name: name.to_string(),
        hyper: BTreeMap::from([("n".to_string(), n), ("k".to_string(), k)]),
        pair: EscortPair::new(f, g).expect("domains match by construction"),
        statistic: stat,
        closed: ClosedForms {
            variance: Some(Arc::new(var)),
            fisher: Some(Arc::new(fisher)),
            bound: Some(Arc::new(var)),
            formulas: vec![
                ("variance".into(), "k^2 theta^(2k) / (n (n+2k))".into()),
                ("fisher".into(), "n (n+k)^2 / ((n+2k) theta^2)".into()),
                ("lambda".into(), "(n+k) theta^k / (n+2k)".into()),
            ],
        },
        notes: format!(
            "max of {n} uniforms on [0, theta]; escort tilts mass toward the lower endpoint via \
             the factor (1 - x^k/theta^k). Moments from E[X^m] = n theta^m/(n+m); the variance \
             k^2 theta^(2k)/(n(n+2k)) reduces to theta^2/(n(n+2)) at k = 1."
        ),
        claims,
    }
}

// ---------------------------------------------------------------------------
// min of shifted exponentials
// ---------------------------------------------------------------------------

fn expmin_entry(n: f64) -> CatalogEntry {
    let f_pdf = move |x: &[f64], th: &[f64]| {
        let u = x[0] - th[0];
        if u >= 0.0 {
            n * (-n * u).exp()
        } else {
            0.0
        }
    };
    // f = n e^{-n x} e^{n theta}: each theta-derivative multiplies by n
    let f_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let u = x[0] - th[0];
        if u < 0.0 {
            return Some(0.0);
        }
        Some(n.powi(multi[0] as i32) * n * (-n * u).exp())
    };
    let g_pdf = move |x: &[f64], th: &[f64]| {
        let u = x[0] - th[0];
        if u >= 0.0 {
            n * n * u * (-n * u).exp()
        } else {
            0.0
        }
    };
    let g_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        let u = x[0] - th[0];
        if u < 0.0 {
            return Some(0.0);
        }
        let nm = n.powi(m as i32);
        Some(n * n * (-n * u).exp() * (nm * u - m as f64 * nm / n))
    };
    let support = || Support::Continuous {
        interval: Interval::new(|th: &[f64]| th[0], |_| f64::INFINITY),
        breakpoints: None,
    };
    let f = ModelSpec {
        name: format!("expmin f(n={n})"),
        pdf: Arc::new(f_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(f_dtheta)),
    };
    let g = ModelSpec {
        name: format!("expmin g(n={n})"),
        pdf: Arc::new(g_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(g_dtheta)),
    };
    let mut stat = Statistic::new("X - 1/n", move |x: &[f64]| x[0] - 1.0 / n);
    stat.target = Some(Arc::new(|th: &[f64]| th[0]));
    stat.target_deriv = Some(Arc::new(|th: &[f64], i| match i {
        0 => th[0],
        1 => 1.0,
        _ => 0.0,
    }));
    stat.lambda_under_g = Some(Arc::new(move |th: &[f64]| th[0] + 1.0 / n));
    stat.lambda_deriv = Some(Arc::new(move |th: &[f64], i| match i {
        0 => th[0] + 1.0 / n,
        1 => 1.0,
        _ => 0.0,
    }));
    CatalogEntry {
        name: "expmin".to_string(),
        hyper: BTreeMap::from([("n".to_string(), n)]),
        pair: EscortPair::new(f, g).expect("domains match by construction"),
        statistic: stat,
        closed: ClosedForms {
            variance: Some(Arc::new(move |_: &[f64]| 1.0 / (n * n))),
            fisher: Some(Arc::new(move |_: &[f64]| n * n)),
            bound: Some(Arc::new(move |_: &[f64]| 1.0 / (n * n))),
            formulas: vec![
                ("variance".into(), "1/n^2".into()),
                ("fisher".into(), "n^2".into()),
                ("lambda".into(), "theta + 1/n".into()),
            ],
        },
        notes: format!(
            "min of {n} unit-rate exponentials shifted by theta; the escort multiplies by the \
             distance to the support edge, which restores regularity in theta."
        ),
        claims: vec![AttainmentClaim { method: ClaimMethod::Naudts, attained: true }],
    }
}

// ---------------------------------------------------------------------------
// gamma scale family
// ---------------------------------------------------------------------------

/// Coefficients of `d^m/dtheta^m Ga(beta,theta) / Ga(beta,theta)` as the
/// polynomial `sum_j d[m][j] x^j theta^(-m-j)`.
fn gamma_logderiv_coeffs(beta: f64, max_order: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for m in 0..max_order {
        let prev = &rows[m];
        let mut row = vec![0.0; m + 2];
        for (j, cell) in row.iter_mut().enumerate() {
            let carry = if j > 0 { prev[j - 1] } else { 0.0 };
            let decay =
                if j < prev.len() { -(m as f64 + j as f64 + beta) * prev[j] } else { 0.0 };
            *cell = carry + decay;
        }
        rows.push(row);
    }
    rows
}

fn gamma_pdf(beta: f64, x: f64, theta: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((beta - 1.0) * x.ln() - x / theta - ln_gamma(beta) - beta * theta.ln()).exp()
}

/// Escort mixture components `(beta_i, weight_i)` for the gamma-scale entry.
/// Weights are normalized against the exact component masses, which also
/// settles the printed-coefficient ambiguity for negative k.
fn gamma_escort_components(alpha: f64, k: i64) -> Vec<(f64, f64)> {
    let mut comps: Vec<(f64, f64)> = Vec::new();
    if k > 0 {
        let kk = alpha + k as f64;
        let mut s = 1.0;
        for i in 0..k {
            if i > 0 {
                s *= kk - i as f64; // s_i = prod_{j=1..i} (alpha + k - j)
            }
            let beta = kk - i as f64 - 1.0;
            comps.push((beta, s * gamma(beta)));
        }
    } else {
        let k1 = -k;
        let mut s = 1.0;
        for i in 1..=k1 {
            if i > 1 {
                s *= alpha - (i - 1) as f64; // s_i = prod_{j=1..i-1} (alpha - j)
            }
            let beta = alpha - i as f64;
            comps.push((beta, s * gamma(beta)));
        }
    }
    let total: f64 = comps.iter().map(|&(_, w)| w).sum();
    for c in comps.iter_mut() {
        c.1 /= total;
    }
    comps
}

fn gamma_scale_entry(alpha: f64, k: i64) -> Result<CatalogEntry> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidHyper(format!("'alpha' must be > 0, got {alpha}")));
    }
    if k == 0 {
        return Err(Error::InvalidHyper("'k' must be a nonzero integer".to_string()));
    }
    if !(2.0 * k as f64 + alpha > 0.0) {
        return Err(Error::InvalidHyper(format!(
            "need 2k + alpha > 0, got 2*{k} + {alpha} = {}",
            2.0 * k as f64 + alpha
        )));
    }
    let comps = gamma_escort_components(alpha, k);
    if comps.iter().any(|&(b, _)| b <= 0.0) {
        return Err(Error::InvalidHyper(format!(
            "escort exponents require alpha + k > 1 for negative k (alpha = {alpha}, k = {k})"
        )));
    }
    const MAX_ANALYTIC_ORDER: usize = 6;
    let kf = k as f64;

    let f_pdf = move |x: &[f64], th: &[f64]| gamma_pdf(alpha, x[0], th[0]);
    let f_coeffs = gamma_logderiv_coeffs(alpha, MAX_ANALYTIC_ORDER);
    let f_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        if m > MAX_ANALYTIC_ORDER {
            return None;
        }
        let (x, t) = (x[0], th[0]);
        if x <= 0.0 {
            return Some(0.0);
        }
        let poly: f64 = f_coeffs[m]
            .iter()
            .enumerate()
            .map(|(j, &d)| d * x.powi(j as i32) * t.powi(-(m as i32) - j as i32))
            .sum();
        Some(gamma_pdf(alpha, x, t) * poly)
    };

    let comps_pdf = comps.clone();
    let g_pdf = move |x: &[f64], th: &[f64]| {
        comps_pdf.iter().map(|&(b, w)| w * gamma_pdf(b, x[0], th[0])).sum()
    };
    let comp_coeffs: Vec<(f64, f64, Vec<Vec<f64>>)> = comps
        .iter()
        .map(|&(b, w)| (b, w, gamma_logderiv_coeffs(b, MAX_ANALYTIC_ORDER)))
        .collect();
    let g_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        if m > MAX_ANALYTIC_ORDER {
            return None;
        }
        let (x, t) = (x[0], th[0]);
        if x <= 0.0 {
            return Some(0.0);
        }
        let mut total = 0.0;
        for (b, w, coeffs) in &comp_coeffs {
            let poly: f64 = coeffs[m]
                .iter()
                .enumerate()
                .map(|(j, &d)| d * x.powi(j as i32) * t.powi(-(m as i32) - j as i32))
                .sum();
            total += w * gamma_pdf(*b, x, t) * poly;
        }
        Some(total)
    };

    let support =
        || Support::Continuous { interval: Interval::fixed(0.0, f64::INFINITY), breakpoints: None };
    let f = ModelSpec {
        name: format!("gamma-scale f(alpha={alpha})"),
        pdf: Arc::new(f_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(f_dtheta)),
    };
    let g = ModelSpec {
        name: format!("gamma-scale g(alpha={alpha}, k={k})"),
        pdf: Arc::new(g_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(g_dtheta)),
    };

    let t_coef = gamma(alpha) / gamma(alpha + kf);
    let mut stat =
        Statistic::new("G(alpha) X^k / G(alpha+k)", move |x: &[f64]| t_coef * x[0].powf(kf));
    stat.target = Some(Arc::new(move |th: &[f64]| th[0].powf(kf)));
    stat.target_deriv =
        Some(Arc::new(move |th: &[f64], i| falling(kf, i) * th[0].powf(kf - i as f64)));
    // lambda = E_g[T] = C theta^k with C from the mixture moments
    let c_lambda: f64 =
        t_coef * comps.iter().map(|&(b, w)| w * gamma(b + kf) / gamma(b)).sum::<f64>();
    stat.lambda_under_g = Some(Arc::new(move |th: &[f64]| c_lambda * th[0].powf(kf)));
    stat.lambda_deriv = Some(Arc::new(move |th: &[f64], i| {
        c_lambda * falling(kf, i) * th[0].powf(kf - i as f64)
    }));

    let var_coef = gamma(alpha) * gamma(2.0 * kf + alpha) / gamma(alpha + kf).powi(2) - 1.0;
    let var = move |th: &[f64]| var_coef * th[0].powf(2.0 * kf);
    // closed Fisher only for the single-component escort (k = -1)
    let fisher: Option<super::ThetaFn> = if k == -1 {
        let coef = gamma(alpha) * (alpha - 1.0) * gamma(alpha - 2.0) / gamma(alpha - 1.0).powi(2);
        Some(Arc::new(move |th: &[f64]| coef / (th[0] * th[0])))
    } else {
        None
    };
    Ok(CatalogEntry {
        name: "gamma-scale".to_string(),
        hyper: BTreeMap::from([("alpha".to_string(), alpha), ("k".to_string(), k as f64)]),
        pair: EscortPair::new(f, g).expect("domains match by construction"),
        statistic: stat,
        closed: ClosedForms {
            variance: Some(Arc::new(var)),
            fisher,
            bound: Some(Arc::new(var)),
            formulas: vec![
                (
                    "variance".into(),
                    "[G(alpha) G(2k+alpha) / G(alpha+k)^2 - 1] theta^(2k)".into(),
                ),
                ("lambda".into(), "C theta^k (mixture moment coefficient C)".into()),
            ],
        },
        notes: format!(
            "gamma scale family, shape alpha = {alpha}, estimating theta^{k}. The escort is a \
             gamma mixture with lowered shape parameters; its weights are normalized against the \
             exact component masses rather than any printed constant. For k = -1 the escort is a \
             single gamma with shape alpha - 1."
        ),
        claims: vec![
            AttainmentClaim { method: ClaimMethod::Naudts, attained: true },
            AttainmentClaim { method: ClaimMethod::BhattacharyyaClassical { order: 1 }, attained: false },
            AttainmentClaim { method: ClaimMethod::BhattacharyyaClassical { order: 2 }, attained: false },
            AttainmentClaim { method: ClaimMethod::BhattacharyyaClassical { order: 3 }, attained: false },
        ],
    })
}

// ---------------------------------------------------------------------------
// centered normal with scale theta, T = X^4/3
// ---------------------------------------------------------------------------

/// Coefficients of `d^m/dtheta^m N(0,theta^2) / N(0,theta^2)` as
/// `sum_j e[m][j] x^(2j) theta^(-m-2j)`.
fn normal_scale_logderiv_coeffs(max_order: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for m in 0..max_order {
        let prev = &rows[m];
        let mut row = vec![0.0; m + 2];
        for (j, cell) in row.iter_mut().enumerate() {
            let carry = if j > 0 { prev[j - 1] } else { 0.0 };
            let decay = if j < prev.len() {
                -(m as f64 + 2.0 * j as f64 + 1.0) * prev[j]
            } else {
                0.0
            };
            *cell = carry + decay;
        }
        rows.push(row);
    }
    rows
}

fn normal_scale_pdf(x: f64, theta: f64) -> f64 {
    let z = x / theta;
    (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * theta)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

fn normal_x4_entry() -> CatalogEntry {
    const MAX_ANALYTIC_ORDER: usize = 6;
    let coeffs = normal_scale_logderiv_coeffs(MAX_ANALYTIC_ORDER);
    let eval_phi_deriv = move |coeffs: &[Vec<f64>], m: usize, x: f64, t: f64| -> f64 {
        let poly: f64 = coeffs[m]
            .iter()
            .enumerate()
            .map(|(j, &e)| e * x.powi(2 * j as i32) * t.powi(-(m as i32) - 2 * j as i32))
            .sum();
        normal_scale_pdf(x, t) * poly
    };

    let f_pdf = |x: &[f64], th: &[f64]| normal_scale_pdf(x[0], th[0]);
    let f_coeffs = coeffs.clone();
    let f_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        if m > MAX_ANALYTIC_ORDER {
            return None;
        }
        Some(eval_phi_deriv(&f_coeffs, m, x[0], th[0]))
    };

    let g_pdf = |x: &[f64], th: &[f64]| {
        let (x, t) = (x[0], th[0]);
        (0.75 + x * x / (4.0 * t * t)) * normal_scale_pdf(x, t)
    };
    // g = P(x,theta) phi_theta(x) with P = 3/4 + x^2 theta^(-2)/4; Leibniz rule
    let g_coeffs = coeffs;
    let g_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        if m > MAX_ANALYTIC_ORDER {
            return None;
        }
        let (x, t) = (x[0], th[0]);
        let mut total = 0.0;
        for j in 0..=m {
            let p_j = if j == 0 {
                0.75 + x * x / (4.0 * t * t)
            } else {
                x * x / 4.0 * falling(-2.0, j) * t.powi(-2 - j as i32)
            };
            total += binomial(m, j) * p_j * eval_phi_deriv(&g_coeffs, m - j, x, t);
        }
        Some(total)
    };

    let support = || Support::Continuous {
        interval: Interval::fixed(f64::NEG_INFINITY, f64::INFINITY),
        breakpoints: None,
    };
    let f = ModelSpec {
        name: "normal-x4 f".to_string(),
        pdf: Arc::new(f_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(f_dtheta)),
    };
    let g = ModelSpec {
        name: "normal-x4 g".to_string(),
        pdf: Arc::new(g_pdf),
        support: support(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(g_dtheta)),
    };

    let mut stat = Statistic::new("X^4 / 3", |x: &[f64]| x[0].powi(4) / 3.0);
    stat.target = Some(Arc::new(|th: &[f64]| th[0].powi(4)));
    stat.target_deriv =
        Some(Arc::new(|th: &[f64], i| falling(4.0, i) * th[0].powf(4.0 - i as f64)));
    stat.lambda_under_g = Some(Arc::new(|th: &[f64]| 2.0 * th[0].powi(4)));
    stat.lambda_deriv =
        Some(Arc::new(|th: &[f64], i| 2.0 * falling(4.0, i) * th[0].powf(4.0 - i as f64)));

    CatalogEntry {
        name: "normal-x4".to_string(),
        hyper: BTreeMap::new(),
        pair: EscortPair::new(f, g).expect("domains match by construction"),
        statistic: stat,
        closed: ClosedForms {
            variance: Some(Arc::new(|th: &[f64]| 32.0 * th[0].powi(8) / 3.0)),
            fisher: Some(Arc::new(|th: &[f64]| 6.0 / (th[0] * th[0]))),
            bound: Some(Arc::new(|th: &[f64]| 32.0 * th[0].powi(8) / 3.0)),
            formulas: vec![
                ("variance".into(), "32 theta^8 / 3".into()),
                ("fisher".into(), "6 / theta^2".into()),
                ("lambda".into(), "2 theta^4".into()),
            ],
        },
        notes: "centered normal with scale theta; the escort mixes in the fourth-moment weight \
                (3/4 + x^2/(4 theta^2)). The first-order escort bound equals the order-2 \
                derivative bound of the plain family."
            .to_string(),
        claims: vec![
            AttainmentClaim { method: ClaimMethod::Naudts, attained: true },
            AttainmentClaim { method: ClaimMethod::BhattacharyyaClassical { order: 1 }, attained: false },
            AttainmentClaim { method: ClaimMethod::BhattacharyyaClassical { order: 2 }, attained: true },
        ],
    }
}

// ---------------------------------------------------------------------------
// Poisson pairs via the sufficient statistic s = sum of counts
// ---------------------------------------------------------------------------

fn poisson_pmf(s: f64, mean: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    (s * mean.ln() - mean - ln_gamma(s + 1.0)).exp()
}

/// `d^m/dtheta^m p(s; n theta) / p(s; n theta)` expressed through falling
/// factorials of s; exact and stable for large s.
fn poisson_logderiv(s: f64, n: f64, theta: f64, m: usize) -> f64 {
    let mu = n * theta;
    let mut total = 0.0;
    for i in 0..=m {
        let sign = if (m - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += binomial(m, i) * sign * falling(s, i) / mu.powi(i as i32);
    }
    total * n.powi(m as i32)
}

fn poisson_pair_entry(n: f64) -> CatalogEntry {
    let f_pdf = move |x: &[f64], th: &[f64]| poisson_pmf(x[0], n * th[0]);
    let f_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        Some(poisson_pmf(x[0], n * th[0]) * poisson_logderiv(x[0], n, th[0], multi[0]))
    };
    // g(s) = (p(s) + p(s-1))/2: a fair mix of the count and the count shifted by one
    let g_pdf = move |x: &[f64], th: &[f64]| {
        0.5 * poisson_pmf(x[0], n * th[0]) + 0.5 * poisson_pmf(x[0] - 1.0, n * th[0])
    };
    let g_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| {
        let m = multi[0];
        let s = x[0];
        let mu = n * th[0];
        let p_s = poisson_pmf(s, mu);
        let p_sm1 = if s >= 1.0 { p_s * s / mu } else { 0.0 };
        Some(
            0.5 * p_s * poisson_logderiv(s, n, th[0], m)
                + 0.5 * p_sm1 * poisson_logderiv(s - 1.0, n, th[0], m),
        )
    };
    let f = ModelSpec {
        name: format!("poisson-pair f(n={n})"),
        pdf: Arc::new(f_pdf),
        support: Support::nonnegative_integers(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(f_dtheta)),
    };
    let g = ModelSpec {
        name: format!("poisson-pair g(n={n})"),
        pdf: Arc::new(g_pdf),
        support: Support::nonnegative_integers(),
        param_dim: 1,
        param_domain: positive_domain(),
        dtheta: Some(Arc::new(g_dtheta)),
    };

    let mut stat = Statistic::new("s(s-1)/n^2", move |x: &[f64]| x[0] * (x[0] - 1.0) / (n * n));
    stat.target = Some(Arc::new(|th: &[f64]| th[0] * th[0]));
    stat.target_deriv =
        Some(Arc::new(|th: &[f64], i| falling(2.0, i) * th[0].powf(2.0 - i as f64)));
    stat.lambda_under_g = Some(Arc::new(move |th: &[f64]| th[0] * th[0] + th[0] / n));
    stat.lambda_deriv = Some(Arc::new(move |th: &[f64], i| match i {
        0 => th[0] * th[0] + th[0] / n,
        1 => 2.0 * th[0] + 1.0 / n,
        2 => 2.0,
        _ => 0.0,
    }));

    CatalogEntry {
        name: "poisson-pair".to_string(),
        hyper: BTreeMap::from([("n".to_string(), n)]),
        pair: EscortPair::new(f, g).expect("domains match by construction"),
        statistic: stat,
        closed: ClosedForms {
            variance: Some(Arc::new(move |th: &[f64]| {
                let t = th[0];
                4.0 * t * t * t / n + 2.0 * t * t / (n * n)
            })),
            fisher: Some(Arc::new(move |th: &[f64]| {
                n / th[0] + 0.5 / (th[0] * th[0])
            })),
            bound: Some(Arc::new(move |th: &[f64]| {
                let t = th[0];
                4.0 * t * t * t / n + 2.0 * t * t / (n * n)
            })),
            formulas: vec![
                ("variance".into(), "4 theta^3/n + 2 theta^2/n^2".into()),
                ("fisher".into(), "n/theta + 1/(2 theta^2)".into()),
                ("lambda".into(), "theta^2 + theta/n".into()),
            ],
        },
        notes: format!(
            "{n} iid Poisson counts reduced through s = sum, Poisson with mean n theta. The \
             escort is the fair mixture of s and s+1-shifted counts: g(s) = (p(s) + p(s-1))/2, \
             whose score is exactly proportional to T - theta^2."
        ),
        claims: vec![
            AttainmentClaim { method: ClaimMethod::Naudts, attained: true },
            AttainmentClaim { method: ClaimMethod::BhattacharyyaClassical { order: 2 }, attained: true },
        ],
    }
}

// ---------------------------------------------------------------------------
// n iid uniforms via t = max (the deformed-family entry)
// ---------------------------------------------------------------------------

fn uniform_joint_max_entry(n: f64) -> CatalogEntry {
    // reduced through t = max: both densities coincide with the
    // max-of-uniforms pair at k = 1, but the statistic is t itself
    let (f, g) = uniform_power_models(n, 1.0);
    let mut stat = Statistic::new("max", |x: &[f64]| x[0]);
    stat.target = Some(Arc::new(move |th: &[f64]| n * th[0] / (n + 1.0)));
    stat.target_deriv = Some(Arc::new(move |th: &[f64], i| match i {
        0 => n * th[0] / (n + 1.0),
        1 => n / (n + 1.0),
        _ => 0.0,
    }));
    stat.lambda_under_g = Some(Arc::new(move |th: &[f64]| n * th[0] / (n + 2.0)));
    stat.lambda_deriv = Some(Arc::new(move |th: &[f64], i| match i {
        0 => n * th[0] / (n + 2.0),
        1 => n / (n + 2.0),
        _ => 0.0,
    }));
    let var = move |th: &[f64]| n * th[0] * th[0] / ((n + 2.0) * (n + 1.0) * (n + 1.0));
    CatalogEntry {
        name: "uniform-joint-max".to_string(),
        hyper: BTreeMap::from([("n".to_string(), n)]),
        pair: EscortPair::new(f, g).expect("domains match by construction"),
        statistic: stat,
        closed: ClosedForms {
            variance: Some(Arc::new(var)),
            fisher: Some(Arc::new(move |th: &[f64]| {
                n * (n + 1.0) * (n + 1.0) / ((n + 2.0) * th[0] * th[0])
            })),
            bound: Some(Arc::new(var)),
            formulas: vec![
                ("variance".into(), "n theta^2 / ((n+2)(n+1)^2)".into()),
                ("fisher".into(), "n (n+1)^2 / ((n+2) theta^2)".into()),
                ("lambda".into(), "n theta / (n+2)".into()),
            ],
        },
        notes: format!(
            "{n} iid uniforms on [0, theta] reduced through the sufficient statistic t = max; \
             integrals over the joint cube become one-dimensional against the surface weight \
             n t^(n-1). The escort equals exp-deformed tilting with Z(u) = max(1+u, 0): the \
             joint escort is (n+1)(1 - t/theta)/theta^n, and the model is its reciprocal-slope \
             escort, the uniform joint density."
        ),
        claims: vec![AttainmentClaim { method: ClaimMethod::Naudts, attained: true }],
    }
}

// ---------------------------------------------------------------------------
// Gaussian sufficient-statistic reduction (not a named catalog entry; used by
// the vector-estimator and multiparameter engines)
// ---------------------------------------------------------------------------

/// Joint density of `(x̄, v)` for n iid normal observations with parameters
/// `(μ, σ)`: the mean `x̄ ~ N(μ, σ²/n)` independent of the centered sum of
/// squares `v ~ σ²·chi²(n−1)`. Requires `n ≥ 2`.
pub fn gaussian_sufficient_model(n: usize) -> ModelSpec {
    assert!(n >= 2, "the sufficient-statistic reduction needs n >= 2");
    let nf = n as f64;
    let m = nf - 1.0;
    let pdf = move |x: &[f64], th: &[f64]| {
        let (xb, v) = (x[0], x[1]);
        let (mu, sig) = (th[0], th[1]);
        if v <= 0.0 || sig <= 0.0 {
            return 0.0;
        }
        let var_mean = sig * sig / nf;
        let mean_part = (-0.5 * (xb - mu) * (xb - mu) / var_mean).exp()
            / (2.0 * std::f64::consts::PI * var_mean).sqrt();
        let half_m = 0.5 * m;
        let chi_part = ((half_m - 1.0) * v.ln()
            - v / (2.0 * sig * sig)
            - half_m * (2.0 * sig * sig).ln()
            - ln_gamma(half_m))
        .exp();
        mean_part * chi_part
    };
    let dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| -> Option<f64> {
        let (xb, v) = (x[0], x[1]);
        let (mu, sig) = (th[0], th[1]);
        let base = {
            let mut probe = [0.0; 2];
            probe.copy_from_slice(x);
            // reuse the closed pdf formula
            let var_mean = sig * sig / nf;
            if v <= 0.0 {
                0.0
            } else {
                let half_m = 0.5 * m;
                ((-0.5 * (xb - mu) * (xb - mu) / var_mean).exp()
                    / (2.0 * std::f64::consts::PI * var_mean).sqrt())
                    * ((half_m - 1.0) * v.ln()
                        - v / (2.0 * sig * sig)
                        - half_m * (2.0 * sig * sig).ln()
                        - ln_gamma(half_m))
                    .exp()
            }
        };
        match multi {
            [0, 0] => Some(base),
            [1, 0] => Some(base * nf * (xb - mu) / (sig * sig)),
            [0, 1] => Some(
                base * (nf * (xb - mu) * (xb - mu) / sig.powi(3) - 1.0 / sig
                    + v / sig.powi(3)
                    - m / sig),
            ),
            _ => None,
        }
    };
    ModelSpec {
        name: format!("gaussian-sufficient(n={n})"),
        pdf: Arc::new(pdf),
        support: Support::Product2 {
            first: Interval::fixed(f64::NEG_INFINITY, f64::INFINITY),
            second: Interval::fixed(0.0, f64::INFINITY),
        },
        param_dim: 2,
        param_domain: vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)],
        dtheta: Some(Arc::new(dtheta)),
    }
}

/// The two standard unbiased statistics on the reduction: the sample mean
/// (for μ) and the sample variance `v/(n−1)` (for σ²).
pub fn gaussian_sufficient_statistics(n: usize) -> (Statistic, Statistic) {
    let nf = n as f64;
    let mut xbar = Statistic::new("sample mean", |x: &[f64]| x[0]);
    xbar.target = Some(Arc::new(|th: &[f64]| th[0]));
    xbar.lambda_under_g = xbar.target.clone();
    let mut s2 = Statistic::new("sample variance", move |x: &[f64]| x[1] / (nf - 1.0));
    s2.target = Some(Arc::new(|th: &[f64]| th[1] * th[1]));
    s2.lambda_under_g = s2.target.clone();
    (xbar, s2)
}
