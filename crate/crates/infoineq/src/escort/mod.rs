//! Constructive synthesis of optimizing escort families.
//!
//! For location and scale families the equality condition
//! `∂θ g / f = a(θ)(T − φ(θ))` integrates to an explicit kernel; these
//! synthesizers tabulate that kernel, normalize it, and hand back a density
//! whose generalized Cramér-Rao bound is attained by construction. The
//! deformed-exponential case lives in [`deformed`].

use std::sync::Arc;

use crate::bounds::{self, EngineCtx};
use crate::error::{Error, Result};
use crate::model::{EscortPair, Interval, ModelSpec, Statistic, Support};
use crate::numerics::quadrature::{integrate_interval, QuadratureSettings};

pub mod deformed;
mod interp;

pub use deformed::{f_escort, DeformedFamily};
pub use interp::HermiteTable;

/// Kernel values in `(-1e-12, 0)` are clamped to zero; anything below is a
/// genuine sign change and the synthesis fails.
const SIGN_TOL: f64 = 1e-12;

/// How the synthesized base density generates the family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyRule {
    /// `g(x, θ) = g(x − θ)`
    LocationShift,
    /// `g(x, θ) = g(x/θ)/θ`
    Scale,
}

/// A synthesized escort density: tabulated kernel, normalizer, and the rule
/// generating the family from the base shape.
#[derive(Clone)]
pub struct SynthesizedDensity {
    pub base_name: String,
    pub family_rule: FamilyRule,
    /// Normalizer `1/∫kernel` (sign already folded into the kernel).
    pub normalizer: f64,
    kernel: Arc<HermiteTable>,
    /// Support of the base shape.
    pub support: (f64, f64),
}

impl SynthesizedDensity {
    /// Base-shape density `g(x)` at θ = 0 (location) or θ = 1 (scale).
    pub fn base_density(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        (self.kernel.eval(x) * self.normalizer).max(0.0)
    }

    /// Density of the generated family at `(x, θ)`.
    pub fn density(&self, x: f64, theta: f64) -> f64 {
        match self.family_rule {
            FamilyRule::LocationShift => self.base_density(x - theta),
            FamilyRule::Scale => self.base_density(x / theta) / theta,
        }
    }

    /// Derivative of the base shape, from the tabulated slopes.
    pub fn base_derivative(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        self.kernel.deriv(x) * self.normalizer
    }

    /// `∂θ` of the generated family at `(x, θ)`.
    pub fn dtheta(&self, x: f64, theta: f64) -> f64 {
        match self.family_rule {
            FamilyRule::LocationShift => -self.base_derivative(x - theta),
            FamilyRule::Scale => {
                let u = x / theta;
                -(u * self.base_derivative(u) + self.base_density(u)) / (theta * theta)
            }
        }
    }

    /// Wrap the synthesized family as a [`ModelSpec`] on the given open
    /// parameter domain.
    pub fn into_model(self, name: &str, param_domain: (f64, f64)) -> ModelSpec {
        let me = Arc::new(self);
        let rule = me.family_rule;
        let (lo, hi) = me.support;
        let pdf_me = me.clone();
        let pdf = move |x: &[f64], th: &[f64]| pdf_me.density(x[0], th[0]);
        let d_me = me.clone();
        let dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| match multi {
            [0] => Some(d_me.density(x[0], th[0])),
            [1] => Some(d_me.dtheta(x[0], th[0])),
            _ => None,
        };
        let interval = match rule {
            FamilyRule::LocationShift => {
                Interval::new(move |th: &[f64]| lo + th[0], move |th: &[f64]| hi + th[0])
            }
            FamilyRule::Scale => {
                Interval::new(move |th: &[f64]| lo * th[0], move |th: &[f64]| hi * th[0])
            }
        };
        ModelSpec {
            name: name.to_string(),
            pdf: Arc::new(pdf),
            support: Support::Continuous { interval, breakpoints: None },
            param_dim: 1,
            param_domain: vec![param_domain],
            dtheta: Some(Arc::new(dtheta)),
        }
    }
}

/// Tabulation grid for the synthesis integrals.
#[derive(Clone, Copy, Debug)]
pub struct SynthGrid {
    /// Base number of panels across the (truncated) support.
    pub points: usize,
    /// Truncation quantile mass for infinite supports: the grid stops where
    /// the base density tail integral falls below this.
    pub tail_mass: f64,
}

impl Default for SynthGrid {
    fn default() -> Self {
        Self { points: 4096, tail_mass: 1e-14 }
    }
}

/// Truncate an endpoint of the base support so the tabulation grid is finite.
fn truncate_support(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: &SynthGrid,
) -> Result<(f64, f64)> {
    let finite_lo = if lo.is_finite() {
        lo
    } else {
        let mut a = -1.0;
        while integrate_interval(f, f64::NEG_INFINITY, a, &[], &QuadratureSettings::default())?
            .value
            > grid.tail_mass
        {
            a *= 2.0;
            if a < -1e9 {
                return Err(Error::NoValidEscort("base density tail does not decay".into()));
            }
        }
        a
    };
    let finite_hi = if hi.is_finite() {
        hi
    } else {
        let mut b = 1.0;
        while integrate_interval(f, b, f64::INFINITY, &[], &QuadratureSettings::default())?.value
            > grid.tail_mass
        {
            b *= 2.0;
            if b > 1e9 {
                return Err(Error::NoValidEscort("base density tail does not decay".into()));
            }
        }
        b
    };
    Ok((finite_lo, finite_hi))
}

/// Accumulate `h(x) = ∫_{x0}^{x} w(u) du` on a grid via panel-wise quadrature,
/// returning grid points and values. The grid starts at the support's left
/// end; `x0` must coincide with it.
fn cumulative_table(
    w: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let settings = QuadratureSettings { max_subdivisions: 200, ..Default::default() };
    let mut xs = Vec::with_capacity(n + 1);
    let mut hs = Vec::with_capacity(n + 1);
    let step = (b - a) / n as f64;
    let mut acc = 0.0;
    xs.push(a);
    hs.push(0.0);
    for i in 0..n {
        let (x0, x1) = (a + i as f64 * step, a + (i + 1) as f64 * step);
        acc += integrate_interval(w, x0, x1, &[], &settings)?.value;
        xs.push(x1);
        hs.push(acc);
    }
    Ok((xs, hs))
}

/// Repair isolated non-finite table nodes. These arise from indeterminate
/// `0·∞` limits at support endpoints (a singular statistic against a
/// vanishing density); the value is linearly extrapolated from the nearest
/// finite neighbor. More than two bad nodes means the integrand itself is
/// broken.
fn patch_nonfinite(xs: &[f64], values: &mut [f64], slopes: &mut [f64]) -> Result<()> {
    let bad: Vec<usize> = (0..values.len())
        .filter(|&i| !values[i].is_finite() || !slopes[i].is_finite())
        .collect();
    if bad.len() > 2 {
        return Err(Error::NoValidEscort(format!(
            "{} non-finite kernel nodes; the synthesis integrand is undefined on the support",
            bad.len()
        )));
    }
    for &i in &bad {
        let neighbor = (0..values.len())
            .filter(|&j| values[j].is_finite() && slopes[j].is_finite())
            .min_by_key(|&j| j.abs_diff(i))
            .ok_or_else(|| Error::NoValidEscort("no finite kernel nodes".to_string()))?;
        values[i] = values[neighbor] - slopes[neighbor] * (xs[neighbor] - xs[i]);
        slopes[i] = slopes[neighbor];
    }
    Ok(())
}

/// Normalize a tabulated kernel: fold an overall sign, clamp roundoff
/// negatives, reject genuine sign changes, and return the positive kernel
/// and its total mass.
fn normalize_kernel(values: &mut [f64], slopes: &mut [f64]) -> Result<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = max.abs().max(min.abs());
    if scale <= SIGN_TOL {
        return Err(Error::NoValidEscort("kernel vanishes identically".into()));
    }
    // fold the sign so the kernel is nonnegative
    let flip = max.abs() < min.abs();
    if flip {
        for v in values.iter_mut() {
            *v = -*v;
        }
        for s in slopes.iter_mut() {
            *s = -*s;
        }
    }
    let floor = -SIGN_TOL * scale;
    for v in values.iter_mut() {
        if *v < floor {
            return Err(Error::NoValidEscort(format!(
                "kernel changes sign (value {:.3e} against scale {:.3e})",
                *v, scale
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(scale)
}

/// Location-family synthesis: from the equality condition at θ = 0,
/// `g(x) ∝ h(x) = φ(0)·∫_{x0}^x f − ∫_{x0}^x T f`. The returned family is
/// `g(x,θ) = g(x−θ)`.
pub fn synth_location(
    f: impl Fn(f64) -> f64 + Copy,
    t: impl Fn(f64) -> f64 + Copy,
    phi0: f64,
    x0: f64,
    support: (f64, f64),
    grid: &SynthGrid,
) -> Result<SynthesizedDensity> {
    let fw = move |x: f64| f(x);
    let (a, b) = truncate_support(&fw, support.0, support.1, grid)?;
    if x0 != a && !(support.0.is_infinite() && x0 <= a) {
        // the kernel is only defined up to the additive constant h(x0); the
        // synthesis anchors it at the support's left end
        return Err(Error::Config(format!(
            "x0 = {x0} must be the left support endpoint (= {a})"
        )));
    }
    let w = move |u: f64| (phi0 - t(u)) * f(u);
    let (xs, mut hs) = cumulative_table(&w, a, b, grid.points)?;
    let mut slopes: Vec<f64> = xs.iter().map(|&x| w(x)).collect();
    patch_nonfinite(&xs, &mut hs, &mut slopes)?;
    normalize_kernel(&mut hs, &mut slopes)?;
    let table = HermiteTable::new(xs, hs, slopes)?;
    let mass = table.integral();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::NoValidEscort(format!("kernel mass {mass} is not normalizable")));
    }
    Ok(SynthesizedDensity {
        base_name: "location escort".to_string(),
        family_rule: FamilyRule::LocationShift,
        normalizer: 1.0 / mass,
        kernel: Arc::new(table),
        support: (a, b),
    })
}

/// Scale-family synthesis: from the equality condition at θ = 1,
/// `x·g(x) ∝ h(x) = ∫_{x0}^x (φ(1) − T(u)) f(u) du`, so `g ∝ k(x) = h(x)/x`
/// extended continuously at x = 0. The boundary term `x0·g(x0)` must vanish,
/// which the synthesis checks through `x·f(x) → 0` at the left endpoint.
/// The returned family is `g(x,θ) = g(x/θ)/θ`.
pub fn synth_scale(
    f: impl Fn(f64) -> f64 + Copy,
    t: impl Fn(f64) -> f64 + Copy,
    phi1: f64,
    x0: f64,
    support: (f64, f64),
    grid: &SynthGrid,
) -> Result<SynthesizedDensity> {
    let fw = move |x: f64| f(x);
    let (a, b) = truncate_support(&fw, support.0, support.1, grid)?;
    if x0 != a && !(support.0.is_infinite() && x0 <= a) {
        return Err(Error::Config(format!(
            "x0 = {x0} must be the left support endpoint (= {a})"
        )));
    }
    // boundary term: x g(x) integrates from x0, so x0 g(x0) must vanish;
    // probe x f(x) at the (possibly truncated) endpoint
    let probe = if support.0.is_infinite() { a } else { support.0 };
    let boundary = probe * f(probe);
    if boundary.abs() > 1e-8 {
        return Err(Error::NonVanishingBoundary { x0: probe, value: boundary.abs() });
    }

    let w = move |u: f64| (phi1 - t(u)) * f(u);
    let (xs, hs) = cumulative_table(&w, a, b, grid.points)?;
    // k(x) = h(x)/x; only x = 0 itself is indeterminate (h(0) = 0 for a valid
    // scale kernel, so l'Hopital gives k(0) = h'(0) = w(0)); a non-finite w(0)
    // is repaired from the neighbors afterwards
    let mut ks: Vec<f64> = Vec::with_capacity(xs.len());
    let mut slopes: Vec<f64> = Vec::with_capacity(xs.len());
    for (&x, &h) in xs.iter().zip(&hs) {
        if x != 0.0 {
            ks.push(h / x);
            // k' = (h' x - h)/x^2 = (w(x) x - h)/x^2
            slopes.push((w(x) * x - h) / (x * x));
        } else {
            ks.push(w(x));
            slopes.push(f64::NAN);
        }
    }
    patch_nonfinite(&xs, &mut ks, &mut slopes)?;
    normalize_kernel(&mut ks, &mut slopes)?;
    let table = HermiteTable::new(xs, ks, slopes)?;
    let mass = table.integral();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::NoValidEscort(format!("kernel mass {mass} is not normalizable")));
    }
    Ok(SynthesizedDensity {
        base_name: "scale escort".to_string(),
        family_rule: FamilyRule::Scale,
        normalizer: 1.0 / mass,
        kernel: Arc::new(table),
        support: (a, b),
    })
}

/// Quadrature correlation under f between the projected score `Sᵀ Σ⁻¹ M` and
/// `T − φ(θ)`; `1 − |correlation|` quantifies how far the pair is from
/// attaining the bound.
pub fn verify_equality_condition(
    pair: &EscortPair,
    t: &Statistic,
    theta: &[f64],
    ctx: &EngineCtx,
) -> Result<f64> {
    let report = bounds::naudts_bound(pair, t, theta, ctx)?;
    report.diagnostics.equality_correlation.ok_or(Error::ZeroVariance)
}
