//! Density families, statistics, escort pairs, and the worked-example catalog.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, QuadratureSettings};

pub mod catalog;

/// Evaluator of a density at `(x, θ)`. For one-dimensional sample spaces `x`
/// has length 1; the Gaussian sufficient-statistic models use length 2.
pub type PdfFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Statistic evaluator `T(x)`.
pub type StatFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Closed-form scalar function of the parameter vector.
pub type ThetaFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Closed-form θ-derivative family: `(θ, order) -> d^order/dθ^order`.
/// Scalar-parameter families only.
pub type ThetaOrderFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// Analytic θ-derivatives of a density by multi-index: `(x, θ, multi)` with
/// `multi[c]` the derivative order in coordinate `c`. `multi = [0,..]` must
/// return the density itself. `None` means the family does not supply that
/// order analytically and callers fall back to numeric differencing.
pub type DensityDerivFn = Arc<dyn Fn(&[f64], &[f64], &[usize]) -> Option<f64> + Send + Sync>;

/// Parameter-dependent interval endpoint.
pub type EndpointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Parameter-dependent interior breakpoints (kink locations) of a density.
pub type BreakpointsFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A parameter-dependent interval, possibly with infinite endpoints.
#[derive(Clone)]
pub struct Interval {
    pub lower: EndpointFn,
    pub upper: EndpointFn,
}

impl Interval {
    pub fn new(
        lower: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        upper: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { lower: Arc::new(lower), upper: Arc::new(upper) }
    }

    pub fn fixed(lo: f64, hi: f64) -> Self {
        Self::new(move |_| lo, move |_| hi)
    }

    pub fn at(&self, theta: &[f64]) -> (f64, f64) {
        ((self.lower)(theta), (self.upper)(theta))
    }
}

/// Support of a density: a continuous interval with optional declared kinks,
/// a lattice `origin + k·step`, or a product of two continuous intervals.
#[derive(Clone)]
pub enum Support {
    Continuous { interval: Interval, breakpoints: Option<BreakpointsFn> },
    Discrete { origin: f64, step: f64, truncation: Option<usize> },
    Product2 { first: Interval, second: Interval },
}

impl Support {
    pub fn continuous(
        lower: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        upper: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Support::Continuous { interval: Interval::new(lower, upper), breakpoints: None }
    }

    pub fn nonnegative_integers() -> Self {
        Support::Discrete { origin: 0.0, step: 1.0, truncation: None }
    }

    /// Sample-space dimension (1 except for product supports).
    pub fn x_dim(&self) -> usize {
        match self {
            Support::Product2 { .. } => 2,
            _ => 1,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Support::Discrete { .. })
    }

    /// Interval endpoints at θ for continuous one-dimensional supports.
    pub fn interval_at(&self, theta: &[f64]) -> Option<(f64, f64)> {
        match self {
            Support::Continuous { interval, .. } => Some(interval.at(theta)),
            _ => None,
        }
    }

    /// Declared interior kinks at θ (empty unless wired).
    pub fn breakpoints_at(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Support::Continuous { breakpoints: Some(b), .. } => b(theta),
            _ => Vec::new(),
        }
    }
}

/// A parametrized density family.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub pdf: PdfFn,
    pub support: Support,
    pub param_dim: usize,
    /// Open box; evaluation on the boundary is an error, not a clamp.
    pub param_domain: Vec<(f64, f64)>,
    /// Analytic θ-derivatives of the density when the family supplies them.
    pub dtheta: Option<DensityDerivFn>,
}

impl ModelSpec {
    pub fn x_dim(&self) -> usize {
        self.support.x_dim()
    }

    pub fn pdf_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.pdf)(x, theta)
    }

    /// Strict interior check on the open parameter box.
    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim {
            return Err(Error::DimensionMismatch(format!(
                "theta has {} coordinates, model '{}' expects {}",
                theta.len(),
                self.name,
                self.param_dim
            )));
        }
        for (c, (&t, &(lo, hi))) in theta.iter().zip(&self.param_domain).enumerate() {
            if !(t > lo && t < hi) {
                return Err(Error::ThetaOutOfDomain { coord: c, value: t, lo, hi });
            }
        }
        Ok(())
    }

    /// Analytic density derivative if wired for this multi-index, else None.
    pub fn dtheta_at(&self, x: &[f64], theta: &[f64], multi: &[usize]) -> Option<f64> {
        self.dtheta.as_ref().and_then(|d| d(x, theta, multi))
    }
}

/// An estimator `T(x)` together with whatever closed forms the catalog knows
/// about it: the target functional `φ(θ) = E_f[T]`, the escort expectation
/// `λ(θ) = E_g[T]`, and their derivatives.
#[derive(Clone)]
pub struct Statistic {
    pub name: String,
    pub eval: StatFn,
    pub target: Option<ThetaFn>,
    pub target_deriv: Option<ThetaOrderFn>,
    pub lambda_under_g: Option<ThetaFn>,
    pub lambda_deriv: Option<ThetaOrderFn>,
}

impl Statistic {
    pub fn new(name: &str, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            eval: Arc::new(eval),
            target: None,
            target_deriv: None,
            lambda_under_g: None,
            lambda_deriv: None,
        }
    }

    pub fn eval_at(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

/// A `(f, g)` pair of density families on a common parameter domain.
#[derive(Clone)]
pub struct EscortPair {
    pub f: ModelSpec,
    pub g: ModelSpec,
    pub containment_checked: bool,
}

impl EscortPair {
    pub fn new(f: ModelSpec, g: ModelSpec) -> Result<Self> {
        if f.param_dim != g.param_dim {
            return Err(Error::DimensionMismatch(format!(
                "param_dim {} vs {}",
                f.param_dim, g.param_dim
            )));
        }
        if f.param_domain != g.param_domain {
            return Err(Error::DimensionMismatch(
                "escort pair parameter domains differ".to_string(),
            ));
        }
        Ok(Self { f, g, containment_checked: false })
    }

    /// The classical choice g = f.
    pub fn self_escort(f: ModelSpec) -> Self {
        let g = f.clone();
        Self { f, g, containment_checked: true }
    }

    pub fn is_self_escort(&self) -> bool {
        Arc::ptr_eq(&self.f.pdf, &self.g.pdf)
    }

    /// Numeric proxy for absolute continuity of g with respect to f: on a scan
    /// grid, every point carrying non-negligible g mass must carry positive f
    /// mass. Masses below 1e-250 are quadrature-invisible underflow and are
    /// treated as zero.
    pub fn check_containment(&self, theta: &[f64], grid_points: usize) -> Result<()> {
        const MASS_FLOOR: f64 = 1e-250;
        self.f.check_theta(theta)?;
        match (&self.g.support, &self.f.support) {
            (Support::Continuous { interval: gi, .. }, Support::Continuous { .. }) => {
                let (lo, hi) = gi.at(theta);
                let (lo, hi) = (lo.max(-1e6), hi.min(1e6));
                for i in 0..grid_points {
                    let x = lo + (hi - lo) * (i as f64 + 0.5) / grid_points as f64;
                    let gx = self.g.pdf_at(&[x], theta);
                    if gx > MASS_FLOOR && !(self.f.pdf_at(&[x], theta) > 0.0) {
                        return Err(Error::SupportViolation { node_index: 0 });
                    }
                }
            }
            (Support::Discrete { origin, step, .. }, Support::Discrete { .. }) => {
                for k in 0..grid_points {
                    let x = origin + step * k as f64;
                    let gx = self.g.pdf_at(&[x], theta);
                    if gx > MASS_FLOOR && !(self.f.pdf_at(&[x], theta) > 0.0) {
                        return Err(Error::SupportViolation { node_index: 0 });
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Optional closed forms stored with a catalog entry, exposed both as
/// evaluators and as display strings for reports.
#[derive(Clone, Default)]
pub struct ClosedForms {
    pub variance: Option<ThetaFn>,
    pub fisher: Option<ThetaFn>,
    pub bound: Option<ThetaFn>,
    /// `(quantity, formula)` strings for report output.
    pub formulas: Vec<(String, String)>,
}

/// Which engine a paper attainment claim refers to.
#[derive(Clone, Debug, PartialEq)]
pub enum ClaimMethod {
    Naudts,
    BhattacharyyaClassical { order: usize },
    HcrSup,
}

/// A recorded attainment claim, checked by the verification suite.
#[derive(Clone, Debug)]
pub struct AttainmentClaim {
    pub method: ClaimMethod,
    pub attained: bool,
}

/// A fully wired worked example: escort pair, statistic, closed forms,
/// provenance notes, and the attainment pattern the suite asserts.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub hyper: BTreeMap<String, f64>,
    pub pair: EscortPair,
    pub statistic: Statistic,
    pub closed: ClosedForms,
    pub notes: String,
    pub claims: Vec<AttainmentClaim>,
}

impl CatalogEntry {
    /// Copy of the entry with every closed form stripped, forcing engines onto
    /// the all-numeric path. Used by tests that exercise quadrature fallbacks.
    pub fn without_closed_forms(&self) -> Self {
        let mut e = self.clone();
        e.closed = ClosedForms::default();
        e.statistic.lambda_under_g = None;
        e.statistic.lambda_deriv = None;
        e.statistic.target_deriv = None;
        e.pair.f.dtheta = None;
        e.pair.g.dtheta = None;
        e
    }
}

/// `|∫ pdf dx − 1|` (or the summation analogue) at θ.
pub fn normalization_check(m: &ModelSpec, theta: &[f64], s: &QuadratureSettings) -> Result<f64> {
    m.check_theta(theta)?;
    let pdf = m.pdf.clone();
    let est = integrate(&|x: &[f64]| pdf(x, theta), &m.support, theta, s)?;
    Ok((est.value - 1.0).abs())
}

/// `|E_f[T] − φ(θ)|` for entries whose statistic has a target.
pub fn unbiasedness_check(
    entry: &CatalogEntry,
    theta: &[f64],
    s: &QuadratureSettings,
) -> Result<f64> {
    let target = entry
        .statistic
        .target
        .as_ref()
        .ok_or_else(|| Error::MissingTarget(entry.statistic.name.clone()))?;
    entry.pair.f.check_theta(theta)?;
    let pdf = entry.pair.f.pdf.clone();
    let t = entry.statistic.eval.clone();
    let est = integrate(&|x: &[f64]| t(x) * pdf(x, theta), &entry.pair.f.support, theta, s)?;
    Ok((est.value - target(theta)).abs())
}
