//! Adaptive Gauss-Kronrod quadrature and lattice summation over
//! (possibly parameter-dependent) supports.
//!
//! The scheme is 15-point Gauss-Kronrod per panel with adaptive bisection of
//! the worst panel. Infinite endpoints are mapped by rational transforms, and
//! declared breakpoints (support kinks such as `t = θ` surfaces) become
//! initial panel boundaries so no panel ever straddles one. The Kronrod
//! abscissae are interior, so transformed endpoints are never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::{Interval, Support};

/// Tail-mass cutoff for lattice sums, relative to the largest term seen.
const LATTICE_TAIL_CUT: f64 = 1e-14;
/// Consecutive sub-cutoff terms required before a lattice sum stops.
const LATTICE_TAIL_RUN: usize = 8;
/// Hard cap on lattice terms.
const LATTICE_MAX_TERMS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    AdaptiveLocalRefinement,
    FixedComposite,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub scheme: Scheme,
}

impl QuadratureSettings {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1 {
            return Err(Error::Config(format!(
                "quadrature settings require abs_tol > 0, rel_tol > 0, max_subdivisions >= 1 \
                 (got {abs_tol}, {rel_tol}, {max_subdivisions})"
            )));
        }
        Ok(Self { abs_tol, rel_tol, max_subdivisions, scheme: Scheme::AdaptiveLocalRefinement })
    }
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            scheme: Scheme::AdaptiveLocalRefinement,
        }
    }
}

/// Integral (or lattice sum) together with its error estimate and, for
/// discrete supports, the truncation index actually used.
#[derive(Clone, Copy, Debug)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub truncation: Option<usize>,
}

// 15-point Kronrod abscissae (positive half) and weights; 7-point Gauss
// weights are applied at the odd-indexed abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Conservative per-panel estimate: the raw Gauss/Kronrod discrepancy with a
// roundoff floor. The usual superlinear deflation of the discrepancy
// underestimates on piecewise-smooth integrands (interpolated kernels, kinked
// escort densities), which this artifact integrates routinely.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let scaled = err.abs().min(res_asc.max(err.abs()));
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        return scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One GK15 panel. Returns `(kronrod, error)`, or None if the integrand
/// produced a non-finite value.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Option<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    if !f_center.is_finite() {
        return None;
    }

    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    // the center is both a Kronrod and a Gauss-7 node
    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    for j in 0..7 {
        let x = half * XGK[j];
        let v1 = f(center - x);
        let v2 = f(center + x);
        if !v1.is_finite() || !v2.is_finite() {
            return None;
        }
        fv1[j] = v1;
        fv2[j] = v2;
        let sum = v1 + v2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (v1.abs() + v2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = ((res_kronrod - res_gauss) * half).abs();
    Some((res_kronrod * half, rescale_error(err, res_abs * half.abs(), res_asc * half.abs())))
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn initial_segments(a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut segs = Vec::with_capacity(pts.len() + 1);
    let mut lo = a;
    for p in pts {
        segs.push((lo, p));
        lo = p;
    }
    segs.push((lo, b));
    segs
}

fn adaptive_finite(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    s: &QuadratureSettings,
) -> Result<QuadEstimate> {
    let nan = || Error::NanEncountered("quadrature integrand".to_string());
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    // bootstrap each segment with several panels: on a single wide panel the
    // Gauss and Kronrod rules can agree by accident while both are wrong
    // (symmetric peaks), which would stop refinement immediately
    const BOOT: usize = 8;
    for (lo, hi) in initial_segments(a, b, breaks) {
        let w = (hi - lo) / BOOT as f64;
        for i in 0..BOOT {
            let (pa, pb) = (lo + i as f64 * w, lo + (i + 1) as f64 * w);
            let (v, e) = gk15(f, pa, pb).ok_or_else(nan)?;
            total += v;
            total_err += e;
            heap.push(Panel { a: pa, b: pb, value: v, error: e });
        }
    }

    let mut subdivisions = 0usize;
    while total_err > s.abs_tol.max(s.rel_tol * total.abs()) {
        if subdivisions >= s.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                error_estimate: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel narrower than f64 spacing; keep its estimate and move on
            total_err -= worst.error;
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid).ok_or_else(nan)?;
        let (v2, e2) = gk15(f, mid, worst.b).ok_or_else(nan)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }

    // resum for a final value free of incremental-update drift
    let value = heap.iter().map(|p| p.value).sum();
    Ok(QuadEstimate { value, error: total_err, truncation: None })
}

fn composite_finite(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    s: &QuadratureSettings,
) -> Result<QuadEstimate> {
    let nan = || Error::NanEncountered("quadrature integrand".to_string());
    let segs = initial_segments(a, b, breaks);
    let mut per_seg = 8usize;
    loop {
        let mut total = 0.0;
        let mut total_err = 0.0;
        for &(lo, hi) in &segs {
            let w = (hi - lo) / per_seg as f64;
            for i in 0..per_seg {
                let (v, e) = gk15(f, lo + i as f64 * w, lo + (i + 1) as f64 * w).ok_or_else(nan)?;
                total += v;
                total_err += e;
            }
        }
        if total_err <= s.abs_tol.max(s.rel_tol * total.abs()) {
            return Ok(QuadEstimate { value: total, error: total_err, truncation: None });
        }
        per_seg *= 2;
        if per_seg * segs.len() > s.max_subdivisions.max(16) {
            return Err(Error::QuadratureNonConvergence {
                error_estimate: total_err,
                subdivisions: per_seg * segs.len() / 2,
            });
        }
    }
}

fn finite(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    s: &QuadratureSettings,
) -> Result<QuadEstimate> {
    match s.scheme {
        Scheme::AdaptiveLocalRefinement => adaptive_finite(f, a, b, breaks, s),
        Scheme::FixedComposite => composite_finite(f, a, b, breaks, s),
    }
}

/// Integrate a scalar function over `(a, b)`; either endpoint may be infinite.
/// `breaks` are interior points the panel structure must respect.
pub fn integrate_interval(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    s: &QuadratureSettings,
) -> Result<QuadEstimate> {
    if a >= b {
        return Ok(QuadEstimate { value: 0.0, error: 0.0, truncation: None });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => finite(f, a, b, breaks, s),
        (true, false) => {
            // x = a + t/(1-t), t in (0,1)
            let g = move |t: f64| {
                let om = 1.0 - t;
                f(a + t / om) / (om * om)
            };
            let tb: Vec<f64> = breaks
                .iter()
                .filter(|&&x| x.is_finite() && x > a)
                .map(|&x| (x - a) / (1.0 + x - a))
                .collect();
            finite(&g, 0.0, 1.0, &tb, s)
        }
        (false, true) => {
            // x = b - t/(1-t), t in (0,1); orientation preserved by symmetry
            let g = move |t: f64| {
                let om = 1.0 - t;
                f(b - t / om) / (om * om)
            };
            let tb: Vec<f64> = breaks
                .iter()
                .filter(|&&x| x.is_finite() && x < b)
                .map(|&x| (b - x) / (1.0 + b - x))
                .collect();
            finite(&g, 0.0, 1.0, &tb, s)
        }
        (false, false) => {
            // x = t/(1-t^2), t in (-1,1)
            let g = move |t: f64| {
                let d = 1.0 - t * t;
                f(t / d) * (1.0 + t * t) / (d * d)
            };
            let tb: Vec<f64> = breaks
                .iter()
                .filter(|&&x| x.is_finite())
                .map(|&x| {
                    if x == 0.0 {
                        0.0
                    } else {
                        (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x)
                    }
                })
                .collect();
            finite(&g, -1.0, 1.0, &tb, s)
        }
    }
}

/// Lattice sum over `origin + k·step`, truncated either at an explicit index
/// or where the tail falls below [`LATTICE_TAIL_CUT`] of the largest term.
fn sum_lattice(
    f: &dyn Fn(f64) -> f64,
    origin: f64,
    step: f64,
    truncation: Option<usize>,
) -> Result<QuadEstimate> {
    let mut total = 0.0;
    let mut max_abs = 0.0_f64;
    if let Some(n) = truncation {
        for k in 0..=n {
            let term = f(origin + step * k as f64);
            if !term.is_finite() {
                return Err(Error::NanEncountered(format!("lattice term at index {k}")));
            }
            total += term;
            max_abs = max_abs.max(term.abs());
        }
        return Ok(QuadEstimate {
            value: total,
            error: LATTICE_TAIL_CUT * max_abs.max(1.0) * LATTICE_TAIL_RUN as f64,
            truncation: Some(n),
        });
    }
    let mut small_run = 0usize;
    for k in 0..LATTICE_MAX_TERMS {
        let term = f(origin + step * k as f64);
        if !term.is_finite() {
            return Err(Error::NanEncountered(format!("lattice term at index {k}")));
        }
        total += term;
        max_abs = max_abs.max(term.abs());
        if term.abs() < LATTICE_TAIL_CUT * max_abs.max(f64::MIN_POSITIVE) {
            small_run += 1;
            if small_run >= LATTICE_TAIL_RUN && k > 2 {
                return Ok(QuadEstimate {
                    value: total,
                    error: LATTICE_TAIL_CUT * max_abs * LATTICE_TAIL_RUN as f64,
                    truncation: Some(k),
                });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::SummationTruncation(LATTICE_MAX_TERMS))
}

/// Integrate (or sum) an evaluator over a support at θ.
pub fn integrate(
    f: &dyn Fn(&[f64]) -> f64,
    support: &Support,
    theta: &[f64],
    s: &QuadratureSettings,
) -> Result<QuadEstimate> {
    integrate_with(f, support, theta, s, &[], None)
}

/// As [`integrate`], with extra breakpoints (e.g. support endpoints of other
/// parameter nodes) and an optional truncation override for lattice sums.
pub fn integrate_with(
    f: &dyn Fn(&[f64]) -> f64,
    support: &Support,
    theta: &[f64],
    s: &QuadratureSettings,
    extra_breaks: &[f64],
    truncation_override: Option<usize>,
) -> Result<QuadEstimate> {
    match support {
        Support::Continuous { interval, breakpoints } => {
            let (a, b) = interval.at(theta);
            let mut breaks = breakpoints.as_ref().map(|bp| bp(theta)).unwrap_or_default();
            breaks.extend_from_slice(extra_breaks);
            integrate_interval(&|x| f(&[x]), a, b, &breaks, s)
        }
        Support::Discrete { origin, step, truncation } => {
            sum_lattice(&|x| f(&[x]), *origin, *step, truncation_override.or(*truncation))
        }
        Support::Product2 { first, second } => {
            integrate2(&|x1, x2| f(&[x1, x2]), first, second, theta, s)
        }
    }
}

/// Iterated quadrature over a product of two intervals.
pub fn integrate2(
    f: &dyn Fn(f64, f64) -> f64,
    first: &Interval,
    second: &Interval,
    theta: &[f64],
    s: &QuadratureSettings,
) -> Result<QuadEstimate> {
    let (a1, b1) = first.at(theta);
    let (a2, b2) = second.at(theta);
    let inner_settings = QuadratureSettings {
        abs_tol: s.abs_tol * 0.1,
        rel_tol: s.rel_tol * 0.1,
        ..*s
    };
    let failed = std::cell::Cell::new(false);
    let outer = |x1: f64| match integrate_interval(&|x2| f(x1, x2), a2, b2, &[], &inner_settings) {
        Ok(est) => est.value,
        Err(_) => {
            failed.set(true);
            f64::NAN
        }
    };
    let result = integrate_interval(&outer, a1, b1, &[], s);
    if failed.get() {
        return Err(Error::NanEncountered("inner integral of product support".to_string()));
    }
    result
}
