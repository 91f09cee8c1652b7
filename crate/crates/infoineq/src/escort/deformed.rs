//! Deformed exponential families `g(x;θ) = Z(θ·T(x) − φ(θ))` and their
//! F-escort `f = 1/(F'(g)·h_F(θ))`, the model under which T attains the
//! generalized Cramér-Rao bound at the expectation parameter.
//!
//! Families may live on a sufficient-statistic reduction: all integrals run
//! against a weight `w(t)` (the surface measure of the reduction), so an
//! n-dimensional joint family with a scalar sufficient statistic needs only
//! one-dimensional quadrature.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::model::{EscortPair, Interval, ModelSpec, Statistic, Support};
use crate::numerics::quadrature::{integrate_interval, QuadratureSettings};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A deformed exponential family on a (possibly reduced) scalar sample space.
#[derive(Clone)]
pub struct DeformedFamily {
    pub name: String,
    /// Deformed logarithm `F` with `F' > 0` and `F'' ≤ 0` on `(0, ∞)`.
    pub f_log: RealFn,
    /// `F'`.
    pub f_log_deriv: RealFn,
    /// Deformed exponential `Z`, the inverse of `F`.
    pub z: RealFn,
    /// Kink argument of `Z` when it has one (`[1+u]₊` kinks at `u = −1`).
    pub z_kink: Option<f64>,
    /// Canonical statistic `T(t)`; must be strictly monotone in `t` for kink
    /// location.
    pub statistic: Statistic,
    /// Reduction weight `w(t)`; identically 1 for a plain sample space.
    pub weight: RealFn,
    /// Sample-space interval for `t`.
    pub support: (f64, f64),
    /// Map from the user-facing parameter to the canonical coefficient.
    pub canonical: RealFn,
}

/// Solved normalization state at one parameter point.
#[derive(Clone, Copy, Debug)]
pub struct FEscortSolution {
    pub theta_tilde: f64,
    /// Normalizer `φ(θ̃)` with `∫ Z(θ̃T − φ) w dt = 1`.
    pub phi: f64,
    /// `h_F(θ) = ∫ 1/F'(g) w dt` over the positive part of g.
    pub h_f: f64,
    /// Expectation parameter `η = E_f[T]` under the escort.
    pub eta: f64,
    /// Kink locations of g in the sample space.
    pub kinks: [Option<f64>; 1],
}

impl DeformedFamily {
    fn t_eval(&self, t: f64) -> f64 {
        (self.statistic.eval)(&[t])
    }

    fn g_raw(&self, t: f64, theta_tilde: f64, phi: f64) -> f64 {
        (self.z)(theta_tilde * self.t_eval(t) - phi)
    }

    /// Location where the Z-kink crosses the sample space, if any.
    fn kink_t(&self, theta_tilde: f64, phi: f64) -> Option<f64> {
        let u_star = self.z_kink?;
        let target = |t: f64| theta_tilde * self.t_eval(t) - phi - u_star;
        // scan a log-ish grid over the support for a sign change, then bisect
        let (lo, hi) = self.support;
        let lo_s = if lo.is_finite() { lo } else { -1e6 };
        let hi_s = if hi.is_finite() { hi } else { 1e6 };
        let n = 4096;
        let mut prev_t = lo_s;
        let mut prev_v = target(prev_t);
        for i in 1..=n {
            let t = lo_s + (hi_s - lo_s) * i as f64 / n as f64;
            let v = target(t);
            if prev_v == 0.0 {
                return Some(prev_t);
            }
            if prev_v * v < 0.0 {
                let (mut a, mut b) = (prev_t, t);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if target(a) * target(mid) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                return Some(0.5 * (a + b));
            }
            prev_t = t;
            prev_v = v;
        }
        None
    }

    fn normalization(&self, theta_tilde: f64, phi: f64, s: &QuadratureSettings) -> Result<f64> {
        let breaks: Vec<f64> = self.kink_t(theta_tilde, phi).into_iter().collect();
        let me = self.clone();
        let est = integrate_interval(
            &move |t| me.g_raw(t, theta_tilde, phi) * (me.weight)(t),
            self.support.0,
            self.support.1,
            &breaks,
            s,
        )?;
        Ok(est.value)
    }

    /// Solve `φ` from the normalization condition by bisection after a
    /// geometric bracket expansion from 0; `Z` increasing makes the integral
    /// monotone decreasing in `φ`.
    pub fn solve_phi(&self, theta_tilde: f64, s: &QuadratureSettings) -> Result<f64> {
        let eval = |c: f64| self.normalization(theta_tilde, c, s);
        let at_zero = eval(0.0)?;
        let (mut lo, mut hi);
        if at_zero >= 1.0 {
            // mass too big: increase phi
            lo = 0.0;
            hi = 1.0;
            let mut step = 1.0;
            let mut guard = 0;
            while eval(hi)? > 1.0 {
                lo = hi;
                step *= 2.0;
                hi += step;
                guard += 1;
                if guard > 60 {
                    return Err(Error::PhiSolveFailed(
                        "bracket expansion did not cross the unit-mass level".to_string(),
                    ));
                }
            }
        } else {
            hi = 0.0;
            lo = -1.0;
            let mut step = 1.0;
            let mut guard = 0;
            while eval(lo)? < 1.0 {
                hi = lo;
                step *= 2.0;
                lo -= step;
                guard += 1;
                if guard > 60 {
                    return Err(Error::PhiSolveFailed(
                        "bracket expansion did not cross the unit-mass level".to_string(),
                    ));
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = eval(mid)?;
            if (v - 1.0).abs() <= 1e-12 {
                return Ok(mid);
            }
            if v > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo).abs() <= f64::EPSILON * (1.0 + mid.abs()) {
                return Ok(mid);
            }
        }
        let mid = 0.5 * (lo + hi);
        let residual = (eval(mid)? - 1.0).abs();
        if residual <= 1e-10 {
            Ok(mid)
        } else {
            Err(Error::PhiSolveFailed(format!("bisection stalled at residual {residual:.3e}")))
        }
    }

    /// Solve the full escort state at a user parameter value.
    pub fn solve(&self, theta: f64, s: &QuadratureSettings) -> Result<FEscortSolution> {
        let theta_tilde = (self.canonical)(theta);
        let phi = self.solve_phi(theta_tilde, s)?;
        let kink = self.kink_t(theta_tilde, phi);
        let breaks: Vec<f64> = kink.into_iter().collect();
        let me = self.clone();
        let recip = move |t: f64| {
            let g = me.g_raw(t, theta_tilde, phi);
            if g > 0.0 {
                (me.weight)(t) / (me.f_log_deriv)(g)
            } else {
                0.0
            }
        };
        let h_f =
            integrate_interval(&recip, self.support.0, self.support.1, &breaks, s)?.value;
        if !(h_f.is_finite() && h_f > 0.0) {
            return Err(Error::NoValidEscort(format!("h_F = {h_f} is not normalizable")));
        }
        let me2 = self.clone();
        let recip2 = move |t: f64| {
            let g = me2.g_raw(t, theta_tilde, phi);
            if g > 0.0 {
                me2.t_eval(t) * (me2.weight)(t) / (me2.f_log_deriv)(g)
            } else {
                0.0
            }
        };
        let eta = integrate_interval(&recip2, self.support.0, self.support.1, &breaks, s)?
            .value
            / h_f;
        Ok(FEscortSolution { theta_tilde, phi, h_f, eta, kinks: [kink] })
    }
}

/// The F-escort of a deformed family at one parameter point: evaluators for
/// the joint density value and the reduced t-density.
#[derive(Clone)]
pub struct FEscort {
    family: DeformedFamily,
    pub solution: FEscortSolution,
}

impl FEscort {
    /// Joint density value `1/(F'(g) h_F)` at `t` (zero off the positive part
    /// of g).
    pub fn joint_density(&self, t: f64) -> f64 {
        let s = &self.solution;
        let g = self.family.g_raw(t, s.theta_tilde, s.phi);
        if g > 0.0 {
            1.0 / ((self.family.f_log_deriv)(g) * s.h_f)
        } else {
            0.0
        }
    }

    /// Density of `t` on the reduced space (joint value times the reduction
    /// weight).
    pub fn t_density(&self, t: f64) -> f64 {
        self.joint_density(t) * (self.family.weight)(t)
    }

    /// Deformed-family joint density value at `t`.
    pub fn g_joint_density(&self, t: f64) -> f64 {
        let s = &self.solution;
        self.family.g_raw(t, s.theta_tilde, s.phi)
    }
}

/// Build the F-escort `f(x,θ) = 1/(F'(g) h_F(θ))` of a deformed family.
pub fn f_escort(d: &DeformedFamily, theta: f64, s: &QuadratureSettings) -> Result<FEscort> {
    let solution = d.solve(theta, s)?;
    Ok(FEscort { family: d.clone(), solution })
}

type SolutionCache = Arc<Mutex<HashMap<u64, FEscortSolution>>>;

fn cached_solution(
    d: &DeformedFamily,
    cache: &SolutionCache,
    theta: f64,
    s: &QuadratureSettings,
) -> Result<FEscortSolution> {
    let key = theta.to_bits();
    if let Some(sol) = cache.lock().expect("cache poisoned").get(&key) {
        return Ok(*sol);
    }
    let sol = d.solve(theta, s)?;
    cache.lock().expect("cache poisoned").insert(key, sol);
    Ok(sol)
}

impl DeformedFamily {
    /// Wrap the family and its F-escort as an [`EscortPair`] over a parameter
    /// domain, with analytic first-order θ-derivatives of g derived from
    /// `∂θ g = θ̃'(θ)(T − η)/F'(g)` (the normalizer derivative is
    /// `φ' = θ̃'·η`). Solutions are cached per parameter point.
    pub fn escort_pair(&self, param_domain: (f64, f64), s: &QuadratureSettings) -> Result<EscortPair> {
        let cache: SolutionCache = Arc::new(Mutex::new(HashMap::new()));
        let quad = *s;

        let fam_f = self.clone();
        let cache_f = cache.clone();
        let f_pdf = move |x: &[f64], th: &[f64]| {
            let sol = match cached_solution(&fam_f, &cache_f, th[0], &quad) {
                Ok(sol) => sol,
                Err(_) => return f64::NAN,
            };
            let esc = FEscort { family: fam_f.clone(), solution: sol };
            esc.t_density(x[0])
        };

        let fam_g = self.clone();
        let cache_g = cache.clone();
        let g_pdf = move |x: &[f64], th: &[f64]| {
            let sol = match cached_solution(&fam_g, &cache_g, th[0], &quad) {
                Ok(sol) => sol,
                Err(_) => return f64::NAN,
            };
            fam_g.g_raw(x[0], sol.theta_tilde, sol.phi) * (fam_g.weight)(x[0])
        };

        let fam_d = self.clone();
        let cache_d = cache.clone();
        let g_dtheta = move |x: &[f64], th: &[f64], multi: &[usize]| -> Option<f64> {
            let sol = cached_solution(&fam_d, &cache_d, th[0], &quad).ok()?;
            match multi {
                [0] => {
                    Some(fam_d.g_raw(x[0], sol.theta_tilde, sol.phi) * (fam_d.weight)(x[0]))
                }
                [1] => {
                    let g = fam_d.g_raw(x[0], sol.theta_tilde, sol.phi);
                    if g <= 0.0 {
                        return Some(0.0);
                    }
                    // dtheta_tilde/dtheta by central difference of the canonical map
                    let h = 1e-6 * th[0].abs().max(1.0);
                    let dtilde =
                        ((fam_d.canonical)(th[0] + h) - (fam_d.canonical)(th[0] - h)) / (2.0 * h);
                    let zprime = 1.0 / (fam_d.f_log_deriv)(g);
                    Some(
                        (fam_d.weight)(x[0])
                            * zprime
                            * dtilde
                            * (fam_d.t_eval(x[0]) - sol.eta),
                    )
                }
                _ => None,
            }
        };

        let fam_b = self.clone();
        let cache_b = cache;
        let breakpoints = move |th: &[f64]| -> Vec<f64> {
            match cached_solution(&fam_b, &cache_b, th[0], &quad) {
                Ok(sol) => sol.kinks.iter().flatten().copied().collect(),
                Err(_) => Vec::new(),
            }
        };

        let (lo, hi) = self.support;
        let support = || Support::Continuous {
            interval: Interval::fixed(lo, hi),
            breakpoints: Some(Arc::new(breakpoints.clone())),
        };

        let f = ModelSpec {
            name: format!("{} F-escort", self.name),
            pdf: Arc::new(f_pdf),
            support: support(),
            param_dim: 1,
            param_domain: vec![param_domain],
            dtheta: None,
        };
        let g = ModelSpec {
            name: format!("{} deformed family", self.name),
            pdf: Arc::new(g_pdf),
            support: support(),
            param_dim: 1,
            param_domain: vec![param_domain],
            dtheta: Some(Arc::new(g_dtheta)),
        };
        EscortPair::new(f, g)
    }
}

/// The joint-uniform wiring: n iid uniforms on `[0, θ]` reduced through
/// `t = max`, with `F(u) = u − 1`, `Z(u) = max(1 + u, 0)`, and canonical
/// coefficient `−(n+1)/θ^{n+1}`. Its F-escort is the uniform joint density
/// `1/θⁿ`.
pub fn uniform_joint_deformed(n: usize) -> DeformedFamily {
    let nf = n as f64;
    let mut stat = Statistic::new("max", |x: &[f64]| x[0]);
    stat.target = Some(Arc::new(move |th: &[f64]| nf * th[0] / (nf + 1.0)));
    DeformedFamily {
        name: format!("uniform-joint(n={n})"),
        f_log: Arc::new(|u| u - 1.0),
        f_log_deriv: Arc::new(|_| 1.0),
        z: Arc::new(|u| (1.0 + u).max(0.0)),
        z_kink: Some(-1.0),
        statistic: stat,
        weight: Arc::new(move |t| {
            if t > 0.0 {
                nf * t.powf(nf - 1.0)
            } else {
                0.0
            }
        }),
        support: (0.0, f64::INFINITY),
        canonical: Arc::new(move |theta| -(nf + 1.0) / theta.powf(nf + 1.0)),
    }
}
