//! Central-difference differentiation with one Richardson extrapolation level.

use crate::error::{Error, Result};

/// Derivative value together with a crude error estimate.
#[derive(Clone, Copy, Debug)]
pub struct DerivEstimate {
    pub value: f64,
    pub error: f64,
}

/// Default step `max(1e-4, 1e-4·|θ|)`; balances truncation against roundoff
/// for O(1) parameter scales.
pub fn default_step(theta: f64) -> f64 {
    1e-4_f64.max(1e-4 * theta.abs())
}

/// Step sizes for a nested mixed-partial stencil. Roundoff compounds as
/// `eps / h^|multi|`, so the step grows with the total order:
/// `h ~ eps^(1/(|multi|+2))` per coordinate, scaled by the parameter size.
pub fn mixed_default_steps(theta: &[f64], multi: &[usize]) -> Vec<f64> {
    let total: usize = multi.iter().sum();
    let base = f64::EPSILON.powf(1.0 / (total as f64 + 2.0));
    theta.iter().map(|&t| base * t.abs().max(1.0)).collect()
}

/// Widest stencil offset (in units of the step) for a given order.
pub fn stencil_halfwidth(order: usize) -> usize {
    if order <= 2 {
        1
    } else {
        2
    }
}

fn central(f: &dyn Fn(f64) -> f64, x: f64, order: usize, h: f64) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        4 => {
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / (h * h * h * h)
        }
        _ => unreachable!("order validated by caller"),
    }
}

/// `d^order/dθ^order` of a scalar function, `order` in 1..=4.
///
/// All stencils are O(h²) central differences; one Richardson level lifts the
/// estimate to O(h⁴). The error estimate is the spread between the
/// extrapolated value and the finer-step stencil.
pub fn derivative(f: &dyn Fn(f64) -> f64, theta: f64, order: usize, step: f64) -> Result<DerivEstimate> {
    if !(1..=4).contains(&order) {
        return Err(Error::Derivative(format!("order {order} outside 1..=4")));
    }
    if !(step > 0.0) || theta + step == theta {
        return Err(Error::Derivative(format!("step {step} underflows at theta = {theta}")));
    }
    let coarse = central(f, theta, order, step);
    let fine = central(f, theta, order, step * 0.5);
    if !coarse.is_finite() || !fine.is_finite() {
        return Err(Error::NanEncountered("derivative stencil".to_string()));
    }
    // both stencils are O(h^2): Richardson weights (4 fine - coarse)/3
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(DerivEstimate { value, error: (value - fine).abs() })
}

/// Mixed partial `∂^multi` of a function of a parameter vector via nested
/// central differences (no Richardson). `multi[c]` is the order in
/// coordinate `c`; each coordinate order is at most 4.
pub fn mixed_partial(
    f: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    multi: &[usize],
    steps: &[f64],
) -> Result<f64> {
    if multi.len() != theta.len() || steps.len() != theta.len() {
        return Err(Error::DimensionMismatch(
            "multi-index / step length must match the parameter dimension".to_string(),
        ));
    }
    if let Some(&bad) = multi.iter().find(|&&m| m > 4) {
        return Err(Error::Derivative(format!("per-coordinate order {bad} outside 0..=4")));
    }
    let v = mixed_rec(f, &mut theta.to_vec(), multi, steps, 0);
    if !v.is_finite() {
        return Err(Error::NanEncountered("mixed partial stencil".to_string()));
    }
    Ok(v)
}

fn mixed_rec(
    f: &dyn Fn(&[f64]) -> f64,
    theta: &mut Vec<f64>,
    multi: &[usize],
    steps: &[f64],
    coord: usize,
) -> f64 {
    if coord == multi.len() {
        return f(theta);
    }
    let order = multi[coord];
    if order == 0 {
        return mixed_rec(f, theta, multi, steps, coord + 1);
    }
    let h = steps[coord];
    let base = theta[coord];
    let mut eval = |offset: f64| {
        theta[coord] = base + offset;
        let v = mixed_rec(f, theta, multi, steps, coord + 1);
        theta[coord] = base;
        v
    };
    match order {
        1 => (eval(h) - eval(-h)) / (2.0 * h),
        2 => (eval(h) - 2.0 * eval(0.0) + eval(-h)) / (h * h),
        3 => (eval(2.0 * h) - 2.0 * eval(h) + 2.0 * eval(-h) - eval(-2.0 * h)) / (2.0 * h * h * h),
        4 => {
            (eval(2.0 * h) - 4.0 * eval(h) + 6.0 * eval(0.0) - 4.0 * eval(-h) + eval(-2.0 * h))
                / (h * h * h * h)
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn quartic_first_derivative() {
        // lambda(theta) = 2 theta^4 at theta = 1 -> 8
        let d = derivative(&|t: f64| 2.0 * t.powi(4), 1.0, 1, default_step(1.0)).unwrap();
        assert_relative_eq!(d.value, 8.0, max_relative = 1e-6);
    }

    #[test]
    fn constant_is_flat() {
        let d = derivative(&|_| 3.25, 0.7, 1, default_step(0.7)).unwrap();
        assert_abs_diff_eq!(d.value, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn quadratic_second_derivative() {
        let d = derivative(&|t: f64| t * t, 3.0, 2, default_step(3.0)).unwrap();
        assert_abs_diff_eq!(d.value, 2.0, epsilon = 1e-5);
    }

    #[test]
    fn third_and_fourth_orders_on_smooth_function() {
        let f = |t: f64| t.exp();
        let e = 1.0_f64.exp();
        let d3 = derivative(&f, 1.0, 3, 1e-2).unwrap();
        assert_relative_eq!(d3.value, e, max_relative = 1e-5);
        let d4 = derivative(&f, 1.0, 4, 3e-2).unwrap();
        assert_relative_eq!(d4.value, e, max_relative = 1e-4);
    }

    #[test]
    fn step_underflow_rejected() {
        assert!(derivative(&|t| t, 1.0, 1, 0.0).is_err());
        assert!(derivative(&|t| t, 1e308, 1, 1e280).is_err());
    }

    #[test]
    fn mixed_partial_cross_term() {
        // f = t1^2 t2: d2/dt1 dt2 = 2 t1
        let f = |t: &[f64]| t[0] * t[0] * t[1];
        let theta = [1.5, 2.0];
        let m11 = [1usize, 1];
        let v = mixed_partial(&f, &theta, &m11, &mixed_default_steps(&theta, &m11)).unwrap();
        assert_relative_eq!(v, 3.0, max_relative = 1e-6);
        let m21 = [2usize, 1];
        let v2 = mixed_partial(&f, &theta, &m21, &mixed_default_steps(&theta, &m21)).unwrap();
        assert_relative_eq!(v2, 2.0, max_relative = 1e-5);
    }
}
