//! Cubic Hermite interpolation of a tabulated kernel with exact slopes.
//!
//! The synthesis integrals supply both the kernel values (cumulative
//! integrals) and their exact derivatives (the integrand), so plain Hermite
//! segments reach O(h⁴) accuracy without slope estimation.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct HermiteTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != slopes.len() {
            return Err(Error::DimensionMismatch(
                "Hermite table needs matching xs/ys/slopes with at least two knots".to_string(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("Hermite table knots must increase".to_string()));
        }
        Ok(Self { xs, ys, slopes })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(self.xs[0], *self.xs.last().expect("nonempty"));
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let x = x.clamp(self.xs[0], *self.xs.last().expect("nonempty"));
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[i] + d10 * self.slopes[i] + d01 * self.ys[i + 1]
            + d11 * self.slopes[i + 1]
    }

    /// Exact integral of the piecewise-cubic interpolant over its span.
    pub fn integral(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.xs.len() - 1 {
            let h = self.xs[i + 1] - self.xs[i];
            total += h * (self.ys[i] + self.ys[i + 1]) / 2.0
                + h * h * (self.slopes[i] - self.slopes[i + 1]) / 12.0;
        }
        total
    }

    pub fn span(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("nonempty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_cubic_exactly() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let ms: Vec<f64> = xs.iter().map(|&x| df(x)).collect();
        let t = HermiteTable::new(xs, ys, ms).unwrap();
        for x in [0.05, 0.77, 1.5, 2.9] {
            assert_relative_eq!(t.eval(x), f(x), max_relative = 1e-12);
            assert_relative_eq!(t.deriv(x), df(x), max_relative = 1e-10);
        }
        // integral of cubic over [0,3]
        let exact = 3.0_f64.powi(4) / 4.0 - 3.0 * 3.0 + 3.0;
        assert_relative_eq!(t.integral(), exact, max_relative = 1e-12);
    }

    #[test]
    fn fourth_order_convergence_on_smooth_function() {
        let f = |x: f64| (-x).exp() * x;
        let df = |x: f64| (-x).exp() * (1.0 - x);
        let build = |n: usize| {
            let xs: Vec<f64> = (0..=n).map(|i| 5.0 * i as f64 / n as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
            let ms: Vec<f64> = xs.iter().map(|&x| df(x)).collect();
            HermiteTable::new(xs, ys, ms).unwrap()
        };
        let err = |t: &HermiteTable| {
            let mut worst = 0.0_f64;
            for i in 0..=1000 {
                let x = 5.0 * i as f64 / 1000.0;
                worst = worst.max((t.eval(x) - f(x)).abs());
            }
            worst
        };
        let e64 = err(&build(64));
        let e128 = err(&build(128));
        assert!(e128 < e64 / 12.0, "expected ~16x reduction, got {e64:e} -> {e128:e}");
    }
}
