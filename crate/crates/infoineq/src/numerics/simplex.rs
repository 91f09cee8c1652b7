//! Nelder-Mead simplex minimization, used to refine divided-difference node
//! placements after the coarse grid stage. Infeasible points may return
//! `f64::INFINITY`; the simplex steps around them.

#[derive(Clone, Copy, Debug)]
pub struct SimplexSettings {
    pub max_iter: usize,
    /// Convergence tolerance on the spread of simplex function values.
    pub tol: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-8 }
    }
}

/// Minimize `f` from `x0`, stepping `initial_step[i]` along each coordinate to
/// build the starting simplex. Returns the best point and value seen.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    initial_step: &[f64],
    s: &SimplexSettings,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    pts.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += initial_step[i];
        let v = f(&p);
        pts.push((p, v));
    }

    for _ in 0..s.max_iter {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = pts[0].1;
        let worst = pts[n].1;
        if worst.is_finite() && (worst - best).abs() <= s.tol {
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (p, _) in pts.iter().take(n) {
            for (c, &x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }

        let reflect: Vec<f64> =
            centroid.iter().zip(&pts[n].0).map(|(&c, &w)| c + alpha * (c - w)).collect();
        let fr = f(&reflect);

        if fr < pts[0].1 {
            let expand: Vec<f64> =
                centroid.iter().zip(&reflect).map(|(&c, &r)| c + gamma * (r - c)).collect();
            let fe = f(&expand);
            pts[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> =
                centroid.iter().zip(&pts[n].0).map(|(&c, &w)| c + rho * (w - c)).collect();
            let fc = f(&contract);
            if fc < pts[n].1 {
                pts[n] = (contract, fc);
            } else {
                // shrink toward the best vertex
                let best_pt = pts[0].0.clone();
                for item in pts.iter_mut().skip(1) {
                    let p: Vec<f64> = best_pt
                        .iter()
                        .zip(&item.0)
                        .map(|(&b, &x)| b + sigma * (x - b))
                        .collect();
                    let v = f(&p);
                    *item = (p, v);
                }
            }
        }
    }

    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    pts.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl() {
        let mut f = |x: &[f64]| (x[0] - 1.5).powi(2) + 2.0 * (x[1] + 0.5).powi(2);
        let (x, v) = nelder_mead(&mut f, &[0.0, 0.0], &[0.5, 0.5], &SimplexSettings::default());
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-3);
        assert_abs_diff_eq!(x[1], -0.5, epsilon = 1e-3);
        assert!(v < 1e-6);
    }

    #[test]
    fn one_dimensional_with_infeasible_region() {
        // minimum of (x-2)^2 but x < 0.5 forbidden
        let mut f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::INFINITY
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let (x, _) = nelder_mead(
            &mut f,
            &[0.6],
            &[0.2],
            &SimplexSettings { max_iter: 300, tol: 1e-12 },
        );
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-4);
    }
}
