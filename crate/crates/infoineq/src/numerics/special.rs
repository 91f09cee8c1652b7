//! Gamma-function helpers used by the catalog densities.

/// Lanczos coefficients (g = 7, n = 9); relative error below ~2e-13 on the
/// positive real axis.
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Gamma function for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `ln(n!)` via `ln_gamma(n + 1)`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Falling factorial `a (a−1) ⋯ (a−m+1)`; `m = 0` gives 1.
pub fn falling(a: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (a - i as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integer_values() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(2.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(3.0), 2.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-12);
    }

    #[test]
    fn half_integer() {
        assert_relative_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            gamma(1.5),
            0.5 * std::f64::consts::PI.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn ln_factorial_matches_direct_product() {
        let mut acc = 0.0;
        for n in 1..=40u64 {
            acc += (n as f64).ln();
            assert_relative_eq!(ln_factorial(n), acc, max_relative = 1e-12);
        }
    }

    #[test]
    fn falling_factorial_cases() {
        assert_eq!(falling(5.0, 0), 1.0);
        assert_eq!(falling(5.0, 2), 20.0);
        assert_relative_eq!(falling(-1.0, 2), 2.0, max_relative = 1e-15);
    }
}
