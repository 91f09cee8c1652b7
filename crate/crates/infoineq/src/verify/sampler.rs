//! Per-entry samplers for the Monte Carlo cross-checks.
//!
//! Continuous catalog entries sample by closed-form inverse CDF where one
//! exists and by numeric CDF inversion (bisection) otherwise; Poisson counts
//! use sequential search spreading out from the mode. The generator is
//! ChaCha8 with explicit seeds, so every stream is reproducible.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::CatalogEntry;
use crate::numerics::special::ln_gamma;

/// Generator identity recorded in every MC report.
pub const RNG_NAME: &str = "chacha8";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMethod {
    InverseCdf,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhichDensity {
    Model,
    Escort,
}

/// A wired sampler: draws one observation at θ.
#[derive(Clone)]
pub struct Sampler {
    pub method: SamplerMethod,
    pub label: String,
    draw: Arc<dyn Fn(&mut ChaCha8Rng, &[f64]) -> f64 + Send + Sync>,
}

impl Sampler {
    pub fn draw(&self, rng: &mut ChaCha8Rng, theta: &[f64]) -> f64 {
        (self.draw)(rng, theta)
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on (0, 1].
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1 = unit(rng);
    let u2 = unit(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Invert a monotone CDF on [0, 1] by bisection.
fn invert_cdf(cdf: impl Fn(f64) -> f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Poisson draw by two-pointer sequential search spreading from the mode.
fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let pmf = |k: f64| (k * mean.ln() - mean - ln_gamma(k + 1.0)).exp();
    let u = rng.gen::<f64>();
    let mode = mean.floor();
    let mut acc = pmf(mode);
    if u <= acc {
        return mode;
    }
    let (mut lo, mut hi) = (mode, mode);
    loop {
        // extend toward the heavier side
        let next_lo = if lo > 0.0 { pmf(lo - 1.0) } else { 0.0 };
        let next_hi = pmf(hi + 1.0);
        if next_lo >= next_hi && lo > 0.0 {
            lo -= 1.0;
            acc += next_lo;
            if u <= acc {
                return lo;
            }
        } else {
            hi += 1.0;
            acc += next_hi;
            if u <= acc {
                return hi;
            }
        }
        if hi - lo > 10_000.0 {
            // numerically exhausted tail; the distribution mass is inside
            return hi;
        }
    }
}

/// Build the sampler for one side of a catalog entry. Errors when nothing is
/// wired for that entry (for example gamma shapes that are not integers).
pub fn sampler_for_entry(entry: &CatalogEntry, which: WhichDensity) -> Result<Sampler> {
    let n = entry.hyper.get("n").copied().unwrap_or(1.0);
    let name = entry.name.as_str();
    let label = format!(
        "{name}/{}",
        match which {
            WhichDensity::Model => "f",
            WhichDensity::Escort => "g",
        }
    );
    let not_wired = || Error::NoSamplerWired(label.clone());

    let (method, draw): (SamplerMethod, Arc<dyn Fn(&mut ChaCha8Rng, &[f64]) -> f64 + Send + Sync>) =
        match (name, which) {
            ("uniform-max" | "uniform-joint-max", WhichDensity::Model) => (
                SamplerMethod::InverseCdf,
                Arc::new(move |rng, th| th[0] * unit(rng).powf(1.0 / n)),
            ),
            ("uniform-max" | "uniform-joint-max", WhichDensity::Escort) => (
                SamplerMethod::InverseCdf,
                Arc::new(move |rng, th| {
                    // G(z) = (n+1) z^n - n z^{n+1} on [0,1]
                    let u = rng.gen::<f64>();
                    let z = invert_cdf(|z| (n + 1.0) * z.powf(n) - n * z.powf(n + 1.0), u);
                    th[0] * z
                }),
            ),
            ("uniform-max-power", WhichDensity::Model) => (
                SamplerMethod::InverseCdf,
                Arc::new(move |rng, th| th[0] * unit(rng).powf(1.0 / n)),
            ),
            ("uniform-max-power", WhichDensity::Escort) => {
                let k = entry.hyper["k"];
                (
                    SamplerMethod::InverseCdf,
                    Arc::new(move |rng, th| {
                        // G(z) = ((n+k) z^n - n z^{n+k})/k on [0,1]
                        let u = rng.gen::<f64>();
                        let z = invert_cdf(
                            |z| ((n + k) * z.powf(n) - n * z.powf(n + k)) / k,
                            u,
                        );
                        th[0] * z
                    }),
                )
            }
            ("expmin", WhichDensity::Model) => (
                SamplerMethod::InverseCdf,
                Arc::new(move |rng, th| th[0] - unit(rng).ln() / n),
            ),
            ("expmin", WhichDensity::Escort) => (
                SamplerMethod::Direct,
                Arc::new(move |rng, th| th[0] - (unit(rng) * unit(rng)).ln() / n),
            ),
            ("normal-x4", WhichDensity::Model) => (
                SamplerMethod::Direct,
                Arc::new(move |rng, th| th[0] * standard_normal(rng)),
            ),
            ("normal-x4", WhichDensity::Escort) => (
                SamplerMethod::Direct,
                Arc::new(move |rng, th| {
                    // 3/4 N(0, th^2) + 1/4 (x^2/th^2)-weighted normal; the
                    // second component is ±th sqrt(chi^2_3)
                    if rng.gen::<f64>() < 0.75 {
                        th[0] * standard_normal(rng)
                    } else {
                        let z = standard_normal(rng);
                        let e = -unit(rng).ln();
                        let mag = th[0] * (z * z + 2.0 * e).sqrt();
                        if rng.gen::<bool>() {
                            mag
                        } else {
                            -mag
                        }
                    }
                }),
            ),
            ("poisson-pair", WhichDensity::Model) => (
                SamplerMethod::Direct,
                Arc::new(move |rng, th| poisson(rng, n * th[0])),
            ),
            ("poisson-pair", WhichDensity::Escort) => (
                SamplerMethod::Direct,
                Arc::new(move |rng, th| {
                    let shift = if rng.gen::<f64>() < 0.5 { 0.0 } else { 1.0 };
                    poisson(rng, n * th[0]) + shift
                }),
            ),
            ("gamma-scale", _) => {
                let alpha = entry.hyper["alpha"];
                let k = entry.hyper["k"] as i64;
                let shape = match which {
                    WhichDensity::Model => alpha,
                    // single-component escort only (k = -1): Gamma(alpha-1)
                    WhichDensity::Escort if k == -1 => alpha - 1.0,
                    WhichDensity::Escort => return Err(not_wired()),
                };
                if shape.fract() != 0.0 || shape < 1.0 {
                    return Err(not_wired());
                }
                let m = shape as usize;
                (
                    SamplerMethod::Direct,
                    Arc::new(move |rng, th| {
                        let mut acc = 0.0;
                        for _ in 0..m {
                            acc -= unit(rng).ln();
                        }
                        th[0] * acc
                    }),
                )
            }
            _ => return Err(not_wired()),
        };
    Ok(Sampler { method, label, draw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::catalog_lookup;
    use std::collections::BTreeMap;

    fn hyper(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn poisson_sample_mean_close() {
        let mut rng = rng_for(7);
        let mut acc = 0.0;
        let n = 200_000;
        for _ in 0..n {
            acc += poisson(&mut rng, 2.0);
        }
        let mean = acc / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn unwired_sampler_is_reported() {
        let e = catalog_lookup("gamma-scale", &hyper(&[("alpha", 2.5), ("k", 1.0)])).unwrap();
        assert!(matches!(
            sampler_for_entry(&e, WhichDensity::Model),
            Err(Error::NoSamplerWired(_))
        ));
    }

    #[test]
    fn deterministic_streams() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let s = sampler_for_entry(&e, WhichDensity::Model).unwrap();
        let mut a = rng_for(123);
        let mut b = rng_for(123);
        for _ in 0..100 {
            assert_eq!(s.draw(&mut a, &[2.0]).to_bits(), s.draw(&mut b, &[2.0]).to_bits());
        }
    }
}
