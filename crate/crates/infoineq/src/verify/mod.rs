//! Verification: Monte Carlo cross-checks of quadrature expectations, the
//! attainment suite asserting the known attainment pattern of every catalog
//! entry, and the reduction battery tying the engines together.

pub mod sampler;

use crate::bounds::{
    bhattacharyya_dd, bhattacharyya_dd_sup, bhattacharyya_regular, naudts_bound, BoundReport,
    EngineCtx, SearchSettings,
};
use crate::error::{Error, Result};
use crate::model::catalog::catalog_lookup;
use crate::model::{CatalogEntry, ClaimMethod, EscortPair, Statistic};
use crate::numerics::divided::NodeSet;

pub use sampler::{rng_for, sampler_for_entry, Sampler, SamplerMethod, WhichDensity, RNG_NAME};

/// Monte Carlo settings; the seed is recorded in every report.
#[derive(Clone, Copy, Debug)]
pub struct McSettings {
    pub sample_count: usize,
    pub seed: u64,
    /// Preferred sampling method; entries wired only one way keep their own.
    pub method: SamplerMethod,
}

impl McSettings {
    pub fn new(sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count < 1000 {
            return Err(Error::Config(format!(
                "sample_count must be at least 1000, got {sample_count}"
            )));
        }
        Ok(Self { sample_count, seed, method: SamplerMethod::InverseCdf })
    }
}

/// One MC estimate: mean, standard error, and the provenance needed to
/// reproduce it bit for bit.
#[derive(Clone, Debug)]
pub struct McReport {
    pub mean: f64,
    pub stderr: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub rng: &'static str,
    pub method: SamplerMethod,
    pub label: String,
}

/// Monte Carlo expectation of `h(x)` under the sampled density.
pub fn mc_expectation(
    s: &Sampler,
    h: &dyn Fn(f64) -> f64,
    theta: &[f64],
    settings: &McSettings,
) -> McReport {
    let mut rng = rng_for(settings.seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..settings.sample_count {
        let v = h(s.draw(&mut rng, theta));
        sum += v;
        sum_sq += v * v;
    }
    let n = settings.sample_count as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    McReport {
        mean,
        stderr: (var / n).sqrt(),
        sample_count: settings.sample_count,
        seed: settings.seed,
        rng: RNG_NAME,
        method: s.method,
        label: s.label.clone(),
    }
}

/// One MC-vs-quadrature comparison; passes within four standard errors.
#[derive(Clone, Debug)]
pub struct McCheck {
    pub label: String,
    pub mc: McReport,
    pub quadrature: f64,
    pub pass: bool,
}

/// Cross-check every expectation a bound consumes for this entry:
/// `E_f[T]`, `E_f[T²]`, and `E_g[T]`.
pub fn mc_crosscheck_entry(
    entry: &CatalogEntry,
    theta: &[f64],
    settings: &McSettings,
    ctx: &EngineCtx,
) -> Result<Vec<McCheck>> {
    let t = entry.statistic.eval.clone();
    let mut out = Vec::new();
    let mut sub_seed = settings.seed;

    let f_sampler = sampler_for_entry(entry, WhichDensity::Model)?;
    let g_sampler = sampler_for_entry(entry, WhichDensity::Escort)?;

    let quad_mean = crate::bounds::expectation(&entry.pair.f, &|x| t(x), theta, ctx)?;
    let quad_second = crate::bounds::expectation(&entry.pair.f, &|x| t(x) * t(x), theta, ctx)?;
    let quad_lambda = crate::bounds::expectation(&entry.pair.g, &|x| t(x), theta, ctx)?;

    let te = entry.statistic.eval.clone();
    let cases: Vec<(&str, &Sampler, Box<dyn Fn(f64) -> f64>, f64)> = vec![
        ("E_f[T]", &f_sampler, Box::new({ let te = te.clone(); move |x| te(&[x]) }), quad_mean),
        (
            "E_f[T^2]",
            &f_sampler,
            Box::new({
                let te = te.clone();
                move |x| {
                    let v = te(&[x]);
                    v * v
                }
            }),
            quad_second,
        ),
        ("E_g[T]", &g_sampler, Box::new(move |x| te(&[x])), quad_lambda),
    ];

    for (label, smp, h, quad) in cases {
        // disjoint sub-seeds partition the streams
        let sub = McSettings { seed: sub_seed, ..*settings };
        sub_seed = sub_seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mc = mc_expectation(smp, h.as_ref(), theta, &sub);
        let pass = (mc.mean - quad).abs() <= 4.0 * mc.stderr;
        out.push(McCheck { label: format!("{}:{label}", entry.name), mc, quadrature: quad, pass });
    }
    Ok(out)
}

/// The classical (g = f) view of an entry: the pair collapses to the model
/// and λ collapses to the target functional.
pub fn classical_view(entry: &CatalogEntry) -> (EscortPair, Statistic) {
    let pair = EscortPair::self_escort(entry.pair.f.clone());
    let mut stat = entry.statistic.clone();
    stat.lambda_under_g = stat.target.clone();
    stat.lambda_deriv = stat.target_deriv.clone();
    (pair, stat)
}

/// Result of checking one attainment claim at one parameter point.
#[derive(Clone, Debug)]
pub struct AttainmentCheck {
    pub entry: String,
    pub method: ClaimMethod,
    pub theta: f64,
    pub expected_attained: bool,
    pub report: BoundReport,
    pub pass: bool,
}

/// Run every recorded attainment claim of an entry across a θ grid; the suite
/// passes when each report's attained flag matches the recorded claim.
pub fn attainment_suite(
    entry: &CatalogEntry,
    theta_grid: &[f64],
    ctx: &EngineCtx,
) -> Result<Vec<AttainmentCheck>> {
    let mut out = Vec::new();
    for claim in &entry.claims {
        for &theta in theta_grid {
            let report = match &claim.method {
                ClaimMethod::Naudts => {
                    naudts_bound(&entry.pair, &entry.statistic, &[theta], ctx)?
                }
                ClaimMethod::BhattacharyyaClassical { order } => {
                    let (pair, stat) = classical_view(entry);
                    bhattacharyya_regular(&pair, &stat, theta, *order, ctx)?
                }
                ClaimMethod::HcrSup => {
                    let (pair, stat) = classical_view(entry);
                    bhattacharyya_dd_sup(&pair, &stat, theta, 1, &SearchSettings::default(), ctx)?
                }
            };
            let attained = report.attained.unwrap_or(false);
            out.push(AttainmentCheck {
                entry: entry.name.clone(),
                method: claim.method.clone(),
                theta,
                expected_attained: claim.attained,
                pass: attained == claim.attained,
                report,
            });
        }
    }
    Ok(out)
}

/// One reduction-chain or limit check with the tolerance it achieved.
#[derive(Clone, Debug)]
pub struct ReductionCheck {
    pub name: String,
    pub achieved: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &str, achieved: f64, tolerance: f64) -> ReductionCheck {
    ReductionCheck {
        name: name.to_string(),
        achieved,
        tolerance,
        pass: achieved <= tolerance,
    }
}

/// The reduction battery: classical limits and coincidences between engines.
/// Failures are results, not errors.
pub fn reduction_suite(ctx: &EngineCtx) -> Result<Vec<ReductionCheck>> {
    let mut out = Vec::new();
    let hyper = |pairs: &[(&str, f64)]| -> std::collections::BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    };

    // g = f on the Poisson count: the generalized bound must equal the
    // classical Cramér-Rao bound from the analytic Fisher information
    {
        let e = catalog_lookup("poisson-pair", &hyper(&[("n", 2.0)]))?;
        let (pair, stat) = classical_view(&e);
        let theta = 1.0;
        let r = naudts_bound(&pair, &stat, &[theta], ctx)?;
        let cr = (2.0 * theta) * (2.0 * theta) * theta / 2.0; // (phi')^2 / (n/theta)
        out.push(check(
            "poisson self-escort equals classical Cramer-Rao",
            (r.bound - cr).abs(),
            1e-10,
        ));
    }

    // order-1 derivative bound equals the generalized Cramér-Rao bound
    {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)]))?;
        let reg = bhattacharyya_regular(&e.pair, &e.statistic, 2.0, 1, ctx)?;
        let nau = naudts_bound(&e.pair, &e.statistic, &[2.0], ctx)?;
        out.push(check(
            "order-1 derivative bound equals generalized Cramer-Rao",
            (reg.bound - nau.bound).abs() / nau.bound.abs().max(1e-300),
            1e-12,
        ));
    }

    // one node pair with g = f reproduces the Hammersley-Chapman-Robbins
    // quotient, known in closed form for the uniform model
    {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 1.0)]))?;
        let (pair, stat) = classical_view(&e);
        let nodes = NodeSet::new(vec![1.0, 0.6])?;
        let r = bhattacharyya_dd(&pair, &stat, &nodes, ctx)?;
        let hand = (1.0 - 0.6) * 0.6; // (theta - theta') theta' at theta = 1
        out.push(check(
            "single-pair difference bound equals HCR quotient",
            (r.bound - hand).abs(),
            1e-10,
        ));
    }

    // clustered nodes approach the derivative bound of the same order
    {
        let e = catalog_lookup("normal-x4", &std::collections::BTreeMap::new())?;
        let h = 1e-2;
        let nodes = NodeSet::new(vec![1.0, 1.0 + h, 1.0 + 2.0 * h])?;
        let dd = bhattacharyya_dd(&e.pair, &e.statistic, &nodes, ctx)?;
        let reg = bhattacharyya_regular(&e.pair, &e.statistic, 1.0, 2, ctx)?;
        out.push(check(
            "clustered nodes match the order-2 derivative bound",
            (dd.bound - reg.bound).abs() / reg.bound,
            1e-3,
        ));
    }

    // gradient-only multiparameter reduction at p = 1
    {
        let e = catalog_lookup("normal-x4", &std::collections::BTreeMap::new())?;
        let multi = crate::bounds::multiparam_bound(&e.pair, &e.statistic, &[1.0], 1, ctx)?;
        let nau = naudts_bound(&e.pair, &e.statistic, &[1.0], ctx)?;
        out.push(check(
            "order-1 multiparameter bound equals generalized Cramer-Rao",
            (multi.bound - nau.bound).abs() / nau.bound,
            1e-10,
        ));
    }

    // nesting monotonicity of derivative bounds, orders 1..4
    {
        let e = catalog_lookup("gamma-scale", &hyper(&[("alpha", 3.0), ("k", -1.0)]))?;
        let (pair, stat) = classical_view(&e);
        let mut worst: f64 = 0.0;
        let mut last = 0.0;
        for order in 1..=4 {
            let r = bhattacharyya_regular(&pair, &stat, 1.0, order, ctx)?;
            worst = worst.max(last - r.bound);
            last = r.bound;
        }
        out.push(check("derivative bounds nest monotonically (orders 1-4)", worst, 1e-10));
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn hyper(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn mc_settings_floor() {
        assert!(McSettings::new(999, 1).is_err());
        assert!(McSettings::new(1000, 1).is_ok());
    }

    #[test]
    fn mc_reports_are_bit_identical_across_reruns() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let s = sampler_for_entry(&e, WhichDensity::Model).unwrap();
        let settings = McSettings::new(10_000, 42).unwrap();
        let t = e.statistic.eval.clone();
        let a = mc_expectation(&s, &|x| t(&[x]), &[2.0], &settings);
        let b = mc_expectation(&s, &|x| t(&[x]), &[2.0], &settings);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn mc_crosscheck_uniform_max() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let ctx = EngineCtx::default();
        let settings = McSettings::new(100_000, 7).unwrap();
        let checks = mc_crosscheck_entry(&e, &[2.0], &settings, &ctx).unwrap();
        assert_eq!(checks.len(), 3);
        for c in &checks {
            assert!(c.pass, "{}: mc {} vs quad {}", c.label, c.mc.mean, c.quadrature);
        }
    }

    #[test]
    fn reduction_suite_all_pass() {
        let ctx = EngineCtx::default();
        let checks = reduction_suite(&ctx).unwrap();
        for c in &checks {
            assert!(c.pass, "{}: achieved {:e} > {:e}", c.name, c.achieved, c.tolerance);
        }
    }

    #[test]
    fn attainment_suite_whole_catalog() {
        let ctx = EngineCtx::default();
        let entries: Vec<(&str, BTreeMap<String, f64>)> = vec![
            ("uniform-max", hyper(&[("n", 5.0)])),
            ("expmin", hyper(&[("n", 3.0)])),
            ("uniform-max-power", hyper(&[("n", 3.0), ("k", 2.0)])),
            ("gamma-scale", hyper(&[("alpha", 3.0), ("k", -1.0)])),
            ("normal-x4", BTreeMap::new()),
            ("poisson-pair", hyper(&[("n", 2.0)])),
            ("uniform-joint-max", hyper(&[("n", 4.0)])),
        ];
        for (name, h) in entries {
            let e = catalog_lookup(name, &h).unwrap();
            let checks = attainment_suite(&e, &[0.5, 1.0, 2.0], &ctx).unwrap();
            for c in &checks {
                assert!(
                    c.pass,
                    "{name} {:?} at theta {}: expected attained={}, report {:?}",
                    c.method, c.theta, c.expected_attained, c.report.attained
                );
            }
        }
    }

    #[test]
    fn attainment_suite_uniform_max() {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let ctx = EngineCtx::default();
        let checks = attainment_suite(&e, &[0.5, 1.0, 2.0], &ctx).unwrap();
        for c in &checks {
            assert!(c.pass, "{:?} at theta {}", c.method, c.theta);
        }
    }
}
