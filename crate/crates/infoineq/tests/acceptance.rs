//! Acceptance gate: one PASS/FAIL line per criterion, every tolerance pinned
//! in code. The test fails at the end if any criterion failed, so all lines
//! always print (run with `--nocapture` to see them).

// negated comparisons are NaN-robust; indexed loops mirror matrix subscripts
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use infoineq::bounds::{
    bhattacharyya_dd, bhattacharyya_dd_sup, bhattacharyya_regular, escort_score_set,
    generalized_fisher, naudts_bound, variance_of, vector_schur_bound, EngineCtx, SearchSettings,
};
use infoineq::escort::deformed::{f_escort, uniform_joint_deformed};
use infoineq::escort::{synth_location, synth_scale, SynthGrid};
use infoineq::linalg::{cholesky, schur_complement, RectMatrix, SymMatrix};
use infoineq::model::catalog::{
    catalog_lookup, gaussian_sufficient_model, gaussian_sufficient_statistics,
};
use infoineq::model::{CatalogEntry, EscortPair, Statistic};
use infoineq::numerics::divided::NodeSet;
use infoineq::numerics::quadrature::QuadratureSettings;
use infoineq::verify::{classical_view, mc_crosscheck_entry, McSettings, WhichDensity};

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn check(&mut self, id: &str, description: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict}: criterion {id} — {description} [{detail}]");
        if !pass {
            self.failures.push(format!("criterion {id}: {detail}"));
        }
    }
}

fn hyper(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn classical(entry: &CatalogEntry) -> (EscortPair, Statistic) {
    classical_view(entry)
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    let ctx = EngineCtx::default();

    // ------------------------------------------------------------------ 1
    {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let r = naudts_bound(&e.pair, &e.statistic, &[2.0], &ctx).unwrap();
        let var = r.variance.unwrap();
        let mut pass = rel(r.bound, 4.0 / 35.0) <= 1e-6
            && rel(var, 4.0 / 35.0) <= 1e-6
            && r.gap.unwrap() / var <= 1e-6;
        let mut detail = format!("theta=2: bound {:.9e}, var {:.9e}", r.bound, var);
        for theta in [0.5, 1.0, 5.0] {
            let r = naudts_bound(&e.pair, &e.statistic, &[theta], &ctx).unwrap();
            let want = theta * theta / 35.0;
            if rel(r.bound, want) > 1e-6 || !(r.gap.unwrap() / r.variance.unwrap() <= 1e-6) {
                pass = false;
                detail = format!("theta={theta}: bound {:.9e} vs {want:.9e}", r.bound);
            }
        }
        gate.check("1", "max-of-uniforms bound attains theta^2/(n(n+2))", pass, detail);
    }

    // ------------------------------------------------------------------ 2
    {
        let mut pass = true;
        let mut detail = String::new();
        for n in [1.0, 3.0] {
            let e = catalog_lookup("expmin", &hyper(&[("n", n)])).unwrap();
            for theta in [0.5, 1.0] {
                let r = naudts_bound(&e.pair, &e.statistic, &[theta], &ctx).unwrap();
                let want = 1.0 / (n * n);
                let ok = rel(r.bound, want) <= 1e-6
                    && rel(r.variance.unwrap(), want) <= 1e-6
                    && r.gap.unwrap() / r.variance.unwrap() <= 1e-6;
                if !ok {
                    pass = false;
                }
                detail = format!(
                    "n={n}, theta={theta}: bound {:.9e}, var {:.9e}",
                    r.bound,
                    r.variance.unwrap()
                );
            }
        }
        gate.check("2", "shifted-exponential min bound attains 1/n^2", pass, detail);
    }

    // ------------------------------------------------------------------ 3
    {
        let e = catalog_lookup("normal-x4", &BTreeMap::new()).unwrap();
        let mut pass = true;
        for theta in [1.0, 2.0] {
            let n = generalized_fisher(&e.pair, &[theta], &ctx).unwrap();
            if rel(n.get(0, 0), 6.0 / (theta * theta)) > 1e-6 {
                pass = false;
            }
        }
        let nau = naudts_bound(&e.pair, &e.statistic, &[1.0], &ctx).unwrap();
        pass &= rel(nau.bound, 32.0 / 3.0) <= 1e-6 && nau.attained.unwrap();
        let (pair, stat) = classical(&e);
        let b2 = bhattacharyya_regular(&pair, &stat, 1.0, 2, &ctx).unwrap();
        pass &= rel(b2.bound, nau.bound) <= 1e-6;
        let b1 = bhattacharyya_regular(&pair, &stat, 1.0, 1, &ctx).unwrap();
        let shortfall = (b2.bound - b1.bound) / b2.bound;
        pass &= shortfall >= 0.10;
        gate.check(
            "3",
            "fourth-moment normal: fisher 6/theta^2, escort order 1 = classical order 2, CR short by >= 10%",
            pass,
            format!(
                "naudts {:.9e}, classical order2 {:.9e}, order1 {:.9e} ({:.1}% short)",
                nau.bound,
                b2.bound,
                b1.bound,
                shortfall * 100.0
            ),
        );
    }

    // ------------------------------------------------------------------ 4
    {
        let e = catalog_lookup("gamma-scale", &hyper(&[("alpha", 3.0), ("k", -1.0)])).unwrap();
        // all-numeric path: strip every closed form and analytic derivative
        let stripped = e.without_closed_forms();
        let nau = naudts_bound(&stripped.pair, &stripped.statistic, &[1.0], &ctx).unwrap();
        let mut pass = nau.gap.unwrap() / nau.variance.unwrap() <= 1e-4 && nau.attained.unwrap();
        // classical orders 1..3 leave the oracle-frozen relative gaps
        // 2/3, 1/2, 2/5 (orthogonal-polynomial moments of the gamma family)
        let golden = [2.0 / 3.0, 0.5, 0.4];
        let (pair, stat) = classical(&e);
        let mut gaps = Vec::new();
        for (order, &want) in (1..=3).zip(&golden) {
            let r = bhattacharyya_regular(&pair, &stat, 1.0, order, &ctx).unwrap();
            let rel_gap = r.gap.unwrap() / r.variance.unwrap();
            gaps.push(rel_gap);
            pass &= (rel_gap - want).abs() <= 1e-6 && rel_gap >= 1e-3 && !r.attained.unwrap();
        }
        gate.check(
            "4",
            "inverse-gamma statistic: escort bound attains, derivative bounds leave frozen gaps",
            pass,
            format!("numeric-path gap {:.3e}; classical rel gaps {gaps:?}", nau.gap.unwrap()),
        );
    }

    // ------------------------------------------------------------------ 5
    {
        let e = catalog_lookup("poisson-pair", &hyper(&[("n", 2.0)])).unwrap();
        // independent exact-summation oracle at truncation 60
        let (n, theta): (f64, f64) = (2.0, 1.0);
        let mu: f64 = n * theta;
        let mut p = (-mu).exp();
        let (mut m1, mut m2) = (0.0, 0.0);
        let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
        let (mut tm, mut ts1, mut ts2) = (0.0, 0.0, 0.0);
        for s in 0..=60u64 {
            let sf = s as f64;
            if s > 0 {
                p *= mu / sf;
            }
            let t = sf * (sf - 1.0) / (n * n);
            let a1 = sf / theta - n;
            let a2 = sf * (sf - 1.0) / (theta * theta) - 2.0 * n * sf / theta + n * n;
            m1 += t * p;
            m2 += t * t * p;
            s11 += a1 * a1 * p;
            s12 += a1 * a2 * p;
            s22 += a2 * a2 * p;
            tm += t * p;
            ts1 += t * a1 * p;
            ts2 += t * a2 * p;
        }
        let _ = tm;
        let var_oracle = m2 - m1 * m1;
        let det = s11 * s22 - s12 * s12;
        let bound_oracle =
            (ts1 * (s22 * ts1 - s12 * ts2) + ts2 * (-s12 * ts1 + s11 * ts2)) / det;
        let (pair, stat) = classical(&e);
        let b2 = bhattacharyya_regular(&pair, &stat, theta, 2, &ctx).unwrap();
        let mut pass = rel(b2.bound, var_oracle) <= 1e-8
            && rel(bound_oracle, var_oracle) <= 1e-12
            && b2.attained.unwrap();
        let nau = naudts_bound(&e.pair, &e.statistic, &[theta], &ctx).unwrap();
        pass &= nau.gap.unwrap() / nau.variance.unwrap() <= 1e-6 && nau.attained.unwrap();
        gate.check(
            "5",
            "Poisson pair: order-2 derivative bound and mixture-escort bound both attain",
            pass,
            format!(
                "oracle var {var_oracle:.12}, order2 {:.12}, mixture bound {:.12}",
                b2.bound, nau.bound
            ),
        );
    }

    // ------------------------------------------------------------------ 6
    {
        let e = catalog_lookup("uniform-joint-max", &hyper(&[("n", 4.0)])).unwrap();
        let var = variance_of(&e.statistic, &e.pair.f, &[1.0], &ctx).unwrap();
        // order-statistic moment oracle: E T = n/(n+1), E T^2 = n/(n+2)
        let (nf, theta): (f64, f64) = (4.0, 1.0);
        let oracle = nf * theta * theta / (nf + 2.0)
            - (nf * theta / (nf + 1.0)) * (nf * theta / (nf + 1.0));
        let mut pass = rel(var.value, 2.0 / 75.0) <= 1e-8 && rel(oracle, 2.0 / 75.0) <= 1e-12;
        let nau = naudts_bound(&e.pair, &e.statistic, &[1.0], &ctx).unwrap();
        pass &= nau.gap.unwrap() / nau.variance.unwrap() <= 1e-6 && nau.attained.unwrap();
        // F-escort reconstruction of the flat joint density on the reduction
        let fam = uniform_joint_deformed(4);
        let esc = f_escort(&fam, 1.0, &QuadratureSettings::default()).unwrap();
        let mut sup = 0.0_f64;
        for i in 1..400 {
            let t = i as f64 / 400.0;
            sup = sup.max((esc.joint_density(t) - 1.0).abs());
        }
        pass &= sup <= 1e-6;
        gate.check(
            "6",
            "joint uniform: variance 2/75, escort attains, F-escort rebuilds the flat density",
            pass,
            format!("var {:.10}, bound {:.10}, sup-norm {sup:.3e}", var.value, nau.bound),
        );
    }

    // ------------------------------------------------------------------ 7
    {
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 1.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let r = bhattacharyya_dd_sup(&pair, &stat, 1.0, 1, &SearchSettings::default(), &ctx)
            .unwrap();
        let var = r.variance.unwrap();
        // grid-oracle frozen values: sup over theta' of (1-theta')theta' is
        // 1/4 at theta' = 1/2, leaving margin 1/3 - 1/4 = 1/12
        let margin = var - r.bound;
        let pass = r.bound < 1.0 / 3.0
            && margin >= 1.0 / 12.0 - 1e-6
            && rel(r.bound, 0.25) <= 1e-4
            && !r.attained.unwrap();
        gate.check(
            "7",
            "HCR non-attainment on the single uniform observation",
            pass,
            format!("bound {:.9}, var {:.9}, margin {margin:.9}", r.bound, var),
        );
    }

    // ------------------------------------------------------------------ 8
    {
        // g = f makes the generalized bound classical (Poisson vs the exact
        // Fisher information n/theta)
        let e = catalog_lookup("poisson-pair", &hyper(&[("n", 2.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let r = naudts_bound(&pair, &stat, &[1.0], &ctx).unwrap();
        let cr = 4.0 / 2.0; // (2 theta)^2 / (n/theta) at theta = 1, n = 2
        let mut pass = (r.bound - cr).abs() <= 1e-10;
        let mut detail = format!("poisson diff {:.3e}", (r.bound - cr).abs());
        // k = 1 derivative bound equals the generalized bound
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let reg = bhattacharyya_regular(&e.pair, &e.statistic, 2.0, 1, &ctx).unwrap();
        let nau = naudts_bound(&e.pair, &e.statistic, &[2.0], &ctx).unwrap();
        let d = (reg.bound - nau.bound).abs() / nau.bound;
        pass &= d <= 1e-12;
        detail.push_str(&format!(", k=1 rel diff {d:.3e}"));
        // clustered nodes vs the order-2 derivative bound
        let e = catalog_lookup("normal-x4", &BTreeMap::new()).unwrap();
        let h = 1e-2;
        let nodes = NodeSet::new(vec![1.0, 1.0 + h, 1.0 + 2.0 * h]).unwrap();
        let dd = bhattacharyya_dd(&e.pair, &e.statistic, &nodes, &ctx).unwrap();
        let reg2 = bhattacharyya_regular(&e.pair, &e.statistic, 1.0, 2, &ctx).unwrap();
        let d2 = (dd.bound - reg2.bound).abs() / reg2.bound;
        pass &= d2 <= 1e-3;
        detail.push_str(&format!(", clustered rel diff {d2:.3e}"));
        gate.check("8", "reduction chain: classical CR, k=1 coincidence, clustered-node limit", pass, detail);
    }

    // ------------------------------------------------------------------ 9
    {
        let e = catalog_lookup("gamma-scale", &hyper(&[("alpha", 3.0), ("k", -1.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let mut bounds = Vec::new();
        let mut worst: f64 = 0.0;
        let mut last = 0.0;
        for order in 1..=4 {
            let r = bhattacharyya_regular(&pair, &stat, 1.0, order, &ctx).unwrap();
            worst = worst.max(last - r.bound);
            last = r.bound;
            bounds.push(r.bound);
        }
        gate.check(
            "9",
            "derivative bounds nest monotonically, orders 1..4",
            worst <= 1e-10,
            format!("bounds {bounds:?}, worst violation {worst:.3e}"),
        );
    }

    // ------------------------------------------------------------------ 10
    {
        let mut pass = true;
        let mut detail = String::new();
        let attaining: Vec<(&str, BTreeMap<String, f64>)> = vec![
            ("uniform-max", hyper(&[("n", 5.0)])),
            ("expmin", hyper(&[("n", 3.0)])),
            ("uniform-max-power", hyper(&[("n", 3.0), ("k", 2.0)])),
            ("normal-x4", BTreeMap::new()),
        ];
        for (name, h) in attaining {
            let e = catalog_lookup(name, &h).unwrap();
            let r = naudts_bound(&e.pair, &e.statistic, &[1.0], &ctx).unwrap();
            let corr = r.diagnostics.equality_correlation.unwrap().abs();
            if corr < 1.0 - 1e-6 {
                pass = false;
            }
            detail.push_str(&format!("{name} {corr:.9}; "));
        }
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 1.0)])).unwrap();
        let (pair, stat) = classical(&e);
        let r = bhattacharyya_dd_sup(&pair, &stat, 1.0, 1, &SearchSettings::default(), &ctx)
            .unwrap();
        let corr = r.diagnostics.equality_correlation.unwrap().abs();
        pass &= corr < 1.0 - 1e-3;
        detail.push_str(&format!("hcr {corr:.6}"));
        gate.check("10", "equality-condition correlations: 1 at attainment, below 1 for HCR", pass, detail);
    }

    // ------------------------------------------------------------------ 11
    {
        let f = |x: f64| if x >= 0.0 { (-x).exp() } else { 0.0 };
        let t = |x: f64| x - 1.0;
        let loc = synth_location(f, t, 0.0, 0.0, (0.0, f64::INFINITY), &SynthGrid::default())
            .unwrap();
        let mut sup_loc = 0.0_f64;
        let mut x = 0.01_f64;
        while x <= 20.0 {
            sup_loc = sup_loc.max((loc.base_density(x) - x * (-x).exp()).abs());
            x += 0.01;
        }
        let fg = |x: f64| if x > 0.0 { 0.5 * x * x * (-x).exp() } else { 0.0 };
        let tg = |x: f64| 2.0 / x;
        let sc = synth_scale(fg, tg, 1.0, 0.0, (0.0, f64::INFINITY), &SynthGrid::default())
            .unwrap();
        let mut sup_sc = 0.0_f64;
        let mut x = 0.05_f64;
        while x <= 20.0 {
            sup_sc = sup_sc.max((sc.base_density(x) - x * (-x).exp()).abs());
            x += 0.01;
        }
        gate.check(
            "11",
            "escort synthesis goldens: location x e^-x and scale Gamma(2) kernels",
            sup_loc <= 1e-6 && sup_sc <= 1e-6,
            format!("location sup {sup_loc:.3e}, scale sup {sup_sc:.3e}"),
        );
    }

    // ------------------------------------------------------------------ 12
    {
        let n = 4usize;
        let model = gaussian_sufficient_model(n);
        let pair = EscortPair::self_escort(model);
        let (xbar, s2) = gaussian_sufficient_statistics(n);
        let theta = [0.5, 1.0];
        let scores = escort_score_set(&pair, &theta, &ctx).unwrap();
        let rep = vector_schur_bound(&pair, &[xbar, s2], &scores, &theta, &ctx).unwrap();
        let (var_mean, bound_mean) = rep.direction(&[1.0, 0.0]);
        let mut pass = rep.certificate.psd && (var_mean - bound_mean).abs() <= 1e-8;
        // 100 random Gram block matrices: the complement stays PD
        let mut seed = 0x5eed_u64;
        let mut next = move || {
            seed = seed.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = seed;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..100 {
            let dim = 5usize;
            let g: Vec<Vec<f64>> =
                (0..dim).map(|_| (0..dim).map(|_| next()).collect()).collect();
            let mut a = SymMatrix::zeros(dim).unwrap();
            for i in 0..dim {
                for j in i..dim {
                    let mut s = if i == j { 1e-3 } else { 0.0 };
                    for k in 0..dim {
                        s += g[i][k] * g[j][k];
                    }
                    a.set(i, j, s);
                }
            }
            let mut st = SymMatrix::zeros(2).unwrap();
            let mut ss = SymMatrix::zeros(3).unwrap();
            let mut cross = RectMatrix::zeros(2, 3);
            for i in 0..2 {
                for j in 0..2 {
                    st.set(i, j, a.get(i, j));
                }
                for j in 0..3 {
                    cross.set(i, j, a.get(i, 2 + j));
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    ss.set(i, j, a.get(2 + i, 2 + j));
                }
            }
            let (comp, _) = schur_complement(&st, &cross, &ss).unwrap();
            if cholesky(&comp).is_err() {
                pass = false;
            }
        }
        gate.check(
            "12",
            "vector Schur bound: PSD certificate and 100 random Gram complements",
            pass,
            format!(
                "mean-direction gap {:.3e}, certificate min pivot {:.3e}",
                (var_mean - bound_mean).abs(),
                rep.certificate.min_shifted_pivot
            ),
        );
    }

    // ------------------------------------------------------------------ 13
    {
        let mut pass = true;
        let mut worst = String::new();
        let entries: Vec<(&str, BTreeMap<String, f64>)> = vec![
            ("uniform-max", hyper(&[("n", 5.0)])),
            ("expmin", hyper(&[("n", 3.0)])),
            ("uniform-max-power", hyper(&[("n", 3.0), ("k", 2.0)])),
            ("gamma-scale", hyper(&[("alpha", 3.0), ("k", -1.0)])),
            ("normal-x4", BTreeMap::new()),
            ("poisson-pair", hyper(&[("n", 2.0)])),
            ("uniform-joint-max", hyper(&[("n", 4.0)])),
        ];
        let settings = McSettings::new(1_000_000, 20240901).unwrap();
        for (name, h) in &entries {
            let e = catalog_lookup(name, h).unwrap();
            let checks = mc_crosscheck_entry(&e, &[1.0], &settings, &ctx).unwrap();
            for c in &checks {
                if !c.pass {
                    pass = false;
                    worst = format!(
                        "{}: mc {:.6e} vs quad {:.6e} (stderr {:.2e})",
                        c.label, c.mc.mean, c.quadrature, c.mc.stderr
                    );
                }
            }
        }
        // determinism: identical seeds reproduce bit-identical reports
        let e = catalog_lookup("uniform-max", &hyper(&[("n", 5.0)])).unwrap();
        let s = infoineq::verify::sampler_for_entry(&e, WhichDensity::Model).unwrap();
        let t = e.statistic.eval.clone();
        let a = infoineq::verify::mc_expectation(&s, &|x| t(&[x]), &[1.0], &settings);
        let b = infoineq::verify::mc_expectation(&s, &|x| t(&[x]), &[1.0], &settings);
        pass &= a.mean.to_bits() == b.mean.to_bits() && a.stderr.to_bits() == b.stderr.to_bits();
        gate.check(
            "13",
            "MC cross-checks at 10^6 samples within 4 stderr, bit-identical reruns",
            pass,
            if worst.is_empty() { "all expectations within 4 stderr".to_string() } else { worst },
        );
    }

    // ------------------------------------------------- note on example 5's
    // printed variance: the catalog stores the moment-oracle value
    // k^2 theta^(2k)/(n(n+2k)); attainment is asserted against that oracle
    {
        let e =
            catalog_lookup("uniform-max-power", &hyper(&[("n", 3.0), ("k", 2.0)])).unwrap();
        let var = variance_of(&e.statistic, &e.pair.f, &[1.0], &ctx).unwrap();
        let oracle = 4.0 / 21.0; // k^2/(n(n+2k)) at n=3, k=2, theta=1
        let r = naudts_bound(&e.pair, &e.statistic, &[1.0], &ctx).unwrap();
        let pass = rel(var.value, oracle) <= 1e-8
            && rel(r.bound, oracle) <= 1e-6
            && r.gap.unwrap() / var.value <= 1e-6;
        gate.check(
            "note",
            "power statistic variance follows the moment oracle k^2 theta^2k/(n(n+2k))",
            pass,
            format!("var {:.10} vs oracle {oracle:.10}, bound {:.10}", var.value, r.bound),
        );
    }

    assert!(
        gate.failures.is_empty(),
        "acceptance criteria failed:\n{}",
        gate.failures.join("\n")
    );
}
