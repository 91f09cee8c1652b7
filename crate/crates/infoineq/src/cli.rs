//! Command-line surface: catalog browsing, bound computation, parameter
//! sweeps, escort synthesis, and the verification suites, with JSON/CSV/pretty
//! output.
//!
//! Exit codes: 0 success, 1 computation failure, 2 configuration error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bounds::{
    bhattacharyya_dd, bhattacharyya_dd_sup, bhattacharyya_regular, multiparam_bound,
    multiparam_dd_bound, naudts_bound, vector_schur_bound, BoundReport, EngineCtx,
    SearchSettings,
};
use crate::error::Error;
use crate::escort::{synth_location, synth_scale, SynthGrid, SynthesizedDensity};
use crate::model::catalog::{catalog_lookup, list_models};
use crate::model::{CatalogEntry, EscortPair, Statistic};
use crate::numerics::divided::NodeSet;
use crate::numerics::special::gamma;
use crate::verify::{attainment_suite, mc_crosscheck_entry, reduction_suite, McSettings};

/// Version strings stamped into every report.
pub const SPEC_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CATALOG_VERSION: &str = "1";

#[derive(Parser, Debug)]
#[command(
    name = "infoineq",
    version,
    about = "Variance lower bounds from escort densities: generalized Cramér-Rao, \
             Bhattacharyya, Hammersley–Chapman–Robbins, and Schur vector bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonOpts {
    /// Catalog model name (see `list-models`).
    #[arg(long)]
    pub model: String,
    /// Hyperparameters as key=value (repeatable), e.g. --hyper n=5.
    #[arg(long = "hyper", value_name = "KEY=VALUE")]
    pub hyper: Vec<String>,
    /// Use the model as its own escort (g = f).
    #[arg(long)]
    pub classical: bool,
    /// Absolute quadrature tolerance (also INFOINEQ_ABS_TOL).
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Relative quadrature tolerance (also INFOINEQ_REL_TOL).
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Adaptive subdivision budget.
    #[arg(long)]
    pub max_subdiv: Option<usize>,
    /// Output format.
    #[arg(long, value_enum, default_value = "pretty")]
    pub output: OutputFormat,
    /// Write output to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the catalog models and their hyperparameter signatures.
    ListModels,
    /// Compute one bound at one parameter point.
    Bound {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum)]
        method: Method,
        /// Parameter point; repeat for vector parameters.
        #[arg(long, value_name = "REAL", num_args = 1.., required = true)]
        theta: Vec<f64>,
        /// Derivative or difference order k.
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Extra parameter nodes θ¹..θᵏ for divided-difference methods.
        #[arg(long, value_name = "REAL", num_args = 0..)]
        nodes: Vec<f64>,
    },
    /// Sweep a θ grid and emit one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum)]
        method: Method,
        /// Grid of scalar parameter points (possibly empty).
        #[arg(long, value_name = "REAL", num_args = 0..)]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, value_name = "REAL", num_args = 0..)]
        nodes: Vec<f64>,
    },
    /// Synthesize an optimizing escort family and export (x, kernel, g) CSV.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum)]
        family: SynthFamily,
        /// Sample count for the exported grid.
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
    /// Run the attainment suite (and optional MC cross-checks) for one entry.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// θ grid for the attainment checks.
        #[arg(long, value_name = "REAL", num_args = 0..)]
        theta: Vec<f64>,
        /// Also run Monte Carlo cross-checks with this many samples.
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Seed for the MC streams.
        #[arg(long, default_value_t = 20240901)]
        seed: u64,
    },
    /// Run the engine reduction battery.
    Reduce {
        /// Output format.
        #[arg(long, value_enum, default_value = "pretty")]
        output: OutputFormat,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        max_subdiv: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Generalized Cramér-Rao bound with the entry's escort.
    Naudts,
    /// Derivative Bhattacharyya bound of the given order.
    Bhatt,
    /// Divided-difference bound at explicit nodes.
    BhattDd,
    /// Supremum of the divided-difference bound over node placements.
    BhattDdSup,
    /// Hammersley–Chapman–Robbins: g = f, k = 1 supremum.
    Hcr,
    /// Classical Cramér-Rao: g = f, order 1.
    Cr,
    /// Multiparameter mixed-partial bound.
    Multi,
    /// Multiparameter divided-difference bound (coordinate 1 nodes).
    MultiDd,
    /// Scalar Schur projection J = Cov(T,S)² / Var(S).
    Schur,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Pretty,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthFamily {
    Location,
    Scale,
}

/// Report schema with fixed key names; the machine interface of the tool.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CliReport {
    pub method: String,
    pub model: String,
    pub hyper: BTreeMap<String, f64>,
    pub theta: Vec<f64>,
    pub order: usize,
    pub nodes: Option<Vec<f64>>,
    pub bound: f64,
    pub variance: Option<f64>,
    pub gap: Option<f64>,
    pub attained: Option<bool>,
    pub diagnostics: CliDiagnostics,
    pub versions: Versions,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CliDiagnostics {
    pub sigma_condition: Option<f64>,
    pub quad_error: f64,
    pub truncation: Option<usize>,
    pub equality_correlation: Option<f64>,
    pub argmax_nodes: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Versions {
    pub spec: String,
    pub catalog: String,
}

impl CliReport {
    fn from_bound(report: &BoundReport, model: &str, hyper: &BTreeMap<String, f64>) -> Self {
        Self {
            method: report.method.clone(),
            model: model.to_string(),
            hyper: hyper.clone(),
            theta: report.theta.clone(),
            order: report.order,
            nodes: report.nodes.clone(),
            bound: report.bound,
            variance: report.variance,
            gap: report.gap,
            attained: report.attained,
            diagnostics: CliDiagnostics {
                sigma_condition: report.diagnostics.sigma_condition,
                quad_error: report.diagnostics.quad_error,
                truncation: report.diagnostics.truncation,
                equality_correlation: report.diagnostics.equality_correlation,
                argmax_nodes: report.diagnostics.argmax_nodes.clone(),
            },
            versions: Versions {
                spec: SPEC_VERSION.to_string(),
                catalog: CATALOG_VERSION.to_string(),
            },
        }
    }
}

/// Seventeen significant digits, the bit-stable float format of the CSV side.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_hyper(items: &[String]) -> Result<BTreeMap<String, f64>, Error> {
    let mut map = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("hyperparameter '{item}' is not KEY=VALUE")))?;
        let value: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("hyperparameter value '{v}' is not a number")))?;
        map.insert(k.trim().to_string(), value);
    }
    Ok(map)
}

fn engine_ctx(abs: Option<f64>, rel: Option<f64>, max_subdiv: Option<usize>) -> Result<EngineCtx, Error> {
    let mut ctx = EngineCtx::default();
    let env_f64 = |name: &str| -> Result<Option<f64>, Error> {
        match std::env::var(name) {
            Ok(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{name} is not a number: '{v}'"))),
            Err(_) => Ok(None),
        }
    };
    if let Some(v) = env_f64("INFOINEQ_ABS_TOL")? {
        ctx.quad.abs_tol = v;
    }
    if let Some(v) = env_f64("INFOINEQ_REL_TOL")? {
        ctx.quad.rel_tol = v;
    }
    if let Some(v) = abs {
        ctx.quad.abs_tol = v;
    }
    if let Some(v) = rel {
        ctx.quad.rel_tol = v;
    }
    if let Some(v) = max_subdiv {
        ctx.quad.max_subdivisions = v;
    }
    if !(ctx.quad.abs_tol > 0.0) || !(ctx.quad.rel_tol > 0.0) || ctx.quad.max_subdivisions < 1 {
        return Err(Error::Config("quadrature tolerances must be positive".to_string()));
    }
    Ok(ctx)
}

/// The pair/statistic a method operates on: the entry's escort or, for
/// classical (g = f) methods, the model against itself with λ = φ.
fn view_for(entry: &CatalogEntry, classical: bool) -> (EscortPair, Statistic) {
    if classical {
        crate::verify::classical_view(entry)
    } else {
        (entry.pair.clone(), entry.statistic.clone())
    }
}

#[allow(clippy::too_many_arguments)]
fn compute_bound(
    entry: &CatalogEntry,
    method: Method,
    classical: bool,
    theta: &[f64],
    order: usize,
    nodes: &[f64],
    ctx: &EngineCtx,
) -> Result<BoundReport, Error> {
    let (pair, stat) = view_for(entry, classical || matches!(method, Method::Hcr | Method::Cr));
    match method {
        Method::Naudts => naudts_bound(&pair, &stat, theta, ctx),
        Method::Bhatt => {
            if theta.len() != 1 {
                return Err(Error::Config("bhatt needs a scalar theta".to_string()));
            }
            bhattacharyya_regular(&pair, &stat, theta[0], order, ctx)
        }
        Method::Cr => {
            if theta.len() != 1 {
                return Err(Error::Config("cr needs a scalar theta".to_string()));
            }
            bhattacharyya_regular(&pair, &stat, theta[0], 1, ctx)
        }
        Method::BhattDd => {
            if theta.len() != 1 {
                return Err(Error::Config("bhatt-dd needs a scalar theta".to_string()));
            }
            if nodes.is_empty() {
                return Err(Error::Config(
                    "bhatt-dd needs --nodes with the perturbed parameter points".to_string(),
                ));
            }
            let mut all = vec![theta[0]];
            all.extend_from_slice(nodes);
            let ns = NodeSet::new(all)?;
            bhattacharyya_dd(&pair, &stat, &ns, ctx)
        }
        Method::BhattDdSup => {
            if theta.len() != 1 {
                return Err(Error::Config("bhatt-dd-sup needs a scalar theta".to_string()));
            }
            bhattacharyya_dd_sup(&pair, &stat, theta[0], order, &SearchSettings::default(), ctx)
        }
        Method::Hcr => {
            if theta.len() != 1 {
                return Err(Error::Config("hcr needs a scalar theta".to_string()));
            }
            let mut r =
                bhattacharyya_dd_sup(&pair, &stat, theta[0], 1, &SearchSettings::default(), ctx)?;
            r.method = "hcr".to_string();
            Ok(r)
        }
        Method::Multi => multiparam_bound(&pair, &stat, theta, order, ctx),
        Method::MultiDd => {
            if nodes.is_empty() {
                return Err(Error::Config(
                    "multi-dd needs --nodes for the first coordinate".to_string(),
                ));
            }
            let mut list = vec![theta[0]];
            list.extend_from_slice(nodes);
            let mut lists = vec![list];
            for _ in 1..pair.f.param_dim {
                lists.push(Vec::new());
            }
            multiparam_dd_bound(&pair, &stat, theta, &lists, ctx)
        }
        Method::Schur => {
            let scores = crate::bounds::escort_score_set(&pair, theta, ctx)?;
            let rep = vector_schur_bound(&pair, std::slice::from_ref(&stat), &scores, theta, ctx)?;
            let mut report = BoundReport {
                method: "schur".to_string(),
                theta: theta.to_vec(),
                order: 1,
                nodes: None,
                bound: rep.j.get(0, 0),
                variance: Some(rep.sigma_t.get(0, 0)),
                gap: Some(rep.sigma_t.get(0, 0) - rep.j.get(0, 0)),
                attained: None,
                diagnostics: rep.diagnostics.clone(),
            };
            let tol = ctx.attain_tol_numeric;
            report.attained = Some(
                report.gap.unwrap_or(f64::INFINITY)
                    / report.variance.unwrap_or(f64::INFINITY).max(1e-300)
                    <= tol,
            );
            Ok(report)
        }
    }
}

fn render_reports(reports: &[CliReport], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0]).expect("report serializes")
            } else {
                serde_json::to_string_pretty(reports).expect("reports serialize")
            }
        }
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str(csv_header(reports.first().map_or(1, |r| r.theta.len())).as_str());
            for r in reports {
                out.push_str(&csv_row(r, None));
            }
            out
        }
        OutputFormat::Pretty => {
            let mut out = String::new();
            for r in reports {
                out.push_str(&format!(
                    "{} on {} at theta = {:?}\n  bound     = {:.9e}\n",
                    r.method, r.model, r.theta, r.bound
                ));
                if let Some(v) = r.variance {
                    out.push_str(&format!("  variance  = {v:.9e}\n"));
                }
                if let Some(g) = r.gap {
                    out.push_str(&format!("  gap       = {g:.3e}\n"));
                }
                if let Some(a) = r.attained {
                    out.push_str(&format!("  attained  = {a}\n"));
                }
                if let Some(c) = r.diagnostics.equality_correlation {
                    out.push_str(&format!("  equality correlation = {c:.9}\n"));
                }
                if let Some(nodes) = &r.diagnostics.argmax_nodes {
                    out.push_str(&format!("  argmax nodes = {nodes:?}\n"));
                }
            }
            out
        }
    }
}

/// Stable sweep column order: theta columns, the bound quartet, then the
/// diagnostics alphabetically, then the error column.
fn csv_header(theta_dim: usize) -> String {
    let mut cols: Vec<String> = if theta_dim == 1 {
        vec!["theta".to_string()]
    } else {
        (1..=theta_dim).map(|i| format!("theta{i}")).collect()
    };
    cols.extend(
        [
            "bound",
            "variance",
            "gap",
            "attained",
            "argmax_nodes",
            "equality_correlation",
            "quad_error",
            "sigma_condition",
            "truncation",
            "error",
        ]
        .map(str::to_string),
    );
    cols.join(",") + "\n"
}

fn csv_row(r: &CliReport, error: Option<&str>) -> String {
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let mut cells: Vec<String> = r.theta.iter().map(|&t| fmt17(t)).collect();
    cells.push(fmt17(r.bound));
    cells.push(opt(r.variance));
    cells.push(opt(r.gap));
    cells.push(r.attained.map(|b| b.to_string()).unwrap_or_default());
    cells.push(
        r.diagnostics
            .argmax_nodes
            .as_ref()
            .map(|ns| ns.iter().map(|&n| fmt17(n)).collect::<Vec<_>>().join(";"))
            .unwrap_or_default(),
    );
    cells.push(opt(r.diagnostics.equality_correlation));
    cells.push(fmt17(r.diagnostics.quad_error));
    cells.push(opt(r.diagnostics.sigma_condition));
    cells.push(r.diagnostics.truncation.map(|t| t.to_string()).unwrap_or_default());
    cells.push(error.unwrap_or_default().to_string());
    cells.join(",") + "\n"
}

fn error_row(theta: &[f64], message: &str) -> String {
    let mut cells: Vec<String> = theta.iter().map(|&t| fmt17(t)).collect();
    for _ in 0..9 {
        cells.push(String::new());
    }
    cells.push(message.replace(',', ";"));
    cells.join(",") + "\n"
}

/// Synthesis presets keyed by catalog names.
fn synth_preset(
    model: &str,
    hyper: &BTreeMap<String, f64>,
    family: SynthFamily,
) -> Result<SynthesizedDensity, Error> {
    match (family, model) {
        (SynthFamily::Location, "expmin") => {
            let n = hyper.get("n").copied().unwrap_or(1.0);
            if !(n >= 1.0) || n.fract() != 0.0 {
                return Err(Error::InvalidHyper("'n' must be a positive integer".to_string()));
            }
            let f = move |x: f64| if x >= 0.0 { n * (-n * x).exp() } else { 0.0 };
            let t = move |x: f64| x - 1.0 / n;
            synth_location(f, t, 0.0, 0.0, (0.0, f64::INFINITY), &SynthGrid::default())
        }
        (SynthFamily::Scale, "gamma-scale") => {
            let alpha = hyper
                .get("alpha")
                .copied()
                .ok_or_else(|| Error::InvalidHyper("missing 'alpha'".to_string()))?;
            let k = hyper.get("k").copied().unwrap_or(-1.0);
            if !(alpha > 0.0) || k == 0.0 || k.fract() != 0.0 || 2.0 * k + alpha <= 0.0 {
                return Err(Error::InvalidHyper(
                    "need alpha > 0 and nonzero integer k with 2k + alpha > 0".to_string(),
                ));
            }
            let coef = gamma(alpha) / gamma(alpha + k);
            let f = move |x: f64| {
                if x > 0.0 {
                    ((alpha - 1.0) * x.ln() - x - crate::numerics::special::ln_gamma(alpha)).exp()
                } else {
                    0.0
                }
            };
            let t = move |x: f64| coef * x.powf(k);
            synth_scale(f, t, 1.0, 0.0, (0.0, f64::INFINITY), &SynthGrid::default())
        }
        (SynthFamily::Scale, "normal-x4") => {
            let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
            let f = move |x: f64| inv * (-0.5 * x * x).exp();
            let t = |x: f64| x.powi(4) / 3.0;
            synth_scale(
                f,
                t,
                1.0,
                f64::NEG_INFINITY,
                (f64::NEG_INFINITY, f64::INFINITY),
                &SynthGrid::default(),
            )
        }
        _ => Err(Error::Config(format!(
            "no {family:?} synthesis preset for '{model}' (available: location/expmin, \
             scale/gamma-scale, scale/normal-x4)"
        ))),
    }
}

fn emit(common_out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match common_out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("stdout: {e}")))
        }
    }
}

/// Run a parsed command. `Ok(true)` means every computation and check passed;
/// `Ok(false)` means the run completed but some verification check failed.
pub fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::ListModels => {
            let mut out = String::new();
            out.push_str("name                 hyperparameters  description\n");
            for (name, hyper, desc) in list_models() {
                out.push_str(&format!("{name:<20} {hyper:<16} {desc}\n"));
            }
            emit(&None, &out)?;
            Ok(true)
        }
        Command::Bound { common, method, theta, order, nodes } => {
            let hyper = parse_hyper(&common.hyper)?;
            let entry = catalog_lookup(&common.model, &hyper)?;
            let ctx = engine_ctx(common.abs_tol, common.rel_tol, common.max_subdiv)?;
            let report =
                compute_bound(&entry, method, common.classical, &theta, order, &nodes, &ctx)?;
            let cli_report = CliReport::from_bound(&report, &common.model, &hyper);
            emit(&common.out, &render_reports(&[cli_report], common.output))?;
            Ok(true)
        }
        Command::Sweep { common, method, theta, order, nodes } => {
            let hyper = parse_hyper(&common.hyper)?;
            let entry = catalog_lookup(&common.model, &hyper)?;
            let ctx = engine_ctx(common.abs_tol, common.rel_tol, common.max_subdiv)?;
            let mut out = csv_header(1);
            let mut any_failed = false;
            for &t in &theta {
                match compute_bound(&entry, method, common.classical, &[t], order, &nodes, &ctx) {
                    Ok(report) => {
                        let cli_report = CliReport::from_bound(&report, &common.model, &hyper);
                        out.push_str(&csv_row(&cli_report, None));
                    }
                    Err(e) => {
                        any_failed = true;
                        out.push_str(&error_row(&[t], &e.to_string()));
                    }
                }
            }
            emit(&common.out, &out)?;
            Ok(!any_failed)
        }
        Command::Synth { common, family, points } => {
            let hyper = parse_hyper(&common.hyper)?;
            let density = synth_preset(&common.model, &hyper, family)?;
            let (a, b) = density.support;
            let mut out = String::from("x,kernel,g\n");
            for i in 0..=points {
                let x = a + (b - a) * i as f64 / points as f64;
                let g = density.base_density(x);
                let kernel = g / density.normalizer;
                out.push_str(&format!("{},{},{}\n", fmt17(x), fmt17(kernel), fmt17(g)));
            }
            emit(&common.out, &out)?;
            Ok(true)
        }
        Command::Verify { common, theta, mc_samples, seed } => {
            let hyper = parse_hyper(&common.hyper)?;
            let entry = catalog_lookup(&common.model, &hyper)?;
            let ctx = engine_ctx(common.abs_tol, common.rel_tol, common.max_subdiv)?;
            let grid = if theta.is_empty() { vec![0.5, 1.0, 2.0] } else { theta };
            let checks = attainment_suite(&entry, &grid, &ctx)?;
            let mut all_pass = true;
            let mut out = String::new();
            for c in &checks {
                all_pass &= c.pass;
                out.push_str(&format!(
                    "{}: {} {:?} at theta={} expected attained={} got={} (gap {:?})\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.entry,
                    c.method,
                    c.theta,
                    c.expected_attained,
                    c.report.attained.unwrap_or(false),
                    c.report.gap,
                ));
            }
            if let Some(samples) = mc_samples {
                let settings = McSettings::new(samples, seed)?;
                for &t in &grid {
                    let mcs = mc_crosscheck_entry(&entry, &[t], &settings, &ctx)?;
                    for c in &mcs {
                        all_pass &= c.pass;
                        out.push_str(&format!(
                            "{}: {} at theta={} mc={:.6e} (stderr {:.2e}, seed {}, rng {}) quadrature={:.6e}\n",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.label,
                            t,
                            c.mc.mean,
                            c.mc.stderr,
                            c.mc.seed,
                            c.mc.rng,
                            c.quadrature,
                        ));
                    }
                }
            }
            emit(&common.out, &out)?;
            Ok(all_pass)
        }
        Command::Reduce { output, abs_tol, rel_tol, max_subdiv, out } => {
            let ctx = engine_ctx(abs_tol, rel_tol, max_subdiv)?;
            let checks = reduction_suite(&ctx)?;
            let mut all_pass = true;
            let text = match output {
                OutputFormat::Json => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        name: &'a str,
                        achieved: f64,
                        tolerance: f64,
                        pass: bool,
                    }
                    let rows: Vec<Row> = checks
                        .iter()
                        .map(|c| {
                            all_pass &= c.pass;
                            Row {
                                name: &c.name,
                                achieved: c.achieved,
                                tolerance: c.tolerance,
                                pass: c.pass,
                            }
                        })
                        .collect();
                    serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
                }
                _ => {
                    let mut s = String::new();
                    for c in &checks {
                        all_pass &= c.pass;
                        s.push_str(&format!(
                            "{}: {} (achieved {:.3e}, tolerance {:.1e})\n",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.achieved,
                            c.tolerance
                        ));
                    }
                    s
                }
            };
            emit(&out, &text)?;
            Ok(all_pass)
        }
    }
}

/// Entry point used by the binary: maps errors to the exit-code contract.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e @ (Error::Config(_) | Error::InvalidHyper(_) | Error::UnknownModel(_))) => {
            eprintln!("configuration error: {e}");
            2
        }
        Err(e) => {
            eprintln!("computation failed: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyper_parsing() {
        let h = parse_hyper(&["n=5".to_string(), "k=2.5".to_string()]).unwrap();
        assert_eq!(h["n"], 5.0);
        assert_eq!(h["k"], 2.5);
        assert!(parse_hyper(&["oops".to_string()]).is_err());
    }

    #[test]
    fn fmt17_has_17_significant_digits() {
        assert_eq!(fmt17(2.5), "2.5000000000000000e0");
        assert_eq!(fmt17(1.0 / 3.0), "3.3333333333333331e-1");
    }

    #[test]
    fn json_report_round_trips() {
        let report = CliReport {
            method: "naudts".to_string(),
            model: "uniform-max".to_string(),
            hyper: BTreeMap::from([("n".to_string(), 5.0)]),
            theta: vec![2.0],
            order: 1,
            nodes: None,
            bound: 4.0 / 35.0,
            variance: Some(4.0 / 35.0),
            gap: Some(1e-12),
            attained: Some(true),
            diagnostics: CliDiagnostics {
                sigma_condition: Some(1.0),
                quad_error: 3e-11,
                truncation: None,
                equality_correlation: Some(1.0),
                argmax_nodes: None,
            },
            versions: Versions {
                spec: SPEC_VERSION.to_string(),
                catalog: CATALOG_VERSION.to_string(),
            },
        };
        let text = serde_json::to_string(&report).unwrap();
        let back: CliReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn csv_header_order_is_stable() {
        assert_eq!(
            csv_header(1),
            "theta,bound,variance,gap,attained,argmax_nodes,equality_correlation,quad_error,sigma_condition,truncation,error\n"
        );
    }
}
