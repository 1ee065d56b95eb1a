//! Command-line front end: configuration, experiment corpus, reports, and
//! plot emission.
//!
//! Every subcommand reads an optional flat `key=value` config file, lets
//! flags override it, embeds the fully resolved configuration into the
//! emitted report, and writes output files atomically
//! (write-temp-then-rename). Exit codes: 0 success, 2 usage/parse, 3 domain,
//! 4 budget exhausted under `--strict`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::arith::is_bounded_type;
use crate::birkhoff::growth_exponent;
use crate::cohomology::{solve_abelian, solve_cohomological, DEFAULT_COBOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::experiments::batch::{batch, parse_params, run_spec, JobKind, JobSpec};
use crate::experiments::drift::DriftConfig;
use crate::experiments::presets::{preset_observable, preset_roof};
use crate::observables::{decompose_hmn, from_exchange_text, to_exchange_text, FourierObservable};
use crate::specialflow::{orbit_csv, SpecialFlowState};
use crate::torus::TorusPoint;
use crate::{SCHEMA_VERSION, VERSION};

#[derive(Parser)]
#[command(
    name = "nilflow",
    version = VERSION,
    about = "Skew-shift Birkhoff sums, cohomological equations, special flows, and drift searches"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Continued-fraction expansion of a rotation number
    Cf(CfArgs),
    /// Sup-norm growth fit of Birkhoff sums (CSV + JSON + optional SVG)
    Growth(GrowthArgs),
    /// Solve the cohomological equation u o Phi - u = g
    Cohomology(CohomologyArgs),
    /// Ratner-type drift search between a seeded pair of nearby points
    Ratner(ExperimentArgs),
    /// Two-speed disjointness drift over a seeded quadruple
    Disjoint(ExperimentArgs),
    /// Moebius-weighted average along a special-flow trajectory
    Moebius(ExperimentArgs),
    /// Special-flow orbit dump (CSV)
    Flow(FlowArgs),
    /// Run a JSON list of seeded experiments on a worker pool
    Batch(BatchArgs),
    /// Re-ingest an emitted report and reproduce its pass/fail decisions
    Replay(ReplayArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for reports
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Let the exit status reflect pass/fail (budget exhaustion -> 4)
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct CfArgs {
    /// Rotation number: golden | sqrt2 | decimal literal
    #[arg(long)]
    pub alpha: Option<String>,
    /// Number of partial quotients
    #[arg(long)]
    pub depth: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct GrowthArgs {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Observable: preset name or @path to an exchange-text file
    #[arg(long)]
    pub observable: Option<String>,
    /// Comma-separated checkpoint lengths
    #[arg(long)]
    pub n_list: Option<String>,
    /// Sampling budget for each sup-norm estimate
    #[arg(long)]
    pub budget: Option<u64>,
    /// Also emit a log-log SVG chart
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct CohomologyArgs {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub observable: Option<String>,
    /// Relative obstruction tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Roof preset: nontrivial | trivial | unit
    #[arg(long)]
    pub roof: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta_x: Option<f64>,
    #[arg(long)]
    pub delta_y: Option<f64>,
    #[arg(long)]
    pub delta_w: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<i64>,
    /// Sample count (Moebius)
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampling time step (Moebius)
    #[arg(long)]
    pub t: Option<f64>,
    /// Permit p = q (noise-floor controls only)
    #[arg(long)]
    pub allow_equal_speeds: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub roof: Option<String>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Horizon: samples are uniform on [0, t_max]
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct BatchArgs {
    /// JSON file: array of job specs
    #[arg(long)]
    pub jobs: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct ReplayArgs {
    /// A report emitted by ratner/disjoint/moebius/batch
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Parsed flat key=value config file.
#[derive(Default)]
struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigMap::default());
        };
        let text = fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    fn pick<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match self.0.get(key) {
            Some(s) => s
                .parse()
                .map_err(|e| Error::Parse(format!("config key {key}: {e}"))),
            None => Ok(default),
        }
    }

    fn pick_required<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match self.0.get(key) {
            Some(s) => s
                .parse()
                .map_err(|e| Error::Parse(format!("config key {key}: {e}"))),
            None => Err(Error::Parse(format!("missing required option --{key}"))),
        }
    }

    fn pick_flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.0.get(key) {
            Some(s) => s
                .parse()
                .map_err(|e| Error::Parse(format!("config key {key}: {e}"))),
            None => Ok(false),
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) => 2,
                _ => 3,
            }
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Cf(a) => cmd_cf(a),
        Cmd::Growth(a) => cmd_growth(a),
        Cmd::Cohomology(a) => cmd_cohomology(a),
        Cmd::Ratner(a) => cmd_experiment(a, JobKind::Ratner),
        Cmd::Disjoint(a) => cmd_experiment(a, JobKind::Disjoint),
        Cmd::Moebius(a) => cmd_experiment(a, JobKind::Moebius),
        Cmd::Flow(a) => cmd_flow(a),
        Cmd::Batch(a) => cmd_batch(a),
        Cmd::Replay(a) => cmd_replay(a),
    }
}

fn out_dir(cfg: &ConfigMap, common: &CommonArgs) -> Result<PathBuf> {
    let dir = cfg.pick(&common.out, "out", PathBuf::from("out"))?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Write-temp-then-rename so readers never observe a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn load_observable(
    spec: &str,
    params: &crate::torus::SkewShiftParams,
) -> Result<FourierObservable> {
    if let Some(path) = spec.strip_prefix('@') {
        from_exchange_text(&fs::read_to_string(path)?)
    } else {
        preset_observable(spec, params)
    }
}

// ---------------------------------------------------------------------------
// cf
// ---------------------------------------------------------------------------

fn cmd_cf(a: CfArgs) -> Result<i32> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let alpha: String = cfg.pick_required(&a.alpha, "alpha")?;
    let depth = cfg.pick(&a.depth, "depth", 20usize)?;
    let rot = match alpha.as_str() {
        "golden" => crate::arith::RotationNumber::golden(depth),
        "sqrt2" => crate::arith::RotationNumber::sqrt2_minus_one(depth),
        s => crate::arith::RotationNumber::from_decimal(s, depth)?,
    };
    println!("alpha = {:.17}", rot.value());
    if rot.is_rational() {
        println!("warning: rational rotation number (expansion terminated)");
    }
    if rot.cf.precision_limited {
        println!("note: expansion truncated at the certification limit q_n > 2^100");
    }
    println!("{:>4} {:>20} {:>24} {:>12}", "k", "a_k", "q_k", "q_k+1/q_k");
    let q = &rot.cf.convergents;
    for (i, &a_k) in rot.cf.partial_quotients.iter().enumerate() {
        let qk = q[i + 1].1;
        let ratio = if i + 2 < q.len() {
            format!("{:.4}", q[i + 2].1 as f64 / qk as f64)
        } else {
            "-".into()
        };
        println!("{:>4} {:>20} {:>24} {:>12}", i + 1, a_k, qk, ratio);
    }
    if rot.cf.depth() >= 3 {
        let rep = is_bounded_type(&rot.cf)?;
        println!(
            "max partial quotient {} over depth {}; max q_n+1/q_n = {:.4}",
            rep.max_quotient, rep.certified_depth, rep.c_alpha_estimate
        );
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// growth
// ---------------------------------------------------------------------------

fn default_n_list() -> Vec<i64> {
    (10..=20).map(|k| 1i64 << k).collect()
}

fn parse_n_list(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("bad checkpoint {t:?}: {e}")))
        })
        .collect()
}

fn cmd_growth(a: GrowthArgs) -> Result<i32> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let alpha: String = cfg.pick(&a.alpha, "alpha", "golden".into())?;
    let beta: String = cfg.pick(&a.beta, "beta", "0.0".into())?;
    let observable: String = cfg.pick(&a.observable, "observable", "noncoboundary".into())?;
    let budget = cfg.pick(&a.budget, "budget", 4_000u64)?;
    let n_list = match cfg.pick(&a.n_list, "n_list", String::new())? {
        s if s.is_empty() => default_n_list(),
        s => parse_n_list(&s)?,
    };
    let params = parse_params(&alpha, &beta)?;
    let g = load_observable(&observable, &params)?;
    let fit = growth_exponent(&g, &params, &n_list, budget)?;

    let dir = out_dir(&cfg, &a.common)?;
    let mut csv = String::from("N,sup_norm\n");
    for &(n, v) in &fit.per_n {
        csv.push_str(&format!("{n},{v:.17e}\n"));
    }
    write_atomic(&dir.join("growth.csv"), csv.as_bytes())?;

    let envelope = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "command": "growth",
        "config": {
            "alpha": alpha, "beta": beta, "observable": observable,
            "budget": budget, "n_list": n_list,
        },
        "report": fit,
    });
    write_atomic(
        &dir.join("growth.json"),
        serde_json::to_string_pretty(&envelope)
            .map_err(|e| Error::Integrity(e.to_string()))?
            .as_bytes(),
    )?;

    if a.svg || cfg.pick_flag(false, "svg")? {
        let pts: Vec<(f64, f64)> = fit
            .per_n
            .iter()
            .map(|&(n, v)| ((n as f64).ln(), v.ln()))
            .collect();
        let svg = svg_loglog(&pts, fit.slope, fit.intercept, "log ||S_N|| vs log N");
        write_atomic(&dir.join("growth.svg"), svg.as_bytes())?;
    }
    println!(
        "growth: slope {:.4} (r2 {:.4}) over {} checkpoints -> {}",
        fit.slope,
        fit.r2,
        fit.per_n.len(),
        dir.join("growth.json").display()
    );
    Ok(0)
}

/// Minimal polyline chart on natural-log axes with the fitted line and a
/// slope annotation; no third-party renderer.
fn svg_loglog(pts: &[(f64, f64)], slope: f64, intercept: f64, title: &str) -> String {
    let (w, h, m) = (640.0f64, 480.0f64, 50.0f64);
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let sx = |x: f64| m + (x - xmin) / (xmax - xmin).max(1e-300) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - ymin) / (ymax - ymin).max(1e-300) * (h - 2.0 * m);
    let poly: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let fit_pts = format!(
        "{:.2},{:.2} {:.2},{:.2}",
        sx(xmin),
        sy(slope * xmin + intercept),
        sx(xmax),
        sy(slope * xmax + intercept)
    );
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            r#"<rect width="{w}" height="{h}" fill="white"/>"#,
            r#"<line x1="{m}" y1="{hm}" x2="{wm}" y2="{hm}" stroke="black"/>"#,
            r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{hm}" stroke="black"/>"#,
            r#"<polyline points="{fit}" fill="none" stroke="gray" stroke-dasharray="6,4"/>"#,
            r#"<polyline points="{poly}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            r#"<text x="{tx}" y="30" font-family="monospace" font-size="16">{title} | slope = {slope:.4}</text>"#,
            "</svg>\n"
        ),
        w = w,
        h = h,
        m = m,
        hm = h - m,
        wm = w - m,
        fit = fit_pts,
        poly = poly.join(" "),
        tx = m,
        title = title,
        slope = slope,
    )
}

// ---------------------------------------------------------------------------
// cohomology
// ---------------------------------------------------------------------------

fn cmd_cohomology(a: CohomologyArgs) -> Result<i32> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let alpha: String = cfg.pick(&a.alpha, "alpha", "golden".into())?;
    let beta: String = cfg.pick(&a.beta, "beta", "0.0".into())?;
    let observable: String = cfg.pick_required(&a.observable, "observable")?;
    let tol = cfg.pick(&a.tol, "tol", DEFAULT_COBOUNDARY_TOL)?;
    let params = parse_params(&alpha, &beta)?;
    let g = load_observable(&observable, &params)?;
    if g.mean().abs() > tol {
        return Err(Error::Precondition(
            "cohomology solve requires a zero-mean observable".into(),
        ));
    }
    let dec = decompose_hmn(&g);
    let mut u = FourierObservable::zero();
    let mut components = Vec::new();
    for comp in dec.components.values() {
        let sol = solve_cohomological(comp, &params, tol)?;
        components.push(serde_json::json!({
            "m": comp.m, "n": comp.n,
            "obstruction": sol.obstruction,
            "residual": sol.residual,
            "modes": sol.u.coeffs.len(),
        }));
        u = u.add(&sol.u.to_observable());
    }
    let mut abelian_divisor = None;
    let nonzero_abelian: BTreeMap<_, _> = dec
        .abelian
        .iter()
        .filter(|&(&a, c)| a != 0 && c.norm() > 0.0)
        .map(|(&a, &c)| (a, c))
        .collect();
    if !nonzero_abelian.is_empty() {
        let sol = solve_abelian(&nonzero_abelian, &params, tol)?;
        abelian_divisor = Some(sol.smallest_divisor);
        let mut ab = FourierObservable::zero();
        for (&a, &c) in &sol.u {
            ab.set_coefficient(a, 0, c);
        }
        u = u.add(&ab);
    }

    let dir = out_dir(&cfg, &a.common)?;
    write_atomic(&dir.join("transfer.txt"), to_exchange_text(&u).as_bytes())?;
    let envelope = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "command": "cohomology",
        "config": {"alpha": alpha, "beta": beta, "observable": observable, "tol": tol},
        "report": {
            "components": components,
            "abelian_smallest_divisor": abelian_divisor,
            "transfer_modes": u.coefficients().len(),
        },
    });
    write_atomic(
        &dir.join("cohomology.json"),
        serde_json::to_string_pretty(&envelope)
            .map_err(|e| Error::Integrity(e.to_string()))?
            .as_bytes(),
    )?;
    println!(
        "cohomology: {} components solved -> {}",
        components.len(),
        dir.join("cohomology.json").display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// ratner / disjoint / moebius
// ---------------------------------------------------------------------------

fn resolve_spec(a: &ExperimentArgs, kind: JobKind) -> Result<(JobSpec, ConfigMap)> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let defaults = DriftConfig::default();
    let spec = JobSpec {
        kind,
        alpha: cfg.pick(&a.alpha, "alpha", "golden".into())?,
        beta: cfg.pick(&a.beta, "beta", "0.3".into())?,
        roof: cfg.pick(&a.roof, "roof", "nontrivial".into())?,
        seed: cfg.pick(&a.seed, "seed", 0u64)?,
        delta_x: cfg.pick(&a.delta_x, "delta_x", 0.0)?,
        delta_y: cfg.pick(&a.delta_y, "delta_y", 1e-3)?,
        delta_w: cfg.pick(&a.delta_w, "delta_w", 1e-3)?,
        p: cfg.pick(&a.p, "p", 1u32)?,
        q: cfg.pick(&a.q, "q", 2u32)?,
        samples: cfg.pick(&a.samples, "samples", 100_000usize)?,
        t: cfg.pick(&a.t, "t", 0.7)?,
        cfg: DriftConfig {
            eps: cfg.pick(&a.eps, "eps", defaults.eps)?,
            kappa: cfg.pick(&a.kappa, "kappa", defaults.kappa)?,
            d_max: cfg.pick(&a.d_max, "d_max", defaults.d_max)?,
            threshold: cfg.pick(&a.threshold, "threshold", defaults.threshold)?,
            max_steps: cfg.pick(&a.max_steps, "max_steps", defaults.max_steps)?,
            allow_equal_speeds: cfg.pick_flag(a.allow_equal_speeds, "allow_equal_speeds")?,
            ..defaults
        },
    };
    Ok((spec, cfg))
}

fn kind_name(kind: JobKind) -> &'static str {
    match kind {
        JobKind::Ratner => "ratner",
        JobKind::Disjoint => "disjoint",
        JobKind::Moebius => "moebius",
    }
}

fn cmd_experiment(a: ExperimentArgs, kind: JobKind) -> Result<i32> {
    let (spec, cfg) = resolve_spec(&a, kind)?;
    let name = kind_name(kind);
    let (pass, report) = run_spec(&spec)?;
    let dir = out_dir(&cfg, &a.common)?;

    // drift reports carry a trace; dump it as CSV alongside the JSON
    if let Some(trace) = report.get("drift_trace").and_then(|t| t.as_array()) {
        let mut csv = String::from("n,a_n\n");
        for row in trace {
            if let (Some(n), Some(v)) = (row[0].as_i64(), row[1].as_f64()) {
                csv.push_str(&format!("{n},{v:.17e}\n"));
            }
        }
        write_atomic(&dir.join(format!("{name}_trace.csv")), csv.as_bytes())?;
    }
    if let Some(partials) = report.get("partials").and_then(|t| t.as_array()) {
        let mut csv = String::from("K,average\n");
        for row in partials {
            if let (Some(k), Some(v)) = (row[0].as_u64(), row[1].as_f64()) {
                csv.push_str(&format!("{k},{v:.17e}\n"));
            }
        }
        write_atomic(&dir.join(format!("{name}_partials.csv")), csv.as_bytes())?;
    }

    let envelope = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "command": name,
        "spec": spec,
        "pass": pass,
        "report": report,
    });
    let path = dir.join(format!("{name}.json"));
    write_atomic(
        &path,
        serde_json::to_string_pretty(&envelope)
            .map_err(|e| Error::Integrity(e.to_string()))?
            .as_bytes(),
    )?;
    println!("{name}: pass={pass} -> {}", path.display());
    if a.common.strict && !pass {
        return Ok(4);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

fn cmd_flow(a: FlowArgs) -> Result<i32> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let alpha: String = cfg.pick(&a.alpha, "alpha", "golden".into())?;
    let beta: String = cfg.pick(&a.beta, "beta", "0.3".into())?;
    let roof_name: String = cfg.pick(&a.roof, "roof", "nontrivial".into())?;
    let x = cfg.pick(&a.x, "x", 0.0)?;
    let y = cfg.pick(&a.y, "y", 0.0)?;
    let s = cfg.pick(&a.s, "s", 0.0)?;
    let t_max = cfg.pick(&a.t_max, "t_max", 100.0)?;
    let samples = cfg.pick(&a.samples, "samples", 101usize)?;
    if samples < 2 || !(t_max > 0.0) {
        return Err(Error::Parse("flow needs samples >= 2 and t_max > 0".into()));
    }
    let params = parse_params(&alpha, &beta)?;
    let roof = preset_roof(&roof_name, &params)?;
    let state = SpecialFlowState::new(&roof, TorusPoint::from_f64(x, y), s)?;
    let times: Vec<f64> = (0..samples)
        .map(|i| t_max * i as f64 / (samples - 1) as f64)
        .collect();
    let csv = orbit_csv(&roof, &params, &state, &times)?;
    let dir = out_dir(&cfg, &a.common)?;
    let path = dir.join("flow.csv");
    write_atomic(&path, csv.as_bytes())?;
    println!(
        "flow: {} samples over [0, {t_max}] -> {}",
        samples,
        path.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// batch / replay
// ---------------------------------------------------------------------------

fn cmd_batch(a: BatchArgs) -> Result<i32> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let jobs_path: PathBuf = cfg.pick_required(&a.jobs, "jobs")?;
    let workers = cfg.pick(&a.workers, "workers", 1usize)?;
    let text = fs::read_to_string(&jobs_path)?;
    let specs: Vec<JobSpec> =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("jobs file: {e}")))?;
    let report = batch(&specs, workers)?;
    let all_ok = report.error_count == 0 && report.fail_count == 0;

    let dir = out_dir(&cfg, &a.common)?;
    let envelope = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "version": VERSION,
        "command": "batch",
        "workers": workers,
        "specs": specs,
        "report": report,
    });
    let path = dir.join("batch.json");
    write_atomic(
        &path,
        serde_json::to_string_pretty(&envelope)
            .map_err(|e| Error::Integrity(e.to_string()))?
            .as_bytes(),
    )?;
    println!(
        "batch: {} jobs, {} passed, {} failed, {} errors -> {}",
        report.job_count,
        report.pass_count,
        report.fail_count,
        report.error_count,
        path.display()
    );
    if a.common.strict && !all_ok {
        return Ok(4);
    }
    Ok(0)
}

fn cmd_replay(a: ReplayArgs) -> Result<i32> {
    let cfg = ConfigMap::load(a.common.config.as_deref())?;
    let path: PathBuf = cfg.pick_required(&a.report, "report")?;
    let text = fs::read_to_string(&path)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("report file: {e}")))?;
    let command = v
        .get("command")
        .and_then(|c| c.as_str())
        .ok_or_else(|| Error::Parse("report has no command field".into()))?
        .to_string();
    match command.as_str() {
        "ratner" | "disjoint" | "moebius" => {
            let spec: JobSpec = serde_json::from_value(v["spec"].clone())
                .map_err(|e| Error::Parse(format!("report spec: {e}")))?;
            let recorded = v
                .get("pass")
                .and_then(|p| p.as_bool())
                .ok_or_else(|| Error::Parse("report has no pass field".into()))?;
            let (pass, _) = run_spec(&spec)?;
            if pass != recorded {
                return Err(Error::Integrity(format!(
                    "replay of {command} produced pass={pass}, report says {recorded}"
                )));
            }
            println!("replay: {command} pass={pass} reproduced");
            Ok(0)
        }
        "batch" => {
            let specs: Vec<JobSpec> = serde_json::from_value(v["specs"].clone())
                .map_err(|e| Error::Parse(format!("report specs: {e}")))?;
            let recorded: Vec<Option<bool>> = v["report"]["outcomes"]
                .as_array()
                .ok_or_else(|| Error::Parse("report has no outcomes".into()))?
                .iter()
                .map(|o| o.get("pass").and_then(|p| p.as_bool()))
                .collect();
            let rerun = batch(&specs, 1)?;
            let fresh: Vec<Option<bool>> = rerun.outcomes.iter().map(|o| o.pass).collect();
            if fresh != recorded {
                return Err(Error::Integrity(
                    "replay of batch produced different pass decisions".into(),
                ));
            }
            println!("replay: batch decisions reproduced ({} jobs)", specs.len());
            Ok(0)
        }
        other => Err(Error::Parse(format!(
            "replay does not support {other:?} reports"
        ))),
    }
}
