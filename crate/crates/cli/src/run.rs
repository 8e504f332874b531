use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use qcgraft::extremal::{excised_ratio, modulus, solve, GridDomain, Shape, SolverOptions};
use qcgraft::graft::compare_graftings;
use qcgraft::hyp::ThinRectangle;
use qcgraft::interp::{interpolate_identity, interpolation_k, truncate_and_glue};
use qcgraft::maps::{scan, sector_to_rect, straighten_horocyclic, Domain, PlanarC1Map, Side, DEFAULT_FD_STEP};
use qcgraft::tracks::{lattice_round, mul_int, multicurve_from_weights, switch_matrix, TrainTrack};
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{self, DilatationDoc, ExciseDoc, GraftDoc, InterpDoc, MapSpec, ModulusDoc, SchemaError, TrackDoc};

#[derive(Debug)]
pub enum RunError {
    Schema(String),
    Numeric(qcgraft::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) | RunError::Numeric(qcgraft::Error::InvalidInput(_)) => 2,
            RunError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Schema(m) => write!(f, "schema violation: {m}"),
            RunError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<qcgraft::Error> for RunError {
    fn from(e: qcgraft::Error) -> Self {
        RunError::Numeric(e)
    }
}

impl From<SchemaError> for RunError {
    fn from(e: SchemaError) -> Self {
        RunError::Schema(e.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value <= bound }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: f64::from(u8::from(ok)), bound: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub subcommand: String,
    pub inputs: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub headline: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_clock_s: f64,
}

pub struct Outcome {
    pub report: RunReport,
    /// CSV body without the timestamp header.
    pub csv: String,
    pub svg: Option<String>,
}

pub struct Budget {
    pub grid: Option<usize>,
    pub svg: bool,
    pub overrides: BTreeMap<String, f64>,
}

struct Ctx {
    tol: BTreeMap<String, f64>,
    headline: BTreeMap<String, Value>,
    checks: Vec<Check>,
}

impl Ctx {
    fn tol(&self, key: &str, default: f64) -> f64 {
        self.tol.get(key).copied().unwrap_or(default)
    }

    fn head(&mut self, key: &str, v: impl Serialize) {
        self.headline.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

type Body = (String, Option<String>);

pub fn run(subcommand: &str, text: &str, budget: &Budget) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let (raw, ctx, (csv, svg)) = match subcommand {
        "dilatation" => execute(text, subcommand, budget, dilatation)?,
        "modulus" => execute(text, subcommand, budget, modulus_run)?,
        "excise-scan" => execute(text, subcommand, budget, excise)?,
        "track-round" => execute(text, subcommand, budget, |c, d, _| track(c, d))?,
        "graft-compare" => execute(text, subcommand, budget, |c, d, _| graft(c, d))?,
        "interp-demo" => execute(text, subcommand, budget, interp)?,
        other => return Err(RunError::Schema(format!("unknown subcommand {other}"))),
    };
    let pass = ctx.checks.iter().all(|c| c.pass);
    let report = RunReport {
        subcommand: subcommand.into(),
        inputs: raw,
        tolerances: ctx.tol,
        headline: ctx.headline,
        checks: ctx.checks,
        pass,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome { report, csv, svg })
}

fn execute<T: serde::de::DeserializeOwned>(
    text: &str,
    sub: &str,
    budget: &Budget,
    body: impl FnOnce(&mut Ctx, T, &Budget) -> Result<Body, RunError>,
) -> Result<(Value, Ctx, Body), RunError> {
    let (env, raw) = scenario::parse::<T>(text, sub)?;
    let mut tol = env.tolerances;
    tol.extend(budget.overrides.iter().map(|(k, v)| (k.clone(), *v)));
    let mut ctx = Ctx { tol, headline: BTreeMap::new(), checks: Vec::new() };
    let out = body(&mut ctx, env.payload, budget)?;
    Ok((raw, ctx, out))
}

fn build_map(spec: &MapSpec) -> Result<PlanarC1Map, RunError> {
    Ok(match *spec {
        MapSpec::Horocyclic { x0, x1, y_low, y_high } => {
            straighten_horocyclic(&ThinRectangle::vertical(x0, x1, y_low, y_high)?, Side::Left)?
        }
        MapSpec::Affine { m, t, domain } => {
            PlanarC1Map::affine(Domain::rect(domain[0], domain[1], domain[2], domain[3]), m, t)
        }
        MapSpec::SectorToRect { a, b, alpha } => sector_to_rect(a, b, alpha)?,
    })
}

fn dilatation(ctx: &mut Ctx, doc: DilatationDoc, budget: &Budget) -> Result<Body, RunError> {
    let mut map = build_map(&doc.map)?;
    if doc.finite_differences {
        map = map.with_finite_differences(ctx.tol("fd_step", DEFAULT_FD_STEP));
    }
    let [nu, nv] = budget.grid.map_or(doc.samples, |g| [g, g]);
    let report = scan(&map, nu, nv)?;
    ctx.head("k_max", report.k_max);
    ctx.head("mu_max", report.mu_max());
    ctx.head("argmax", [report.argmax.re, report.argmax.im]);
    ctx.head("grid", &report.grid);
    if let Some(&bound) = ctx.tol.get("k_max") {
        ctx.checks.push(Check::at_most("dilatation bounded by declared K", report.k_max, bound));
    }
    if let (MapSpec::Horocyclic { x0, x1, y_low, .. }, Some(&c)) = (&doc.map, ctx.tol.get("k_slope")) {
        let width = (x1 - x0) / y_low;
        ctx.head("fitted_constant", (report.k_max - 1.0) / width);
        ctx.checks.push(Check::at_most("thin rectangle straightening K - 1 <= c * width", report.k_max - 1.0, c * width));
    }
    if let MapSpec::SectorToRect { .. } = doc.map {
        let tol = ctx.tol("mu", 1e-12);
        ctx.checks.push(Check::at_most("sector map is conformal", report.mu_max(), tol));
    }
    Ok((report.to_csv(), None))
}

fn with_grid(d: &GridDomain, budget: &Budget) -> GridDomain {
    let mut d = d.clone();
    if let Some(g) = budget.grid {
        d.resolution = g;
    }
    d
}

fn modulus_run(ctx: &mut Ctx, doc: ModulusDoc, budget: &Budget) -> Result<Body, RunError> {
    let d = with_grid(&doc.domain, budget);
    let m = modulus(&d)?;
    ctx.head("modulus", m.modulus);
    ctx.head("coarse", m.coarse);
    ctx.head("fine", m.fine);
    ctx.head("residual", m.residual);
    let mut csv = String::from("domain,modulus,coarse,fine,residual,iterations\n");
    let _ = writeln!(csv, "given,{:.12e},{:.12e},{:.12e},{:.3e},{}", m.modulus, m.coarse, m.fine, m.residual, m.iterations);
    if let Some(expected) = doc.expected {
        let rel = (m.modulus - expected).abs() / expected;
        ctx.checks.push(Check::at_most("modulus matches expected value", rel, ctx.tol("modulus_rel", 5e-3)));
    }
    if matches!(d.shape, Shape::Polygon { .. }) && d.excision.is_none() {
        if let Ok(conj) = d.conjugate() {
            let mc = modulus(&conj)?;
            let _ = writeln!(csv, "conjugate,{:.12e},{:.12e},{:.12e},{:.3e},{}", mc.modulus, mc.coarse, mc.fine, mc.residual, mc.iterations);
            let product = m.modulus * mc.modulus;
            ctx.head("reciprocity_product", product);
            ctx.checks.push(Check::at_most("reciprocity of conjugate moduli", (product - 1.0).abs(), ctx.tol("reciprocity", 1e-2)));
        }
    }
    let svg = if budget.svg { Some(solve(&d, d.resolution, SolverOptions::default())?.to_svg(600)) } else { None };
    Ok((csv, svg))
}

fn excise(ctx: &mut Ctx, doc: ExciseDoc, budget: &Budget) -> Result<Body, RunError> {
    let d = with_grid(&doc.domain, budget);
    let mut radii = doc.radii.clone();
    radii.sort_by(f64::total_cmp);
    let mut csv = String::from("radius,ratio,fitted_constant\n");
    let mut ratios = Vec::new();
    let mut fitted = Vec::new();
    for &r in &radii {
        let e = excised_ratio(&d, doc.center, r)?;
        let c = (e.ratio - 1.0) / r;
        let _ = writeln!(csv, "{r},{:.12e},{:.12e}", e.ratio, c);
        ratios.push(e.ratio);
        fitted.push(c);
    }
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0] - ctx.tol("monotone_slack", 1e-9));
    ctx.checks.push(Check::holds("excision ratio nondecreasing in radius", monotone));
    ctx.checks.push(Check::holds("excision ratio at least one", ratios.iter().all(|&q| q >= 1.0 - 1e-9)));
    let cmax = fitted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cmin = fitted.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if cmax > 0.0 { (cmax - cmin) / cmax } else { 0.0 };
    ctx.head("ratios", &ratios);
    ctx.head("fitted_constants", &fitted);
    ctx.head("fitted_constant", cmax);
    ctx.checks.push(Check::at_most("fitted linear constant stable across radii", spread, ctx.tol("stability", 0.3)));
    Ok((csv, None))
}

fn track(ctx: &mut Ctx, doc: TrackDoc) -> Result<Body, RunError> {
    let tt = TrainTrack::new(doc.branches, doc.switches)?;
    let m = switch_matrix(&tt);
    let r = lattice_round(&m, &doc.weights, doc.t)?;
    ctx.head("k", &r.k);
    ctx.head("covering_bound", r.bound_c);
    ctx.head("threshold", r.threshold);
    ctx.head("max_deviation", r.max_deviation);
    if tt.is_closed() {
        if let Ok(mc) = multicurve_from_weights(&tt, &r.k) {
            ctx.head("components", mc.count());
        }
    }
    ctx.checks.push(Check::holds("integer weights satisfy switch conditions", mul_int(&m, &r.k).iter().all(|&v| v == 0)));
    ctx.checks.push(Check::holds("integer weights positive", r.k.iter().all(|&v| v > 0)));
    ctx.checks.push(Check::at_most("deviation within covering bound", r.max_deviation, r.bound_c));
    if let Some(expected) = &doc.expected_k {
        ctx.checks.push(Check::holds("integer weights match expected", *expected == r.k));
    }
    let mut csv = String::from("branch,weight,scaled,k,deviation\n");
    for (i, (&x, &k)) in doc.weights.iter().zip(&r.k).enumerate() {
        let tx = doc.t * x;
        let _ = writeln!(csv, "{i},{x:.12e},{tx:.12e},{k},{:.12e}", (tx - k as f64).abs());
    }
    Ok((csv, None))
}

fn graft(ctx: &mut Ctx, doc: GraftDoc) -> Result<Body, RunError> {
    let tt = TrainTrack::new(doc.branches, doc.switches)?;
    let m = switch_matrix(&tt);
    let opts = doc.options.unwrap_or_default();
    let mut ts = doc.t_values.clone();
    ts.sort_by(f64::total_cmp);
    let mut csv = String::from("t,branch,k,scaled_weight,k_f,k_h,k_g,product,edge_eps,edge_c\n");
    let mut kmax = Vec::new();
    let mut bounds = Vec::new();
    for &t in &ts {
        let r = lattice_round(&m, &doc.weights, t)?;
        let rep = compare_graftings(&tt, &doc.weights, t, &r.k, opts)?;
        for b in &rep.branches {
            let _ = writeln!(
                csv,
                "{t},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e}",
                b.branch, b.k, b.scaled_weight, b.k_f, b.k_h, b.k_g, b.product, b.edge_eps, b.edge_c
            );
        }
        kmax.push(rep.k_max);
        bounds.push(rep.distance_bound);
    }
    ctx.head("t", &ts);
    ctx.head("k_max", &kmax);
    ctx.head("distance_bound", &bounds);
    ctx.checks.push(Check::holds("composite K - 1 decreasing in t", kmax.windows(2).all(|w| w[1] < w[0])));
    if let Some(&last) = bounds.last() {
        ctx.checks.push(Check::at_most("distance bound at largest t", last, ctx.tol("distance", 0.05)));
    }
    Ok((csv, None))
}

fn interp(ctx: &mut Ctx, doc: InterpDoc, budget: &Budget) -> Result<Body, RunError> {
    let mut ts = doc.t_values.clone();
    ts.sort_by(f64::total_cmp);
    let mut csv = String::from("t,end,s,h1,k_max\n");
    let mut kmax = Vec::new();
    for &t in &ts {
        let g = truncate_and_glue(&doc.ends, t)?;
        for (i, e) in g.ends.iter().enumerate() {
            let _ = writeln!(csv, "{t},{i},{:.12e},{:.12e},{:.12e}", e.s, e.h1, e.k_max);
        }
        kmax.push(g.k_max);
    }
    ctx.head("t", &ts);
    ctx.head("k_max", &kmax);
    ctx.head("distance_bound", kmax.iter().map(|k| 0.5 * k.ln()).collect::<Vec<_>>());
    ctx.checks.push(Check::holds("glued K strictly decreasing in t", kmax.windows(2).all(|w| w[1] < w[0])));
    if let (Some(series), Some(eps)) = (&doc.series, doc.eps) {
        let n = budget.grid.unwrap_or(96);
        let k = interpolation_k(series, eps, n, 2 * n)?;
        ctx.head("disk_interpolation_k", k);
        ctx.head("fitted_constant", (k - 1.0) / eps);
        ctx.checks.push(Check::at_most("disk interpolation K - 1 <= c * eps", k - 1.0, ctx.tol("interp_slope", 3.0) * eps));
        let g = interpolate_identity(series, eps)?;
        let z = Complex64::new(0.5 * eps, 0.25 * eps);
        ctx.checks.push(Check::at_most("interpolant is the identity near the origin", (g.eval(z) - z).norm(), 1e-12));
    }
    Ok((csv, None))
}

/// Prepends the timestamp line so that the body stays byte-identical across runs.
pub fn csv_with_header(body: &str, stamp: &str) -> String {
    format!("# generated {stamp}\n{body}")
}

pub fn report_json(report: &RunReport, stamp: &str) -> Value {
    let mut v = serde_json::to_value(report).unwrap_or(Value::Null);
    v["generated"] = json!(stamp);
    v
}
