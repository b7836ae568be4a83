//! Command-line front end of `resist`.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use newton_resist::criterion::{audit_body, check_cone, level_set, z0_plan, AuditReport, ConeAudit};
use newton_resist::geometry::{polygon_body, ConeSpec, ConvexBody, Profile};
use newton_resist::perturbation::{
    default_grid, expansion_coefficient, fit_coefficients, perturbed_resistance, resistance_variation, skeleton,
    verify_odd_cubic, PerturbationParams, SweepTolerance, FIT_EPS,
};
use newton_resist::resistance::{resistance, resistance_grid, Delta};
use newton_resist::solvers::reference::{E1_CORNER, E1_SLOPE, E_FINITE};
use newton_resist::solvers::{
    e1_reference_audit, e_body_reference_audit, footnote_arc_width, optimize_kfold, optimize_screwdriver,
    KfoldOptions, OptimizationReport,
};
use newton_resist::ResistError;

const SCHEMA: &str = "1";
const SUBCOMMANDS: [&str; 8] = ["eval", "perturb", "criterion", "levelsets", "optimize", "tables", "audit", "verify"];

#[derive(Parser, Debug)]
#[command(name = "resist", version, about = "Newton's minimal resistance problem on convex bodies over the unit disc")]
struct Cli {
    /// JSON file whose keys mirror the flags (plus "command"); flags given on
    /// the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resistance of a body with its per-part breakdown.
    Eval(EvalArgs),
    /// Resistance of the perturbed cone for a list of ε.
    Perturb(PerturbArgs),
    /// Non-optimality test of the conical parts of a body, or of one cone.
    Criterion(CriterionArgs),
    /// Level curves of Z₀^{-1/2} in plan coordinates.
    Levelsets(LevelsetArgs),
    /// Screwdriver or k-fold optimization.
    Optimize(OptimizeArgs),
    /// Optimized k-fold values with C/N flags over a grid of heights.
    Tables(TablesArgs),
    /// Audits of the published reference bodies.
    Audit(AuditArgs),
    /// Built-in verification suites; prints one PASS/FAIL line per check.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct HeightArgs {
    /// Regularization δ of the integrand 1/(|∇u|² + δ).
    #[arg(long)]
    delta: Option<f64>,
    /// Height M, used as δ = M⁻².
    #[arg(long = "M", value_name = "M")]
    height: Option<f64>,
    /// Limiting problem, δ = 0.
    #[arg(long)]
    limit: bool,
}

impl HeightArgs {
    fn delta(&self) -> anyhow::Result<Delta> {
        resolve_delta(self.delta, self.height, self.limit)
    }
}

fn resolve_delta(delta: Option<f64>, height: Option<f64>, limit: bool) -> anyhow::Result<Delta> {
    Ok(match (delta, height, limit) {
        (Some(d), None, false) => Delta::new(d)?,
        (None, Some(m), false) => Delta::from_height(m)?,
        (None, None, true) => Delta::LIMIT,
        _ => return Err(ResistError::InvalidInput("give exactly one of --delta, --M, --limit".into()).into()),
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Body JSON, inline or as a file path.
    #[arg(long)]
    body: String,
    #[command(flatten)]
    height: HeightArgs,
    /// Also evaluate the polar grid oracle with this resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Write the plan-view facet table to this CSV file.
    #[arg(long)]
    facets: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long)]
    x0: f64,
    #[arg(long)]
    y0: f64,
    /// Height fraction M₁ ∈ (0, 1) of the cone surface.
    #[arg(long)]
    m1: f64,
    #[command(flatten)]
    height: HeightArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02,0.01,0.005")]
    eps_list: Vec<f64>,
    /// Emit the plan-view skeleton of the perturbed body at this ε instead.
    #[arg(long)]
    skeleton: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CriterionArgs {
    /// Body JSON, inline or as a file path.
    #[arg(long, conflicts_with = "cone", required_unless_present = "cone")]
    body: Option<String>,
    /// A single cone `r0,phi0,z0,alpha,beta`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cone: Option<Vec<f64>>,
    #[command(flatten)]
    height: HeightArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LevelsetArgs {
    /// Heights of the level curves; `inf` gives the zero set of Z₀.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,inf")]
    heights: Vec<String>,
    /// Points per curve branch.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Screwdriver,
    Kfold,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Height M: δ = M⁻² for the screwdriver, the body height for k-fold.
    #[arg(long = "M", value_name = "M")]
    height: Option<f64>,
    /// Regularization δ (screwdriver only).
    #[arg(long, conflicts_with = "height")]
    delta: Option<f64>,
    /// Limiting problem, δ = 0 (screwdriver only).
    #[arg(long, conflicts_with_all = ["height", "delta"])]
    limit: bool,
    /// Symmetry order of the k-fold body.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Profile cells of the k-fold body.
    #[arg(long, default_value_t = 24)]
    knots: usize,
    #[arg(long)]
    max_iter: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct TablesArgs {
    /// Heights as `a:b` (step 0.1), `a:b:step` or a comma list.
    #[arg(long, default_value = "0.9:1.5")]
    rows: String,
    #[arg(long, value_delimiter = ',', default_value = "3,4")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 24)]
    knots: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Reference {
    E1,
    EFinite,
    Polygons,
    All,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, value_enum, default_value_t = Reference::All)]
    reference: Reference,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Perturbation,
    Levelsets,
    Radial,
    Screwdriver,
    Polygons,
    EBodies,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[command(flatten)]
    output: OutputArgs,
}

/// A numerical failure: reported with exit code 3.
#[derive(Debug)]
struct NumericalFailure(String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if cause.downcast_ref::<NumericalFailure>().is_some() {
            return 3;
        }
        if let Some(r) = cause.downcast_ref::<ResistError>() {
            return match r {
                ResistError::Numerical(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

/// Splices the flags of a `--config` file into the argument list. Flags on
/// the command line win over the file.
fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut explicit = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    let prog = it.next().unwrap_or_else(|| "resist".into());
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            config = Some(PathBuf::from(it.next().ok_or_else(|| anyhow!("--config needs a file"))?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            explicit.push(a);
        }
    }
    let Some(path) = config else {
        let mut out = vec![prog];
        out.extend(explicit);
        return Ok(out);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let map: Map<String, Value> =
        serde_json::from_str(&text).with_context(|| format!("config {} must be a JSON object", path.display()))?;
    let explicit_str: Vec<String> = explicit.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let has_command = explicit_str.iter().any(|s| SUBCOMMANDS.contains(&s.as_str()));
    let given = |flag: &str| explicit_str.iter().any(|s| s == flag || s.starts_with(&format!("{flag}=")));

    let mut out = vec![prog];
    let mut rest = explicit.into_iter();
    if has_command {
        // options before the subcommand stay in front
        for a in rest.by_ref() {
            let is_cmd = SUBCOMMANDS.contains(&a.to_string_lossy().as_ref());
            out.push(a);
            if is_cmd {
                break;
            }
        }
    } else {
        match map.get("command") {
            Some(Value::String(c)) => out.push(c.into()),
            _ => bail!("config {} needs a \"command\" entry", path.display()),
        }
    }
    for (key, value) in &map {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if given(&flag) {
            continue;
        }
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar_text).collect();
                out.push(format!("{flag}={}", parts.join(",")).into());
            }
            other => out.push(format!("{flag}={}", scalar_text(other)).into()),
        }
    }
    out.extend(rest);
    Ok(out)
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn execute(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Eval(a) => eval(a),
        Command::Perturb(a) => perturb(a),
        Command::Criterion(a) => criterion(a),
        Command::Levelsets(a) => levelsets(a),
        Command::Optimize(a) => optimize(a),
        Command::Tables(a) => tables(a),
        Command::Audit(a) => audit(a),
        Command::Verify(a) => verify(a),
    }
}

// ---------------------------------------------------------------- output

/// `x` rounded to 15 significant digits.
fn round15(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.14e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else if x == 0.0 {
        json!(0.0)
    } else if x.is_infinite() {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        json!(round15(x))
    }
}

fn fmt_num(x: f64) -> String {
    match num(x) {
        Value::String(s) => s,
        Value::Null => "nan".into(),
        v => v.to_string(),
    }
}

/// Rounds every float in a JSON tree to 15 significant digits.
fn tidy(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(tidy).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, tidy(v))).collect()),
        other => other,
    }
}

fn document(command: &str, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    if let Value::Object(b) = tidy(body) {
        m.extend(b);
    }
    Value::Object(m)
}

fn delta_fields(delta: Delta) -> Value {
    json!({
        "delta": num(delta.value()),
        "M": num(delta.height().unwrap_or(f64::INFINITY)),
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_json(out: &OutputArgs, doc: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    write_output(out.out.as_deref(), &text)
}

fn write_csv(out: &OutputArgs, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
    write_output(out.out.as_deref(), &String::from_utf8(bytes)?)
}

fn format_or(out: &OutputArgs, default: Format, allowed: &[Format]) -> anyhow::Result<Format> {
    let f = out.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(ResistError::InvalidInput(format!("format {f:?} is not available for this command")).into());
    }
    Ok(f)
}

fn load_body(src: &str) -> anyhow::Result<ConvexBody> {
    let text = if src.trim_start().starts_with('{') {
        src.to_string()
    } else {
        fs::read_to_string(src).with_context(|| format!("reading body {src}"))?
    };
    Ok(ConvexBody::from_json(&text)?)
}

// -------------------------------------------------------------- commands

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let delta = a.height.delta()?;
    let body = load_body(&a.body)?;
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Csv])?;
    let r = resistance(&body, delta)?;
    let grid = a.grid.map(|n| resistance_grid(&body, delta, n)).transpose()?;
    if let Some(path) = &a.facets {
        let f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        body.write_facets_csv(io::BufWriter::new(f))?;
    }
    // J of the body stretched to height M: J(M u) = J_M(u) / M²
    let stretched = delta.height().map(|m| r.total / (m * m));
    match fmt {
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = r
                .parts
                .iter()
                .map(|p| vec![p.id.clone(), kind_name(&p.kind), fmt_num(p.value)])
                .collect();
            rows.push(vec!["total".into(), String::new(), fmt_num(r.total)]);
            if let Some(g) = grid {
                rows.push(vec!["grid".into(), String::new(), fmt_num(g)]);
            }
            write_csv(&a.output, &["id", "kind", "value"], &rows)
        }
        _ => {
            let parts: Vec<Value> = r
                .parts
                .iter()
                .map(|p| json!({"id": p.id, "kind": kind_name(&p.kind), "value": num(p.value)}))
                .collect();
            let mut body_doc = json!({
                "height": body.height(),
                "total": num(r.total),
                "parts": parts,
            });
            if let Some(s) = stretched {
                body_doc["stretched_total"] = num(s);
            }
            if let Some(g) = grid {
                body_doc["grid"] = num(g);
                body_doc["grid_resolution"] = json!(a.grid);
            }
            write_json(&a.output, &document("eval", merge(delta_fields(delta), body_doc)))
        }
    }
}

fn kind_name(k: &newton_resist::resistance::PartKind) -> String {
    match serde_json::to_value(k) {
        Ok(Value::String(s)) => s,
        _ => format!("{k:?}"),
    }
}

fn perturb(a: PerturbArgs) -> anyhow::Result<()> {
    let delta = a.height.delta()?;
    let fmt = format_or(&a.output, Format::Csv, &[Format::Json, Format::Csv])?;
    if let Some(eps) = a.skeleton {
        let p = PerturbationParams::new(a.x0, a.y0, a.m1, eps, delta)?;
        let sk = skeleton(&p)?;
        let pos = |name: &str| sk.nodes.iter().find(|n| n.0 == name).map(|n| n.1).unwrap_or([f64::NAN; 2]);
        return match fmt {
            Format::Csv => {
                let mut rows: Vec<Vec<String>> = sk
                    .nodes
                    .iter()
                    .map(|(n, q)| vec!["node".into(), n.clone(), fmt_num(q[0]), fmt_num(q[1]), String::new(), String::new()])
                    .collect();
                for (from, to) in &sk.edges {
                    let (p, q) = (pos(from), pos(to));
                    rows.push(vec![
                        "edge".into(),
                        format!("{from}-{to}"),
                        fmt_num(p[0]),
                        fmt_num(p[1]),
                        fmt_num(q[0]),
                        fmt_num(q[1]),
                    ]);
                }
                write_csv(&a.output, &["element", "name", "x", "y", "x_end", "y_end"], &rows)
            }
            _ => {
                let nodes: Vec<Value> =
                    sk.nodes.iter().map(|(n, q)| json!({"name": n, "x": q[0], "y": q[1]})).collect();
                let doc = json!({"x0": a.x0, "y0": a.y0, "m1": a.m1, "eps": eps, "nodes": nodes, "edges": sk.edges});
                write_json(&a.output, &document("perturb", merge(delta_fields(delta), doc)))
            }
        };
    }
    let base = PerturbationParams::new(a.x0, a.y0, a.m1, 0.0, delta)?;
    let fit = fit_coefficients(&base, FIT_EPS)?;
    let closed = expansion_coefficient(a.x0, a.y0, a.m1, delta);
    let mut rows = Vec::new();
    for &eps in &a.eps_list {
        let p = base.with_eps(eps)?;
        let total = perturbed_resistance(&p)?.total;
        let var = resistance_variation(&p)?;
        rows.push((eps, total, var));
    }
    match fmt {
        Format::Csv => {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|&(e, t, v)| vec![fmt_num(e), fmt_num(t), fmt_num(v), fmt_num(fit.c3), fmt_num(closed)])
                .collect();
            write_csv(&a.output, &["eps", "resistance", "variation", "c3_fit", "c3_closed"], &rows)
        }
        _ => {
            let rows: Vec<Value> =
                rows.iter().map(|&(e, t, v)| json!({"eps": e, "resistance": t, "variation": v})).collect();
            let doc = json!({
                "x0": a.x0, "y0": a.y0, "m1": a.m1,
                "rows": rows,
                "fit": fit,
                "c3_closed": closed,
                "bracket": base.bracket(),
            });
            write_json(&a.output, &document("perturb", merge(delta_fields(delta), doc)))
        }
    }
}

fn criterion(a: CriterionArgs) -> anyhow::Result<()> {
    let delta = a.height.delta()?;
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Csv])?;
    let report = match (&a.body, &a.cone) {
        (Some(src), _) => audit_body(&load_body(src)?, delta),
        (None, Some(c)) => {
            if c.len() != 5 {
                bail!(ResistError::InvalidInput("--cone takes r0,phi0,z0,alpha,beta".into()));
            }
            let cone = ConeSpec::new(c[0], c[1], c[2], c[3], c[4])?;
            let result = check_cone(&cone, delta);
            AuditReport {
                flag_c: true,
                flag_n: result.is_non_optimal(),
                cones: vec![ConeAudit { cone, result }],
            }
        }
        (None, None) => bail!(ResistError::InvalidInput("give --body or --cone".into())),
    };
    match fmt {
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .cones
                .iter()
                .map(|c| {
                    vec![
                        fmt_num(c.cone.r0),
                        fmt_num(c.cone.phi0),
                        fmt_num(c.cone.z0),
                        fmt_num(c.cone.alpha),
                        fmt_num(c.cone.beta),
                        verdict_name(c),
                        c.result.witness_phi.map(fmt_num).unwrap_or_default(),
                        fmt_num(c.result.min_z0),
                        fmt_num(c.result.critical_mz0),
                    ]
                })
                .collect();
            write_csv(
                &a.output,
                &["r0", "phi0", "z0", "alpha", "beta", "verdict", "witness_phi", "min_z0", "critical_mz0"],
                &rows,
            )
        }
        _ => {
            let doc = json!({"flags": report.flags(), "cones": serde_json::to_value(&report.cones)?});
            write_json(&a.output, &document("criterion", merge(delta_fields(delta), doc)))
        }
    }
}

fn verdict_name(c: &ConeAudit) -> String {
    match serde_json::to_value(c.result.verdict) {
        Ok(Value::String(s)) => s,
        _ => format!("{:?}", c.result.verdict),
    }
}

fn parse_height(s: &str) -> anyhow::Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let h: f64 = t.parse().map_err(|_| ResistError::InvalidInput(format!("bad height {t:?}")))?;
    if !(h > 0.0) {
        return Err(ResistError::InvalidInput(format!("height {h} must be positive")).into());
    }
    Ok(h)
}

fn levelsets(a: LevelsetArgs) -> anyhow::Result<()> {
    let fmt = format_or(&a.output, Format::Csv, &[Format::Json, Format::Csv])?;
    if a.samples < 2 {
        bail!(ResistError::InvalidInput("--samples must be at least 2".into()));
    }
    let heights = a.heights.iter().map(|s| parse_height(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let curves: Vec<(f64, Vec<[f64; 2]>)> = heights.iter().map(|&h| (h, level_set(h, a.samples))).collect();
    match fmt {
        Format::Csv => {
            let mut rows = Vec::new();
            for (h, pts) in &curves {
                for (i, p) in pts.iter().enumerate() {
                    rows.push(vec![fmt_num(*h), i.to_string(), fmt_num(p[0]), fmt_num(p[1])]);
                }
            }
            write_csv(&a.output, &["height", "index", "x", "y"], &rows)
        }
        _ => {
            let cs: Vec<Value> = curves.iter().map(|(h, pts)| json!({"height": num(*h), "points": pts})).collect();
            write_json(&a.output, &document("levelsets", json!({"curves": cs})))
        }
    }
}

fn report_doc(r: &OptimizationReport) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(r)?)
}

fn optimize(a: OptimizeArgs) -> anyhow::Result<()> {
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Csv])?;
    let (report, extra) = match a.kind {
        Kind::Screwdriver => {
            let delta = resolve_delta(a.delta, a.height, a.limit)?;
            (optimize_screwdriver(delta)?, delta_fields(delta))
        }
        Kind::Kfold => {
            let m = match (a.height, a.delta, a.limit) {
                (Some(m), None, false) => m,
                _ => bail!(ResistError::InvalidInput("k-fold optimization needs --M (and no --delta/--limit)".into())),
            };
            let mut opts = KfoldOptions::default();
            if let Some(n) = a.max_iter {
                opts.max_iter = n;
            }
            let r = optimize_kfold(m, a.k, a.knots, opts)?;
            let extra = json!({"M": m, "k": a.k, "knots": a.knots, "scaled_value": num(m * m * r.value)});
            (r, extra)
        }
    };
    let kind = match a.kind {
        Kind::Screwdriver => "screwdriver",
        Kind::Kfold => "kfold",
    };
    match fmt {
        Format::Csv => {
            let rows: Vec<Vec<String>> =
                report.trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_num(*v)]).collect();
            write_csv(&a.output, &["step", "value"], &rows)?;
        }
        _ => {
            let doc = merge(merge(json!({"kind": kind}), extra), report_doc(&report)?);
            write_json(&a.output, &document("optimize", doc))?;
        }
    }
    if !report.converged {
        return Err(NumericalFailure(format!("{kind} optimization hit the iteration cap")).into());
    }
    Ok(())
}

fn parse_rows(spec: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || ResistError::InvalidInput(format!("bad --rows {spec:?}"));
    let nums = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let rows = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let (a, b) = (nums(parts[0])?, nums(parts[1])?);
        let step = match parts.len() {
            2 => 0.1,
            3 => nums(parts[2])?,
            _ => return Err(bad().into()),
        };
        if !(step > 0.0) || b < a {
            return Err(bad().into());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| round15(a + i as f64 * step)).collect()
    } else {
        spec.split(',').map(nums).collect::<Result<Vec<_>, _>>()?
    };
    if rows.is_empty() || rows.iter().any(|m| !(*m > 0.0)) {
        return Err(bad().into());
    }
    Ok(rows)
}

fn tables(a: TablesArgs) -> anyhow::Result<()> {
    let fmt = format_or(&a.output, Format::Csv, &[Format::Json, Format::Csv])?;
    let rows = parse_rows(&a.rows)?;
    let mut out = Vec::new();
    let mut all_converged = true;
    for &m in &rows {
        for &k in &a.k {
            let r = optimize_kfold(m, k, a.knots, KfoldOptions::default())?;
            all_converged &= r.converged;
            out.push((m, k, r));
        }
    }
    match fmt {
        Format::Csv => {
            let rows: Vec<Vec<String>> = out
                .iter()
                .map(|(m, k, r)| {
                    vec![
                        fmt_num(*m),
                        k.to_string(),
                        fmt_num(r.value),
                        fmt_num(m * m * r.value),
                        r.flags.clone(),
                        r.converged.to_string(),
                        r.iterations.to_string(),
                    ]
                })
                .collect();
            write_csv(&a.output, &["M", "k", "J", "J_M", "flags", "converged", "iterations"], &rows)?;
        }
        _ => {
            let entries: Vec<Value> = out
                .iter()
                .map(|(m, k, r)| {
                    json!({"M": m, "k": k, "J": r.value, "J_M": m * m * r.value, "flags": r.flags,
                           "converged": r.converged, "iterations": r.iterations})
                })
                .collect();
            write_json(&a.output, &document("tables", json!({"knots": a.knots, "entries": entries})))?;
        }
    }
    if !all_converged {
        return Err(NumericalFailure("some table entries hit the iteration cap".into()).into());
    }
    Ok(())
}

struct AuditRow {
    reference: String,
    parameters: String,
    verdict: String,
    min_z0: f64,
    critical_mz0: f64,
}

fn reference_audits(which: Reference) -> anyhow::Result<Vec<AuditRow>> {
    let mut rows = Vec::new();
    let verdict = |non_opt: bool| if non_opt { "NON_OPTIMAL" } else { "INCONCLUSIVE" }.to_string();
    if matches!(which, Reference::E1 | Reference::All) {
        let r = e1_reference_audit()?;
        rows.push(AuditRow {
            reference: "e1".into(),
            parameters: format!("r0={E1_CORNER};slope={E1_SLOPE};delta=0"),
            verdict: verdict(r.is_non_optimal()),
            min_z0: r.min_z0,
            critical_mz0: r.critical_mz0,
        });
    }
    if matches!(which, Reference::EFinite | Reference::All) {
        for (m, eps) in E_FINITE {
            let r = e_body_reference_audit(m, eps, E1_CORNER)?;
            let regenerated = footnote_arc_width(m, E1_SLOPE, E1_CORNER);
            rows.push(AuditRow {
                reference: "e_finite".into(),
                parameters: format!("M={m};eps={eps};eps_formula={}", fmt_num(regenerated)),
                verdict: verdict(r.is_non_optimal()),
                min_z0: r.min_z0,
                critical_mz0: r.critical_mz0,
            });
        }
    }
    if matches!(which, Reference::Polygons | Reference::All) {
        let unit = Delta::new(1.0)?;
        for k in 2..=8 {
            for rho in [0.2, 0.5, 0.8] {
                for m in [0.5, 1.0, 2.0] {
                    let rep = audit_body(&polygon_body(k, rho, m)?, unit);
                    let worst = rep.cones.iter().map(|c| c.result.min_z0).fold(f64::INFINITY, f64::min);
                    let crit = rep.cones.iter().map(|c| c.result.critical_mz0).fold(0.0, f64::max);
                    rows.push(AuditRow {
                        reference: "polygon".into(),
                        parameters: format!("k={k};rho={rho};M={m};flags={}", rep.flags()),
                        verdict: verdict(rep.flag_n),
                        min_z0: worst,
                        critical_mz0: crit,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn audit(a: AuditArgs) -> anyhow::Result<()> {
    let fmt = format_or(&a.output, Format::Json, &[Format::Json, Format::Csv])?;
    let rows = reference_audits(a.reference)?;
    match fmt {
        Format::Csv => {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.reference.clone(),
                        r.parameters.clone(),
                        r.verdict.clone(),
                        fmt_num(r.min_z0),
                        fmt_num(r.critical_mz0),
                    ]
                })
                .collect();
            write_csv(&a.output, &["reference", "parameters", "verdict", "min_z0", "critical_mz0"], &rows)
        }
        _ => {
            let entries: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({"reference": r.reference, "parameters": r.parameters, "verdict": r.verdict,
                           "min_z0": num(r.min_z0), "critical_mz0": num(r.critical_mz0)})
                })
                .collect();
            write_json(&a.output, &document("audit", json!({"entries": entries})))
        }
    }
}

// ----------------------------------------------------------------- verify

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.to_string(), pass, detail }
}

fn suite_perturbation() -> anyhow::Result<Vec<Check>> {
    let rep = verify_odd_cubic(&default_grid(), SweepTolerance::default())?;
    let worst = rep.checks.iter().filter_map(|c| c.c3_rel_err).fold(0.0, f64::max);
    let low = rep.checks.iter().map(|c| c.fit.c1.abs().max(c.fit.c2.abs())).fold(0.0, f64::max);
    let signs = rep.checks.iter().all(|c| c.sign_ok != Some(false));
    Ok(vec![
        check(
            "perturbation.cubic",
            rep.checks.iter().all(|c| c.pass),
            format!("{} points, worst c3 rel err {worst:.3e}, max |c1|,|c2| {low:.3e}", rep.checks.len()),
        ),
        check("perturbation.sign", signs && rep.m1_independent, format!("M1-independent: {}", rep.m1_independent)),
    ])
}

fn suite_levelsets() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    for h in [0.25, 0.5, 1.0, f64::INFINITY] {
        for p in level_set(h, 400) {
            let err = if h.is_infinite() {
                (p[1].abs() - (1.0 - p[0]) / 3f64.sqrt()).abs()
            } else {
                (z0_plan(p[0], p[1]).powf(-0.5) - h).abs()
            };
            worst = worst.max(err);
        }
    }
    vec![check("levelsets", worst <= 1e-9, format!("max deviation {worst:.3e}"))]
}

fn suite_radial() -> anyhow::Result<Vec<Check>> {
    let exact = 27.0 * std::f64::consts::PI / 32.0;
    let body = ConvexBody::from_spec(newton_resist::geometry::BodySpec::Radial { profile: Profile::power(4.0 / 3.0, 1.0)? })?;
    let closed = resistance(&body, Delta::LIMIT)?.total;
    let grid = resistance_grid(&body, Delta::LIMIT, 2048)?;
    Ok(vec![
        check("radial.closed_form", (closed - exact).abs() <= 1e-9, format!("{closed:.15} vs 27pi/32")),
        check("radial.grid", (grid - exact).abs() <= 1e-6, format!("n=2048: {grid:.12}")),
    ])
}

fn suite_screwdriver() -> anyhow::Result<Vec<Check>> {
    let r = optimize_screwdriver(Delta::LIMIT)?;
    let a = r.argument[0];
    let ok = (a - 0.55527).abs() <= 1e-3 && (r.value - 2.145).abs() <= 1e-3 && r.value < 27.0 * std::f64::consts::PI / 32.0;
    Ok(vec![check("screwdriver", ok, format!("a={a:.6} J={:.6}", r.value))])
}

fn suite_polygons() -> anyhow::Result<Vec<Check>> {
    let rows = reference_audits(Reference::Polygons)?;
    let bad: Vec<&str> = rows.iter().filter(|r| r.verdict != "NON_OPTIMAL").map(|r| r.parameters.as_str()).collect();
    Ok(vec![check("polygons", bad.is_empty(), format!("{} bodies, {} without N", rows.len(), bad.len()))])
}

fn suite_ebodies() -> anyhow::Result<Vec<Check>> {
    let mut rows = reference_audits(Reference::E1)?;
    rows.extend(reference_audits(Reference::EFinite)?);
    Ok(rows
        .iter()
        .map(|r| check(&format!("e_bodies.{}", r.parameters), r.verdict == "NON_OPTIMAL", format!("min Z0 {:.6}", r.min_z0)))
        .collect())
}

fn verify(a: VerifyArgs) -> anyhow::Result<()> {
    let fmt = format_or(&a.output, Format::Text, &[Format::Text, Format::Json])?;
    let mut checks = Vec::new();
    let all = a.suite == Suite::All;
    if all || a.suite == Suite::Perturbation {
        checks.extend(suite_perturbation()?);
    }
    if all || a.suite == Suite::Levelsets {
        checks.extend(suite_levelsets());
    }
    if all || a.suite == Suite::Radial {
        checks.extend(suite_radial()?);
    }
    if all || a.suite == Suite::Screwdriver {
        checks.extend(suite_screwdriver()?);
    }
    if all || a.suite == Suite::Polygons {
        checks.extend(suite_polygons()?);
    }
    if all || a.suite == Suite::EBodies {
        checks.extend(suite_ebodies()?);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    match fmt {
        Format::Json => {
            let cs: Vec<Value> =
                checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect();
            write_json(&a.output, &document("verify", json!({"checks": cs, "passed": passed, "total": checks.len()})))?;
        }
        _ => {
            let mut text = String::new();
            for c in &checks {
                text.push_str(&format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            text.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
            write_output(a.output.out.as_deref(), &text)?;
        }
    }
    if passed < checks.len() {
        return Err(NumericalFailure(format!("{} checks failed", checks.len() - passed)).into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(round15(2.0 / 3.0).to_string(), "0.666666666666667");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(0.5), "0.5");
    }

    #[test]
    fn rows_ranges() {
        assert_eq!(parse_rows("0.9:1.2").unwrap(), vec![0.9, 1.0, 1.1, 1.2]);
        assert_eq!(parse_rows("1.0,1.1").unwrap(), vec![1.0, 1.1]);
        assert!(parse_rows("1.2:0.9").is_err());
    }

    #[test]
    fn config_flags_are_spliced_in() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"command": "levelsets", "heights": ["0.5", "inf"], "samples": 10}"#).unwrap();
        let args: Vec<OsString> =
            ["resist", "--config", path.to_str().unwrap(), "--samples", "20"].iter().map(OsString::from).collect();
        let out: Vec<String> = expand_config(args).unwrap().iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(out, vec!["resist", "levelsets", "--heights=0.5,inf", "--samples", "20"]);
    }

    #[test]
    fn delta_flags_are_exclusive() {
        assert_eq!(resolve_delta(None, Some(2.0), false).unwrap().value(), 0.25);
        assert!(resolve_delta(Some(1.0), Some(1.0), false).is_err());
        assert!(resolve_delta(None, None, false).is_err());
    }
}
