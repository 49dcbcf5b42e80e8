//! `lkq` subcommands. Reports go to stdout as JSON (CSV for `scalar`);
//! exit codes are 0 success, 1 negative verdict, 2 input error, 3 numerical
//! failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use lkq_core::calabi::{csc_certify, HfkgData};
use lkq_core::curvature::{abreu_scalar_exact, affine_fit, curvature_sample, futaki_from_values, quadrature_rule};
use lkq_core::levi::{is_positive_pair, moment, setup_from_polytope};
use lkq_core::polytope::{detect_projective_cube, detect_projective_cube_exact, is_simple, matches_product_of_simplices, stabilizer_order};
use lkq_core::potential::{guillemin_potential, levi_kahler_potential, SymplecticPotential, BD_REL};
use lkq_core::quad::{classify, extremal_check, AmbitoricTag, QuadData, EXTREMAL_TOL};
use lkq_core::scalar::Scalar;
use lkq_core::sphere_lab::{image_report, sample, COVERAGE_MIN};
use lkq_core::{AffineFunction, Error, LabelledPolytope};
use nalgebra::DMatrix;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::document::{DocumentError, PolytopeDocument};
use crate::numbers::{format_rational, parse_list, parse_rational};

const CHART_HELP: &str = "\
Chart convention: a facet label is L(μ) = a0 + ⟨a, μ⟩ with the constant term
first, on the affine chart ℝ^m. Polytope files list facets as
{a0, a, group, index} and groups as {id, size}; numbers are JSON decimals or
exact strings \"p/q\". Affine arguments (--w, --h) are comma lists a0,a1,…,am.

Exit codes: 0 success, 1 negative verdict, 2 input error, 3 numerical failure.
LKQ_SEED overrides the default seed 0.";

#[derive(Parser, Debug)]
#[command(name = "lkq", version, about = "Levi–Kähler quotients of products of spheres", after_long_help = CHART_HELP)]
pub struct Cli {
    /// Worker threads for sampling sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Random seed (default: $LKQ_SEED, else 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simplicity, product-of-simplices combinatorics, projective cube, positivity.
    Check { file: PathBuf },
    /// G, ∇G, Hess G and H = (Hess G)^{-1} at a point.
    Potential {
        file: PathBuf,
        #[arg(long)]
        guillemin: bool,
        /// Point μ as a comma list.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// CSV of μ, s (and s_wp with --w) on an interior grid.
    Scalar {
        file: PathBuf,
        #[arg(long)]
        grid: usize,
        /// `auto` (projective-cube weight) or a0,a1,…
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        /// `auto` (m + 2) or a number.
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        guillemin: bool,
    },
    /// Affine fit of s (or s_wp with --w) and the extremal affine function.
    Extremal {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long)]
        guillemin: bool,
    },
    /// Ambitoric quadrilateral from C = [[α, γ], [β, δ]] and c.
    Quad {
        /// α,γ,β,δ
        #[arg(long = "C", allow_hyphen_values = true)]
        c_mat: String,
        /// c1,c2
        #[arg(long = "c")]
        c: String,
    },
    /// Certify the CSC metric on the S⁵ × S³ family.
    CalabiCsc {
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        /// Defaults to the value solving the condition for s.
        #[arg(long, conflicts_with = "s")]
        c: Option<String>,
        /// Base scalar curvature (default 4).
        #[arg(long)]
        s: Option<String>,
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
    /// Moment-image containment and coverage from sampled σ.
    Sample {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Generalized Futaki invariant of h.
    Futaki {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 10_000)]
        n_quad: usize,
        #[arg(long)]
        guillemin: bool,
    },
    /// Order of the orbifold structure group along a face.
    Stab {
        file: PathBuf,
        /// Facet indices meeting in the face.
        #[arg(long, value_delimiter = ',')]
        face: Vec<usize>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, kind: "InputError".into(), message: message.into() }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    use Error::*;
    match e {
        NotPositivePair
        | IdentityFailure(_)
        | SignFailure(_)
        | ConditionFailure(_)
        | NonConstantScalar(_)
        | ContainmentFailure(_)
        | CoverageFailure(_) => 1,
        RankDeficient | SingularSystem | Inconsistent(_) | SelfCheckFailure(_) | BoundaryProximity | IllConditioned(_)
        | DegenerateSampleSet | QuadratureFailure(_) | SingularRestriction | NonpositiveWeight => 3,
        _ => 2,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let dbg = format!("{e:?}");
        let kind = dbg.split(['(', ' ']).next().unwrap_or("Error").to_string();
        Self { code: exit_code(&e), kind, message: e.to_string() }
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Polytope(e) => e.into(),
            e => CliError::input(e.to_string()),
        }
    }
}

enum Output {
    Json(Value),
    /// A report whose verdict is negative (exit 1).
    Negative(Value),
    Csv(String),
}

type Res = Result<Output, CliError>;

/// Runs the command line, writing to `out` and `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => match std::env::var("LKQ_SEED") {
            Ok(v) => match v.trim().parse() {
                Ok(s) => s,
                Err(_) => {
                    let _ = writeln!(err, "LKQ_SEED is not an unsigned integer: {v:?}");
                    return 2;
                }
            },
            Err(_) => 0,
        },
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "cannot start thread pool: {e}");
            return 2;
        }
    };
    let result = pool.install(|| dispatch(&cli.command, seed));
    match result {
        Ok(Output::Json(v)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
            0
        }
        Ok(Output::Negative(v)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
            1
        }
        Ok(Output::Csv(s)) => {
            let _ = write!(out, "{s}");
            0
        }
        Err(e) => {
            let v = json!({ "ok": false, "error": e.kind, "message": e.message });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
            let _ = writeln!(err, "lkq: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cmd: &Command, seed: u64) -> Res {
    match cmd {
        Command::Check { file } => check(&load(file)?, seed),
        Command::Potential { file, guillemin, at } => potential_at(&load(file)?, *guillemin, at),
        Command::Scalar { file, grid, w, p, guillemin } => scalar_csv(&load(file)?, *grid, w.as_deref(), p.as_deref(), *guillemin),
        Command::Extremal { file, w, p, grid, guillemin } => extremal(&load(file)?, *grid, w.as_deref(), p.as_deref(), *guillemin),
        Command::Quad { c_mat, c } => quad(c_mat, c),
        Command::CalabiCsc { beta, eta, c, s, grid } => calabi_csc(beta, eta, c.as_deref(), s.as_deref(), *grid),
        Command::Sample { file, n } => sample_images(&load(file)?, *n, seed),
        Command::Futaki { file, w, p, h, n_quad, guillemin } => futaki_cmd(&load(file)?, w, p, h, *n_quad, *guillemin),
        Command::Stab { file, face } => Ok(Output::Json(json!({ "face": face, "order": stabilizer_order(&load(file)?, face)? }))),
    }
}

fn load(path: &PathBuf) -> Result<LabelledPolytope, CliError> {
    Ok(PolytopeDocument::read(path)?.to_polytope()?)
}

fn q(s: &str) -> Result<BigRational, CliError> {
    parse_rational(s).map_err(CliError::input)
}

fn qs(s: &str) -> Result<Vec<BigRational>, CliError> {
    parse_list(s).map_err(CliError::input)
}

fn f64s(s: &str) -> Result<Vec<f64>, CliError> {
    Ok(qs(s)?.iter().map(to_f64).collect())
}

fn to_f64(x: &BigRational) -> f64 {
    Scalar::to_f64(x)
}

fn affine_json(f: &AffineFunction) -> Value {
    json!({ "a0": f.a0, "a": f.a })
}

fn exact_affine_json(f: &AffineFunction<BigRational>) -> Value {
    json!({ "a0": format_rational(&f.a0), "a": f.a.iter().map(format_rational).collect::<Vec<_>>() })
}

fn grouping(p: &LabelledPolytope) -> Result<&lkq_core::Grouping, CliError> {
    p.grouping().ok_or_else(|| CliError::input("polytope file has no groups"))
}

fn potential_of(p: &LabelledPolytope, guillemin: bool) -> Result<SymplecticPotential, CliError> {
    Ok(if guillemin { guillemin_potential(p) } else { levi_kahler_potential(p, grouping(p)?)? })
}

/// `--w`: `auto` uses the projective-cube weight and fails when there is none.
fn weight(p: &LabelledPolytope, w: &str) -> Result<AffineFunction, CliError> {
    if w == "auto" {
        return detect_projective_cube(p, grouping(p)?)?.ok_or_else(|| CliError::input("--w auto: polytope is not a projective cube"));
    }
    let v = f64s(w)?;
    if v.len() != p.dim() + 1 {
        return Err(CliError::input(format!("--w needs {} coefficients", p.dim() + 1)));
    }
    Ok(AffineFunction::from_vector(&v))
}

/// `--p`: `auto` is m + 2.
fn conformal_dim(p: &LabelledPolytope, s: Option<&str>) -> Result<f64, CliError> {
    match s {
        None | Some("auto") => Ok((p.dim() + 2) as f64),
        Some(x) => Ok(to_f64(&q(x)?)),
    }
}

fn check(p: &LabelledPolytope, seed: u64) -> Res {
    let g = grouping(p)?;
    let simple = is_simple(p)?;
    let product = matches_product_of_simplices(p, g)?;
    let cube = match detect_projective_cube_exact(p, g) {
        Err(Error::NotCuboid) => None,
        r => r?,
    };
    let setup = setup_from_polytope(p, g)?;
    let pos = is_positive_pair(&setup, p, g, 1000, seed)?;
    let report = json!({
        "dim": p.dim(),
        "facets": p.n_facets(),
        "simple": simple,
        "product_of_simplices": product,
        "projective_cube": cube.is_some(),
        "w": cube.as_ref().map(exact_affine_json),
        "positive_pair": pos.combinatorial && pos.stochastic,
        "min_chi": if pos.min_chi.is_finite() { json!(pos.min_chi) } else { Value::Null },
    });
    Ok(if simple && product && pos.stochastic { Output::Json(report) } else { Output::Negative(report) })
}

fn potential_at(p: &LabelledPolytope, guillemin: bool, at: &str) -> Res {
    let mu = f64s(at)?;
    if mu.len() != p.dim() {
        return Err(CliError::input(format!("--at needs {} coordinates", p.dim())));
    }
    let g = potential_of(p, guillemin)?;
    let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect() };
    Ok(Output::Json(json!({
        "mu": mu,
        "potential": if guillemin { "guillemin" } else { "levi-kahler" },
        "G": g.eval(&mu)?,
        "grad": g.grad(&mu)?.iter().copied().collect::<Vec<f64>>(),
        "hess": rows(&g.hess(&mu)?),
        "H": rows(&g.metric_h(&mu)?),
    })))
}

/// Cell centres of a `k^m` grid on the bounding box, kept when at least a
/// quarter cell from every facet.
pub fn interior_grid(p: &LabelledPolytope, k: usize) -> Vec<Vec<f64>> {
    let m = p.dim();
    let verts = p.vertices();
    let lo: Vec<f64> = (0..m).map(|i| verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..m).map(|i| verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let cell = (0..m).map(|i| (hi[i] - lo[i]) / k as f64).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    'outer: loop {
        let x: Vec<f64> = (0..m).map(|i| lo[i] + (hi[i] - lo[i]) * (idx[i] as f64 + 0.5) / k as f64).collect();
        if p.min_label(&x) > 0.0 && p.min_distance(&x) >= 0.25 * cell {
            out.push(x);
        }
        for i in (0..m).rev() {
            idx[i] += 1;
            if idx[i] < k {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    out
}

struct Sweep {
    points: Vec<Vec<f64>>,
    s: Vec<f64>,
    s_wp: Option<Vec<f64>>,
}

fn sweep(
    p: &LabelledPolytope,
    k: usize,
    w: Option<&str>,
    pdim: Option<&str>,
    guillemin: bool,
) -> Result<(Sweep, Option<(AffineFunction, f64)>), CliError> {
    if k == 0 {
        return Err(CliError::input("--grid must be positive"));
    }
    let g = potential_of(p, guillemin)?;
    let wp = match w {
        Some(w) => Some((weight(p, w)?, conformal_dim(p, pdim)?)),
        None => None,
    };
    let points = interior_grid(p, k);
    if points.is_empty() {
        return Err(CliError::input("grid has no interior points; increase --grid"));
    }
    let vals: Vec<(f64, Option<f64>)> = points
        .par_iter()
        .map(|x| -> Result<(f64, Option<f64>), Error> {
            let s = abreu_scalar_exact(&g, x)?;
            let swp = match &wp {
                Some((w, pd)) => Some(curvature_sample(&g, x, w, *pd)?.s_wp),
                None => None,
            };
            Ok((s, swp))
        })
        .collect::<Result<_, _>>()?;
    let s = vals.iter().map(|v| v.0).collect();
    let s_wp = wp.as_ref().map(|_| vals.iter().map(|v| v.1.expect("computed")).collect());
    Ok((Sweep { points, s, s_wp }, wp))
}

fn scalar_csv(p: &LabelledPolytope, k: usize, w: Option<&str>, pdim: Option<&str>, guillemin: bool) -> Res {
    let (sw, _) = sweep(p, k, w, pdim, guillemin)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=p.dim()).map(|i| format!("mu_{i}")).collect();
    header.push("s".into());
    if sw.s_wp.is_some() {
        header.push("s_wp".into());
    }
    let io = |e: csv::Error| CliError::input(e.to_string());
    wtr.write_record(&header).map_err(io)?;
    for (i, x) in sw.points.iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(sw.s[i].to_string());
        if let Some(wp) = &sw.s_wp {
            row.push(wp[i].to_string());
        }
        wtr.write_record(&row).map_err(io)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    Ok(Output::Csv(String::from_utf8(bytes).expect("utf-8")))
}

fn extremal(p: &LabelledPolytope, k: usize, w: Option<&str>, pdim: Option<&str>, guillemin: bool) -> Res {
    let (sw, wp) = sweep(p, k, w, pdim, guillemin)?;
    let vals = sw.s_wp.as_ref().unwrap_or(&sw.s);
    let pts: Vec<(Vec<f64>, f64)> = sw.points.iter().cloned().zip(vals.iter().copied()).collect();
    let fit = affine_fit(&pts)?;
    let ok = fit.max_residual < EXTREMAL_TOL;
    let report = json!({
        "extremal": ok,
        "quantity": if wp.is_some() { "s_wp" } else { "s" },
        "w": wp.as_ref().map(|(w, _)| affine_json(w)),
        "p": wp.as_ref().map(|(_, p)| *p),
        "points": pts.len(),
        "residual": fit.max_residual,
        "tolerance": EXTREMAL_TOL,
        "extremal_function": ok.then(|| affine_json(&fit.function)),
    });
    Ok(if ok { Output::Json(report) } else { Output::Negative(report) })
}

fn quad(c_mat: &str, c: &str) -> Res {
    let m = qs(c_mat)?;
    let c = qs(c)?;
    if m.len() != 4 || c.len() != 2 {
        return Err(CliError::input("--C takes α,γ,β,δ and --c takes c1,c2"));
    }
    let data = QuadData::new([[m[0].clone(), m[1].clone()], [m[2].clone(), m[3].clone()]], [c[0].clone(), c[1].clone()])?;
    let class = classify(&data)?;
    let r = extremal_check(&data)?;
    let tag = match class.tag {
        AmbitoricTag::Product => "product",
        AmbitoricTag::Calabi => "calabi",
        AmbitoricTag::Orthotoric => "orthotoric",
    };
    let report = json!({
        "class": tag,
        "beta_zero": class.beta_zero,
        "gamma_zero": class.gamma_zero,
        "intersections": class.intersections,
        "labels": data.labels_exact().iter().map(exact_affine_json).collect::<Vec<_>>(),
        "extremal": r.extremal,
        "residual": r.residual,
        "closed_form": r.closed_form,
        "extremal_function": r.extremal_function.as_ref().map(affine_json),
        "w": affine_json(&r.w),
        "einstein_maxwell": r.einstein_maxwell,
        "wp_variation": r.wp_variation,
    });
    Ok(if r.extremal { Output::Json(report) } else { Output::Negative(report) })
}

fn calabi_csc(beta: &str, eta: &str, c: Option<&str>, s: Option<&str>, k: usize) -> Res {
    let (beta, eta) = (q(beta)?, q(eta)?);
    let s = match s {
        Some(s) => q(s)?,
        None => BigRational::from_integer(4.into()),
    };
    let c = match c {
        Some(c) => q(c)?,
        None => {
            let three = BigRational::from_integer(3.into());
            let two = BigRational::from_integer(2.into());
            let k = &three * &eta * &eta - &two * &beta * &eta - BigRational::from_integer(1.into());
            if k == BigRational::from_integer(0.into()) {
                return Err(CliError::input("3η² − 2βη − 1 vanishes; give --c"));
            }
            &s / (two * k)
        }
    };
    let data = HfkgData::new(beta.clone(), eta.clone(), c.clone())?;
    let condition_value = -data.f_second_at_eta();
    let base = json!({
        "beta": format_rational(&beta),
        "eta": format_rational(&eta),
        "c": format_rational(&c),
        "s": format_rational(&s),
        "condition_value": format_rational(&condition_value),
        "condition": condition_value == s,
    });
    match csc_certify(&data, &s, k) {
        Ok(r) => {
            let mut v = base;
            v["certified"] = json!(true);
            v["points"] = json!(r.points);
            v["scalar_mean"] = json!(r.scalar_mean);
            v["scalar_min"] = json!(r.scalar_min);
            v["scalar_max"] = json!(r.scalar_max);
            v["relative_spread"] = json!(r.relative_spread);
            Ok(Output::Json(v))
        }
        Err(e @ (Error::ConditionFailure(_) | Error::NonConstantScalar(_))) => {
            let mut v = base;
            v["certified"] = json!(false);
            v["message"] = json!(e.to_string());
            Ok(Output::Negative(v))
        }
        Err(e) => Err(e.into()),
    }
}

fn sample_images(p: &LabelledPolytope, n: usize, seed: u64) -> Res {
    let g = grouping(p)?;
    let setup = setup_from_polytope(p, g)?;
    let batch = sample(g, n, seed)?;
    let images: Vec<Vec<f64>> = batch.sigma_points.par_iter().map(|s| moment(s, &setup).map(|m| m.mu)).collect::<Result<_, _>>()?;
    let base = json!({ "samples": n, "seed": seed });
    match image_report(p, &images, COVERAGE_MIN) {
        Ok(r) => {
            let mut v = base;
            v["contained"] = json!(true);
            v["min_label"] = json!(r.min_label);
            v["hull_volume"] = json!(r.hull_volume);
            v["polytope_volume"] = json!(r.polytope_volume);
            v["coverage"] = json!(r.coverage);
            Ok(Output::Json(v))
        }
        Err(e @ (Error::ContainmentFailure(_) | Error::CoverageFailure(_))) => {
            let mut v = base;
            v["contained"] = json!(!matches!(e, Error::ContainmentFailure(_)));
            v["message"] = json!(e.to_string());
            Ok(Output::Negative(v))
        }
        Err(e) => Err(e.into()),
    }
}

fn futaki_cmd(p: &LabelledPolytope, w: &str, pdim: &str, h: &str, n_quad: usize, guillemin: bool) -> Res {
    let g = potential_of(p, guillemin)?;
    let w = weight(p, w)?;
    let pd = conformal_dim(p, Some(pdim))?;
    let hv = f64s(h)?;
    if hv.len() != p.dim() + 1 {
        return Err(CliError::input(format!("--h needs {} coefficients", p.dim() + 1)));
    }
    let h = AffineFunction::from_vector(&hv);
    let rule = quadrature_rule(p, n_quad, BD_REL)?;
    let vals: Vec<f64> = rule
        .nodes
        .par_iter()
        .map(|x| curvature_sample(&g, x, &w, pd).map(|c| c.s_wp))
        .collect::<Result<_, _>>()
        .map_err(|e| Error::QuadratureFailure(e.to_string()))?;
    let r = futaki_from_values(&rule, &vals, &w, pd, &h)?;
    Ok(Output::Json(json!({
        "value": r.value,
        "scale": r.scale,
        "relative": r.value / r.scale.max(f64::MIN_POSITIVE),
        "mean": r.mean,
        "nodes": r.nodes,
        "potential": if guillemin { "guillemin" } else { "levi-kahler" },
        "w": affine_json(&w),
        "p": pd,
    })))
}
