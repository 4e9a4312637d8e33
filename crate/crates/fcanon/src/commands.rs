//! The subcommands as library functions. Each returns an [`Outcome`] whose
//! `passed` flag decides the exit code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use fcanon_core::catalog::{self, CatalogEntry, CatalogParams};
use fcanon_core::classes::{Class, Row};
use fcanon_core::classifier::{
    applicable_classes, check_class, evaluate_point, lattice_from_reports, report_from_samples,
    ClassSample, MembershipReport, Samples, Verdict,
};
use fcanon_core::curvature::{curvature_at, order_for_depth, weyl_pm, MAX_DEPTH};
use fcanon_core::geometry::{
    conformal_rescale, sample_points, MetricField, ScalarPotential, VectorFieldSpec,
};
use fcanon_core::identities::{self, IdentityReport, Sample};
use fcanon_core::integrals::{
    bochner_conformal_identity, integrate_scalar, kazdan_warner_residual, nongradient_kw_residual,
    signature_integrand, signature_quadrature, QuadratureRule,
};
use fcanon_core::jet::{Jet, JetSpace};
use fcanon_core::potential::{f_pack, x_pack};
use fcanon_core::tensor::{Scalar, Values};
use fcanon_core::warped::{
    assemble_and_verify, denominator_profile, explicit_gaussian, q_jets_from_phi, recover_f,
    solve_phi, WarpedParams, WarpedSolution,
};

use crate::spec::{GeometrySpec, SpecError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Core(#[from] fcanon_core::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Spec(e) => e.kind(),
            CliError::Core(_) => "geometry",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    /// `{"error": {"kind", "message", ...}}`.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Spec(SpecError::Json { line, column, .. }) => {
                body["line"] = json!(line);
                body["column"] = json!(column);
            }
            CliError::Spec(SpecError::Expression { field, source }) => {
                body["field"] = json!(field);
                body["position"] = json!(source.position);
            }
            CliError::Io { path, .. } => body["path"] = json!(path),
            _ => {}
        }
        json!({ "error": body })
    }
}

impl From<fcanon_core::jet::JetError> for CliError {
    fn from(e: fcanon_core::jet::JetError) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A finished command: its report and whether every check passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub report: Value,
    pub text: String,
}

impl Outcome {
    fn new(passed: bool, report: impl Serialize, text: String) -> Outcome {
        Outcome {
            passed,
            report: serde_json::to_value(report).expect("reports serialize"),
            text,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Catalog {
        name: String,
        dim: Option<usize>,
        lambda: Option<f64>,
    },
    Spec(PathBuf),
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_geometry(source: &Source) -> CliResult<CatalogEntry> {
    match source {
        Source::Catalog { name, dim, lambda } => Ok(catalog::lookup(
            name,
            CatalogParams {
                dim: *dim,
                lambda: *lambda,
            },
        )?),
        Source::Spec(path) => Ok(GeometrySpec::from_json(&read_text(path)?)?.build()?),
    }
}

fn samples(seed: u64, count: usize) -> CliResult<Samples> {
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    Ok(Samples::Seeded { seed, count })
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

// ---------------------------------------------------------------- tensors

#[derive(Debug, Clone, Serialize)]
pub struct NamedTensor {
    pub name: String,
    pub rank: usize,
    /// Row-major components, last index fastest.
    pub components: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorDump {
    pub geometry: String,
    pub dim: usize,
    pub point: Vec<f64>,
    pub depth: usize,
    pub scalars: BTreeMap<String, f64>,
    pub tensors: Vec<NamedTensor>,
}

fn named(name: &str, t: &Values) -> NamedTensor {
    NamedTensor {
        name: name.into(),
        rank: t.rank(),
        components: t.data().to_vec(),
    }
}

pub fn tensors(
    entry: &CatalogEntry,
    point: Option<Vec<f64>>,
    depth: usize,
    seed: u64,
) -> CliResult<Outcome> {
    let n = entry.dim();
    let p = match point {
        Some(p) if p.len() != n => {
            return Err(CliError::Usage(format!(
                "--point has {} coordinates for dimension {n}",
                p.len()
            )))
        }
        Some(p) => p,
        None => sample_points(entry.metric.chart(), 1, seed).remove(0),
    };
    let space = JetSpace::new(n, order_for_depth(depth))?;
    let pack = curvature_at(&entry.metric, &space, &p, depth)?;
    let mut scalars = BTreeMap::new();
    let mut ts = vec![
        named("g", &pack.g()),
        named("christoffel", &pack.local.connection().symbols().values()),
        named("riemann", &pack.riem.values()),
        named("ricci", &pack.ric.values()),
        named("schouten", &pack.schouten.values()),
    ];
    scalars.insert("R".to_string(), pack.scalar_value());
    let optional = [
        ("weyl", &pack.weyl),
        ("cotton", &pack.cotton),
        ("bach", &pack.bach),
    ];
    for (name, t) in optional {
        if let Some(t) = t {
            ts.push(named(name, &t.values()));
        }
    }
    if n == 4 {
        let split = weyl_pm(&pack)?;
        scalars.insert("|W+|^2".into(), split.plus_norm_sq);
        scalars.insert("|W-|^2".into(), split.minus_norm_sq);
        ts.push(NamedTensor {
            name: "W+ spectrum".into(),
            rank: 1,
            components: split.plus_spectrum.to_vec(),
        });
        ts.push(NamedTensor {
            name: "W- spectrum".into(),
            rank: 1,
            components: split.minus_spectrum.to_vec(),
        });
    }
    if let Some(f) = &entry.potential {
        let fp = f_pack(&pack, f)?;
        scalars.insert("f".into(), fp.f.value());
        scalars.insert("laplacian f".into(), fp.laplacian.value());
        scalars.insert("R_f".into(), fp.r_f.value());
        ts.push(named("df", &fp.df.values()));
        ts.push(named("hess f", &fp.hess.values()));
        ts.push(named("ric_f", &fp.ric_f.values()));
        if let Some(d) = &fp.d_tensor {
            ts.push(named("D^grad f", d));
        }
    }
    if let Some(x) = &entry.vector_field {
        let xp = x_pack(&pack, x)?;
        scalars.insert("div X".into(), xp.div_x.value());
        scalars.insert("R_X".into(), xp.r_x.value());
        ts.push(named("X", &xp.x_up.values()));
        ts.push(named("nabla X", &xp.nabla_x.values()));
        ts.push(named("lie_X g", &xp.lie.values()));
        ts.push(named("ric_X", &xp.ric_x.values()));
        if let Some(d) = &xp.d_tensor {
            ts.push(named("D^X", d));
        }
    }
    let dump = TensorDump {
        geometry: entry.name.clone(),
        dim: n,
        point: p,
        depth,
        scalars,
        tensors: ts,
    };
    let text = render_dump(&dump);
    Ok(Outcome::new(true, &dump, text))
}

fn render_dump(d: &TensorDump) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "geometry {} (n = {}) at {:?}, depth {}",
        d.geometry, d.dim, d.point, d.depth
    );
    for (k, v) in &d.scalars {
        let _ = writeln!(s, "{k} = {v:.12}");
    }
    for t in &d.tensors {
        let _ = writeln!(s, "{}:", t.name);
        let mut any = false;
        for (off, v) in t.components.iter().enumerate() {
            if v.abs() < 1e-13 {
                continue;
            }
            any = true;
            let mut idx = vec![0; t.rank];
            let mut r = off;
            let side = if t.rank == 1 {
                t.components.len()
            } else {
                d.dim
            };
            for slot in idx.iter_mut().rev() {
                *slot = r % side;
                r /= side;
            }
            let _ = writeln!(s, "  {idx:?} {v:.12}");
        }
        if !any {
            let _ = writeln!(s, "  (all zero)");
        }
    }
    s
}

// --------------------------------------------------------------- classify

/// Per-point evaluation in parallel; results are collected in point order, so
/// reports are identical to a sequential run.
pub fn classify_parallel(
    entry: &CatalogEntry,
    classes: &[Class],
    samples: &Samples,
    threshold: f64,
) -> CliResult<Vec<MembershipReport>> {
    for c in classes {
        check_class(entry, *c)?;
    }
    let mut rows: Vec<Row> = Vec::new();
    for c in classes {
        if !rows.contains(&c.row()) {
            rows.push(c.row());
        }
    }
    let points = samples.points(entry);
    let space = JetSpace::new(entry.dim(), order_for_depth(1))?;
    let per_point: Vec<BTreeMap<Class, ClassSample>> = points
        .par_iter()
        .map(|p| evaluate_point(entry, &space, p, &rows))
        .collect::<Result<_, _>>()?;
    Ok(classes
        .iter()
        .map(|c| report_from_samples(entry, *c, samples, &points, &per_point, threshold))
        .collect())
}

fn render_reports(reports: &[MembershipReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<13} {:>10} {:>10}  formulations",
        "class", "verdict", "max", "mean"
    );
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Member => "member",
            Verdict::NonMember => "non-member",
            Verdict::Inconclusive => "inconclusive",
        };
        let mut line = format!(
            "{:<10} {:<13} {:>10} {:>10} ",
            r.class.name(),
            verdict,
            sci(r.max),
            sci(r.mean)
        );
        for f in &r.formulations {
            let _ = write!(line, " [{}: {}]", f.name, sci(f.max));
        }
        if let (Some(l), Some(sd)) = (r.lambda_estimate, r.lambda_stddev) {
            let _ = write!(line, "  lambda = {l:.9} (sd {})", sci(sd));
        }
        if !r.consistent {
            line.push_str("  INCONSISTENT");
        }
        let _ = writeln!(s, "{line}");
    }
    s
}

/// With explicit classes, passes iff every class is a member. Without, runs
/// the whole lattice and passes iff no inclusion arrow is violated and the
/// catalog expectation (if any) is reproduced.
pub fn classify(
    entry: &CatalogEntry,
    classes: &[Class],
    seed: u64,
    count: usize,
    threshold: f64,
) -> CliResult<Outcome> {
    let smp = samples(seed, count)?;
    if classes.is_empty() {
        let all = applicable_classes(entry);
        let lattice = lattice_from_reports(entry, classify_parallel(entry, &all, &smp, threshold)?);
        let passed = lattice.violations.is_empty()
            && lattice.unexpected.is_empty()
            && lattice.inconsistent.is_empty();
        let mut text = render_reports(&lattice.reports);
        let names = |cs: &[Class]| cs.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(text, "members: {}", names(&lattice.members));
        let _ = writeln!(text, "violated inclusions: {}", lattice.violations.len());
        if !lattice.unexpected.is_empty() {
            let _ = writeln!(
                text,
                "differs from expectation: {}",
                names(&lattice.unexpected)
            );
        }
        return Ok(Outcome::new(passed, &lattice, text));
    }
    let reports = classify_parallel(entry, classes, &smp, threshold)?;
    let passed = reports.iter().all(|r| r.verdict == Verdict::Member);
    let text = render_reports(&reports);
    Ok(Outcome::new(passed, &reports, text))
}

// ------------------------------------------------------------- identities

pub fn identity_report(
    entry: &CatalogEntry,
    seed: u64,
    count: usize,
    depth: usize,
) -> CliResult<IdentityReport> {
    let smp = samples(seed, count)?;
    let depth = depth.min(MAX_DEPTH);
    let space = JetSpace::new(entry.dim(), order_for_depth(depth))?;
    let points = smp.points(entry);
    let per_point: Vec<Vec<Sample>> = points
        .par_iter()
        .map(|p| identities::identity_point(entry, &space, p, depth))
        .collect::<Result<_, _>>()?;
    Ok(identities::report_from_samples(
        entry, &smp, depth, &per_point,
    ))
}

pub fn identities(
    entry: &CatalogEntry,
    seed: u64,
    count: usize,
    depth: usize,
) -> CliResult<Outcome> {
    let report = identity_report(entry, seed, count, depth)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "identities on {} (n = {}), {} points, depth {}",
        report.geometry, report.dim, report.count, report.depth
    );
    for c in &report.checks {
        let _ = writeln!(
            s,
            "{} {:<40} max {} (tol {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            sci(c.max),
            sci(c.tolerance)
        );
    }
    for k in &report.skipped {
        let _ = writeln!(s, "skip {k}");
    }
    Ok(Outcome::new(report.passed, &report, s))
}

// -------------------------------------------------------------- construct

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberKind {
    /// Constant curvature with scalar curvature `k`: flat, round or hyperbolic.
    Auto,
    /// Scalar-flat but not Ricci-flat, three-dimensional.
    SphereHyperbolic,
}

/// A constant-curvature `m`-dimensional fiber with scalar curvature `k`.
pub fn constant_curvature_fiber(m: usize, k: f64) -> CliResult<MetricField> {
    let mf = m as f64;
    if k == 0.0 {
        return Ok(catalog::euclidean(m)?.metric);
    }
    let base = if k > 0.0 {
        catalog::sphere_metric(m)?
    } else {
        catalog::hyperbolic(m)?.metric
    };
    let r2 = mf * (mf - 1.0) / k.abs();
    let u = ScalarPotential::constant(base.chart().clone(), 0.5 * r2.ln());
    Ok(conformal_rescale(&base, &u)?)
}

fn fiber_for(kind: FiberKind, n: usize, k: f64) -> CliResult<MetricField> {
    match kind {
        FiberKind::Auto => constant_curvature_fiber(n - 1, k),
        FiberKind::SphereHyperbolic if n == 4 => Ok(catalog::sphere_hyperbolic_fiber()?),
        FiberKind::SphereHyperbolic => Err(CliError::Usage(
            "the sphere-hyperbolic fiber needs n = 4".into(),
        )),
    }
}

fn fiber_center(fiber: &MetricField) -> Vec<f64> {
    let c = fiber.chart();
    c.lower()
        .iter()
        .zip(c.upper())
        .map(|(a, b)| 0.5 * (a + b))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConstructConfig {
    pub params: WarpedParams,
    /// Initial offset from the equilibrium as a fraction of `φ*`.
    pub amplitude: f64,
    pub step: f64,
    pub fiber: FiberKind,
    /// Verify the closed-form Gaussian example instead of the periodic one.
    pub explicit: bool,
    pub count: usize,
    pub threshold: f64,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            params: WarpedParams {
                n: 4,
                k: 6.0,
                epsilon: 1.0,
                c: -5.0,
            },
            amplitude: 0.01,
            step: 1e-3,
            fiber: FiberKind::Auto,
            explicit: false,
            count: 16,
            threshold: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructReport {
    pub stage: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Value>,
    pub passed: bool,
}

/// Runs the pipeline and returns the report with the solution, if one was built.
pub fn construct(cfg: &ConstructConfig) -> CliResult<(Outcome, Option<WarpedSolution>)> {
    let n = cfg.params.n;
    let mut s = String::new();
    let (solution, orbit_json, denominator_range) = if cfg.explicit {
        let sol = explicit_gaussian(n, -2.0, 2.0, 101)?;
        let _ = writeln!(
            s,
            "explicit solution q = t^2, f = (n/2) log(1 + t^2), n = {n}, k = 0"
        );
        let _ = writeln!(s, "equation residual max {}", sci(sol.residuals.ode_max));
        (Some(sol), None, None)
    } else {
        let p = cfg.params;
        let star = p.phi_star();
        let orbit = solve_phi(p, cfg.amplitude * star, cfg.step)?;
        let _ = writeln!(
            s,
            "phi orbit: phi* = {:.9}, amplitude {:.3e}, period {:.9} (linearized {:.9}), energy drift {}",
            orbit.phi_star,
            orbit.amplitude,
            orbit.period,
            orbit.linear_period,
            sci(orbit.energy_drift)
        );
        let q = q_jets_from_phi(&orbit)?;
        let den = denominator_profile(&q);
        let range = [
            den.iter().copied().fold(f64::INFINITY, f64::min),
            den.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ];
        let _ = writeln!(
            s,
            "2q'' + q'^2 ranges over [{:.6e}, {:.6e}]",
            range[0], range[1]
        );
        let orbit_json = json!({
            "phi_star": orbit.phi_star,
            "amplitude": orbit.amplitude,
            "period": orbit.period,
            "linear_period": orbit.linear_period,
            "energy_drift": orbit.energy_drift,
            "equation_residual": orbit.equation_residual,
            "nodes": orbit.t.len(),
        });
        match recover_f(&orbit.t, &q, n, p.epsilon) {
            Ok(_) => (
                Some(fcanon_core::warped::construct_periodic(
                    p,
                    cfg.amplitude * star,
                    cfg.step,
                )?),
                Some(orbit_json),
                Some(range),
            ),
            Err(e) => {
                let _ = writeln!(s, "FAIL recovering f: {e}");
                let report = ConstructReport {
                    stage: "recover_f",
                    orbit: Some(orbit_json),
                    denominator_range: Some(range),
                    verification: None,
                    failure: Some(json!({ "message": e.to_string() })),
                    passed: false,
                };
                return Ok((Outcome::new(false, &report, s), None));
            }
        }
    };
    let sol = solution.expect("built above");
    let fiber = fiber_for(cfg.fiber, n, sol.k)?;
    let v = assemble_and_verify(
        &sol,
        &fiber,
        &fiber_center(&fiber),
        cfg.count,
        cfg.threshold,
    )?;
    let passed = v.hc_f.verdict == Verdict::Member && v.warp_min > 0.0;
    let _ = writeln!(
        s,
        "assembled metric: HC_f max {} ({:?}), E_f max {} ({:?}), tensor/ODE gap {}, F in [{:.6}, {:.6}]",
        sci(v.hc_f.max),
        v.hc_f.verdict,
        sci(v.e_f.max),
        v.e_f.verdict,
        sci(v.tensor_ode_gap),
        v.warp_min,
        v.warp_max
    );
    let report = ConstructReport {
        stage: "verified",
        orbit: orbit_json,
        denominator_range,
        verification: Some(serde_json::to_value(&v).expect("serializes")),
        failure: None,
        passed,
    };
    Ok((Outcome::new(passed, &report, s), Some(sol)))
}

// ------------------------------------------------------------ obstruction

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Obstruction {
    KazdanWarner,
    Bochner,
    NongradientKw,
    Signature,
}

/// `cos θ₁`, a first spherical harmonic in hyperspherical angles.
pub fn first_harmonic(metric: &MetricField) -> ScalarPotential {
    ScalarPotential::new(metric.chart().clone(), Arc::new(|x: &[Jet]| Ok(x[0].cos())))
}

/// Rotation `∂/∂φ` in the last hyperspherical angle, a Killing field.
pub fn rotation_field(metric: &MetricField) -> VectorFieldSpec {
    VectorFieldSpec::new(
        metric.chart().clone(),
        Arc::new(|x: &[Jet]| {
            let mut v: Vec<Jet> = x.iter().map(|c| c.zero_like()).collect();
            let last = v.len() - 1;
            v[last] = x[0].zero_like().add_const(1.0);
            Ok(v)
        }),
    )
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn obstruction(
    which: Obstruction,
    dim: usize,
    nodes: usize,
    geometry: Option<&CatalogEntry>,
    seed: u64,
    count: usize,
) -> CliResult<Outcome> {
    let sphere = || -> CliResult<MetricField> {
        if !(2..=4).contains(&dim) {
            return Err(CliError::Usage(format!(
                "sphere obstructions need 2 <= dim <= 4, got {dim}"
            )));
        }
        Ok(catalog::sphere_metric(dim)?)
    };
    let mut s = String::new();
    let n = dim as f64;
    match which {
        Obstruction::Bochner => {
            let g = sphere()?;
            let rule = QuadratureRule::sphere(dim, nodes);
            let f = first_harmonic(&g);
            let b = bochner_conformal_identity(&rule, &g, &f)?;
            let f_sq = ScalarPotential::new(
                g.chart().clone(),
                Arc::new(|x: &[Jet]| Ok(x[0].cos().mul(&x[0].cos()))),
            );
            let expected = n * (n - 1.0) * integrate_scalar(&rule, &g, &f_sq)?;
            let gaps = [
                rel_gap(b.lhs, b.rhs),
                rel_gap(b.lhs, expected),
                rel_gap(b.rhs, expected),
            ];
            let passed = gaps.iter().all(|g| *g <= 1e-6);
            let _ = writeln!(
                s,
                "S^{dim}, f = cos(x1): int Ric(grad f, grad f) = {:.12}",
                b.lhs
            );
            let _ = writeln!(s, "((n-1)/n) int (lap f)^2 = {:.12}", b.rhs);
            let _ = writeln!(s, "n(n-1) int f^2 = {expected:.12}");
            let _ = writeln!(
                s,
                "relative gaps {} {} {}",
                sci(gaps[0]),
                sci(gaps[1]),
                sci(gaps[2])
            );
            let report = json!({ "which": "bochner", "dim": dim, "nodes": nodes, "identity": b,
                "n_n_minus_1_int_f_sq": expected, "relative_gaps": gaps, "passed": passed });
            Ok(Outcome {
                passed,
                report,
                text: s,
            })
        }
        Obstruction::KazdanWarner => {
            let g = sphere()?;
            let rule = QuadratureRule::sphere(dim, nodes);
            let f = first_harmonic(&g);
            let x = VectorFieldSpec::gradient(&g, &f)?;
            let kw = kazdan_warner_residual(&rule, &g, &f, &x)?;
            let entry = CatalogEntry {
                name: format!("sphere_{dim}_first_harmonic"),
                metric: g.clone(),
                potential: Some(f),
                vector_field: None,
                expected: Default::default(),
                known: Default::default(),
                trivial_potential: false,
                gradient_field: false,
            };
            let obstructed = kw.integral.abs() > 1e-6 * kw.scale.max(1e-300);
            let yf = if dim >= 3 {
                Some(
                    classify_parallel(&entry, &[Class::Yf], &samples(seed, count)?, 1e-6)?
                        .remove(0),
                )
            } else {
                None
            };
            // A nonzero integral rules out Y_f; the direct residual must agree.
            let passed = yf
                .as_ref()
                .is_none_or(|r| (r.verdict == Verdict::NonMember) == obstructed);
            let _ = writeln!(
                s,
                "S^{dim}, f = cos(x1), X = grad f: int Ric(grad f, X) = {:.12} (scale {:.6})",
                kw.integral, kw.scale
            );
            if let Some(r) = &yf {
                let _ = writeln!(
                    s,
                    "direct Y_f residual max {} ({:?})",
                    sci(r.max),
                    r.verdict
                );
            }
            let report = json!({ "which": "kazdan-warner", "dim": dim, "nodes": nodes, "identity": kw,
                "obstructed": obstructed, "yf": yf, "passed": passed });
            Ok(Outcome {
                passed,
                report,
                text: s,
            })
        }
        Obstruction::NongradientKw => {
            let g = sphere()?;
            let rule = QuadratureRule::sphere(dim, nodes);
            let f = first_harmonic(&g);
            let fields = [
                ("conformal gradient", VectorFieldSpec::gradient(&g, &f)?),
                ("killing", rotation_field(&g)),
            ];
            let mut results = Vec::new();
            let mut passed = true;
            for (name, x) in fields {
                let r = nongradient_kw_residual(&rule, &g, &x)?;
                let scale = r.ric_xx.abs().max(r.grad_sq).max(r.div_sq).max(1e-300);
                let (e1, e2) = (
                    r.first_residual.abs() / scale,
                    r.second_residual.abs() / scale,
                );
                passed &= e1 <= 1e-6 && e2 <= 1e-6;
                let _ = writeln!(
                    s,
                    "S^{dim}, X = {name}: first identity {}, second identity {} (relative)",
                    sci(e1),
                    sci(e2)
                );
                results.push(json!({ "field": name, "identities": r, "relative": [e1, e2] }));
            }
            let report = json!({ "which": "nongradient-kw", "dim": dim, "nodes": nodes, "fields": results, "passed": passed });
            Ok(Outcome {
                passed,
                report,
                text: s,
            })
        }
        Obstruction::Signature => {
            let entry = match geometry {
                Some(e) => e.clone(),
                None => catalog::s2xs2(4)?,
            };
            let closed = matches!(entry.name.as_str(), "s2xs2" | "sphere");
            if closed {
                let rule = if entry.name == "s2xs2" {
                    QuadratureRule::sphere(2, nodes).product(&QuadratureRule::sphere(2, nodes))
                } else {
                    QuadratureRule::sphere(4, nodes)
                };
                let total = signature_quadrature(&rule, &entry.metric)?;
                let tau = total / (48.0 * std::f64::consts::PI * std::f64::consts::PI);
                let passed = (tau - tau.round()).abs() <= 1e-6;
                let _ = writeln!(
                    s,
                    "{}: int (|W+|^2 - |W-|^2) = {total:.3e}, signature {tau:.9}",
                    entry.name
                );
                let report = json!({ "which": "signature", "geometry": entry.name, "nodes": nodes,
                    "integral": total, "signature": tau, "passed": passed });
                Ok(Outcome {
                    passed,
                    report,
                    text: s,
                })
            } else {
                // Open charts have no global signature; report the pointwise density.
                let pts = sample_points(entry.metric.chart(), count, seed);
                let dens: Vec<f64> = pts
                    .par_iter()
                    .map(|p| signature_integrand(&entry.metric, p))
                    .collect::<Result<_, _>>()?;
                let max = dens.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                let passed = max <= 1e-7;
                let _ = writeln!(
                    s,
                    "{}: max |(|W+|^2 - |W-|^2)| over {} points = {}",
                    entry.name,
                    pts.len(),
                    sci(max)
                );
                let report = json!({ "which": "signature", "geometry": entry.name, "points": pts.len(),
                    "max_density": max, "passed": passed });
                Ok(Outcome {
                    passed,
                    report,
                    text: s,
                })
            }
        }
    }
}

// ------------------------------------------------------------------- plot

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Phi,
    Q,
    Warp,
    Denominator,
    /// The third-order residual of the closed-form example with `f ≡ 0`.
    ExplicitUnweighted,
}

/// Two-column `t value` text.
pub fn plot(series: Series, cfg: &ConstructConfig) -> CliResult<String> {
    let mut out = String::new();
    let rows: Vec<(f64, f64)> = match series {
        Series::ExplicitUnweighted => {
            let sol = explicit_gaussian(cfg.params.n, -2.0, 2.0, 101)?;
            let zero = vec![0.0; sol.t.len()];
            let r = fcanon_core::warped::hcf_ode_residual(&sol.q, &zero, sol.n, sol.k);
            sol.t.iter().copied().zip(r).collect()
        }
        _ => {
            let star = cfg.params.phi_star();
            let orbit = solve_phi(cfg.params, cfg.amplitude * star, cfg.step)?;
            let q = q_jets_from_phi(&orbit)?;
            let values: Vec<f64> = match series {
                Series::Phi => orbit.phi.clone(),
                Series::Q => q.iter().map(|d| d[0]).collect(),
                Series::Warp => q.iter().map(|d| d[0].exp()).collect(),
                _ => denominator_profile(&q),
            };
            orbit.t.iter().copied().zip(values).collect()
        }
    };
    for (t, v) in rows {
        let _ = writeln!(out, "{t:.12e} {v:.12e}");
    }
    Ok(out)
}
