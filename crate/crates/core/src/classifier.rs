//! Residual-based class membership.
//!
//! Every residual is normalized as `|raw| / (1 + largest ingredient norm)`, all
//! norms contracting indices with `g⁻¹`. Classes that posit a constant `λ` also
//! require the sample standard deviation of its pointwise estimate to pass.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::catalog::CatalogEntry;
use crate::classes::{violations, Class, Row};
use crate::curvature::{
    curvature_at, normalized, order_for_depth, orthonormal_frame, CurvaturePack,
};
use crate::error::{Error, Result};
use crate::geometry::{conformal_rescale, sample_points, MetricField, ScalarPotential};
use crate::jet::JetSpace;
use crate::potential::{f_pack, integrability_residual, mean_stddev, x_pack, yamabe_residual};
use crate::tensor::{Tensor, Values};

pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const DEEP_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Member,
    NonMember,
    Inconclusive,
}

impl Verdict {
    pub fn from_value(value: f64, threshold: f64) -> Verdict {
        if value <= threshold {
            Verdict::Member
        } else if value <= 10.0 * threshold {
            Verdict::Inconclusive
        } else {
            Verdict::NonMember
        }
    }
}

/// Where the sample points came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Seeded { seed: u64, count: usize },
    Given(Vec<Vec<f64>>),
}

impl Samples {
    pub fn points(&self, entry: &CatalogEntry) -> Vec<Vec<f64>> {
        match self {
            Samples::Seeded { seed, count } => sample_points(entry.metric.chart(), *count, *seed),
            Samples::Given(p) => p.clone(),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Samples::Seeded { seed, .. } => Some(*seed),
            Samples::Given(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formulation {
    pub name: String,
    pub max: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub geometry: String,
    pub class: Class,
    pub seed: Option<u64>,
    pub count: usize,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda_stddev: Option<f64>,
    pub residuals: Vec<PointResidual>,
    pub max: f64,
    pub mean: f64,
    pub verdict: Verdict,
    pub formulations: Vec<Formulation>,
    /// Equivalent formulations reach the same member/non-member conclusion.
    pub consistent: bool,
}

/// Residuals of one class at one point: the first formulation decides.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSample {
    pub formulations: Vec<(&'static str, f64)>,
    pub lambda: Option<f64>,
}

fn rel(raw: &Values, ginv: &Values, ingredients: &[&Values]) -> f64 {
    let norms: Vec<f64> = ingredients.iter().map(|t| t.norm(ginv)).collect();
    normalized(raw.norm(ginv), &norms)
}

fn single(raw: &Values, ginv: &Values) -> f64 {
    rel(raw, ginv, &[raw])
}

/// `T − (tr T / n) g` with the trace part, for Einstein-type residuals.
fn einstein_defect(t: &Values, g: &Values, ginv: &Values) -> (f64, f64) {
    let n = g.dim() as f64;
    let lambda = t.trace(0, 1, ginv).data()[0] / n;
    let pure = g.scaled(lambda);
    (rel(&t.minus(&pure), ginv, &[t, &pure]), lambda)
}

fn codazzi(dt: &Values) -> Values {
    crate::curvature::codazzi_of(dt)
}

/// All class residuals at one point, for the rows the structure supports.
pub fn evaluate_point(
    entry: &CatalogEntry,
    space: &JetSpace,
    p: &[f64],
    rows: &[Row],
) -> Result<BTreeMap<Class, ClassSample>> {
    let pack = curvature_at(&entry.metric, space, p, 1)?;
    let mut out = BTreeMap::new();
    if rows.contains(&Row::Classical) {
        classical_row(&pack, &mut out)?;
    }
    let n = pack.dim();
    if rows.contains(&Row::Potential) {
        let f = entry
            .potential
            .as_ref()
            .ok_or(Error::MissingPotential("f-row"))?;
        if n < 3 {
            return Err(Error::Dimension {
                what: "potential classes",
                dim: n,
            });
        }
        potential_row(&pack, f, &mut out)?;
    }
    if rows.contains(&Row::Vector) {
        let x = entry
            .vector_field
            .as_ref()
            .ok_or(Error::MissingVectorField("X-row"))?;
        if n < 3 {
            return Err(Error::Dimension {
                what: "vector classes",
                dim: n,
            });
        }
        vector_row(&pack, x, &mut out)?;
    }
    Ok(out)
}

fn weyl_part(pack: &CurvaturePack, ginv: &Values) -> Result<f64> {
    if pack.dim() < 3 {
        return Ok(0.0);
    }
    let w = pack.weyl_jets()?.values();
    Ok(rel(&w, ginv, &[&pack.riem.values()]))
}

fn put(
    out: &mut BTreeMap<Class, ClassSample>,
    class: Class,
    formulations: Vec<(&'static str, f64)>,
    lambda: Option<f64>,
) {
    out.insert(
        class,
        ClassSample {
            formulations,
            lambda,
        },
    );
}

fn classical_row(pack: &CurvaturePack, out: &mut BTreeMap<Class, ClassSample>) -> Result<()> {
    let (g, ginv) = (pack.g(), pack.ginv());
    let ric = pack.ric.values();
    let (e_res, lambda) = einstein_defect(&ric, &g, &ginv);
    let w = weyl_part(pack, &ginv)?;
    let d_riem = pack.d_riem()?.values();
    let d_ric = pack.d_ric()?.values();
    let ls = single(&d_riem, &ginv);
    let pr = single(&d_ric, &ginv);
    let div_riem = d_riem.trace(0, 4, &ginv);
    let cod = codazzi(&d_ric);
    let hc_a = single(&div_riem, &ginv);
    let hc_b = rel(&cod, &ginv, &[&d_ric]);
    let y = single(&pack.d_scalar()?.values(), &ginv);
    put(
        out,
        Class::SF,
        alloc::vec![("W = 0 and Ric = λg", w.max(e_res))],
        Some(lambda),
    );
    put(out, Class::LS, alloc::vec![("∇Riem = 0", ls)], None);
    put(
        out,
        Class::LSE,
        alloc::vec![("∇Riem = 0 and Ric = λg", ls.max(e_res))],
        Some(lambda),
    );
    put(out, Class::PR, alloc::vec![("∇Ric = 0", pr)], None);
    put(
        out,
        Class::E,
        alloc::vec![("Ric = λg", e_res)],
        Some(lambda),
    );
    put(
        out,
        Class::HC,
        alloc::vec![("div Riem = 0", hc_a), ("Ric is Codazzi", hc_b)],
        None,
    );
    put(out, Class::Y, alloc::vec![("∇R = 0", y)], None);
    Ok(())
}

fn potential_row(
    pack: &CurvaturePack,
    f: &ScalarPotential,
    out: &mut BTreeMap<Class, ClassSample>,
) -> Result<()> {
    let fp = f_pack(pack, f)?;
    let (g, ginv) = (pack.g(), pack.ginv());
    let n = pack.dim() as f64;
    let ric_f = fp.ric_f.values();
    let (e_res, _) = einstein_defect(&ric_f, &g, &ginv);
    let lambda = fp.r_f.value() / n;
    let w = weyl_part(pack, &ginv)?;
    let d_riem = pack.d_riem()?.values();
    let d_riem_f = fp.d_riem_f.clone().expect("depth 1");
    let ls = rel(&d_riem_f, &ginv, &[&d_riem, &d_riem_f.minus(&d_riem)]);
    let d_ric = pack.d_ric()?.values();
    let d_hess = fp.d_hess.as_ref().expect("depth 1").values();
    let d_ric_f = fp.d_ric_f.clone().expect("depth 1");
    let pr = rel(&d_ric_f, &ginv, &[&d_ric, &d_hess]);

    let div_riem = d_riem.trace(0, 4, &ginv);
    let weighted = fp.div_weighted_riem.clone().expect("depth 1");
    let iota = div_riem.minus(&weighted);
    let hc_a = rel(&weighted, &ginv, &[&div_riem, &iota]);
    let hc_b = rel(
        &codazzi(&d_ric_f),
        &ginv,
        &[&codazzi(&d_ric), &codazzi(&d_hess)],
    );
    let df = fp.df.values();
    let y_raw = yamabe_residual(pack, &df)?;
    let dr = pack.d_scalar()?.values();
    let y_i = rel(&y_raw, &ginv, &[&dr, &dr.minus(&y_raw)]);
    let d = fp.d_tensor.clone().expect("n >= 3");
    let integ = integrability_residual(pack, &df, &d)?;
    let c = pack.cotton_jets()?.values();
    let iw = integ.minus(&c).plus(&d);
    let hc_c = rel(&integ, &ginv, &[&c, &iw, &d]).max(y_i);
    let wedge = fp.div_einstein_wedge.clone().expect("depth 1");
    let hc_d = single(&wedge, &ginv);
    let y_ii_raw = fp.div_ric_f_minus_trace.clone().expect("depth 1");
    let y_ii = single(&y_ii_raw, &ginv);

    put(
        out,
        Class::SFf,
        alloc::vec![("W = 0 and Ric_f = λg", w.max(e_res))],
        Some(lambda),
    );
    put(out, Class::LSf, alloc::vec![("∇Riem_f = 0", ls)], None);
    put(
        out,
        Class::LSEf,
        alloc::vec![("∇Riem_f = 0 and Ric_f = λg", ls.max(e_res))],
        Some(lambda),
    );
    put(out, Class::PRf, alloc::vec![("∇Ric_f = 0", pr)], None);
    put(
        out,
        Class::Ef,
        alloc::vec![("Ric_f = λg", e_res)],
        Some(lambda),
    );
    let hc = alloc::vec![
        ("div(e^-f Riem) = 0", hc_a),
        ("Ric_f is Codazzi", hc_b),
        ("C + ι_∇f W = D and ∇R = 2Ric(∇f)", hc_c),
        ("div(E_f ∧ g) = 0", hc_d),
    ];
    put(out, Class::HCfLambda, hc.clone(), Some(lambda));
    put(out, Class::HCf, hc, None);
    put(
        out,
        Class::Yf,
        alloc::vec![("∇R = 2Ric(∇f)", y_i), ("div(Ric_f − R_f g) = 0", y_ii)],
        None,
    );
    Ok(())
}

fn vector_row(
    pack: &CurvaturePack,
    x: &crate::geometry::VectorFieldSpec,
    out: &mut BTreeMap<Class, ClassSample>,
) -> Result<()> {
    let xp = x_pack(pack, x)?;
    let (g, ginv) = (pack.g(), pack.ginv());
    let n = pack.dim() as f64;
    let ric_x = xp.ric_x.values();
    let (e_res, _) = einstein_defect(&ric_x, &g, &ginv);
    let lambda = xp.r_x.value() / n;
    let w = weyl_part(pack, &ginv)?;
    let d_riem = pack.d_riem()?.values();
    let d_riem_x = xp.d_riem_x.clone().expect("depth 1");
    let ls = rel(&d_riem_x, &ginv, &[&d_riem, &d_riem_x.minus(&d_riem)]);
    let d_ric = pack.d_ric()?.values();
    let d_ric_x = xp.d_ric_x.clone().expect("depth 1");
    let d_lie_half = d_ric_x.minus(&d_ric);
    let pr = rel(&d_ric_x, &ginv, &[&d_ric, &d_lie_half]);
    let wedge = xp.div_einstein_wedge.clone().expect("depth 1");
    let hc_a = single(&wedge, &ginv);
    let hc_b = rel(
        &codazzi(&d_ric_x),
        &ginv,
        &[&codazzi(&d_ric), &codazzi(&d_lie_half)],
    );
    let x_low = xp.x_low.values();
    let div_a = xp.div_antisym.clone().expect("depth 1");
    let y_raw = yamabe_residual(pack, &x_low)?.minus(&div_a);
    let dr = pack.d_scalar()?.values();
    let two_ric_x = dr.minus(&div_a).minus(&y_raw);
    let y_i = rel(&y_raw, &ginv, &[&dr, &two_ric_x, &div_a]);
    let d = xp.d_tensor.clone().expect("n >= 3");
    let integ = integrability_residual(pack, &x_low, &d)?;
    let c = pack.cotton_jets()?.values();
    let iw = integ.minus(&c).plus(&d);
    let hc_c = rel(&integ, &ginv, &[&c, &iw, &d]).max(y_i);
    let y_ii = single(&xp.div_ric_x_minus_trace.clone().expect("depth 1"), &ginv);

    put(
        out,
        Class::SFx,
        alloc::vec![("W = 0 and Ric_X = λg", w.max(e_res))],
        Some(lambda),
    );
    put(out, Class::LSx, alloc::vec![("∇Riem_X = 0", ls)], None);
    put(
        out,
        Class::LSEx,
        alloc::vec![("∇Riem_X = 0 and Ric_X = λg", ls.max(e_res))],
        Some(lambda),
    );
    put(out, Class::PRx, alloc::vec![("∇Ric_X = 0", pr)], None);
    put(
        out,
        Class::Ex,
        alloc::vec![("Ric_X = λg", e_res)],
        Some(lambda),
    );
    put(
        out,
        Class::HCx,
        alloc::vec![
            ("div(E_X ∧ g) = 0", hc_a),
            ("Ric_X is Codazzi", hc_b),
            ("C + ι_X W = D^X and ∇R = 2Ric(X) + div A^X", hc_c),
        ],
        None,
    );
    put(
        out,
        Class::Yx,
        alloc::vec![
            ("∇R = 2Ric(X) + div A^X", y_i),
            ("div(Ric_X − R_X g) = 0", y_ii)
        ],
        None,
    );
    Ok(())
}

pub fn rows_for(entry: &CatalogEntry) -> Vec<Row> {
    let mut rows = alloc::vec![Row::Classical];
    if entry.dim() >= 3 {
        if entry.potential.is_some() {
            rows.push(Row::Potential);
        }
        if entry.vector_field.is_some() {
            rows.push(Row::Vector);
        }
    }
    rows
}

pub fn check_class(entry: &CatalogEntry, class: Class) -> Result<()> {
    match class.row() {
        Row::Potential if entry.potential.is_none() => Err(Error::MissingPotential(class.name())),
        Row::Vector if entry.vector_field.is_none() => Err(Error::MissingVectorField(class.name())),
        Row::Potential | Row::Vector if entry.dim() < 3 => Err(Error::Dimension {
            what: class.name(),
            dim: entry.dim(),
        }),
        _ => Ok(()),
    }
}

/// Builds the report of `class` from per-point samples.
pub fn report_from_samples(
    entry: &CatalogEntry,
    class: Class,
    samples: &Samples,
    points: &[Vec<f64>],
    per_point: &[BTreeMap<Class, ClassSample>],
    threshold: f64,
) -> MembershipReport {
    let cs: Vec<&ClassSample> = per_point.iter().map(|m| &m[&class]).collect();
    let residuals: Vec<PointResidual> = points
        .iter()
        .zip(&cs)
        .map(|(p, s)| PointResidual {
            point: p.clone(),
            value: s.formulations[0].1,
        })
        .collect();
    let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.value));
    let mean = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().map(|r| r.value).sum::<f64>() / residuals.len() as f64
    };
    let (lambda_estimate, lambda_stddev) = if class.has_lambda() {
        let l: Vec<f64> = cs.iter().map(|s| s.lambda.unwrap_or(0.0)).collect();
        let (m, s) = mean_stddev(&l);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let spread = lambda_stddev.unwrap_or(0.0);
    let verdict = Verdict::from_value(max.max(spread), threshold);
    let names: Vec<&'static str> = cs
        .first()
        .map(|s| s.formulations.iter().map(|f| f.0).collect())
        .unwrap_or_default();
    let formulations: Vec<Formulation> = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let m = cs
                .iter()
                .fold(0.0f64, |acc, s| acc.max(s.formulations[k].1));
            Formulation {
                name: name.to_string(),
                max: m,
                verdict: Verdict::from_value(m.max(spread), threshold),
            }
        })
        .collect();
    let decided: Vec<bool> = formulations
        .iter()
        .filter(|f| f.verdict != Verdict::Inconclusive)
        .map(|f| f.verdict == Verdict::Member)
        .collect();
    let consistent = decided.windows(2).all(|w| w[0] == w[1]);
    MembershipReport {
        geometry: entry.name.clone(),
        class,
        seed: samples.seed(),
        count: points.len(),
        threshold,
        lambda_estimate,
        lambda_stddev,
        residuals,
        max,
        mean,
        verdict,
        formulations,
        consistent,
    }
}

fn evaluate_all(
    entry: &CatalogEntry,
    points: &[Vec<f64>],
    rows: &[Row],
) -> Result<Vec<BTreeMap<Class, ClassSample>>> {
    let space = JetSpace::new(entry.dim(), order_for_depth(1))?;
    points
        .iter()
        .map(|p| evaluate_point(entry, &space, p, rows))
        .collect()
}

pub fn classify(
    entry: &CatalogEntry,
    class: Class,
    samples: &Samples,
    threshold: f64,
) -> Result<MembershipReport> {
    check_class(entry, class)?;
    let points = samples.points(entry);
    let per_point = evaluate_all(entry, &points, &[class.row()])?;
    Ok(report_from_samples(
        entry, class, samples, &points, &per_point, threshold,
    ))
}

/// Reports for several classes sharing one evaluation per point.
pub fn classify_many(
    entry: &CatalogEntry,
    classes: &[Class],
    samples: &Samples,
    threshold: f64,
) -> Result<Vec<MembershipReport>> {
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
    let per_point = evaluate_all(entry, &points, &rows)?;
    Ok(classes
        .iter()
        .map(|c| report_from_samples(entry, *c, samples, &points, &per_point, threshold))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub geometry: String,
    pub reports: Vec<MembershipReport>,
    pub members: Vec<Class>,
    /// Inclusion arrows whose sub-class is a member while the super-class is not.
    pub violations: Vec<(Class, Class)>,
    /// Member sets that differ from the catalog expectation.
    pub unexpected: Vec<Class>,
    pub inconsistent: Vec<Class>,
}

/// Classes that can be evaluated on `entry`.
pub fn applicable_classes(entry: &CatalogEntry) -> Vec<Class> {
    let rows = rows_for(entry);
    Class::ALL
        .into_iter()
        .filter(|c| rows.contains(&c.row()))
        .collect()
}

pub fn lattice_check(
    entry: &CatalogEntry,
    samples: &Samples,
    threshold: f64,
) -> Result<LatticeReport> {
    let classes = applicable_classes(entry);
    let reports = classify_many(entry, &classes, samples, threshold)?;
    Ok(lattice_from_reports(entry, reports))
}

/// Members, arrow violations and expectation mismatches of a set of reports.
pub fn lattice_from_reports(entry: &CatalogEntry, reports: Vec<MembershipReport>) -> LatticeReport {
    let classes: Vec<Class> = reports.iter().map(|r| r.class).collect();
    let members: Vec<Class> = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Member)
        .map(|r| r.class)
        .collect();
    let set = members.iter().copied().collect();
    let arrows: Vec<(Class, Class)> = entry
        .arrows()
        .into_iter()
        .filter(|(a, b)| classes.contains(a) && classes.contains(b))
        .collect();
    let unexpected = if entry.expected.is_empty() {
        Vec::new()
    } else {
        classes
            .iter()
            .copied()
            .filter(|c| members.contains(c) != entry.expected.contains(c))
            .collect()
    };
    LatticeReport {
        geometry: entry.name.clone(),
        violations: violations(&set, &arrows),
        inconsistent: reports
            .iter()
            .filter(|r| !r.consistent)
            .map(|r| r.class)
            .collect(),
        members,
        unexpected,
        reports,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedStructure {
    pub point: Vec<f64>,
    /// Eigenvalue of `Ric` along `∇f/|∇f|`.
    pub mu_gradient: f64,
    /// Mean of the remaining `n − 1` eigenvalues.
    pub mu_common: f64,
    /// `|Ric(u) − μ₁ u|` for the unit gradient `u`.
    pub eigenvector_residual: f64,
    /// Largest minus smallest of the remaining eigenvalues.
    pub spread: f64,
    /// `μ_common − (R − μ₁)/(n − 1)`.
    pub relation_residual: f64,
}

impl WarpedStructure {
    pub fn holds(&self, tol: f64) -> bool {
        self.eigenvector_residual <= tol
            && self.spread <= tol
            && libm::fabs(self.relation_residual) <= tol
    }
}

pub fn warped_structure_diagnostic(
    entry: &CatalogEntry,
    p: &[f64],
    threshold: f64,
) -> Result<WarpedStructure> {
    let f = entry
        .potential
        .as_ref()
        .ok_or(Error::MissingPotential("warped structure"))?;
    let space = JetSpace::new(entry.dim(), order_for_depth(0))?;
    let pack = curvature_at(&entry.metric, &space, p, 0)?;
    let n = pack.dim();
    let (g, ginv) = (pack.g(), pack.ginv());
    if n >= 4 {
        let w = pack.weyl_jets()?.values().norm(&ginv);
        if w > threshold {
            return Err(Error::NotConformallyFlat {
                point: p.to_vec(),
                weyl: w,
            });
        }
    }
    let fp = f_pack(&pack, f)?;
    let grad = fp.grad_up(&ginv);
    let e = orthonormal_frame(&g)?;
    let l_t = e
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { point: p.to_vec() })?;
    let u = &l_t * DVector::from_column_slice(grad.data());
    let norm = u.norm();
    if norm <= threshold {
        return Err(Error::CriticalPoint { point: p.to_vec() });
    }
    let u = u / norm;
    let ric = DMatrix::from_row_slice(n, n, pack.ric.values().data());
    let ric_frame = e.transpose() * &ric * &e;
    let ru = &ric_frame * &u;
    let mu1 = u.dot(&ru);
    let eigenvector_residual = (&ru - &u * mu1).norm();
    // Orthonormal basis of u⊥ by Gram–Schmidt on the standard basis.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        let mut v = DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
        v -= &u * u.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-8 && basis.len() < n - 1 {
            basis.push(v.normalize());
        }
    }
    let q = DMatrix::from_columns(&basis);
    let restricted = q.transpose() * ric_frame * &q;
    let ev = SymmetricEigen::new(restricted).eigenvalues;
    let (lo, hi) = ev
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(*x), b.max(*x))
        });
    let mu_common = ev.iter().sum::<f64>() / (n - 1) as f64;
    let scalar = pack.scalar_value();
    Ok(WarpedStructure {
        point: p.to_vec(),
        mu_gradient: mu1,
        mu_common,
        eigenvector_residual,
        spread: hi - lo,
        relation_residual: mu_common - (scalar - mu1) / (n - 1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalPoint {
    pub point: Vec<f64>,
    /// Normalized `Y_f` residual of `(e^{2u} g, f)`.
    pub rescaled: f64,
    /// Normalized residual of the printed conformal PDE in terms of `g` and `u`.
    pub pde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub points: Vec<ConformalPoint>,
    /// Points where the two routes disagree about vanishing at `threshold`.
    pub disagreements: usize,
    pub threshold: f64,
}

/// Route (i) rescales and rechecks `Y_f`, which decides; route (ii) evaluates
/// the printed PDE and is only reported.
pub fn yf_conformal_check(
    g: &MetricField,
    u: &ScalarPotential,
    f: &ScalarPotential,
    samples: &Samples,
    threshold: f64,
) -> Result<ConformalReport> {
    let rescaled = conformal_rescale(g, u)?;
    let entry = CatalogEntry {
        name: "conformal".into(),
        metric: rescaled,
        potential: Some(f.clone()),
        vector_field: None,
        expected: Default::default(),
        known: Default::default(),
        trivial_potential: false,
        gradient_field: false,
    };
    let points = samples.points(&entry);
    let space = JetSpace::new(g.dim(), order_for_depth(1))?;
    let mut out = Vec::with_capacity(points.len());
    for p in &points {
        let pack = curvature_at(&entry.metric, &space, p, 1)?;
        let fp = f_pack(&pack, f)?;
        let ginv = pack.ginv();
        let y = yamabe_residual(&pack, &fp.df.values())?;
        let dr = pack.d_scalar()?.values();
        let route_i = rel(&y, &ginv, &[&dr, &dr.minus(&y)]);
        let base = curvature_at(g, &space, p, 1)?;
        let route_ii = printed_pde_residual(&base, u, f)?;
        out.push(ConformalPoint {
            point: p.clone(),
            rescaled: route_i,
            pde: route_ii,
        });
    }
    let disagreements = out
        .iter()
        .filter(|c| (c.rescaled <= threshold) != (c.pde <= threshold))
        .count();
    Ok(ConformalReport {
        points: out,
        disagreements,
        threshold,
    })
}

fn printed_pde_residual(
    pack: &CurvaturePack,
    u: &ScalarPotential,
    f: &ScalarPotential,
) -> Result<f64> {
    let local = &pack.local;
    let n = local.dim() as f64;
    let ginv = pack.ginv();
    let x = local.coords()?;
    let uj = u.eval(&x)?;
    let du = local.gradient(&uj)?;
    let hess_u = local.nabla(&du)?;
    let lap_u = hess_u.trace(0, 1, local.ginv()).data()[0].clone();
    let grad_lap = local.gradient(&lap_u)?.values();
    let du_v = du.values();
    let du_up = du_v.raised(&ginv);
    let hu = hess_u.values();
    let lap = lap_u.value();
    let df = local.gradient(&f.eval(&x)?)?.values();
    let df_up = df.raised(&ginv);
    let grad_u_sq = du_v.norm_sq(&ginv);
    let u_dot_f: f64 = du_v
        .data()
        .iter()
        .zip(df_up.data())
        .map(|(a, b)| a * b)
        .sum();
    let scalar = pack.scalar_value();
    let dr = pack.d_scalar()?.values();
    let ric = pack.ric.values();
    let h_u = hu.contract_vector(0, &du_up);
    let h_f = hu.contract_vector(0, &df_up);
    let ric_f = ric.contract_vector(0, &df_up);
    let lhs_terms = [
        grad_lap.clone(),
        h_u.scaled(n - 2.0),
        du_v.scaled(-(2.0 * lap + (n - 2.0) * grad_u_sq - scalar / (n - 1.0))),
        dr.scaled(-1.0 / (2.0 * (n - 1.0))),
    ];
    let rhs_terms = [
        ric_f.scaled(-1.0),
        h_f.scaled((n - 2.0) / (n - 1.0)),
        df.scaled((lap + (n - 2.0) * grad_u_sq) / (n - 1.0)),
        du_v.scaled(-(n - 2.0) / (n - 1.0) * u_dot_f),
    ];
    let mut raw = Tensor::from_fn(pack.dim(), 1, |_| 0.0);
    for t in &lhs_terms {
        raw = raw.plus(t);
    }
    for t in &rhs_terms {
        raw = raw.minus(t);
    }
    let ingredients: Vec<&Values> = lhs_terms.iter().chain(rhs_terms.iter()).collect();
    Ok(rel(&raw, &ginv, &ingredients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{lookup, CatalogParams};

    fn entry(name: &str) -> CatalogEntry {
        lookup(name, CatalogParams::default()).unwrap()
    }

    #[test]
    fn gaussian_soliton_is_a_space_form_with_lambda_one() {
        let r = classify(
            &entry("gaussian_shrinker"),
            Class::SFf,
            &Samples::Seeded { seed: 7, count: 8 },
            DEFAULT_THRESHOLD,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Member);
        assert!((r.lambda_estimate.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn warped_gaussian_is_hcf_not_ef() {
        let e = entry("warped_gaussian");
        let s = Samples::Seeded { seed: 7, count: 8 };
        let hc = classify(&e, Class::HCf, &s, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(hc.verdict, Verdict::Member, "{:?}", hc.formulations);
        assert!(hc.consistent);
        let ef = classify(&e, Class::Ef, &s, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(ef.verdict, Verdict::NonMember);
        assert!(ef.max.max(ef.lambda_stddev.unwrap()) > 1e3 * DEFAULT_THRESHOLD);
    }

    #[test]
    fn catalog_lattices_match_expectations() {
        for name in crate::catalog::NAMES {
            let e = entry(name);
            let r = lattice_check(
                &e,
                &Samples::Seeded { seed: 3, count: 4 },
                DEFAULT_THRESHOLD,
            )
            .unwrap();
            assert!(r.violations.is_empty(), "{name}: {:?}", r.violations);
            assert!(
                r.unexpected.is_empty(),
                "{name}: unexpected {:?}",
                r.unexpected
            );
            assert!(
                r.inconsistent.is_empty(),
                "{name}: inconsistent {:?}",
                r.inconsistent
            );
        }
    }

    #[test]
    fn missing_structure_errors() {
        let mut e = entry("sphere");
        e.potential = None;
        let s = Samples::Seeded { seed: 1, count: 1 };
        assert!(matches!(
            classify(&e, Class::Yf, &s, 1e-6),
            Err(Error::MissingPotential(_))
        ));
        e.vector_field = None;
        assert!(matches!(
            classify(&e, Class::Ex, &s, 1e-6),
            Err(Error::MissingVectorField(_))
        ));
    }

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::from_value(1e-7, 1e-6), Verdict::Member);
        assert_eq!(Verdict::from_value(5e-6, 1e-6), Verdict::Inconclusive);
        assert_eq!(Verdict::from_value(1e-4, 1e-6), Verdict::NonMember);
    }

    #[test]
    fn warped_structure_on_cylinder_and_gaussian() {
        let e = entry("round_cylinder");
        let p = &sample_points(e.metric.chart(), 1, 2)[0];
        let w = warped_structure_diagnostic(&e, p, 1e-6).unwrap();
        assert!(w.holds(1e-8) && w.mu_gradient.abs() < 1e-10 && (w.mu_common - 2.0).abs() < 1e-10);
        let e = entry("warped_gaussian");
        let p = &sample_points(e.metric.chart(), 1, 2)[0];
        assert!(warped_structure_diagnostic(&e, p, 1e-6)
            .unwrap()
            .holds(1e-8));
        let e = entry("s2xs2");
        assert!(matches!(
            warped_structure_diagnostic(&e, &[1.0, 1.0, 1.0, 1.0], 1e-6),
            Err(Error::NotConformallyFlat { .. })
        ));
    }
}
