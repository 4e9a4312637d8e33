//! Geometry-spec files: a JSON description of a chart, a metric, and optionally
//! a potential and a vector field.
//!
//! ```json
//! {
//!   "name": "paraboloid",
//!   "dim": 3,
//!   "chart": { "ranges": [[-1, 1], [-1, 1], [-1, 1]], "margin": 0.1 },
//!   "metric": { "kind": "expression",
//!               "params": { "diagonal": ["1 + x1^2", "1", "exp(x2)"] } },
//!   "potential": { "kind": "expression", "params": { "expr": "x1^2 / 2" } },
//!   "vector_field": { "kind": "gradient" }
//! }
//! ```
//!
//! Unknown fields are rejected at every level.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fcanon_core::catalog::{self, CatalogEntry, CatalogParams, KnownScalars};
use fcanon_core::classes::Class;
use fcanon_core::geometry::{
    conformal_rescale, sample_points, Chart, MetricField, ScalarPotential, VectorFieldSpec,
};
use fcanon_core::jet::{Jet, JetSpace};
use fcanon_core::tensor::Scalar;

use crate::expr::{Expr, ParseError};

/// Points at which a spec metric is checked for symmetry and positivity on load.
const LOAD_CHECK_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_field: Option<VectorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub ranges: Vec<[f64; 2]>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum MetricSpec {
    /// Component expressions in the chart coordinates.
    Expression(ComponentParams),
    /// `e^{2u} δ` for an expression `u`.
    ConformallyFlat(ConformalParams),
    /// The metric of a catalog geometry in its own chart.
    Catalog(CatalogRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentParams {
    /// Full symmetric `n × n` matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<String>>>,
    /// Diagonal entries; off-diagonal components vanish.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalParams {
    pub u: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum PotentialSpec {
    Expression(ExprParams),
    Constant(ConstantParams),
    /// The potential of the catalog geometry named by the metric.
    Catalog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprParams {
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantParams {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum VectorSpec {
    /// Contravariant components `X^i`.
    Expression(VectorParams),
    /// `X = ∇f` for the spec's potential.
    Gradient,
    Catalog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorParams {
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("malformed geometry spec at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] fcanon_core::Error),
}

impl SpecError {
    pub fn kind(&self) -> &'static str {
        match self {
            SpecError::Json { .. } => "json",
            SpecError::Expression { .. } => "expression",
            SpecError::Invalid(_) => "invalid_spec",
            SpecError::Geometry(_) => "geometry",
        }
    }
}

impl From<fcanon_core::jet::JetError> for SpecError {
    fn from(e: fcanon_core::jet::JetError) -> Self {
        SpecError::Geometry(e.into())
    }
}

impl From<serde_json::Error> for SpecError {
    fn from(e: serde_json::Error) -> Self {
        SpecError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn parse(field: impl Into<String>, src: &str, dim: usize) -> Result<Expr, SpecError> {
    Expr::parse(src, dim).map_err(|source| SpecError::Expression {
        field: field.into(),
        source,
    })
}

impl GeometrySpec {
    pub fn from_json(text: &str) -> Result<GeometrySpec, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn chart(&self) -> Result<Chart, SpecError> {
        let c = self.chart.as_ref().ok_or_else(|| {
            SpecError::Invalid("`chart` is required for expression metrics".into())
        })?;
        if c.ranges.len() != self.dim {
            return Err(SpecError::Invalid(format!(
                "chart has {} ranges for dimension {}",
                c.ranges.len(),
                self.dim
            )));
        }
        Ok(Chart::new(
            c.ranges.iter().map(|r| r[0]).collect(),
            c.ranges.iter().map(|r| r[1]).collect(),
            c.margin,
        )?)
    }

    /// Builds the entry; the metric is checked for symmetry and positivity at
    /// seeded points of the chart.
    pub fn build(&self) -> Result<CatalogEntry, SpecError> {
        let n = self.dim;
        if n < 2 {
            return Err(SpecError::Invalid(format!("dimension {n} is below 2")));
        }
        let base = match &self.metric {
            MetricSpec::Catalog(r) => {
                if self.chart.is_some() {
                    return Err(SpecError::Invalid(
                        "catalog metrics carry their own chart".into(),
                    ));
                }
                Some(catalog::lookup(
                    &r.name,
                    CatalogParams {
                        dim: Some(n),
                        lambda: r.lambda,
                    },
                )?)
            }
            _ => None,
        };
        let metric = match (&self.metric, &base) {
            (MetricSpec::Catalog(_), Some(b)) => b.metric.clone(),
            (MetricSpec::Expression(p), _) => expression_metric(self.chart()?, p, n)?,
            (MetricSpec::ConformallyFlat(p), _) => {
                let chart = self.chart()?;
                let flat = expression_metric(
                    chart.clone(),
                    &ComponentParams {
                        components: None,
                        diagonal: Some(vec!["1".into(); n]),
                    },
                    n,
                )?;
                let u = scalar(&chart, parse("metric.params.u", &p.u, n)?);
                conformal_rescale(&flat, &u)?
            }
            _ => unreachable!("catalog metric has a base entry"),
        };
        let chart = metric.chart().clone();
        let from_catalog = |what: &str| {
            SpecError::Invalid(format!("`{what}` of kind catalog needs a catalog metric"))
        };

        let (potential, trivial_potential) = match &self.potential {
            None => (None, false),
            Some(PotentialSpec::Constant(c)) => (
                Some(ScalarPotential::constant(chart.clone(), c.value)),
                true,
            ),
            Some(PotentialSpec::Expression(e)) => {
                let ex = parse("potential.params.expr", &e.expr, n)?;
                let trivial = ex.constant().is_some();
                (Some(scalar(&chart, ex)), trivial)
            }
            Some(PotentialSpec::Catalog) => {
                let b = base.as_ref().ok_or_else(|| from_catalog("potential"))?;
                (b.potential.clone(), b.trivial_potential)
            }
        };

        let (vector_field, gradient_field) = match &self.vector_field {
            None => (None, false),
            Some(VectorSpec::Gradient) => {
                let f = potential.as_ref().ok_or_else(|| {
                    SpecError::Invalid("a gradient vector field needs a potential".into())
                })?;
                (Some(VectorFieldSpec::gradient(&metric, f)?), true)
            }
            Some(VectorSpec::Expression(v)) => {
                if v.components.len() != n {
                    return Err(SpecError::Invalid(format!(
                        "vector field has {} components for dimension {n}",
                        v.components.len()
                    )));
                }
                let comps = v
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, s)| parse(format!("vector_field.params.components[{i}]"), s, n))
                    .collect::<Result<Vec<_>, _>>()?;
                let comps = Arc::new(comps);
                let eval = Arc::new(move |x: &[Jet]| comps.iter().map(|e| e.eval(x)).collect());
                (Some(VectorFieldSpec::new(chart.clone(), eval)), false)
            }
            Some(VectorSpec::Catalog) => {
                let b = base.as_ref().ok_or_else(|| from_catalog("vector_field"))?;
                (b.vector_field.clone(), b.gradient_field)
            }
        };

        check_metric(&metric)?;
        let (expected, known) = match &base {
            Some(b)
                if matches!(self.potential, Some(PotentialSpec::Catalog))
                    && matches!(self.vector_field, Some(VectorSpec::Catalog)) =>
            {
                (b.expected.clone(), b.known)
            }
            _ => (BTreeSet::<Class>::new(), KnownScalars::default()),
        };
        Ok(CatalogEntry {
            name: self.name.clone(),
            metric,
            potential,
            vector_field,
            expected,
            known,
            trivial_potential,
            gradient_field,
        })
    }
}

fn scalar(chart: &Chart, e: Expr) -> ScalarPotential {
    ScalarPotential::new(chart.clone(), Arc::new(move |x: &[Jet]| e.eval(x)))
}

fn expression_metric(
    chart: Chart,
    p: &ComponentParams,
    n: usize,
) -> Result<MetricField, SpecError> {
    let rows: Vec<Vec<Option<Expr>>> = match (&p.components, &p.diagonal) {
        (Some(m), None) => {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(SpecError::Invalid(format!(
                    "metric components must be {n} x {n}"
                )));
            }
            m.iter()
                .enumerate()
                .map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(j, s)| {
                            parse(format!("metric.params.components[{i}][{j}]"), s, n).map(Some)
                        })
                        .collect()
                })
                .collect::<Result<_, _>>()?
        }
        (None, Some(d)) => {
            if d.len() != n {
                return Err(SpecError::Invalid(format!(
                    "metric diagonal must have {n} entries"
                )));
            }
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                parse(format!("metric.params.diagonal[{i}]"), &d[i], n).map(Some)
                            } else {
                                Ok(None)
                            }
                        })
                        .collect()
                })
                .collect::<Result<_, _>>()?
        }
        _ => {
            return Err(SpecError::Invalid(
                "metric params need exactly one of `components` and `diagonal`".into(),
            ))
        }
    };
    // Lower-triangle expressions are kept only for the symmetry check below;
    // evaluation mirrors the upper triangle so symmetry holds exactly.
    let rows = Arc::new(rows);
    let eval_rows = rows.clone();
    let metric = MetricField::new(
        chart.clone(),
        Arc::new(move |x: &[Jet]| {
            let zero = x[0].zero_like();
            let mut out = vec![zero.clone(); n * n];
            for i in 0..n {
                for j in i..n {
                    let v = match &eval_rows[i][j] {
                        Some(e) => e.eval(x)?,
                        None => zero.clone(),
                    };
                    out[j * n + i] = v.clone();
                    out[i * n + j] = v;
                }
            }
            Ok(out)
        }),
    );
    let space = JetSpace::new(n, 1)?;
    for p in sample_points(&chart, LOAD_CHECK_POINTS, 0) {
        let x = space.point(&p, 1)?;
        for i in 0..n {
            for j in (i + 1)..n {
                let value = |e: &Option<Expr>| -> Result<f64, SpecError> {
                    Ok(match e {
                        Some(e) => e.eval(&x)?.value(),
                        None => 0.0,
                    })
                };
                let (a, b) = (value(&rows[i][j])?, value(&rows[j][i])?);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(SpecError::Invalid(format!(
                        "metric components [{i}][{j}] and [{j}][{i}] differ at {p:?}"
                    )));
                }
            }
        }
    }
    Ok(metric)
}

/// Positive definiteness at seeded points, via a Cholesky attempt.
fn check_metric(metric: &MetricField) -> Result<(), SpecError> {
    let n = metric.dim();
    let space = JetSpace::new(n, 1)?;
    for p in sample_points(metric.chart(), LOAD_CHECK_POINTS, 0) {
        let g = metric.components(&space.point(&p, 1)?)?;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g.at2(i, j).value());
        if m.iter().any(|v| !v.is_finite()) || m.cholesky().is_none() {
            return Err(fcanon_core::Error::NotPositiveDefinite { point: p }.into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARABOLOID: &str = r#"{
        "name": "graph",
        "dim": 3,
        "chart": { "ranges": [[-1, 1], [-1, 1], [-1, 1]], "margin": 0.1 },
        "metric": { "kind": "expression", "params": { "components": [
            ["1 + 4*x1^2", "4*x1*x2", "0"],
            ["4*x2*x1", "1 + 4*x2^2", "0"],
            ["0", "0", "1"]] } },
        "potential": { "kind": "expression", "params": { "expr": "x3^2/2" } },
        "vector_field": { "kind": "gradient" }
    }"#;

    #[test]
    fn builds_and_round_trips() {
        let spec = GeometrySpec::from_json(PARABOLOID).unwrap();
        let entry = spec.build().unwrap();
        assert_eq!(entry.dim(), 3);
        assert!(entry.gradient_field && !entry.trivial_potential);
        assert_eq!(GeometrySpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = PARABOLOID.replace("\"margin\": 0.1", "\"margin\": 0.1, \"extra\": 1");
        assert_eq!(GeometrySpec::from_json(&bad).unwrap_err().kind(), "json");
        let bad = PARABOLOID.replace("\"expr\"", "\"expression\"");
        assert!(GeometrySpec::from_json(&bad).is_err());
        let bad = PARABOLOID.replace("\"gradient\"", "\"curl\"");
        assert!(GeometrySpec::from_json(&bad).is_err());
    }

    #[test]
    fn malformed_json_reports_location() {
        match GeometrySpec::from_json("{\n  \"name\": \"x\",\n  \"dim\": }") {
            Err(SpecError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_or_indefinite_metrics_fail() {
        let asym = PARABOLOID.replace("\"4*x2*x1\"", "\"3*x2*x1\"");
        let e = GeometrySpec::from_json(&asym).unwrap().build().unwrap_err();
        assert!(matches!(e, SpecError::Invalid(_)), "{e}");
        let indef = PARABOLOID.replace("[\"0\", \"0\", \"1\"]", "[\"0\", \"0\", \"-1\"]");
        let e = GeometrySpec::from_json(&indef)
            .unwrap()
            .build()
            .unwrap_err();
        assert!(matches!(
            e,
            SpecError::Geometry(fcanon_core::Error::NotPositiveDefinite { .. })
        ));
        let bad_expr = PARABOLOID.replace("x3^2/2", "x7^2");
        let e = GeometrySpec::from_json(&bad_expr)
            .unwrap()
            .build()
            .unwrap_err();
        assert_eq!(e.kind(), "expression");
    }

    #[test]
    fn catalog_kinds_reuse_the_catalog() {
        let spec = GeometrySpec {
            name: "cyl".into(),
            dim: 4,
            chart: None,
            metric: MetricSpec::Catalog(CatalogRef {
                name: "round_cylinder".into(),
                lambda: None,
            }),
            potential: Some(PotentialSpec::Catalog),
            vector_field: Some(VectorSpec::Catalog),
        };
        let text = spec.to_json();
        let entry = GeometrySpec::from_json(&text).unwrap().build().unwrap();
        assert!(entry.expected.contains(&Class::Ef));
    }

    #[test]
    fn conformally_flat_kind() {
        let spec = GeometrySpec {
            name: "stereo".into(),
            dim: 2,
            chart: Some(ChartSpec {
                ranges: vec![[-1.0, 1.0]; 2],
                margin: 0.1,
            }),
            metric: MetricSpec::ConformallyFlat(ConformalParams {
                u: "log(2/(1 + x1^2 + x2^2))".into(),
            }),
            potential: None,
            vector_field: None,
        };
        let entry = spec.build().unwrap();
        let space = JetSpace::new(2, 2).unwrap();
        let pack =
            fcanon_core::curvature::curvature_at(&entry.metric, &space, &[0.3, -0.2], 0).unwrap();
        assert!((pack.scalar_value() - 2.0).abs() < 1e-12);
    }
}
