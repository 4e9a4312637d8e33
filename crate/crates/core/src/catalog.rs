//! Named example geometries with the classes they are known to belong to.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::classes::{inclusions, vertical_inclusions, violations, Class};
use crate::error::{Error, Result};
use crate::geometry::{warped_product, Chart, MetricField, ScalarPotential, VectorFieldSpec};
use crate::jet::Jet;
use crate::tensor::Scalar;

pub const NAMES: [&str; 9] = [
    "euclidean",
    "gaussian_shrinker",
    "sphere",
    "hyperbolic",
    "round_cylinder",
    "product_lsef",
    "warped_gaussian",
    "warped_yf",
    "s2xs2",
];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CatalogParams {
    pub dim: Option<usize>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KnownScalars {
    pub scalar_curvature: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub metric: MetricField,
    pub potential: Option<ScalarPotential>,
    pub vector_field: Option<VectorFieldSpec>,
    pub expected: BTreeSet<Class>,
    pub known: KnownScalars,
    /// `∇f ≡ 0`, so every potential class coincides with its classical one.
    pub trivial_potential: bool,
    /// `X = ∇f`, so every vector class coincides with its potential one.
    pub gradient_field: bool,
}

impl CatalogEntry {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Arrows of the lattice that apply to this structure.
    pub fn arrows(&self) -> Vec<(Class, Class)> {
        let mut a = inclusions();
        a.extend(vertical_inclusions(
            self.trivial_potential,
            self.gradient_field,
        ));
        a
    }

    pub fn expectation_violations(&self) -> Vec<(Class, Class)> {
        violations(&self.expected, &self.arrows())
    }
}

pub fn lookup(name: &str, params: CatalogParams) -> Result<CatalogEntry> {
    let dim = |default: usize, min: usize| -> Result<usize> {
        let n = params.dim.unwrap_or(default);
        if n < min || n > 6 {
            return Err(Error::Dimension {
                what: "catalog geometry",
                dim: n,
            });
        }
        Ok(n)
    };
    let fixed = |n: usize| -> Result<usize> {
        match params.dim {
            Some(d) if d != n => Err(Error::Dimension {
                what: "catalog geometry",
                dim: d,
            }),
            _ => Ok(n),
        }
    };
    match name {
        "euclidean" => euclidean(dim(3, 2)?),
        "gaussian_shrinker" => gaussian_shrinker(dim(3, 2)?, params.lambda.unwrap_or(1.0)),
        "sphere" => sphere(dim(3, 2)?),
        "hyperbolic" => hyperbolic(dim(3, 2)?),
        "round_cylinder" => round_cylinder(dim(4, 3)?),
        "product_lsef" => product_lsef(fixed(4)?),
        "warped_gaussian" => warped_gaussian(dim(4, 3)?),
        "warped_yf" => warped_yf(fixed(5)?),
        "s2xs2" => s2xs2(fixed(4)?),
        other => Err(Error::UnknownGeometry(other.to_string())),
    }
}

fn set(classes: impl IntoIterator<Item = Class>) -> BTreeSet<Class> {
    classes.into_iter().collect()
}

fn all_except(skip: &[Class]) -> BTreeSet<Class> {
    set(Class::ALL.into_iter().filter(|c| !skip.contains(c)))
}

fn diagonal(
    n: usize,
    diag: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
) -> crate::geometry::MetricEval {
    Arc::new(move |x: &[Jet]| {
        let d = diag(x)?;
        let zero = x[0].zero_like();
        let mut out = vec![zero; n * n];
        for (i, v) in d.into_iter().enumerate() {
            out[i * n + i] = v;
        }
        Ok(out)
    })
}

fn flat(n: usize) -> crate::geometry::MetricEval {
    diagonal(n, move |x| {
        Ok((0..n).map(|_| x[0].zero_like().add_const(1.0)).collect())
    })
}

/// Diagonal of the round metric in hyperspherical angles `(θ_1, …, θ_{m−1}, φ)`.
fn round_diagonal(angles: &[Jet]) -> Vec<Jet> {
    let mut out = Vec::with_capacity(angles.len());
    let mut acc = angles[0].zero_like().add_const(1.0);
    for (k, a) in angles.iter().enumerate() {
        out.push(acc.clone());
        if k + 1 < angles.len() {
            let s = a.sin();
            acc = acc.mul(&s.mul(&s));
        }
    }
    out
}

fn sphere_chart(m: usize, margin: f64) -> Result<Chart> {
    let mut upper = vec![PI; m];
    upper[m - 1] = 2.0 * PI;
    Chart::new(vec![0.0; m], upper, margin)
}

fn potential(
    chart: &Chart,
    f: impl Fn(&[Jet]) -> Result<Jet> + Send + Sync + 'static,
) -> ScalarPotential {
    ScalarPotential::new(chart.clone(), Arc::new(f))
}

fn vector(
    chart: &Chart,
    x: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
) -> VectorFieldSpec {
    VectorFieldSpec::new(chart.clone(), Arc::new(x))
}

fn half_square_norm(x: &[Jet], scale: f64) -> Jet {
    let mut acc = x[0].zero_like();
    for xi in x {
        acc.mul_add(xi, xi, 0.5 * scale);
    }
    acc
}

pub fn euclidean(n: usize) -> Result<CatalogEntry> {
    let chart = Chart::cube(n, -1.0, 1.0, 0.1)?;
    let metric = MetricField::new(chart.clone(), flat(n));
    let rotation = vector(&chart, move |x| {
        let mut v: Vec<Jet> = x.iter().map(|c| c.zero_like()).collect();
        v[0] = x[1].scale(-1.0);
        v[1] = x[0].clone();
        Ok(v)
    });
    Ok(CatalogEntry {
        name: "euclidean".into(),
        potential: Some(ScalarPotential::constant(chart, 0.0)),
        vector_field: Some(rotation),
        metric,
        expected: set(Class::ALL),
        known: KnownScalars {
            scalar_curvature: Some(0.0),
            lambda: Some(0.0),
        },
        trivial_potential: true,
        gradient_field: false,
    })
}

pub fn gaussian_shrinker(n: usize, lambda: f64) -> Result<CatalogEntry> {
    let chart = Chart::cube(n, -1.0, 1.0, 0.1)?;
    let metric = MetricField::new(chart.clone(), flat(n));
    let f = potential(&chart, move |x| Ok(half_square_norm(x, lambda)));
    Ok(CatalogEntry {
        name: "gaussian_shrinker".into(),
        vector_field: Some(VectorFieldSpec::gradient(&metric, &f)?),
        potential: Some(f),
        metric,
        expected: set(Class::ALL),
        known: KnownScalars {
            scalar_curvature: Some(0.0),
            lambda: Some(lambda),
        },
        trivial_potential: false,
        gradient_field: true,
    })
}

pub fn sphere_metric(n: usize) -> Result<MetricField> {
    Ok(MetricField::new(
        sphere_chart(n, 0.1)?,
        diagonal(n, |x| Ok(round_diagonal(x))),
    ))
}

pub fn sphere(n: usize) -> Result<CatalogEntry> {
    let metric = sphere_metric(n)?;
    let chart = metric.chart().clone();
    let f = potential(&chart, |x| Ok(x[0].cos()));
    let killing = vector(&chart, move |x| {
        let mut v: Vec<Jet> = x.iter().map(|c| c.zero_like()).collect();
        v[n - 1] = v[n - 1].add_const(1.0);
        Ok(v)
    });
    Ok(CatalogEntry {
        name: "sphere".into(),
        potential: Some(f),
        vector_field: Some(killing),
        metric,
        expected: set(Class::CLASSICAL.into_iter().chain(Class::VECTOR)),
        known: KnownScalars {
            scalar_curvature: Some((n * (n - 1)) as f64),
            lambda: Some((n - 1) as f64),
        },
        trivial_potential: false,
        gradient_field: false,
    })
}

pub fn hyperbolic(n: usize) -> Result<CatalogEntry> {
    let mut lower = vec![-1.0; n];
    let mut upper = vec![1.0; n];
    lower[n - 1] = 0.5;
    upper[n - 1] = 2.0;
    let chart = Chart::new(lower, upper, 0.1)?;
    let metric = MetricField::new(
        chart.clone(),
        diagonal(n, move |x| {
            let w = x[n - 1].powi(2).recip()?;
            Ok(vec![w; n])
        }),
    );
    let dilation = vector(&chart, |x| Ok(x.to_vec()));
    Ok(CatalogEntry {
        name: "hyperbolic".into(),
        potential: Some(ScalarPotential::constant(chart, 0.0)),
        vector_field: Some(dilation),
        metric,
        expected: set(Class::ALL),
        known: KnownScalars {
            scalar_curvature: Some(-((n * (n - 1)) as f64)),
            lambda: Some(-((n - 1) as f64)),
        },
        trivial_potential: true,
        gradient_field: false,
    })
}

pub fn round_cylinder(n: usize) -> Result<CatalogEntry> {
    let angles = sphere_chart(n - 1, 0.1)?;
    let lower = core::iter::once(-1.0)
        .chain(angles.lower().iter().copied())
        .collect();
    let upper = core::iter::once(1.0)
        .chain(angles.upper().iter().copied())
        .collect();
    let chart = Chart::new(lower, upper, 0.1)?;
    let metric = MetricField::new(
        chart.clone(),
        diagonal(n, |x| {
            let mut d = vec![x[0].zero_like().add_const(1.0)];
            d.extend(round_diagonal(&x[1..]));
            Ok(d)
        }),
    );
    let lambda = (n - 2) as f64;
    let f = potential(&chart, move |x| Ok(x[0].mul(&x[0]).scale(0.5 * lambda)));
    Ok(CatalogEntry {
        name: "round_cylinder".into(),
        vector_field: Some(VectorFieldSpec::gradient(&metric, &f)?),
        potential: Some(f),
        metric,
        expected: set([Class::LS, Class::PR, Class::HC, Class::Y]
            .into_iter()
            .chain(Class::POTENTIAL)
            .chain(Class::VECTOR)),
        known: KnownScalars {
            scalar_curvature: Some(((n - 1) * (n - 2)) as f64),
            lambda: Some(lambda),
        },
        trivial_potential: false,
        gradient_field: true,
    })
}

pub fn product_lsef(n: usize) -> Result<CatalogEntry> {
    let chart = Chart::new(
        vec![-1.0, -1.0, 0.0, 0.0],
        vec![1.0, 1.0, PI, 2.0 * PI],
        0.1,
    )?;
    let metric = MetricField::new(
        chart.clone(),
        diagonal(n, |x| {
            let one = x[0].zero_like().add_const(1.0);
            let s = x[2].sin();
            Ok(vec![one.clone(), one.clone(), one, s.mul(&s)])
        }),
    );
    let f = potential(&chart, |x| Ok(half_square_norm(&x[..2], 1.0)));
    Ok(CatalogEntry {
        name: "product_lsef".into(),
        vector_field: Some(VectorFieldSpec::gradient(&metric, &f)?),
        potential: Some(f),
        metric,
        expected: set([Class::LS, Class::PR, Class::HC, Class::Y]
            .into_iter()
            .chain(Class::POTENTIAL.into_iter().filter(|c| *c != Class::SFf))
            .chain(Class::VECTOR.into_iter().filter(|c| *c != Class::SFx))),
        known: KnownScalars {
            scalar_curvature: Some(2.0),
            lambda: Some(1.0),
        },
        trivial_potential: false,
        gradient_field: true,
    })
}

/// `q = t²`, `F = e^q`, `f = (n/2) log(1 + t²)`.
fn gaussian_warp(
    fiber: &MetricField,
    name: &str,
    expected: BTreeSet<Class>,
) -> Result<CatalogEntry> {
    let n = fiber.dim() + 1;
    let metric = warped_product(Arc::new(|t: &Jet| Ok(t.mul(t).exp())), fiber, -1.5, 1.5)?;
    let chart = metric.chart().clone();
    let f = potential(&chart, move |x| {
        Ok(x[0].mul(&x[0]).add_const(1.0).ln()?.scale(0.5 * n as f64))
    });
    Ok(CatalogEntry {
        name: name.into(),
        vector_field: Some(VectorFieldSpec::gradient(&metric, &f)?),
        potential: Some(f),
        metric,
        expected,
        known: KnownScalars::default(),
        trivial_potential: false,
        gradient_field: true,
    })
}

pub fn warped_gaussian(n: usize) -> Result<CatalogEntry> {
    let fiber = MetricField::new(Chart::cube(n - 1, 0.0, 1.0, 0.1)?, flat(n - 1));
    gaussian_warp(
        &fiber,
        "warped_gaussian",
        set([Class::HCf, Class::Yf, Class::HCx, Class::Yx]),
    )
}

/// `S²(1) × H²(1)`: scalar-flat, not Ricci-flat.
pub fn sphere_hyperbolic_fiber() -> Result<MetricField> {
    let chart = Chart::new(vec![0.0, 0.0, -1.0, 0.5], vec![PI, 2.0 * PI, 1.0, 2.0], 0.1)?;
    Ok(MetricField::new(
        chart,
        diagonal(4, |x| {
            let s = x[0].sin();
            let w = x[3].powi(2).recip()?;
            Ok(vec![
                x[0].zero_like().add_const(1.0),
                s.mul(&s),
                w.clone(),
                w,
            ])
        }),
    ))
}

pub fn warped_yf(_n: usize) -> Result<CatalogEntry> {
    gaussian_warp(
        &sphere_hyperbolic_fiber()?,
        "warped_yf",
        set([Class::Yf, Class::Yx]),
    )
}

pub fn s2xs2_metric() -> Result<MetricField> {
    let chart = Chart::new(vec![0.0; 4], vec![PI, 2.0 * PI, PI, 2.0 * PI], 0.1)?;
    Ok(MetricField::new(
        chart,
        diagonal(4, |x| {
            let one = x[0].zero_like().add_const(1.0);
            let (a, b) = (x[0].sin(), x[2].sin());
            Ok(vec![one.clone(), a.mul(&a), one, b.mul(&b)])
        }),
    ))
}

pub fn s2xs2(_n: usize) -> Result<CatalogEntry> {
    let metric = s2xs2_metric()?;
    let chart = metric.chart().clone();
    let killing = vector(&chart, |x| {
        let mut v: Vec<Jet> = x.iter().map(|c| c.zero_like()).collect();
        v[1] = v[1].add_const(1.0);
        Ok(v)
    });
    Ok(CatalogEntry {
        name: "s2xs2".into(),
        potential: Some(ScalarPotential::constant(chart, 0.0)),
        vector_field: Some(killing),
        metric,
        expected: all_except(&[Class::SF, Class::SFf, Class::SFx]),
        known: KnownScalars {
            scalar_curvature: Some(4.0),
            lambda: Some(1.0),
        },
        trivial_potential: true,
        gradient_field: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{is_positive_definite, sample_points};
    use crate::jet::JetSpace;

    #[test]
    fn every_entry_is_upward_closed() {
        for name in NAMES {
            let e = lookup(name, CatalogParams::default()).unwrap();
            assert!(
                e.expectation_violations().is_empty(),
                "{name}: {:?}",
                e.expectation_violations()
            );
        }
    }

    #[test]
    fn metrics_are_symmetric_positive_definite() {
        for name in NAMES {
            let e = lookup(name, CatalogParams::default()).unwrap();
            let n = e.dim();
            let space = JetSpace::new(n, 1).unwrap();
            for p in sample_points(e.metric.chart(), 256, 11) {
                let g = e
                    .metric
                    .components(&space.point(&p, 1).unwrap())
                    .unwrap()
                    .values();
                for i in 0..n {
                    for j in 0..n {
                        assert_eq!(g.at2(i, j), g.at2(j, i));
                    }
                }
                assert!(is_positive_definite(g.data(), n), "{name} at {p:?}");
            }
        }
    }

    #[test]
    fn unknown_name_and_bad_dimension() {
        assert!(matches!(
            lookup("torus", CatalogParams::default()),
            Err(Error::UnknownGeometry(_))
        ));
        let p = CatalogParams {
            dim: Some(3),
            lambda: None,
        };
        assert!(matches!(lookup("s2xs2", p), Err(Error::Dimension { .. })));
    }
}
