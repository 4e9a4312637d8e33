//! Tensor-product Gauss–Legendre quadrature on coordinate boxes and spheres,
//! and the integral identities built on it.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_at, order_for_depth, weyl_pm, CurvaturePack};
use crate::error::{Error, Result};
use crate::geometry::{MetricField, ScalarPotential, VectorFieldSpec};
use crate::jet::JetSpace;
use crate::potential::{f_pack, x_pack, XPack};
use crate::tensor::Values;

/// Angular distance kept from each pole of a hyperspherical chart.
pub const POLAR_CAP: f64 = 1e-6;
pub const DEFAULT_NODES: usize = 64;
/// Pointwise tolerance for conformal-field preconditions.
pub const CONFORMAL_TOLERANCE: f64 = 1e-8;

/// Nodes and weights of the `m`-point rule on `[−1, 1]`, by Newton iteration
/// on the three-term Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; m];
    let mut weights = alloc::vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (mf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            dp = 1.0;
            x = 0.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, count: usize) -> Axis {
        let (x, w) = gauss_legendre(count);
        let half = 0.5 * (upper - lower);
        let mid = 0.5 * (upper + lower);
        Axis {
            lower,
            upper,
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| v * half).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub axes: Vec<Axis>,
    /// Polynomial degree integrated exactly along every axis.
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl QuadratureRule {
    pub fn on_box(lower: &[f64], upper: &[f64], count: usize) -> QuadratureRule {
        let axes = lower
            .iter()
            .zip(upper)
            .map(|(a, b)| Axis::new(*a, *b, count))
            .collect();
        QuadratureRule {
            axes,
            degree: 2 * count - 1,
        }
    }

    /// Rule for the chart `(θ_1, …, θ_{m−1}, φ)` of the unit `S^m`, with polar caps removed.
    pub fn sphere(m: usize, count: usize) -> QuadratureRule {
        let mut lower = alloc::vec![POLAR_CAP; m];
        let mut upper = alloc::vec![PI - POLAR_CAP; m];
        lower[m - 1] = 0.0;
        upper[m - 1] = 2.0 * PI;
        Self::on_box(&lower, &upper, count)
    }

    pub fn product(&self, other: &QuadratureRule) -> QuadratureRule {
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        QuadratureRule {
            axes,
            degree: self.degree.min(other.degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All nodes in lexicographic order, last axis fastest.
    pub fn nodes(&self) -> Vec<Node> {
        let mut out = Vec::with_capacity(self.len());
        let mut idx = alloc::vec![0usize; self.dim()];
        if self.is_empty() {
            return out;
        }
        loop {
            let point = idx
                .iter()
                .zip(&self.axes)
                .map(|(i, a)| a.nodes[*i])
                .collect();
            let weight = idx
                .iter()
                .zip(&self.axes)
                .map(|(i, a)| a.weights[*i])
                .product();
            out.push(Node { point, weight });
            let mut k = self.dim();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.axes[k].nodes.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// `√det g` from metric values.
pub fn volume_element(g: &Values) -> Result<f64> {
    let n = g.dim();
    let m = DMatrix::from_row_slice(n, n, g.data());
    let det = m.determinant();
    if !(det > 0.0) {
        return Err(Error::NotPositiveDefinite { point: Vec::new() });
    }
    Ok(libm::sqrt(det))
}

/// Sums `weight · value` in node order, so values computed in any order reduce identically.
pub fn weighted_sum(nodes: &[Node], values: &[f64]) -> f64 {
    nodes.iter().zip(values).map(|(n, v)| n.weight * v).sum()
}

/// `∫ F_c dV` for several integrands sharing one curvature evaluation per node.
pub fn integrate_many<F, const K: usize>(
    rule: &QuadratureRule,
    metric: &MetricField,
    depth: usize,
    mut field: F,
) -> Result<[f64; K]>
where
    F: FnMut(&CurvaturePack) -> Result<[f64; K]>,
{
    if rule.dim() != metric.dim() {
        return Err(Error::ChartMismatch);
    }
    let space = JetSpace::new(metric.dim(), order_for_depth(depth))?;
    let mut totals = [0.0; K];
    for node in rule.nodes() {
        let pack = curvature_at(metric, &space, &node.point, depth)?;
        let w = node.weight * volume_element(&pack.g())?;
        for (t, v) in totals.iter_mut().zip(field(&pack)?) {
            *t += w * v;
        }
    }
    Ok(totals)
}

/// `∫ F dV`, with `F` evaluated from the curvature pack of depth `depth` at each node.
pub fn integrate<F>(
    rule: &QuadratureRule,
    metric: &MetricField,
    depth: usize,
    mut field: F,
) -> Result<f64>
where
    F: FnMut(&CurvaturePack) -> Result<f64>,
{
    Ok(integrate_many(rule, metric, depth, |p| Ok([field(p)?]))?[0])
}

/// `∫ f dV` for a scalar field.
pub fn integrate_scalar(
    rule: &QuadratureRule,
    metric: &MetricField,
    f: &ScalarPotential,
) -> Result<f64> {
    integrate(rule, metric, 0, |pack| {
        Ok(f.eval(&pack.local.coords()?)?.value())
    })
}

/// `|L_X g − (2 div X / n) g| / (1 + |L_X g|)`.
pub fn conformal_defect(pack: &CurvaturePack, xp: &XPack) -> f64 {
    let ginv = pack.ginv();
    let lie = xp.lie.values();
    let n = pack.dim() as f64;
    let pure = pack.g().scaled(2.0 * xp.div_x.value() / n);
    lie.minus(&pure).norm(&ginv) / (1.0 + lie.norm(&ginv))
}

fn dot_up(a_low: &Values, b_up: &Values) -> f64 {
    a_low
        .data()
        .iter()
        .zip(b_up.data())
        .map(|(a, b)| a * b)
        .sum()
}

fn ensure_conformal(defect: f64) -> Result<()> {
    if defect > CONFORMAL_TOLERANCE {
        return Err(Error::NotConformal { residual: defect });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KazdanWarner {
    /// `∫ Ric(∇f, X) dV`.
    pub integral: f64,
    /// `∫ |Ric| |∇f| |X| dV`, the size the integral is compared with.
    pub scale: f64,
    pub max_conformal_defect: f64,
}

/// `∫ Ric(∇f, X) dV` for a conformal field `X`, checked at every node.
pub fn kazdan_warner_residual(
    rule: &QuadratureRule,
    metric: &MetricField,
    f: &ScalarPotential,
    x: &VectorFieldSpec,
) -> Result<KazdanWarner> {
    let mut defect: f64 = 0.0;
    let [integral, scale] = integrate_many(rule, metric, 0, |pack| {
        let xp = x_pack(pack, x)?;
        defect = defect.max(conformal_defect(pack, &xp));
        let fp = f_pack(pack, f)?;
        let ginv = pack.ginv();
        let ric = pack.ric.values();
        let x_up = xp.x_up.values();
        let size = ric.norm(&ginv) * fp.df.values().norm(&ginv) * x_up.norm(&pack.g());
        Ok([
            dot_up(&ric.contract_vector(0, &fp.grad_up(&ginv)), &x_up),
            size,
        ])
    })?;
    ensure_conformal(defect)?;
    Ok(KazdanWarner {
        integral,
        scale,
        max_conformal_defect: defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerIdentity {
    /// `∫ Ric(∇f, ∇f) dV`.
    pub lhs: f64,
    /// `((n−1)/n) ∫ (Δf)² dV`.
    pub rhs: f64,
    pub residual: f64,
    pub max_hessian_defect: f64,
}

/// Both sides of the integrated Bochner formula for a conformal gradient field.
pub fn bochner_conformal_identity(
    rule: &QuadratureRule,
    metric: &MetricField,
    f: &ScalarPotential,
) -> Result<BochnerIdentity> {
    let n = metric.dim() as f64;
    let mut defect: f64 = 0.0;
    let [lhs, lap_sq] = integrate_many(rule, metric, 0, |pack| {
        let fp = f_pack(pack, f)?;
        let ginv = pack.ginv();
        let hess = fp.hess.values();
        let lap = fp.laplacian.value();
        let pure = pack.g().scaled(lap / n);
        defect = defect.max(hess.minus(&pure).norm(&ginv) / (1.0 + hess.norm(&ginv)));
        let up = fp.grad_up(&ginv);
        Ok([
            dot_up(&pack.ric.values().contract_vector(0, &up), &up),
            lap * lap,
        ])
    })?;
    ensure_conformal(defect)?;
    let rhs = (n - 1.0) / n * lap_sq;
    Ok(BochnerIdentity {
        lhs,
        rhs,
        residual: lhs - rhs,
        max_hessian_defect: defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NongradientIdentities {
    /// `∫ Ric(X, X) dV`.
    pub ric_xx: f64,
    /// `∫ |∇X|² dV`.
    pub grad_sq: f64,
    /// `∫ (div X)² dV`.
    pub div_sq: f64,
    /// `½ ∫ ⟨div A^X, X⟩ dV`.
    pub half_div_antisym: f64,
    /// `∫ Ric(X,X) − ∫ |∇X|² − ((n−2)/n) ∫ (div X)²`.
    pub first_residual: f64,
    /// `½ ∫ ⟨div A^X, X⟩ + ∫ |∇X|² − (1/n) ∫ (div X)²`.
    pub second_residual: f64,
    /// `∫ Ric(X,X) + ½ ∫ ⟨div A^X, X⟩`, which vanishes only for Killing fields.
    pub combined: f64,
    pub max_conformal_defect: f64,
}

/// The two integration-by-parts identities for a conformal field `X`.
pub fn nongradient_kw_residual(
    rule: &QuadratureRule,
    metric: &MetricField,
    x: &VectorFieldSpec,
) -> Result<NongradientIdentities> {
    let n = metric.dim() as f64;
    let mut defect: f64 = 0.0;
    let totals = integrate_many(rule, metric, 1, |pack| {
        let xp = x_pack(pack, x)?;
        defect = defect.max(conformal_defect(pack, &xp));
        let ginv = pack.ginv();
        let x_up = xp.x_up.values();
        let ric_xx = dot_up(&pack.ric.values().contract_vector(0, &x_up), &x_up);
        let grad_sq = xp.nabla_x.values().norm_sq(&ginv);
        let div = xp.div_x.value();
        let da = xp.div_antisym.as_ref().expect("depth 1");
        Ok([ric_xx, grad_sq, div * div, 0.5 * dot_up(da, &x_up)])
    })?;
    ensure_conformal(defect)?;
    let [ric_xx, grad_sq, div_sq, half_div_antisym] = totals;
    Ok(NongradientIdentities {
        ric_xx,
        grad_sq,
        div_sq,
        half_div_antisym,
        first_residual: ric_xx - grad_sq - (n - 2.0) / n * div_sq,
        second_residual: half_div_antisym + grad_sq - div_sq / n,
        combined: ric_xx + half_div_antisym,
        max_conformal_defect: defect,
    })
}

/// `|W⁺|² − |W⁻|²` at `p`.
pub fn signature_integrand(metric: &MetricField, p: &[f64]) -> Result<f64> {
    if metric.dim() != 4 {
        return Err(Error::Dimension {
            what: "signature integrand",
            dim: metric.dim(),
        });
    }
    let space = JetSpace::new(4, order_for_depth(0))?;
    Ok(weyl_pm(&curvature_at(metric, &space, p, 0)?)?.signature_density())
}

/// `∫ (|W⁺|² − |W⁻|²) dV`, which is `48π² τ` on a closed oriented 4-manifold.
pub fn signature_quadrature(rule: &QuadratureRule, metric: &MetricField) -> Result<f64> {
    if metric.dim() != 4 {
        return Err(Error::Dimension {
            what: "signature integrand",
            dim: metric.dim(),
        });
    }
    integrate(rule, metric, 0, |pack| {
        Ok(weyl_pm(pack)?.signature_density())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{s2xs2_metric, sphere_metric};
    use crate::jet::Jet;
    use crate::tensor::Scalar;
    use alloc::sync::Arc;

    fn cos_first(metric: &MetricField) -> ScalarPotential {
        ScalarPotential::new(metric.chart().clone(), Arc::new(|x: &[Jet]| Ok(x[0].cos())))
    }

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for m in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * m - 2;
            let got: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * libm::pow(*x, deg as f64))
                .sum();
            assert!((got - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "m={m}");
            assert!(w.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn sphere_volumes_and_moments() {
        let s2 = sphere_metric(2).unwrap();
        let one = ScalarPotential::constant(s2.chart().clone(), 1.0);
        let rule = QuadratureRule::sphere(2, DEFAULT_NODES);
        assert!((integrate_scalar(&rule, &s2, &one).unwrap() - 4.0 * PI).abs() < 1e-10);
        assert!(integrate_scalar(&rule, &s2, &cos_first(&s2)).unwrap().abs() < 1e-10);
        let s3 = sphere_metric(3).unwrap();
        let rule = QuadratureRule::sphere(3, 24);
        let c2 = ScalarPotential::new(
            s3.chart().clone(),
            Arc::new(|x: &[Jet]| Ok(x[0].cos().powi(2))),
        );
        // ∫ cos²θ sin²θ dθ · ∫ sin θ' dθ' · 2π = (π/8) · 2 · 2π
        assert!((integrate_scalar(&rule, &s3, &c2).unwrap() - PI * PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn bochner_on_the_round_two_sphere() {
        let s2 = sphere_metric(2).unwrap();
        let rule = QuadratureRule::sphere(2, 32);
        let b = bochner_conformal_identity(&rule, &s2, &cos_first(&s2)).unwrap();
        let expected = 2.0 * 4.0 * PI / 3.0;
        assert!((b.lhs - expected).abs() < 1e-6 && (b.rhs - expected).abs() < 1e-6);
        let c = ScalarPotential::constant(s2.chart().clone(), 3.0);
        let z = bochner_conformal_identity(&rule, &s2, &c).unwrap();
        assert_eq!((z.lhs, z.rhs, z.residual), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_conformal_fields_are_rejected() {
        let s2 = sphere_metric(2).unwrap();
        let rule = QuadratureRule::sphere(2, 8);
        let f = ScalarPotential::new(
            s2.chart().clone(),
            Arc::new(|x: &[Jet]| Ok(x[0].cos().powi(2))),
        );
        assert!(matches!(
            bochner_conformal_identity(&rule, &s2, &f),
            Err(Error::NotConformal { .. })
        ));
    }

    #[test]
    fn nongradient_identities_on_s2() {
        let s2 = sphere_metric(2).unwrap();
        let rule = QuadratureRule::sphere(2, 32);
        let killing = VectorFieldSpec::new(
            s2.chart().clone(),
            Arc::new(|x: &[Jet]| {
                Ok(alloc::vec![
                    x[0].zero_like(),
                    x[0].zero_like().add_const(1.0)
                ])
            }),
        );
        let k = nongradient_kw_residual(&rule, &s2, &killing).unwrap();
        assert!(k.first_residual.abs() < 1e-6 && k.second_residual.abs() < 1e-6);
        assert!(k.div_sq.abs() < 1e-12 && k.ric_xx > 1.0);
        let grad = VectorFieldSpec::gradient(&s2, &cos_first(&s2)).unwrap();
        let g = nongradient_kw_residual(&rule, &s2, &grad).unwrap();
        assert!(g.first_residual.abs() < 1e-6 && g.second_residual.abs() < 1e-6);
        assert!(g.div_sq > 1.0);
    }

    #[test]
    fn s2xs2_has_zero_signature_density() {
        let m = s2xs2_metric().unwrap();
        assert!(
            signature_integrand(&m, &[1.0, 2.0, 0.5, 3.0])
                .unwrap()
                .abs()
                < 1e-12
        );
        let rule = QuadratureRule::sphere(2, 6).product(&QuadratureRule::sphere(2, 6));
        assert!(signature_quadrature(&rule, &m).unwrap().abs() < 1e-10);
        assert!(matches!(
            signature_integrand(&sphere_metric(3).unwrap(), &[1.0; 3]),
            Err(Error::Dimension { .. })
        ));
    }
}
