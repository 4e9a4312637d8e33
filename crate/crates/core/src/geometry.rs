//! Coordinate descriptions of metrics, potentials and vector fields.
//!
//! Every field is a closure from the chart variables (as jets) to jets, so all
//! derivatives of the components are exact through the truncation order.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::tensor::{invert_spd, JetTensor, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    lower: Vec<f64>,
    upper: Vec<f64>,
    margin: f64,
}

impl Chart {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, margin: f64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Chart("bounds have different lengths"));
        }
        if lower.len() < 2 {
            return Err(Error::Chart("dimension must be at least 2"));
        }
        if !(margin > 0.0 && margin < 0.5) {
            return Err(Error::Chart("margin must lie in (0, 0.5)"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::Chart("empty or unbounded coordinate range"));
        }
        Ok(Chart {
            lower,
            upper,
            margin,
        })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64, margin: f64) -> Result<Self> {
        Chart::new(alloc::vec![lo; dim], alloc::vec![hi; dim], margin)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Bounds of the margin-shrunk box that sample points are drawn from.
    pub fn inner_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let shrink = |i: usize| self.margin * (self.upper[i] - self.lower[i]);
        let lo = (0..self.dim()).map(|i| self.lower[i] + shrink(i)).collect();
        let hi = (0..self.dim()).map(|i| self.upper[i] - shrink(i)).collect();
        (lo, hi)
    }

    pub fn contains_inner(&self, p: &[f64]) -> bool {
        let (lo, hi) = self.inner_bounds();
        p.len() == self.dim()
            && p.iter()
                .enumerate()
                .all(|(i, x)| *x >= lo[i] && *x <= hi[i])
    }

    /// Cartesian product; the margin of `self` is kept.
    pub fn product(&self, other: &Chart) -> Chart {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        Chart {
            lower,
            upper,
            margin: self.margin,
        }
    }

    /// Same chart with `margin` replaced.
    pub fn with_margin(&self, margin: f64) -> Result<Chart> {
        Chart::new(self.lower.clone(), self.upper.clone(), margin)
    }
}

/// Deterministic points in the margin-shrunk box; equal seeds give equal lists.
pub fn sample_points(chart: &Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = chart.inner_bounds();
    (0..count)
        .map(|_| {
            (0..chart.dim())
                .map(|i| lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

pub type MetricEval = Arc<dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync>;
pub type ScalarEval = Arc<dyn Fn(&[Jet]) -> Result<Jet> + Send + Sync>;
pub type VectorEval = Arc<dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync>;
pub type WarpEval = Arc<dyn Fn(&Jet) -> Result<Jet> + Send + Sync>;

/// `eval` returns the n×n components row-major; only the upper triangle is read,
/// so the assembled matrix is symmetric by construction.
#[derive(Clone)]
pub struct MetricField {
    chart: Chart,
    eval: MetricEval,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("chart", &self.chart)
            .finish_non_exhaustive()
    }
}

impl MetricField {
    pub fn new(chart: Chart, eval: MetricEval) -> Self {
        MetricField { chart, eval }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Components at symbolic coordinates `x`, without any positivity check.
    pub fn components(&self, x: &[Jet]) -> Result<JetTensor> {
        let n = self.dim();
        let raw = (self.eval)(x)?;
        if raw.len() != n * n {
            return Err(Error::Chart(
                "metric closure returned the wrong number of components",
            ));
        }
        Ok(Tensor::from_fn(n, 2, |ij| {
            let (i, j) = (ij[0].min(ij[1]), ij[0].max(ij[1]));
            raw[i * n + j].clone()
        }))
    }

    /// Metric and inverse jets at `p`, after checking positive definiteness.
    pub fn at(&self, space: &JetSpace, p: &[f64], order: usize) -> Result<(JetTensor, JetTensor)> {
        let x = space.point(p, order)?;
        let g = self.components(&x)?;
        if !is_positive_definite(g.values().data(), self.dim()) {
            return Err(Error::NotPositiveDefinite { point: p.to_vec() });
        }
        let ginv = invert_spd(&g)?;
        Ok((g, ginv))
    }
}

pub(crate) fn is_positive_definite(values: &[f64], n: usize) -> bool {
    values.iter().all(|v| v.is_finite())
        && DMatrix::from_row_slice(n, n, values).cholesky().is_some()
}

#[derive(Clone)]
pub struct ScalarPotential {
    chart: Chart,
    eval: ScalarEval,
}

impl fmt::Debug for ScalarPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPotential")
            .field("chart", &self.chart)
            .finish_non_exhaustive()
    }
}

impl ScalarPotential {
    pub fn new(chart: Chart, eval: ScalarEval) -> Self {
        ScalarPotential { chart, eval }
    }

    pub fn constant(chart: Chart, c: f64) -> Self {
        ScalarPotential::new(
            chart,
            Arc::new(move |x: &[Jet]| Ok(x[0].zero_like().add_const(c))),
        )
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval(&self, x: &[Jet]) -> Result<Jet> {
        (self.eval)(x)
    }

    /// `f + c`, the gauge shift that no class condition can see.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        ScalarPotential::new(
            self.chart.clone(),
            Arc::new(move |x: &[Jet]| Ok(inner(x)?.add_const(c))),
        )
    }
}

/// Contravariant components `X^i`. The result may be one jet order lower than
/// the coordinates it is given (gradients lose an order).
#[derive(Clone)]
pub struct VectorFieldSpec {
    chart: Chart,
    eval: VectorEval,
}

impl fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldSpec")
            .field("chart", &self.chart)
            .finish_non_exhaustive()
    }
}

impl VectorFieldSpec {
    pub fn new(chart: Chart, eval: VectorEval) -> Self {
        VectorFieldSpec { chart, eval }
    }

    /// `X = ∇f`, raised with the metric.
    pub fn gradient(g: &MetricField, f: &ScalarPotential) -> Result<Self> {
        if g.chart() != f.chart() {
            return Err(Error::ChartMismatch);
        }
        let chart = g.chart().clone();
        let (g, f) = (g.clone(), f.clone());
        let n = g.dim();
        let eval: VectorEval = Arc::new(move |x: &[Jet]| {
            let fx = f.eval(x)?;
            let df = Tensor::from_vec(
                n,
                1,
                (0..n)
                    .map(|i| fx.derivative(i))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            let ginv = invert_spd(&g.components(x)?)?;
            Ok(df.raised(&ginv).data().to_vec())
        });
        Ok(VectorFieldSpec::new(chart, eval))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        (self.eval)(x)
    }
}

/// `e^{2u} g`, composed at the jet level.
pub fn conformal_rescale(g: &MetricField, u: &ScalarPotential) -> Result<MetricField> {
    if g.chart() != u.chart() {
        return Err(Error::ChartMismatch);
    }
    let (inner, u) = (g.eval.clone(), u.clone());
    Ok(MetricField::new(
        g.chart().clone(),
        Arc::new(move |x: &[Jet]| {
            let factor = u.eval(x)?.scale(2.0).exp();
            Ok(inner(x)?.iter().map(|c| c.mul(&factor)).collect())
        }),
    ))
}

/// `dt² + F(t) h` on `[t_lo, t_hi] × fiber chart`; `t` is the first coordinate.
pub fn warped_product(
    warp: WarpEval,
    fiber: &MetricField,
    t_lo: f64,
    t_hi: f64,
) -> Result<MetricField> {
    let chart = Chart::new(
        core::iter::once(t_lo)
            .chain(fiber.chart().lower().iter().copied())
            .collect(),
        core::iter::once(t_hi)
            .chain(fiber.chart().upper().iter().copied())
            .collect(),
        fiber.chart().margin(),
    )?;
    let h = fiber.clone();
    let m = fiber.dim();
    let n = m + 1;
    Ok(MetricField::new(
        chart,
        Arc::new(move |x: &[Jet]| {
            let big_f = warp(&x[0])?;
            if !(big_f.value() > 0.0) {
                return Err(Error::NonPositiveWarp { t: x[0].value() });
            }
            let hx = h.components(&x[1..])?;
            let zero = x[0].zero_like();
            let mut out = alloc::vec![zero.clone(); n * n];
            out[0] = zero.add_const(1.0);
            for i in 0..m {
                for j in 0..m {
                    out[(i + 1) * n + j + 1] = hx.at2(i, j).mul(&big_f);
                }
            }
            Ok(out)
        }),
    ))
}
