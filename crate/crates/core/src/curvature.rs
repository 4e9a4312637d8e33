//! Classical curvature at a point, in the coordinate frame.
//!
//! Conventions: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`,
//! `R_{ijkl} = g_{im} R^m_{jkl}`, `R_{ik} = g^{jl} R_{ijkl}`, so the unit sphere has
//! `Ric = (n−1) g`. A metric jet of order `N` supports covariant depth `N − 2`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::jet::{Jet, JetSpace};
use crate::tensor::{Connection, JetTensor, Scalar, Tensor, Values};

pub const MAX_DEPTH: usize = 3;

/// Metric, inverse and connection jets at one point.
pub struct LocalMetric {
    space: JetSpace,
    point: Vec<f64>,
    g: JetTensor,
    ginv: JetTensor,
    conn: Connection,
}

impl LocalMetric {
    pub fn new(metric: &MetricField, space: &JetSpace, p: &[f64], order: usize) -> Result<Self> {
        if space.dims() != metric.dim() {
            return Err(Error::Dimension {
                what: "jet space",
                dim: space.dims(),
            });
        }
        let (g, ginv) = metric.at(space, p, order)?;
        let conn = Connection::from_metric(&g, &ginv)?;
        Ok(LocalMetric {
            space: space.clone(),
            point: p.to_vec(),
            g,
            ginv,
            conn,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    /// Seeded coordinate jets at the point, for evaluating potentials and fields.
    pub fn coords(&self) -> Result<Vec<Jet>> {
        Ok(self.space.point(&self.point, self.order())?)
    }

    pub fn g(&self) -> &JetTensor {
        &self.g
    }

    pub fn ginv(&self) -> &JetTensor {
        &self.ginv
    }

    pub fn g_values(&self) -> Values {
        self.g.values()
    }

    pub fn ginv_values(&self) -> Values {
        self.ginv.values()
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    /// Covariant derivative, derivative index appended last.
    pub fn nabla(&self, t: &JetTensor) -> Result<JetTensor> {
        Ok(self.conn.covariant_derivative(t)?)
    }

    /// Divergence on slot 0 of a covariant-derivative tensor whose derivative slot is last.
    pub fn divergence_first(&self, dt: &JetTensor) -> JetTensor {
        dt.trace(0, dt.rank() - 1, &self.ginv)
    }

    /// Scalar gradient `∂_i s` as a rank-1 tensor.
    pub fn gradient(&self, s: &Jet) -> Result<JetTensor> {
        let n = self.dim();
        Ok(Tensor::from_vec(
            n,
            1,
            (0..n)
                .map(|i| s.derivative(i))
                .collect::<Result<Vec<_>, _>>()?,
        ))
    }

    /// Lowers contravariant components `X^i` with the metric.
    pub fn lower(&self, v: &JetTensor) -> JetTensor {
        self.g.contract_vector(1, v)
    }
}

/// Relative residual: raw norm over one plus the largest ingredient norm.
pub fn normalized(raw: f64, ingredients: &[f64]) -> f64 {
    raw / (1.0 + ingredients.iter().fold(0.0f64, |m, x| m.max(*x)))
}

pub struct CurvaturePack {
    pub local: LocalMetric,
    pub depth: usize,
    pub riem: JetTensor,
    pub ric: JetTensor,
    pub scalar: Jet,
    pub schouten: JetTensor,
    pub weyl: Option<JetTensor>,
    pub d_riem: Option<JetTensor>,
    pub d_ric: Option<JetTensor>,
    pub d_scalar: Option<JetTensor>,
    pub d_weyl: Option<JetTensor>,
    pub cotton: Option<JetTensor>,
    pub d_cotton: Option<JetTensor>,
    pub bach: Option<JetTensor>,
    pub d_bach: Option<Values>,
}

/// Metric jet order needed for covariant depth `depth`.
pub fn order_for_depth(depth: usize) -> usize {
    depth + 2
}

/// `R_{ijkl}` from `R^m_{jkl} = ∂_kΓ^m_{lj} − ∂_lΓ^m_{kj} + Γ^p_{lj}Γ^m_{kp} − Γ^p_{kj}Γ^m_{lp}`.
pub fn riemann(local: &LocalMetric) -> Result<JetTensor> {
    let n = local.dim();
    let gamma = local.connection().symbols();
    let k = gamma.order().checked_sub(1).ok_or(Error::Depth {
        what: "Riemann tensor",
        needed: 2,
        available: local.order(),
    })?;
    let mut dgamma = Vec::with_capacity(n);
    for a in 0..n {
        dgamma.push(gamma.map(|c| c.derivative(a).expect("order checked")));
    }
    let low = gamma.truncate(k);
    let up = Tensor::from_fn(n, 4, |x| {
        let (m, j, kk, l) = (x[0], x[1], x[2], x[3]);
        let mut z = dgamma[kk].at3(m, l, j).sub(dgamma[l].at3(m, kk, j));
        for p in 0..n {
            z.mul_add(low.at3(p, l, j), low.at3(m, kk, p), 1.0);
            z.mul_add(low.at3(p, kk, j), low.at3(m, l, p), -1.0);
        }
        z
    });
    let g = local.g().truncate(k);
    Ok(Tensor::from_fn(n, 4, |x| {
        let mut z = up.at4(0, 0, 0, 0).zero_like();
        for m in 0..n {
            z.mul_add(g.at2(x[0], m), up.at4(m, x[1], x[2], x[3]), 1.0);
        }
        z
    }))
}

/// `A ∧ g` part of the decomposition: `W = Riem − (1/(n−2)) A∧g`.
pub fn weyl_from(riem: &JetTensor, schouten: &JetTensor, g: &JetTensor) -> JetTensor {
    let n = riem.dim() as f64;
    riem.plus_scaled(&schouten.kulkarni_nomizu(g), -1.0 / (n - 2.0))
}

/// `T − (tr T / (2(n−1))) g`.
pub fn schouten_of(t: &JetTensor, trace: &Jet, g: &JetTensor) -> JetTensor {
    let n = t.dim() as f64;
    let k = t.order();
    t.plus(
        &g.truncate(k)
            .times(&trace.truncate(k))
            .scaled(-1.0 / (2.0 * (n - 1.0))),
    )
}

pub fn curvature_at(
    metric: &MetricField,
    space: &JetSpace,
    p: &[f64],
    depth: usize,
) -> Result<CurvaturePack> {
    if depth > MAX_DEPTH {
        return Err(Error::Depth {
            what: "curvature pack",
            needed: depth,
            available: MAX_DEPTH,
        });
    }
    let order = order_for_depth(depth);
    if space.max_order() < order {
        return Err(Error::Depth {
            what: "curvature pack",
            needed: depth,
            available: space.max_order().saturating_sub(2),
        });
    }
    let local = LocalMetric::new(metric, space, p, order)?;
    CurvaturePack::from_local(local, depth)
}

impl CurvaturePack {
    pub fn from_local(local: LocalMetric, depth: usize) -> Result<Self> {
        let n = local.dim();
        let available = local.order().saturating_sub(2);
        if depth > available {
            return Err(Error::Depth {
                what: "curvature pack",
                needed: depth,
                available,
            });
        }
        let riem = riemann(&local)?;
        let ginv = local.ginv().truncate(riem.order());
        let ric = riem.trace(1, 3, &ginv);
        let scalar = ric.trace(0, 1, &ginv).data()[0].clone();
        let g = local.g().truncate(riem.order());
        let schouten = schouten_of(&ric, &scalar, &g);
        let weyl = (n >= 3).then(|| weyl_from(&riem, &schouten, &g));

        let mut pack = CurvaturePack {
            local,
            depth,
            riem,
            ric,
            scalar,
            schouten,
            weyl,
            d_riem: None,
            d_ric: None,
            d_scalar: None,
            d_weyl: None,
            cotton: None,
            d_cotton: None,
            bach: None,
            d_bach: None,
        };
        if depth >= 1 {
            let d_riem = pack.local.nabla(&pack.riem)?;
            let d_ric = pack.local.nabla(&pack.ric)?;
            let d_scalar = pack.local.gradient(&pack.scalar)?;
            pack.d_weyl = match &pack.weyl {
                Some(w) => Some(pack.local.nabla(w)?),
                None => None,
            };
            pack.cotton = Some(cotton_from(&d_ric, &d_scalar, pack.local.g()));
            pack.d_riem = Some(d_riem);
            pack.d_ric = Some(d_ric);
            pack.d_scalar = Some(d_scalar);
        }
        if depth >= 2 {
            let c = pack.cotton.as_ref().expect("depth 1 computed");
            let dc = pack.local.nabla(c)?;
            if n >= 4 {
                let w = pack.weyl.as_ref().expect("n >= 3");
                pack.bach = Some(bach_from(&dc, w, &pack.ric, pack.local.ginv()));
            }
            pack.d_cotton = Some(dc);
        }
        if depth >= 3 {
            if let Some(b) = &pack.bach {
                pack.d_bach = Some(pack.local.nabla(b)?.values());
            }
        }
        Ok(pack)
    }

    pub fn dim(&self) -> usize {
        self.local.dim()
    }

    fn need<'a, T>(&self, field: &'a Option<T>, what: &'static str, depth: usize) -> Result<&'a T> {
        field.as_ref().ok_or(Error::Depth {
            what,
            needed: depth,
            available: self.depth,
        })
    }

    pub fn g(&self) -> Values {
        self.local.g_values()
    }

    pub fn ginv(&self) -> Values {
        self.local.ginv_values()
    }

    pub fn scalar_value(&self) -> f64 {
        self.scalar.value()
    }

    pub fn weyl_jets(&self) -> Result<&JetTensor> {
        self.weyl.as_ref().ok_or(Error::Dimension {
            what: "Weyl tensor",
            dim: self.dim(),
        })
    }

    pub fn d_ric(&self) -> Result<&JetTensor> {
        self.need(&self.d_ric, "covariant derivative of Ricci", 1)
    }

    pub fn d_riem(&self) -> Result<&JetTensor> {
        self.need(&self.d_riem, "covariant derivative of Riemann", 1)
    }

    pub fn d_scalar(&self) -> Result<&JetTensor> {
        self.need(&self.d_scalar, "scalar curvature gradient", 1)
    }

    pub fn d_weyl(&self) -> Result<&JetTensor> {
        if self.dim() < 3 {
            return Err(Error::Dimension {
                what: "Weyl tensor",
                dim: self.dim(),
            });
        }
        self.need(&self.d_weyl, "covariant derivative of Weyl", 1)
    }

    pub fn cotton_jets(&self) -> Result<&JetTensor> {
        self.need(&self.cotton, "Cotton tensor", 1)
    }

    pub fn d_cotton(&self) -> Result<&JetTensor> {
        self.need(&self.d_cotton, "covariant derivative of Cotton", 2)
    }

    /// Orthogonal decomposition check `Riem − W − (1/(n−2)) A∧g`.
    pub fn decomposition_residual(&self) -> Result<Values> {
        let w = self.weyl_jets()?;
        let g = self.local.g().truncate(self.riem.order());
        Ok(self
            .riem
            .minus(&weyl_from(&self.riem, &self.schouten, &g))
            .minus(w)
            .values())
    }
}

/// `C_{ijk} = R_{ij,k} − R_{ik,j} − (1/(2(n−1)))(R_k g_{ij} − R_j g_{ik})`.
pub fn cotton_from(d_ric: &JetTensor, d_scalar: &JetTensor, g: &JetTensor) -> JetTensor {
    let n = d_ric.dim();
    let c = 1.0 / (2.0 * (n as f64 - 1.0));
    let k = d_ric.order();
    let g = g.truncate(k);
    Tensor::from_fn(n, 3, |x| {
        let (i, j, kk) = (x[0], x[1], x[2]);
        let mut z = d_ric.at3(i, j, kk).sub(d_ric.at3(i, kk, j));
        z.mul_add(&d_scalar.data()[kk], g.at2(i, j), -c);
        z.mul_add(&d_scalar.data()[j], g.at2(i, kk), c);
        z
    })
}

/// `B_{ij} = (1/(n−2))(C_{jik,k} + R_{kl} W_{ikjl})`, indices contracted with `g⁻¹`.
pub fn bach_from(
    d_cotton: &JetTensor,
    weyl: &JetTensor,
    ric: &JetTensor,
    ginv: &JetTensor,
) -> JetTensor {
    let n = d_cotton.dim();
    let k = d_cotton.order();
    let div_c = d_cotton.trace(2, 3, ginv);
    let ginv = ginv.truncate(k);
    let ric = ric.truncate(k);
    let ric_up = raise_both(&ric, &ginv);
    let w = weyl.truncate(k);
    Tensor::from_fn(n, 2, |x| {
        let (i, j) = (x[0], x[1]);
        let mut z = div_c.at2(j, i).clone();
        for a in 0..n {
            for b in 0..n {
                z.mul_add(ric_up.at2(a, b), w.at4(i, a, j, b), 1.0);
            }
        }
        z.scale(1.0 / (n as f64 - 2.0))
    })
}

pub fn raise_both<S: Scalar>(t: &Tensor<S>, ginv: &Tensor<S>) -> Tensor<S> {
    let n = t.dim();
    let half = Tensor::from_fn(n, 2, |x| {
        let mut z = t.at2(0, 0).zero_like();
        for a in 0..n {
            z.mul_add(ginv.at2(x[0], a), t.at2(a, x[1]), 1.0);
        }
        z
    });
    Tensor::from_fn(n, 2, |x| {
        let mut z = t.at2(0, 0).zero_like();
        for b in 0..n {
            z.mul_add(half.at2(x[0], b), ginv.at2(b, x[1]), 1.0);
        }
        z
    })
}

pub fn weyl(pack: &CurvaturePack) -> Result<Values> {
    Ok(pack.weyl_jets()?.values())
}

pub fn cotton(pack: &CurvaturePack) -> Result<Values> {
    Ok(pack.cotton_jets()?.values())
}

/// `((n−2)/(n−3)) g^{tm} W_{tikj,m}`.
pub fn cotton_via_weyl(pack: &CurvaturePack) -> Result<Values> {
    let n = pack.dim();
    if n < 4 {
        return Err(Error::Dimension {
            what: "Cotton tensor via Weyl",
            dim: n,
        });
    }
    let div_w = pack.d_weyl()?.values().trace(0, 4, &pack.ginv());
    let c = (n as f64 - 2.0) / (n as f64 - 3.0);
    Ok(Tensor::from_fn(n, 3, |x| c * div_w.at3(x[0], x[2], x[1])))
}

pub fn bach(pack: &CurvaturePack) -> Result<Values> {
    if pack.dim() < 4 {
        return Err(Error::Dimension {
            what: "Bach tensor",
            dim: pack.dim(),
        });
    }
    Ok(pack.need(&pack.bach, "Bach tensor", 2)?.values())
}

pub struct BachDivergence {
    /// `B_{ij,j}`.
    pub lhs: Values,
    /// `((n−4)/(n−2)²) R_{kt} C_{kti}`.
    pub rhs: Values,
    /// The factor `(n−4)/(n−2)²`, exactly zero when `n = 4`.
    pub factor: f64,
    pub ric_norm: f64,
    pub cotton_norm: f64,
}

pub fn bach_divergence(pack: &CurvaturePack) -> Result<BachDivergence> {
    let n = pack.dim();
    if n < 4 {
        return Err(Error::Dimension {
            what: "Bach tensor",
            dim: n,
        });
    }
    let db = pack.need(&pack.d_bach, "divergence of Bach", 3)?;
    let ginv = pack.ginv();
    let lhs = db.trace(1, 2, &ginv);
    let factor = (n as f64 - 4.0) / ((n as f64 - 2.0) * (n as f64 - 2.0));
    let ric = pack.ric.values();
    let c = pack.cotton_jets()?.values();
    let ric_up = raise_both(&ric, &ginv);
    let rhs = Tensor::from_fn(n, 1, |x| {
        let mut s = 0.0;
        for k in 0..n {
            for t in 0..n {
                s += ric_up.at2(k, t) * c.at3(k, t, x[0]);
            }
        }
        factor * s
    });
    Ok(BachDivergence {
        lhs,
        rhs,
        factor,
        ric_norm: ric.norm(&ginv),
        cotton_norm: c.norm(&ginv),
    })
}

/// Both sides of `div(α∧g)_{ijk} = α_{tj,t} g_{ik} − α_{tk,t} g_{ij} + α_{ik,j} − α_{ij,k}`,
/// the left by differentiating `α∧g` itself.
pub fn kn_divergence_check(local: &LocalMetric, alpha: &JetTensor) -> Result<(Values, Values)> {
    let n = local.dim();
    let g = local.g().truncate(alpha.order());
    let lhs = local
        .divergence_first(&local.nabla(&alpha.kulkarni_nomizu(&g))?)
        .values();
    let da = local.nabla(alpha)?.values();
    let ginv = local.ginv_values();
    let div_a = da.trace(0, 2, &ginv);
    let gv = local.g_values();
    let rhs = Tensor::from_fn(n, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        div_a.data()[j] * gv.at2(i, k) - div_a.data()[k] * gv.at2(i, j) + da.at3(i, k, j)
            - da.at3(i, j, k)
    });
    Ok((lhs, rhs))
}

/// `T_{ij,k} − T_{ik,j}`.
pub fn codazzi_residual(local: &LocalMetric, t: &JetTensor) -> Result<Values> {
    let dt = local.nabla(t)?.values();
    Ok(codazzi_of(&dt))
}

pub fn codazzi_of(dt: &Values) -> Values {
    Tensor::from_fn(dt.dim(), 3, |x| {
        dt.at3(x[0], x[1], x[2]) - dt.at3(x[0], x[2], x[1])
    })
}

/// Lower-triangular `L` with `g = L Lᵀ`, so `E = L⁻ᵀ` has g-orthonormal, positively oriented columns.
pub fn orthonormal_frame(g: &Values) -> Result<DMatrix<f64>> {
    let n = g.dim();
    let m = DMatrix::from_row_slice(n, n, g.data());
    let chol = m
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { point: Vec::new() })?;
    let l = chol.l();
    let linv = l
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { point: Vec::new() })?;
    Ok(linv.transpose())
}

/// Components of a (0,4) tensor in the frame whose vectors are the columns of `e`.
pub fn to_frame4(t: &Values, e: &DMatrix<f64>) -> Values {
    let mut out = t.clone();
    for slot in 0..4 {
        let src = out.clone();
        let mut idx = [0usize; 4];
        out = Tensor::from_fn(t.dim(), 4, |x| {
            idx.copy_from_slice(x);
            let mut s = 0.0;
            for p in 0..t.dim() {
                idx[slot] = p;
                s += e[(p, x[slot])] * src.get(&idx);
            }
            s
        });
    }
    out
}

#[derive(Debug, Clone)]
pub struct WeylSplit {
    pub plus: Matrix3<f64>,
    pub minus: Matrix3<f64>,
    pub plus_spectrum: [f64; 3],
    pub minus_spectrum: [f64; 3],
    /// `|W⁺|²`, `|W⁻|²` as tensor norms, so they add up to `|W|²`.
    pub plus_norm_sq: f64,
    pub minus_norm_sq: f64,
}

impl WeylSplit {
    pub fn signature_density(&self) -> f64 {
        self.plus_norm_sq - self.minus_norm_sq
    }
}

/// Pairs `(a,b), (c,d)` with `*(e_a∧e_b) = e_c∧e_d` for the positive orientation.
const DUAL_PAIRS: [((usize, usize), (usize, usize)); 3] =
    [((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2))];

pub fn weyl_pm(pack: &CurvaturePack) -> Result<WeylSplit> {
    if pack.dim() != 4 {
        return Err(Error::Dimension {
            what: "self-dual splitting",
            dim: pack.dim(),
        });
    }
    let w = to_frame4(&pack.weyl_jets()?.values(), &orthonormal_frame(&pack.g())?);
    Ok(split_weyl(&w))
}

/// Splits an orthonormal-frame algebraic curvature tensor into its Λ²± blocks.
pub fn split_weyl(w: &Values) -> WeylSplit {
    let pair = |(a, b): (usize, usize), (c, d): (usize, usize)| *w.at4(a, b, c, d);
    let block = |sign: f64| {
        Matrix3::from_fn(|r, s| {
            let (p, q) = DUAL_PAIRS[r];
            let (u, v) = DUAL_PAIRS[s];
            0.5 * (pair(p, u) + sign * pair(p, v) + sign * pair(q, u) + pair(q, v))
        })
    };
    let (plus, minus) = (block(1.0), block(-1.0));
    let spectrum = |m: &Matrix3<f64>| {
        let mut ev: Vec<f64> = SymmetricEigen::new(*m)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2]]
    };
    WeylSplit {
        plus_spectrum: spectrum(&plus),
        minus_spectrum: spectrum(&minus),
        plus_norm_sq: 4.0 * plus.norm_squared(),
        minus_norm_sq: 4.0 * minus.norm_squared(),
        plus,
        minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{hyperbolic, s2xs2_metric, sphere_metric, warped_gaussian};
    use crate::geometry::sample_points;
    use crate::tensor::for_each_index;

    fn pack(metric: &MetricField, depth: usize, seed: u64) -> CurvaturePack {
        let space = JetSpace::new(metric.dim(), order_for_depth(depth)).unwrap();
        let p = &sample_points(metric.chart(), 1, seed)[0];
        curvature_at(metric, &space, p, depth).unwrap()
    }

    #[test]
    fn unit_sphere_is_einstein() {
        for n in 2..=4 {
            let pk = pack(&sphere_metric(n).unwrap(), 0, 3);
            let expected = pk.g().scaled((n - 1) as f64);
            assert!(pk.ric.values().minus(&expected).max_abs() < 1e-10);
            assert!((pk.scalar_value() - (n * (n - 1)) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_scalar_curvature() {
        let pk = pack(&hyperbolic(3).unwrap().metric, 0, 5);
        assert!((pk.scalar_value() + 6.0).abs() < 1e-10);
    }

    #[test]
    fn warped_gaussian_radial_ricci() {
        // R_00 = −((n−1)/4)(2q'' + q'²) with q = t².
        let e = warped_gaussian(4).unwrap();
        let pk = pack(&e.metric, 0, 9);
        let t = pk.local.point()[0];
        let expected = -0.75 * (4.0 + 4.0 * t * t);
        assert!((pk.ric.values().at2(0, 0) - expected).abs() < 1e-10);
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let pk = pack(&s2xs2_metric().unwrap(), 0, 1);
        let r = pk.riem.values();
        for_each_index(4, 4, |_, x| {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            let v = *r.at4(i, j, k, l);
            assert!((v + r.at4(j, i, k, l)).abs() < 1e-12);
            assert!((v + r.at4(i, j, l, k)).abs() < 1e-12);
            assert!((v - r.at4(k, l, i, j)).abs() < 1e-12);
            assert!((v + r.at4(i, k, l, j) + r.at4(i, l, j, k)).abs() < 1e-12);
        });
    }

    #[test]
    fn three_dimensional_weyl_vanishes() {
        let pk = pack(&crate::catalog::warped_gaussian(3).unwrap().metric, 0, 2);
        assert!(weyl(&pk).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn product_of_spheres_is_not_conformally_flat() {
        let pk = pack(&s2xs2_metric().unwrap(), 0, 4);
        let w = weyl(&pk).unwrap();
        assert!(w.norm_sq(&pk.ginv()) > 0.1);
        let split = weyl_pm(&pk).unwrap();
        assert!((split.plus_norm_sq + split.minus_norm_sq - w.norm_sq(&pk.ginv())).abs() < 1e-10);
        assert!(split.signature_density().abs() < 1e-10);
    }

    /// A metric with no symmetry, so every curvature quantity is generic.
    fn lumpy(n: usize) -> MetricField {
        use alloc::sync::Arc;
        let chart = crate::geometry::Chart::cube(n, -0.5, 0.5, 0.1).unwrap();
        MetricField::new(
            chart,
            Arc::new(move |x: &[Jet]| {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let c = if i == j {
                            x[i].mul(&x[(i + 1) % n])
                                .scale(0.4)
                                .exp()
                                .add(&x[(i + 2) % n].sin().scale(0.2))
                        } else {
                            x[i].add(&x[j].scale(2.0)).cos().scale(0.1)
                        };
                        out.push(c);
                    }
                }
                Ok(out)
            }),
        )
    }

    #[test]
    fn cotton_routes_agree() {
        for n in [4, 5] {
            let pk = pack(&lumpy(n), 1, 6);
            let (a, b) = (cotton(&pk).unwrap(), cotton_via_weyl(&pk).unwrap());
            assert!(a.max_abs() > 1e-2);
            assert!(a.minus(&b).max_abs() < 1e-8 * a.max_abs(), "n={n}");
        }
    }

    #[test]
    fn bach_is_symmetric_trace_free_with_divergence_formula() {
        for n in [4, 5] {
            let pk = pack(&lumpy(n), 3, 2);
            let b = bach(&pk).unwrap();
            assert!(b.max_abs() > 1e-2);
            assert!(b.minus(&b.permuted(&[1, 0])).max_abs() < 1e-9 * b.max_abs());
            assert!(b.trace(0, 1, &pk.ginv()).data()[0].abs() < 1e-9 * b.max_abs());
            let d = bach_divergence(&pk).unwrap();
            let scale = d.lhs.max_abs().max(d.rhs.max_abs());
            assert!(
                d.lhs.minus(&d.rhs).max_abs() < 1e-7 * (1.0 + scale),
                "n={n}: {:?} {:?}",
                d.lhs,
                d.rhs
            );
        }
    }

    #[test]
    fn metric_is_codazzi() {
        let pk = pack(&s2xs2_metric().unwrap(), 1, 8);
        let g = pk.local.g().clone();
        assert!(codazzi_residual(&pk.local, &g).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn depth_and_dimension_errors() {
        let pk = pack(&sphere_metric(3).unwrap(), 0, 1);
        assert!(matches!(cotton(&pk), Err(Error::Depth { .. })));
        assert!(matches!(bach(&pk), Err(Error::Dimension { .. })));
        assert!(matches!(weyl_pm(&pk), Err(Error::Dimension { .. })));
        let space = JetSpace::new(3, 2).unwrap();
        let m = sphere_metric(3).unwrap();
        assert!(matches!(
            curvature_at(&m, &space, &[1.0, 1.0, 1.0], 1),
            Err(Error::Depth { .. })
        ));
    }
}
