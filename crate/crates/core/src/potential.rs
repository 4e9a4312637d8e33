//! Potential-weighted curvature: the gradient (`f`) and nongradient (`X`) versions.
//!
//! Covectors such as `f_i` or `X_i` carry lower indices; a contraction written
//! `f_t R_{tijk}` in an orthonormal frame becomes `g^{ts} f_s R_{tijk}` here.

use alloc::vec::Vec;

use crate::curvature::{schouten_of, CurvaturePack, LocalMetric};
use crate::error::{Error, Result};
use crate::geometry::{ScalarPotential, VectorFieldSpec};
use crate::jet::Jet;
use crate::tensor::{JetTensor, Scalar, Tensor, Values};

/// `(1/(n−2))(P − (tr P/(2(n−1))) g) ∧ g` added to `Riem`.
fn weighted_riemann(riem: &JetTensor, p: &JetTensor, trace: &Jet, g: &JetTensor) -> JetTensor {
    let n = riem.dim() as f64;
    let k = riem.order().min(p.order());
    let g = g.truncate(k);
    let corr = schouten_of(&p.truncate(k), &trace.truncate(k), &g);
    riem.truncate(k)
        .plus_scaled(&corr.kulkarni_nomizu(&g), 1.0 / (n - 2.0))
}

/// The integrability tensor built from a covector `v` (`f_i` or `X_i`):
/// `(1/(n−2))(v_k R_ij − v_j R_ik) + (1/((n−1)(n−2))) v^t(R_tk g_ij − R_tj g_ik)
///  − (R/((n−1)(n−2)))(v_k g_ij − v_j g_ik)`.
pub fn d_tensor_of(v: &Values, ric: &Values, scalar: f64, g: &Values, ginv: &Values) -> Values {
    let n = g.dim();
    let nf = n as f64;
    let v_up = v.raised(ginv);
    let ric_v = ric.contract_vector(0, &v_up);
    Tensor::from_fn(n, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        let (vj, vk) = (v.data()[j], v.data()[k]);
        (vk * ric.at2(i, j) - vj * ric.at2(i, k)) / (nf - 2.0)
            + (ric_v.data()[k] * g.at2(i, j) - ric_v.data()[j] * g.at2(i, k))
                / ((nf - 1.0) * (nf - 2.0))
            - scalar * (vk * g.at2(i, j) - vj * g.at2(i, k)) / ((nf - 1.0) * (nf - 2.0))
    })
}

/// `ι_v T` on the first slot of a (0,4) tensor: `v^t T_{tijk}`.
fn interior_first(v_up: &Values, t: &Values) -> Values {
    t.contract_vector(0, v_up)
}

/// `div(α∧g)` by differentiating the product itself.
fn divergence_of_kn_with_metric(local: &LocalMetric, alpha: &JetTensor) -> Result<Values> {
    let g = local.g().truncate(alpha.order());
    Ok(local
        .divergence_first(&local.nabla(&alpha.kulkarni_nomizu(&g))?)
        .values())
}

pub struct FPack {
    pub f: Jet,
    /// `f_i`.
    pub df: JetTensor,
    pub hess: JetTensor,
    pub laplacian: Jet,
    pub ric_f: JetTensor,
    pub r_f: Jet,
    pub schouten_f: JetTensor,
    pub riem_f: Option<JetTensor>,
    pub einstein_f: JetTensor,
    pub d_tensor: Option<Values>,
    /// `e^{−f}` at the point; the weighted divergences below omit this positive factor.
    pub weight: f64,
    pub d_hess: Option<JetTensor>,
    pub d_ric_f: Option<Values>,
    pub d_riem_f: Option<Values>,
    /// `g^{tm} R_{tijk,m} − f^t R_{tijk}`.
    pub div_weighted_riem: Option<Values>,
    /// `g^{tm} R_{ti,m} − f^t R_{ti}`.
    pub div_weighted_ric: Option<Values>,
    /// `div(E_f ∧ g)`.
    pub div_einstein_wedge: Option<Values>,
    /// `div(Ric_f − R_f g)`.
    pub div_ric_f_minus_trace: Option<Values>,
}

impl FPack {
    pub fn grad_up(&self, ginv: &Values) -> Values {
        self.df.values().raised(ginv)
    }
}

pub fn f_pack(pack: &CurvaturePack, f: &ScalarPotential) -> Result<FPack> {
    let local = &pack.local;
    let n = local.dim();
    let fx = f.eval(&local.coords()?)?;
    let df = local.gradient(&fx)?;
    let hess = local.nabla(&df)?;
    let ginv = local.ginv();
    let laplacian = hess.trace(0, 1, ginv).data()[0].clone();
    let k = pack.ric.order();
    let ric_f = pack.ric.plus(&hess.truncate(k));
    let r_f = pack.scalar.add(&laplacian);
    let g = local.g().truncate(k);
    let schouten_f = schouten_of(&ric_f, &r_f, &g);
    let riem_f = (n >= 3).then(|| weighted_riemann(&pack.riem, &hess, &laplacian, &g));
    let einstein_f = ric_f.plus(&g.times(&r_f.truncate(k)).scaled(-0.5));
    let (gv, ginv_v) = (local.g_values(), local.ginv_values());
    let d_tensor = (n >= 3).then(|| {
        d_tensor_of(
            &df.values(),
            &pack.ric.values(),
            pack.scalar_value(),
            &gv,
            &ginv_v,
        )
    });
    let mut out = FPack {
        weight: libm::exp(-fx.value()),
        f: fx,
        df,
        hess,
        laplacian,
        ric_f,
        r_f,
        schouten_f,
        riem_f,
        einstein_f,
        d_tensor,
        d_hess: None,
        d_ric_f: None,
        d_riem_f: None,
        div_weighted_riem: None,
        div_weighted_ric: None,
        div_einstein_wedge: None,
        div_ric_f_minus_trace: None,
    };
    if pack.depth >= 1 {
        let d_hess = local.nabla(&out.hess)?;
        out.d_ric_f = Some(pack.d_ric()?.values().plus(&d_hess.values()));
        out.d_riem_f = match &out.riem_f {
            Some(r) => Some(local.nabla(r)?.values()),
            None => None,
        };
        let f_up = out.grad_up(&ginv_v);
        let d_riem = pack.d_riem()?.values();
        let riem = pack.riem.values();
        out.div_weighted_riem = Some(
            d_riem
                .trace(0, 4, &ginv_v)
                .minus(&interior_first(&f_up, &riem)),
        );
        let ric = pack.ric.values();
        out.div_weighted_ric = Some(
            pack.d_ric()?
                .values()
                .trace(0, 2, &ginv_v)
                .minus(&ric.contract_vector(0, &f_up)),
        );
        out.div_einstein_wedge = Some(divergence_of_kn_with_metric(local, &out.einstein_f)?);
        let t = out.ric_f.minus(&g.times(&out.r_f.truncate(k)));
        out.div_ric_f_minus_trace = Some(local.nabla(&t)?.values().trace(0, 2, &ginv_v));
        out.d_hess = Some(d_hess);
    }
    Ok(out)
}

pub struct XPack {
    /// Contravariant `X^i`.
    pub x_up: JetTensor,
    /// Covariant `X_i`.
    pub x_low: JetTensor,
    /// `X_{ij} = ∇_j X_i`.
    pub nabla_x: JetTensor,
    pub lie: JetTensor,
    pub antisym: JetTensor,
    pub div_x: Jet,
    pub ric_x: JetTensor,
    pub r_x: Jet,
    pub schouten_x: JetTensor,
    pub riem_x: Option<JetTensor>,
    pub einstein_x: JetTensor,
    pub d_tensor: Option<Values>,
    pub d_ric_x: Option<Values>,
    pub d_riem_x: Option<Values>,
    /// `A^X_{ij,j}`.
    pub div_antisym: Option<Values>,
    pub div_einstein_wedge: Option<Values>,
    /// `div(Ric_X − R_X g)`.
    pub div_ric_x_minus_trace: Option<Values>,
}

pub fn x_pack(pack: &CurvaturePack, x: &VectorFieldSpec) -> Result<XPack> {
    let local = &pack.local;
    let n = local.dim();
    let order = local.order() - 1;
    let raw = x.eval(&local.coords()?)?;
    if raw.len() != n {
        return Err(Error::Dimension {
            what: "vector field",
            dim: raw.len(),
        });
    }
    if raw.iter().any(|c| c.order() < order) {
        return Err(Error::Depth {
            what: "vector field jets",
            needed: order,
            available: 0,
        });
    }
    let x_up = Tensor::from_vec(n, 1, raw.iter().map(|c| c.truncate(order)).collect());
    let x_low = local.lower(&x_up);
    let nabla_x = local.nabla(&x_low)?;
    let lie = nabla_x.symmetrized();
    let antisym = nabla_x.antisymmetrized();
    let div_x = nabla_x.trace(0, 1, local.ginv()).data()[0].clone();
    let k = pack.ric.order();
    let ric_x = pack.ric.plus(&lie.truncate(k).scaled(0.5));
    let r_x = pack.scalar.add(&div_x);
    let g = local.g().truncate(k);
    let schouten_x = schouten_of(&ric_x, &r_x, &g);
    let half_lie = lie.scaled(0.5);
    let riem_x = (n >= 3).then(|| weighted_riemann(&pack.riem, &half_lie, &div_x, &g));
    let einstein_x = ric_x.plus(&g.times(&r_x.truncate(k)).scaled(-0.5));
    let mut out = XPack {
        x_up,
        x_low,
        nabla_x,
        lie,
        antisym,
        div_x,
        ric_x,
        r_x,
        schouten_x,
        riem_x,
        einstein_x,
        d_tensor: None,
        d_ric_x: None,
        d_riem_x: None,
        div_antisym: None,
        div_einstein_wedge: None,
        div_ric_x_minus_trace: None,
    };
    if pack.depth >= 1 {
        let (gv, ginv_v) = (local.g_values(), local.ginv_values());
        let d_lie = local.nabla(&out.lie)?.values();
        out.d_ric_x = Some(pack.d_ric()?.values().plus(&d_lie.scaled(0.5)));
        out.d_riem_x = match &out.riem_x {
            Some(r) => Some(local.nabla(r)?.values()),
            None => None,
        };
        let d_anti = local.nabla(&out.antisym)?.values();
        let div_anti = d_anti.trace(1, 2, &ginv_v);
        if n >= 3 {
            // D^X = D(X_i) + ½ A^X_{kj,i} − (1/(2(n−1)))(A^X_{kt,t} g_ij − A^X_{jt,t} g_ik)
            let base = d_tensor_of(
                &out.x_low.values(),
                &pack.ric.values(),
                pack.scalar_value(),
                &gv,
                &ginv_v,
            );
            let c = 1.0 / (2.0 * (n as f64 - 1.0));
            out.d_tensor = Some(Tensor::from_fn(n, 3, |x| {
                let (i, j, k) = (x[0], x[1], x[2]);
                base.at3(i, j, k) + 0.5 * d_anti.at3(k, j, i)
                    - c * (div_anti.data()[k] * gv.at2(i, j) - div_anti.data()[j] * gv.at2(i, k))
            }));
        }
        out.div_antisym = Some(div_anti);
        out.div_einstein_wedge = Some(divergence_of_kn_with_metric(local, &out.einstein_x)?);
        let t = out.ric_x.minus(&g.times(&out.r_x.truncate(k)));
        out.div_ric_x_minus_trace = Some(local.nabla(&t)?.values().trace(0, 2, &ginv_v));
    }
    Ok(out)
}

/// `C_{ijk} + v^t W_{tijk} − D_{ijk}` for a covector `v` and its integrability tensor.
pub fn integrability_residual(pack: &CurvaturePack, v: &Values, d: &Values) -> Result<Values> {
    let ginv = pack.ginv();
    let c = pack.cotton_jets()?.values();
    let w = pack.weyl_jets()?.values();
    Ok(c.plus(&interior_first(&v.raised(&ginv), &w)).minus(d))
}

/// `∇R − 2 Ric(v, ·)`, with `v` a covector.
pub fn yamabe_residual(pack: &CurvaturePack, v: &Values) -> Result<Values> {
    let ginv = pack.ginv();
    let dr = pack.d_scalar()?.values();
    Ok(dr.minus(
        &pack
            .ric
            .values()
            .contract_vector(0, &v.raised(&ginv))
            .scaled(2.0),
    ))
}

/// Pointwise Bochner residual
/// `div(L_X g)(X) − ½Δ|X|² + |∇X|² − Ric(X,X) − ∇_X(div X)`, with its largest term.
pub fn bochner_pointwise(pack: &CurvaturePack, x: &VectorFieldSpec) -> Result<(f64, f64)> {
    let local = &pack.local;
    if local.order() < 4 {
        return Err(Error::Depth {
            what: "Bochner formula",
            needed: 2,
            available: local.order().saturating_sub(2),
        });
    }
    let xp = x_pack(pack, x)?;
    let ginv = local.ginv_values();
    let x_up = xp.x_up.values();
    let div_lie = local.nabla(&xp.lie)?.values().trace(1, 2, &ginv);
    let t1: f64 = div_lie
        .data()
        .iter()
        .zip(x_up.data())
        .map(|(a, b)| a * b)
        .sum();
    let sq = xp.x_low.contract_vector(0, &xp.x_up).data()[0].clone();
    let hess_sq = local.nabla(&local.gradient(&sq)?)?;
    let t2 = 0.5 * hess_sq.trace(0, 1, local.ginv()).data()[0].value();
    let t3 = xp.nabla_x.values().norm_sq(&ginv);
    let ric = pack.ric.values();
    let t4 = ric
        .contract_vector(0, &x_up)
        .data()
        .iter()
        .zip(x_up.data())
        .map(|(a, b)| a * b)
        .sum::<f64>();
    let grad_div = local.gradient(&xp.div_x)?.values();
    let t5: f64 = grad_div
        .data()
        .iter()
        .zip(x_up.data())
        .map(|(a, b)| a * b)
        .sum();
    let terms = [t1, t2, t3, t4, t5];
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok((t1 - t2 + t3 - t4 - t5, scale))
}

/// Per-sample inputs for the soliton identities.
pub struct SolitonSample {
    pub f: f64,
    pub scalar: f64,
    pub r_f: f64,
    pub grad_sq: f64,
    /// `|∇R − 2 Ric(∇f)|`.
    pub yamabe: f64,
    /// `|R_{ij,k} − R_{ik,j} + f^t R_{tijk}|`.
    pub codazzi_defect: f64,
}

pub fn soliton_sample(pack: &CurvaturePack, fp: &FPack) -> Result<SolitonSample> {
    let ginv = pack.ginv();
    let df = fp.df.values();
    let n = pack.dim();
    let d_ric = pack.d_ric()?.values();
    let iota = interior_first(&df.raised(&ginv), &pack.riem.values());
    let defect = Tensor::from_fn(n, 3, |x| {
        d_ric.at3(x[0], x[1], x[2]) - d_ric.at3(x[0], x[2], x[1]) + iota.at3(x[0], x[1], x[2])
    });
    Ok(SolitonSample {
        f: fp.f.value(),
        scalar: pack.scalar_value(),
        r_f: fp.r_f.value(),
        grad_sq: df.norm_sq(&ginv),
        yamabe: yamabe_residual(pack, &df)?.norm(&ginv),
        codazzi_defect: defect.norm(&ginv),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolitonIdentities {
    pub lambda: f64,
    /// Standard deviation of `R_f / n`.
    pub lambda_stddev: f64,
    pub max_yamabe: f64,
    /// Hamilton's constant `c` in `R + |∇f|² = 2λf + c`.
    pub hamilton_c: f64,
    pub hamilton_stddev: f64,
    pub max_codazzi_defect: f64,
}

pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, libm::sqrt(v))
}

pub fn soliton_identities(samples: &[SolitonSample], n: usize) -> SolitonIdentities {
    let lam: Vec<f64> = samples.iter().map(|s| s.r_f / n as f64).collect();
    let (lambda, lambda_stddev) = mean_stddev(&lam);
    let ham: Vec<f64> = samples
        .iter()
        .map(|s| s.scalar + s.grad_sq - 2.0 * lambda * s.f)
        .collect();
    let (hamilton_c, hamilton_stddev) = mean_stddev(&ham);
    SolitonIdentities {
        lambda,
        lambda_stddev,
        max_yamabe: samples.iter().fold(0.0, |m, s| m.max(s.yamabe)),
        hamilton_c,
        hamilton_stddev,
        max_codazzi_defect: samples.iter().fold(0.0, |m, s| m.max(s.codazzi_defect)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, CatalogParams};
    use crate::curvature::{curvature_at, order_for_depth};
    use crate::geometry::sample_points;
    use crate::jet::JetSpace;

    fn packs(
        name: &str,
        depth: usize,
        count: usize,
    ) -> (catalog::CatalogEntry, Vec<CurvaturePack>) {
        let e = catalog::lookup(name, CatalogParams::default()).unwrap();
        let space = JetSpace::new(e.dim(), order_for_depth(depth)).unwrap();
        let pts = sample_points(e.metric.chart(), count, 5);
        let pk = pts
            .iter()
            .map(|p| curvature_at(&e.metric, &space, p, depth).unwrap())
            .collect();
        (e, pk)
    }

    #[test]
    fn gaussian_bakry_emery_is_lambda_g() {
        let (e, pks) = packs("gaussian_shrinker", 1, 4);
        for pk in &pks {
            let fp = f_pack(pk, e.potential.as_ref().unwrap()).unwrap();
            assert!(fp.ric_f.values().minus(&pk.g()).max_abs() < 1e-12);
            assert!((fp.r_f.value() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn d_tensor_is_skew_and_trace_free() {
        let (e, pks) = packs("warped_yf", 1, 3);
        for pk in &pks {
            let fp = f_pack(pk, e.potential.as_ref().unwrap()).unwrap();
            let d = fp.d_tensor.unwrap();
            let ginv = pk.ginv();
            assert!(d.max_abs() > 1e-3);
            assert!(d.plus(&d.permuted(&[0, 2, 1])).max_abs() < 1e-12);
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                assert!(d.trace(a, b, &ginv).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn einstein_metrics_have_no_d_tensor() {
        let (_, pks) = packs("sphere", 0, 3);
        let f = catalog::sphere(3).unwrap().potential.unwrap();
        for pk in &pks {
            assert!(f_pack(pk, &f).unwrap().d_tensor.unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_riemann_decomposes() {
        let (e, pks) = packs("warped_yf", 0, 2);
        for pk in &pks {
            let fp = f_pack(pk, e.potential.as_ref().unwrap()).unwrap();
            let n = pk.dim() as f64;
            let g = pk.local.g().truncate(fp.schouten_f.order());
            let rebuilt = pk
                .weyl_jets()
                .unwrap()
                .plus_scaled(&fp.schouten_f.kulkarni_nomizu(&g), 1.0 / (n - 2.0));
            assert!(
                rebuilt
                    .minus(fp.riem_f.as_ref().unwrap())
                    .values()
                    .max_abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn gradient_field_matches_potential() {
        for name in ["warped_yf", "round_cylinder", "product_lsef"] {
            let (e, pks) = packs(name, 1, 2);
            for pk in &pks {
                let fp = f_pack(pk, e.potential.as_ref().unwrap()).unwrap();
                let xp = x_pack(pk, e.vector_field.as_ref().unwrap()).unwrap();
                assert!(xp.antisym.values().max_abs() < 1e-10);
                assert!(xp.ric_x.values().minus(&fp.ric_f.values()).max_abs() < 1e-10);
                assert!(
                    xp.d_tensor
                        .unwrap()
                        .minus(fp.d_tensor.as_ref().unwrap())
                        .max_abs()
                        < 1e-10
                );
                let d = xp.d_riem_x.unwrap().minus(fp.d_riem_f.as_ref().unwrap());
                assert!(d.max_abs() < 1e-10, "{name}");
            }
        }
    }

    #[test]
    fn rotation_on_flat_space() {
        let (e, pks) = packs("euclidean", 1, 2);
        for pk in &pks {
            let xp = x_pack(pk, e.vector_field.as_ref().unwrap()).unwrap();
            assert!(xp.lie.values().max_abs() < 1e-14);
            assert!((xp.antisym.values().at2(1, 0) - 2.0).abs() < 1e-14);
            assert!(xp.d_tensor.unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn integrability_identity_on_a_soliton_with_weyl() {
        // product_lsef is a gradient soliton with W ≠ 0, so the sign of the W term is visible.
        let (e, pks) = packs("product_lsef", 1, 3);
        for pk in &pks {
            let fp = f_pack(pk, e.potential.as_ref().unwrap()).unwrap();
            let w = pk.weyl_jets().unwrap().values();
            assert!(w.max_abs() > 0.1);
            let r =
                integrability_residual(pk, &fp.df.values(), fp.d_tensor.as_ref().unwrap()).unwrap();
            assert!(r.max_abs() < 1e-10, "{:?}", r.max_abs());
        }
    }

    #[test]
    fn bochner_identity_for_killing_and_polynomial_fields() {
        use alloc::sync::Arc;
        let (e, pks) = packs("sphere", 2, 3);
        for pk in &pks {
            let (r, s) = bochner_pointwise(pk, e.vector_field.as_ref().unwrap()).unwrap();
            assert!(r.abs() < 1e-8 * (1.0 + s));
        }
        let (e, pks) = packs("euclidean", 2, 3);
        let poly = VectorFieldSpec::new(
            e.metric.chart().clone(),
            Arc::new(|x: &[Jet]| {
                Ok(alloc::vec![
                    x[0].mul(&x[1]),
                    x[2].mul(&x[2]).mul(&x[0]),
                    x[1].scale(3.0)
                ])
            }),
        );
        for pk in &pks {
            let (r, s) = bochner_pointwise(pk, &poly).unwrap();
            assert!(s > 1e-3 && r.abs() < 1e-9 * (1.0 + s));
        }
    }

    #[test]
    fn e_f_wedge_trace() {
        let (e, pks) = packs("warped_gaussian", 0, 2);
        for pk in &pks {
            let fp = f_pack(pk, e.potential.as_ref().unwrap()).unwrap();
            let n = pk.dim();
            let g = pk.local.g().truncate(fp.einstein_f.order());
            let wedge = fp.einstein_f.kulkarni_nomizu(&g).values();
            let tr = wedge.trace(1, 3, &pk.ginv());
            let rhs = fp
                .ric_f
                .values()
                .minus(&pk.g().scaled(fp.r_f.value()))
                .scaled((n - 2) as f64);
            assert!(tr.minus(&rhs).max_abs() < 1e-10);
        }
    }
}
