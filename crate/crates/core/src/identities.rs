//! Pointwise curvature identities, each reported as a normalized residual.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogEntry;
use crate::classes::Class;
use crate::classifier::{Samples, DEEP_THRESHOLD, DEFAULT_THRESHOLD};
use crate::curvature::{
    bach_divergence, cotton_via_weyl, curvature_at, kn_divergence_check, normalized,
    order_for_depth, CurvaturePack, MAX_DEPTH,
};
use crate::error::{Error, Result};
use crate::jet::JetSpace;
use crate::potential::f_pack;
use crate::tensor::{Tensor, Values};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub depth: usize,
    pub tolerance: f64,
    pub max: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub geometry: String,
    pub dim: usize,
    pub seed: Option<u64>,
    pub count: usize,
    pub depth: usize,
    pub checks: Vec<IdentityCheck>,
    /// Names of identities that need more depth than was requested or do not apply.
    pub skipped: Vec<String>,
    pub passed: bool,
}

/// One identity at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub name: &'static str,
    pub depth: usize,
    pub value: f64,
}

fn rel(raw: &Values, ginv: &Values, ingredients: &[&Values]) -> f64 {
    let norms: Vec<f64> = ingredients.iter().map(|t| t.norm(ginv)).collect();
    normalized(raw.norm(ginv), &norms)
}

fn permuted_minus(t: &Values, perm: &[usize], sign: f64) -> Values {
    t.minus(&t.permuted(perm).scaled(sign))
}

/// Every identity the structure supports at `p`, up to covariant depth `depth`.
pub fn identity_point(
    entry: &CatalogEntry,
    space: &JetSpace,
    p: &[f64],
    depth: usize,
) -> Result<Vec<Sample>> {
    let depth = depth.min(MAX_DEPTH);
    let pack = curvature_at(&entry.metric, space, p, depth)?;
    let n = pack.dim();
    let ginv = pack.ginv();
    let mut out = Vec::new();
    let mut push = |name, depth, value| out.push(Sample { name, depth, value });

    let riem = pack.riem.values();
    let sym = [
        permuted_minus(&riem, &[1, 0, 2, 3], -1.0),
        permuted_minus(&riem, &[0, 1, 3, 2], -1.0),
        permuted_minus(&riem, &[2, 3, 0, 1], 1.0),
    ];
    push(
        "riemann symmetries",
        0,
        sym.iter()
            .map(|s| rel(s, &ginv, &[&riem]))
            .fold(0.0, f64::max),
    );
    let bianchi = riem
        .plus(&riem.permuted(&[0, 2, 3, 1]))
        .plus(&riem.permuted(&[0, 3, 1, 2]));
    push("first bianchi", 0, rel(&bianchi, &ginv, &[&riem]));

    if depth >= 1 {
        let dr = pack.d_riem()?.values();
        // R_ijkl,m + R_ijlm,k + R_ijmk,l
        let second = dr
            .plus(&dr.permuted(&[0, 1, 3, 4, 2]))
            .plus(&dr.permuted(&[0, 1, 4, 2, 3]));
        push("second bianchi", 1, rel(&second, &ginv, &[&dr]));
        let d_ric = pack.d_ric()?.values();
        let div_ric = d_ric.trace(1, 2, &ginv);
        let half_dr = pack.d_scalar()?.values().scaled(0.5);
        push(
            "contracted second bianchi",
            1,
            rel(&div_ric.minus(&half_dr), &ginv, &[&div_ric, &half_dr]),
        );
    }

    if n == 3 {
        let w = pack.weyl_jets()?.values();
        push(
            "weyl vanishes in dimension three",
            0,
            rel(&w, &ginv, &[&riem]),
        );
    }
    if n >= 3 {
        let w = pack.weyl_jets()?.values();
        let traces: Vec<Values> = [(0, 2), (0, 3), (1, 2), (1, 3)]
            .iter()
            .map(|&(a, b)| w.trace(a, b, &ginv))
            .collect();
        push(
            "weyl trace-free",
            0,
            traces
                .iter()
                .map(|t| rel(t, &ginv, &[&w, &riem]))
                .fold(0.0, f64::max),
        );
    }

    if n >= 3 {
        let fp = f_pack(
            &pack,
            entry
                .potential
                .as_ref()
                .ok_or(Error::MissingPotential("identities"))?,
        )?;
        if depth >= 1 {
            let (lhs, rhs) = kn_divergence_check(&pack.local, &fp.ric_f)?;
            push(
                "kulkarni-nomizu divergence",
                1,
                rel(&lhs.minus(&rhs), &ginv, &[&lhs, &rhs]),
            );
        }
        let d = fp.d_tensor.clone().expect("n >= 3");
        let ingredients = d_ingredients(&pack, &fp.df.values());
        let refs: Vec<&Values> = core::iter::once(&d).chain(ingredients.iter()).collect();
        push(
            "D skew",
            0,
            rel(&permuted_minus(&d, &[0, 2, 1], -1.0), &ginv, &refs),
        );
        let d_tr = [(0, 1), (0, 2), (1, 2)].map(|(a, b)| rel(&d.trace(a, b, &ginv), &ginv, &refs));
        push("D trace-free", 0, d_tr.into_iter().fold(0.0, f64::max));
        if entry.expected.contains(&Class::E) {
            push("D vanishes on einstein metrics", 0, rel(&d, &ginv, &refs));
        }
    }

    if n >= 3 && depth >= 1 {
        let c = pack.cotton_jets()?.values();
        let d_ric = pack.d_ric()?.values();
        let skew = permuted_minus(&c, &[0, 2, 1], -1.0);
        let cyclic = c
            .plus(&c.permuted(&[1, 2, 0]))
            .plus(&c.permuted(&[2, 0, 1]));
        push("cotton skew", 1, rel(&skew, &ginv, &[&c, &d_ric]));
        push("cotton cyclic", 1, rel(&cyclic, &ginv, &[&c, &d_ric]));
        let traces =
            [(0, 1), (0, 2), (1, 2)].map(|(a, b)| rel(&c.trace(a, b, &ginv), &ginv, &[&c, &d_ric]));
        push(
            "cotton trace-free",
            1,
            traces.into_iter().fold(0.0, f64::max),
        );
        if n >= 4 {
            let via = cotton_via_weyl(&pack)?;
            let dw = pack.d_weyl()?.values();
            push(
                "cotton from weyl divergence",
                1,
                rel(&c.minus(&via), &ginv, &[&c, &dw]),
            );
        }
        if depth >= 2 {
            let dc = pack.d_cotton()?.values();
            push(
                "cotton divergence-free",
                2,
                rel(&dc.trace(0, 3, &ginv), &ginv, &[&dc]),
            );
        }
    }

    if n >= 4 && depth >= 2 {
        let b = pack.bach.as_ref().expect("depth 2").values();
        let dc = pack.d_cotton()?.values();
        let scale = [&b, &dc];
        push(
            "bach symmetric",
            2,
            rel(&permuted_minus(&b, &[1, 0], 1.0), &ginv, &scale),
        );
        let tr = Tensor::scalar(n, b.trace(0, 1, &ginv).data()[0]);
        push("bach trace-free", 2, rel(&tr, &ginv, &scale));
    }
    if n >= 4 && depth >= 3 {
        let bd = bach_divergence(&pack)?;
        let db = pack.d_bach.as_ref().expect("depth 3");
        let mut value = rel(&bd.lhs.minus(&bd.rhs), &ginv, &[&bd.lhs, &bd.rhs, db]);
        if n == 4 && bd.factor != 0.0 {
            value = f64::INFINITY;
        }
        push("bach divergence", 3, value);
    }
    Ok(out)
}

/// The rank-3 pieces `D` is assembled from, used only for normalization.
fn d_ingredients(pack: &CurvaturePack, df: &Values) -> Vec<Values> {
    let g = pack.g();
    let ric = pack.ric.values();
    alloc::vec![ric.outer(df), g.outer(df).scaled(pack.scalar_value())]
}

fn tolerance(depth: usize) -> f64 {
    if depth >= 3 {
        DEEP_THRESHOLD
    } else {
        DEFAULT_THRESHOLD
    }
}

/// Names of identities the suite would run with unlimited depth but did not.
fn skipped_for(n: usize, depth: usize, einstein: bool) -> Vec<String> {
    let mut s = Vec::new();
    let mut add = |cond: bool, name: &str| {
        if cond {
            s.push(String::from(name));
        }
    };
    add(depth < 1, "second bianchi");
    add(depth < 1, "contracted second bianchi");
    add(n >= 3 && depth < 1, "cotton skew");
    add(n >= 3 && depth < 1, "kulkarni-nomizu divergence");
    add(n >= 3 && depth < 2, "cotton divergence-free");
    add(n >= 4 && depth < 2, "bach symmetric");
    add(n >= 4 && depth < 3, "bach divergence");
    add(n < 4, "bach divergence");
    add(n >= 3 && !einstein, "D vanishes on einstein metrics");
    s
}

/// Aggregates per-point samples into a report; every sample list must list the
/// same identities in the same order.
pub fn report_from_samples(
    entry: &CatalogEntry,
    samples: &Samples,
    depth: usize,
    per_point: &[Vec<Sample>],
) -> IdentityReport {
    let mut checks: Vec<IdentityCheck> = Vec::new();
    if let Some(first) = per_point.first() {
        for (k, s) in first.iter().enumerate() {
            let max = per_point
                .iter()
                .map(|pt| pt[k].value)
                .fold(
                    0.0,
                    |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) },
                );
            let tol = tolerance(s.depth);
            checks.push(IdentityCheck {
                name: s.name.into(),
                depth: s.depth,
                tolerance: tol,
                max,
                passed: max <= tol,
            });
        }
    }
    IdentityReport {
        geometry: entry.name.clone(),
        dim: entry.dim(),
        seed: match samples {
            Samples::Seeded { seed, .. } => Some(*seed),
            Samples::Given(_) => None,
        },
        count: per_point.len(),
        depth,
        passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
        skipped: skipped_for(entry.dim(), depth, entry.expected.contains(&Class::E)),
        checks,
    }
}

pub fn identity_suite(
    entry: &CatalogEntry,
    samples: &Samples,
    depth: usize,
) -> Result<IdentityReport> {
    let depth = depth.min(MAX_DEPTH);
    let space = JetSpace::new(entry.dim(), order_for_depth(depth))?;
    let points = samples.points(entry);
    let per_point: Vec<Vec<Sample>> = points
        .iter()
        .map(|p| identity_point(entry, &space, p, depth))
        .collect::<Result<_>>()?;
    Ok(report_from_samples(entry, samples, depth, &per_point))
}
