//! Seeded random geometry specs built from expression strings.
//!
//! Two families alternate. Generic specs perturb the flat metric by bounded
//! trigonometric and exponential terms and belong to no class. Linear Gaussians use a
//! constant metric `G` with `f = (λ/2) xᵀGx + b·x` and `X = ∇f`, which are
//! gradient Ricci solitons and hence members of every potential class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spec::{
    ChartSpec, ComponentParams, ExprParams, GeometrySpec, MetricSpec, PotentialSpec, VectorParams,
    VectorSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Generic,
    LinearGaussian,
}

pub fn family_of(seed: u64) -> Family {
    if seed % 3 == 2 {
        Family::LinearGaussian
    } else {
        Family::Generic
    }
}

fn coef(rng: &mut ChaCha8Rng, bound: f64) -> String {
    format!("{:.6}", rng.gen_range(-bound..bound))
}

fn var(rng: &mut ChaCha8Rng, n: usize) -> String {
    format!("x{}", rng.gen_range(1..=n))
}

/// Dimension 3 or 4 on the box `[−½, ½]^n`.
pub fn random_spec(seed: u64) -> GeometrySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=4);
    let chart = Some(ChartSpec {
        ranges: vec![[-0.5, 0.5]; n],
        margin: 0.1,
    });
    match family_of(seed) {
        Family::Generic => generic(&mut rng, seed, n, chart),
        Family::LinearGaussian => linear_gaussian(&mut rng, seed, n, chart),
    }
}

fn generic(rng: &mut ChaCha8Rng, seed: u64, n: usize, chart: Option<ChartSpec>) -> GeometrySpec {
    // Diagonal entries exceed exp(−0.375) > 0.68 on the box while each row has at
    // most three off-diagonal entries bounded by 0.15, so the metric is
    // diagonally dominant.
    let mut m = vec![vec![String::from("0"); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = format!(
            "exp({}*{}*{} + {}*{})",
            coef(rng, 0.5),
            var(rng, n),
            var(rng, n),
            coef(rng, 0.5),
            var(rng, n)
        );
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let e = format!(
                "{}*sin({})*cos({})",
                coef(rng, 0.15),
                var(rng, n),
                var(rng, n)
            );
            m[i][j] = e.clone();
            m[j][i] = e;
        }
    }
    let potential = format!(
        "{}*{}^2 + {}*{}*{} + {}*sin({}) + {}*{}",
        coef(rng, 1.0),
        var(rng, n),
        coef(rng, 1.0),
        var(rng, n),
        var(rng, n),
        coef(rng, 1.0),
        var(rng, n),
        coef(rng, 1.0),
        var(rng, n)
    );
    let vector: Vec<String> = (0..n)
        .map(|_| {
            format!(
                "{} + {}*{} + {}*cos({})",
                coef(rng, 1.0),
                coef(rng, 1.0),
                var(rng, n),
                coef(rng, 1.0),
                var(rng, n)
            )
        })
        .collect();
    GeometrySpec {
        name: format!("random_generic_{seed}"),
        dim: n,
        chart,
        metric: MetricSpec::Expression(ComponentParams {
            components: Some(m),
            diagonal: None,
        }),
        potential: Some(PotentialSpec::Expression(ExprParams { expr: potential })),
        vector_field: Some(VectorSpec::Expression(VectorParams { components: vector })),
    }
}

fn linear_gaussian(
    rng: &mut ChaCha8Rng,
    seed: u64,
    n: usize,
    chart: Option<ChartSpec>,
) -> GeometrySpec {
    // G = I + B Bᵀ/n is symmetric positive definite.
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let g: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() / n as f64;
                    s + if i == j { 1.0 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let lambda: f64 = rng.gen_range(-1.0..1.0);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            terms.push(format!(
                "{:.17e}*x{}*x{}",
                0.5 * lambda * g[i][j],
                i + 1,
                j + 1
            ));
        }
        terms.push(format!("{:.17e}*x{}", shift[i], i + 1));
    }
    GeometrySpec {
        name: format!("random_gaussian_{seed}"),
        dim: n,
        chart,
        metric: MetricSpec::Expression(ComponentParams {
            components: Some(
                g.iter()
                    .map(|r| r.iter().map(|v| format!("{v:.17e}")).collect())
                    .collect(),
            ),
            diagonal: None,
        }),
        potential: Some(PotentialSpec::Expression(ExprParams {
            expr: terms.join(" + "),
        })),
        vector_field: Some(VectorSpec::Gradient),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_are_deterministic_and_buildable() {
        for seed in 0..12 {
            let a = random_spec(seed);
            assert_eq!(a, random_spec(seed));
            let entry = a.build().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(entry.potential.is_some() && entry.vector_field.is_some());
        }
    }
}
