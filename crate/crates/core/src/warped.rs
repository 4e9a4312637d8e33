//! Warped products `dt² + e^{q(t)} h` over an Einstein fiber.
//!
//! Harmonic weighted curvature of such a metric with a potential `f(t)` reduces
//! to the third-order equation
//! `q''' + (n/2) q' q'' + (k/(n−1)) e^{−q} q' = ½ (2q'' + q'²) f'`,
//! where `k` is the scalar curvature of the fiber. Choosing
//! `½ (2q'' + q'²) f' = (ε/(n−1)) q' e^{−q}` and integrating once leaves
//! `q'' + (n/4) q'² − ((k−ε)/(n−1)) e^{−q} = (4/n) C`, which becomes
//! `φ'' − a φ^{1−4/n} = C φ` for `φ = e^{nq/4}` and `a = n(k−ε)/(4(n−1))`.
//! Periodic solutions of the last equation give compact examples after
//! quotienting the line by the period.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogEntry, KnownScalars};
use crate::classes::Class;
use crate::classifier::{classify, MembershipReport, Samples};
use crate::curvature::{curvature_at, order_for_depth};
use crate::error::{Error, Result};
use crate::geometry::{warped_product, MetricField, ScalarPotential};
use crate::jet::{Jet, JetSpace};
use crate::potential::f_pack;
use crate::tensor::Scalar;

/// Order of the stored `q` Taylor data.
pub const Q_ORDER: usize = 5;
/// Order of the stored `f` Taylor data.
pub const F_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpedParams {
    pub n: usize,
    /// Scalar curvature of the fiber.
    pub k: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl WarpedParams {
    /// `a = n(k−ε)/(4(n−1))`.
    pub fn a(&self) -> f64 {
        let n = self.n as f64;
        n * (self.k - self.epsilon) / (4.0 * (n - 1.0))
    }

    /// Positive equilibrium `φ* = (a/(−C))^{n/4}`.
    pub fn phi_star(&self) -> f64 {
        libm::pow(self.a() / -self.c, self.n as f64 / 4.0)
    }

    /// `ω² = −C − (1 − 4/n) a φ*^{−4/n}` from linearizing at `φ*`.
    pub fn linear_period(&self) -> f64 {
        let n = self.n as f64;
        let w2 = -self.c - (1.0 - 4.0 / n) * self.a() * libm::pow(self.phi_star(), -4.0 / n);
        2.0 * PI / libm::sqrt(w2)
    }

    /// Upper bound for `C` that keeps `2q'' + q'²` negative.
    pub fn c_bound(&self) -> f64 {
        -2.0 * (self.k - self.epsilon) / (self.n as f64 - 1.0)
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Dimension {
                what: "warped construction",
                dim: self.n,
            });
        }
        if !(self.epsilon > 0.0 && self.k > self.epsilon) {
            return Err(Error::Admissibility("need k > ε > 0".to_string()));
        }
        if !(self.c < self.c_bound()) {
            return Err(Error::Admissibility(alloc::format!(
                "need C < {}",
                self.c_bound()
            )));
        }
        Ok(())
    }

    /// Right side of `φ'' = a φ^{1−4/n} + C φ`.
    fn accel(&self, phi: f64) -> f64 {
        self.a() * libm::pow(phi, 1.0 - 4.0 / self.n as f64) + self.c * phi
    }

    /// `½ φ'² − a φ^{2−4/n}/(2−4/n) − C φ²/2`, conserved along solutions.
    pub fn energy(&self, phi: f64, dphi: f64) -> f64 {
        let e = 2.0 - 4.0 / self.n as f64;
        let potential = if e == 0.0 {
            self.a() * libm::log(phi)
        } else {
            self.a() * libm::pow(phi, e) / e
        };
        0.5 * dphi * dphi - potential - 0.5 * self.c * phi * phi
    }
}

/// One period of a solution of the `φ` equation sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiOrbit {
    pub params: WarpedParams,
    pub amplitude: f64,
    /// Step used on the output grid, `period / (nodes − 1)`.
    pub step: f64,
    pub phi_star: f64,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub period: f64,
    pub linear_period: f64,
    /// Largest `|E(t) − E(0)| / |E(0)|` over the period.
    pub energy_drift: f64,
    /// Largest `|φ'' − a φ^{1−4/n} − Cφ|` with `φ''` from the grid.
    pub equation_residual: f64,
}

fn rk4(p: &WarpedParams, (x, v): (f64, f64), h: f64) -> (f64, f64) {
    let k1 = (v, p.accel(x));
    let k2 = (v + 0.5 * h * k1.1, p.accel(x + 0.5 * h * k1.0));
    let k3 = (v + 0.5 * h * k2.1, p.accel(x + 0.5 * h * k2.0));
    let k4 = (v + h * k3.1, p.accel(x + h * k3.0));
    (
        x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Root in `[t1, t2]` of the parabola through three samples of `φ'`.
fn quadratic_crossing(t: [f64; 3], y: [f64; 3]) -> f64 {
    let h = t[1] - t[0];
    let (a, b, c) = (
        0.5 * (y[0] - 2.0 * y[1] + y[2]) / (h * h),
        0.5 * (y[2] - y[0]) / h,
        y[1],
    );
    // y(s) = a s² + b s + c with s = τ − t[1]; the root lies in (0, h].
    let s = if a.abs() < 1e-300 {
        -c / b
    } else {
        let disc = libm::sqrt((b * b - 4.0 * a * c).max(0.0));
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        if (0.0..=h * (1.0 + 1e-9)).contains(&r1) {
            r1
        } else {
            r2
        }
    };
    t[1] + s
}

/// First return to the section `φ' = 0, φ > φ*` with `φ'` decreasing.
fn first_return(p: &WarpedParams, phi0: f64, h: f64, max_steps: usize) -> Result<f64> {
    let star = p.phi_star();
    let mut state = (phi0, 0.0);
    let mut hist = [(0.0, 0.0); 3];
    hist[2] = (0.0, 0.0);
    let mut left_start = false;
    for step in 1..=max_steps {
        state = rk4(p, state, h);
        if !(state.0 > 0.0) {
            return Err(Error::PhiNonPositive { t: step as f64 * h });
        }
        hist = [hist[1], hist[2], (step as f64 * h, state.1)];
        if state.1 > 0.0 {
            left_start = true;
        }
        if left_start && step >= 2 && hist[1].1 > 0.0 && hist[2].1 <= 0.0 && state.0 > star {
            return Ok(quadratic_crossing(
                [hist[0].0, hist[1].0, hist[2].0],
                [hist[0].1, hist[1].1, hist[2].1],
            ));
        }
    }
    Err(Error::NoReturn { steps: max_steps })
}

/// Integrates from `φ(0) = φ* + amplitude`, `φ'(0) = 0`, finds the period and
/// resamples exactly one period on a uniform grid.
pub fn solve_phi(params: WarpedParams, amplitude: f64, step: f64) -> Result<PhiOrbit> {
    params.check()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter("step must be positive".to_string()));
    }
    let star = params.phi_star();
    let phi0 = star + amplitude;
    if !(phi0 > 0.0) {
        return Err(Error::PhiNonPositive { t: 0.0 });
    }
    let linear = params.linear_period();
    let period = if amplitude == 0.0 {
        linear
    } else {
        let budget = |h: f64| (20.0 * linear / h) as usize + 16;
        let mut h = step;
        let mut period = first_return(&params, phi0, h, budget(h))?;
        for _ in 0..8 {
            h *= 0.5;
            let finer = first_return(&params, phi0, h, budget(h))?;
            let change = (finer - period).abs();
            period = finer;
            if change < 1e-8 {
                break;
            }
        }
        period
    };
    let intervals = libm::ceil(period / step).max(8.0) as usize;
    let h = period / intervals as f64;
    let mut t = Vec::with_capacity(intervals + 1);
    let mut phi = Vec::with_capacity(intervals + 1);
    let mut dphi = Vec::with_capacity(intervals + 1);
    let mut state = (phi0, 0.0);
    for j in 0..=intervals {
        if j > 0 {
            state = rk4(&params, state, h);
        }
        if !(state.0 > 0.0) {
            return Err(Error::PhiNonPositive { t: j as f64 * h });
        }
        t.push(j as f64 * h);
        phi.push(state.0);
        dphi.push(state.1);
    }
    let e0 = params.energy(phi0, 0.0);
    let energy_drift = phi
        .iter()
        .zip(&dphi)
        .map(|(x, v)| (params.energy(*x, *v) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let mut equation_residual: f64 = 0.0;
    for j in 1..intervals {
        let second = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (h * h);
        equation_residual = equation_residual.max((second - params.accel(phi[j])).abs());
    }
    if amplitude == 0.0 {
        equation_residual = params.accel(star).abs();
    }
    Ok(PhiOrbit {
        params,
        amplitude,
        step: h,
        phi_star: star,
        t,
        phi,
        dphi,
        period,
        linear_period: linear,
        energy_drift,
        equation_residual,
    })
}

/// Taylor coefficients `c_m = q^{(m)}/m!` around one node.
pub type Taylor<const N: usize> = [f64; N];

fn factorial(m: usize) -> f64 {
    (1..=m).map(|j| j as f64).product()
}

fn to_derivatives<const N: usize>(c: &Taylor<N>) -> [f64; N] {
    core::array::from_fn(|m| c[m] * factorial(m))
}

fn to_coefficients<const N: usize>(d: &[f64; N]) -> Taylor<N> {
    core::array::from_fn(|m| d[m] / factorial(m))
}

/// `Σ c_m s^m` as a jet of the local variable `s`.
fn series(space: &JetSpace, c: &[f64]) -> Result<Jet> {
    let s = space.variable(0, 0.0, space.max_order())?;
    let mut acc = space.constant(0.0, space.max_order());
    for cm in c.iter().rev() {
        acc = acc.mul(&s).add_const(*cm);
    }
    Ok(acc)
}

/// Derivatives of `q` through order five at every node. `q, q', q''` come from
/// `φ` and the `φ` equation; higher ones from differentiating the reduced
/// `q` equation as a Taylor recurrence.
pub fn q_jets_from_phi(orbit: &PhiOrbit) -> Result<Vec<[f64; Q_ORDER + 1]>> {
    let p = &orbit.params;
    let n = p.n as f64;
    let kappa = (p.k - p.epsilon) / (n - 1.0);
    let space = JetSpace::new(1, Q_ORDER)?;
    let mut out = Vec::with_capacity(orbit.t.len());
    for (j, (&phi, &dphi)) in orbit.phi.iter().zip(&orbit.dphi).enumerate() {
        if !(phi > 0.0) {
            return Err(Error::PhiNonPositive { t: orbit.t[j] });
        }
        let r = dphi / phi;
        let q0 = 4.0 / n * libm::log(phi);
        let q1 = 4.0 / n * r;
        let q2 = 4.0 / n * (p.accel(phi) / phi - r * r);
        let mut c = [0.0; Q_ORDER + 1];
        c[0] = q0;
        c[1] = q1;
        c[2] = q2 / 2.0;
        for m in 3..=Q_ORDER {
            let q = series(&space, &c[..m])?;
            let dq = q.derivative(0)?;
            // q'' = (4/n) C − (n/4) q'² + κ e^{−q}
            let rhs = dq
                .mul(&dq)
                .scale(-n / 4.0)
                .add(&q.scale(-1.0).exp().scale(kappa).truncate(dq.order()));
            let rhs = rhs.add_const(4.0 / n * p.c);
            c[m] = rhs.coeff(&[m - 2])? / (m * (m - 1)) as f64;
        }
        out.push(to_derivatives(&c));
    }
    Ok(out)
}

/// `q'' + (n/4) q'² − ((k−ε)/(n−1)) e^{−q} − (4/n) C` at each node.
pub fn reduced_residual(q: &[[f64; Q_ORDER + 1]], p: &WarpedParams) -> Vec<f64> {
    let n = p.n as f64;
    q.iter()
        .map(|d| {
            d[2] + n / 4.0 * d[1] * d[1]
                - (p.k - p.epsilon) / (n - 1.0) * libm::exp(-d[0])
                - 4.0 / n * p.c
        })
        .collect()
}

/// `q''' + (n/2) q' q'' + (k/(n−1)) e^{−q} q' − ½ (2q'' + q'²) f'` at each node.
pub fn hcf_ode_residual(q: &[[f64; Q_ORDER + 1]], f_prime: &[f64], n: usize, k: f64) -> Vec<f64> {
    let n = n as f64;
    q.iter()
        .zip(f_prime)
        .map(|(d, fp)| {
            d[3] + n / 2.0 * d[1] * d[2] + k / (n - 1.0) * libm::exp(-d[0]) * d[1]
                - 0.5 * (2.0 * d[2] + d[1] * d[1]) * fp
        })
        .collect()
}

/// `q'' + (n/4) q'² − (k/(n−1)) e^{−q}`, whose derivative is the left side of
/// the third-order equation.
pub fn integrated_lhs(q: &[[f64; Q_ORDER + 1]], n: usize, k: f64) -> Vec<f64> {
    let n = n as f64;
    q.iter()
        .map(|d| d[2] + n / 4.0 * d[1] * d[1] - k / (n - 1.0) * libm::exp(-d[0]))
        .collect()
}

/// `f' = 2 (ε/(n−1)) q' e^{−q} / (2q'' + q'²)` as a jet in the local variable.
fn f_prime_jet(space: &JetSpace, c: &[f64], n: f64, epsilon: f64) -> Result<Jet> {
    let q = series(space, c)?;
    let dq = q.derivative(0)?;
    let ddq = dq.derivative(0)?;
    let den = ddq.scale(2.0).add(&dq.mul(&dq).truncate(ddq.order()));
    let num = dq
        .mul(&q.scale(-1.0).exp().truncate(dq.order()))
        .scale(2.0 * epsilon / (n - 1.0));
    Ok(num.truncate(den.order()).try_div(&den)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPotential {
    /// `f^{(m)}` for `m = 0..=4` at each node, with `f(t_0) = 0`.
    pub f: Vec<[f64; F_ORDER + 1]>,
    /// Largest value of `2q'' + q'²` over the grid; negative when admissible.
    pub max_denominator: f64,
    /// `|f(t_last) − f(t_0)|`.
    pub drift: f64,
}

/// `2q'' + q'² = 4 e^{−q/2} (e^{q/2})''` at each node. On a nonconstant periodic
/// orbit it vanishes where `e^{q/2}` inflects, so it always takes both signs.
pub fn denominator_profile(q: &[[f64; Q_ORDER + 1]]) -> Vec<f64> {
    q.iter().map(|d| 2.0 * d[2] + d[1] * d[1]).collect()
}

/// Integrates `f'` with the trapezoid rule on the node grid.
pub fn recover_f(
    t: &[f64],
    q: &[[f64; Q_ORDER + 1]],
    n: usize,
    epsilon: f64,
) -> Result<RecoveredPotential> {
    let nf = n as f64;
    let space = JetSpace::new(1, Q_ORDER)?;
    let mut max_denominator = f64::NEG_INFINITY;
    let mut derivs: Vec<[f64; F_ORDER + 1]> = Vec::with_capacity(q.len());
    for (j, d) in q.iter().enumerate() {
        let den = 2.0 * d[2] + d[1] * d[1];
        max_denominator = max_denominator.max(den);
        if !(den < 0.0) {
            return Err(Error::Denominator {
                t: t[j],
                value: den,
            });
        }
        let fp = f_prime_jet(&space, &to_coefficients(d), nf, epsilon)?;
        let mut fd = [0.0; F_ORDER + 1];
        for m in 1..=F_ORDER {
            fd[m] = fp.partial(&[m - 1])?;
        }
        derivs.push(fd);
    }
    for j in 1..derivs.len() {
        let h = t[j] - t[j - 1];
        derivs[j][0] = derivs[j - 1][0] + 0.5 * h * (derivs[j][1] + derivs[j - 1][1]);
    }
    let drift = match (derivs.first(), derivs.last()) {
        (Some(a), Some(b)) => (b[0] - a[0]).abs(),
        _ => 0.0,
    };
    Ok(RecoveredPotential {
        f: derivs,
        max_denominator,
        drift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedSolution {
    pub n: usize,
    pub k: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<WarpedParams>,
    pub t: Vec<f64>,
    /// `q^{(m)}` for `m = 0..=5` at each node.
    pub q: Vec<[f64; Q_ORDER + 1]>,
    /// `f^{(m)}` for `m = 0..=4` at each node.
    pub f: Vec<[f64; F_ORDER + 1]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub period: Option<f64>,
    pub residuals: ResidualSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    /// Largest third-order equation residual over the nodes.
    pub ode_max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_denominator: Option<f64>,
}

impl WarpedSolution {
    pub fn f_prime(&self) -> Vec<f64> {
        self.f.iter().map(|d| d[1]).collect()
    }

    pub fn ode_residual(&self) -> Vec<f64> {
        hcf_ode_residual(&self.q, &self.f_prime(), self.n, self.k)
    }

    /// `F = e^q` at each node.
    pub fn warp(&self) -> Vec<f64> {
        self.q.iter().map(|d| libm::exp(d[0])).collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `q = t²`, `f = (n/2) log(1 + t²)` over a Ricci-flat fiber on `nodes` points of `[lo, hi]`.
pub fn explicit_gaussian(n: usize, lo: f64, hi: f64, nodes: usize) -> Result<WarpedSolution> {
    if n < 3 {
        return Err(Error::Dimension {
            what: "warped construction",
            dim: n,
        });
    }
    if nodes < 2 || !(hi > lo) {
        return Err(Error::Parameter(
            "need at least two nodes on a nonempty interval".to_string(),
        ));
    }
    let space = JetSpace::new(1, F_ORDER)?;
    let mut t = Vec::with_capacity(nodes);
    let mut q = Vec::with_capacity(nodes);
    let mut f = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let tj = lo + (hi - lo) * j as f64 / (nodes - 1) as f64;
        t.push(tj);
        q.push([tj * tj, 2.0 * tj, 2.0, 0.0, 0.0, 0.0]);
        let x = space.variable(0, tj, F_ORDER)?;
        let fj = x.mul(&x).add_const(1.0).ln()?.scale(0.5 * n as f64);
        f.push(core::array::from_fn(|m| fj.partial(&[m]).expect("order")));
    }
    let mut sol = WarpedSolution {
        n,
        k: 0.0,
        params: None,
        t,
        q,
        f,
        phi: None,
        period: None,
        residuals: ResidualSummary {
            ode_max: 0.0,
            reduced_max: None,
            energy_drift: None,
            f_drift: None,
            max_denominator: None,
        },
    };
    sol.residuals.ode_max = max_abs(&sol.ode_residual());
    Ok(sol)
}

/// The periodic pipeline: `φ` orbit, `q` jets, recovered `f`.
pub fn construct_periodic(
    params: WarpedParams,
    amplitude: f64,
    step: f64,
) -> Result<WarpedSolution> {
    let orbit = solve_phi(params, amplitude, step)?;
    let q = q_jets_from_phi(&orbit)?;
    let pot = recover_f(&orbit.t, &q, params.n, params.epsilon)?;
    let mut sol = WarpedSolution {
        n: params.n,
        k: params.k,
        params: Some(params),
        residuals: ResidualSummary {
            ode_max: 0.0,
            reduced_max: Some(max_abs(&reduced_residual(&q, &params))),
            energy_drift: Some(orbit.energy_drift),
            f_drift: Some(pot.drift),
            max_denominator: Some(pot.max_denominator),
        },
        t: orbit.t,
        q,
        f: pot.f,
        phi: Some(orbit.phi),
        period: Some(orbit.period),
    };
    sol.residuals.ode_max = max_abs(&sol.ode_residual());
    Ok(sol)
}

/// Node whose Taylor data is used to evaluate at `t`.
fn nearest(t: &[f64], x: f64) -> usize {
    let i = t.partition_point(|v| *v < x);
    if i == 0 {
        0
    } else if i >= t.len() {
        t.len() - 1
    } else if (x - t[i - 1]) <= (t[i] - x) {
        i - 1
    } else {
        i
    }
}

/// Taylor polynomial of the node nearest to `x.value()`, composed with `x`.
fn node_series<const N: usize>(t: &Arc<Vec<f64>>, data: &Arc<Vec<[f64; N]>>, x: &Jet) -> Jet {
    let j = nearest(t, x.value());
    let c = to_coefficients(&data[j]);
    let s = x.add_const(-t[j]);
    let mut acc = x.zero_like();
    for cm in c.iter().rev() {
        acc = acc.mul(&s).add_const(*cm);
    }
    acc
}

/// The warped metric and potential built from node Taylor data. Evaluation is
/// exact at the nodes and a local Taylor approximation elsewhere.
pub fn assemble(solution: &WarpedSolution, fiber: &MetricField) -> Result<CatalogEntry> {
    if fiber.dim() + 1 != solution.n {
        return Err(Error::Dimension {
            what: "warped fiber",
            dim: fiber.dim(),
        });
    }
    let t = Arc::new(solution.t.clone());
    let q = Arc::new(solution.q.clone());
    let f = Arc::new(solution.f.clone());
    let (lo, hi) = (t[0], t[t.len() - 1]);
    let pad = 0.25 * (hi - lo);
    let (tq, tf) = (t.clone(), t.clone());
    let metric = warped_product(
        Arc::new(move |x: &Jet| Ok(node_series(&tq, &q, x).exp())),
        fiber,
        lo - pad,
        hi + pad,
    )?;
    let potential = ScalarPotential::new(
        metric.chart().clone(),
        Arc::new(move |x: &[Jet]| Ok(node_series(&tf, &f, &x[0]))),
    );
    Ok(CatalogEntry {
        name: "warped_construction".into(),
        metric,
        potential: Some(potential),
        vector_field: None,
        expected: Default::default(),
        known: KnownScalars::default(),
        trivial_potential: false,
        gradient_field: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub fiber_scalar_curvature: f64,
    pub hc_f: MembershipReport,
    pub e_f: MembershipReport,
    /// Largest gap between the tensor Codazzi component and the scalar equation.
    pub tensor_ode_gap: f64,
    pub warp_min: f64,
    pub warp_max: f64,
}

/// Runs the full-tensor checks at `count` nodes spread over the whole grid.
pub fn assemble_and_verify(
    solution: &WarpedSolution,
    fiber: &MetricField,
    fiber_point: &[f64],
    count: usize,
    threshold: f64,
) -> Result<Verification> {
    let fspace = JetSpace::new(fiber.dim(), order_for_depth(0))?;
    let measured = curvature_at(fiber, &fspace, fiber_point, 0)?.scalar_value();
    if (measured - solution.k).abs() > 1e-8 * (1.0 + solution.k.abs()) {
        return Err(Error::FiberCurvature {
            measured,
            expected: solution.k,
        });
    }
    let entry = assemble(solution, fiber)?;
    let last = solution.t.len() - 1;
    let count = count.clamp(1, solution.t.len());
    let idx: Vec<usize> = (0..count)
        .map(|i| {
            if count == 1 {
                0
            } else {
                i * last / (count - 1)
            }
        })
        .collect();
    let points: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| {
            core::iter::once(solution.t[j])
                .chain(fiber_point.iter().copied())
                .collect()
        })
        .collect();
    let samples = Samples::Given(points.clone());
    let hc_f = classify(&entry, Class::HCf, &samples, threshold)?;
    let e_f = classify(&entry, Class::Ef, &samples, threshold)?;
    let ode = solution.ode_residual();
    let mut gap: f64 = 0.0;
    for (p, &j) in points.iter().zip(&idx) {
        gap = gap.max((codazzi_component(&entry, p)? - ode[j]).abs());
    }
    let warp = solution.warp();
    Ok(Verification {
        fiber_scalar_curvature: measured,
        hc_f,
        e_f,
        tensor_ode_gap: gap,
        warp_min: warp.iter().copied().fold(f64::INFINITY, f64::min),
        warp_max: warp.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// `((Ric_f)_{11,0} − (Ric_f)_{10,1}) / (−½ g_11)`, which equals the scalar
/// third-order residual on a warped product with potential `f(t)`.
pub fn codazzi_component(entry: &CatalogEntry, p: &[f64]) -> Result<f64> {
    let space = JetSpace::new(entry.dim(), order_for_depth(1))?;
    let pack = curvature_at(&entry.metric, &space, p, 1)?;
    let fp = f_pack(
        &pack,
        entry
            .potential
            .as_ref()
            .ok_or(Error::MissingPotential("warped"))?,
    )?;
    let d = fp.d_ric_f.as_ref().expect("depth 1");
    let g = pack.g();
    let g11 = *g.at2(1, 1);
    Ok((d.at3(1, 1, 0) - d.at3(1, 0, 1)) / (-0.5 * g11))
}
