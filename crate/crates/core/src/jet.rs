//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function around a fixed
//! evaluation point, densely, in graded-lexicographic order of the multi-indices.
//! The coefficient of `x^α` is `∂^α f / α!`, so [`Jet::partial`] multiplies by `α!`
//! to recover the true partial derivative.
//!
//! Because the enumeration is graded, the coefficients of a jet of order `k` are
//! a prefix of those of order `k + 1`; truncation is a prefix copy and the
//! multiplication table of a lower order is a prefix of the higher one.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Largest supported number of chart variables.
pub const MAX_DIMS: usize = 8;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("number of variables {0} outside 1..={MAX_DIMS}")]
    Dims(usize),
    #[error("truncation order {0} exceeds {MAX_ORDER}")]
    Order(usize),
    #[error("variable index {index} out of range for {dims} variables")]
    Index { index: usize, dims: usize },
    #[error("a seeded variable needs order >= 1")]
    SeedOrder,
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    MultiIndex { degree: usize, order: usize },
    #[error("jet mismatch: ({0} vars, order {1}) vs ({2} vars, order {3})")]
    Mismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero constant term")]
    ZeroDivisor,
    #[error("{op} undefined at constant term {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("cannot differentiate an order-0 jet")]
    Exhausted,
}

/// Multi-index enumeration and product tables shared by all jets with the same
/// number of variables.
pub struct Layout {
    dims: usize,
    max_order: usize,
    /// Exponents, `dims` entries per monomial.
    exps: Vec<u8>,
    /// `counts[k]` = number of monomials of degree `<= k`.
    counts: Vec<usize>,
    /// `(a, b, c)`: monomial `a` times monomial `b` is monomial `c`,
    /// sorted by degree of `c`.
    products: Vec<(u32, u32, u32)>,
    /// `product_counts[k]` = number of product entries whose output has degree `<= k`.
    product_counts: Vec<usize>,
    /// `raise[idx * dims + i]` = index of `α + e_i`, `u32::MAX` when past `max_order`.
    raise: Vec<u32>,
    /// `α!` per monomial.
    factorials: Vec<f64>,
    lookup: BTreeMap<Vec<u8>, usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn push_degree(dims: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == dims {
        let used: usize = prefix.iter().map(|&e| e as usize).sum();
        prefix.push((degree - used) as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    let used: usize = prefix.iter().map(|&e| e as usize).sum();
    for e in (0..=(degree - used)).rev() {
        prefix.push(e as u8);
        push_degree(dims, degree, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    pub fn new(dims: usize, max_order: usize) -> Result<Arc<Layout>, JetError> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(JetError::Dims(dims));
        }
        if max_order > MAX_ORDER {
            return Err(JetError::Order(max_order));
        }
        let mut monomials = Vec::new();
        let mut counts = Vec::with_capacity(max_order + 1);
        for degree in 0..=max_order {
            push_degree(dims, degree, &mut Vec::new(), &mut monomials);
            counts.push(monomials.len());
        }
        debug_assert_eq!(monomials.len(), binomial(dims + max_order, max_order));

        let mut lookup = BTreeMap::new();
        for (idx, m) in monomials.iter().enumerate() {
            lookup.insert(m.clone(), idx);
        }
        let degree = |m: &[u8]| m.iter().map(|&e| e as usize).sum::<usize>();

        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            let da = degree(ma);
            for (b, mb) in monomials.iter().enumerate() {
                if da + degree(mb) > max_order {
                    continue;
                }
                let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                let c = lookup[&sum];
                products.push((a as u32, b as u32, c as u32));
            }
        }
        products.sort_by_key(|&(_, _, c)| degree(&monomials[c as usize]));
        let mut product_counts = Vec::with_capacity(max_order + 1);
        for k in 0..=max_order {
            product_counts.push(
                products
                    .iter()
                    .filter(|&&(_, _, c)| degree(&monomials[c as usize]) <= k)
                    .count(),
            );
        }

        let mut raise = vec![u32::MAX; monomials.len() * dims];
        let mut factorials = Vec::with_capacity(monomials.len());
        for (idx, m) in monomials.iter().enumerate() {
            factorials.push(m.iter().map(|&e| factorial(e as usize)).product());
            if degree(m) < max_order {
                for i in 0..dims {
                    let mut up = m.clone();
                    up[i] += 1;
                    raise[idx * dims + i] = lookup[&up] as u32;
                }
            }
        }

        Ok(Arc::new(Layout {
            dims,
            max_order,
            exps: monomials.concat(),
            counts,
            products,
            product_counts,
            raise,
            factorials,
            lookup,
        }))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.counts[order]
    }

    pub fn multi_index(&self, idx: usize) -> &[u8] {
        &self.exps[idx * self.dims..(idx + 1) * self.dims]
    }

    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.dims {
            return None;
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a.min(255) as u8).collect();
        self.lookup.get(&key).copied()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Factory for jets sharing one [`Layout`].
#[derive(Clone)]
pub struct JetSpace {
    layout: Arc<Layout>,
}

impl JetSpace {
    pub fn new(dims: usize, max_order: usize) -> Result<Self, JetError> {
        Ok(JetSpace {
            layout: Layout::new(dims, max_order)?,
        })
    }

    pub fn dims(&self) -> usize {
        self.layout.dims
    }

    pub fn max_order(&self) -> usize {
        self.layout.max_order
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn constant(&self, value: f64, order: usize) -> Jet {
        let mut coeffs = vec![0.0; self.layout.len(order.min(self.layout.max_order))];
        coeffs[0] = value;
        Jet {
            layout: self.layout.clone(),
            order: order.min(self.layout.max_order),
            coeffs,
        }
    }

    pub fn zero(&self, order: usize) -> Jet {
        self.constant(0.0, order)
    }

    /// The coordinate function `x_i` expanded around `value`.
    pub fn variable(&self, i: usize, value: f64, order: usize) -> Result<Jet, JetError> {
        if i >= self.layout.dims {
            return Err(JetError::Index {
                index: i,
                dims: self.layout.dims,
            });
        }
        if order == 0 {
            return Err(JetError::SeedOrder);
        }
        if order > self.layout.max_order {
            return Err(JetError::Order(order));
        }
        let mut jet = self.constant(value, order);
        // degree-one monomials follow the constant in descending-lex order
        jet.coeffs[1 + i] = 1.0;
        Ok(jet)
    }

    /// Seeds every chart variable at `point`.
    pub fn point(&self, point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| self.variable(i, v, order))
            .collect()
    }
}

/// Seeds variable `i` of a fresh `dims`-variable space at `value`.
pub fn seed_variable(i: usize, value: f64, dims: usize, order: usize) -> Result<Jet, JetError> {
    if order > MAX_ORDER {
        return Err(JetError::Order(order));
    }
    JetSpace::new(dims, order.max(1))?.variable(i, value, order)
}

/// Truncated multivariate Taylor polynomial.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dims", &self.layout.dims)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn dims(&self) -> usize {
        self.layout.dims
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Constant term, i.e. the function value at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `x^α`.
    pub fn coeff(&self, alpha: &[usize]) -> Result<f64, JetError> {
        let degree: usize = alpha.iter().sum();
        if degree > self.order {
            return Err(JetError::MultiIndex {
                degree,
                order: self.order,
            });
        }
        let idx = self.layout.index_of(alpha).ok_or(JetError::Index {
            index: alpha.len(),
            dims: self.layout.dims,
        })?;
        Ok(self.coeffs[idx])
    }

    /// The partial derivative `∂^α f` at the expansion point.
    pub fn partial(&self, alpha: &[usize]) -> Result<f64, JetError> {
        let c = self.coeff(alpha)?;
        let idx = self.layout.index_of(alpha).unwrap();
        Ok(c * self.layout.factorials[idx])
    }

    /// First derivative with respect to variable `i` as a jet of one lower order.
    pub fn derivative(&self, i: usize) -> Result<Jet, JetError> {
        if i >= self.layout.dims {
            return Err(JetError::Index {
                index: i,
                dims: self.layout.dims,
            });
        }
        if self.order == 0 {
            return Err(JetError::Exhausted);
        }
        let order = self.order - 1;
        let dims = self.layout.dims;
        let len = self.layout.len(order);
        let mut coeffs = Vec::with_capacity(len);
        for idx in 0..len {
            let up = self.layout.raise[idx * dims + i] as usize;
            let e = self.layout.exps[idx * dims + i] as f64 + 1.0;
            coeffs.push(e * self.coeffs[up]);
        }
        Ok(Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        })
    }

    /// Drops every coefficient above `order`. No-op when `order >= self.order()`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        let len = self.layout.len(order);
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    fn check(&self, other: &Jet) -> Result<(), JetError> {
        if self.layout.dims != other.layout.dims || self.order != other.order {
            return Err(JetError::Mismatch(
                self.layout.dims,
                self.order,
                other.layout.dims,
                other.order,
            ));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        let mut out = Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: vec![0.0; self.coeffs.len()],
        };
        out.accumulate_product(self, other, 1.0);
        Ok(out)
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        self.try_mul(&other.recip()?)
    }

    /// `self += scale * a * b` without allocating. All three must share dims and order.
    pub fn mul_add_assign(&mut self, a: &Jet, b: &Jet, scale: f64) -> Result<(), JetError> {
        self.check(a)?;
        self.check(b)?;
        self.accumulate_product(a, b, scale);
        Ok(())
    }

    fn accumulate_product(&mut self, a: &Jet, b: &Jet, scale: f64) {
        // every layout with these dims agrees on the table prefix up to self.order
        let n = self.layout.product_counts[self.order];
        let products = &self.layout.products[..n];
        let (x, y, out) = (&a.coeffs, &b.coeffs, &mut self.coeffs);
        if scale == 1.0 {
            for &(i, j, k) in products {
                out[k as usize] += x[i as usize] * y[j as usize];
            }
        } else {
            for &(i, j, k) in products {
                out[k as usize] += scale * x[i as usize] * y[j as usize];
            }
        }
    }

    /// `self += scale * a`.
    pub fn add_scaled_assign(&mut self, a: &Jet, scale: f64) -> Result<(), JetError> {
        self.check(a)?;
        for (o, x) in self.coeffs.iter_mut().zip(&a.coeffs) {
            *o += scale * x;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_constant(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Evaluates `Σ_k t_k (self − self₀)^k` by Horner's rule.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: vec![0.0; self.coeffs.len()],
        };
        acc.coeffs[0] = taylor[self.order];
        for k in (0..self.order).rev() {
            let mut next = Jet {
                layout: self.layout.clone(),
                order: self.order,
                coeffs: vec![0.0; self.coeffs.len()],
            };
            next.accumulate_product(&acc, &h, 1.0);
            next.coeffs[0] += taylor[k];
            acc = next;
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a == 0.0 {
            return Err(JetError::ZeroDivisor);
        }
        let mut t = Vec::with_capacity(self.order + 1);
        let mut p = 1.0 / a;
        for _ in 0..=self.order {
            t.push(p);
            p *= -1.0 / a;
        }
        Ok(self.compose(&t))
    }

    pub fn exp(&self) -> Jet {
        let e = libm::exp(self.value());
        let t: Vec<f64> = (0..=self.order).map(|k| e / factorial(k)).collect();
        self.compose(&t)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(JetError::Domain {
                op: "log",
                value: a,
            });
        }
        let mut t = Vec::with_capacity(self.order + 1);
        t.push(libm::log(a));
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * libm::pow(a, k as f64)));
        }
        Ok(self.compose(&t))
    }

    /// `self^r` for a real exponent; the constant term must be positive.
    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(JetError::Domain {
                op: "pow",
                value: a,
            });
        }
        let mut t = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            t.push(binom * libm::pow(a, r - k as f64));
            binom *= (r - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose(&t))
    }

    /// Integer power by repeated multiplication; no sign restriction.
    pub fn powi(&self, k: u32) -> Jet {
        let mut acc = Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: vec![0.0; self.coeffs.len()],
        };
        acc.coeffs[0] = 1.0;
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(JetError::Domain {
                op: "sqrt",
                value: a,
            });
        }
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let (s, c) = (libm::sin(a), libm::cos(a));
        let cycle = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.order)
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let (s, c) = (libm::sin(a), libm::cos(a));
        let cycle = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.order)
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&t)
    }

    pub fn tanh(&self) -> Jet {
        let th = libm::tanh(self.value());
        // d^k/dx^k tanh = P_k(tanh), P_0(T) = T, P_{k+1} = P_k'(T) (1 - T^2)
        let mut poly: Vec<f64> = vec![0.0, 1.0];
        let mut t = Vec::with_capacity(self.order + 1);
        for k in 0..=self.order {
            let v = poly.iter().rev().fold(0.0, |acc, c| acc * th + c);
            t.push(v / factorial(k));
            let deriv: Vec<f64> = poly
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect();
            let mut next = vec![0.0; deriv.len() + 2];
            for (i, c) in deriv.iter().enumerate() {
                next[i] += c;
                next[i + 2] -= c;
            }
            poly = next;
        }
        self.compose(&t)
    }
}

fn expect<T>(r: Result<T, JetError>) -> T {
    match r {
        Ok(v) => v,
        Err(e) => panic!("jet arithmetic: {e}"),
    }
}

// Operator forms panic on dims/order mismatch; use the `try_*` methods to
// handle that case as an error.

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        expect(self.try_add(rhs))
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        expect(self.try_sub(rhs))
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        expect(self.try_mul(rhs))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_constant(rhs)
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.add_constant(-rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
