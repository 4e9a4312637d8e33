//! Dense coordinate tensors over either plain numbers or jets.
//!
//! All slots are covariant unless a function says otherwise. Components are
//! stored row-major, so the last index varies fastest; covariant derivatives
//! append the derivative index last (`T_{ij,k} = ∇_k T_{ij}`).

use alloc::vec;
use alloc::vec::Vec;

use crate::jet::{Jet, JetError};

/// Scalar entries of a [`Tensor`]. Binary operations on jets of different
/// orders truncate to the lower order first.
pub trait Scalar: Clone {
    fn zero_like(&self) -> Self;
    fn value(&self) -> f64;
    fn order(&self) -> usize;
    fn truncate(&self, order: usize) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn add_const(&self, c: f64) -> Self;
    /// `self += s * a * b`, keeping the order of `self`.
    fn mul_add(&mut self, a: &Self, b: &Self, s: f64);
}

impl Scalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn value(&self) -> f64 {
        *self
    }
    fn order(&self) -> usize {
        usize::MAX
    }
    fn truncate(&self, _order: usize) -> Self {
        *self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn add_const(&self, c: f64) -> Self {
        self + c
    }
    fn mul_add(&mut self, a: &Self, b: &Self, s: f64) {
        *self += s * a * b;
    }
}

fn aligned<'a>(
    a: &'a Jet,
    b: &'a Jet,
) -> (alloc::borrow::Cow<'a, Jet>, alloc::borrow::Cow<'a, Jet>) {
    use alloc::borrow::Cow;
    let k = a.order().min(b.order());
    let a = if a.order() == k {
        Cow::Borrowed(a)
    } else {
        Cow::Owned(a.truncate(k))
    };
    let b = if b.order() == k {
        Cow::Borrowed(b)
    } else {
        Cow::Owned(b.truncate(k))
    };
    (a, b)
}

impl Scalar for Jet {
    fn zero_like(&self) -> Self {
        self.scale(0.0)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn order(&self) -> usize {
        Jet::order(self)
    }
    fn truncate(&self, order: usize) -> Self {
        Jet::truncate(self, order)
    }
    fn add(&self, other: &Self) -> Self {
        let (a, b) = aligned(self, other);
        &*a + &*b
    }
    fn sub(&self, other: &Self) -> Self {
        let (a, b) = aligned(self, other);
        &*a - &*b
    }
    fn mul(&self, other: &Self) -> Self {
        let (a, b) = aligned(self, other);
        &*a * &*b
    }
    fn scale(&self, s: f64) -> Self {
        Jet::scale(self, s)
    }
    fn add_const(&self, c: f64) -> Self {
        Jet::add_constant(self, c)
    }
    fn mul_add(&mut self, a: &Self, b: &Self, s: f64) {
        let k = Jet::order(self);
        if a.order() == k && b.order() == k {
            self.mul_add_assign(a, b, s).expect("aligned jets");
        } else {
            let (a, b) = (a.truncate(k), b.truncate(k));
            self.mul_add_assign(&a, &b, s).expect("aligned jets");
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tensor<S> {
    n: usize,
    rank: usize,
    data: Vec<S>,
}

pub type Values = Tensor<f64>;
pub type JetTensor = Tensor<Jet>;

/// Iterates all index tuples of a rank-`rank` tensor in storage order.
pub fn for_each_index(n: usize, rank: usize, mut f: impl FnMut(usize, &[usize])) {
    let total = n.pow(rank as u32);
    let mut idx = vec![0usize; rank];
    for flat in 0..total {
        f(flat, &idx);
        for s in (0..rank).rev() {
            idx[s] += 1;
            if idx[s] < n {
                break;
            }
            idx[s] = 0;
        }
    }
}

impl<S: Scalar> Tensor<S> {
    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut data = Vec::with_capacity(n.pow(rank as u32));
        for_each_index(n, rank, |_, idx| data.push(f(idx)));
        Tensor { n, rank, data }
    }

    pub fn from_vec(n: usize, rank: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), n.pow(rank as u32), "component count");
        Tensor { n, rank, data }
    }

    pub fn scalar(n: usize, s: S) -> Self {
        Tensor {
            n,
            rank: 0,
            data: vec![s],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.offset(idx)]
    }

    pub fn at2(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn at3(&self, i: usize, j: usize, k: usize) -> &S {
        &self.data[(i * self.n + j) * self.n + k]
    }

    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> &S {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    pub fn order(&self) -> usize {
        self.data
            .iter()
            .map(Scalar::order)
            .min()
            .unwrap_or(usize::MAX)
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|s| s.truncate(order))
    }

    pub fn map(&self, f: impl FnMut(&S) -> S) -> Self {
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip(&self, other: &Self, mut f: impl FnMut(&S, &S) -> S) -> Self {
        assert_eq!((self.n, self.rank), (other.n, other.rank), "tensor shape");
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.sub(b))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|a| a.scale(s))
    }

    /// `self + s * other`.
    pub fn plus_scaled(&self, other: &Self, s: f64) -> Self {
        self.zip(other, |a, b| a.add(&b.scale(s)))
    }

    /// Multiplies every component by the scalar field `s`.
    pub fn times(&self, s: &S) -> Self {
        self.map(|a| a.mul(s))
    }

    pub fn values(&self) -> Values {
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(Scalar::value).collect(),
        }
    }

    /// Permutes slots: component `out[idx] = self[idx∘perm]`, i.e. slot `s` of the
    /// result is slot `perm[s]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank);
        let mut src = vec![0usize; self.rank];
        Tensor::from_fn(self.n, self.rank, |idx| {
            for (s, &p) in perm.iter().enumerate() {
                src[p] = idx[s];
            }
            self.get(&src).clone()
        })
    }

    /// Contracts slots `a < b` with the inverse metric.
    pub fn trace(&self, a: usize, b: usize, ginv: &Tensor<S>) -> Self {
        assert!(a < b && b < self.rank);
        let n = self.n;
        let k = self.order().min(ginv.order());
        let ginv = ginv.truncate(k);
        let mut full = vec![0usize; self.rank];
        Tensor::from_fn(n, self.rank - 2, |idx| {
            let mut acc: Option<S> = None;
            for p in 0..n {
                for q in 0..n {
                    let mut r = 0;
                    for (s, slot) in full.iter_mut().enumerate() {
                        *slot = if s == a {
                            p
                        } else if s == b {
                            q
                        } else {
                            r += 1;
                            idx[r - 1]
                        };
                    }
                    let t = self.get(&full).truncate(k);
                    match acc.as_mut() {
                        None => {
                            let mut z = t.zero_like();
                            z.mul_add(ginv.at2(p, q), &t, 1.0);
                            acc = Some(z);
                        }
                        Some(z) => z.mul_add(ginv.at2(p, q), &t, 1.0),
                    }
                }
            }
            acc.expect("n >= 1")
        })
    }

    /// Contracts slot `slot` with the contravariant vector `v` (rank 1).
    pub fn contract_vector(&self, slot: usize, v: &Tensor<S>) -> Self {
        assert_eq!(v.rank, 1);
        let n = self.n;
        let k = self.order().min(v.order());
        let mut full = vec![0usize; self.rank];
        Tensor::from_fn(n, self.rank - 1, |idx| {
            let mut acc: Option<S> = None;
            for p in 0..n {
                let mut r = 0;
                for (s, x) in full.iter_mut().enumerate() {
                    *x = if s == slot {
                        p
                    } else {
                        r += 1;
                        idx[r - 1]
                    };
                }
                let t = self.get(&full).truncate(k);
                let vp = v.data[p].truncate(k);
                match acc.as_mut() {
                    None => {
                        let mut z = t.zero_like();
                        z.mul_add(&vp, &t, 1.0);
                        acc = Some(z);
                    }
                    Some(z) => z.mul_add(&vp, &t, 1.0),
                }
            }
            acc.expect("n >= 1")
        })
    }

    /// Raises a covector with the inverse metric.
    pub fn raised(&self, ginv: &Tensor<S>) -> Self {
        assert_eq!(self.rank, 1);
        ginv.contract_vector(1, self)
    }

    /// Tensor product `self ⊗ other`.
    pub fn outer(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let (a, b) = (self.truncate(k), other.truncate(k));
        let mut data = Vec::with_capacity(a.data.len() * b.data.len());
        for x in &a.data {
            for y in &b.data {
                data.push(x.mul(y));
            }
        }
        Tensor {
            n: self.n.max(other.n),
            rank: self.rank + other.rank,
            data,
        }
    }

    /// Kulkarni–Nomizu product of two symmetric 2-tensors:
    /// `(α∧β)_{ijkt} = α_ik β_jt − α_it β_jk + α_jt β_ik − α_jk β_it`.
    pub fn kulkarni_nomizu(&self, beta: &Self) -> Self {
        assert_eq!((self.rank, beta.rank), (2, 2), "symmetric 2-tensors");
        assert_eq!(self.n, beta.n, "dimension");
        let k = self.order().min(beta.order());
        let (a, b) = (self.truncate(k), beta.truncate(k));
        Tensor::from_fn(self.n, 4, |x| {
            let (i, j, kk, t) = (x[0], x[1], x[2], x[3]);
            let mut z = a.at2(0, 0).zero_like();
            z.mul_add(a.at2(i, kk), b.at2(j, t), 1.0);
            z.mul_add(a.at2(i, t), b.at2(j, kk), -1.0);
            z.mul_add(a.at2(j, t), b.at2(i, kk), 1.0);
            z.mul_add(a.at2(j, kk), b.at2(i, t), -1.0);
            z
        })
    }

    /// Symmetric part of a 2-tensor: `T_ij + T_ji` (no ½).
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.rank, 2);
        Tensor::from_fn(self.n, 2, |x| {
            self.at2(x[0], x[1]).add(self.at2(x[1], x[0]))
        })
    }

    /// `T_ij − T_ji`.
    pub fn antisymmetrized(&self) -> Self {
        assert_eq!(self.rank, 2);
        Tensor::from_fn(self.n, 2, |x| {
            self.at2(x[0], x[1]).sub(self.at2(x[1], x[0]))
        })
    }
}

impl Values {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Tensor {
            n,
            rank,
            data: vec![0.0; n.pow(rank as u32)],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
    }

    /// `|T|²` with every slot contracted through `g⁻¹`.
    pub fn norm_sq(&self, ginv: &Values) -> f64 {
        let mut up = self.clone();
        for slot in 0..self.rank {
            up = raise_slot(&up, slot, ginv);
        }
        up.data.iter().zip(&self.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, ginv: &Values) -> f64 {
        libm::sqrt(self.norm_sq(ginv).max(0.0))
    }
}

fn raise_slot(t: &Values, slot: usize, ginv: &Values) -> Values {
    let n = t.n;
    let mut src = vec![0usize; t.rank];
    Tensor::from_fn(n, t.rank, |idx| {
        src.copy_from_slice(idx);
        let mut acc = 0.0;
        for p in 0..n {
            src[slot] = p;
            acc += ginv.at2(idx[slot], p) * t.get(&src);
        }
        acc
    })
}

/// Levi-Civita connection symbols `Γ^p_{mi}` (stored `[p][m][i]`) with cached truncations.
pub struct Connection {
    by_order: Vec<JetTensor>,
}

impl Connection {
    /// Builds `Γ^p_{mi} = ½ g^{pq}(∂_m g_{qi} + ∂_i g_{qm} − ∂_q g_{mi})`.
    pub fn from_metric(g: &JetTensor, ginv: &JetTensor) -> Result<Self, JetError> {
        let n = g.dim();
        let order = g.order();
        if order == 0 {
            return Err(JetError::Exhausted);
        }
        let mut dg = Vec::with_capacity(n);
        for q in 0..n {
            dg.push(g.map(|c| c.derivative(q).expect("order checked")));
        }
        // first kind: Γ_{q m i}
        let first = Tensor::from_fn(n, 3, |x| {
            let (q, m, i) = (x[0], x[1], x[2]);
            dg[m]
                .at2(q, i)
                .add(dg[i].at2(q, m))
                .sub(dg[q].at2(m, i))
                .scale(0.5)
        });
        let ginv = ginv.truncate(order - 1);
        let gamma = Tensor::from_fn(n, 3, |x| {
            let (p, m, i) = (x[0], x[1], x[2]);
            let mut z = first.at3(0, 0, 0).zero_like();
            for q in 0..n {
                z.mul_add(ginv.at2(p, q), first.at3(q, m, i), 1.0);
            }
            z
        });
        let by_order = (0..order).map(|k| gamma.truncate(k)).collect();
        Ok(Connection { by_order })
    }

    pub fn order(&self) -> usize {
        self.by_order.len() - 1
    }

    pub fn symbols(&self) -> &JetTensor {
        self.by_order.last().expect("nonempty")
    }

    pub fn at_order(&self, k: usize) -> &JetTensor {
        &self.by_order[k.min(self.by_order.len() - 1)]
    }

    /// `(∇T)_{I,m} = ∂_m T_I − Σ_s Γ^p_{m i_s} T_{I[s→p]}`, one order lower than `T`.
    pub fn covariant_derivative(&self, t: &JetTensor) -> Result<JetTensor, JetError> {
        let order = t.order();
        if order == 0 {
            return Err(JetError::Exhausted);
        }
        let k = order - 1;
        let n = t.dim();
        let gamma = self.at_order(k);
        if gamma.order() < k {
            return Err(JetError::Exhausted);
        }
        let low = t.truncate(k);
        let rank = t.rank();
        let mut partials = Vec::with_capacity(n);
        for m in 0..n {
            let mut d = Vec::with_capacity(t.data().len());
            for c in t.data() {
                d.push(c.truncate(order).derivative(m)?);
            }
            partials.push(d);
        }
        let mut src = vec![0usize; rank];
        Ok(Tensor::from_fn(n, rank + 1, |idx| {
            let m = idx[rank];
            let base = &idx[..rank];
            let mut z = partials[m][t.offset(base)].clone();
            for s in 0..rank {
                src.copy_from_slice(base);
                for p in 0..n {
                    src[s] = p;
                    z.mul_add(gamma.at3(p, m, base[s]), low.get(&src), -1.0);
                }
            }
            z
        }))
    }
}

/// Inverse of a symmetric positive-definite jet matrix by Gauss–Jordan elimination.
pub fn invert_spd(g: &JetTensor) -> Result<JetTensor, JetError> {
    let n = g.dim();
    let mut a: Vec<Jet> = g.data().to_vec();
    let one = a[0].zero_like().add_constant(1.0);
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|x| {
            if x / n == x % n {
                one.clone()
            } else {
                one.zero_like()
            }
        })
        .collect();
    for col in 0..n {
        let pivot = a[col * n + col].recip()?;
        for j in 0..n {
            a[col * n + j] = &a[col * n + j] * &pivot;
            inv[col * n + j] = &inv[col * n + j] * &pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            for j in 0..n {
                let (ac, ic) = (a[col * n + j].clone(), inv[col * n + j].clone());
                a[row * n + j].mul_add_assign(&factor, &ac, -1.0)?;
                inv[row * n + j].mul_add_assign(&factor, &ic, -1.0)?;
            }
        }
    }
    Ok(Tensor::from_vec(n, 2, inv))
}
