//! Exact sparse multivariate polynomials over a face chart.

mod json;
mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;

pub use json::{PolynomialJson, TermJson};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simplex::CoordImage;

/// Exponent vector `α`, stored sparsely as `(slot, exponent)` pairs with
/// ascending slots and no zero exponents.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(SmallVec<[(u16, u32); 4]>);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(SmallVec::new())
    }

    pub fn unit(slot: usize) -> Self {
        let mut v = SmallVec::new();
        v.push((slot as u16, 1));
        MultiIndex(v)
    }

    pub fn from_dense(exponents: &[u32]) -> Self {
        MultiIndex(
            exponents
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(s, &e)| (s as u16, e))
                .collect(),
        )
    }

    pub fn exponent(&self, slot: usize) -> u32 {
        self.0.iter().find(|(s, _)| *s as usize == slot).map_or(0, |&(_, e)| e)
    }

    /// Total degree `|α|`.
    pub fn order(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|&(s, e)| (s as usize, e))
    }

    pub fn max_slot(&self) -> Option<usize> {
        self.0.last().map(|&(s, _)| s as usize)
    }

    pub fn to_dense(&self, n_vars: usize) -> Vec<u32> {
        let mut out = vec![0; n_vars];
        for (s, e) in self.iter() {
            out[s] = e;
        }
        out
    }

    /// `α + β`.
    pub fn product(&self, other: &MultiIndex) -> MultiIndex {
        let mut out: SmallVec<[(u16, u32); 4]> = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            match (self.0.get(i), other.0.get(j)) {
                (Some(&(a, ea)), Some(&(b, eb))) if a == b => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
                (Some(&(a, ea)), Some(&(b, _))) if a < b => {
                    out.push((a, ea));
                    i += 1;
                }
                (Some(_), Some(&(b, eb))) => {
                    out.push((b, eb));
                    j += 1;
                }
                (Some(&p), None) => {
                    out.push(p);
                    i += 1;
                }
                (None, Some(&p)) => {
                    out.push(p);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        MultiIndex(out)
    }

    /// `α + delta·e_slot`, or `None` if an exponent would become negative.
    pub fn shifted(&self, slot: usize, delta: i64) -> Option<MultiIndex> {
        let e = self.exponent(slot) as i64 + delta;
        if e < 0 {
            return None;
        }
        Some(self.with_exponent(slot, e as u32))
    }

    pub fn with_exponent(&self, slot: usize, e: u32) -> MultiIndex {
        let mut v: SmallVec<[(u16, u32); 4]> = self.0.iter().copied().filter(|&(s, _)| s as usize != slot).collect();
        if e > 0 {
            let pos = v.iter().position(|&(s, _)| s as usize > slot).unwrap_or(v.len());
            v.insert(pos, (slot as u16, e));
        }
        MultiIndex(v)
    }

    /// All `β ≤ α` componentwise, including `α` itself.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero()];
        for (slot, e) in self.iter() {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for base in &out {
                for k in 0..=e {
                    next.push(base.with_exponent(slot, k));
                }
            }
            out = next;
        }
        out
    }

    /// Every multi-index over `n_vars` slots with `|α| ≤ max_order`, graded.
    pub fn all_up_to(n_vars: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut dense = vec![0u32; n_vars];
            compositions(order, 0, &mut dense, &mut out);
        }
        out
    }
}

fn compositions(remaining: u32, slot: usize, dense: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slot + 1 >= dense.len() {
        if dense.is_empty() {
            if remaining == 0 {
                out.push(MultiIndex::zero());
            }
            return;
        }
        dense[slot] = remaining;
        out.push(MultiIndex::from_dense(dense));
        dense[slot] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        dense[slot] = e;
        compositions(remaining - e, slot + 1, dense, out);
    }
    dense[slot] = 0;
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "α{{")?;
        for (i, (s, e)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{e}", s + 1)?;
        }
        write!(f, "}}")
    }
}

/// Polynomial in the `n_vars` coordinates of a face chart.
#[derive(Clone, PartialEq)]
pub struct SimplexPolynomial<S> {
    n_vars: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> SimplexPolynomial<S> {
    pub fn zero(n_vars: usize) -> Self {
        SimplexPolynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: S) -> Self {
        Self::monomial(n_vars, MultiIndex::zero(), c)
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, S::one())
    }

    pub fn monomial(n_vars: usize, alpha: MultiIndex, c: S) -> Self {
        assert!(
            alpha.max_slot().is_none_or(|s| s < n_vars),
            "monomial slot out of range for {n_vars} variables"
        );
        let mut p = Self::zero(n_vars);
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x^{slot+1}`.
    pub fn var(n_vars: usize, slot: usize) -> Self {
        Self::monomial(n_vars, MultiIndex::unit(slot), S::one())
    }

    pub fn from_terms(n_vars: usize, terms: impl IntoIterator<Item = (MultiIndex, S)>) -> Result<Self> {
        let mut p = Self::zero(n_vars);
        for (alpha, c) in terms {
            if alpha.max_slot().is_some_and(|s| s >= n_vars) {
                return Err(Error::Shape(format!("{alpha:?} uses a slot beyond {n_vars} variables")));
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> S {
        self.terms.get(alpha).cloned().unwrap_or_else(S::zero)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(alpha) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        assert_eq!(self.n_vars, other.n_vars, "chart dimension mismatch");
        if c.is_zero() {
            return;
        }
        for (alpha, v) in &other.terms {
            self.add_term(alpha.clone(), v.clone() * c.clone());
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        SimplexPolynomial {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(a, v)| (a.clone(), v.clone() * c.clone()))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::Shape(format!(
                "chart dimensions differ: {} vs {}",
                self.n_vars, other.n_vars
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self - other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self * other)
    }

    /// `∂/∂x^{slot+1}`.
    pub fn partial(&self, slot: usize) -> Result<Self> {
        if slot >= self.n_vars {
            return Err(Error::Shape(format!(
                "slot {slot} out of range for {} variables",
                self.n_vars
            )));
        }
        let mut out = Self::zero(self.n_vars);
        for (alpha, c) in &self.terms {
            let e = alpha.exponent(slot);
            if e > 0 {
                out.add_term(alpha.with_exponent(slot, e - 1), c.clone() * S::from_int(e as i64));
            }
        }
        Ok(out)
    }

    /// Integral over the open standard simplex of dimension `n_vars`.
    pub fn integral(&self) -> S {
        simplex_integral(self)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_vars, "point dimension mismatch");
        self.terms
            .iter()
            .map(|(alpha, c)| c.to_f64() * alpha.iter().map(|(s, e)| x[s].powi(e as i32)).product::<f64>())
            .fold(0.0, |acc, v| acc + v)
    }

    pub fn eval_exact(&self, x: &[S]) -> S {
        assert_eq!(x.len(), self.n_vars, "point dimension mismatch");
        let mut acc = S::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (s, e) in alpha.iter() {
                for _ in 0..e {
                    term = term * x[s].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Sets `x^{slot+1} = 0` and drops that coordinate.
    pub fn substitute_zero(&self, slot: usize) -> Result<Self> {
        let images = self.elimination_images(slot, CoordImage::Zero)?;
        self.restrict(&images, self.n_vars - 1)
    }

    /// Eliminates `x^{slot+1} = 1 - Σ_{others} x` and drops that coordinate.
    pub fn substitute_closure(&self, slot: usize) -> Result<Self> {
        let images = self.elimination_images(slot, CoordImage::Complement)?;
        self.restrict(&images, self.n_vars - 1)
    }

    fn elimination_images(&self, slot: usize, eliminated: CoordImage) -> Result<Vec<CoordImage>> {
        if slot >= self.n_vars {
            return Err(Error::Shape(format!(
                "slot {slot} out of range for {} variables",
                self.n_vars
            )));
        }
        Ok((0..self.n_vars)
            .map(|s| match s.cmp(&slot) {
                std::cmp::Ordering::Less => CoordImage::Slot(s),
                std::cmp::Ordering::Equal => eliminated,
                std::cmp::Ordering::Greater => CoordImage::Slot(s - 1),
            })
            .collect())
    }

    /// Pulls the polynomial back along an affine chart map onto `target_vars`
    /// coordinates; `images[s]` says what coordinate `s` becomes.
    pub fn restrict(&self, images: &[CoordImage], target_vars: usize) -> Result<Self> {
        if images.len() != self.n_vars {
            return Err(Error::Shape(format!(
                "{} coordinate images for {} variables",
                images.len(),
                self.n_vars
            )));
        }
        if images
            .iter()
            .any(|im| matches!(im, CoordImage::Slot(s) if *s >= target_vars))
        {
            return Err(Error::Shape("coordinate image outside target chart".into()));
        }
        let complement = {
            let mut c = Self::one(target_vars);
            for s in 0..target_vars {
                c.add_term(MultiIndex::unit(s), -S::one());
            }
            c
        };
        let mut complement_powers = vec![Self::one(target_vars)];
        let mut out = Self::zero(target_vars);
        'terms: for (alpha, c) in &self.terms {
            let mut mono = MultiIndex::zero();
            let mut comp_exp = 0u32;
            for (s, e) in alpha.iter() {
                match images[s] {
                    CoordImage::Zero => continue 'terms,
                    CoordImage::Slot(t) => mono = mono.product(&MultiIndex::from_dense(&unit_power(t, e))),
                    CoordImage::Complement => comp_exp += e,
                }
            }
            while complement_powers.len() <= comp_exp as usize {
                let next = complement_powers.last().unwrap() * &complement;
                complement_powers.push(next);
            }
            for (beta, v) in &complement_powers[comp_exp as usize].terms {
                out.add_term(mono.product(beta), c.clone() * v.clone());
            }
        }
        Ok(out)
    }

    pub fn convert<T: Scalar>(&self) -> SimplexPolynomial<T> {
        SimplexPolynomial {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.clone(), T::from_rational(&c.to_rational())))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> SimplexPolynomial<f64> {
        SimplexPolynomial {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.clone(), c.to_f64()))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }

    /// Largest coefficient magnitude, as a double.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Terms of exact total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter().filter(move |(a, _)| a.order() == d)
    }

    /// Drops coefficients with magnitude at most `tol` (doubles only make sense here).
    pub fn prune(&self, tol: f64) -> Self {
        SimplexPolynomial {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.to_f64().abs() > tol)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }
}

fn unit_power(slot: usize, e: u32) -> Vec<u32> {
    let mut v = vec![0; slot + 1];
    v[slot] = e;
    v
}

/// `∫_{Δ_k} p dx` with `k = p.n_vars()`, term by term via
/// `∫ x^α = Π α_i! / (|α| + k)!`.
pub fn simplex_integral<S: Scalar>(p: &SimplexPolynomial<S>) -> S {
    let k = p.n_vars() as i64;
    let mut acc = S::zero();
    for (alpha, c) in p.terms() {
        acc = acc + c.clone() * monomial_integral::<S>(alpha, k);
    }
    acc
}

fn monomial_integral<S: Scalar>(alpha: &MultiIndex, k: i64) -> S {
    // Π α_i! / (|α|+k)!, accumulated as a product of ratios j / m
    let mut numer: Vec<i64> = Vec::new();
    for (_, e) in alpha.iter() {
        numer.extend(1..=e as i64);
    }
    let denom_top = alpha.order() as i64 + k;
    let mut value = S::one();
    let mut ni = numer.into_iter();
    for m in 1..=denom_top {
        let j = ni.next().unwrap_or(1);
        value = value * S::from_ratio(j, m);
    }
    for j in ni {
        value = value * S::from_int(j);
    }
    value
}

impl<S: Scalar> fmt::Debug for SimplexPolynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimplexPolynomial[{}]({})", self.n_vars, self.to_text())
    }
}

impl<S: Scalar> fmt::Display for SimplexPolynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl<S: Scalar> Add for &SimplexPolynomial<S> {
    type Output = SimplexPolynomial<S>;

    fn add(self, rhs: Self) -> SimplexPolynomial<S> {
        assert_eq!(self.n_vars, rhs.n_vars, "chart dimension mismatch");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }
}

impl<S: Scalar> Sub for &SimplexPolynomial<S> {
    type Output = SimplexPolynomial<S>;

    fn sub(self, rhs: Self) -> SimplexPolynomial<S> {
        assert_eq!(self.n_vars, rhs.n_vars, "chart dimension mismatch");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), -c.clone());
        }
        out
    }
}

impl<S: Scalar> Mul for &SimplexPolynomial<S> {
    type Output = SimplexPolynomial<S>;

    fn mul(self, rhs: Self) -> SimplexPolynomial<S> {
        assert_eq!(self.n_vars, rhs.n_vars, "chart dimension mismatch");
        let mut out = SimplexPolynomial::zero(self.n_vars);
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                out.add_term(a.product(b), c.clone() * d.clone());
            }
        }
        out
    }
}

impl<S: Scalar> Neg for &SimplexPolynomial<S> {
    type Output = SimplexPolynomial<S>;

    fn neg(self) -> SimplexPolynomial<S> {
        SimplexPolynomial {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(a, c)| (a.clone(), -c.clone())).collect(),
        }
    }
}
