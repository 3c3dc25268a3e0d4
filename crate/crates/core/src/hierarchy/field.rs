//! Polynomial-valued time profiles `Σ t^p e^{-λt} P(x)`.

use std::collections::BTreeMap;

use super::profile::{AtomKey, DecayRate, TimeProfile};
use crate::error::Result;
use crate::polynomial::SimplexPolynomial;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField<S: Scalar> {
    n_vars: usize,
    atoms: BTreeMap<AtomKey, SimplexPolynomial<S>>,
}

impl<S: Scalar> SpaceTimeField<S> {
    pub fn zero(n_vars: usize) -> Self {
        SpaceTimeField {
            n_vars,
            atoms: BTreeMap::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&AtomKey, &SimplexPolynomial<S>)> {
        self.atoms.iter()
    }

    fn add_poly(&mut self, key: AtomKey, poly: &SimplexPolynomial<S>, c: &S) {
        let entry = self
            .atoms
            .entry(key)
            .or_insert_with(|| SimplexPolynomial::zero(self.n_vars));
        entry.add_scaled(poly, c);
        if entry.is_zero() {
            self.atoms.remove(&key);
        }
    }

    /// Adds `profile(t) · poly(x)`.
    pub fn add_product(&mut self, profile: &TimeProfile<S>, poly: &SimplexPolynomial<S>) {
        for (&key, c) in profile.atoms() {
            self.add_poly(key, poly, c);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        for (&key, poly) in &other.atoms {
            self.add_poly(key, poly, c);
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &-S::one());
        out
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (&(rate, p), poly) in &self.atoms {
            if p > 0 {
                out.add_poly((rate, p - 1), poly, &S::from_int(p as i64));
            }
            out.add_poly((rate, p), poly, &-rate.value::<S>());
        }
        out
    }

    /// Applies a linear spatial map atom by atom.
    pub fn map_spatial<F>(&self, target_vars: usize, f: F) -> Result<Self>
    where
        F: Fn(&SimplexPolynomial<S>) -> Result<SimplexPolynomial<S>>,
    {
        let mut out = Self::zero(target_vars);
        for (&key, poly) in &self.atoms {
            let image = f(poly)?;
            out.add_poly(key, &image, &S::one());
        }
        Ok(out)
    }

    /// `∫ field · φ` over the chart, as a time profile.
    pub fn pair(&self, phi: &SimplexPolynomial<S>) -> TimeProfile<S> {
        let mut out = TimeProfile::zero();
        for (&(rate, p), poly) in &self.atoms {
            out.add_atom(rate, p, (poly * phi).integral());
        }
        out
    }

    pub fn at_zero(&self) -> SimplexPolynomial<S> {
        let mut out = SimplexPolynomial::zero(self.n_vars);
        for ((_, p), poly) in &self.atoms {
            if *p == 0 {
                out = &out + poly;
            }
        }
        out
    }

    pub fn eval(&self, t: f64) -> SimplexPolynomial<f64> {
        let mut out = SimplexPolynomial::zero(self.n_vars);
        for (&(rate, p), poly) in &self.atoms {
            let w = t.powi(p as i32) * (-rate.to_f64() * t).exp();
            out.add_scaled(&poly.to_f64(), &w);
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.atoms.values().map(|p| p.max_abs_coeff()).fold(0.0, f64::max)
    }

    pub fn rates(&self) -> impl Iterator<Item = DecayRate> + '_ {
        self.atoms.keys().map(|&(r, _)| r)
    }
}
