//! Symbolic time dependence `Σ c t^p e^{-λt}`.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::Scalar;

/// Nonnegative decay rate, stored as the integer `2λ`.
///
/// Every rate in the system is of the form `m(m±1)/2`, so doubling keeps it exact.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecayRate(u64);

impl DecayRate {
    pub const ZERO: DecayRate = DecayRate(0);

    pub fn from_twice(twice: u64) -> Self {
        DecayRate(twice)
    }

    pub fn twice(&self) -> u64 {
        self.0
    }

    pub fn value<S: Scalar>(&self) -> S {
        S::from_ratio(self.0 as i64, 2)
    }

    pub fn to_f64(&self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Debug for DecayRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "λ={}", self.0 / 2)
        } else {
            write!(f, "λ={}/2", self.0)
        }
    }
}

/// `(rate, power)` identifying the atom `t^power e^{-rate·t}`.
pub type AtomKey = (DecayRate, u32);

/// Finite sum of atoms `c t^p e^{-λt}` with no zero coefficients.
#[derive(Clone, PartialEq)]
pub struct TimeProfile<S> {
    atoms: BTreeMap<AtomKey, S>,
}

impl<S> Default for TimeProfile<S> {
    fn default() -> Self {
        TimeProfile { atoms: BTreeMap::new() }
    }
}

impl<S: Scalar> TimeProfile<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(rate: DecayRate, power: u32, c: S) -> Self {
        let mut p = Self::zero();
        p.add_atom(rate, power, c);
        p
    }

    /// `c e^{-λt}`.
    pub fn exp(rate: DecayRate, c: S) -> Self {
        Self::atom(rate, 0, c)
    }

    pub fn constant(c: S) -> Self {
        Self::atom(DecayRate::ZERO, 0, c)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&AtomKey, &S)> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn coeff(&self, rate: DecayRate, power: u32) -> S {
        self.atoms.get(&(rate, power)).cloned().unwrap_or_else(S::zero)
    }

    pub fn add_atom(&mut self, rate: DecayRate, power: u32, c: S) {
        if c.is_zero() {
            return;
        }
        let key = (rate, power);
        let sum = match self.atoms.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.atoms.insert(key, sum);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        if c.is_zero() {
            return;
        }
        for (&(rate, power), v) in &other.atoms {
            self.add_atom(rate, power, v.clone() * c.clone());
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &S::one());
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &-S::one());
        out
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .map(|(&(rate, p), c)| c.to_f64() * t.powi(p as i32) * (-rate.to_f64() * t).exp())
            .fold(0.0, |acc, v| acc + v)
    }

    /// Exact value at `t = 0`.
    pub fn at_zero(&self) -> S {
        self.atoms
            .iter()
            .filter(|((_, p), _)| *p == 0)
            .fold(S::zero(), |acc, (_, c)| acc + c.clone())
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for (&(rate, p), c) in &self.atoms {
            if p > 0 {
                out.add_atom(rate, p - 1, c.clone() * S::from_int(p as i64));
            }
            out.add_atom(rate, p, -(c.clone() * rate.value::<S>()));
        }
        out
    }

    /// Closed form of `∫_0^t self(τ) e^{-b(t-τ)} dτ`. The flag reports whether
    /// any atom shared the rate `b` (the secular branch).
    pub fn convolve(&self, b: DecayRate) -> (Self, bool) {
        let mut out = Self::zero();
        let mut resonant = false;
        for (&(a, p), c) in &self.atoms {
            if a == b {
                resonant = true;
                out.add_atom(a, p + 1, c.clone() / S::from_int(p as i64 + 1));
                continue;
            }
            // ∫_0^t τ^p e^{-γτ} dτ = p!/γ^{p+1} (1 - e^{-γt} Σ_{q≤p} (γt)^q/q!),  γ = a - b
            let gamma = S::from_ratio(a.twice() as i64 - b.twice() as i64, 2);
            let mut gamma_pow = vec![S::one()];
            for i in 1..=(p as usize + 1) {
                let prev = gamma_pow[i - 1].clone();
                gamma_pow.push(prev * gamma.clone());
            }
            let p_fact = (1..=p as i64).fold(S::one(), |acc, j| acc * S::from_int(j));
            out.add_atom(b, 0, c.clone() * p_fact.clone() / gamma_pow[p as usize + 1].clone());
            let mut q_fact = S::one();
            for q in 0..=p {
                if q > 0 {
                    q_fact = q_fact * S::from_int(q as i64);
                }
                let w = c.clone() * p_fact.clone() / (q_fact.clone() * gamma_pow[(p - q) as usize + 1].clone());
                out.add_atom(a, q, -w);
            }
        }
        (out, resonant)
    }

    pub fn rates(&self) -> impl Iterator<Item = DecayRate> + '_ {
        let mut last = None;
        self.atoms.keys().filter_map(move |&(r, _)| {
            if last == Some(r) {
                None
            } else {
                last = Some(r);
                Some(r)
            }
        })
    }

    pub fn max_power(&self) -> u32 {
        self.atoms.keys().map(|&(_, p)| p).max().unwrap_or(0)
    }

    pub fn convert<T: Scalar>(&self) -> TimeProfile<T> {
        let mut out = TimeProfile::zero();
        for (&(r, p), c) in &self.atoms {
            out.add_atom(r, p, T::from_rational(&c.to_rational()));
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.atoms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }
}

impl<S: Scalar> fmt::Debug for TimeProfile<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(r, p), c)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}) t^{p} e^{{-{}t}}", c.to_text(), r.to_f64())?;
        }
        Ok(())
    }
}
