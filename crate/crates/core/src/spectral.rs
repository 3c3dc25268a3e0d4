//! Generalized Gegenbauer eigenmodes of the forward operator on `Δ_n`.
//!
//! `C_{l,α} = x^α + Σ_{|β|<l} a_{l,β} x^β` satisfies `L_n C = -λ_l C` with
//! `λ_l = (n+l)(n+l+1)/2`. Modes are stored with the positive decay rate.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::hierarchy::DecayRate;
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::scalar::Scalar;

/// Default cap on the modal degree.
pub const DEFAULT_MAX_DEGREE: u32 = 10;

/// Decay rate `λ_l^{(n)} = (n+l)(n+l+1)/2` of degree-`l` modes on `Δ_n`.
pub fn eigen_rate(n: usize, l: u32) -> DecayRate {
    let m = n as u64 + l as u64;
    DecayRate::from_twice(m * (m + 1))
}

#[derive(Clone, Debug)]
pub struct GegenbauerMode<S: Scalar> {
    n: usize,
    alpha: MultiIndex,
    coefficients: BTreeMap<MultiIndex, S>,
    polynomial: SimplexPolynomial<S>,
}

impl<S: Scalar> GegenbauerMode<S> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &MultiIndex {
        &self.alpha
    }

    pub fn degree(&self) -> u32 {
        self.alpha.order()
    }

    pub fn rate(&self) -> DecayRate {
        eigen_rate(self.n, self.degree())
    }

    /// Positive decay rate `λ`; `L_n C = -λ C`.
    pub fn eigenvalue(&self) -> S {
        self.rate().value()
    }

    /// `a_{l,β}` (zero when absent).
    pub fn coefficient(&self, beta: &MultiIndex) -> S {
        self.coefficients.get(beta).cloned().unwrap_or_else(S::zero)
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, S> {
        &self.coefficients
    }

    pub fn polynomial(&self) -> &SimplexPolynomial<S> {
        &self.polynomial
    }

    /// Copy with `a_{l,β}` shifted by `delta`. Only meant for negative-control fixtures.
    pub fn with_coefficient_offset(&self, beta: &MultiIndex, delta: S) -> Self {
        let mut coefficients = self.coefficients.clone();
        let v = coefficients.entry(beta.clone()).or_insert_with(S::zero);
        *v = v.clone() + delta;
        let polynomial = SimplexPolynomial::from_terms(self.n, coefficients.clone()).expect("same slots");
        GegenbauerMode {
            n: self.n,
            alpha: self.alpha.clone(),
            coefficients,
            polynomial,
        }
    }
}

/// Builds `C_{l,α}` on `Δ_n` by descending `|β|` from `l-1` to 0.
pub fn build_mode<S: Scalar>(n: usize, alpha: &MultiIndex) -> Result<GegenbauerMode<S>> {
    if alpha.max_slot().is_some_and(|s| s >= n) {
        return Err(Error::Shape(format!(
            "{alpha:?} is not a multi-index over {n} variables"
        )));
    }
    let l = alpha.order() as i64;
    let two_n = 2 * n as i64;
    // only β ≤ α can be reached from the leading term
    let mut lower = alpha.lower_set();
    lower.sort_by_key(|b| std::cmp::Reverse(b.order()));
    let mut coefficients: BTreeMap<MultiIndex, S> = BTreeMap::new();
    coefficients.insert(alpha.clone(), S::one());
    for beta in lower.into_iter().filter(|b| (b.order() as i64) < l) {
        let b = beta.order() as i64;
        let mut numer = S::zero();
        for (slot, _) in alpha.iter() {
            let bi = beta.exponent(slot) as i64;
            let up = beta.with_exponent(slot, bi as u32 + 1);
            if let Some(a_up) = coefficients.get(&up) {
                numer = numer + a_up.clone() * S::from_int((bi + 2) * (bi + 1));
            }
        }
        let denom = (l - b) * (l + b + two_n + 1);
        let value = -numer / S::from_int(denom);
        if !value.is_zero() {
            coefficients.insert(beta, value);
        }
    }
    let polynomial = SimplexPolynomial::from_terms(n, coefficients.clone())?;
    Ok(GegenbauerMode {
        n,
        alpha: alpha.clone(),
        coefficients,
        polynomial,
    })
}

/// `ω_n = Π_k x^k (1 - Σ_l x^l)`.
pub fn omega<S: Scalar>(n: usize) -> SimplexPolynomial<S> {
    let mut complement = SimplexPolynomial::one(n);
    for s in 0..n {
        complement.add_term(MultiIndex::unit(s), -S::one());
    }
    let all_ones = MultiIndex::from_dense(&vec![1; n]);
    &SimplexPolynomial::monomial(n, all_ones, S::one()) * &complement
}

/// `ω_n C_{l,α}`, an eigenfunction of the backward operator vanishing on every facet.
pub fn omega_shift<S: Scalar>(mode: &GegenbauerMode<S>) -> SimplexPolynomial<S> {
    &omega::<S>(mode.n) * mode.polynomial()
}

type ModeTable<S> = HashMap<(usize, MultiIndex), Arc<GegenbauerMode<S>>>;

/// Thread-safe memo of modes keyed by `(n, α)`.
#[derive(Debug)]
pub struct ModeCache<S: Scalar> {
    modes: RwLock<ModeTable<S>>,
}

impl<S: Scalar> Default for ModeCache<S> {
    fn default() -> Self {
        ModeCache {
            modes: RwLock::new(HashMap::new()),
        }
    }
}

impl<S: Scalar> ModeCache<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, n: usize, alpha: &MultiIndex) -> Result<Arc<GegenbauerMode<S>>> {
        let key = (n, alpha.clone());
        if let Some(m) = self.modes.read().expect("mode cache poisoned").get(&key) {
            return Ok(Arc::clone(m));
        }
        let mode = Arc::new(build_mode(n, alpha)?);
        let mut w = self.modes.write().expect("mode cache poisoned");
        Ok(Arc::clone(w.entry(key).or_insert(mode)))
    }

    /// Replaces a cached mode. Used to plant faults in validation runs.
    pub fn insert(&self, mode: GegenbauerMode<S>) {
        let key = (mode.n, mode.alpha.clone());
        self.modes
            .write()
            .expect("mode cache poisoned")
            .insert(key, Arc::new(mode));
    }

    pub fn len(&self) -> usize {
        self.modes.read().expect("mode cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `f = Σ c_{l,α} C_{l,α}`.
#[derive(Clone, Debug)]
pub struct ModalExpansion<S: Scalar> {
    pub n: usize,
    pub modes: Vec<(Arc<GegenbauerMode<S>>, S)>,
}

impl<S: Scalar> ModalExpansion<S> {
    pub fn reconstruct(&self) -> SimplexPolynomial<S> {
        let mut out = SimplexPolynomial::zero(self.n);
        for (mode, c) in &self.modes {
            out.add_scaled(mode.polynomial(), c);
        }
        out
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> S {
        self.modes
            .iter()
            .find(|(m, _)| m.alpha() == alpha)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(S::zero)
    }

    /// `u(·,t) = Σ c e^{-λt} C`, evaluated in doubles.
    pub fn evolve(&self, t: f64) -> Result<SimplexPolynomial<f64>> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("time {t} must be nonnegative")));
        }
        let mut out = SimplexPolynomial::zero(self.n);
        for (mode, c) in &self.modes {
            let w = c.to_f64() * (-mode.rate().to_f64() * t).exp();
            out.add_scaled(&mode.polynomial().to_f64(), &w);
        }
        Ok(out)
    }
}

/// Expands `f` in modes by unitriangular back-substitution from the top degree down.
pub fn project<S: Scalar>(f: &SimplexPolynomial<S>, cache: &ModeCache<S>) -> Result<ModalExpansion<S>> {
    let n = f.n_vars();
    let mut remainder = f.clone();
    let mut coeffs: BTreeMap<MultiIndex, (Arc<GegenbauerMode<S>>, S)> = BTreeMap::new();
    while !remainder.is_zero() {
        let d = remainder.degree();
        let top: Vec<(MultiIndex, S)> = remainder
            .homogeneous_part(d)
            .map(|(a, c)| (a.clone(), c.clone()))
            .collect();
        for (alpha, c) in top {
            let mode = cache.get(n, &alpha)?;
            remainder.add_scaled(mode.polynomial(), &-c.clone());
            let entry = coeffs.entry(alpha).or_insert_with(|| (mode, S::zero()));
            entry.1 = entry.1.clone() + c;
        }
    }
    let mut modes: Vec<_> = coeffs.into_values().filter(|(_, c)| !c.is_zero()).collect();
    modes.sort_by(|(a, _), (b, _)| (a.degree(), a.alpha()).cmp(&(b.degree(), b.alpha())));
    Ok(ModalExpansion { n, modes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{apply_backward, apply_forward};
    use crate::scalar::Rational;

    type P = SimplexPolynomial<Rational>;

    fn q(a: i64, b: i64) -> Rational {
        Rational::from_ratio(a, b)
    }

    fn mode(n: usize, alpha: &[u32]) -> GegenbauerMode<Rational> {
        build_mode(n, &MultiIndex::from_dense(alpha)).unwrap()
    }

    #[test]
    fn worked_modes() {
        let m = mode(1, &[2]);
        assert_eq!(m.polynomial(), &P::parse("x1^2 - x1 + 1/5", 1).unwrap());
        assert_eq!(m.eigenvalue(), q(6, 1));
        // ½ (x(1-x) C)'' = -6 C by direct differentiation
        let a = P::parse("x1 - x1^2", 1).unwrap();
        let second = (&a * m.polynomial())
            .partial(0)
            .unwrap()
            .partial(0)
            .unwrap()
            .scale(&q(1, 2));
        assert_eq!(second, m.polynomial().scale(&q(-6, 1)));

        let m = mode(2, &[1, 0]);
        assert_eq!(m.polynomial(), &P::parse("x1 - 1/3", 2).unwrap());
        assert_eq!(m.coefficient(&MultiIndex::zero()), q(-2, 6));
        assert_eq!(m.eigenvalue(), q(6, 1));

        let m = mode(1, &[0]);
        assert_eq!(m.polynomial(), &P::one(1));
        assert_eq!(m.eigenvalue(), q(1, 1));
        assert_eq!(mode(0, &[]).eigenvalue(), q(0, 1));
    }

    #[test]
    fn leading_term_is_monic() {
        for n in 1..=3 {
            for alpha in MultiIndex::all_up_to(n, 4) {
                let m = mode(n, &alpha.to_dense(n));
                for (beta, c) in m.polynomial().homogeneous_part(alpha.order()) {
                    assert_eq!(beta, &alpha);
                    assert_eq!(c, &Rational::from_int(1));
                }
            }
        }
    }

    #[test]
    fn eigen_identity_small() {
        for n in 1..=3 {
            for alpha in MultiIndex::all_up_to(n, 4) {
                let m = mode(n, &alpha.to_dense(n));
                let lhs = apply_forward(m.polynomial());
                let resid = &lhs + &m.polynomial().scale(&m.eigenvalue());
                assert!(resid.is_zero(), "n={n} α={alpha:?}");
            }
        }
    }

    #[test]
    fn rate_coincidence_across_dimensions() {
        for k in 0..10 {
            for l in 0..10 {
                assert_eq!(eigen_rate(k + 1, l), eigen_rate(k, l + 1));
            }
        }
    }

    #[test]
    fn omega_shift_examples() {
        let m1 = mode(1, &[0]);
        let w = omega_shift(&m1);
        assert_eq!(w, P::parse("x1 - x1^2", 1).unwrap());
        assert_eq!(apply_backward(&w), w.scale(&q(-1, 1)));

        let w2 = omega_shift(&mode(2, &[0, 0]));
        assert!(w2.substitute_zero(0).unwrap().is_zero());
        assert!(w2.substitute_zero(1).unwrap().is_zero());
        assert!(w2.substitute_closure(0).unwrap().is_zero());

        let m = mode(1, &[1]);
        assert_eq!(m.polynomial(), &P::parse("x1 - 1/2", 1).unwrap());
        let w = omega_shift(&m);
        assert_eq!(apply_backward(&w), w.scale(&q(-3, 1)));
    }

    #[test]
    fn biorthogonal_across_levels() {
        for n in 1..=2 {
            let modes: Vec<_> = MultiIndex::all_up_to(n, 4)
                .into_iter()
                .map(|a| mode(n, &a.to_dense(n)))
                .collect();
            for a in &modes {
                for b in &modes {
                    if a.degree() != b.degree() {
                        let ip = (a.polynomial() * &omega_shift(b)).integral();
                        assert_eq!(ip, q(0, 1), "{:?} vs {:?}", a.alpha(), b.alpha());
                    }
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let cache = ModeCache::new();
        let e = project(&P::one(2), &cache).unwrap();
        assert_eq!(e.modes.len(), 1);
        assert_eq!(e.coefficient(&MultiIndex::zero()), q(1, 1));

        let x = P::parse("x1", 1).unwrap();
        let e = project(&x, &cache).unwrap();
        assert_eq!(e.coefficient(&MultiIndex::from_dense(&[1])), q(1, 1));
        assert_eq!(e.coefficient(&MultiIndex::zero()), q(1, 2));
        assert_eq!(e.reconstruct(), x);

        // back-substitution oracle: x² = C_2 + (x - 1/5) = C_2 + C_1 + 1/2 - 1/5
        let x2 = P::parse("x1^2", 1).unwrap();
        let e = project(&x2, &cache).unwrap();
        assert_eq!(e.coefficient(&MultiIndex::from_dense(&[2])), q(1, 1));
        assert_eq!(e.coefficient(&MultiIndex::from_dense(&[1])), q(1, 1));
        assert_eq!(e.coefficient(&MultiIndex::zero()), q(3, 10));
        assert_eq!(e.reconstruct(), x2);
        assert!(project(&P::zero(3), &cache).unwrap().modes.is_empty());
    }

    #[test]
    fn evolve_examples() {
        let cache = ModeCache::new();
        let e = project(&P::one(1), &cache).unwrap();
        let u = e.evolve(0.7).unwrap();
        assert!((u.coeff(&MultiIndex::zero()) - (-0.7f64).exp()).abs() < 1e-15);
        let e = project(&P::one(2), &cache).unwrap();
        let u = e.evolve(0.7).unwrap();
        assert!((u.coeff(&MultiIndex::zero()) - (-2.1f64).exp()).abs() < 1e-15);

        let f = P::parse("x1^2*x2 - 3*x2 + 1/7", 2).unwrap();
        let e = project(&f, &cache).unwrap();
        let diff = &e.evolve(0.0).unwrap() - &e.reconstruct().to_f64();
        assert!(diff.max_abs_coeff() < 1e-14);
        assert!(matches!(e.evolve(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cache_is_idempotent_across_threads() {
        let cache: ModeCache<Rational> = ModeCache::new();
        let alpha = MultiIndex::from_dense(&[2, 1]);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| cache.get(2, &alpha).unwrap());
            }
        });
        assert_eq!(cache.len(), 1);
        assert_eq!(
            cache.get(2, &alpha).unwrap().polynomial(),
            mode(2, &[2, 1]).polynomial()
        );
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(matches!(
            build_mode::<Rational>(1, &MultiIndex::from_dense(&[0, 1])),
            Err(Error::Shape(_))
        ));
    }
}
