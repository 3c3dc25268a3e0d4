//! Hierarchical extension of the interior solution to every face of the closed simplex.
//!
//! The top face evolves by its modal expansion. Each lower face is driven by the
//! normal flux leaving its parents, which enters as a Duhamel source:
//! `U_F(t) = ∫_0^t e^{(t-τ) L_k} Σ_P G^⊥_P(τ) dτ`. Since every flux is a polynomial
//! in space times a [`TimeProfile`] in time, each face solution is again a finite
//! sum of modes with symbolic profiles.

mod field;
mod json;
mod profile;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::{apply_backward, apply_forward, normal_flux_on_facet, trace};
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::scalar::Scalar;
use crate::simplex::{build_lattice, embed_point, FaceId, FaceLattice};
use crate::spectral::{eigen_rate, project, GegenbauerMode, ModeCache, DEFAULT_MAX_DEGREE};

pub use field::SpaceTimeField;
pub use json::{AtomJson, FaceJson, SolutionJson, TermJson};
pub use profile::{AtomKey, DecayRate, TimeProfile};

/// One mode of a face solution together with its time profile.
#[derive(Clone, Debug)]
pub struct FaceTerm<S: Scalar> {
    pub mode: Arc<GegenbauerMode<S>>,
    pub profile: TimeProfile<S>,
}

/// `U_F(x,t) = Σ profile(t) C(x)` on the chart of `face`.
#[derive(Clone, Debug)]
pub struct FaceSolution<S: Scalar> {
    face: FaceId,
    terms: BTreeMap<MultiIndex, FaceTerm<S>>,
}

impl<S: Scalar> FaceSolution<S> {
    pub fn new(face: FaceId) -> Self {
        FaceSolution {
            face,
            terms: BTreeMap::new(),
        }
    }

    pub fn face(&self) -> FaceId {
        self.face
    }

    pub fn terms(&self) -> impl Iterator<Item = &FaceTerm<S>> {
        self.terms.values()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `profile · mode`, merging with an existing term for the same mode.
    pub fn add(&mut self, mode: Arc<GegenbauerMode<S>>, profile: &TimeProfile<S>) -> Result<()> {
        if mode.n() != self.face.dim() {
            return Err(Error::Shape(format!(
                "mode over {} variables on face {} of dimension {}",
                mode.n(),
                self.face,
                self.face.dim()
            )));
        }
        if profile.is_zero() {
            return Ok(());
        }
        let key = mode.alpha().clone();
        let entry = self.terms.entry(key.clone()).or_insert_with(|| FaceTerm {
            mode,
            profile: TimeProfile::zero(),
        });
        entry.profile = entry.profile.plus(profile);
        if entry.profile.is_zero() {
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn density_field(&self) -> SpaceTimeField<S> {
        let mut out = SpaceTimeField::zero(self.face.dim());
        for term in self.terms.values() {
            out.add_product(&term.profile, term.mode.polynomial());
        }
        out
    }

    /// Density polynomial on the face chart at time `t`.
    pub fn density_at(&self, t: f64) -> SimplexPolynomial<f64> {
        self.density_field().eval(t)
    }

    /// `∫_F U_F φ` as a profile, with `φ` already on the face chart.
    pub fn pair(&self, phi: &SimplexPolynomial<S>) -> TimeProfile<S> {
        let mut out = TimeProfile::zero();
        for term in self.terms.values() {
            let w = (term.mode.polynomial() * phi).integral();
            out.add_scaled(&term.profile, &w);
        }
        out
    }

    pub fn mass(&self) -> TimeProfile<S> {
        self.pair(&SimplexPolynomial::one(self.face.dim()))
    }
}

/// Order in which incoming parents are visited during extension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParentOrder {
    #[default]
    Canonical,
    Reversed,
}

#[derive(Clone, Debug)]
pub struct ExtendOptions<S: Scalar> {
    /// Largest admissible degree of the initial data.
    pub max_degree: u32,
    pub parent_order: ParentOrder,
    /// Process faces of equal dimension on the rayon pool.
    pub parallel: bool,
    /// Nonzero initial densities on proper faces, on each face's chart.
    pub boundary: BTreeMap<FaceId, SimplexPolynomial<S>>,
}

impl<S: Scalar> Default for ExtendOptions<S> {
    fn default() -> Self {
        ExtendOptions {
            max_degree: DEFAULT_MAX_DEGREE,
            parent_order: ParentOrder::Canonical,
            parallel: true,
            boundary: BTreeMap::new(),
        }
    }
}

/// A convolution that hit equal parent and child rates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resonance {
    pub parent: FaceId,
    pub face: FaceId,
    pub rate: DecayRate,
}

#[derive(Clone, Debug)]
pub struct HierarchicalSolution<S: Scalar> {
    n: usize,
    lattice: FaceLattice,
    faces: BTreeMap<FaceId, FaceSolution<S>>,
    initial: SimplexPolynomial<S>,
    resonances: Vec<Resonance>,
}

/// Extends `f` (a density on the interior of `Δ_n`, zero on the boundary) to all faces.
pub fn extend<S: Scalar>(f: &SimplexPolynomial<S>, n: usize) -> Result<HierarchicalSolution<S>> {
    extend_with(f, n, &ExtendOptions::default(), &ModeCache::new())
}

pub fn extend_with<S: Scalar>(
    f: &SimplexPolynomial<S>,
    n: usize,
    opts: &ExtendOptions<S>,
    cache: &ModeCache<S>,
) -> Result<HierarchicalSolution<S>> {
    let lattice = build_lattice(n)?;
    if f.n_vars() != n {
        return Err(Error::Shape(format!(
            "initial data has {} variables, expected {n}",
            f.n_vars()
        )));
    }
    check_degree(f, opts.max_degree)?;
    for (face, g) in &opts.boundary {
        if !lattice.contains(face) || *face == lattice.top() {
            return Err(Error::Face(format!("{face} is not a proper face of the {n}-simplex")));
        }
        if g.n_vars() != face.dim() {
            return Err(Error::Shape(format!(
                "boundary data on {face} has {} variables, expected {}",
                g.n_vars(),
                face.dim()
            )));
        }
        check_degree(g, opts.max_degree)?;
    }

    let top = lattice.top();
    let mut faces = BTreeMap::new();
    let mut top_sol = FaceSolution::new(top);
    for (mode, c) in project(f, cache)?.modes {
        let rate = mode.rate();
        top_sol.add(mode, &TimeProfile::exp(rate, c))?;
    }
    faces.insert(top, top_sol);
    let mut resonances = Vec::new();

    for k in (0..n).rev() {
        let level = lattice.faces_of_dim(k);
        let done = &faces;
        let work = |face: &FaceId| seed_face(&lattice, done, face, opts, cache);
        let results: Vec<Result<(FaceSolution<S>, Vec<Resonance>)>> = if opts.parallel {
            level.par_iter().map(work).collect()
        } else {
            level.iter().map(work).collect()
        };
        for r in results {
            let (sol, res) = r?;
            resonances.extend(res);
            faces.insert(sol.face, sol);
        }
    }

    Ok(HierarchicalSolution {
        n,
        lattice,
        faces,
        initial: f.clone(),
        resonances,
    })
}

fn check_degree<S: Scalar>(p: &SimplexPolynomial<S>, max_degree: u32) -> Result<()> {
    if p.degree() > max_degree {
        return Err(Error::Size(format!(
            "degree {} exceeds the limit {max_degree}",
            p.degree()
        )));
    }
    Ok(())
}

/// Builds `U_F` from the finished parent solutions.
fn seed_face<S: Scalar>(
    lattice: &FaceLattice,
    done: &BTreeMap<FaceId, FaceSolution<S>>,
    face: &FaceId,
    opts: &ExtendOptions<S>,
    cache: &ModeCache<S>,
) -> Result<(FaceSolution<S>, Vec<Resonance>)> {
    let k = face.dim();
    let mut sol = FaceSolution::new(*face);
    let mut resonances = Vec::new();
    if let Some(g) = opts.boundary.get(face) {
        for (mode, c) in project(g, cache)?.modes {
            let rate = mode.rate();
            sol.add(mode, &TimeProfile::exp(rate, c))?;
        }
    }
    let mut parents: Vec<FaceId> = lattice.parents(face).to_vec();
    if opts.parent_order == ParentOrder::Reversed {
        parents.reverse();
    }
    for parent in parents {
        let psol = done
            .get(&parent)
            .ok_or_else(|| Error::Face(format!("parent {parent} of {face} not yet solved")))?;
        let mut terms: Vec<&FaceTerm<S>> = psol.terms().collect();
        if opts.parent_order == ParentOrder::Reversed {
            terms.reverse();
        }
        for term in terms {
            let rate_poly = normal_flux_on_facet(term.mode.polynomial(), &parent, face)?;
            let expansion = project(&rate_poly, cache)?;
            let mut by_degree: BTreeMap<u32, TimeProfile<S>> = BTreeMap::new();
            for (mode, d) in expansion.modes {
                let l = mode.degree();
                let conv = by_degree.entry(l).or_insert_with(|| {
                    let child_rate = eigen_rate(k, l);
                    let (conv, resonant) = term.profile.convolve(child_rate);
                    if resonant {
                        resonances.push(Resonance {
                            parent,
                            face: *face,
                            rate: child_rate,
                        });
                    }
                    conv
                });
                sol.add(mode, &conv.scale(&d))?;
            }
        }
    }
    Ok((sol, resonances))
}

impl<S: Scalar> HierarchicalSolution<S> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lattice(&self) -> &FaceLattice {
        &self.lattice
    }

    /// The initial data on the top face.
    pub fn initial(&self) -> &SimplexPolynomial<S> {
        &self.initial
    }

    pub fn face(&self, face: &FaceId) -> Result<&FaceSolution<S>> {
        self.faces
            .get(face)
            .ok_or_else(|| Error::Face(format!("{face} is not a face of the {}-simplex", self.n)))
    }

    pub fn faces(&self) -> impl Iterator<Item = &FaceSolution<S>> {
        self.faces.values()
    }

    /// Convolutions that took the equal-rate branch. Empty for interior initial data.
    pub fn resonances(&self) -> &[Resonance] {
        &self.resonances
    }

    /// `[U, φ]_n` as a time profile, `φ` on the ambient chart.
    pub fn hierarchical_product(&self, phi: &SimplexPolynomial<S>) -> Result<TimeProfile<S>> {
        self.check_ambient(phi)?;
        let top = self.lattice.top();
        let mut out = TimeProfile::zero();
        for (face, sol) in &self.faces {
            let phi_f = trace(phi, &top, face)?;
            out = out.plus(&sol.pair(&phi_f));
        }
        Ok(out)
    }

    pub fn hierarchical_product_at(&self, phi: &SimplexPolynomial<S>, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.hierarchical_product(phi)?.eval(t))
    }

    /// `μ̄_α = [U, x^α]_n`.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<TimeProfile<S>> {
        self.hierarchical_product(&SimplexPolynomial::monomial(self.n, alpha.clone(), S::one()))
    }

    pub fn moment_at(&self, alpha: &MultiIndex, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.moment(alpha)?.eval(t))
    }

    /// Mass carried by the faces of dimension `k`.
    pub fn stratum_mass(&self, k: usize) -> TimeProfile<S> {
        let mut out = TimeProfile::zero();
        for sol in self.faces.values().filter(|s| s.face.dim() == k) {
            out = out.plus(&sol.mass());
        }
        out
    }

    /// `[∂_t U, φ]_n - [U, L*φ]_n`, using `L*_k` of the face trace on each face.
    pub fn weak_residual(&self, phi: &SimplexPolynomial<S>) -> Result<TimeProfile<S>> {
        self.check_ambient(phi)?;
        let top = self.lattice.top();
        let mut out = TimeProfile::zero();
        for (face, sol) in &self.faces {
            let phi_f = trace(phi, &top, face)?;
            let lphi = apply_backward(&phi_f);
            for term in sol.terms() {
                let a = (term.mode.polynomial() * &phi_f).integral();
                let b = (term.mode.polynomial() * &lphi).integral();
                out.add_scaled(&term.profile.derivative(), &a);
                out.add_scaled(&term.profile, &-b);
            }
        }
        Ok(out)
    }

    pub fn weak_residual_at(&self, phi: &SimplexPolynomial<S>, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Domain(format!("time {t} must be positive")));
        }
        Ok(self.weak_residual(phi)?.eval(t))
    }

    /// Incoming flux `Σ_P G^⊥(U_P)` on the chart of `face`.
    pub fn inflow(&self, face: &FaceId) -> Result<SpaceTimeField<S>> {
        let mut out = SpaceTimeField::zero(face.dim());
        for parent in self.lattice.parents(face) {
            let psol = self.face(parent)?;
            for term in psol.terms() {
                let rate = normal_flux_on_facet(term.mode.polynomial(), parent, face)?;
                out.add_product(&term.profile, &rate);
            }
        }
        Ok(out)
    }

    /// `∂_t U_F - L_k U_F - Σ_P G^⊥(U_P)`. Identically zero on every face.
    pub fn source_defect(&self, face: &FaceId) -> Result<SpaceTimeField<S>> {
        let field = self.face(face)?.density_field();
        let generator = field.map_spatial(face.dim(), |p| Ok(apply_forward(p)))?;
        Ok(field.derivative().minus(&generator).minus(&self.inflow(face)?))
    }

    /// `∂_t U_F - L_k U_F`, the part a face solution fails to satisfy on its own.
    pub fn homogeneous_defect(&self, face: &FaceId) -> Result<SpaceTimeField<S>> {
        let field = self.face(face)?.density_field();
        let generator = field.map_spatial(face.dim(), |p| Ok(apply_forward(p)))?;
        Ok(field.derivative().minus(&generator))
    }

    /// Density of `face` at chart coordinates `coords` and time `t`.
    pub fn density(&self, face: &FaceId, coords: &[f64], t: f64) -> Result<f64> {
        check_time(t)?;
        embed_point(self.n, *face, coords)?;
        let sol = self.face(face)?;
        Ok(sol
            .terms()
            .map(|term| term.profile.eval(t) * term.mode.polynomial().eval(coords))
            .fold(0.0, |acc, v| acc + v))
    }

    /// Largest coefficient of the difference of face densities, over all faces.
    pub fn max_density_difference(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::Shape(format!("dimensions {} and {} differ", self.n, other.n)));
        }
        let mut worst = 0.0f64;
        for (face, sol) in &self.faces {
            let diff = sol.density_field().minus(&other.face(face)?.density_field());
            worst = worst.max(diff.max_abs_coeff());
        }
        Ok(worst)
    }

    /// Whether both solutions have identical symbolic densities on every face.
    pub fn same_densities(&self, other: &Self) -> bool {
        self.n == other.n
            && self.faces.iter().all(|(face, sol)| {
                other
                    .faces
                    .get(face)
                    .is_some_and(|o| o.density_field() == sol.density_field())
            })
    }

    fn check_ambient(&self, phi: &SimplexPolynomial<S>) -> Result<()> {
        if phi.n_vars() != self.n {
            return Err(Error::Shape(format!(
                "test function has {} variables, expected {}",
                phi.n_vars(),
                self.n
            )));
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || !t.is_finite() {
        return Err(Error::Domain(format!("time {t} must be finite and nonnegative")));
    }
    Ok(())
}
