//! Forward and backward Wright-Fisher operators, the probability flux, and
//! normal flux through facets.
//!
//! A polynomial here always lives on some face chart, and the operators act in
//! that chart's coordinates. The operator has the same form in every canonical
//! chart because alleles are exchangeable and chart changes are unimodular.
//!
//! Normal flux is reported as a density rate with respect to the facet's own
//! chart measure. On a coordinate facet `{x^l = 0}` the outward normal is
//! `-e_l` and the facet chart measure is the induced one. On the diagonal
//! facet `{Σ x = 1}` of a `k`-dimensional face the normal is `(1,…,1)/√k`
//! while the induced measure is `√k` times the facet chart measure, so the
//! rate is simply `Σ_i G^i` restricted to the facet.

use crate::error::{Error, Result};
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::scalar::Scalar;
use crate::simplex::{chart_map, chart_of, FaceId};

/// Diffusion coefficient `a^{ij} = x^i (δ^i_j - x^j)`.
pub fn diffusion_coefficient<S: Scalar>(n: usize, i: usize, j: usize) -> SimplexPolynomial<S> {
    let cross = MultiIndex::unit(i).product(&MultiIndex::unit(j));
    let mut a = SimplexPolynomial::monomial(n, cross, -S::one());
    if i == j {
        a.add_term(MultiIndex::unit(i), S::one());
    }
    a
}

/// `L u = ½ Σ_{ij} ∂_i ∂_j (a^{ij} u)`.
pub fn apply_forward<S: Scalar>(u: &SimplexPolynomial<S>) -> SimplexPolynomial<S> {
    let n = u.n_vars();
    let half = S::from_ratio(1, 2);
    let mut out = SimplexPolynomial::zero(n);
    for i in 0..n {
        for j in 0..n {
            let au = &diffusion_coefficient::<S>(n, i, j) * u;
            let d = au.partial(j).and_then(|p| p.partial(i)).expect("slots in range");
            out.add_scaled(&d, &half);
        }
    }
    out
}

/// `L* φ = ½ Σ_{ij} a^{ij} ∂_i ∂_j φ`.
pub fn apply_backward<S: Scalar>(phi: &SimplexPolynomial<S>) -> SimplexPolynomial<S> {
    let n = phi.n_vars();
    let half = S::from_ratio(1, 2);
    let mut out = SimplexPolynomial::zero(n);
    for i in 0..n {
        let di = phi.partial(i).expect("slot in range");
        for j in 0..n {
            let dij = di.partial(j).expect("slot in range");
            if dij.is_zero() {
                continue;
            }
            out.add_scaled(&(&diffusion_coefficient::<S>(n, i, j) * &dij), &half);
        }
    }
    out
}

/// Components `G^i = -½ Σ_j ∂_j (a^{ij} u)` of the probability flux.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxVector<S: Scalar> {
    pub components: Vec<SimplexPolynomial<S>>,
}

impl<S: Scalar> FluxVector<S> {
    pub fn divergence(&self) -> SimplexPolynomial<S> {
        let n = self.components.len();
        let mut out = SimplexPolynomial::zero(n);
        for (i, g) in self.components.iter().enumerate() {
            out = &out + &g.partial(i).expect("slot in range");
        }
        out
    }
}

pub fn flux_of<S: Scalar>(u: &SimplexPolynomial<S>) -> FluxVector<S> {
    let n = u.n_vars();
    let minus_half = S::from_ratio(-1, 2);
    let components = (0..n)
        .map(|i| {
            let mut g = SimplexPolynomial::zero(n);
            for j in 0..n {
                let d = (&diffusion_coefficient::<S>(n, i, j) * u)
                    .partial(j)
                    .expect("slot in range");
                g.add_scaled(&d, &minus_half);
            }
            g
        })
        .collect();
    FluxVector { components }
}

fn check_face<S: Scalar>(u: &SimplexPolynomial<S>, face: &FaceId) -> Result<()> {
    if u.n_vars() != face.dim() {
        return Err(Error::Shape(format!(
            "polynomial has {} variables but face {face} has dimension {}",
            u.n_vars(),
            face.dim()
        )));
    }
    Ok(())
}

/// Restriction of `u` (on `parent`'s chart) to the chart of a subface.
pub fn trace<S: Scalar>(u: &SimplexPolynomial<S>, parent: &FaceId, face: &FaceId) -> Result<SimplexPolynomial<S>> {
    check_face(u, parent)?;
    let images = chart_map(&chart_of(*parent), &chart_of(*face))?;
    u.restrict(&images, face.dim())
}

/// Outward normal flux `G·ν` of `u` through `facet`, as a density rate on the facet chart.
pub fn normal_flux_on_facet<S: Scalar>(
    u: &SimplexPolynomial<S>,
    parent: &FaceId,
    facet: &FaceId,
) -> Result<SimplexPolynomial<S>> {
    check_face(u, parent)?;
    let removed = facet.removed_label(parent).ok_or(Error::NotAdjacent {
        parent: *parent,
        child: *facet,
    })?;
    let pchart = chart_of(*parent);
    let flux = flux_of(u);
    let rate = if removed == pchart.dependent {
        let mut total = SimplexPolynomial::zero(u.n_vars());
        for g in &flux.components {
            total = &total + g;
        }
        total
    } else {
        let slot = pchart.slot_of(removed).expect("removed label is a chart coordinate");
        -&flux.components[slot]
    };
    trace(&rate, parent, facet)
}

/// `normal_flux_on_facet(u) - ½ trace(u)`; identically zero for every facet.
pub fn facet_flux_defect<S: Scalar>(
    u: &SimplexPolynomial<S>,
    parent: &FaceId,
    facet: &FaceId,
) -> Result<SimplexPolynomial<S>> {
    let normal = normal_flux_on_facet(u, parent, facet)?;
    let half_trace = trace(u, parent, facet)?.scale(&S::from_ratio(1, 2));
    Ok(&normal - &half_trace)
}

/// `(L u, φ) + Σ_facets ∫ φ G·ν - (u, L*φ)` on the top face of `Δ_n`, `n = u.n_vars()`.
pub fn adjointness_residual<S: Scalar>(u: &SimplexPolynomial<S>, phi: &SimplexPolynomial<S>) -> Result<S> {
    adjointness_residual_on(&FaceId::full(u.n_vars()), u, phi)
}

/// [`adjointness_residual`] on an arbitrary face chart.
pub fn adjointness_residual_on<S: Scalar>(
    face: &FaceId,
    u: &SimplexPolynomial<S>,
    phi: &SimplexPolynomial<S>,
) -> Result<S> {
    check_face(u, face)?;
    check_face(phi, face)?;
    if face.dim() == 0 {
        return Ok(S::zero());
    }
    let interior = (&apply_forward(u) * phi).integral() - (u * &apply_backward(phi)).integral();
    let mut boundary = S::zero();
    for label in face.labels() {
        let facet = face.without(label).expect("positive dimension");
        let rate = normal_flux_on_facet(u, face, &facet)?;
        let phi_f = trace(phi, face, &facet)?;
        boundary = boundary + (&rate * &phi_f).integral();
    }
    Ok(interior + boundary)
}
