//! Hierarchically extended solutions of the forward Kolmogorov equation for
//! the multi-allele Wright-Fisher diffusion on the closed probability simplex.
//!
//! The interior solution is a finite generalized Gegenbauer expansion. Mass
//! leaving the interior through each facet seeds a lower-dimensional
//! Wright-Fisher process on that facet (a Duhamel integral in time), and the
//! construction recurses down to the vertices. All time dependence is kept
//! symbolic as sums of `t^p e^{-λt}` atoms, so the whole pipeline is exact
//! over the rationals.
//!
//! Independent oracles live alongside the solver: closed-form moment ODE
//! trajectories ([`moments`]) and a discrete Wright-Fisher simulator
//! ([`montecarlo`]).

pub mod check;
pub mod cli;
pub mod error;
pub mod flux;
pub mod hierarchy;
pub mod moments;
pub mod montecarlo;
pub mod polynomial;
pub mod scalar;
pub mod simplex;
pub mod spectral;

pub use error::{Error, Result};
pub use hierarchy::{extend, DecayRate, HierarchicalSolution, TimeProfile};
pub use polynomial::{MultiIndex, SimplexPolynomial};
pub use scalar::{Rational, Scalar};
pub use simplex::{build_lattice, FaceChart, FaceId, FaceLattice};
pub use spectral::{GegenbauerMode, ModalExpansion, ModeCache};
