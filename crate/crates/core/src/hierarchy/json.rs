//! Serialized form of a [`HierarchicalSolution`].
//!
//! Coefficients are written as text (`p/q` for rationals, round-trip decimals for
//! doubles) so that reading a file back reproduces the solution bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DecayRate, FaceSolution, HierarchicalSolution, Resonance, TimeProfile};
use crate::error::{Error, Result};
use crate::polynomial::{MultiIndex, PolynomialJson, SimplexPolynomial};
use crate::scalar::Scalar;
use crate::simplex::{build_lattice, chart_of, FaceChart, FaceId};
use crate::spectral::ModeCache;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub lambda: f64,
    pub power: u32,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub mode_alpha: Vec<u32>,
    pub mode_degree: u32,
    pub atoms: Vec<AtomJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceJson {
    pub indices: Vec<usize>,
    pub chart: FaceChart,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceJson {
    pub parent: Vec<usize>,
    pub face: Vec<usize>,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub n: usize,
    pub arithmetic: String,
    pub initial: PolynomialJson,
    pub faces: Vec<FaceJson>,
    #[serde(default)]
    pub resonances: Vec<ResonanceJson>,
}

fn rate_from_lambda(lambda: f64) -> Result<DecayRate> {
    let twice = 2.0 * lambda;
    if twice.is_nan() || twice < 0.0 || twice.fract() != 0.0 || twice > u32::MAX as f64 {
        return Err(Error::Input(format!(
            "decay rate {lambda} is not a nonnegative half-integer"
        )));
    }
    Ok(DecayRate::from_twice(twice as u64))
}

fn profile_to_json<S: Scalar>(p: &TimeProfile<S>) -> Vec<AtomJson> {
    p.atoms()
        .map(|(&(rate, power), c)| AtomJson {
            lambda: rate.to_f64(),
            power,
            coeff: c.to_text(),
        })
        .collect()
}

fn profile_from_json<S: Scalar>(atoms: &[AtomJson]) -> Result<TimeProfile<S>> {
    let mut out = TimeProfile::zero();
    for a in atoms {
        out.add_atom(rate_from_lambda(a.lambda)?, a.power, S::parse_text(&a.coeff)?);
    }
    Ok(out)
}

impl<S: Scalar> HierarchicalSolution<S> {
    pub fn to_json(&self) -> SolutionJson {
        let faces = self
            .faces
            .iter()
            .map(|(face, sol)| FaceJson {
                indices: face.indices(),
                chart: chart_of(*face),
                terms: sol
                    .terms()
                    .map(|term| TermJson {
                        mode_alpha: term.mode.alpha().to_dense(face.dim()),
                        mode_degree: term.mode.degree(),
                        atoms: profile_to_json(&term.profile),
                    })
                    .collect(),
            })
            .collect();
        SolutionJson {
            n: self.n,
            arithmetic: S::NAME.to_string(),
            initial: self.initial.to_json(),
            faces,
            resonances: self
                .resonances
                .iter()
                .map(|r| ResonanceJson {
                    parent: r.parent.indices(),
                    face: r.face.indices(),
                    lambda: r.rate.to_f64(),
                })
                .collect(),
        }
    }

    /// Rebuilds a solution, regenerating modes from their labels.
    pub fn from_json(json: &SolutionJson) -> Result<Self> {
        let lattice = build_lattice(json.n)?;
        let initial = SimplexPolynomial::from_json(&json.initial)?;
        if initial.n_vars() != json.n {
            return Err(Error::Shape(format!(
                "initial data has {} variables, expected {}",
                initial.n_vars(),
                json.n
            )));
        }
        let cache = ModeCache::new();
        let mut faces = BTreeMap::new();
        for fj in &json.faces {
            let face = FaceId::new(&fj.indices)?;
            if !lattice.contains(&face) {
                return Err(Error::Face(format!("{face} is not a face of the {}-simplex", json.n)));
            }
            if fj.chart != chart_of(face) {
                return Err(Error::Input(format!("chart of {face} is not canonical")));
            }
            let mut sol = FaceSolution::new(face);
            for tj in &fj.terms {
                if tj.mode_alpha.len() != face.dim() {
                    return Err(Error::Shape(format!(
                        "mode label {:?} on face {face} of dimension {}",
                        tj.mode_alpha,
                        face.dim()
                    )));
                }
                let alpha = MultiIndex::from_dense(&tj.mode_alpha);
                if alpha.order() != tj.mode_degree {
                    return Err(Error::Input(format!(
                        "mode {:?} has degree {}, not {}",
                        tj.mode_alpha,
                        alpha.order(),
                        tj.mode_degree
                    )));
                }
                let mode = cache.get(face.dim(), &alpha)?;
                sol.add(mode, &profile_from_json(&tj.atoms)?)?;
            }
            if faces.insert(face, sol).is_some() {
                return Err(Error::Input(format!("face {face} listed twice")));
            }
        }
        for face in lattice.faces() {
            faces.entry(*face).or_insert_with(|| FaceSolution::new(*face));
        }
        let mut resonances = Vec::new();
        for r in &json.resonances {
            resonances.push(Resonance {
                parent: FaceId::new(&r.parent)?,
                face: FaceId::new(&r.face)?,
                rate: rate_from_lambda(r.lambda)?,
            });
        }
        Ok(HierarchicalSolution {
            n: json.n,
            lattice,
            faces,
            initial,
            resonances,
        })
    }
}
