//! Closed-form solution of the moment evolution system
//!
//! `d/dt μ_α = -½|α|(|α|-1) μ_α + Σ_i ½α_i(α_i-1) μ_{α-e_i}`.
//!
//! The system is lower triangular in `|α|`, so each moment is its own decay
//! plus a Duhamel convolution of already-solved lower moments.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::hierarchy::{DecayRate, HierarchicalSolution, TimeProfile};
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::scalar::Scalar;
use crate::simplex::MAX_DIM;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTrajectory<S: Scalar> {
    n: usize,
    max_order: u32,
    entries: BTreeMap<MultiIndex, TimeProfile<S>>,
}

/// `∫ f x^α` over `Δ_n` for every `|α| ≤ max_order`.
pub fn initial_moments<S: Scalar>(f: &SimplexPolynomial<S>, max_order: u32) -> BTreeMap<MultiIndex, S> {
    let n = f.n_vars();
    MultiIndex::all_up_to(n, max_order)
        .into_iter()
        .map(|alpha| {
            let m = (f * &SimplexPolynomial::monomial(n, alpha.clone(), S::one())).integral();
            (alpha, m)
        })
        .collect()
}

fn decay(alpha: &MultiIndex) -> DecayRate {
    let a = alpha.order() as u64;
    DecayRate::from_twice(a * a.saturating_sub(1))
}

/// `(β, ½α_i(α_i-1))` pairs feeding `μ_α`.
fn sources(alpha: &MultiIndex) -> Vec<(MultiIndex, i64)> {
    alpha
        .iter()
        .filter(|&(_, e)| e >= 2)
        .map(|(slot, e)| {
            let beta = alpha.shifted(slot, -1).expect("positive exponent");
            (beta, (e as i64) * (e as i64 - 1) / 2)
        })
        .collect()
}

fn check_dim(n: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&n) {
        return Err(Error::Size(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

pub fn solve_moment_ode<S: Scalar>(
    initial: &BTreeMap<MultiIndex, S>,
    n: usize,
    max_order: u32,
) -> Result<MomentTrajectory<S>> {
    check_dim(n)?;
    let mut entries: BTreeMap<MultiIndex, TimeProfile<S>> = BTreeMap::new();
    for alpha in MultiIndex::all_up_to(n, max_order) {
        let m0 = initial
            .get(&alpha)
            .ok_or_else(|| Error::Input(format!("missing initial moment for {:?}", alpha.to_dense(n))))?;
        let rate = decay(&alpha);
        let mut source = TimeProfile::zero();
        for (beta, w) in sources(&alpha) {
            source.add_scaled(&entries[&beta], &S::from_int(w));
        }
        let (mut mu, _) = source.convolve(rate);
        mu.add_atom(rate, 0, m0.clone());
        entries.insert(alpha, mu);
    }
    Ok(MomentTrajectory { n, max_order, entries })
}

impl<S: Scalar> MomentTrajectory<S> {
    pub fn from_initial_data(f: &SimplexPolynomial<S>, max_order: u32) -> Result<Self> {
        solve_moment_ode(&initial_moments(f, max_order), f.n_vars(), max_order)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&TimeProfile<S>> {
        self.entries.get(alpha)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &TimeProfile<S>)> {
        self.entries.iter()
    }

    pub fn value(&self, alpha: &MultiIndex, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("time {t} must be nonnegative")));
        }
        self.get(alpha)
            .map(|p| p.eval(t))
            .ok_or_else(|| Error::Input(format!("moment {:?} not in trajectory", alpha.to_dense(self.n))))
    }

    /// Largest coefficient of `μ_α' - rhs_α` over all entries; zero when exact.
    pub fn ode_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (alpha, mu) in &self.entries {
            let mut rhs = mu.scale(&-decay(alpha).value::<S>());
            for (beta, w) in sources(alpha) {
                rhs.add_scaled(&self.entries[&beta], &S::from_int(w));
            }
            worst = worst.max(mu.derivative().minus(&rhs).max_abs_coeff());
        }
        worst
    }

    /// Rows `t,a1;a2;…,value`.
    pub fn to_csv(&self, t_grid: &[f64]) -> String {
        let mut out = String::from("t,alpha,value\n");
        for &t in t_grid {
            for (alpha, mu) in &self.entries {
                let _ = writeln!(out, "{t},{},{}", alpha_label(alpha, self.n), mu.eval(t));
            }
        }
        out
    }
}

/// `a1;a2;…` label of a multi-index.
pub fn alpha_label(alpha: &MultiIndex, n: usize) -> String {
    alpha
        .to_dense(n)
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// Fixed-step RK4 integration of the same system in doubles.
pub fn integrate_rk4(
    initial: &BTreeMap<MultiIndex, f64>,
    n: usize,
    max_order: u32,
    t_end: f64,
    step: f64,
) -> Result<BTreeMap<MultiIndex, f64>> {
    check_dim(n)?;
    if t_end.is_nan() || t_end < 0.0 || step.is_nan() || step <= 0.0 {
        return Err(Error::Domain(format!(
            "need t_end ≥ 0 and step > 0, got {t_end}, {step}"
        )));
    }
    let index = MultiIndex::all_up_to(n, max_order);
    let pos: BTreeMap<&MultiIndex, usize> = index.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut y = Vec::with_capacity(index.len());
    for alpha in &index {
        y.push(
            *initial
                .get(alpha)
                .ok_or_else(|| Error::Input(format!("missing initial moment for {:?}", alpha.to_dense(n))))?,
        );
    }
    let system: Vec<(f64, Vec<(usize, f64)>)> = index
        .iter()
        .map(|a| {
            let src = sources(a).into_iter().map(|(b, w)| (pos[&b], w as f64)).collect();
            (decay(a).to_f64(), src)
        })
        .collect();
    let rhs = |y: &[f64]| -> Vec<f64> {
        system
            .iter()
            .enumerate()
            .map(|(i, (lam, src))| -lam * y[i] + src.iter().map(|&(j, w)| w * y[j]).sum::<f64>())
            .collect()
    };
    let steps = (t_end / step).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    for _ in 0..steps {
        let k1 = rhs(&y);
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = rhs(&y2);
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = rhs(&y3);
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = rhs(&y4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(index.into_iter().zip(y).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub alpha: MultiIndex,
    /// Largest `|oracle - hierarchy|` over the time grid.
    pub max_abs: f64,
    /// Whether the symbolic profiles coincide.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| r.max_abs).fold(0.0, f64::max)
    }

    pub fn all_exact(&self) -> bool {
        self.rows.iter().all(|r| r.exact)
    }
}

/// Compares oracle moments against `[U, x^α]` on a time grid.
pub fn compare<S: Scalar>(
    trajectory: &MomentTrajectory<S>,
    u: &HierarchicalSolution<S>,
    t_grid: &[f64],
    alphas: &[MultiIndex],
) -> Result<CompareReport> {
    if trajectory.n != u.n() {
        return Err(Error::Shape(format!(
            "oracle on Δ_{} but solution on Δ_{}",
            trajectory.n,
            u.n()
        )));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        let oracle = trajectory
            .get(alpha)
            .ok_or_else(|| Error::Input(format!("moment {:?} not in trajectory", alpha.to_dense(u.n()))))?;
        let hier = u.moment(alpha)?;
        let diff = oracle.minus(&hier);
        let max_abs = t_grid.iter().map(|&t| diff.eval(t).abs()).fold(0.0, f64::max);
        rows.push(CompareRow {
            alpha: alpha.clone(),
            max_abs,
            exact: diff.is_zero(),
        });
    }
    Ok(CompareReport { rows })
}
