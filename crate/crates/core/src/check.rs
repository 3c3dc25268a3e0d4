//! Validation suites run by the `check` command.
//!
//! Every suite reports the largest residual it saw. In exact arithmetic a suite
//! passes only when that residual is exactly zero; in doubles the bound is
//! [`DOUBLE_TOLERANCE`].

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::flux::{adjointness_residual, apply_backward, apply_forward, facet_flux_defect, trace};
use crate::hierarchy::{extend_with, ExtendOptions, HierarchicalSolution, ParentOrder};
use crate::moments::{compare, MomentTrajectory};
use crate::montecarlo::{self, DensitySampler, InitialState, WfConfig};
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::scalar::Scalar;
use crate::simplex::{build_lattice, FaceId};
use crate::spectral::{omega_shift, GegenbauerMode, ModeCache};

pub const DOUBLE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct McCheck {
    pub pop_size: u64,
    pub paths: usize,
    pub seed: u64,
    pub horizon_t: f64,
    /// Allowed distance in standard errors.
    pub z: f64,
}

impl Default for McCheck {
    fn default() -> Self {
        McCheck {
            pop_size: 1000,
            paths: 4000,
            seed: 1,
            horizon_t: 1.0,
            z: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOptions {
    /// Largest mode degree in the spectral suites.
    pub max_mode_degree: u32,
    /// Largest `|α|` in the moment suite.
    pub moment_order: u32,
    pub t_grid: Vec<f64>,
    /// Random polynomials per randomized suite.
    pub samples: usize,
    pub random_degree: u32,
    pub seed: u64,
    /// `None` skips the Monte Carlo comparison.
    pub mc: Option<McCheck>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_mode_degree: 6,
            moment_order: 4,
            t_grid: vec![0.1, 1.0, 5.0],
            samples: 20,
            random_degree: 4,
            seed: 1,
            mc: Some(McCheck::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub max_residual: f64,
    pub passed: bool,
    pub skipped: bool,
    pub note: String,
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.skipped {
            "SKIP"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        write!(
            f,
            "[{tag}] {:<20} cases={:<5} max_residual={:e}",
            self.name, self.cases, self.max_residual
        )?;
        if !self.note.is_empty() {
            write!(f, "  {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub arithmetic: String,
    pub n: usize,
    pub suites: Vec<SuiteResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed || s.skipped)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        write!(
            f,
            "{} suites, arithmetic={}, n={}: {}",
            self.suites.len(),
            self.arithmetic,
            self.n,
            if self.passed() { "all passed" } else { "FAILED" }
        )
    }
}

/// Residual accumulator for one suite.
struct Suite<S> {
    name: &'static str,
    cases: usize,
    worst: f64,
    exact_ok: bool,
    note: String,
    _s: std::marker::PhantomData<S>,
}

impl<S: Scalar> Suite<S> {
    fn new(name: &'static str) -> Self {
        Suite {
            name,
            cases: 0,
            worst: 0.0,
            exact_ok: true,
            note: String::new(),
            _s: std::marker::PhantomData,
        }
    }

    fn poly(&mut self, residual: &SimplexPolynomial<S>) {
        self.record(residual.max_abs_coeff(), residual.is_zero());
    }

    fn scalar(&mut self, residual: &S) {
        self.record(residual.to_f64().abs(), residual.is_zero());
    }

    fn record(&mut self, magnitude: f64, is_zero: bool) {
        self.cases += 1;
        self.worst = self.worst.max(magnitude);
        self.exact_ok &= is_zero;
    }

    fn finish(self) -> SuiteResult {
        let passed = if S::EXACT {
            self.exact_ok
        } else {
            self.worst <= DOUBLE_TOLERANCE
        };
        SuiteResult {
            name: self.name.to_string(),
            cases: self.cases,
            max_residual: self.worst,
            passed,
            skipped: false,
            note: self.note,
        }
    }
}

/// Random polynomial with small rational coefficients and total degree ≤ `degree`.
pub fn random_polynomial<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, degree: u32) -> SimplexPolynomial<S> {
    let terms = rng.random_range(1..=6);
    let mut p = SimplexPolynomial::zero(n);
    for _ in 0..terms {
        let order = rng.random_range(0..=degree);
        let mut dense = vec![0u32; n];
        for _ in 0..order {
            dense[rng.random_range(0..n)] += 1;
        }
        let num = rng.random_range(-9i64..=9);
        let den = rng.random_range(1i64..=4);
        p.add_term(MultiIndex::from_dense(&dense), S::from_ratio(num, den));
    }
    p
}

/// Replaces the `x1` mode on `Δ_n` with a copy whose constant term is off by 1/7.
pub fn plant_fault<S: Scalar>(cache: &ModeCache<S>, n: usize) -> Result<()> {
    let alpha = MultiIndex::unit(0);
    let good = cache.get(n, &alpha)?;
    cache.insert(good.with_coefficient_offset(&MultiIndex::zero(), S::from_ratio(1, 7)));
    Ok(())
}

fn modes<S: Scalar>(cache: &ModeCache<S>, k: usize, max_degree: u32) -> Result<Vec<std::sync::Arc<GegenbauerMode<S>>>> {
    MultiIndex::all_up_to(k, max_degree)
        .iter()
        .map(|a| cache.get(k, a))
        .collect()
}

pub fn eigen_identity<S: Scalar>(n: usize, max_degree: u32, cache: &ModeCache<S>) -> Result<SuiteResult> {
    let mut suite = Suite::<S>::new("eigen-identity");
    for k in 1..=n {
        for mode in modes(cache, k, max_degree)? {
            let c = mode.polynomial();
            suite.poly(&(&apply_forward(c) + &c.scale(&mode.eigenvalue())));
        }
    }
    Ok(suite.finish())
}

pub fn omega_shift_suite<S: Scalar>(n: usize, max_degree: u32, cache: &ModeCache<S>) -> Result<SuiteResult> {
    let mut suite = Suite::<S>::new("omega-shift");
    for k in 1..=n {
        for mode in modes(cache, k, max_degree)? {
            let w = omega_shift(&mode);
            suite.poly(&(&apply_backward(&w) + &w.scale(&mode.eigenvalue())));
        }
    }
    Ok(suite.finish())
}

pub fn adjointness_suite<S: Scalar>(n: usize, samples: usize, degree: u32, seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite::<S>::new("adjointness");
    for i in 0..samples {
        let k = 1 + i % n;
        let u = random_polynomial::<S, _>(&mut rng, k, degree);
        let phi = random_polynomial::<S, _>(&mut rng, k, degree);
        suite.scalar(&adjointness_residual(&u, &phi)?);
    }
    Ok(suite.finish())
}

pub fn facet_flux_suite<S: Scalar>(n: usize, samples: usize, degree: u32, seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let lattice = build_lattice(n)?;
    let mut suite = Suite::<S>::new("facet-flux");
    for i in 0..samples {
        let k = 1 + i % n;
        for parent in lattice.faces_of_dim(k) {
            let u = random_polynomial::<S, _>(&mut rng, k, degree);
            for facet in lattice.children(parent) {
                suite.poly(&facet_flux_defect(&u, parent, facet)?);
            }
        }
    }
    Ok(suite.finish())
}

/// `L*` commutes with restriction to every face, for random `φ` and every top-face mode.
pub fn restriction_suite<S: Scalar>(
    n: usize,
    samples: usize,
    degree: u32,
    max_mode_degree: u32,
    seed: u64,
    cache: &ModeCache<S>,
) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let lattice = build_lattice(n)?;
    let top = FaceId::full(n);
    let mut phis: Vec<SimplexPolynomial<S>> = (0..samples).map(|_| random_polynomial(&mut rng, n, degree)).collect();
    phis.extend(modes(cache, n, max_mode_degree)?.iter().map(|m| m.polynomial().clone()));
    let mut suite = Suite::<S>::new("restriction");
    for phi in &phis {
        let lphi = apply_backward(phi);
        for face in lattice.faces() {
            let lhs = trace(&lphi, &top, face)?;
            let rhs = apply_backward(&trace(phi, &top, face)?);
            suite.poly(&(&lhs - &rhs));
        }
    }
    Ok(suite.finish())
}

/// Hierarchy moments against the moment ODE, plus mass and first-moment constancy.
pub fn conservation_suite<S: Scalar>(
    u: &HierarchicalSolution<S>,
    moment_order: u32,
    t_grid: &[f64],
) -> Result<SuiteResult> {
    let n = u.n();
    let f = u.initial();
    let mut suite = Suite::<S>::new("moments");
    let traj = MomentTrajectory::from_initial_data(f, moment_order)?;
    let alphas = MultiIndex::all_up_to(n, moment_order);
    for row in compare(&traj, u, t_grid, &alphas)?.rows {
        suite.record(row.max_abs, row.exact);
    }
    for alpha in alphas.iter().filter(|a| a.order() <= 1) {
        let mu = u.moment(alpha)?;
        let drift = mu.minus(&crate::hierarchy::TimeProfile::constant(mu.at_zero()));
        suite.record(
            t_grid.iter().map(|&t| drift.eval(t).abs()).fold(0.0, f64::max),
            drift.is_zero(),
        );
    }
    Ok(suite.finish())
}

pub fn weak_residual_suite<S: Scalar>(
    u: &HierarchicalSolution<S>,
    samples: usize,
    degree: u32,
    t_grid: &[f64],
    seed: u64,
) -> Result<SuiteResult> {
    let n = u.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut phis = vec![SimplexPolynomial::one(n)];
    phis.extend((0..n).map(|i| SimplexPolynomial::var(n, i)));
    phis.extend((0..samples).map(|_| random_polynomial(&mut rng, n, degree)));
    let mut suite = Suite::<S>::new("weak-residual");
    for phi in &phis {
        let r = u.weak_residual(phi)?;
        let worst = t_grid
            .iter()
            .filter(|&&t| t > 0.0)
            .map(|&t| r.eval(t).abs())
            .fold(0.0, f64::max);
        suite.record(worst, r.is_zero());
    }
    Ok(suite.finish())
}

/// Each face obeys its own forward equation driven by the parents' flux.
pub fn face_source_suite<S: Scalar>(u: &HierarchicalSolution<S>) -> Result<SuiteResult> {
    let mut suite = Suite::<S>::new("face-sources");
    for face in u.lattice().faces() {
        let d = u.source_defect(face)?;
        suite.record(d.max_abs_coeff(), d.is_zero());
    }
    if !u.resonances().is_empty() {
        suite.exact_ok = false;
        suite.worst = f64::INFINITY;
        suite.note = format!("{} resonant convolutions", u.resonances().len());
    }
    Ok(suite.finish())
}

pub fn uniqueness_suite<S: Scalar>(u: &HierarchicalSolution<S>, cache: &ModeCache<S>) -> Result<SuiteResult> {
    let opts = ExtendOptions {
        parent_order: ParentOrder::Reversed,
        parallel: false,
        ..ExtendOptions::default()
    };
    let other = extend_with(u.initial(), u.n(), &opts, cache)?;
    let mut suite = Suite::<S>::new("uniqueness");
    suite.record(u.max_density_difference(&other)?, u.same_densities(&other));
    Ok(suite.finish())
}

/// Stratum occupancy and low moments of the simulator against the hierarchy.
pub fn monte_carlo_suite<S: Scalar>(u: &HierarchicalSolution<S>, mc: &McCheck) -> Result<SuiteResult> {
    let f = u.initial().to_f64();
    let skipped = |note: String| SuiteResult {
        name: "monte-carlo".into(),
        cases: 0,
        max_residual: 0.0,
        passed: true,
        skipped: true,
        note,
    };
    if let Err(e) = DensitySampler::new(&f) {
        return Ok(skipped(format!("initial data is not a sampleable density: {e}")));
    }
    let n = u.n();
    let config = WfConfig {
        pop_size: mc.pop_size,
        n,
        horizon_t: mc.horizon_t,
        paths: mc.paths,
        seed: mc.seed,
        initial: InitialState::Density(f),
        max_moment_order: 2,
    };
    let report = montecarlo::run(&config)?;
    let total = u.moment(&MultiIndex::zero())?.eval(mc.horizon_t);
    let mut worst_z = 0.0f64;
    let mut cases = 0;
    let mut z_of = |diff: f64, se: f64| {
        cases += 1;
        let z = if se > 0.0 {
            diff.abs() / se
        } else if diff.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
    };
    for k in 0..=n {
        let expected = u.stratum_mass(k).eval(mc.horizon_t) / total;
        let est = report.stratum(k).expect("all strata reported");
        z_of(est.fraction - expected, est.se);
    }
    for m in report.moments.iter().filter(|m| m.alpha.iter().sum::<u32>() >= 1) {
        let expected = u.moment(&MultiIndex::from_dense(&m.alpha))?.eval(mc.horizon_t) / total;
        z_of(m.mean - expected, m.se);
    }
    let martingale = report.martingale_ok(mc.z);
    let passed = worst_z <= mc.z && martingale && report.absorption_monotone;
    Ok(SuiteResult {
        name: "monte-carlo".into(),
        cases,
        max_residual: worst_z,
        passed,
        skipped: false,
        note: format!(
            "residual in standard errors; martingale {}, absorption {}",
            if martingale { "ok" } else { "violated" },
            if report.absorption_monotone {
                "monotone"
            } else {
                "non-monotone"
            }
        ),
    })
}

/// Runs every suite for initial data `f` on `Δ_n`, with `n = f.n_vars()`.
pub fn run_checks<S: Scalar>(
    f: &SimplexPolynomial<S>,
    opts: &CheckOptions,
    cache: &ModeCache<S>,
) -> Result<CheckReport> {
    let n = f.n_vars();
    build_lattice(n)?;
    let u = extend_with(f, n, &ExtendOptions::default(), cache)?;
    let mut suites = vec![
        eigen_identity(n, opts.max_mode_degree, cache)?,
        omega_shift_suite(n, opts.max_mode_degree, cache)?,
        adjointness_suite::<S>(n, opts.samples, opts.random_degree, opts.seed)?,
        facet_flux_suite::<S>(n, opts.samples, opts.random_degree, opts.seed)?,
        restriction_suite(
            n,
            opts.samples,
            opts.random_degree,
            opts.max_mode_degree,
            opts.seed,
            cache,
        )?,
        conservation_suite(&u, opts.moment_order, &opts.t_grid)?,
        weak_residual_suite(&u, opts.samples, opts.random_degree, &opts.t_grid, opts.seed)?,
        face_source_suite(&u)?,
        uniqueness_suite(&u, cache)?,
    ];
    if let Some(mc) = &opts.mc {
        suites.push(monte_carlo_suite(&u, mc)?);
    }
    Ok(CheckReport {
        arithmetic: S::NAME.to_string(),
        n,
        suites,
    })
}
