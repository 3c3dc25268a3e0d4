//! Acceptance criteria 1-9. Runs without the libtest harness so that every
//! criterion prints exactly one `[PASS]`/`[FAIL]` line.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wf_hierarchy::check::random_polynomial;
use wf_hierarchy::flux::{adjointness_residual, apply_backward, apply_forward, facet_flux_defect, trace};
use wf_hierarchy::hierarchy::{extend, DecayRate, HierarchicalSolution, TimeProfile};
use wf_hierarchy::moments::{compare, MomentTrajectory};
use wf_hierarchy::montecarlo::{run, InitialState, WfConfig};
use wf_hierarchy::simplex::{build_lattice, FaceId};
use wf_hierarchy::spectral::{eigen_rate, omega_shift, ModeCache};
use wf_hierarchy::{MultiIndex, Rational, Scalar, SimplexPolynomial};

type Q = Rational;
type P = SimplexPolynomial<Q>;
type T = TimeProfile<Q>;

const T_GRID: [f64; 3] = [0.1, 1.0, 5.0];

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn q(a: i64, b: i64) -> Q {
    Q::from_ratio(a, b)
}

fn rate(twice: u64) -> DecayRate {
    DecayRate::from_twice(twice)
}

fn profile(atoms: &[(u64, u32, Q)]) -> T {
    let mut p = T::zero();
    for (r, pw, c) in atoms {
        p.add_atom(rate(*r), *pw, c.clone());
    }
    p
}

fn max_on_grid(f: impl Fn(f64) -> f64) -> f64 {
    T_GRID.iter().map(|&t| f(t).abs()).fold(0.0, f64::max)
}

/// Resonant convolutions seen while running criteria 2-4.
#[derive(Default)]
struct ResonanceLog {
    extends: usize,
    hits: usize,
}

impl ResonanceLog {
    fn note<S: Scalar>(&mut self, u: &HierarchicalSolution<S>) {
        self.extends += 1;
        self.hits += u.resonances().len();
    }
}

fn eigen_identity() -> Outcome {
    let cache = ModeCache::<Q>::new();
    let mut count = 0;
    let mut bad = 0;
    for n in 1..=3 {
        for alpha in MultiIndex::all_up_to(n, 6) {
            let mode = cache.get(n, &alpha).unwrap();
            let residual = &apply_forward(mode.polynomial()) + &mode.polynomial().scale(&mode.eigenvalue());
            count += 1;
            bad += usize::from(!residual.is_zero());
        }
    }
    let spots = eigen_rate(1, 0) == rate(2) && eigen_rate(1, 2) == rate(12) && eigen_rate(2, 1) == rate(12);
    outcome(
        bad == 0 && spots,
        format!(
            "{count} modes, {bad} nonzero residuals, rate spot checks {}",
            if spots { "ok" } else { "wrong" }
        ),
    )
}

fn closed_form_n1(log: &mut ResonanceLog) -> Outcome {
    let u = extend(&P::one(1), 1).unwrap();
    log.note(&u);
    let interior = profile(&[(2, 0, q(1, 1))]);
    let vertex = profile(&[(0, 0, q(1, 2)), (2, 0, q(-1, 2))]);
    let mu2 = profile(&[(0, 0, q(1, 2)), (2, 0, q(-1, 6))]);
    let mut exact = u.face(&FaceId::full(1)).unwrap().mass() == interior;
    for v in 0..2 {
        exact &= u.face(&FaceId::vertex(v)).unwrap().mass() == vertex;
    }
    exact &= u.moment(&MultiIndex::zero()).unwrap() == T::constant(q(1, 1));
    exact &= u.moment(&MultiIndex::from_dense(&[2])).unwrap() == mu2;

    let ud = extend(&SimplexPolynomial::<f64>::one(1), 1).unwrap();
    log.note(&ud);
    let mut err = 0.0f64;
    err = err.max(max_on_grid(|t| {
        ud.density(&FaceId::full(1), &[0.4], t).unwrap() - (-t).exp()
    }));
    for v in 0..2 {
        err = err.max(max_on_grid(|t| {
            ud.face(&FaceId::vertex(v)).unwrap().mass().eval(t) - (1.0 - (-t).exp()) / 2.0
        }));
    }
    err = err.max(max_on_grid(|t| ud.moment_at(&MultiIndex::zero(), t).unwrap() - 1.0));
    err = err.max(max_on_grid(|t| {
        ud.moment_at(&MultiIndex::from_dense(&[2]), t).unwrap() - (0.5 - (-t).exp() / 6.0)
    }));
    outcome(
        exact && err <= 1e-12,
        format!("rational exact={exact}, double max error {err:e}"),
    )
}

fn closed_form_n2(log: &mut ResonanceLog) -> Outcome {
    let u = extend(&P::one(2), 2).unwrap();
    log.note(&u);
    let lattice = build_lattice(2).unwrap();
    let edge = profile(&[(2, 0, q(1, 4)), (6, 0, q(-1, 4))]);
    let vertex = profile(&[(0, 0, q(1, 6)), (2, 0, q(-1, 4)), (6, 0, q(1, 12))]);
    let mut exact = u.face(&lattice.top()).unwrap().density_field().eval(0.0) == SimplexPolynomial::one(2);
    exact &= u.face(&lattice.top()).unwrap().mass() == profile(&[(6, 0, q(1, 2))]);
    for e in lattice.faces_of_dim(1) {
        let field = u.face(e).unwrap().density_field();
        let mut expected = wf_hierarchy::hierarchy::SpaceTimeField::zero(1);
        expected.add_product(&edge, &P::one(1));
        exact &= field == expected;
    }
    for v in lattice.faces_of_dim(0) {
        exact &= u.face(v).unwrap().mass() == vertex;
    }
    exact &= u.moment(&MultiIndex::zero()).unwrap() == T::constant(q(1, 2));

    let ud = extend(&SimplexPolynomial::<f64>::one(2), 2).unwrap();
    log.note(&ud);
    let mut err = max_on_grid(|t| ud.density(&lattice.top(), &[0.2, 0.3], t).unwrap() - (-3.0 * t).exp());
    for e in lattice.faces_of_dim(1) {
        for x in [0.0, 0.5, 1.0] {
            err = err.max(max_on_grid(|t| {
                ud.density(e, &[x], t).unwrap() - ((-t).exp() - (-3.0 * t).exp()) / 4.0
            }));
        }
    }
    for v in lattice.faces_of_dim(0) {
        err = err.max(max_on_grid(|t| {
            ud.density(v, &[], t).unwrap() - (0.25 * (1.0 - (-t).exp()) - (1.0 - (-3.0 * t).exp()) / 12.0)
        }));
    }
    err = err.max(max_on_grid(|t| ud.moment_at(&MultiIndex::zero(), t).unwrap() - 0.5));
    outcome(
        exact && err <= 1e-12,
        format!("rational exact={exact}, double max error {err:e}"),
    )
}

fn moment_oracle(log: &mut ResonanceLog) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases = 0;
    let mut exact = true;
    let mut worst_double = 0.0f64;
    for n in 1..=3 {
        for _ in 0..10 {
            let f: P = random_polynomial(&mut rng, n, 3);
            let alphas = MultiIndex::all_up_to(n, 4);

            let u = extend(&f, n).unwrap();
            log.note(&u);
            let traj = MomentTrajectory::from_initial_data(&f, 4).unwrap();
            exact &= compare(&traj, &u, &T_GRID, &alphas).unwrap().all_exact();

            let fd = f.to_f64();
            let ud = extend(&fd, n).unwrap();
            log.note(&ud);
            let trajd = MomentTrajectory::from_initial_data(&fd, 4).unwrap();
            worst_double = worst_double.max(compare(&trajd, &ud, &T_GRID, &alphas).unwrap().max_discrepancy());
            cases += alphas.len();
        }
    }
    outcome(
        exact && worst_double <= 1e-9,
        format!("{cases} (f, α) pairs, rational exact={exact}, double max discrepancy {worst_double:e}"),
    )
}

fn weak_residual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut nonzero = 0;
    for i in 0..50 {
        let n = 1 + i % 2;
        let f: P = random_polynomial(&mut rng, n, 3);
        let phi: P = random_polynomial(&mut rng, n, 4);
        let u = extend(&f, n).unwrap();
        nonzero += usize::from(!u.weak_residual(&phi).unwrap().is_zero());
    }
    outcome(nonzero == 0, format!("50 test functions, {nonzero} nonzero residuals"))
}

fn adjointness_and_facet_flux() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut adj_bad = 0;
    let mut flux_bad = 0;
    for i in 0..100 {
        let n = 1 + i % 3;
        let u: P = random_polynomial(&mut rng, n, 4);
        let phi: P = random_polynomial(&mut rng, n, 4);
        adj_bad += usize::from(!adjointness_residual(&u, &phi).unwrap().is_zero());
        let top = FaceId::full(n);
        for facet in build_lattice(n).unwrap().children(&top) {
            flux_bad += usize::from(!facet_flux_defect(&u, &top, facet).unwrap().is_zero());
        }
    }
    outcome(
        adj_bad == 0 && flux_bad == 0,
        format!("100 pairs, {adj_bad} adjointness and {flux_bad} facet-flux failures"),
    )
}

fn restriction_and_omega_shift() -> Outcome {
    let cache = ModeCache::<Q>::new();
    let mut checks = 0;
    let mut bad = 0;
    for n in 1..=3 {
        let lattice = build_lattice(n).unwrap();
        let top = lattice.top();
        for alpha in MultiIndex::all_up_to(n, 6) {
            let mode = cache.get(n, &alpha).unwrap();
            let c = mode.polynomial();
            let lc = apply_backward(c);
            for face in lattice.faces() {
                let lhs = trace(&lc, &top, face).unwrap();
                let rhs = apply_backward(&trace(c, &top, face).unwrap());
                checks += 1;
                bad += usize::from(lhs != rhs);
            }
            let w = omega_shift(&mode);
            checks += 1;
            bad += usize::from(!(&apply_backward(&w) + &w.scale(&mode.eigenvalue())).is_zero());
        }
    }
    outcome(bad == 0, format!("{checks} identities, {bad} failures"))
}

fn monte_carlo() -> Outcome {
    let e1 = (-1.0f64).exp();
    let e3 = (-3.0f64).exp();
    let base = WfConfig {
        pop_size: 1000,
        n: 1,
        horizon_t: 1.0,
        paths: 10_000,
        seed: 2024,
        initial: InitialState::Density(SimplexPolynomial::one(1)),
        max_moment_order: 2,
    };
    let r1 = run(&base).unwrap();
    let m2 = r1.moment(&[2]).unwrap();
    let target = 0.5 - e1 / 6.0;
    let z_mu2 = (m2.mean - target).abs() / m2.se;

    let r2 = run(&WfConfig {
        n: 2,
        initial: InitialState::Density(SimplexPolynomial::one(2)),
        ..base
    })
    .unwrap();
    let u = extend(&P::one(2), 2).unwrap();
    let closed = [1.5 * (1.0 - e1) - 0.5 * (1.0 - e3), 1.5 * (e1 - e3), e3];
    let mut z_strata = 0.0f64;
    let mut agree = true;
    for (k, expected) in closed.iter().enumerate() {
        let hier = u.stratum_mass(k).eval(1.0) / 0.5;
        agree &= (hier - expected).abs() < 1e-12;
        let s = r2.stratum(k).unwrap();
        z_strata = z_strata.max((s.fraction - hier).abs() / s.se);
    }
    outcome(
        z_mu2 <= 4.0 && z_strata <= 4.0 && agree,
        format!(
            "μ2 {:.5} vs {target:.5} ({z_mu2:.2} SE); strata max {z_strata:.2} SE; hierarchy strata closed form {}",
            m2.mean,
            if agree { "ok" } else { "mismatch" }
        ),
    )
}

fn no_resonance(log: &ResonanceLog) -> Outcome {
    let mut direct = true;
    for twice in [0u64, 2, 6, 12] {
        for p in 0..4u32 {
            let (c, resonant) = T::atom(rate(twice), p, q(5, 1)).convolve(rate(twice));
            direct &= resonant && c == T::atom(rate(twice), p + 1, q(5, p as i64 + 1));
        }
    }
    outcome(
        log.hits == 0 && direct,
        format!(
            "{} resonant convolutions over {} extensions; direct resonant-branch checks {}",
            log.hits,
            log.extends,
            if direct { "ok" } else { "failed" }
        ),
    )
}

fn main() -> ExitCode {
    let mut log = ResonanceLog::default();
    let mut all_ok = true;
    let mut report = |id: u32, name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let ok = o.ok && in_time;
        all_ok &= ok;
        println!(
            "[{}] criterion {id}: {name} - {} ({:.2}s{})",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time budget" }
        );
    };
    report(1, "eigen-identity", Some(Duration::from_secs(60)), &mut eigen_identity);
    report(2, "closed form n=1, f=1", None, &mut || closed_form_n1(&mut log));
    report(3, "closed form n=2, f=1", None, &mut || closed_form_n2(&mut log));
    report(
        4,
        "moment-oracle equivalence",
        Some(Duration::from_secs(300)),
        &mut || moment_oracle(&mut log),
    );
    report(5, "weak-formulation residual", None, &mut weak_residual);
    report(6, "adjointness and facet flux", None, &mut adjointness_and_facet_flux);
    report(7, "restriction and omega-shift", None, &mut restriction_and_omega_shift);
    report(
        8,
        "Monte Carlo concordance",
        Some(Duration::from_secs(120)),
        &mut monte_carlo,
    );
    report(9, "no resonance", None, &mut || no_resonance(&log));
    if all_ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
