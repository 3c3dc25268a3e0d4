//! Discrete Wright-Fisher simulator used as a stochastic oracle.
//!
//! A population of `N` individuals carries `n+1` alleles. Each generation is a
//! multinomial resample of the current frequencies; `round(N·t)` generations
//! correspond to diffusion time `t`. Paths run in parallel, each on its own
//! ChaCha stream, and are aggregated in path order so results do not depend on
//! the thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{MultiIndex, SimplexPolynomial};
use crate::simplex::MAX_DIM;

/// Where each path starts.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Frequencies `(x^0, …, x^n)` shared by every path.
    Fixed(Vec<f64>),
    /// Each path draws its start from this density on `Δ_n`.
    Density(SimplexPolynomial<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WfConfig {
    pub pop_size: u64,
    pub n: usize,
    pub horizon_t: f64,
    pub paths: usize,
    pub seed: u64,
    pub initial: InitialState,
    /// Largest `|α|` of the reported moments.
    pub max_moment_order: u32,
}

impl WfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Input(format!(
                "population size {} must be at least 2",
                self.pop_size
            )));
        }
        if !(1..=MAX_DIM).contains(&self.n) {
            return Err(Error::Size(format!("dimension {} outside 1..={MAX_DIM}", self.n)));
        }
        if self.horizon_t.is_nan() || self.horizon_t < 0.0 || !self.horizon_t.is_finite() {
            return Err(Error::Input(format!(
                "horizon {} must be finite and nonnegative",
                self.horizon_t
            )));
        }
        if self.paths == 0 {
            return Err(Error::Input("need at least one path".into()));
        }
        match &self.initial {
            InitialState::Fixed(x) => {
                if x.len() != self.n + 1 {
                    return Err(Error::Shape(format!(
                        "{} frequencies for {} alleles",
                        x.len(),
                        self.n + 1
                    )));
                }
                let sum: f64 = x.iter().sum();
                if x.iter().any(|v| v.is_nan() || *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Input(format!("{x:?} is not a frequency vector")));
                }
            }
            InitialState::Density(f) => {
                if f.n_vars() != self.n {
                    return Err(Error::Shape(format!(
                        "density has {} variables, expected {}",
                        f.n_vars(),
                        self.n
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn generations(&self) -> u64 {
        (self.pop_size as f64 * self.horizon_t).round() as u64
    }
}

/// One generation of multinomial resampling, via conditional binomials.
pub fn step<R: Rng + ?Sized>(counts: &[u64], rng: &mut R) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    let mut out = vec![0u64; counts.len()];
    let mut left_draws = total;
    let mut left_weight = total;
    for (i, &c) in counts.iter().enumerate() {
        if left_draws == 0 || left_weight == 0 {
            break;
        }
        if c == left_weight {
            out[i] = left_draws;
            break;
        }
        if c > 0 {
            let p = c as f64 / left_weight as f64;
            let k = Binomial::new(left_draws, p).expect("probability in [0, 1]").sample(rng);
            out[i] = k;
            left_draws -= k;
        }
        left_weight -= c;
    }
    out
}

/// Rounds `N·x` to integer counts summing to `N` (largest remainder).
pub fn to_counts(freqs: &[f64], pop_size: u64) -> Vec<u64> {
    let scaled: Vec<f64> = freqs.iter().map(|x| x * pop_size as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor().max(0.0) as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..freqs.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(pop_size.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Rejection sampler for a polynomial density against its grid maximum.
#[derive(Clone, Debug)]
pub struct DensitySampler {
    density: SimplexPolynomial<f64>,
    bound: f64,
}

const GRID_RESOLUTION: u32 = 24;
const MAX_REJECTIONS: usize = 1_000_000;

impl DensitySampler {
    pub fn new(density: &SimplexPolynomial<f64>) -> Result<Self> {
        let n = density.n_vars();
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        for alpha in MultiIndex::all_up_to(n, GRID_RESOLUTION) {
            let x: Vec<f64> = alpha
                .to_dense(n)
                .iter()
                .map(|&k| k as f64 / GRID_RESOLUTION as f64)
                .collect();
            let v = density.eval(&x);
            max = max.max(v);
            min = min.min(v);
        }
        if min < 0.0 {
            return Err(Error::Input(format!(
                "density takes the negative value {min} on the sampling grid"
            )));
        }
        if max.is_nan() || max <= 0.0 || !max.is_finite() {
            return Err(Error::Input("density vanishes on the sampling grid".into()));
        }
        Ok(DensitySampler {
            density: density.clone(),
            bound: 1.1 * max,
        })
    }

    /// Barycentric frequencies `(x^0, …, x^n)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let n = self.density.n_vars();
        for _ in 0..MAX_REJECTIONS {
            let e: Vec<f64> = (0..=n).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            let bary: Vec<f64> = e.iter().map(|v| v / s).collect();
            let v = self.density.eval(&bary[1..]);
            if v > self.bound {
                return Err(Error::Input(format!(
                    "density value {v} exceeds the grid bound {}; refine the grid",
                    self.bound
                )));
            }
            if rng.random::<f64>() * self.bound < v {
                return Ok(bary);
            }
        }
        Err(Error::Input("rejection sampler did not accept a point".into()))
    }
}

#[derive(Clone, Debug)]
struct PathOutcome {
    start: Vec<f64>,
    end: Vec<f64>,
    survivors: usize,
    monotone: bool,
}

fn run_path(config: &WfConfig, sampler: Option<&DensitySampler>, path: usize) -> Result<PathOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path as u64);
    let start_freqs = match (&config.initial, sampler) {
        (InitialState::Fixed(x), _) => x.clone(),
        (InitialState::Density(_), Some(s)) => s.sample(&mut rng)?,
        (InitialState::Density(_), None) => unreachable!("sampler built for density starts"),
    };
    let mut counts = to_counts(&start_freqs, config.pop_size);
    let n_pop = config.pop_size as f64;
    let start: Vec<f64> = counts.iter().map(|&c| c as f64 / n_pop).collect();
    let alive = |c: &[u64]| c.iter().filter(|&&v| v > 0).count();
    let mut survivors = alive(&counts);
    let mut monotone = true;
    for _ in 0..config.generations() {
        if survivors == 1 {
            break;
        }
        counts = step(&counts, &mut rng);
        let now = alive(&counts);
        monotone &= now <= survivors;
        survivors = now;
    }
    Ok(PathOutcome {
        start,
        end: counts.iter().map(|&c| c as f64 / n_pop).collect(),
        survivors,
        monotone,
    })
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sample mean and standard error of the mean.
fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut s = CompensatedSum::default();
    let mut s2 = CompensatedSum::default();
    let mut count = 0usize;
    for v in values {
        s.add(v);
        s2.add(v * v);
        count += 1;
    }
    let m = count as f64;
    let mean = s.value() / m;
    let var = if count > 1 {
        ((s2.value() - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / m).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub alpha: Vec<u32>,
    pub mean: f64,
    pub se: f64,
    /// Mean of `x^α` over the starting states.
    pub initial_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumEstimate {
    /// Paths with exactly `dim + 1` surviving alleles.
    pub dim: usize,
    pub fraction: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub allele: usize,
    pub mean: f64,
    pub se: f64,
}

impl DriftEstimate {
    pub fn within(&self, z: f64) -> bool {
        self.mean.abs() <= z * self.se || self.mean == 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub pop_size: u64,
    pub paths: usize,
    pub seed: u64,
    pub horizon_t: f64,
    pub generations: u64,
    pub moments: Vec<MomentEstimate>,
    pub strata: Vec<StratumEstimate>,
    /// Mean change of each allele frequency over the run.
    pub drift: Vec<DriftEstimate>,
    pub absorption_monotone: bool,
}

impl McReport {
    pub fn moment(&self, alpha: &[u32]) -> Option<&MomentEstimate> {
        self.moments.iter().find(|m| m.alpha == alpha)
    }

    pub fn stratum(&self, dim: usize) -> Option<&StratumEstimate> {
        self.strata.iter().find(|s| s.dim == dim)
    }

    pub fn martingale_ok(&self, z: f64) -> bool {
        self.drift.iter().all(|d| d.within(z))
    }

    /// Rows `kind,key,value,se`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,key,value,se\n");
        for m in &self.moments {
            let key = m.alpha.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
            out.push_str(&format!("moment,{key},{},{}\n", m.mean, m.se));
            out.push_str(&format!("initial_moment,{key},{},\n", m.initial_mean));
        }
        for s in &self.strata {
            out.push_str(&format!("stratum,{},{},{}\n", s.dim, s.fraction, s.se));
        }
        for d in &self.drift {
            out.push_str(&format!("drift,{},{},{}\n", d.allele, d.mean, d.se));
        }
        out.push_str(&format!("absorption_monotone,,{},\n", self.absorption_monotone));
        out
    }
}

fn monomial(x: &[f64], alpha: &[u32]) -> f64 {
    alpha.iter().zip(&x[1..]).map(|(&e, &v)| v.powi(e as i32)).product()
}

pub fn run(config: &WfConfig) -> Result<McReport> {
    config.validate()?;
    let sampler = match &config.initial {
        InitialState::Density(f) => Some(DensitySampler::new(f)?),
        InitialState::Fixed(_) => None,
    };
    let outcomes: Vec<PathOutcome> = (0..config.paths)
        .into_par_iter()
        .map(|i| run_path(config, sampler.as_ref(), i))
        .collect::<Result<_>>()?;

    let n = config.n;
    let moments = MultiIndex::all_up_to(n, config.max_moment_order)
        .into_iter()
        .map(|alpha| {
            let a = alpha.to_dense(n);
            let (mean, se) = mean_and_se(outcomes.iter().map(|o| monomial(&o.end, &a)));
            let (initial_mean, _) = mean_and_se(outcomes.iter().map(|o| monomial(&o.start, &a)));
            MomentEstimate {
                alpha: a,
                mean,
                se,
                initial_mean,
            }
        })
        .collect();
    let paths = config.paths as f64;
    let strata = (0..=n)
        .map(|dim| {
            let hits = outcomes.iter().filter(|o| o.survivors == dim + 1).count() as f64;
            let p = hits / paths;
            StratumEstimate {
                dim,
                fraction: p,
                se: (p * (1.0 - p) / paths).sqrt(),
            }
        })
        .collect();
    let drift = (0..=n)
        .map(|allele| {
            let (mean, se) = mean_and_se(outcomes.iter().map(|o| o.end[allele] - o.start[allele]));
            DriftEstimate { allele, mean, se }
        })
        .collect();
    Ok(McReport {
        n,
        pop_size: config.pop_size,
        paths: config.paths,
        seed: config.seed,
        horizon_t: config.horizon_t,
        generations: config.generations(),
        moments,
        strata,
        drift,
        absorption_monotone: outcomes.iter().all(|o| o.monotone),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn uniform(n: usize) -> InitialState {
        InitialState::Density(SimplexPolynomial::one(n))
    }

    fn config(n: usize, pop: u64, t: f64, paths: usize) -> WfConfig {
        WfConfig {
            pop_size: pop,
            n,
            horizon_t: t,
            paths,
            seed: 7,
            initial: uniform(n),
            max_moment_order: 2,
        }
    }

    #[test]
    fn lost_alleles_stay_lost() {
        let mut r = rng(1);
        let mut counts = vec![40, 0, 60, 0];
        for _ in 0..500 {
            counts = step(&counts, &mut r);
            assert_eq!(counts[1], 0);
            assert_eq!(counts[3], 0);
            assert_eq!(counts.iter().sum::<u64>(), 100);
        }
    }

    #[test]
    fn monomorphic_is_fixed() {
        let mut r = rng(2);
        for counts in [vec![50, 0, 0], vec![0, 50, 0], vec![0, 0, 50]] {
            assert_eq!(step(&counts, &mut r), counts);
        }
    }

    #[test]
    fn one_step_is_unbiased() {
        let mut r = rng(3);
        let counts = [300u64, 500, 200];
        let reps = 20_000;
        for (i, &c) in counts.iter().enumerate() {
            let p = c as f64 / 1000.0;
            let draws: Vec<f64> = (0..reps).map(|_| step(&counts, &mut r)[i] as f64 / 1000.0).collect();
            let (mean, se) = mean_and_se(draws.into_iter());
            assert!((mean - p).abs() < 4.0 * se, "allele {i}: {mean} vs {p} ± {se}");
        }
    }

    #[test]
    fn rounding_preserves_population() {
        assert_eq!(to_counts(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(to_counts(&[0.2, 0.3, 0.5], 10), vec![2, 3, 5]);
        assert_eq!(to_counts(&[1.0 / 3.0; 3], 100).iter().sum::<u64>(), 100);
        assert_eq!(to_counts(&[0.0, 1.0], 7), vec![0, 7]);
    }

    #[test]
    fn same_seed_same_report() {
        let c = config(2, 100, 0.5, 200);
        assert_eq!(run(&c).unwrap(), run(&c).unwrap());
        let other = WfConfig { seed: 8, ..c.clone() };
        assert_ne!(run(&c).unwrap(), run(&other).unwrap());
    }

    #[test]
    fn zero_horizon_reports_start() {
        let r = run(&config(2, 500, 0.0, 300)).unwrap();
        assert_eq!(r.generations, 0);
        for m in &r.moments {
            assert_eq!(m.mean, m.initial_mean);
        }
        assert!(r.drift.iter().all(|d| d.mean == 0.0));
    }

    #[test]
    fn report_invariants() {
        let r = run(&config(2, 200, 1.0, 500)).unwrap();
        assert!(r.absorption_monotone);
        let total: f64 = r.strata.iter().map(|s| s.fraction).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(r.martingale_ok(4.0));
        assert_eq!(r.moment(&[0, 0]).unwrap().mean, 1.0);
        assert!(r.to_csv().starts_with("kind,key,value,se\n"));
    }

    #[test]
    fn fixed_start_first_moment_is_preserved() {
        let c = WfConfig {
            initial: InitialState::Fixed(vec![0.2, 0.5, 0.3]),
            ..config(2, 500, 0.5, 2000)
        };
        let r = run(&c).unwrap();
        let m = r.moment(&[1, 0]).unwrap();
        assert_eq!(m.initial_mean, 0.5);
        assert!((m.mean - 0.5).abs() < 4.0 * m.se);
    }

    #[test]
    fn rejects_bad_configs() {
        let ok = config(1, 10, 1.0, 1);
        assert!(WfConfig {
            pop_size: 1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(WfConfig { paths: 0, ..ok.clone() }.validate().is_err());
        assert!(WfConfig {
            horizon_t: -1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(WfConfig {
            initial: InitialState::Fixed(vec![0.5, 0.6]),
            ..ok.clone()
        }
        .validate()
        .is_err());
        let neg = SimplexPolynomial::parse("x1 - 1/2", 1).unwrap();
        assert!(matches!(
            run(&WfConfig {
                initial: InitialState::Density(neg),
                ..ok
            }),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn density_sampler_reproduces_first_moment() {
        let f = SimplexPolynomial::parse("2*x1", 1).unwrap();
        let s = DensitySampler::new(&f).unwrap();
        let mut r = rng(5);
        let (mean, se) = mean_and_se((0..20_000).map(|_| s.sample(&mut r).unwrap()[1]));
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * se);
    }
}
