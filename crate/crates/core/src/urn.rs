//! The two-color urn: parameters, the one-step kernel and the sequential sampler.

use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::seed::derive_seed;

/// Counts below this are served from weight tables (64 MiB each).
const TABLE_LIMIT: u64 = 1 << 23;

/// A final state within this many diffusion widths of a tie is treated as still contested.
pub const CONTESTED_RHO: f64 = 3.0;

/// Feedback strength, fitness ratio and initial ball counts of a `(beta, r, x0)` urn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct UrnParams {
    beta: f64,
    r: f64,
    x0: (u64, u64),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    beta: f64,
    r: f64,
    x0: [u64; 2],
}

impl TryFrom<RawParams> for UrnParams {
    type Error = UrnError;

    fn try_from(raw: RawParams) -> Result<Self> {
        UrnParams::new(raw.beta, raw.r, (raw.x0[0], raw.x0[1]))
    }
}

impl From<UrnParams> for RawParams {
    fn from(p: UrnParams) -> Self {
        RawParams {
            beta: p.beta,
            r: p.r,
            x0: [p.x0.0, p.x0.1],
        }
    }
}

impl UrnParams {
    pub fn new(beta: f64, r: f64, x0: (u64, u64)) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(UrnError::InvalidParams(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        if !r.is_finite() || r < 1.0 {
            return Err(UrnError::InvalidParams(format!(
                "fitness ratio r must be finite and at least 1, got {r}"
            )));
        }
        if beta > 0.0 && (x0.0 == 0 || x0.1 == 0) {
            return Err(UrnError::InvalidParams(format!(
                "beta > 0 requires both initial counts to be positive, got {x0:?}"
            )));
        }
        Ok(UrnParams { beta, r, x0 })
    }

    /// Parameters from two fitness values with `f1 >= f2`.
    pub fn from_fitness(beta: f64, f1: f64, f2: f64, x0: (u64, u64)) -> Result<Self> {
        if !(f1 > 0.0 && f2 > 0.0) {
            return Err(UrnError::InvalidParams(
                "fitness values must be positive".into(),
            ));
        }
        Self::new(beta, f1 / f2, x0)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn x0(&self) -> (u64, u64) {
        self.x0
    }

    pub fn total0(&self) -> u64 {
        self.x0.0 + self.x0.1
    }

    /// Fitness of `color` under the normalization `f1 = r`, `f2 = 1`.
    pub fn fitness(&self, color: Color) -> f64 {
        match color {
            Color::One => self.r,
            Color::Two => 1.0,
        }
    }

    pub fn initial_state(&self) -> UrnState {
        UrnState {
            x1: self.x0.0,
            x2: self.x0.1,
            t: 0,
        }
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(beta, self.r, self.x0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UrnState {
    pub x1: u64,
    pub x2: u64,
    pub t: u64,
}

impl UrnState {
    pub fn is_tie(&self) -> bool {
        self.x1 == self.x2
    }

    pub fn leader(&self) -> Leader {
        use std::cmp::Ordering::*;
        match self.x1.cmp(&self.x2) {
            Greater => Leader::One,
            Less => Leader::Two,
            Equal => Leader::Tied,
        }
    }

    /// Normalized lead `(x1 - x2) / sqrt(x1 + x2)`; zero for the empty urn.
    pub fn rho(&self) -> f64 {
        let total = (self.x1 + self.x2) as f64;
        if total == 0.0 {
            0.0
        } else {
            (self.x1 as f64 - self.x2 as f64) / total.sqrt()
        }
    }

    fn check(&self, params: &UrnParams) -> Result<()> {
        let (a, b) = params.x0;
        let invalid = |reason: &str| UrnError::InvalidState {
            state: (self.x1, self.x2),
            reason: reason.to_string(),
        };
        if self.x1 < a || self.x2 < b {
            return Err(invalid("counts below the initial condition"));
        }
        if self.x1 + self.x2 != a + b + self.t {
            return Err(invalid("ball count does not match elapsed time"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leader {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    Tied,
}

/// Per-run record of the tie process, observed up to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieSummary {
    pub tie_times: Vec<u64>,
    pub last_tie: Option<u64>,
    pub intensity_observed: u64,
    /// The final state is within [`CONTESTED_RHO`] diffusion widths of a tie,
    /// so the true duration may exceed `last_tie`.
    pub censored: bool,
    pub final_state: UrnState,
    pub leader: Leader,
    pub seed: u64,
}

impl TieSummary {
    pub fn horizon(&self) -> u64 {
        self.final_state.t
    }

    /// Time of the `n`-th tie (1-based), if observed.
    pub fn nth_tie(&self, n: usize) -> Option<u64> {
        n.checked_sub(1).and_then(|i| self.tie_times.get(i).copied())
    }

    pub(crate) fn from_ties(tie_times: Vec<u64>, final_state: UrnState, seed: u64) -> Self {
        TieSummary {
            last_tie: tie_times.last().copied(),
            intensity_observed: tie_times.len() as u64,
            censored: final_state.rho().abs() < CONTESTED_RHO,
            leader: final_state.leader(),
            final_state,
            tie_times,
            seed,
        }
    }
}

/// Probabilities `(p1, p2)` that the next ball has color 1 or 2.
pub fn transition_probabilities(state: &UrnState, params: &UrnParams) -> Result<(f64, f64)> {
    state.check(params)?;
    if params.beta > 0.0 && (state.x1 == 0 || state.x2 == 0) {
        return Err(UrnError::InvalidState {
            state: (state.x1, state.x2),
            reason: "zero count has undefined weight for beta > 0".into(),
        });
    }
    let p1 = color_one_probability(state.x1, state.x2, params.beta, params.r);
    Ok((p1, 1.0 - p1))
}

#[inline]
pub(crate) fn color_one_probability(x1: u64, x2: u64, beta: f64, r: f64) -> f64 {
    let w1 = r * pow_count(x1, beta);
    let w2 = pow_count(x2, beta);
    w1 / (w1 + w2)
}

#[inline]
pub(crate) fn pow_count(x: u64, beta: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else if beta == 1.0 {
        x as f64
    } else if beta == 2.0 {
        let x = x as f64;
        x * x
    } else {
        (x as f64).powf(beta)
    }
}

/// Cached color weights `r x^beta` and `x^beta` for the counts a run can reach.
pub(crate) enum Weights {
    Unit(f64),
    Linear(f64),
    Square(f64),
    Table { w1: Vec<f64>, w2: Vec<f64> },
    Pow(f64, f64),
}

impl Weights {
    pub(crate) fn new(beta: f64, r: f64, max_count: u64) -> Self {
        if beta == 0.0 {
            Weights::Unit(r)
        } else if beta == 1.0 {
            Weights::Linear(r)
        } else if beta == 2.0 {
            Weights::Square(r)
        } else if max_count < TABLE_LIMIT {
            let w2: Vec<f64> = (0..=max_count).map(|x| (x as f64).powf(beta)).collect();
            let w1 = w2.iter().map(|w| r * w).collect();
            Weights::Table { w1, w2 }
        } else {
            Weights::Pow(beta, r)
        }
    }

    pub(crate) fn for_run(params: &UrnParams, horizon: u64) -> Self {
        let max_count = params.x0.0.max(params.x0.1) + horizon;
        Self::new(params.beta, params.r, max_count)
    }
}

trait WeightFn {
    fn w1(&self, x: u64) -> f64;
    fn w2(&self, x: u64) -> f64;
}

struct UnitW(f64);
struct LinearW(f64);
struct SquareW(f64);
struct TableW<'a>(&'a [f64], &'a [f64]);
struct PowW(f64, f64);

impl WeightFn for UnitW {
    #[inline(always)]
    fn w1(&self, _x: u64) -> f64 {
        self.0
    }
    #[inline(always)]
    fn w2(&self, _x: u64) -> f64 {
        1.0
    }
}
impl WeightFn for LinearW {
    #[inline(always)]
    fn w1(&self, x: u64) -> f64 {
        self.0 * x as f64
    }
    #[inline(always)]
    fn w2(&self, x: u64) -> f64 {
        x as f64
    }
}
impl WeightFn for SquareW {
    #[inline(always)]
    fn w1(&self, x: u64) -> f64 {
        let x = x as f64;
        self.0 * (x * x)
    }
    #[inline(always)]
    fn w2(&self, x: u64) -> f64 {
        let x = x as f64;
        x * x
    }
}
impl WeightFn for TableW<'_> {
    #[inline(always)]
    fn w1(&self, x: u64) -> f64 {
        self.0[x as usize]
    }
    #[inline(always)]
    fn w2(&self, x: u64) -> f64 {
        self.1[x as usize]
    }
}
impl WeightFn for PowW {
    #[inline(always)]
    fn w1(&self, x: u64) -> f64 {
        self.1 * (x as f64).powf(self.0)
    }
    #[inline(always)]
    fn w2(&self, x: u64) -> f64 {
        (x as f64).powf(self.0)
    }
}

pub(crate) fn new_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Runs the chain for `horizon` steps, one uniform per step.
pub fn simulate(params: &UrnParams, horizon: u64, seed: u64) -> TieSummary {
    let weights = Weights::for_run(params, horizon);
    run_with(&weights, params, horizon, seed)
}

pub(crate) fn run_with(weights: &Weights, params: &UrnParams, horizon: u64, seed: u64) -> TieSummary {
    match weights {
        Weights::Unit(r) => run_loop(&UnitW(*r), params, horizon, seed),
        Weights::Linear(r) => run_loop(&LinearW(*r), params, horizon, seed),
        Weights::Square(r) => run_loop(&SquareW(*r), params, horizon, seed),
        Weights::Table { w1, w2 } => run_loop(&TableW(w1, w2), params, horizon, seed),
        Weights::Pow(b, r) => run_loop(&PowW(*b, *r), params, horizon, seed),
    }
}

fn run_loop<W: WeightFn>(w: &W, params: &UrnParams, horizon: u64, seed: u64) -> TieSummary {
    let mut rng = new_rng(seed);
    let (mut x1, mut x2) = params.x0;
    let mut ties = Vec::new();
    if x1 == x2 {
        ties.push(0);
    }
    for t in 1..=horizon {
        let u: f64 = rng.random();
        // u < w1 / (w1 + w2), rearranged to keep the division off the critical path
        if (1.0 - u) * w.w1(x1) > u * w.w2(x2) {
            x1 += 1;
        } else {
            x2 += 1;
        }
        if x1 == x2 {
            ties.push(t);
        }
    }
    TieSummary::from_ties(ties, UrnState { x1, x2, t: horizon }, seed)
}

/// Runs that advance together in one loop; their dependency chains overlap.
const LANES: usize = 8;

fn run_lanes<W: WeightFn>(
    w: &W,
    params: &UrnParams,
    horizon: u64,
    seeds: [u64; LANES],
) -> [TieSummary; LANES] {
    let mut rng = seeds.map(new_rng);
    let mut x1 = [params.x0.0; LANES];
    let mut x2 = [params.x0.1; LANES];
    let mut ties: [Vec<u64>; LANES] = Default::default();
    if params.x0.0 == params.x0.1 {
        for v in ties.iter_mut() {
            v.push(0);
        }
    }
    for t in 1..=horizon {
        for k in 0..LANES {
            let u: f64 = rng[k].random();
            let pick = ((1.0 - u) * w.w1(x1[k]) > u * w.w2(x2[k])) as u64;
            x1[k] += pick;
            x2[k] += 1 - pick;
            if x1[k] == x2[k] {
                ties[k].push(t);
            }
        }
    }
    let mut ties = ties.into_iter();
    std::array::from_fn(|k| {
        let state = UrnState {
            x1: x1[k],
            x2: x2[k],
            t: horizon,
        };
        TieSummary::from_ties(ties.next().unwrap(), state, seeds[k])
    })
}

fn run_group(weights: &Weights, params: &UrnParams, horizon: u64, seeds: &[u64]) -> Vec<TieSummary> {
    if let Ok(lanes) = <[u64; LANES]>::try_from(seeds) {
        let out = match weights {
            Weights::Unit(r) => run_lanes(&UnitW(*r), params, horizon, lanes),
            Weights::Linear(r) => run_lanes(&LinearW(*r), params, horizon, lanes),
            Weights::Square(r) => run_lanes(&SquareW(*r), params, horizon, lanes),
            Weights::Table { w1, w2 } => run_lanes(&TableW(w1, w2), params, horizon, lanes),
            Weights::Pow(b, r) => run_lanes(&PowW(*b, *r), params, horizon, lanes),
        };
        out.into()
    } else {
        seeds
            .iter()
            .map(|&s| run_with(weights, params, horizon, s))
            .collect()
    }
}

/// Independent runs; run `i` uses the seed `derive_seed(master_seed, i)` and the
/// output is ordered by run index.
pub fn simulate_batch(
    params: &UrnParams,
    horizon: u64,
    n_runs: u64,
    master_seed: u64,
) -> Result<Vec<TieSummary>> {
    if n_runs == 0 {
        return Err(UrnError::InvalidArgument("n_runs must be at least 1".into()));
    }
    Ok(simulate_range(params, horizon, 0..n_runs, master_seed))
}

/// Runs with indices in `runs`, seeded as in [`simulate_batch`]; splitting a
/// batch into consecutive ranges reproduces it exactly.
pub fn simulate_range(params: &UrnParams, horizon: u64, runs: Range<u64>, master_seed: u64) -> Vec<TieSummary> {
    let weights = Weights::for_run(params, horizon);
    let seeds: Vec<u64> = runs.map(|i| derive_seed(master_seed, i)).collect();
    let groups: Vec<Vec<TieSummary>> = seeds
        .par_chunks(LANES)
        .map(|chunk| run_group(&weights, params, horizon, chunk))
        .collect();
    groups.into_iter().flatten().collect()
}
