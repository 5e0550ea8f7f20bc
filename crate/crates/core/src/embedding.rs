//! Exponential embedding: each color adds balls at the rings of its own clock,
//! draw `j` being exponential with rate `f_k j^beta` (`f1 = r`, `f2 = 1`).

use rand::Rng;
use rand_distr::Exp1;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::seed::derive_seed;
use crate::urn::{new_rng, pow_count, Color, TieSummary, UrnParams, UrnState};

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Clock of one color: draw `j` is exponential with mean `1 / (fitness * j^beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockStream {
    pub color: Color,
    pub start_index: u64,
    pub fitness: f64,
    pub beta: f64,
}

impl ClockStream {
    pub fn new(color: Color, params: &UrnParams) -> Self {
        let start_index = match color {
            Color::One => params.x0().0,
            Color::Two => params.x0().1,
        };
        ClockStream {
            color,
            start_index,
            fitness: params.fitness(color),
            beta: params.beta(),
        }
    }

    pub fn rate(&self, j: u64) -> f64 {
        self.fitness * pow_count(j, self.beta)
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, j: u64, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / self.rate(j)
    }

    /// `S(x, y)`, the sum of draws `x..y`; zero when `y <= x`.
    pub fn partial_sum<R: Rng + ?Sized>(&self, x: u64, y: u64, rng: &mut R) -> f64 {
        let mut acc = Kahan::default();
        for j in x..y {
            acc.add(self.draw(j, rng));
        }
        acc.value()
    }

    /// `E[S(x, y)]`.
    pub fn mean_partial_sum(&self, x: u64, y: u64) -> f64 {
        let mut acc = Kahan::default();
        for j in x..y {
            acc.add(1.0 / self.rate(j));
        }
        acc.value()
    }
}

/// One draw of `S1(x01, y1) - S2(x02, y2)` together with the next clock of
/// each color, `xi_{1,y1}` and `xi_{2,y2}`, from the same realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSample {
    pub value: f64,
    pub x0: (u64, u64),
    pub targets: (u64, u64),
    pub boundary: (f64, f64),
}

impl DeltaSample {
    /// The event under which the embedded urn passes through `targets`:
    /// `-xi_{1,y1} < Delta < xi_{2,y2}`.
    pub fn hits_target(&self) -> bool {
        -self.boundary.0 < self.value && self.value < self.boundary.1
    }
}

fn check_range(x: u64, y: u64, beta: f64) -> Result<()> {
    if y > x && x == 0 && beta > 0.0 {
        return Err(UrnError::InvalidArgument(
            "clock index 0 has zero rate for beta > 0".into(),
        ));
    }
    if y < x {
        return Err(UrnError::InvalidArgument(format!(
            "partial sum range is reversed: x = {x}, y = {y}"
        )));
    }
    Ok(())
}

pub fn sample_partial_sum(color: Color, x: u64, y: u64, params: &UrnParams, seed: u64) -> Result<f64> {
    check_range(x, y, params.beta())?;
    let clock = ClockStream::new(color, params);
    Ok(clock.partial_sum(x, y, &mut new_rng(seed)))
}

pub fn sample_delta(params: &UrnParams, y1: u64, y2: u64, seed: u64) -> Result<DeltaSample> {
    let (x01, x02) = params.x0();
    if y1 < x01 || y2 < x02 {
        return Err(UrnError::InvalidArgument(format!(
            "targets ({y1}, {y2}) lie below the initial counts {:?}",
            params.x0()
        )));
    }
    if params.beta() > 0.0 && (y1 == 0 || y2 == 0) {
        return Err(UrnError::InvalidArgument("target count 0 has no clock".into()));
    }
    let mut rng = new_rng(seed);
    let c1 = ClockStream::new(Color::One, params);
    let c2 = ClockStream::new(Color::Two, params);
    let s1 = c1.partial_sum(x01, y1, &mut rng);
    let s2 = c2.partial_sum(x02, y2, &mut rng);
    let boundary = (c1.draw(y1, &mut rng), c2.draw(y2, &mut rng));
    Ok(DeltaSample {
        value: s1 - s2,
        x0: params.x0(),
        targets: (y1, y2),
        boundary,
    })
}

/// Races the two clocks for `horizon` arrivals. Simultaneous rings, which
/// have probability zero, go to color 1.
pub fn embedded_trajectory(params: &UrnParams, horizon: u64, seed: u64) -> TieSummary {
    let mut rng: Xoshiro256PlusPlus = new_rng(seed);
    let c1 = ClockStream::new(Color::One, params);
    let c2 = ClockStream::new(Color::Two, params);
    let (mut x1, mut x2) = params.x0();
    let mut next1 = Kahan::default();
    let mut next2 = Kahan::default();
    next1.add(c1.draw(x1, &mut rng));
    next2.add(c2.draw(x2, &mut rng));
    let mut ties = Vec::new();
    if x1 == x2 {
        ties.push(0);
    }
    for t in 1..=horizon {
        if next1.value() <= next2.value() {
            x1 += 1;
            next1.add(c1.draw(x1, &mut rng));
        } else {
            x2 += 1;
            next2.add(c2.draw(x2, &mut rng));
        }
        if x1 == x2 {
            ties.push(t);
        }
    }
    TieSummary::from_ties(ties, UrnState { x1, x2, t: horizon }, seed)
}

/// Batch counterpart of [`embedded_trajectory`] with the seeding of
/// [`crate::simulate_batch`].
pub fn embedded_batch(
    params: &UrnParams,
    horizon: u64,
    n_runs: u64,
    master_seed: u64,
) -> Result<Vec<TieSummary>> {
    if n_runs == 0 {
        return Err(UrnError::InvalidArgument("n_runs must be at least 1".into()));
    }
    Ok((0..n_runs)
        .into_par_iter()
        .map(|i| embedded_trajectory(params, horizon, derive_seed(master_seed, i)))
        .collect())
}
