//! Pathwise couplings of two urns driven by one shared uniform stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::urn::{new_rng, pow_count, UrnParams};

/// Which ordering of initial conditions a first-tie coupling relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstTieCondition {
    /// `r >= r'` and `x01 >= x01' >= x02' >= x02`.
    LeaderAhead,
    /// `r = r'` and `x01 <= x01' <= x02' <= x02`.
    LeaderBehind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingMode {
    EqualFitnessSorted,
    FirstTie(FirstTieCondition),
}

/// Two trajectories `(x1, x2)` for `t = 0..=horizon`, index-aligned with the
/// uniforms that drove them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub traj_a: Vec<(u64, u64)>,
    pub traj_b: Vec<(u64, u64)>,
    pub mode: CouplingMode,
}

fn tie_times(traj: &[(u64, u64)]) -> Vec<u64> {
    traj.iter()
        .enumerate()
        .filter(|(_, (a, b))| a == b)
        .map(|(t, _)| t as u64)
        .collect()
}

impl CoupledPair {
    pub fn horizon(&self) -> u64 {
        self.traj_a.len() as u64 - 1
    }

    pub fn ties_a(&self) -> Vec<u64> {
        tie_times(&self.traj_a)
    }

    pub fn ties_b(&self) -> Vec<u64> {
        tie_times(&self.traj_b)
    }

    pub fn first_tie_a(&self) -> Option<u64> {
        self.traj_a.iter().position(|(a, b)| a == b).map(|t| t as u64)
    }

    pub fn first_tie_b(&self) -> Option<u64> {
        self.traj_b.iter().position(|(a, b)| a == b).map(|t| t as u64)
    }

    /// Number of time steps at which the ordering guaranteed by the coupling
    /// fails; zero on every path if the construction is correct.
    ///
    /// Sorted equal-fitness pairs must satisfy `gap_a >= gap_b >= 0` and
    /// `N_t(a) <= N_t(b)` at every `t`. First-tie pairs must keep the
    /// componentwise order up to the first tie of `a`, and `b` must tie no
    /// later than `a` whenever `a` ties within the horizon.
    pub fn violations(&self) -> u64 {
        match self.mode {
            CouplingMode::EqualFitnessSorted => {
                let (mut na, mut nb) = (0u64, 0u64);
                let mut bad = 0;
                for (&(a1, a2), &(b1, b2)) in self.traj_a.iter().zip(&self.traj_b) {
                    na += (a1 == a2) as u64;
                    nb += (b1 == b2) as u64;
                    let ordered = a1 <= a2 && b1 <= b2 && a2 - a1 >= b2 - b1;
                    if !ordered || na > nb {
                        bad += 1;
                    }
                }
                bad
            }
            CouplingMode::FirstTie(cond) => {
                let stop = self.first_tie_a().unwrap_or(self.horizon()) as usize;
                let mut bad = self.traj_a[..=stop]
                    .iter()
                    .zip(&self.traj_b[..=stop])
                    .filter(|(&(y1, y2), &(z1, z2))| match cond {
                        FirstTieCondition::LeaderAhead => !(y1 >= z1 && z2 >= y2 && y1 >= y2),
                        FirstTieCondition::LeaderBehind => !(y1 <= z1 && z2 <= y2 && y1 <= y2),
                    })
                    .count() as u64;
                if let Some(ta) = self.first_tie_a() {
                    if !matches!(self.first_tie_b(), Some(tb) if tb <= ta) {
                        bad += 1;
                    }
                }
                bad
            }
        }
    }
}

/// Couples sorted `(min, max)` equal-fitness urns with `beta >= beta'`:
/// the smaller count grows iff `eta_t <= Z1^beta / (Z1^beta + Z2^beta)`.
pub fn coupled_equal_fitness(
    strong: &UrnParams,
    weak: &UrnParams,
    horizon: u64,
    seed: u64,
) -> Result<CoupledPair> {
    if strong.r() != 1.0 || weak.r() != 1.0 {
        return Err(UrnError::InvalidParams(
            "equal-fitness coupling requires r = 1 for both urns".into(),
        ));
    }
    if strong.x0() != weak.x0() {
        return Err(UrnError::InvalidParams(format!(
            "initial conditions differ: {:?} vs {:?}",
            strong.x0(),
            weak.x0()
        )));
    }
    if strong.beta() < weak.beta() {
        return Err(UrnError::InvalidParams(format!(
            "first urn must have the larger beta ({} < {})",
            strong.beta(),
            weak.beta()
        )));
    }
    let (x01, x02) = strong.x0();
    let start = (x01.min(x02), x01.max(x02));
    let step = |(z1, z2): (u64, u64), beta: f64, eta: f64| {
        let w1 = pow_count(z1, beta);
        let grow = z1 < z2 && eta <= w1 / (w1 + pow_count(z2, beta));
        if grow {
            (z1 + 1, z2)
        } else {
            (z1, z2 + 1)
        }
    };
    let mut rng = new_rng(seed);
    let mut traj_a = Vec::with_capacity(horizon as usize + 1);
    let mut traj_b = Vec::with_capacity(horizon as usize + 1);
    let (mut a, mut b) = (start, start);
    traj_a.push(a);
    traj_b.push(b);
    for _ in 0..horizon {
        let eta: f64 = rng.random();
        a = step(a, strong.beta(), eta);
        b = step(b, weak.beta(), eta);
        traj_a.push(a);
        traj_b.push(b);
    }
    Ok(CoupledPair {
        traj_a,
        traj_b,
        mode: CouplingMode::EqualFitnessSorted,
    })
}

/// Classifies a parameter pair for [`coupled_first_tie`].
pub fn first_tie_condition(a: &UrnParams, b: &UrnParams) -> Option<FirstTieCondition> {
    if a.beta() < b.beta() {
        return None;
    }
    let (x1, x2) = a.x0();
    let (y1, y2) = b.x0();
    if a.r() >= b.r() && x1 >= y1 && y1 >= y2 && y2 >= x2 {
        Some(FirstTieCondition::LeaderAhead)
    } else if a.r() == b.r() && x1 <= y1 && y1 <= y2 && y2 <= x2 {
        Some(FirstTieCondition::LeaderBehind)
    } else {
        None
    }
}

/// Couples two unsorted urns; color 1 is drawn iff `eta_t <= p1`.
pub fn coupled_first_tie(
    a: &UrnParams,
    b: &UrnParams,
    horizon: u64,
    seed: u64,
) -> Result<CoupledPair> {
    let cond = first_tie_condition(a, b).ok_or_else(|| {
        UrnError::InvalidParams(format!(
            "pair meets neither ordering condition: {a:?} vs {b:?}"
        ))
    })?;
    let step = |(y1, y2): (u64, u64), p: &UrnParams, eta: f64| {
        let w1 = p.r() * pow_count(y1, p.beta());
        if eta <= w1 / (w1 + pow_count(y2, p.beta())) {
            (y1 + 1, y2)
        } else {
            (y1, y2 + 1)
        }
    };
    let mut rng = new_rng(seed);
    let mut traj_a = Vec::with_capacity(horizon as usize + 1);
    let mut traj_b = Vec::with_capacity(horizon as usize + 1);
    let (mut ya, mut yb) = (a.x0(), b.x0());
    traj_a.push(ya);
    traj_b.push(yb);
    for _ in 0..horizon {
        let eta: f64 = rng.random();
        ya = step(ya, a, eta);
        yb = step(yb, b, eta);
        traj_a.push(ya);
        traj_b.push(yb);
    }
    Ok(CoupledPair {
        traj_a,
        traj_b,
        mode: CouplingMode::FirstTie(cond),
    })
}
