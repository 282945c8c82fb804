//! The one-dimensional hallway: a robot on `N` tiles looking for the larger of
//! two dirt piles at the ends.
//!
//! Action 0 moves left, action 1 moves right; a move goes the wrong way with
//! probability `slip`. Landing on tile 0 from tile 1 by moving left pays 3,
//! landing on tile `N-1` from tile `N-2` by moving right pays 1, every move
//! between two interior tiles costs 1, and the listed moves at the end tiles
//! cost 10. Unlisted transitions pay nothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;

pub const DEFAULT_SLIP: f64 = 0.04;

pub const LARGE_PILE: f64 = 3.0;
pub const SMALL_PILE: f64 = 1.0;
pub const STEP_COST: f64 = -1.0;
pub const LEAVE_PENALTY: f64 = -10.0;

/// Dynamics at the two end tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// End tiles keep the robot with probability one under both actions.
    #[default]
    Absorbing,
    /// Moving into the wall stays put with probability `1 - slip` and slips to
    /// the inward neighbour otherwise; moving inward steps to the neighbour.
    Reflecting,
}

#[derive(Debug, Clone)]
pub struct HallwayBuilder {
    num_states: usize,
    discount: f64,
    slip: f64,
    boundary: Boundary,
}

impl HallwayBuilder {
    pub fn new(num_states: usize, discount: f64) -> Self {
        Self {
            num_states,
            discount,
            slip: DEFAULT_SLIP,
            boundary: Boundary::default(),
        }
    }

    pub fn slip(mut self, slip: f64) -> Self {
        self.slip = slip;
        self
    }

    pub fn boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn build(&self) -> Result<Mdp> {
        let n = self.num_states;
        if n < 4 {
            return Err(Error::invalid("num_states", format!("hallway needs at least 4 tiles, got {n}")));
        }
        if !(0.0..0.5).contains(&self.slip) {
            return Err(Error::invalid("slip", format!("{} is outside [0, 0.5)", self.slip)));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::invalid("discount", format!("{} is outside (0, 1)", self.discount)));
        }

        let at = |s: usize, a: usize, next: usize| (s * 2 + a) * n + next;
        let mut p = vec![0.0; n * 2 * n];
        let mut r = vec![0.0; n * 2 * n];
        let stay = 1.0 - self.slip;
        let last = n - 1;

        for s in 1..last {
            p[at(s, 0, s - 1)] += stay;
            p[at(s, 0, s + 1)] += self.slip;
            p[at(s, 1, s + 1)] += stay;
            p[at(s, 1, s - 1)] += self.slip;
        }
        match self.boundary {
            Boundary::Absorbing => {
                for a in 0..2 {
                    p[at(0, a, 0)] = 1.0;
                    p[at(last, a, last)] = 1.0;
                }
            }
            Boundary::Reflecting => {
                // into the wall
                p[at(0, 0, 0)] += stay;
                p[at(0, 0, 1)] += self.slip;
                p[at(last, 1, last)] += stay;
                p[at(last, 1, last - 1)] += self.slip;
                // away from the wall; a slip bounces off it
                p[at(0, 1, 1)] += stay;
                p[at(0, 1, 0)] += self.slip;
                p[at(last, 0, last - 1)] += stay;
                p[at(last, 0, last)] += self.slip;
            }
        }

        for s in 1..last {
            for a in 0..2 {
                for next in 1..last {
                    r[at(s, a, next)] = STEP_COST;
                }
            }
        }
        r[at(1, 0, 0)] = LARGE_PILE;
        r[at(last - 1, 1, last)] = SMALL_PILE;
        r[at(last, 0, last - 1)] = LEAVE_PENALTY;
        r[at(last, 1, last)] = LEAVE_PENALTY;
        r[at(0, 1, 1)] = LEAVE_PENALTY;
        r[at(0, 0, 0)] = LEAVE_PENALTY;

        Ok(Mdp::new(n, 2, p, r, self.discount)?.with_name(format!("hallway-{n}")))
    }
}

/// Hallway with `num_states` tiles and absorbing end tiles.
pub fn build_hallway(num_states: usize, discount: f64, slip: f64) -> Result<Mdp> {
    HallwayBuilder::new(num_states, discount).slip(slip).build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::validate;

    #[test]
    fn listed_rewards_and_dynamics() {
        let m = build_hallway(6, 0.99, DEFAULT_SLIP).unwrap();
        assert_eq!(m.r(1, 0, 0), 3.0);
        assert_eq!(m.r(4, 1, 5), 1.0);
        assert_eq!(m.r(0, 0, 0), -10.0);
        assert_eq!(m.r(5, 1, 5), -10.0);
        assert_eq!(m.r(5, 0, 4), -10.0);
        assert_eq!(m.r(0, 1, 1), -10.0);
        assert_eq!(m.r(2, 1, 3), -1.0);
        assert_eq!(m.r(1, 1, 0), 0.0);
        assert_eq!(m.p(2, 0, 1), 0.96);
        assert_eq!(m.p(2, 0, 3), 0.04);
        assert_eq!(m.p(4, 1, 5), 0.96);
        assert_eq!(m.absorbing_states(), vec![0, 5]);
        assert_eq!(m.interior_states(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn rows_sum_to_one_for_both_boundaries() {
        for boundary in [Boundary::Absorbing, Boundary::Reflecting] {
            for n in 4..=10 {
                let m = HallwayBuilder::new(n, 0.9).boundary(boundary).build().unwrap();
                assert!(validate(&m).is_valid());
                for s in 0..n {
                    for a in 0..2 {
                        let sum: f64 = m.transition_row(s, a).iter().sum();
                        assert_eq!(sum, 1.0, "{boundary:?} n={n} s={s} a={a}");
                    }
                }
            }
        }
    }

    #[test]
    fn reflecting_edges() {
        let m = HallwayBuilder::new(6, 0.99).boundary(Boundary::Reflecting).build().unwrap();
        assert_eq!(m.p(0, 0, 0), 0.96);
        assert_eq!(m.p(0, 0, 1), 0.04);
        assert_eq!(m.p(5, 1, 5), 0.96);
        assert!(m.absorbing_states().is_empty());
    }

    #[test]
    fn zero_slip_is_deterministic() {
        for boundary in [Boundary::Absorbing, Boundary::Reflecting] {
            let m = HallwayBuilder::new(6, 0.99).slip(0.0).boundary(boundary).build().unwrap();
            for s in 0..6 {
                for a in 0..2 {
                    let row = m.transition_row(s, a);
                    assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
                    assert_eq!(row.iter().filter(|&&p| p == 0.0).count(), 5);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_hallway(3, 0.9, 0.04).is_err());
        assert!(build_hallway(6, 1.0, 0.04).is_err());
        assert!(build_hallway(6, 0.9, 0.5).is_err());
        assert!(build_hallway(6, 0.9, -0.1).is_err());
    }
}
