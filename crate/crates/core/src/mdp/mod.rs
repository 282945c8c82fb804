//! Tabular Markov decision processes.
//!
//! An [`Mdp`] stores dense transition and reward tensors indexed as
//! `[s][a][s']` in row-major order. State-action pairs are flattened to
//! `s * |A| + a`; that flat id is also the variable id of the matching policy
//! bit in every polynomial built from the model.

mod hallway;
mod io;

use std::fmt;

pub use hallway::{
    build_hallway, Boundary, HallwayBuilder, DEFAULT_SLIP, LARGE_PILE, LEAVE_PENALTY, SMALL_PILE, STEP_COST,
};
pub use io::{load_mdp, save_mdp, MdpDocument};

use crate::error::{Error, Result};

/// Row sums of the transition tensor must be within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    name: Option<String>,
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    discount: f64,
}

impl Mdp {
    /// Builds a model and rejects it unless [`validate`] comes back empty.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let mdp = Self::from_raw(num_states, num_actions, transition, reward, discount)?;
        let report = validate(&mdp);
        if report.is_valid() {
            Ok(mdp)
        } else {
            Err(Error::Validation(report.violations))
        }
    }

    /// Builds a model checking only tensor shapes. The result may violate the
    /// probability and discount invariants; use [`validate`] to inspect it.
    pub fn from_raw(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::invalid("num_states", "must be positive"));
        }
        if num_actions == 0 {
            return Err(Error::invalid("num_actions", "must be positive"));
        }
        let len = num_states * num_actions * num_states;
        if transition.len() != len {
            return Err(Error::invalid(
                "transition",
                format!("expected {len} entries, got {}", transition.len()),
            ));
        }
        if reward.len() != len {
            return Err(Error::invalid(
                "reward",
                format!("expected {len} entries, got {}", reward.len()),
            ));
        }
        Ok(Self {
            name: None,
            num_states,
            num_actions,
            transition,
            reward,
            discount,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// |S×A|, the number of policy variables.
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Returns a copy with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Mdp::new(
            self.num_states,
            self.num_actions,
            self.transition.clone(),
            self.reward.clone(),
            discount,
        )
        .map(|m| Self {
            name: self.name.clone(),
            ..m
        })
    }

    #[inline]
    fn offset(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.num_actions + a) * self.num_states + next
    }

    #[inline]
    pub fn p(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.offset(s, a, next)]
    }

    #[inline]
    pub fn r(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[self.offset(s, a, next)]
    }

    /// Transition row `P[s][a][·]`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.offset(s, a, 0);
        &self.transition[start..start + self.num_states]
    }

    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let start = self.offset(s, a, 0);
        &self.reward[start..start + self.num_states]
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    /// Immediate expected reward `Σ_{s'} P[s][a][s'] R[s][a][s']`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.transition_row(s, a)
            .iter()
            .zip(self.reward_row(s, a))
            .map(|(p, r)| p * r)
            .sum()
    }

    /// Largest |R| over all triples.
    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// States that return to themselves with probability one under every action.
    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.num_states)
            .filter(|&s| (0..self.num_actions).all(|a| self.p(s, a, s) == 1.0))
            .collect()
    }

    /// States whose policy bits take part in optimal-policy comparisons: every
    /// non-absorbing state. For the hallway these are tiles `1..|S|-1`.
    pub fn interior_states(&self) -> Vec<usize> {
        let absorbing = self.absorbing_states();
        (0..self.num_states)
            .filter(|s| !absorbing.contains(s))
            .collect()
    }

    pub fn index(&self, state: usize, action: usize) -> Result<StateActionIndex> {
        StateActionIndex::new(state, action, self.num_states, self.num_actions)
    }

    pub fn unflatten(&self, flat_id: usize) -> Result<StateActionIndex> {
        StateActionIndex::from_flat(flat_id, self.num_states, self.num_actions)
    }
}

/// A state-action pair and its flat id `state * |A| + action`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateActionIndex {
    pub state: usize,
    pub action: usize,
    pub flat_id: usize,
}

impl StateActionIndex {
    pub fn new(state: usize, action: usize, num_states: usize, num_actions: usize) -> Result<Self> {
        if state >= num_states || action >= num_actions {
            return Err(Error::IndexOutOfRange(format!(
                "(s={state}, a={action}) with |S|={num_states}, |A|={num_actions}"
            )));
        }
        Ok(Self {
            state,
            action,
            flat_id: state * num_actions + action,
        })
    }

    pub fn from_flat(flat_id: usize, num_states: usize, num_actions: usize) -> Result<Self> {
        if flat_id >= num_states * num_actions {
            return Err(Error::IndexOutOfRange(format!(
                "flat id {flat_id} with |S×A|={}",
                num_states * num_actions
            )));
        }
        Ok(Self {
            state: flat_id / num_actions,
            action: flat_id % num_actions,
            flat_id,
        })
    }
}

/// Binary policy indicators `π_{sa}` indexed by flat id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolicyAssignment {
    bits: Vec<bool>,
    num_actions: usize,
}

impl PolicyAssignment {
    pub fn from_bits(bits: Vec<bool>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || !bits.len().is_multiple_of(num_actions) {
            return Err(Error::invalid(
                "bits",
                format!("length {} is not a multiple of |A|={num_actions}", bits.len()),
            ));
        }
        Ok(Self { bits, num_actions })
    }

    /// The deterministic policy choosing `actions[s]` in state `s`.
    pub fn from_actions(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut bits = vec![false; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::IndexOutOfRange(format!(
                    "action {a} in state {s} with |A|={num_actions}"
                )));
            }
            bits[s * num_actions + a] = true;
        }
        Ok(Self { bits, num_actions })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn num_states(&self) -> usize {
        self.bits.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, state: usize, action: usize) -> bool {
        self.bits[state * self.num_actions + action]
    }

    fn state_bits(&self, state: usize) -> &[bool] {
        &self.bits[state * self.num_actions..(state + 1) * self.num_actions]
    }

    /// Number of actions selected in `state`.
    pub fn selected(&self, state: usize) -> usize {
        self.state_bits(state).iter().filter(|&&b| b).count()
    }

    /// Every state selects exactly one action.
    pub fn is_feasible(&self) -> bool {
        (0..self.num_states()).all(|s| self.selected(s) == 1)
    }

    /// Errors with the first state that does not select exactly one action.
    pub fn check_feasible(&self) -> Result<()> {
        match (0..self.num_states()).find(|&s| self.selected(s) != 1) {
            None => Ok(()),
            Some(state) => Err(Error::InfeasiblePolicy {
                state,
                selected: self.selected(state),
            }),
        }
    }

    /// `Σ_s (Σ_a π_{sa} - 1)²`, zero iff feasible.
    pub fn constraint_violation(&self) -> usize {
        (0..self.num_states())
            .map(|s| {
                let d = self.selected(s) as isize - 1;
                (d * d) as usize
            })
            .sum()
    }

    /// Action chosen in `state`, if exactly one is selected.
    pub fn action(&self, state: usize) -> Option<usize> {
        let bits = self.state_bits(state);
        let mut chosen = None;
        for (a, &b) in bits.iter().enumerate() {
            if b {
                if chosen.is_some() {
                    return None;
                }
                chosen = Some(a);
            }
        }
        chosen
    }

    /// Per-state actions of a feasible policy.
    pub fn actions(&self) -> Option<Vec<usize>> {
        (0..self.num_states()).map(|s| self.action(s)).collect()
    }

    /// True when both policies select the same bits in every listed state.
    pub fn agrees_on(&self, other: &PolicyAssignment, states: &[usize]) -> bool {
        self.num_actions == other.num_actions
            && states
                .iter()
                .all(|&s| s < self.num_states() && s < other.num_states() && self.state_bits(s) == other.state_bits(s))
    }
}

impl fmt::Display for PolicyAssignment {
    /// Bits grouped per state, e.g. `10|10|01`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in 0..self.num_states() {
            if s > 0 {
                f.write_str("|")?;
            }
            for &b in self.state_bits(s) {
                f.write_str(if b { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

/// One broken invariant of an [`Mdp`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum { state: usize, action: usize, sum: f64 },
    ProbabilityOutOfRange { state: usize, action: usize, next: usize, value: f64 },
    NonFiniteReward { state: usize, action: usize, next: usize, value: f64 },
    Discount(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { state, action, sum } => {
                write!(f, "P[{state}][{action}][·] sums to {sum}")
            }
            Violation::ProbabilityOutOfRange { state, action, next, value } => {
                write!(f, "P[{state}][{action}][{next}] = {value} is outside [0, 1]")
            }
            Violation::NonFiniteReward { state, action, next, value } => {
                write!(f, "R[{state}][{action}][{next}] = {value} is not finite")
            }
            Violation::Discount(g) => write!(f, "discount {g} is outside (0, 1)"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every broken invariant of `mdp`.
pub fn validate(mdp: &Mdp) -> ValidationReport {
    let mut violations = Vec::new();
    let n = mdp.num_states;
    for s in 0..n {
        for a in 0..mdp.num_actions {
            let row = mdp.transition_row(s, a);
            for (next, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    violations.push(Violation::ProbabilityOutOfRange { state: s, action: a, next, value: p });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                violations.push(Violation::RowSum { state: s, action: a, sum });
            }
            for (next, &r) in mdp.reward_row(s, a).iter().enumerate() {
                if !r.is_finite() {
                    violations.push(Violation::NonFiniteReward { state: s, action: a, next, value: r });
                }
            }
        }
    }
    if !(mdp.discount > 0.0 && mdp.discount < 1.0) {
        violations.push(Violation::Discount(mdp.discount));
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(discount: f64) -> Mdp {
        // a=0 stays, a=1 swaps; reward 1 for landing in state 1
        let mut p = vec![0.0; 8];
        let mut r = vec![0.0; 8];
        for s in 0..2 {
            p[(s * 2) * 2 + s] = 1.0;
            p[(s * 2 + 1) * 2 + (1 - s)] = 1.0;
            r[(s * 2) * 2 + 1] = 1.0;
            r[(s * 2 + 1) * 2 + 1] = 1.0;
        }
        Mdp::from_raw(2, 2, p, r, discount).unwrap()
    }

    #[test]
    fn valid_model_has_empty_report() {
        assert!(validate(&two_state(0.9)).is_valid());
    }

    #[test]
    fn zero_row_is_one_violation() {
        let m = two_state(0.9);
        let mut p = m.transition().to_vec();
        p[0..2].iter_mut().for_each(|x| *x = 0.0);
        let bad = Mdp::from_raw(2, 2, p, m.reward().to_vec(), 0.9).unwrap();
        let report = validate(&bad);
        assert_eq!(
            report.violations,
            vec![Violation::RowSum { state: 0, action: 0, sum: 0.0 }]
        );
    }

    #[test]
    fn discount_of_one_is_rejected() {
        let report = validate(&two_state(1.0));
        assert_eq!(report.violations, vec![Violation::Discount(1.0)]);
        assert!(matches!(
            Mdp::new(2, 2, two_state(0.5).transition().to_vec(), vec![0.0; 8], 1.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn non_finite_reward_and_negative_probability() {
        let m = two_state(0.5);
        let mut p = m.transition().to_vec();
        p[0] = -0.5;
        p[1] = 1.5;
        let mut r = m.reward().to_vec();
        r[3] = f64::NAN;
        let report = validate(&Mdp::from_raw(2, 2, p, r, 0.5).unwrap());
        assert_eq!(report.violations.len(), 2 + 1);
        assert!(matches!(report.violations[0], Violation::ProbabilityOutOfRange { next: 0, .. }));
        assert!(matches!(report.violations[2], Violation::NonFiniteReward { next: 1, .. }));
    }

    #[test]
    fn shape_mismatch() {
        assert!(Mdp::from_raw(2, 2, vec![0.0; 7], vec![0.0; 8], 0.5).is_err());
        assert!(Mdp::from_raw(0, 2, vec![], vec![], 0.5).is_err());
    }

    #[test]
    fn flat_ids_round_trip() {
        for s in 0..5 {
            for a in 0..3 {
                let idx = StateActionIndex::new(s, a, 5, 3).unwrap();
                assert_eq!(idx.flat_id, s * 3 + a);
                assert_eq!(StateActionIndex::from_flat(idx.flat_id, 5, 3).unwrap(), idx);
            }
        }
        assert!(StateActionIndex::new(5, 0, 5, 3).is_err());
        assert!(StateActionIndex::from_flat(15, 5, 3).is_err());
    }

    #[test]
    fn feasibility() {
        let p = PolicyAssignment::from_actions(&[0, 1, 1], 2).unwrap();
        assert!(p.is_feasible());
        assert_eq!(p.to_string(), "10|01|01");
        assert_eq!(p.actions(), Some(vec![0, 1, 1]));
        assert_eq!(p.constraint_violation(), 0);

        let q = PolicyAssignment::from_bits(vec![true, true, false, false, false, true], 2).unwrap();
        assert!(!q.is_feasible());
        assert_eq!(q.constraint_violation(), 2);
        assert!(matches!(
            q.check_feasible(),
            Err(Error::InfeasiblePolicy { state: 0, selected: 2 })
        ));
        assert!(p.agrees_on(&q, &[2]));
        assert!(!p.agrees_on(&q, &[0]));
    }

    #[test]
    fn absorbing_states_detected() {
        let m = two_state(0.5);
        assert!(m.absorbing_states().is_empty());
        assert_eq!(m.interior_states(), vec![0, 1]);
    }
}
