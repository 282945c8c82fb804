//! Classical baselines for checking Hamiltonian ground states: value
//! iteration, exact policy evaluation, exhaustive policy search and tabular
//! Q-learning.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Mdp, PolicyAssignment};

/// Upper bound on the number of deterministic policies enumerated.
pub const POLICY_ENUMERATION_LIMIT: usize = 1 << 24;
/// Policies whose objectives differ by less than this are ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Action values `Q[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_values(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * num_actions {
            return Err(Error::invalid("values", format!("expected {} entries", num_states * num_actions)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("entry {i} is not finite")));
        }
        Ok(Self {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    #[inline]
    fn get_mut(&mut self, s: usize, a: usize) -> &mut f64 {
        &mut self.values[s * self.num_actions + a]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action in `s`; ties go to the lowest action index.
    pub fn argmax(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn greedy(&self) -> PolicyAssignment {
        let actions: Vec<usize> = (0..self.num_states).map(|s| self.argmax(s)).collect();
        PolicyAssignment::from_actions(&actions, self.num_actions).expect("argmax is in range")
    }

    /// `Σ_{s,a} Q[s][a]`, the negated Hamiltonian functional.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// CSV with header `state,q0,…,q{|A|-1},greedy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["state".to_string()];
        header.extend((0..self.num_actions).map(|a| format!("q{a}")));
        header.push("greedy".into());
        w.write_record(&header)?;
        for s in 0..self.num_states {
            let mut rec = vec![s.to_string()];
            rec.extend(self.row(s).iter().map(|q| format!("{q:?}")));
            rec.push(self.argmax(s).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn backup(mdp: &Mdp, s: usize, a: usize, next_value: &[f64]) -> f64 {
    mdp.transition_row(s, a)
        .iter()
        .zip(mdp.reward_row(s, a))
        .zip(next_value)
        .map(|((p, r), v)| p * (r + mdp.discount() * v))
        .sum()
}

/// `sup_{s,a} |Σ_{s'} P (R + γ max_{a'} Q[s'][a']) - Q[s][a]|`.
pub fn bellman_optimality_residual(mdp: &Mdp, q: &QTable) -> f64 {
    let v: Vec<f64> = (0..mdp.num_states()).map(|s| q.max(s)).collect();
    (0..mdp.num_states())
        .flat_map(|s| (0..mdp.num_actions()).map(move |a| (s, a)))
        .map(|(s, a)| (backup(mdp, s, a, &v) - q.get(s, a)).abs())
        .fold(0.0, f64::max)
}

/// Pointwise residual of the fixed-policy Bellman equation.
pub fn policy_bellman_residual(mdp: &Mdp, policy: &PolicyAssignment, q: &QTable) -> Result<f64> {
    let actions = policy.actions().ok_or_else(|| policy.check_feasible().unwrap_err())?;
    let v: Vec<f64> = (0..mdp.num_states()).map(|s| q.get(s, actions[s])).collect();
    Ok((0..mdp.num_states())
        .flat_map(|s| (0..mdp.num_actions()).map(move |a| (s, a)))
        .map(|(s, a)| (backup(mdp, s, a, &v) - q.get(s, a)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueIterationConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ValueIterationConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

/// Iterates the optimality backup until the sup-norm change drops below the
/// tolerance, then returns the table and its greedy policy.
pub fn value_iteration(mdp: &Mdp, config: &ValueIterationConfig) -> Result<(QTable, PolicyAssignment)> {
    if !(config.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut q = QTable::zeros(ns, na);
    let mut change = f64::INFINITY;
    for _ in 0..config.max_iterations {
        let v: Vec<f64> = (0..ns).map(|s| q.max(s)).collect();
        change = 0.0;
        for s in 0..ns {
            for a in 0..na {
                let new = backup(mdp, s, a, &v);
                change = f64::max(change, (new - q.get(s, a)).abs());
                *q.get_mut(s, a) = new;
            }
        }
        if change < config.tolerance {
            let policy = q.greedy();
            return Ok((q, policy));
        }
    }
    Err(Error::NotConverged {
        iterations: config.max_iterations,
        residual: change,
    })
}

/// Solves `(I - γ P_π) q = r` for the action values of a deterministic policy.
pub fn policy_evaluation_exact(mdp: &Mdp, policy: &PolicyAssignment) -> Result<QTable> {
    policy.check_feasible()?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    if policy.num_states() != ns || policy.num_actions() != na {
        return Err(Error::invalid("policy", "dimensions do not match the model"));
    }
    let actions = policy.actions().expect("feasible");
    let n = ns * na;
    let mut lhs = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for s in 0..ns {
        for a in 0..na {
            let i = s * na + a;
            rhs[i] = mdp.expected_reward(s, a);
            for (next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p != 0.0 {
                    lhs[(i, next * na + actions[next])] -= mdp.discount() * p;
                }
            }
        }
    }
    let solution = lhs.lu().solve(&rhs).ok_or(Error::Singular)?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    QTable::from_values(ns, na, solution.as_slice().to_vec())
}

/// Number of deterministic policies, `|A|^|S|`, if within the enumeration limit.
pub fn policy_count(num_states: usize, num_actions: usize) -> Result<usize> {
    let mut count: usize = 1;
    for _ in 0..num_states {
        count = count.saturating_mul(num_actions);
        if count > POLICY_ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                what: "|A|^|S|",
                size: count,
                limit: POLICY_ENUMERATION_LIMIT,
            });
        }
    }
    Ok(count)
}

/// The `index`-th deterministic policy in mixed-radix order (state 0 varies fastest).
pub fn policy_from_index(mut index: usize, num_states: usize, num_actions: usize) -> PolicyAssignment {
    let actions: Vec<usize> = (0..num_states)
        .map(|_| {
            let a = index % num_actions;
            index /= num_actions;
            a
        })
        .collect();
    PolicyAssignment::from_actions(&actions, num_actions).expect("digits are below |A|")
}

/// Every deterministic policy, `|A|^|S|` of them.
pub fn enumerate_policies(num_states: usize, num_actions: usize) -> Result<impl Iterator<Item = PolicyAssignment>> {
    let count = policy_count(num_states, num_actions)?;
    Ok((0..count).map(move |i| policy_from_index(i, num_states, num_actions)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustivePolicySearch {
    pub best: PolicyAssignment,
    /// `Σ_{s,a} Q^π_{sa}` at the best policy.
    pub objective: f64,
    /// Every policy within [`TIE_TOLERANCE`] of the best, including it.
    pub ties: Vec<PolicyAssignment>,
}

/// Maximizes `Σ_{s,a} Q^π_{sa}` over all deterministic policies with exact evaluation.
pub fn best_policy_exhaustive(mdp: &Mdp) -> Result<ExhaustivePolicySearch> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let count = policy_count(ns, na)?;
    let objectives: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| policy_evaluation_exact(mdp, &policy_from_index(i, ns, na)).map(|q| q.total()))
        .collect::<Result<_>>()?;
    let (best_index, &objective) = objectives
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, v)| match acc {
            Some((_, b)) if *b >= *v => acc,
            _ => Some((i, v)),
        })
        .expect("at least one policy");
    let ties = objectives
        .iter()
        .enumerate()
        .filter(|(_, &v)| objective - v < TIE_TOLERANCE)
        .map(|(i, _)| policy_from_index(i, ns, na))
        .collect();
    Ok(ExhaustivePolicySearch {
        best: policy_from_index(best_index, ns, na),
        objective,
        ties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub learning_rate: f64,
    /// ε-greedy exploration rate.
    pub epsilon: f64,
    pub num_episodes: usize,
    /// Defaults to `10 · |S|` when unset.
    pub max_steps_per_episode: Option<usize>,
    pub seed: u64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epsilon: 0.1,
            num_episodes: 20_000,
            max_steps_per_episode: None,
            seed: 0,
        }
    }
}

impl QLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("learning_rate", format!("{} is outside (0, 1]", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", format!("{} is outside [0, 1]", self.epsilon)));
        }
        Ok(())
    }
}

fn sample_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver past the last positive entry
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

fn greedy_random_ties<R: Rng>(rng: &mut R, row: &[f64]) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<usize> = (0..row.len()).filter(|&a| row[a] == best).collect();
    candidates[rng.gen_range(0..candidates.len())]
}

/// Tabular Q-learning with ε-greedy exploration on transitions sampled from
/// the model. Episodes start uniformly over non-absorbing states and end on
/// reaching an absorbing state or after the step cap.
pub fn q_learning(mdp: &Mdp, config: &QLearningConfig) -> Result<(QTable, PolicyAssignment)> {
    config.validate()?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let absorbing = mdp.absorbing_states();
    let is_absorbing: Vec<bool> = (0..ns).map(|s| absorbing.contains(&s)).collect();
    let starts = mdp.interior_states();
    let starts = if starts.is_empty() { (0..ns).collect() } else { starts };
    let max_steps = config.max_steps_per_episode.unwrap_or(10 * ns);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = QTable::zeros(ns, na);

    for _ in 0..config.num_episodes {
        let mut s = starts[rng.gen_range(0..starts.len())];
        for _ in 0..max_steps {
            let a = if rng.gen::<f64>() < config.epsilon {
                rng.gen_range(0..na)
            } else {
                greedy_random_ties(&mut rng, q.row(s))
            };
            let next = sample_index(&mut rng, mdp.transition_row(s, a));
            let reward = mdp.r(s, a, next);
            let target = if is_absorbing[next] {
                reward
            } else {
                reward + mdp.discount() * q.max(next)
            };
            let entry = q.get_mut(s, a);
            *entry += config.learning_rate * (target - *entry);
            if is_absorbing[next] {
                break;
            }
            s = next;
        }
    }
    let policy = q.greedy();
    Ok((q, policy))
}
