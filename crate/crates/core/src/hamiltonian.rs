//! Truncated K-spin Hamiltonians of tabular MDPs.
//!
//! Unrolling the fixed-policy Bellman equation `K` times writes `Σ_{s,a} Q_{sa}`
//! as a polynomial in the policy bits. A walk `(s1,a1) … (sk,ak)` contributes
//!
//! ```text
//! J = γ^k · Σ_{s0,a0} P[s0][a0][s1] · P[s1][a1][s2] ⋯ P[s_{k-1}][a_{k-1}][sk] · Σ_{s'} P[sk][ak][s'] R[sk][ak][s']
//! ```
//!
//! to the monomial `π_{s1a1} ⋯ π_{skak}`; the Hamiltonian is the negated sum plus
//! `M · Σ_s (Σ_a π_{sa} - 1)²`, which is zero exactly on deterministic policies.
//! A walk that revisits a state-action pair lands on a lower-degree monomial.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Mdp, PolicyAssignment};
use crate::oracles::{enumerate_policies, value_iteration, QTable, ValueIterationConfig};
use crate::poly::{Monomial, PseudoBooleanPolynomial};

pub const DEFAULT_PENALTY: f64 = 3.0;
pub const DEFAULT_TERM_BUDGET: u64 = 10_000_000;
/// A feasible ground state is unique when the runner-up is at least this far above it.
pub const UNIQUENESS_GAP: f64 = 1e-9;
/// Largest |S×A| accepted by the exhaustive ground-state searches.
pub const EXHAUSTIVE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompilerConfig {
    /// Highest monomial order K kept from the expansion.
    pub truncation_order: usize,
    /// Strength M of the one-action-per-state penalty.
    pub penalty_strength: f64,
    /// Whether [`CompiledHamiltonian::polynomial`] carries the k=0 offset.
    pub include_constant: bool,
    /// Maximum number of walk accumulations before compilation gives up.
    pub term_budget: u64,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        Self {
            truncation_order: 3,
            penalty_strength: DEFAULT_PENALTY,
            include_constant: true,
            term_budget: DEFAULT_TERM_BUDGET,
        }
    }
}

impl CompilerConfig {
    pub fn new(truncation_order: usize, penalty_strength: f64) -> Self {
        Self {
            truncation_order,
            penalty_strength,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation_order < 1 {
            return Err(Error::invalid("truncation_order", "K must be at least 1"));
        }
        if !(self.penalty_strength > 0.0 && self.penalty_strength.is_finite()) {
            return Err(Error::invalid("penalty_strength", format!("M = {} must be positive", self.penalty_strength)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledHamiltonian {
    /// `-Σ_{k=1..K} Σ J π⋯π`, over variables `0..|S×A|`.
    pub objective: PseudoBooleanPolynomial,
    /// `M · Σ_s (Σ_a π_{sa} - 1)²` in multilinear form.
    pub penalty: PseudoBooleanPolynomial,
    /// The k=0 term `-Σ_{s,a,s'} P R`.
    pub constant_offset: f64,
    pub config: CompilerConfig,
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
}

impl CompiledHamiltonian {
    pub fn num_variables(&self) -> usize {
        self.num_states * self.num_actions
    }

    /// Objective plus penalty, plus the constant offset when
    /// `config.include_constant` is set.
    pub fn polynomial(&self) -> PseudoBooleanPolynomial {
        let mut p = self.objective.add(&self.penalty);
        if self.config.include_constant {
            p.add_term([], self.constant_offset);
        }
        p.set_num_variables(self.num_variables());
        p
    }

    /// `-Σ Q^{(K)}` at a policy: objective plus the constant offset.
    pub fn objective_value(&self, x: &[bool]) -> Result<f64> {
        Ok(self.objective.evaluate(x)? + self.constant_offset)
    }

    /// Full energy including the penalty and the constant offset.
    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        Ok(self.objective_value(x)? + self.penalty.evaluate(x)?)
    }
}

fn check_pair(mdp: &Mdp, s: usize, a: usize) -> Result<()> {
    mdp.index(s, a).map(|_| ())
}

/// Probability mass flowing into `s` from all state-action pairs: `Σ_{s0,a0} P[s0][a0][s]`.
fn inflow(mdp: &Mdp) -> Vec<f64> {
    let n = mdp.num_states();
    (0..n)
        .map(|target| {
            (0..n)
                .flat_map(|s| (0..mdp.num_actions()).map(move |a| (s, a)))
                .map(|(s, a)| mdp.p(s, a, target))
                .sum()
        })
        .collect()
}

/// Ordered-walk weight `J_{(s1,a1)…(sk,ak)}`.
pub fn coupling_coefficient(mdp: &Mdp, chain: &[(usize, usize)]) -> Result<f64> {
    let Some(&(first, _)) = chain.first() else {
        return Err(Error::invalid("chain", "needs at least one state-action pair"));
    };
    for &(s, a) in chain {
        check_pair(mdp, s, a)?;
    }
    let mut weight = inflow(mdp)[first];
    for w in chain.windows(2) {
        let ((s, a), (next, _)) = (w[0], w[1]);
        weight *= mdp.p(s, a, next);
    }
    let &(last_s, last_a) = chain.last().unwrap();
    let k = chain.len() as i32;
    Ok(mdp.discount().powi(k) * weight * mdp.expected_reward(last_s, last_a))
}

struct WalkContext<'a> {
    mdp: &'a Mdp,
    expected_reward: Vec<f64>,
    max_order: usize,
    budget: u64,
    used: &'a AtomicU64,
}

impl WalkContext<'_> {
    fn descend(
        &self,
        s: usize,
        a: usize,
        weight: f64,
        order: usize,
        vars: &mut Vec<usize>,
        acc: &mut HashMap<Vec<usize>, f64>,
    ) -> Result<()> {
        let na = self.mdp.num_actions();
        let r = self.expected_reward[s * na + a];
        if r != 0.0 {
            if self.used.fetch_add(1, Ordering::Relaxed) >= self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            let j = self.mdp.discount().powi(order as i32) * weight * r;
            *acc.entry(vars.clone()).or_insert(0.0) -= j;
        }
        if order == self.max_order {
            return Ok(());
        }
        for (next, &p) in self.mdp.transition_row(s, a).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for next_a in 0..na {
                let v = next * na + next_a;
                let inserted = match vars.binary_search(&v) {
                    Ok(_) => None,
                    Err(pos) => {
                        vars.insert(pos, v);
                        Some(pos)
                    }
                };
                self.descend(next, next_a, weight * p, order + 1, vars, acc)?;
                if let Some(pos) = inserted {
                    vars.remove(pos);
                }
            }
        }
        Ok(())
    }
}

/// Builds the truncated Hamiltonian of `mdp`.
///
/// Walks are enumerated depth first from every `(s1, a1)` with nonzero inflow,
/// pruning zero-probability steps. Roots are processed in parallel and merged
/// in index order, so the result does not depend on scheduling.
pub fn compile(mdp: &Mdp, config: &CompilerConfig) -> Result<CompiledHamiltonian> {
    config.validate()?;
    let report = crate::mdp::validate(mdp);
    if !report.is_valid() {
        return Err(Error::Validation(report.violations));
    }
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let flow = inflow(mdp);
    let used = AtomicU64::new(0);
    let ctx = WalkContext {
        mdp,
        expected_reward: (0..ns).flat_map(|s| (0..na).map(move |a| (s, a))).map(|(s, a)| mdp.expected_reward(s, a)).collect(),
        max_order: config.truncation_order,
        budget: config.term_budget,
        used: &used,
    };

    let partials: Vec<Result<HashMap<Vec<usize>, f64>>> = (0..ns * na)
        .into_par_iter()
        .map(|root| {
            let mut acc = HashMap::new();
            let (s, a) = (root / na, root % na);
            if flow[s] != 0.0 {
                ctx.descend(s, a, flow[s], 1, &mut vec![root], &mut acc)?;
            }
            Ok(acc)
        })
        .collect();

    let mut merged: HashMap<Vec<usize>, f64> = HashMap::new();
    for partial in partials {
        let mut entries: Vec<_> = partial?.into_iter().collect();
        entries.sort_by(|x, y| x.0.cmp(&y.0));
        for (vars, c) in entries {
            *merged.entry(vars).or_insert(0.0) += c;
        }
    }
    let mut objective = PseudoBooleanPolynomial::new(ns * na);
    let mut entries: Vec<_> = merged.into_iter().collect();
    entries.sort_by(|x, y| x.0.cmp(&y.0));
    for (vars, c) in entries {
        objective.add_monomial(Monomial::new(vars), c);
    }

    let constant_offset = -(0..ns)
        .flat_map(|s| (0..na).map(move |a| (s, a)))
        .map(|(s, a)| mdp.expected_reward(s, a))
        .sum::<f64>();

    Ok(CompiledHamiltonian {
        objective,
        penalty: one_hot_penalty(ns, na, config.penalty_strength),
        constant_offset,
        config: *config,
        num_states: ns,
        num_actions: na,
        discount: mdp.discount(),
    })
}

/// `M · Σ_s (Σ_a x_{sa} - 1)²` expanded to multilinear form.
pub fn one_hot_penalty(num_states: usize, num_actions: usize, strength: f64) -> PseudoBooleanPolynomial {
    let mut total = PseudoBooleanPolynomial::new(num_states * num_actions);
    for s in 0..num_states {
        let mut row = PseudoBooleanPolynomial::constant(-1.0);
        for a in 0..num_actions {
            row.add_term([s * num_actions + a], 1.0);
        }
        total.add_assign(&row.multiply(&row));
    }
    total.scale(strength)
}

/// `Q^{(K)}` for every pair: `K` Bellman backups of `policy` starting from the
/// immediate expected reward. Equals the expected discounted return of a
/// `(K+1)`-step rollout.
pub fn truncated_q_table(mdp: &Mdp, policy: &PolicyAssignment, order: usize) -> Result<QTable> {
    policy.check_feasible()?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    if policy.num_states() != ns || policy.num_actions() != na {
        return Err(Error::invalid("policy", "dimensions do not match the model"));
    }
    let immediate: Vec<f64> = (0..ns)
        .flat_map(|s| (0..na).map(move |a| (s, a)))
        .map(|(s, a)| mdp.expected_reward(s, a))
        .collect();
    let actions = policy.actions().expect("feasible");
    let mut q = immediate.clone();
    for _ in 0..order {
        let v: Vec<f64> = (0..ns).map(|s| q[s * na + actions[s]]).collect();
        q = (0..ns * na)
            .map(|i| {
                let (s, a) = (i / na, i % na);
                let future: f64 = mdp.transition_row(s, a).iter().zip(&v).map(|(p, v)| p * v).sum();
                immediate[i] + mdp.discount() * future
            })
            .collect();
    }
    QTable::from_values(ns, na, q)
}

pub fn truncated_q(mdp: &Mdp, policy: &PolicyAssignment, s: usize, a: usize, order: usize) -> Result<f64> {
    check_pair(mdp, s, a)?;
    Ok(truncated_q_table(mdp, policy, order)?.get(s, a))
}

/// Exhaustive search of a compiled Hamiltonian over deterministic policies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleGroundState {
    pub policy: PolicyAssignment,
    pub energy: f64,
    /// Energy of the best other policy minus `energy`; infinite if there is none.
    pub gap: f64,
}

impl FeasibleGroundState {
    pub fn is_unique(&self) -> bool {
        self.gap > UNIQUENESS_GAP
    }
}

pub fn feasible_ground_state(h: &CompiledHamiltonian) -> Result<FeasibleGroundState> {
    if h.num_variables() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            what: "|S×A|",
            size: h.num_variables(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let poly = h.polynomial();
    let mut best: Option<(f64, PolicyAssignment)> = None;
    let mut second = f64::INFINITY;
    for policy in enumerate_policies(h.num_states, h.num_actions)? {
        let e = poly.evaluate_unchecked(policy.bits());
        match &best {
            Some((b, _)) if e >= *b => second = second.min(e),
            _ => {
                if let Some((b, _)) = best.take() {
                    second = second.min(b);
                }
                best = Some((e, policy));
            }
        }
    }
    let (energy, policy) = best.expect("at least one policy");
    Ok(FeasibleGroundState {
        policy,
        energy,
        gap: second - energy,
    })
}

/// Outcome of compiling at one truncation order and comparing with value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCheck {
    pub order: usize,
    pub ground: FeasibleGroundState,
    pub optimal: PolicyAssignment,
    /// Ground state matches the optimal policy on interior states.
    pub agrees: bool,
}

impl TruncationCheck {
    pub fn qualifies(&self) -> bool {
        self.agrees && self.ground.is_unique()
    }
}

pub fn check_truncation(mdp: &Mdp, penalty: f64, order: usize, optimal: &PolicyAssignment) -> Result<TruncationCheck> {
    let h = compile(mdp, &CompilerConfig::new(order, penalty))?;
    let ground = feasible_ground_state(&h)?;
    let agrees = ground.policy.agrees_on(optimal, &mdp.interior_states());
    Ok(TruncationCheck {
        order,
        ground,
        optimal: optimal.clone(),
        agrees,
    })
}

/// Least `K ≤ max_order` whose feasible ground state is unique and matches the
/// value-iteration policy on interior states.
pub fn minimal_truncation_order(mdp: &Mdp, penalty: f64, max_order: usize) -> Result<Option<usize>> {
    if mdp.num_pairs() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            what: "|S×A|",
            size: mdp.num_pairs(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let (_, optimal) = value_iteration(mdp, &ValueIterationConfig::default())?;
    for order in 1..=max_order {
        if check_truncation(mdp, penalty, order, &optimal)?.qualifies() {
            return Ok(Some(order));
        }
    }
    Ok(None)
}
