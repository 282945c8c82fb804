//! Exact minimization by enumeration.

use std::collections::BTreeMap;

use crate::anneal::eliminate::eliminate;
use crate::anneal::model::EnergyModel;
use crate::error::{Error, Result};
use crate::poly::{Monomial, PseudoBooleanPolynomial};
use crate::quadratize::QuboProblem;

/// Largest number of variables enumerated jointly.
pub const EXHAUSTIVE_VARIABLE_LIMIT: usize = 24;
/// Components up to this size are scanned; larger ones go through variable
/// elimination.
const SCAN_LIMIT: usize = 16;
/// Assignments within this of the minimum count as minimizers.
pub const GROUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStates {
    pub energy: f64,
    pub assignments: Vec<Vec<bool>>,
}

fn check_size(n: usize) -> Result<()> {
    if n > EXHAUSTIVE_VARIABLE_LIMIT {
        return Err(Error::TooLarge {
            what: "variables",
            size: n,
            limit: EXHAUSTIVE_VARIABLE_LIMIT,
        });
    }
    Ok(())
}

/// Gray-code scan of `model`; calls `visit(energy, code)` for all `2^n` states.
fn gray_scan(model: &EnergyModel, mut visit: impl FnMut(f64, u64)) {
    let n = model.num_variables;
    let mut x = vec![false; n];
    let mut code: u64 = 0;
    let mut energy = model.energy(&x);
    visit(energy, code);
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        energy += model.delta(&x, v);
        x[v] = !x[v];
        code ^= 1 << v;
        visit(energy, code);
    }
}

fn decode(code: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| code >> i & 1 == 1).collect()
}

/// Scans all `2^n` assignments and returns every minimizer.
pub fn exhaustive_ground_state(poly: &PseudoBooleanPolynomial) -> Result<GroundStates> {
    let n = poly.num_variables();
    check_size(n)?;
    let model = EnergyModel::new(poly);
    let mut best = f64::INFINITY;
    let mut candidates: Vec<(f64, u64)> = Vec::new();
    gray_scan(&model, |e, code| {
        if e < best + GROUND_TOLERANCE {
            if e < best {
                best = e;
                candidates.retain(|(c, _)| *c < best + GROUND_TOLERANCE);
            }
            candidates.push((e, code));
        }
    });
    candidates.sort_by_key(|&(_, code)| code);
    let mut assignments: Vec<Vec<bool>> = candidates.into_iter().map(|(_, code)| decode(code, n)).collect();
    assignments.sort();
    // re-evaluate so the reported energy carries no accumulated rounding
    let energy = poly.evaluate_unchecked(&assignments[0]);
    Ok(GroundStates { energy, assignments })
}

/// Fixes the given variables and returns the remaining polynomial.
fn restrict(poly: &PseudoBooleanPolynomial, fixed: &[Option<bool>]) -> PseudoBooleanPolynomial {
    let mut out = PseudoBooleanPolynomial::new(0);
    'terms: for (m, c) in poly.terms() {
        let mut free = Vec::with_capacity(m.degree());
        for &v in m.vars() {
            match fixed.get(v).copied().flatten() {
                Some(false) => continue 'terms,
                Some(true) => {}
                None => free.push(v),
            }
        }
        out.add_monomial(Monomial::new(free), c);
    }
    out
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Exact minimum over the unfixed variables.
///
/// The restricted polynomial is split into connected components (variables
/// linked by a shared term). Small components are enumerated; larger ones are
/// solved by exact variable elimination, limited by its induced width.
/// Returns the minimum and a full assignment attaining it.
pub fn minimize_given(poly: &PseudoBooleanPolynomial, fixed: &[Option<bool>]) -> Result<(f64, Vec<bool>)> {
    let n = poly.num_variables().max(fixed.len());
    let rest = restrict(poly, fixed);
    let mut parent: Vec<usize> = (0..n).collect();
    for (m, _) in rest.terms() {
        if let Some((&first, others)) = m.vars().split_first() {
            for &v in others {
                let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                parent[a] = b;
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        if fixed.get(v).copied().flatten().is_none() {
            let root = find(&mut parent, v);
            components.entry(root).or_default().push(v);
        }
    }

    let mut x: Vec<bool> = (0..n).map(|v| fixed.get(v).copied().flatten().unwrap_or(false)).collect();
    let mut total = rest.constant_term();
    let mut by_root: BTreeMap<usize, PseudoBooleanPolynomial> = BTreeMap::new();
    for (m, c) in rest.terms() {
        if let Some(&v) = m.vars().first() {
            by_root.entry(find(&mut parent, v)).or_default().add_monomial(m.clone(), c);
        }
    }
    for (root, vars) in components {
        let Some(sub) = by_root.get(&root) else {
            continue; // isolated variable with no terms
        };
        let local: PseudoBooleanPolynomial = {
            let mut p = PseudoBooleanPolynomial::new(vars.len());
            for (m, c) in sub.terms() {
                p.add_term(m.vars().iter().map(|v| vars.binary_search(v).expect("component member")), c);
            }
            p
        };
        let best = if vars.len() <= SCAN_LIMIT {
            let model = EnergyModel::new(&local);
            let (mut best, mut best_code) = (f64::INFINITY, 0u64);
            gray_scan(&model, |e, code| {
                // near-ties go to the smaller code so the choice is independent of scan order
                if e < best - GROUND_TOLERANCE || (e < best + GROUND_TOLERANCE && code < best_code) {
                    best = e;
                    best_code = code;
                }
            });
            decode(best_code, vars.len())
        } else {
            eliminate(&local)?.1
        };
        for (&v, &b) in vars.iter().zip(&best) {
            x[v] = b;
        }
        total += local.evaluate_unchecked(&best);
    }
    Ok((total, x))
}

/// Ground states of a QUBO by enumerating the original variables and
/// minimizing the ancillas exactly for each of them.
pub fn qubo_ground_state(qubo: &QuboProblem) -> Result<GroundStates> {
    let base = qubo.registry.base_count();
    check_size(base)?;
    let total = qubo.num_variables();
    let mut per_base: Vec<(f64, Vec<bool>)> = Vec::with_capacity(1 << base);
    for code in 0u64..(1u64 << base) {
        let fixed: Vec<Option<bool>> = (0..total)
            .map(|v| if v < base { Some(code >> v & 1 == 1) } else { None })
            .collect();
        per_base.push(minimize_given(&qubo.polynomial, &fixed)?);
    }
    let energy = per_base.iter().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let mut assignments: Vec<Vec<bool>> = per_base
        .into_iter()
        .filter(|(e, _)| *e < energy + GROUND_TOLERANCE)
        .map(|(_, x)| x)
        .collect();
    assignments.sort();
    Ok(GroundStates { energy, assignments })
}
