//! Exact min-sum variable elimination for sparse pseudo-Boolean functions.
//!
//! Cost is exponential in the induced width of the elimination order rather
//! than in the number of variables, which keeps ancilla-heavy QUBOs exact.

use crate::anneal::exhaustive::GROUND_TOLERANCE;
use crate::error::{Error, Result};
use crate::poly::PseudoBooleanPolynomial;

/// Largest factor scope built during elimination.
pub const ELIMINATION_WIDTH_LIMIT: usize = 20;

/// A table over `scope`; bit `i` of the row index is the value of `scope[i]`.
struct Factor {
    scope: Vec<usize>,
    table: Vec<f64>,
}

/// Row of `f` selected by `combined`, where `positions[i]` is the bit of
/// `f.scope[i]` inside `combined`.
fn lookup(f: &Factor, positions: &[usize], combined: usize) -> f64 {
    let mut row = 0;
    for (i, &p) in positions.iter().enumerate() {
        row |= (combined >> p & 1) << i;
    }
    f.table[row]
}

struct Step {
    var: usize,
    neighbors: Vec<usize>,
    /// Minimizing value of `var` for each row over `neighbors`.
    choice: Vec<bool>,
}

/// Minimum of `poly` over all `2^n` assignments and one minimizer.
///
/// Variables are eliminated greedily by smallest resulting scope (ties to the
/// lower index). Ties in value resolve towards `false`.
pub fn eliminate(poly: &PseudoBooleanPolynomial) -> Result<(f64, Vec<bool>)> {
    let n = poly.num_variables();
    let mut factors: Vec<Factor> = Vec::new();
    for (m, c) in poly.terms() {
        let k = m.degree();
        if k == 0 {
            continue;
        }
        let mut table = vec![0.0; 1 << k];
        table[(1 << k) - 1] = c;
        factors.push(Factor {
            scope: m.vars().to_vec(),
            table,
        });
    }

    let mut alive = vec![true; n];
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            let mut scope: Vec<usize> = factors
                .iter()
                .filter(|f| f.scope.contains(&v))
                .flat_map(|f| f.scope.iter().copied())
                .filter(|&u| u != v)
                .collect();
            scope.sort_unstable();
            scope.dedup();
            if best.as_ref().is_none_or(|(_, s)| scope.len() < s.len()) {
                best = Some((v, scope));
            }
        }
        let (v, neighbors) = best.expect("a live variable remains");
        if neighbors.len() > ELIMINATION_WIDTH_LIMIT {
            return Err(Error::TooLarge {
                what: "elimination width",
                size: neighbors.len(),
                limit: ELIMINATION_WIDTH_LIMIT,
            });
        }
        alive[v] = false;

        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.scope.contains(&v));
        factors = rest;
        // combined index: bits 0..k are the neighbors, bit k is `v`
        let k = neighbors.len();
        let positions: Vec<Vec<usize>> = touching
            .iter()
            .map(|f| {
                f.scope
                    .iter()
                    .map(|u| if *u == v { k } else { neighbors.binary_search(u).expect("neighbor") })
                    .collect()
            })
            .collect();
        let mut table = Vec::with_capacity(1 << k);
        let mut choice = Vec::with_capacity(1 << k);
        for row in 0..1usize << k {
            let at = |bit: usize| -> f64 {
                let combined = row | bit << k;
                touching.iter().zip(&positions).map(|(f, p)| lookup(f, p, combined)).sum()
            };
            let (off, on) = (at(0), at(1));
            let pick = on < off - GROUND_TOLERANCE;
            table.push(if pick { on } else { off });
            choice.push(pick);
        }
        factors.push(Factor {
            scope: neighbors.clone(),
            table,
        });
        steps.push(Step {
            var: v,
            neighbors,
            choice,
        });
    }

    let mut x = vec![false; n];
    for step in steps.iter().rev() {
        let row = step
            .neighbors
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &u)| acc | (x[u] as usize) << i);
        x[step.var] = step.choice[row];
    }
    Ok((poly.evaluate_unchecked(&x), x))
}
