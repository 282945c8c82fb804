//! Order reduction by substitution.
//!
//! A product `x·y` inside a monomial of degree three or more is replaced by a
//! fresh ancilla `z`, and `M_OR · (xy - 2xz - 2yz + 3z)` is added. The penalty
//! is zero when `z = xy` and at least `M_OR` otherwise, so the minimum over
//! ancillas reproduces the original polynomial once `M_OR` is large enough.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::poly::{Monomial, PseudoBooleanPolynomial};

pub const DEFAULT_REDUCTION_PENALTY: f64 = 5.0;

/// `xy - 2xz - 2yz + 3z` scaled by `strength`.
pub fn rosenberg_penalty(x: bool, y: bool, z: bool, strength: f64) -> f64 {
    let (x, y, z) = (f64::from(u8::from(x)), f64::from(u8::from(y)), f64::from(u8::from(z)));
    strength * (x * y - 2.0 * x * z - 2.0 * y * z + 3.0 * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncillaDefinition {
    pub id: usize,
    pub parents: (usize, usize),
}

/// Ancillas in creation order. Ids run consecutively from `base_count`, and
/// each parent is an original variable or an earlier ancilla.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AncillaRegistry {
    base_count: usize,
    entries: Vec<AncillaDefinition>,
}

impl AncillaRegistry {
    pub fn new(base_count: usize) -> Self {
        Self {
            base_count,
            entries: Vec::new(),
        }
    }

    pub fn base_count(&self) -> usize {
        self.base_count
    }

    pub fn entries(&self) -> &[AncillaDefinition] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_variables(&self) -> usize {
        self.base_count + self.entries.len()
    }

    /// Registers `z := a·b` and returns the new id.
    pub fn define(&mut self, a: usize, b: usize) -> Result<usize> {
        let id = self.total_variables();
        if a >= id || b >= id || a == b {
            return Err(Error::invalid("parents", format!("({a}, {b}) cannot define ancilla {id}")));
        }
        self.entries.push(AncillaDefinition { id, parents: (a.min(b), a.max(b)) });
        Ok(id)
    }

    /// Extends an assignment of the original variables by setting every
    /// ancilla to the product of its parents.
    pub fn lift(&self, original: &[bool]) -> Vec<bool> {
        let mut full = original[..self.base_count.min(original.len())].to_vec();
        full.resize(self.base_count, false);
        for e in &self.entries {
            let (a, b) = e.parents;
            full.push(full[a] && full[b]);
        }
        full
    }

    /// The original-variable prefix of a full assignment.
    pub fn project<'a>(&self, full: &'a [bool]) -> &'a [bool] {
        &full[..self.base_count.min(full.len())]
    }

    /// Number of ancillas that differ from the product of their parents.
    pub fn consistency_violations(&self, full: &[bool]) -> usize {
        self.entries
            .iter()
            .filter(|e| full[e.id] != (full[e.parents.0] && full[e.parents.1]))
            .count()
    }
}

/// Quadratic polynomial plus the ancilla definitions needed to read it back.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    pub polynomial: PseudoBooleanPolynomial,
    pub registry: AncillaRegistry,
    pub reduction_penalty: f64,
}

impl QuboProblem {
    pub fn num_variables(&self) -> usize {
        self.registry.total_variables()
    }

    pub fn num_ancillas(&self) -> usize {
        self.registry.len()
    }

    pub fn lift(&self, original: &[bool]) -> Vec<bool> {
        self.registry.lift(original)
    }

    pub fn project<'a>(&self, full: &'a [bool]) -> &'a [bool] {
        self.registry.project(full)
    }

    pub fn consistency_violations(&self, full: &[bool]) -> usize {
        self.registry.consistency_violations(full)
    }

    /// Coordinate-list export in the qbsolv layout: `c` comment lines (one of
    /// them carrying the constant offset), a `p qubo` header, diagonal entries
    /// `i i coeff` for linear terms, then couplers `i j coeff` with `i < j`.
    pub fn to_coordinate_text(&self) -> String {
        let mut nodes = Vec::new();
        let mut couplers = Vec::new();
        for (m, c) in self.polynomial.terms() {
            match m.vars() {
                [] => {}
                [i] => nodes.push((*i, *i, c)),
                [i, j] => couplers.push((*i, *j, c)),
                _ => unreachable!("QUBO polynomials are quadratic"),
            }
        }
        nodes.sort_by_key(|t| t.0);
        couplers.sort_by_key(|t| (t.0, t.1));
        let mut out = String::new();
        writeln!(out, "c constant {:?}", self.polynomial.constant_term()).unwrap();
        writeln!(out, "c ancillas {} reduction_penalty {:?}", self.num_ancillas(), self.reduction_penalty).unwrap();
        for e in self.registry.entries() {
            writeln!(out, "c ancilla {} = {} * {}", e.id, e.parents.0, e.parents.1).unwrap();
        }
        writeln!(out, "p qubo 0 {} {} {}", self.num_variables(), nodes.len(), couplers.len()).unwrap();
        for (i, j, c) in nodes.into_iter().chain(couplers) {
            writeln!(out, "{i} {j} {c:?}").unwrap();
        }
        out
    }
}

/// A reduction penalty that makes the minimum over ancillas equal the input
/// at every assignment: one plus the total |coefficient| of the monomials of
/// degree three or more.
///
/// Any assignment with an inconsistent ancilla pays at least `M_OR` in
/// penalty (every gadget is nonnegative), while repairing the ancillas in
/// creation order changes the rewritten terms by at most the bound.
pub fn sufficient_reduction_penalty(poly: &PseudoBooleanPolynomial) -> f64 {
    1.0 + poly
        .terms()
        .filter(|(m, _)| m.degree() >= 3)
        .map(|(_, c)| c.abs())
        .sum::<f64>()
}

/// Reads a coordinate-list QUBO back into a polynomial, including the
/// `c constant` offset when present.
pub fn parse_coordinate_text(text: &str) -> Result<PseudoBooleanPolynomial> {
    let mut poly = PseudoBooleanPolynomial::new(0);
    for (n, line) in text.lines().enumerate() {
        let err = |message: String| Error::Parse { line: n + 1, column: 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["c", "constant", value] => {
                let c: f64 = value.parse().map_err(|e| err(format!("bad constant: {e}")))?;
                poly.add_term([], c);
            }
            ["c", ..] => {}
            ["p", "qubo", _, max_nodes, ..] => {
                let n: usize = max_nodes.parse().map_err(|e| err(format!("bad node count: {e}")))?;
                poly.set_num_variables(n);
            }
            [i, j, c] => {
                let i: usize = i.parse().map_err(|e| err(format!("bad index: {e}")))?;
                let j: usize = j.parse().map_err(|e| err(format!("bad index: {e}")))?;
                let c: f64 = c.parse().map_err(|e| err(format!("bad coefficient: {e}")))?;
                poly.add_term([i, j], c);
            }
            _ => return Err(err(format!("unrecognized line `{line}`"))),
        }
    }
    Ok(poly)
}

/// The pair to substitute next: the one shared by the most monomials of
/// degree three or more, ties going to the lexicographically smallest pair.
fn most_frequent_pair<'a>(high: impl Iterator<Item = &'a Monomial>) -> Option<(usize, usize)> {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for m in high {
        let v = m.vars();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                *counts.entry((v[i], v[j])).or_insert(0) += 1;
            }
        }
    }
    counts
        .into_iter()
        .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
        .map(|(pair, _)| pair)
}

/// Reduces `poly` to degree two.
///
/// Only monomials of degree three or more are rewritten; quadratic and linear
/// monomials are left untouched. The output depends only on the input.
pub fn quadratize(poly: &PseudoBooleanPolynomial, reduction_penalty: f64) -> Result<QuboProblem> {
    if !(reduction_penalty > 0.0 && reduction_penalty.is_finite()) {
        return Err(Error::invalid("reduction_penalty", format!("M_OR = {reduction_penalty} must be positive")));
    }
    let base = poly.num_variables();
    let mut registry = AncillaRegistry::new(base);
    let mut terms: BTreeMap<Monomial, f64> = poly.clone().into_terms();

    while let Some((x, y)) = most_frequent_pair(terms.keys().filter(|m| m.degree() >= 3)) {
        let z = registry.define(x, y)?;
        let rewrite: Vec<Monomial> = terms
            .keys()
            .filter(|m| m.degree() >= 3 && m.contains(x) && m.contains(y))
            .cloned()
            .collect();
        for m in rewrite {
            let c = terms.remove(&m).expect("collected from keys");
            let reduced = Monomial::new(m.vars().iter().copied().filter(|&v| v != x && v != y).chain([z]));
            *terms.entry(reduced).or_insert(0.0) += c;
        }
        for (vars, c) in [
            (vec![x, y], 1.0),
            (vec![x, z], -2.0),
            (vec![y, z], -2.0),
            (vec![z], 3.0),
        ] {
            *terms.entry(Monomial::new(vars)).or_insert(0.0) += reduction_penalty * c;
        }
    }

    let mut polynomial = PseudoBooleanPolynomial::new(registry.total_variables());
    for (m, c) in terms {
        polynomial.add_monomial(m, c);
    }
    polynomial.set_num_variables(registry.total_variables());
    Ok(QuboProblem {
        polynomial,
        registry,
        reduction_penalty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::all_assignments;

    #[test]
    fn penalty_truth_table() {
        for x in [false, true] {
            for y in [false, true] {
                for z in [false, true] {
                    let p = rosenberg_penalty(x, y, z, 5.0);
                    if z == (x && y) {
                        assert_eq!(p, 0.0);
                    } else {
                        assert!(p >= 5.0, "({x},{y},{z}) -> {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn cubic_monomial() {
        let p = PseudoBooleanPolynomial::from_terms([(vec![0, 1, 2], 1.0)]);
        let q = quadratize(&p, 5.0).unwrap();
        assert_eq!(q.registry.entries(), &[AncillaDefinition { id: 3, parents: (0, 1) }]);
        let expected = PseudoBooleanPolynomial::from_terms([
            (vec![2, 3], 1.0),
            (vec![0, 1], 5.0),
            (vec![0, 3], -10.0),
            (vec![1, 3], -10.0),
            (vec![3], 15.0),
        ]);
        assert_eq!(q.polynomial, expected);
        for x in all_assignments(3) {
            let original = p.evaluate(&x).unwrap();
            let best = [false, true]
                .iter()
                .map(|&z| {
                    let mut full = x.clone();
                    full.push(z);
                    q.polynomial.evaluate(&full).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(best, original);
        }
    }

    #[test]
    fn quadratic_input_is_unchanged() {
        let p = PseudoBooleanPolynomial::from_terms([(vec![0, 1], 2.0), (vec![2], -1.0), (vec![], 4.0)]);
        let q = quadratize(&p, 5.0).unwrap();
        assert!(q.registry.is_empty());
        assert_eq!(q.polynomial, p);
    }

    #[test]
    fn rejects_non_positive_penalty() {
        assert!(quadratize(&PseudoBooleanPolynomial::new(1), 0.0).is_err());
    }

    #[test]
    fn pair_choice_prefers_frequency_then_order() {
        // {1,2} appears in both cubic monomials; {0,1} only in one
        let p = PseudoBooleanPolynomial::from_terms([(vec![0, 1, 2], 1.0), (vec![1, 2, 3], 1.0)]);
        let q = quadratize(&p, 5.0).unwrap();
        assert_eq!(q.registry.entries()[0].parents, (1, 2));
        assert_eq!(q.num_ancillas(), 1);
        // all pairs tie: smallest pair wins
        let p = PseudoBooleanPolynomial::from_terms([(vec![4, 5, 6], 1.0)]);
        let q = quadratize(&p, 5.0).unwrap();
        assert_eq!(q.registry.entries()[0].parents, (4, 5));
    }

    #[test]
    fn lift_and_project() {
        let mut reg = AncillaRegistry::new(3);
        let z = reg.define(0, 1).unwrap();
        let w = reg.define(z, 2).unwrap();
        assert_eq!((z, w), (3, 4));
        assert_eq!(reg.lift(&[true, true, true]), vec![true; 5]);
        assert_eq!(reg.lift(&[true, false, true]), vec![true, false, true, false, false]);
        let mut full = reg.lift(&[true, true, false]);
        assert_eq!(reg.consistency_violations(&full), 0);
        full[3] = false;
        assert_eq!(reg.consistency_violations(&full), 1);
        assert_eq!(reg.project(&full), &[true, true, false]);
        assert!(reg.define(7, 0).is_err());
    }

    #[test]
    fn coordinate_text_round_trip() {
        let p = PseudoBooleanPolynomial::from_terms([(vec![0, 1, 2], -1.5), (vec![0], 2.0), (vec![], 0.25)]);
        let q = quadratize(&p, 5.0).unwrap();
        let text = q.to_coordinate_text();
        assert!(text.starts_with("c constant 0.25\n"));
        assert!(text.contains("\np qubo 0 4 2 4\n"));
        assert_eq!(parse_coordinate_text(&text).unwrap(), q.polynomial);
    }
}
