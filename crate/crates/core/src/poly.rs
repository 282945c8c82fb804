//! Sparse multilinear polynomials over binary variables.
//!
//! Variables take values in {0, 1}, so `x·x = x` and every monomial is a set of
//! variable ids. Coefficients whose magnitude falls below [`DROP_TOLERANCE`]
//! are removed as soon as they appear.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub const DROP_TOLERANCE: f64 = 1e-12;

/// Product of distinct binary variables; the empty product is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    /// Sorts and deduplicates `vars`.
    pub fn new(vars: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = vars.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Monomial(v)
    }

    pub fn constant() -> Self {
        Monomial(Vec::new())
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Product of two monomials under `x·x = x`.
    pub fn union(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Value at a binary assignment. Panics if a variable is out of range.
    #[inline]
    pub fn eval(&self, x: &[bool]) -> bool {
        self.0.iter().all(|&v| x[v])
    }
}

impl From<Vec<usize>> for Monomial {
    fn from(v: Vec<usize>) -> Self {
        Monomial::new(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoBooleanPolynomial {
    terms: BTreeMap<Monomial, f64>,
    num_variables: usize,
}

impl PseudoBooleanPolynomial {
    /// Zero polynomial over `num_variables` variables.
    pub fn new(num_variables: usize) -> Self {
        Self {
            terms: BTreeMap::new(),
            num_variables,
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::new(0);
        p.add_term([], c);
        p
    }

    /// The single variable `x_v`.
    pub fn variable(v: usize) -> Self {
        let mut p = Self::new(v + 1);
        p.add_term([v], 1.0);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Self {
        let mut p = Self::new(0);
        for (vars, c) in terms {
            p.add_term(vars, c);
        }
        p
    }

    /// Adds `coeff · Π x_v` and drops the monomial if it cancels.
    pub fn add_term(&mut self, vars: impl IntoIterator<Item = usize>, coeff: f64) {
        self.add_monomial(Monomial::new(vars), coeff);
    }

    pub fn add_monomial(&mut self, m: Monomial, coeff: f64) {
        if let Some(&max) = m.vars().last() {
            self.num_variables = self.num_variables.max(max + 1);
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let c = *o.get() + coeff;
                if c.abs() < DROP_TOLERANCE {
                    o.remove();
                } else {
                    *o.get_mut() = c;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                if coeff.abs() >= DROP_TOLERANCE {
                    v.insert(coeff);
                }
            }
        }
    }

    /// Upper bound on variable ids plus one.
    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    /// Raises the declared variable count; never lowers it below the ids in use.
    pub fn set_num_variables(&mut self, n: usize) {
        self.num_variables = self.num_variables.max(n);
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, vars: impl IntoIterator<Item = usize>) -> f64 {
        self.terms.get(&Monomial::new(vars)).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.terms.get(&Monomial::constant()).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| !m.is_constant())
            .fold(0.0, |acc, (_, c)| acc.max(c.abs()))
    }

    pub(crate) fn into_terms(self) -> BTreeMap<Monomial, f64> {
        self.terms
    }

    /// `Σ coeff · Π x_v` at a binary assignment.
    pub fn evaluate(&self, x: &[bool]) -> Result<f64> {
        if x.len() < self.num_variables {
            return Err(Error::AssignmentTooShort {
                got: x.len(),
                need: self.num_variables,
            });
        }
        Ok(self.evaluate_unchecked(x))
    }

    /// Like [`evaluate`](Self::evaluate) but panics on short assignments.
    pub fn evaluate_unchecked(&self, x: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| m.eval(x))
            .map(|(_, c)| c)
            .sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::new(self.num_variables);
        for (m, &v) in &self.terms {
            out.add_monomial(m.clone(), v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.num_variables = self.num_variables.max(other.num_variables);
        for (m, &c) in &other.terms {
            self.add_monomial(m.clone(), c);
        }
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::new(self.num_variables.max(other.num_variables));
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_monomial(ma.union(mb), ca * cb);
            }
        }
        out
    }

    /// Substitutes `x_v = (1 - z_v) / 2` with spins `z_v ∈ {-1, +1}`.
    pub fn to_ising(&self) -> IsingForm {
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, &c) in &self.terms {
            let vars = m.vars();
            let k = vars.len();
            let weight = c / f64::powi(2.0, k as i32);
            // Π (1 - z_v) = Σ_{T ⊆ m} (-1)^{|T|} Π_{v∈T} z_v
            for mask in 0u64..(1u64 << k) {
                let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| vars[i]).collect();
                let sign = if subset.len().is_multiple_of(2) { 1.0 } else { -1.0 };
                *terms.entry(Monomial(subset)).or_insert(0.0) += sign * weight;
            }
        }
        let offset = terms.remove(&Monomial::constant()).unwrap_or(0.0);
        terms.retain(|_, c| c.abs() >= DROP_TOLERANCE);
        IsingForm {
            terms,
            offset,
            num_spins: self.num_variables,
        }
    }

    /// One term per line: `coeff v1 v2 … vk`. The constant line has no ids.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            write!(out, "{c:?}").unwrap();
            for v in m.vars() {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the [`to_text`](Self::to_text) format. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = Self::new(0);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse_err = |column: usize, message: String| Error::Parse {
                line: i + 1,
                column,
                message,
            };
            let coeff_text = fields.next().expect("non-empty line");
            let coeff: f64 = coeff_text
                .parse()
                .map_err(|e| parse_err(1, format!("bad coefficient `{coeff_text}`: {e}")))?;
            let mut vars = Vec::new();
            for (k, f) in fields.enumerate() {
                vars.push(
                    f.parse::<usize>()
                        .map_err(|e| parse_err(k + 2, format!("bad variable id `{f}`: {e}")))?,
                );
            }
            p.add_term(vars, coeff);
        }
        Ok(p)
    }
}

impl fmt::Display for PseudoBooleanPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(if *c < 0.0 { " - " } else { " + " })?;
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{c}")?;
            }
            for v in m.vars() {
                write!(f, "·x{v}")?;
            }
        }
        Ok(())
    }
}

impl Add for &PseudoBooleanPolynomial {
    type Output = PseudoBooleanPolynomial;
    fn add(self, rhs: Self) -> PseudoBooleanPolynomial {
        PseudoBooleanPolynomial::add(self, rhs)
    }
}

impl Sub for &PseudoBooleanPolynomial {
    type Output = PseudoBooleanPolynomial;
    fn sub(self, rhs: Self) -> PseudoBooleanPolynomial {
        PseudoBooleanPolynomial::add(self, &rhs.scale(-1.0))
    }
}

impl Mul for &PseudoBooleanPolynomial {
    type Output = PseudoBooleanPolynomial;
    fn mul(self, rhs: Self) -> PseudoBooleanPolynomial {
        self.multiply(rhs)
    }
}

impl Neg for &PseudoBooleanPolynomial {
    type Output = PseudoBooleanPolynomial;
    fn neg(self) -> PseudoBooleanPolynomial {
        self.scale(-1.0)
    }
}

/// Spin form `offset + Σ coeff · Π z_v` of a pseudo-Boolean polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingForm {
    pub terms: BTreeMap<Monomial, f64>,
    pub offset: f64,
    pub num_spins: usize,
}

impl IsingForm {
    /// Value at spins `z_v ∈ {-1, +1}`.
    pub fn evaluate(&self, z: &[i8]) -> Result<f64> {
        if z.len() < self.num_spins {
            return Err(Error::AssignmentTooShort {
                got: z.len(),
                need: self.num_spins,
            });
        }
        Ok(self.offset
            + self
                .terms
                .iter()
                .map(|(m, c)| c * m.vars().iter().map(|&v| f64::from(z[v])).product::<f64>())
                .sum::<f64>())
    }

    /// Linear fields `h_v` (coefficients of single spins).
    pub fn fields(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.terms
            .iter()
            .filter(|(m, _)| m.degree() == 1)
            .map(|(m, &c)| (m.vars()[0], c))
    }
}

/// Spins for a binary assignment: `z = 1 - 2x`.
pub fn spins_from_bits(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { -1 } else { 1 }).collect()
}

/// Iterates all `2^n` binary assignments in counting order.
pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
    assert!(n < 64, "too many variables to enumerate");
    (0u64..(1u64 << n)).map(move |mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
}
