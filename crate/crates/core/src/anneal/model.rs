use crate::poly::PseudoBooleanPolynomial;

/// Flat term list with per-variable adjacency, for incremental energy updates.
#[derive(Debug, Clone)]
pub(crate) struct EnergyModel {
    pub(crate) num_variables: usize,
    pub(crate) constant: f64,
    coeffs: Vec<f64>,
    term_vars: Vec<Vec<usize>>,
    var_terms: Vec<Vec<usize>>,
}

impl EnergyModel {
    pub(crate) fn new(poly: &PseudoBooleanPolynomial) -> Self {
        let n = poly.num_variables();
        let mut model = Self {
            num_variables: n,
            constant: 0.0,
            coeffs: Vec::new(),
            term_vars: Vec::new(),
            var_terms: vec![Vec::new(); n],
        };
        for (m, c) in poly.terms() {
            if m.is_constant() {
                model.constant += c;
                continue;
            }
            let t = model.coeffs.len();
            model.coeffs.push(c);
            model.term_vars.push(m.vars().to_vec());
            for &v in m.vars() {
                model.var_terms[v].push(t);
            }
        }
        model
    }

    pub(crate) fn energy(&self, x: &[bool]) -> f64 {
        self.constant
            + self
                .term_vars
                .iter()
                .zip(&self.coeffs)
                .filter(|(vars, _)| vars.iter().all(|&v| x[v]))
                .map(|(_, c)| c)
                .sum::<f64>()
    }

    /// Energy change from flipping `v`.
    #[inline]
    pub(crate) fn delta(&self, x: &[bool], v: usize) -> f64 {
        let mut active = 0.0;
        for &t in &self.var_terms[v] {
            if self.term_vars[t].iter().all(|&u| u == v || x[u]) {
                active += self.coeffs[t];
            }
        }
        if x[v] {
            -active
        } else {
            active
        }
    }
}
