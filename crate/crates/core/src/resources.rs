//! Variable and coefficient counts of compiled problems, the empirical
//! `3γ|S×A|K - 25γ` fit, and QAOA gate-volume indicators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{compile, CompilerConfig};
use crate::mdp::Mdp;
use crate::quadratize::{quadratize, QuboProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCounts {
    /// Variables before quadratization.
    pub base_variables: usize,
    /// `|V|`: base variables plus ancillas.
    pub logical_variables: usize,
    /// `|J|`: nonzero linear and quadratic coefficients.
    pub coefficient_count: usize,
}

pub fn count_resources(qubo: &QuboProblem) -> ResourceCounts {
    ResourceCounts {
        base_variables: qubo.registry.base_count(),
        logical_variables: qubo.num_variables(),
        coefficient_count: qubo.polynomial.terms().filter(|(m, _)| !m.is_constant()).count(),
    }
}

/// `3γ · |S×A| · K - 25γ`.
pub fn scaling_fit(num_states: usize, num_actions: usize, order: usize, discount: f64) -> f64 {
    3.0 * discount * (num_states * num_actions * order) as f64 - 25.0 * discount
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateVolumeMode {
    /// `p · 2^{K |S×A|^K}`: every monomial compiled without ancillas.
    Worst,
    /// `p · K · |S×A|`: after ancilla reduction.
    Ancilla,
}

/// An order-of-magnitude indicator, not a compiled gate count. `value`
/// saturates to infinity when it exceeds `f64`; `log10` stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateVolume {
    pub value: f64,
    pub log10: f64,
}

pub fn qaoa_gate_volume(
    num_states: usize,
    num_actions: usize,
    order: usize,
    depth: usize,
    mode: GateVolumeMode,
) -> Result<GateVolume> {
    for (name, v) in [("num_states", num_states), ("num_actions", num_actions), ("order", order), ("depth", depth)] {
        if v == 0 {
            return Err(Error::invalid(name, "must be positive"));
        }
    }
    let pairs = (num_states * num_actions) as f64;
    let (p, k) = (depth as f64, order as f64);
    Ok(match mode {
        GateVolumeMode::Ancilla => {
            let value = p * k * pairs;
            GateVolume {
                value,
                log10: value.log10(),
            }
        }
        GateVolumeMode::Worst => {
            let exponent = k * pairs.powf(k);
            GateVolume {
                value: p * exponent.exp2(),
                log10: p.log10() + exponent * std::f64::consts::LOG10_2,
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub num_states: usize,
    pub num_actions: usize,
    pub truncation_order: usize,
    pub discount: f64,
    pub penalty_strength: f64,
    pub reduction_penalty: f64,
    pub base_variables: usize,
    pub logical_variables: usize,
    pub coefficient_count: usize,
    pub fit_value: f64,
    pub qaoa_depth: usize,
    pub qaoa_gate_volume_worst: f64,
    pub qaoa_gate_volume_worst_log10: f64,
    pub qaoa_gate_volume_ancilla: f64,
}

/// Compiles, quadratizes and counts one instance.
pub fn resource_report(
    mdp: &Mdp,
    config: &CompilerConfig,
    reduction_penalty: f64,
    qaoa_depth: usize,
) -> Result<ResourceReport> {
    let h = compile(mdp, config)?;
    let qubo = quadratize(&h.polynomial(), reduction_penalty)?;
    let counts = count_resources(&qubo);
    let (ns, na, k) = (mdp.num_states(), mdp.num_actions(), config.truncation_order);
    let worst = qaoa_gate_volume(ns, na, k, qaoa_depth, GateVolumeMode::Worst)?;
    let ancilla = qaoa_gate_volume(ns, na, k, qaoa_depth, GateVolumeMode::Ancilla)?;
    Ok(ResourceReport {
        num_states: ns,
        num_actions: na,
        truncation_order: k,
        discount: mdp.discount(),
        penalty_strength: config.penalty_strength,
        reduction_penalty,
        base_variables: counts.base_variables,
        logical_variables: counts.logical_variables,
        coefficient_count: counts.coefficient_count,
        fit_value: scaling_fit(ns, na, k, mdp.discount()),
        qaoa_depth,
        qaoa_gate_volume_worst: worst.value,
        qaoa_gate_volume_worst_log10: worst.log10,
        qaoa_gate_volume_ancilla: ancilla.value,
    })
}

/// Ordinary least squares `y ≈ slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("points", "need at least two (x, y) pairs of equal length"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("points", "all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
