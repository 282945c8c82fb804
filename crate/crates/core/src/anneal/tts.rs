//! Time-to-solution: `TTS = t · ln(1 - p_d) / ln(1 - p_s)`.

use serde::{Deserialize, Serialize};

use crate::anneal::sa::{simulated_anneal, success_probability, AnnealSchedule, MatchRule, SuccessEstimate};
use crate::error::{Error, Result};
use crate::poly::PseudoBooleanPolynomial;

pub const DEFAULT_TARGET_PROBABILITY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TtsStatus {
    Finite,
    /// `p_s = 1`: a single run already succeeds.
    UndefinedAllSuccess,
    /// `p_s = 0`: no finite number of repetitions helps.
    UndefinedNoSuccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtsEstimate {
    pub success_probability: f64,
    pub success_std_err: f64,
    pub effort: f64,
    pub target_probability: f64,
    pub status: TtsStatus,
    /// Present only when `status` is finite.
    pub tts: Option<f64>,
    /// First-order propagation of `success_std_err` through the formula.
    pub tts_std_err: Option<f64>,
}

impl TtsEstimate {
    pub fn is_finite(&self) -> bool {
        self.status == TtsStatus::Finite
    }

    /// Value used to rank sweep counts: the TTS when finite, the bare effort
    /// when every read succeeds, and nothing when none does.
    pub fn ranking_value(&self) -> Option<f64> {
        match self.status {
            TtsStatus::Finite => self.tts,
            TtsStatus::UndefinedAllSuccess => Some(self.effort),
            TtsStatus::UndefinedNoSuccess => None,
        }
    }
}

/// Effort of one anneal in sweep-variable units, or seconds when a rate
/// (variable updates per second) is given.
pub fn anneal_effort(num_sweeps: usize, num_variables: usize, updates_per_second: Option<f64>) -> f64 {
    let units = num_sweeps as f64 * num_variables as f64;
    match updates_per_second {
        Some(f) => units / f,
        None => units,
    }
}

/// `target_probability` must lie strictly between 0 and 1.
pub fn tts(success_probability: f64, effort: f64, target_probability: f64) -> TtsEstimate {
    tts_with_error(success_probability, 0.0, effort, target_probability)
}

pub fn tts_with_error(p_s: f64, std_err: f64, effort: f64, p_d: f64) -> TtsEstimate {
    let (status, value, err) = if p_s >= 1.0 {
        (TtsStatus::UndefinedAllSuccess, None, None)
    } else if p_s <= 0.0 {
        (TtsStatus::UndefinedNoSuccess, None, None)
    } else {
        let ln_d = (1.0 - p_d).ln();
        let ln_s = (1.0 - p_s).ln();
        let value = effort * (ln_d / ln_s);
        // d/dp [ln_d / ln(1-p)] = ln_d / ((1-p) ln(1-p)^2)
        let slope = effort * ln_d.abs() / ((1.0 - p_s) * ln_s * ln_s);
        (TtsStatus::Finite, Some(value), Some(slope * std_err))
    };
    TtsEstimate {
        success_probability: p_s,
        success_std_err: std_err,
        effort,
        target_probability: p_d,
        status,
        tts: value,
        tts_std_err: err,
    }
}

pub fn tts_from_estimate(estimate: &SuccessEstimate, effort: f64, p_d: f64) -> TtsEstimate {
    tts_with_error(estimate.p, estimate.std_err, effort, p_d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsRow {
    pub num_sweeps: usize,
    pub success: SuccessEstimate,
    pub estimate: TtsEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsSweep {
    pub rows: Vec<TtsRow>,
    /// Sweep count with the smallest ranking value; ties go to fewer sweeps.
    pub optimal_sweeps: usize,
    pub optimal: TtsEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtsSweepConfig {
    pub grid: Vec<usize>,
    /// Template schedule; `num_sweeps` is replaced by each grid value.
    pub schedule: AnnealSchedule,
    pub rule: MatchRule,
    pub ground_energy: f64,
    pub target_probability: f64,
    pub updates_per_second: Option<f64>,
}

/// Anneals at every grid sweep count and picks the one minimizing TTS.
///
/// Rows with `p_s = 1` rank by their effort; rows with `p_s = 0` never win.
pub fn tts_sweep(poly: &PseudoBooleanPolynomial, config: &TtsSweepConfig) -> Result<TtsSweep> {
    if config.grid.is_empty() {
        return Err(Error::invalid("grid", "sweep grid is empty"));
    }
    if !(config.target_probability > 0.0 && config.target_probability < 1.0) {
        return Err(Error::invalid("p_d", format!("{} is outside (0, 1)", config.target_probability)));
    }
    let n = poly.num_variables();
    let mut rows = Vec::with_capacity(config.grid.len());
    for &num_sweeps in &config.grid {
        let schedule = config.schedule.with_sweeps(num_sweeps);
        let reads = simulated_anneal(poly, &schedule)?;
        let success = success_probability(&reads, config.ground_energy, &config.rule)?;
        let effort = anneal_effort(num_sweeps, n, config.updates_per_second);
        let estimate = tts_from_estimate(&success, effort, config.target_probability);
        rows.push(TtsRow {
            num_sweeps,
            success,
            estimate,
        });
    }
    let best = rows
        .iter()
        .filter_map(|r| r.estimate.ranking_value().map(|v| (v, r)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.num_sweeps.cmp(&b.1.num_sweeps)))
        .map(|(_, r)| (r.num_sweeps, r.estimate))
        .ok_or(Error::AllUndefined)?;
    Ok(TtsSweep {
        rows,
        optimal_sweeps: best.0,
        optimal: best.1,
    })
}
