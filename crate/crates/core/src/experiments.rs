//! Experiment runners over the hallway family and the end-to-end solve
//! pipeline.
//!
//! Every runner takes an [`ExperimentConfig`], evaluates its cells in parallel
//! and returns rows in a fixed order (by `|S|`, then `γ`). Tables are written
//! through [`write_table`], which appends the run-wide configuration to every
//! row, so any single row can be reproduced on its own.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{
    qubo_ground_state, simulated_anneal, success_probability, tts_sweep, AnnealSchedule, MatchRule,
    SuccessEstimate, SweepOrder, TtsStatus, TtsSweep, TtsSweepConfig, DEFAULT_BETA_END, DEFAULT_BETA_START,
    DEFAULT_NUM_READS, DEFAULT_TARGET_PROBABILITY,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    compile, minimal_truncation_order, CompilerConfig, DEFAULT_PENALTY, DEFAULT_TERM_BUDGET, EXHAUSTIVE_LIMIT,
};
use crate::mdp::{Boundary, HallwayBuilder, Mdp, PolicyAssignment, DEFAULT_SLIP};
use crate::oracles::{best_policy_exhaustive, q_learning, value_iteration, QLearningConfig, ValueIterationConfig};
use crate::quadratize::{quadratize, QuboProblem, DEFAULT_REDUCTION_PENALTY};
use crate::resources::{resource_report, ResourceReport};

/// The command a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    Solve,
    KHeatmap,
    TtsSweep,
    Resources,
    OracleCompare,
    Hallway,
    Compile,
    Quadratize,
    Anneal,
    Oracle,
}

/// How the configured β range is applied to a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaScale {
    /// Use `beta_start` and `beta_end` as given.
    #[default]
    Absolute,
    /// Divide both by the largest non-constant coefficient magnitude.
    Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    /// Read energy within 1e-9 of the exhaustive ground energy.
    #[default]
    Energy,
    /// Projected policy bits equal the ground state's on interior states.
    PolicyBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub num_states: Vec<usize>,
    pub discounts: Vec<f64>,
    pub slip: f64,
    pub boundary: Boundary,
    /// Fixed K for every cell; when absent each cell uses its minimal K.
    pub truncation_order: Option<usize>,
    /// Largest K tried when searching for the minimal order.
    pub max_truncation_order: usize,
    pub penalty_strength: f64,
    pub reduction_penalty: f64,
    pub term_budget: u64,
    pub num_sweeps: usize,
    pub sweep_grid: Vec<usize>,
    pub num_reads: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub beta_scale: BetaScale,
    pub sweep_order: SweepOrder,
    pub match_rule: MatchKind,
    pub target_probability: f64,
    /// Variable updates per second; TTS is reported in seconds when set.
    pub updates_per_second: Option<f64>,
    pub q_learning_seeds: usize,
    pub q_learning_episodes: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub qaoa_depth: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Solve,
            num_states: vec![4, 5, 6, 7, 8],
            discounts: vec![0.6, 0.7, 0.8, 0.9],
            slip: DEFAULT_SLIP,
            boundary: Boundary::Absorbing,
            truncation_order: None,
            max_truncation_order: 8,
            penalty_strength: DEFAULT_PENALTY,
            reduction_penalty: DEFAULT_REDUCTION_PENALTY,
            term_budget: DEFAULT_TERM_BUDGET,
            num_sweeps: 10,
            sweep_grid: vec![1, 2, 3, 5, 7, 10, 15, 20, 30, 50],
            num_reads: DEFAULT_NUM_READS,
            beta_start: DEFAULT_BETA_START,
            beta_end: DEFAULT_BETA_END,
            beta_scale: BetaScale::Absolute,
            sweep_order: SweepOrder::Fixed,
            match_rule: MatchKind::Energy,
            target_probability: DEFAULT_TARGET_PROBABILITY,
            updates_per_second: None,
            q_learning_seeds: 20,
            q_learning_episodes: 20_000,
            learning_rate: 0.1,
            epsilon: 0.1,
            qaoa_depth: 1,
            seed: 0,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be positive and finite")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_states.is_empty() {
            return Err(Error::invalid("num_states", "list is empty"));
        }
        if let Some(&n) = self.num_states.iter().find(|&&n| n < 4) {
            return Err(Error::invalid("num_states", format!("hallway needs at least 4 tiles, got {n}")));
        }
        if self.discounts.is_empty() {
            return Err(Error::invalid("discounts", "list is empty"));
        }
        if let Some(g) = self.discounts.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::invalid("discounts", format!("{g} is outside (0, 1)")));
        }
        if !(0.0..0.5).contains(&self.slip) {
            return Err(Error::invalid("slip", format!("{} is outside [0, 0.5)", self.slip)));
        }
        if self.truncation_order == Some(0) || self.max_truncation_order == 0 {
            return Err(Error::invalid("truncation_order", "K must be at least 1"));
        }
        positive("penalty_strength", self.penalty_strength)?;
        positive("reduction_penalty", self.reduction_penalty)?;
        if self.sweep_grid.is_empty() || self.sweep_grid.contains(&0) {
            return Err(Error::invalid("sweep_grid", "needs one or more positive sweep counts"));
        }
        self.schedule(1.0).validate()?;
        if !(self.target_probability > 0.0 && self.target_probability < 1.0) {
            return Err(Error::invalid("target_probability", format!("{} is outside (0, 1)", self.target_probability)));
        }
        if let Some(f) = self.updates_per_second {
            positive("updates_per_second", f)?;
        }
        if self.q_learning_seeds == 0 {
            return Err(Error::invalid("q_learning_seeds", "need at least one seed"));
        }
        self.q_learning(0).validate()?;
        if self.qaoa_depth == 0 {
            return Err(Error::invalid("qaoa_depth", "must be positive"));
        }
        Ok(())
    }

    pub fn compiler(&self, order: usize) -> CompilerConfig {
        CompilerConfig {
            term_budget: self.term_budget,
            ..CompilerConfig::new(order, self.penalty_strength)
        }
    }

    /// Anneal schedule with the β range divided by `scale` when
    /// [`BetaScale::Coefficient`] is selected.
    pub fn schedule(&self, scale: f64) -> AnnealSchedule {
        let divisor = match self.beta_scale {
            BetaScale::Absolute => 1.0,
            BetaScale::Coefficient if scale > 0.0 => scale,
            BetaScale::Coefficient => 1.0,
        };
        AnnealSchedule {
            sweep_order: self.sweep_order,
            ..AnnealSchedule::new(
                self.num_sweeps,
                self.beta_start / divisor,
                self.beta_end / divisor,
                self.num_reads,
                self.seed,
            )
        }
    }

    fn schedule_for(&self, qubo: &QuboProblem) -> AnnealSchedule {
        let scale = qubo
            .polynomial
            .terms()
            .filter(|(m, _)| !m.is_constant())
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max);
        self.schedule(scale)
    }

    pub fn q_learning(&self, seed: u64) -> QLearningConfig {
        QLearningConfig {
            learning_rate: self.learning_rate,
            epsilon: self.epsilon,
            num_episodes: self.q_learning_episodes,
            max_steps_per_episode: None,
            seed,
        }
    }

    pub fn hallway(&self, num_states: usize, discount: f64) -> Result<Mdp> {
        HallwayBuilder::new(num_states, discount)
            .slip(self.slip)
            .boundary(self.boundary)
            .build()
    }

    /// `(|S|, γ)` cells in row order.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        let mut sizes = self.num_states.clone();
        sizes.sort_unstable();
        sizes.dedup();
        let mut discounts = self.discounts.clone();
        discounts.sort_by(f64::total_cmp);
        discounts.dedup();
        sizes
            .iter()
            .flat_map(|&n| discounts.iter().map(move |&g| (n, g)))
            .collect()
    }

    /// Parameters shared by every row of a table, as `(column, value)` pairs.
    pub fn columns(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            ("experiment", kebab(&self.experiment)),
            ("seed", self.seed.to_string()),
            ("slip", format!("{:?}", self.slip)),
            ("boundary", kebab(&self.boundary)),
            ("penalty_strength", format!("{:?}", self.penalty_strength)),
            ("reduction_penalty", format!("{:?}", self.reduction_penalty)),
            ("configured_order", opt(self.truncation_order.map(|k| k.to_string()))),
            ("max_truncation_order", self.max_truncation_order.to_string()),
            ("term_budget", self.term_budget.to_string()),
            ("num_sweeps_default", self.num_sweeps.to_string()),
            ("sweep_grid", format_actions(&self.sweep_grid)),
            ("num_reads", self.num_reads.to_string()),
            ("beta_start", format!("{:?}", self.beta_start)),
            ("beta_end", format!("{:?}", self.beta_end)),
            ("beta_scale", kebab(&self.beta_scale)),
            ("sweep_order", kebab(&self.sweep_order)),
            ("match_rule", kebab(&self.match_rule)),
            ("target_probability", format!("{:?}", self.target_probability)),
            ("updates_per_second", opt(self.updates_per_second.map(|f| format!("{f:?}")))),
            ("q_learning_seeds", self.q_learning_seeds.to_string()),
            ("q_learning_episodes", self.q_learning_episodes.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("epsilon", format!("{:?}", self.epsilon)),
            ("qaoa_depth", self.qaoa_depth.to_string()),
        ]
    }
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// A row of an output table.
pub trait TableRow {
    fn header() -> Vec<&'static str>;
    fn fields(&self) -> Vec<String>;
}

/// CSV with the row's own columns followed by the configuration columns.
pub fn write_table<R: TableRow, W: Write>(out: W, config: &ExperimentConfig, rows: &[R]) -> Result<()> {
    let shared = config.columns();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = R::header();
    header.extend(shared.iter().map(|(k, _)| *k));
    w.write_record(&header)?;
    for row in rows {
        let mut fields = row.fields();
        fields.extend(shared.iter().map(|(_, v)| v.clone()));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Space-separated actions, e.g. `0 0 0 0 1 0`.
pub fn format_actions(actions: &[usize]) -> String {
    actions.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Actions of a feasible policy, or `None`.
fn actions_of(bits: &[bool], num_actions: usize) -> Option<Vec<usize>> {
    PolicyAssignment::from_bits(bits.to_vec(), num_actions).ok()?.actions()
}

fn agree_on(a: &Option<Vec<usize>>, b: &Option<Vec<usize>>, states: &[usize]) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => states.iter().all(|&s| a[s] == b[s]),
        _ => false,
    }
}

/// K for a cell: the configured one, or the minimal order (falling back to
/// the search limit when no order up to it qualifies). Also returns the
/// minimal order when it could be computed.
fn resolve_order(config: &ExperimentConfig, mdp: &Mdp) -> Result<(usize, Option<usize>)> {
    let minimal = if mdp.num_pairs() <= EXHAUSTIVE_LIMIT {
        minimal_truncation_order(mdp, config.penalty_strength, config.max_truncation_order)?
    } else {
        None
    };
    let order = match config.truncation_order {
        Some(k) => k,
        None => minimal.unwrap_or(config.max_truncation_order),
    };
    Ok((order, minimal))
}

fn match_rule(kind: MatchKind, ground_bits: &[bool], mdp: &Mdp) -> MatchRule {
    match kind {
        MatchKind::Energy => MatchRule::Energy,
        MatchKind::PolicyBits => {
            let na = mdp.num_actions();
            MatchRule::PolicyBits {
                target: ground_bits.to_vec(),
                indices: mdp
                    .interior_states()
                    .into_iter()
                    .flat_map(|s| (0..na).map(move |a| s * na + a))
                    .collect(),
            }
        }
    }
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSummary {
    pub energy: f64,
    /// Number of distinct original-variable minimizers.
    pub degeneracy: usize,
    pub actions: Option<Vec<usize>>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSummary {
    pub schedule: AnnealSchedule,
    pub best_energy: f64,
    pub actions: Option<Vec<usize>>,
    pub feasible: bool,
    /// Ancillas equal to the product of their parents in the best read.
    pub consistent: bool,
    /// Against the exhaustive ground state, when it was computed.
    pub success: Option<SuccessEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub config: ExperimentConfig,
    pub instance: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub truncation_order: usize,
    pub num_terms: usize,
    pub num_variables: usize,
    pub num_ancillas: usize,
    pub interior_states: Vec<usize>,
    pub optimal_actions: Vec<usize>,
    pub exhaustive: Option<GroundSummary>,
    pub annealing: Option<AnnealSummary>,
    /// The Hamiltonian's answer (exhaustive when available, otherwise the
    /// best anneal) matches value iteration on interior states.
    pub agreement: bool,
    pub annealing_agreement: bool,
    pub minimal_order: Option<usize>,
    /// `agreement == (K ≥ minimal_order)`, when the minimal order is known.
    pub consistent_with_minimal_order: Option<bool>,
    /// Steps that failed; their sections are left empty.
    pub errors: Vec<String>,
}

/// Solves the first `(|S|, γ)` of the configuration's grid.
pub fn run_solve(config: &ExperimentConfig) -> Result<SolveRecord> {
    config.validate()?;
    let mdp = config.hallway(config.num_states[0], config.discounts[0])?;
    solve_mdp(config, &mdp)
}

/// compile → quadratize → exhaustive and annealed ground states → projection
/// → comparison with value iteration.
pub fn solve_mdp(config: &ExperimentConfig, mdp: &Mdp) -> Result<SolveRecord> {
    let (order, minimal) = match (config.truncation_order, mdp.num_pairs() <= EXHAUSTIVE_LIMIT) {
        (Some(k), true) => (k, minimal_truncation_order(mdp, config.penalty_strength, config.max_truncation_order)?),
        (Some(k), false) => (k, None),
        (None, _) => resolve_order(config, mdp)?,
    };
    let (_, optimal) = value_iteration(mdp, &ValueIterationConfig::default())?;
    let optimal_actions = optimal.actions().expect("greedy policy is deterministic");
    let h = compile(mdp, &config.compiler(order))?;
    let poly = h.polynomial();
    let qubo = quadratize(&poly, config.reduction_penalty)?;
    let interior = mdp.interior_states();
    let na = mdp.num_actions();
    let mut errors = Vec::new();

    let exhaustive = match qubo_ground_state(&qubo) {
        Ok(g) => {
            let bits = qubo.project(&g.assignments[0]);
            let actions = actions_of(bits, na);
            Some((
                GroundSummary {
                    energy: g.energy,
                    degeneracy: g.assignments.len(),
                    feasible: actions.is_some(),
                    actions,
                },
                bits.to_vec(),
            ))
        }
        Err(e) => {
            errors.push(format!("exhaustive: {e}"));
            None
        }
    };

    let schedule = config.schedule_for(&qubo);
    let annealing = match simulated_anneal(&qubo.polynomial, &schedule) {
        Ok(reads) => {
            let best = reads
                .iter()
                .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.read.cmp(&b.read)))
                .expect("at least one read");
            let actions = actions_of(qubo.project(&best.assignment), na);
            let success = match &exhaustive {
                Some((g, bits)) => {
                    Some(success_probability(&reads, g.energy, &match_rule(config.match_rule, bits, mdp))?)
                }
                None => None,
            };
            Some(AnnealSummary {
                schedule,
                best_energy: best.energy,
                feasible: actions.is_some(),
                consistent: qubo.consistency_violations(&best.assignment) == 0,
                actions,
                success,
            })
        }
        Err(e) => {
            errors.push(format!("annealing: {e}"));
            None
        }
    };

    let optimal_some = Some(optimal_actions.clone());
    let annealing_agreement = annealing
        .as_ref()
        .is_some_and(|a| agree_on(&a.actions, &optimal_some, &interior));
    let agreement = match &exhaustive {
        Some((g, _)) => agree_on(&g.actions, &optimal_some, &interior),
        None => annealing_agreement,
    };
    Ok(SolveRecord {
        config: config.clone(),
        instance: mdp.name().unwrap_or("mdp").to_owned(),
        num_states: mdp.num_states(),
        num_actions: na,
        discount: mdp.discount(),
        truncation_order: order,
        num_terms: poly.num_terms(),
        num_variables: qubo.num_variables(),
        num_ancillas: qubo.num_ancillas(),
        interior_states: interior,
        optimal_actions,
        exhaustive: exhaustive.map(|(g, _)| g),
        annealing,
        agreement,
        annealing_agreement,
        minimal_order: minimal,
        consistent_with_minimal_order: minimal.map(|m| agreement == (order >= m)),
        errors,
    })
}

// ---------------------------------------------------------------- K heatmap

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub num_states: usize,
    pub discount: f64,
    pub minimal_order: Option<usize>,
    /// `ok`, `none` (no K up to the limit qualifies) or `unavailable: …`.
    pub status: String,
}

impl TableRow for HeatmapCell {
    fn header() -> Vec<&'static str> {
        vec!["num_states", "discount", "minimal_order", "status"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.num_states.to_string(),
            fmt_f64(self.discount),
            fmt_opt(self.minimal_order),
            self.status.clone(),
        ]
    }
}

fn heatmap_cell(config: &ExperimentConfig, n: usize, g: f64) -> Result<HeatmapCell> {
    let mdp = config.hallway(n, g)?;
    let (minimal_order, status) = match minimal_truncation_order(&mdp, config.penalty_strength, config.max_truncation_order) {
        Ok(Some(k)) => (Some(k), "ok".to_owned()),
        Ok(None) => (None, "none".to_owned()),
        Err(e) if e.is_limit() => (None, format!("unavailable: {e}")),
        Err(e) => return Err(e),
    };
    Ok(HeatmapCell {
        num_states: n,
        discount: g,
        minimal_order,
        status,
    })
}

pub fn run_k_heatmap(config: &ExperimentConfig) -> Result<Vec<HeatmapCell>> {
    config.validate()?;
    config
        .cells()
        .into_par_iter()
        .map(|(n, g)| heatmap_cell(config, n, g))
        .collect()
}

// ---------------------------------------------------------------- TTS sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsCell {
    pub num_states: usize,
    pub discount: f64,
    pub truncation_order: usize,
    pub num_variables: usize,
    pub ground_energy: f64,
    pub schedule: AnnealSchedule,
    /// `None` when every sweep count had zero successes.
    pub sweep: Option<TtsSweep>,
}

/// One `(cell, n_s)` line of the TTS table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsTableRow {
    pub num_states: usize,
    pub discount: f64,
    pub truncation_order: usize,
    pub num_variables: usize,
    pub num_sweeps: usize,
    pub successes: usize,
    pub reads: usize,
    pub success_probability: f64,
    pub success_std_err: f64,
    pub effort: f64,
    pub tts: Option<f64>,
    pub tts_std_err: Option<f64>,
    pub status: TtsStatus,
    pub optimal: bool,
}

impl TableRow for TtsTableRow {
    fn header() -> Vec<&'static str> {
        vec![
            "num_states",
            "discount",
            "truncation_order",
            "num_variables",
            "num_sweeps",
            "successes",
            "reads",
            "success_probability",
            "success_std_err",
            "effort",
            "tts",
            "tts_std_err",
            "status",
            "optimal",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.num_states.to_string(),
            fmt_f64(self.discount),
            self.truncation_order.to_string(),
            self.num_variables.to_string(),
            self.num_sweeps.to_string(),
            self.successes.to_string(),
            self.reads.to_string(),
            fmt_f64(self.success_probability),
            fmt_f64(self.success_std_err),
            fmt_f64(self.effort),
            fmt_opt(self.tts.map(fmt_f64)),
            fmt_opt(self.tts_std_err.map(fmt_f64)),
            kebab(&self.status),
            self.optimal.to_string(),
        ]
    }
}

impl TtsCell {
    pub fn rows(&self) -> Vec<TtsTableRow> {
        let Some(sweep) = &self.sweep else {
            return Vec::new();
        };
        sweep
            .rows
            .iter()
            .map(|r| TtsTableRow {
                num_states: self.num_states,
                discount: self.discount,
                truncation_order: self.truncation_order,
                num_variables: self.num_variables,
                num_sweeps: r.num_sweeps,
                successes: r.success.successes,
                reads: r.success.reads,
                success_probability: r.success.p,
                success_std_err: r.success.std_err,
                effort: r.estimate.effort,
                tts: r.estimate.tts,
                tts_std_err: r.estimate.tts_std_err,
                status: r.estimate.status,
                optimal: r.num_sweeps == sweep.optimal_sweeps,
            })
            .collect()
    }
}

/// TTS sweep of one quadratized instance against its exhaustive ground energy.
pub fn tts_cell(config: &ExperimentConfig, mdp: &Mdp, order: usize) -> Result<TtsCell> {
    let h = compile(mdp, &config.compiler(order))?;
    let qubo = quadratize(&h.polynomial(), config.reduction_penalty)?;
    let ground = qubo_ground_state(&qubo)?;
    let schedule = config.schedule_for(&qubo);
    let sweep_config = TtsSweepConfig {
        grid: config.sweep_grid.clone(),
        schedule,
        rule: match_rule(config.match_rule, qubo.project(&ground.assignments[0]), mdp),
        ground_energy: ground.energy,
        target_probability: config.target_probability,
        updates_per_second: config.updates_per_second,
    };
    let sweep = match tts_sweep(&qubo.polynomial, &sweep_config) {
        Ok(s) => Some(s),
        Err(Error::AllUndefined) => None,
        Err(e) => return Err(e),
    };
    Ok(TtsCell {
        num_states: mdp.num_states(),
        discount: mdp.discount(),
        truncation_order: order,
        num_variables: qubo.num_variables(),
        ground_energy: ground.energy,
        schedule,
        sweep,
    })
}

pub fn run_tts_sweep(config: &ExperimentConfig) -> Result<Vec<TtsCell>> {
    config.validate()?;
    config
        .cells()
        .into_par_iter()
        .map(|(n, g)| {
            let mdp = config.hallway(n, g)?;
            let (order, _) = resolve_order(config, &mdp)?;
            tts_cell(config, &mdp, order)
        })
        .collect()
}

// ---------------------------------------------------------------- resources

impl TableRow for ResourceReport {
    fn header() -> Vec<&'static str> {
        vec![
            "num_states",
            "num_actions",
            "truncation_order",
            "discount",
            "base_variables",
            "logical_variables",
            "coefficient_count",
            "fit_value",
            "qaoa_gate_volume_worst",
            "qaoa_gate_volume_worst_log10",
            "qaoa_gate_volume_ancilla",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.num_states.to_string(),
            self.num_actions.to_string(),
            self.truncation_order.to_string(),
            fmt_f64(self.discount),
            self.base_variables.to_string(),
            self.logical_variables.to_string(),
            self.coefficient_count.to_string(),
            fmt_f64(self.fit_value),
            fmt_f64(self.qaoa_gate_volume_worst),
            fmt_f64(self.qaoa_gate_volume_worst_log10),
            fmt_f64(self.qaoa_gate_volume_ancilla),
        ]
    }
}

pub fn run_resources(config: &ExperimentConfig) -> Result<Vec<ResourceReport>> {
    config.validate()?;
    config
        .cells()
        .into_par_iter()
        .map(|(n, g)| {
            let mdp = config.hallway(n, g)?;
            let (order, _) = resolve_order(config, &mdp)?;
            resource_report(&mdp, &config.compiler(order), config.reduction_penalty, config.qaoa_depth)
        })
        .collect()
}

// ---------------------------------------------------------------- oracle comparison

pub const ORACLES: [&str; 5] = ["value-iteration", "policy-search", "q-learning", "hamiltonian", "annealing"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub num_states: usize,
    pub discount: f64,
    pub truncation_order: usize,
    pub interior_states: Vec<usize>,
    /// Action per state for each oracle in [`ORACLES`]; `None` if infeasible.
    /// The Q-learning entry is the most common policy across seeds.
    pub policies: BTreeMap<String, Option<Vec<usize>>>,
    /// `agreement[i][j]`: oracles `i` and `j` agree on every interior state.
    pub agreement: Vec<Vec<bool>>,
    /// Fraction of Q-learning seeds whose greedy policy matches value
    /// iteration on interior states.
    pub q_learning_agreement_rate: f64,
    /// `Σ_{s,a} Q^π` of the best policy.
    pub optimal_objective: f64,
    pub hamiltonian_energy: f64,
    pub annealing_energy: f64,
}

/// One pair of the agreement matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub num_states: usize,
    pub discount: f64,
    pub truncation_order: usize,
    pub oracle_a: &'static str,
    pub oracle_b: &'static str,
    pub agree: bool,
    pub q_learning_agreement_rate: f64,
}

impl TableRow for AgreementRow {
    fn header() -> Vec<&'static str> {
        vec![
            "num_states",
            "discount",
            "truncation_order",
            "oracle_a",
            "oracle_b",
            "agree",
            "q_learning_agreement_rate",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.num_states.to_string(),
            fmt_f64(self.discount),
            self.truncation_order.to_string(),
            self.oracle_a.to_owned(),
            self.oracle_b.to_owned(),
            self.agree.to_string(),
            fmt_f64(self.q_learning_agreement_rate),
        ]
    }
}

impl OracleRecord {
    pub fn agreement_rows(&self) -> Vec<AgreementRow> {
        let mut rows = Vec::new();
        for (i, &a) in ORACLES.iter().enumerate() {
            for (j, &b) in ORACLES.iter().enumerate().skip(i + 1) {
                rows.push(AgreementRow {
                    num_states: self.num_states,
                    discount: self.discount,
                    truncation_order: self.truncation_order,
                    oracle_a: a,
                    oracle_b: b,
                    agree: self.agreement[i][j],
                    q_learning_agreement_rate: self.q_learning_agreement_rate,
                });
            }
        }
        rows
    }

    pub fn policy(&self, oracle: &str) -> Option<&Vec<usize>> {
        self.policies.get(oracle).and_then(Option::as_ref)
    }
}

/// Fraction of seeds whose Q-learning policy matches `optimal` on interior
/// states, and the most frequent policy (ties go to the smallest).
pub fn q_learning_ensemble(
    config: &ExperimentConfig,
    mdp: &Mdp,
    optimal: &[usize],
) -> Result<(f64, Vec<usize>)> {
    let interior = mdp.interior_states();
    let policies: Vec<Vec<usize>> = (0..config.q_learning_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let (_, pi) = q_learning(mdp, &config.q_learning(config.seed.wrapping_add(i)))?;
            Ok(pi.actions().expect("greedy policy is deterministic"))
        })
        .collect::<Result<_>>()?;
    let hits = policies
        .iter()
        .filter(|p| interior.iter().all(|&s| p[s] == optimal[s]))
        .count();
    let mut counts: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
    for p in &policies {
        *counts.entry(p).or_default() += 1;
    }
    let modal = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(p, _)| (*p).clone())
        .expect("at least one seed");
    Ok((hits as f64 / policies.len() as f64, modal))
}

pub fn oracle_compare(config: &ExperimentConfig, mdp: &Mdp, order: usize) -> Result<OracleRecord> {
    let interior = mdp.interior_states();
    let na = mdp.num_actions();
    let (_, vi) = value_iteration(mdp, &ValueIterationConfig::default())?;
    let vi = vi.actions().expect("greedy policy is deterministic");
    let search = best_policy_exhaustive(mdp)?;
    let (rate, modal) = q_learning_ensemble(config, mdp, &vi)?;

    let h = compile(mdp, &config.compiler(order))?;
    let qubo = quadratize(&h.polynomial(), config.reduction_penalty)?;
    let ground = qubo_ground_state(&qubo)?;
    let reads = simulated_anneal(&qubo.polynomial, &config.schedule_for(&qubo))?;
    let best = reads
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.read.cmp(&b.read)))
        .expect("at least one read");

    let columns: Vec<Option<Vec<usize>>> = vec![
        Some(vi),
        search.best.actions(),
        Some(modal),
        actions_of(qubo.project(&ground.assignments[0]), na),
        actions_of(qubo.project(&best.assignment), na),
    ];
    let agreement = columns
        .iter()
        .map(|a| columns.iter().map(|b| agree_on(a, b, &interior)).collect())
        .collect();
    Ok(OracleRecord {
        num_states: mdp.num_states(),
        discount: mdp.discount(),
        truncation_order: order,
        interior_states: interior,
        policies: ORACLES.iter().map(|s| s.to_string()).zip(columns).collect(),
        agreement,
        q_learning_agreement_rate: rate,
        optimal_objective: search.objective,
        hamiltonian_energy: ground.energy,
        annealing_energy: best.energy,
    })
}

pub fn run_oracle_compare(config: &ExperimentConfig) -> Result<Vec<OracleRecord>> {
    config.validate()?;
    // cells run one at a time; each already parallelizes its Q-learning seeds
    config
        .cells()
        .into_iter()
        .map(|(n, g)| {
            let mdp = config.hallway(n, g)?;
            let (order, _) = resolve_order(config, &mdp)?;
            oracle_compare(config, &mdp, order)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            num_states: vec![4],
            discounts: vec![0.9],
            num_reads: 200,
            q_learning_seeds: 2,
            q_learning_episodes: 2000,
            sweep_grid: vec![1, 2, 5],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let bad = [
            ExperimentConfig {
                num_states: vec![3],
                ..small()
            },
            ExperimentConfig {
                discounts: vec![1.0],
                ..small()
            },
            ExperimentConfig {
                truncation_order: Some(0),
                ..small()
            },
            ExperimentConfig {
                sweep_grid: vec![],
                ..small()
            },
            ExperimentConfig {
                beta_end: 0.01,
                ..small()
            },
            ExperimentConfig {
                target_probability: 1.0,
                ..small()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidArgument { .. })), "{c:?}");
        }
    }

    #[test]
    fn cells_are_sorted_and_deduplicated() {
        let c = ExperimentConfig {
            num_states: vec![6, 4, 6],
            discounts: vec![0.9, 0.6],
            ..ExperimentConfig::default()
        };
        assert_eq!(c.cells(), vec![(4, 0.6), (4, 0.9), (6, 0.6), (6, 0.9)]);
    }

    #[test]
    fn coefficient_scaled_schedule() {
        let c = ExperimentConfig {
            beta_scale: BetaScale::Coefficient,
            ..ExperimentConfig::default()
        };
        let s = c.schedule(4.0);
        assert_eq!((s.beta_start, s.beta_end), (0.025, 2.5));
        assert_eq!(ExperimentConfig::default().schedule(4.0).beta_end, 10.0);
    }

    #[test]
    fn heatmap_small_cell() {
        let cells = run_k_heatmap(&small()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].minimal_order, Some(2));
        assert_eq!(cells[0].status, "ok");
    }

    #[test]
    fn table_appends_config_columns() {
        let cells = run_k_heatmap(&small()).unwrap();
        let mut out = Vec::new();
        write_table(&mut out, &small(), &cells).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("num_states,discount,minimal_order,status,experiment,seed,"));
        assert!(lines.next().unwrap().starts_with("4,0.9,2,ok,solve,0,"));
    }

    #[test]
    fn solve_small_instance() {
        let r = run_solve(&ExperimentConfig {
            truncation_order: Some(2),
            ..small()
        })
        .unwrap();
        assert!(r.errors.is_empty());
        assert!(r.exhaustive.as_ref().unwrap().feasible);
        assert!(r.agreement);
        assert_eq!(r.consistent_with_minimal_order, Some(true));
        assert_eq!(r.config.truncation_order, Some(2));
    }

    #[test]
    fn tts_and_resources_are_reproducible() {
        let c = small();
        let a = run_tts_sweep(&c).unwrap();
        assert_eq!(a, run_tts_sweep(&c).unwrap());
        assert_eq!(a[0].rows().iter().filter(|r| r.optimal).count(), 1);
        let r = run_resources(&c).unwrap();
        assert_eq!(r[0].truncation_order, 2);
        assert_eq!(r[0].base_variables, 8);
    }
}
