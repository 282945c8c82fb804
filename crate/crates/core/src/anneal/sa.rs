//! Metropolis simulated annealing on pseudo-Boolean polynomials of any degree.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::model::EnergyModel;
use crate::error::{Error, Result};
use crate::poly::PseudoBooleanPolynomial;

/// Default inverse-temperature range. [`scaled_betas`] divides both ends by
/// the largest coefficient magnitude instead.
pub const DEFAULT_BETA_START: f64 = 0.1;
pub const DEFAULT_BETA_END: f64 = 10.0;
pub const DEFAULT_NUM_READS: usize = 1000;
/// Energy-match tolerance used by [`MatchRule::Energy`].
pub const ENERGY_MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    /// Variables visited in index order every sweep.
    #[default]
    Fixed,
    /// A fresh random permutation per sweep.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub num_sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub num_reads: usize,
    pub seed: u64,
    #[serde(default)]
    pub sweep_order: SweepOrder,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self::with_default_betas(10, DEFAULT_NUM_READS, 0)
    }
}

impl AnnealSchedule {
    pub fn new(num_sweeps: usize, beta_start: f64, beta_end: f64, num_reads: usize, seed: u64) -> Self {
        Self {
            num_sweeps,
            beta_start,
            beta_end,
            num_reads,
            seed,
            sweep_order: SweepOrder::Fixed,
        }
    }

    /// β from [`DEFAULT_BETA_START`] to [`DEFAULT_BETA_END`].
    pub fn with_default_betas(num_sweeps: usize, num_reads: usize, seed: u64) -> Self {
        Self::new(num_sweeps, DEFAULT_BETA_START, DEFAULT_BETA_END, num_reads, seed)
    }

    /// β running from `0.1 / J` to `10 / J`, where `J` is the largest
    /// non-constant coefficient magnitude of `poly`.
    pub fn scaled_for(poly: &PseudoBooleanPolynomial, num_sweeps: usize, num_reads: usize, seed: u64) -> Self {
        let (beta_start, beta_end) = scaled_betas(poly);
        Self::new(num_sweeps, beta_start, beta_end, num_reads, seed)
    }

    pub fn with_sweeps(mut self, num_sweeps: usize) -> Self {
        self.num_sweeps = num_sweeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sweeps == 0 {
            return Err(Error::invalid("num_sweeps", "need at least one sweep"));
        }
        if self.num_reads == 0 {
            return Err(Error::invalid("num_reads", "need at least one read"));
        }
        if !(self.beta_start > 0.0 && self.beta_start.is_finite()) {
            return Err(Error::invalid("beta_start", format!("{} must be positive and finite", self.beta_start)));
        }
        if !(self.beta_end >= self.beta_start) {
            return Err(Error::invalid(
                "beta_end",
                format!("{} is below beta_start {}", self.beta_end, self.beta_start),
            ));
        }
        Ok(())
    }

    /// Inverse temperature of sweep `i` (0-based), linear from start to end.
    /// A single sweep runs at `beta_end`.
    pub fn beta_at(&self, i: usize) -> f64 {
        if self.num_sweeps <= 1 {
            return self.beta_end;
        }
        let t = i as f64 / (self.num_sweeps - 1) as f64;
        self.beta_start + t * (self.beta_end - self.beta_start)
    }
}

/// `(0.1 / J, 10 / J)` with `J` the largest non-constant coefficient magnitude.
pub fn scaled_betas(poly: &PseudoBooleanPolynomial) -> (f64, f64) {
    let scale = poly
        .terms()
        .filter(|(m, _)| !m.is_constant())
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    (DEFAULT_BETA_START / scale, DEFAULT_BETA_END / scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealRead {
    pub read: usize,
    pub assignment: Vec<bool>,
    pub energy: f64,
}

fn read_rng(seed: u64, read: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read as u64);
    rng
}

/// One annealing run. With `check` set, the tracked energy is compared with a
/// full re-evaluation after every attempted flip and the largest discrepancy
/// is returned alongside the final state.
fn anneal_once(
    model: &EnergyModel,
    schedule: &AnnealSchedule,
    read: usize,
    check: Option<&PseudoBooleanPolynomial>,
) -> (Vec<bool>, f64) {
    let n = model.num_variables;
    let mut rng = read_rng(schedule.seed, read);
    let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut tracked = model.energy(&x);
    let mut drift: f64 = 0.0;

    for sweep in 0..schedule.num_sweeps {
        let beta = schedule.beta_at(sweep);
        if schedule.sweep_order == SweepOrder::Random {
            order.shuffle(&mut rng);
        }
        for &v in &order {
            let de = model.delta(&x, v);
            if de <= 0.0 || rng.gen::<f64>() < (-beta * de).exp() {
                x[v] = !x[v];
                tracked += de;
            }
            if let Some(poly) = check {
                drift = drift.max((tracked - poly.evaluate_unchecked(&x)).abs());
            }
        }
    }
    (x, drift)
}

/// Runs `num_reads` independent anneals. Each read starts from a uniformly
/// random assignment drawn from its own ChaCha8 stream (`seed`, stream = read
/// index), so results do not depend on thread scheduling. Reads are returned
/// in read order with energies re-evaluated from the polynomial.
pub fn simulated_anneal(poly: &PseudoBooleanPolynomial, schedule: &AnnealSchedule) -> Result<Vec<AnnealRead>> {
    schedule.validate()?;
    let model = EnergyModel::new(poly);
    let reads = (0..schedule.num_reads)
        .into_par_iter()
        .map(|read| {
            let (assignment, _) = anneal_once(&model, schedule, read, None);
            let energy = poly.evaluate_unchecked(&assignment);
            AnnealRead { read, assignment, energy }
        })
        .collect();
    Ok(reads)
}

/// Largest gap between the incrementally tracked energy and a full
/// re-evaluation over every attempted flip of every read.
pub fn max_incremental_drift(poly: &PseudoBooleanPolynomial, schedule: &AnnealSchedule) -> Result<f64> {
    schedule.validate()?;
    let model = EnergyModel::new(poly);
    Ok((0..schedule.num_reads)
        .map(|read| anneal_once(&model, schedule, read, Some(poly)).1)
        .fold(0.0, f64::max))
}

/// What counts as a successful read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum MatchRule {
    /// Energy within [`ENERGY_MATCH_TOLERANCE`] of the ground energy.
    Energy,
    /// The read agrees with `target` at every listed variable index.
    PolicyBits { target: Vec<bool>, indices: Vec<usize> },
}

impl MatchRule {
    pub fn matches(&self, read: &AnnealRead, ground_energy: f64) -> bool {
        match self {
            MatchRule::Energy => read.energy <= ground_energy + ENERGY_MATCH_TOLERANCE,
            MatchRule::PolicyBits { target, indices } => indices
                .iter()
                .all(|&i| read.assignment.get(i).is_some_and(|&b| Some(&b) == target.get(i))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub successes: usize,
    pub reads: usize,
    pub p: f64,
    /// Binomial standard error `sqrt(p (1 - p) / reads)`.
    pub std_err: f64,
}

impl SuccessEstimate {
    pub fn from_counts(successes: usize, reads: usize) -> Result<Self> {
        if reads == 0 {
            return Err(Error::NoReads);
        }
        if successes > reads {
            return Err(Error::invalid("successes", format!("{successes} exceeds {reads} reads")));
        }
        let p = successes as f64 / reads as f64;
        Ok(Self {
            successes,
            reads,
            p,
            std_err: (p * (1.0 - p) / reads as f64).sqrt(),
        })
    }
}

pub fn success_probability(reads: &[AnnealRead], ground_energy: f64, rule: &MatchRule) -> Result<SuccessEstimate> {
    let hits = reads.iter().filter(|r| rule.matches(r, ground_energy)).count();
    SuccessEstimate::from_counts(hits, reads.len())
}
