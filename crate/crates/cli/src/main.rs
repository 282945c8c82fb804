use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kspin::anneal::{
    anneal_effort, exhaustive_ground_state, qubo_ground_state, simulated_anneal, success_probability,
    tts_from_estimate, AnnealRead, MatchRule, SweepOrder,
};
use kspin::experiments::{
    format_actions, run_k_heatmap, run_oracle_compare, run_resources, run_solve, run_tts_sweep, solve_mdp,
    BetaScale, Experiment, ExperimentConfig, MatchKind, TableRow,
};
use kspin::hamiltonian::{compile, minimal_truncation_order, truncated_q_table, EXHAUSTIVE_LIMIT};
use kspin::mdp::{load_mdp, save_mdp, Boundary, Mdp};
use kspin::oracles::{best_policy_exhaustive, policy_evaluation_exact, q_learning, value_iteration, QTable, ValueIterationConfig};
use kspin::poly::PseudoBooleanPolynomial;
use kspin::quadratize::quadratize;
use kspin::resources::resource_report;

mod output;

use output::{CliError, Output};

#[derive(Parser)]
#[command(name = "kspin", version, about = "Compile MDPs into K-spin Hamiltonians and run the experiments")]
struct Cli {
    /// TOML file with experiment settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a hallway MDP document.
    Hallway(InstanceArgs),
    /// Compile an MDP into the K-spin polynomial.
    Compile(InstanceArgs),
    /// Reduce a polynomial to a QUBO.
    Quadratize {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Read a polynomial in text form instead of compiling an MDP.
        #[arg(long, value_name = "FILE")]
        poly: Option<PathBuf>,
    },
    /// Simulated annealing with one CSV row per read and a summary row.
    Anneal {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Anneal a polynomial in text form instead of a compiled MDP.
        #[arg(long, value_name = "FILE")]
        poly: Option<PathBuf>,
    },
    /// Q tables and greedy policies from a dynamic-programming oracle.
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value = "value-iteration")]
        method: OracleMethod,
    },
    /// Variable and coefficient counts, one row per instance.
    Resources(InstanceArgs),
    /// Full pipeline on one instance, as a JSON record.
    Solve(InstanceArgs),
    /// Minimal truncation order per (|S|, γ) cell.
    KHeatmap(InstanceArgs),
    /// Success probability and time-to-solution against the sweep count.
    TtsSweep(InstanceArgs),
    /// Policy agreement across all oracles.
    OracleCompare(InstanceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    ValueIteration,
    PolicySearch,
    QLearning,
    /// K-step truncated Q of the value-iteration policy.
    Truncated,
}

/// Instance selection and overrides for every configuration key.
#[derive(Args, Default)]
struct InstanceArgs {
    /// MDP document (JSON); replaces the hallway grid.
    #[arg(long, value_name = "FILE")]
    mdp: Option<PathBuf>,
    /// Hallway sizes, comma separated.
    #[arg(long, value_delimiter = ',', alias = "num-states")]
    states: Option<Vec<usize>>,
    /// Discount factors, comma separated.
    #[arg(long, value_delimiter = ',', alias = "gamma")]
    gammas: Option<Vec<f64>>,
    #[arg(long)]
    slip: Option<f64>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    /// Truncation order K; the minimal order per instance when absent.
    #[arg(long, short = 'K', alias = "order")]
    k: Option<usize>,
    #[arg(long)]
    max_order: Option<usize>,
    /// One-hot penalty strength M.
    #[arg(long, short = 'M')]
    penalty: Option<f64>,
    /// Reduction penalty M_OR.
    #[arg(long)]
    reduction_penalty: Option<f64>,
    #[arg(long)]
    term_budget: Option<u64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sweep_grid: Option<Vec<usize>>,
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    #[arg(long, value_enum)]
    beta_scale: Option<BetaScaleArg>,
    #[arg(long, value_enum)]
    sweep_order: Option<SweepOrderArg>,
    #[arg(long, value_enum)]
    match_rule: Option<MatchArg>,
    /// Target success probability for time-to-solution.
    #[arg(long)]
    pd: Option<f64>,
    /// Variable updates per second; time-to-solution in seconds when set.
    #[arg(long)]
    update_rate: Option<f64>,
    #[arg(long)]
    q_seeds: Option<usize>,
    /// Q-learning episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Q-learning step size.
    #[arg(long)]
    alpha: Option<f64>,
    /// Q-learning exploration rate.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    qaoa_depth: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Absorbing,
    Reflecting,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaScaleArg {
    Absolute,
    Coefficient,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepOrderArg {
    Fixed,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchArg {
    Energy,
    PolicyBits,
}

impl InstanceArgs {
    fn apply(&self, c: &mut ExperimentConfig) {
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    c.$field = v;
                }
            };
        }
        set!(num_states, self.states.clone());
        set!(discounts, self.gammas.clone());
        set!(slip, self.slip);
        set!(
            boundary,
            self.boundary.map(|b| match b {
                BoundaryArg::Absorbing => Boundary::Absorbing,
                BoundaryArg::Reflecting => Boundary::Reflecting,
            })
        );
        if self.k.is_some() {
            c.truncation_order = self.k;
        }
        set!(max_truncation_order, self.max_order);
        set!(penalty_strength, self.penalty);
        set!(reduction_penalty, self.reduction_penalty);
        set!(term_budget, self.term_budget);
        set!(num_sweeps, self.sweeps);
        set!(sweep_grid, self.sweep_grid.clone());
        set!(num_reads, self.reads);
        set!(beta_start, self.beta_start);
        set!(beta_end, self.beta_end);
        set!(
            beta_scale,
            self.beta_scale.map(|b| match b {
                BetaScaleArg::Absolute => BetaScale::Absolute,
                BetaScaleArg::Coefficient => BetaScale::Coefficient,
            })
        );
        set!(
            sweep_order,
            self.sweep_order.map(|o| match o {
                SweepOrderArg::Fixed => SweepOrder::Fixed,
                SweepOrderArg::Random => SweepOrder::Random,
            })
        );
        set!(
            match_rule,
            self.match_rule.map(|m| match m {
                MatchArg::Energy => MatchKind::Energy,
                MatchArg::PolicyBits => MatchKind::PolicyBits,
            })
        );
        set!(target_probability, self.pd);
        if self.update_rate.is_some() {
            c.updates_per_second = self.update_rate;
        }
        set!(q_learning_seeds, self.q_seeds);
        set!(q_learning_episodes, self.episodes);
        set!(learning_rate, self.alpha);
        set!(epsilon, self.epsilon);
        set!(qaoa_depth, self.qaoa_depth);
    }
}

struct Context {
    config: ExperimentConfig,
    out: Output,
}

impl Context {
    fn new(cli: &Cli, args: &InstanceArgs, experiment: Experiment) -> Result<Self, CliError> {
        let mut config = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        args.apply(&mut config);
        config.experiment = experiment;
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(Self {
            config,
            out: Output::new(cli.out.clone())?,
        })
    }

    /// The `--mdp` document, or the first hallway of the grid.
    fn instance(&self, args: &InstanceArgs) -> Result<Mdp, CliError> {
        match &args.mdp {
            Some(path) => Ok(load_mdp(&read(path)?)?),
            None => Ok(self.config.hallway(self.config.num_states[0], self.config.discounts[0])?),
        }
    }

    /// The configured K, or the minimal order of `mdp`.
    fn order(&self, mdp: &Mdp) -> Result<usize, CliError> {
        if let Some(k) = self.config.truncation_order {
            return Ok(k);
        }
        if mdp.num_pairs() > EXHAUSTIVE_LIMIT {
            return Err(CliError::Validation(
                "instance too large to search for the minimal order; pass -K".into(),
            ));
        }
        let max = self.config.max_truncation_order;
        minimal_truncation_order(mdp, self.config.penalty_strength, max)?
            .ok_or_else(|| CliError::Limit(format!("no truncation order up to {max} recovers the optimal policy")))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn stats_block(poly: &PseudoBooleanPolynomial, offset: f64) -> String {
    format!(
        "# variables {}\n# terms {}\n# degree {}\n# constant_offset {offset:?}\n",
        poly.num_variables(),
        poly.num_terms(),
        poly.degree()
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Hallway(args) => {
            let ctx = Context::new(&cli, args, Experiment::Hallway)?;
            let mdp = ctx.instance(args)?;
            ctx.out.emit("mdp.json", &save_mdp(&mdp))
        }
        Command::Compile(args) => {
            let ctx = Context::new(&cli, args, Experiment::Compile)?;
            let mdp = ctx.instance(args)?;
            let h = compile(&mdp, &ctx.config.compiler(ctx.order(&mdp)?))?;
            let poly = h.polynomial();
            let text = stats_block(&poly, h.constant_offset) + &poly.to_text();
            ctx.out.emit("hamiltonian.txt", &text)
        }
        Command::Quadratize { instance, poly } => {
            let ctx = Context::new(&cli, instance, Experiment::Quadratize)?;
            let input = match poly {
                Some(path) => PseudoBooleanPolynomial::from_text(&read(path)?)?,
                None => {
                    let mdp = ctx.instance(instance)?;
                    compile(&mdp, &ctx.config.compiler(ctx.order(&mdp)?))?.polynomial()
                }
            };
            let qubo = quadratize(&input, ctx.config.reduction_penalty)?;
            ctx.out.emit("qubo.txt", &qubo.to_coordinate_text())
        }
        Command::Anneal { instance, poly } => {
            let ctx = Context::new(&cli, instance, Experiment::Anneal)?;
            anneal(&ctx, instance, poly.as_deref())
        }
        Command::Oracle { instance, method } => {
            let ctx = Context::new(&cli, instance, Experiment::Oracle)?;
            oracle(&ctx, instance, *method)
        }
        Command::Resources(args) => {
            let ctx = Context::new(&cli, args, Experiment::Resources)?;
            let rows = match &args.mdp {
                Some(_) => {
                    let mdp = ctx.instance(args)?;
                    let c = &ctx.config;
                    vec![resource_report(&mdp, &c.compiler(ctx.order(&mdp)?), c.reduction_penalty, c.qaoa_depth)?]
                }
                None => run_resources(&ctx.config)?,
            };
            ctx.out.table("resources.csv", &ctx.config, &rows)
        }
        Command::Solve(args) => {
            let ctx = Context::new(&cli, args, Experiment::Solve)?;
            let record = match &args.mdp {
                Some(_) => solve_mdp(&ctx.config, &ctx.instance(args)?)?,
                None => run_solve(&ctx.config)?,
            };
            ctx.out.json("solve.json", &record)
        }
        Command::KHeatmap(args) => {
            let ctx = Context::new(&cli, args, Experiment::KHeatmap)?;
            let cells = run_k_heatmap(&ctx.config)?;
            ctx.out.table("k_heatmap.csv", &ctx.config, &cells)
        }
        Command::TtsSweep(args) => {
            let ctx = Context::new(&cli, args, Experiment::TtsSweep)?;
            let cells = run_tts_sweep(&ctx.config)?;
            let rows: Vec<_> = cells.iter().flat_map(|c| c.rows()).collect();
            ctx.out.table("tts_sweep.csv", &ctx.config, &rows)
        }
        Command::OracleCompare(args) => {
            let ctx = Context::new(&cli, args, Experiment::OracleCompare)?;
            let records = run_oracle_compare(&ctx.config)?;
            let rows: Vec<_> = records.iter().flat_map(|r| r.agreement_rows()).collect();
            ctx.out.table("oracle_agreement.csv", &ctx.config, &rows)?;
            ctx.out.json("oracle_compare.json", &records)
        }
    }
}

struct ReadRow {
    read: usize,
    energy: f64,
    feasible: Option<bool>,
    consistent: Option<bool>,
    bits: String,
    success: Option<bool>,
}

impl TableRow for ReadRow {
    fn header() -> Vec<&'static str> {
        vec!["read", "energy", "feasible", "consistent", "policy_bits", "success"]
    }

    fn fields(&self) -> Vec<String> {
        let opt = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        vec![
            self.read.to_string(),
            format!("{:?}", self.energy),
            opt(self.feasible),
            opt(self.consistent),
            self.bits.clone(),
            opt(self.success),
        ]
    }
}

struct SummaryRow {
    num_variables: usize,
    num_sweeps: usize,
    num_reads: usize,
    beta_start: f64,
    beta_end: f64,
    best_energy: f64,
    ground_energy: Option<f64>,
    successes: Option<usize>,
    success_probability: Option<f64>,
    success_std_err: Option<f64>,
    tts: Option<f64>,
    tts_std_err: Option<f64>,
}

impl TableRow for SummaryRow {
    fn header() -> Vec<&'static str> {
        vec![
            "num_variables",
            "num_sweeps",
            "num_reads",
            "beta_start",
            "beta_end",
            "best_energy",
            "ground_energy",
            "successes",
            "success_probability",
            "success_std_err",
            "tts",
            "tts_std_err",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
        vec![
            self.num_variables.to_string(),
            self.num_sweeps.to_string(),
            self.num_reads.to_string(),
            format!("{:?}", self.beta_start),
            format!("{:?}", self.beta_end),
            format!("{:?}", self.best_energy),
            f(self.ground_energy),
            self.successes.map(|s| s.to_string()).unwrap_or_default(),
            f(self.success_probability),
            f(self.success_std_err),
            f(self.tts),
            f(self.tts_std_err),
        ]
    }
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn anneal(ctx: &Context, args: &InstanceArgs, poly: Option<&Path>) -> Result<(), CliError> {
    let cfg = &ctx.config;
    // polynomial, per-read (feasible, consistent, base bits), ground energy
    type Classify<'a> = Box<dyn Fn(&AnnealRead) -> (Option<bool>, Option<bool>, String) + 'a>;
    let (target, classify, ground): (PseudoBooleanPolynomial, Classify, Option<f64>) = match poly {
        Some(path) => {
            let p = PseudoBooleanPolynomial::from_text(&read(path)?)?;
            let ground = exhaustive_ground_state(&p).ok().map(|g| g.energy);
            (p, Box::new(|r: &AnnealRead| (None, None, bit_string(&r.assignment))), ground)
        }
        None => {
            let mdp = ctx.instance(args)?;
            let h = compile(&mdp, &cfg.compiler(ctx.order(&mdp)?))?;
            let qubo = quadratize(&h.polynomial(), cfg.reduction_penalty)?;
            let ground = qubo_ground_state(&qubo).ok().map(|g| g.energy);
            let na = mdp.num_actions();
            let p = qubo.polynomial.clone();
            let classify = move |r: &AnnealRead| {
                let base = qubo.project(&r.assignment);
                let feasible = base.chunks(na).all(|row| row.iter().filter(|&&b| b).count() == 1);
                (
                    Some(feasible),
                    Some(qubo.consistency_violations(&r.assignment) == 0),
                    bit_string(base),
                )
            };
            (p, Box::new(classify), ground)
        }
    };
    let schedule = cfg.schedule(target.max_abs_coefficient());
    let reads = simulated_anneal(&target, &schedule)?;
    let rows: Vec<ReadRow> = reads
        .iter()
        .map(|r| {
            let (feasible, consistent, bits) = classify(r);
            ReadRow {
                read: r.read,
                energy: r.energy,
                feasible,
                consistent,
                bits,
                success: ground.map(|g| MatchRule::Energy.matches(r, g)),
            }
        })
        .collect();
    let best_energy = reads.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    let estimate = ground.map(|g| success_probability(&reads, g, &MatchRule::Energy)).transpose()?;
    let effort = anneal_effort(schedule.num_sweeps, target.num_variables(), cfg.updates_per_second);
    let tts = estimate.as_ref().map(|e| tts_from_estimate(e, effort, cfg.target_probability));
    let summary = SummaryRow {
        num_variables: target.num_variables(),
        num_sweeps: schedule.num_sweeps,
        num_reads: schedule.num_reads,
        beta_start: schedule.beta_start,
        beta_end: schedule.beta_end,
        best_energy,
        ground_energy: ground,
        successes: estimate.as_ref().map(|e| e.successes),
        success_probability: estimate.as_ref().map(|e| e.p),
        success_std_err: estimate.as_ref().map(|e| e.std_err),
        tts: tts.as_ref().and_then(|t| t.tts),
        tts_std_err: tts.as_ref().and_then(|t| t.tts_std_err),
    };
    ctx.out.table("anneal_reads.csv", cfg, &rows)?;
    ctx.out.table("anneal_summary.csv", cfg, &[summary])
}

fn oracle(ctx: &Context, args: &InstanceArgs, method: OracleMethod) -> Result<(), CliError> {
    let mdp = ctx.instance(args)?;
    let (q, policy): (QTable, Vec<usize>) = match method {
        OracleMethod::ValueIteration => {
            let (q, pi) = value_iteration(&mdp, &ValueIterationConfig::default())?;
            (q, pi.actions().expect("greedy policy is deterministic"))
        }
        OracleMethod::PolicySearch => {
            let search = best_policy_exhaustive(&mdp)?;
            let q = policy_evaluation_exact(&mdp, &search.best)?;
            (q, search.best.actions().expect("search returns deterministic policies"))
        }
        OracleMethod::QLearning => {
            let (q, pi) = q_learning(&mdp, &ctx.config.q_learning(ctx.config.seed))?;
            (q, pi.actions().expect("greedy policy is deterministic"))
        }
        OracleMethod::Truncated => {
            let (_, pi) = value_iteration(&mdp, &ValueIterationConfig::default())?;
            let q = truncated_q_table(&mdp, &pi, ctx.order(&mdp)?)?;
            (q, pi.actions().expect("greedy policy is deterministic"))
        }
    };
    let mut buf = Vec::new();
    q.write_csv(&mut buf)?;
    ctx.out.emit("q_table.csv", &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    ctx.out.emit("policy.csv", &format!("policy\n{}\n", format_actions(&policy)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
