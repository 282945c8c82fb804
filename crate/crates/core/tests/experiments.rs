use kspin::experiments::{
    oracle_compare, run_k_heatmap, run_resources, run_solve, run_tts_sweep, write_table, ExperimentConfig, TableRow,
    ORACLES,
};
use kspin::mdp::build_hallway;

const SYMMETRIC: [usize; 4] = [0, 0, 1, 1];
const LEFT_AT_1_TO_3: [usize; 4] = [0, 0, 0, 1];

fn solve(gamma: f64, order: usize) -> kspin::experiments::SolveRecord {
    let cfg = ExperimentConfig {
        num_states: vec![6],
        discounts: vec![gamma],
        truncation_order: Some(order),
        num_reads: 300,
        num_sweeps: 50,
        ..Default::default()
    };
    run_solve(&cfg).unwrap()
}

fn interior(actions: &[usize]) -> &[usize] {
    &actions[1..5]
}

#[test]
fn solve_recovers_the_optimal_policy_at_order_three() {
    let r = solve(0.99, 3);
    assert!(r.agreement);
    assert!(r.errors.is_empty());
    let g = r.exhaustive.as_ref().unwrap();
    assert!(g.feasible);
    assert_eq!(interior(g.actions.as_ref().unwrap()), LEFT_AT_1_TO_3);
    assert_eq!(r.consistent_with_minimal_order, Some(true));
    assert!(r.annealing.as_ref().unwrap().consistent);
}

#[test]
fn order_two_gives_the_symmetric_policy() {
    for gamma in [0.99, 0.8] {
        let r = solve(gamma, 2);
        assert!(!r.agreement, "γ={gamma}");
        assert_eq!(interior(r.exhaustive.unwrap().actions.as_ref().unwrap()), SYMMETRIC);
        assert_eq!(r.consistent_with_minimal_order, Some(true));
    }
}

#[test]
fn solve_record_embeds_its_configuration() {
    let r = solve(0.99, 3);
    let json = serde_json::to_string(&r).unwrap();
    let back: kspin::experiments::SolveRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    assert_eq!(run_solve(&back.config).unwrap(), r);
}

#[test]
fn heatmap_cells_match_exhaustive_evaluation() {
    let cfg = ExperimentConfig {
        num_states: vec![4, 6],
        discounts: vec![0.8, 0.9],
        ..Default::default()
    };
    let cells = run_k_heatmap(&cfg).unwrap();
    let get = |n, g| cells.iter().find(|c| c.num_states == n && c.discount == g).unwrap().minimal_order;
    assert_eq!(get(6, 0.8), Some(3));
    assert_eq!(get(4, 0.9), Some(2));
    assert_eq!(cells.len(), 4);
}

#[test]
fn solve_agreement_tracks_the_minimal_order() {
    for order in 1..=4 {
        let r = solve(0.9, order);
        assert_eq!(r.consistent_with_minimal_order, Some(true), "K={order}");
    }
}

#[test]
fn tts_tables_are_reproducible() {
    let cfg = ExperimentConfig {
        num_states: vec![4, 5],
        discounts: vec![0.9],
        sweep_grid: vec![1, 2, 5, 10],
        num_reads: 300,
        ..Default::default()
    };
    let a = run_tts_sweep(&cfg).unwrap();
    assert_eq!(a, run_tts_sweep(&cfg).unwrap());
    for cell in &a {
        let sweep = cell.sweep.as_ref().unwrap();
        assert_eq!(sweep.rows.len(), 4);
        for row in &sweep.rows {
            let s = &row.estimate;
            let p = s.success_probability;
            let expected = (p * (1.0 - p) / 300.0).sqrt();
            assert!((s.success_std_err - expected).abs() < 1e-12);
        }
    }
    let mut buf = Vec::new();
    let rows: Vec<_> = a.iter().flat_map(|c| c.rows()).collect();
    write_table(&mut buf, &cfg, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rows.len() + 1);
    assert!(text.lines().next().unwrap().contains("seed"));
}

#[test]
fn resources_table_has_one_row_per_cell() {
    let cfg = ExperimentConfig {
        num_states: vec![4, 5, 6],
        discounts: vec![0.9],
        truncation_order: Some(2),
        ..Default::default()
    };
    let rows = run_resources(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0].logical_variables < w[1].logical_variables));
    let header = kspin::resources::ResourceReport::header();
    assert!(rows.iter().all(|r| r.fields().len() == header.len()));
}

#[test]
fn all_deterministic_oracles_agree_at_order_three() {
    let cfg = ExperimentConfig {
        num_reads: 300,
        num_sweeps: 50,
        ..Default::default()
    };
    let rec = oracle_compare(&cfg, &build_hallway(6, 0.99, 0.04).unwrap(), 3).unwrap();
    for (i, a) in ORACLES.iter().enumerate() {
        for (j, b) in ORACLES.iter().enumerate() {
            assert!(rec.agreement[i][j], "{a} vs {b}");
        }
    }
    assert!(rec.q_learning_agreement_rate >= 0.95);
    assert_eq!(rec.agreement_rows().len(), 10);
}

#[test]
fn hamiltonian_columns_disagree_at_order_two() {
    let cfg = ExperimentConfig {
        num_reads: 300,
        num_sweeps: 50,
        q_learning_seeds: 4,
        ..Default::default()
    };
    let rec = oracle_compare(&cfg, &build_hallway(6, 0.99, 0.04).unwrap(), 2).unwrap();
    let idx = |name| ORACLES.iter().position(|o| *o == name).unwrap();
    let vi = idx("value-iteration");
    assert!(rec.agreement[vi][idx("policy-search")]);
    assert!(!rec.agreement[vi][idx("hamiltonian")]);
    assert!(!rec.agreement[vi][idx("annealing")]);
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        ExperimentConfig {
            num_states: vec![],
            ..Default::default()
        },
        ExperimentConfig {
            discounts: vec![1.0],
            ..Default::default()
        },
        ExperimentConfig {
            num_reads: 0,
            ..Default::default()
        },
        ExperimentConfig {
            beta_end: 0.01,
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
}
