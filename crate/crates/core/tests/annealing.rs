use kspin::anneal::{
    exhaustive_ground_state, max_incremental_drift, qubo_ground_state, simulated_anneal, success_probability,
    AnnealSchedule, MatchRule, SweepOrder,
};
use kspin::hamiltonian::{compile, CompilerConfig};
use kspin::mdp::build_hallway;
use kspin::poly::{all_assignments, PseudoBooleanPolynomial};
use kspin::quadratize::{quadratize, QuboProblem};

fn hallway_qubo(n: usize, gamma: f64, order: usize) -> QuboProblem {
    let h = compile(&build_hallway(n, gamma, 0.04).unwrap(), &CompilerConfig::new(order, 3.0)).unwrap();
    quadratize(&h.polynomial(), 5.0).unwrap()
}

#[test]
fn fixed_temperature_samples_follow_boltzmann() {
    let p = PseudoBooleanPolynomial::from_terms([(vec![0], -1.0), (vec![1], 0.5), (vec![0, 1], -0.7)]);
    let beta = 1.0;
    let reads = 20_000;
    let schedule = AnnealSchedule::new(20, beta, beta, reads, 99);
    let samples = simulated_anneal(&p, &schedule).unwrap();

    let states: Vec<Vec<bool>> = all_assignments(2).collect();
    let weights: Vec<f64> = states.iter().map(|x| (-beta * p.evaluate_unchecked(x)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let mut chi2 = 0.0;
    for (x, w) in states.iter().zip(&weights) {
        let prob = w / z;
        let observed = samples.iter().filter(|r| &r.assignment == x).count() as f64;
        let expected = prob * reads as f64;
        let sigma = (reads as f64 * prob * (1.0 - prob)).sqrt();
        assert!((observed - expected).abs() < 3.0 * sigma, "{x:?}: {observed} vs {expected:.1}");
        chi2 += (observed - expected).powi(2) / expected;
    }
    // 99.9th percentile of chi-square with 3 degrees of freedom
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn seeded_runs_are_identical() {
    let q = hallway_qubo(5, 0.9, 3);
    for order in [SweepOrder::Fixed, SweepOrder::Random] {
        let s = AnnealSchedule {
            sweep_order: order,
            ..AnnealSchedule::with_default_betas(5, 64, 42)
        };
        let a = simulated_anneal(&q.polynomial, &s).unwrap();
        assert_eq!(a, simulated_anneal(&q.polynomial, &s).unwrap());
        assert!(a.iter().enumerate().all(|(i, r)| r.read == i));
        let other = simulated_anneal(&q.polynomial, &AnnealSchedule { seed: 43, ..s }).unwrap();
        assert_ne!(a, other);
    }
}

#[test]
fn reported_energy_matches_evaluation() {
    let q = hallway_qubo(6, 0.99, 3);
    let reads = simulated_anneal(&q.polynomial, &AnnealSchedule::with_default_betas(3, 200, 5)).unwrap();
    for r in reads {
        assert_eq!(r.energy, q.polynomial.evaluate_unchecked(&r.assignment));
    }
}

#[test]
fn incremental_updates_track_full_evaluation() {
    let q = hallway_qubo(6, 0.99, 3);
    let s = AnnealSchedule::with_default_betas(10, 20, 8);
    assert!(max_incremental_drift(&q.polynomial, &s).unwrap() < 1e-9);
    // native higher-order polynomial
    let h = compile(&build_hallway(6, 0.99, 0.04).unwrap(), &CompilerConfig::new(3, 3.0)).unwrap();
    assert!(max_incremental_drift(&h.polynomial(), &s).unwrap() < 1e-9);
}

#[test]
fn two_sweeps_find_the_ground_state_sometimes() {
    let q = hallway_qubo(6, 0.99, 3);
    let ground = qubo_ground_state(&q).unwrap();
    let reads = simulated_anneal(&q.polynomial, &AnnealSchedule::with_default_betas(2, 1000, 1)).unwrap();
    let p = success_probability(&reads, ground.energy, &MatchRule::Energy).unwrap();
    assert!(p.successes > 0);
}

#[test]
fn best_read_attains_exhaustive_ground_energy() {
    for n in 4..=6 {
        for gamma in [0.6, 0.9, 0.99] {
            let q = hallway_qubo(n, gamma, 3);
            let ground = qubo_ground_state(&q).unwrap();
            let reads = simulated_anneal(&q.polynomial, &AnnealSchedule::with_default_betas(50, 1000, 3)).unwrap();
            let best = reads.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
            assert!((best - ground.energy).abs() < 1e-9, "|S|={n} γ={gamma}: {best} vs {}", ground.energy);
        }
    }
}

#[test]
fn native_k_spin_annealing_finds_the_ground_state() {
    let h = compile(&build_hallway(6, 0.99, 0.04).unwrap(), &CompilerConfig::new(3, 3.0)).unwrap();
    let poly = h.polynomial();
    let ground = exhaustive_ground_state(&poly).unwrap();
    let reads = simulated_anneal(&poly, &AnnealSchedule::with_default_betas(20, 500, 2)).unwrap();
    let p = success_probability(&reads, ground.energy, &MatchRule::Energy).unwrap();
    assert!(p.successes > 0);
}

#[test]
fn success_probability_grows_with_sweeps() {
    let q = hallway_qubo(6, 0.6, 2);
    let ground = qubo_ground_state(&q).unwrap();
    let estimates: Vec<_> = [1, 2, 5, 10, 20, 50]
        .iter()
        .map(|&ns| {
            let reads = simulated_anneal(&q.polynomial, &AnnealSchedule::with_default_betas(ns, 2000, 17)).unwrap();
            success_probability(&reads, ground.energy, &MatchRule::Energy).unwrap()
        })
        .collect();
    for w in estimates.windows(2) {
        let sigma = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
        assert!(w[1].p >= w[0].p - 2.0 * sigma, "{:?}", estimates);
    }
}
