//! Dense-oracle equivalence checks for the sweep-kernel simulator and the
//! sparse annealing integrator, at sizes where full matrices are cheap.

mod common;

use qaoa_lab::annealer::{integrate_qa, Integrator};
use qaoa_lab::problems::{sample_qubo, table_for_instance};
use qaoa_lab::simulator::{plus_state, run_qaoa, AngleSchedule};
use qaoa_lab::trajectory::{continuous_schedule, cumulative_path};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_cost_layer_matches_dense_exponential() {
    let t = table_for_instance(&sample_qubo(2, 5).unwrap()).unwrap();
    let mut s = plus_state(2).unwrap();
    s.apply_cost_phase(&t, 0.37).unwrap();
    let sched = AngleSchedule::new(vec![0.37], vec![0.0]).unwrap();
    let oracle = common::dense_qaoa(&t, &sched);
    assert!(common::max_amp_error(s.amplitudes(), &oracle) < 1e-12);
}

#[test]
fn single_mixer_layer_matches_kronecker_product() {
    let t = table_for_instance(&sample_qubo(2, 6).unwrap()).unwrap();
    let mut s = plus_state(2).unwrap();
    s.apply_cost_phase(&t, 0.2).unwrap();
    let before = s.amplitudes().to_vec();
    s.apply_mixer(0.9);
    let mixer = common::dense_mixer(2, 0.9);
    let oracle = common::matvec(&mixer, &before);
    assert!(common::max_amp_error(s.amplitudes(), &oracle) < 1e-12);
}

#[test]
fn circuits_match_dense_oracle_over_random_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..30 {
        let n = rng.random_range(2..=4);
        let t = table_for_instance(&sample_qubo(n, 200 + trial).unwrap()).unwrap();
        let p = rng.random_range(1..=5);
        let gamma: Vec<f64> = (0..p)
            .map(|_| rng.random_range(-0.5..0.5) / t.span())
            .collect();
        let theta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
        let sched = AngleSchedule::new(gamma, theta).unwrap();
        let state = run_qaoa(&t, &sched).unwrap();
        let oracle = common::dense_qaoa(&t, &sched);
        let err = common::max_amp_error(state.amplitudes(), &oracle);
        assert!(err < 1e-10, "trial {trial}: max amplitude error {err}");
    }
}

#[test]
fn annealer_matches_dense_ode_oracle() {
    let t = table_for_instance(&sample_qubo(2, 7).unwrap()).unwrap();
    let sched = AngleSchedule::new(
        vec![0.2 / t.span(), 0.5 / t.span(), 0.9 / t.span()],
        vec![0.8, 0.5, 0.3],
    )
    .unwrap();
    let cs = continuous_schedule(&cumulative_path(&sched)).unwrap();
    let steps = 400;
    let oracle = common::dense_anneal(&t, &cs, 10 * steps);
    for integrator in [Integrator::Rk4, Integrator::Trotter] {
        let state = integrate_qa(&t, &cs, steps, integrator).unwrap();
        let err = common::infidelity(state.amplitudes(), &oracle);
        assert!(err < 1e-8, "{integrator}: fidelity error {err}");
    }
}
