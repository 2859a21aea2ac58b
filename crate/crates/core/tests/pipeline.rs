//! End-to-end flows over the persisted formats: ensemble determinism and
//! resume, report tables from synthetic rows, convergence wiring, and
//! measurement sampling against exact probabilities.

mod common;

use std::fs;

use qaoa_lab::ensemble::{instance_seed, run_ensemble, EnsembleConfig};
use qaoa_lab::optimizer::{optimize_p, OptimizeConfig};
use qaoa_lab::problems::{sample_qubo, table_for_instance};
use qaoa_lab::records::{read_json, write_json, InstanceFile, ResultFile};
use qaoa_lab::sampling::sample_bitstrings;
use qaoa_lab::simulator::run_qaoa;
use qaoa_lab::thermofit::{fit_bimodal, FitConfig};

fn fast_opt() -> OptimizeConfig {
    OptimizeConfig {
        restarts: 1,
        grid: 16,
        max_evals: 6000,
        ..Default::default()
    }
}

#[test]
fn ensemble_rows_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EnsembleConfig {
        n_list: vec![4, 5],
        p_list: vec![1, 2],
        instances: 2,
        base_seed: 7,
        optimizer: fast_opt(),
        fit: FitConfig { n_starts: 4, ..Default::default() },
        zeta_list: Some(vec![1.0, 2.0]),
        output_dir: dir.path().to_path_buf(),
        workers: 0,
    };
    let report = run_ensemble(&cfg).unwrap();
    assert_eq!(report.rows.len(), 8);
    assert_eq!(report.rescale_rows.len(), 8);
    assert_eq!(report.failed, 0);

    // Rescaling by 1 reproduces the full-depth fit exactly.
    for rr in report.rescale_rows.iter().filter(|r| r.zeta == 1.0) {
        let row = report
            .rows
            .iter()
            .find(|row| row.instance_id == rr.instance_id && row.p == rr.p)
            .unwrap();
        assert_eq!(row.beta_high.to_bits(), rr.beta_high.to_bits());
    }

    // The persisted file parses back into the same rows.
    let text = fs::read_to_string(&report.rows_path).unwrap();
    let parsed: Vec<qaoa_lab::ensemble::Row> = text
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    assert_eq!(parsed.len(), report.rows.len());
    for (a, b) in parsed.iter().zip(&report.rows) {
        assert_eq!(a.instance_id, b.instance_id);
        assert_eq!(a.beta_high.to_bits(), b.beta_high.to_bits());
    }
}

#[test]
fn optimize_result_files_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let q = sample_qubo(5, 31).unwrap();
    let t = table_for_instance(&q).unwrap();
    let res = optimize_p(&t, 3, &fast_opt());

    let path = dir.path().join("result.json");
    write_json(
        &path,
        &ResultFile {
            instance_id: q.instance_id().to_string(),
            p: 3,
            gamma: res.schedule.gamma().to_vec(),
            theta: res.schedule.theta().to_vec(),
            value: res.value,
            ground_overlap: res.ground_overlap,
            evals: res.evals,
            seed: 0,
            n: q.n(),
        },
    )
    .unwrap();
    let instance_path = dir.path().join("instance.json");
    write_json(&instance_path, &InstanceFile::from_instance(&q)).unwrap();

    // Replaying the persisted schedule reproduces the persisted value.
    let loaded: ResultFile = read_json(&path).unwrap();
    let loaded_instance: InstanceFile = read_json(&instance_path).unwrap();
    let t2 = table_for_instance(&loaded_instance.to_instance().unwrap()).unwrap();
    let state = run_qaoa(&t2, &loaded.schedule().unwrap()).unwrap();
    let value = qaoa_lab::simulator::energy_expectation(&state, &t2).unwrap();
    assert_eq!(value.to_bits(), loaded.value.to_bits());
}

#[test]
fn instance_seeds_differ_across_cells() {
    let mut seen = std::collections::HashSet::new();
    for n in [4usize, 8, 12] {
        for idx in 0..50 {
            assert!(seen.insert(instance_seed(99, n, idx)));
        }
    }
}

#[test]
fn sampling_tracks_ground_overlap() {
    let q = sample_qubo(6, 4).unwrap();
    let t = table_for_instance(&q).unwrap();
    let res = optimize_p(&t, 3, &fast_opt());
    let state = run_qaoa(&t, &res.schedule).unwrap();
    let probs = state.probabilities();

    let shots = 200_000;
    let draws = sample_bitstrings(&probs, shots, 555).unwrap();
    let ground: std::collections::HashSet<usize> =
        t.ground_states().iter().copied().collect();
    let hits = draws.iter().filter(|z| ground.contains(z)).count();
    let freq = hits as f64 / shots as f64;
    let sigma =
        (res.ground_overlap * (1.0 - res.ground_overlap) / shots as f64).sqrt();
    assert!(
        (freq - res.ground_overlap).abs() < 4.0 * sigma + 1e-9,
        "freq {freq} vs overlap {}",
        res.ground_overlap
    );
}

#[test]
fn per_layer_angles_concentrate_across_instances() {
    // The concentration phenomenon: at fixed (n, p), the optimized angles of
    // different random instances are close; the coefficient of variation of
    // each cost angle stays well below 1/2.
    let p = 4;
    let count = 8;
    let mut gammas: Vec<Vec<f64>> = vec![Vec::new(); p];
    for seed in 0..count {
        let q = sample_qubo(10, 7000 + seed).unwrap();
        let t = table_for_instance(&q).unwrap();
        let res = optimize_p(&t, p, &OptimizeConfig::default());
        for (k, &g) in res.schedule.gamma().iter().enumerate() {
            // Spectral units make angles comparable across instances.
            gammas[k].push(g * t.span());
        }
    }
    for (k, values) in gammas.iter().enumerate() {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / values.len() as f64;
        let cv = var.sqrt() / mean.abs();
        assert!(cv < 0.5, "layer {k}: cv {cv} (mean {mean})");
    }
}

#[test]
fn single_layer_states_fit_single_temperature() {
    // A modest-size check that the one-layer output is pseudo-thermal: the
    // fitted hot and cold temperatures coincide (or the hot mode vanishes).
    let q = sample_qubo(10, 21).unwrap();
    let t = table_for_instance(&q).unwrap();
    let res = qaoa_lab::optimizer::optimize_p1(&t, &OptimizeConfig::default());
    let state = run_qaoa(&t, &res.schedule).unwrap();
    let fit = fit_bimodal(&state.probabilities(), &t, &FitConfig::default()).unwrap();
    let rel = (fit.beta_high - fit.beta_low).abs() / fit.beta_high.max(1e-12);
    assert!(
        rel < 0.15 || fit.p_low < 0.02,
        "beta_high {} beta_low {} p_low {}",
        fit.beta_high,
        fit.beta_low,
        fit.p_low
    );
}

#[test]
fn optimized_output_probabilities_are_near_log_linear() {
    // Single-layer optimized states concentrate on an exponential curve:
    // log P against normalized energy is close to a straight line.
    let q = sample_qubo(10, 23).unwrap();
    let t = table_for_instance(&q).unwrap();
    let res = qaoa_lab::optimizer::optimize_p1(&t, &OptimizeConfig::default());
    let state = run_qaoa(&t, &res.schedule).unwrap();
    let probs = state.probabilities();
    let xs: Vec<f64> = t.normalized().to_vec();
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(&probs)
        .filter(|&(_, &p)| p > 1e-12)
        .map(|(&e, &p)| (e, p.ln()))
        .collect();
    let ex: Vec<f64> = pts.iter().map(|q| q.0).collect();
    let ey: Vec<f64> = pts.iter().map(|q| q.1).collect();
    let fit = qaoa_lab::numerics::linear_fit(&ex, &ey);
    assert!(
        fit.r2 > 0.81,
        "log-probability linearity r2 = {} (|r| = {})",
        fit.r2,
        fit.r2.sqrt()
    );
    assert!(fit.slope < 0.0);
}
