//! End-to-end tour of the laboratory on one random instance: optimize a
//! circuit across depths, fit the output temperatures, inspect the
//! integrated-angle trajectory, and integrate the continuous annealing limit
//! along it.
//!
//! ```text
//! cargo run --release -p qaoa-lab --example pipeline -- [n] [seed] [p_max]
//! ```

use qaoa_lab::annealer::{default_steps, integrate_qa, Integrator};
use qaoa_lab::optimizer::{optimize_next, optimize_p1, OptimizeConfig};
use qaoa_lab::problems::{sample_qubo, table_for_instance};
use qaoa_lab::simulator::run_qaoa;
use qaoa_lab::thermofit::{fit_bimodal, FitConfig};
use qaoa_lab::trajectory::{
    continuous_schedule, cumulative_path, fit_circle, rescale_continuous,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| -> f64 {
        args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
    };
    let n = arg(0, 10.0) as usize;
    let seed = arg(1, 42.0) as u64;
    let p_max = arg(2, 20.0) as usize;

    let instance = sample_qubo(n, seed).expect("valid size");
    let table = table_for_instance(&instance).expect("nondegenerate spectrum");
    println!(
        "instance {}: {} qubits, spectral width {:.2}",
        instance.instance_id(),
        n,
        table.span()
    );

    let opt_cfg = OptimizeConfig::default();
    let fit_cfg = FitConfig::default();
    let mut result = optimize_p1(&table, &opt_cfg);
    println!("\n  p   energy     overlap   beta_high  beta_low   p_low");
    for p in 1..=p_max {
        if p > 1 {
            result = optimize_next(&table, &result.schedule, p, &opt_cfg);
        }
        if p == 1 || p % 5 == 0 {
            let state = run_qaoa(&table, &result.schedule).unwrap();
            let fit = fit_bimodal(&state.probabilities(), &table, &fit_cfg).unwrap();
            println!(
                "{p:4} {:9.3} {:9.4} {:10.2} {:9.2} {:8.4}",
                result.value,
                result.ground_overlap,
                fit.beta_high,
                fit.beta_low,
                fit.p_low
            );
        }
    }

    let path = cumulative_path(&result.schedule);
    let circle = fit_circle(&[&path]).unwrap();
    println!(
        "\ntrajectory: theta_max {:.3}, gamma_max {:.4}; universal-circle fit \
         eps {:+.4} (rms {:.4})",
        path.theta_max, path.gamma_max, circle.epsilon, circle.rms_residual
    );

    // Continuous annealing along the converged trajectory, shortened to half
    // the interaction resources (a hotter target).
    let schedule = continuous_schedule(&path).unwrap();
    let schedule =
        rescale_continuous(&schedule, path.theta_max, 0.5 * path.gamma_max).unwrap();
    let steps = default_steps(&table, &schedule);
    let endpoint = integrate_qa(&table, &schedule, steps, Integrator::Trotter).unwrap();
    let fit = fit_bimodal(&endpoint.probabilities(), &table, &fit_cfg).unwrap();
    println!(
        "annealing along the half-resource trajectory ({steps} steps): \
         beta_high {:.2}, beta_low {:.2}, p_low {:.4}",
        fit.beta_high, fit.beta_low, fit.p_low
    );
}
