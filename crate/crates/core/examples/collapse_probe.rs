//! Inspect the temperature size-collapse table on a reduced ensemble.

use qaoa_lab::ensemble::{instance_seed, Row};
use qaoa_lab::optimizer::{optimize_next, optimize_p1, OptimizeConfig};
use qaoa_lab::problems::{sample_qubo, table_for_instance};
use qaoa_lab::report::report_scaling;
use qaoa_lab::simulator::run_qaoa;
use qaoa_lab::thermofit::{fit_bimodal, FitConfig};
use qaoa_lab::trajectory::cumulative_path;
use rayon::prelude::*;

fn p_list_for(n: usize) -> Vec<usize> {
    match n {
        8 => vec![1, 2, 3, 4, 5, 6, 8, 10, 11, 12, 14, 16, 18, 20, 24, 27, 30],
        10 => vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 18, 20],
        _ => vec![1, 2, 3, 4, 6, 8, 10, 11, 12, 14, 16, 18, 20],
    }
}

fn main() {
    let instances: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12);
    let work: Vec<(usize, usize)> = [8usize, 10, 12]
        .iter()
        .flat_map(|&n| (0..instances).map(move |i| (n, i)))
        .collect();
    let rows: Vec<Row> = work
        .par_iter()
        .flat_map(|&(n, index)| {
            let seed = instance_seed(0x2026_0808, n, index);
            let q = sample_qubo(n, seed).unwrap();
            let t = table_for_instance(&q).unwrap();
            let cfg = OptimizeConfig { seed, ..Default::default() };
            let fit_cfg = FitConfig { seed, ..Default::default() };
            let mut res = optimize_p1(&t, &cfg);
            let mut out = Vec::new();
            for p in p_list_for(n) {
                if p > 1 {
                    res = optimize_next(&t, &res.schedule, p, &cfg);
                }
                let state = run_qaoa(&t, &res.schedule).unwrap();
                let fit = fit_bimodal(&state.probabilities(), &t, &fit_cfg).unwrap();
                let path = cumulative_path(&res.schedule);
                out.push(Row {
                    instance_id: format!("cp{n}-{index}"),
                    n,
                    p,
                    beta_high: fit.beta_high,
                    beta_low: fit.beta_low,
                    p_low: fit.p_low,
                    gamma_max: path.gamma_max,
                    theta_max: path.theta_max,
                    ground_overlap: res.ground_overlap,
                    value: res.value,
                    span: t.span(),
                });
            }
            out
        })
        .collect();

    let tables = report_scaling(&rows).unwrap();
    println!("per-cell means (n, p, gamma_max, beta_spectral*n^1.5, overlap):");
    for r in &tables.beta_vs_resource {
        let overlap: f64 = rows
            .iter()
            .filter(|row| row.n == r.n && row.p == r.p)
            .map(|row| row.ground_overlap)
            .sum::<f64>()
            / rows.iter().filter(|row| row.n == r.n && row.p == r.p).count() as f64;
        println!(
            "n={:2} p={:2} gamma={:7.4} y={:8.3} overlap={:.3}",
            r.n,
            r.p,
            r.gamma_max_mean,
            r.beta_spectral_mean * (r.n as f64).powf(1.5),
            overlap
        );
    }
    println!("\ncollapse grid:");
    for point in &tables.collapse {
        print!("gamma={:7.4} spread={:5.1}% |", point.gamma_max, 100.0 * point.relative_spread);
        for (n, y) in &point.scaled_beta {
            print!(" n{n}:{y:8.3}");
        }
        println!();
    }
}
