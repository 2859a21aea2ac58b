//! Aggregate tables over ensemble rows: resource scaling, temperature-versus-
//! resource curves and their size collapse, and the circuit-to-annealing
//! convergence experiment.

use serde::{Deserialize, Serialize};

use crate::annealer::default_steps;
use crate::ensemble::Row;
use crate::error::{Error, Result};
use crate::numerics::{linear_fit, percentile};
use crate::optimizer::{optimize_next, optimize_p1, OptimizeConfig};
use crate::problems::{table_for_instance, QuboInstance};
use crate::simulator::{run_qaoa, AngleSchedule};
use crate::thermofit::{fit_bimodal, kl_divergence, BoltzmannFit, FitConfig};
use crate::trajectory::{
    cumulative_path, rescale_continuous, rescale_schedule, sanitized_knots,
    ContinuousSchedule, InterpKind,
};

/// Mean resources per `(n, p)` cell, with 95% confidence intervals on the
/// means; `gamma_max` is reported multiplied by `sqrt(n)` to expose the size
/// collapse.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceRow {
    pub n: usize,
    pub p: usize,
    pub count: usize,
    pub theta_max_mean: f64,
    pub theta_max_ci95: f64,
    pub gamma_sqrt_n_mean: f64,
    pub gamma_sqrt_n_ci95: f64,
}

/// Per-(n, p) temperature-versus-resource point with 90% percentile band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaResourceRow {
    pub n: usize,
    pub p: usize,
    pub count: usize,
    pub gamma_max_mean: f64,
    pub beta_high_mean: f64,
    pub beta_high_p05: f64,
    pub beta_high_p95: f64,
    /// Mean of `beta_high / span`: the cold temperature in spectral units.
    pub beta_spectral_mean: f64,
}

/// Least-squares line of mean cold temperature against layer count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaLayerFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// One point of the size-collapse table: the effective cold temperature in
/// spectral units, rescaled by the claimed size power,
/// `(beta_high / span) * n^{3/2}`, interpolated onto a shared resource grid
/// for every qubit count, with the relative spread across sizes. (Fitted
/// temperatures are quoted per unit normalized energy; the collapse is a
/// statement about spectral units, where the width itself grows as n^{3/2}.)
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub gamma_max: f64,
    /// `(n, beta_high * n^{3/2})` per qubit count.
    pub scaled_beta: Vec<(usize, f64)>,
    /// max |curve - mean| / mean across sizes at this grid point.
    pub relative_spread: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingTables {
    pub resources: Vec<ResourceRow>,
    pub beta_vs_resource: Vec<BetaResourceRow>,
    pub beta_vs_p: Vec<BetaLayerFit>,
    pub collapse: Vec<CollapsePoint>,
}

fn cells(rows: &[Row]) -> Vec<((usize, usize), Vec<&Row>)> {
    let mut map: std::collections::BTreeMap<(usize, usize), Vec<&Row>> =
        std::collections::BTreeMap::new();
    for row in rows {
        map.entry((row.n, row.p)).or_default().push(row);
    }
    map.into_iter().collect()
}

/// Build the scaling tables. Requires rows from at least two qubit counts.
pub fn report_scaling(rows: &[Row]) -> Result<ScalingTables> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData(
            "scaling report needs rows from at least two qubit counts".into(),
        ));
    }

    let mut resources = Vec::new();
    let mut beta_vs_resource = Vec::new();
    for ((n, p), members) in cells(rows) {
        let count = members.len();
        let sqrt_n = (n as f64).sqrt();
        let theta: Vec<f64> = members.iter().map(|r| r.theta_max).collect();
        let gamma_scaled: Vec<f64> =
            members.iter().map(|r| r.gamma_max * sqrt_n).collect();
        let beta: Vec<f64> = members.iter().map(|r| r.beta_high).collect();
        let beta_spectral: Vec<f64> =
            members.iter().map(|r| r.beta_high / r.span.max(1e-300)).collect();
        let gamma: Vec<f64> = members.iter().map(|r| r.gamma_max).collect();

        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ci95 = |v: &[f64]| {
            let m = mean(v);
            let var =
                v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
            1.96 * (var / v.len() as f64).sqrt()
        };
        let mut beta_sorted = beta.clone();
        beta_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

        resources.push(ResourceRow {
            n,
            p,
            count,
            theta_max_mean: mean(&theta),
            theta_max_ci95: ci95(&theta),
            gamma_sqrt_n_mean: mean(&gamma_scaled),
            gamma_sqrt_n_ci95: ci95(&gamma_scaled),
        });
        beta_vs_resource.push(BetaResourceRow {
            n,
            p,
            count,
            gamma_max_mean: mean(&gamma),
            beta_high_mean: mean(&beta),
            beta_high_p05: percentile(&beta_sorted, 0.05),
            beta_high_p95: percentile(&beta_sorted, 0.95),
            beta_spectral_mean: mean(&beta_spectral),
        });
    }

    let mut beta_vs_p = Vec::new();
    for &n in &sizes {
        let pts: Vec<(f64, f64)> = beta_vs_resource
            .iter()
            .filter(|r| r.n == n)
            .map(|r| (r.p as f64, r.beta_high_mean))
            .collect();
        if pts.len() >= 2 {
            let xs: Vec<f64> = pts.iter().map(|q| q.0).collect();
            let ys: Vec<f64> = pts.iter().map(|q| q.1).collect();
            let fit = linear_fit(&xs, &ys);
            beta_vs_p.push(BetaLayerFit {
                n,
                slope: fit.slope,
                intercept: fit.intercept,
                r2: fit.r2,
            });
        }
    }

    let collapse = collapse_table(&beta_vs_resource, &sizes);

    Ok(ScalingTables {
        resources,
        beta_vs_resource,
        beta_vs_p,
        collapse,
    })
}

/// Interpolate each size's `(gamma_max, beta_high * n^{3/2})` mean curve onto
/// a shared grid spanning the overlap of their resource ranges.
fn collapse_table(
    beta_rows: &[BetaResourceRow],
    sizes: &[usize],
) -> Vec<CollapsePoint> {
    let mut curves: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for &n in sizes {
        let mut pts: Vec<(f64, f64)> = beta_rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| {
                (
                    r.gamma_max_mean,
                    r.beta_spectral_mean * (n as f64).powf(1.5),
                )
            })
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if pts.len() >= 2 {
            curves.push((n, pts));
        }
    }
    if curves.len() < 2 {
        return Vec::new();
    }
    let lo = curves
        .iter()
        .map(|(_, c)| c.first().unwrap().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = curves
        .iter()
        .map(|(_, c)| c.last().unwrap().0)
        .fold(f64::INFINITY, f64::min);
    if hi <= lo {
        return Vec::new();
    }

    let interp = |curve: &[(f64, f64)], x: f64| -> f64 {
        let mut i = 0;
        while i + 2 < curve.len() && curve[i + 1].0 < x {
            i += 1;
        }
        let (x0, y0) = curve[i];
        let (x1, y1) = curve[i + 1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };

    let grid = 20;
    (0..=grid)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / grid as f64;
            let scaled_beta: Vec<(usize, f64)> =
                curves.iter().map(|(n, c)| (*n, interp(c, x))).collect();
            let mean =
                scaled_beta.iter().map(|q| q.1).sum::<f64>() / scaled_beta.len() as f64;
            let spread = scaled_beta
                .iter()
                .map(|q| (q.1 - mean).abs() / mean.abs().max(1e-300))
                .fold(0.0f64, f64::max);
            CollapsePoint {
                gamma_max: x,
                scaled_beta,
                relative_spread: spread,
            }
        })
        .collect()
}

// --- CSV emission ---------------------------------------------------------

fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}

pub fn resources_csv(tables: &ScalingTables) -> String {
    let mut out = String::from(
        "n,p,count,theta_max_mean,theta_max_ci95,gamma_sqrt_n_mean,gamma_sqrt_n_ci95\n",
    );
    for r in &tables.resources {
        out.push_str(&csv_line(&[
            r.n.to_string(),
            r.p.to_string(),
            r.count.to_string(),
            r.theta_max_mean.to_string(),
            r.theta_max_ci95.to_string(),
            r.gamma_sqrt_n_mean.to_string(),
            r.gamma_sqrt_n_ci95.to_string(),
        ]));
        out.push('\n');
    }
    out
}

pub fn betas_csv(tables: &ScalingTables) -> String {
    let mut out = String::from(
        "n,p,count,gamma_max_mean,beta_high_mean,beta_high_p05,beta_high_p95\n",
    );
    for r in &tables.beta_vs_resource {
        out.push_str(&csv_line(&[
            r.n.to_string(),
            r.p.to_string(),
            r.count.to_string(),
            r.gamma_max_mean.to_string(),
            r.beta_high_mean.to_string(),
            r.beta_high_p05.to_string(),
            r.beta_high_p95.to_string(),
        ]));
        out.push('\n');
    }
    out.push('\n');
    out.push_str("n,slope,intercept,r2\n");
    for f in &tables.beta_vs_p {
        out.push_str(&csv_line(&[
            f.n.to_string(),
            f.slope.to_string(),
            f.intercept.to_string(),
            f.r2.to_string(),
        ]));
        out.push('\n');
    }
    out
}

pub fn collapse_csv(tables: &ScalingTables) -> String {
    let mut out = String::from("gamma_max,n,beta_high_scaled,relative_spread\n");
    for point in &tables.collapse {
        for &(n, b) in &point.scaled_beta {
            out.push_str(&csv_line(&[
                point.gamma_max.to_string(),
                n.to_string(),
                b.to_string(),
                point.relative_spread.to_string(),
            ]));
            out.push('\n');
        }
    }
    out
}

/// Trajectory CSV for one or more optimized schedules: one line per layer.
pub fn trajectory_csv(entries: &[(String, usize, AngleSchedule)]) -> Result<String> {
    let mut out = String::from("instance_id,p,n,layer,theta_cum,gamma_cum,r,phi\n");
    for (instance_id, n, schedule) in entries {
        let path = cumulative_path(schedule);
        let polar = crate::trajectory::polar_coords(&path)?;
        for k in 0..=path.p {
            out.push_str(&csv_line(&[
                instance_id.clone(),
                path.p.to_string(),
                n.to_string(),
                k.to_string(),
                path.theta_cum[k].to_string(),
                path.gamma_cum[k].to_string(),
                polar[k].0.to_string(),
                polar[k].1.to_string(),
            ]));
            out.push('\n');
        }
    }
    Ok(out)
}

// --- Convergence experiment ------------------------------------------------

/// One panel of the convergence experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergencePanel {
    /// "native", "rescaled", or "annealing".
    pub kind: String,
    /// Layer count of the circuit behind this panel (absent for annealing).
    pub k: Option<usize>,
    pub zeta_theta: f64,
    pub zeta_gamma: f64,
    pub beta_high: f64,
    pub beta_low: f64,
    pub p_low: f64,
    /// Divergence of this panel's distribution from the annealing endpoint.
    pub kl_to_annealing: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub panels: Vec<ConvergencePanel>,
}

impl ConvergenceReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "kind,k,zeta_theta,zeta_gamma,beta_high,beta_low,p_low,kl_to_annealing\n",
        );
        for p in &self.panels {
            out.push_str(&csv_line(&[
                p.kind.clone(),
                p.k.map_or(String::new(), |k| k.to_string()),
                p.zeta_theta.to_string(),
                p.zeta_gamma.to_string(),
                p.beta_high.to_string(),
                p.beta_low.to_string(),
                p.p_low.to_string(),
                p.kl_to_annealing.map_or(String::new(), |v| v.to_string()),
            ]));
            out.push('\n');
        }
        out
    }
}

/// Rescale deeper circuits onto the resources of an `m`-layer target and
/// compare them, and the continuous annealing limit along the converged
/// trajectory, against the target's distribution.
///
/// `k_list` are the source depths (each >= m); the continuous trajectory is
/// interpolated from the optimized schedule at `p_traj` layers. `steps = 0`
/// selects the default step count.
pub fn run_convergence_experiment(
    q: &QuboInstance,
    m: usize,
    k_list: &[usize],
    steps: usize,
    opt_cfg: &OptimizeConfig,
    fit_cfg: &FitConfig,
    p_traj: usize,
) -> Result<ConvergenceReport> {
    if k_list.is_empty() {
        return Err(Error::InvalidConfig("k_list must be nonempty".into()));
    }
    let t = table_for_instance(q)?;
    let p_max = p_traj.max(*k_list.iter().max().unwrap()).max(m);

    // One warm-started sweep up to the deepest circuit needed, keeping every
    // depth we must report on.
    let mut keep: std::collections::BTreeMap<usize, AngleSchedule> =
        std::collections::BTreeMap::new();
    let mut res = optimize_p1(&t, opt_cfg);
    if m == 1 || k_list.contains(&1) || p_traj == 1 {
        keep.insert(1, res.schedule.clone());
    }
    for p in 2..=p_max {
        res = optimize_next(&t, &res.schedule, p, opt_cfg);
        if p == m || k_list.contains(&p) || p == p_traj {
            keep.insert(p, res.schedule.clone());
        }
    }

    let target = keep
        .get(&m)
        .ok_or_else(|| Error::InvalidConfig(format!("missing schedule at m={m}")))?
        .clone();
    let target_path = cumulative_path(&target);

    let fit_state = |schedule: &AngleSchedule| -> Result<(BoltzmannFit, Vec<f64>)> {
        let state = run_qaoa(&t, schedule)?;
        let probs = state.probabilities();
        let fit = fit_bimodal(&probs, &t, fit_cfg)?;
        Ok((fit, probs))
    };

    // Continuous annealing along the converged trajectory, rescaled to the
    // target resources.
    let traj_schedule = keep
        .get(&p_traj)
        .ok_or_else(|| Error::InvalidConfig(format!("missing schedule at {p_traj}")))?;
    let traj_knots = sanitized_knots(&cumulative_path(traj_schedule), 1e-3)?;
    let cs = ContinuousSchedule::from_knots(&traj_knots, InterpKind::MonotoneCubic)?;
    let cs = rescale_continuous(&cs, target_path.theta_max, target_path.gamma_max)?;
    let steps = if steps == 0 { default_steps(&t, &cs) } else { steps };
    let qa_state = crate::annealer::integrate_qa(
        &t,
        &cs,
        steps,
        crate::annealer::Integrator::Trotter,
    )?;
    let qa_probs_by_state = qa_state.probabilities();
    let qa_fit = fit_bimodal(&qa_probs_by_state, &t, fit_cfg)?;

    let mut panels = Vec::new();
    let (target_fit, _) = fit_state(&target)?;
    panels.push(ConvergencePanel {
        kind: "native".into(),
        k: Some(m),
        zeta_theta: 1.0,
        zeta_gamma: 1.0,
        beta_high: target_fit.beta_high,
        beta_low: target_fit.beta_low,
        p_low: target_fit.p_low,
        kl_to_annealing: None,
    });

    for &k in k_list {
        let source = keep
            .get(&k)
            .ok_or_else(|| Error::InvalidConfig(format!("missing schedule at k={k}")))?;
        let source_path = cumulative_path(source);
        let zeta_theta = source_path.theta_max / target_path.theta_max;
        let zeta_gamma = source_path.gamma_max / target_path.gamma_max;
        let rescaled = rescale_schedule(source, zeta_gamma, zeta_theta)?;
        let (fit, probs) = fit_state(&rescaled)?;
        let kl = kl_divergence(&qa_probs_by_state, &probs, fit_cfg.prob_floor);
        panels.push(ConvergencePanel {
            kind: "rescaled".into(),
            k: Some(k),
            zeta_theta,
            zeta_gamma,
            beta_high: fit.beta_high,
            beta_low: fit.beta_low,
            p_low: fit.p_low,
            kl_to_annealing: Some(kl),
        });
    }

    panels.push(ConvergencePanel {
        kind: "annealing".into(),
        k: None,
        zeta_theta: 1.0,
        zeta_gamma: 1.0,
        beta_high: qa_fit.beta_high,
        beta_low: qa_fit.beta_low,
        p_low: qa_fit.p_low,
        kl_to_annealing: Some(0.0),
    });

    Ok(ConvergenceReport {
        instance_id: q.instance_id().to_string(),
        n: q.n(),
        m,
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::sample_qubo;

    fn synthetic_rows() -> Vec<Row> {
        let mut rows = Vec::new();
        for &n in &[8usize, 10, 12] {
            for p in 1..=10usize {
                for inst in 0..5 {
                    // Exact laws: gamma_max = 2p/sqrt(n), beta = 3*gamma_max,
                    // theta_max = p (size-independent).
                    let gamma_max = 2.0 * p as f64 / (n as f64).sqrt();
                    rows.push(Row {
                        instance_id: format!("s{n:02}i{inst}"),
                        n,
                        p,
                        beta_high: 3.0 * gamma_max,
                        beta_low: 1.0,
                        p_low: 0.1 / p as f64,
                        gamma_max,
                        theta_max: p as f64,
                        ground_overlap: 0.5,
                        value: -1.0,
                        span: 1.0,
                    });
                }
            }
        }
        rows
    }

    #[test]
    fn exact_scaling_laws_collapse_with_zero_spread() {
        let tables = report_scaling(&synthetic_rows()).unwrap();
        // gamma_max * sqrt(n) = 2p exactly: identical across n.
        for p in 1..=10usize {
            let vals: Vec<f64> = tables
                .resources
                .iter()
                .filter(|r| r.p == p)
                .map(|r| r.gamma_sqrt_n_mean)
                .collect();
            assert_eq!(vals.len(), 3);
            for v in &vals {
                assert!((v - 2.0 * p as f64).abs() < 1e-12);
            }
        }
        // beta = a * gamma_max: the per-size fit of beta vs p recovers the
        // implied slope exactly.
        for fit in &tables.beta_vs_p {
            let expected_slope = 3.0 * 2.0 / (fit.n as f64).sqrt();
            assert!((fit.slope - expected_slope).abs() < 1e-12);
            assert!((fit.r2 - 1.0).abs() < 1e-12);
        }
        // beta*n^{3/2} = 6 p n = 3 gamma_max n^{3/2}... spread is nonzero
        // unless the law collapses; here beta*n^{3/2} = 6*p*n, which does not
        // collapse, so just check the table is well-formed.
        assert!(!tables.collapse.is_empty());
        for point in &tables.collapse {
            assert_eq!(point.scaled_beta.len(), 3);
            assert!(point.relative_spread >= 0.0);
        }
    }

    #[test]
    fn perfect_collapse_has_zero_spread() {
        // beta_high = c * gamma_max * n^{-3/2} makes beta*n^{3/2} a universal
        // function of gamma_max.
        let mut rows = synthetic_rows();
        for row in rows.iter_mut() {
            row.beta_high = 5.0 * row.gamma_max / (row.n as f64).powf(1.5);
        }
        let tables = report_scaling(&rows).unwrap();
        for point in &tables.collapse {
            assert!(
                point.relative_spread < 1e-10,
                "spread {} at {}",
                point.relative_spread,
                point.gamma_max
            );
        }
    }

    #[test]
    fn scaling_needs_two_sizes() {
        let rows: Vec<Row> = synthetic_rows()
            .into_iter()
            .filter(|r| r.n == 8)
            .collect();
        assert!(report_scaling(&rows).is_err());
    }

    #[test]
    fn csv_emission_has_headers() {
        let tables = report_scaling(&synthetic_rows()).unwrap();
        assert!(resources_csv(&tables).starts_with("n,p,count,"));
        assert!(betas_csv(&tables).starts_with("n,p,count,gamma_max_mean"));
        assert!(collapse_csv(&tables).starts_with("gamma_max,n,"));
    }

    #[test]
    fn convergence_identity_when_k_equals_m() {
        // k = m gives zeta = 1 and must reproduce the native fit exactly.
        let q = sample_qubo(6, 3).unwrap();
        let opt = OptimizeConfig {
            restarts: 1,
            grid: 16,
            max_evals: 6000,
            ..Default::default()
        };
        let fit = FitConfig {
            n_starts: 4,
            ..Default::default()
        };
        let report =
            run_convergence_experiment(&q, 2, &[2], 0, &opt, &fit, 3).unwrap();
        let native = &report.panels[0];
        let rescaled = report
            .panels
            .iter()
            .find(|p| p.kind == "rescaled")
            .unwrap();
        assert!((rescaled.zeta_theta - 1.0).abs() < 1e-12);
        assert!((rescaled.zeta_gamma - 1.0).abs() < 1e-12);
        assert!((rescaled.beta_high - native.beta_high).abs() < 1e-9);
        assert!((rescaled.beta_low - native.beta_low).abs() < 1e-9);
    }
}
