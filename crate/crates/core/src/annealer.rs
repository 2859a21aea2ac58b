//! Numerically exact integration of the continuous annealing dynamics in the
//! integrated-mixer-angle variable.
//!
//! The state obeys `i d/dTheta |psi> = [-H_x + Gamma'(Theta) H] |psi>` along
//! a supplied monotone schedule `Gamma(Theta)`, starting from the uniform
//! superposition (the mixer ground state) at `Theta = 0`. This is the
//! continuous limit of the circuit convention in [`crate::simulator`]: one
//! layer is a first-order split of `exp(-i dT (-H_x + (dGamma/dT) H))` with
//! `theta = 2 dT`, `gamma = dGamma`. Two integrators are provided:
//!
//! * `Rk4`: classic fourth-order steps on the full amplitude vector, with
//!   the Hamiltonian applied sparsely (n-neighbor sums plus a diagonal
//!   multiply) and the interaction weight evaluated at each stage point.
//!   The norm is renormalized per step and the total drift is logged.
//! * `Trotter`: second-order symmetric splitting
//!   `exp(i dT/2 H_x) exp(-i dT g H) exp(i dT/2 H_x)` with `g` evaluated at
//!   the step midpoint; exactly norm-preserving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::EnergyTable;
use crate::simulator::{kernels, plus_state, output_distribution, StateVector};
use crate::trajectory::ContinuousSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    Trotter,
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Integrator::Rk4 => write!(f, "rk4"),
            Integrator::Trotter => write!(f, "trotter"),
        }
    }
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "trotter" | "fine-trotter" => Ok(Integrator::Trotter),
            other => Err(Error::InvalidConfig(format!("unknown integrator {other:?}"))),
        }
    }
}

/// One completed annealing run with its diagnostics.
#[derive(Debug, Clone)]
pub struct AnnealRun {
    pub final_state: StateVector,
    pub steps: usize,
    pub integrator: Integrator,
    /// Accumulated |norm - 1| observed before renormalization (Rk4) or at
    /// the end (Trotter).
    pub norm_drift: f64,
    /// Largest per-step phase `||H|| * dTheta` encountered.
    pub max_step_phase: f64,
}

/// Default step count: `ceil(50 * max(Theta_max * n, Gamma_max * span))`,
/// at least 100, then raised until the 0.5-radian per-step phase guard holds
/// with margin (converged schedules end steeply in `dGamma/dTheta`, which
/// the resource-based formula alone does not see).
pub fn default_steps(t: &EnergyTable, cs: &ContinuousSchedule) -> usize {
    let scale = (cs.theta_max() * t.n() as f64).max(cs.gamma_max() * t.span());
    let mut steps = ((50.0 * scale).ceil() as usize).max(100);
    for _ in 0..8 {
        let dt = cs.theta_max() / steps as f64;
        let mut max_phase = 0.0f64;
        for i in 0..steps {
            let mid = (i as f64 + 0.5) * dt;
            let g = cs.slope_at(mid).abs();
            max_phase = max_phase.max((t.n() as f64 + g * t.max_abs()) * dt);
        }
        if max_phase < 0.4 {
            break;
        }
        steps = (steps as f64 * max_phase / 0.4).ceil() as usize + 1;
    }
    steps
}

fn check_guard(t: &EnergyTable, cs: &ContinuousSchedule, steps: usize) -> Result<f64> {
    if steps < 100 {
        return Err(Error::InvalidConfig(format!(
            "at least 100 integration steps required, got {steps}"
        )));
    }
    let dt = cs.theta_max() / steps as f64;
    let mut max_phase = 0.0f64;
    for i in 0..steps {
        let mid = (i as f64 + 0.5) * dt;
        let g = cs.slope_at(mid).abs();
        let phase = (t.n() as f64 + g * t.max_abs()) * dt;
        max_phase = max_phase.max(phase);
    }
    if max_phase >= 0.5 {
        let min_steps = (steps as f64 * max_phase / 0.5).ceil() as usize + 1;
        return Err(Error::StepGuard { phase: max_phase, min_steps });
    }
    Ok(max_phase)
}

/// Evolve an arbitrary start state along the schedule. The schedule must map
/// onto the table's qubit count; `steps` must satisfy the 0.5-radian
/// per-step phase guard.
pub fn integrate_qa_from(
    start: StateVector,
    t: &EnergyTable,
    cs: &ContinuousSchedule,
    steps: usize,
    integrator: Integrator,
) -> Result<AnnealRun> {
    if start.amplitudes().len() != t.len() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} != table dimension {}",
            start.amplitudes().len(),
            t.len()
        )));
    }
    let max_step_phase = check_guard(t, cs, steps)?;
    let mut state = start;
    let dt = cs.theta_max() / steps as f64;
    let n = t.n();

    let mut norm_drift = 0.0f64;
    match integrator {
        Integrator::Trotter => {
            for i in 0..steps {
                let mid = (i as f64 + 0.5) * dt;
                let g = cs.slope_at(mid);
                // exp(-i a H_x) is a mixer layer with theta = 2a.
                state.apply_mixer(dt);
                state.apply_cost_phase(t, dt * g)?;
                state.apply_mixer(dt);
            }
            norm_drift = (state.norm_sqr().sqrt() - 1.0).abs();
        }
        Integrator::Rk4 => {
            let dim = t.len();
            let mut k1 = vec![num_complex::Complex64::default(); dim];
            let mut k2 = k1.clone();
            let mut k3 = k1.clone();
            let mut k4 = k1.clone();
            let mut tmp = k1.clone();
            for i in 0..steps {
                let theta0 = i as f64 * dt;
                let g0 = cs.slope_at(theta0);
                let gm = cs.slope_at(theta0 + 0.5 * dt);
                let g1 = cs.slope_at(theta0 + dt);

                let amp = state.amplitudes();
                kernels::schrodinger_rhs(amp, &mut k1, t.raw(), n, g0);
                axpy(&mut tmp, amp, &k1, 0.5 * dt);
                kernels::schrodinger_rhs(&tmp, &mut k2, t.raw(), n, gm);
                axpy(&mut tmp, amp, &k2, 0.5 * dt);
                kernels::schrodinger_rhs(&tmp, &mut k3, t.raw(), n, gm);
                axpy(&mut tmp, amp, &k3, dt);
                kernels::schrodinger_rhs(&tmp, &mut k4, t.raw(), n, g1);

                let amp = state.amplitudes_mut();
                let w = dt / 6.0;
                for z in 0..dim {
                    amp[z] += w * (k1[z] + 2.0 * k2[z] + 2.0 * k3[z] + k4[z]);
                }
                let norm = state.renormalize();
                norm_drift += (norm - 1.0).abs();
            }
        }
    }

    Ok(AnnealRun {
        final_state: state,
        steps,
        integrator,
        norm_drift,
        max_step_phase,
    })
}

fn axpy(
    out: &mut [num_complex::Complex64],
    base: &[num_complex::Complex64],
    k: &[num_complex::Complex64],
    h: f64,
) {
    for i in 0..out.len() {
        out[i] = base[i] + h * k[i];
    }
}

/// Full annealing run from the uniform superposition.
pub fn run_anneal(
    t: &EnergyTable,
    cs: &ContinuousSchedule,
    steps: usize,
    integrator: Integrator,
) -> Result<AnnealRun> {
    integrate_qa_from(plus_state(t.n())?, t, cs, steps, integrator)
}

/// Final state of the annealing passage (uniform superposition start).
pub fn integrate_qa(
    t: &EnergyTable,
    cs: &ContinuousSchedule,
    steps: usize,
    integrator: Integrator,
) -> Result<StateVector> {
    Ok(run_anneal(t, cs, steps, integrator)?.final_state)
}

/// Output distribution of the annealing endpoint, ready for thermal fitting.
/// Uses the norm-exact splitting integrator.
pub fn qa_endpoint_distribution(
    t: &EnergyTable,
    cs: &ContinuousSchedule,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    let state = integrate_qa(t, cs, steps, Integrator::Trotter)?;
    output_distribution(&state, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{sample_qubo, table_for_instance, EnergyTable};
    use crate::simulator::AngleSchedule;
    use crate::trajectory::{
        continuous_schedule, cumulative_path, ContinuousSchedule, InterpKind,
    };

    fn table(n: usize, seed: u64) -> EnergyTable {
        table_for_instance(&sample_qubo(n, seed).unwrap()).unwrap()
    }

    fn linear_schedule(theta_max: f64, gamma_max: f64) -> ContinuousSchedule {
        ContinuousSchedule::from_knots(
            &[(0.0, 0.0), (theta_max, gamma_max)],
            InterpKind::Linear,
        )
        .unwrap()
    }

    #[test]
    fn pure_mixer_evolution_keeps_plus_state() {
        // A flat schedule (Gamma' ~ 0) leaves |+> invariant up to phase.
        let t = table(4, 1);
        let cs = ContinuousSchedule::from_knots(
            &[(0.0, 0.0), (1.5, 1e-12)],
            InterpKind::Linear,
        )
        .unwrap();
        for integ in [Integrator::Trotter, Integrator::Rk4] {
            let run = run_anneal(&t, &cs, 400, integ).unwrap();
            let probs = run.final_state.probabilities();
            for &p in &probs {
                assert!((p - 1.0 / 16.0).abs() < 1e-10, "{integ}: {p}");
            }
        }
    }

    #[test]
    fn integrators_agree() {
        let t = table(4, 2);
        let sched = AngleSchedule::new(
            vec![0.01, 0.02, 0.04, 0.05],
            vec![0.6, 0.45, 0.3, 0.15],
        )
        .unwrap();
        let cs = continuous_schedule(&cumulative_path(&sched)).unwrap();
        let a = integrate_qa(&t, &cs, 800, Integrator::Rk4).unwrap();
        let b = integrate_qa(&t, &cs, 800, Integrator::Trotter).unwrap();
        let overlap: f64 = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum::<num_complex::Complex64>()
            .norm();
        assert!(1.0 - overlap < 1e-6, "fidelity gap {}", 1.0 - overlap);
    }

    #[test]
    fn step_doubling_self_convergence() {
        let t = table(5, 3);
        let sched = AngleSchedule::new(
            vec![0.01, 0.03, 0.05],
            vec![0.5, 0.35, 0.2],
        )
        .unwrap();
        let cs = continuous_schedule(&cumulative_path(&sched)).unwrap();
        let base = default_steps(&t, &cs);
        for integ in [Integrator::Rk4, Integrator::Trotter] {
            let a = integrate_qa(&t, &cs, base, integ).unwrap();
            let b = integrate_qa(&t, &cs, 2 * base, integ).unwrap();
            let overlap: f64 = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| x.conj() * y)
                .sum::<num_complex::Complex64>()
                .norm();
            assert!(
                1.0 - overlap < 1e-8,
                "{integ}: fidelity change {} on step doubling",
                1.0 - overlap
            );
        }
    }

    #[test]
    fn trotter_norm_is_exact_and_rk4_drift_small() {
        let t = table(6, 4);
        let cs = linear_schedule(1.2, 0.05);
        let tr = run_anneal(&t, &cs, 600, Integrator::Trotter).unwrap();
        assert!(tr.norm_drift < 1e-12);
        assert!((tr.final_state.norm_sqr() - 1.0).abs() < 1e-12);
        let rk = run_anneal(&t, &cs, 600, Integrator::Rk4).unwrap();
        assert!(rk.norm_drift < 1e-8, "drift {}", rk.norm_drift);
        assert!((rk.final_state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_guard_rejects_coarse_grids() {
        let t = table(6, 5);
        let cs = linear_schedule(40.0, 2.0);
        match run_anneal(&t, &cs, 100, Integrator::Trotter) {
            Err(Error::StepGuard { min_steps, .. }) => {
                assert!(min_steps > 100);
                assert!(run_anneal(&t, &cs, min_steps, Integrator::Trotter).is_ok());
            }
            other => panic!("expected step guard trip, got {other:?}"),
        }
    }

    /// A piecewise-linear schedule stepped exactly once per segment equals
    /// the corresponding circuit up to the boundary half-mixers: the leading
    /// one only dephases |+> globally, the trailing one is undone explicitly.
    #[test]
    fn trotter_limit_reproduces_uniform_theta_circuit() {
        let t = table(4, 6);
        let p = 128;
        let theta = 0.02;
        let gamma: Vec<f64> = (1..=p).map(|k| 2e-4 * k as f64).collect();
        let sched = AngleSchedule::new(gamma, vec![theta; p]).unwrap();
        let path = cumulative_path(&sched);
        let knots: Vec<(f64, f64)> = path
            .theta_cum
            .iter()
            .zip(&path.gamma_cum)
            .map(|(&a, &b)| (a, b))
            .collect();
        let cs = ContinuousSchedule::from_knots(&knots, InterpKind::Linear).unwrap();

        // One step per segment: dt = theta/2, so each step applies exactly
        // one circuit layer with half-mixers on both sides.
        let mut run = run_anneal(&t, &cs, p, Integrator::Trotter).unwrap();
        let dt = cs.theta_max() / p as f64;
        run.final_state.apply_mixer(dt);

        let circuit = crate::simulator::run_qaoa(&t, &sched).unwrap();
        let overlap: f64 = run
            .final_state
            .amplitudes()
            .iter()
            .zip(circuit.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum::<num_complex::Complex64>()
            .norm();
        assert!(1.0 - overlap < 1e-10, "fidelity gap {}", 1.0 - overlap);
    }

    /// Evolving the conjugate state along the reversed schedule undoes the
    /// passage (the Hamiltonian is real), returning the uniform state.
    #[test]
    fn time_reversal_returns_to_start() {
        let t = table(4, 7);
        let sched = AngleSchedule::new(
            vec![0.02, 0.03, 0.04],
            vec![0.5, 0.4, 0.3],
        )
        .unwrap();
        let cs = continuous_schedule(&cumulative_path(&sched)).unwrap();
        let steps = 2000;

        let forward = integrate_qa(&t, &cs, steps, Integrator::Trotter).unwrap();

        // Reversed schedule: Gamma~(T) = Gamma_max - Gamma(Theta_max - T).
        let knots = cs.knots();
        let rev: Vec<(f64, f64)> = knots
            .iter()
            .rev()
            .map(|&(th, ga)| (cs.theta_max() - th, cs.gamma_max() - ga))
            .collect();
        let cs_rev =
            ContinuousSchedule::from_knots(&rev, InterpKind::MonotoneCubic).unwrap();

        let mut conj = forward.clone();
        conj.conjugate();
        let back = integrate_qa_from(conj, &t, &cs_rev, steps, Integrator::Trotter)
            .unwrap()
            .final_state;
        let plus = plus_state(4).unwrap();
        let overlap: f64 = back
            .amplitudes()
            .iter()
            .zip(plus.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum::<num_complex::Complex64>()
            .norm();
        assert!(overlap > 1.0 - 1e-8, "reversal fidelity {overlap}");
    }

    #[test]
    fn weak_schedule_gives_near_uniform_distribution() {
        let t = table(6, 8);
        let cs = linear_schedule(0.8, 1e-6 / t.span());
        let dist = qa_endpoint_distribution(&t, &cs, 200).unwrap();
        for &(_, p) in &dist {
            assert!((p - 1.0 / 64.0).abs() < 1e-6);
        }
    }
}
