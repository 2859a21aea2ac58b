//! Variational angle optimization: a coarse 2-D grid plus local refinement at
//! one layer, then warm-started layer extension for deeper circuits.
//!
//! The warm start interpolates the previous cumulative integrated-angle path
//! onto one more layer, which keeps the optimizer inside the smooth
//! concentrated-schedule basin as depth grows. Internally the cost angles are
//! optimized in spectral units (`gamma * (e_max - e_min)`), so every
//! coordinate of the search space is O(1) radians regardless of system size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{
    bfgs_minimize, bfgs_minimize_with_grad, central_gradient, nelder_mead, splitmix64,
};
use crate::problems::EnergyTable;
use crate::simulator::{energy_expectation, run_qaoa, AngleSchedule, StateVector};
use crate::trajectory::{cumulative_path, pchip};

/// Local refinement method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMethod {
    /// Quasi-Newton descent on central-difference gradients (default).
    Bfgs,
    /// Derivative-free Nelder–Mead simplex.
    Simplex,
}

/// Optimizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    /// Total refinement attempts per layer count: the warm start plus
    /// `restarts - 1` perturbed restarts.
    pub restarts: usize,
    /// Objective evaluation budget per attempt.
    pub max_evals: u64,
    /// Central finite-difference step, radians (in spectral units for the
    /// cost angles).
    pub grad_step: f64,
    /// Stagnation tolerance relative to the spectral width: refinement stops
    /// once an iteration improves the energy by less than
    /// `tol * (e_max - e_min)`.
    pub tol: f64,
    /// Local refinement method.
    pub local: LocalMethod,
    /// Use central finite differences inside the quasi-Newton refinement
    /// instead of the exact adjoint gradient (slower; mainly a cross-check).
    pub fd_gradient: bool,
    /// Grid resolution per axis for the single-layer search.
    pub grid: usize,
    /// Standard deviation of the restart perturbations, radians.
    pub perturb_sigma: f64,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            restarts: 2,
            max_evals: 40_000,
            grad_step: 1e-4,
            tol: 1e-8,
            local: LocalMethod::Bfgs,
            fd_gradient: false,
            grid: 48,
            perturb_sigma: 0.05,
            seed: 0,
        }
    }
}

/// Result of one optimization: the best schedule found and its diagnostics.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub schedule: AngleSchedule,
    /// Final energy expectation, raw units.
    pub value: f64,
    /// Objective evaluations spent (each is one circuit run).
    pub evals: u64,
    pub converged: bool,
    /// Total output probability on the exact ground state(s).
    pub ground_overlap: f64,
}

/// Pack a schedule into the scaled search vector `[gamma*span.., theta..]`.
fn pack(s: &AngleSchedule, span: f64) -> Vec<f64> {
    let p = s.p();
    let mut x = Vec::with_capacity(2 * p);
    x.extend(s.gamma().iter().map(|g| g * span));
    x.extend_from_slice(s.theta());
    x
}

fn unpack(x: &[f64], span: f64) -> AngleSchedule {
    let p = x.len() / 2;
    let gamma: Vec<f64> = x[..p].iter().map(|g| g / span).collect();
    let theta: Vec<f64> = x[p..].to_vec();
    AngleSchedule::new(gamma, theta).expect("packed schedule is well-formed")
}

/// Negate all angles when the total cost angle is negative. Simultaneous sign
/// flip conjugates the state, an exact symmetry of every output probability,
/// so canonicalizing this way never changes the objective.
fn canonicalize(s: AngleSchedule) -> AngleSchedule {
    let gsum: f64 = s.gamma().iter().sum();
    if gsum < 0.0 {
        s.negated()
    } else {
        s
    }
}

fn finish(t: &EnergyTable, schedule: AngleSchedule, value: f64, evals: u64, converged: bool) -> OptimResult {
    let schedule = canonicalize(schedule);
    let state = run_qaoa(t, &schedule).expect("schedule matches table");
    let probs = state.probabilities();
    let ground_overlap: f64 = t.ground_states().iter().map(|&z| probs[z]).sum();
    OptimResult {
        schedule,
        value,
        evals,
        converged,
        ground_overlap,
    }
}

/// One local refinement from a starting schedule. Returns the refined
/// schedule, its value, evaluations spent, and the convergence flag.
///
/// When `box_bounds` is given as `(gamma_hi, theta_hi)` (scaled units), the
/// objective is evaluated at coordinates clamped into the box, so the
/// refinement settles on the boundary instead of leaving it.
fn refine(
    t: &EnergyTable,
    start: &AngleSchedule,
    cfg: &OptimizeConfig,
    box_bounds: Option<(f64, f64)>,
) -> (AngleSchedule, f64, u64, bool) {
    let span = t.span();
    let p = start.p();
    let x0 = pack(start, span);
    let tol_f = cfg.tol * span;
    let clamp = move |x: &[f64]| -> Vec<f64> {
        match box_bounds {
            None => x.to_vec(),
            Some((ghi, thi)) => x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if i < p {
                        v.clamp(1e-9, ghi)
                    } else {
                        v.clamp(1e-9, thi)
                    }
                })
                .collect(),
        }
    };
    let mut f = |x: &[f64]| {
        let sched = unpack(&clamp(x), span);
        let state = run_qaoa(t, &sched).expect("dimensions fixed");
        energy_expectation(&state, t).expect("dimensions fixed")
    };
    let res = match cfg.local {
        LocalMethod::Bfgs if cfg.fd_gradient || box_bounds.is_some() => {
            // The clamped box makes the objective flat past the walls, which
            // the finite-difference gradient handles natively.
            bfgs_minimize(&mut f, &x0, cfg.grad_step, tol_f, 0.0, cfg.max_evals)
        }
        LocalMethod::Bfgs => {
            let mut grad = |x: &[f64], evals: &mut u64| -> Vec<f64> {
                *evals += 3;
                let sched = unpack(x, span);
                let mut g = adjoint_gradient(t, &sched);
                // Chain rule into the scaled coordinates.
                for gi in g.iter_mut().take(p) {
                    *gi /= span;
                }
                g
            };
            bfgs_minimize_with_grad(&mut f, &mut grad, &x0, tol_f, 0.0, cfg.max_evals)
        }
        LocalMethod::Simplex => nelder_mead(&mut f, &x0, 0.1, tol_f, cfg.max_evals),
    };
    (unpack(&clamp(&res.x), span), res.f, res.evals, res.converged)
}

/// Perturb a schedule with seeded Gaussian noise (sigma in radians; the cost
/// angles are perturbed in spectral units).
fn perturb(s: &AngleSchedule, span: f64, sigma: f64, rng: &mut ChaCha8Rng) -> AngleSchedule {
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)
    };
    let gamma: Vec<f64> = s
        .gamma()
        .iter()
        .map(|&g| g + sigma * normal(rng) / span)
        .collect();
    let theta: Vec<f64> = s.theta().iter().map(|&v| v + sigma * normal(rng)).collect();
    AngleSchedule::new(gamma, theta).expect("perturbed schedule well-formed")
}

/// Optimize a single-layer circuit: coarse grid over
/// `gamma in (0, pi/span], theta in (0, 2 pi)`, then local refinement of the
/// best cell plus perturbed restarts, all confined to the same box.
///
/// The cost-angle cap matters physically: the raw single-layer landscape
/// keeps descending toward larger cost angles where the output loses its
/// exponential (single-temperature) profile, so the search is bounded at the
/// spectral-width scale where single-layer states are pseudo-thermal. The
/// mixer grid covers the full turn; the landscape has distinct wells on both
/// sides of `pi`.
pub fn optimize_p1(t: &EnergyTable, cfg: &OptimizeConfig) -> OptimResult {
    let span = t.span();
    let grid = cfg.grid.max(4);
    let mut evals: u64 = 0;

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for gi in 1..=grid {
        let gamma = std::f64::consts::PI * gi as f64 / grid as f64 / span;
        for ti in 1..(2 * grid) {
            let theta = std::f64::consts::PI * ti as f64 / grid as f64;
            let sched = AngleSchedule::new(vec![gamma], vec![theta]).unwrap();
            let state = run_qaoa(t, &sched).unwrap();
            let value = energy_expectation(&state, t).unwrap();
            evals += 1;
            if value < best.0 {
                best = (value, gamma, theta);
            }
        }
    }

    let start = AngleSchedule::new(vec![best.1], vec![best.2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ 0x5031));
    let mut winner: Option<(AngleSchedule, f64, bool)> = None;
    for r in 0..cfg.restarts.max(1) {
        let attempt_start = if r == 0 {
            start.clone()
        } else {
            perturb(&start, span, cfg.perturb_sigma, &mut rng)
        };
        let bounds = Some((std::f64::consts::PI, 2.0 * std::f64::consts::PI));
        let (sched, value, spent, converged) = refine(t, &attempt_start, cfg, bounds);
        evals += spent;
        let take = match &winner {
            None => true,
            Some((_, v, _)) => value < *v,
        };
        if take {
            winner = Some((sched, value, converged));
        }
    }
    let (sched, value, converged) = winner.expect("at least one restart");
    // The grid minimum is always available as a fallback.
    let (sched, value) = if value <= best.0 {
        (sched, value)
    } else {
        (start, best.0)
    };
    finish(t, sched, value, evals, converged)
}

/// Warm-start guess with one more layer: the cumulative path of `prev` is
/// interpolated onto `p+1` evenly spaced nodes, preserving the endpoint
/// resources exactly.
pub fn extend_schedule(prev: &AngleSchedule) -> AngleSchedule {
    extend_to(prev, prev.p() + 1)
}

/// Interpolate a schedule onto an arbitrary target layer count (>= 1).
///
/// Monotone piecewise-cubic interpolation of the cumulative sums against the
/// normalized layer index; uniform schedules extend to uniform schedules.
pub fn extend_to(prev: &AngleSchedule, p_target: usize) -> AngleSchedule {
    assert!(p_target >= 1);
    let p = prev.p();
    let path = cumulative_path(prev);
    let us: Vec<f64> = (0..=p).map(|k| k as f64 / p as f64).collect();
    let mt = pchip::tangents(&us, &path.theta_cum);
    let mg = pchip::tangents(&us, &path.gamma_cum);

    let mut gamma = Vec::with_capacity(p_target);
    let mut theta = Vec::with_capacity(p_target);
    let mut prev_t = 0.0;
    let mut prev_g = 0.0;
    for k in 1..=p_target {
        let u = k as f64 / p_target as f64;
        let tc = pchip::eval(&us, &path.theta_cum, &mt, u);
        let gc = pchip::eval(&us, &path.gamma_cum, &mg, u);
        theta.push(2.0 * (tc - prev_t));
        gamma.push(gc - prev_g);
        prev_t = tc;
        prev_g = gc;
    }
    AngleSchedule::new(gamma, theta).expect("interpolated schedule well-formed")
}

/// Extend an optimized schedule by one (or more) layers and refine, with
/// perturbed restarts. The warm start is always kept as a candidate, so the
/// reported value never exceeds the warm-start objective.
pub fn optimize_next(
    t: &EnergyTable,
    prev: &AngleSchedule,
    p_target: usize,
    cfg: &OptimizeConfig,
) -> OptimResult {
    let span = t.span();
    let start = extend_to(prev, p_target);
    let start_value = {
        let state = run_qaoa(t, &start).unwrap();
        energy_expectation(&state, t).unwrap()
    };
    let mut evals: u64 = 1;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
        cfg.seed ^ (p_target as u64).wrapping_mul(0x9e37),
    ));
    let mut best: Option<(AngleSchedule, f64, bool)> = None;
    for r in 0..cfg.restarts.max(1) {
        let attempt_start = if r == 0 {
            start.clone()
        } else {
            perturb(&start, span, cfg.perturb_sigma, &mut rng)
        };
        let (sched, value, spent, converged) = refine(t, &attempt_start, cfg, None);
        evals += spent;
        let take = match &best {
            None => true,
            Some((_, v, _)) => value < *v,
        };
        if take {
            best = Some((sched, value, converged));
        }
    }
    let (sched, value, converged) = best.expect("at least one restart");
    let (sched, value) = if value <= start_value {
        (sched, value)
    } else {
        (start, start_value)
    };
    finish(t, sched, value, evals, converged)
}

/// Optimize a `p`-layer circuit by sweeping the layer count from 1 to `p`
/// with warm starts. Deterministic for a fixed `(table, p, cfg)`.
pub fn optimize_p(t: &EnergyTable, p: usize, cfg: &OptimizeConfig) -> OptimResult {
    let mut res = optimize_p1(t, cfg);
    let mut total_evals = res.evals;
    for q in 2..=p {
        let mut next = optimize_next(t, &res.schedule, q, cfg);
        total_evals += next.evals;
        next.evals = total_evals;
        res = next;
    }
    res.evals = total_evals;
    res
}

/// Central finite-difference gradient of the energy expectation with respect
/// to the raw angles, ordered `[d/dgamma_1.., d/dtheta_1..]`; costs `4p`
/// circuit runs.
pub fn objective_gradient(t: &EnergyTable, s: &AngleSchedule, step: f64) -> Vec<f64> {
    assert!(step > 0.0);
    let p = s.p();
    let mut x: Vec<f64> = Vec::with_capacity(2 * p);
    x.extend_from_slice(s.gamma());
    x.extend_from_slice(s.theta());
    let mut f = |v: &[f64]| {
        let sched =
            AngleSchedule::new(v[..p].to_vec(), v[p..].to_vec()).expect("well-formed");
        let state = run_qaoa(t, &sched).expect("dimensions fixed");
        energy_expectation(&state, t).expect("dimensions fixed")
    };
    central_gradient(&mut f, &x, step)
}

/// `sum_z Im( conj(mu[z]) * (H_x phi)[z] )` with the neighbor sums gathered
/// on the fly.
fn im_inner_hx(mu: &StateVector, phi: &StateVector, n: usize) -> f64 {
    let mu = mu.amplitudes();
    let phi = phi.amplitudes();
    crate::exec::sum_indexed(mu.len(), |z| {
        let mut acc = num_complex::Complex64::default();
        for k in 0..n {
            acc += phi[z ^ (1usize << k)];
        }
        (mu[z].conj() * acc).im
    })
}

/// `sum_z raw[z] * Im( conj(mu[z]) * phi[z] )`.
fn im_inner_diag(mu: &StateVector, phi: &StateVector, raw: &[f64]) -> f64 {
    let mu = mu.amplitudes();
    let phi = phi.amplitudes();
    crate::exec::sum_indexed(mu.len(), |z| raw[z] * (mu[z].conj() * phi[z]).im)
}

/// Exact gradient of the energy expectation with respect to the raw angles,
/// ordered like [`objective_gradient`], computed by one reverse (adjoint)
/// sweep: about three circuit applications of work in total, independent of
/// the layer count.
pub fn adjoint_gradient(t: &EnergyTable, s: &AngleSchedule) -> Vec<f64> {
    let p = s.p();
    let n = t.n();
    let psi = run_qaoa(t, s).expect("schedule matches table");

    // Costate carries H|psi>; both it and the forward state are rolled
    // backwards through the inverse layers.
    let mu_amp: Vec<num_complex::Complex64> = psi
        .amplitudes()
        .iter()
        .zip(t.raw())
        .map(|(a, &e)| e * a)
        .collect();
    let mut mu = StateVector::from_amplitudes(mu_amp).expect("power of two");
    let mut phi = psi;

    let mut g_gamma = vec![0.0; p];
    let mut g_theta = vec![0.0; p];
    for i in (0..p).rev() {
        // d/dtheta of exp(+i theta/2 H_x) inserts (i/2) H_x after the layer.
        g_theta[i] = -im_inner_hx(&mu, &phi, n);
        mu.apply_mixer(-s.theta()[i]);
        phi.apply_mixer(-s.theta()[i]);
        // d/dgamma of exp(-i gamma H) inserts -i H after the cost phase.
        g_gamma[i] = 2.0 * im_inner_diag(&mu, &phi, t.raw());
        mu.apply_cost_phase(t, -s.gamma()[i]).expect("dimensions fixed");
        phi.apply_cost_phase(t, -s.gamma()[i]).expect("dimensions fixed");
    }
    g_gamma.extend_from_slice(&g_theta);
    g_gamma
}
