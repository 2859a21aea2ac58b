//! Dense-matrix oracles shared by the integration and acceptance tests.
//!
//! Everything here is built independently of the library's sweep kernels:
//! mixer unitaries come from explicit Kronecker products, diagonal phases
//! from direct exponentials, and the annealing dynamics from a dense
//! Runge-Kutta integrator. These are the reference implementations the
//! statevector code is checked against.

use num_complex::Complex64;
use qaoa_lab::problems::EnergyTable;
use qaoa_lab::simulator::AngleSchedule;
use qaoa_lab::trajectory::ContinuousSchedule;

pub type Dense = Vec<Vec<Complex64>>;

pub fn matvec(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, ca) = (a.len(), a[0].len());
    let (rb, cb) = (b.len(), b[0].len());
    let mut out = vec![vec![Complex64::default(); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn identity(dim: usize) -> Dense {
    let mut m = vec![vec![Complex64::default(); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Dense mixer unitary `exp(+i (theta/2) X)^{kron n}` with qubit 0 as the
/// least-significant amplitude index bit.
pub fn dense_mixer(n: usize, theta: f64) -> Dense {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, (theta / 2.0).sin());
    let single = vec![vec![c, s], vec![s, c]];
    // Index bit k of the full register selects qubit k, so the full operator
    // is single_{n-1} kron ... kron single_0; all factors are equal here.
    let mut full = single.clone();
    for _ in 1..n {
        full = kron(&single, &full);
    }
    full
}

/// Dense `sum_k X_k`.
pub fn dense_hx(n: usize) -> Dense {
    let x = vec![
        vec![Complex64::default(), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), Complex64::default()],
    ];
    let dim = 1 << n;
    let mut total = vec![vec![Complex64::default(); dim]; dim];
    for k in 0..n {
        let mut term = if k == 0 { x.clone() } else { identity(1 << k) };
        if k > 0 {
            term = kron(&x, &term);
        }
        if k + 1 < n {
            term = kron(&identity(1 << (n - k - 1)), &term);
        }
        for i in 0..dim {
            for j in 0..dim {
                total[i][j] += term[i][j];
            }
        }
    }
    total
}

/// Dense circuit oracle: apply `exp(-i gamma H)` as a diagonal exponential
/// and the mixer as a dense matrix-vector product, layer by layer.
pub fn dense_qaoa(t: &EnergyTable, schedule: &AngleSchedule) -> Vec<Complex64> {
    let n = t.n();
    let dim = 1 << n;
    let amp0 = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    let mut state = vec![amp0; dim];
    for layer in 0..schedule.p() {
        let gamma = schedule.gamma()[layer];
        for (z, amp) in state.iter_mut().enumerate() {
            *amp *= Complex64::from_polar(1.0, -gamma * t.raw()[z]);
        }
        let mixer = dense_mixer(n, schedule.theta()[layer]);
        state = matvec(&mixer, &state);
    }
    state
}

/// Dense annealing oracle: classic RK4 on `i psi' = (-H_x + g(T) H) psi`
/// with the interaction weight evaluated at every stage point.
pub fn dense_anneal(
    t: &EnergyTable,
    cs: &ContinuousSchedule,
    steps: usize,
) -> Vec<Complex64> {
    let n = t.n();
    let dim = 1 << n;
    let hx = dense_hx(n);
    let amp0 = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    let mut state = vec![amp0; dim];
    let dt = cs.theta_max() / steps as f64;

    let rhs = |theta: f64, psi: &[Complex64]| -> Vec<Complex64> {
        let g = cs.slope_at(theta);
        let hx_psi = matvec(&hx, psi);
        psi.iter()
            .enumerate()
            .map(|(z, amp)| {
                let h = -hx_psi[z] + g * t.raw()[z] * amp;
                Complex64::new(h.im, -h.re) // -i * h
            })
            .collect()
    };

    for step in 0..steps {
        let theta = step as f64 * dt;
        let k1 = rhs(theta, &state);
        let mid1: Vec<Complex64> = state
            .iter()
            .zip(&k1)
            .map(|(s, k)| s + 0.5 * dt * k)
            .collect();
        let k2 = rhs(theta + 0.5 * dt, &mid1);
        let mid2: Vec<Complex64> = state
            .iter()
            .zip(&k2)
            .map(|(s, k)| s + 0.5 * dt * k)
            .collect();
        let k3 = rhs(theta + 0.5 * dt, &mid2);
        let end: Vec<Complex64> =
            state.iter().zip(&k3).map(|(s, k)| s + dt * k).collect();
        let k4 = rhs(theta + dt, &end);
        for z in 0..dim {
            state[z] += dt / 6.0 * (k1[z] + 2.0 * k2[z] + 2.0 * k3[z] + k4[z]);
        }
        // Keep the oracle on the unit sphere as well.
        let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in state.iter_mut() {
            *a /= norm;
        }
    }
    state
}

pub fn max_amp_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `1 - |<a|b>|`, insensitive to global phase.
pub fn infidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    1.0 - overlap.norm()
}
