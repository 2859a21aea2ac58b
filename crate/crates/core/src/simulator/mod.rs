//! Exact statevector simulation of multilayer QAOA circuits.
//!
//! Cost layers are diagonal phase multiplications `exp(-i gamma H)` with the
//! *raw* (unscaled) energies from the [`EnergyTable`]; the normalized
//! energies exist for reporting and fitting only. Mixer layers apply
//! `exp(+i (theta/2) X)` to every qubit as `n` strided in-place sweeps, the
//! rotation direction in which optimized schedules carry positive angles
//! (its conjugate is the same circuit with all angles negated). Amplitude
//! index bit `k` is qubit `k` (least-significant bit first), matching
//! [`crate::problems`].

pub mod kernels;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problems::{EnergyTable, MAX_QUBITS};

/// Angles of a `p`-layer circuit: cost angles `gamma` and mixer angles
/// `theta`, in radians, layer 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    gamma: Vec<f64>,
    theta: Vec<f64>,
}

impl AngleSchedule {
    pub fn new(gamma: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() || gamma.len() != theta.len() {
            return Err(Error::DimensionMismatch(format!(
                "schedule needs equal, nonzero angle counts (gamma {}, theta {})",
                gamma.len(),
                theta.len()
            )));
        }
        if gamma.iter().chain(theta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch(
                "schedule angles must be finite".into(),
            ));
        }
        Ok(Self { gamma, theta })
    }

    /// Layer count.
    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Schedule with every angle negated (complex conjugation of the state;
    /// an exact symmetry of all output probabilities).
    pub fn negated(&self) -> Self {
        Self {
            gamma: self.gamma.iter().map(|v| -v).collect(),
            theta: self.theta.iter().map(|v| -v).collect(),
        }
    }
}

/// A 2^n-amplitude pure state.
#[derive(Debug, Clone)]
pub struct StateVector {
    n: usize,
    amp: Vec<Complex64>,
}

impl StateVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    /// Build a state from raw amplitudes (length must be a power of two).
    pub fn from_amplitudes(amp: Vec<Complex64>) -> Result<Self> {
        let len = amp.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        Ok(Self { n, amp })
    }

    pub fn norm_sqr(&self) -> f64 {
        kernels::norm_sqr(&self.amp)
    }

    /// Computational-basis probabilities indexed by bitstring.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `exp(-i gamma H) |psi>` with the diagonal raw energies of `t`.
    pub fn apply_cost_phase(&mut self, t: &EnergyTable, gamma: f64) -> Result<()> {
        if t.len() != self.amp.len() {
            return Err(Error::DimensionMismatch(format!(
                "table dimension {} != state dimension {}",
                t.len(),
                self.amp.len()
            )));
        }
        kernels::cost_phase(&mut self.amp, t.raw(), gamma);
        Ok(())
    }

    /// `exp(+i (theta/2) sum_k X_k) |psi>` as n in-place single-qubit sweeps.
    pub fn apply_mixer(&mut self, theta: f64) {
        for k in 0..self.n {
            kernels::mixer_sweep(&mut self.amp, k, theta);
        }
    }

    /// Map amplitudes to their complex conjugates.
    pub fn conjugate(&mut self) {
        for a in self.amp.iter_mut() {
            *a = a.conj();
        }
    }

    /// Rescale to unit norm; returns the norm prior to rescaling.
    pub fn renormalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in self.amp.iter_mut() {
                *a *= inv;
            }
        }
        norm
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }
}

/// Uniform superposition `|+>^n` (all amplitudes `2^{-n/2}`, phase 0).
pub fn plus_state(n: usize) -> Result<StateVector> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n));
    }
    let dim = 1usize << n;
    let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    Ok(StateVector { n, amp: vec![a; dim] })
}

/// Run the full `p`-layer circuit: layer `i` applies the cost phase with
/// `gamma_i`, then the mixer with `theta_i`; layer 1 acts first.
pub fn run_qaoa(t: &EnergyTable, schedule: &AngleSchedule) -> Result<StateVector> {
    let mut state = plus_state(t.n())?;
    for i in 0..schedule.p() {
        state.apply_cost_phase(t, schedule.gamma()[i])?;
        state.apply_mixer(schedule.theta()[i]);
    }
    Ok(state)
}

/// `<psi| H |psi>` over the diagonal raw energies.
pub fn energy_expectation(s: &StateVector, t: &EnergyTable) -> Result<f64> {
    if t.len() != s.amp.len() {
        return Err(Error::DimensionMismatch(format!(
            "table dimension {} != state dimension {}",
            t.len(),
            s.amp.len()
        )));
    }
    Ok(kernels::expectation(&s.amp, t.raw()))
}

/// Output distribution in energy space: `(normalized energy, probability)`
/// per basis state, sorted by energy (ascending, ties by bitstring index).
pub fn output_distribution(
    s: &StateVector,
    t: &EnergyTable,
) -> Result<Vec<(f64, f64)>> {
    if t.len() != s.amp.len() {
        return Err(Error::DimensionMismatch(format!(
            "table dimension {} != state dimension {}",
            t.len(),
            s.amp.len()
        )));
    }
    let mut points: Vec<(f64, f64)> = t
        .normalized()
        .iter()
        .zip(&s.amp)
        .map(|(&e, a)| (e, a.norm_sqr()))
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(points)
}

/// Like [`output_distribution`] but with exactly-degenerate energies merged
/// into one point carrying their total probability.
pub fn output_distribution_aggregated(
    s: &StateVector,
    t: &EnergyTable,
) -> Result<Vec<(f64, f64)>> {
    let points = output_distribution(s, t)?;
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (e, p) in points {
        match merged.last_mut() {
            Some(last) if last.0 == e => last.1 += p,
            _ => merged.push((e, p)),
        }
    }
    Ok(merged)
}

/// Cumulative distribution over sorted energies. Entry `k` holds the total
/// probability of energies `<= E_k`; the cumulative probability of strictly
/// smaller energies is the previous entry.
pub fn cumulative_distribution(dist: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    dist.iter()
        .map(|&(e, p)| {
            acc += p;
            (e, acc)
        })
        .collect()
}
