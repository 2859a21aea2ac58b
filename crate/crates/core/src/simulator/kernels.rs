//! Statevector kernels. Each comes in a sequential flavor (`*_seq`, always
//! compiled) and a dispatching flavor that uses the rayon path when the
//! `parallel` feature is on. Both produce bitwise-identical results.

use num_complex::Complex64;

use crate::exec;

/// Multiply each amplitude by `exp(-i * gamma * energy[z])`.
pub fn cost_phase(amp: &mut [Complex64], energies: &[f64], gamma: f64) {
    debug_assert_eq!(amp.len(), energies.len());
    exec::for_each_chunk_mut(amp, |lo, chunk| {
        for (off, a) in chunk.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -gamma * energies[lo + off]);
        }
    });
}

pub fn cost_phase_seq(amp: &mut [Complex64], energies: &[f64], gamma: f64) {
    debug_assert_eq!(amp.len(), energies.len());
    exec::for_each_chunk_mut_seq(amp, |lo, chunk| {
        for (off, a) in chunk.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -gamma * energies[lo + off]);
        }
    });
}

#[inline(always)]
fn rx_pair(cos_half: f64, sin_half: f64, a: &mut Complex64, b: &mut Complex64) {
    let (u, v) = (*a, *b);
    let m = Complex64::new(0.0, sin_half);
    *a = cos_half * u + m * v;
    *b = m * u + cos_half * v;
}

/// One in-place `exp(+i (theta/2) X)` sweep over the given qubit.
///
/// The rotation direction pairs with the annealing Hamiltonian `-H_x + g H`:
/// it is the gauge in which optimized schedules and their continuous limits
/// carry positive angles and monotone integrated-angle paths. The opposite
/// direction is the complex conjugate (negate `theta`).
pub fn mixer_sweep(amp: &mut [Complex64], qubit: usize, theta: f64) {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    exec::for_each_pair(amp, qubit, |a, b| rx_pair(c, s, a, b));
}

pub fn mixer_sweep_seq(amp: &mut [Complex64], qubit: usize, theta: f64) {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    exec::for_each_pair_seq(amp, qubit, |a, b| rx_pair(c, s, a, b));
}

/// Squared norm, reduced in fixed chunk order.
pub fn norm_sqr(amp: &[Complex64]) -> f64 {
    exec::sum_indexed(amp.len(), |i| amp[i].norm_sqr())
}

pub fn norm_sqr_seq(amp: &[Complex64]) -> f64 {
    exec::sum_indexed_seq(amp.len(), |i| amp[i].norm_sqr())
}

/// Diagonal expectation `sum_z |amp[z]|^2 * energies[z]`.
pub fn expectation(amp: &[Complex64], energies: &[f64]) -> f64 {
    debug_assert_eq!(amp.len(), energies.len());
    exec::sum_indexed(amp.len(), |i| amp[i].norm_sqr() * energies[i])
}

pub fn expectation_seq(amp: &[Complex64], energies: &[f64]) -> f64 {
    debug_assert_eq!(amp.len(), energies.len());
    exec::sum_indexed_seq(amp.len(), |i| amp[i].norm_sqr() * energies[i])
}

/// Schrödinger right-hand side in the integrated-mixer-angle variable, for
/// the Hamiltonian `-H_x + g H`:
/// `dst[z] = -i * (-sum_k src[z ^ 1<<k] + g * energy[z] * src[z])`.
///
/// `g` is the local interaction weight (dGamma/dTheta). The mixer sign
/// matches [`mixer_sweep`]: one splitting half-step `exp(-i (dT/2)(-H_x))`
/// equals a mixer sweep with angle `dT`.
pub fn schrodinger_rhs(
    src: &[Complex64],
    dst: &mut [Complex64],
    energies: &[f64],
    n: usize,
    g: f64,
) {
    debug_assert_eq!(src.len(), dst.len());
    exec::for_each_chunk_mut(dst, |lo, chunk| {
        rhs_chunk(src, lo, chunk, energies, n, g);
    });
}

pub fn schrodinger_rhs_seq(
    src: &[Complex64],
    dst: &mut [Complex64],
    energies: &[f64],
    n: usize,
    g: f64,
) {
    debug_assert_eq!(src.len(), dst.len());
    exec::for_each_chunk_mut_seq(dst, |lo, chunk| {
        rhs_chunk(src, lo, chunk, energies, n, g);
    });
}

#[inline]
fn rhs_chunk(
    src: &[Complex64],
    lo: usize,
    chunk: &mut [Complex64],
    energies: &[f64],
    n: usize,
    g: f64,
) {
    for (off, d) in chunk.iter_mut().enumerate() {
        let z = lo + off;
        let mut acc = g * energies[z] * src[z];
        for k in 0..n {
            acc -= src[z ^ (1usize << k)];
        }
        *d = Complex64::new(acc.im, -acc.re); // multiply by -i
    }
}
