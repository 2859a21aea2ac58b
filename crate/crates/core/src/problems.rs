//! Random QUBO instances, their Ising form, and the exhaustively enumerated
//! spectrum.
//!
//! Conventions used throughout the crate:
//!
//! * Bitstring index `z` has qubit 0 as the least-significant bit.
//! * Spin values are `s_k = 2*bit_k - 1`, so bit 1 maps to spin +1.
//! * The Ising energy sums each unordered coupling pair once:
//!   `E(z) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i`.
//! * The QUBO energy is `E(x) = 2 * sum_{i,j} x_i Q_ij x_j` over the full
//!   (symmetric) matrix.
//!
//! Sampling is reproducible by construction: couplings come from a ChaCha8
//! stream keyed by the 64-bit seed, transformed to standard normals by the
//! ziggurat method (`rand_distr::StandardNormal`), drawn in row-major
//! upper-triangle order. Identical `(n, seed)` gives bit-identical matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;

/// Largest qubit count the exhaustive machinery accepts (2^24 energies).
pub const MAX_QUBITS: usize = 24;

/// Smallest qubit count the random ensemble supports.
pub const MIN_QUBITS: usize = 2;

fn check_qubits(n: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::QubitCountOutOfRange(n));
    }
    Ok(())
}

/// Spin value of qubit `k` in bitstring `z`.
#[inline(always)]
pub fn spin(z: usize, k: usize) -> f64 {
    if (z >> k) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// A randomly sampled QUBO problem: symmetric coefficient matrix with zero
/// diagonal plus the RNG provenance needed to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    n: usize,
    /// Row-major dense n×n matrix; symmetric, zero diagonal.
    q: Vec<f64>,
    seed: u64,
    instance_id: String,
}

impl QuboInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    /// Rebuild an instance from its upper triangle (diagonal included),
    /// row-major. Used by the JSON instance format.
    pub fn from_upper_triangle(
        n: usize,
        seed: u64,
        instance_id: String,
        upper: &[f64],
    ) -> Result<Self> {
        check_qubits(n)?;
        let expect = n * (n + 1) / 2;
        if upper.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "upper triangle for n={n} needs {expect} entries, got {}",
                upper.len()
            )));
        }
        let mut q = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                q[i * n + j] = upper[k];
                q[j * n + i] = upper[k];
                k += 1;
            }
        }
        Ok(Self { n, q, seed, instance_id })
    }

    /// Upper triangle (diagonal included), row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            for j in i..self.n {
                out.push(self.q(i, j));
            }
        }
        out
    }
}

/// Draw a random fully connected QUBO instance.
///
/// Off-diagonal entries are i.i.d. standard normal draws; the diagonal is
/// zero. A draw that lands exactly on 0.0 (probability ~0) is redrawn so the
/// graph stays fully connected.
pub fn sample_qubo(n: usize, seed: u64) -> Result<QuboInstance> {
    check_qubits(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            while v == 0.0 {
                v = StandardNormal.sample(&mut rng);
            }
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    Ok(QuboInstance {
        n,
        q,
        seed,
        instance_id: format!("q{n:02}s{seed:016x}"),
    })
}

/// QUBO energy `2 * xᵀ Q x` of a bit vector.
pub fn qubo_energy(q: &QuboInstance, x: &[u8]) -> Result<f64> {
    if x.len() != q.n {
        return Err(Error::DimensionMismatch(format!(
            "bit vector length {} != n = {}",
            x.len(),
            q.n
        )));
    }
    let mut acc = 0.0;
    for i in 0..q.n {
        if x[i] == 0 {
            continue;
        }
        for j in 0..q.n {
            if x[j] != 0 {
                acc += q.q(i, j);
            }
        }
    }
    Ok(2.0 * acc)
}

/// Ising couplings and fields for a spin-glass Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n: usize,
    /// Row-major dense n×n coupling matrix; symmetric, zero diagonal.
    j: Vec<f64>,
    h: Vec<f64>,
}

impl IsingProblem {
    pub fn new(j: Vec<Vec<f64>>, h: Vec<f64>) -> Result<Self> {
        let n = h.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(n));
        }
        if j.len() != n || j.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(
                "coupling matrix must be n×n".into(),
            ));
        }
        let mut flat = vec![0.0; n * n];
        for (i, row) in j.iter().enumerate() {
            for (jj, &v) in row.iter().enumerate() {
                if i == jj && v != 0.0 {
                    return Err(Error::DimensionMismatch(
                        "coupling diagonal must be zero".into(),
                    ));
                }
                if (v - j[jj][i]).abs() > 0.0 {
                    return Err(Error::DimensionMismatch(
                        "coupling matrix must be symmetric".into(),
                    ));
                }
                flat[i * n + jj] = v;
            }
        }
        Ok(Self { n, j: flat, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn j(&self, i: usize, jj: usize) -> f64 {
        self.j[i * self.n + jj]
    }

    #[inline]
    pub fn h(&self, i: usize) -> f64 {
        self.h[i]
    }

    /// Problem with all couplings and fields negated (energies flip sign).
    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            j: self.j.iter().map(|v| -v).collect(),
            h: self.h.iter().map(|v| -v).collect(),
        }
    }
}

/// Map a QUBO instance to Ising form: `J = Q` off the diagonal and
/// `h_i = sum_j Q_ij`, under the variable change `s = 2x - 1`.
///
/// The two energies differ by the instance constant `sum_{ij} Q_ij / 2`.
pub fn to_ising(q: &QuboInstance) -> IsingProblem {
    let n = q.n;
    let mut h = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            h[i] += q.q(i, j);
        }
    }
    IsingProblem { n, j: q.q.clone(), h }
}

/// Ising energy of a spin vector with entries in {-1, +1}.
pub fn ising_energy(p: &IsingProblem, z: &[i8]) -> Result<f64> {
    if z.len() != p.n {
        return Err(Error::DimensionMismatch(format!(
            "spin vector length {} != n = {}",
            z.len(),
            p.n
        )));
    }
    let mut acc = 0.0;
    for i in 0..p.n {
        for j in (i + 1)..p.n {
            acc += p.j(i, j) * f64::from(z[i]) * f64::from(z[j]);
        }
        acc += p.h(i) * f64::from(z[i]);
    }
    Ok(acc)
}

/// Exhaustive diagonal spectrum of an Ising problem, with the min-max
/// normalization that sends the ground state to 0 and the top state to 1.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    n: usize,
    raw: Vec<f64>,
    e_min: f64,
    e_max: f64,
    normalized: Vec<f64>,
    ground_states: Vec<usize>,
}

impl EnergyTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Spectral width `e_max - e_min`.
    pub fn span(&self) -> f64 {
        self.e_max - self.e_min
    }

    /// Bitstrings attaining `e_min` exactly.
    pub fn ground_states(&self) -> &[usize] {
        &self.ground_states
    }

    /// Largest absolute raw energy, an upper bound on the diagonal norm.
    pub fn max_abs(&self) -> f64 {
        self.e_min.abs().max(self.e_max.abs())
    }
}

/// Direct O(n²) evaluation of the Ising energy of bitstring `z`.
fn energy_of_bitstring(p: &IsingProblem, z: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.n {
        let si = spin(z, i);
        for j in (i + 1)..p.n {
            acc += p.j(i, j) * si * spin(z, j);
        }
        acc += p.h(i) * si;
    }
    acc
}

/// Energy change from flipping spin `k` of bitstring `z`.
#[inline]
fn flip_delta(p: &IsingProblem, z: usize, k: usize) -> f64 {
    let mut local = p.h(k);
    let row = &p.j[k * p.n..(k + 1) * p.n];
    for (j, &jkj) in row.iter().enumerate() {
        if j != k {
            local += jkj * spin(z, j);
        }
    }
    -2.0 * spin(z, k) * local
}

/// Fill `out[z - lo] = E(z)` for `z in lo..lo+out.len()`.
///
/// The first state is evaluated directly; successors are updated through the
/// single-flip increments implied by `z -> z+1` (flip the trailing ones and
/// the next zero bit), which costs O(n) amortized per state.
fn fill_energy_chunk(p: &IsingProblem, lo: usize, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut e = energy_of_bitstring(p, lo);
    out[0] = e;
    let mut cur = lo;
    for slot in out.iter_mut().skip(1) {
        let next = cur + 1;
        let flips = cur ^ next;
        let mut bit = 0;
        let mut mask = flips;
        while mask != 0 {
            if mask & 1 == 1 {
                e += flip_delta(p, cur, bit);
                cur ^= 1 << bit;
            }
            mask >>= 1;
            bit += 1;
        }
        debug_assert_eq!(cur, next);
        *slot = e;
    }
}

/// Sequential spectrum fill (always available; the benchmark baseline).
pub fn fill_energies_seq(p: &IsingProblem, out: &mut [f64]) {
    exec::for_each_chunk_mut_seq(out, |lo, chunk| fill_energy_chunk(p, lo, chunk));
}

/// Dispatching spectrum fill; bitwise identical to the sequential version.
pub fn fill_energies(p: &IsingProblem, out: &mut [f64]) {
    exec::for_each_chunk_mut(out, |lo, chunk| fill_energy_chunk(p, lo, chunk));
}

/// Enumerate all 2^n energies and normalize them to [0, 1].
///
/// Fails for constant spectra (e.g. the all-zero problem), where the
/// normalization is undefined.
pub fn enumerate_energies(p: &IsingProblem) -> Result<EnergyTable> {
    if p.n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(p.n));
    }
    let dim = 1usize << p.n;
    let mut raw = vec![0.0; dim];
    fill_energies(p, &mut raw);

    let mut e_min = f64::INFINITY;
    let mut e_max = f64::NEG_INFINITY;
    for &e in &raw {
        e_min = e_min.min(e);
        e_max = e_max.max(e);
    }
    if e_max <= e_min {
        return Err(Error::DegenerateSpectrum(e_min));
    }
    let span = e_max - e_min;
    let mut normalized = vec![0.0; dim];
    exec::for_each_chunk_mut(&mut normalized, |lo, chunk| {
        for (off, v) in chunk.iter_mut().enumerate() {
            *v = (raw[lo + off] - e_min) / span;
        }
    });
    let ground_states: Vec<usize> =
        (0..dim).filter(|&z| raw[z] == e_min).collect();

    Ok(EnergyTable {
        n: p.n,
        raw,
        e_min,
        e_max,
        normalized,
        ground_states,
    })
}

/// Convenience: sample, map, and enumerate in one call.
pub fn table_for_instance(q: &QuboInstance) -> Result<EnergyTable> {
    enumerate_energies(&to_ising(q))
}
