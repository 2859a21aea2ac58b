//! Deterministic execution kernels for the hot loops.
//!
//! Every bulk sweep and reduction runs over fixed-size chunks of the
//! underlying array. Reductions compute one partial per chunk sequentially and
//! combine the partials in chunk order, so the result is bitwise identical for
//! any worker count and for the sequential fallback (built with
//! `--no-default-features`).
//!
//! The `*_seq` variants are always compiled; the parallel variants exist under
//! the `parallel` feature and the unsuffixed entry points dispatch to
//! whichever is enabled. The benchmark suite compares the two directly.

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by every sweep and reduction.
pub const CHUNK: usize = 1 << 12;

/// Sum of `f(i)` over `i in 0..len`, reduced in fixed chunk order.
pub fn sum_indexed_seq<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let mut total = 0.0;
    let mut lo = 0;
    while lo < len {
        let hi = (lo + CHUNK).min(len);
        let mut partial = 0.0;
        for i in lo..hi {
            partial += f(i);
        }
        total += partial;
        lo = hi;
    }
    total
}

#[cfg(feature = "parallel")]
pub fn sum_indexed_par<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut partial = 0.0;
            for i in lo..hi {
                partial += f(i);
            }
            partial
        })
        .collect();
    partials.iter().sum()
}

/// Dispatching sum; bitwise identical to [`sum_indexed_seq`].
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        sum_indexed_par(len, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sum_indexed_seq(len, f)
    }
}

/// Apply `f(global_offset, chunk)` to fixed-size chunks of `data`, in place.
pub fn for_each_chunk_mut_seq<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    let mut lo = 0;
    let len = data.len();
    while lo < len {
        let hi = (lo + CHUNK).min(len);
        f(lo, &mut data[lo..hi]);
        lo = hi;
    }
}

#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut_par<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    data.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| f(c * CHUNK, chunk));
}

pub fn for_each_chunk_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        for_each_chunk_mut_par(data, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        for_each_chunk_mut_seq(data, f)
    }
}

// Raw-pointer wrapper so disjoint amplitude pairs can be updated from rayon
// workers. Same idiom rayon itself uses; !Send/!Sync on raw pointers is a
// lint, not a safety boundary.
#[cfg(feature = "parallel")]
struct SendPtr<T>(*mut T);

#[cfg(feature = "parallel")]
unsafe impl<T: Send> Send for SendPtr<T> {}
#[cfg(feature = "parallel")]
unsafe impl<T: Send> Sync for SendPtr<T> {}

#[cfg(feature = "parallel")]
impl<T> SendPtr<T> {
    fn get(&self) -> *mut T {
        self.0
    }
}

/// Index of the lower member of the `t`-th amplitude pair for `qubit`.
///
/// Inserts a zero bit at position `qubit` of `t`; the partner index is
/// `lower | (1 << qubit)`.
#[inline(always)]
pub fn pair_index(t: usize, qubit: usize) -> usize {
    let mask = (1usize << qubit) - 1;
    ((t >> qubit) << (qubit + 1)) | (t & mask)
}

/// Visit every amplitude pair `(amp[i], amp[i | 1<<qubit])` once.
pub fn for_each_pair_seq<F>(amp: &mut [Complex64], qubit: usize, f: F)
where
    F: Fn(&mut Complex64, &mut Complex64) + Sync,
{
    let stride = 1usize << qubit;
    let pairs = amp.len() / 2;
    for t in 0..pairs {
        let i = pair_index(t, qubit);
        // Split to obtain two disjoint mutable references.
        let (lo, hi) = amp.split_at_mut(i + stride);
        f(&mut lo[i], &mut hi[0]);
    }
}

#[cfg(feature = "parallel")]
pub fn for_each_pair_par<F>(amp: &mut [Complex64], qubit: usize, f: F)
where
    F: Fn(&mut Complex64, &mut Complex64) + Sync,
{
    let stride = 1usize << qubit;
    let pairs = amp.len() / 2;
    let ptr = SendPtr(amp.as_mut_ptr());
    let chunks = pairs.div_ceil(CHUNK);
    (0..chunks).into_par_iter().for_each(|c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(pairs);
        for t in lo..hi {
            let i = pair_index(t, qubit);
            // SAFETY: pair_index is injective in t and never produces the
            // partner index i | stride of another pair, so distinct t touch
            // disjoint elements; both indices are < amp.len().
            unsafe {
                let a = &mut *ptr.get().add(i);
                let b = &mut *ptr.get().add(i + stride);
                f(a, b);
            }
        }
    });
}

pub fn for_each_pair<F>(amp: &mut [Complex64], qubit: usize, f: F)
where
    F: Fn(&mut Complex64, &mut Complex64) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        for_each_pair_par(amp, qubit, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        for_each_pair_seq(amp, qubit, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_covers_all_lower_indices() {
        let n = 4;
        for qubit in 0..n {
            let mut seen: Vec<usize> = (0..(1 << (n - 1)))
                .map(|t| pair_index(t, qubit))
                .collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), 1 << (n - 1));
            for &i in &seen {
                assert_eq!(i >> qubit & 1, 0);
            }
        }
    }

    #[test]
    fn chunked_sum_matches_naive() {
        let data: Vec<f64> = (0..10_123).map(|i| (i as f64).sin()).collect();
        let naive: f64 = data.iter().sum();
        let chunked = sum_indexed_seq(data.len(), |i| data[i]);
        assert!((naive - chunked).abs() < 1e-9);
        let dispatched = sum_indexed(data.len(), |i| data[i]);
        assert_eq!(chunked.to_bits(), dispatched.to_bits());
    }

    #[test]
    fn pair_sweep_seq_par_identical() {
        let len = 1 << 10;
        let mut a: Vec<Complex64> = (0..len)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let mut b = a.clone();
        let rot = |x: &mut Complex64, y: &mut Complex64| {
            let (u, v) = (*x, *y);
            *x = 0.6 * u + 0.8 * v;
            *y = -0.8 * u + 0.6 * v;
        };
        for q in [0, 3, 9] {
            for_each_pair_seq(&mut a, q, rot);
            for_each_pair(&mut b, q, rot);
        }
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
