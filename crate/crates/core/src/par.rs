//! Row- and chunk-parallel kernels.
//!
//! With the `parallel` feature the loops below fan out over rayon; without it
//! they run the identical chunked loops on the calling thread. Reductions are
//! always summed per fixed-size chunk and then across chunks in index order, so
//! both builds produce bit-identical results regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed reduction chunk length.
pub const CHUNK: usize = 4096;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial = |(x, y): (&[f64], &[f64])| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(partial)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(partial).collect();
    parts.into_iter().sum()
}

/// Same chunked summation order as [`dot`], on the calling thread.
pub fn dot_serial(a: &[f64], b: &[f64]) -> f64 {
    a.chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    #[cfg(feature = "parallel")]
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(b, a)| *b += alpha * a));
    #[cfg(not(feature = "parallel"))]
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    #[cfg(feature = "parallel")]
    x.par_chunks_mut(CHUNK)
        .for_each(|c| c.iter_mut().for_each(|v| *v *= alpha));
    #[cfg(not(feature = "parallel"))]
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Evaluates `f(i)` for `i in 0..len`, collecting results in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Fills `out[i] = f(i)`.
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    #[cfg(not(feature = "parallel"))]
    out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
}

/// Replaces `out[i]` with `f(i, out[i])`.
pub fn update_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, f64) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_iter_mut()
        .enumerate()
        .for_each(|(i, o)| *o = f(i, *o));
    #[cfg(not(feature = "parallel"))]
    out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i, *o));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum_on_small_input() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(dot(&a, &a), 285.0);
    }

    #[test]
    fn chunked_dot_is_order_stable() {
        let a: Vec<f64> = (0..3 * CHUNK + 17)
            .map(|i| ((i * 7919) % 1000) as f64 * 1e-3)
            .collect();
        let first = dot(&a, &a);
        for _ in 0..5 {
            assert_eq!(dot(&a, &a).to_bits(), first.to_bits());
        }
        assert_eq!(dot_serial(&a, &a).to_bits(), first.to_bits());
    }
}
