//! Deterministic pairwise summation.

use crate::Real;

const BLOCK: usize = 16;

/// Sums `f(i)` for `i in lo..hi` with a fixed binary split.
pub fn pairwise_sum_by<T: Real, F: Fn(usize) -> T>(lo: usize, hi: usize, f: &F) -> T {
    if hi <= lo {
        return T::zero();
    }
    if hi - lo <= BLOCK {
        let mut s = T::zero();
        for i in lo..hi {
            s += f(i);
        }
        return s;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
}

pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    pairwise_sum_by(0, xs.len(), &|i| xs[i])
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(0, a.len(), &|i| a[i] * b[i])
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_empty() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn beats_naive_on_many_small_terms() {
        let xs = vec![0.1f32; 1_000_000];
        let naive: f32 = xs.iter().sum();
        let pw = pairwise_sum(&xs);
        assert!((pw - 1.0e5).abs() < (naive - 1.0e5).abs());
        assert!((pw - 1.0e5).abs() < 1.0);
    }
}
