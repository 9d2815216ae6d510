//! Deterministic reductions.
//!
//! Per-cell terms may be produced in parallel, but they are always collected
//! in cell order and reduced by the same pairwise tree, so the result does not
//! depend on the number of worker threads.

use rayon::prelude::*;

const LEAF: usize = 32;

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    if terms.len() <= LEAF {
        let mut acc = 0.0;
        for &t in terms {
            acc += t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Evaluates `f` on `0..n` (in parallel for large `n`) and sums the terms pairwise.
pub fn map_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let terms: Vec<f64> = if n >= 4096 {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(&f).collect()
    };
    pairwise_sum(&terms)
}
