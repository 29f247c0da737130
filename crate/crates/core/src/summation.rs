//! Fixed-order pairwise summation.
//!
//! Every reduction in the crate goes through these helpers so results do not
//! depend on thread count or on how a caller happened to chunk its work.

use std::ops::Add;

const BLOCK: usize = 32;

pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    if values.len() <= BLOCK {
        return values.iter().fold(T::default(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(item)` over an iterator, buffering the terms first.
pub fn pairwise_sum_by<I, T, F>(items: I, f: F) -> T
where
    I: IntoIterator,
    F: FnMut(I::Item) -> T,
    T: Copy + Default + Add<Output = T>,
{
    let terms: Vec<T> = items.into_iter().map(f).collect();
    pairwise_sum(&terms)
}
