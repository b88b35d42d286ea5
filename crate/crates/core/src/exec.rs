//! Execution policy for data-parallel loops.
//!
//! Every parallel loop in the crate maps an index range to a `Vec` in index
//! order, so results never depend on scheduling.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing. Identical to `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `0..n` through `f` and folds with an associative, commutative `reduce`.
///
/// `reduce` must be order-insensitive (e.g. a total-order minimum) for the
/// parallel result to be deterministic.
pub fn map_reduce<T, F, R>(exec: Execution, n: usize, identity: T, f: F, reduce: R) -> T
where
    T: Send + Sync + Clone,
    F: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .map(f)
            .reduce(|| identity.clone(), &reduce);
    }
    let _ = exec;
    (0..n).map(f).fold(identity, reduce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v = map_range(exec, 1000, |i| i * i);
            assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
        }
    }

    #[test]
    fn min_reduce_matches_sequential() {
        let f = |i: usize| (((i * 7919) % 1009) as u64, i);
        let seq = map_reduce(
            Execution::Sequential,
            5000,
            (u64::MAX, usize::MAX),
            f,
            std::cmp::min,
        );
        let par = map_reduce(
            Execution::Parallel,
            5000,
            (u64::MAX, usize::MAX),
            f,
            std::cmp::min,
        );
        assert_eq!(seq, par);
    }
}
