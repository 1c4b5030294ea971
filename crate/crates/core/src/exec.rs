//! Data-parallel execution switch.
//!
//! Every batch loop in the crate (grid searches, time rows, seed sweeps) goes
//! through [`Execution::map`]. With the `parallel` feature the work is spread
//! over the rayon pool; without it, or with [`Execution::Sequential`], the
//! same closure runs in order. Results are always returned in input order, and
//! no reduction is performed inside the pool, so both paths produce identical
//! floating-point output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this build can actually run work in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Apply `f` to every item, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Apply `f` to every index in `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree_and_keep_order() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.37).collect();
        let seq = Execution::Sequential.map(&xs, |x| x.sin() * x.exp().ln());
        let par = Execution::Parallel.map(&xs, |x| x.sin() * x.exp().ln());
        assert_eq!(seq, par);
        let idx = Execution::Parallel.map_range(17, |i| i * i);
        assert_eq!(idx, (0..17).map(|i| i * i).collect::<Vec<_>>());
    }
}
