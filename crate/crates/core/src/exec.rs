//! Sequential / data-parallel execution switch.
//!
//! Work is always split into the same fixed-size chunks and results are
//! reduced in index order, so the output is bit-identical whichever mode runs
//! it and however many worker threads exist.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `f(i)` for `i in 0..n`, collected in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps over chunks `[start, end)` of `0..n` with the given chunk size.
    pub fn map_chunks<T, F>(self, n: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let count = n.div_ceil(chunk);
        self.map(count, |c| {
            let start = c * chunk;
            f(start, (start + chunk).min(n))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |a: usize, b: usize| (a..b).map(|i| (i as f64).sqrt()).sum::<f64>();
        let s = Execution::Sequential.map_chunks(1000, 64, f);
        let p = Execution::Parallel.map_chunks(1000, 64, f);
        assert_eq!(s, p);
        assert_eq!(s.len(), 16);
    }
}
