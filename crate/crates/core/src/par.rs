//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers run on rayon; without it every
//! call degrades to a plain loop. Results are always collected in index
//! order and reductions are combined sequentially, so the output does not
//! depend on the thread count.

/// Execution policy for batch work (sweep members, sampling checks, oracles).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Serial,
    /// Run on a dedicated pool with this many threads (0 = rayon default).
    Parallel { threads: usize },
}

impl Exec {
    /// Maps a `--jobs` style count onto a policy.
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs == 1 {
            Exec::Serial
        } else {
            Exec::Parallel { threads: jobs }
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Exec::Parallel { .. })
    }

    /// `f(0), f(1), ..., f(n-1)` in order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Exec::Parallel { threads } = *self {
            use rayon::prelude::*;
            return self.install(threads, || (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Runs independent tasks and returns their results in submission order.
    pub fn run<T, F>(&self, tasks: Vec<F>) -> Vec<T>
    where
        T: Send,
        F: FnOnce() -> T + Send,
    {
        #[cfg(feature = "parallel")]
        if let Exec::Parallel { threads } = *self {
            use rayon::prelude::*;
            return self.install(threads, || tasks.into_par_iter().map(|t| t()).collect());
        }
        tasks.into_iter().map(|t| t()).collect()
    }

    /// Sum of `f(i)` over chunks of fixed size; partial sums are added in
    /// chunk order so the result is identical for serial and parallel runs.
    pub fn chunked_sum<F>(&self, n: usize, chunk: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunk = chunk.max(1);
        let chunks = n.div_ceil(chunk);
        self.map(chunks, |c| (c * chunk..((c + 1) * chunk).min(n)).map(&f).sum::<f64>())
            .into_iter()
            .sum()
    }

    #[cfg(feature = "parallel")]
    fn install<R: Send>(&self, threads: usize, op: impl FnOnce() -> R + Send) -> R {
        if threads == 0 {
            return op();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Exec::Serial, Exec::Parallel { threads: 3 }] {
            assert_eq!(exec.map(10, |i| i * i), (0..10).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn chunked_sum_is_policy_independent() {
        let f = |i: usize| 1.0 / (1.0 + i as f64).powf(1.3);
        let a = Exec::Serial.chunked_sum(10_001, 64, f);
        let b = Exec::Parallel { threads: 4 }.chunked_sum(10_001, 64, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn run_returns_in_submission_order() {
        let tasks: Vec<_> = (0..5).map(|i| move || i * 2).collect();
        assert_eq!(Exec::from_jobs(2).run(tasks), vec![0, 2, 4, 6, 8]);
        assert_eq!(Exec::from_jobs(1), Exec::Serial);
    }
}
