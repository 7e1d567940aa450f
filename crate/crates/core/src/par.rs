//! Order-preserving parallel map with a sequential fallback.
//!
//! With the `parallel` feature the work runs on a dedicated rayon pool of
//! `jobs` threads; without it (or with `jobs <= 1`) items are processed in
//! order on the calling thread. Output order always matches input order.

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(_jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Whether this build can actually run work concurrently.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_for_any_job_count() {
        let items: Vec<u64> = (0..200).collect();
        let seq = map(1, &items, |x| x * x + 1);
        for jobs in [2, 4, 8] {
            assert_eq!(map(jobs, &items, |x| x * x + 1), seq);
        }
    }
}
