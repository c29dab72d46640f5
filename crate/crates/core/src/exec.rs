//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper preserves input order in its output, so results never depend
//! on the execution mode or the number of worker threads. Without the
//! `parallel` feature, [`Execution::Parallel`] silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `0..len` through `f` and collects in index order.
pub fn map_indices<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Maps a slice through `f` and collects in input order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Index of the maximum of `f(i)` over `0..len`, lowest index on ties.
///
/// NaN values are never selected.
pub fn argmax(exec: Execution, len: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Option<(usize, f64)> {
    let values = map_indices(exec, len, f);
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Configures the global worker pool. Has no effect without `parallel`.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    let ok = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_ok();
    #[cfg(not(feature = "parallel"))]
    let ok = {
        let _ = threads;
        false
    };
    ok
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = map_indices(Execution::Sequential, 1000, f);
        let b = map_indices(Execution::Parallel, 1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        let v = [1.0, 3.0, f64::NAN, 3.0, 2.0];
        let best = argmax(Execution::Parallel, v.len(), |i| v[i]).unwrap();
        assert_eq!(best, (1, 3.0));
        assert!(argmax(Execution::Sequential, 0, |_| 0.0).is_none());
    }
}
