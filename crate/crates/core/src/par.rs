//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the index-mapped loops run on the rayon global
//! pool. Without it, or when [`Execution::Sequential`] is requested
//! explicitly, they run on the calling thread. Results are always returned in
//! index order, so callers see identical output under both modes.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How an index-mapped loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `f` over `items` with at most `bound` calls in flight at once.
///
/// Intended for blocking I/O (HTTP requests), so it uses scoped OS threads
/// rather than the rayon pool. Output order matches input order.
pub fn map_bounded<I, T, F>(items: &[I], bound: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync,
{
    let bound = bound.max(1).min(items.len());
    if bound <= 1 || !cfg!(feature = "parallel") {
        return items.iter().map(f).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..bound {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(&items[i]);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots.into_iter().map(|slot| slot.into_inner().unwrap().expect("every slot is filled")).collect()
}
