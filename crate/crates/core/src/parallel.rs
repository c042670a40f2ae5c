//! Order-preserving parallel map on scoped threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Environment variable capping worker threads; 0 or unset means one per core.
pub const THREADS_ENV: &str = "RHO_RADII_THREADS";

/// Worker count from [`THREADS_ENV`].
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(resolve_threads(0)),
        Err(e) => Err(Error::input(format!("{THREADS_ENV}: {e}"))),
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("{THREADS_ENV} must be a non-negative integer, got {s:?}")))?;
            Ok(resolve_threads(n))
        }
    }
}

/// 0 means one thread per available core.
pub fn resolve_threads(n: usize) -> usize {
    if n > 0 {
        n
    } else {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    }
}

/// Applies `f` to every item, returning results in input order.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = threads.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<(usize, R)>> = Mutex::new(Vec::with_capacity(items.len()));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("worker panicked").push((i, r));
            });
        }
    });
    let mut out = out.into_inner().expect("worker panicked");
    out.sort_by_key(|p| p.0);
    out.into_iter().map(|p| p.1).collect()
}
