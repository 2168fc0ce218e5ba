//! Deterministic batch parallelism for embarrassingly parallel sweeps.
//! Results are stitched back in index order, so output never depends on the
//! thread count; RBFLOW_THREADS caps the pool.

pub fn thread_cap() -> usize {
    std::env::var("RBFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1))
}

/// Evaluate `f(0..count)` across at most [`thread_cap`] threads, preserving
/// index order in the returned vector.
pub fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = thread_cap().min(count.max(1));
    if threads <= 1 || count < 2 {
        return (0..count).map(f).collect();
    }
    let chunk = count.div_ceil(threads);
    let mut pieces: Vec<(usize, Vec<T>)> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(count);
            if lo >= hi {
                break;
            }
            let f = &f;
            handles.push(scope.spawn(move || (lo, (lo..hi).map(f).collect::<Vec<T>>())));
        }
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    pieces.sort_by_key(|(lo, _)| *lo);
    pieces.into_iter().flat_map(|(_, v)| v).collect()
}
