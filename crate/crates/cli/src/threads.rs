//! Worker-count control via the `MF_THREADS` environment variable
//! (0 or unset = auto). Used by the multi-frame commands; single-frame
//! detection is sequential regardless.

use crate::CliError;

pub fn effective_threads() -> Result<usize, CliError> {
    let auto = || {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    };
    match std::env::var("MF_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(auto()),
        Err(e) => Err(CliError::config(format!("MF_THREADS: {}", e))),
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("MF_THREADS: invalid value {:?}", s)))?;
            Ok(if n == 0 { auto() } else { n })
        }
    }
}

/// Apply `f` to every item on up to `threads` workers, preserving input
/// order in the output.
pub fn parallel_map<T, R, F>(items: Vec<T>, threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(|t| f(t)).collect();
    }
    let mut results: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (items_chunk, results_chunk) in items.chunks(chunk).zip(results.chunks_mut(chunk)) {
            scope.spawn(|| {
                for (item, slot) in items_chunk.iter().zip(results_chunk.iter_mut()) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    results.into_iter().map(|r| r.expect("worker filled slot")).collect()
}
