//! File formats and command line for sqp-core.

pub mod text;
pub mod qtmfile;
pub mod artifact;
pub mod cli;

/// Runs `f` on a thread with a large stack; deep recursion in eval needs it.
pub fn with_big_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(512 << 20)
            .spawn_scoped(s, f)
            .expect("spawn worker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}
