//! Experiment harness over the wrsn-core solvers: configuration, solver
//! dispatch, and sweep orchestration shared by the `wrsn-sched` binary and
//! the test suites.

pub mod config;
pub mod experiment;
pub mod runner;

/// Cap the worker pool from `WRSN_SCHED_THREADS` (parallel builds only).
pub fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(raw) = std::env::var("WRSN_SCHED_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            if threads >= 1 {
                // A global pool can only be installed once; later calls fail
                // harmlessly when tests initialize it repeatedly.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}
