//! Multi-threaded versions of the escape-time drivers. Each result slot is
//! filled by index, so output does not depend on the thread count.

use rayon::prelude::*;
use rayon::ThreadPool;

use lflow_core::dynamics::{
    check_escape_rate_args, check_grid, escape_iterate, pixel_seed, random_seed, ComplexWindow, Escape, EscapeField,
    EscapeParams, EscapeRateEstimate, MapSpec,
};

use crate::error::{Error, Result};

/// A pool with `threads` workers; 0 lets rayon pick one per core.
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))
}

pub fn escape_time_field(
    pool: &ThreadPool,
    spec: &MapSpec,
    window: &ComplexWindow,
    width: usize,
    height: usize,
    params: &EscapeParams,
) -> Result<EscapeField> {
    check_grid(window, width, height, params)?;
    let cells = pool.install(|| {
        (0..width * height)
            .into_par_iter()
            .map(|idx| escape_iterate(spec, pixel_seed(window, width, height, idx % width, idx / width), params))
            .collect()
    });
    Ok(EscapeField { window: *window, width, height, max_iter: params.max_iter, cells })
}

pub fn estimate_escape_rate(
    pool: &ThreadPool,
    spec: &MapSpec,
    window: &ComplexWindow,
    n_seeds: u64,
    params: &EscapeParams,
    master_seed: u64,
) -> Result<EscapeRateEstimate> {
    check_escape_rate_args(window, n_seeds, params)?;
    let escapes: Vec<Escape> = pool.install(|| {
        (0..n_seeds)
            .into_par_iter()
            .map(|i| escape_iterate(spec, random_seed(window, master_seed, i), params))
            .collect()
    });
    Ok(EscapeRateEstimate::from_escapes(escapes, window, n_seeds, params, master_seed)?)
}
