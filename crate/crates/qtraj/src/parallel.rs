//! Parallel trajectory ensembles with order-independent results.

use qtraj_core::linalg::CVector;
use qtraj_core::models::ModelSpec;
use qtraj_core::rng::stream_seed;
use qtraj_core::trajectory::{run_trajectory, EnsembleAccumulator, EnsembleResult, SampleGrid, Solver, TrajectoryRecord};
use qtraj_core::{Error, Result};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "QTRAJ_THREADS";

const CHUNK: usize = 256;

/// Worker pool sized by `threads`, else `QTRAJ_THREADS`, else the number of CPUs.
pub fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let n = match threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => s.trim().parse().map_err(|_| CliError::config(format!("{THREADS_ENV} must be an integer, got '{s}'")))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn run_one(m: &ModelSpec, psi0: &CVector, t_final: f64, solver: &Solver, seed: u64, i: usize, grid: &SampleGrid) -> Result<TrajectoryRecord> {
    run_trajectory(m, psi0, t_final, solver, stream_seed(seed, i as u64), grid)
        .map_err(|e| Error::Trajectory { index: i, source: Box::new(e) })
}

/// Trajectories `0..n_traj` in index order.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectories(
    pool: &rayon::ThreadPool,
    m: &ModelSpec,
    psi0: &CVector,
    t_final: f64,
    solver: &Solver,
    n_traj: usize,
    master_seed: u64,
    grid: &SampleGrid,
) -> Result<Vec<TrajectoryRecord>> {
    pool.install(|| (0..n_traj).into_par_iter().map(|i| run_one(m, psi0, t_final, solver, master_seed, i, grid)).collect())
}

/// Parallel counterpart of [`qtraj_core::trajectory::run_ensemble`] with identical output.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    pool: &rayon::ThreadPool,
    m: &ModelSpec,
    psi0: &CVector,
    t_final: f64,
    solver: &Solver,
    n_traj: usize,
    master_seed: u64,
    grid: &SampleGrid,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::InvalidInput("n_traj must be at least 1".into()));
    }
    let mut acc = EnsembleAccumulator::new(master_seed);
    let mut start = 0;
    while start < n_traj {
        let end = (start + CHUNK).min(n_traj);
        let recs: Vec<TrajectoryRecord> = pool.install(|| {
            (start..end).into_par_iter().map(|i| run_one(m, psi0, t_final, solver, master_seed, i, grid)).collect::<Result<_>>()
        })?;
        for r in &recs {
            acc.add(r)?;
        }
        start = end;
    }
    acc.finish()
}
