//! Independent closed-loop runs, data-parallel over experiments when the
//! `parallel` feature is enabled.
//!
//! Each run owns its network, controller and plant, so results do not depend
//! on the execution order: parallel and sequential batches are bit-identical.

use crate::error::Result;
use crate::harness::{run_experiment, ExperimentConfig, ExperimentLog};
use crate::plasticity::StdpParams;

/// Runs every configuration on the calling thread, in order.
pub fn run_batch_sequential(configs: &[ExperimentConfig]) -> Vec<Result<ExperimentLog>> {
    configs.iter().map(run_experiment).collect()
}

/// Runs the configurations on the rayon pool; output order matches input.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(configs: &[ExperimentConfig]) -> Vec<Result<ExperimentLog>> {
    use rayon::prelude::*;
    configs.par_iter().map(run_experiment).collect()
}

/// Parallel with the `parallel` feature, sequential otherwise.
pub fn run_batch(configs: &[ExperimentConfig]) -> Vec<Result<ExperimentLog>> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(configs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(configs)
    }
}

/// One configuration per `(nu_ltp, nu_ltd)` pair, all other settings from `base`.
pub fn stdp_sweep(base: &ExperimentConfig, nu_ltp: &[f64], nu_ltd: &[f64]) -> Vec<ExperimentConfig> {
    nu_ltp
        .iter()
        .flat_map(|&ltp| {
            nu_ltd.iter().map(move |&ltd| {
                let mut c = base.clone();
                c.cerebellum.stdp = StdpParams {
                    nu_ltp: ltp,
                    nu_ltd: ltd,
                    ..base.cerebellum.stdp
                };
                c
            })
        })
        .collect()
}

/// One configuration per seed.
pub fn seed_sweep(base: &ExperimentConfig, seeds: impl IntoIterator<Item = u64>) -> Vec<ExperimentConfig> {
    seeds
        .into_iter()
        .map(|seed| ExperimentConfig { seed, ..base.clone() })
        .collect()
}
