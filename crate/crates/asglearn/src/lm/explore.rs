//! The exploration generator: CFG-masked temperature sampling over a grid of
//! (instance, temperature, sample) cells.
//!
//! Every cell gets its own counter-based RNG stream derived from the base
//! seed, so the output is a pure function of the inputs: cells may be
//! evaluated in parallel and the collected dataset is identical to a
//! sequential run. Results are ordered by (instance, temperature, sample).

use rayon::prelude::*;

use crate::grammar::{Grammar, Vocabulary};

use super::sampler::{sample_sequence, CfgMask, MaskFn};
use super::{
    GeneratorConfig, LogitProvider, ProblemInstance, SampleError, SampledSequence, SplitMix64,
};

/// Runs the full sampling grid: `instances × temperatures × samples`
/// sequences, each tagged with its provenance cell. Non-terminated sequences
/// are retained and flagged; downstream labeling drops them.
pub fn explore(
    provider: &dyn LogitProvider,
    grammar: &Grammar,
    vocabulary: &Vocabulary,
    instances: &[ProblemInstance],
    config: &GeneratorConfig,
) -> Result<Vec<SampledSequence>, SampleError> {
    config.validate()?;
    let mask = CfgMask {
        grammar,
        vocabulary,
    };
    let mut cells = Vec::new();
    for (i, instance) in instances.iter().enumerate() {
        for (k, &temperature) in config.temperatures.iter().enumerate() {
            for j in 0..config.samples_per_temperature {
                cells.push((i, instance, k, temperature, j));
            }
        }
    }
    let run_cell = |&(i, instance, k, temperature, j): &(
        usize,
        &ProblemInstance,
        usize,
        f64,
        usize,
    )|
     -> Result<SampledSequence, SampleError> {
        let mut rng = SplitMix64::for_cell(config.seed, i, j, k);
        let mut sequence = sample_sequence(
            provider,
            instance,
            &mask as &dyn MaskFn,
            vocabulary,
            temperature,
            config.max_tokens,
            &mut rng,
        )?;
        sequence.sample_index = j;
        Ok(sequence)
    };
    if provider.single_flight() {
        cells.iter().map(run_cell).collect()
    } else {
        cells.par_iter().map(run_cell).collect()
    }
}
