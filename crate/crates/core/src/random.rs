//! Seeded random grid data for oracle checks and studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridFunction, GridSpec, VectorGridFunction};

/// Uniform values in `[-1, 1]`, reproducible from `seed`.
pub fn random_field(spec: GridSpec, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    GridFunction::from_values(spec, values).expect("length matches spec")
}

pub fn random_vector_field(spec: GridSpec, seed: u64) -> VectorGridFunction {
    VectorGridFunction::new(random_field(spec, seed), random_field(spec, seed ^ 0x9e37_79b9_7f4a_7c15)).expect("same spec")
}
