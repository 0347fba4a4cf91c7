//! Shared inputs for the benchmarks.

use macup::{gen_random, Mac};

/// Deterministic random channel for a benchmark case.
pub fn channel(alphabet: usize, users: usize, outputs: usize) -> Mac {
    gen_random(0x5eed, alphabet, users, outputs).expect("benchmark channel")
}

/// Fidelity values swept by the partition benchmark.
pub const MU_SWEEP: [f64; 4] = [5.0, 17.2, 100.0, 1000.0];
