//! Shared fixtures for the benchmark suite.

use graphon_ldp_core::{CounterRng, StepGraphon};

/// Random uniform m-block graphon with a fixed seed.
pub fn random_uniform_graphon(m: usize, seed: u64) -> StepGraphon {
    let mut rng = CounterRng::new(seed);
    let mut values = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = rng.uniform();
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    StepGraphon::uniform(values).expect("valid graphon")
}
