use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed, rng_from_seed, SimRng};

/// Output of one replication, keyed by `(config, master_seed, rep)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rep: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub virtual_time: f64,
    pub vacancy_bound: f64,
    pub wall_ms: f64,
    #[serde(default)]
    pub guard_saturated: bool,
}

/// Runs `job(rep, seed, rng)` for `rep = 0..reps` in parallel, each with
/// the stream `derive_seed(master, tag, rep)`. Results come back in
/// replication order.
pub fn replicate<O, F>(master: u64, tag: &str, reps: u64, job: F) -> Vec<O>
where
    O: Send,
    F: Fn(u64, u64, &mut SimRng) -> O + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(master, tag, rep);
            let mut rng = rng_from_seed(seed);
            job(rep, seed, &mut rng)
        })
        .collect()
}
