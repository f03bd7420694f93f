//! Golden trace digests, shared with the acceptance target.

use ccgym::checkpoint::Checkpoint;
use ccgym::config::AlgoParams;
use ccgym::core::policy::{ObsConfig, PolicyParams};
use ccgym::core::scenario::ScenarioSpec;
use ccgym::run::{run_scenario, trace_digest, Algo, Controller};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// sha256 of the text trace of a 4→1 run, 300 µs, seed 11.
pub const GOLDEN: [(Algo, &str); 4] = [
    (Algo::Dcqcn, "ec972dd2198cddaf1f3c601b7f6ea0b7b9a82855da38e744c220c4c1dc9f8030"),
    (Algo::Hpcc, "4395c4efbbb4e4052ac65ef08be9e037fc0d6d5ab7360a92e3c9807efb3b1d37"),
    (Algo::Swift, "df0b2dac84c874f4586a7c22931db1546d586f249c790339dd8c4e8dfaa6e52a"),
    (Algo::Adpg, "268d00b7fc94c675975365dbfd6fa0a8f42771007e33c54487ebe55d59fa714b"),
];

pub fn digest(algo: Algo) -> (String, usize) {
    let spec = ScenarioSpec::many_to_one(4, 300_000, 11);
    let obs = ObsConfig::default();
    let ck = Checkpoint::Float {
        params: PolicyParams::init_uniform(obs.dim(), 0.1, &mut ChaCha8Rng::seed_from_u64(5)),
        obs,
    };
    let params = AlgoParams::default();
    let ctrl = Controller {
        algo,
        params: &params,
        checkpoint: Some(&ck),
        target: 2.0,
    };
    let out = run_scenario(&spec, ctrl, true).unwrap();
    let tr = out.trace.unwrap();
    (trace_digest(&tr), tr.len())
}
