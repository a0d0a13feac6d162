#![allow(dead_code)]

use std::path::PathBuf;

use progfilter::model::{Stage, StageChain};
use progfilter::NormalizedConfusionMatrix;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn random_gamma(rng: &mut impl Rng) -> NormalizedConfusionMatrix {
    NormalizedConfusionMatrix::from_rates(rng.gen(), rng.gen())
}

pub fn random_chain(rng: &mut impl Rng, depth: usize) -> StageChain {
    StageChain::new(
        (0..depth)
            .map(|_| Stage {
                f: rng.gen(),
                gamma: random_gamma(rng),
            })
            .collect(),
    )
    .unwrap()
}

pub fn chain_of(fs: &[f64], gammas: &[NormalizedConfusionMatrix]) -> StageChain {
    StageChain::new(
        fs.iter()
            .zip(gammas)
            .map(|(&f, &gamma)| Stage { f, gamma })
            .collect(),
    )
    .unwrap()
}
