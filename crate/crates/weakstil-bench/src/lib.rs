//! Shared fixtures for the criterion benches.

use weakstil::bag::{FeatureBag, TileFeature};
use weakstil::model::{HeadKind, ModelHead};
use weakstil::rng::Rng;

/// A bag with `n_tiles` standard-normal feature rows.
pub fn bench_bag(h_dim: usize, n_tiles: usize, seed: u64) -> FeatureBag {
    let mut rng = Rng::from_seed(seed);
    FeatureBag {
        patient_id: "P".into(),
        slide_id: "S".into(),
        h_dim,
        tiles: (0..n_tiles)
            .map(|i| TileFeature {
                col: i as u32,
                row: 0,
                features: (0..h_dim).map(|_| rng.normal()).collect(),
            })
            .collect(),
        label: 0.3,
        stratum: "s".into(),
    }
}

/// A head with normal-ish parameters, any kind.
pub fn bench_head(kind: HeadKind, h_dim: usize, seed: u64) -> ModelHead {
    let mut rng = Rng::from_seed(seed);
    let mut head = ModelHead::init(kind, h_dim, seed);
    for p in head.params.iter_mut() {
        *p = 0.1 * rng.normal();
    }
    head
}
