//! Synthetic bag generator with a planted scoring head.
//!
//! Labels are produced by running the planted head over the generated
//! tiles, so the planted head is exact ground truth and end-to-end
//! training is verifiable against it. Each bag draws a latent center for
//! its tile features; the spread of those centers is what gives bag
//! scores a usable dynamic range under the 0.2 binarization cut.

use crate::bag::{FeatureBag, TileFeature};
use crate::error::{Error, Result};
use crate::model::{forward, HeadKind, ModelHead};
use crate::rng::Rng;

/// Bias of the planted head; places bag scores roughly in (0.05, 0.6)
/// so the 0.2 threshold separates two populated classes.
const PLANTED_BIAS: f64 = -1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_bags: usize,
    pub tiles_min: usize,
    pub tiles_max: usize,
    pub h_dim: usize,
    pub label_noise_sd: f64,
    pub strata: Vec<(String, f64)>,
    pub planted_kind: HeadKind,
    pub planted_hidden: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(num_bags: usize, h_dim: usize, seed: u64) -> Self {
        Self {
            num_bags,
            tiles_min: 100,
            tiles_max: 400,
            h_dim,
            label_noise_sd: 0.0,
            strata: vec![("s0".to_string(), 1.0)],
            planted_kind: HeadKind::Linear,
            planted_hidden: 32,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_bags == 0 {
            return Err(Error::validation("num_bags must be >= 1"));
        }
        if self.tiles_min < 1 || self.tiles_min > self.tiles_max {
            return Err(Error::validation("tile range must satisfy 1 <= min <= max"));
        }
        if self.h_dim == 0 {
            return Err(Error::validation("h_dim must be >= 1"));
        }
        if self.label_noise_sd < 0.0 {
            return Err(Error::validation("label noise sd must be >= 0"));
        }
        if self.strata.is_empty() {
            return Err(Error::validation("at least one stratum required"));
        }
        let total: f64 = self.strata.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("stratum proportions sum to {total}, not 1")));
        }
        Ok(())
    }
}

fn plant_head(config: &SynthConfig, rng: &mut Rng) -> ModelHead {
    let h = config.h_dim;
    let sd = 1.0 / (h as f64).sqrt();
    match config.planted_kind {
        HeadKind::Linear => {
            let mut params: Vec<f64> = (0..h).map(|_| rng.normal() * sd).collect();
            params.push(PLANTED_BIAS);
            ModelHead { kind: HeadKind::Linear, h_dim: h, hidden: 0, params }
        }
        kind => {
            let hidden = config.planted_hidden;
            let mut params = Vec::with_capacity(ModelHead::num_params(kind, h, hidden));
            params.extend((0..h * hidden).map(|_| rng.normal() * sd));
            params.extend(std::iter::repeat(0.0).take(hidden)); // b1
            let sd2 = 1.0 / (hidden as f64).sqrt();
            params.extend((0..hidden).map(|_| rng.normal() * sd2)); // w2
            params.push(PLANTED_BIAS);
            ModelHead { kind, h_dim: h, hidden, params }
        }
    }
}

/// Largest-remainder apportionment of `total` bags across strata.
fn stratum_counts(strata: &[(String, f64)], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = strata.iter().map(|(_, p)| (p * total as f64) as usize).collect();
    let mut remainders: Vec<(usize, f64)> = strata
        .iter()
        .enumerate()
        .map(|(i, (_, p))| (i, p * total as f64 - counts[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut assigned: usize = counts.iter().sum();
    let mut i = 0;
    while assigned < total {
        counts[remainders[i % remainders.len()].0] += 1;
        assigned += 1;
        i += 1;
    }
    counts
}

/// Generate a dataset and its planted ground-truth head.
pub fn generate(config: &SynthConfig) -> Result<(Vec<FeatureBag>, ModelHead)> {
    config.validate()?;
    let mut rng = Rng::from_seed(config.seed);
    let head = plant_head(config, &mut rng);

    let counts = stratum_counts(&config.strata, config.num_bags);
    let mut stratum_of_bag = Vec::with_capacity(config.num_bags);
    for (i, &c) in counts.iter().enumerate() {
        stratum_of_bag.extend(std::iter::repeat(i).take(c));
    }

    let span = (config.tiles_max - config.tiles_min + 1) as u64;
    let mut bags = Vec::with_capacity(config.num_bags);
    for b in 0..config.num_bags {
        let n = config.tiles_min + rng.gen_range(span) as usize;
        let cols = (n as f64).sqrt().ceil() as u32;
        let center: Vec<f64> = (0..config.h_dim).map(|_| rng.normal()).collect();
        let tiles: Vec<TileFeature> = (0..n)
            .map(|t| TileFeature {
                col: t as u32 % cols,
                row: t as u32 / cols,
                features: center.iter().map(|&c| c + rng.normal()).collect(),
            })
            .collect();
        let mut bag = FeatureBag {
            patient_id: format!("P{b:04}"),
            slide_id: format!("S{b:04}"),
            h_dim: config.h_dim,
            tiles,
            label: 0.0,
            stratum: config.strata[stratum_of_bag[b]].0.clone(),
        };
        let score = forward(&head, &bag)?.bag_score;
        let label = if config.label_noise_sd > 0.0 {
            (score + config.label_noise_sd * rng.normal()).clamp(0.0, 1.0)
        } else {
            score
        };
        bag.label = label;
        bags.push(bag);
    }
    Ok((bags, head))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::validate_bag;

    #[test]
    fn noiseless_labels_equal_planted_scores() {
        let config = SynthConfig::new(20, 8, 0);
        let (bags, head) = generate(&config).unwrap();
        for bag in &bags {
            let score = forward(&head, bag).unwrap().bag_score;
            assert_eq!(bag.label, score);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let config = SynthConfig::new(10, 4, 123);
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bags_are_valid_and_labels_in_range() {
        let mut config = SynthConfig::new(50, 6, 3);
        config.label_noise_sd = 0.1;
        let (bags, _) = generate(&config).unwrap();
        for bag in &bags {
            validate_bag(bag).unwrap();
            assert!((0.0..=1.0).contains(&bag.label));
        }
    }

    #[test]
    fn bag_scores_spread_across_threshold() {
        let config = SynthConfig::new(200, 32, 0);
        let (bags, _) = generate(&config).unwrap();
        let low = bags.iter().filter(|b| b.label <= 0.2).count();
        let high = bags.len() - low;
        assert!(low >= 20 && high >= 20, "low={low} high={high}");
        let max = bags.iter().map(|b| b.label).fold(0.0, f64::max);
        let min = bags.iter().map(|b| b.label).fold(1.0, f64::min);
        assert!(max - min > 0.2, "labels too concentrated: [{min}, {max}]");
    }

    #[test]
    fn stratum_counts_match_proportions() {
        let mut config = SynthConfig::new(101, 4, 9);
        config.strata = vec![
            ("a".into(), 0.5),
            ("b".into(), 0.3),
            ("c".into(), 0.2),
        ];
        let (bags, _) = generate(&config).unwrap();
        for (name, p) in &config.strata {
            let count = bags.iter().filter(|b| &b.stratum == name).count() as f64;
            assert!((count - p * 101.0).abs() <= 1.0, "{name}: {count}");
        }
    }

    #[test]
    fn bad_proportions_rejected() {
        let mut config = SynthConfig::new(10, 4, 0);
        config.strata = vec![("a".into(), 0.5), ("b".into(), 0.6)];
        assert!(generate(&config).is_err());
    }

    #[test]
    fn planted_mlp_head_also_generates() {
        let mut config = SynthConfig::new(10, 8, 2);
        config.planted_kind = HeadKind::TwoLinearTanh;
        config.planted_hidden = 16;
        let (bags, head) = generate(&config).unwrap();
        assert_eq!(head.kind, HeadKind::TwoLinearTanh);
        for bag in &bags {
            assert!(bag.label > 0.0 && bag.label < 1.0);
        }
    }
}
