//! Training loop: one optimizer step per slide (batch size 1), optional
//! per-epoch tile subsampling, and best-validation-AUC model selection.

use crate::bag::FeatureBag;
use crate::error::{Error, Result};
use crate::metrics::{self, ScorePairs, TilClass};
use crate::model::{backward, forward, loss, HeadKind, ModelHead, DEFAULT_HIDDEN};
use crate::optim::{adam_step, AdamHyper, AdamState};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub head_kind: HeadKind,
    pub hidden: usize,
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// When set, each training step sees a fresh uniform subsample of at
    /// most this many tiles. Validation always scores full bags.
    pub subsample: Option<usize>,
    pub binarize_threshold: f64,
    pub decoupled_l2: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(head_kind: HeadKind, lr: f64, l2: f64) -> Self {
        Self {
            head_kind,
            hidden: DEFAULT_HIDDEN,
            lr,
            l2,
            epochs: 50,
            batch_size: 1,
            subsample: None,
            binarize_threshold: 0.2,
            decoupled_l2: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        if self.batch_size != 1 {
            return Err(Error::validation("batch size is fixed at 1"));
        }
        if self.subsample == Some(0) {
            return Err(Error::validation("subsample must be >= 1"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.l2 < 0.0 {
            return Err(Error::validation("l2 strength must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.binarize_threshold) {
            return Err(Error::validation("binarize threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub train_mse: f64,
    pub val_auc: f64,
    pub val_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best_head: ModelHead,
    /// 1-based; first epoch attaining the best validation AUC.
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub history: Vec<EpochStats>,
}

/// Low iff score <= threshold.
pub fn binarize(score: f64, threshold: f64) -> TilClass {
    if score <= threshold {
        TilClass::Low
    } else {
        TilClass::High
    }
}

/// Uniform subsample of at most `n` tiles, original order preserved.
/// Bags at or under the budget pass through unchanged.
pub fn subsample_tiles(bag: &FeatureBag, n: usize, rng: &mut Rng) -> FeatureBag {
    if bag.tiles.len() <= n {
        return bag.clone();
    }
    let idx = rng.sample_indices(bag.tiles.len(), n);
    FeatureBag {
        patient_id: bag.patient_id.clone(),
        slide_id: bag.slide_id.clone(),
        h_dim: bag.h_dim,
        tiles: idx.iter().map(|&i| bag.tiles[i].clone()).collect(),
        label: bag.label,
        stratum: bag.stratum.clone(),
    }
}

/// One-line epoch log record.
pub fn format_epoch_log(epoch: usize, stats: &EpochStats) -> String {
    format!(
        "epoch={} train_mse={} val_auc={} val_r2={}",
        epoch,
        stats.train_mse,
        stats.val_auc,
        stats.val_r2.map_or_else(|| "nan".to_string(), |v| v.to_string()),
    )
}

/// Train on `train_bags`, scoring `val_bags` every epoch and retaining
/// the head from the first epoch with the highest validation AUC.
pub fn train_fold(
    train_bags: &[&FeatureBag],
    val_bags: &[&FeatureBag],
    config: &TrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    if train_bags.is_empty() || val_bags.is_empty() {
        return Err(Error::validation("train and validation sets must be non-empty"));
    }
    let h_dim = train_bags[0].h_dim;
    if train_bags.iter().chain(val_bags).any(|b| b.h_dim != h_dim) {
        return Err(Error::validation("all bags must share the same feature dimension"));
    }
    let val_classes: Vec<TilClass> =
        val_bags.iter().map(|b| binarize(b.label, config.binarize_threshold)).collect();
    if !val_classes.contains(&TilClass::Low) || !val_classes.contains(&TilClass::High) {
        return Err(Error::validation(
            "validation set must contain both binarized classes for AUC model selection",
        ));
    }

    let mut rng = Rng::from_seed(config.seed);
    let mut head = ModelHead::init_with_rng(config.head_kind, h_dim, config.hidden, &mut rng);
    let mut hyper = AdamHyper::new(config.lr, config.l2);
    hyper.decoupled = config.decoupled_l2;
    let mut state = AdamState::new(head.params.len(), hyper);

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ModelHead)> = None;
    let mut order: Vec<usize> = (0..train_bags.len()).collect();

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for &bag_idx in &order {
            let full = train_bags[bag_idx];
            let drawn;
            let bag: &FeatureBag = match config.subsample {
                Some(n) => {
                    drawn = subsample_tiles(full, n, &mut rng);
                    &drawn
                }
                None => full,
            };
            let pred = forward(&head, bag)?;
            let step_loss = loss(&pred, bag.label);
            if !step_loss.is_finite() {
                return Err(Error::NonFiniteLoss { slide_id: bag.slide_id.clone() });
            }
            loss_sum += step_loss;
            let grads = backward(&head, bag, bag.label)?;
            let (new_head, new_state) = adam_step(&head, &grads, &state)?;
            head = new_head;
            state = new_state;
        }

        let mut truths = Vec::with_capacity(val_bags.len());
        let mut preds = Vec::with_capacity(val_bags.len());
        for bag in val_bags {
            truths.push(bag.label);
            preds.push(forward(&head, bag)?.bag_score);
        }
        let val_auc = metrics::auc(&preds, &val_classes)?;
        let val_r2 = match ScorePairs::new(truths, preds).and_then(|p| metrics::r_squared(&p)) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        history.push(EpochStats { train_mse: loss_sum / train_bags.len() as f64, val_auc, val_r2 });

        let improved = match &best {
            None => true,
            Some((_, best_auc, _)) => val_auc > *best_auc,
        };
        if improved {
            best = Some((epoch, val_auc, head.clone()));
        }
    }

    let (best_epoch, best_val_auc, best_head) = best.expect("epochs >= 1");
    Ok(TrainResult { best_head, best_epoch, best_val_auc, history })
}
