//! TILMIL head architectures: tile scoring, bag-mean aggregation, and
//! analytic gradients of the squared-error loss.
//!
//! Parameters live in one flat vector whose layout matches the checkpoint
//! format exactly: `(w, b)` for the linear head, `(W1 row-major, b1, w2,
//! b2)` for the two-layer heads. Gradients are returned in the same
//! layout, which keeps the optimizer and finite-difference checks simple.

use crate::bag::FeatureBag;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Linear,
    TwoLinear,
    TwoLinearTanh,
}

impl HeadKind {
    pub fn as_u8(self) -> u8 {
        match self {
            HeadKind::Linear => 0,
            HeadKind::TwoLinear => 1,
            HeadKind::TwoLinearTanh => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(HeadKind::Linear),
            1 => Some(HeadKind::TwoLinear),
            2 => Some(HeadKind::TwoLinearTanh),
            _ => None,
        }
    }

    pub const ALL: [HeadKind; 3] = [HeadKind::Linear, HeadKind::TwoLinear, HeadKind::TwoLinearTanh];
}

impl std::str::FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(HeadKind::Linear),
            "two-linear" => Ok(HeadKind::TwoLinear),
            "two-linear-tanh" => Ok(HeadKind::TwoLinearTanh),
            other => Err(Error::validation(format!(
                "unknown head kind '{other}' (expected linear, two-linear, or two-linear-tanh)"
            ))),
        }
    }
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HeadKind::Linear => "linear",
            HeadKind::TwoLinear => "two-linear",
            HeadKind::TwoLinearTanh => "two-linear-tanh",
        };
        f.write_str(s)
    }
}

/// Trainable parameters of one head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHead {
    pub kind: HeadKind,
    pub h_dim: usize,
    /// Hidden width; 0 for the linear head.
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl ModelHead {
    pub fn num_params(kind: HeadKind, h_dim: usize, hidden: usize) -> usize {
        match kind {
            HeadKind::Linear => h_dim + 1,
            _ => h_dim * hidden + 2 * hidden + 1,
        }
    }

    /// Linear head: zero init (deterministic). Two-layer heads: weights
    /// uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
    pub fn init(kind: HeadKind, h_dim: usize, seed: u64) -> Self {
        Self::init_with_hidden(kind, h_dim, DEFAULT_HIDDEN, seed)
    }

    pub fn init_with_hidden(kind: HeadKind, h_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = Rng::from_seed(seed);
        Self::init_with_rng(kind, h_dim, hidden, &mut rng)
    }

    pub fn init_with_rng(kind: HeadKind, h_dim: usize, hidden: usize, rng: &mut Rng) -> Self {
        assert!(h_dim >= 1);
        match kind {
            HeadKind::Linear => Self { kind, h_dim, hidden: 0, params: vec![0.0; h_dim + 1] },
            _ => {
                assert!(hidden >= 1);
                let mut params = vec![0.0; Self::num_params(kind, h_dim, hidden)];
                let bound1 = 1.0 / (h_dim as f64).sqrt();
                for p in params[..h_dim * hidden].iter_mut() {
                    *p = rng.uniform(-bound1, bound1);
                }
                let bound2 = 1.0 / (hidden as f64).sqrt();
                let w2_start = h_dim * hidden + hidden;
                for p in params[w2_start..w2_start + hidden].iter_mut() {
                    *p = rng.uniform(-bound2, bound2);
                }
                Self { kind, h_dim, hidden, params }
            }
        }
    }

    fn check_shape(&self) -> Result<()> {
        let expect = Self::num_params(self.kind, self.h_dim, self.hidden);
        if self.params.len() != expect {
            return Err(Error::validation(format!(
                "head parameter count {} does not match kind/shape (expected {expect})",
                self.params.len()
            )));
        }
        Ok(())
    }
}

/// Per-tile scores and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BagPrediction {
    pub tile_scores: Vec<f64>,
    pub bag_score: f64,
}

/// Numerically stable logistic function; only ever exponentiates a
/// non-positive argument.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Compensated (Kahan) mean so summation order cannot shift the result
/// beyond a few ulps.
pub fn kahan_mean(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum / xs.len() as f64
}

/// Units-in-last-place distance between two finite doubles.
pub fn ulp_distance(a: f64, b: f64) -> u64 {
    fn key(x: f64) -> i64 {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN ^ bits
        } else {
            bits
        }
    }
    (key(a) - key(b)).unsigned_abs()
}

fn tile_logit(head: &ModelHead, features: &[f64], pre: &mut [f64]) -> f64 {
    match head.kind {
        HeadKind::Linear => {
            let w = &head.params[..head.h_dim];
            let b = head.params[head.h_dim];
            let mut z = b;
            for (wi, hi) in w.iter().zip(features) {
                z += wi * hi;
            }
            z
        }
        HeadKind::TwoLinear | HeadKind::TwoLinearTanh => {
            let hidden = head.hidden;
            let w1 = &head.params[..head.h_dim * hidden];
            let b1 = &head.params[head.h_dim * hidden..head.h_dim * hidden + hidden];
            let w2 = &head.params[head.h_dim * hidden + hidden..head.h_dim * hidden + 2 * hidden];
            let b2 = head.params[head.h_dim * hidden + 2 * hidden];
            pre.copy_from_slice(b1);
            for (i, &hi) in features.iter().enumerate() {
                let row = &w1[i * hidden..(i + 1) * hidden];
                for (p, &w) in pre.iter_mut().zip(row) {
                    *p += hi * w;
                }
            }
            let mut z = b2;
            if head.kind == HeadKind::TwoLinearTanh {
                for (p, &w) in pre.iter_mut().zip(w2) {
                    *p = p.tanh();
                    z += w * *p;
                }
            } else {
                for (&p, &w) in pre.iter().zip(w2) {
                    z += w * p;
                }
            }
            z
        }
    }
}

/// Score every tile and aggregate by mean.
pub fn forward(head: &ModelHead, bag: &FeatureBag) -> Result<BagPrediction> {
    head.check_shape()?;
    if bag.h_dim != head.h_dim {
        return Err(Error::validation(format!(
            "dimension mismatch: bag H={} but head H={}",
            bag.h_dim, head.h_dim
        )));
    }
    let mut pre = vec![0.0; head.hidden];
    let tile_scores: Vec<f64> = bag
        .tiles
        .iter()
        .map(|t| sigmoid(tile_logit(head, &t.features, &mut pre)))
        .collect();
    let bag_score = kahan_mean(&tile_scores);
    Ok(BagPrediction { tile_scores, bag_score })
}

/// Squared error of the single bag prediction (batch size 1).
pub fn loss(pred: &BagPrediction, label: f64) -> f64 {
    let d = pred.bag_score - label;
    d * d
}

/// Gradient of `loss(forward(head, bag), label)` with respect to every
/// parameter, in the head's flat layout. L2 is not included here; the
/// optimizer adds it.
pub fn backward(head: &ModelHead, bag: &FeatureBag, label: f64) -> Result<Vec<f64>> {
    let pred = forward(head, bag)?;
    let n = bag.tiles.len() as f64;
    let resid = 2.0 * (pred.bag_score - label) / n;
    let mut grads = vec![0.0; head.params.len()];

    match head.kind {
        HeadKind::Linear => {
            let (gw, gb) = grads.split_at_mut(head.h_dim);
            for (tile, &s) in bag.tiles.iter().zip(&pred.tile_scores) {
                let dz = resid * s * (1.0 - s);
                for (g, &hi) in gw.iter_mut().zip(&tile.features) {
                    *g += dz * hi;
                }
                gb[0] += dz;
            }
        }
        HeadKind::TwoLinear | HeadKind::TwoLinearTanh => {
            let hidden = head.hidden;
            let w1_len = head.h_dim * hidden;
            let w2 =
                head.params[w1_len + hidden..w1_len + 2 * hidden].to_vec();
            let mut act = vec![0.0; hidden];
            let mut dpre = vec![0.0; hidden];
            for (tile, &s) in bag.tiles.iter().zip(&pred.tile_scores) {
                let dz = resid * s * (1.0 - s);
                tile_logit(head, &tile.features, &mut act);
                // act now holds tanh(pre) for the tanh head, pre otherwise
                for j in 0..hidden {
                    let da = dz * w2[j];
                    dpre[j] = if head.kind == HeadKind::TwoLinearTanh {
                        da * (1.0 - act[j] * act[j])
                    } else {
                        da
                    };
                }
                for (i, &hi) in tile.features.iter().enumerate() {
                    let g_row = &mut grads[i * hidden..(i + 1) * hidden];
                    for (g, &dp) in g_row.iter_mut().zip(dpre.iter()) {
                        *g += dp * hi;
                    }
                }
                let (gb1, rest) = grads[w1_len..].split_at_mut(hidden);
                let (gw2, gb2) = rest.split_at_mut(hidden);
                for j in 0..hidden {
                    gb1[j] += dpre[j];
                    gw2[j] += dz * act[j];
                }
                gb2[0] += dz;
            }
        }
    }
    Ok(grads)
}
