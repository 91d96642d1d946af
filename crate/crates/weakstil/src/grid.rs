//! Hyperparameter grid search over learning rate and L2 strength, with
//! per-cell fold statistics and deterministic per-cell seeding.

use rayon::prelude::*;

use crate::bag::FeatureBag;
use crate::error::{Error, Result};
use crate::metrics::mean_std;
use crate::rng::derive_seed;
use crate::splits::{materialize, SplitPlan};
use crate::train::{train_fold, TrainConfig};

/// The reference sweep: 8 learning rates by 6 regularization strengths.
pub fn sweep_learning_rates() -> Vec<f64> {
    vec![5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5]
}

pub fn sweep_regs() -> Vec<f64> {
    vec![5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Strictly decreasing, as printed in the report.
    pub learning_rates: Vec<f64>,
    /// Strictly decreasing, as printed in the report.
    pub regs: Vec<f64>,
    /// Template for every cell; lr, l2, and seed are overridden per cell.
    pub base: TrainConfig,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("learning_rates", &self.learning_rates), ("regs", &self.regs)] {
            if list.is_empty() {
                return Err(Error::validation(format!("{name} must be non-empty")));
            }
            if list.windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::validation(format!("{name} must be strictly decreasing")));
            }
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub lr: f64,
    pub reg: f64,
    /// Best validation AUC per fold, or the error that killed the cell.
    pub outcome: std::result::Result<CellStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub learning_rates: Vec<f64>,
    pub regs: Vec<f64>,
    /// Row-major: cells[lr_idx * regs.len() + reg_idx].
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn cell(&self, lr_idx: usize, reg_idx: usize) -> &GridCell {
        &self.cells[lr_idx * self.regs.len() + reg_idx]
    }
}

/// Run every (lr, reg, fold) work unit and aggregate per cell.
///
/// Each unit derives its seed from (base seed, lr index, reg index,
/// fold), so concurrent and sequential schedules produce identical
/// reports. A failing cell records its error without aborting the rest.
pub fn run_grid(spec: &GridSpec, plan: &SplitPlan, bags: &[FeatureBag]) -> Result<GridReport> {
    spec.validate()?;
    let n_lr = spec.learning_rates.len();
    let n_reg = spec.regs.len();
    let k = plan.k;

    let units: Vec<(usize, usize, usize)> = (0..n_lr)
        .flat_map(|li| (0..n_reg).flat_map(move |ri| (0..k).map(move |f| (li, ri, f))))
        .collect();

    let results: Vec<((usize, usize), std::result::Result<f64, String>)> = units
        .par_iter()
        .map(|&(li, ri, fold)| {
            let mut config = spec.base.clone();
            config.lr = spec.learning_rates[li];
            config.l2 = spec.regs[ri];
            config.seed = derive_seed(spec.base.seed, &[li as u64, ri as u64, fold as u64]);
            let outcome = materialize(plan, fold, bags)
                .and_then(|(train, val, _)| train_fold(&train, &val, &config))
                .map(|r| r.best_val_auc)
                .map_err(|e| e.to_string());
            ((li, ri), outcome)
        })
        .collect();

    let mut cells = Vec::with_capacity(n_lr * n_reg);
    for li in 0..n_lr {
        for ri in 0..n_reg {
            let mut per_fold = Vec::with_capacity(k);
            let mut error = None;
            for ((cli, cri), outcome) in &results {
                if (*cli, *cri) == (li, ri) {
                    match outcome {
                        Ok(v) => per_fold.push(*v),
                        Err(e) => error = Some(e.clone()),
                    }
                }
            }
            let outcome = match error {
                Some(e) => Err(e),
                None => {
                    let (mean, std) = mean_std(&per_fold);
                    Ok(CellStats { per_fold, mean, std })
                }
            };
            cells.push(GridCell { lr: spec.learning_rates[li], reg: spec.regs[ri], outcome });
        }
    }
    Ok(GridReport { learning_rates: spec.learning_rates.clone(), regs: spec.regs.clone(), cells })
}

/// Cell with the highest mean AUC; ties break toward lower lr, then
/// lower reg.
pub fn select_best(report: &GridReport) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for cell in &report.cells {
        let Ok(stats) = &cell.outcome else { continue };
        let better = match best {
            None => true,
            Some((best_lr, best_reg, best_mean)) => {
                stats.mean > best_mean
                    || (stats.mean == best_mean
                        && (cell.lr < best_lr || (cell.lr == best_lr && cell.reg < best_reg)))
            }
        };
        if better {
            best = Some((cell.lr, cell.reg, stats.mean));
        }
    }
    best.map(|(lr, reg, _)| (lr, reg))
        .ok_or_else(|| Error::Runtime("grid report has no successful cells".into()))
}

/// Machine-readable rows: lr,reg,fold,best_val_auc.
pub fn report_csv(report: &GridReport) -> String {
    let mut out = String::from("lr,reg,fold,best_val_auc\n");
    for cell in &report.cells {
        if let Ok(stats) = &cell.outcome {
            for (fold, v) in stats.per_fold.iter().enumerate() {
                out.push_str(&format!("{:e},{:e},{},{}\n", cell.lr, cell.reg, fold, v));
            }
        }
    }
    out
}

/// Aligned mean +/- std matrix, values scaled by 100 for readability.
pub fn report_text(report: &GridReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:>10}", "lr \\ reg"));
    for reg in &report.regs {
        out.push_str(&format!("{:>16}", format!("{reg:e}")));
    }
    out.push('\n');
    for (li, lr) in report.learning_rates.iter().enumerate() {
        out.push_str(&format!("{:>10}", format!("{lr:e}")));
        for ri in 0..report.regs.len() {
            let cell = report.cell(li, ri);
            let text = match &cell.outcome {
                Ok(s) => format!("{:.1}±{:.1}", 100.0 * s.mean, 100.0 * s.std),
                Err(_) => "err".to_string(),
            };
            out.push_str(&format!("{text:>16}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HeadKind;
    use crate::splits::stratified_kfold;
    use crate::synth::{generate, SynthConfig};

    fn small_setup() -> (Vec<FeatureBag>, SplitPlan, f64) {
        let mut config = SynthConfig::new(25, 4, 11);
        config.tiles_min = 10;
        config.tiles_max = 30;
        config.label_noise_sd = 0.02;
        let (bags, _) = generate(&config).unwrap();
        let patients: Vec<(String, String)> =
            bags.iter().map(|b| (b.patient_id.clone(), b.stratum.clone())).collect();
        let plan = stratified_kfold(&patients, 5, 0).unwrap();
        // median threshold keeps every tiny validation split two-class
        let mut labels: Vec<f64> = bags.iter().map(|b| b.label).collect();
        labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = labels[labels.len() / 2];
        (bags, plan, threshold)
    }

    fn base_config(threshold: f64) -> TrainConfig {
        let mut c = TrainConfig::new(HeadKind::Linear, 1e-2, 1e-4);
        c.epochs = 3;
        c.subsample = Some(500);
        c.binarize_threshold = threshold;
        c
    }

    #[test]
    fn degenerate_grid_equals_single_run() {
        let (bags, plan, threshold) = small_setup();
        let spec = GridSpec {
            learning_rates: vec![1e-2],
            regs: vec![1e-4],
            base: base_config(threshold),
        };
        let report = run_grid(&spec, &plan, &bags).unwrap();
        assert_eq!(report.cells.len(), 1);
        let stats = report.cells[0].outcome.as_ref().unwrap();
        assert_eq!(stats.per_fold.len(), 5);

        // cross-check one fold against a direct train_fold call
        let mut config = base_config(threshold);
        config.seed = derive_seed(0, &[0, 0, 2]);
        let (train, val, _) = materialize(&plan, 2, &bags).unwrap();
        let direct = train_fold(&train, &val, &config).unwrap();
        assert_eq!(direct.best_val_auc, stats.per_fold[2]);
    }

    #[test]
    fn report_is_rerun_invariant() {
        let (bags, plan, threshold) = small_setup();
        let spec = GridSpec {
            learning_rates: vec![1e-2, 1e-3],
            regs: vec![1e-3, 1e-5],
            base: base_config(threshold),
        };
        let a = run_grid(&spec, &plan, &bags).unwrap();
        let b = run_grid(&spec, &plan, &bags).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 4);
    }

    #[test]
    fn select_best_tie_rules() {
        let mk = |lr: f64, reg: f64, mean: f64| GridCell {
            lr,
            reg,
            outcome: Ok(CellStats { per_fold: vec![mean], mean, std: 0.0 }),
        };
        let report = GridReport {
            learning_rates: vec![1e-2, 5e-3],
            regs: vec![1e-3, 1e-4],
            cells: vec![
                mk(1e-2, 1e-3, 0.9),
                mk(1e-2, 1e-4, 0.8),
                mk(5e-3, 1e-3, 0.9),
                mk(5e-3, 1e-4, 0.7),
            ],
        };
        // tied max 0.9 between (1e-2, 1e-3) and (5e-3, 1e-3): lower lr wins
        assert_eq!(select_best(&report).unwrap(), (5e-3, 1e-3));

        let all_equal = GridReport {
            learning_rates: vec![1e-2, 5e-3],
            regs: vec![1e-3, 1e-4],
            cells: vec![
                mk(1e-2, 1e-3, 0.5),
                mk(1e-2, 1e-4, 0.5),
                mk(5e-3, 1e-3, 0.5),
                mk(5e-3, 1e-4, 0.5),
            ],
        };
        assert_eq!(select_best(&all_equal).unwrap(), (5e-3, 1e-4));
    }

    #[test]
    fn sweep_grid_shape() {
        assert_eq!(sweep_learning_rates().len() * sweep_regs().len(), 48);
        assert!(sweep_learning_rates().windows(2).all(|w| w[0] > w[1]));
        assert!(sweep_regs().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn csv_and_text_render() {
        let (bags, plan, threshold) = small_setup();
        let spec = GridSpec {
            learning_rates: vec![1e-2],
            regs: vec![1e-4],
            base: base_config(threshold),
        };
        let report = run_grid(&spec, &plan, &bags).unwrap();
        let csv = report_csv(&report);
        assert!(csv.starts_with("lr,reg,fold,best_val_auc\n"));
        assert_eq!(csv.lines().count(), 6);
        let text = report_text(&report);
        assert!(text.contains("1e-4"));
        assert!(text.contains('±'));
    }
}
