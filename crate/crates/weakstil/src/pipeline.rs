//! Drivers tying the pieces together: full cross-validation runs, grid
//! searches with report files, and dataset export. All file outputs are
//! written atomically under a fixed naming scheme so runs are scriptable
//! and byte-reproducible.

use std::path::Path;

use rayon::prelude::*;

use crate::bag::FeatureBag;
use crate::error::{Error, Result};
use crate::grid::{report_csv, report_text, run_grid, GridReport, GridSpec};
use crate::io;
use crate::metrics::{evaluate, mean_std, sem, EvalReport};
use crate::model::ModelHead;
use crate::rng::derive_seed;
use crate::splits::{materialize, SplitPlan};
use crate::train::{format_epoch_log, train_fold, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub test_report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub folds: Vec<FoldOutcome>,
}

impl CvSummary {
    fn collect<F: Fn(&FoldOutcome) -> Option<f64>>(&self, f: F) -> Vec<f64> {
        self.folds.iter().filter_map(|o| f(o)).collect()
    }

    pub fn mean_test_auc(&self) -> Option<f64> {
        let xs = self.collect(|o| o.test_report.auc);
        (!xs.is_empty()).then(|| mean_std(&xs).0)
    }

    pub fn mean_test_r2(&self) -> Option<f64> {
        let xs = self.collect(|o| o.test_report.r2);
        (!xs.is_empty()).then(|| mean_std(&xs).0)
    }

    /// Cross-fold summary table: metric, mean, sample std (and SEM when
    /// requested), aggregated over the folds where the metric is defined.
    pub fn summary_csv(&self, include_sem: bool) -> String {
        let mut out = String::from(if include_sem {
            "metric,folds,mean,std,sem\n"
        } else {
            "metric,folds,mean,std\n"
        });
        let metrics: [(&str, Box<dyn Fn(&FoldOutcome) -> Option<f64>>); 5] = [
            ("auc", Box::new(|o: &FoldOutcome| o.test_report.auc)),
            ("pearson_r", Box::new(|o: &FoldOutcome| o.test_report.pearson_r)),
            ("r2", Box::new(|o: &FoldOutcome| o.test_report.r2)),
            ("mse", Box::new(|o: &FoldOutcome| Some(o.test_report.mse))),
            ("best_val_auc", Box::new(|o: &FoldOutcome| Some(o.best_val_auc))),
        ];
        for (name, get) in metrics {
            let xs = self.collect(&get);
            if xs.is_empty() {
                out.push_str(&format!("{name},0,na,na{}\n", if include_sem { ",na" } else { "" }));
                continue;
            }
            let (mean, std) = mean_std(&xs);
            if include_sem {
                out.push_str(&format!("{name},{},{mean},{std},{}\n", xs.len(), sem(&xs)));
            } else {
                out.push_str(&format!("{name},{},{mean},{std}\n", xs.len()));
            }
        }
        out
    }
}

/// Train one fold, write its artifacts under `out_dir`, and score the
/// best head on the test set.
pub fn run_fold(
    bags: &[FeatureBag],
    plan: &SplitPlan,
    fold: usize,
    config: &TrainConfig,
    out_dir: &Path,
) -> Result<FoldOutcome> {
    let (train, val, test) = materialize(plan, fold, bags)?;
    let result = train_fold(&train, &val, config)?;

    let mut log = String::new();
    for (i, stats) in result.history.iter().enumerate() {
        log.push_str(&format_epoch_log(i + 1, stats));
        log.push('\n');
    }
    io::atomic_write(&out_dir.join(format!("fold{fold}_train.log")), log.as_bytes())?;
    io::write_checkpoint(&result.best_head, &out_dir.join(format!("fold{fold}_checkpoint.bin")))?;

    let test_report = evaluate(&result.best_head, &test, config.binarize_threshold)?;
    io::atomic_write(
        &out_dir.join(format!("fold{fold}_predictions.csv")),
        io::predictions_csv(&test_report).as_bytes(),
    )?;
    io::atomic_write(
        &out_dir.join(format!("fold{fold}_summary.csv")),
        io::summary_csv(&test_report).as_bytes(),
    )?;

    Ok(FoldOutcome {
        fold,
        best_epoch: result.best_epoch,
        best_val_auc: result.best_val_auc,
        test_report,
    })
}

/// Run every fold of the plan (folds may execute concurrently; each
/// derives its own seed from the base seed) and write the cross-fold
/// summary.
pub fn run_cv(
    bags: &[FeatureBag],
    plan: &SplitPlan,
    base_config: &TrainConfig,
    out_dir: &Path,
    include_sem: bool,
) -> Result<CvSummary> {
    std::fs::create_dir_all(out_dir)?;
    let mut folds: Vec<FoldOutcome> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let mut config = base_config.clone();
            config.seed = derive_seed(base_config.seed, &[fold as u64]);
            run_fold(bags, plan, fold, &config, out_dir)
        })
        .collect::<Result<Vec<_>>>()?;
    folds.sort_by_key(|o| o.fold);
    let summary = CvSummary { folds };
    io::atomic_write(&out_dir.join("summary.csv"), summary.summary_csv(include_sem).as_bytes())?;
    Ok(summary)
}

/// Run a grid search and write `grid_report.csv` and `grid_report.txt`.
pub fn run_grid_to_dir(
    spec: &GridSpec,
    plan: &SplitPlan,
    bags: &[FeatureBag],
    out_dir: &Path,
) -> Result<GridReport> {
    std::fs::create_dir_all(out_dir)?;
    let report = run_grid(spec, plan, bags)?;
    io::atomic_write(&out_dir.join("grid_report.csv"), report_csv(&report).as_bytes())?;
    io::atomic_write(&out_dir.join("grid_report.txt"), report_text(&report).as_bytes())?;
    Ok(report)
}

/// Export bags and their label manifest in the standard layout:
/// `<dir>/manifest.csv` plus `<dir>/bags/<slide_id>.bag`.
pub fn write_dataset(bags: &[FeatureBag], dir: &Path) -> Result<()> {
    if bags.is_empty() {
        return Err(Error::validation("no bags to write"));
    }
    let bag_dir = dir.join("bags");
    std::fs::create_dir_all(&bag_dir)?;
    let rows: Vec<io::ManifestRow> = bags
        .iter()
        .map(|b| io::ManifestRow {
            patient_id: b.patient_id.clone(),
            slide_id: b.slide_id.clone(),
            stil_fraction: b.label,
            stratum: b.stratum.clone(),
        })
        .collect();
    io::atomic_write(&dir.join("manifest.csv"), io::manifest_csv(&rows).as_bytes())?;
    for bag in bags {
        io::write_bag(bag, &io::bag_path(&bag_dir, &bag.slide_id))?;
    }
    Ok(())
}

/// Score a checkpoint on a dataset and write the prediction and summary
/// files under `out_dir`.
pub fn run_eval(
    head: &ModelHead,
    bags: &[FeatureBag],
    threshold: f64,
    out_dir: &Path,
) -> Result<EvalReport> {
    std::fs::create_dir_all(out_dir)?;
    let refs: Vec<&FeatureBag> = bags.iter().collect();
    let report = evaluate(head, &refs, threshold)?;
    io::atomic_write(&out_dir.join("predictions.csv"), io::predictions_csv(&report).as_bytes())?;
    io::atomic_write(&out_dir.join("summary.csv"), io::summary_csv(&report).as_bytes())?;
    Ok(report)
}
