//! Acceptance gate: nine oracle- and property-based criteria exercised
//! end to end. Each criterion prints one PASS/FAIL line (run with
//! `cargo test --test acceptance -- --nocapture` to see them); the test
//! fails if any criterion fails.
//!
//! Oracles here are deliberately independent of the library internals:
//! finite differences for gradients, exhaustive pair counting for AUC,
//! direct textbook formulas for r and R², and a closed form for the
//! detection baseline.

use std::collections::BTreeSet;
use std::path::Path;

use weakstil::bag::{FeatureBag, TileFeature};
use weakstil::baseline::{tb_til_percent, DetectionSummary};
use weakstil::grid::{sweep_learning_rates, sweep_regs, select_best, GridReport, GridSpec};
use weakstil::heatmap::{encode_ppm, render, HeatmapCanvas};
use weakstil::io::{decode_bag, decode_checkpoint, encode_bag, encode_checkpoint};
use weakstil::metrics::{auc, pearson_r, r_squared, ScorePairs, TilClass};
use weakstil::model::{backward, forward, loss, ulp_distance, HeadKind, ModelHead};
use weakstil::pipeline::{run_cv, run_grid_to_dir, CvSummary};
use weakstil::rng::Rng;
use weakstil::splits::{stratified_kfold, SplitPlan};
use weakstil::synth::{generate, SynthConfig};
use weakstil::train::TrainConfig;
use weakstil::bag::TileGeometry;

type CheckResult = Result<(), String>;

fn fail(msg: impl Into<String>) -> CheckResult {
    Err(msg.into())
}

fn random_bag(h_dim: usize, n_tiles: usize, rng: &mut Rng) -> FeatureBag {
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
        label: rng.next_f64(),
        stratum: "s".into(),
    }
}

// ---------------------------------------------------------------- 1

/// Analytic gradients vs central finite differences, step 1e-5,
/// relative tolerance 1e-4, over all head kinds, H in {4, 32, 512},
/// N in {1, 7, 500}.
fn criterion_1() -> CheckResult {
    const STEP: f64 = 1e-5;
    const REL_TOL: f64 = 1e-4;
    let mut rng = Rng::from_seed(0xACCE);
    let mut cases = 0usize;
    for kind in HeadKind::ALL {
        for h_dim in [4usize, 32, 512] {
            for n_tiles in [1usize, 7, 500] {
                for _ in 0..8 {
                    let mut head = ModelHead::init_with_hidden(kind, h_dim, 128, rng.next_u64());
                    for p in head.params.iter_mut() {
                        *p = 0.5 * rng.normal();
                    }
                    let bag = random_bag(h_dim, n_tiles, &mut rng);
                    let grads = backward(&head, &bag, bag.label).map_err(|e| e.to_string())?;
                    let num = head.params.len();
                    // probe every coordinate on small heads, a random
                    // subset on big ones to stay inside the time budget
                    let coords = if num <= 64 {
                        (0..num).collect::<Vec<_>>()
                    } else {
                        rng.sample_indices(num, 10)
                    };
                    for i in coords {
                        let orig = head.params[i];
                        head.params[i] = orig + STEP;
                        let lp = loss(&forward(&head, &bag).unwrap(), bag.label);
                        head.params[i] = orig - STEP;
                        let lm = loss(&forward(&head, &bag).unwrap(), bag.label);
                        head.params[i] = orig;
                        let fd = (lp - lm) / (2.0 * STEP);
                        let denom = grads[i].abs().max(fd.abs()).max(1e-6);
                        let rel = (grads[i] - fd).abs() / denom;
                        if rel > REL_TOL {
                            return fail(format!(
                                "{kind:?} H={h_dim} N={n_tiles} param {i}: \
                                 analytic {} vs fd {fd} (rel {rel:.2e})",
                                grads[i]
                            ));
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    if cases < 200 {
        return fail(format!("only {cases} gradient cases run"));
    }
    Ok(())
}

// ---------------------------------------------------------------- 2

/// Tie-aware exhaustive pair counting, independent of the ranking
/// implementation under test.
fn auc_oracle(predicted: &[f64], labels: &[TilClass]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in predicted.iter().enumerate() {
        for (j, &pj) in predicted.iter().enumerate() {
            if labels[i] == TilClass::High && labels[j] == TilClass::Low {
                pairs += 1.0;
                if pi > pj {
                    wins += 1.0;
                } else if pi == pj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn r2_oracle(truth: &[f64], pred: &[f64]) -> f64 {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_res: f64 = truth.iter().zip(pred).map(|(&t, &p)| (t - p) * (t - p)).sum();
    let ss_tot: f64 = truth.iter().map(|&t| (t - mean) * (t - mean)).sum();
    1.0 - ss_res / ss_tot
}

fn criterion_2() -> CheckResult {
    let mut rng = Rng::from_seed(0x3E7);
    let mut trials = 0usize;
    while trials < 1000 {
        let n = 2 + rng.gen_range(11) as usize; // 2..=12
        // quantized scores inject ties often
        let quantize = rng.next_f64() < 0.5;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let s = rng.next_f64();
                if quantize { (s * 4.0).floor() / 4.0 } else { s }
            })
            .collect();
        let labels: Vec<TilClass> = (0..n)
            .map(|_| if rng.next_f64() < 0.5 { TilClass::High } else { TilClass::Low })
            .collect();
        if labels.iter().any(|&l| l == TilClass::High)
            && labels.iter().any(|&l| l == TilClass::Low)
        {
            let got = auc(&scores, &labels).map_err(|e| e.to_string())?;
            let want = auc_oracle(&scores, &labels);
            if got != want {
                return fail(format!("auc {got} != oracle {want} on n={n}"));
            }
        }
        let truth: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let pred: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let pairs = ScorePairs::new(truth.clone(), pred.clone()).map_err(|e| e.to_string())?;
        if let Ok(r) = pearson_r(&pairs) {
            let want = pearson_oracle(&truth, &pred);
            if (r - want).abs() > 1e-12 {
                return fail(format!("pearson {r} vs oracle {want}"));
            }
        }
        let r2 = r_squared(&pairs).map_err(|e| e.to_string())?;
        let want = r2_oracle(&truth, &pred);
        if (r2 - want).abs() > 1e-12 {
            return fail(format!("r2 {r2} vs oracle {want}"));
        }
        trials += 1;
    }

    // analytic anchors
    let a = auc(&[0.1, 0.4, 0.35, 0.8], &[TilClass::Low, TilClass::Low, TilClass::High, TilClass::High])
        .unwrap();
    if a != 0.75 {
        return fail(format!("four-point auc anchor gave {a}, want 0.75"));
    }
    let p = ScorePairs::new(vec![0.1, 0.2, 0.3], vec![0.1, 0.2, 0.4]).unwrap();
    let r2 = r_squared(&p).unwrap();
    if (r2 - 0.5).abs() > 1e-12 {
        return fail(format!("three-point r2 anchor gave {r2}, want 0.5"));
    }
    let p = ScorePairs::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]).unwrap();
    let r = pearson_r(&p).unwrap();
    let want = 1.5 * (3.0f64 / 7.0).sqrt(); // 3 / sqrt(2 * 14/3)
    if (r - want).abs() > 1e-12 {
        return fail(format!("pearson anchor gave {r}, want {want}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> CheckResult {
    let mut rng = Rng::from_seed(0xBA5E);
    for _ in 0..10_000 {
        let num_tils = rng.gen_range(1_000_000);
        let num_tb_tiles = 1 + rng.gen_range(10_000);
        let summary = DetectionSummary {
            slide_id: "S".into(),
            num_tils,
            num_tb_tiles,
            geometry: TileGeometry::default(),
        };
        let got = tb_til_percent(&summary);
        let want = num_tils as f64 / num_tb_tiles as f64 * 16.0 * std::f64::consts::PI / 65536.0;
        let denom = want.abs().max(f64::MIN_POSITIVE);
        if (got - want).abs() / denom > 1e-15 {
            return fail(format!("tb_til_percent({num_tils}, {num_tb_tiles}) = {got}, want {want}"));
        }
    }
    let anchor = tb_til_percent(&DetectionSummary {
        slide_id: "S".into(),
        num_tils: 100,
        num_tb_tiles: 10,
        geometry: TileGeometry::default(),
    });
    if (anchor - 0.007670).abs() > 1e-6 {
        return fail(format!("(100, 10) anchor gave {anchor}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- 4

struct CvSetup {
    bags: Vec<FeatureBag>,
    plan: SplitPlan,
    config: TrainConfig,
}

fn median_label(bags: &[FeatureBag]) -> f64 {
    let mut labels: Vec<f64> = bags.iter().map(|b| b.label).collect();
    labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    labels[labels.len() / 2]
}

fn cv_setup() -> CvSetup {
    let mut synth = SynthConfig::new(200, 32, 0);
    synth.label_noise_sd = 0.02;
    let (bags, _) = generate(&synth).unwrap();
    let patients: Vec<(String, String)> =
        bags.iter().map(|b| (b.patient_id.clone(), b.stratum.clone())).collect();
    let plan = stratified_kfold(&patients, 5, 0).unwrap();
    let mut config = TrainConfig::new(HeadKind::Linear, 1e-2, 1e-4);
    config.binarize_threshold = median_label(&bags);
    CvSetup { bags, plan, config }
}

fn run_cv_once(setup: &CvSetup, dir: &Path) -> Result<CvSummary, String> {
    run_cv(&setup.bags, &setup.plan, &setup.config, dir, false).map_err(|e| e.to_string())
}

fn criterion_4(summary: &Result<CvSummary, String>) -> CheckResult {
    let summary = summary.as_ref().map_err(|e| e.clone())?;
    let r2 = summary.mean_test_r2().ok_or("mean test r2 undefined")?;
    let auc = summary.mean_test_auc().ok_or("mean test auc undefined")?;
    if r2 < 0.90 {
        return fail(format!("mean test r2 {r2:.4} < 0.90"));
    }
    if auc < 0.95 {
        return fail(format!("mean test auc {auc:.4} < 0.95"));
    }
    Ok(())
}

// ---------------------------------------------------------------- 5

struct GridSetup {
    bags: Vec<FeatureBag>,
    plan: SplitPlan,
    threshold: f64,
}

fn grid_setup() -> GridSetup {
    let mut synth = SynthConfig::new(50, 16, 0);
    synth.tiles_min = 40;
    synth.tiles_max = 80;
    synth.label_noise_sd = 0.02;
    let (bags, _) = generate(&synth).unwrap();
    let patients: Vec<(String, String)> =
        bags.iter().map(|b| (b.patient_id.clone(), b.stratum.clone())).collect();
    let plan = stratified_kfold(&patients, 5, 0).unwrap();
    let threshold = median_label(&bags);
    GridSetup { bags, plan, threshold }
}

fn run_grids_once(setup: &GridSetup, dir: &Path) -> Result<Vec<GridReport>, String> {
    HeadKind::ALL
        .iter()
        .map(|&kind| {
            let mut base = TrainConfig::new(kind, 1e-2, 1e-4);
            base.subsample = Some(500);
            base.binarize_threshold = setup.threshold;
            // short schedule: spreads the cells across lr sensitivity so
            // the AUCs don't saturate at 1.0 and hide the grid structure
            base.epochs = 10;
            let spec = GridSpec {
                learning_rates: sweep_learning_rates(),
                regs: sweep_regs(),
                base,
            };
            let sub = dir.join(format!("{kind:?}").to_lowercase());
            run_grid_to_dir(&spec, &setup.plan, &setup.bags, &sub).map_err(|e| e.to_string())
        })
        .collect()
}

fn criterion_5(reports: &Result<Vec<GridReport>, String>) -> CheckResult {
    let reports = reports.as_ref().map_err(|e| e.clone())?;
    if reports.len() != 3 {
        return fail(format!("{} grid reports, want 3", reports.len()));
    }
    let mut cell_means = Vec::new();
    for report in reports {
        if report.cells.len() != 48 {
            return fail(format!("grid emitted {} cells, want 48", report.cells.len()));
        }
        select_best(report).map_err(|e| e.to_string())?;
        for cell in &report.cells {
            match &cell.outcome {
                Ok(stats) => cell_means.push(stats.mean),
                Err(e) => {
                    return fail(format!("cell lr={} reg={} failed: {e}", cell.lr, cell.reg))
                }
            }
        }
    }
    let n = cell_means.len() as f64;
    let mean = cell_means.iter().sum::<f64>() / n;
    let var = cell_means.iter().map(|&m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0);
    let best = cell_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best < mean + var.sqrt() {
        return fail(format!(
            "best cell auc {best:.4} below grid mean {mean:.4} + std {:.4}",
            var.sqrt()
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------- 6

fn check_plan(plan: &SplitPlan, patients: &[(String, String)]) -> CheckResult {
    let all: BTreeSet<&String> = patients.iter().map(|(p, _)| p).collect();
    let mut tested: BTreeSet<&String> = BTreeSet::new();
    for fold in &plan.folds {
        // disjointness and coverage within the fold
        let mut seen = BTreeSet::new();
        for set in [&fold.train, &fold.val, &fold.test] {
            for p in set {
                if !seen.insert(p) {
                    return fail(format!("patient {p} in two roles"));
                }
            }
        }
        if seen.len() != all.len() {
            return fail(format!("fold covers {} of {} patients", seen.len(), all.len()));
        }
        for p in &fold.test {
            if !tested.insert(p) {
                return fail(format!("patient {p} tested in two folds"));
            }
        }
    }
    if tested.len() != all.len() {
        return fail("rotation does not cover all patients".to_string());
    }
    // per-stratum balance of the base folds (the rotated test sets)
    let strata: BTreeSet<&String> = patients.iter().map(|(_, s)| s).collect();
    for stratum in strata {
        let counts: Vec<usize> = plan
            .folds
            .iter()
            .map(|f| {
                patients
                    .iter()
                    .filter(|(p, s)| s == stratum && f.test.contains(p))
                    .count()
            })
            .collect();
        let lo = counts.iter().min().unwrap();
        let hi = counts.iter().max().unwrap();
        if hi - lo > 1 {
            return fail(format!("stratum {stratum} fold counts {counts:?} spread > 1"));
        }
    }
    let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
    if sizes.iter().max().unwrap() - sizes.iter().min().unwrap() > 1 {
        return fail(format!("base fold sizes {sizes:?} spread > 1"));
    }
    Ok(())
}

fn criterion_6() -> CheckResult {
    for p_count in [5usize, 10, 13, 286] {
        for n_strata in 1..=5usize {
            if p_count < 5 * n_strata {
                // a stratum thinner than k still has to satisfy the
                // invariants; keep such cases in the sweep
            }
            let patients: Vec<(String, String)> = (0..p_count)
                .map(|i| (format!("P{i:04}"), format!("g{}", i % n_strata)))
                .collect();
            let plan = stratified_kfold(&patients, 5, p_count as u64 ^ n_strata as u64)
                .map_err(|e| e.to_string())?;
            check_plan(&plan, &patients)
                .map_err(|e| format!("P={p_count} strata={n_strata}: {e}"))?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 7

fn read_dir_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).map_err(|e| e.to_string())?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn criterion_7(
    cv_setup: &CvSetup,
    cv_dir: &Path,
    grid_setup: &GridSetup,
    grid_dir: &Path,
) -> CheckResult {
    let rerun_cv = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_cv_once(cv_setup, rerun_cv.path())?;
    let rerun_grid = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_grids_once(grid_setup, rerun_grid.path())?;

    for (first, second, what) in
        [(cv_dir, rerun_cv.path(), "cv"), (grid_dir, rerun_grid.path(), "grid")]
    {
        let a = read_dir_files(first)?;
        let b = read_dir_files(second)?;
        if a.len() != b.len() {
            return fail(format!("{what}: {} files vs {}", a.len(), b.len()));
        }
        for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
            if name_a != name_b {
                return fail(format!("{what}: file set differs ({name_a} vs {name_b})"));
            }
            if bytes_a != bytes_b {
                return fail(format!("{what}: {name_a} differs between reruns"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> CheckResult {
    let mut rng = Rng::from_seed(0xF0F0);

    // bag round-trip (features rounded through f32 on disk, so feed
    // f32-representable values)
    let mut bag = random_bag(6, 40, &mut rng);
    for tile in bag.tiles.iter_mut() {
        for f in tile.features.iter_mut() {
            *f = *f as f32 as f64;
        }
    }
    let back = decode_bag(&encode_bag(&bag).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    // the bag file carries only tile data; identity and label ride in
    // the manifest, so exactness is judged on h_dim and tiles
    if back.h_dim != bag.h_dim || back.tiles != bag.tiles {
        return fail("bag round-trip not exact");
    }

    // checkpoint round-trip, all kinds
    for kind in HeadKind::ALL {
        let mut head = ModelHead::init_with_hidden(kind, 8, 16, 3);
        for p in head.params.iter_mut() {
            *p = rng.normal();
        }
        let back = decode_checkpoint(&encode_checkpoint(&head)).map_err(|e| e.to_string())?;
        if back != head {
            return fail(format!("{kind:?} checkpoint round-trip not exact"));
        }
    }

    // PPM golden bytes
    let white = HeatmapCanvas { width: 1, height: 1, scale: 1, pixels: vec![255, 255, 255] };
    if encode_ppm(&white) != b"P6\n1 1\n255\n\xff\xff\xff" {
        return fail("1x1 white ppm bytes differ from golden");
    }
    let strip = FeatureBag {
        patient_id: "P".into(),
        slide_id: "S".into(),
        h_dim: 1,
        tiles: vec![
            TileFeature { col: 0, row: 0, features: vec![0.0] },
            TileFeature { col: 1, row: 0, features: vec![0.0] },
        ],
        label: 0.1,
        stratum: "s".into(),
    };
    let canvas = render(&strip, &[0.0, 1.0], 1).map_err(|e| e.to_string())?;
    let mut golden = b"P6\n2 1\n255\n".to_vec();
    golden.extend_from_slice(&[0, 0, 255, 255, 0, 0]);
    if encode_ppm(&canvas) != golden {
        return fail("2x1 ppm bytes differ from golden");
    }

    // fuzz corpus: random byte files must never crash the readers
    for i in 0..10_000u32 {
        let len = rng.gen_range(300) as usize;
        let mut bytes: Vec<u8> = (0..len).map(|_| rng.next_u64() as u8).collect();
        // bias some inputs toward valid magic so parsing goes deep
        match i % 4 {
            1 if bytes.len() >= 4 => bytes[..4].copy_from_slice(b"WKSB"),
            2 if bytes.len() >= 4 => bytes[..4].copy_from_slice(b"WKSM"),
            3 => {
                let valid = encode_checkpoint(&ModelHead::init(HeadKind::Linear, 2, 0));
                let cut = rng.gen_range(valid.len() as u64 + 1) as usize;
                bytes = valid[..cut].to_vec();
                if !bytes.is_empty() {
                    let at = rng.gen_range(bytes.len() as u64) as usize;
                    bytes[at] ^= rng.next_u64() as u8;
                }
            }
            _ => {}
        }
        let _ = decode_bag(&bytes);
        let _ = decode_checkpoint(&bytes);
    }
    Ok(())
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> CheckResult {
    let mut rng = Rng::from_seed(0x9999);
    for case in 0..500 {
        let kind = HeadKind::ALL[case % 3];
        let h_dim = 2 + rng.gen_range(14) as usize;
        let mut head = ModelHead::init_with_hidden(kind, h_dim, 8, rng.next_u64());
        for p in head.params.iter_mut() {
            *p = rng.normal();
        }
        let bag = random_bag(h_dim, 1 + rng.gen_range(200) as usize, &mut rng);
        let base = forward(&head, &bag).map_err(|e| e.to_string())?.bag_score;

        let mut permuted = bag.clone();
        rng.shuffle(&mut permuted.tiles);
        let p_score = forward(&head, &permuted).unwrap().bag_score;
        if ulp_distance(base, p_score) > 8 {
            return fail(format!(
                "permutation moved bag score by {} ulps (case {case})",
                ulp_distance(base, p_score)
            ));
        }

        let mut doubled = bag.clone();
        doubled.tiles.extend(bag.tiles.iter().cloned());
        let d_score = forward(&head, &doubled).unwrap().bag_score;
        if ulp_distance(base, d_score) > 8 {
            return fail(format!(
                "duplication moved bag score by {} ulps (case {case})",
                ulp_distance(base, d_score)
            ));
        }
    }

    // TwoLinear with an identity-like first layer collapses to Linear
    for _ in 0..50 {
        let h_dim = 2 + rng.gen_range(10) as usize;
        let hidden = 4;
        let w: Vec<f64> = (0..h_dim).map(|_| rng.normal()).collect();
        let b = rng.normal();
        let linear = ModelHead {
            kind: HeadKind::Linear,
            h_dim,
            hidden: 0,
            params: w.iter().cloned().chain([b]).collect(),
        };
        // W1 row j = w for j == 0 else zeros; b1 = (b, 0, ...);
        // w2 = e_0; b2 = 0. Logit is exactly w·h + b.
        let mut params = vec![0.0; ModelHead::num_params(HeadKind::TwoLinear, h_dim, hidden)];
        for (i, &wi) in w.iter().enumerate() {
            params[i * hidden] = wi;
        }
        params[h_dim * hidden] = b; // b1[0]
        params[h_dim * hidden + hidden] = 1.0; // w2[0]
        let collapsed = ModelHead { kind: HeadKind::TwoLinear, h_dim, hidden, params };

        let bag = random_bag(h_dim, 1 + rng.gen_range(50) as usize, &mut rng);
        let a = forward(&linear, &bag).unwrap().bag_score;
        let c = forward(&collapsed, &bag).unwrap().bag_score;
        if (a - c).abs() > 1e-12 {
            return fail(format!("collapse mismatch: linear {a} vs two-linear {c}"));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------

#[test]
fn acceptance() {
    let cv_setup = cv_setup();
    let cv_dir = tempfile::tempdir().unwrap();
    let cv_summary = run_cv_once(&cv_setup, cv_dir.path());

    let grid_setup = grid_setup();
    let grid_dir = tempfile::tempdir().unwrap();
    let grid_reports = run_grids_once(&grid_setup, grid_dir.path());

    let results: Vec<(usize, CheckResult)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4(&cv_summary)),
        (5, criterion_5(&grid_reports)),
        (6, criterion_6()),
        (7, criterion_7(&cv_setup, cv_dir.path(), &grid_setup, grid_dir.path())),
        (8, criterion_8()),
        (9, criterion_9()),
    ];

    let mut failed = false;
    for (id, result) in &results {
        match result {
            Ok(()) => println!("criterion {id}: PASS"),
            Err(msg) => {
                failed = true;
                println!("criterion {id}: FAIL — {msg}");
            }
        }
    }
    assert!(!failed, "acceptance criteria failed: see lines above");
}
