//! Serialization: bag files, model checkpoints, label manifests,
//! detection summaries, split plans, and prediction reports.
//!
//! Binary formats are little-endian and byte-exact: writing the same
//! value twice yields identical files. Features are stored as f32 on
//! disk and widened to f64 in memory. Readers never panic on malformed
//! input; every failure carries a byte offset or a row number.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bag::{validate_bag, FeatureBag, TileFeature, TileGeometry};
use crate::baseline::DetectionSummary;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::model::{HeadKind, ModelHead};
use crate::splits::{FoldAssignment, Role, SplitPlan};

const BAG_MAGIC: &[u8; 4] = b"WKSB";
const CHECKPOINT_MAGIC: &[u8; 4] = b"WKSM";
const FORMAT_VERSION: u32 = 1;

/// Write bytes via a temp file and rename, so readers never observe a
/// partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// --- bag files ------------------------------------------------------------

pub fn encode_bag(bag: &FeatureBag) -> Result<Vec<u8>> {
    validate_bag(bag)?;
    let mut out = Vec::with_capacity(16 + bag.tiles.len() * (8 + 4 * bag.h_dim));
    out.extend_from_slice(BAG_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(bag.h_dim as u32).to_le_bytes());
    out.extend_from_slice(&(bag.tiles.len() as u32).to_le_bytes());
    for tile in &bag.tiles {
        out.extend_from_slice(&tile.col.to_le_bytes());
        out.extend_from_slice(&tile.row.to_le_bytes());
        for &f in &tile.features {
            let q = f as f32;
            if !q.is_finite() {
                return Err(Error::validation(format!(
                    "slide {}: feature {} not representable as finite f32",
                    bag.slide_id, f
                )));
            }
            out.extend_from_slice(&q.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_bag(bag: &FeatureBag, path: &Path) -> Result<()> {
    atomic_write(path, &encode_bag(bag)?)
}

fn take_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset
        .checked_add(4)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::format("unexpected end of file", offset as u64))?;
    Ok(u32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Decode tile data; identity metadata comes from the manifest, so the
/// returned bag carries empty ids and a zero label.
pub fn decode_bag(bytes: &[u8]) -> Result<FeatureBag> {
    if bytes.len() < 4 || &bytes[..4] != BAG_MAGIC {
        return Err(Error::format("bad magic", 0));
    }
    let version = take_u32(bytes, 4)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported version {version}"), 4));
    }
    let h_dim = take_u32(bytes, 8)? as usize;
    let n_tiles = take_u32(bytes, 12)? as usize;
    if h_dim == 0 {
        return Err(Error::format("h_dim must be >= 1", 8));
    }
    if n_tiles == 0 {
        return Err(Error::format("bag has no tiles", 12));
    }
    let record_size = 8usize
        .checked_add(h_dim.checked_mul(4).ok_or_else(|| Error::format("h_dim overflow", 8))?)
        .ok_or_else(|| Error::format("record size overflow", 8))?;
    let expected = (record_size as u64)
        .checked_mul(n_tiles as u64)
        .and_then(|b| b.checked_add(16))
        .ok_or_else(|| Error::format("file size overflow", 12))?;
    if (bytes.len() as u64) < expected {
        let complete = (bytes.len() as u64 - 16) / record_size as u64;
        return Err(Error::format(
            format!("truncated at record {complete}"),
            16 + complete * record_size as u64,
        ));
    }
    if bytes.len() as u64 > expected {
        return Err(Error::format("trailing bytes", expected));
    }
    let mut tiles = Vec::with_capacity(n_tiles);
    let mut offset = 16;
    for _ in 0..n_tiles {
        let col = take_u32(bytes, offset)?;
        let row = take_u32(bytes, offset + 4)?;
        let mut features = Vec::with_capacity(h_dim);
        for j in 0..h_dim {
            let at = offset + 8 + 4 * j;
            let raw = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
            let f = f32::from_bits(raw);
            if !f.is_finite() {
                return Err(Error::format("non-finite feature", at as u64));
            }
            features.push(f as f64);
        }
        tiles.push(TileFeature { col, row, features });
        offset += record_size;
    }
    Ok(FeatureBag {
        patient_id: String::new(),
        slide_id: String::new(),
        h_dim,
        tiles,
        label: 0.0,
        stratum: String::new(),
    })
}

pub fn read_bag(path: &Path) -> Result<FeatureBag> {
    let bytes = fs::read(path)?;
    decode_bag(&bytes)
}

// --- checkpoints ----------------------------------------------------------

pub fn encode_checkpoint(head: &ModelHead) -> Vec<u8> {
    let mut out = Vec::with_capacity(17 + 8 * head.params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(head.kind.as_u8());
    out.extend_from_slice(&(head.h_dim as u32).to_le_bytes());
    out.extend_from_slice(&(head.hidden as u32).to_le_bytes());
    for &p in &head.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn write_checkpoint(head: &ModelHead, path: &Path) -> Result<()> {
    atomic_write(path, &encode_checkpoint(head))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelHead> {
    if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format("bad magic", 0));
    }
    let version = take_u32(bytes, 4)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported version {version}"), 4));
    }
    let kind_byte = *bytes.get(8).ok_or_else(|| Error::format("unexpected end of file", 8))?;
    let kind = HeadKind::from_u8(kind_byte)
        .ok_or_else(|| Error::format(format!("unknown head kind {kind_byte}"), 8))?;
    let h_dim = take_u32(bytes, 9)? as usize;
    let hidden = take_u32(bytes, 13)? as usize;
    if h_dim == 0 {
        return Err(Error::format("h_dim must be >= 1", 9));
    }
    match kind {
        HeadKind::Linear if hidden != 0 => {
            return Err(Error::format("linear head must have hidden=0", 13))
        }
        HeadKind::TwoLinear | HeadKind::TwoLinearTanh if hidden == 0 => {
            return Err(Error::format("two-layer head must have hidden>=1", 13))
        }
        _ => {}
    }
    let num_params = ModelHead::num_params(kind, h_dim, hidden);
    let expected = (num_params as u64)
        .checked_mul(8)
        .and_then(|b| b.checked_add(17))
        .ok_or_else(|| Error::format("file size overflow", 9))?;
    if bytes.len() as u64 != expected {
        return Err(Error::format(
            format!("wrong length {} (expected {expected})", bytes.len()),
            17,
        ));
    }
    let mut params = Vec::with_capacity(num_params);
    for i in 0..num_params {
        let at = 17 + 8 * i;
        let raw = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let p = f64::from_bits(raw);
        if !p.is_finite() {
            return Err(Error::format("non-finite parameter", at as u64));
        }
        params.push(p);
    }
    Ok(ModelHead { kind, h_dim, hidden, params })
}

pub fn read_checkpoint(path: &Path) -> Result<ModelHead> {
    let bytes = fs::read(path)?;
    decode_checkpoint(&bytes)
}

// --- label manifest -------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub patient_id: String,
    pub slide_id: String,
    pub stil_fraction: f64,
    pub stratum: String,
}

pub fn manifest_csv(rows: &[ManifestRow]) -> String {
    let mut out = String::from("patient_id,slide_id,stil_fraction,stratum\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.patient_id, r.slide_id, r.stil_fraction, r.stratum
        ));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "patient_id,slide_id,stil_fraction,stratum" {
        return Err(Error::validation(format!("manifest: unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut seen_slides = BTreeSet::new();
    for (i, line) in lines.enumerate() {
        let row_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            errors.push(format!("row {row_no}: expected 4 fields, got {}", fields.len()));
            continue;
        }
        let stil: f64 = match fields[2].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                errors.push(format!("row {row_no}: unparseable stil_fraction '{}'", fields[2]));
                continue;
            }
        };
        if !(0.0..=1.0).contains(&stil) {
            errors.push(format!(
                "row {row_no}: label out of range (expected fraction, got {})",
                fields[2].trim()
            ));
            continue;
        }
        let slide_id = fields[1].trim().to_string();
        if !seen_slides.insert(slide_id.clone()) {
            errors.push(format!("row {row_no}: duplicate slide_id {slide_id}"));
            continue;
        }
        rows.push(ManifestRow {
            patient_id: fields[0].trim().to_string(),
            slide_id,
            stil_fraction: stil,
            stratum: fields[3].trim().to_string(),
        });
    }
    if !errors.is_empty() {
        return Err(Error::validation(format!("manifest rejected:\n  {}", errors.join("\n  "))));
    }
    if rows.is_empty() {
        return Err(Error::validation("manifest: no samples"));
    }
    Ok(rows)
}

pub fn bag_path(bag_dir: &Path, slide_id: &str) -> PathBuf {
    bag_dir.join(format!("{slide_id}.bag"))
}

/// Load every bag named by the manifest, joined with labels and strata.
/// Fails fast: any invalid sample rejects the whole load, listing all
/// failures.
pub fn load_dataset(manifest_path: &Path, bag_dir: &Path) -> Result<Vec<FeatureBag>> {
    let text = fs::read_to_string(manifest_path)?;
    let rows = parse_manifest(&text)?;
    let mut bags = Vec::with_capacity(rows.len());
    let mut errors = Vec::new();
    let mut h_dim = None;
    for row in &rows {
        let path = bag_path(bag_dir, &row.slide_id);
        let mut bag = match read_bag(&path) {
            Ok(b) => b,
            Err(e) => {
                errors.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        bag.patient_id = row.patient_id.clone();
        bag.slide_id = row.slide_id.clone();
        bag.label = row.stil_fraction;
        bag.stratum = row.stratum.clone();
        if let Err(e) = validate_bag(&bag) {
            errors.push(e.to_string());
            continue;
        }
        match h_dim {
            None => h_dim = Some(bag.h_dim),
            Some(h) if h != bag.h_dim => {
                errors.push(format!(
                    "slide {}: feature dimension {} differs from dataset dimension {h}",
                    bag.slide_id, bag.h_dim
                ));
                continue;
            }
            _ => {}
        }
        bags.push(bag);
    }
    if !errors.is_empty() {
        return Err(Error::validation(format!(
            "dataset rejected ({} failures):\n  {}",
            errors.len(),
            errors.join("\n  ")
        )));
    }
    Ok(bags)
}

// --- detections -----------------------------------------------------------

pub fn parse_detections(text: &str, geometry: TileGeometry) -> Result<Vec<DetectionSummary>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "slide_id,num_tils,num_tb_tiles" {
        return Err(Error::validation(format!("detections: unexpected header '{header}'")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::validation(format!(
                "detections row {row_no}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        let num_tils: u64 = fields[1].trim().parse().map_err(|_| {
            Error::validation(format!("detections row {row_no}: bad num_tils '{}'", fields[1]))
        })?;
        let num_tb_tiles: u64 = fields[2].trim().parse().map_err(|_| {
            Error::validation(format!("detections row {row_no}: bad num_tb_tiles '{}'", fields[2]))
        })?;
        let summary = DetectionSummary {
            slide_id: fields[0].trim().to_string(),
            num_tils,
            num_tb_tiles,
            geometry,
        };
        summary.validate()?;
        out.push(summary);
    }
    if out.is_empty() {
        return Err(Error::validation("detections: no samples"));
    }
    Ok(out)
}

// --- split plans ----------------------------------------------------------

pub fn split_plan_csv(plan: &SplitPlan) -> String {
    let mut header = String::from("patient_id");
    for i in 0..plan.k {
        header.push_str(&format!(",fold{i}"));
    }
    header.push('\n');
    let mut patients: Vec<&String> = plan.folds[0]
        .train
        .iter()
        .chain(&plan.folds[0].val)
        .chain(&plan.folds[0].test)
        .collect();
    patients.sort();
    let mut out = header;
    for pid in patients {
        out.push_str(pid);
        for fold in &plan.folds {
            let role = fold.role_of(pid).expect("plan covers all patients");
            out.push(',');
            out.push(role.letter());
        }
        out.push('\n');
    }
    out
}

pub fn parse_split_plan(text: &str) -> Result<SplitPlan> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "patient_id" {
        return Err(Error::validation(format!("split plan: unexpected header '{header}'")));
    }
    let k = cols.len() - 1;
    for (i, col) in cols[1..].iter().enumerate() {
        if *col != format!("fold{i}") {
            return Err(Error::validation(format!("split plan: unexpected column '{col}'")));
        }
    }
    let mut folds = vec![
        FoldAssignment {
            train: BTreeSet::new(),
            val: BTreeSet::new(),
            test: BTreeSet::new()
        };
        k
    ];
    let mut any = false;
    for (i, line) in lines.enumerate() {
        let row_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 1 {
            return Err(Error::validation(format!(
                "split plan row {row_no}: expected {} fields",
                k + 1
            )));
        }
        let pid = fields[0].trim();
        for (f, field) in fields[1..].iter().enumerate() {
            let c = field.trim().chars().next().unwrap_or(' ');
            let role = Role::from_letter(c).ok_or_else(|| {
                Error::validation(format!("split plan row {row_no}: unknown role '{field}'"))
            })?;
            let set = match role {
                Role::Train => &mut folds[f].train,
                Role::Val => &mut folds[f].val,
                Role::Test => &mut folds[f].test,
            };
            set.insert(pid.to_string());
        }
        any = true;
    }
    if !any {
        return Err(Error::validation("split plan: no patients"));
    }
    Ok(SplitPlan { k, folds })
}

// --- prediction reports ---------------------------------------------------

pub fn predictions_csv(report: &EvalReport) -> String {
    let mut out = String::from("slide_id,true_stil,pred_stil\n");
    for r in &report.records {
        out.push_str(&format!("{},{:.6},{:.6}\n", r.slide_id, r.true_label, r.predicted));
    }
    out
}

pub fn summary_csv(report: &EvalReport) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "na".to_string(), |x| x.to_string());
    format!(
        "metric,value\nauc,{}\npearson_r,{}\nr2,{}\nmse,{}\n",
        fmt(report.auc),
        fmt(report.pearson_r),
        fmt(report.r2),
        report.mse
    )
}
