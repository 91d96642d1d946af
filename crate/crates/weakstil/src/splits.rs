//! Patient-level stratified 5-fold cross-validation with rotated test
//! sets: per fold, test = base fold i, val = base fold (i+1) mod k, and
//! train = the remaining k-2 base folds.

use std::collections::{BTreeMap, BTreeSet};

use crate::bag::FeatureBag;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Val,
    Test,
}

impl Role {
    /// Single-letter CSV encoding: T/V/E (E for the rotated-out test set).
    pub fn letter(self) -> char {
        match self {
            Role::Train => 'T',
            Role::Val => 'V',
            Role::Test => 'E',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'T' => Some(Role::Train),
            'V' => Some(Role::Val),
            'E' => Some(Role::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub train: BTreeSet<String>,
    pub val: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl FoldAssignment {
    pub fn role_of(&self, patient_id: &str) -> Option<Role> {
        if self.train.contains(patient_id) {
            Some(Role::Train)
        } else if self.val.contains(patient_id) {
            Some(Role::Val)
        } else if self.test.contains(patient_id) {
            Some(Role::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub k: usize,
    pub folds: Vec<FoldAssignment>,
}

/// Deal patients into k base folds, stratified and shuffled.
///
/// Strata are visited in sorted order; the round-robin cursor carries
/// over between strata so overall base-fold sizes differ by at most one
/// while each stratum stays balanced to within one patient per fold.
pub fn stratified_kfold(patients: &[(String, String)], k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 3 {
        return Err(Error::validation("k must be at least 3 (train/val/test need distinct folds)"));
    }
    if patients.len() < k {
        return Err(Error::validation(format!(
            "need at least {k} patients for {k}-fold splits, got {}",
            patients.len()
        )));
    }
    let mut seen = BTreeSet::new();
    let mut by_stratum: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (pid, stratum) in patients {
        if !seen.insert(pid.as_str()) {
            return Err(Error::validation(format!("duplicate patient id {pid}")));
        }
        by_stratum.entry(stratum.as_str()).or_default().push(pid.as_str());
    }

    let mut rng = Rng::from_seed(seed);
    let mut base_folds: Vec<Vec<&str>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for (_, mut members) in by_stratum {
        rng.shuffle(&mut members);
        for pid in members {
            base_folds[cursor % k].push(pid);
            cursor += 1;
        }
    }

    let folds = (0..k)
        .map(|i| {
            let test_idx = i;
            let val_idx = (i + 1) % k;
            let mut train = BTreeSet::new();
            let mut val = BTreeSet::new();
            let mut test = BTreeSet::new();
            for (j, fold) in base_folds.iter().enumerate() {
                let target = if j == test_idx {
                    &mut test
                } else if j == val_idx {
                    &mut val
                } else {
                    &mut train
                };
                for &pid in fold {
                    target.insert(pid.to_string());
                }
            }
            FoldAssignment { train, val, test }
        })
        .collect();

    Ok(SplitPlan { k, folds })
}

/// Route each bag to the role its patient holds in the given fold.
pub fn materialize<'a>(
    plan: &SplitPlan,
    fold_index: usize,
    bags: &'a [FeatureBag],
) -> Result<(Vec<&'a FeatureBag>, Vec<&'a FeatureBag>, Vec<&'a FeatureBag>)> {
    let fold = plan
        .folds
        .get(fold_index)
        .ok_or_else(|| Error::validation(format!("fold index {fold_index} out of range (k={})", plan.k)))?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for bag in bags {
        match fold.role_of(&bag.patient_id) {
            Some(Role::Train) => train.push(bag),
            Some(Role::Val) => val.push(bag),
            Some(Role::Test) => test.push(bag),
            None => {
                return Err(Error::validation(format!(
                    "patient {} not present in split plan",
                    bag.patient_id
                )))
            }
        }
    }
    for (name, set) in [("train", &train), ("val", &val), ("test", &test)] {
        if set.is_empty() {
            return Err(Error::validation(format!("empty split role: {name}")));
        }
    }
    Ok((train, val, test))
}
