//! `split`: held-out test patients plus k cross-validation folds.

use std::collections::BTreeMap;

use pvol_core::manifest::{load_manifest, PatientRecord};
use pvol_core::stats::{holdout_test_selection, kfold_split};

use crate::args::SplitArgs;
use crate::error::{CliError, Status};
use crate::output::{create_dir, json_bytes, write};

pub const TEST_LABEL: &str = "test";

/// Patient id → `"test"` or `"fold_<i>"` with `i` in `0..folds`.
pub fn assign_splits(
    patients: &[PatientRecord],
    test_count: usize,
    folds: usize,
    seed: u64,
) -> Result<BTreeMap<String, String>, CliError> {
    let (test, train) = holdout_test_selection(patients, test_count, seed)?;
    let assignment = kfold_split(&train, folds, seed)?;
    let mut labels: BTreeMap<String, String> = test
        .into_iter()
        .map(|id| (id, TEST_LABEL.to_string()))
        .collect();
    labels.extend(
        assignment
            .assignment
            .into_iter()
            .map(|(id, f)| (id, format!("fold_{f}"))),
    );
    Ok(labels)
}

pub fn cmd_split(args: &SplitArgs) -> Result<Status, CliError> {
    let patients = load_manifest(&args.manifest)?;
    let labels = assign_splits(&patients, args.test_count, args.folds, args.seed)?;
    create_dir(&args.run.out_dir)?;
    write(&args.run.out_dir, "splits.json", &json_bytes(&labels))?;
    Ok(Status::Success)
}
