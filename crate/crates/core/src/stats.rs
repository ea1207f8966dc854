//! Cohort agreement statistics and patient-level dataset partitioning.
//!
//! Volume differences are always `reference − predicted`: a positive bias
//! means the pipeline underestimates the reference volume.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::PatientRecord;
use crate::model::Sweep;
use crate::seed::seeded_rng;

/// Two-sided 95% normal quantile used for the limits of agreement.
pub const LOA_Z: f64 = 1.96;

/// Every fifth frame goes into a training set.
pub const TRAINING_FRAME_STRIDE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumePair {
    pub patient_id: String,
    pub predicted_ml: f64,
    pub reference_ml: f64,
}

impl VolumePair {
    pub fn new(patient_id: impl Into<String>, predicted_ml: f64, reference_ml: f64) -> Self {
        Self {
            patient_id: patient_id.into(),
            predicted_ml,
            reference_ml,
        }
    }

    /// `reference − predicted`.
    pub fn difference_ml(&self) -> f64 {
        self.reference_ml - self.predicted_ml
    }

    pub fn mean_ml(&self) -> f64 {
        (self.reference_ml + self.predicted_ml) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub pairs: Vec<VolumePair>,
    pub bias_ml: f64,
    pub sd_ml: f64,
    pub loa_low_ml: f64,
    pub loa_high_ml: f64,
    /// Per pair, same order as `pairs`.
    pub relative_errors: Vec<f64>,
    /// Empirical 2.5th / 97.5th percentiles of the differences.
    pub difference_p2_5_ml: f64,
    pub difference_p97_5_ml: f64,
    pub relative_error_median: f64,
    pub relative_error_p2_5: f64,
    pub relative_error_p97_5: f64,
    pub abs_relative_error_median: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("{name} volume must be > 0, got {v}")));
    }
    Ok(())
}

/// `(reference − predicted) / mean(reference, predicted)`.
pub fn relative_error(predicted_ml: f64, reference_ml: f64) -> Result<f64> {
    check_positive("predicted", predicted_ml)?;
    check_positive("reference", reference_ml)?;
    Ok((reference_ml - predicted_ml) / ((reference_ml + predicted_ml) / 2.0))
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_percentile(&v, q)
}

fn sorted_percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 100.0) / 100.0 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Bland-Altman bias, sample standard deviation (n − 1) and 1.96·sd limits,
/// plus the relative error of every pair.
pub fn bland_altman(pairs: &[VolumePair]) -> Result<AgreementReport> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pairs.len(),
        });
    }
    for p in pairs {
        check_positive("predicted", p.predicted_ml)?;
        check_positive("reference", p.reference_ml)?;
    }
    // Sorted differences make the summaries independent of input order.
    let mut diffs: Vec<f64> = pairs.iter().map(VolumePair::difference_ml).collect();
    diffs.sort_by(f64::total_cmp);
    let n = diffs.len() as f64;
    let bias = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();

    let relative_errors = pairs
        .iter()
        .map(|p| relative_error(p.predicted_ml, p.reference_ml))
        .collect::<Result<Vec<_>>>()?;
    let mut rel_sorted = relative_errors.clone();
    rel_sorted.sort_by(f64::total_cmp);
    let mut abs_sorted: Vec<f64> = relative_errors.iter().map(|r| r.abs()).collect();
    abs_sorted.sort_by(f64::total_cmp);

    Ok(AgreementReport {
        pairs: pairs.to_vec(),
        bias_ml: bias,
        sd_ml: sd,
        loa_low_ml: bias - LOA_Z * sd,
        loa_high_ml: bias + LOA_Z * sd,
        relative_errors,
        difference_p2_5_ml: sorted_percentile(&diffs, 2.5),
        difference_p97_5_ml: sorted_percentile(&diffs, 97.5),
        relative_error_median: sorted_percentile(&rel_sorted, 50.0),
        relative_error_p2_5: sorted_percentile(&rel_sorted, 2.5),
        relative_error_p97_5: sorted_percentile(&rel_sorted, 97.5),
        abs_relative_error_median: sorted_percentile(&abs_sorted, 50.0),
    })
}

/// Patient → fold assignment for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_count: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    /// Patient ids of every fold, each sorted.
    pub fn folds(&self) -> Vec<Vec<String>> {
        let mut folds = vec![Vec::new(); self.fold_count];
        for (id, &f) in &self.assignment {
            folds[f].push(id.clone());
        }
        folds
    }
}

fn sorted_unique(ids: &[String]) -> Result<Vec<String>> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.clone()) {
            return Err(Error::Input(format!("duplicate patient id {id:?}")));
        }
    }
    Ok(seen.into_iter().collect())
}

const KFOLD_STREAM: u64 = 1;
const HOLDOUT_STREAM: u64 = 2;

/// Sorts the ids, shuffles them with `seed` and deals them round-robin into `k` folds.
pub fn kfold_split(patient_ids: &[String], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Input(format!("k must be at least 2, got {k}")));
    }
    let mut ids = sorted_unique(patient_ids)?;
    if ids.len() < k {
        return Err(Error::Input(format!(
            "{k} folds need at least {k} patients, got {}",
            ids.len()
        )));
    }
    ids.shuffle(&mut seeded_rng(seed, KFOLD_STREAM));
    let assignment = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i % k))
        .collect();
    Ok(FoldAssignment {
        fold_count: k,
        assignment,
    })
}

/// Frame indices 0, 5, 10, … of a sweep.
pub fn sample_training_frames(sweep: &Sweep) -> Vec<usize> {
    (0..sweep.len()).step_by(TRAINING_FRAME_STRIDE).collect()
}

/// Draws `n` test patients among those with both an axial and a sagittal
/// prediction sweep. Returns `(test ids, train ids)`, both sorted.
pub fn holdout_test_selection(
    patients: &[PatientRecord],
    n: usize,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    let all = sorted_unique(
        &patients
            .iter()
            .map(|p| p.patient_id.clone())
            .collect::<Vec<_>>(),
    )?;
    let mut dual: Vec<String> = patients
        .iter()
        .filter(|p| p.is_dual_plane())
        .map(|p| p.patient_id.clone())
        .collect();
    dual.sort();
    if dual.len() < n {
        return Err(Error::Input(format!(
            "need {n} patients with both planes for the test set, only {} available",
            dual.len()
        )));
    }
    dual.shuffle(&mut seeded_rng(seed, HOLDOUT_STREAM));
    let test: BTreeSet<String> = dual.into_iter().take(n).collect();
    let train = all.into_iter().filter(|id| !test.contains(id)).collect();
    Ok((test.into_iter().collect(), train))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FrameMask, PixelSpacing, PlaneKind, SweepSource};
    use proptest::prelude::*;

    fn pairs(pred: &[f64], reference: &[f64]) -> Vec<VolumePair> {
        pred.iter()
            .zip(reference)
            .enumerate()
            .map(|(i, (&p, &r))| VolumePair::new(format!("P{i}"), p, r))
            .collect()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("P{i:02}")).collect()
    }

    #[test]
    fn hand_computed_bland_altman() {
        let r = bland_altman(&pairs(&[50.0, 60.0, 70.0], &[52.0, 58.0, 74.0])).unwrap();
        assert!((r.bias_ml - 1.333).abs() < 1e-3);
        assert!((r.sd_ml - 3.055).abs() < 1e-3);
        assert!((r.loa_low_ml + 4.655).abs() < 1e-3);
        assert!((r.loa_high_ml - 7.321).abs() < 1e-3);
    }

    #[test]
    fn identical_volumes_give_zero_agreement() {
        let r = bland_altman(&pairs(&[40.0, 55.0, 70.0], &[40.0, 55.0, 70.0])).unwrap();
        assert_eq!(
            (r.bias_ml, r.sd_ml, r.loa_low_ml, r.loa_high_ml),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!(r.relative_errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn bland_altman_preconditions() {
        assert!(matches!(
            bland_altman(&pairs(&[50.0], &[52.0])),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
        assert!(matches!(
            bland_altman(&pairs(&[50.0, 0.0], &[52.0, 3.0])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn relative_error_examples() {
        assert!((relative_error(45.0, 55.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((relative_error(55.0, 45.0).unwrap() + 0.2).abs() < 1e-15);
        assert_eq!(relative_error(30.0, 30.0).unwrap(), 0.0);
        assert!(relative_error(-1.0, 30.0).is_err());
        assert!(relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 50.0), 2.5);
        assert!((percentile(&v, 2.5) - 1.075).abs() < 1e-12);
    }

    #[test]
    fn kfold_sizes() {
        let a = kfold_split(&ids(8), 4, 3).unwrap();
        assert!(a.folds().iter().all(|f| f.len() == 2));
        let a = kfold_split(&ids(10), 4, 3).unwrap();
        let mut sizes: Vec<_> = a.folds().iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|x, y| y.cmp(x));
        assert_eq!(sizes, vec![3, 3, 2, 2]);
    }

    #[test]
    fn kfold_ignores_input_order() {
        let mut shuffled = ids(13);
        shuffled.reverse();
        shuffled.swap(2, 7);
        assert_eq!(
            kfold_split(&ids(13), 4, 99).unwrap(),
            kfold_split(&shuffled, 4, 99).unwrap()
        );
        assert_ne!(
            kfold_split(&ids(13), 4, 99).unwrap(),
            kfold_split(&ids(13), 4, 100).unwrap()
        );
    }

    #[test]
    fn kfold_rejects_bad_input() {
        assert!(kfold_split(&ids(3), 4, 0).is_err());
        assert!(kfold_split(&ids(8), 1, 0).is_err());
        let mut dup = ids(8);
        dup[3] = dup[0].clone();
        assert!(kfold_split(&dup, 4, 0).is_err());
    }

    #[test]
    fn training_frames_every_fifth() {
        let sweep = |n| {
            let f = FrameMask::empty(2, 2, PixelSpacing::isotropic(1.0).unwrap()).unwrap();
            Sweep::new("P", PlaneKind::Axial, vec![f; n], SweepSource::Phantom).unwrap()
        };
        assert_eq!(sample_training_frames(&sweep(12)), vec![0, 5, 10]);
        assert_eq!(sample_training_frames(&sweep(5)), vec![0]);
        assert_eq!(sample_training_frames(&sweep(200)).len(), 40);
    }

    fn record(id: &str, dual: bool) -> PatientRecord {
        let mut p = PatientRecord::new(id);
        p.axial_pred.push(crate::manifest::SweepRef::default());
        if dual {
            p.sagittal_pred.push(crate::manifest::SweepRef::default());
        }
        p
    }

    #[test]
    fn holdout_selection() {
        let mut cohort: Vec<_> = (0..44).map(|i| record(&format!("D{i:02}"), true)).collect();
        cohort.extend((0..18).map(|i| record(&format!("S{i:02}"), false)));
        let (test, train) = holdout_test_selection(&cohort, 10, 7).unwrap();
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 52);
        assert!(test.iter().all(|id| id.starts_with('D')));
        assert!(test.iter().all(|id| !train.contains(id)));

        let (test, train) = holdout_test_selection(&cohort, 0, 7).unwrap();
        assert!(test.is_empty());
        assert_eq!(train.len(), 62);

        let small: Vec<_> = (0..5).map(|i| record(&format!("D{i}"), true)).collect();
        assert!(matches!(
            holdout_test_selection(&small, 10, 7),
            Err(Error::Input(_))
        ));
    }

    proptest! {
        #[test]
        fn agreement_invariants(
            raw in proptest::collection::vec((1.0f64..150.0, 1.0f64..150.0), 2..40),
            rot in 0usize..40,
        ) {
            let (pred, reference): (Vec<f64>, Vec<f64>) = raw.iter().copied().unzip();
            let r = bland_altman(&pairs(&pred, &reference)).unwrap();
            prop_assert!(r.loa_low_ml <= r.bias_ml && r.bias_ml <= r.loa_high_ml);
            prop_assert!(r.relative_errors.iter().all(|e| e.abs() < 2.0));

            let mut rotated = pairs(&pred, &reference);
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            let s = bland_altman(&rotated).unwrap();
            prop_assert_eq!(
                (s.bias_ml, s.sd_ml, s.difference_p2_5_ml, s.abs_relative_error_median),
                (r.bias_ml, r.sd_ml, r.difference_p2_5_ml, r.abs_relative_error_median)
            );
        }

        #[test]
        fn relative_error_antisymmetric(p in 0.1f64..500.0, r in 0.1f64..500.0) {
            prop_assert_eq!(relative_error(p, r).unwrap(), -relative_error(r, p).unwrap());
        }

        #[test]
        fn kfold_partitions(n in 2usize..80, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let a = kfold_split(&ids(n), k, seed).unwrap();
            let folds = a.folds();
            let mut all: Vec<_> = folds.iter().flatten().cloned().collect();
            all.sort();
            prop_assert_eq!(all, ids(n));
            let sizes: Vec<_> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
