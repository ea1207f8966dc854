//! `evaluate`: segmentation metrics, volume agreement and inter-observer spread.

use rayon::prelude::*;

use pvol_core::manifest::{load_manifest, load_sweep, PatientRecord};
use pvol_core::metrics::{interobserver, sweep_metrics, MidplaneSource, SweepMetrics};
use pvol_core::stats::{bland_altman, relative_error, AgreementReport, VolumePair};
use pvol_core::{PlaneKind, Result as CoreResult, Sweep};

use crate::args::EvaluateArgs;
use crate::error::{CliError, Status};
use crate::estimate::{estimate_patient, Outcome};
use crate::output::{create_dir, csv_bytes, fixed, write};
use crate::select::choose_pred_sweep;
use crate::svg::bland_altman_svg;

pub const SEGMENTATION_HEADER: [&str; 6] = [
    "patient_id",
    "plane",
    "dice_mean",
    "dice_midplane",
    "hd_midplane_mm",
    "midplane_index",
];

pub const INTEROBSERVER_HEADER: [&str; 7] = [
    "patient_id",
    "plane",
    "observers",
    "dice_mean",
    "dice_midplane",
    "hd_midplane_mm",
    "midplane_index",
];

pub const AGREEMENT_PAIRS_HEADER: [&str; 6] = [
    "patient_id",
    "predicted_ml",
    "reference_ml",
    "mean_ml",
    "reference_minus_predicted_ml",
    "relative_error",
];

pub const AGREEMENT_HEADER: [&str; 2] = ["statistic", "value"];

const PLANES: [PlaneKind; 2] = [PlaneKind::Axial, PlaneKind::Sagittal];

#[derive(Debug, Clone, PartialEq)]
pub struct PatientEvaluation {
    pub patient_id: String,
    pub segmentation: Vec<(PlaneKind, SweepMetrics)>,
    /// Plane, observer count, averaged metrics.
    pub interobserver: Vec<(PlaneKind, usize, SweepMetrics)>,
    pub volume: Option<VolumePair>,
    pub failures: Vec<String>,
}

impl PatientEvaluation {
    fn is_evaluable(&self) -> bool {
        !self.segmentation.is_empty() || !self.interobserver.is_empty() || self.volume.is_some()
    }
}

fn segmentation_for(
    patient: &PatientRecord,
    plane: PlaneKind,
    args: &EvaluateArgs,
) -> Option<CoreResult<SweepMetrics>> {
    let gt_ref = patient.gt(plane)?;
    let forced = match plane {
        PlaneKind::Axial => args.pipeline.axial_sweep,
        PlaneKind::Sagittal => args.pipeline.sagittal_sweep,
    };
    let source: MidplaneSource = args.midplane_source.into();
    let run = || {
        let gt = load_sweep(gt_ref, &patient.patient_id, plane)?;
        let pred = choose_pred_sweep(patient, plane, args.pipeline.min_area_px, forced)?;
        sweep_metrics(&pred.sweep, &gt, args.pipeline.min_area_px, source)
    };
    Some(run().map_err(|e| e.in_plane(plane)))
}

fn interobserver_for(
    patient: &PatientRecord,
    plane: PlaneKind,
    min_area_px: usize,
) -> Option<CoreResult<(usize, SweepMetrics)>> {
    let refs: Vec<_> = patient
        .observers
        .iter()
        .filter_map(|o| o.gt(plane))
        .collect();
    if refs.is_empty() {
        return None;
    }
    let run = || {
        let reference = load_sweep(
            patient.gt(plane).expect("validated manifest"),
            &patient.patient_id,
            plane,
        )?;
        let observers = refs
            .iter()
            .map(|r| load_sweep(r, &patient.patient_id, plane))
            .collect::<CoreResult<Vec<Sweep>>>()?;
        interobserver(&observers, &reference, min_area_px).map(|m| (observers.len(), m))
    };
    Some(run().map_err(|e| e.in_plane(plane)))
}

pub fn evaluate_patient(patient: &PatientRecord, args: &EvaluateArgs) -> PatientEvaluation {
    let mut eval = PatientEvaluation {
        patient_id: patient.patient_id.clone(),
        segmentation: Vec::new(),
        interobserver: Vec::new(),
        volume: None,
        failures: Vec::new(),
    };
    for plane in PLANES {
        match segmentation_for(patient, plane, args) {
            Some(Ok(m)) => eval.segmentation.push((plane, m)),
            Some(Err(e)) => eval.failures.push(format!("segmentation metrics: {e}")),
            None => {}
        }
        match interobserver_for(patient, plane, args.pipeline.min_area_px) {
            Some(Ok((n, m))) => eval.interobserver.push((plane, n, m)),
            Some(Err(e)) => eval.failures.push(format!("inter-observer metrics: {e}")),
            None => {}
        }
    }
    if let Some(reference_ml) = patient.reference_volume_ml {
        match estimate_patient(patient, &args.pipeline).outcome {
            Outcome::Ok { estimate } => {
                eval.volume = Some(VolumePair::new(
                    &patient.patient_id,
                    estimate.volume_ml,
                    reference_ml,
                ))
            }
            Outcome::Failed { reason } => eval.failures.push(format!("volume: {reason}")),
        }
    }
    eval
}

pub fn evaluate_all(patients: &[PatientRecord], args: &EvaluateArgs) -> Vec<PatientEvaluation> {
    let mut out: Vec<_> = patients
        .par_iter()
        .map(|p| evaluate_patient(p, args))
        .collect();
    out.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    out
}

fn hd_cell(m: &SweepMetrics) -> String {
    m.hd_midplane_mm.map(|d| fixed(d, 3)).unwrap_or_default()
}

pub fn segmentation_csv(evals: &[PatientEvaluation]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<_> = evals
        .iter()
        .flat_map(|e| {
            e.segmentation.iter().map(|(plane, m)| {
                vec![
                    e.patient_id.clone(),
                    plane.to_string(),
                    fixed(m.dice_mean, 4),
                    fixed(m.dice_midplane, 4),
                    hd_cell(m),
                    m.midplane_index.to_string(),
                ]
            })
        })
        .collect();
    csv_bytes(&SEGMENTATION_HEADER, &rows)
}

pub fn interobserver_csv(evals: &[PatientEvaluation]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<_> = evals
        .iter()
        .flat_map(|e| {
            e.interobserver.iter().map(|(plane, n, m)| {
                vec![
                    e.patient_id.clone(),
                    plane.to_string(),
                    n.to_string(),
                    fixed(m.dice_mean, 4),
                    fixed(m.dice_midplane, 4),
                    hd_cell(m),
                    m.midplane_index.to_string(),
                ]
            })
        })
        .collect();
    csv_bytes(&INTEROBSERVER_HEADER, &rows)
}

pub fn agreement_pairs_csv(pairs: &[VolumePair]) -> Result<Vec<u8>, CliError> {
    let rows = pairs
        .iter()
        .map(|p| {
            Ok(vec![
                p.patient_id.clone(),
                fixed(p.predicted_ml, 2),
                fixed(p.reference_ml, 2),
                fixed(p.mean_ml(), 2),
                fixed(p.difference_ml(), 2),
                fixed(relative_error(p.predicted_ml, p.reference_ml)?, 4),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    csv_bytes(&AGREEMENT_PAIRS_HEADER, &rows)
}

/// One `statistic,value` row per summary field. Differences are always
/// reference minus predicted.
pub fn agreement_csv(r: &AgreementReport) -> Result<Vec<u8>, CliError> {
    let ml = |v: f64| fixed(v, 2);
    let ratio = |v: f64| fixed(v, 4);
    let rows: Vec<Vec<String>> = [
        ("difference", "reference_minus_predicted".to_string()),
        ("n", r.pairs.len().to_string()),
        ("bias_ml", ml(r.bias_ml)),
        ("sd_ml", ml(r.sd_ml)),
        ("loa_low_ml", ml(r.loa_low_ml)),
        ("loa_high_ml", ml(r.loa_high_ml)),
        ("difference_p2_5_ml", ml(r.difference_p2_5_ml)),
        ("difference_p97_5_ml", ml(r.difference_p97_5_ml)),
        ("relative_error_median", ratio(r.relative_error_median)),
        ("relative_error_p2_5", ratio(r.relative_error_p2_5)),
        ("relative_error_p97_5", ratio(r.relative_error_p97_5)),
        (
            "abs_relative_error_median",
            ratio(r.abs_relative_error_median),
        ),
    ]
    .into_iter()
    .map(|(k, v)| vec![k.to_string(), v])
    .collect();
    csv_bytes(&AGREEMENT_HEADER, &rows)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Status, CliError> {
    let patients = load_manifest(&args.pipeline.manifest)?;
    let evals = evaluate_all(&patients, args);
    let mut failed = 0;
    for e in &evals {
        for f in &e.failures {
            eprintln!("patient {}: {f}", e.patient_id);
        }
        failed += usize::from(!e.failures.is_empty());
    }
    if !evals.iter().any(PatientEvaluation::is_evaluable) {
        return Err(CliError::NothingToEvaluate(format!(
            "{} patients, none with usable ground-truth sweeps or reference volumes",
            patients.len()
        )));
    }

    let pairs: Vec<VolumePair> = evals.iter().filter_map(|e| e.volume.clone()).collect();
    let agreement = match pairs.len() {
        0 => None,
        1 => {
            eprintln!("only one volume pair; agreement summary and plot skipped");
            None
        }
        _ => Some(bland_altman(&pairs)?),
    };
    let segmentation = segmentation_csv(&evals)?;
    let pairs_csv = agreement_pairs_csv(&pairs)?;
    let has_observers = evals.iter().any(|e| !e.interobserver.is_empty());
    let observers = has_observers
        .then(|| interobserver_csv(&evals))
        .transpose()?;
    let summary = agreement.as_ref().map(agreement_csv).transpose()?;

    let dir = &args.run.out_dir;
    create_dir(dir)?;
    write(dir, "segmentation_metrics.csv", &segmentation)?;
    write(dir, "agreement_pairs.csv", &pairs_csv)?;
    if let (Some(report), Some(summary)) = (&agreement, &summary) {
        write(dir, "agreement.csv", summary)?;
        write(dir, "bland_altman.svg", bland_altman_svg(report).as_bytes())?;
    }
    if let Some(bytes) = &observers {
        write(dir, "interobserver.csv", bytes)?;
    }
    Ok(Status::from_failures(failed))
}
