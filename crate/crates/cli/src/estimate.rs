//! `estimate`: one ellipsoid volume per patient.

use rayon::prelude::*;
use serde::Serialize;

use pvol_core::ellipse::AxisPolicy;
use pvol_core::manifest::{load_manifest, PatientRecord};
use pvol_core::volumetry::{estimate_volume, VolumeEstimate, VolumeOptions};
use pvol_core::PlaneKind;

use crate::args::{EstimateArgs, PipelineArgs};
use crate::error::{CliError, Status};
use crate::output::{create_dir, csv_bytes, fixed, json_bytes, write};
use crate::select::choose_pred_sweep;

pub const VOLUMES_HEADER: [&str; 8] = [
    "patient_id",
    "frontal_mm",
    "longitudinal_mm",
    "sagittal_mm",
    "volume_ml",
    "axial_midplane",
    "sagittal_midplane",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientVolume {
    pub patient_id: String,
    /// Chosen axial and sagittal prediction sweeps.
    pub axial_sweep: Option<usize>,
    pub sagittal_sweep: Option<usize>,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ok { estimate: VolumeEstimate },
    Failed { reason: String },
}

impl PatientVolume {
    pub fn estimate(&self) -> Option<&VolumeEstimate> {
        match &self.outcome {
            Outcome::Ok { estimate } => Some(estimate),
            Outcome::Failed { .. } => None,
        }
    }
}

#[derive(Serialize)]
struct VolumesReport<'a> {
    min_area_px: usize,
    axis_policy: AxisPolicy,
    patients: &'a [PatientVolume],
}

pub fn volume_options(args: &PipelineArgs) -> VolumeOptions {
    VolumeOptions {
        min_area_px: args.min_area_px,
        axis_policy: args.axis_policy.into(),
    }
}

pub fn estimate_patient(patient: &PatientRecord, args: &PipelineArgs) -> PatientVolume {
    let opts = volume_options(args);
    let mut result = PatientVolume {
        patient_id: patient.patient_id.clone(),
        axial_sweep: None,
        sagittal_sweep: None,
        outcome: Outcome::Failed {
            reason: String::new(),
        },
    };
    let chosen = choose_pred_sweep(
        patient,
        PlaneKind::Axial,
        opts.min_area_px,
        args.axial_sweep,
    )
    .map_err(|e| e.in_plane(PlaneKind::Axial))
    .and_then(|axial| {
        result.axial_sweep = Some(axial.index);
        let sagittal = choose_pred_sweep(
            patient,
            PlaneKind::Sagittal,
            opts.min_area_px,
            args.sagittal_sweep,
        )
        .map_err(|e| e.in_plane(PlaneKind::Sagittal))?;
        result.sagittal_sweep = Some(sagittal.index);
        estimate_volume(&axial.sweep, &sagittal.sweep, &opts)
    });
    result.outcome = match chosen {
        Ok(estimate) => Outcome::Ok { estimate },
        Err(e) => Outcome::Failed {
            reason: e.to_string(),
        },
    };
    result
}

/// Every patient, processed in parallel and returned in patient-id order.
pub fn estimate_all(patients: &[PatientRecord], args: &PipelineArgs) -> Vec<PatientVolume> {
    let mut out: Vec<PatientVolume> = patients
        .par_iter()
        .map(|p| estimate_patient(p, args))
        .collect();
    out.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    out
}

fn csv_row(v: &PatientVolume) -> Vec<String> {
    match v.estimate() {
        Some(e) => vec![
            v.patient_id.clone(),
            fixed(e.diameters.frontal_mm, 3),
            fixed(e.diameters.longitudinal_mm, 3),
            fixed(e.diameters.sagittal_mm, 3),
            fixed(e.volume_ml, 2),
            e.axial_midplane_index.to_string(),
            e.sagittal_midplane_index.to_string(),
            "ok".into(),
        ],
        None => {
            let mut row = vec![String::new(); VOLUMES_HEADER.len()];
            row[0] = v.patient_id.clone();
            row[7] = "failed".into();
            row
        }
    }
}

pub fn volumes_csv(volumes: &[PatientVolume]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<_> = volumes.iter().map(csv_row).collect();
    csv_bytes(&VOLUMES_HEADER, &rows)
}

pub fn report_failures(volumes: &[PatientVolume]) -> usize {
    let mut failed = 0;
    for v in volumes {
        if let Outcome::Failed { reason } = &v.outcome {
            eprintln!("patient {}: {reason}", v.patient_id);
            failed += 1;
        }
    }
    failed
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<Status, CliError> {
    let patients = load_manifest(&args.pipeline.manifest)?;
    let volumes = estimate_all(&patients, &args.pipeline);
    let report = VolumesReport {
        min_area_px: args.pipeline.min_area_px,
        axis_policy: args.pipeline.axis_policy.into(),
        patients: &volumes,
    };
    let csv = volumes_csv(&volumes)?;
    create_dir(&args.run.out_dir)?;
    write(&args.run.out_dir, "volumes.csv", &csv)?;
    write(&args.run.out_dir, "volumes.json", &json_bytes(&report))?;
    Ok(Status::from_failures(report_failures(&volumes)))
}
