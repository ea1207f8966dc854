//! Dataset manifest and sweep loading.
//!
//! A manifest is one JSON document:
//!
//! ```json
//! {
//!   "patients": [
//!     {
//!       "id": "P01",
//!       "axial_pred":    { "dir": "P01/axial_pred", "files": ["f000.pgm", "..."], "spacing_mm": [0.4, 0.4] },
//!       "sagittal_pred": { "dir": "P01/sagittal_pred", "files": ["..."], "spacing_mm": [0.4, 0.4] },
//!       "axial_gt":      { "dir": "...", "files": ["..."], "spacing_mm": [0.4, 0.4] },
//!       "sagittal_gt":   { "dir": "...", "files": ["..."], "spacing_mm": [0.4, 0.4] },
//!       "reference_volume_ml": 42.5,
//!       "observers": [ { "axial_gt": { "...": "..." }, "sagittal_gt": { "...": "..." } } ]
//!     }
//!   ]
//! }
//! ```
//!
//! `axial_pred` and `sagittal_pred` also accept an array when a patient has
//! several sweeps in a plane. Relative `dir` entries resolve against the
//! directory holding the manifest.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PixelSpacing, PlaneKind, Sweep, SweepSource};
use crate::raster::{decode_mask, encode_mask};

/// One sweep on disk: an ordered list of mask files plus pixel spacing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRef {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// `[dx, dy]`; required by [`load_sweep`], optional only so that its
    /// absence is reported per sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_mm: Option<[f64; 2]>,
}

impl SweepRef {
    pub fn frame_count(&self) -> usize {
        self.files.len()
    }
}

/// Additional ground-truth delineations of one observer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_gt: Option<SweepRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sagittal_gt: Option<SweepRef>,
}

impl ObserverSet {
    pub fn gt(&self, plane: PlaneKind) -> Option<&SweepRef> {
        match plane {
            PlaneKind::Axial => self.axial_gt.as_ref(),
            PlaneKind::Sagittal => self.sagittal_gt.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientRecord {
    #[serde(rename = "id")]
    pub patient_id: String,
    #[serde(default, with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub axial_pred: Vec<SweepRef>,
    #[serde(default, with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub sagittal_pred: Vec<SweepRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_gt: Option<SweepRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sagittal_gt: Option<SweepRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_volume_ml: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observers: Vec<ObserverSet>,
}

impl PatientRecord {
    pub fn new(patient_id: impl Into<String>) -> Self {
        Self {
            patient_id: patient_id.into(),
            ..Default::default()
        }
    }

    pub fn pred(&self, plane: PlaneKind) -> &[SweepRef] {
        match plane {
            PlaneKind::Axial => &self.axial_pred,
            PlaneKind::Sagittal => &self.sagittal_pred,
        }
    }

    pub fn gt(&self, plane: PlaneKind) -> Option<&SweepRef> {
        match plane {
            PlaneKind::Axial => self.axial_gt.as_ref(),
            PlaneKind::Sagittal => self.sagittal_gt.as_ref(),
        }
    }

    /// Has at least one predicted sweep in each plane.
    pub fn is_dual_plane(&self) -> bool {
        !self.axial_pred.is_empty() && !self.sagittal_pred.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.patient_id.is_empty() {
            return Err(Error::Validation("patient id must not be empty".into()));
        }
        if let Some(v) = self.reference_volume_ml {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "patient {}: reference_volume_ml must be > 0, got {v}",
                    self.patient_id
                )));
            }
        }
        for (i, obs) in self.observers.iter().enumerate() {
            for plane in [PlaneKind::Axial, PlaneKind::Sagittal] {
                let Some(o) = obs.gt(plane) else { continue };
                let Some(gt) = self.gt(plane) else {
                    return Err(Error::Validation(format!(
                        "patient {}: observer {i} has {plane}_gt but the patient has none",
                        self.patient_id
                    )));
                };
                if o.frame_count() != gt.frame_count() {
                    return Err(Error::Validation(format!(
                        "patient {}: observer {i} {plane}_gt has {} frames, ground truth has {}",
                        self.patient_id,
                        o.frame_count(),
                        gt.frame_count()
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolve_dirs(&mut self, base: &Path) {
        let fix = |r: &mut SweepRef| r.dir = base.join(&r.dir);
        self.axial_pred.iter_mut().for_each(fix);
        self.sagittal_pred.iter_mut().for_each(fix);
        self.axial_gt.iter_mut().for_each(fix);
        self.sagittal_gt.iter_mut().for_each(fix);
        for o in &mut self.observers {
            o.axial_gt.iter_mut().for_each(fix);
            o.sagittal_gt.iter_mut().for_each(fix);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub patients: Vec<PatientRecord>,
}

mod one_or_many {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::SweepRef;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(SweepRef),
        Many(Vec<SweepRef>),
    }

    pub fn serialize<S: Serializer>(v: &[SweepRef], s: S) -> Result<S::Ok, S::Error> {
        match v {
            [one] => one.serialize(s),
            many => many.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SweepRef>, D::Error> {
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(r) => vec![r],
            OneOrMany::Many(v) => v,
        })
    }
}

/// Parses manifest text; relative sweep directories are joined onto `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<PatientRecord>> {
    let manifest: Manifest = serde_json::from_str(text).map_err(|e| Error::ManifestParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    let mut patients = manifest.patients;
    for p in &mut patients {
        if !seen.insert(p.patient_id.clone()) {
            return Err(Error::DuplicatePatient(p.patient_id.clone()));
        }
        p.validate()?;
        p.resolve_dirs(base_dir);
    }
    Ok(patients)
}

pub fn load_manifest(path: &Path) -> Result<Vec<PatientRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, base)
}

/// Reads every frame of a sweep in listed order.
pub fn load_sweep(descriptor: &SweepRef, patient_id: &str, plane: PlaneKind) -> Result<Sweep> {
    let label = format!("{patient_id}/{plane}");
    let [dx, dy] = descriptor.spacing_mm.ok_or_else(|| Error::MissingSpacing {
        sweep: label.clone(),
    })?;
    let spacing = PixelSpacing::new(dx, dy)?;
    if descriptor.files.is_empty() {
        return Err(Error::InvalidSweep(format!(
            "{label}: no mask files listed"
        )));
    }
    let frames = descriptor
        .files
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let path = descriptor.dir.join(name);
            let bytes = fs::read(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            decode_mask(&bytes, spacing).map_err(|e| e.at_frame(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Sweep::new(
        patient_id,
        plane,
        frames,
        SweepSource::Path(descriptor.dir.clone()),
    )
}

/// Writes every frame as `frame_NNNN.pgm` under `dir` and returns the
/// descriptor, with `manifest_dir` as the directory recorded in the manifest.
pub fn write_sweep(sweep: &Sweep, dir: &Path, manifest_dir: &Path) -> Result<SweepRef> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::with_capacity(sweep.len());
    for (i, frame) in sweep.frames().iter().enumerate() {
        let name = format!("frame_{i:04}.pgm");
        let path = dir.join(&name);
        fs::write(&path, encode_mask(frame)).map_err(|source| Error::Io { path, source })?;
        files.push(name);
    }
    let sp = sweep.spacing();
    Ok(SweepRef {
        dir: manifest_dir.to_path_buf(),
        files,
        spacing_mm: Some([sp.dx_mm(), sp.dy_mm()]),
    })
}

pub fn manifest_to_json(patients: &[PatientRecord]) -> String {
    let m = Manifest {
        patients: patients.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<PatientRecord>> {
        parse_manifest(text, Path::new("/data"))
    }

    #[test]
    fn two_patients_one_without_reference() {
        let p = parse(
            r#"{"patients": [
                {"id": "P01", "axial_pred": {"dir": "a", "files": ["0.pgm"], "spacing_mm": [0.4, 0.4]},
                 "reference_volume_ml": 40.5},
                {"id": "P02", "sagittal_pred": [{"dir": "/abs/s", "files": ["0.pgm"], "spacing_mm": [0.4, 0.4]},
                                                 {"dir": "s2", "files": [], "spacing_mm": [0.4, 0.4]}]}
            ]}"#,
        )
        .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].reference_volume_ml, Some(40.5));
        assert_eq!(p[1].reference_volume_ml, None);
        assert_eq!(p[0].axial_pred[0].dir, Path::new("/data/a"));
        assert_eq!(p[1].sagittal_pred[0].dir, Path::new("/abs/s"));
        assert_eq!(p[1].sagittal_pred.len(), 2);
        assert!(p[0].sagittal_pred.is_empty() && p[0].axial_gt.is_none());
    }

    #[test]
    fn empty_patient_list() {
        assert!(parse(r#"{"patients": []}"#).unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse(r#"{"patients": [{"id": "P07"}, {"id": "P07"}]}"#).unwrap_err();
        assert!(matches!(err, Error::DuplicatePatient(id) if id == "P07"));
    }

    #[test]
    fn malformed_manifest_reports_position() {
        let err = parse("{\"patients\": [\n  {\"id\": 3}\n]}").unwrap_err();
        match err {
            Error::ManifestParse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("string"), "{message}");
            }
            e => panic!("unexpected {e:?}"),
        }
        let err = parse(r#"{"patients": [{"id": "A", "spacing": 1}]}"#).unwrap_err();
        assert!(matches!(err, Error::ManifestParse { message, .. } if message.contains("spacing")));
    }

    #[test]
    fn sentinel_reference_volume_rejected() {
        let err = parse(r#"{"patients": [{"id": "A", "reference_volume_ml": 0}]}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn observer_frame_counts_must_match() {
        let err = parse(
            r#"{"patients": [{"id": "A",
                "axial_gt": {"dir": "g", "files": ["0", "1"], "spacing_mm": [1, 1]},
                "observers": [{"axial_gt": {"dir": "o", "files": ["0"], "spacing_mm": [1, 1]}}]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.contains("observer 0")));

        let err = parse(
            r#"{"patients": [{"id": "A",
                "observers": [{"sagittal_gt": {"dir": "o", "files": ["0"], "spacing_mm": [1, 1]}}]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn json_roundtrip_keeps_single_sweeps_as_objects() {
        let mut p = PatientRecord::new("X");
        p.axial_pred.push(SweepRef {
            dir: "x/axial".into(),
            files: vec!["frame_0000.pgm".into()],
            spacing_mm: Some([0.4, 0.4]),
        });
        let json = manifest_to_json(std::slice::from_ref(&p));
        assert!(json.contains("\"axial_pred\": {"));
        assert!(!json.contains("sagittal_pred"));
        let back = parse_manifest(&json, Path::new("")).unwrap();
        assert_eq!(back, vec![p]);
    }
}
