//! On-disk formats: fingerprint JSON, comparison reports and the scaling table.
//!
//! Every real number is written with 17 significant digits so that reading a
//! file back yields bit-identical values and rewriting it yields identical bytes.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::cost::CostReport;
use crate::error::{Error, Result};
use crate::estimation::Shots;
use crate::fingerprint::{
    difference_matrix, noise_floor_between, FingerprintMatrix, FingerprintMetadata, RealMatrix,
};
use crate::suite::ReferenceSuite;

pub const FINGERPRINT_FORMAT_VERSION: &str = "shadowprint-fingerprint/1";
pub const COMPARISON_FORMAT_VERSION: &str = "shadowprint-comparison/1";

/// Distance-to-floor ratio above which a difference is called systematic.
pub const SYSTEMATIC_RATIO: f64 = 3.0;

/// Pretty JSON whose floats are printed as `d.dddddddddddddddde±x`.
struct ExactFloatFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes with exact floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloatFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Writes to a sibling temp file and renames it over `path`, so a failed
/// run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("'{}' is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FingerprintFile {
    format_version: String,
    metadata: FingerprintMetadata,
    suite: ReferenceSuite,
    ideal: RealMatrix,
    observed: RealMatrix,
    deviations: RealMatrix,
}

pub fn fingerprint_to_json(f: &FingerprintMatrix) -> String {
    to_json_string(&FingerprintFile {
        format_version: FINGERPRINT_FORMAT_VERSION.into(),
        metadata: f.metadata.clone(),
        suite: f.suite.clone(),
        ideal: f.ideal.clone(),
        observed: f.observed.clone(),
        deviations: f.deviations.clone(),
    })
}

pub fn fingerprint_from_json(text: &str) -> Result<FingerprintMatrix> {
    let file: FingerprintFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if file.format_version != FINGERPRINT_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version '{}' (expected '{FINGERPRINT_FORMAT_VERSION}')",
            file.format_version
        )));
    }
    file.suite.validate().map_err(|e| Error::Format(e.to_string()))?;
    if file.metadata.suite_version != file.suite.version {
        return Err(Error::Format("metadata suite version does not match embedded suite".into()));
    }
    let fp = FingerprintMatrix::from_parts(file.metadata, file.suite, file.ideal, file.observed)
        .map_err(|e| Error::Format(e.to_string()))?;
    let drift = fp
        .deviations
        .sub(&file.deviations)
        .map_err(|e| Error::Format(format!("deviation matrix: {e}")))?
        .max_abs();
    if drift > 1e-12 {
        return Err(Error::Format(format!(
            "deviations differ from observed − ideal by {drift:e}"
        )));
    }
    Ok(fp)
}

pub fn write_fingerprint(path: &Path, f: &FingerprintMatrix) -> Result<()> {
    write_atomic(path, &fingerprint_to_json(f))
}

pub fn read_fingerprint(path: &Path) -> Result<FingerprintMatrix> {
    let text = std::fs::read_to_string(path)?;
    fingerprint_from_json(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format_version: String,
    pub backend_a: String,
    pub backend_b: String,
    pub suite_version: String,
    pub num_entries: usize,
    pub shots_a: Shots,
    pub shots_b: Shots,
    pub frobenius_distance: f64,
    pub noise_floor: f64,
    /// `None` when both sides are exact (zero floor) and they differ.
    pub ratio: Option<f64>,
    pub systematic_threshold: f64,
    pub systematic: bool,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    /// `Δ = F_a − F_b`
    pub delta: RealMatrix,
}

pub fn compare(a: &FingerprintMatrix, b: &FingerprintMatrix) -> Result<ComparisonReport> {
    let delta = difference_matrix(a, b)?;
    let distance = delta.frobenius_norm();
    let floor = noise_floor_between(a.num_entries(), a.metadata.shots, b.metadata.shots);
    let ratio = if distance == 0.0 {
        Some(0.0)
    } else if floor > 0.0 {
        Some(distance / floor)
    } else {
        None
    };
    let systematic = ratio.is_none_or(|r| r > SYSTEMATIC_RATIO);
    Ok(ComparisonReport {
        format_version: COMPARISON_FORMAT_VERSION.into(),
        backend_a: a.metadata.backend.id.clone(),
        backend_b: b.metadata.backend.id.clone(),
        suite_version: a.suite.version.clone(),
        num_entries: a.num_entries(),
        shots_a: a.metadata.shots,
        shots_b: b.metadata.shots,
        frobenius_distance: distance,
        noise_floor: floor,
        ratio,
        systematic_threshold: SYSTEMATIC_RATIO,
        systematic,
        row_labels: a.suite.state_ids(),
        column_labels: a.suite.observable_labels(),
        delta,
    })
}

pub fn scaling_csv(rows: &[CostReport]) -> String {
    let mut out = String::from(
        "qubits,shadow_measurements,tomography_measurements,ratio,reported_shadow,reported_tomography,ratio_vs_reported_shadow\n",
    );
    for r in rows {
        let (rs, rt, rr) = match &r.reported {
            Some(rep) => (
                rep.shadow_measurements.to_string(),
                format!("{:e}", rep.tomography_measurements),
                format!("{:.6e}", rep.ratio_vs_reported_shadow),
            ),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{},{:.6e},{rs},{rt},{rr}\n",
            r.qubits, r.shadow_measurements, r.tomography_measurements, r.ratio
        ));
    }
    out
}

pub fn scaling_table(rows: &[CostReport]) -> String {
    let mut out = format!(
        "{:>6}  {:>14}  {:>26}  {:>12}\n",
        "qubits", "shadow", "tomography", "ratio"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>6}  {:>14}  {:>26}  {:>12.4e}\n",
            r.qubits, r.shadow_measurements, r.tomography_measurements, r.ratio
        ));
        if let Some(rep) = &r.reported {
            out.push_str(&format!(
                "{:>6}  {:>14}  {:>26}  {:>12.4e}   <- reported figures; ratio = model tomography / reported shadow\n",
                "", rep.shadow_measurements, format!("{:e}", rep.tomography_measurements), rep.ratio_vs_reported_shadow
            ));
        }
    }
    out
}
