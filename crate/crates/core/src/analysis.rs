//! Feature extraction, rule-based channel classification and parameter estimation.
//!
//! The thresholds and estimator constants are plain configuration values. The
//! defaults were fitted for depolarizing 0.05, amplitude damping 0.10 and phase
//! damping 0.08 at 500 shots on the default suite; [`calibrate`] re-fits the
//! constants against the built-in simulator, and its result is only used when a
//! caller passes it in explicitly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{BuiltinBackend, NoiseConfig, VariantProfile};
use crate::channels::ChannelName;
use crate::error::{Error, Result};
use crate::estimation::ShotPlan;
use crate::fingerprint::{build_fingerprint, RealMatrix};
use crate::suite::ReferenceSuite;

/// Entries with `|F_ij|` strictly below this count as zero for sparsity.
pub const SPARSITY_TAU: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_dev: f64,
    /// Population standard deviation over all entries.
    pub std_dev: f64,
    pub frobenius_norm: f64,
    /// Fraction of entries with `|F_ij| < τ`.
    pub sparsity: f64,
    pub max_abs_dev: f64,
    /// Population variance of the per-column population variances.
    pub variance_pattern: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (sum / count as f64, count)
}

fn population_variance(xs: &[f64]) -> f64 {
    let (m, n) = mean(xs.iter().copied());
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64
}

pub fn extract_features(f: &RealMatrix) -> Result<FeatureVector> {
    extract_features_with_tau(f, SPARSITY_TAU)
}

pub fn extract_features_with_tau(f: &RealMatrix, tau: f64) -> Result<FeatureVector> {
    if f.is_empty() {
        return Err(Error::invalid("cannot extract features from an empty matrix"));
    }
    let entries = f.as_slice();
    let (mean_dev, count) = mean(entries.iter().copied());
    let column_variances: Vec<f64> = (0..f.cols())
        .map(|c| population_variance(&f.column(c).collect::<Vec<_>>()))
        .collect();
    Ok(FeatureVector {
        mean_dev,
        std_dev: population_variance(entries).sqrt(),
        frobenius_norm: f.frobenius_norm(),
        sparsity: entries.iter().filter(|x| x.abs() < tau).count() as f64 / count as f64,
        max_abs_dev: f.max_abs(),
        variance_pattern: population_variance(&column_variances),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLabel {
    PhaseDamping,
    AmplitudeDamping,
    Depolarizing,
}

impl NoiseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseLabel::PhaseDamping => "phase_damping",
            NoiseLabel::AmplitudeDamping => "amplitude_damping",
            NoiseLabel::Depolarizing => "depolarizing",
        }
    }

    pub fn channel(self) -> ChannelName {
        match self {
            NoiseLabel::PhaseDamping => ChannelName::PhaseDamping,
            NoiseLabel::AmplitudeDamping => ChannelName::AmplitudeDamping,
            NoiseLabel::Depolarizing => ChannelName::Depolarizing,
        }
    }
}

impl fmt::Display for NoiseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// `phase_damping` if sparsity exceeds this.
    pub sparsity_threshold: f64,
    /// otherwise `amplitude_damping` if `|μ_F|` exceeds this.
    pub mean_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            sparsity_threshold: 0.12,
            mean_threshold: 0.13,
        }
    }
}

/// First matching rule wins: sparsity, then mean magnitude, then depolarizing.
pub fn classify(fv: &FeatureVector) -> NoiseLabel {
    classify_with(fv, &ClassifierConfig::default())
}

pub fn classify_with(fv: &FeatureVector, cfg: &ClassifierConfig) -> NoiseLabel {
    if fv.sparsity > cfg.sparsity_threshold {
        NoiseLabel::PhaseDamping
    } else if fv.mean_dev.abs() > cfg.mean_threshold {
        NoiseLabel::AmplitudeDamping
    } else {
        NoiseLabel::Depolarizing
    }
}

/// Where a set of estimator constants came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Shipped defaults, fitted at 0.05 / 0.10 / 0.08 and 500 shots.
    Default,
    Calibrated { backend: String, suite_version: String },
    Override,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Default => f.write_str("default (fitted at 0.05/0.10/0.08, 500 shots)"),
            Provenance::Calibrated { backend, suite_version } => {
                write!(f, "calibrated on {backend}, suite {suite_version}, exact mode")
            }
            Provenance::Override => f.write_str("user override"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConstants {
    /// `p ≈ |μ_F| / c_dep`
    pub c_dep: f64,
    /// `γ ≈ ½(|μ_F|/c_amp + variance_pattern/amp_variance_scale)`
    pub c_amp: f64,
    pub amp_variance_scale: f64,
    /// `λ ≈ (1 − s)·c_phase`
    pub c_phase: f64,
    pub provenance: Provenance,
}

impl Default for EstimatorConstants {
    fn default() -> Self {
        Self {
            c_dep: 2.14,
            c_amp: 1.44,
            amp_variance_scale: 0.001,
            c_phase: 0.094,
            provenance: Provenance::Default,
        }
    }
}

/// Noise strength implied by `fv` for the given label, clamped to `[0, 1]`.
pub fn estimate_parameter(label: NoiseLabel, fv: &FeatureVector) -> f64 {
    estimate_parameter_with(label, fv, &EstimatorConstants::default())
}

pub fn estimate_parameter_with(label: NoiseLabel, fv: &FeatureVector, k: &EstimatorConstants) -> f64 {
    let raw = match label {
        NoiseLabel::Depolarizing => fv.mean_dev.abs() / k.c_dep,
        NoiseLabel::AmplitudeDamping => {
            0.5 * (fv.mean_dev.abs() / k.c_amp + fv.variance_pattern / k.amp_variance_scale)
        }
        NoiseLabel::PhaseDamping => (1.0 - fv.sparsity) * k.c_phase,
    };
    if raw.is_nan() {
        0.0
    } else {
        raw.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseDiagnosis {
    pub label: NoiseLabel,
    pub estimated_parameter: f64,
    pub features: FeatureVector,
    pub classifier: ClassifierConfig,
    pub constants: EstimatorConstants,
}

pub fn diagnose(f: &RealMatrix, cfg: &ClassifierConfig, constants: &EstimatorConstants) -> Result<NoiseDiagnosis> {
    let features = extract_features(f)?;
    let label = classify_with(&features, cfg);
    Ok(NoiseDiagnosis {
        label,
        estimated_parameter: estimate_parameter_with(label, &features, constants),
        features,
        classifier: *cfg,
        constants: constants.clone(),
    })
}

/// Parameter values each constant is fitted at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub depolarizing: Vec<f64>,
    pub amplitude_damping: Vec<f64>,
    pub phase_damping: Vec<f64>,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            depolarizing: vec![0.05],
            amplitude_damping: vec![0.10],
            phase_damping: vec![0.08],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub channel: ChannelName,
    pub parameter: f64,
    pub features: FeatureVector,
    /// Estimate with the freshly fitted constants.
    pub fitted_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub constants: EstimatorConstants,
    pub points: Vec<CalibrationPoint>,
}

/// Least-squares fit of `y ≈ c·x` through the origin.
fn fit_through_origin(pairs: &[(f64, f64)]) -> Option<f64> {
    let sxx: f64 = pairs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pairs.iter().map(|(x, y)| x * y).sum();
    let c = sxy / sxx;
    (c.is_finite() && c > 0.0).then_some(c)
}

/// Fits `c_dep`, `c_amp` and `c_phase` on exact-mode fingerprints of the built-in
/// simulator. Classification thresholds are left alone.
pub fn calibrate(
    profile: &VariantProfile,
    suite: &ReferenceSuite,
    targets: &CalibrationTargets,
) -> Result<CalibrationReport> {
    let features_at = |channel: ChannelName, parameter: f64| -> Result<FeatureVector> {
        let noise = NoiseConfig::new(channel, parameter, suite.num_qubits)?;
        let backend = BuiltinBackend::new(profile.clone(), noise)?;
        let fp = build_fingerprint(&backend, suite, ShotPlan::exact(), None)?;
        extract_features(&fp.deviations)
    };
    let collect = |channel, params: &[f64]| -> Result<Vec<(f64, FeatureVector)>> {
        if params.is_empty() {
            return Err(Error::invalid(format!("no calibration points for {channel}")));
        }
        params.iter().map(|&p| Ok((p, features_at(channel, p)?))).collect()
    };
    let dep = collect(ChannelName::Depolarizing, &targets.depolarizing)?;
    let amp = collect(ChannelName::AmplitudeDamping, &targets.amplitude_damping)?;
    let phase = collect(ChannelName::PhaseDamping, &targets.phase_damping)?;

    let defaults = EstimatorConstants::default();
    let no_fit = |what: &str| Error::invalid(format!("calibration of {what} is degenerate for this suite"));

    // |μ| = c_dep·p
    let c_dep = fit_through_origin(&dep.iter().map(|(p, f)| (*p, f.mean_dev.abs())).collect::<Vec<_>>())
        .ok_or_else(|| no_fit("c_dep"))?;
    // 2γ − vp/scale = |μ|·(1/c_amp)
    let inv_amp = fit_through_origin(
        &amp.iter()
            .map(|(g, f)| (f.mean_dev.abs(), 2.0 * g - f.variance_pattern / defaults.amp_variance_scale))
            .collect::<Vec<_>>(),
    )
    .ok_or_else(|| no_fit("c_amp"))?;
    // λ = (1 − s)·c_phase
    let c_phase = fit_through_origin(&phase.iter().map(|(l, f)| (1.0 - f.sparsity, *l)).collect::<Vec<_>>())
        .ok_or_else(|| no_fit("c_phase"))?;

    let constants = EstimatorConstants {
        c_dep,
        c_amp: 1.0 / inv_amp,
        amp_variance_scale: defaults.amp_variance_scale,
        c_phase,
        provenance: Provenance::Calibrated {
            backend: format!("builtin:{}", profile.name),
            suite_version: suite.version.clone(),
        },
    };
    let points = [
        (ChannelName::Depolarizing, NoiseLabel::Depolarizing, dep),
        (ChannelName::AmplitudeDamping, NoiseLabel::AmplitudeDamping, amp),
        (ChannelName::PhaseDamping, NoiseLabel::PhaseDamping, phase),
    ]
    .into_iter()
    .flat_map(|(channel, label, pts)| {
        let constants = &constants;
        pts.into_iter().map(move |(parameter, features)| CalibrationPoint {
            channel,
            parameter,
            features,
            fitted_estimate: estimate_parameter_with(label, &features, constants),
        })
    })
    .collect();
    Ok(CalibrationReport { constants, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(sparsity: f64, mean_dev: f64) -> FeatureVector {
        FeatureVector {
            mean_dev,
            std_dev: 0.0,
            frobenius_norm: 0.0,
            sparsity,
            max_abs_dev: 0.0,
            variance_pattern: 0.0,
        }
    }

    #[test]
    fn zero_matrix_features() {
        let f = extract_features(&RealMatrix::zeros(9, 15)).unwrap();
        assert_eq!(
            f,
            FeatureVector {
                mean_dev: 0.0,
                std_dev: 0.0,
                frobenius_norm: 0.0,
                sparsity: 1.0,
                max_abs_dev: 0.0,
                variance_pattern: 0.0
            }
        );
    }

    #[test]
    fn constant_matrix_features() {
        let m = RealMatrix::new(9, 15, vec![0.2; 135]).unwrap();
        let f = extract_features(&m).unwrap();
        assert!((f.mean_dev - 0.2).abs() < 1e-15);
        assert!(f.std_dev < 1e-15);
        assert!((f.frobenius_norm - 0.2 * 135f64.sqrt()).abs() < 1e-12);
        assert!((f.frobenius_norm - 2.324).abs() < 1e-3);
        assert_eq!(f.sparsity, 0.0);
        assert_eq!(f.max_abs_dev, 0.2);
        assert!(f.variance_pattern < 1e-30);
    }

    #[test]
    fn small_hand_computed_features() {
        let m = RealMatrix::from_rows(vec![vec![0.1, 0.0], vec![0.3, 0.0]]).unwrap();
        let f = extract_features(&m).unwrap();
        assert!((f.mean_dev - 0.1).abs() < 1e-15);
        assert_eq!(f.sparsity, 0.5);
        assert!((f.frobenius_norm - 0.1f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.max_abs_dev, 0.3);
        // column variances 0.01 and 0 → their variance is 0.005² = 2.5e-5
        assert!((f.variance_pattern - 2.5e-5).abs() < 1e-15);
        // entries 0.1, 0, 0.3, 0 around mean 0.1 → variance 0.015
        assert!((f.std_dev - 0.015f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(extract_features(&RealMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn classification_rule_order() {
        assert_eq!(classify(&fv(0.20, 0.5)), NoiseLabel::PhaseDamping);
        assert_eq!(classify(&fv(0.05, -0.2)), NoiseLabel::AmplitudeDamping);
        assert_eq!(classify(&fv(0.05, 0.01)), NoiseLabel::Depolarizing);
        // boundaries are strict
        assert_eq!(classify(&fv(0.12, 0.13)), NoiseLabel::Depolarizing);
    }

    #[test]
    fn estimator_examples() {
        let p = estimate_parameter(NoiseLabel::Depolarizing, &fv(0.0, 0.107));
        assert!((p - 0.050).abs() < 1e-12);
        let l = estimate_parameter(NoiseLabel::PhaseDamping, &fv(0.1489, 0.0));
        assert!((l - 0.0800).abs() < 1e-4);
        let mut a = fv(0.0, 0.144);
        a.variance_pattern = 1e-4;
        let g = estimate_parameter(NoiseLabel::AmplitudeDamping, &a);
        assert!((g - 0.100).abs() < 1e-12);
    }

    #[test]
    fn estimates_are_clamped() {
        assert_eq!(estimate_parameter(NoiseLabel::Depolarizing, &fv(0.0, 5.0)), 1.0);
        let mut a = fv(0.0, 0.0);
        a.variance_pattern = 1.0;
        assert_eq!(estimate_parameter(NoiseLabel::AmplitudeDamping, &a), 1.0);
        assert_eq!(estimate_parameter(NoiseLabel::PhaseDamping, &fv(1.0, 0.0)), 0.0);
    }

    #[test]
    fn zero_matrix_diagnosis() {
        // sparsity 1 > 0.12 fires first
        let d = diagnose(&RealMatrix::zeros(9, 15), &ClassifierConfig::default(), &EstimatorConstants::default()).unwrap();
        assert_eq!(d.label, NoiseLabel::PhaseDamping);
        assert_eq!(d.estimated_parameter, 0.0);
    }

    #[test]
    fn fit_through_origin_basics() {
        assert_eq!(fit_through_origin(&[(1.0, 2.0), (2.0, 4.0)]), Some(2.0));
        assert_eq!(fit_through_origin(&[(0.0, 1.0)]), None);
        assert_eq!(fit_through_origin(&[(1.0, -1.0)]), None);
    }
}
