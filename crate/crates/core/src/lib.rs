//! Noise fingerprinting for quantum simulators.
//!
//! A fixed suite of two-qubit reference states is run on a noisy backend, a
//! set of Pauli observables is estimated on each output, and the deviations
//! from the analytic noiseless values form a state × observable fingerprint
//! matrix. Fingerprints from different backends are compared by Frobenius
//! distance against the distance expected from shot noise alone, and a single
//! fingerprint can be classified by noise channel with a strength estimate.
//!
//! ```
//! use shadowprint::prelude::*;
//!
//! let noise = NoiseConfig::new(ChannelName::PhaseDamping, 0.08, 2).unwrap();
//! let backend = BuiltinBackend::new(VariantProfile::variant_a(), noise).unwrap();
//! let suite = ReferenceSuite::default();
//! let fp = build_fingerprint(&backend, &suite, ShotPlan::exact(), None).unwrap();
//! let features = extract_features(&fp.deviations).unwrap();
//! assert_eq!(classify(&features), NoiseLabel::PhaseDamping);
//! ```

pub mod analysis;
pub mod backend;
pub mod bridge;
pub mod channels;
pub mod conformance;
pub mod cost;
pub mod error;
pub mod estimation;
pub mod fingerprint;
pub mod format;
pub mod heatmap;
pub mod qlinalg;
pub mod suite;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{
        calibrate, classify, classify_with, diagnose, estimate_parameter, estimate_parameter_with,
        extract_features, CalibrationTargets, ClassifierConfig, EstimatorConstants, FeatureVector,
        NoiseDiagnosis, NoiseLabel,
    };
    pub use crate::backend::{Backend, BackendKind, BuiltinBackend, NoiseConfig, VariantProfile};
    pub use crate::channels::{ChannelName, DepolarizingConvention, KrausChannel};
    pub use crate::estimation::{ShotPlan, Shots};
    pub use crate::fingerprint::{build_fingerprint, frobenius_distance, noise_floor, FingerprintMatrix};
    pub use crate::suite::ReferenceSuite;
}
