//! Measurement-count models: suite-based fingerprinting versus process tomography.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest register the scaling report accepts.
pub const MAX_SCALING_QUBITS: u32 = 16;

/// Figures reported for an 8-qubit register at 500 shots.
pub const REPORTED_QUBITS: u32 = 8;
pub const REPORTED_SHOTS: u64 = 500;
pub const REPORTED_SHADOW_MEASUREMENTS: u128 = 864_000;
pub const REPORTED_TOMOGRAPHY_MEASUREMENTS: f64 = 2.1e12;

/// `4ⁿ` preparations × `4ⁿ` measurement settings × shots.
pub fn tomography_cost(n: u32, shots: u64) -> Result<u128> {
    if n == 0 {
        return Err(Error::invalid("qubit count must be at least 1"));
    }
    16u128
        .checked_pow(n)
        .and_then(|settings| settings.checked_mul(u128::from(shots)))
        .ok_or_else(|| Error::invalid(format!("tomography cost overflows at n = {n}")))
}

/// Reference states in the scaled suite: 2n basis-like, 2n superpositions, n−1 entangled.
pub fn suite_states(n: u32) -> u64 {
    5 * u64::from(n) - 1
}

/// Observables in the scaled suite: 3n single-qubit Paulis, 9(n−1) nearest-neighbour correlators.
pub fn suite_observables(n: u32) -> u64 {
    12 * u64::from(n) - 9
}

/// `k(n)·m(n)·shots`; 9·15·shots at two qubits.
pub fn shadow_cost(n: u32, shots: u64) -> Result<u128> {
    if n == 0 {
        return Err(Error::invalid("qubit count must be at least 1"));
    }
    Ok(u128::from(suite_states(n)) * u128::from(suite_observables(n)) * u128::from(shots))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub qubits: u32,
    pub shadow_measurements: u128,
    pub tomography_measurements: u128,
    /// `tomography / shadow`
    pub ratio: f64,
    /// Set only on the row matching the published 8-qubit, 500-shot configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported: Option<ReportedFigures>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportedFigures {
    pub shadow_measurements: u128,
    pub tomography_measurements: f64,
    /// Model tomography cost over the reported shadow figure.
    pub ratio_vs_reported_shadow: f64,
}

pub fn cost_report(n: u32, shots: u64) -> Result<CostReport> {
    let shadow = shadow_cost(n, shots)?;
    let tomography = tomography_cost(n, shots)?;
    let reported = (n == REPORTED_QUBITS && shots == REPORTED_SHOTS).then(|| ReportedFigures {
        shadow_measurements: REPORTED_SHADOW_MEASUREMENTS,
        tomography_measurements: REPORTED_TOMOGRAPHY_MEASUREMENTS,
        ratio_vs_reported_shadow: tomography as f64 / REPORTED_SHADOW_MEASUREMENTS as f64,
    });
    Ok(CostReport {
        qubits: n,
        shadow_measurements: shadow,
        tomography_measurements: tomography,
        ratio: tomography as f64 / shadow as f64,
        reported,
    })
}

/// Rows for `n = 1..=max_qubits`.
pub fn scaling_series(max_qubits: u32, shots: u64) -> Result<Vec<CostReport>> {
    if max_qubits == 0 || max_qubits > MAX_SCALING_QUBITS {
        return Err(Error::invalid(format!(
            "max qubits must be in 1..={MAX_SCALING_QUBITS}, got {max_qubits}"
        )));
    }
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    (1..=max_qubits).map(|n| cost_report(n, shots)).collect()
}
