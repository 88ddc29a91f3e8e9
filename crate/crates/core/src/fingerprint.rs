//! Deviation fingerprints: observed minus ideal expectations over a reference suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendDescriptor, NoiseConfig};
use crate::error::{Error, Result};
use crate::estimation::{derive_cell_seed, exact_expectation, ShotPlan, Shots};
use crate::suite::{prepare_state, ReferenceSuite};

/// Dense row-major real matrix; serialized as an array of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Elementwise `self − other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Serialize for RealMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            seq.serialize_element(self.row(r))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Self::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingerprintMetadata {
    pub backend: BackendDescriptor,
    pub noise: NoiseConfig,
    pub shots: Shots,
    pub master_seed: u64,
    pub suite_version: String,
    /// Left unset unless the caller supplies one, so reruns stay byte-identical.
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintMatrix {
    pub metadata: FingerprintMetadata,
    pub suite: ReferenceSuite,
    pub ideal: RealMatrix,
    pub observed: RealMatrix,
    pub deviations: RealMatrix,
}

impl FingerprintMatrix {
    /// Assembles a fingerprint, recomputing deviations and checking shapes and ranges.
    pub fn from_parts(
        metadata: FingerprintMetadata,
        suite: ReferenceSuite,
        ideal: RealMatrix,
        observed: RealMatrix,
    ) -> Result<Self> {
        let (k, n) = (suite.num_states(), suite.num_observables());
        for (name, m) in [("ideal", &ideal), ("observed", &observed)] {
            if (m.rows(), m.cols()) != (k, n) {
                return Err(Error::invalid(format!(
                    "{name} matrix is {}x{}, suite needs {k}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.max_abs() > 1.0 + 1e-9 {
                return Err(Error::integrity(format!("{name} expectation outside [-1, 1]")));
            }
        }
        let deviations = observed.sub(&ideal)?;
        Ok(Self {
            metadata,
            suite,
            ideal,
            observed,
            deviations,
        })
    }

    pub fn num_states(&self) -> usize {
        self.deviations.rows()
    }

    pub fn num_observables(&self) -> usize {
        self.deviations.cols()
    }

    pub fn num_entries(&self) -> usize {
        self.deviations.len()
    }
}

/// Ideal expectations of the noiseless suite, computed analytically.
pub fn ideal_matrix(suite: &ReferenceSuite) -> Result<RealMatrix> {
    let mut data = Vec::with_capacity(suite.num_cells());
    for circuit in &suite.states {
        let rho = prepare_state(circuit, suite.num_qubits)?;
        for obs in &suite.observables {
            data.push(exact_expectation(&rho, obs)?);
        }
    }
    RealMatrix::new(suite.num_states(), suite.num_observables(), data)
}

/// Runs every (state, observable) cell on `backend` and forms `F = observed − ideal`.
///
/// Cell `(i, j)` is seeded with `derive_cell_seed(plan.master_seed, i, j)`, so the
/// result does not depend on evaluation order or thread count. The first failing
/// cell in row-major order is reported.
pub fn build_fingerprint(
    backend: &dyn Backend,
    suite: &ReferenceSuite,
    plan: ShotPlan,
    timestamp: Option<String>,
) -> Result<FingerprintMatrix> {
    suite.validate()?;
    let ideal = ideal_matrix(suite)?;
    let n = suite.num_observables();
    let run_cell = |cell: usize| -> Result<f64> {
        let (i, j) = (cell / n, cell % n);
        let seed = derive_cell_seed(plan.master_seed, i as u32, j as u32);
        backend
            .observe(&suite.states[i], suite.num_qubits, &suite.observables[j], plan.shots, seed)
            .map_err(|e| match e {
                Error::NumericalIntegrity(_) => e,
                other => Error::BackendCell {
                    state: i,
                    observable: j,
                    message: other.to_string(),
                },
            })
    };
    let cells: Vec<Result<f64>> = if backend.parallel() {
        (0..suite.num_cells()).into_par_iter().map(run_cell).collect()
    } else {
        (0..suite.num_cells()).map(run_cell).collect()
    };
    let observed = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    let observed = RealMatrix::new(suite.num_states(), n, observed)?;
    let metadata = FingerprintMetadata {
        backend: backend.descriptor(),
        noise: backend.noise().clone(),
        shots: plan.shots,
        master_seed: plan.master_seed,
        suite_version: suite.version.clone(),
        timestamp,
    };
    FingerprintMatrix::from_parts(metadata, suite.clone(), ideal, observed)
}

/// `‖F_a − F_b‖_F`; only defined for fingerprints over the same suite.
pub fn frobenius_distance(a: &FingerprintMatrix, b: &FingerprintMatrix) -> Result<f64> {
    Ok(difference_matrix(a, b)?.frobenius_norm())
}

/// `Δ = F_a − F_b`.
pub fn difference_matrix(a: &FingerprintMatrix, b: &FingerprintMatrix) -> Result<RealMatrix> {
    a.suite.ensure_comparable(&b.suite)?;
    if a.metadata.suite_version != b.metadata.suite_version {
        return Err(Error::SuiteMismatch("metadata suite versions differ".into()));
    }
    a.deviations
        .sub(&b.deviations)
        .map_err(|e| Error::SuiteMismatch(e.to_string()))
}

/// Expected Frobenius distance between two independent `shots`-shot fingerprints
/// of the same channel: `√(2·entries/shots)`.
pub fn noise_floor(num_entries: usize, shots: u32) -> f64 {
    (2.0 * num_entries as f64 / f64::from(shots)).sqrt()
}

/// Floor for two fingerprints with possibly different budgets: `√(N(1/s_a + 1/s_b))`;
/// an exact side contributes no shot noise. Equals [`noise_floor`] when both budgets match.
pub fn noise_floor_between(num_entries: usize, a: Shots, b: Shots) -> f64 {
    let inv = |s: Shots| s.count().map_or(0.0, |n| 1.0 / f64::from(n));
    (num_entries as f64 * (inv(a) + inv(b))).sqrt()
}
