//! Pauli expectation values, exact and shot-sampled.
//!
//! Sampled estimates rotate the state into the observable's eigenbasis, read
//! the computational-basis distribution off the diagonal and draw shots from it.
//! Every (state, observable) cell gets its own shot budget and its own random
//! stream, so a fingerprint never depends on evaluation order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qlinalg::{DensityMatrix, Pauli, PauliString, PSD_TOL};
use crate::suite::Gate;

/// Shot budget per cell, or `Exact` for the infinite-shot limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shots {
    Exact,
    Count(u32),
}

impl Shots {
    pub fn count(self) -> Option<u32> {
        match self {
            Shots::Exact => None,
            Shots::Count(n) => Some(n),
        }
    }

    pub fn is_exact(self) -> bool {
        self == Shots::Exact
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Shots::Exact);
        }
        match s.parse::<u32>() {
            Ok(0) => Err(Error::invalid("shots must be at least 1")),
            Ok(n) => Ok(Shots::Count(n)),
            Err(_) => Err(Error::invalid(format!("shots must be a positive integer or 'exact', got '{s}'"))),
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => serializer.serialize_str("exact"),
            Shots::Count(n) => serializer.serialize_u32(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u32),
            Label(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(0) => Err(serde::de::Error::custom("shots must be at least 1")),
            Repr::Count(n) => Ok(Shots::Count(n)),
            Repr::Label(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotPlan {
    pub shots: Shots,
    pub master_seed: u64,
}

impl ShotPlan {
    pub fn new(shots: Shots, master_seed: u64) -> Self {
        Self { shots, master_seed }
    }

    pub fn exact() -> Self {
        Self::new(Shots::Exact, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectationEstimate {
    pub value: f64,
    pub shots_used: u32,
    /// `√((1 − value²)/shots)`
    pub standard_error: f64,
}

/// `Re tr(ρP)`.
pub fn exact_expectation(rho: &DensityMatrix, p: &PauliString) -> Result<f64> {
    if p.num_qubits() != rho.num_qubits() {
        return Err(Error::invalid(format!(
            "observable {p} acts on {} qubits, state has {}",
            p.num_qubits(),
            rho.num_qubits()
        )));
    }
    let tr = rho.matrix().matmul(&p.matrix())?.trace();
    if tr.im.abs() > PSD_TOL {
        return Err(Error::integrity(format!(
            "⟨{p}⟩ has imaginary part {:e}; state is not Hermitian",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// Gates taking the eigenbasis of `p` to the computational basis: X ↦ h, Y ↦ sdg·h.
pub fn eigenbasis_rotation(p: &PauliString) -> Vec<Gate> {
    let mut gates = Vec::new();
    for (q, op) in p.ops().iter().enumerate() {
        match op {
            Pauli::X => gates.push(Gate::H(q)),
            Pauli::Y => {
                gates.push(Gate::Sdg(q));
                gates.push(Gate::H(q));
            }
            Pauli::I | Pauli::Z => {}
        }
    }
    gates
}

/// Born-rule distribution of `p`'s eigenbasis measurement on `rho`.
///
/// Entries down to `-PSD_TOL` are clamped to zero and the vector renormalized;
/// anything more negative is a numerical-integrity failure.
pub fn measurement_distribution(rho: &DensityMatrix, p: &PauliString) -> Result<Vec<f64>> {
    let mut rotated = rho.clone();
    for g in eigenbasis_rotation(p) {
        rotated = rotated.evolve(&g.unitary(rho.num_qubits())?)?;
    }
    let mut probs = rotated.diagonal();
    if let Some(&bad) = probs.iter().find(|&&x| x < -PSD_TOL) {
        return Err(Error::integrity(format!("negative outcome probability {bad:e}")));
    }
    for x in probs.iter_mut() {
        *x = x.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::integrity("outcome distribution has no mass"));
    }
    probs.iter_mut().for_each(|x| *x /= total);
    Ok(probs)
}

/// Eigenvalue (±1) of `p` for computational outcome `bits`.
pub fn outcome_eigenvalue(p: &PauliString, bits: usize) -> f64 {
    let n = p.num_qubits();
    let parity = p
        .ops()
        .iter()
        .enumerate()
        .filter(|(_, &op)| op != Pauli::I)
        .map(|(q, _)| (bits >> (n - 1 - q)) & 1)
        .sum::<usize>()
        & 1;
    if parity == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Mean eigenvalue over `shots` draws from the rotated state.
///
/// Draws come from a ChaCha8 stream keyed by `cell_seed` and are mapped onto
/// outcomes by inverse CDF, so identical inputs give bit-identical results on
/// every platform.
pub fn sample_expectation(
    rho: &DensityMatrix,
    p: &PauliString,
    shots: u32,
    cell_seed: u64,
) -> Result<ExpectationEstimate> {
    if p.num_qubits() != rho.num_qubits() {
        return Err(Error::invalid(format!(
            "observable {p} acts on {} qubits, state has {}",
            p.num_qubits(),
            rho.num_qubits()
        )));
    }
    if p.is_identity() {
        return Err(Error::invalid("identity observable carries no information"));
    }
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let probs = measurement_distribution(rho, p)?;
    let eigen: Vec<f64> = (0..probs.len()).map(|b| outcome_eigenvalue(p, b)).collect();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &x in &probs {
        acc += x;
        cdf.push(acc);
    }
    // rounding can leave the CDF a hair below 1
    let last_possible = probs.iter().rposition(|&x| x > 0.0).expect("distribution has mass");

    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
    let mut sum = 0.0;
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let idx = cdf.iter().position(|&c| u < c).unwrap_or(last_possible);
        sum += eigen[idx];
    }
    let value = sum / f64::from(shots);
    Ok(ExpectationEstimate {
        value,
        shots_used: shots,
        standard_error: ((1.0 - value * value).max(0.0) / f64::from(shots)).sqrt(),
    })
}

const SEED_DOMAIN: u64 = 0x5348_4144_4f57_5052;

/// SplitMix64 output function; a bijection on `u64`.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix64(mix64(master ⊕ DOMAIN) ⊕ (state << 32 | observable))`.
///
/// Both mixing steps are bijective, so cells with indices below 2³² always get
/// distinct seeds under one master seed.
pub fn derive_cell_seed(master_seed: u64, state_index: u32, observable_index: u32) -> u64 {
    let cell = (u64::from(state_index) << 32) | u64::from(observable_index);
    mix64(mix64(master_seed ^ SEED_DOMAIN) ^ cell)
}
