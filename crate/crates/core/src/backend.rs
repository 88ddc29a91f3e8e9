//! Noisy simulator backends: the built-in density-matrix simulator and the
//! plumbing shared with bridged external simulators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, ChannelName, DepolarizingConvention, KrausChannel};
use crate::error::{Error, Result};
use crate::estimation::{exact_expectation, sample_expectation, Shots};
use crate::qlinalg::{DensityMatrix, PauliString};
use crate::suite::PrepCircuit;

/// Where noise is inserted during state preparation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplicationPolicy {
    /// Once on every noisy qubit after the whole preparation circuit.
    PerState,
    /// After every gate, on each noisy qubit that gate touches.
    PerGate,
}

/// One emulated platform semantics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantProfile {
    pub name: String,
    pub depolarizing: DepolarizingConvention,
    pub policy: ApplicationPolicy,
}

impl VariantProfile {
    pub fn variant_a() -> Self {
        Self {
            name: "variant-A".into(),
            depolarizing: DepolarizingConvention::PauliMix,
            policy: ApplicationPolicy::PerState,
        }
    }

    pub fn variant_b() -> Self {
        Self {
            name: "variant-B".into(),
            depolarizing: DepolarizingConvention::IdentityMix,
            policy: ApplicationPolicy::PerGate,
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "variant-A" => Ok(Self::variant_a()),
            "variant-B" => Ok(Self::variant_b()),
            other => Err(Error::invalid(format!(
                "unknown builtin profile '{other}' (expected variant-A or variant-B)"
            ))),
        }
    }
}

/// Named channel plus the qubits it acts on; the form carried in metadata and over the bridge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub channel: ChannelName,
    pub parameter: f64,
    pub qubits: Vec<usize>,
}

impl NoiseConfig {
    /// Noise on every qubit of an `num_qubits` register.
    pub fn new(channel: ChannelName, parameter: f64, num_qubits: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&parameter) {
            return Err(Error::invalid(format!("noise parameter must lie in [0, 1], got {parameter}")));
        }
        Ok(Self {
            channel,
            parameter,
            qubits: (0..num_qubits).collect(),
        })
    }

    pub fn noiseless(num_qubits: usize) -> Self {
        Self::new(ChannelName::Identity, 0.0, num_qubits).expect("valid")
    }
}

/// `builtin:<profile>` or `bridge:<command line>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Builtin(VariantProfile),
    Bridge(String),
}

impl BackendKind {
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Builtin(p) => write!(f, "builtin:{}", p.name),
            BackendKind::Bridge(cmd) => write!(f, "bridge:{cmd}"),
        }
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix("builtin:") {
            VariantProfile::builtin(name).map(BackendKind::Builtin)
        } else if let Some(cmd) = s.strip_prefix("bridge:") {
            if cmd.trim().is_empty() {
                return Err(Error::invalid("bridge backend needs a command line"));
            }
            Ok(BackendKind::Bridge(cmd.to_string()))
        } else {
            Err(Error::invalid(format!(
                "backend must be builtin:<profile> or bridge:<command>, got '{s}'"
            )))
        }
    }
}

/// Handshake data an external simulator advertises.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterInfo {
    pub name: String,
    pub version: String,
    #[serde(default)]
    pub channels: Vec<String>,
    #[serde(default)]
    pub gates: Vec<String>,
}

/// How a backend describes itself in fingerprint metadata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<VariantProfile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adapter: Option<AdapterInfo>,
}

/// A noisy simulator that returns observed expectation values cell by cell.
pub trait Backend: Sync {
    fn descriptor(&self) -> BackendDescriptor;

    fn noise(&self) -> &NoiseConfig;

    /// Observed `⟨observable⟩` after running `circuit` with noise.
    fn observe(
        &self,
        circuit: &PrepCircuit,
        num_qubits: usize,
        observable: &PauliString,
        shots: Shots,
        seed: u64,
    ) -> Result<f64>;

    /// Whether cells may be evaluated from several threads at once.
    fn parallel(&self) -> bool {
        true
    }
}

/// Exact density-matrix simulator with configurable semantics.
#[derive(Clone, Debug)]
pub struct BuiltinBackend {
    profile: VariantProfile,
    noise: NoiseConfig,
    channel: KrausChannel,
}

impl BuiltinBackend {
    pub fn new(profile: VariantProfile, noise: NoiseConfig) -> Result<Self> {
        let channel = KrausChannel::build(noise.channel, noise.parameter, profile.depolarizing)?;
        Ok(Self {
            profile,
            noise,
            channel,
        })
    }

    pub fn profile(&self) -> &VariantProfile {
        &self.profile
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    fn noisy_qubit(&self, q: usize) -> bool {
        self.noise.qubits.contains(&q)
    }

    /// Output of `circuit` with noise inserted according to the profile's policy.
    pub fn noisy_state(&self, circuit: &PrepCircuit, num_qubits: usize) -> Result<DensityMatrix> {
        if let Some(&q) = self.noise.qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::invalid(format!("noise targets qubit {q} on a {num_qubits}-qubit register")));
        }
        let noisy = !self.channel.is_identity();
        let mut rho = DensityMatrix::ground(num_qubits)?;
        for gate in &circuit.gates {
            rho = rho.evolve(&gate.unitary(num_qubits)?)?;
            if noisy && self.profile.policy == ApplicationPolicy::PerGate {
                for q in gate.qubits().into_iter().filter(|&q| self.noisy_qubit(q)) {
                    rho = apply_channel(&rho, &self.channel, q)?;
                }
            }
        }
        if noisy && self.profile.policy == ApplicationPolicy::PerState {
            for q in (0..num_qubits).filter(|&q| self.noisy_qubit(q)) {
                rho = apply_channel(&rho, &self.channel, q)?;
            }
        }
        Ok(rho)
    }
}

impl Backend for BuiltinBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            id: BackendKind::Builtin(self.profile.clone()).id(),
            profile: Some(self.profile.clone()),
            adapter: None,
        }
    }

    fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    fn observe(
        &self,
        circuit: &PrepCircuit,
        num_qubits: usize,
        observable: &PauliString,
        shots: Shots,
        seed: u64,
    ) -> Result<f64> {
        let rho = self.noisy_state(circuit, num_qubits)?;
        match shots {
            Shots::Exact => exact_expectation(&rho, observable),
            Shots::Count(n) => sample_expectation(&rho, observable, n, seed).map(|e| e.value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{default_states, Gate};

    fn circuit(id: &str) -> PrepCircuit {
        default_states().into_iter().find(|s| s.id == id).unwrap()
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_backends() {
        assert_eq!(
            "builtin:variant-A".parse::<BackendKind>().unwrap(),
            BackendKind::Builtin(VariantProfile::variant_a())
        );
        assert_eq!(
            "bridge:python3 adapter.py".parse::<BackendKind>().unwrap(),
            BackendKind::Bridge("python3 adapter.py".into())
        );
        assert!("builtin:variant-Z".parse::<BackendKind>().is_err());
        assert!("bridge:  ".parse::<BackendKind>().is_err());
        assert!("qiskit".parse::<BackendKind>().is_err());
        let b = BackendKind::Builtin(VariantProfile::variant_b());
        assert_eq!(b.to_string().parse::<BackendKind>().unwrap(), b);
    }

    #[test]
    fn amplitude_damping_decays_both_qubits_of_11() {
        let gamma = 0.10;
        let noise = NoiseConfig::new(ChannelName::AmplitudeDamping, gamma, 2).unwrap();
        let backend = BuiltinBackend::new(VariantProfile::variant_a(), noise).unwrap();
        let zi = backend.observe(&circuit("11"), 2, &ps("ZI"), Shots::Exact, 0).unwrap();
        // qubit 0 population of |1⟩ drops from 1 to 1−γ: ⟨Z⟩ = −1 + 2γ
        assert!((zi - (2.0 * gamma - 1.0)).abs() < 1e-12);
        let zz = backend.observe(&circuit("11"), 2, &ps("ZZ"), Shots::Exact, 0).unwrap();
        assert!((zz - (1.0 - 2.0 * gamma).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn per_gate_policy_counts_gates() {
        let p = 0.05;
        let noise = NoiseConfig::new(ChannelName::Depolarizing, p, 2).unwrap();
        let b = BuiltinBackend::new(VariantProfile::variant_b(), noise.clone()).unwrap();
        // no gates, no noise
        assert_eq!(b.observe(&circuit("00"), 2, &ps("ZI"), Shots::Exact, 0).unwrap(), 1.0);
        // i0 = s·h on qubit 0: two identity-mix applications shrink Y by (1−p)²
        let y = b.observe(&circuit("i0"), 2, &ps("YI"), Shots::Exact, 0).unwrap();
        assert!((y - (1.0 - p).powi(2)).abs() < 1e-12);

        let a = BuiltinBackend::new(VariantProfile::variant_a(), noise).unwrap();
        let z = a.observe(&circuit("00"), 2, &ps("ZI"), Shots::Exact, 0).unwrap();
        assert!((z - (1.0 - 4.0 * p / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn noise_restricted_to_listed_qubits() {
        let mut noise = NoiseConfig::new(ChannelName::AmplitudeDamping, 0.5, 2).unwrap();
        noise.qubits = vec![1];
        let b = BuiltinBackend::new(VariantProfile::variant_a(), noise).unwrap();
        let zi = b.observe(&circuit("11"), 2, &ps("ZI"), Shots::Exact, 0).unwrap();
        approx::assert_abs_diff_eq!(zi, -1.0, epsilon = 1e-12);
        let iz = b.observe(&circuit("11"), 2, &ps("IZ"), Shots::Exact, 0).unwrap();
        assert!(iz.abs() < 1e-12);

        let mut bad = NoiseConfig::noiseless(2);
        bad.qubits = vec![5];
        let b = BuiltinBackend::new(VariantProfile::variant_a(), bad).unwrap();
        assert!(b.noisy_state(&PrepCircuit::new("x", vec![Gate::H(0)]), 2).is_err());
    }

    #[test]
    fn rejects_bad_parameter() {
        assert!(NoiseConfig::new(ChannelName::PhaseDamping, 1.5, 2).is_err());
    }
}
