//! Reference states (as preparation circuits) and the observables measured on them.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{embed_single, ComplexMatrix, DensityMatrix, PauliString, MAX_QUBITS};

pub const DEFAULT_SUITE_VERSION: &str = "suite_v1";
pub const CUSTOM_SUITE_VERSION: &str = "custom";

/// Gate vocabulary shared by preparation circuits, basis rotations and the bridge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub enum Gate {
    H(usize),
    X(usize),
    S(usize),
    Sdg(usize),
    Cx { control: usize, target: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GateRepr {
    Single(String, usize),
    Double(String, usize, usize),
}

impl TryFrom<GateRepr> for Gate {
    type Error = Error;

    fn try_from(repr: GateRepr) -> Result<Self> {
        match repr {
            GateRepr::Single(name, q) => Gate::single(&name, q),
            GateRepr::Double(name, c, t) if name == "cx" => Gate::cx(c, t),
            GateRepr::Double(name, ..) if matches!(name.as_str(), "h" | "x" | "s" | "sdg") => {
                Err(Error::invalid(format!("gate '{name}' does not take two qubits")))
            }
            GateRepr::Double(name, ..) => Err(Error::invalid(format!("unknown gate '{name}'"))),
        }
    }
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        match g {
            Gate::Cx { control, target } => GateRepr::Double("cx".into(), control, target),
            Gate::H(q) | Gate::X(q) | Gate::S(q) | Gate::Sdg(q) => GateRepr::Single(g.name().into(), q),
        }
    }
}

impl Gate {
    pub fn single(name: &str, qubit: usize) -> Result<Self> {
        match name {
            "h" => Ok(Gate::H(qubit)),
            "x" => Ok(Gate::X(qubit)),
            "s" => Ok(Gate::S(qubit)),
            "sdg" => Ok(Gate::Sdg(qubit)),
            "cx" => Err(Error::invalid("gate 'cx' needs a control and a target")),
            other => Err(Error::invalid(format!("unknown gate '{other}'"))),
        }
    }

    pub fn cx(control: usize, target: usize) -> Result<Self> {
        if control == target {
            return Err(Error::invalid("cx control and target must differ"));
        }
        Ok(Gate::Cx { control, target })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::Cx { .. } => "cx",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::S(q) | Gate::Sdg(q) => vec![q],
            Gate::Cx { control, target } => vec![control, target],
        }
    }

    /// Full `2^n × 2^n` unitary.
    pub fn unitary(&self, num_qubits: usize) -> Result<ComplexMatrix> {
        if let Some(&q) = self.qubits().iter().find(|&&q| q >= num_qubits) {
            return Err(Error::invalid(format!(
                "gate {} addresses qubit {q} on a {num_qubits}-qubit register",
                self.name()
            )));
        }
        let c = |re, im| Complex64::new(re, im);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let one_qubit = |q: usize, m: [Complex64; 4]| {
            let op = ComplexMatrix::new(2, 2, m.to_vec()).expect("finite 2x2");
            embed_single(&op, q, num_qubits)
        };
        match *self {
            Gate::H(q) => one_qubit(q, [c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]),
            Gate::X(q) => one_qubit(q, [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            Gate::S(q) => one_qubit(q, [c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)]),
            Gate::Sdg(q) => one_qubit(q, [c(1., 0.), c(0., 0.), c(0., 0.), c(0., -1.)]),
            Gate::Cx { control, target } => {
                let dim = 1usize << num_qubits;
                let cbit = 1usize << (num_qubits - 1 - control);
                let tbit = 1usize << (num_qubits - 1 - target);
                let mut m = ComplexMatrix::zeros(dim, dim);
                for b in 0..dim {
                    let image = if b & cbit != 0 { b ^ tbit } else { b };
                    m.set(image, b, c(1., 0.));
                }
                Ok(m)
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Cx { control, target } => write!(f, "cx {control} {target}"),
            g => write!(f, "{} {}", g.name(), g.qubits()[0]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepCircuit {
    pub id: String,
    pub gates: Vec<Gate>,
}

impl PrepCircuit {
    pub fn new(id: impl Into<String>, gates: Vec<Gate>) -> Self {
        Self { id: id.into(), gates }
    }

    /// Output statevector of the circuit applied to `|0…0⟩`.
    pub fn statevector(&self, num_qubits: usize) -> Result<ComplexMatrix> {
        let mut psi = ComplexMatrix::basis_column(1 << num_qubits, 0);
        for g in &self.gates {
            psi = g.unitary(num_qubits)?.matmul(&psi)?;
        }
        Ok(psi)
    }
}

/// Pure density matrix of the noiseless circuit output.
pub fn prepare_state(circuit: &PrepCircuit, num_qubits: usize) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(num_qubits, &circuit.statevector(num_qubits)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSuite {
    pub version: String,
    pub num_qubits: usize,
    pub states: Vec<PrepCircuit>,
    pub observables: Vec<PauliString>,
}

#[derive(Deserialize)]
struct SuiteFile {
    version: Option<String>,
    num_qubits: Option<usize>,
    states: Vec<PrepCircuit>,
    observables: Vec<PauliString>,
}

/// Nine states in row order: four basis states, four superpositions, one Bell pair.
pub fn default_states() -> Vec<PrepCircuit> {
    use Gate::*;
    vec![
        PrepCircuit::new("00", vec![]),
        PrepCircuit::new("01", vec![X(1)]),
        PrepCircuit::new("10", vec![X(0)]),
        PrepCircuit::new("11", vec![X(0), X(1)]),
        PrepCircuit::new("plus0", vec![H(0)]),
        PrepCircuit::new("0plus", vec![H(1)]),
        PrepCircuit::new("plusplus", vec![H(0), H(1)]),
        PrepCircuit::new("i0", vec![H(0), S(0)]),
        PrepCircuit::new("bell_phi_plus", vec![H(0), Cx { control: 0, target: 1 }]),
    ]
}

/// All fifteen non-identity two-qubit Pauli strings, single-qubit ones first.
pub fn default_observables() -> Vec<PauliString> {
    [
        "XI", "YI", "ZI", "IX", "IY", "IZ", "XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ",
    ]
    .iter()
    .map(|s| s.parse().expect("valid label"))
    .collect()
}

impl Default for ReferenceSuite {
    fn default() -> Self {
        Self {
            version: DEFAULT_SUITE_VERSION.into(),
            num_qubits: 2,
            states: default_states(),
            observables: default_observables(),
        }
    }
}

impl ReferenceSuite {
    pub fn new(
        version: impl Into<String>,
        num_qubits: usize,
        states: Vec<PrepCircuit>,
        observables: Vec<PauliString>,
    ) -> Result<Self> {
        let suite = Self {
            version: version.into(),
            num_qubits,
            states,
            observables,
        };
        suite.validate()?;
        Ok(suite)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn num_cells(&self) -> usize {
        self.num_states() * self.num_observables()
    }

    pub fn state_ids(&self) -> Vec<String> {
        self.states.iter().map(|s| s.id.clone()).collect()
    }

    pub fn observable_labels(&self) -> Vec<String> {
        self.observables.iter().map(|o| o.to_string()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "suite qubit count must be in 1..={MAX_QUBITS}, got {}",
                self.num_qubits
            )));
        }
        if self.states.is_empty() || self.observables.is_empty() {
            return Err(Error::invalid("suite needs at least one state and one observable"));
        }
        let mut ids = HashSet::new();
        for state in &self.states {
            if !ids.insert(state.id.as_str()) {
                return Err(Error::invalid(format!("duplicate state id '{}'", state.id)));
            }
            for g in &state.gates {
                if let Gate::Cx { control, target } = g {
                    if control == target {
                        return Err(Error::invalid("cx control and target must differ"));
                    }
                }
                if g.qubits().iter().any(|&q| q >= self.num_qubits) {
                    return Err(Error::invalid(format!("state '{}': gate {g} out of range", state.id)));
                }
            }
        }
        let mut labels = HashSet::new();
        for obs in &self.observables {
            if obs.num_qubits() != self.num_qubits {
                return Err(Error::invalid(format!(
                    "observable {obs} has {} qubits, suite has {}",
                    obs.num_qubits(),
                    self.num_qubits
                )));
            }
            if obs.is_identity() {
                return Err(Error::invalid(format!("observable {obs} is the identity")));
            }
            if !labels.insert(obs.to_string()) {
                return Err(Error::invalid(format!("duplicate observable {obs}")));
            }
        }
        Ok(())
    }

    /// Parses a suite file; missing `version` becomes `"custom"`, missing `num_qubits` becomes 2.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SuiteFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(
            file.version.unwrap_or_else(|| CUSTOM_SUITE_VERSION.into()),
            file.num_qubits.unwrap_or(2),
            file.states,
            file.observables,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serializes")
    }

    /// Two suites produce comparable fingerprints only if everything matches.
    pub fn ensure_comparable(&self, other: &Self) -> Result<()> {
        if self.version != other.version {
            return Err(Error::SuiteMismatch(format!(
                "suite versions differ ('{}' vs '{}')",
                self.version, other.version
            )));
        }
        if self != other {
            return Err(Error::SuiteMismatch(format!(
                "suite '{}' contents differ (states or observables)",
                self.version
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amplitudes(id: &str) -> Vec<Complex64> {
        let c = default_states().into_iter().find(|s| s.id == id).unwrap();
        c.statevector(2).unwrap().as_slice().to_vec()
    }

    fn close(a: &[Complex64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, &y)| (x.re - y).abs() < 1e-12 && x.im.abs() < 1e-12)
    }

    #[test]
    fn default_state_amplitudes() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&amplitudes("00"), &[1., 0., 0., 0.]));
        assert!(close(&amplitudes("01"), &[0., 1., 0., 0.]));
        assert!(close(&amplitudes("10"), &[0., 0., 1., 0.]));
        assert!(close(&amplitudes("bell_phi_plus"), &[h, 0., 0., h]));
        assert!(close(&amplitudes("plus0"), &[h, 0., h, 0.]));
        let i0 = amplitudes("i0");
        assert!((i0[0].re - h).abs() < 1e-12 && (i0[2].im - h).abs() < 1e-12);
    }

    #[test]
    fn default_state_ids_in_order() {
        let ids: Vec<_> = default_states().into_iter().map(|s| s.id).collect();
        assert_eq!(
            ids,
            ["00", "01", "10", "11", "plus0", "0plus", "plusplus", "i0", "bell_phi_plus"]
        );
        assert!(default_states()[0].gates.is_empty());
    }

    #[test]
    fn default_observables_shape() {
        let obs = default_observables();
        assert_eq!(obs.len(), 15);
        let labels: Vec<_> = obs.iter().map(|o| o.to_string()).collect();
        assert!(labels.contains(&"XX".to_string()) && labels.contains(&"XZ".to_string()));
        assert!(!labels.contains(&"II".to_string()));
        assert_eq!(&labels[..6], ["XI", "YI", "ZI", "IX", "IY", "IZ"]);
    }

    #[test]
    fn cx_truth_table() {
        let cx = Gate::cx(0, 1).unwrap().unitary(2).unwrap();
        // |10⟩ → |11⟩, |11⟩ → |10⟩, |0x⟩ fixed
        for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            assert_eq!(cx.get(to, from).re, 1.0);
        }
        let rev = Gate::cx(1, 0).unwrap().unitary(2).unwrap();
        for (from, to) in [(0, 0), (2, 2), (1, 3), (3, 1)] {
            assert_eq!(rev.get(to, from).re, 1.0);
        }
    }

    #[test]
    fn gate_json_shape() {
        let gates = vec![Gate::H(0), Gate::cx(0, 1).unwrap(), Gate::Sdg(1)];
        let json = serde_json::to_string(&gates).unwrap();
        assert_eq!(json, r#"[["h",0],["cx",0,1],["sdg",1]]"#);
        let back: Vec<Gate> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, gates);
        assert!(serde_json::from_str::<Gate>(r#"["t",0]"#).is_err());
        assert!(serde_json::from_str::<Gate>(r#"["h",0,1]"#).is_err());
        assert!(serde_json::from_str::<Gate>(r#"["cx",1,1]"#).is_err());
    }

    #[test]
    fn suite_file_parsing_and_validation() {
        let text = r#"{"states":[{"id":"a","gates":[]},{"id":"b","gates":[["x",1]]}],"observables":["ZI","IZ"]}"#;
        let suite = ReferenceSuite::from_json(text).unwrap();
        assert_eq!(suite.version, CUSTOM_SUITE_VERSION);
        assert_eq!(suite.num_cells(), 4);

        let dup = r#"{"states":[{"id":"a","gates":[]},{"id":"a","gates":[]}],"observables":["ZI"]}"#;
        assert!(ReferenceSuite::from_json(dup).is_err());
        let ident = r#"{"states":[{"id":"a","gates":[]}],"observables":["II"]}"#;
        assert!(ReferenceSuite::from_json(ident).is_err());
        let wrong_len = r#"{"states":[{"id":"a","gates":[]}],"observables":["ZZZ"]}"#;
        assert!(ReferenceSuite::from_json(wrong_len).is_err());
        let oob = r#"{"states":[{"id":"a","gates":[["h",2]]}],"observables":["ZI"]}"#;
        assert!(ReferenceSuite::from_json(oob).is_err());
        let bad_gate = r#"{"states":[{"id":"a","gates":[["t",0]]}],"observables":["ZI"]}"#;
        assert!(matches!(ReferenceSuite::from_json(bad_gate), Err(Error::Format(_))));
    }

    #[test]
    fn default_suite_round_trips_through_json() {
        let suite = ReferenceSuite::default();
        let back = ReferenceSuite::from_json(&suite.to_json()).unwrap();
        assert_eq!(back, suite);
        suite.ensure_comparable(&back).unwrap();
    }

    #[test]
    fn comparability() {
        let a = ReferenceSuite::default();
        let mut b = a.clone();
        b.version = "suite_v2".into();
        assert!(matches!(a.ensure_comparable(&b), Err(Error::SuiteMismatch(_))));
        let mut c = a.clone();
        c.observables.pop();
        assert!(matches!(a.ensure_comparable(&c), Err(Error::SuiteMismatch(_))));
    }
}
