//! Single-qubit CPTP noise channels in Kraus form.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{embed_single, ComplexMatrix, DensityMatrix, Pauli};

/// Completeness residual below which a Kraus set counts as trace preserving.
pub const CPTP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelName {
    Identity,
    Depolarizing,
    AmplitudeDamping,
    PhaseDamping,
}

impl ChannelName {
    pub const ALL: [ChannelName; 4] = [
        ChannelName::Identity,
        ChannelName::Depolarizing,
        ChannelName::AmplitudeDamping,
        ChannelName::PhaseDamping,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelName::Identity => "identity",
            ChannelName::Depolarizing => "depolarizing",
            ChannelName::AmplitudeDamping => "amplitude_damping",
            ChannelName::PhaseDamping => "phase_damping",
        }
    }
}

impl fmt::Display for ChannelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown channel '{s}'")))
    }
}

/// How a depolarizing probability `p` is spread over the Paulis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepolarizingConvention {
    /// `ρ → (1−p)ρ + p·I/2`
    IdentityMix,
    /// `ρ → (1−p)ρ + (p/3)(XρX + YρY + ZρZ)`
    PauliMix,
}

/// Which construction produced a channel's Kraus set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelVariant {
    Standard,
    IdentityMix,
    PauliMix,
}

impl From<DepolarizingConvention> for ChannelVariant {
    fn from(c: DepolarizingConvention) -> Self {
        match c {
            DepolarizingConvention::IdentityMix => ChannelVariant::IdentityMix,
            DepolarizingConvention::PauliMix => ChannelVariant::PauliMix,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    name: ChannelName,
    parameter: f64,
    variant: ChannelVariant,
    kraus_ops: Vec<ComplexMatrix>,
}

fn check_unit_interval(what: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("{what} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

fn real2(a: f64, b: f64, c: f64, d: f64) -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[a, b, c, d]).expect("finite 2x2")
}

impl KrausChannel {
    /// Arbitrary single-qubit Kraus set, not checked for completeness.
    pub fn from_kraus(name: ChannelName, parameter: f64, kraus_ops: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus_ops.is_empty() || kraus_ops.iter().any(|k| k.rows() != 2 || k.cols() != 2) {
            return Err(Error::invalid("Kraus operators must be a nonempty list of 2x2 matrices"));
        }
        Ok(Self {
            name,
            parameter,
            variant: ChannelVariant::Standard,
            kraus_ops,
        })
    }

    pub fn identity() -> Self {
        Self {
            name: ChannelName::Identity,
            parameter: 0.0,
            variant: ChannelVariant::Standard,
            kraus_ops: vec![ComplexMatrix::identity(2)],
        }
    }

    pub fn depolarizing(p: f64, convention: DepolarizingConvention) -> Result<Self> {
        check_unit_interval("depolarizing probability", p)?;
        let (w_id, w_pauli) = match convention {
            DepolarizingConvention::IdentityMix => (1.0 - 0.75 * p, p / 4.0),
            DepolarizingConvention::PauliMix => (1.0 - p, p / 3.0),
        };
        let mut ops = vec![ComplexMatrix::identity(2).scale(Complex64::new(w_id.sqrt(), 0.0))];
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            ops.push(pauli.matrix().scale(Complex64::new(w_pauli.sqrt(), 0.0)));
        }
        Ok(Self {
            name: ChannelName::Depolarizing,
            parameter: p,
            variant: convention.into(),
            kraus_ops: ops,
        })
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit_interval("amplitude damping rate", gamma)?;
        Ok(Self {
            name: ChannelName::AmplitudeDamping,
            parameter: gamma,
            variant: ChannelVariant::Standard,
            kraus_ops: vec![
                real2(1.0, 0.0, 0.0, (1.0 - gamma).sqrt()),
                real2(0.0, gamma.sqrt(), 0.0, 0.0),
            ],
        })
    }

    pub fn phase_damping(lambda: f64) -> Result<Self> {
        check_unit_interval("phase damping rate", lambda)?;
        Ok(Self {
            name: ChannelName::PhaseDamping,
            parameter: lambda,
            variant: ChannelVariant::Standard,
            kraus_ops: vec![
                real2(1.0, 0.0, 0.0, (1.0 - lambda).sqrt()),
                real2(0.0, 0.0, 0.0, lambda.sqrt()),
            ],
        })
    }

    /// Builds a named channel; `convention` only matters for depolarizing noise.
    pub fn build(name: ChannelName, parameter: f64, convention: DepolarizingConvention) -> Result<Self> {
        match name {
            ChannelName::Identity => {
                check_unit_interval("identity parameter", parameter)?;
                Ok(Self::identity())
            }
            ChannelName::Depolarizing => Self::depolarizing(parameter, convention),
            ChannelName::AmplitudeDamping => Self::amplitude_damping(parameter),
            ChannelName::PhaseDamping => Self::phase_damping(parameter),
        }
    }

    pub fn name(&self) -> ChannelName {
        self.name
    }

    pub fn parameter(&self) -> f64 {
        self.parameter
    }

    pub fn variant(&self) -> ChannelVariant {
        self.variant
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }

    pub fn is_identity(&self) -> bool {
        self.name == ChannelName::Identity
    }
}

pub fn make_depolarizing(p: f64, convention: DepolarizingConvention) -> Result<KrausChannel> {
    KrausChannel::depolarizing(p, convention)
}

pub fn make_amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    KrausChannel::amplitude_damping(gamma)
}

pub fn make_phase_damping(lambda: f64) -> Result<KrausChannel> {
    KrausChannel::phase_damping(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpCheck {
    pub valid: bool,
    /// `max |(Σ K†K − I)_{ij}|`
    pub residual: f64,
}

pub fn verify_cptp(ch: &KrausChannel) -> CptpCheck {
    let sum = ch
        .kraus_ops
        .iter()
        .map(|k| &k.conjugate_transpose() * k)
        .fold(ComplexMatrix::zeros(2, 2), |acc, m| &acc + &m);
    let residual = sum.max_abs_diff(&ComplexMatrix::identity(2));
    CptpCheck {
        valid: residual <= CPTP_TOL,
        residual,
    }
}

/// `ρ' = Σᵢ Kᵢ(q) ρ Kᵢ(q)†` with each Kraus operator lifted onto `qubit`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel, qubit: usize) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    if qubit >= n {
        return Err(Error::invalid(format!("qubit index {qubit} out of range for {n} qubits")));
    }
    let check = verify_cptp(ch);
    if !check.valid {
        return Err(Error::invalid(format!(
            "channel {} is not trace preserving (residual {:e})",
            ch.name, check.residual
        )));
    }
    let dim = rho.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for k in &ch.kraus_ops {
        let lifted = embed_single(k, qubit, n)?;
        out = &out + &lifted.sandwich(rho.matrix())?;
    }
    DensityMatrix::from_update(n, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::PauliString;

    fn expect(rho: &DensityMatrix, label: &str) -> f64 {
        let p: PauliString = label.parse().unwrap();
        (rho.matrix() * &p.matrix()).trace().re
    }

    fn ket(one: bool) -> DensityMatrix {
        let psi = ComplexMatrix::basis_column(2, one as usize);
        DensityMatrix::from_pure(1, &psi).unwrap()
    }

    fn plus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexMatrix::from_real(2, 1, &[h, h]).unwrap();
        DensityMatrix::from_pure(1, &psi).unwrap()
    }

    #[test]
    fn zero_parameter_is_identity() {
        let rho = plus();
        for conv in [DepolarizingConvention::IdentityMix, DepolarizingConvention::PauliMix] {
            let ch = make_depolarizing(0.0, conv).unwrap();
            let out = apply_channel(&rho, &ch, 0).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        }
        for ch in [make_amplitude_damping(0.0).unwrap(), make_phase_damping(0.0).unwrap()] {
            let out = apply_channel(&rho, &ch, 0).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        }
    }

    #[test]
    fn depolarizing_conventions_on_ket0() {
        let p = 0.05;
        let a = apply_channel(&ket(false), &make_depolarizing(p, DepolarizingConvention::IdentityMix).unwrap(), 0).unwrap();
        assert!((expect(&a, "Z") - (1.0 - p)).abs() < 1e-12);
        let b = apply_channel(&ket(false), &make_depolarizing(p, DepolarizingConvention::PauliMix).unwrap(), 0).unwrap();
        assert!((expect(&b, "Z") - (1.0 - 4.0 * p / 3.0)).abs() < 1e-12);
        // analytic gap p/3
        assert!((expect(&a, "Z") - expect(&b, "Z") - p / 3.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_on_ket1() {
        let ch = make_amplitude_damping(0.10).unwrap();
        let out = apply_channel(&ket(true), &ch, 0).unwrap();
        assert!((out.matrix().get(0, 0).re - 0.10).abs() < 1e-12);
        assert!((out.matrix().get(1, 1).re - 0.90).abs() < 1e-12);
        assert!((expect(&out, "Z") - (-0.80)).abs() < 1e-12);

        let full = apply_channel(&ket(true), &make_amplitude_damping(1.0).unwrap(), 0).unwrap();
        assert!(full.matrix().max_abs_diff(ket(false).matrix()) < 1e-15);

        let fixed = apply_channel(&ket(false), &ch, 0).unwrap();
        assert_eq!(fixed.matrix(), ket(false).matrix());
    }

    #[test]
    fn phase_damping_on_plus_and_fixed_points() {
        let lambda = 0.08;
        let ch = make_phase_damping(lambda).unwrap();
        let out = apply_channel(&plus(), &ch, 0).unwrap();
        assert!((expect(&out, "X") - (1.0f64 - lambda).sqrt()).abs() < 1e-12);
        assert!(expect(&out, "Z").abs() < 1e-12);
        for one in [false, true] {
            let out = apply_channel(&ket(one), &ch, 0).unwrap();
            assert_eq!(out.matrix(), ket(one).matrix());
        }
    }

    #[test]
    fn two_qubit_amplitude_damping_on_qubit0() {
        // |1⟩⟨1| ⊗ |0⟩⟨0| is basis index 2 (qubit 0 = most significant bit)
        let psi = ComplexMatrix::basis_column(4, 2);
        let rho = DensityMatrix::from_pure(2, &psi).unwrap();
        let out = apply_channel(&rho, &make_amplitude_damping(0.10).unwrap(), 0).unwrap();
        let diag = out.diagonal();
        let expected = [0.10, 0.0, 0.90, 0.0];
        for (d, e) in diag.iter().zip(expected) {
            assert!((d - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cptp_checks() {
        for ch in [
            make_depolarizing(0.05, DepolarizingConvention::IdentityMix).unwrap(),
            make_depolarizing(0.05, DepolarizingConvention::PauliMix).unwrap(),
            make_amplitude_damping(0.10).unwrap(),
            make_phase_damping(0.08).unwrap(),
        ] {
            let check = verify_cptp(&ch);
            assert!(check.valid, "{:?} residual {}", ch.name(), check.residual);
        }
        let doubled = KrausChannel::from_kraus(
            ChannelName::Identity,
            0.0,
            vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)],
        )
        .unwrap();
        let check = verify_cptp(&doubled);
        assert!(!check.valid);
        assert!((check.residual - 1.0).abs() < 1e-15);

        let half = verify_cptp(&make_amplitude_damping(0.5).unwrap());
        assert!(half.valid && half.residual <= 1e-15);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(make_depolarizing(-0.1, DepolarizingConvention::PauliMix).is_err());
        assert!(make_amplitude_damping(1.1).is_err());
        assert!(make_phase_damping(f64::NAN).is_err());
        let rho = ket(false);
        assert!(apply_channel(&rho, &KrausChannel::identity(), 1).is_err());
    }

    #[test]
    fn non_cptp_channel_is_rejected_by_apply() {
        let doubled = KrausChannel::from_kraus(
            ChannelName::Identity,
            0.0,
            vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)],
        )
        .unwrap();
        assert!(apply_channel(&ket(false), &doubled, 0).is_err());
    }

    #[test]
    fn channel_names_round_trip() {
        for name in ChannelName::ALL {
            assert_eq!(name.as_str().parse::<ChannelName>().unwrap(), name);
        }
        assert!("bitflip".parse::<ChannelName>().is_err());
    }
}
