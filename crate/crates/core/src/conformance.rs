//! Protocol conformance checks for bridge adapters.

use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::backend::{AdapterInfo, NoiseConfig};
use crate::bridge::{BridgeClient, SUPPORTED_GATES};
use crate::channels::ChannelName;
use crate::error::Result;
use crate::estimation::derive_cell_seed;
use crate::fingerprint::ideal_matrix;
use crate::suite::{Gate, ReferenceSuite};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub command: String,
    pub adapter: AdapterInfo,
    pub checks: Vec<CheckResult>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Drives `command` through handshake, every gate, every channel, the default
/// suite without noise and the error paths. Fails only if the adapter cannot be
/// started; individual failures are recorded in the report.
pub fn run_conformance(command: &str, shots: u32, timeout: Duration) -> Result<ConformanceReport> {
    let mut client = BridgeClient::spawn(command, timeout)?;
    let adapter = client.info().clone();
    let mut checks = vec![check(
        "handshake",
        !adapter.name.is_empty() && !adapter.version.is_empty(),
        format!("{} {}", adapter.name, adapter.version),
    )];
    let missing: Vec<_> = ChannelName::ALL
        .iter()
        .map(|c| c.as_str())
        .filter(|c| !adapter.channels.iter().any(|a| a == c))
        .collect();
    checks.push(check(
        "advertises channels",
        missing.is_empty(),
        if missing.is_empty() { "all".to_string() } else { format!("missing {missing:?}") },
    ));

    let noiseless = NoiseConfig::noiseless(2);
    let tol = 5.0 / f64::from(shots).sqrt();
    for gate in SUPPORTED_GATES {
        let (circuit, obs, expected) = match gate {
            "h" => (vec![Gate::H(0)], "XI", 1.0),
            "x" => (vec![Gate::X(1)], "IZ", -1.0),
            "s" => (vec![Gate::H(0), Gate::S(0)], "YI", 1.0),
            "sdg" => (vec![Gate::H(0), Gate::Sdg(0)], "YI", -1.0),
            _ => (vec![Gate::H(0), Gate::Cx { control: 0, target: 1 }], "ZZ", 1.0),
        };
        let outcome = client.run(&circuit, &noiseless, &obs.parse()?, shots, 1);
        checks.push(match outcome {
            Ok((v, _)) => check(&format!("gate {gate}"), (v - expected).abs() <= tol, format!("⟨{obs}⟩ = {v}, expected {expected}")),
            Err(e) => check(&format!("gate {gate}"), false, e.to_string()),
        });
    }

    let suite = ReferenceSuite::default();
    let ideal = ideal_matrix(&suite)?;
    let mut worst = (0.0f64, String::new());
    let mut failure = None;
    'cells: for (i, state) in suite.states.iter().enumerate() {
        for (j, obs) in suite.observables.iter().enumerate() {
            match client.run(&state.gates, &noiseless, obs, shots, derive_cell_seed(0, i as u32, j as u32)) {
                Ok((v, _)) => {
                    let err = (v - ideal.get(i, j)).abs();
                    if err > worst.0 {
                        worst = (err, format!("{} / {obs}", state.id));
                    }
                }
                Err(e) => {
                    failure = Some(format!("{} / {obs}: {e}", state.id));
                    break 'cells;
                }
            }
        }
    }
    checks.push(match failure {
        Some(f) => check("noiseless default suite", false, f),
        None => check(
            "noiseless default suite",
            worst.0 <= tol,
            format!("max |observed − exact| = {:.4} at {} (tolerance {tol:.4})", worst.0, worst.1),
        ),
    });

    for (channel, parameter) in [
        (ChannelName::Depolarizing, 0.05),
        (ChannelName::AmplitudeDamping, 0.10),
        (ChannelName::PhaseDamping, 0.08),
    ] {
        let noise = NoiseConfig::new(channel, parameter, 2)?;
        let bell = [Gate::H(0), Gate::Cx { control: 0, target: 1 }];
        let name = format!("channel {channel}");
        checks.push(match client.run(&bell, &noise, &"XX".parse()?, shots, 2) {
            Ok((v, wall)) => {
                let wall = wall.map_or("not reported".to_string(), |ms| format!("{ms:.2} ms"));
                check(&name, (-1.0..=1.0).contains(&v), format!("⟨XX⟩ = {v}, wall time {wall}"))
            }
            Err(e) => check(&name, false, e.to_string()),
        });
    }

    let bad_channel = json!({
        "id": 9001, "op": "run", "circuit": [],
        "noise": {"channel": "no_such_channel", "parameter": 0.1, "qubits": [0, 1]},
        "observable": "ZZ", "shots": shots, "seed": 0
    });
    checks.push(error_check(&mut client, 9001, &bad_channel, "rejects unknown channel"));
    let bad_gate = json!({
        "id": 9002, "op": "run", "circuit": [["t", 0]],
        "noise": {"channel": "identity", "parameter": 0.0, "qubits": [0, 1]},
        "observable": "ZZ", "shots": shots, "seed": 0
    });
    checks.push(error_check(&mut client, 9002, &bad_gate, "rejects unknown gate"));

    // still alive after errors?
    let alive = client.run(&[], &noiseless, &"ZZ".parse()?, shots, 3);
    checks.push(check(
        "survives error requests",
        matches!(alive, Ok((v, _)) if (v - 1.0).abs() <= tol),
        match &alive {
            Ok((v, _)) => format!("⟨ZZ⟩ on |00⟩ = {v}"),
            Err(e) => e.to_string(),
        },
    ));

    let shutdown = client.shutdown();
    checks.push(match shutdown {
        Ok(()) => check("shutdown", true, "clean exit"),
        Err(e) => check("shutdown", false, e.to_string()),
    });

    Ok(ConformanceReport {
        command: command.to_string(),
        adapter,
        checks,
    })
}

fn error_check(client: &mut BridgeClient, id: u64, request: &serde_json::Value, name: &str) -> CheckResult {
    match client.request_raw(id, request) {
        Ok(resp) => check(
            name,
            resp.error.is_some() && resp.expectation.is_none(),
            resp.error.unwrap_or_else(|| "no error reported".into()),
        ),
        Err(e) => check(name, false, e.to_string()),
    }
}
