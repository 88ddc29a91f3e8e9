//! Line-delimited JSON bridge to simulators running in a child process.
//!
//! The parent writes one request object per line to the child's stdin and reads
//! exactly one response line per request from its stdout. Every response
//! echoes the request `id`. A session starts with `hello` and ends with
//! `shutdown`:
//!
//! ```text
//! → {"id":0,"op":"hello"}
//! ← {"id":0,"name":"aer-adapter","version":"0.15.1","capabilities":{"channels":[...],"gates":[...]}}
//! → {"id":1,"op":"run","circuit":[["h",0],["cx",0,1]],"noise":{"channel":"depolarizing","parameter":0.05,"qubits":[0,1]},"observable":"XX","shots":500,"seed":17}
//! ← {"id":1,"expectation":0.872,"shots_used":500,"wall_time_ms":1.9}
//! → {"id":2,"op":"run",...,"noise":{"channel":"foo",...},...}
//! ← {"id":2,"error":"unsupported channel 'foo'"}
//! → {"id":3,"op":"shutdown"}
//! ← {"id":3}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::backend::{AdapterInfo, Backend, BackendDescriptor, BuiltinBackend, NoiseConfig, VariantProfile};
use crate::channels::ChannelName;
use crate::error::{Error, Result};
use crate::estimation::Shots;
use crate::qlinalg::PauliString;
use crate::suite::{Gate, PrepCircuit};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const SUPPORTED_GATES: [&str; 5] = ["h", "x", "s", "sdg", "cx"];
const STDERR_TAIL: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeOp {
    Hello,
    Run,
    Shutdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeRequest {
    pub id: u64,
    pub op: BridgeOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<Vec<Gate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<PauliString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl BridgeRequest {
    pub fn hello(id: u64) -> Self {
        Self::bare(id, BridgeOp::Hello)
    }

    pub fn shutdown(id: u64) -> Self {
        Self::bare(id, BridgeOp::Shutdown)
    }

    fn bare(id: u64, op: BridgeOp) -> Self {
        Self {
            id,
            op,
            circuit: None,
            noise: None,
            observable: None,
            shots: None,
            seed: None,
        }
    }

    pub fn run(id: u64, circuit: Vec<Gate>, noise: NoiseConfig, observable: PauliString, shots: u32, seed: u64) -> Self {
        Self {
            id,
            op: BridgeOp::Run,
            circuit: Some(circuit),
            noise: Some(noise),
            observable: Some(observable),
            shots: Some(shots),
            seed: Some(seed),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    #[serde(default)]
    pub channels: Vec<String>,
    #[serde(default)]
    pub gates: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BridgeResponse {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_used: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Capabilities>,
}

impl BridgeResponse {
    pub fn error(id: u64, message: impl Into<String>) -> Self {
        Self {
            id,
            error: Some(message.into()),
            ..Default::default()
        }
    }
}

/// A running adapter process after a successful `hello`.
pub struct BridgeClient {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    timeout: Duration,
    next_id: u64,
    info: AdapterInfo,
    dead: bool,
}

fn shell(command: &str) -> Command {
    if cfg!(windows) {
        let mut c = Command::new("cmd");
        c.args(["/C", command]);
        c
    } else {
        let mut c = Command::new("sh");
        c.args(["-c", command]);
        c
    }
}

impl BridgeClient {
    /// Starts `command` through the shell and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = shell(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Backend(format!("cannot start adapter '{command}': {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let stdin = child.stdin.take();

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let tail = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&tail);
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(std::result::Result::ok) {
                let mut buf = sink.lock().unwrap_or_else(|p| p.into_inner());
                buf.push_str(&line);
                buf.push('\n');
                if buf.len() > STDERR_TAIL {
                    let cut = buf.len() - STDERR_TAIL;
                    let cut = (cut..buf.len()).find(|&i| buf.is_char_boundary(i)).unwrap_or(buf.len());
                    buf.drain(..cut);
                }
            }
        });

        let mut client = Self {
            command: command.to_string(),
            child,
            stdin,
            lines: rx,
            stderr: tail,
            timeout,
            next_id: 0,
            info: AdapterInfo {
                name: String::new(),
                version: String::new(),
                channels: Vec::new(),
                gates: Vec::new(),
            },
            dead: false,
        };
        let id = client.take_id();
        let resp = client.request(&BridgeRequest::hello(id))?;
        if let Some(err) = resp.error {
            return Err(client.fail(format!("handshake rejected: {err}")));
        }
        let (Some(name), Some(version)) = (resp.name, resp.version) else {
            return Err(client.fail("handshake response lacks name or version"));
        };
        let caps = resp.capabilities.unwrap_or_default();
        client.info = AdapterInfo {
            name,
            version,
            channels: caps.channels,
            gates: caps.gates,
        };
        Ok(client)
    }

    pub fn info(&self) -> &AdapterInfo {
        &self.info
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn take_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn stderr_tail(&self) -> String {
        self.stderr.lock().unwrap_or_else(|p| p.into_inner()).trim().to_string()
    }

    fn fail(&mut self, message: impl Into<String>) -> Error {
        let mut message = message.into();
        let tail = self.stderr_tail();
        if !tail.is_empty() {
            message.push_str(&format!("; adapter stderr: {tail}"));
        }
        Error::Backend(message)
    }

    fn kill(&mut self) {
        self.dead = true;
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// Sends one line and waits for the matching response.
    pub fn request(&mut self, req: &BridgeRequest) -> Result<BridgeResponse> {
        let line = serde_json::to_string(req).expect("request serializes");
        self.request_line(req.id, &line)
    }

    /// Sends an arbitrary JSON value; used to probe adapters with malformed input.
    pub fn request_raw(&mut self, id: u64, value: &serde_json::Value) -> Result<BridgeResponse> {
        self.request_line(id, &value.to_string())
    }

    fn request_line(&mut self, id: u64, line: &str) -> Result<BridgeResponse> {
        if self.dead {
            return Err(Error::Backend(format!("adapter '{}' is no longer running", self.command)));
        }
        let write = match self.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{line}").and_then(|_| stdin.flush()),
            None => Err(std::io::Error::other("stdin closed")),
        };
        if let Err(e) = write {
            let status = self.child.try_wait().ok().flatten();
            self.kill();
            return Err(self.fail(format!("cannot write to adapter ({e}); exit status {status:?}")));
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(text)) => {
                let resp: BridgeResponse = match serde_json::from_str(&text) {
                    Ok(r) => r,
                    Err(e) => {
                        self.kill();
                        return Err(self.fail(format!("malformed response ({e}): {text}")));
                    }
                };
                if resp.id != id {
                    self.kill();
                    return Err(self.fail(format!("response id {} does not match request id {id}", resp.id)));
                }
                Ok(resp)
            }
            Ok(Err(e)) => {
                self.kill();
                Err(self.fail(format!("cannot read adapter output: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Err(self.fail(format!("adapter did not answer within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.wait().ok();
                self.dead = true;
                Err(self.fail(format!("adapter exited without answering (status {status:?})")))
            }
        }
    }

    /// One `run` request; returns the expectation value and the reported wall time.
    pub fn run(
        &mut self,
        circuit: &[Gate],
        noise: &NoiseConfig,
        observable: &PauliString,
        shots: u32,
        seed: u64,
    ) -> Result<(f64, Option<f64>)> {
        let id = self.take_id();
        let req = BridgeRequest::run(id, circuit.to_vec(), noise.clone(), observable.clone(), shots, seed);
        let resp = self.request(&req)?;
        if let Some(err) = resp.error {
            return Err(Error::Backend(format!("adapter reported: {err}")));
        }
        match resp.expectation {
            Some(v) if v.is_finite() && v.abs() <= 1.0 + 1e-9 => Ok((v.clamp(-1.0, 1.0), resp.wall_time_ms)),
            Some(v) => Err(Error::NumericalIntegrity(format!("adapter returned expectation {v} outside [-1, 1]"))),
            None => Err(Error::Backend("response has neither expectation nor error".into())),
        }
    }

    /// Polite shutdown; the process is killed if it does not exit promptly.
    pub fn shutdown(mut self) -> Result<()> {
        self.close()
    }

    fn close(&mut self) -> Result<()> {
        if self.dead {
            return Ok(());
        }
        let id = self.take_id();
        let result = self.request(&BridgeRequest::shutdown(id)).map(|_| ());
        self.stdin = None;
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break;
                }
            }
        }
        self.dead = true;
        result
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

/// [`Backend`] over a bridged adapter. Cells run one at a time on the single child.
pub struct BridgeBackend {
    client: Mutex<BridgeClient>,
    noise: NoiseConfig,
    id: String,
    info: AdapterInfo,
}

impl BridgeBackend {
    pub fn connect(command: &str, noise: NoiseConfig, timeout: Duration) -> Result<Self> {
        let client = BridgeClient::spawn(command, timeout)?;
        let info = client.info().clone();
        Ok(Self {
            client: Mutex::new(client),
            noise,
            id: format!("bridge:{command}"),
            info,
        })
    }

    pub fn info(&self) -> &AdapterInfo {
        &self.info
    }

    pub fn shutdown(self) -> Result<()> {
        self.client.into_inner().unwrap_or_else(|p| p.into_inner()).shutdown()
    }
}

impl Backend for BridgeBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            id: self.id.clone(),
            profile: None,
            adapter: Some(self.info.clone()),
        }
    }

    fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    fn observe(
        &self,
        circuit: &PrepCircuit,
        _num_qubits: usize,
        observable: &PauliString,
        shots: Shots,
        seed: u64,
    ) -> Result<f64> {
        let Shots::Count(n) = shots else {
            return Err(Error::invalid("bridge backends need a finite shot count"));
        };
        let mut client = self.client.lock().unwrap_or_else(|p| p.into_inner());
        client.run(&circuit.gates, &self.noise, observable, n, seed).map(|(v, _)| v)
    }

    fn parallel(&self) -> bool {
        false
    }
}

/// Answers one request line the way a conforming adapter must, using the
/// built-in simulator with `profile` semantics. The flag is `true` once the
/// adapter should exit (after answering `shutdown`).
pub fn handle_request_line(line: &str, profile: &VariantProfile, name: &str, version: &str) -> (BridgeResponse, bool) {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return (BridgeResponse::error(0, format!("request is not JSON: {e}")), false),
    };
    let id = value.get("id").and_then(serde_json::Value::as_u64).unwrap_or(0);
    let req: BridgeRequest = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => return (BridgeResponse::error(id, format!("invalid request: {e}")), false),
    };
    match req.op {
        BridgeOp::Hello => (BridgeResponse {
            id,
            name: Some(name.to_string()),
            version: Some(version.to_string()),
            capabilities: Some(Capabilities {
                channels: ChannelName::ALL.iter().map(|c| c.to_string()).collect(),
                gates: SUPPORTED_GATES.iter().map(|g| g.to_string()).collect(),
            }),
            ..Default::default()
        }, false),
        BridgeOp::Shutdown => (BridgeResponse { id, ..Default::default() }, true),
        BridgeOp::Run => (run_builtin(&req, profile), false),
    }
}

fn run_builtin(req: &BridgeRequest, profile: &VariantProfile) -> BridgeResponse {
    let start = Instant::now();
    let (Some(circuit), Some(observable), Some(shots)) = (&req.circuit, &req.observable, req.shots) else {
        return BridgeResponse::error(req.id, "run needs circuit, observable and shots");
    };
    let n = observable.num_qubits();
    let noise = req.noise.clone().unwrap_or_else(|| NoiseConfig::noiseless(n));
    if shots == 0 {
        return BridgeResponse::error(req.id, "shots must be at least 1");
    }
    let circuit = PrepCircuit::new("bridge", circuit.clone());
    let result = BuiltinBackend::new(profile.clone(), noise)
        .and_then(|b| b.observe(&circuit, n, observable, Shots::Count(shots), req.seed.unwrap_or(0)));
    match result {
        Ok(v) => BridgeResponse {
            id: req.id,
            expectation: Some(v),
            shots_used: Some(shots),
            wall_time_ms: Some(start.elapsed().as_secs_f64() * 1e3),
            ..Default::default()
        },
        Err(e) => BridgeResponse::error(req.id, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let req = BridgeRequest::run(
            7,
            vec![Gate::H(0), Gate::cx(0, 1).unwrap()],
            NoiseConfig::new(ChannelName::Depolarizing, 0.05, 2).unwrap(),
            "XX".parse().unwrap(),
            500,
            11,
        );
        let json = serde_json::to_string(&req).unwrap();
        assert_eq!(
            json,
            r#"{"id":7,"op":"run","circuit":[["h",0],["cx",0,1]],"noise":{"channel":"depolarizing","parameter":0.05,"qubits":[0,1]},"observable":"XX","shots":500,"seed":11}"#
        );
        assert_eq!(serde_json::to_string(&BridgeRequest::hello(0)).unwrap(), r#"{"id":0,"op":"hello"}"#);
    }

    #[test]
    fn in_process_handler_covers_ops() {
        let profile = VariantProfile::variant_a();
        let (hello, stop) = handle_request_line(r#"{"id":3,"op":"hello"}"#, &profile, "ref", "1");
        assert!(!stop);
        assert_eq!(hello.id, 3);
        assert_eq!(hello.name.as_deref(), Some("ref"));
        assert_eq!(hello.capabilities.unwrap().gates.len(), 5);

        let run = handle_request_line(
            r#"{"id":4,"op":"run","circuit":[],"noise":{"channel":"identity","parameter":0,"qubits":[0,1]},"observable":"ZZ","shots":50,"seed":1}"#,
            &profile,
            "ref",
            "1",
        )
        .0;
        assert_eq!(run.expectation, Some(1.0));
        assert_eq!(run.shots_used, Some(50));

        let bad = handle_request_line(
            r#"{"id":5,"op":"run","circuit":[],"noise":{"channel":"bitflip","parameter":0.1,"qubits":[0]},"observable":"ZZ","shots":50,"seed":1}"#,
            &profile,
            "ref",
            "1",
        )
        .0;
        assert_eq!(bad.id, 5);
        assert!(bad.error.unwrap().contains("bitflip"));

        let (bye, stop) = handle_request_line(r#"{"id":6,"op":"shutdown"}"#, &profile, "ref", "1");
        assert!(stop && bye.id == 6 && bye.error.is_none());
        assert!(handle_request_line("not json", &profile, "ref", "1").0.error.is_some());
    }
}
