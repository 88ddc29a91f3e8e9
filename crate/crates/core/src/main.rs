use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shadowprint::analysis::{
    calibrate, classify_with, diagnose, estimate_parameter_with, extract_features, CalibrationReport,
    CalibrationTargets, ClassifierConfig, EstimatorConstants, NoiseDiagnosis, NoiseLabel, Provenance,
};
use shadowprint::backend::{BackendKind, BuiltinBackend, NoiseConfig, VariantProfile};
use shadowprint::bridge::BridgeBackend;
use shadowprint::channels::ChannelName;
use shadowprint::conformance::run_conformance;
use shadowprint::cost::scaling_series;
use shadowprint::estimation::{ShotPlan, Shots};
use shadowprint::fingerprint::{build_fingerprint, noise_floor_between, FingerprintMatrix};
use shadowprint::format::{compare, read_fingerprint, scaling_csv, scaling_table, to_json_string, write_atomic, write_fingerprint};
use shadowprint::heatmap::{render_heatmap, HeatmapSpec};
use shadowprint::suite::ReferenceSuite;
use shadowprint::Error;

#[derive(Parser, Debug)]
#[command(name = "shadowprint", version, about = "Noise fingerprinting for quantum simulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the reference suite on a backend and write a fingerprint file.
    Fingerprint(FingerprintArgs),
    /// Compare two fingerprints against the shot-noise floor.
    Compare(CompareArgs),
    /// Classify the noise channel behind a fingerprint.
    Classify(DiagnoseArgs),
    /// Estimate the noise strength behind a fingerprint.
    Estimate(EstimateArgs),
    /// Measurement cost of the fingerprint suite against full tomography.
    Scaling(ScalingArgs),
    /// Print or validate reference suite files.
    #[command(subcommand)]
    Suite(SuiteCommand),
    /// Fit estimator constants on exact-mode fingerprints of a built-in profile.
    Calibrate(CalibrateArgs),
    /// Render the deviation matrix of a fingerprint file as SVG.
    Heatmap(HeatmapArgs),
    /// Check that a bridge adapter speaks the protocol correctly.
    BridgeCheck(BridgeCheckArgs),
}

#[derive(Args, Debug)]
struct FingerprintArgs {
    /// builtin:variant-A, builtin:variant-B or bridge:<command line>
    #[arg(long, default_value = "builtin:variant-A")]
    backend: String,
    #[arg(long, default_value = "identity")]
    channel: String,
    #[arg(long, default_value_t = 0.0)]
    param: f64,
    /// Shots per cell, or "exact".
    #[arg(long, default_value = "500")]
    shots: String,
    #[arg(long, env = "SHADOWPRINT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Suite file; the built-in suite when omitted.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Free-form timestamp stored in the metadata.
    #[arg(long)]
    timestamp: Option<String>,
    /// Per-request bridge timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    /// Also render the deviation matrix.
    #[arg(long)]
    heatmap: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    /// Render Δ = F_a − F_b.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Write the comparison report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    file: PathBuf,
    #[arg(long)]
    sparsity_threshold: Option<f64>,
    #[arg(long)]
    mean_threshold: Option<f64>,
    /// Constants file written by `calibrate`.
    #[arg(long)]
    constants: Option<PathBuf>,
    #[arg(long)]
    c_dep: Option<f64>,
    #[arg(long)]
    c_amp: Option<f64>,
    #[arg(long)]
    amp_variance_scale: Option<f64>,
    #[arg(long)]
    c_phase: Option<f64>,
    /// Print the diagnosis as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    diagnose: DiagnoseArgs,
    /// Skip classification and estimate for this channel.
    #[arg(long)]
    assume: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableFormat {
    Csv,
    Table,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long, default_value_t = 8)]
    max_qubits: u32,
    #[arg(long, default_value_t = 500)]
    shots: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: TableFormat,
}

#[derive(Subcommand, Debug)]
enum SuiteCommand {
    /// Print a suite as JSON (the built-in one by default).
    Print {
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Validate a suite file.
    Validate { file: PathBuf },
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long, default_value = "variant-A")]
    profile: String,
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    depolarizing: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    amplitude_damping: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    phase_damping: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeatmapArgs {
    file: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args, Debug)]
struct BridgeCheckArgs {
    /// Adapter command line.
    command: String,
    #[arg(long, default_value_t = 2000)]
    shots: u32,
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
}

/// Failure with the process exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::SuiteMismatch(_) | Error::Format(_) => 1,
            Error::Backend(_) | Error::BackendCell { .. } | Error::Io(_) => 2,
            Error::NumericalIntegrity(_) => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Fingerprint(a) => cmd_fingerprint(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Classify(a) => cmd_diagnose(a, None),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Suite(c) => cmd_suite(c),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::BridgeCheck(a) => cmd_bridge_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("shadowprint: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn timeout(secs: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| usage(format!("timeout must be a positive number of seconds, got {secs}")))
}

fn load_suite(path: Option<&Path>) -> Result<ReferenceSuite, Failure> {
    match path {
        Some(p) => ReferenceSuite::load(p).map_err(|e| match e {
            Error::Io(io) => usage(format!("cannot read suite {}: {io}", p.display())),
            other => other.into(),
        }),
        None => Ok(ReferenceSuite::default()),
    }
}

/// Reading an input file that does not exist or does not parse is a usage error.
fn load_fingerprint(path: &Path) -> Result<FingerprintMatrix, Failure> {
    read_fingerprint(path).map_err(|e| match e {
        Error::Io(io) => usage(format!("cannot read {}: {io}", path.display())),
        other => {
            let mut f = Failure::from(other);
            f.message = format!("{}: {}", path.display(), f.message);
            f
        }
    })
}

fn deviation_spec(fp: &FingerprintMatrix, title: Option<String>) -> HeatmapSpec {
    HeatmapSpec {
        matrix: fp.deviations.clone(),
        row_labels: fp.suite.state_ids(),
        column_labels: fp.suite.observable_labels(),
        title,
    }
}

fn cmd_fingerprint(a: FingerprintArgs) -> CmdResult {
    let kind: BackendKind = a.backend.parse()?;
    let channel: ChannelName = a.channel.parse()?;
    let shots: Shots = a.shots.parse()?;
    let timeout = timeout(a.timeout)?;
    let suite = load_suite(a.suite.as_deref())?;
    let noise = NoiseConfig::new(channel, a.param, suite.num_qubits)?;
    let plan = ShotPlan::new(shots, a.seed);

    let fp = match kind {
        BackendKind::Builtin(profile) => {
            let backend = BuiltinBackend::new(profile, noise)?;
            build_fingerprint(&backend, &suite, plan, a.timestamp.clone())?
        }
        BackendKind::Bridge(command) => {
            if shots == Shots::Exact {
                return Err(usage("bridge backends need a finite --shots count"));
            }
            let backend = BridgeBackend::connect(&command, noise, timeout)?;
            let built = build_fingerprint(&backend, &suite, plan, a.timestamp.clone());
            let closed = backend.shutdown();
            let fp = built?;
            closed?;
            fp
        }
    };
    write_fingerprint(&a.out, &fp)?;
    if let Some(path) = &a.heatmap {
        let title = format!("F: {} / {} {}", fp.metadata.backend.id, channel, a.param);
        render_heatmap(&deviation_spec(&fp, Some(title)), path)?;
    }
    print_summary(&fp, &a.out)?;
    Ok(())
}

fn print_summary(fp: &FingerprintMatrix, out: &Path) -> CmdResult {
    let m = &fp.metadata;
    let features = extract_features(&fp.deviations)?;
    let floor = noise_floor_between(fp.num_entries(), m.shots, Shots::Exact);
    println!("wrote {}", out.display());
    println!("backend:          {}", m.backend.id);
    if let Some(adapter) = &m.backend.adapter {
        println!("adapter:          {} {}", adapter.name, adapter.version);
    }
    println!("noise:            {} {} on qubits {:?}", m.noise.channel, m.noise.parameter, m.noise.qubits);
    println!("shots:            {}", m.shots);
    println!("seed:             {}", m.master_seed);
    println!("suite:            {} ({}x{})", m.suite_version, fp.num_states(), fp.num_observables());
    println!("frobenius_norm:   {:.6}", features.frobenius_norm);
    println!("noise_floor:      {floor:.6}");
    println!("mean_dev:         {:.6}", features.mean_dev);
    println!("std_dev:          {:.6}", features.std_dev);
    println!("sparsity:         {:.6}", features.sparsity);
    println!("max_abs_dev:      {:.6}", features.max_abs_dev);
    println!("variance_pattern: {:.6e}", features.variance_pattern);
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let fa = load_fingerprint(&a.file_a)?;
    let fb = load_fingerprint(&a.file_b)?;
    let report = compare(&fa, &fb)?;
    if let Some(path) = &a.out {
        write_atomic(path, &to_json_string(&report))?;
    }
    if let Some(path) = &a.heatmap {
        let spec = HeatmapSpec {
            matrix: report.delta.clone(),
            row_labels: report.row_labels.clone(),
            column_labels: report.column_labels.clone(),
            title: Some(format!("Δ = F({}) − F({})", report.backend_a, report.backend_b)),
        };
        render_heatmap(&spec, path)?;
    }
    println!("a:                  {} ({} shots)", report.backend_a, report.shots_a);
    println!("b:                  {} ({} shots)", report.backend_b, report.shots_b);
    println!("suite:              {} ({} entries)", report.suite_version, report.num_entries);
    println!("frobenius_distance: {:.6}", report.frobenius_distance);
    println!("noise_floor:        {:.6}", report.noise_floor);
    match report.ratio {
        Some(r) => println!("ratio:              {r:.4}"),
        None => println!("ratio:              undefined (zero noise floor)"),
    }
    println!(
        "verdict:            {} (threshold ratio {})",
        if report.systematic { "systematic" } else { "consistent with shot noise" },
        report.systematic_threshold
    );
    Ok(())
}

fn read_constants(path: &Path) -> Result<EstimatorConstants, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(report) = serde_json::from_str::<CalibrationReport>(&text) {
        return Ok(report.constants);
    }
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: not a constants file: {e}", path.display())))
}

fn settings(a: &DiagnoseArgs) -> Result<(ClassifierConfig, EstimatorConstants), Failure> {
    let mut cfg = ClassifierConfig::default();
    if let Some(s) = a.sparsity_threshold {
        cfg.sparsity_threshold = s;
    }
    if let Some(m) = a.mean_threshold {
        cfg.mean_threshold = m;
    }
    let mut k = match &a.constants {
        Some(path) => read_constants(path)?,
        None => EstimatorConstants::default(),
    };
    let overrides = [
        (a.c_dep, &mut k.c_dep),
        (a.c_amp, &mut k.c_amp),
        (a.amp_variance_scale, &mut k.amp_variance_scale),
        (a.c_phase, &mut k.c_phase),
    ];
    let mut overridden = false;
    for (value, slot) in overrides {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(usage(format!("estimator constants must be positive, got {v}")));
            }
            *slot = v;
            overridden = true;
        }
    }
    if overridden {
        k.provenance = Provenance::Override;
    }
    Ok((cfg, k))
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let assumed = match &a.assume {
        Some(s) => Some(match s.parse::<ChannelName>()? {
            ChannelName::Depolarizing => NoiseLabel::Depolarizing,
            ChannelName::AmplitudeDamping => NoiseLabel::AmplitudeDamping,
            ChannelName::PhaseDamping => NoiseLabel::PhaseDamping,
            ChannelName::Identity => return Err(usage("nothing to estimate for the identity channel")),
        }),
        None => None,
    };
    cmd_diagnose(a.diagnose, assumed)
}

fn cmd_diagnose(a: DiagnoseArgs, assumed: Option<NoiseLabel>) -> CmdResult {
    let fp = load_fingerprint(&a.file)?;
    let (cfg, constants) = settings(&a)?;
    let mut d: NoiseDiagnosis = diagnose(&fp.deviations, &cfg, &constants)?;
    if let Some(label) = assumed {
        d.label = label;
        d.estimated_parameter = estimate_parameter_with(label, &d.features, &constants);
    }
    if a.json {
        print!("{}", to_json_string(&d));
        return Ok(());
    }
    let f = &d.features;
    let k = &d.constants;
    let rule_label = classify_with(f, &cfg);
    println!("file:                {}", a.file.display());
    println!("backend:             {}", fp.metadata.backend.id);
    println!("shots:               {}", fp.metadata.shots);
    if assumed.is_some() && rule_label != d.label {
        println!("label:               {} (assumed; rules give {})", d.label, rule_label);
    } else {
        println!("label:               {}{}", d.label, if assumed.is_some() { " (assumed)" } else { "" });
    }
    println!("estimated_parameter: {:.6}", d.estimated_parameter);
    println!("features:");
    println!("  mean_dev:          {:.6}", f.mean_dev);
    println!("  std_dev:           {:.6}", f.std_dev);
    println!("  frobenius_norm:    {:.6}", f.frobenius_norm);
    println!("  sparsity:          {:.6}", f.sparsity);
    println!("  max_abs_dev:       {:.6}", f.max_abs_dev);
    println!("  variance_pattern:  {:.6e}", f.variance_pattern);
    println!("thresholds:");
    println!("  sparsity > {} -> phase_damping", d.classifier.sparsity_threshold);
    println!("  |mean_dev| > {} -> amplitude_damping", d.classifier.mean_threshold);
    println!("  otherwise -> depolarizing");
    println!("constants:");
    println!("  c_dep:             {}", k.c_dep);
    println!("  c_amp:             {}", k.c_amp);
    println!("  amp_var_scale:     {}", k.amp_variance_scale);
    println!("  c_phase:           {}", k.c_phase);
    println!("  provenance:        {}", k.provenance);
    Ok(())
}

fn cmd_scaling(a: ScalingArgs) -> CmdResult {
    let rows = scaling_series(a.max_qubits, a.shots)?;
    match a.format {
        TableFormat::Csv => print!("{}", scaling_csv(&rows)),
        TableFormat::Table => print!("{}", scaling_table(&rows)),
    }
    Ok(())
}

fn cmd_suite(c: SuiteCommand) -> CmdResult {
    match c {
        SuiteCommand::Print { file } => {
            let suite = load_suite(file.as_deref())?;
            println!("{}", suite.to_json());
        }
        SuiteCommand::Validate { file } => {
            let suite = load_suite(Some(&file))?;
            println!(
                "{}: valid suite '{}' ({} states x {} observables on {} qubits)",
                file.display(),
                suite.version,
                suite.num_states(),
                suite.num_observables(),
                suite.num_qubits
            );
        }
    }
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs) -> CmdResult {
    let profile = VariantProfile::builtin(&a.profile)?;
    let suite = load_suite(a.suite.as_deref())?;
    let defaults = CalibrationTargets::default();
    let targets = CalibrationTargets {
        depolarizing: a.depolarizing.unwrap_or(defaults.depolarizing),
        amplitude_damping: a.amplitude_damping.unwrap_or(defaults.amplitude_damping),
        phase_damping: a.phase_damping.unwrap_or(defaults.phase_damping),
    };
    let report = calibrate(&profile, &suite, &targets)?;
    let json = to_json_string(&report);
    match &a.out {
        Some(path) => {
            write_atomic(path, &json)?;
            let k = &report.constants;
            println!("wrote {}", path.display());
            println!("c_dep:   {}", k.c_dep);
            println!("c_amp:   {}", k.c_amp);
            println!("c_phase: {}", k.c_phase);
            println!("provenance: {}", k.provenance);
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_heatmap(a: HeatmapArgs) -> CmdResult {
    let fp = load_fingerprint(&a.file)?;
    let title = a.title.or_else(|| Some(format!("F: {}", fp.metadata.backend.id)));
    render_heatmap(&deviation_spec(&fp, title), &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_bridge_check(a: BridgeCheckArgs) -> CmdResult {
    if a.shots == 0 {
        return Err(usage("shots must be at least 1"));
    }
    let report = run_conformance(&a.command, a.shots, timeout(a.timeout)?)?;
    println!("adapter: {} {}", report.adapter.name, report.adapter.version);
    for c in &report.checks {
        println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: "adapter failed conformance checks".into(),
        })
    }
}
