//! `bifrost`: sweeps, single-point evaluations and regression checks.
//!
//! Exit codes: 0 success, 1 usage or domain error, 2 I/O error, 3 failed
//! regression check.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bifrost::fock::SpectralQfi;
use bifrost::grid::{self, GridRow};
use bifrost::protocols::{
    bifrequency_family, bifrequency_qfi, fock_qfi, qi_classical_numeric, qi_classical_qfi, qi_quantum_numeric,
    qi_quantum_qfi, qi_ratio, thermal_equal_occupation_hz,
};
use bifrost::qfi::{hc_closed_form, hq_closed_form, QfiResult};
use bifrost::sld::{
    coherent_observable, jpa_circuit_solve, jpa_identification_residuals, optimal_observable, optimal_operator,
    sld_coeffs_closed_form, ExpandedObservable, JpaSolution, SldCoefficients,
};
use bifrost::{Error, Probe};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use config::{FileConfig, SweepConfig, SweepFlags};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Regression(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Regression(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Regression(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeArg {
    Tmsv,
    Coherent,
    Both,
}

impl ProbeArg {
    fn probes(self) -> Vec<Probe> {
        match self {
            ProbeArg::Tmsv => vec![Probe::Tmsv],
            ProbeArg::Coherent => vec![Probe::Coherent],
            ProbeArg::Both => vec![Probe::Tmsv, Probe::Coherent],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "bifrost", version, about = "Quantum Fisher information of lossy bi-frequency illumination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Advantage ratio H_Q/H_C over a parameter grid.
    RatioGrid(SweepArgs),
    /// QFI breakdown at one point, numeric and closed form.
    Qfi(PointArgs),
    /// Optimal observable coefficients at one point.
    Sld(PointArgs),
    /// Quantum-illumination regression against the numeric pipeline.
    QiCheck(QiArgs),
    /// Fock-space oracle against the Gaussian pipeline.
    Validate(ValidateArgs),
    /// Equal-occupation approximation for two nearby frequencies.
    ThermalApprox(ThermalArgs),
    /// Two-squeezer circuit realising the noiseless observable.
    Circuit(CircuitArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Reflectivity at the first frequency: `v` or `min:max:steps`.
    #[arg(long, allow_hyphen_values = true)]
    eta1: Option<String>,
    /// Signal photon number: `v` or `min:max:steps`.
    #[arg(long = "ns", allow_hyphen_values = true)]
    n_s: Option<String>,
    /// Bath photon number: `v` or `min:max:steps`.
    #[arg(long = "nth", allow_hyphen_values = true)]
    n_th: Option<String>,
    /// Geometric spacing for the bath photon range.
    #[arg(long)]
    log_nth: bool,
    #[arg(long, value_enum)]
    probe: Option<ProbeArg>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file with the same keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    eta1: f64,
    #[arg(long = "ns", allow_hyphen_values = true)]
    n_s: f64,
    #[arg(long = "nth", allow_hyphen_values = true)]
    n_th: f64,
    #[arg(long, value_enum, default_value = "both")]
    probe: ProbeArg,
}

#[derive(Debug, Args)]
struct QiArgs {
    /// Target amplitude for the numeric comparison.
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Single point instead of the default set.
    #[arg(long, requires_all = ["n_s", "n_th"])]
    eta1: Option<f64>,
    #[arg(long = "ns")]
    n_s: Option<f64>,
    #[arg(long = "nth")]
    n_th: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    probe: ProbeArg,
    /// Starting Fock cutoff; raised automatically when the truncated tail is too heavy.
    #[arg(long, default_value_t = 30)]
    cutoff: usize,
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct ThermalArgs {
    /// First carrier frequency in GHz.
    #[arg(long)]
    ghz: f64,
    /// Temperature in kelvin.
    #[arg(long)]
    temp: f64,
    /// Frequency gap as a fraction of the first frequency.
    #[arg(long, allow_hyphen_values = true)]
    delta_frac: f64,
}

#[derive(Debug, Args)]
struct CircuitArgs {
    #[arg(long = "ns")]
    n_s: f64,
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("BIFROST_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("BIFROST_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn write_rows<W: Write>(rows: &[GridRow], format: Format, mut out: W) -> io::Result<()> {
    match format {
        Format::Csv => grid::write_csv(rows, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}

fn cmd_ratio_grid(args: SweepArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = SweepConfig::resolve(
        SweepFlags {
            eta1: args.eta1,
            n_s: args.n_s,
            n_th: args.n_th,
            probe: args.probe,
            output: args.out,
            format: args.format,
            log_nth: args.log_nth,
        },
        file,
    )?;
    let rows = match threads_from_env()? {
        Some(n) => grid::ratio_grid_with_threads(&cfg.eta1, &cfg.n_s, &cfg.n_th, n)?,
        None => grid::ratio_grid(&cfg.eta1, &cfg.n_s, &cfg.n_th)?,
    };
    match &cfg.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_rows(&rows, cfg.format, BufWriter::new(file))
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        None => write_rows(&rows, cfg.format, io::stdout().lock())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct QfiEntry {
    probe: Probe,
    numeric: QfiResult,
    closed_form: f64,
    rel_deviation: f64,
}

#[derive(Serialize)]
struct QfiReport {
    eta1: f64,
    n_s: f64,
    n_th: f64,
    results: Vec<QfiEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
}

fn cmd_qfi(args: PointArgs) -> Result<(), CliError> {
    let mut results = Vec::new();
    for probe in args.probe.probes() {
        let numeric = bifrequency_qfi(probe, args.eta1, args.n_s, args.n_th)?;
        let closed_form = match probe {
            Probe::Tmsv => hq_closed_form(args.eta1, args.n_s, args.n_th)?,
            Probe::Coherent => hc_closed_form(args.eta1, args.n_s, args.n_th)?,
        };
        results.push(QfiEntry {
            probe,
            numeric,
            closed_form,
            rel_deviation: (numeric.value - closed_form).abs() / closed_form.abs(),
        });
    }
    let ratio = (results.len() == 2 && results[1].closed_form > 0.0).then(|| results[0].closed_form / results[1].closed_form);
    emit_json(&QfiReport {
        eta1: args.eta1,
        n_s: args.n_s,
        n_th: args.n_th,
        results,
        ratio,
    })
}

#[derive(Serialize)]
struct SldTmsvReport {
    numeric: SldCoefficients,
    closed_form: SldCoefficients,
    /// Over `l11`, `l22`, `l12`.
    max_deviation: f64,
    l0_deviation: f64,
}

#[derive(Serialize)]
struct SldCoherentReport {
    closed_form: ExpandedObservable,
    numeric: ExpandedObservable,
}

#[derive(Serialize)]
struct SldReport {
    eta1: f64,
    n_s: f64,
    n_th: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tmsv: Option<SldTmsvReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coherent: Option<SldCoherentReport>,
}

fn cmd_sld(args: PointArgs) -> Result<(), CliError> {
    let (eta1, n_s, n_th) = (args.eta1, args.n_s, args.n_th);
    let mut report = SldReport {
        eta1,
        n_s,
        n_th,
        tmsv: None,
        coherent: None,
    };
    for probe in args.probe.probes() {
        let family = bifrequency_family(probe, eta1, n_s, n_th)?;
        match probe {
            Probe::Tmsv => {
                let numeric = optimal_observable(&family)?;
                let closed_form = sld_coeffs_closed_form(eta1, n_s, n_th)?;
                let max_deviation = [
                    numeric.l11 - closed_form.l11,
                    numeric.l22 - closed_form.l22,
                    numeric.l12 - closed_form.l12,
                ]
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()));
                report.tmsv = Some(SldTmsvReport {
                    numeric,
                    closed_form,
                    max_deviation,
                    l0_deviation: (numeric.l0 - closed_form.l0).abs(),
                });
            }
            Probe::Coherent => {
                let op = optimal_operator(&family)?;
                report.coherent = Some(SldCoherentReport {
                    closed_form: coherent_observable(eta1, n_th, n_s)?.expand(),
                    numeric: ExpandedObservable {
                        number: op.number[(1, 1)].re,
                        linear: op.linear[1].re,
                        constant: op.constant,
                    },
                });
            }
        }
    }
    emit_json(&report)
}

#[derive(Serialize)]
struct Check {
    name: String,
    max_deviation: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn new(name: &str, max_deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct CheckReport<T: Serialize> {
    pass: bool,
    checks: Vec<T>,
}

fn finish<T: Serialize>(checks: Vec<T>, pass: bool, what: &str) -> Result<(), CliError> {
    emit_json(&CheckReport { pass, checks })?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Regression(format!("{what}: tolerance exceeded")))
    }
}

fn cmd_qi_check(args: QiArgs) -> Result<(), CliError> {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let formula = |n_s: f64, n_th: f64| (n_s + 1.0) * (2.0 * n_th + 1.0) / (2.0 * n_s * n_th + n_s + n_th + 1.0);
    let mut identity: f64 = 0.0;
    let mut numeric: f64 = 0.0;
    for n_s in [0.1, 0.5, 1.0] {
        for n_th in [0.5, 2.0, 10.0] {
            let r = qi_ratio(n_s, n_th);
            identity = identity
                .max(rel(r, formula(n_s, n_th)))
                .max(rel(qi_quantum_qfi(n_s, n_th) / qi_classical_qfi(0.0, n_s, n_th), r));
            let num = qi_quantum_numeric(args.eta, n_s, n_th)? / qi_classical_numeric(args.eta, n_s, n_th)?;
            numeric = numeric.max(rel(num, r));
        }
    }
    let checks = vec![
        Check::new("closed-form identities", identity, 1e-12),
        Check::new("numeric pipeline", numeric, 1e-4),
        Check::new("asymptotic ratio 2", (qi_ratio(1e-4, 1e4) - 2.0).abs(), 1e-3),
    ];
    let pass = checks.iter().all(|c| c.pass);
    finish(checks, pass, "qi-check")
}

#[derive(Serialize)]
struct ValidatePoint {
    probe: Probe,
    eta1: f64,
    n_s: f64,
    n_th: f64,
    cutoff: usize,
    gaussian: f64,
    fock: SpectralQfi,
    rel_deviation: f64,
    pass: bool,
}

const VALIDATE_POINTS: [(f64, f64, f64); 8] = [
    (0.5, 0.2, 0.1),
    (0.5, 0.2, 0.3),
    (0.5, 0.5, 0.1),
    (0.5, 0.5, 0.3),
    (0.8, 0.2, 0.1),
    (0.8, 0.2, 0.3),
    (0.8, 0.5, 0.1),
    (0.8, 0.5, 0.3),
];

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let points: Vec<(f64, f64, f64)> = match (args.eta1, args.n_s, args.n_th) {
        (Some(e), Some(s), Some(t)) => vec![(e, s, t)],
        (None, None, None) => VALIDATE_POINTS.to_vec(),
        _ => return Err(CliError::Usage("--eta1, --ns and --nth must be given together".into())),
    };
    let mut checks = Vec::new();
    for probe in args.probe.probes() {
        for &(eta1, n_s, n_th) in &points {
            let gaussian = bifrequency_qfi(probe, eta1, n_s, n_th)?.value;
            let mut cutoff = args.cutoff;
            let fock = loop {
                match fock_qfi(probe, eta1, n_s, n_th, cutoff) {
                    Ok(r) => break r,
                    Err(Error::CutoffTooSmall { required, .. }) if required > cutoff => cutoff = required,
                    Err(e) => return Err(e.into()),
                }
            };
            let rel_deviation = (fock.value - gaussian).abs() / gaussian.abs();
            checks.push(ValidatePoint {
                probe,
                eta1,
                n_s,
                n_th,
                cutoff,
                gaussian,
                fock,
                rel_deviation,
                pass: rel_deviation <= args.tolerance,
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    finish(checks, pass, "validate")
}

fn cmd_thermal_approx(args: ThermalArgs) -> Result<(), CliError> {
    emit_json(&thermal_equal_occupation_hz(args.ghz * 1e9, args.delta_frac, args.temp)?)
}

#[derive(Serialize)]
struct CircuitReport {
    n_s: f64,
    solution: JpaSolution,
    identification_residuals: [f64; 2],
}

fn cmd_circuit(args: CircuitArgs) -> Result<(), CliError> {
    let solution = jpa_circuit_solve(args.n_s)?;
    emit_json(&CircuitReport {
        n_s: args.n_s,
        identification_residuals: jpa_identification_residuals(&solution.params, args.n_s),
        solution,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RatioGrid(a) => cmd_ratio_grid(a),
        Command::Qfi(a) => cmd_qfi(a),
        Command::Sld(a) => cmd_sld(a),
        Command::QiCheck(a) => cmd_qi_check(a),
        Command::Validate(a) => cmd_validate(a),
        Command::ThermalApprox(a) => cmd_thermal_approx(a),
        Command::Circuit(a) => cmd_circuit(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
