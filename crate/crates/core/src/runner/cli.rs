//! Command-line front end.
//!
//! Settings for `simulate` resolve as built-in defaults, then the
//! `--config` file, then explicit flags; flags win.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::circuit::compile_trotter_step_with_depth;
use crate::error::{Error, Result};
use crate::evolve::{run_exact, run_trotter, RunConfig, RunResult};
use crate::hamiltonian::build_hamiltonian;
use crate::lattice::{build_system, SystemFile, SystemKind, SystemParams, SystemSpec};
use crate::statevector::BasisLabel;

use super::output::write_run;
use super::suite::{run_suite, SuiteName};

#[derive(Debug, Parser)]
#[command(
    name = "vortexprop",
    version,
    about = "Trotter statevector simulation of spin vortices"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one system and report its samples and recurrence period.
    Simulate(SimulateArgs),
    /// Run a built-in reproduction suite.
    Suite(SuiteArgs),
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    /// melon, antimelon, combined or xxz.
    #[arg(long, value_parser = parse_kind)]
    pub system: Option<SystemKind>,
    /// Chain length (xxz only).
    #[arg(long)]
    pub n: Option<usize>,
    /// ZZ anisotropy (xxz only).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Time step as a fraction of T, e.g. 1/300.
    #[arg(long, value_parser = parse_frac)]
    pub dt: Option<f64>,
    /// Total time in units of T.
    #[arg(long)]
    pub total: Option<f64>,
    /// Record every PITCH steps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub pitch: Option<u64>,
    /// Global spin phase in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub chi: Option<f64>,
    /// Fidelity threshold for the period estimate.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Use exact evolution instead of Trotter steps.
    #[arg(long)]
    pub exact: bool,
    /// Output directory for manifest, samples and plot files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON settings file; explicit flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the Hamiltonian as JSON (to the output directory, else stdout).
    #[arg(long)]
    pub dump_hamiltonian: bool,
    /// Write one Trotter step circuit as JSON (to the output directory, else stdout).
    #[arg(long)]
    pub dump_circuit: bool,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(value_enum)]
    pub name: SuiteName,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Concurrent runs.
    #[arg(long, env = "VORTEXPROP_JOBS", default_value_t = default_jobs(), value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

fn default_jobs() -> u64 {
    std::thread::available_parallelism().map_or(1, |n| n.get() as u64)
}

fn parse_kind(s: &str) -> std::result::Result<SystemKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Positive number written as `a/b` or a plain decimal.
pub fn parse_frac(s: &str) -> std::result::Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            num / den
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a number"))?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` must be a positive finite value"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FracValue {
    Number(f64),
    Text(String),
}

/// `--config` file contents. Every field is optional; `geometry` replaces
/// the built-in lattice of `system`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    system: Option<SystemKind>,
    geometry: Option<SystemFile>,
    n: Option<usize>,
    delta: Option<f64>,
    dt: Option<FracValue>,
    total: Option<f64>,
    pitch: Option<u64>,
    chi: Option<f64>,
    threshold: Option<f64>,
    exact: Option<bool>,
    out: Option<PathBuf>,
    initial: Option<String>,
    #[serde(default)]
    tracked: Vec<String>,
    auto_track: Option<usize>,
    depth: Option<usize>,
    dump_hamiltonian: Option<bool>,
    dump_circuit: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved `simulate` settings.
#[derive(Debug)]
pub struct Settings {
    pub run: RunConfig,
    pub exact: bool,
    pub out: Option<PathBuf>,
    pub dump_hamiltonian: bool,
    pub dump_circuit: bool,
}

pub fn resolve(args: &SimulateArgs, file: ConfigFile) -> Result<Settings> {
    let kind = args
        .system
        .or(file.system)
        .or(file.geometry.as_ref().map(|g| g.kind))
        .ok_or_else(|| Error::InvalidConfig("no system given (use --system)".into()))?;
    let n = args.n.or(file.n);
    let delta = args.delta.or(file.delta);
    let chi = args.chi.or(file.chi);
    let system: SystemSpec = match file.geometry {
        Some(mut g) => {
            if g.kind != kind {
                return Err(Error::InvalidConfig(format!(
                    "geometry is for {}, system is {kind}",
                    g.kind
                )));
            }
            if n.is_some_and(|n| n != g.sites.len()) {
                return Err(Error::InvalidConfig("n disagrees with the geometry".into()));
            }
            g.chi = chi.unwrap_or(g.chi);
            g.delta = delta.unwrap_or(g.delta);
            SystemSpec::from_file(&g)?
        }
        None => {
            let fixed = match kind {
                SystemKind::Xxz => None,
                SystemKind::Combined => Some(13),
                _ => Some(8),
            };
            if let (Some(size), Some(n)) = (fixed, n) {
                if n != size {
                    return Err(Error::InvalidConfig(format!(
                        "{kind} has {size} sites, not {n}"
                    )));
                }
            }
            let params = SystemParams {
                n: n.unwrap_or(8),
                delta: delta.unwrap_or(0.0),
                chi,
            };
            build_system(kind, &params)?
        }
    };
    let mut run = RunConfig::new(system);
    let file_dt = match file.dt {
        Some(FracValue::Number(x)) => {
            Some(parse_frac(&x.to_string()).map_err(Error::InvalidConfig)?)
        }
        Some(FracValue::Text(t)) => Some(parse_frac(&t).map_err(Error::InvalidConfig)?),
        None => None,
    };
    if let Some(dt) = args.dt.or(file_dt) {
        run.dt_over_t = dt;
    }
    if let Some(total) = args.total.or(file.total) {
        run.total_over_t = total;
    }
    if let Some(pitch) = args.pitch.or(file.pitch) {
        run.sample_pitch = pitch;
    }
    if let Some(th) = args.threshold.or(file.threshold) {
        run.threshold = th;
    }
    if let Some(depth) = file.depth {
        run.depth = depth;
    }
    if let Some(k) = file.auto_track {
        run.auto_track = k;
    }
    if let Some(init) = &file.initial {
        run.initial = Some(init.parse()?);
    }
    run.tracked = file
        .tracked
        .iter()
        .map(|l| l.parse::<BasisLabel>())
        .collect::<Result<_>>()?;
    run.validate()?;
    run.initial_state()?;
    Ok(Settings {
        run,
        exact: args.exact || file.exact.unwrap_or(false),
        out: args.out.clone().or(file.out),
        dump_hamiltonian: args.dump_hamiltonian || file.dump_hamiltonian.unwrap_or(false),
        dump_circuit: args.dump_circuit || file.dump_circuit.unwrap_or(false),
    })
}

pub fn simulate(args: &SimulateArgs, stdout: &mut dyn std::io::Write) -> Result<RunResult> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let settings = resolve(args, file)?;
    let cfg = &settings.run;
    let h = build_hamiltonian(&cfg.system)?;
    let emit = |name: &str, text: String, stdout: &mut dyn std::io::Write| -> Result<()> {
        match &settings.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), text + "\n")?;
            }
            None => writeln!(stdout, "{text}")?,
        }
        Ok(())
    };
    if settings.dump_hamiltonian {
        emit("hamiltonian.json", h.to_json()?, stdout)?;
    }
    if settings.dump_circuit {
        let step = compile_trotter_step_with_depth(&h, cfg.dt_over_t, cfg.depth)?;
        emit("circuit.json", step.to_json()?, stdout)?;
    }
    let (result, method) = if settings.exact {
        (run_exact(cfg)?, "exact")
    } else {
        (run_trotter(cfg)?, "trotter")
    };
    if let Some(dir) = &settings.out {
        write_run(dir, cfg, &result, method)?;
    }
    report(&result, cfg, method, stdout)?;
    Ok(result)
}

fn report(
    result: &RunResult,
    cfg: &RunConfig,
    method: &str,
    out: &mut dyn std::io::Write,
) -> Result<()> {
    let last = result.samples.last().expect("runs have a first sample");
    writeln!(
        out,
        "{} ({} sites, {method}): {} steps, {} samples, dt = T/{}",
        result.kind,
        result.site_labels.len(),
        cfg.n_steps()?,
        result.samples.len(),
        fmt_inverse(cfg.dt_over_t)
    )?;
    writeln!(
        out,
        "fidelity0 at t = {}T: {:.6}",
        last.time_over_t, last.fidelity0
    )?;
    let p = &result.period;
    if p.lower_bound {
        let best = if p.peak_fidelity.is_finite() {
            format!("{:.6}", p.peak_fidelity)
        } else {
            "-".into()
        };
        writeln!(
            out,
            "period: ≥ {}T (lower bound; no return above {} by {}T, best revival {best})",
            p.period_over_t, p.threshold, p.t_max_over_t
        )?;
    } else {
        writeln!(
            out,
            "period: {:.4}T (crossing at {:.4}T, fidelity {:.6})",
            p.period_over_t,
            p.crossing_over_t.unwrap_or(p.period_over_t),
            p.peak_fidelity
        )?;
    }
    Ok(())
}

fn fmt_inverse(dt: f64) -> String {
    let inv = 1.0 / dt;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("{}", inv.round())
    } else {
        format!("{inv:.6}")
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 2 for usage errors, 1 for failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    let mut stdout = std::io::stdout().lock();
    let outcome = match &cli.command {
        Command::Simulate(args) => simulate(args, &mut stdout).map(|_| ()),
        Command::Suite(args) => run_suite(args.name, &args.out, args.jobs as usize)
            .and_then(|summary| Ok(write!(stdout, "{summary}")?)),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> SimulateArgs {
        let cli =
            Cli::try_parse_from(std::iter::once("vortexprop").chain(args.iter().copied())).unwrap();
        match cli.command {
            Command::Simulate(a) => a,
            Command::Suite(_) => panic!("expected simulate"),
        }
    }

    fn file(json: &str) -> ConfigFile {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_frac("1/300").unwrap(), 1.0 / 300.0);
        assert_eq!(parse_frac("0.1").unwrap(), 0.1);
        assert!(parse_frac("1/0").is_err());
        assert!(parse_frac("-1/3").is_err());
        assert!(parse_frac("x").is_err());
    }

    #[test]
    fn flag_defaults_follow_system() {
        let s = resolve(
            &parse(&["simulate", "--system", "combined"]),
            ConfigFile::default(),
        )
        .unwrap();
        assert_eq!(s.run.n_steps().unwrap(), 480);
        assert_eq!(s.run.sample_pitch, 2);
        assert!(!s.exact);
    }

    #[test]
    fn flags_beat_config_file_beats_defaults() {
        let cfg = r#"{"system": "melon", "dt": "1/150", "total": 2, "pitch": 5, "threshold": 0.9}"#;
        let s = resolve(&parse(&["simulate", "--pitch", "7"]), file(cfg)).unwrap();
        assert_eq!(s.run.dt_over_t, 1.0 / 150.0);
        assert_eq!(s.run.total_over_t, 2.0);
        assert_eq!(s.run.sample_pitch, 7);
        assert_eq!(s.run.threshold, 0.9);
        let s = resolve(
            &parse(&["simulate", "--system", "antimelon", "--dt", "1/300"]),
            file(cfg),
        )
        .unwrap();
        assert_eq!(s.run.system.kind, SystemKind::AntiMelon);
        assert_eq!(s.run.dt_over_t, 1.0 / 300.0);
    }

    #[test]
    fn config_geometry_replaces_builtin_lattice() {
        let spec = build_system(SystemKind::Melon, &SystemParams::default()).unwrap();
        let geometry = serde_json::to_string(&spec.to_file()).unwrap();
        let cfg = format!(r#"{{"geometry": {geometry}, "chi": 0.25}}"#);
        let s = resolve(&parse(&["simulate"]), file(&cfg)).unwrap();
        assert_eq!(s.run.system.kind, SystemKind::Melon);
        assert_eq!(s.run.system.chi, 0.25);
        let clash = format!(r#"{{"geometry": {geometry}, "system": "xxz"}}"#);
        assert!(resolve(&parse(&["simulate"]), file(&clash)).is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"sytem": "melon"}"#).is_err());
    }

    #[test]
    fn missing_system_is_an_error() {
        assert!(resolve(&parse(&["simulate"]), ConfigFile::default()).is_err());
    }

    #[test]
    fn bad_flags_exit_with_usage_code() {
        assert_eq!(cli_main(["vortexprop", "simulate", "--dt", "zero"]), 2);
        assert_eq!(cli_main(["vortexprop", "simulate", "--system", "donut"]), 2);
        assert_eq!(cli_main(["vortexprop", "frobnicate"]), 2);
        assert_eq!(
            cli_main([
                "vortexprop",
                "simulate",
                "--system",
                "melon",
                "--total",
                "0.001"
            ]),
            1
        );
    }

    #[test]
    fn simulate_reports_lower_bound_for_chain() {
        let args = parse(&[
            "simulate", "--system", "xxz", "--n", "4", "--delta", "2", "--total", "20",
        ]);
        let mut out = Vec::new();
        let run = simulate(&args, &mut out).unwrap();
        assert!(run.period.lower_bound);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("period: ≥ 20T"), "{text}");
    }
}
