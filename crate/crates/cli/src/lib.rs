//! Library side of the `hxreg` binary, split out so the commands can be
//! driven from tests without spawning processes.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use hxreg::nalgebra::DVector;
use hxreg::{
    linalg, simulate_disturbed, simulate_feedforward, simulate_output_feedback, synthesize, tracking_metrics,
    transfer_value, ExoSystem, FeedforwardSetup, PlantConfig, Profile, RegulatorParams, SimOptions, SimTrace,
    SynthOptions, TrackingMetrics, TransferValue, C64,
};

pub mod config;
pub mod output;
pub mod reproduce;

pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(hxreg::Error),
    Usage(String),
    Io(String),
    /// Reproduction finished but at least one row failed.
    Failed(String),
}

impl CliError {
    /// 0 success, 2 configuration, 3 invariant zero, 4 Hurwitz, 5 numeric,
    /// 1 for I/O and failed reproduction rows.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                hxreg::Error::Config(_) | hxreg::Error::Domain(_) | hxreg::Error::Argument(_) => 2,
                hxreg::Error::InvariantZero { .. } => 3,
                hxreg::Error::Hurwitz(_) => 4,
                hxreg::Error::Numeric(_) | hxreg::Error::Synthesis(_) => 5,
            },
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(m) | CliError::Io(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hxreg::Error> for CliError {
    fn from(e: hxreg::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Everything a subcommand needs besides its own arguments.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out_dir: Option<PathBuf>,
    pub grid: Option<usize>,
    pub quiet: bool,
}

impl Context {
    pub fn new(config: RunConfig) -> Self {
        Self { config, out_dir: None, grid: None, quiet: false }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| self.config.simulation.output.clone())
    }

    fn prepared_output_dir(&self) -> CliResult<PathBuf> {
        let dir = self.output_dir();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn plant(&self) -> CliResult<PlantConfig> {
        Ok(self.config.plant_config(self.grid)?)
    }

    pub fn exosystem(&self) -> CliResult<ExoSystem> {
        self.config.exosystem().map_err(|(key, message)| {
            CliError::Config(ConfigError { key: format!("exosystem.{key}"), line: None, message })
        })
    }

    fn note(&self, out: &mut dyn Write, path: &Path) -> CliResult<()> {
        if !self.quiet {
            writeln!(out, "wrote {}", path.display())?;
        }
        Ok(())
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also with `j`).
pub fn parse_complex(text: &str) -> CliResult<C64> {
    let bad = || CliError::Usage(format!("cannot parse complex number `{text}`"));
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        s => s,
    };
    Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

fn format_complex(s: C64) -> String {
    let sign = if s.im < 0.0 { '-' } else { '+' };
    format!("{}{sign}{}i", output::format_sig(s.re), output::format_sig(s.im.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Influence `b(z)`: the plant transfer `G`.
    Actuator,
    /// Unit influence: `G₁`.
    Unit,
}

pub fn cmd_transfer(ctx: &Context, s: C64, channel: Channel, out: &mut dyn Write) -> CliResult<TransferValue> {
    let cfg = ctx.plant()?;
    let tv = match channel {
        Channel::Actuator => transfer_value(&cfg, s, cfg.b(), cfg.z1())?,
        Channel::Unit => transfer_value(&cfg, s, &Profile::constant(cfg.grid(), 1.0)?, cfg.z1())?,
    };
    writeln!(out, "{} {} {}", format_complex(s), output::format_sig(tv.value.re), output::format_sig(tv.value.im))?;
    if let Some(dir) = &ctx.out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("transfer.csv");
        let body = format!(
            "s_re,s_im,z_out,re,im\n{},{},{},{},{}\n",
            output::format_sig(s.re),
            output::format_sig(s.im),
            output::format_sig(tv.output_location),
            output::format_sig(tv.value.re),
            output::format_sig(tv.value.im)
        );
        std::fs::write(&path, body)?;
        ctx.note(out, &path)?;
    }
    Ok(tv)
}

fn synth_options(ctx: &Context) -> SynthOptions {
    SynthOptions { k1: ctx.config.regulator.k1, ly_candidate: ctx.config.ly_candidate() }
}

fn row(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| output::format_sig(*x)).collect();
    format!("[{}]", items.join(", "))
}

pub fn cmd_synth(ctx: &Context, out: &mut dyn Write) -> CliResult<RegulatorParams> {
    let cfg = ctx.plant()?;
    let exo = ctx.exosystem()?;
    let params = synthesize(&cfg, &exo, &synth_options(ctx))?;
    let ly_source = if ctx.config.ly_candidate().is_some() { "supplied" } else { "search" };
    let eig = linalg::eigenvalues(&params.observer_matrix(&exo));
    let eig: Vec<String> = eig.iter().map(|l| format_complex(*l)).collect();
    writeln!(out, "gamma = {}", row(params.gamma.as_slice()))?;
    writeln!(out, "C_m Pi = {}", row(params.cm_pi.as_slice()))?;
    writeln!(out, "C_m Pi0 = {}", row(params.cm_pi0.as_slice()))?;
    writeln!(out, "k1 = {}", output::format_sig(params.k1))?;
    writeln!(out, "L_y = {} ({ly_source})", row(params.ly.as_slice()))?;
    writeln!(out, "observer eigenvalues = [{}]", eig.join(", "))?;
    let dir = ctx.prepared_output_dir()?;
    let path = dir.join("profiles.csv");
    output::write_profiles(&params, &path)?;
    ctx.note(out, &path)?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `u ≡ 0`, disturbance active.
    Open,
    Feedforward,
    Feedback,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Open => "open",
            Mode::Feedforward => "feedforward",
            Mode::Feedback => "feedback",
        }
    }
}

/// Runs one scenario. Feedforward starts on the manifold (`r_w0 = w0`,
/// `x0 = Π w0`) when `matched`; otherwise from rest with the configured `r_w0`.
pub fn run_mode(cfg: &PlantConfig, exo: &ExoSystem, params: Option<&RegulatorParams>, run: &RunConfig, mode: Mode, matched: bool) -> CliResult<SimTrace> {
    let opts = SimOptions::new(run.simulation.t_final).with_snapshots(run.simulation.snapshots.clone());
    let rest = Profile::zeros(cfg.grid());
    let rw0 = DVector::from_column_slice(&run.regulator.r_w0);
    let need = || params.ok_or_else(|| CliError::Usage("mode needs regulator parameters".into()));
    let trace = match mode {
        Mode::Open => simulate_disturbed(cfg, exo, &rest, &opts)?,
        Mode::Feedforward => {
            let p = need()?;
            let setup = if matched {
                FeedforwardSetup { r_w0: exo.w0().clone(), matched: true }
            } else {
                FeedforwardSetup { r_w0: rw0, matched: false }
            };
            simulate_feedforward(cfg, exo, &p.gamma, &p.pi, &setup, &opts)?
        }
        Mode::Feedback => simulate_output_feedback(cfg, exo, need()?, &rw0, &rest, &opts)?,
    };
    Ok(trace)
}

pub fn write_run(dir: &Path, mode: Mode, trace: &SimTrace) -> CliResult<Vec<PathBuf>> {
    let mut written = vec![dir.join(format!("trace_{}.csv", mode.name()))];
    output::write_trace(trace, &written[0])?;
    for snap in &trace.snapshots {
        let path = dir.join(format!("snapshot_{}_t{}.csv", mode.name(), output::format_sig(snap.t)));
        output::write_snapshot(snap, &path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn summary_line(metrics: &TrackingMetrics, transient: f64) -> String {
    format!(
        "max_err_after({}) = {} rms_err_after = {} settle_time = {}",
        output::format_sig(transient),
        output::format_sig(metrics.max_err_after),
        output::format_sig(metrics.rms_err_after),
        output::format_sig(metrics.settle_time)
    )
}

pub fn cmd_simulate(ctx: &Context, mode: Mode, matched: bool, out: &mut dyn Write) -> CliResult<(SimTrace, TrackingMetrics)> {
    let cfg = ctx.plant()?;
    let exo = ctx.exosystem()?;
    let params = match mode {
        Mode::Open => None,
        _ => Some(synthesize(&cfg, &exo, &synth_options(ctx))?),
    };
    let trace = run_mode(&cfg, &exo, params.as_ref(), &ctx.config, mode, matched)?;
    let dir = ctx.prepared_output_dir()?;
    for path in write_run(&dir, mode, &trace)? {
        ctx.note(out, &path)?;
    }
    let transient = ctx.config.simulation.transient;
    let metrics = tracking_metrics(&trace, transient)?;
    writeln!(out, "{}", summary_line(&metrics, transient))?;
    Ok((trace, metrics))
}
