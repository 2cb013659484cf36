//! `pflsim` command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 run aborted,
//! 4 analysis error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{detect_limit_cycle, kpi_report, linearize, KpiReport, LimitCycleVerdict};
use crate::config::parse_scenario;
use crate::csvlog::{channel_names, read_log_file, write_log_file};
use crate::dynamics::Multibody;
use crate::error::Error;
use crate::model::JointState;
use crate::sim::{run, run_batch, ScenarioConfig, SimLog};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;
pub const EXIT_ANALYSIS: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pflsim", version, about = "Simulate and analyse the cable-suspended platform under PFL control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linearize the closed loop at the origin and print its eigenvalues.
    Eigen {
        #[arg(long)]
        config: PathBuf,
    },
    /// Response time, peak and SNR from a CSV log.
    Kpi {
        #[arg(long)]
        log: PathBuf,
        /// Joint columns, e.g. `q4,q5`; all joints when omitted.
        #[arg(long, value_delimiter = ',')]
        joints: Vec<String>,
        /// Wrench columns, e.g. `Fx,Fy,tau_z`; all channels when omitted.
        #[arg(long, value_delimiter = ',')]
        channels: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Run several scenarios concurrently, one CSV per scenario.
    Batch {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::RunAborted { .. } => EXIT_ABORTED,
        e if e.is_config_error() => EXIT_CONFIG,
        _ => EXIT_ANALYSIS,
    }
}

/// Runs a parsed command, writing reports to `out` and diagnostics to `err`.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Simulate { config, out: path } => cmd_simulate(config, path, out, err),
        Command::Eigen { config } => cmd_eigen(config, out),
        Command::Kpi { log, joints, channels, format } => cmd_kpi(log, joints, channels, *format, out),
        Command::Batch { configs, out_dir, jobs } => cmd_batch(configs, out_dir, *jobs, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    execute(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn summarize(config: &ScenarioConfig, log: &SimLog, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<()> {
    if let Some(last) = log.final_state() {
        writeln!(out, "final |q|_inf = {:.6e} rad, |q|_2 = {:.6e} rad", last.q.amax(), last.q.norm())?;
    }
    for (i, name) in channel_names(config.plant.n_inputs()).iter().enumerate() {
        let peak = log.channel(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        writeln!(out, "max |{name}| = {peak:.6e}")?;
    }
    writeln!(out, "max |u|_2 = {:.6e}", log.max_wrench_norm())?;
    let settle = 0.5 * config.duration;
    for j in 0..config.plant.dof() {
        if let LimitCycleVerdict::LimitCycle { amplitude, period } =
            detect_limit_cycle(&log.t, &log.joint(j), settle, 3)
        {
            writeln!(
                err,
                "warning: limit cycle detected in q{} (amplitude {amplitude:.4} rad, period {period:.3} s)",
                j + 1
            )?;
        }
    }
    Ok(())
}

pub fn cmd_simulate(config: &Path, path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    let cfg = parse_scenario(config)?;
    let log = run(&cfg)?;
    write_log_file(&log, path)?;
    summarize(&cfg, &log, out, err).map_err(io)?;
    Ok(EXIT_OK)
}

pub fn cmd_eigen(config: &Path, out: &mut dyn Write) -> Result<i32, Error> {
    let cfg = parse_scenario(config)?;
    let n = cfg.controller.nominal.dof();
    let res = linearize(&cfg.controller, &JointState::zeros(n))?;
    let w = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "{:>4} {:>16} {:>16}  class", "#", "re", "im")?;
        for (i, (l, c)) in res.eigenvalues.iter().zip(&res.classes).enumerate() {
            writeln!(out, "{:>4} {:>16.8e} {:>16.8e}  {c}", i + 1, l.re, l.im)?;
        }
        Ok(())
    };
    w(out).map_err(io)?;
    Ok(EXIT_OK)
}

fn write_kpi(report: &KpiReport, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
    let rt = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.6}"));
    match format {
        OutputFormat::Text => {
            for j in &report.joints {
                writeln!(out, "{:<6} response_time = {} s, peak = {:.6e} rad", j.name, rt(j.response_time), j.peak_response)?;
            }
            for c in &report.channels {
                writeln!(out, "{:<6} snr = {:.3} dB", c.name, c.snr_db)?;
            }
        }
        OutputFormat::Csv => {
            writeln!(out, "name,metric,value")?;
            for j in &report.joints {
                writeln!(out, "{},response_time,{}", j.name, rt(j.response_time))?;
                writeln!(out, "{},peak,{:.16e}", j.name, j.peak_response)?;
            }
            for c in &report.channels {
                writeln!(out, "{},snr_db,{:.16e}", c.name, c.snr_db)?;
            }
        }
    }
    Ok(())
}

pub fn cmd_kpi(
    log: &Path,
    joints: &[String],
    channels: &[String],
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<i32, Error> {
    let csv = read_log_file(log)?;
    let is_joint = |h: &str| h.strip_prefix('q').is_some_and(|d| d.parse::<usize>().is_ok());
    let joints: Vec<String> = if joints.is_empty() {
        csv.header.iter().filter(|h| is_joint(h)).cloned().collect()
    } else {
        joints.to_vec()
    };
    let channels: Vec<String> = if channels.is_empty() {
        let known = ["Fx", "Fy", "tau_z"];
        csv.header.iter().filter(|h| known.contains(&h.as_str())).cloned().collect()
    } else {
        channels.to_vec()
    };
    let pick = |names: &[String]| -> Result<Vec<(String, Vec<f64>)>, Error> {
        names
            .iter()
            .map(|n| {
                csv.column(n)
                    .map(|c| (n.clone(), c.to_vec()))
                    .ok_or_else(|| Error::InvalidConfig(format!("log has no column `{n}`")))
            })
            .collect()
    };
    let report = kpi_report(csv.time(), &pick(&joints)?, &pick(&channels)?);
    write_kpi(&report, format, out).map_err(io)?;
    Ok(EXIT_OK)
}

pub fn cmd_batch(
    configs: &[PathBuf],
    out_dir: &Path,
    jobs: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let parsed = configs.iter().map(parse_scenario).collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir)?;
    let logs = run_batch(&parsed, jobs);
    let mut code = EXIT_OK;
    for ((path, cfg), log) in configs.iter().zip(&parsed).zip(logs) {
        let stem = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        match log {
            Ok(log) => {
                let target = out_dir.join(format!("{stem}.csv"));
                write_log_file(&log, &target)?;
                writeln!(out, "[{stem}] -> {}", target.display()).map_err(io)?;
                summarize(cfg, &log, out, err).map_err(io)?;
            }
            Err(e) => {
                writeln!(err, "[{stem}] error: {e}").map_err(io)?;
                code = code.max(exit_code(&e));
            }
        }
    }
    Ok(code)
}
