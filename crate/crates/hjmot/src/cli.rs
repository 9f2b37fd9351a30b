//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 input error,
//! 3 infeasible instance.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hjmot_core::certify::{certify, CertifyOptions, CheckKind};
use hjmot_core::diagnostics::{directional_derivative, local_control_probe, DEFAULT_T_GRID};
use hjmot_core::model::validate;
use hjmot_core::monge::extract_monge_map;
use hjmot_core::reduction::reduced_cost_table;
use hjmot_core::transport::EntropicParams;
use hjmot_core::{generate::generate, solve_hjmot, HjmotSolution, Method, ProblemInstance};

use crate::error::{Error, Result};
use crate::{export, format};

#[derive(Debug, Parser)]
#[command(name = "hjmot", version, about = "Solve and certify discrete path-coupling transport problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Entropic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance from a generator spec.
    Generate {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and print "M=<value> atoms=<n> skipped_mass=[..]".
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        stop_tol: f64,
        /// Solution file; without it the solution JSON goes to stdout and the
        /// summary to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a stored solution against its instance.
    Certify {
        instance: PathBuf,
        solution: PathBuf,
        /// Comma-separated subset of splitting,cyclical,glue,tilde-bound,decomposition,twist.
        /// Feasibility is always checked.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest support subset for the cyclical check.
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        /// Number of support subsets for the cyclical check.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference diagnostics at one source point.
    Probe {
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        source: usize,
        /// Comma-separated tangent vector (one entry for circle instances).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        direction: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the reduced cost table as CSV.
    Reduce {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sidecar CSV with the cheapest path of every entry.
        #[arg(long)]
        paths: Option<PathBuf>,
    },
    /// Print the Monge map of a stored solution as CSV.
    Monge {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a certificate report.
    Report { report: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|source| Error::Io { path: p.display().to_string(), source }),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let instance = format::parse_instance(&read(path)?)?;
    let violations = validate(&instance);
    if let Some(v) = violations.first() {
        let all: Vec<String> = violations.iter().map(|v| format!("{}: {}", v.code, v.detail)).collect();
        log::debug!("validation: {}", all.join("; "));
        return Err(Error::format(format!("{}: {} ({} violation(s))", v.code, v.detail, violations.len())));
    }
    Ok(instance)
}

fn load_solution(instance: &ProblemInstance, path: &Path) -> Result<HjmotSolution> {
    let stored = format::parse_solution(&read(path)?)?;
    let expected = format::instance_hash(instance);
    match stored.instance_hash {
        Some(found) if found == expected => {}
        Some(found) => return Err(Error::HashMismatch { solution: found, instance: expected }),
        None => return Err(Error::format("solution file carries no instance_hash")),
    }
    for atom in &stored.solution.atoms {
        instance.check_path(&atom.path)?;
    }
    Ok(stored.solution)
}

/// Rounds to 12 significant digits for the human-readable summary line.
fn summary_number(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return export::cell(x);
    }
    let digits = 11 - floor_log10(x.abs());
    if digits <= 0 {
        return format!("{x}");
    }
    let s = format!("{:.*}", digits as usize, x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn floor_log10(x: f64) -> i32 {
    x.log10().floor() as i32
}

pub fn solve_summary(solution: &HjmotSolution) -> String {
    let skipped: Vec<String> = solution.skipped_mass().iter().map(|&m| summary_number(m)).collect();
    format!("M={} atoms={} skipped_mass=[{}]", summary_number(solution.value), solution.atoms.len(), skipped.join(","))
}

fn parse_checks(names: Option<Vec<String>>) -> Result<Vec<CheckKind>> {
    let mut kinds = vec![CheckKind::Feasibility];
    match names {
        None => kinds.extend(CheckKind::ALL.into_iter().filter(|k| *k != CheckKind::Feasibility)),
        Some(names) => {
            for n in names.iter().map(|n| n.trim()).filter(|n| !n.is_empty()) {
                let k = CheckKind::parse(n).ok_or_else(|| Error::format(format!("unknown check {n:?}")))?;
                if !kinds.contains(&k) {
                    kinds.push(k);
                }
            }
        }
    }
    Ok(kinds)
}

/// Runs one command and returns its exit code.
pub fn run(cli: Cli) -> u8 {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Generate { spec, out } => {
            let spec = format::parse_spec(&read(&spec)?)?;
            let instance = generate(&spec)?;
            log::info!("generated instance with K = {}", instance.k());
            let mut text = serde_json::to_string_pretty(&format::InstanceFile::from_instance(&instance))?;
            text.push('\n');
            write_out(out.as_deref(), text.as_bytes())?;
            Ok(0)
        }
        Command::Solve { instance, method, epsilon, max_iter, stop_tol, out } => {
            let inst = load_instance(&instance)?;
            let method = match method {
                MethodArg::Exact => Method::Exact,
                MethodArg::Entropic => Method::Entropic(EntropicParams { epsilon, max_iter, stop_tol }),
            };
            let solution = solve_hjmot(&inst, method)?;
            let mut text = format::solution_to_json(&inst, &solution);
            text.push('\n');
            let summary = solve_summary(&solution);
            match out {
                Some(p) => {
                    write_out(Some(&p), text.as_bytes())?;
                    println!("{summary}");
                }
                None => {
                    write_out(None, text.as_bytes())?;
                    eprintln!("{summary}");
                }
            }
            Ok(0)
        }
        Command::Certify { instance, solution, checks, tol, seed, m_max, samples, out } => {
            let inst = load_instance(&instance)?;
            let sol = load_solution(&inst, &solution)?;
            let kinds = parse_checks(checks)?;
            let options = CertifyOptions { tol, seed, cyclical_m_max: m_max, cyclical_samples: samples };
            let report = certify(&inst, &sol, &kinds, options);
            for c in &report.checks {
                log::info!("{}: pass={} slack={}", c.name, c.pass, c.slack);
            }
            let mut text = format::report_to_json(&report);
            text.push('\n');
            write_out(out.as_deref(), text.as_bytes())?;
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Command::Probe { instance, source, direction, t_grid, out } => {
            let inst = load_instance(&instance)?;
            if !inst.costs.kind.is_kernel() {
                return Err(Error::format("probe requires kernel costs"));
            }
            let grid = t_grid.unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
            let probe = local_control_probe(&inst, source, &direction, &grid)?;
            let estimates = probe
                .continuations
                .iter()
                .map(|p| directional_derivative(&inst, p, &direction, &grid))
                .collect::<hjmot_core::Result<Vec<_>>>()?;
            let mut buf = Vec::new();
            export::write_probe(&mut buf, &probe, &estimates)?;
            write_out(out.as_deref(), &buf)?;
            Ok(0)
        }
        Command::Reduce { instance, out, paths } => {
            let inst = load_instance(&instance)?;
            let table = reduced_cost_table(&inst);
            let mut buf = Vec::new();
            export::write_reduced_table(&mut buf, &inst, &table)?;
            write_out(out.as_deref(), &buf)?;
            if let Some(p) = paths {
                let mut buf = Vec::new();
                export::write_reduced_paths(&mut buf, &inst, &table)?;
                write_out(Some(&p), &buf)?;
            }
            Ok(0)
        }
        Command::Monge { instance, solution, out } => {
            let inst = load_instance(&instance)?;
            let sol = load_solution(&inst, &solution)?;
            let map = match extract_monge_map(&sol.atoms, hjmot_core::tol::SUPPORT) {
                Ok(m) => m,
                Err(e @ hjmot_core::Error::SplitMass { .. }) => {
                    eprintln!("{e}");
                    return Ok(1);
                }
                Err(e) => return Err(e.into()),
            };
            let mut buf = Vec::new();
            export::write_monge_map(&mut buf, &inst, &map)?;
            write_out(out.as_deref(), &buf)?;
            Ok(0)
        }
        Command::Report { report } => {
            let file: format::ReportFile = serde_json::from_str(&read(&report)?)?;
            let mut text = String::new();
            for c in &file.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                text.push_str(&format!("{status} {} slack={}\n", c.name, short(c.slack.0)));
                if let Some(w) = &c.witness {
                    text.push_str(&format!("     {}\n", w.detail));
                }
            }
            text.push_str(if file.pass { "all checks passed\n" } else { "some checks failed\n" });
            write_out(None, text.as_bytes())?;
            Ok(if file.pass { 0 } else { 1 })
        }
    }
}

/// Installs the logger, honouring `HJMOT_LOG` (error, info or debug; default error).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("HJMOT_LOG", "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}


fn short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        export::cell(x)
    } else {
        format!("{x:.3e}")
    }
}
