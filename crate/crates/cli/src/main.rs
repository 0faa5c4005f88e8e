//! `dcgrid`: certify and simulate ad hoc DC microgrids with constant-power
//! loads.
//!
//! Exit codes: 0 on success, 1 when a certification verdict fails (or the
//! fuzzer finds a counterexample), 2 on errors.

mod netfile;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use dcgrid_core::certify::{certify_network, design_curves, design_curves_fixed_loading};
use dcgrid_core::equilibrium::{nose_curve, solve_power_flow};
use dcgrid_core::simulate::{
    simulate_from_equilibrium, verify_certificate, IntegrateOptions, SimulateError, SwitchingEvent,
};
use dcgrid_core::{Globals, NetworkSpec};

use netfile::{parse_network, Loaded};
use output::*;

#[derive(Parser)]
#[command(
    name = "dcgrid",
    version,
    about = "Transient stability certification for ad hoc DC microgrids",
    after_help = "Relative --out paths are resolved against $DCGRID_OUT_DIR when set."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium power flow and print the operating point.
    Equilibrium {
        net: PathBuf,
        /// Comma-separated load powers overriding the nominal ones, in
        /// ascending load-node order.
        #[arg(long)]
        p_vector: Option<String>,
        /// Write the operating point as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the nose curve (load power against both equilibrium branches).
    Nose {
        net: PathBuf,
        /// Number of samples from no load to the apex.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute capacitance bounds and a verdict for every load.
    Certify {
        net: PathBuf,
        /// Write the per-load bounds as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit normalized capacitance sizing curves against event magnitude.
    DesignCurves {
        /// Optional network file supplying the global parameters.
        net: Option<PathBuf>,
        /// Transient voltage floor, as a fraction of v0.
        #[arg(long)]
        vtr: Option<f64>,
        /// Equilibrium voltage floor, as a fraction of v0.
        #[arg(long)]
        v_min: Option<f64>,
        /// Pin the total loading bound instead of tracking the event size.
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate switching events from the nominal equilibrium and emit the
    /// trajectory as CSV.
    Simulate {
        net: PathBuf,
        /// Switching event `load:p_before:p_after:time`; repeatable.
        #[arg(long = "event", value_name = "LOAD:P_BEFORE:P_AFTER:T")]
        events: Vec<String>,
        /// Time horizon in seconds (default 100 tau_max).
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate the certificate with randomized admissible switches.
    Fuzz {
        net: PathBuf,
        #[arg(long, default_value_t = 100)]
        n_events: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &std::path::Path) -> Result<NetworkSpec> {
    let Loaded { spec, notes } =
        parse_network(path).with_context(|| format!("reading {}", path.display()))?;
    for note in notes {
        eprintln!("note: {note}");
    }
    Ok(spec)
}

fn emit(text: String, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            let path = resolve_out(&path);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Equilibrium { net, p_vector, out } => {
            let spec = load(&net)?;
            let p = match p_vector {
                Some(list) => parse_p_vector(&list, spec.load_count())?,
                None => spec.nominal_powers(),
            };
            let eq = solve_power_flow(&spec, &p)?;
            print!("{}", equilibrium_text(&spec, &eq));
            if out.is_some() {
                emit(equilibrium_csv(&spec, &eq), out)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Nose { net, n, out } => {
            let spec = load(&net)?;
            let curve = nose_curve(spec.r_max(), spec.v0(), n.max(2));
            emit(nose_csv(&curve), out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { net, out } => {
            let spec = load(&net)?;
            let report = certify_network(&spec)?;
            print!("{}", certify_text(&report));
            if out.is_some() {
                emit(certify_csv(&report), out)?;
            }
            Ok(if report.all_certified() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::DesignCurves {
            net,
            vtr,
            v_min,
            p_max,
            n,
            out,
        } => {
            let mut globals = match net {
                Some(path) => *load(&path)?.globals(),
                None => Globals {
                    v0: 1.0,
                    r_max: 1.0,
                    tau_max: 1.0,
                    p_max: 0.1,
                    v_min: 0.75,
                    v_tr: 0.66,
                },
            };
            if let Some(vtr) = vtr {
                globals.v_tr = vtr * globals.v0;
            }
            if let Some(v_min) = v_min {
                globals.v_min = v_min * globals.v0;
            }
            if !(globals.v0 / 2.0 < globals.v_tr && globals.v_tr <= globals.v_min) {
                bail!(
                    "need v0/2 < v_tr <= v_min (v_tr = {}, v_min = {})",
                    globals.v_tr,
                    globals.v_min
                );
            }
            let spec = NetworkSpec::new(vec![], vec![], globals);
            let curves = match p_max {
                Some(p) => design_curves_fixed_loading(&spec, n.max(2), p),
                None => design_curves(&spec, n.max(2)),
            };
            emit(design_csv(&curves), out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            net,
            events,
            t_end,
            out,
        } => {
            let spec = load(&net)?;
            let events: Vec<SwitchingEvent> = events
                .iter()
                .map(|s| parse_event(s))
                .collect::<Result<_>>()?;
            let t_end = t_end.unwrap_or(100.0 * spec.tau_max());
            let traj = simulate_from_equilibrium(
                &spec,
                &spec.nominal_powers(),
                &events,
                t_end,
                IntegrateOptions::default(),
            )?;
            eprintln!(
                "verdict {:?} after {} steps (t = {})",
                traj.verdict,
                traj.times.len(),
                fmt12(*traj.times.last().unwrap_or(&0.0))
            );
            emit(trajectory_csv(&spec, &traj), out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fuzz {
            net,
            n_events,
            seed,
            out,
        } => {
            let spec = load(&net)?;
            match verify_certificate(&spec, n_events, seed) {
                Ok(report) => {
                    eprintln!(
                        "{} runs clean; max potential rise {}, max decay-rate mismatch {}",
                        report.runs.len(),
                        fmt12(report.max_potential_rise),
                        fmt12(report.max_pdot_mismatch)
                    );
                    emit(fuzz_csv(&report), out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(SimulateError::NotCertified) => {
                    eprintln!("network is not certified; run `dcgrid certify` first");
                    Ok(ExitCode::from(1))
                }
                Err(SimulateError::CertificateViolation {
                    run,
                    detail,
                    trajectory,
                }) => {
                    eprintln!("certificate violation on run {run}: {detail}");
                    if out.is_some() {
                        emit(trajectory_csv(&spec, &trajectory), out)?;
                    }
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn parse_p_vector(list: &str, n_loads: usize) -> Result<Vec<f64>> {
    let p: Vec<f64> = list
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid power `{tok}`"))
        })
        .collect::<Result<_>>()?;
    if p.len() != n_loads {
        bail!("--p-vector has {} entries for {} loads", p.len(), n_loads);
    }
    Ok(p)
}

fn parse_event(text: &str) -> Result<SwitchingEvent> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        bail!("event `{text}` must be load:p_before:p_after:time");
    }
    Ok(SwitchingEvent {
        load: parts[0]
            .parse()
            .with_context(|| format!("invalid load index `{}`", parts[0]))?,
        p_before: parts[1]
            .parse()
            .with_context(|| format!("invalid power `{}`", parts[1]))?,
        p_after: parts[2]
            .parse()
            .with_context(|| format!("invalid power `{}`", parts[2]))?,
        time: parts[3]
            .parse()
            .with_context(|| format!("invalid time `{}`", parts[3]))?,
    })
}
