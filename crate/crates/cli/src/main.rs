// SPDX-License-Identifier: Apache-2.0

//! `shia`: run model-only sweeps, board-in-the-loop sweeps, the board
//! emulator, or the interactive panel.
//!
//! The last line of output is always a one-line JSON summary, and the exit
//! status is 0 only when the requested check is fully green.

mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use shia_core::board::{BoardServer, BoardState, GpioMap};
use shia_core::logic::{Netlist, PinVector};
use shia_core::model::HarnessConfig;
use shia_core::session::{BoardOptions, Session};
use shia_core::transport::{listen_stream, Clock, ClockMode};
use shia_core::verify::{compare, emit_report, mom_sweep, mrm_sweep, Report, Timing, Verdict};
use shia_panel::PanelServer;

use config::{CommonArgs, RunConfig, Transport, DEFAULT_BOARD_LISTEN};

#[derive(Parser)]
#[command(name = "shia", version, about = "Software-emulated model/hardware verification loop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep all 32 input vectors through the local model.
    Mom(CommonArgs),
    /// Sweep through the board and compare against a local-model sweep.
    Mrm(CommonArgs),
    /// Serve an emulated board on a TCP address.
    Board {
        #[command(flatten)]
        common: CommonArgs,
        /// Exit after the first session ends.
        #[arg(long)]
        once: bool,
    },
    /// Start the operator panel.
    Panel(CommonArgs),
    /// Check a netlist and list every violation.
    Validate(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mom(_) => "mom",
            Command::Mrm(_) => "mrm",
            Command::Board { .. } => "board",
            Command::Panel(_) => "panel",
            Command::Validate(_) => "validate",
        }
    }
}

/// A run that could not produce a verdict.
#[derive(Debug)]
pub struct Failure {
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

fn fail<E: std::fmt::Display>(e: E) -> Failure {
    Failure::usage(e.to_string())
}

/// Verdict of a completed run: whether it is green, plus summary fields.
struct Outcome {
    green: bool,
    fields: Value,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let (code, mut summary) = match run(cli.command) {
        Ok(o) => (u8::from(!o.green), o.fields),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (2, json!({"error": f.message}))
        }
    };
    let status = match code {
        0 => "pass",
        1 => "fail",
        _ => "error",
    };
    summary["command"] = json!(name);
    summary["status"] = json!(status);
    summary["exit"] = json!(code);
    println!("{summary}");
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Mom(a) => cmd_mom(&RunConfig::resolve(&a)?),
        Command::Mrm(a) => cmd_mrm(&RunConfig::resolve(&a)?),
        Command::Board { common, once } => cmd_board(&RunConfig::resolve(&common)?, once),
        Command::Panel(a) => cmd_panel(&RunConfig::resolve(&a)?),
        Command::Validate(a) => cmd_validate(&RunConfig::resolve(&a)?),
    }
}

fn write_report(cfg: &RunConfig, report: &Report) -> Result<(), Failure> {
    if let Some(dir) = &cfg.out {
        let files = emit_report(dir, report).map_err(fail)?;
        println!("wrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn cmd_mom(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let net = cfg.load_netlist()?;
    let table = mom_sweep(&net).map_err(fail)?;
    print!("{}", table.to_csv());
    let report = Report { netlist: net.name.clone(), tables: vec![table], comparison: None, timing: None };
    write_report(cfg, &report)?;
    Ok(Outcome { green: true, fields: json!({"netlist": net.name, "rows": PinVector::COMBINATIONS}) })
}

fn build_mrm_session(cfg: &RunConfig, net: &Netlist) -> Result<Session, Failure> {
    let harness = HarnessConfig::with_delay(cfg.delay_ms);
    let clock = Clock::for_mode(cfg.clock);
    match cfg.transport.clone().unwrap_or(Transport::Loopback) {
        Transport::None => Err(Failure::usage("mrm needs a board: use --transport loopback or host:port")),
        Transport::Loopback => {
            let opts = BoardOptions { faults: cfg.faults.clone(), poll_hz: cfg.poll_hz, latency_ms: cfg.latency_ms, ..Default::default() };
            Session::loopback(net, harness, opts, clock).map_err(fail)
        }
        Transport::Stream(addr) => {
            if cfg.clock == ClockMode::Virtual {
                return Err(Failure::usage("--virtual-time needs the in-process loopback board"));
            }
            if !cfg.faults.is_empty() {
                return Err(Failure::usage("faults belong to the board: pass --fault to `shia board`"));
            }
            Session::remote(net, harness, &addr, cfg.poll_hz, clock).map_err(fail)
        }
    }
}

fn cmd_mrm(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let net = cfg.load_netlist()?;
    let mut session = build_mrm_session(cfg, &net)?;
    let started = Instant::now();
    let mrm = mrm_sweep(&mut session).map_err(fail)?;
    let mom = mom_sweep(&net).map_err(fail)?;
    let cmp = compare(&mom, &mrm).map_err(fail)?;

    let nonzero = cmp.nonzero_cells();
    let cells: usize = nonzero.values().map(Vec::len).sum();
    match &cmp.verdict {
        Verdict::Incomplete { failed_rows } => {
            println!("{failed_rows} rows without a board reply (session {:?})", session.model().session());
        }
        _ => print!("{}", cmp.render()),
    }
    for (pin, vs) in &nonzero {
        let list: Vec<String> = vs.iter().map(PinVector::bits).collect();
        println!("out{pin} differs at {}", list.join(" "));
    }
    let verdict = verdict_name(&cmp.verdict);
    println!("verdict: {verdict}");

    let timing = Timing {
        clock: cfg.clock,
        delay_ms: cfg.delay_ms,
        board_poll_ms: session.board_poll_ms(),
        latency_ms: session.latency_ms(),
        elapsed_ms: session.now(),
    };
    let failed_rows = mrm.failed_rows().len();
    let report = Report { netlist: net.name.clone(), tables: vec![mom, mrm], comparison: Some(cmp.clone()), timing: Some(timing) };
    write_report(cfg, &report)?;
    Ok(Outcome {
        green: cmp.verdict.is_pass(),
        fields: json!({
            "netlist": net.name,
            "verdict": verdict,
            "nonzero_cells": cells,
            "failed_rows": failed_rows,
            "reply_timeouts": session.model().reply_timeouts(),
            "faults": cfg.faults.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "clock": cfg.clock,
            "clock_ms": session.now(),
            "wall_ms": started.elapsed().as_millis() as u64,
        }),
    })
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Match => "ZERO-DISCREPANCY",
        Verdict::Mismatch { .. } => "DISCREPANCY",
        Verdict::Incomplete { .. } => "INCOMPLETE",
    }
}

fn interrupt_flag() -> Result<Arc<AtomicBool>, Failure> {
    let stop = Arc::new(AtomicBool::new(false));
    let s = stop.clone();
    ctrlc::set_handler(move || s.store(true, Ordering::Relaxed)).map_err(fail)?;
    Ok(stop)
}

fn cmd_board(cfg: &RunConfig, once: bool) -> Result<Outcome, Failure> {
    if cfg.clock == ClockMode::Virtual {
        return Err(Failure::usage("the board server runs on the real clock"));
    }
    let net = cfg.load_netlist()?;
    let stop = interrupt_flag()?;
    let listen = cfg.listen.clone().unwrap_or_else(|| DEFAULT_BOARD_LISTEN.to_string());
    let listener = listen_stream(&listen).map_err(fail)?;
    println!("listening on {}", listener.local_addr().map_err(fail)?);
    let _ = std::io::stdout().flush();
    let clock = Clock::real();
    let mut sessions = 0u64;
    while !stop.load(Ordering::Relaxed) {
        let Some(ep) = listener.try_accept(&clock, Default::default()).map_err(fail)? else {
            std::thread::sleep(Duration::from_millis(20));
            continue;
        };
        sessions += 1;
        println!("session {sessions} connected");
        let mut state = BoardState::new(net.clone(), GpioMap::default()).map_err(fail)?;
        for f in &cfg.faults {
            state.inject_fault(*f).map_err(fail)?;
        }
        let server = BoardServer::new(state, ep, cfg.poll_hz, clock.now_ms()).map_err(fail)?;
        let end = server
            .serve(&clock, &stop, |e| {
                println!("{}", e.line);
                let _ = std::io::stdout().flush();
            })
            .map_err(fail)?;
        println!("session {sessions} ended, LEDs {}", end.led_view());
        if once {
            break;
        }
    }
    Ok(Outcome { green: true, fields: json!({"listen": listen, "sessions": sessions}) })
}

fn cmd_panel(cfg: &RunConfig) -> Result<Outcome, Failure> {
    if cfg.clock == ClockMode::Virtual {
        return Err(Failure::usage("the interactive panel requires the real clock; drop --virtual-time"));
    }
    let net = cfg.load_netlist()?;
    let harness = HarnessConfig::with_delay(cfg.delay_ms);
    let clock = Clock::real();
    let session = match cfg.transport.clone().unwrap_or(Transport::None) {
        Transport::None => Session::local(&net, harness, clock).map_err(fail)?,
        Transport::Loopback => {
            let opts = BoardOptions { faults: cfg.faults.clone(), poll_hz: cfg.poll_hz, latency_ms: cfg.latency_ms, ..Default::default() };
            Session::loopback(&net, harness, opts, clock).map_err(fail)?
        }
        Transport::Stream(addr) => Session::remote(&net, harness, &addr, cfg.poll_hz, clock).map_err(fail)?,
    };
    let bind = cfg.listen.clone().unwrap_or_else(|| format!("127.0.0.1:{}", cfg.http_port));
    let stop = interrupt_flag()?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(fail)?;
    let url = rt.block_on(async move {
        let server = PanelServer::bind(session, net, &bind).await.map_err(fail)?;
        let url = server.url();
        println!("panel: {url}");
        let _ = std::io::stdout().flush();
        server
            .run_until(async move {
                while !stop.load(Ordering::Relaxed) {
                    tokio::time::sleep(Duration::from_millis(100)).await;
                }
            })
            .await
            .map_err(fail)?;
        Ok::<_, Failure>(url)
    })?;
    Ok(Outcome { green: true, fields: json!({"url": url}) })
}

fn cmd_validate(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (label, net) = match &cfg.netlist {
        None => ("reference".to_string(), shia_core::logic::reference_netlist()),
        Some(p) => (p.display().to_string(), parse_unvalidated(p)?),
    };
    let violations = net.validate();
    let splitters = net.blocks.iter().filter(|b| b.kind == shia_core::logic::GateKind::Splitter).count();
    println!(
        "{label}: `{}`, {} blocks ({} gates, {splitters} splitters), {} connectors",
        net.name,
        net.blocks.len(),
        net.blocks.len() - splitters,
        net.connectors.len()
    );
    for v in &violations {
        println!("  - {v}");
    }
    if violations.is_empty() {
        println!("valid");
    }
    Ok(Outcome { green: violations.is_empty(), fields: json!({"netlist": net.name, "violations": violations.len()}) })
}

fn parse_unvalidated(p: &Path) -> Result<Netlist, Failure> {
    let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
}
