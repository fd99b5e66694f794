// SPDX-License-Identifier: Apache-2.0

//! Run configuration: optional TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use shia_core::board::{FaultSpec, DEFAULT_POLL_HZ};
use shia_core::logic::{load_netlist_file, reference_netlist, LogicError, Netlist};
use shia_core::model::DEFAULT_DELAY_MS;
use shia_core::transport::{normalize_address, ClockMode};

use crate::Failure;

pub const DEFAULT_BOARD_LISTEN: &str = ":9000";
pub const DEFAULT_HTTP_PORT: u16 = 8743;

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Netlist file (TOML). The bundled reference netlist when omitted.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Receive delay after each transmission, in milliseconds.
    #[arg(long)]
    pub delay_ms: Option<u64>,
    /// Board polling rate.
    #[arg(long)]
    pub poll_hz: Option<f64>,
    /// Run on a virtual clock (non-interactive loopback runs only).
    #[arg(long)]
    pub virtual_time: bool,
    /// `loopback`, `none`, or a board address `host:port`.
    #[arg(long, visible_alias = "board")]
    pub transport: Option<String>,
    /// Board fault(s): stuck_low:N, stuck_high:N, inverted:N, swap_wiring:A:B.
    #[arg(long = "fault", value_delimiter = ',')]
    pub faults: Vec<String>,
    /// Directory for report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bind address (board server, or panel HTTP listener).
    #[arg(long)]
    pub listen: Option<String>,
    /// Panel HTTP port on 127.0.0.1.
    #[arg(long)]
    pub http_port: Option<u16>,
    /// One-way latency of the in-process loopback link.
    #[arg(long)]
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    netlist: Option<PathBuf>,
    delay_ms: Option<u64>,
    poll_hz: Option<f64>,
    virtual_time: Option<bool>,
    transport: Option<String>,
    faults: Option<Vec<String>>,
    out: Option<PathBuf>,
    listen: Option<String>,
    http_port: Option<u16>,
    latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    None,
    Loopback,
    Stream(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub netlist: Option<PathBuf>,
    pub delay_ms: u64,
    pub poll_hz: f64,
    pub clock: ClockMode,
    pub transport: Option<Transport>,
    pub faults: Vec<FaultSpec>,
    pub out: Option<PathBuf>,
    pub listen: Option<String>,
    pub http_port: u16,
    pub latency_ms: u64,
}

fn parse_transport(s: &str) -> Result<Transport, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "none" => Ok(Transport::None),
        "loopback" => Ok(Transport::Loopback),
        _ => normalize_address(s).map(Transport::Stream).map_err(|e| Failure::usage(e.to_string())),
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let poll_hz = args.poll_hz.or(file.poll_hz).unwrap_or(DEFAULT_POLL_HZ);
        if !(poll_hz > 0.0 && poll_hz.is_finite()) {
            return Err(Failure::usage(format!("--poll-hz must be positive, got {poll_hz}")));
        }
        let fault_text = if args.faults.is_empty() { file.faults.unwrap_or_default() } else { args.faults.clone() };
        let faults = fault_text
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<FaultSpec>().map_err(|e| Failure::usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let transport = args.transport.clone().or(file.transport).map(|t| parse_transport(&t)).transpose()?;
        let virtual_time = args.virtual_time || file.virtual_time.unwrap_or(false);
        Ok(Self {
            netlist: args.netlist.clone().or(file.netlist),
            delay_ms: args.delay_ms.or(file.delay_ms).unwrap_or(DEFAULT_DELAY_MS),
            poll_hz,
            clock: if virtual_time { ClockMode::Virtual } else { ClockMode::Real },
            transport,
            faults,
            out: args.out.clone().or(file.out),
            listen: args.listen.clone().or(file.listen),
            http_port: args.http_port.or(file.http_port).unwrap_or(DEFAULT_HTTP_PORT),
            latency_ms: args.latency_ms.or(file.latency_ms).unwrap_or(0),
        })
    }

    pub fn load_netlist(&self) -> Result<Netlist, Failure> {
        match &self.netlist {
            None => Ok(reference_netlist()),
            Some(p) => load_netlist_file(p).map_err(|e| match e {
                LogicError::Invalid(vs) => {
                    let mut msg = format!("{}: invalid netlist", p.display());
                    for v in vs {
                        msg.push_str(&format!("\n  - {v}"));
                    }
                    Failure::usage(msg)
                }
                other => Failure::usage(format!("{}: {other}", p.display())),
            }),
        }
    }
}

fn read_file_config(p: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&CommonArgs::default()).unwrap();
        assert_eq!(c.delay_ms, 500);
        assert_eq!(c.poll_hz, 10.0);
        assert_eq!(c.clock, ClockMode::Real);
        assert_eq!(c.transport, None);
        assert_eq!(c.http_port, 8743);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "delay_ms = 100\npoll_hz = 20.0\nfaults = [\"inverted:2\"]\ntransport = \"loopback\"\n").unwrap();
        let args = CommonArgs { config: Some(path), delay_ms: Some(250), ..Default::default() };
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.delay_ms, 250);
        assert_eq!(c.poll_hz, 20.0);
        assert_eq!(c.faults.len(), 1);
        assert_eq!(c.transport, Some(Transport::Loopback));
    }

    #[test]
    fn rejects_bad_values() {
        for args in [
            CommonArgs { poll_hz: Some(0.0), ..Default::default() },
            CommonArgs { faults: vec!["melted:3".into()], ..Default::default() },
            CommonArgs { transport: Some("nowhere".into()), ..Default::default() },
        ] {
            assert!(RunConfig::resolve(&args).is_err());
        }
    }

    #[test]
    fn unknown_file_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dealy_ms = 1\n").unwrap();
        assert!(RunConfig::resolve(&CommonArgs { config: Some(path), ..Default::default() }).is_err());
    }
}
