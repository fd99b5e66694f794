// SPDX-License-Identifier: Apache-2.0

use super::table::{Provenance, TruthRow, TruthTable};
use super::VerifyError;
use crate::logic::{Netlist, PinVector};
use crate::model::{HarnessConfig, HarnessEvent, Mode};
use crate::session::Session;
use crate::transport::Clock;

/// Steps the harness through all 32 vectors in MOM.
pub fn mom_sweep(net: &Netlist) -> Result<TruthTable, VerifyError> {
    let mut s = Session::local(net, HarnessConfig::default(), Clock::new_virtual())?;
    sweep(&mut s, Mode::Mom)
}

/// Switches the session to MRM and records the board's answer to every
/// vector. A row fails when the board has not been heard from by the time
/// it is captured.
pub fn mrm_sweep(session: &mut Session) -> Result<TruthTable, VerifyError> {
    sweep(session, Mode::Mrm)
}

pub fn sweep(s: &mut Session, mode: Mode) -> Result<TruthTable, VerifyError> {
    if s.model().state().mode != mode {
        s.handle(HarnessEvent::SetMode(mode))?;
        if mode == Mode::Mrm {
            s.await_settled()?;
        }
    }
    let mut rows = Vec::with_capacity(PinVector::COMBINATIONS);
    for v in PinVector::all() {
        let changed = s.drive(v)?;
        if mode == Mode::Mrm && changed > 0 {
            s.await_settled()?;
        }
        let failed = mode == Mode::Mrm && !s.model().session().is_live();
        rows.push(TruthRow { inputs: v, outputs: s.model().state().output_attrs, failed });
    }
    let provenance = match mode {
        Mode::Mom => Provenance::Mom,
        Mode::Mrm => Provenance::Mrm,
    };
    TruthTable::new(provenance, s.model().netlist_name(), s.now(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::reference_netlist;
    use crate::session::BoardOptions;

    #[test]
    fn mom_sweep_equals_oracle() {
        let net = reference_netlist();
        let t = mom_sweep(&net).unwrap();
        assert!(t.same_outputs(&TruthTable::from_oracle(&net).unwrap()));
        assert_eq!(t.provenance, Provenance::Mom);
    }

    #[test]
    fn mrm_sweep_on_clean_board_equals_oracle() {
        let net = reference_netlist();
        let mut s = Session::loopback(&net, HarnessConfig::default(), BoardOptions::default(), Clock::new_virtual()).unwrap();
        let t = mrm_sweep(&mut s).unwrap();
        assert!(t.is_complete());
        assert!(t.same_outputs(&TruthTable::from_oracle(&net).unwrap()));
    }

    #[test]
    fn unreachable_board_fails_every_row() {
        let net = reference_netlist();
        let clock = Clock::new_virtual();
        let (m, _silent) = crate::transport::open_loopback(&clock, Default::default(), 0);
        let mut s = Session::with_endpoint(&net, HarnessConfig::with_delay(50), m, 10.0, clock).unwrap();
        let t = mrm_sweep(&mut s).unwrap();
        assert_eq!(t.failed_rows().len(), 32);
    }
}
