// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shia_core::board::{apply_faults, BoardState, FaultSpec, GpioMap};
use shia_core::logic::random::random_netlist;
use shia_core::logic::{
    oracle_eval, reference_netlist, settle, Connector, Netlist, Pin, PinVector, PortRef, SignalLevel, Simulator, Violation,
};
use shia_core::model::{HarnessConfig, HarnessEvent, ModelServer};
use shia_core::protocol::PinMessage;
use shia_core::transport::Clock;
use shia_core::verify::{build_kmap, diff_kmaps, mom_sweep, Provenance, TruthRow, TruthTable};

fn net_from_seed(seed: u64) -> Netlist {
    random_netlist(&mut ChaCha8Rng::seed_from_u64(seed), 12)
}

fn pin_strategy() -> impl Strategy<Value = Pin> {
    (1u8..=5).prop_map(|n| Pin::new(n).unwrap())
}

fn table_strategy() -> impl Strategy<Value = TruthTable> {
    proptest::collection::vec(0usize..32, 32).prop_map(|outs| {
        let rows = PinVector::all()
            .zip(outs)
            .map(|(v, o)| TruthRow { inputs: v, outputs: PinVector::from_index(o), failed: false })
            .collect();
        TruthTable::new(Provenance::Mom, "random", 0, rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn settle_agrees_with_oracle(seed in any::<u64>(), idx in 0usize..32) {
        let net = net_from_seed(seed);
        let v = PinVector::from_index(idx);
        prop_assert_eq!(settle(&net, v).unwrap().outputs, oracle_eval(&net, v).unwrap());
    }

    #[test]
    fn incremental_settle_agrees_with_fresh_settle(seed in any::<u64>(), path in proptest::collection::vec(0usize..32, 1..10)) {
        let net = net_from_seed(seed);
        let mut sim = Simulator::new(&net).unwrap();
        for idx in path {
            let v = PinVector::from_index(idx);
            let snap = sim.apply(v).unwrap();
            prop_assert_eq!(snap.outputs, oracle_eval(&net, v).unwrap());
        }
    }

    #[test]
    fn dropping_a_connector_invalidates(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut net = net_from_seed(seed);
        let removed = net.connectors.remove(pick.index(net.connectors.len()));
        let violations = net.validate();
        prop_assert!(violations.iter().any(|v| matches!(v, Violation::Undriven { port } if *port == removed.to)), "{:?}", violations);
    }

    #[test]
    fn second_driver_invalidates(seed in any::<u64>(), pick in any::<prop::sample::Index>(), src in 1u8..=5) {
        let mut net = net_from_seed(seed);
        let target = net.connectors[pick.index(net.connectors.len())].to.clone();
        net.connectors.push(Connector::new(PortRef::ExtIn(src), target));
        let violations = net.validate();
        prop_assert!(violations.iter().any(|v| matches!(v, Violation::MultipleDrivers { .. })), "{:?}", violations);
    }

    #[test]
    fn mom_outputs_track_settle(events in proptest::collection::vec((pin_strategy(), any::<bool>()), 0..40)) {
        let net = reference_netlist();
        let mut m = ModelServer::new(&net, HarnessConfig::default()).unwrap();
        for (t, (p, high)) in events.into_iter().enumerate() {
            m.handle_panel_event(HarnessEvent::pin(p, SignalLevel::from_bool(high)), t as u64).unwrap();
            prop_assert!(m.state().outgoing.is_empty());
            let want = settle(&net, m.state().input_attrs).unwrap().outputs;
            prop_assert_eq!(m.state().output_attrs, want);
        }
    }

    #[test]
    fn fault_free_board_matches_oracle(seed in any::<u64>(), cmds in proptest::collection::vec((pin_strategy(), any::<bool>()), 1..30)) {
        let net = net_from_seed(seed);
        let mut board = BoardState::new(net.clone(), GpioMap::default()).unwrap();
        for (p, high) in cmds {
            board.apply_command(PinMessage::command(p, SignalLevel::from_bool(high))).unwrap();
            prop_assert_eq!(board.output_vector(), oracle_eval(&net, board.input_vector()).unwrap());
        }
    }

    #[test]
    fn faults_only_touch_their_pins(p in pin_strategy(), kind in 0u8..3, idx in 0usize..32) {
        let clean = PinVector::from_index(idx);
        let fault = match kind {
            0 => FaultSpec::StuckLow(p),
            1 => FaultSpec::StuckHigh(p),
            _ => FaultSpec::Inverted(p),
        };
        let out = apply_faults(&[fault], clean);
        for q in Pin::all().filter(|&q| q != p) {
            prop_assert_eq!(out.get(q), clean.get(q));
        }
    }

    #[test]
    fn kmap_cells_equal_table_rows(t in table_strategy(), p in pin_strategy()) {
        let m = build_kmap(&t, p).unwrap();
        for row in t.rows() {
            prop_assert_eq!(m.cell(row.inputs), row.outputs.get(p).bit());
        }
    }

    #[test]
    fn diff_is_zero_iff_columns_equal(a in table_strategy(), b in table_strategy(), p in pin_strategy()) {
        let d = diff_kmaps(&build_kmap(&a, p).unwrap(), &build_kmap(&b, p).unwrap()).unwrap();
        let equal = a.rows().iter().zip(b.rows()).all(|(x, y)| x.outputs.get(p) == y.outputs.get(p));
        prop_assert_eq!(d.is_zero, equal);
        prop_assert_eq!(d.nonzero_vectors().is_empty(), equal);
    }

    #[test]
    fn virtual_clock_is_monotonic(steps in proptest::collection::vec(0u64..1000, 0..50)) {
        let clock = Clock::new_virtual();
        let mut last = clock.now_ms();
        for s in steps {
            clock.advance(s).unwrap();
            let now = clock.now_ms();
            prop_assert_eq!(now, last + s);
            last = now;
        }
    }
}

#[test]
fn mom_sweep_on_random_netlists_matches_oracle() {
    for seed in 0..20 {
        let net = net_from_seed(seed);
        let t = mom_sweep(&net).unwrap();
        for row in t.rows() {
            assert_eq!(row.outputs, oracle_eval(&net, row.inputs).unwrap(), "seed {seed}");
        }
    }
}

#[test]
fn reference_netlist_has_expected_scale() {
    use shia_core::logic::GateKind;
    let net = reference_netlist();
    let splitters = net.blocks.iter().filter(|b| b.kind == GateKind::Splitter).count();
    assert!(net.blocks.len() - splitters >= 6);
    assert!(splitters >= 2);
    assert!(net.validate().is_empty());
}
