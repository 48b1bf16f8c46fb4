//! Packet simulator: channel counts, closed form, contention and reports.

use hetnoi::netsim::{compare, schedule, simulate_flows, simulate_flows_with, Channels, CostModel, PhaseReport};
use hetnoi::pipeline::Workload;
use hetnoi::platform::{build_platform, mesh_design, Integration, Role, RoleCounts, SystemConfig};
use hetnoi::traffic::{Flow, TraceOptions};
use hetnoi::workload::{preset, KernelKind, SequenceConfig};
use proptest::prelude::*;

fn counts(sm: usize, mc: usize, reram: usize) -> RoleCounts {
    RoleCounts { sm, mc, dram: mc, reram }
}

#[test]
fn channels_follow_chiplet_parameters() {
    let p = build_platform(&SystemConfig::new(36, Integration::Stacked)).unwrap();
    let ch = Channels::of(&p, &CostModel::default());
    assert_eq!(ch.ports.len(), p.len());
    for c in &p.chiplets {
        let expected = match c.role() {
            Role::Mc => 4,
            Role::Dram => 16,
            _ => 1,
        };
        assert_eq!(ch.ports[c.id], expected, "{:?}", c.role());
    }
    assert_eq!(ch.vertical, 16);
}

#[test]
fn extra_dram_channels_shorten_a_weight_stream() {
    let p = build_platform(&SystemConfig::new(0, Integration::Stacked).with_counts(counts(2, 1, 1))).unwrap();
    let mesh = mesh_design(&p);
    let costs = CostModel::default();
    let (dram, mc) = p.vertical_pairs[0];
    let flows: Vec<Flow> = (0..8).map(|_| Flow { src: dram, dst: mc, bytes: 16 * 64 }).collect();
    let serial = simulate_flows(&mesh, &flows, &costs).unwrap();
    let wide = simulate_flows_with(&mesh, &flows, &costs, &Channels::of(&p, &costs)).unwrap();
    assert_eq!(serial.flits_delivered, wide.flits_delivered);
    assert!(wide.cycles < serial.cycles, "{} vs {}", wide.cycles, serial.cycles);
    // Eight packets of 64 flits over one lane each way.
    assert!(serial.cycles >= 8 * 64);
}

#[test]
fn disjoint_flows_do_not_interfere() {
    let p = build_platform(&SystemConfig::new(0, Integration::Planar).with_counts(counts(4, 2, 2))).unwrap();
    let mesh = mesh_design(&p);
    let c = CostModel::default();
    let at = |i| mesh.chiplet_at(&p, i).unwrap();
    let (a, b, x, y) = (at(0), at(1), at(p.len() - 2), at(p.len() - 1));
    let f1 = Flow { src: a, dst: b, bytes: 320 };
    let f2 = Flow { src: x, dst: y, bytes: 320 };
    let one = simulate_flows(&mesh, &[f1], &c).unwrap();
    let both = simulate_flows(&mesh, &[f1, f2], &c).unwrap();
    let other = simulate_flows(&mesh, &[f2], &c).unwrap();
    assert_eq!(both.cycles, one.cycles.max(other.cycles));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lone_flow_matches_closed_form(
        sm in 1usize..=6,
        mc in 1usize..=3,
        stacked in any::<bool>(),
        a in 0usize..64,
        b in 0usize..64,
        bytes in 1u64..5000,
    ) {
        let integration = if stacked { Integration::Stacked } else { Integration::Planar };
        let p = build_platform(&SystemConfig::new(0, integration).with_counts(counts(sm, mc, 1))).unwrap();
        let mesh = mesh_design(&p);
        let (src, dst) = (a % p.len(), b % p.len());
        prop_assume!(src != dst);
        let c = CostModel { max_packet_flits: u64::MAX, ..CostModel::default() };
        let path = mesh.route(src, dst).unwrap();
        let s = simulate_flows(&mesh, &[Flow { src, dst, bytes }], &c).unwrap();
        prop_assert_eq!(s.cycles, c.closed_form_latency(&mesh, &path, bytes));
        prop_assert_eq!(s.flits_injected, c.flits(bytes));
        prop_assert_eq!(s.flits_injected, s.flits_delivered);
    }

    #[test]
    fn schedule_bounds(
        phases in prop::collection::vec((0u32..6, 0u8..3, 0u64..1000), 0..24),
    ) {
        let reports: Vec<PhaseReport> = phases
            .iter()
            .map(|&(t, lane, latency)| PhaseReport {
                t,
                label: String::new(),
                kind: KernelKind::Kqv,
                block: 0,
                lane,
                concurrent_group: None,
                bytes: 0,
                comm_cycles: 0,
                compute_cycles: 0,
                latency_cycles: latency,
                energy_j: 0.0,
                flits_injected: 0,
                flits_delivered: 0,
            })
            .collect();
        let total = schedule(&reports);
        let sum: u64 = reports.iter().map(|r| r.latency_cycles).sum();
        let max = reports.iter().map(|r| r.latency_cycles).max().unwrap_or(0);
        prop_assert!(total <= sum);
        prop_assert!(total >= max);
    }
}

fn toy_workload() -> Workload {
    let model = preset("BERT-Base").unwrap().with_layers(2);
    Workload::new(
        &SystemConfig::new(11, Integration::Stacked),
        &model,
        &SequenceConfig::new(64).unwrap(),
        &TraceOptions::default(),
    )
    .unwrap()
}

#[test]
fn mesh_report_is_consistent() {
    let w = toy_workload();
    let sim = w.simulator(&CostModel::default()).unwrap();
    let mesh = w.mesh(0).unwrap();
    let r = sim.run(&mesh, &w.trace).unwrap();
    assert_eq!(r.phases.len(), w.trace.phases.len());
    assert_eq!(r.end_to_end_cycles, schedule(&r.phases));
    assert!(r.energy_j > 0.0);
    assert!((r.edp() - r.energy_j * r.end_to_end_seconds).abs() <= 1e-12 * r.edp().abs());
    for ph in &r.phases {
        assert_eq!(ph.flits_injected, ph.flits_delivered, "{}", ph.label);
        assert!(ph.latency_cycles >= ph.comm_cycles.min(ph.compute_cycles));
    }
    let csv = r.phases_csv();
    assert_eq!(csv.lines().count(), r.phases.len() + 1);
    let again = sim.run(&mesh, &w.trace).unwrap();
    assert_eq!(r, again);
}

#[test]
fn comparing_a_report_with_itself_gives_unit_ratios() {
    let w = toy_workload();
    let sim = w.simulator(&CostModel::default()).unwrap();
    let r = sim.run(&w.mesh(0).unwrap(), &w.trace).unwrap();
    let cmp = compare(&[("a", &r), ("b", &r)]).unwrap();
    for row in &cmp.rows {
        assert_eq!((row.speedup, row.energy_gain, row.edp_gain), (1.0, 1.0, 1.0));
        assert!(row.kind_speedup.values().all(|&v| v == 1.0));
    }
    assert_eq!(cmp.to_csv().lines().count(), 3);
    let mut other = r.clone();
    other.trace_fingerprint.push('x');
    assert!(matches!(compare(&[("a", &r), ("b", &other)]), Err(hetnoi::Error::Mismatch(_))));
}
