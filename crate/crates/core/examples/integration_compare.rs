//! Stacked against planar memory for Llama2 on 100 chiplets: selected
//! design latency and per-kernel speedup.

use hetnoi::netsim::{compare, CostModel};
use hetnoi::optimizer::{SearchParams, StageConfig};
use hetnoi::pipeline::{explore, ExploreOptions, Workload};
use hetnoi::platform::{Integration, SystemConfig};
use hetnoi::traffic::TraceOptions;
use hetnoi::workload::{preset, SequenceConfig};

fn main() -> hetnoi::Result<()> {
    let model = preset("Llama2-7B").expect("preset exists").with_layers(4);
    let opts = ExploreOptions {
        stage: StageConfig { budget: 2, seed: 1, ..StageConfig::default() },
        search: SearchParams { expansion_budget: 800, ..SearchParams::default() },
        costs: CostModel::default(),
    };
    for n in [64, 256, 1024] {
        let seq = SequenceConfig::new(n)?;
        let mut reports = Vec::new();
        for integration in [Integration::Planar, Integration::Stacked] {
            let work = Workload::new(&SystemConfig::new(100, integration), &model, &seq, &TraceOptions::default())?;
            reports.push(explore(&work, &opts)?.selection.report);
        }
        let table = compare(&[("2.5D", &reports[0]), ("3D", &reports[1])])?;
        let row = &table.rows[1];
        println!(
            "N={n:<5} 2.5D {:>11} cycles  3D {:>11} cycles  speedup {:.2}  hops {:.2} -> {:.2}",
            reports[0].end_to_end_cycles,
            reports[1].end_to_end_cycles,
            row.speedup,
            reports[0].hop_histogram.mean,
            reports[1].hop_histogram.mean
        );
        for (kind, s) in &row.kind_speedup {
            println!("         {kind:<14} {s:.2}");
        }
    }
    Ok(())
}
