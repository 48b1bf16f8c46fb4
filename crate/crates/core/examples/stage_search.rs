//! Learned-restart Pareto search on a small system, printing hypervolume
//! growth per iteration and the final archive.

use hetnoi::netsim::CostModel;
use hetnoi::optimizer::{SearchParams, StageConfig, Strategy};
use hetnoi::pipeline::{explore, ExploreOptions, Workload};
use hetnoi::platform::{Integration, SystemConfig};
use hetnoi::traffic::TraceOptions;
use hetnoi::workload::{preset, SequenceConfig};

fn main() -> hetnoi::Result<()> {
    let model = preset("BERT-Base").expect("preset exists");
    let work = Workload::new(
        &SystemConfig::new(36, Integration::Stacked),
        &model,
        &SequenceConfig::new(128)?,
        &TraceOptions::default(),
    )?;
    let opts = ExploreOptions {
        stage: StageConfig { budget: 4, strategy: Strategy::Learned, seed: 1, ..StageConfig::default() },
        search: SearchParams { expansion_budget: 1500, ..SearchParams::default() },
        costs: CostModel::default(),
    };
    let x = explore(&work, &opts)?;
    for it in &x.stage.history {
        println!(
            "iter {} start {:>2} predicted {:>10} local phv {:.4e} global phv {:.4e} archive {}",
            it.iteration,
            it.chosen,
            it.predicted.map_or("-".into(), |p| format!("{p:.3e}")),
            it.local_phv,
            it.global_phv,
            it.archive_size
        );
    }
    for (i, m) in x.stage.archive.sorted().iter().enumerate() {
        let mark = if i == x.selection.index { "  <- selected" } else { "" };
        println!("  mu {:.4e} sigma {:.4e} links {}{mark}", m.objectives.mu, m.objectives.sigma, m.design.links.len());
    }
    print!("{}", x.comparison.to_csv());
    Ok(())
}
