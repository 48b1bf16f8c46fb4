//! Simulates the mesh interposer network for a BERT-Large workload and
//! prints the slowest phases.

use hetnoi::netsim::CostModel;
use hetnoi::noi::validate;
use hetnoi::pipeline::Workload;
use hetnoi::platform::{Integration, SystemConfig};
use hetnoi::traffic::TraceOptions;
use hetnoi::workload::{preset, SequenceConfig};

fn main() -> hetnoi::Result<()> {
    let model = preset("BERT-Large").expect("preset exists");
    let work = Workload::new(
        &SystemConfig::new(64, Integration::Stacked),
        &model,
        &SequenceConfig::new(128)?,
        &TraceOptions::default(),
    )?;
    let mesh = work.mesh(0)?;
    let checks = validate(&mesh, &work.platform);
    println!("mesh: {} routers, {} links, valid = {}", mesh.router_count(), mesh.links.len(), checks.is_valid());
    let report = work.simulator(&CostModel::default())?.run(&mesh, &work.trace)?;
    println!(
        "latency {} cycles ({:.3} ms), energy {:.3e} J, EDP {:.3e}",
        report.end_to_end_cycles,
        report.end_to_end_seconds * 1e3,
        report.energy_j,
        report.edp
    );
    let mut phases = report.phases.clone();
    phases.sort_by_key(|p| std::cmp::Reverse(p.latency_cycles));
    for p in phases.iter().take(5) {
        println!("  {:<16} {:>9} cycles  comm {:>9}  compute {:>9}", p.label, p.latency_cycles, p.comm_cycles, p.compute_cycles);
    }
    Ok(())
}
