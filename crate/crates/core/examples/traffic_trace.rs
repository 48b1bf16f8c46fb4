//! Generates the phase-ordered traffic of BERT-Base on a 3D system and
//! prints bytes per kernel kind.

use hetnoi::platform::{build_platform, Integration, SystemConfig};
use hetnoi::traffic::{check_trace, default_mapping, generate_trace};
use hetnoi::workload::{preset, SequenceConfig};

fn main() -> hetnoi::Result<()> {
    let p = build_platform(&SystemConfig::new(36, Integration::Stacked))?;
    let model = preset("BERT-Base").expect("preset exists");
    let mapping = default_mapping(&p, &model);
    let trace = generate_trace(&mapping, &model, &SequenceConfig::new(128)?)?;
    check_trace(&p, &mapping, &trace)?;
    println!("{} phases over {} timestamps", trace.phases.len(), trace.timestamps().len());
    for (kind, bytes) in trace.bytes_by_kind() {
        println!("{kind:<14} {:>10.2} MB", bytes as f64 / 1e6);
    }
    let first = trace.to_csv()?;
    for line in first.lines().take(6) {
        println!("{line}");
    }
    Ok(())
}
