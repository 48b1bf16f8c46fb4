//! Scores the mesh and a few random single-move neighbours by mean and
//! standard deviation of link utilization.

use hetnoi::noi::{hop_histogram, utilization};
use hetnoi::optimizer::{dominates, neighbors, Objectives, SearchContext, SearchParams};
use hetnoi::pipeline::Workload;
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
    let mesh = work.mesh(0)?;
    let stats = utilization(&mesh, &work.trace)?;
    let base = Objectives::new(stats.mu, stats.sigma);
    let hops = hop_histogram(&mesh, &work.trace, false)?;
    println!("mesh: mu {:.4e} sigma {:.4e} mean hops {:.3}", base.mu, base.sigma, hops.mean);

    let ctx = SearchContext::new(&work.platform, &work.trace, SearchParams::default());
    for (i, d) in neighbors(&ctx, &mesh, 11).iter().take(8).enumerate() {
        let o = ctx.evaluate(d)?;
        let mark = if dominates(o, base) { "dominates mesh" } else { "" };
        println!("n{i}: {} links mu {:.4e} sigma {:.4e} {mark}", d.links.len(), o.mu, o.sigma);
    }
    Ok(())
}
