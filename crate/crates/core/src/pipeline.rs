//! End-to-end flows: workload setup, mesh baseline, exploration, selection.

use crate::error::Result;
use crate::netsim::{compare, Comparison, CostModel, SimReport, Simulator};
use crate::noi::Design;
use crate::optimizer::{select_final, stage_explore, SearchContext, SearchParams, Selection, StageConfig, StageResult};
use crate::platform::{build_platform, place_initial, Placement, Platform, SystemConfig};
use crate::traffic::{check_trace, default_mapping, generate_trace_with, KernelMapping, TraceOptions, TrafficTrace};
use crate::workload::{ModelSpec, SequenceConfig};

/// A platform with its mapped workload and trace.
#[derive(Clone, Debug)]
pub struct Workload {
    pub platform: Platform,
    pub model: ModelSpec,
    pub seq: SequenceConfig,
    pub mapping: KernelMapping,
    pub trace: TrafficTrace,
}

impl Workload {
    pub fn new(system: &SystemConfig, model: &ModelSpec, seq: &SequenceConfig, opts: &TraceOptions) -> Result<Self> {
        let platform = build_platform(system)?;
        let mapping = default_mapping(&platform, model);
        let trace = generate_trace_with(&mapping, model, seq, opts)?;
        check_trace(&platform, &mapping, &trace)?;
        Ok(Self { platform, model: model.clone(), seq: *seq, mapping, trace })
    }

    pub fn simulator(&self, costs: &CostModel) -> Result<Simulator<'_>> {
        Simulator::new(&self.platform, &self.mapping, &self.model, &self.seq, costs)
    }

    pub fn initial_placement(&self, seed: u64) -> Result<Placement> {
        place_initial(&self.platform, seed)
    }

    /// Mesh over the seeded initial placement.
    pub fn mesh(&self, seed: u64) -> Result<Design> {
        Ok(Design::mesh(&self.platform, self.initial_placement(seed)?))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExploreOptions {
    pub stage: StageConfig,
    pub search: SearchParams,
    pub costs: CostModel,
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub mesh: Design,
    pub mesh_report: SimReport,
    pub stage: StageResult,
    pub selection: Selection,
    pub comparison: Comparison,
}

/// Mesh baseline, learned-restart search and final selection.
pub fn explore(work: &Workload, opts: &ExploreOptions) -> Result<Exploration> {
    let mesh = work.mesh(opts.stage.seed)?;
    let sim = work.simulator(&opts.costs)?;
    let mesh_report = sim.run(&mesh, &work.trace)?;
    let ctx = SearchContext::new(&work.platform, &work.trace, opts.search);
    let stage = stage_explore(&ctx, &mesh, &opts.stage)?;
    let designs: Vec<Design> = stage.archive.sorted().into_iter().map(|m| m.design.clone()).collect();
    let selection = select_final(&designs, &sim, &work.trace, &mesh_report)?;
    let comparison = compare(&[("mesh", &mesh_report), ("selected", &selection.report)])?;
    Ok(Exploration { mesh, mesh_report, stage, selection, comparison })
}
