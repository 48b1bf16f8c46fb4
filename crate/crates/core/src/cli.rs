//! Command-line driver: run-config ingestion, orchestration and report files.
//!
//! Every command is a pure function of its config files and seed; all files
//! are written in a fixed order with no timestamps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::{compare, CostModel, SimReport};
use crate::noi::{utilization, validate, Design};
use crate::optimizer::{SearchParams, StageConfig, Strategy};
use crate::pipeline::{explore, ExploreOptions, Exploration, Workload};
use crate::platform::SystemConfig;
use crate::traffic::{check_trace, TraceOptions, TrafficTrace};
use crate::workload::{
    fc_dominance, intermediate_storage_ratio, kernel_sequence, preset, reram_write_load, ModelSpec, ReramArray,
    SequenceConfig, WriteEstimate,
};

pub const SCHEMA_ID: &str = "hetnoi.run-config/v1";

/// A preset name or a full inline model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Preset(String),
    Inline(ModelSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Local-search runs.
    pub budget: usize,
    pub seed: Option<u64>,
    pub start_pool: usize,
    pub expansion_budget: usize,
    pub perturbation_moves: usize,
    pub strategy: Strategy,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let stage = StageConfig::default();
        Self {
            budget: stage.budget,
            seed: None,
            start_pool: stage.start_pool,
            expansion_budget: SearchParams::default().expansion_budget,
            perturbation_moves: stage.perturbation_moves,
            strategy: stage.strategy,
        }
    }
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_id: String,
    pub system: SystemConfig,
    pub model: ModelRef,
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub costs: CostModel,
    #[serde(default)]
    pub trace: TraceOptions,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        if cfg.schema_id != SCHEMA_ID {
            return Err(Error::Config(format!("schema_id must be '{SCHEMA_ID}' (got '{}')", cfg.schema_id)));
        }
        cfg.model_spec()?;
        cfg.sequence.validate()?;
        cfg.costs.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let spec = match &self.model {
            ModelRef::Preset(name) => {
                preset(name).ok_or_else(|| Error::Config(format!("unknown model preset '{name}'")))?
            }
            ModelRef::Inline(spec) => spec.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn seed(&self) -> Result<u64> {
        self.optimizer.seed.ok_or_else(|| Error::Config("optimizer.seed is required (or pass --seed)".into()))
    }

    pub fn workload(&self) -> Result<Workload> {
        Workload::new(&self.system, &self.model_spec()?, &self.sequence, &self.trace)
    }

    pub fn explore_options(&self) -> Result<ExploreOptions> {
        let o = &self.optimizer;
        Ok(ExploreOptions {
            stage: StageConfig {
                budget: o.budget,
                start_pool: o.start_pool,
                perturbation_moves: o.perturbation_moves,
                strategy: o.strategy,
                seed: self.seed()?,
            },
            search: SearchParams { expansion_budget: o.expansion_budget, ..SearchParams::default() },
            costs: self.costs,
        })
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, common: &Common) -> Self {
        if let Some(seed) = common.seed {
            self.optimizer.seed = Some(seed);
        }
        if let Some(budget) = common.budget {
            self.optimizer.budget = budget;
        }
        if let Some(out) = &common.out {
            self.outputs = out.clone();
        }
        self
    }
}

#[derive(Debug, Parser)]
#[command(name = "hetnoi", version, about = "Interposer network design for heterogeneous transformer accelerators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Run-config JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Root seed; overrides `optimizer.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Local-search runs; overrides `optimizer.budget`.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Output directory; overrides `outputs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for search and simulation. Results do not depend on it.
    #[arg(long)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the traffic trace and a workload summary.
    Trace(Common),
    /// Explore NoI designs and select the final one.
    Explore(Common),
    /// Explore two configs over the same workload and compare the results.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Second run-config.
        #[arg(long)]
        against: PathBuf,
    },
    /// Simulate an existing design on the configured (or a given) trace.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Design JSON as written by `explore` or `baseline`.
        #[arg(long)]
        design: PathBuf,
        /// Trace CSV; regenerated from the config when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write the mesh baseline design and its report.
    Baseline(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Trace(c) | Command::Explore(c) | Command::Baseline(c) => c,
            Command::Compare { common, .. } | Command::Simulate { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace(_) => "trace",
            Command::Explore(_) => "explore",
            Command::Compare { .. } => "compare",
            Command::Simulate { .. } => "simulate",
            Command::Baseline(_) => "baseline",
        }
    }
}

/// Files written by a command, in write order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    fn sub(&mut self, name: &str) -> Result<Outputs> {
        Outputs::new(&self.dir.join(name))
    }

    fn absorb(&mut self, other: Outputs) {
        self.files.extend(other.files);
    }
}

#[derive(Debug, Serialize)]
struct WorkloadSummary {
    model: ModelSpec,
    sequence: SequenceConfig,
    kernels: usize,
    phases: usize,
    total_flops: u64,
    mvm_flops: u64,
    weight_bytes: u64,
    trace_bytes: u64,
    trace_bytes_by_kind: std::collections::BTreeMap<String, u64>,
    fc_dominance: f64,
    intermediate_storage_ratio: f64,
    reram_writes: WriteEstimate,
}

fn summarize(work: &Workload) -> Result<WorkloadSummary> {
    let kernels = kernel_sequence(&work.model, &work.seq);
    Ok(WorkloadSummary {
        model: work.model.clone(),
        sequence: work.seq,
        kernels: kernels.len(),
        phases: work.trace.phases.len(),
        total_flops: kernels.iter().map(|k| k.flops).sum(),
        mvm_flops: kernels.iter().map(|k| k.mvm_flops).sum(),
        weight_bytes: kernels.iter().map(|k| k.weight_bytes).sum(),
        trace_bytes: work.trace.total_bytes(),
        trace_bytes_by_kind: work.trace.bytes_by_kind(),
        fc_dominance: fc_dominance(&work.model, &work.seq),
        intermediate_storage_ratio: intermediate_storage_ratio(&work.model, &work.seq),
        reram_writes: reram_write_load(&work.model, &work.seq, &ReramArray::default())?,
    })
}

fn write_report(out: &mut Outputs, prefix: &str, report: &SimReport) -> Result<()> {
    out.json(&format!("{prefix}_report.json"), report)?;
    out.write(&format!("{prefix}_phases.csv"), report.phases_csv())?;
    out.write(&format!("{prefix}_hops.csv"), report.hop_histogram.to_csv())
}

fn write_design(out: &mut Outputs, prefix: &str, work: &Workload, design: &Design) -> Result<()> {
    out.json(&format!("{prefix}.json"), design)?;
    out.write(&format!("{prefix}.dot"), design.to_dot(&work.platform))?;
    out.write(&format!("{prefix}_links.csv"), utilization(design, &work.trace)?.to_csv(design))?;
    out.json(&format!("{prefix}_validation.json"), &validate(design, &work.platform))
}

fn pareto_csv(x: &Exploration) -> String {
    let mut s = String::from("rank,mu,sigma,links,mean_hops,latency_cycles,energy_j,edp,selected\n");
    for (i, (m, r)) in x.stage.archive.sorted().into_iter().zip(&x.selection.reports).enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{:e},{:e},{}",
            m.objectives.mu,
            m.objectives.sigma,
            m.design.total_links(),
            r.hop_histogram.mean,
            r.end_to_end_cycles,
            r.energy_j,
            r.edp,
            i == x.selection.index
        );
    }
    s
}

#[derive(Debug, Serialize)]
struct ExploreSummary<'a> {
    seed: u64,
    archive_size: usize,
    selected: usize,
    warning: Option<&'a str>,
    reference: crate::optimizer::Objectives,
    final_phv: f64,
    mesh_latency_cycles: u64,
    selected_latency_cycles: u64,
    mesh_edp: f64,
    selected_edp: f64,
    selected_mean_hops: f64,
}

fn run_trace(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let work = cfg.workload()?;
    out.write("trace.csv", work.trace.to_csv()?)?;
    out.json("workload.json", &summarize(&work)?)
}

fn run_baseline(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let work = cfg.workload()?;
    let mesh = work.mesh(cfg.seed()?)?;
    let report = work.simulator(&cfg.costs)?.run(&mesh, &work.trace)?;
    out.write("platform.dot", work.platform.to_dot(&mesh.placement))?;
    write_design(out, "mesh", &work, &mesh)?;
    write_report(out, "mesh", &report)
}

fn run_explore(cfg: &RunConfig, out: &mut Outputs) -> Result<Exploration> {
    let work = cfg.workload()?;
    let x = explore(&work, &cfg.explore_options()?)?;
    out.write("platform.dot", work.platform.to_dot(&x.mesh.placement))?;
    out.write("pareto.csv", pareto_csv(&x))?;
    let mut history = String::new();
    for it in &x.stage.history {
        history.push_str(&serde_json::to_string(it)?);
        history.push('\n');
    }
    out.write("stage_history.jsonl", history)?;
    write_design(out, "mesh", &work, &x.mesh)?;
    write_report(out, "mesh", &x.mesh_report)?;
    write_design(out, "selected", &work, &x.selection.design)?;
    write_report(out, "selected", &x.selection.report)?;
    out.write("comparison.csv", x.comparison.to_csv())?;
    out.json(
        "summary.json",
        &ExploreSummary {
            seed: cfg.seed()?,
            archive_size: x.stage.archive.len(),
            selected: x.selection.index,
            warning: x.selection.warning.as_deref(),
            reference: x.stage.reference,
            final_phv: x.stage.archive.phv(x.stage.reference),
            mesh_latency_cycles: x.mesh_report.end_to_end_cycles,
            selected_latency_cycles: x.selection.report.end_to_end_cycles,
            mesh_edp: x.mesh_report.edp,
            selected_edp: x.selection.report.edp,
            selected_mean_hops: x.selection.report.hop_histogram.mean,
        },
    )?;
    Ok(x)
}

fn run_simulate(cfg: &RunConfig, design: &Path, trace: Option<&Path>, out: &mut Outputs) -> Result<()> {
    let work = cfg.workload()?;
    let design = Design::from_json(&work.platform, &fs::read_to_string(design)?)?;
    let trace = match trace {
        Some(path) => TrafficTrace::from_csv(&fs::read_to_string(path)?)?,
        None => work.trace.clone(),
    };
    check_trace(&work.platform, &work.mapping, &trace)?;
    let report = work.simulator(&cfg.costs)?.run(&design, &trace)?;
    write_report(out, "sim", &report)
}

fn run_compare(a: &RunConfig, b: &RunConfig, out: &mut Outputs) -> Result<()> {
    if a.model_spec()? != b.model_spec()? || a.sequence != b.sequence {
        return Err(Error::Mismatch("compared configs must share model and sequence".into()));
    }
    let mut out_a = out.sub("a")?;
    let xa = run_explore(a, &mut out_a)?;
    out.absorb(out_a);
    let mut out_b = out.sub("b")?;
    let xb = run_explore(b, &mut out_b)?;
    out.absorb(out_b);
    let table = compare(&[("a", &xa.selection.report), ("b", &xb.selection.report)])?;
    out.write("comparison.csv", table.to_csv())?;
    out.json("comparison.json", &table)?;
    out.write("hops_a.csv", xa.selection.report.hop_histogram.to_csv())?;
    out.write("hops_b.csv", xb.selection.report.hop_histogram.to_csv())
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let common = cli.command.common();
    let cfg = RunConfig::load(&common.config)?.with_overrides(common);
    let threads = common.parallel.unwrap_or(0);
    if common.parallel == Some(0) {
        return Err(Error::Config("--parallel must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut out = Outputs::new(&cfg.outputs)?;
        match &cli.command {
            Command::Trace(_) => run_trace(&cfg, &mut out)?,
            Command::Baseline(_) => run_baseline(&cfg, &mut out)?,
            Command::Explore(_) => {
                run_explore(&cfg, &mut out)?;
            }
            Command::Simulate { design, trace, .. } => run_simulate(&cfg, design, trace.as_deref(), &mut out)?,
            Command::Compare { against, .. } => {
                let other = RunConfig::load(against)?.with_overrides(common);
                run_compare(&cfg, &other, &mut out)?;
            }
        }
        Ok(out.files)
    })
}

/// Machine-readable error document.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({ "error": { "kind": err.kind(), "message": err.to_string() } }).to_string()
}
