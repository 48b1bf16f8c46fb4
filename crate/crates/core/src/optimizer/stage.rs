//! Learned restarts: a forest predicts which starting design leads local
//! search to the largest hypervolume.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{Forest, ForestParams};
use super::search::{local_search, SearchContext};
use super::{Objectives, ParetoSet};
use crate::error::{Error, Result};
use crate::netsim::{SimReport, Simulator};
use crate::noi::Design;
use crate::rng;
use crate::traffic::TrafficTrace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Pick the start with the highest predicted hypervolume.
    #[default]
    Learned,
    /// Pick a start uniformly from the pool.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageConfig {
    /// Local-search runs.
    pub budget: usize,
    pub start_pool: usize,
    /// Random moves applied to build each candidate start.
    pub perturbation_moves: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self { budget: 6, start_pool: 20, perturbation_moves: 4, strategy: Strategy::Learned, seed: 0 }
    }
}

pub const FEATURE_NAMES: [&str; 8] = [
    "mu",
    "sigma",
    "max_link_load",
    "mean_hops",
    "links",
    "mean_link_stages",
    "sm_to_mc_hops",
    "macro_head_to_mc_hops",
];

/// Starting-state descriptor fed to the forest.
pub fn features(ctx: &SearchContext<'_>, design: &Design) -> Result<Vec<f64>> {
    let o = ctx.evaluate(design)?;
    let p = ctx.platform;
    let t = design.tables();
    let hops = |a: usize, b: usize| t.hops(design.router_of(a), design.router_of(b)).unwrap_or(0) as f64;
    let mut sm_mc = (0.0f64, 0.0f64);
    for c in &p.clusters {
        for &sm in &c.sms {
            sm_mc.0 += hops(sm, c.mc);
            sm_mc.1 += 1.0;
        }
    }
    let head = p.reram_macro[0];
    let head_mc = p.clusters.iter().map(|c| hops(head, c.mc)).sum::<f64>() / p.clusters.len().max(1) as f64;
    let stages = design.links.iter().map(|l| f64::from(l.stages)).sum::<f64>() / design.links.len().max(1) as f64;
    Ok(vec![
        o.mu,
        o.sigma,
        ctx.trace.max_link_load(design)? as f64,
        ctx.trace.mean_hops(design)?,
        design.links.len() as f64,
        stages,
        sm_mc.0 / sm_mc.1.max(1.0),
        head_mc,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageIteration {
    pub iteration: usize,
    pub chosen: usize,
    pub predicted: Option<f64>,
    pub start: Objectives,
    pub local_phv: f64,
    pub global_phv: f64,
    pub archive_size: usize,
}

#[derive(Clone, Debug)]
pub struct StageResult {
    pub archive: ParetoSet,
    pub reference: Objectives,
    pub history: Vec<StageIteration>,
}

/// Alternates learned start selection and Pareto local search, merging
/// every run into one global archive.
pub fn stage_explore(ctx: &SearchContext<'_>, mesh: &Design, cfg: &StageConfig) -> Result<StageResult> {
    let reference = ctx.evaluate(mesh)?.scaled(1.1);
    let mut archive = ParetoSet::new();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut forest: Option<Forest> = None;
    let mut history = Vec::new();

    for it in 0..cfg.budget.max(1) {
        let mut r = rng::indexed_stream(cfg.seed, "stage", it as u64);
        let sources: Vec<&Design> = std::iter::once(mesh).chain(archive.sorted().into_iter().map(|m| &m.design)).collect();
        let pool: Vec<Design> = (0..cfg.start_pool.max(1))
            .map(|j| {
                let mut d = if j % 2 == 0 || sources.len() == 1 {
                    mesh.clone()
                } else {
                    sources[1 + (j / 2) % (sources.len() - 1)].clone()
                };
                for _ in 0..cfg.perturbation_moves {
                    if let Some(next) = ctx.perturb(&d, &mut r) {
                        d = next;
                    }
                }
                d
            })
            .collect();
        let feats: Vec<Vec<f64>> = pool.par_iter().map(|d| features(ctx, d)).collect::<Result<_>>()?;
        let (chosen, predicted) = match (&forest, cfg.strategy) {
            (Some(f), Strategy::Learned) => {
                let scores: Vec<f64> = feats.iter().map(|x| f.predict(x)).collect();
                let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
                (best, Some(scores[best]))
            }
            _ => (r.gen_range(0..pool.len()), None),
        };
        let start = &pool[chosen];
        let local = local_search(ctx, start, rng::indexed_seed(cfg.seed, "local", it as u64))?;
        let local_phv = local.phv(reference);
        for m in local.members {
            archive.insert(m.design, m.objectives);
        }
        xs.push(feats[chosen].clone());
        ys.push(local_phv);
        forest = Forest::fit(&xs, &ys, ForestParams::default(), rng::indexed_seed(cfg.seed, "forest", it as u64));
        history.push(StageIteration {
            iteration: it,
            chosen,
            predicted,
            start: ctx.evaluate(start)?,
            local_phv,
            global_phv: archive.phv(reference),
            archive_size: archive.len(),
        });
    }
    Ok(StageResult { archive, reference, history })
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub index: usize,
    pub design: Design,
    pub report: SimReport,
    /// Set when no member beat the mesh latency.
    pub warning: Option<String>,
    pub reports: Vec<SimReport>,
}

/// Simulates every member and returns the lowest-EDP design faster than the
/// mesh, falling back to the fastest design with a warning.
pub fn select_final(
    archive: &[Design],
    sim: &Simulator<'_>,
    trace: &TrafficTrace,
    mesh_report: &SimReport,
) -> Result<Selection> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let reports: Vec<SimReport> = archive.par_iter().map(|d| sim.run(d, trace)).collect::<Result<_>>()?;
    let by_edp = (0..reports.len())
        .filter(|&i| reports[i].end_to_end_cycles < mesh_report.end_to_end_cycles)
        .min_by(|&a, &b| reports[a].edp.total_cmp(&reports[b].edp).then(a.cmp(&b)));
    let (index, warning) = match by_edp {
        Some(i) => (i, None),
        None => {
            let i = (0..reports.len())
                .min_by(|&a, &b| {
                    reports[a].end_to_end_cycles.cmp(&reports[b].end_to_end_cycles).then(
                        reports[a].edp.total_cmp(&reports[b].edp).then(a.cmp(&b)),
                    )
                })
                .expect("archive is non-empty");
            (i, Some("no design is faster than the mesh; returning the fastest design".to_string()))
        }
    };
    Ok(Selection { index, design: archive[index].clone(), report: reports[index].clone(), warning, reports })
}
