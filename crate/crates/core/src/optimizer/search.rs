//! Neighbourhood moves and Pareto local search.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Objectives, ParetoSet};
use crate::error::Result;
use crate::noi::{link_budget, CompiledTrace, Design};
use crate::platform::{ChipletId, Platform, Role};
use crate::rng;
use crate::traffic::TrafficTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    /// Neighbour evaluations per local search.
    pub expansion_budget: usize,
    /// Neighbours drawn per expansion when the neighbourhood is too large to list.
    pub samples_per_expansion: usize,
    /// Neighbourhoods up to this many moves are listed exhaustively.
    pub enumerate_limit: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { expansion_budget: 5000, samples_per_expansion: 48, enumerate_limit: 400 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    /// Exchange two planar chiplets (a stacked DRAM follows its MC).
    Swap(ChipletId, ChipletId),
    Remove(usize, usize),
    Add(usize, usize),
    /// Remove the first link and add the second.
    Rewire((usize, usize), (usize, usize)),
}

/// Shared read-only state of a search over one platform and trace.
pub struct SearchContext<'a> {
    pub platform: &'a Platform,
    pub trace: CompiledTrace,
    pub params: SearchParams,
    swappable: Vec<ChipletId>,
}

impl<'a> SearchContext<'a> {
    pub fn new(platform: &'a Platform, trace: &TrafficTrace, params: SearchParams) -> Self {
        // ReRAM chiplets stay on their curve so the macro chain is preserved.
        let swappable = platform.planar_ids().filter(|&id| platform.role(id) != Role::Reram).collect();
        Self { platform, trace: CompiledTrace::new(trace), params, swappable }
    }

    pub fn evaluate(&self, design: &Design) -> Result<Objectives> {
        let (mu, sigma) = self.trace.objectives(design)?;
        Ok(Objectives { mu, sigma })
    }

    fn link_ok(&self, design: &Design, a: usize, b: usize) -> bool {
        a != b
            && design.link_id(a, b).is_none()
            && self.platform.link_length_mm(design.routers[a], design.routers[b]) <= self.platform.max_link_mm + 1e-9
    }

    /// Applies a move; `None` if the result would be infeasible.
    pub fn apply(&self, design: &Design, mv: Move) -> Option<Design> {
        let budget = link_budget(design);
        let mut pairs = design.link_pairs();
        match mv {
            Move::Swap(a, b) => {
                return (a != b && self.swappable.contains(&a) && self.swappable.contains(&b))
                    .then(|| design.swapped(self.platform, a, b));
            }
            Move::Remove(a, b) => {
                let i = pairs.iter().position(|&p| p == (a.min(b), a.max(b)))?;
                pairs.remove(i);
            }
            Move::Add(a, b) => {
                if pairs.len() >= budget || !self.link_ok(design, a, b) {
                    return None;
                }
                pairs.push((a, b));
            }
            Move::Rewire((a, b), (c, d)) => {
                let i = pairs.iter().position(|&p| p == (a.min(b), a.max(b)))?;
                if !self.link_ok(design, c, d) {
                    return None;
                }
                pairs[i] = (c, d);
            }
        }
        let next = design.with_links(self.platform, &pairs);
        next.is_connected().then_some(next)
    }

    fn all_moves(&self, design: &Design) -> Vec<Move> {
        let n = design.router_count();
        let links = design.link_pairs();
        let mut moves = Vec::new();
        for (i, &a) in self.swappable.iter().enumerate() {
            for &b in &self.swappable[i + 1..] {
                moves.push(Move::Swap(a, b));
            }
        }
        let absent: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.link_ok(design, a, b))
            .collect();
        moves.extend(links.iter().map(|&(a, b)| Move::Remove(a, b)));
        moves.extend(absent.iter().map(|&(a, b)| Move::Add(a, b)));
        for &l in &links {
            moves.extend(absent.iter().map(|&p| Move::Rewire(l, p)));
        }
        moves
    }

    fn neighbourhood_size(&self, design: &Design) -> usize {
        let n = design.router_count();
        let s = self.swappable.len();
        let l = design.links.len();
        let pairs = n * n.saturating_sub(1) / 2;
        s * s.saturating_sub(1) / 2 + l + pairs.saturating_sub(l) * (l + 1)
    }

    fn random_move<R: Rng>(&self, design: &Design, rng: &mut R) -> Option<Move> {
        let n = design.router_count();
        let links = &design.links;
        let kind = rng.gen_range(0..8);
        let pick_pair = |rng: &mut R| {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            (a, b)
        };
        match kind {
            0..=3 if self.swappable.len() >= 2 => {
                let mut two = self.swappable.choose_multiple(rng, 2);
                Some(Move::Swap(*two.next()?, *two.next()?))
            }
            4 | 5 if !links.is_empty() && n >= 2 => {
                let l = links[rng.gen_range(0..links.len())];
                let to = if rng.gen_bool(0.5) {
                    // Keep one endpoint: relocate the other.
                    let keep = if rng.gen_bool(0.5) { l.a } else { l.b };
                    (keep, rng.gen_range(0..n))
                } else {
                    pick_pair(rng)
                };
                Some(Move::Rewire((l.a, l.b), to))
            }
            6 if !links.is_empty() => {
                let l = links[rng.gen_range(0..links.len())];
                Some(Move::Remove(l.a, l.b))
            }
            7 if n >= 2 => Some(Move::Add(pick_pair(rng).0, pick_pair(rng).1)),
            _ => None,
        }
    }

    /// One random feasible neighbour.
    pub fn perturb<R: Rng>(&self, design: &Design, rng: &mut R) -> Option<Design> {
        (0..64).find_map(|_| self.random_move(design, rng).and_then(|mv| self.apply(design, mv)))
    }

    /// Feasible neighbours: the whole neighbourhood when it is small,
    /// otherwise a seeded sample.
    pub fn neighbors(&self, design: &Design, seed: u64) -> Vec<Design> {
        if self.neighbourhood_size(design) <= self.params.enumerate_limit {
            return self.all_moves(design).into_iter().filter_map(|mv| self.apply(design, mv)).collect();
        }
        let mut rng = rng::stream(seed, "neighbors");
        let mut out = Vec::with_capacity(self.params.samples_per_expansion);
        let mut attempts = 0;
        while out.len() < self.params.samples_per_expansion && attempts < 8 * self.params.samples_per_expansion {
            attempts += 1;
            if let Some(d) = self.random_move(design, &mut rng).and_then(|mv| self.apply(design, mv)) {
                out.push(d);
            }
        }
        out
    }
}

pub fn neighbors(ctx: &SearchContext<'_>, design: &Design, seed: u64) -> Vec<Design> {
    ctx.neighbors(design, seed)
}

/// Pareto local search from `start`: expand the first unexplored archive
/// member, keep every neighbour no member dominates or ties, and stop when
/// all members are explored or the evaluation budget is spent.
pub fn local_search(ctx: &SearchContext<'_>, start: &Design, seed: u64) -> Result<ParetoSet> {
    let mut archive = ParetoSet::new();
    archive.insert(start.clone(), ctx.evaluate(start)?);
    let mut evaluations = 0;
    let mut expansion = 0u64;
    while evaluations < ctx.params.expansion_budget {
        let Some(i) = archive.members.iter().position(|m| !m.explored) else { break };
        archive.members[i].explored = true;
        let base = archive.members[i].design.clone();
        let mut candidates = ctx.neighbors(&base, rng::indexed_seed(seed, "expand", expansion));
        expansion += 1;
        candidates.truncate(ctx.params.expansion_budget - evaluations);
        evaluations += candidates.len();
        let scored: Vec<Result<Objectives>> = candidates.par_iter().map(|d| ctx.evaluate(d)).collect();
        for (d, o) in candidates.into_iter().zip(scored) {
            archive.insert(d, o?);
        }
    }
    Ok(archive)
}
