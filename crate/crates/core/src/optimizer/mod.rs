//! Bi-objective search over placements and link sets.
//!
//! Designs are scored by the time-averaged mean and standard deviation of
//! per-link utilization, both minimized.

mod forest;
mod search;
mod stage;

use serde::{Deserialize, Serialize};

use crate::noi::Design;

pub use forest::{Forest, ForestParams};
pub use search::{local_search, neighbors, Move, SearchContext, SearchParams};
pub use stage::{
    features, select_final, stage_explore, Selection, StageConfig, StageIteration, StageResult, Strategy,
    FEATURE_NAMES,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub mu: f64,
    pub sigma: f64,
}

impl Objectives {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { mu: self.mu * k, sigma: self.sigma * k }
    }
}

/// `a` is no worse in both objectives and strictly better in one.
pub fn dominates(a: Objectives, b: Objectives) -> bool {
    a.mu <= b.mu && a.sigma <= b.sigma && (a.mu < b.mu || a.sigma < b.sigma)
}

/// Area dominated by `points` inside the box bounded by `reference`.
pub fn phv(points: &[Objectives], reference: Objectives) -> f64 {
    let mut pts: Vec<Objectives> =
        points.iter().copied().filter(|p| p.mu < reference.mu && p.sigma < reference.sigma).collect();
    pts.sort_by(|a, b| a.mu.total_cmp(&b.mu).then(a.sigma.total_cmp(&b.sigma)));
    let mut area = 0.0;
    let mut ceiling = reference.sigma;
    for p in pts {
        if p.sigma < ceiling {
            area += (reference.mu - p.mu) * (ceiling - p.sigma);
            ceiling = p.sigma;
        }
    }
    area
}

#[derive(Clone, Debug, Serialize)]
pub struct Member {
    pub design: Design,
    pub objectives: Objectives,
    #[serde(skip)]
    pub explored: bool,
}

/// Mutually non-dominated designs, at most one per objective pair.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ParetoSet {
    pub members: Vec<Member>,
}

impl ParetoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Inserts unless an existing member dominates or ties `objectives`;
    /// prunes members the newcomer dominates.
    pub fn insert(&mut self, design: Design, objectives: Objectives) -> bool {
        if self.members.iter().any(|m| dominates(m.objectives, objectives) || m.objectives == objectives) {
            return false;
        }
        self.members.retain(|m| !dominates(objectives, m.objectives));
        self.members.push(Member { design, objectives, explored: false });
        true
    }

    pub fn objectives(&self) -> Vec<Objectives> {
        self.members.iter().map(|m| m.objectives).collect()
    }

    pub fn phv(&self, reference: Objectives) -> f64 {
        phv(&self.objectives(), reference)
    }

    /// True when no member weakly dominates another.
    pub fn is_consistent(&self) -> bool {
        self.members.iter().enumerate().all(|(i, a)| {
            self.members
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !(dominates(a.objectives, b.objectives) || a.objectives == b.objectives))
        })
    }

    /// Members sorted by (mu, sigma).
    pub fn sorted(&self) -> Vec<&Member> {
        let mut v: Vec<&Member> = self.members.iter().collect();
        v.sort_by(|a, b| {
            a.objectives.mu.total_cmp(&b.objectives.mu).then(a.objectives.sigma.total_cmp(&b.objectives.sigma))
        });
        v
    }
}
