//! Network-on-interposer designs: routers, links, deterministic routing,
//! feasibility checks and link-utilization statistics.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::platform::{ChipletId, Placement, Platform};
use crate::sfc::Cell;
use crate::traffic::{Flow, TrafficTrace};

/// A planar link between two routers, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub stages: u32,
    pub length_mm: f64,
}

/// All-pairs hop distances and next hops over the planar router graph.
#[derive(Debug)]
pub struct RouteTables {
    n: usize,
    dist: Vec<u16>,
    next: Vec<u16>,
    link_between: HashMap<(usize, usize), usize>,
}

const UNREACHABLE: u16 = u16::MAX;

impl RouteTables {
    fn build(n: usize, links: &[Link]) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut link_between = HashMap::with_capacity(links.len() * 2);
        for (id, l) in links.iter().enumerate() {
            adj[l.a].push(l.b);
            adj[l.b].push(l.a);
            link_between.insert((l.a, l.b), id);
            link_between.insert((l.b, l.a), id);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if row[v] == UNREACHABLE {
                        row[v] = row[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        // The smallest neighbour one hop closer yields the lexicographically
        // smallest shortest path.
        let mut next = vec![UNREACHABLE; n * n];
        for s in 0..n {
            for d in 0..n {
                let ds = dist[s * n + d];
                if s == d || ds == UNREACHABLE {
                    continue;
                }
                if let Some(&v) = adj[s].iter().find(|&&v| dist[v * n + d] == ds - 1) {
                    next[s * n + d] = v as u16;
                }
            }
        }
        Self { n, dist, next, link_between }
    }

    pub fn hops(&self, a: usize, b: usize) -> Option<usize> {
        let d = self.dist[a * self.n + b];
        (d != UNREACHABLE).then_some(d as usize)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.dist[..self.n].iter().all(|&d| d != UNREACHABLE)
    }
}

/// A routed flow: routers visited and link ids traversed (planar and vertical).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub routers: Vec<usize>,
    pub links: Vec<usize>,
    pub planar_hops: usize,
    pub vertical: usize,
}

#[derive(Clone, Debug)]
pub struct Design {
    pub placement: Placement,
    /// Occupied layer-0 cells, sorted; router `i` sits at `routers[i]`.
    pub routers: Vec<Cell>,
    pub links: Vec<Link>,
    /// (DRAM, MC) pairs; vertical link `i` has id `links.len() + i`.
    pub vertical: Vec<(ChipletId, ChipletId)>,
    router_of: Vec<usize>,
    vertical_of: Vec<Option<usize>>,
    tables: Arc<RouteTables>,
}

impl PartialEq for Design {
    fn eq(&self, other: &Self) -> bool {
        self.placement == other.placement && self.routers == other.routers && self.links == other.links
    }
}

#[derive(Serialize, Deserialize)]
struct DesignDoc {
    placement: Placement,
    links: Vec<(usize, usize)>,
}

impl Serialize for Design {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DesignDoc { placement: self.placement.clone(), links: self.link_pairs() }.serialize(s)
    }
}

impl Design {
    /// Builds a design from a placement and router-index link pairs.
    pub fn new(platform: &Platform, placement: Placement, pairs: &[(usize, usize)]) -> Design {
        let mut routers: Vec<Cell> = platform.planar_ids().map(|id| placement.cell(id)).collect();
        routers.sort_unstable();
        routers.dedup();
        let links = make_links(platform, &routers, pairs);
        let tables = Arc::new(RouteTables::build(routers.len(), &links));
        Self::assemble(platform, placement, routers, links, tables)
    }

    fn assemble(
        platform: &Platform,
        placement: Placement,
        routers: Vec<Cell>,
        links: Vec<Link>,
        tables: Arc<RouteTables>,
    ) -> Design {
        let router_of = placement
            .cells
            .iter()
            .map(|c| routers.binary_search(c).unwrap_or(usize::MAX))
            .collect();
        let mut vertical_of = vec![None; platform.len()];
        for (i, &(dram, _)) in platform.vertical_pairs.iter().enumerate() {
            vertical_of[dram] = Some(links.len() + i);
        }
        Design {
            placement,
            routers,
            links,
            vertical: platform.vertical_pairs.clone(),
            router_of,
            vertical_of,
            tables,
        }
    }

    /// Mesh links between 4-neighbour routers.
    pub fn mesh(platform: &Platform, placement: Placement) -> Design {
        let mut routers: Vec<Cell> = platform.planar_ids().map(|id| placement.cell(id)).collect();
        routers.sort_unstable();
        routers.dedup();
        let pairs = mesh_pairs(&routers);
        Design::new(platform, placement, &pairs)
    }

    /// Reads the JSON form written by `serde_json::to_string(&design)`.
    pub fn from_json(platform: &Platform, text: &str) -> Result<Design> {
        let doc: DesignDoc = serde_json::from_str(text)?;
        if doc.placement.cells.len() != platform.len() {
            return Err(Error::Config(format!(
                "design places {} chiplets but the platform has {}",
                doc.placement.cells.len(),
                platform.len()
            )));
        }
        let design = Design::new(platform, doc.placement, &[]);
        let n = design.routers.len();
        if let Some(&(a, b)) = doc.links.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
            return Err(Error::Config(format!("link ({a}, {b}) does not join two routers")));
        }
        Ok(design.with_links(platform, &doc.links))
    }

    pub fn link_pairs(&self) -> Vec<(usize, usize)> {
        self.links.iter().map(|l| (l.a, l.b)).collect()
    }

    pub fn with_links(&self, platform: &Platform, pairs: &[(usize, usize)]) -> Design {
        let links = make_links(platform, &self.routers, pairs);
        let tables = Arc::new(RouteTables::build(self.routers.len(), &links));
        Self::assemble(platform, self.placement.clone(), self.routers.clone(), links, tables)
    }

    /// Swaps two planar chiplets; routes are shared with `self`.
    pub fn swapped(&self, platform: &Platform, a: ChipletId, b: ChipletId) -> Design {
        let mut placement = self.placement.clone();
        platform.swap_positions(&mut placement, a, b);
        Self::assemble(platform, placement, self.routers.clone(), self.links.clone(), Arc::clone(&self.tables))
    }

    pub fn router_count(&self) -> usize {
        self.routers.len()
    }

    /// Planar plus vertical links.
    pub fn total_links(&self) -> usize {
        self.links.len() + self.vertical.len()
    }

    pub fn router_of(&self, chiplet: ChipletId) -> usize {
        self.router_of[chiplet]
    }

    pub fn tables(&self) -> &RouteTables {
        &self.tables
    }

    pub fn is_connected(&self) -> bool {
        self.tables.is_connected()
    }

    /// Router with index `r` sits on this chiplet's cell (layer 0 only).
    pub fn chiplet_at(&self, platform: &Platform, r: usize) -> Option<ChipletId> {
        platform.planar_ids().find(|&id| self.router_of[id] == r)
    }

    pub fn link_id(&self, a: usize, b: usize) -> Option<usize> {
        self.tables.link_between.get(&(a, b)).copied()
    }

    /// Minimal-hop route, lexicographically smallest among equals.
    pub fn route(&self, src: ChipletId, dst: ChipletId) -> Result<Path> {
        let n = self.router_of.len();
        if src >= n {
            return Err(Error::UnknownChiplet(src));
        }
        if dst >= n {
            return Err(Error::UnknownChiplet(dst));
        }
        let (rs, rd) = (self.router_of[src], self.router_of[dst]);
        let t = &self.tables;
        if t.hops(rs, rd).is_none() {
            return Err(Error::Unroutable { from: rs, to: rd });
        }
        let mut routers = vec![rs];
        let mut links = Vec::new();
        let mut vertical = 0;
        if let Some(v) = self.vertical_of[src] {
            links.push(v);
            vertical += 1;
        }
        let mut cur = rs;
        while cur != rd {
            let nxt = t.next[cur * t.n + rd] as usize;
            links.push(t.link_between[&(cur, nxt)]);
            routers.push(nxt);
            cur = nxt;
        }
        let planar_hops = routers.len() - 1;
        if let Some(v) = self.vertical_of[dst] {
            links.push(v);
            vertical += 1;
        }
        Ok(Path { routers, links, planar_hops, vertical })
    }

    /// Physical planar length of a path.
    pub fn path_mm(&self, path: &Path) -> f64 {
        path.links.iter().filter(|&&l| l < self.links.len()).map(|&l| self.links[l].length_mm).sum()
    }

    /// Sum of pipeline stages over the planar links of a path.
    pub fn path_stages(&self, path: &Path) -> u64 {
        path.links.iter().filter(|&&l| l < self.links.len()).map(|&l| u64::from(self.links[l].stages)).sum()
    }

    pub fn to_dot(&self, platform: &Platform) -> String {
        let mut s = String::from("graph noi {\n  node [shape=box];\n");
        for (r, cell) in self.routers.iter().enumerate() {
            let names: Vec<String> = platform
                .chiplets
                .iter()
                .filter(|c| self.router_of[c.id] == r)
                .map(|c| format!("{}{}", c.role().as_str(), c.id))
                .collect();
            let _ = writeln!(
                s,
                "  r{r} [label=\"{}\" pos=\"{},{}!\"];",
                names.join("/"),
                cell.col,
                platform.grid.rows.saturating_sub(1 + cell.row)
            );
        }
        for l in &self.links {
            let _ = writeln!(s, "  r{} -- r{} [label=\"{}\"];", l.a, l.b, l.stages);
        }
        s.push_str("}\n");
        s
    }
}

fn make_links(platform: &Platform, routers: &[Cell], pairs: &[(usize, usize)]) -> Vec<Link> {
    let mut norm: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    norm.sort_unstable();
    norm.dedup();
    norm.into_iter()
        .map(|(a, b)| Link {
            a,
            b,
            stages: platform.link_stages(routers[a], routers[b]),
            length_mm: platform.link_length_mm(routers[a], routers[b]),
        })
        .collect()
}

/// Router pairs of the 4-neighbour mesh over the given sorted cells.
pub fn mesh_pairs(routers: &[Cell]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, c) in routers.iter().enumerate() {
        for nb in [Cell::new(c.row, c.col + 1), Cell::new(c.row + 1, c.col)] {
            if let Ok(j) = routers.binary_search(&nb) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && c.passed)
    }
}

/// Mesh link count over the platform's occupied cells.
pub fn link_budget(design: &Design) -> usize {
    mesh_pairs(&design.routers).len()
}

pub fn validate(design: &Design, platform: &Platform) -> ValidationReport {
    let mut checks = Vec::new();
    let mut check = |name, passed, detail: String| checks.push(Check { name, passed, detail });

    check(
        "connectivity",
        design.is_connected(),
        if design.is_connected() { String::new() } else { "router graph has islands".into() },
    );

    let budget = link_budget(design);
    check(
        "link_budget",
        design.links.len() <= budget,
        format!("{} planar links, mesh uses {}", design.links.len(), budget),
    );

    let longest = design.links.iter().map(|l| l.length_mm).fold(0.0, f64::max);
    check(
        "link_length",
        longest <= platform.max_link_mm + 1e-9,
        format!("longest link {longest:.3} mm, cap {:.3} mm", platform.max_link_mm),
    );

    let mut occupants: BTreeMap<Cell, usize> = BTreeMap::new();
    let mut in_grid = true;
    for id in platform.planar_ids() {
        let cell = design.placement.cell(id);
        in_grid &= cell.row < platform.grid.rows && cell.col < platform.grid.cols;
        *occupants.entry(cell).or_default() += 1;
    }
    let shared = occupants.values().filter(|&&n| n > 1).count();
    let self_loops = design.links.iter().any(|l| l.a == l.b);
    check(
        "one_router_per_cell",
        shared == 0 && in_grid && !self_loops && occupants.len() == design.routers.len(),
        format!("{shared} shared cells"),
    );

    let paired = design.vertical.len() == platform.vertical_pairs.len()
        && platform.vertical_pairs.iter().all(|&(dram, mc)| {
            platform.is_stacked(dram) && design.placement.cell(dram) == design.placement.cell(mc)
        })
        && platform.chiplets.iter().filter(|c| c.layer == 1).count() == platform.vertical_pairs.len();
    check("vertical_pairing", paired, String::new());

    ValidationReport { checks }
}

/// Per-link utilization of one timestamp.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseUtilization {
    pub t: u32,
    pub u: Vec<u64>,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkStats {
    pub phases: Vec<PhaseUtilization>,
    pub mu: f64,
    pub sigma: f64,
}

/// Population mean and standard deviation.
pub fn mean_std(u: &[u64]) -> (f64, f64) {
    if u.is_empty() {
        return (0.0, 0.0);
    }
    let p = u.len() as f64;
    let mean = u.iter().map(|&x| x as f64).sum::<f64>() / p;
    let var = u.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / p;
    (mean, var.sqrt())
}

/// Adds a flow set's bytes onto the links of each route.
pub fn accumulate<'a>(design: &Design, flows: impl IntoIterator<Item = &'a Flow>, u: &mut [u64]) -> Result<()> {
    for f in flows {
        for l in design.route(f.src, f.dst)?.links {
            u[l] += f.bytes;
        }
    }
    Ok(())
}

pub fn utilization(design: &Design, trace: &TrafficTrace) -> Result<LinkStats> {
    let mut phases = Vec::new();
    for (t, flows) in trace.merged_by_time() {
        let mut u = vec![0u64; design.total_links()];
        accumulate(design, flows, &mut u)?;
        let (mu, sigma) = mean_std(&u);
        phases.push(PhaseUtilization { t, u, mu, sigma });
    }
    let k = phases.len().max(1) as f64;
    let mu = phases.iter().map(|p| p.mu).sum::<f64>() / k;
    let sigma = phases.iter().map(|p| p.sigma).sum::<f64>() / k;
    Ok(LinkStats { phases, mu, sigma })
}

impl LinkStats {
    /// CSV with one row per link: id, endpoints, per-phase u_k, time average.
    pub fn to_csv(&self, design: &Design) -> String {
        let mut s = String::from("link,a,b,kind");
        for p in &self.phases {
            let _ = write!(s, ",t{}", p.t);
        }
        s.push_str(",mean\n");
        let k = self.phases.len().max(1) as f64;
        for id in 0..design.total_links() {
            let (a, b, kind) = if id < design.links.len() {
                (design.links[id].a.to_string(), design.links[id].b.to_string(), "planar")
            } else {
                let (dram, mc) = design.vertical[id - design.links.len()];
                (format!("DRAM{dram}"), format!("MC{mc}"), "vertical")
            };
            let _ = write!(s, "{id},{a},{b},{kind}");
            let mut sum = 0.0;
            for p in &self.phases {
                let _ = write!(s, ",{}", p.u[id]);
                sum += p.u[id] as f64;
            }
            let _ = writeln!(s, ",{}", sum / k);
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HopHistogram {
    pub counts: BTreeMap<usize, f64>,
    pub mean: f64,
}

impl HopHistogram {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("hops,frequency\n");
        for (h, c) in &self.counts {
            let _ = writeln!(s, "{h},{c}");
        }
        s
    }
}

/// Histogram of planar hop counts over every flow in the trace. Flows are
/// counted once each, or weighted by bytes when `by_bytes` is set.
pub fn hop_histogram(design: &Design, trace: &TrafficTrace, by_bytes: bool) -> Result<HopHistogram> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    let (mut total, mut weighted) = (0.0, 0.0);
    for phase in &trace.phases {
        for f in &phase.flows {
            let hops = design.route(f.src, f.dst)?.planar_hops;
            let w = if by_bytes { f.bytes as f64 } else { 1.0 };
            *counts.entry(hops).or_default() += w;
            total += w;
            weighted += w * hops as f64;
        }
    }
    Ok(HopHistogram { counts, mean: if total > 0.0 { weighted / total } else { 0.0 } })
}

/// A trace reduced to its distinct timestamp flow sets, each with the number
/// of timestamps it occurs at. Evaluating objectives on it is equivalent to
/// [`utilization`] up to floating-point summation order.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledTrace {
    pub steps: Vec<(u32, Vec<Flow>)>,
    pub timestamps: u32,
}

impl CompiledTrace {
    pub fn new(trace: &TrafficTrace) -> Self {
        let mut index: HashMap<Vec<Flow>, usize> = HashMap::new();
        let mut steps: Vec<(u32, Vec<Flow>)> = Vec::new();
        let mut timestamps = 0;
        for (_, flows) in trace.merged_by_time() {
            timestamps += 1;
            let mut key: Vec<Flow> = flows.into_iter().cloned().collect();
            key.sort_unstable_by_key(|f| (f.src, f.dst, f.bytes));
            match index.get(&key) {
                Some(&i) => steps[i].0 += 1,
                None => {
                    index.insert(key.clone(), steps.len());
                    steps.push((1, key));
                }
            }
        }
        Self { steps, timestamps }
    }

    /// Time-averaged (mu, sigma).
    pub fn objectives(&self, design: &Design) -> Result<(f64, f64)> {
        if self.timestamps == 0 {
            return Ok((0.0, 0.0));
        }
        let mut u = vec![0u64; design.total_links()];
        let (mut mu, mut sigma) = (0.0, 0.0);
        for (count, flows) in &self.steps {
            u.iter_mut().for_each(|x| *x = 0);
            accumulate(design, flows, &mut u)?;
            let (m, s) = mean_std(&u);
            mu += m * f64::from(*count);
            sigma += s * f64::from(*count);
        }
        let k = f64::from(self.timestamps);
        Ok((mu / k, sigma / k))
    }

    /// Largest single-link load over all timestamps.
    pub fn max_link_load(&self, design: &Design) -> Result<u64> {
        let mut peak = 0;
        let mut u = vec![0u64; design.total_links()];
        for (_, flows) in &self.steps {
            u.iter_mut().for_each(|x| *x = 0);
            accumulate(design, flows, &mut u)?;
            peak = peak.max(u.iter().copied().max().unwrap_or(0));
        }
        Ok(peak)
    }

    /// Flow-count weighted mean planar hop count.
    pub fn mean_hops(&self, design: &Design) -> Result<f64> {
        let (mut n, mut hops) = (0.0, 0.0);
        for (count, flows) in &self.steps {
            for f in flows {
                hops += f64::from(*count) * design.route(f.src, f.dst)?.planar_hops as f64;
                n += f64::from(*count);
            }
        }
        Ok(if n > 0.0 { hops / n } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::{build_platform, mesh_design, Integration, RoleCounts, SystemConfig};
    use crate::traffic::{Phase, PhaseLabel};
    use crate::workload::KernelKind;

    fn platform(total: usize, integration: Integration) -> Platform {
        build_platform(&SystemConfig::new(total, integration)).unwrap()
    }

    fn toy() -> Platform {
        let cfg = SystemConfig::new(0, Integration::Planar).with_counts(RoleCounts { sm: 1, mc: 1, dram: 1, reram: 1 });
        build_platform(&cfg).unwrap()
    }

    fn trace_of(flows: Vec<Flow>) -> TrafficTrace {
        TrafficTrace {
            phases: vec![Phase {
                t: 0,
                label: PhaseLabel { kind: KernelKind::Kqv, block: 0, cross: false },
                flows,
                concurrent_group: None,
                lane: 0,
            }],
        }
    }

    #[test]
    fn mesh_link_counts() {
        let p = platform(36, Integration::Planar);
        assert_eq!(p.grid.rows * p.grid.cols, 36);
        assert_eq!(mesh_design(&p).links.len(), 60);
        let p = platform(100, Integration::Planar);
        assert_eq!(mesh_design(&p).links.len(), 180);
        let t = toy();
        let mesh = mesh_design(&t);
        assert_eq!(mesh.links.len(), 4);
        for a in 0..4 {
            for b in 0..4 {
                assert!(mesh.route(a, b).unwrap().planar_hops <= 2);
            }
        }
    }

    #[test]
    fn mesh_is_valid_everywhere() {
        for total in [11, 20, 36, 64, 100] {
            for integration in [Integration::Planar, Integration::Stacked] {
                let p = platform(total, integration);
                let r = validate(&mesh_design(&p), &p);
                assert!(r.is_valid(), "{total} {integration:?}: {:?}", r.failed().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn stacked_router_count_matches_planar_chiplets() {
        let p = platform(100, Integration::Stacked);
        let mesh = mesh_design(&p);
        assert_eq!(mesh.router_count(), p.planar_ids().count());
        assert_eq!(mesh.total_links(), mesh.links.len() + 8);
        let (dram, mc) = p.vertical_pairs[0];
        let path = mesh.route(dram, mc).unwrap();
        assert_eq!(path.planar_hops, 0);
        assert_eq!(path.vertical, 1);
    }

    #[test]
    fn line_routes() {
        let t = toy();
        let mesh = mesh_design(&t);
        // Remove links until the routers form a line 0-1-3-2.
        let line = mesh.with_links(&t, &[(0, 1), (1, 3), (2, 3)]);
        let a = line.chiplet_at(&t, 0).unwrap();
        let c = line.chiplet_at(&t, 3).unwrap();
        let b = line.chiplet_at(&t, 1).unwrap();
        assert_eq!(line.route(a, b).unwrap().planar_hops, 1);
        assert_eq!(line.route(a, c).unwrap().routers, vec![0, 1, 3]);
    }

    #[test]
    fn disconnect_and_budget_failures() {
        let t = toy();
        let mesh = mesh_design(&t);
        let cut = mesh.with_links(&t, &[(0, 1), (1, 3), (0, 2)]);
        assert!(validate(&cut, &t).is_valid());
        let island = mesh.with_links(&t, &[(0, 1), (0, 2), (1, 2)]);
        let r = validate(&island, &t);
        assert!(!r.passed("connectivity"));
        let mut extra = mesh.link_pairs();
        extra.push((0, 3));
        let r = validate(&mesh.with_links(&t, &extra), &t);
        assert!(!r.passed("link_budget"));
        assert!(r.passed("connectivity"));
    }

    #[test]
    fn utilization_examples() {
        let t = toy();
        let line = mesh_design(&t).with_links(&t, &[(0, 1), (1, 3)]);
        let empty = utilization(&line, &TrafficTrace::default()).unwrap();
        assert_eq!((empty.mu, empty.sigma), (0.0, 0.0));
        let (a, c) = (line.chiplet_at(&t, 0).unwrap(), line.chiplet_at(&t, 3).unwrap());
        let s = utilization(&line, &trace_of(vec![Flow { src: a, dst: c, bytes: 100 }])).unwrap();
        assert_eq!(s.phases[0].u, vec![100, 100]);
        assert_eq!((s.mu, s.sigma), (100.0, 0.0));
    }

    #[test]
    fn hop_histogram_examples() {
        let t = toy();
        let line = mesh_design(&t).with_links(&t, &[(0, 1), (1, 3), (2, 3)]);
        let at = |r| line.chiplet_at(&t, r).unwrap();
        let h = hop_histogram(&line, &trace_of(vec![Flow { src: at(0), dst: at(1), bytes: 5 }]), false).unwrap();
        assert_eq!(h.counts, BTreeMap::from([(1, 1.0)]));
        assert_eq!(h.mean, 1.0);
        let two = trace_of(vec![Flow { src: at(0), dst: at(1), bytes: 5 }, Flow { src: at(0), dst: at(2), bytes: 1 }]);
        assert_eq!(hop_histogram(&line, &two, false).unwrap().mean, 2.0);
        let by_bytes = hop_histogram(&line, &two, true).unwrap();
        assert!((by_bytes.mean - 8.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn swap_reuses_routes_and_is_an_involution() {
        let p = platform(36, Integration::Stacked);
        let mesh = mesh_design(&p);
        let sm = p.clusters[0].sms[0];
        let mc = p.clusters[1].mc;
        let once = mesh.swapped(&p, sm, mc);
        assert!(Arc::ptr_eq(&once.tables, &mesh.tables));
        assert_eq!(once.placement.cell(p.clusters[1].dram), once.placement.cell(mc));
        assert_eq!(once.swapped(&p, sm, mc), mesh);
    }

    #[test]
    fn json_roundtrip() {
        let p = platform(20, Integration::Planar);
        let mesh = mesh_design(&p);
        let text = serde_json::to_string(&mesh).unwrap();
        assert_eq!(Design::from_json(&p, &text).unwrap(), mesh);
    }
}
