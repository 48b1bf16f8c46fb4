//! Deterministic packet-level simulation of a design under a traffic trace.
//!
//! Flows are cut into packets of at most `max_packet_flits` flits and all
//! packets of a timestamp are injected together. A packet holds each
//! resource on its route (injection port, directed links, ejection port) for
//! one cycle per flit; its head reaches the next resource after the link's
//! stages plus the downstream router pipeline. Waiting packets are granted in
//! round-robin order of packet id.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noi::{hop_histogram, Design, HopHistogram, Path};
use crate::platform::{ChipletKind, Platform, Role};
use crate::rng::fnv1a;
use crate::traffic::{Flow, KernelMapping, TrafficTrace};
use crate::workload::{kernel_sequence, KernelInstance, KernelKind, ModelSpec, SequenceConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlap {
    /// Phase latency is the larger of communication and compute.
    #[default]
    Max,
    /// Communication and compute do not overlap.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub clock_hz: f64,
    pub router_pipeline_cycles: u64,
    pub link_stage_cycles: u64,
    pub vertical_link_cycles: u64,
    pub flit_bits: u64,
    pub max_packet_flits: u64,
    pub energy_per_bit_per_mm: f64,
    pub energy_per_bit_per_router_hop: f64,
    pub vertical_energy_per_bit: f64,
    /// Per tensor core.
    pub sm_flops_per_cycle: f64,
    /// Cycles for one crossbar MVM pass over one token vector.
    pub reram_mvm_cycles: u64,
    pub dram_bytes_per_cycle: f64,
    pub overlap: Overlap,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            clock_hz: 1.2e9,
            router_pipeline_cycles: 2,
            link_stage_cycles: 1,
            vertical_link_cycles: 1,
            flit_bits: 128,
            max_packet_flits: 256,
            energy_per_bit_per_mm: 1.0e-12,
            energy_per_bit_per_router_hop: 0.5e-12,
            vertical_energy_per_bit: 0.1e-12,
            sm_flops_per_cycle: 128.0,
            reram_mvm_cycles: 10,
            dram_bytes_per_cycle: 256.0,
            overlap: Overlap::Max,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let positive = self.clock_hz > 0.0
            && self.router_pipeline_cycles > 0
            && self.link_stage_cycles > 0
            && self.vertical_link_cycles > 0
            && self.flit_bits > 0
            && self.max_packet_flits > 0
            && self.energy_per_bit_per_mm >= 0.0
            && self.energy_per_bit_per_router_hop >= 0.0
            && self.vertical_energy_per_bit >= 0.0
            && self.reram_mvm_cycles > 0;
        if !positive {
            return Err(Error::Config("cost model latencies and sizes must be positive".into()));
        }
        if self.sm_flops_per_cycle.is_nan() || self.sm_flops_per_cycle <= 0.0 {
            return Err(Error::ZeroThroughput("SM".into()));
        }
        if self.dram_bytes_per_cycle.is_nan() || self.dram_bytes_per_cycle <= 0.0 {
            return Err(Error::ZeroThroughput("DRAM".into()));
        }
        Ok(())
    }

    pub fn flits(&self, bytes: u64) -> u64 {
        (bytes * 8).div_ceil(self.flit_bits).max(1)
    }

    /// Zero-load latency of one flow: link stages, routers traversed,
    /// vertical hops and flit serialization.
    pub fn closed_form_latency(&self, design: &Design, path: &Path, bytes: u64) -> u64 {
        design.path_stages(path) * self.link_stage_cycles
            + path.routers.len() as u64 * self.router_pipeline_cycles
            + path.vertical as u64 * self.vertical_link_cycles
            + self.flits(bytes)
            - 1
    }

    pub fn flow_energy(&self, design: &Design, path: &Path, bytes: u64) -> f64 {
        let bits = (bytes * 8) as f64;
        bits * (self.energy_per_bit_per_mm * design.path_mm(path)
            + self.energy_per_bit_per_router_hop * path.routers.len() as f64
            + self.vertical_energy_per_bit * path.vertical as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub cycles: u64,
    pub packets: u64,
    pub flits_injected: u64,
    pub flits_delivered: u64,
}

struct Packet {
    flits: u64,
    hops: Vec<(usize, u64)>,
    next: usize,
}

struct Resource {
    /// Time each parallel channel becomes free.
    free_at: Vec<u64>,
    last: Option<usize>,
    waiting: BTreeSet<usize>,
    /// Time of the single pending arbitration, if any.
    scheduled: Option<u64>,
}

impl Resource {
    fn new(channels: usize) -> Self {
        Self { free_at: vec![0; channels.max(1)], last: None, waiting: BTreeSet::new(), scheduled: None }
    }

    /// Requests an arbitration at `t` unless an earlier one is pending.
    fn schedule(&mut self, t: u64) -> bool {
        if self.scheduled.is_some_and(|s| s <= t) {
            return false;
        }
        self.scheduled = Some(t);
        true
    }

    fn earliest(&self) -> (usize, u64) {
        let mut best = (0, self.free_at[0]);
        for (i, &t) in self.free_at.iter().enumerate() {
            if t < best.1 {
                best = (i, t);
            }
        }
        best
    }

    fn pick(&self) -> Option<usize> {
        let after = self.last.map_or(0, |l| l + 1);
        self.waiting.range(after..).next().or_else(|| self.waiting.iter().next()).copied()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Request { packet: usize },
    Arbitrate { resource: usize },
}

/// Route of resources with the head delay after each grant.
fn resources(design: &Design, path: &Path, src: usize, dst: usize, n: usize, c: &CostModel) -> Vec<(usize, u64)> {
    let pipe = c.router_pipeline_cycles;
    let planar = design.links.len();
    let link_res = |id: usize, forward: bool| 2 * n + 2 * id + usize::from(!forward);
    let mut out = Vec::with_capacity(path.links.len() + 2);
    let mut links = path.links.iter().peekable();
    let src_stacked = links.peek().is_some_and(|&&l| l >= planar) && design.vertical.iter().any(|&(d, _)| d == src);
    out.push((src, if src_stacked { 0 } else { pipe }));
    if src_stacked {
        let v = *links.next().expect("vertical link present");
        out.push((link_res(v, true), c.vertical_link_cycles + pipe));
    }
    for w in path.routers.windows(2) {
        let l = *links.next().expect("planar link per router pair");
        let forward = design.links[l].a == w[0];
        out.push((link_res(l, forward), u64::from(design.links[l].stages) * c.link_stage_cycles + pipe));
    }
    if let Some(&v) = links.next() {
        out.push((link_res(v, false), c.vertical_link_cycles));
    }
    out.push((n + dst, 0));
    out
}

/// Parallel channels per network resource; anything unlisted has one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Channels {
    /// Injection and ejection channels of each chiplet.
    pub ports: Vec<usize>,
    /// Channels of every vertical link.
    pub vertical: usize,
}

impl Channels {
    /// MC ports as configured; a DRAM gets one channel per flit of partition
    /// bandwidth, which its vertical link matches when stacked.
    pub fn of(platform: &Platform, costs: &CostModel) -> Self {
        let flit_bytes = (costs.flit_bits / 8).max(1);
        let dram = |bw: u64| bw.div_ceil(flit_bytes).max(1) as usize;
        let ports = platform
            .chiplets
            .iter()
            .map(|c| match c.kind {
                ChipletKind::Mc { ports } => ports as usize,
                ChipletKind::Dram { partition_bandwidth_bytes_per_cycle: bw } => dram(bw),
                _ => 1,
            })
            .collect();
        let vertical = platform
            .chiplets
            .iter()
            .find_map(|c| match c.kind {
                ChipletKind::Dram { partition_bandwidth_bytes_per_cycle: bw } => Some(dram(bw)),
                _ => None,
            })
            .unwrap_or(1);
        Self { ports, vertical }
    }
}

/// Simulates one set of concurrently injected flows with one channel per
/// resource.
pub fn simulate_flows(design: &Design, flows: &[Flow], costs: &CostModel) -> Result<CommStats> {
    simulate_flows_with(design, flows, costs, &Channels::default())
}

/// As [`simulate_flows`], with parallel channels on ports and vertical links.
pub fn simulate_flows_with(design: &Design, flows: &[Flow], costs: &CostModel, channels: &Channels) -> Result<CommStats> {
    let n = design.placement.cells.len();
    let planar = design.links.len();
    let channels = |r: usize| {
        if r < 2 * n {
            channels.ports.get(r % n).copied().unwrap_or(1)
        } else if (r - 2 * n) / 2 >= planar {
            channels.vertical.max(1)
        } else {
            1
        }
    };
    let mut packets = Vec::new();
    let mut stats = CommStats::default();
    for f in flows {
        let path = design.route(f.src, f.dst)?;
        let route = resources(design, &path, f.src, f.dst, n, costs);
        let mut left = costs.flits(f.bytes);
        stats.flits_injected += left;
        while left > 0 {
            let flits = left.min(costs.max_packet_flits);
            left -= flits;
            packets.push(Packet { flits, hops: route.clone(), next: 0 });
        }
    }
    stats.packets = packets.len() as u64;
    if packets.is_empty() {
        return Ok(stats);
    }

    let mut res: HashMap<usize, Resource> = HashMap::new();
    let mut queue: BinaryHeap<Reverse<(u64, Event)>> = BinaryHeap::new();
    for id in 0..packets.len() {
        queue.push(Reverse((0, Event::Request { packet: id })));
    }
    while let Some(Reverse((now, event))) = queue.pop() {
        match event {
            Event::Request { packet } => {
                let p = &packets[packet];
                let r = p.hops[p.next].0;
                let entry = res.entry(r).or_insert_with(|| Resource::new(channels(r)));
                entry.waiting.insert(packet);
                let t = now.max(entry.earliest().1);
                if entry.schedule(t) {
                    queue.push(Reverse((t, Event::Arbitrate { resource: r })));
                }
            }
            Event::Arbitrate { resource } => {
                let entry = res.get_mut(&resource).expect("requested resource exists");
                if entry.scheduled != Some(now) {
                    continue;
                }
                entry.scheduled = None;
                loop {
                    let (channel, free) = entry.earliest();
                    if free > now {
                        break;
                    }
                    let Some(id) = entry.pick() else { break };
                    entry.waiting.remove(&id);
                    entry.last = Some(id);
                    let p = &mut packets[id];
                    entry.free_at[channel] = now + p.flits;
                    let delay = p.hops[p.next].1;
                    p.next += 1;
                    if p.next == p.hops.len() {
                        stats.cycles = stats.cycles.max(now + p.flits - 1);
                        stats.flits_delivered += p.flits;
                    } else {
                        queue.push(Reverse((now + delay, Event::Request { packet: id })));
                    }
                }
                if !entry.waiting.is_empty() {
                    let t = entry.earliest().1.max(now);
                    entry.scheduled = Some(t);
                    queue.push(Reverse((t, Event::Arbitrate { resource })));
                }
            }
        }
    }
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub t: u32,
    pub label: String,
    pub kind: KernelKind,
    pub block: u32,
    pub lane: u8,
    pub concurrent_group: Option<u32>,
    pub bytes: u64,
    pub comm_cycles: u64,
    pub compute_cycles: u64,
    pub latency_cycles: u64,
    pub energy_j: f64,
    pub flits_injected: u64,
    pub flits_delivered: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub phases: Vec<PhaseReport>,
    pub end_to_end_cycles: u64,
    pub end_to_end_seconds: f64,
    pub energy_j: f64,
    pub edp: f64,
    pub hop_histogram: HopHistogram,
    /// Largest byte load on any one link within a timestamp.
    pub peak_link_bytes: u64,
    /// Summed phase latency per kernel kind.
    pub kind_cycles: BTreeMap<String, u64>,
    pub trace_fingerprint: String,
}

impl SimReport {
    pub fn edp(&self) -> f64 {
        edp(self.energy_j, self.end_to_end_seconds)
    }

    pub fn phases_csv(&self) -> String {
        let mut s = String::from(
            "t,label,lane,bytes,comm_cycles,compute_cycles,latency_cycles,energy_j,flits_injected,flits_delivered\n",
        );
        for p in &self.phases {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:e},{},{}",
                p.t,
                p.label,
                p.lane,
                p.bytes,
                p.comm_cycles,
                p.compute_cycles,
                p.latency_cycles,
                p.energy_j,
                p.flits_injected,
                p.flits_delivered
            );
        }
        s
    }
}

pub fn edp(energy_j: f64, seconds: f64) -> f64 {
    energy_j * seconds
}

pub fn trace_fingerprint(trace: &TrafficTrace) -> Result<String> {
    Ok(format!("{:016x}", fnv1a(trace.to_csv()?.as_bytes())))
}

/// End-to-end latency: per timestamp the longest lane, lanes summing their phases.
pub fn schedule(phases: &[PhaseReport]) -> u64 {
    let mut total = 0;
    let mut i = 0;
    while i < phases.len() {
        let mut lanes: BTreeMap<u8, u64> = BTreeMap::new();
        let t = phases[i].t;
        while i < phases.len() && phases[i].t == t {
            *lanes.entry(phases[i].lane).or_default() += phases[i].latency_cycles;
            i += 1;
        }
        total += lanes.values().copied().max().unwrap_or(0);
    }
    total
}

/// Simulates designs of one platform and workload.
pub struct Simulator<'a> {
    pub platform: &'a Platform,
    pub mapping: &'a KernelMapping,
    pub model: &'a ModelSpec,
    pub seq: SequenceConfig,
    pub costs: CostModel,
    kernels: HashMap<(KernelKind, u32, bool), KernelInstance>,
    channels: Channels,
}

impl<'a> Simulator<'a> {
    pub fn new(
        platform: &'a Platform,
        mapping: &'a KernelMapping,
        model: &'a ModelSpec,
        seq: &SequenceConfig,
        costs: &CostModel,
    ) -> Result<Self> {
        costs.validate()?;
        let kernels =
            kernel_sequence(model, seq).into_iter().map(|k| ((k.kind, k.block_index, k.cross_attention), k)).collect();
        let channels = Channels::of(platform, costs);
        Ok(Self { platform, mapping, model, seq: *seq, costs: *costs, kernels, channels })
    }

    fn kernel(&self, kind: KernelKind, block: u32, cross: bool) -> Option<&KernelInstance> {
        self.kernels.get(&(kind, block, cross))
    }

    fn sm_throughput(&self) -> Result<f64> {
        let cores = self
            .mapping
            .head_owners
            .iter()
            .map(|&(_, sm)| match self.platform.chiplets[sm].kind {
                ChipletKind::Sm { tensor_cores, .. } => tensor_cores,
                _ => 0,
            })
            .min()
            .unwrap_or(1);
        let t = self.costs.sm_flops_per_cycle * f64::from(cores);
        if t > 0.0 {
            Ok(t)
        } else {
            Err(Error::ZeroThroughput("SM".into()))
        }
    }

    fn reram_cycles(&self, weight_bytes: u64, layers: u64) -> Result<f64> {
        let (mut cells, mut cell_bits) = (0u64, 1u64);
        for &id in &self.mapping.reram_macro {
            if let ChipletKind::Reram { cell_bits: cb, .. } = self.platform.chiplets[id].kind {
                cells += self.platform.chiplets[id].kind.reram_capacity_bits() / u64::from(cb);
                cell_bits = u64::from(cb);
            }
        }
        if cells == 0 {
            return Err(Error::ZeroThroughput("ReRAM".into()));
        }
        let weight_cells = (weight_bytes * 8).div_ceil(cell_bits);
        let passes = weight_cells.div_ceil(cells).max(1);
        Ok((self.seq.seq_len * self.costs.reram_mvm_cycles * layers * passes) as f64)
    }

    fn compute_cycles(&self, kind: KernelKind, block: u32, cross: bool, flows: &[Flow]) -> Result<u64> {
        let heads = f64::from(self.model.num_heads);
        let per_sm = self.mapping.max_heads_per_sm() as f64;
        let flops = |k: KernelKind| self.kernel(k, block, cross).map_or(0, |k| k.flops) as f64;
        let cycles = match kind {
            KernelKind::Embed => self.reram_cycles(self.kernel(kind, 0, false).map_or(0, |k| k.weight_bytes), 1)?,
            KernelKind::FeedForward => self.reram_cycles(self.model.ff_weight_bytes(), 2)?,
            KernelKind::WeightLoad => {
                let mut per_dram: BTreeMap<usize, u64> = BTreeMap::new();
                for f in flows.iter().filter(|f| self.platform.role(f.src) == Role::Dram) {
                    *per_dram.entry(f.src).or_default() += f.bytes;
                }
                per_dram.values().copied().max().unwrap_or(0) as f64 / self.costs.dram_bytes_per_cycle
            }
            KernelKind::Kqv => flops(KernelKind::Kqv) / heads * per_sm / self.sm_throughput()?,
            KernelKind::Score => {
                (flops(KernelKind::Score) + flops(KernelKind::OutProj)) / heads * per_sm / self.sm_throughput()?
            }
            KernelKind::OutProj | KernelKind::LayerNorm => 0.0,
        };
        Ok(cycles.ceil() as u64)
    }

    pub fn run(&self, design: &Design, trace: &TrafficTrace) -> Result<SimReport> {
        let mut cache: HashMap<Vec<Flow>, CommStats> = HashMap::new();
        let mut phases = Vec::with_capacity(trace.phases.len());
        let mut energy = 0.0;
        for p in &trace.phases {
            let mut key = p.flows.clone();
            key.sort_unstable();
            let comm = match cache.get(&key) {
                Some(c) => *c,
                None => {
                    let c = simulate_flows_with(design, &p.flows, &self.costs, &self.channels)?;
                    cache.insert(key, c);
                    c
                }
            };
            let compute = self.compute_cycles(p.label.kind, p.label.block, p.label.cross, &p.flows)?;
            let latency = match self.costs.overlap {
                Overlap::Max => comm.cycles.max(compute),
                Overlap::Sum => comm.cycles + compute,
            };
            let mut e = 0.0;
            for f in &p.flows {
                e += self.costs.flow_energy(design, &design.route(f.src, f.dst)?, f.bytes);
            }
            energy += e;
            phases.push(PhaseReport {
                t: p.t,
                label: p.label.to_string(),
                kind: p.label.kind,
                block: p.label.block,
                lane: p.lane,
                concurrent_group: p.concurrent_group,
                bytes: p.total_bytes(),
                comm_cycles: comm.cycles,
                compute_cycles: compute,
                latency_cycles: latency,
                energy_j: e,
                flits_injected: comm.flits_injected,
                flits_delivered: comm.flits_delivered,
            });
        }
        let cycles = schedule(&phases);
        let seconds = cycles as f64 / self.costs.clock_hz;
        let mut kind_cycles = BTreeMap::new();
        for p in &phases {
            *kind_cycles.entry(p.kind.to_string()).or_default() += p.latency_cycles;
        }
        let compiled = crate::noi::CompiledTrace::new(trace);
        Ok(SimReport {
            end_to_end_cycles: cycles,
            end_to_end_seconds: seconds,
            energy_j: energy,
            edp: edp(energy, seconds),
            hop_histogram: hop_histogram(design, trace, false)?,
            peak_link_bytes: compiled.max_link_load(design)?,
            kind_cycles,
            trace_fingerprint: trace_fingerprint(trace)?,
            phases,
        })
    }
}

pub fn simulate(
    platform: &Platform,
    design: &Design,
    trace: &TrafficTrace,
    mapping: &KernelMapping,
    model: &ModelSpec,
    seq: &SequenceConfig,
    costs: &CostModel,
) -> Result<SimReport> {
    Simulator::new(platform, mapping, model, seq, costs)?.run(design, trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub latency_cycles: u64,
    pub energy_j: f64,
    pub edp: f64,
    /// Baseline latency over this report's latency.
    pub speedup: f64,
    pub energy_gain: f64,
    pub edp_gain: f64,
    pub kind_speedup: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

fn ratio(base: f64, other: f64) -> f64 {
    if base == other {
        1.0
    } else {
        base / other
    }
}

/// Ratios of every report against the first one.
pub fn compare(reports: &[(&str, &SimReport)]) -> Result<Comparison> {
    let Some(&(_, base)) = reports.first() else {
        return Err(Error::Mismatch("nothing to compare".into()));
    };
    if reports.len() < 2 {
        return Err(Error::Mismatch("need at least two reports".into()));
    }
    let mut rows = Vec::new();
    for &(name, r) in reports {
        if r.trace_fingerprint != base.trace_fingerprint {
            return Err(Error::Mismatch(format!("report '{name}' was produced from a different trace")));
        }
        let kind_speedup = base
            .kind_cycles
            .iter()
            .map(|(k, &b)| (k.clone(), ratio(b as f64, r.kind_cycles.get(k).copied().unwrap_or(0) as f64)))
            .collect();
        rows.push(ComparisonRow {
            name: name.to_string(),
            latency_cycles: r.end_to_end_cycles,
            energy_j: r.energy_j,
            edp: r.edp,
            speedup: ratio(base.end_to_end_cycles as f64, r.end_to_end_cycles as f64),
            energy_gain: ratio(base.energy_j, r.energy_j),
            edp_gain: ratio(base.edp, r.edp),
            kind_speedup,
        });
    }
    Ok(Comparison { rows })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,latency_cycles,energy_j,edp,speedup,energy_gain,edp_gain\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{},{}",
                r.name, r.latency_cycles, r.energy_j, r.edp, r.speedup, r.energy_gain, r.edp_gain
            );
        }
        s
    }
}
