//! Inter-chiplet traffic traces for end-to-end transformer inference.
//!
//! Dataflow per block: the ReRAM macro embeds the input once; DRAM weights
//! stream through each MC to the SMs owning the heads; SMs compute K/Q/V and
//! attention scores; MCs forward the projected result to the macro head; the
//! macro runs the feed-forward network along its chain and returns the block
//! output from its tail to the MCs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::platform::{ChipletId, Cluster, Platform, Role};
use crate::workload::{BlockFormulation, KernelKind, ModelSpec, SequenceConfig, FF_EXPANSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flow {
    pub src: ChipletId,
    pub dst: ChipletId,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub kind: KernelKind,
    pub block: u32,
    /// Cross-attention group of an encoder-decoder decoder block.
    pub cross: bool,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cross = if self.cross { ".x" } else { "" };
        write!(f, "{}{}@{}", self.kind, cross, self.block)
    }
}

impl PhaseLabel {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Trace(format!("bad phase label '{s}'"));
        let (head, block) = s.split_once('@').ok_or_else(bad)?;
        let block = block.parse().map_err(|_| bad())?;
        let (kind, cross) = match head.strip_suffix(".x") {
            Some(k) => (k, true),
            None => (head, false),
        };
        let kind = KernelKind::parse(kind).ok_or_else(bad)?;
        Ok(Self { kind, block, cross })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub t: u32,
    pub label: PhaseLabel,
    pub flows: Vec<Flow>,
    pub concurrent_group: Option<u32>,
    /// Phases of one concurrent group on the same lane run back to back;
    /// different lanes overlap.
    pub lane: u8,
}

impl Phase {
    pub fn total_bytes(&self) -> u64 {
        self.flows.iter().map(|f| f.bytes).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficTrace {
    pub phases: Vec<Phase>,
}

impl TrafficTrace {
    pub fn total_bytes(&self) -> u64 {
        self.phases.iter().map(Phase::total_bytes).sum()
    }

    pub fn timestamps(&self) -> Vec<u32> {
        let mut ts: Vec<u32> = self.phases.iter().map(|p| p.t).collect();
        ts.dedup();
        ts
    }

    /// Flows of every timestamp, concurrent phases unioned.
    pub fn merged_by_time(&self) -> Vec<(u32, Vec<&Flow>)> {
        let mut out: Vec<(u32, Vec<&Flow>)> = Vec::new();
        for p in &self.phases {
            match out.last_mut() {
                Some((t, flows)) if *t == p.t => flows.extend(&p.flows),
                _ => out.push((p.t, p.flows.iter().collect())),
            }
        }
        out
    }

    pub fn bytes_by_kind(&self) -> BTreeMap<String, u64> {
        let mut m = BTreeMap::new();
        for p in &self.phases {
            *m.entry(p.label.kind.to_string()).or_default() += p.total_bytes();
        }
        m
    }

    /// Checks ordering and that every endpoint belongs to a platform of `n` chiplets.
    pub fn validate(&self, n: usize) -> Result<()> {
        for w in self.phases.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.t < a.t || (b.t == a.t && (a.concurrent_group.is_none() || a.concurrent_group != b.concurrent_group)) {
                return Err(Error::Trace(format!("phase {} at t={} is out of order", b.label, b.t)));
            }
        }
        for p in &self.phases {
            for f in &p.flows {
                if f.src >= n || f.dst >= n {
                    return Err(Error::UnknownChiplet(f.src.max(f.dst)));
                }
                if f.src == f.dst || f.bytes == 0 {
                    return Err(Error::Trace(format!("degenerate flow {f:?} in {}", p.label)));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "label", "src", "dst", "bytes"])?;
        for p in &self.phases {
            let label = p.label.to_string();
            for f in &p.flows {
                w.serialize((p.t, &label, f.src, f.dst, f.bytes))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Trace(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parses the CSV written by [`to_csv`](Self::to_csv). Labels sharing a
    /// timestamp become one concurrent group; feed-forward runs on lane 1.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut phases: Vec<Phase> = Vec::new();
        for (line, rec) in r.deserialize::<(u32, String, ChipletId, ChipletId, u64)>().enumerate() {
            let (t, label, src, dst, bytes) = rec.map_err(|e| Error::Trace(format!("row {}: {e}", line + 2)))?;
            let label = PhaseLabel::parse(&label)?;
            match phases.last_mut() {
                Some(p) if p.t == t && p.label == label => p.flows.push(Flow { src, dst, bytes }),
                _ => phases.push(Phase {
                    t,
                    label,
                    flows: vec![Flow { src, dst, bytes }],
                    concurrent_group: None,
                    lane: 0,
                }),
            }
        }
        let mut i = 0;
        while i < phases.len() {
            let j = (i..phases.len()).find(|&j| phases[j].t != phases[i].t).unwrap_or(phases.len());
            if j - i > 1 {
                for p in &mut phases[i..j] {
                    p.concurrent_group = Some(p.label.block);
                    p.lane = u8::from(p.label.kind == KernelKind::FeedForward);
                }
            }
            i = j;
        }
        Ok(Self { phases })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightDistribution {
    /// Every active cluster receives the full attention weights.
    #[default]
    Broadcast,
    /// Each cluster receives only the slices of the heads it owns.
    Partitioned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    pub weight_distribution: WeightDistribution,
    /// Number of K/V passes per head in the score phase.
    pub tiling_factor: u64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { weight_distribution: WeightDistribution::Broadcast, tiling_factor: 1 }
    }
}

/// Feed-forward hidden columns handled by one ReRAM chiplet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FfPartition {
    pub chiplet: ChipletId,
    pub hidden_start: u64,
    pub hidden_end: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelMapping {
    pub clusters: Vec<Cluster>,
    /// `(cluster, SM)` executing each attention head.
    pub head_owners: Vec<(usize, ChipletId)>,
    /// Embedding and feed-forward run on this chain, head first.
    pub reram_macro: Vec<ChipletId>,
    pub ff_partitions: Vec<FfPartition>,
}

impl KernelMapping {
    pub fn active_clusters(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.head_owners.iter().map(|&(c, _)| c).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn heads_of_cluster(&self, cluster: usize) -> usize {
        self.head_owners.iter().filter(|&&(c, _)| c == cluster).count()
    }

    pub fn max_heads_per_sm(&self) -> usize {
        let mut per: BTreeMap<ChipletId, usize> = BTreeMap::new();
        for &(_, sm) in &self.head_owners {
            *per.entry(sm).or_default() += 1;
        }
        per.values().copied().max().unwrap_or(0)
    }

    /// Chiplets executing a kernel kind.
    pub fn executors(&self, kind: KernelKind) -> Vec<ChipletId> {
        match kind {
            KernelKind::Embed | KernelKind::FeedForward => self.reram_macro.clone(),
            KernelKind::WeightLoad => {
                self.active_clusters().iter().flat_map(|&c| [self.clusters[c].dram, self.clusters[c].mc]).collect()
            }
            KernelKind::Kqv | KernelKind::Score | KernelKind::OutProj | KernelKind::LayerNorm => {
                let mut ids: Vec<ChipletId> = self.head_owners.iter().map(|&(_, sm)| sm).collect();
                ids.extend(self.active_clusters().iter().map(|&c| self.clusters[c].mc));
                ids.sort_unstable();
                ids.dedup();
                ids
            }
        }
    }

    fn check(&self, platform: &Platform) -> Result<()> {
        let n = platform.len();
        let all = self
            .clusters
            .iter()
            .flat_map(|c| c.sms.iter().copied().chain([c.mc, c.dram]))
            .chain(self.head_owners.iter().map(|&(_, sm)| sm))
            .chain(self.reram_macro.iter().copied());
        for id in all {
            if id >= n {
                return Err(Error::UnknownChiplet(id));
            }
        }
        if self.reram_macro.is_empty() || self.clusters.is_empty() {
            return Err(Error::Trace("mapping needs a ReRAM macro and at least one cluster".into()));
        }
        if let Some(&(c, _)) = self.head_owners.iter().find(|&&(c, _)| c >= self.clusters.len()) {
            return Err(Error::Trace(format!("head mapped to missing cluster {c}")));
        }
        Ok(())
    }
}

/// Heads round-robin over clusters, then over the SMs of each cluster;
/// feed-forward columns split evenly along the macro.
pub fn default_mapping(platform: &Platform, model: &ModelSpec) -> KernelMapping {
    let clusters = platform.clusters.clone();
    let m = clusters.len().max(1);
    let head_owners = (0..model.num_heads as usize)
        .map(|i| {
            let c = i % m;
            let sms = &clusters[c].sms;
            (c, sms[(i / m) % sms.len()])
        })
        .collect();
    let macro_ids = platform.reram_macro.clone();
    let hidden = FF_EXPANSION * model.d_model;
    let r = macro_ids.len() as u64;
    let ff_partitions = macro_ids
        .iter()
        .enumerate()
        .map(|(i, &chiplet)| FfPartition {
            chiplet,
            hidden_start: hidden * i as u64 / r,
            hidden_end: hidden * (i as u64 + 1) / r,
        })
        .collect();
    debug_assert!(platform.reram_macro.iter().all(|&id| platform.role(id) == Role::Reram));
    KernelMapping { clusters, head_owners, reram_macro: macro_ids, ff_partitions }
}

#[derive(Default)]
struct FlowSet(BTreeMap<(ChipletId, ChipletId), u64>);

impl FlowSet {
    fn add(&mut self, src: ChipletId, dst: ChipletId, bytes: u64) {
        if src != dst && bytes > 0 {
            *self.0.entry((src, dst)).or_default() += bytes;
        }
    }

    fn into_flows(self) -> Vec<Flow> {
        self.0.into_iter().map(|((src, dst), bytes)| Flow { src, dst, bytes }).collect()
    }
}

pub fn generate_trace(
    mapping: &KernelMapping,
    model: &ModelSpec,
    seq: &SequenceConfig,
) -> Result<TrafficTrace> {
    generate_trace_with(mapping, model, seq, &TraceOptions::default())
}

/// Phase-ordered trace. Byte volumes depend only on the mapping's roles,
/// never on where chiplets sit, so one trace serves every placement.
pub fn generate_trace_with(
    mapping: &KernelMapping,
    model: &ModelSpec,
    seq: &SequenceConfig,
    opts: &TraceOptions,
) -> Result<TrafficTrace> {
    model.validate()?;
    seq.validate()?;
    let n = seq.seq_len;
    let l = seq.context_len;
    let d = model.d_model;
    let dh = model.head_dim();
    let b = model.bytes_per_element();
    let macro_ids = &mapping.reram_macro;
    if macro_ids.is_empty() || mapping.clusters.is_empty() {
        return Err(Error::Trace("mapping needs a ReRAM macro and at least one cluster".into()));
    }
    let head = macro_ids[0];
    let tail = *macro_ids.last().expect("macro is non-empty");
    let active = mapping.active_clusters();

    let mut phases = Vec::new();
    let mut embed = FlowSet::default();
    embed.add(mapping.clusters[0].dram, head, n * d * b);
    for w in macro_ids.windows(2) {
        embed.add(w[0], w[1], n * d * b);
    }
    phases.push(Phase {
        t: 0,
        label: PhaseLabel { kind: KernelKind::Embed, block: 0, cross: false },
        flows: embed.into_flows(),
        concurrent_group: None,
        lane: 0,
    });

    let weight_load = || {
        let mut fs = FlowSet::default();
        for &c in &active {
            let cl = &mapping.clusters[c];
            let bytes = match opts.weight_distribution {
                WeightDistribution::Broadcast => 2 * model.square_weight_bytes() + 2 * model.kv_weight_bytes(),
                WeightDistribution::Partitioned => {
                    let heads = mapping.heads_of_cluster(c) as u64;
                    let kv = if model.kv_heads() == 1 { d * dh * b } else { heads * d * dh * b };
                    2 * heads * d * dh * b + 2 * kv
                }
            };
            fs.add(cl.dram, cl.mc, bytes);
        }
        for &(c, sm) in &mapping.head_owners {
            fs.add(mapping.clusters[c].mc, sm, 3 * d * dh * b);
        }
        fs.into_flows()
    };
    let kqv = || {
        let mut fs = FlowSet::default();
        for &c in &active {
            let cl = &mapping.clusters[c];
            for &sm in &cl.sms {
                fs.add(cl.mc, sm, n * d * b);
            }
        }
        for &(c, sm) in &mapping.head_owners {
            fs.add(sm, mapping.clusters[c].mc, 3 * n * dh * b);
        }
        fs.into_flows()
    };
    let score = || {
        let mut fs = FlowSet::default();
        for &(c, sm) in &mapping.head_owners {
            let mc = mapping.clusters[c].mc;
            fs.add(mc, sm, 2 * l * dh * b * opts.tiling_factor);
            fs.add(sm, mc, n * dh * b);
        }
        for &c in &active {
            fs.add(mapping.clusters[c].mc, head, n * d * b);
        }
        fs.into_flows()
    };
    let feed_forward = || {
        let mut fs = FlowSet::default();
        for w in macro_ids.windows(2) {
            fs.add(w[0], w[1], n * FF_EXPANSION * d * b);
        }
        for &c in &active {
            fs.add(tail, mapping.clusters[c].mc, n * d * b);
        }
        fs.into_flows()
    };

    let parallel = model.block_formulation == BlockFormulation::Parallel;
    let mut t = 0;
    for block in 0..model.num_layers {
        let group = parallel.then_some(block);
        let mut push = |t: u32, kind, cross, flows, lane| {
            let concurrent_group = if kind == KernelKind::WeightLoad { None } else { group };
            phases.push(Phase { t, label: PhaseLabel { kind, block, cross }, flows, concurrent_group, lane });
        };
        let crosses: &[bool] = if model.has_cross_attention(block) { &[false, true] } else { &[false] };
        if parallel {
            t += 1;
            for &cross in crosses {
                push(t, KernelKind::WeightLoad, cross, weight_load(), 0);
            }
            t += 1;
            for &cross in crosses {
                push(t, KernelKind::Kqv, cross, kqv(), 0);
                push(t, KernelKind::Score, cross, score(), 0);
            }
            push(t, KernelKind::FeedForward, false, feed_forward(), 1);
        } else {
            for &cross in crosses {
                for (kind, flows) in [
                    (KernelKind::WeightLoad, weight_load()),
                    (KernelKind::Kqv, kqv()),
                    (KernelKind::Score, score()),
                ] {
                    t += 1;
                    push(t, kind, cross, flows, 0);
                }
            }
            t += 1;
            push(t, KernelKind::FeedForward, false, feed_forward(), 0);
        }
    }
    Ok(TrafficTrace { phases })
}

/// Checks that a trace only references platform chiplets and a consistent mapping.
pub fn check_trace(platform: &Platform, mapping: &KernelMapping, trace: &TrafficTrace) -> Result<()> {
    mapping.check(platform)?;
    trace.validate(platform.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::{build_platform, Integration, SystemConfig};
    use crate::workload::{preset, AttentionVariant, BlockStructure};

    fn platform(total: usize) -> Platform {
        build_platform(&SystemConfig::new(total, Integration::Stacked)).unwrap()
    }

    fn seq(n: u64) -> SequenceConfig {
        SequenceConfig::new(n).unwrap()
    }

    #[test]
    fn heads_round_robin() {
        let p = platform(100);
        let m = default_mapping(&p, &preset("BERT-Base").unwrap());
        let per: Vec<usize> = (0..8).map(|c| m.heads_of_cluster(c)).collect();
        assert_eq!(per, vec![2, 2, 2, 2, 1, 1, 1, 1]);
        let p = platform(11);
        let m = default_mapping(&p, &preset("BERT-Base").unwrap());
        assert_eq!(m.heads_of_cluster(0), 12);
    }

    #[test]
    fn ff_partitions_follow_macro() {
        let p = platform(100);
        let m = default_mapping(&p, &preset("BERT-Base").unwrap());
        assert_eq!(m.ff_partitions.len(), 20);
        assert_eq!(m.ff_partitions.iter().map(|f| f.chiplet).collect::<Vec<_>>(), p.reram_macro);
        assert_eq!(m.ff_partitions[0].hidden_start, 0);
        assert_eq!(m.ff_partitions[19].hidden_end, 4 * 768);
        assert!(m.ff_partitions.windows(2).all(|w| w[0].hidden_end == w[1].hidden_start));
        assert_eq!(m.executors(KernelKind::Embed), m.executors(KernelKind::FeedForward));
    }

    #[test]
    fn empty_model_has_only_embed() {
        let p = platform(36);
        let model = ModelSpec::new("empty", BlockStructure::EncoderOnly, 64, 0, 4).unwrap();
        let t = generate_trace(&default_mapping(&p, &model), &model, &seq(8)).unwrap();
        assert_eq!(t.phases.len(), 1);
        assert_eq!(t.phases[0].label.kind, KernelKind::Embed);
    }

    #[test]
    fn kqv_gather_bytes() {
        let p = platform(36);
        let model = preset("BERT-Base").unwrap();
        let m = default_mapping(&p, &model);
        let t = generate_trace(&m, &model, &seq(128)).unwrap();
        let kqv = t.phases.iter().find(|p| p.label.kind == KernelKind::Kqv).unwrap();
        let gathered: u64 = kqv.flows.iter().filter(|f| p.role(f.src) == Role::Sm).map(|f| f.bytes).sum();
        assert_eq!(gathered, 3 * 128 * 64 * 2 * 12);
        assert_eq!(gathered, 589_824);
        assert_eq!(t.phases.len(), 1 + 12 * 4);
    }

    #[test]
    fn mqa_changes_only_weight_load() {
        let p = platform(100);
        let mqa = preset("Llama2-7B").unwrap().with_layers(2);
        let mha = mqa.clone().with_variant(AttentionVariant::Mha);
        let s = seq(64);
        let a = generate_trace(&default_mapping(&p, &mqa), &mqa, &s).unwrap();
        let b = generate_trace(&default_mapping(&p, &mha), &mha, &s).unwrap();
        assert_eq!(a.phases.len(), b.phases.len());
        let (d, h, bpe) = (4096u64, 32u64, 2u64);
        let clusters = 8;
        for (x, y) in a.phases.iter().zip(&b.phases) {
            if x.label.kind == KernelKind::WeightLoad {
                let diff = y.total_bytes() - x.total_bytes();
                assert_eq!(diff * h, 2 * (h - 1) * d * d * bpe * clusters);
            } else {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn parallel_blocks_share_a_timestamp() {
        let p = platform(36);
        let model = preset("GPT-J").unwrap().with_layers(2);
        let t = generate_trace(&default_mapping(&p, &model), &model, &seq(16)).unwrap();
        let block0: Vec<&Phase> = t.phases.iter().filter(|p| p.label.block == 0 && p.t > 0).collect();
        assert_eq!(block0.len(), 4);
        assert_eq!(block0[0].concurrent_group, None);
        assert!(block0[1..].iter().all(|p| p.t == block0[1].t && p.concurrent_group == Some(0)));
        assert_eq!(block0[3].lane, 1);
        t.validate(p.len()).unwrap();
    }

    #[test]
    fn encoder_decoder_adds_cross_groups() {
        let p = platform(36);
        let model = preset("BART-Base").unwrap();
        let t = generate_trace(&default_mapping(&p, &model), &model, &seq(16)).unwrap();
        let cross_blocks: Vec<u32> =
            t.phases.iter().filter(|p| p.label.cross && p.label.kind == KernelKind::Kqv).map(|p| p.label.block).collect();
        assert_eq!(cross_blocks, (6..12).collect::<Vec<_>>());
    }

    #[test]
    fn csv_roundtrip() {
        let p = platform(36);
        for name in ["BERT-Base", "GPT-J", "BART-Base"] {
            let model = preset(name).unwrap().with_layers(3);
            let t = generate_trace(&default_mapping(&p, &model), &model, &seq(32)).unwrap();
            let back = TrafficTrace::from_csv(&t.to_csv().unwrap()).unwrap();
            assert_eq!(back, t, "{name}");
        }
    }

    #[test]
    fn macro_flows_form_a_chain() {
        let p = platform(100);
        let model = preset("BERT-Base").unwrap().with_layers(1);
        let t = generate_trace(&default_mapping(&p, &model), &model, &seq(32)).unwrap();
        for phase in t.phases.iter().filter(|p| matches!(p.label.kind, KernelKind::Embed | KernelKind::FeedForward)) {
            let intra: Vec<&Flow> = phase
                .flows
                .iter()
                .filter(|f| p.role(f.src) == Role::Reram && p.role(f.dst) == Role::Reram)
                .collect();
            assert_eq!(intra.len(), 19);
            for f in intra {
                let i = p.reram_macro.iter().position(|&x| x == f.src).unwrap();
                assert_eq!(p.reram_macro[i + 1], f.dst);
            }
        }
    }
}
