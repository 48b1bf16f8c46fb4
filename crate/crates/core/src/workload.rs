//! Analytical model of transformer inference kernels.
//!
//! A [`ModelSpec`] plus a [`SequenceConfig`] expands into an ordered list of
//! [`KernelInstance`]s with exact FLOP and byte counts. The same shapes drive
//! the storage-blowup and ReRAM write-endurance estimators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockStructure {
    EncoderOnly,
    DecoderOnly,
    EncoderDecoder,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttentionVariant {
    #[default]
    #[serde(rename = "MHA", alias = "mha")]
    Mha,
    /// One K/V head shared by every query head.
    #[serde(rename = "MQA", alias = "mqa")]
    Mqa,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockFormulation {
    /// `x + MLP(LN(x + Attn(LN(x))))`: attention then feed-forward.
    #[default]
    Serial,
    /// `x + MLP(LN(x)) + Attn(LN(x))`: both branches run concurrently.
    Parallel,
}

fn default_precision() -> u32 {
    16
}

/// Transformer architecture descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub block_structure: BlockStructure,
    pub d_model: u64,
    pub num_layers: u32,
    pub num_heads: u32,
    #[serde(default)]
    pub param_count: u64,
    #[serde(default)]
    pub attention_variant: AttentionVariant,
    #[serde(default)]
    pub block_formulation: BlockFormulation,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        block_structure: BlockStructure,
        d_model: u64,
        num_layers: u32,
        num_heads: u32,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            block_structure,
            d_model,
            num_layers,
            num_heads,
            param_count: 0,
            attention_variant: AttentionVariant::Mha,
            block_formulation: BlockFormulation::Serial,
            precision_bits: 16,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 {
            return Err(Error::InvalidModel(format!("{}: d_model must be positive", self.name)));
        }
        if self.num_heads == 0 {
            return Err(Error::InvalidModel(format!("{}: num_heads must be positive", self.name)));
        }
        if !self.d_model.is_multiple_of(u64::from(self.num_heads)) {
            return Err(Error::InvalidModel(format!(
                "{}: d_model {} is not divisible by num_heads {}",
                self.name, self.d_model, self.num_heads
            )));
        }
        if !matches!(self.precision_bits, 8 | 16 | 32) {
            return Err(Error::InvalidModel(format!(
                "{}: precision_bits must be 8, 16 or 32 (got {})",
                self.name, self.precision_bits
            )));
        }
        Ok(())
    }

    pub fn with_variant(mut self, variant: AttentionVariant) -> Self {
        self.attention_variant = variant;
        self
    }

    pub fn with_formulation(mut self, formulation: BlockFormulation) -> Self {
        self.block_formulation = formulation;
        self
    }

    pub fn with_layers(mut self, layers: u32) -> Self {
        self.num_layers = layers;
        self
    }

    pub fn head_dim(&self) -> u64 {
        self.d_model / u64::from(self.num_heads)
    }

    pub fn bytes_per_element(&self) -> u64 {
        u64::from(self.precision_bits / 8)
    }

    /// Number of distinct K/V heads: `h` for MHA, one for MQA.
    pub fn kv_heads(&self) -> u64 {
        match self.attention_variant {
            AttentionVariant::Mha => u64::from(self.num_heads),
            AttentionVariant::Mqa => 1,
        }
    }

    /// Bytes of one full `d_model x d_model` projection matrix.
    pub fn square_weight_bytes(&self) -> u64 {
        self.d_model * self.d_model * self.bytes_per_element()
    }

    /// Bytes of W^K (equal to W^V) across all K/V heads.
    pub fn kv_weight_bytes(&self) -> u64 {
        self.d_model * self.head_dim() * self.kv_heads() * self.bytes_per_element()
    }

    /// W^Q + W^K + W^V + W^O bytes for one attention group.
    pub fn attention_weight_bytes(&self) -> u64 {
        2 * self.square_weight_bytes() + 2 * self.kv_weight_bytes()
    }

    pub fn ff_weight_bytes(&self) -> u64 {
        2 * FF_EXPANSION * self.square_weight_bytes()
    }

    /// Split of `num_layers` into (encoder, decoder) blocks.
    pub fn block_split(&self) -> (u32, u32) {
        match self.block_structure {
            BlockStructure::EncoderOnly => (self.num_layers, 0),
            BlockStructure::DecoderOnly => (0, self.num_layers),
            BlockStructure::EncoderDecoder => {
                let enc = self.num_layers.div_ceil(2);
                (enc, self.num_layers - enc)
            }
        }
    }

    /// Whether block `b` carries a cross-attention group.
    pub fn has_cross_attention(&self, block: u32) -> bool {
        let (enc, _) = self.block_split();
        self.block_structure == BlockStructure::EncoderDecoder && block >= enc
    }
}

/// Sequence lengths for one inference pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "SequenceDef")]
pub struct SequenceConfig {
    pub seq_len: u64,
    pub context_len: u64,
}

#[derive(Deserialize)]
struct SequenceDef {
    seq_len: u64,
    context_len: Option<u64>,
}

impl From<SequenceDef> for SequenceConfig {
    fn from(def: SequenceDef) -> Self {
        Self { seq_len: def.seq_len, context_len: def.context_len.unwrap_or(def.seq_len) }
    }
}

impl SequenceConfig {
    pub fn new(seq_len: u64) -> Result<Self> {
        Self::with_context(seq_len, seq_len)
    }

    pub fn with_context(seq_len: u64, context_len: u64) -> Result<Self> {
        let seq = Self { seq_len, context_len };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.context_len == 0 {
            return Err(Error::InvalidSequence(format!(
                "seq_len and context_len must be >= 1 (got {} / {})",
                self.seq_len, self.context_len
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Embed,
    WeightLoad,
    Kqv,
    Score,
    OutProj,
    FeedForward,
    LayerNorm,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Embed => "embed",
            KernelKind::WeightLoad => "weight_load",
            KernelKind::Kqv => "kqv",
            KernelKind::Score => "score",
            KernelKind::OutProj => "out_proj",
            KernelKind::FeedForward => "ffn",
            KernelKind::LayerNorm => "layer_norm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "embed" => KernelKind::Embed,
            "weight_load" => KernelKind::WeightLoad,
            "kqv" => KernelKind::Kqv,
            "score" => KernelKind::Score,
            "out_proj" => KernelKind::OutProj,
            "ffn" => KernelKind::FeedForward,
            "layer_norm" => KernelKind::LayerNorm,
            _ => return None,
        })
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelInstance {
    pub kind: KernelKind,
    pub block_index: u32,
    pub cross_attention: bool,
    /// Set for the attention group and feed-forward of a parallel block.
    pub concurrent_group: Option<u32>,
    pub flops: u64,
    /// Matrix-multiply FLOPs only (excludes softmax / normalization work).
    pub mvm_flops: u64,
    pub weight_bytes: u64,
    pub activation_in_bytes: u64,
    pub activation_out_bytes: u64,
}

/// Hidden expansion of the feed-forward network.
pub const FF_EXPANSION: u64 = 4;

/// Per-element costs of the non-MVM kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub softmax_flops_per_element: u64,
    pub layernorm_flops_per_element: u64,
}

impl Default for KernelConstants {
    fn default() -> Self {
        Self { softmax_flops_per_element: 5, layernorm_flops_per_element: 5 }
    }
}

pub fn kernel_sequence(model: &ModelSpec, seq: &SequenceConfig) -> Vec<KernelInstance> {
    kernel_sequence_with(model, seq, &KernelConstants::default())
}

/// Expands a model into its ordered kernel list.
///
/// One `Embed`, then per block `WeightLoad, Kqv, Score, OutProj` for the
/// self-attention group, the same four again for a cross-attention group in
/// decoder blocks of encoder-decoder models, then `FeedForward, LayerNorm`.
pub fn kernel_sequence_with(
    model: &ModelSpec,
    seq: &SequenceConfig,
    consts: &KernelConstants,
) -> Vec<KernelInstance> {
    let n = seq.seq_len;
    let l = seq.context_len;
    let d = model.d_model;
    let b = model.bytes_per_element();
    let tokens = n * d * b;

    let mut out = Vec::with_capacity(1 + model.num_layers as usize * 10);
    out.push(KernelInstance {
        kind: KernelKind::Embed,
        block_index: 0,
        cross_attention: false,
        concurrent_group: None,
        flops: 2 * n * d * d,
        mvm_flops: 2 * n * d * d,
        weight_bytes: d * d * b,
        activation_in_bytes: tokens,
        activation_out_bytes: tokens,
    });

    let parallel = model.block_formulation == BlockFormulation::Parallel;
    for block in 0..model.num_layers {
        let group = parallel.then_some(block);
        let attention = |cross: bool, out: &mut Vec<KernelInstance>| {
            let kernel = |kind, flops, mvm_flops, weight_bytes, act_in, act_out| KernelInstance {
                kind,
                block_index: block,
                cross_attention: cross,
                concurrent_group: if kind == KernelKind::WeightLoad { None } else { group },
                flops,
                mvm_flops,
                weight_bytes,
                activation_in_bytes: act_in,
                activation_out_bytes: act_out,
            };
            out.push(kernel(KernelKind::WeightLoad, 0, 0, model.attention_weight_bytes(), 0, 0));
            let kqv = 3 * 2 * n * d * d;
            out.push(kernel(KernelKind::Kqv, kqv, kqv, 0, tokens, 3 * tokens));
            let score_mvm = 2 * n * l * d + 2 * n * l * d;
            let softmax = n * l * consts.softmax_flops_per_element;
            out.push(kernel(
                KernelKind::Score,
                score_mvm + softmax,
                score_mvm,
                0,
                tokens + 2 * l * d * b,
                tokens,
            ));
            let proj = 2 * n * d * d;
            out.push(kernel(KernelKind::OutProj, proj, proj, 0, tokens, tokens));
        };
        attention(false, &mut out);
        if model.has_cross_attention(block) {
            attention(true, &mut out);
        }
        let ff = 2 * 2 * n * d * (FF_EXPANSION * d);
        out.push(KernelInstance {
            kind: KernelKind::FeedForward,
            block_index: block,
            cross_attention: false,
            concurrent_group: group,
            flops: ff,
            mvm_flops: ff,
            weight_bytes: model.ff_weight_bytes(),
            activation_in_bytes: tokens,
            activation_out_bytes: tokens,
        });
        out.push(KernelInstance {
            kind: KernelKind::LayerNorm,
            block_index: block,
            cross_attention: false,
            concurrent_group: None,
            flops: consts.layernorm_flops_per_element * n * d,
            mvm_flops: 0,
            weight_bytes: 0,
            activation_in_bytes: tokens,
            activation_out_bytes: tokens,
        });
    }
    out
}

/// Share of MVM FLOPs spent in the O(N d^2) projection and FC kernels.
pub fn fc_dominance(model: &ModelSpec, seq: &SequenceConfig) -> f64 {
    // The share is identical for every block, so a 0-layer model is
    // evaluated on a single block.
    let probe;
    let model = if model.num_layers == 0 {
        probe = model.clone().with_layers(1);
        &probe
    } else {
        model
    };
    let (mut fc, mut score) = (0u128, 0u128);
    for k in kernel_sequence(model, seq) {
        match k.kind {
            KernelKind::Kqv | KernelKind::OutProj | KernelKind::FeedForward => {
                fc += u128::from(k.mvm_flops)
            }
            KernelKind::Score => score += u128::from(k.mvm_flops),
            _ => {}
        }
    }
    fc as f64 / (fc + score) as f64
}

/// Bytes of per-block attention intermediates (Q, K, V, alpha, Score, P)
/// divided by the bytes of the block's static weights.
pub fn intermediate_storage_ratio(model: &ModelSpec, seq: &SequenceConfig) -> f64 {
    let n = u128::from(seq.seq_len);
    let l = u128::from(seq.context_len);
    let d = u128::from(model.d_model);
    let h = u128::from(model.num_heads);
    let kv = u128::from(model.kv_heads());
    let dh = u128::from(model.head_dim());
    let b = u128::from(model.bytes_per_element());
    let q = n * d;
    let k_and_v = 2 * n * dh * kv;
    let alpha = h * n * l;
    let score = h * n * l;
    let p = n * d;
    let intermediates = (q + k_and_v + alpha + score + p) * b;
    let weights = u128::from(model.attention_weight_bytes()) + u128::from(model.ff_weight_bytes());
    intermediates as f64 / weights as f64
}

/// ReRAM chiplet geometry used by the write-endurance estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReramArray {
    pub cell_bits: u32,
    pub crossbar_dim: u32,
    pub crossbars_per_chiplet: u64,
    pub endurance_limit: u64,
}

impl Default for ReramArray {
    /// 16 tiles of 96 PEs, one 128x128 crossbar of 2-bit cells per PE.
    fn default() -> Self {
        Self::from_tiles(16, 96)
    }
}

impl ReramArray {
    pub fn from_tiles(tiles: u64, crossbars_per_tile: u64) -> Self {
        Self {
            cell_bits: 2,
            crossbar_dim: 128,
            crossbars_per_chiplet: tiles * crossbars_per_tile,
            endurance_limit: 1_000_000,
        }
    }

    pub fn capacity_bits(&self) -> u64 {
        self.crossbars_per_chiplet
            * u64::from(self.crossbar_dim)
            * u64::from(self.crossbar_dim)
            * u64::from(self.cell_bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriteEstimate {
    /// Bits that must be (re)programmed for every token processed.
    pub write_bits_per_token: f64,
    /// Cell write operations per token (`write_bits_per_token / cell_bits`).
    pub cell_writes_per_token: f64,
    /// Per-token bits spread evenly over one chiplet's cells.
    pub write_bits_per_cell_per_token: f64,
    pub total_write_bits_per_encoder: f64,
    pub cell_writes_per_encoder: f64,
    pub endurance_limit: u64,
    pub exceeds_endurance: bool,
}

/// Bits programmed into crossbars for one token if attention ran in ReRAM.
///
/// Per token the K/Q/V projection matrices are rewritten (the crossbar
/// operands change with every token), and the token's K/Q/V rows, its score
/// row over the context and its P row are materialized.
pub fn attention_write_bits_per_token(model: &ModelSpec, context_len: u64) -> u64 {
    let d = model.d_model;
    let dh = model.head_dim();
    let kv = model.kv_heads();
    let h = u64::from(model.num_heads);
    let bits = u64::from(model.precision_bits);
    let projections = d * d + 2 * d * dh * kv;
    let kqv_rows = d + 2 * dh * kv;
    let score_row = h * context_len;
    let p_row = d;
    (projections + kqv_rows + score_row + p_row) * bits
}

pub fn reram_write_load(
    model: &ModelSpec,
    seq: &SequenceConfig,
    array: &ReramArray,
) -> Result<WriteEstimate> {
    let capacity = array.capacity_bits();
    if capacity == 0 {
        return Err(Error::ZeroCapacity);
    }
    let per_token = if seq.seq_len == 0 {
        0.0
    } else {
        attention_write_bits_per_token(model, seq.context_len) as f64
    };
    let cell_writes = per_token / f64::from(array.cell_bits);
    let tokens = seq.seq_len as f64;
    let cell_writes_per_encoder = cell_writes * tokens;
    Ok(WriteEstimate {
        write_bits_per_token: per_token,
        cell_writes_per_token: cell_writes,
        write_bits_per_cell_per_token: per_token / capacity as f64,
        total_write_bits_per_encoder: per_token * tokens,
        cell_writes_per_encoder,
        endurance_limit: array.endurance_limit,
        exceeds_endurance: cell_writes_per_encoder > array.endurance_limit as f64,
    })
}

/// Built-in model presets.
pub fn presets() -> Vec<ModelSpec> {
    use BlockStructure::*;
    let mk = |name: &str, structure, d, layers, heads, params_m: u64| ModelSpec {
        name: name.to_string(),
        block_structure: structure,
        d_model: d,
        num_layers: layers,
        num_heads: heads,
        param_count: params_m * 1_000_000,
        attention_variant: AttentionVariant::Mha,
        block_formulation: BlockFormulation::Serial,
        precision_bits: 16,
    };
    vec![
        mk("BERT-Base", EncoderOnly, 768, 12, 12, 110),
        mk("BERT-Large", EncoderOnly, 1024, 24, 16, 340),
        mk("BART-Base", EncoderDecoder, 768, 12, 12, 140),
        mk("BART-Large", EncoderDecoder, 1024, 12, 16, 400),
        mk("GPT-J", DecoderOnly, 4096, 28, 16, 6700).with_formulation(BlockFormulation::Parallel),
        mk("Llama2-7B", DecoderOnly, 4096, 32, 32, 7000).with_variant(AttentionVariant::Mqa),
    ]
}

pub fn preset(name: &str) -> Option<ModelSpec> {
    presets().into_iter().find(|m| m.name.eq_ignore_ascii_case(name))
}

/// A set of models loaded from JSON, falling back to the presets by name.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModelCatalog {
    pub models: Vec<ModelSpec>,
}

impl ModelCatalog {
    pub fn builtin() -> Self {
        Self { models: presets() }
    }

    /// Accepts either `{"models": [...]}` or a bare array of model specs.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let catalog: ModelCatalog = if value.is_array() {
            ModelCatalog { models: serde_json::from_value(value)? }
        } else {
            serde_json::from_value(value)?
        };
        for m in &catalog.models {
            m.validate()?;
        }
        Ok(catalog)
    }

    pub fn get(&self, name: &str) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.name.eq_ignore_ascii_case(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bert_base() -> ModelSpec {
        preset("BERT-Base").unwrap()
    }

    fn tiny() -> ModelSpec {
        ModelSpec::new("tiny", BlockStructure::EncoderOnly, 1, 1, 1).unwrap()
    }

    #[test]
    fn rejects_indivisible_heads_and_bad_precision() {
        assert!(ModelSpec::new("x", BlockStructure::EncoderOnly, 10, 1, 3).is_err());
        let mut m = tiny();
        m.precision_bits = 12;
        assert!(m.validate().is_err());
        assert!(SequenceConfig::new(0).is_err());
    }

    #[test]
    fn bert_base_weight_load_bytes() {
        let seq = SequenceConfig::new(128).unwrap();
        let kernels = kernel_sequence(&bert_base(), &seq);
        let loads: Vec<_> = kernels.iter().filter(|k| k.kind == KernelKind::WeightLoad).collect();
        assert_eq!(loads.len(), 12);
        assert!(loads.iter().all(|k| k.weight_bytes == 4_718_592));
        assert_eq!(kernels.iter().filter(|k| k.kind == KernelKind::Embed).count(), 1);
        assert_eq!(kernels[0].kind, KernelKind::Embed);
        assert_eq!(kernels[0].block_index, 0);
    }

    #[test]
    fn llama_mqa_kv_bytes_are_one_over_h() {
        let mqa = preset("Llama2-7B").unwrap();
        let mha = mqa.clone().with_variant(AttentionVariant::Mha);
        assert_eq!(mqa.kv_weight_bytes(), 1_048_576);
        assert_eq!(mha.kv_weight_bytes(), 33_554_432);
        assert_eq!(mha.kv_weight_bytes(), mqa.kv_weight_bytes() * 32);
    }

    #[test]
    fn smallest_instance_flops() {
        let seq = SequenceConfig::new(1).unwrap();
        let k = kernel_sequence(&tiny(), &seq);
        let score = k.iter().find(|k| k.kind == KernelKind::Score).unwrap();
        let ff = k.iter().find(|k| k.kind == KernelKind::FeedForward).unwrap();
        assert_eq!(score.flops, 9);
        assert_eq!(ff.flops, 16);
    }

    #[test]
    fn block_order_serial() {
        let seq = SequenceConfig::new(4).unwrap();
        let kinds: Vec<_> = kernel_sequence(&tiny(), &seq).iter().map(|k| k.kind).collect();
        use KernelKind::*;
        assert_eq!(kinds, vec![Embed, WeightLoad, Kqv, Score, OutProj, FeedForward, LayerNorm]);
    }

    #[test]
    fn parallel_marks_attention_and_ff_concurrent() {
        let m = preset("GPT-J").unwrap().with_layers(2);
        let seq = SequenceConfig::new(8).unwrap();
        for k in kernel_sequence(&m, &seq) {
            let expect = match k.kind {
                KernelKind::Kqv | KernelKind::Score | KernelKind::OutProj | KernelKind::FeedForward => {
                    Some(k.block_index)
                }
                _ => None,
            };
            assert_eq!(k.concurrent_group, expect, "{:?}", k.kind);
        }
    }

    #[test]
    fn cross_attention_groups() {
        let seq = SequenceConfig::new(16).unwrap();
        let bart = preset("BART-Base").unwrap();
        let kernels = kernel_sequence(&bart, &seq);
        let (enc, dec) = bart.block_split();
        assert_eq!((enc, dec), (6, 6));
        for b in 0..bart.num_layers {
            let cross_kqv = kernels
                .iter()
                .filter(|k| k.block_index == b && k.cross_attention && k.kind == KernelKind::Kqv)
                .count();
            assert_eq!(cross_kqv, usize::from(b >= enc));
        }
        let gpt = preset("GPT-J").unwrap();
        assert!(kernel_sequence(&gpt, &seq).iter().all(|k| !k.cross_attention));
    }

    #[test]
    fn fc_dominance_gpt3_like() {
        let m = ModelSpec::new("gpt3", BlockStructure::DecoderOnly, 12288, 2, 96).unwrap();
        let seq = SequenceConfig::new(128).unwrap();
        let share = fc_dominance(&m, &seq);
        assert!((share - 294_912.0 / 295_424.0).abs() < 1e-12);
        assert!(share > 0.99);
        let share1 = fc_dominance(&tiny(), &SequenceConfig::new(1).unwrap());
        assert!((share1 - 24.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn fc_dominance_grows_with_width() {
        let seq = SequenceConfig::new(512).unwrap();
        let shares: Vec<f64> = [256u64, 4096, 12288]
            .iter()
            .map(|&d| {
                let m = ModelSpec::new("m", BlockStructure::DecoderOnly, d, 1, 16).unwrap();
                fc_dominance(&m, &seq)
            })
            .collect();
        assert!(shares.windows(2).all(|w| w[0] < w[1]), "{shares:?}");
    }

    #[test]
    fn storage_ratio_increases_with_sequence() {
        let m = bert_base();
        let r: Vec<f64> = [64u64, 512, 4096]
            .iter()
            .map(|&n| intermediate_storage_ratio(&m, &SequenceConfig::new(n).unwrap()))
            .collect();
        assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
        let wide = ModelSpec::new("wide", BlockStructure::EncoderOnly, 8192, 1, 8).unwrap();
        assert!(intermediate_storage_ratio(&wide, &SequenceConfig::new(1).unwrap()) < 1e-3);
    }

    fn endurance_model() -> ModelSpec {
        ModelSpec::new("bert-h8", BlockStructure::EncoderOnly, 512, 1, 8).unwrap()
    }

    #[test]
    fn zero_tokens_zero_writes() {
        let seq = SequenceConfig { seq_len: 0, context_len: 0 };
        let est = reram_write_load(&endurance_model(), &seq, &ReramArray::from_tiles(16, 40)).unwrap();
        assert_eq!(est.total_write_bits_per_encoder, 0.0);
        assert_eq!(est.cell_writes_per_encoder, 0.0);
        assert!(!est.exceeds_endurance);
    }

    #[test]
    fn zero_capacity_is_an_error() {
        let mut array = ReramArray::default();
        array.crossbars_per_chiplet = 0;
        let seq = SequenceConfig::new(4).unwrap();
        assert!(matches!(reram_write_load(&endurance_model(), &seq, &array), Err(Error::ZeroCapacity)));
    }

    #[test]
    fn doubling_tokens_doubles_writes_against_token_accumulation() {
        let m = endurance_model();
        let array = ReramArray::from_tiles(16, 40);
        let context = 1024;
        let accumulate = |tokens: u64| -> f64 {
            let mut total = 0u64;
            for _ in 0..tokens {
                let d = m.d_model;
                let rows = 3 * d * d + 3 * d + 8 * context + d;
                total += rows * 16;
            }
            total as f64
        };
        for n in [1u64, 7, 512, 4096] {
            let a = reram_write_load(&m, &SequenceConfig { seq_len: n, context_len: context }, &array).unwrap();
            let b = reram_write_load(&m, &SequenceConfig { seq_len: 2 * n, context_len: context }, &array).unwrap();
            assert_eq!(b.total_write_bits_per_encoder, 2.0 * a.total_write_bits_per_encoder);
            assert_eq!(a.total_write_bits_per_encoder, accumulate(n));
        }
    }

    #[test]
    fn catalog_json_roundtrip_and_defaults() {
        let json = r#"[{"name":"custom","block_structure":"decoder-only","d_model":64,"num_layers":2,"num_heads":4,"attention_variant":"MQA"}]"#;
        let cat = ModelCatalog::from_json(json).unwrap();
        let m = cat.get("CUSTOM").unwrap();
        assert_eq!(m.precision_bits, 16);
        assert_eq!(m.attention_variant, AttentionVariant::Mqa);
        let bad = r#"{"models":[{"name":"bad","block_structure":"decoder-only","d_model":10,"num_layers":2,"num_heads":4}]}"#;
        assert!(ModelCatalog::from_json(bad).is_err());
        assert_eq!(ModelCatalog::builtin().models.len(), 6);
    }

    #[test]
    fn sequence_context_defaults_to_seq_len() {
        let s: SequenceConfig = serde_json::from_str(r#"{"seq_len":64}"#).unwrap();
        assert_eq!(s.context_len, 64);
    }
}
