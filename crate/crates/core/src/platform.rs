//! Heterogeneous chiplet platforms: inventory, grid geometry and placement.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noi::Design;
use crate::rng;
use crate::sfc::{is_contiguous, sfc_order, Cell, SfcKind};

pub type ChipletId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "SM")]
    Sm,
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "DRAM")]
    Dram,
    #[serde(rename = "ReRAM")]
    Reram,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Sm => "SM",
            Role::Mc => "MC",
            Role::Dram => "DRAM",
            Role::Reram => "ReRAM",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role")]
pub enum ChipletKind {
    #[serde(rename = "SM")]
    Sm { tensor_cores: u32, scratchpad_bytes: u64 },
    #[serde(rename = "MC")]
    Mc { ports: u32 },
    #[serde(rename = "DRAM")]
    Dram { partition_bandwidth_bytes_per_cycle: u64 },
    #[serde(rename = "ReRAM")]
    Reram { tiles: u32, pes_per_tile: u32, crossbar_dim: u32, cell_bits: u32 },
}

impl ChipletKind {
    pub fn role(&self) -> Role {
        match self {
            ChipletKind::Sm { .. } => Role::Sm,
            ChipletKind::Mc { .. } => Role::Mc,
            ChipletKind::Dram { .. } => Role::Dram,
            ChipletKind::Reram { .. } => Role::Reram,
        }
    }

    fn all_positive(&self) -> bool {
        match *self {
            ChipletKind::Sm { tensor_cores, scratchpad_bytes } => tensor_cores > 0 && scratchpad_bytes > 0,
            ChipletKind::Mc { ports } => ports > 0,
            ChipletKind::Dram { partition_bandwidth_bytes_per_cycle } => partition_bandwidth_bytes_per_cycle > 0,
            ChipletKind::Reram { tiles, pes_per_tile, crossbar_dim, cell_bits } => {
                tiles > 0 && pes_per_tile > 0 && crossbar_dim > 0 && cell_bits > 0
            }
        }
    }

    /// Cell capacity of a ReRAM chiplet in bits; zero for other kinds.
    pub fn reram_capacity_bits(&self) -> u64 {
        match *self {
            ChipletKind::Reram { tiles, pes_per_tile, crossbar_dim, cell_bits } => {
                u64::from(tiles) * u64::from(pes_per_tile) * u64::from(crossbar_dim).pow(2) * u64::from(cell_bits)
            }
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chiplet {
    pub id: ChipletId,
    pub kind: ChipletKind,
    /// 0 on the interposer, 1 stacked above it.
    pub layer: u8,
}

impl Chiplet {
    pub fn role(&self) -> Role {
        self.kind.role()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Integration {
    #[serde(rename = "planar-2.5D")]
    Planar,
    #[default]
    #[serde(rename = "stacked-3D")]
    Stacked,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChipletParams {
    pub sm_tensor_cores: u32,
    pub sm_scratchpad_bytes: u64,
    pub mc_ports: u32,
    pub dram_partition_bytes_per_cycle: u64,
    pub reram_tiles: u32,
    pub reram_pes_per_tile: u32,
    pub reram_crossbar_dim: u32,
    pub reram_cell_bits: u32,
}

impl Default for ChipletParams {
    fn default() -> Self {
        Self {
            sm_tensor_cores: 10,
            sm_scratchpad_bytes: 128 * 1024,
            mc_ports: 4,
            dram_partition_bytes_per_cycle: 256,
            reram_tiles: 16,
            reram_pes_per_tile: 96,
            reram_crossbar_dim: 128,
            reram_cell_bits: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCounts {
    pub sm: usize,
    pub mc: usize,
    pub dram: usize,
    pub reram: usize,
}

impl RoleCounts {
    pub fn total(&self) -> usize {
        self.sm + self.mc + self.dram + self.reram
    }
}

fn default_ratio() -> usize {
    8
}
fn default_area() -> f64 {
    10.0
}
fn default_segment() -> f64 {
    1.55
}
fn default_clock() -> f64 {
    1.2e9
}
fn default_reram_fraction() -> f64 {
    0.15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub total_chiplets: usize,
    #[serde(default = "default_ratio")]
    pub sm_mc_ratio: usize,
    #[serde(default)]
    pub integration: Integration,
    #[serde(default)]
    pub grid_rows: Option<usize>,
    #[serde(default)]
    pub grid_cols: Option<usize>,
    #[serde(default = "default_area")]
    pub chiplet_area_mm2: f64,
    #[serde(default = "default_segment")]
    pub link_segment_mm: f64,
    #[serde(default = "default_clock")]
    pub clock_hz: f64,
    #[serde(default)]
    pub sfc_kind: SfcKind,
    /// Minimum ReRAM count reserved before MC clusters are allocated.
    /// Defaults to `max(1, floor(reram_fraction * total_chiplets))`.
    #[serde(default)]
    pub reram_min: Option<usize>,
    #[serde(default = "default_reram_fraction")]
    pub reram_fraction: f64,
    /// Explicit per-role counts; bypasses the allocation rule.
    #[serde(default)]
    pub counts: Option<RoleCounts>,
    /// Longest allowed link; defaults to two cells diagonally, capped at the
    /// grid diagonal.
    #[serde(default)]
    pub max_link_mm: Option<f64>,
    #[serde(default)]
    pub chiplet_params: ChipletParams,
}

impl SystemConfig {
    pub fn new(total_chiplets: usize, integration: Integration) -> Self {
        Self {
            total_chiplets,
            sm_mc_ratio: default_ratio(),
            integration,
            grid_rows: None,
            grid_cols: None,
            chiplet_area_mm2: default_area(),
            link_segment_mm: default_segment(),
            clock_hz: default_clock(),
            sfc_kind: SfcKind::Hilbert,
            reram_min: None,
            reram_fraction: default_reram_fraction(),
            counts: None,
            max_link_mm: None,
            chiplet_params: ChipletParams::default(),
        }
    }

    pub fn with_counts(mut self, counts: RoleCounts) -> Self {
        self.total_chiplets = counts.total();
        self.counts = Some(counts);
        self
    }

    /// Role counts under the allocation rule (or the explicit override).
    pub fn allocate(&self) -> Result<RoleCounts> {
        if let Some(c) = self.counts {
            if c.sm == 0 || c.mc == 0 || c.reram == 0 {
                return Err(Error::InvalidSystem("need at least one SM, MC and ReRAM chiplet".into()));
            }
            if c.dram != c.mc {
                return Err(Error::InvalidSystem(format!(
                    "every MC needs exactly one DRAM ({} MC vs {} DRAM)",
                    c.mc, c.dram
                )));
            }
            if c.total() != self.total_chiplets {
                return Err(Error::InvalidSystem(format!(
                    "role counts sum to {} but total_chiplets is {}",
                    c.total(),
                    self.total_chiplets
                )));
            }
            return Ok(c);
        }
        if self.sm_mc_ratio == 0 {
            return Err(Error::InvalidSystem("sm_mc_ratio must be >= 1".into()));
        }
        let floor = (self.reram_fraction * self.total_chiplets as f64).floor() as usize;
        let reram_min = self.reram_min.unwrap_or(floor.max(1));
        let per_cluster = self.sm_mc_ratio + 2;
        let mc = self.total_chiplets.saturating_sub(reram_min) / per_cluster;
        if mc == 0 || reram_min == 0 {
            return Err(Error::InvalidSystem(format!(
                "{} chiplets cannot hold one SM cluster (ratio {}:1) plus MC, DRAM and ReRAM",
                self.total_chiplets, self.sm_mc_ratio
            )));
        }
        Ok(RoleCounts {
            sm: self.sm_mc_ratio * mc,
            mc,
            dram: mc,
            reram: self.total_chiplets - per_cluster * mc,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

impl GridDims {
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Smallest near-square grid holding `n` cells.
    pub fn near_square(n: usize) -> Self {
        let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
        let rows = n.div_ceil(cols).max(1);
        Self { rows, cols }
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }
}

/// SMs grouped around one MC and its DRAM partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub mc: ChipletId,
    pub dram: ChipletId,
    pub sms: Vec<ChipletId>,
}

/// Grid cell of every chiplet, indexed by chiplet id. A stacked DRAM shares
/// the cell of the MC beneath it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub cells: Vec<Cell>,
}

impl Placement {
    pub fn cell(&self, id: ChipletId) -> Cell {
        self.cells[id]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub integration: Integration,
    pub grid: GridDims,
    pub pitch_mm: f64,
    pub link_segment_mm: f64,
    pub max_link_mm: f64,
    pub clock_hz: f64,
    pub sfc_kind: SfcKind,
    pub chiplets: Vec<Chiplet>,
    pub clusters: Vec<Cluster>,
    /// (DRAM, MC) pairs joined by a vertical link; empty for planar systems.
    pub vertical_pairs: Vec<(ChipletId, ChipletId)>,
    /// Cells reserved for the ReRAM macro, in curve order.
    pub reram_region: Vec<Cell>,
    /// ReRAM chiplets in macro order (head first).
    pub reram_macro: Vec<ChipletId>,
    /// Deterministic reference placement.
    pub geometry: Placement,
}

impl Platform {
    pub fn len(&self) -> usize {
        self.chiplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chiplets.is_empty()
    }

    pub fn role(&self, id: ChipletId) -> Role {
        self.chiplets[id].role()
    }

    pub fn ids_with_role(&self, role: Role) -> impl Iterator<Item = ChipletId> + '_ {
        self.chiplets.iter().filter(move |c| c.role() == role).map(|c| c.id)
    }

    pub fn count(&self, role: Role) -> usize {
        self.ids_with_role(role).count()
    }

    pub fn is_stacked(&self, id: ChipletId) -> bool {
        self.chiplets[id].layer == 1
    }

    /// The MC a stacked DRAM sits on.
    pub fn stacked_on(&self, id: ChipletId) -> Option<ChipletId> {
        self.vertical_pairs.iter().find(|(dram, _)| *dram == id).map(|&(_, mc)| mc)
    }

    /// The DRAM stacked above an MC.
    pub fn stacked_above(&self, mc: ChipletId) -> Option<ChipletId> {
        self.vertical_pairs.iter().find(|(_, m)| *m == mc).map(|&(d, _)| d)
    }

    pub fn planar_ids(&self) -> impl Iterator<Item = ChipletId> + '_ {
        self.chiplets.iter().filter(|c| c.layer == 0).map(|c| c.id)
    }

    pub fn cluster_of_sm(&self, sm: ChipletId) -> Option<usize> {
        self.clusters.iter().position(|c| c.sms.contains(&sm))
    }

    /// Physical length of a link between two cell centres.
    pub fn link_length_mm(&self, a: Cell, b: Cell) -> f64 {
        let dr = a.row.abs_diff(b.row) as f64;
        let dc = a.col.abs_diff(b.col) as f64;
        self.pitch_mm * (dr * dr + dc * dc).sqrt()
    }

    /// Pipeline stages of a link: one per `link_segment_mm`, at least one.
    pub fn link_stages(&self, a: Cell, b: Cell) -> u32 {
        let len = self.link_length_mm(a, b);
        // Tolerate rounding so that exact multiples do not gain a stage.
        ((len / self.link_segment_mm) - 1e-9).ceil().max(1.0) as u32
    }

    /// Swaps two planar chiplets; a stacked DRAM moves with its MC.
    pub fn swap_positions(&self, placement: &mut Placement, a: ChipletId, b: ChipletId) {
        let (ca, cb) = (placement.cells[a], placement.cells[b]);
        placement.cells[a] = cb;
        placement.cells[b] = ca;
        for &(dram, mc) in &self.vertical_pairs {
            if mc == a || mc == b {
                placement.cells[dram] = placement.cells[mc];
            }
        }
    }

    /// Graphviz rendering of the chiplet grid.
    pub fn to_dot(&self, placement: &Placement) -> String {
        let mut s = String::from("graph platform {\n  node [shape=box];\n");
        for c in &self.chiplets {
            let cell = placement.cell(c.id);
            let _ = writeln!(
                s,
                "  c{} [label=\"{}{} L{}\" pos=\"{},{}!\"];",
                c.id,
                c.role().as_str(),
                c.id,
                c.layer,
                cell.col,
                self.grid.rows - 1 - cell.row
            );
        }
        for &(dram, mc) in &self.vertical_pairs {
            let _ = writeln!(s, "  c{dram} -- c{mc} [style=dashed];");
        }
        for w in self.reram_macro.windows(2) {
            let _ = writeln!(s, "  c{} -- c{} [color=blue];", w[0], w[1]);
        }
        s.push_str("}\n");
        s
    }
}

/// Power-of-two short side first; otherwise the most compact rectangle whose
/// first `n` curve cells still form a 4-connected chain.
fn region_shape(n: usize, grid: GridDims, kind: SfcKind) -> Option<(usize, usize)> {
    let contiguous = |(r, c): (usize, usize)| is_contiguous(&sfc_order(r, c, kind)[..n]);
    let fits = |&(r, c): &(usize, usize)| r <= grid.rows && c <= grid.cols;
    let mut s = 1usize;
    while s * 2 * s * 2 <= n {
        s *= 2;
    }
    while s >= 1 {
        let cols = n.div_ceil(s);
        if let Some(shape) = [(s, cols), (cols, s)].into_iter().filter(fits).find(|&sh| contiguous(sh)) {
            return Some(shape);
        }
        s /= 2;
    }
    let mut shapes: Vec<(usize, usize)> =
        (1..=grid.rows).flat_map(|r| (1..=grid.cols).map(move |c| (r, c))).filter(|&(r, c)| r * c >= n).collect();
    shapes.sort_by_key(|&(r, c)| (r.max(c), r * c, c));
    shapes.iter().copied().find(|&sh| contiguous(sh)).or(shapes.first().copied())
}

/// Builds the chiplet inventory, grid and reference placement.
pub fn build_platform(config: &SystemConfig) -> Result<Platform> {
    let counts = config.allocate()?;
    let p = &config.chiplet_params;
    if !(config.chiplet_area_mm2 > 0.0 && config.link_segment_mm > 0.0 && config.clock_hz > 0.0) {
        return Err(Error::InvalidSystem("area, link segment and clock must be positive".into()));
    }
    let stacked = config.integration == Integration::Stacked;

    let mut chiplets = Vec::with_capacity(counts.total());
    let mut push = |kind: ChipletKind, layer: u8| {
        let id = chiplets.len();
        chiplets.push(Chiplet { id, kind, layer });
        id
    };
    let sms: Vec<_> = (0..counts.sm)
        .map(|_| push(ChipletKind::Sm { tensor_cores: p.sm_tensor_cores, scratchpad_bytes: p.sm_scratchpad_bytes }, 0))
        .collect();
    let mcs: Vec<_> = (0..counts.mc).map(|_| push(ChipletKind::Mc { ports: p.mc_ports }, 0)).collect();
    let drams: Vec<_> = (0..counts.dram)
        .map(|_| {
            push(
                ChipletKind::Dram { partition_bandwidth_bytes_per_cycle: p.dram_partition_bytes_per_cycle },
                u8::from(stacked),
            )
        })
        .collect();
    let rerams: Vec<_> = (0..counts.reram)
        .map(|_| {
            push(
                ChipletKind::Reram {
                    tiles: p.reram_tiles,
                    pes_per_tile: p.reram_pes_per_tile,
                    crossbar_dim: p.reram_crossbar_dim,
                    cell_bits: p.reram_cell_bits,
                },
                0,
            )
        })
        .collect();
    if let Some(bad) = chiplets.iter().find(|c| !c.kind.all_positive()) {
        return Err(Error::InvalidSystem(format!("{} parameters must be positive", bad.role().as_str())));
    }

    let clusters: Vec<Cluster> = (0..counts.mc)
        .map(|c| Cluster {
            mc: mcs[c],
            dram: drams[c],
            sms: sms.iter().copied().filter(|&s| s * counts.mc / counts.sm == c).collect(),
        })
        .collect();
    let vertical_pairs = if stacked { drams.iter().copied().zip(mcs.iter().copied()).collect() } else { vec![] };

    let planar = counts.total() - if stacked { counts.dram } else { 0 };
    let grid = match (config.grid_rows, config.grid_cols) {
        (Some(rows), Some(cols)) => GridDims { rows, cols },
        (None, None) => GridDims::near_square(planar),
        (Some(rows), None) => GridDims { rows, cols: planar.div_ceil(rows.max(1)) },
        (None, Some(cols)) => GridDims { rows: planar.div_ceil(cols.max(1)), cols },
    };
    if grid.rows == 0 || grid.cols == 0 || grid.cells() < planar {
        return Err(Error::InvalidSystem(format!(
            "grid {}x{} cannot hold {} planar chiplets",
            grid.rows, grid.cols, planar
        )));
    }

    let (rr, rc) = region_shape(counts.reram, grid, config.sfc_kind).ok_or_else(|| {
        Error::Placement(format!("no {}-cell ReRAM region fits a {}x{} grid", counts.reram, grid.rows, grid.cols))
    })?;
    let reram_region: Vec<Cell> = sfc_order(rr, rc, config.sfc_kind).into_iter().take(counts.reram).collect();

    let pitch = config.chiplet_area_mm2.sqrt();
    let diag = pitch * (((grid.rows - 1).pow(2) + (grid.cols - 1).pow(2)) as f64).sqrt();
    let mut platform = Platform {
        integration: config.integration,
        grid,
        pitch_mm: pitch,
        link_segment_mm: config.link_segment_mm,
        max_link_mm: config.max_link_mm.unwrap_or((2.0 * std::f64::consts::SQRT_2 * pitch).min(diag.max(pitch))),
        clock_hz: config.clock_hz,
        sfc_kind: config.sfc_kind,
        chiplets,
        clusters,
        vertical_pairs,
        reram_region,
        reram_macro: rerams,
        geometry: Placement { cells: vec![] },
    };
    platform.geometry = assign_cells::<rand_chacha::ChaCha8Rng>(&platform, None)?;
    Ok(platform)
}

fn assign_cells<R: Rng>(platform: &Platform, mut rng: Option<&mut R>) -> Result<Placement> {
    let mut cells = vec![Cell::default(); platform.len()];
    for (&id, &cell) in platform.reram_macro.iter().zip(&platform.reram_region) {
        cells[id] = cell;
    }
    let reserved: HashSet<Cell> = platform.reram_region.iter().copied().collect();
    let free: Vec<Cell> = sfc_order(platform.grid.rows, platform.grid.cols, platform.sfc_kind)
        .into_iter()
        .filter(|c| !reserved.contains(c))
        .collect();

    let stacked = platform.integration == Integration::Stacked;
    let mut order: Vec<usize> = (0..platform.clusters.len()).collect();
    if let Some(r) = rng.as_deref_mut() {
        order.shuffle(r);
    }
    let mut pos = 0;
    for &ci in &order {
        let cluster = &platform.clusters[ci];
        let size = cluster.sms.len() + 1 + usize::from(!stacked);
        if pos + size > free.len() {
            return Err(Error::Placement("grid too small for the SM clusters".into()));
        }
        let mut chunk: Vec<Cell> = free[pos..pos + size].to_vec();
        pos += size;

        let (sr, sc) = chunk.iter().fold((0.0, 0.0), |(r, c), x| (r + x.row as f64, c + x.col as f64));
        let (cr, cc) = (sr / size as f64, sc / size as f64);
        let dist = |x: &Cell| (x.row as f64 - cr).powi(2) + (x.col as f64 - cc).powi(2);
        let mc_idx = (0..chunk.len())
            .min_by(|&a, &b| dist(&chunk[a]).total_cmp(&dist(&chunk[b])).then(a.cmp(&b)))
            .expect("cluster chunk is non-empty");
        let mc_cell = chunk.remove(mc_idx);
        cells[cluster.mc] = mc_cell;
        if stacked {
            cells[cluster.dram] = mc_cell;
        } else {
            let d_idx = (0..chunk.len())
                .min_by_key(|&i| (chunk[i].manhattan(mc_cell), i))
                .expect("planar cluster has a DRAM cell");
            cells[cluster.dram] = chunk.remove(d_idx);
        }
        if let Some(r) = rng.as_deref_mut() {
            chunk.shuffle(r);
        }
        for (&sm, &cell) in cluster.sms.iter().zip(&chunk) {
            cells[sm] = cell;
        }
    }
    Ok(Placement { cells })
}

/// Seeded initial placement: ReRAM macro along the curve through its region,
/// each MC central to its SM cluster, cluster order and SM slots shuffled.
pub fn place_initial(platform: &Platform, seed: u64) -> Result<Placement> {
    let mut r = rng::stream(seed, "placement");
    assign_cells(platform, Some(&mut r))
}

/// 2-D mesh over the reference placement.
pub fn mesh_design(platform: &Platform) -> Design {
    Design::mesh(platform, platform.geometry.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(total: usize) -> (usize, usize, usize, usize) {
        let p = build_platform(&SystemConfig::new(total, Integration::Stacked)).unwrap();
        (p.count(Role::Sm), p.count(Role::Mc), p.count(Role::Dram), p.count(Role::Reram))
    }

    #[test]
    fn allocation_rule() {
        assert_eq!(split(100), (64, 8, 8, 20));
        assert_eq!(split(36), (24, 3, 3, 6));
        assert_eq!(split(11), (8, 1, 1, 1));
        assert!(build_platform(&SystemConfig::new(10, Integration::Stacked)).is_err());
    }

    #[test]
    fn allocation_keeps_ratio() {
        for total in 11..=200 {
            let c = SystemConfig::new(total, Integration::Planar).allocate().unwrap();
            assert_eq!(c.sm, 8 * c.mc);
            assert_eq!(c.dram, c.mc);
            assert_eq!(c.total(), total);
            assert!(c.reram >= 1);
        }
    }

    #[test]
    fn overrides_are_validated() {
        let ok = SystemConfig::new(0, Integration::Planar).with_counts(RoleCounts { sm: 1, mc: 1, dram: 1, reram: 1 });
        let p = build_platform(&ok).unwrap();
        assert_eq!(p.grid, GridDims { rows: 2, cols: 2 });
        let bad = SystemConfig::new(0, Integration::Planar).with_counts(RoleCounts { sm: 2, mc: 2, dram: 1, reram: 1 });
        assert!(build_platform(&bad).is_err());
    }

    #[test]
    fn stacked_invariants() {
        let p = build_platform(&SystemConfig::new(100, Integration::Stacked)).unwrap();
        assert_eq!(p.grid, GridDims { rows: 10, cols: 10 });
        assert_eq!(p.vertical_pairs.len(), 8);
        for &(dram, mc) in &p.vertical_pairs {
            assert_eq!(p.chiplets[dram].layer, 1);
            assert_eq!(p.role(mc), Role::Mc);
            assert_eq!(p.geometry.cell(dram), p.geometry.cell(mc));
        }
        let planar: Vec<Cell> = p.planar_ids().map(|id| p.geometry.cell(id)).collect();
        let unique: HashSet<_> = planar.iter().collect();
        assert_eq!(unique.len(), planar.len());
        assert_eq!(planar.len(), 92);
    }

    #[test]
    fn planar_invariants() {
        let p = build_platform(&SystemConfig::new(36, Integration::Planar)).unwrap();
        assert!(p.chiplets.iter().all(|c| c.layer == 0));
        assert!(p.vertical_pairs.is_empty());
        let cells: HashSet<_> = p.geometry.cells.iter().collect();
        assert_eq!(cells.len(), 36);
    }

    #[test]
    fn reram_macro_is_contiguous() {
        let p = build_platform(&SystemConfig::new(100, Integration::Stacked)).unwrap();
        assert_eq!(p.reram_region.len(), 20);
        let cells: Vec<Cell> = p.reram_macro.iter().map(|&id| p.geometry.cell(id)).collect();
        assert!(is_contiguous(&cells));
        for total in 11..=300 {
            for integration in [Integration::Planar, Integration::Stacked] {
                let p = build_platform(&SystemConfig::new(total, integration)).unwrap();
                assert!(is_contiguous(&p.reram_region), "{total} {integration:?}");
            }
        }
    }

    #[test]
    fn twenty_reram_on_four_by_five() {
        let cells = sfc_order(4, 5, SfcKind::Hilbert);
        assert_eq!(cells.len(), 20);
        assert!(cells.windows(2).all(|w| w[0].manhattan(w[1]) == 1));
    }

    #[test]
    fn place_initial_is_deterministic() {
        let p = build_platform(&SystemConfig::new(64, Integration::Planar)).unwrap();
        let a = place_initial(&p, 9).unwrap();
        let b = place_initial(&p, 9).unwrap();
        let c = place_initial(&p, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let macro_cells: Vec<Cell> = p.reram_macro.iter().map(|&id| a.cell(id)).collect();
        assert_eq!(macro_cells, p.reram_region);
    }

    #[test]
    fn single_reram_trivially_contiguous() {
        let p = build_platform(&SystemConfig::new(11, Integration::Planar)).unwrap();
        assert_eq!(p.reram_macro.len(), 1);
        assert!(is_contiguous(&p.reram_region));
    }

    #[test]
    fn mc_sits_inside_its_cluster() {
        let p = build_platform(&SystemConfig::new(100, Integration::Planar)).unwrap();
        for cl in &p.clusters {
            let mc = p.geometry.cell(cl.mc);
            let far = cl.sms.iter().map(|&s| p.geometry.cell(s).manhattan(mc)).max().unwrap();
            assert!(far <= 4, "cluster spread {far}");
        }
    }

    #[test]
    fn link_stage_counts() {
        let p = build_platform(&SystemConfig::new(36, Integration::Planar)).unwrap();
        // sqrt(10) mm pitch over 1.55 mm segments.
        assert_eq!(p.link_stages(Cell::new(0, 0), Cell::new(0, 1)), 3);
        assert_eq!(p.link_stages(Cell::new(0, 0), Cell::new(0, 2)), 5);
    }
}
