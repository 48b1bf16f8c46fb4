//! Lays out a 36-chiplet system and draws the ReRAM macro along its
//! Hilbert and Morton curves.

use hetnoi::platform::{build_platform, Integration, SystemConfig};
use hetnoi::sfc::{is_contiguous, SfcKind};

fn main() {
    for kind in [SfcKind::Hilbert, SfcKind::Morton] {
        let mut cfg = SystemConfig::new(36, Integration::Planar);
        cfg.sfc_kind = kind;
        let p = build_platform(&cfg).expect("36 chiplets fit");
        let mut grid = vec![vec![String::from("  ."); p.grid.cols]; p.grid.rows];
        for (i, cell) in p.reram_region.iter().enumerate() {
            grid[cell.row][cell.col] = format!("{i:>3}");
        }
        println!("{kind:?}: {} ReRAM cells, contiguous = {}", p.reram_region.len(), is_contiguous(&p.reram_region));
        for row in grid {
            println!("{}", row.concat());
        }
        println!();
    }
}
