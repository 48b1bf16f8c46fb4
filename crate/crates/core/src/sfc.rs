//! Space-filling curve orderings over rectangular grids.

use serde::{Deserialize, Serialize};

/// A grid cell, ordered row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SfcKind {
    #[default]
    Hilbert,
    Morton,
}

/// Orders every cell of a `rows x cols` grid along the requested curve.
///
/// Hilbert orderings on power-of-two squares are the classic curve starting
/// at the origin and ending at `(0, n-1)`. Other rectangles are tiled with
/// the largest power-of-two squares that fit along the short side, chained
/// end-to-start, and the leftovers are ordered recursively.
pub fn sfc_order(rows: usize, cols: usize, kind: SfcKind) -> Vec<Cell> {
    let mut out = Vec::with_capacity(rows * cols);
    match kind {
        SfcKind::Hilbert => hilbert_region(0, 0, rows, cols, &mut out),
        SfcKind::Morton => {
            out.extend((0..rows).flat_map(|r| (0..cols).map(move |c| Cell::new(r, c))));
            out.sort_by_key(|c| morton_code(c.row, c.col));
        }
    }
    out
}

fn morton_code(row: usize, col: usize) -> u128 {
    let mut code = 0u128;
    for bit in 0..usize::BITS {
        code |= (((col >> bit) & 1) as u128) << (2 * bit);
        code |= (((row >> bit) & 1) as u128) << (2 * bit + 1);
    }
    code
}

fn pow2_floor(n: usize) -> usize {
    debug_assert!(n > 0);
    1 << (usize::BITS - 1 - n.leading_zeros())
}

/// Maps a curve index to `(x, y)` on an `n x n` Hilbert curve, `n` a power of two.
pub fn hilbert_d2xy(n: usize, d: usize) -> (usize, usize) {
    let (mut x, mut y) = (0usize, 0usize);
    let mut t = d;
    let mut s = 1;
    while s < n {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

#[derive(Clone, Copy)]
enum Heading {
    /// Enters at the top-left, leaves at the top-right corner.
    Right,
    /// Enters at the top-left, leaves at the bottom-left corner.
    Down,
}

fn hilbert_tile(r0: usize, c0: usize, size: usize, heading: Heading, out: &mut Vec<Cell>) {
    for d in 0..size * size {
        let (x, y) = hilbert_d2xy(size, d);
        let (row, col) = match heading {
            Heading::Right => (y, x),
            Heading::Down => (x, y),
        };
        out.push(Cell::new(r0 + row, c0 + col));
    }
}

fn hilbert_region(r0: usize, c0: usize, rows: usize, cols: usize, out: &mut Vec<Cell>) {
    if rows == 0 || cols == 0 {
        return;
    }
    if rows <= cols {
        let s = pow2_floor(rows);
        let k = cols / s;
        for t in 0..k {
            hilbert_tile(r0, c0 + t * s, s, Heading::Right, out);
        }
        hilbert_region(r0, c0 + k * s, s, cols - k * s, out);
        hilbert_region(r0 + s, c0, rows - s, cols, out);
    } else {
        let s = pow2_floor(cols);
        let k = rows / s;
        for t in 0..k {
            hilbert_tile(r0 + t * s, c0, s, Heading::Down, out);
        }
        hilbert_region(r0 + k * s, c0, rows - k * s, s, out);
        hilbert_region(r0, c0 + s, rows, cols - s, out);
    }
}

/// True when every consecutive pair of cells is 4-adjacent.
pub fn is_contiguous(cells: &[Cell]) -> bool {
    cells.windows(2).all(|w| w[0].manhattan(w[1]) == 1)
}
