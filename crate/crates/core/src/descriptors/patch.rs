use crate::transform::PowerMatrix;

/// Row/column offsets of the eight neighbors, clockwise from the top-left.
pub const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

/// A 3x3 neighborhood, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch3(pub [[f64; 3]; 3]);

impl Patch3 {
    /// The neighborhood centered at `(row, col)`, which must be an interior position.
    pub fn at(matrix: &PowerMatrix, row: usize, col: usize) -> Option<Self> {
        if row == 0 || col == 0 || row + 1 >= matrix.rows() || col + 1 >= matrix.cols() {
            return None;
        }
        let mut p = [[0.0; 3]; 3];
        for (i, line) in p.iter_mut().enumerate() {
            for (j, v) in line.iter_mut().enumerate() {
                *v = matrix.get(row + i - 1, col + j - 1);
            }
        }
        Some(Patch3(p))
    }

    pub fn center(&self) -> f64 {
        self.0[1][1]
    }

    /// `j_0..j_7` in the clockwise order of [`NEIGHBORS`].
    pub fn neighbors(&self) -> [f64; 8] {
        NEIGHBORS.map(|(dr, dc)| self.0[(1 + dr) as usize][(1 + dc) as usize])
    }
}

/// Neighbors of the window at column `c`, in [`NEIGHBORS`] order.
#[inline(always)]
pub(crate) fn ring(up: &[f64], mid: &[f64], down: &[f64], c: usize) -> [f64; 8] {
    [
        up[c - 1],
        up[c],
        up[c + 1],
        mid[c + 1],
        down[c + 1],
        down[c],
        down[c - 1],
        mid[c - 1],
    ]
}
