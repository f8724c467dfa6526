//! Local directional patterns from the eight Kirsch compass masks.

use super::for_each_window;
use super::patch::NEIGHBORS;
use crate::transform::PowerMatrix;

/// Number of 8-bit codes with exactly three bits set.
pub const LDP_BINS: usize = 56;

/// Dense bin of every 3-of-8 code, ascending by code value; `u8::MAX` elsewhere.
const BIN_TABLE: [u8; 256] = {
    let mut table = [u8::MAX; 256];
    let mut code = 0;
    let mut next = 0u8;
    while code < 256 {
        if (code as u8).count_ones() == 3 {
            table[code] = next;
            next += 1;
        }
        code += 1;
    }
    table
};

/// Bin index for a code with three set bits.
pub fn ldp_bin(code: u16) -> u8 {
    let bin = BIN_TABLE[code as usize & 0xff];
    debug_assert!(bin != u8::MAX, "ldp code {code:#010b} lacks three set bits");
    bin
}

/// The eight Kirsch masks, orientation 0 (east) then counter-clockwise in
/// 45 degree steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KirschBank {
    pub masks: [[[i32; 3]; 3]; 8],
}

impl KirschBank {
    pub fn new() -> Self {
        let mut masks = [[[0; 3]; 3]; 8];
        for (i, mask) in masks.iter_mut().enumerate() {
            // three consecutive ring positions carry +5, the rest -3
            let first = (2 + 8 - i) % 8;
            for (n, &(dr, dc)) in NEIGHBORS.iter().enumerate() {
                let on = (n + 8 - first) % 8 < 3;
                mask[(1 + dr) as usize][(1 + dc) as usize] = if on { 5 } else { -3 };
            }
        }
        Self { masks }
    }
}

impl Default for KirschBank {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
/// Row-major cell order of the masks, excluding the center.
const CELLS: [(usize, usize); 8] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)];

const fn flat_masks() -> [[f64; 8]; 8] {
    // Mirrors KirschBank::new for use in the hot loop.
    let mut out = [[0.0; 8]; 8];
    let ring_pos = [0usize, 1, 2, 7, 3, 6, 5, 4]; // ring index of each CELLS entry
    let mut i = 0;
    while i < 8 {
        let first = (2 + 8 - i) % 8;
        let mut k = 0;
        while k < 8 {
            out[i][k] = if (ring_pos[k] + 8 - first) % 8 < 3 { 5.0 } else { -3.0 };
            k += 1;
        }
        i += 1;
    }
    out
}

const MASKS: [[f64; 8]; 8] = flat_masks();

/// Indices of the three largest magnitudes; ties go to the lower index.
#[inline(always)]
pub(crate) fn top3_code(responses: &[f64; 8]) -> u16 {
    let mut code = 0u16;
    for _ in 0..3 {
        let mut best = usize::MAX;
        let mut best_mag = f64::NEG_INFINITY;
        for (i, r) in responses.iter().enumerate() {
            if code & (1 << i) == 0 && r.abs() > best_mag {
                best = i;
                best_mag = r.abs();
            }
        }
        code |= 1 << best;
    }
    code
}

pub(crate) fn for_each(matrix: &PowerMatrix, mut f: impl FnMut(u16)) {
    for_each_window(matrix, |up, mid, down, c| {
        let center = mid[c];
        let d = [
            up[c - 1] - center,
            up[c] - center,
            up[c + 1] - center,
            mid[c - 1] - center,
            mid[c + 1] - center,
            down[c - 1] - center,
            down[c] - center,
            down[c + 1] - center,
        ];
        let mut responses = [0.0; 8];
        for (r, mask) in responses.iter_mut().zip(&MASKS) {
            let mut acc = 0.0;
            for k in 0..8 {
                acc += mask[k] * d[k];
            }
            *r = acc;
        }
        f(top3_code(&responses));
    });
}
