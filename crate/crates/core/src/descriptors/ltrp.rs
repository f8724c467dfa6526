use super::for_each_window;
use super::lph::pack_ge;
use super::patch::{ring, Patch3};
use crate::transform::PowerMatrix;

/// Bit `n` is set when neighbors `n` and `n + 1` (cyclically) fall on
/// different sides of the center, using `j >= j_c` as the side test.
pub fn ltrp_code(patch: &Patch3) -> u8 {
    transitions(pack_ge(&patch.neighbors(), patch.center()))
}

#[inline(always)]
fn transitions(sides: u8) -> u8 {
    sides ^ sides.rotate_right(1)
}

pub(crate) fn for_each(matrix: &PowerMatrix, mut f: impl FnMut(u16)) {
    for_each_window(matrix, |up, mid, down, c| {
        f(transitions(pack_ge(&ring(up, mid, down, c), mid[c])) as u16)
    });
}
