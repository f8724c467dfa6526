use super::for_each_window;
use super::patch::ring;
use crate::transform::PowerMatrix;

/// Ternary threshold in normalized power units.
pub const DEFAULT_LTEP_THRESHOLD: f64 = 0.02;

/// Upper pattern (neighbor above `center + thr`) in the low byte, lower
/// pattern (neighbor below `center - thr`) in the high byte.
#[inline(always)]
pub(crate) fn ternary_code(ring: &[f64; 8], center: f64, thr: f64) -> u16 {
    let hi = center + thr;
    let lo = center - thr;
    let mut upper = 0u16;
    let mut lower = 0u16;
    for (n, &v) in ring.iter().enumerate() {
        upper |= ((v > hi) as u16) << n;
        lower |= ((v < lo) as u16) << n;
    }
    upper | (lower << 8)
}

pub(crate) fn for_each(matrix: &PowerMatrix, thr: f64, mut f: impl FnMut(u16)) {
    for_each_window(matrix, |up, mid, down, c| {
        f(ternary_code(&ring(up, mid, down, c), mid[c], thr))
    });
}
