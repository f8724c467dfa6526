use super::for_each_window;
use super::patch::{ring, Patch3};
use crate::transform::PowerMatrix;

/// `sum_n b(j_n - j_c) 2^n` with `b(u) = 1` for `u >= 0`.
pub fn lph_code(patch: &Patch3) -> u8 {
    pack_ge(&patch.neighbors(), patch.center())
}

/// Same bit layout as [`lph_code`] but a neighbor only sets its bit when it
/// is strictly greater than the center.
pub fn lbp_code(patch: &Patch3) -> u8 {
    pack_gt(&patch.neighbors(), patch.center())
}

#[inline(always)]
pub(crate) fn pack_ge(ring: &[f64; 8], center: f64) -> u8 {
    let mut code = 0u8;
    for (n, &v) in ring.iter().enumerate() {
        code |= ((v >= center) as u8) << n;
    }
    code
}

#[inline(always)]
fn pack_gt(ring: &[f64; 8], center: f64) -> u8 {
    let mut code = 0u8;
    for (n, &v) in ring.iter().enumerate() {
        code |= ((v > center) as u8) << n;
    }
    code
}

pub(crate) fn for_each_lph(matrix: &PowerMatrix, mut f: impl FnMut(u16)) {
    for_each_window(matrix, |up, mid, down, c| {
        f(pack_ge(&ring(up, mid, down, c), mid[c]) as u16)
    });
}

pub(crate) fn for_each_lbp(matrix: &PowerMatrix, mut f: impl FnMut(u16)) {
    for_each_window(matrix, |up, mid, down, c| {
        f(pack_gt(&ring(up, mid, down, c), mid[c]) as u16)
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAMP: Patch3 = Patch3([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.7, 0.8, 0.9]]);

    #[test]
    fn equal_values_give_255() {
        assert_eq!(lph_code(&Patch3([[0.4; 3]; 3])), 255);
    }

    #[test]
    fn dominant_center_gives_zero() {
        let mut p = [[0.1; 3]; 3];
        p[1][1] = 0.9;
        assert_eq!(lph_code(&Patch3(p)), 0);
    }

    #[test]
    fn ramp_patch() {
        // bits (0,0,0,1,1,1,1,0) by hand
        let expected: u8 = [0, 0, 0, 1, 1, 1, 1, 0].iter().enumerate().map(|(n, b)| b << n).sum();
        assert_eq!(expected, 120);
        assert_eq!(lph_code(&RAMP), 120);
        assert_eq!(lbp_code(&RAMP), 120);
    }

    #[test]
    fn lbp_strictness() {
        assert_eq!(lbp_code(&Patch3([[0.4; 3]; 3])), 0);
        let mut p = [[0.9; 3]; 3];
        p[1][1] = 0.1;
        assert_eq!(lbp_code(&Patch3(p)), 255);
    }
}
