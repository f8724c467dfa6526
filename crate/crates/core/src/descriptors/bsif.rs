//! Sign projections of mean-centered neighborhoods onto a seeded orthonormal
//! filter bank.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::for_each_window;
use crate::error::{Error, Result};
use crate::transform::PowerMatrix;

pub const DEFAULT_BSIF_SEED: u64 = 7;

const MAX_DRAWS: u32 = 16;
const RANK_TOLERANCE: f64 = 1e-6;

/// Eight zero-mean, mutually orthonormal 3x3 filters, each flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BsifBank {
    pub filters: [[f64; 9]; 8],
}

impl BsifBank {
    /// Draws 8 Gaussian 9-vectors, removes each mean and orthonormalizes them
    /// in index order. A rank-deficient draw is retried with the next sub-seed.
    pub fn generate(seed: u64) -> Result<Self> {
        for draw in 0..MAX_DRAWS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(draw as u64));
            if let Some(filters) = try_draw(&mut rng) {
                return Ok(Self { filters });
            }
        }
        Err(Error::DegenerateBank(MAX_DRAWS))
    }

    pub fn filter(&self, f: usize) -> [[f64; 3]; 3] {
        let v = &self.filters[f];
        [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]
    }
}

fn dot(a: &[f64; 9], b: &[f64; 9]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn try_draw(rng: &mut ChaCha8Rng) -> Option<[[f64; 9]; 8]> {
    let mut out = [[0.0; 9]; 8];
    for i in 0..8 {
        let mut v = [0.0; 9];
        for x in &mut v {
            *x = StandardNormal.sample(rng);
        }
        let mean = v.iter().sum::<f64>() / 9.0;
        v.iter_mut().for_each(|x| *x -= mean);
        // two Gram-Schmidt passes keep the bank orthonormal to ~1e-16
        for _ in 0..2 {
            for prev in &out[..i] {
                let p = dot(&v, prev);
                for (x, y) in v.iter_mut().zip(prev) {
                    *x -= p * y;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < RANK_TOLERANCE {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        out[i] = v;
    }
    Some(out)
}

/// The 3x3 neighborhood relative to its center, minus its mean, row-major.
#[inline(always)]
pub(crate) fn centered(cells: [f64; 9]) -> [f64; 9] {
    let c = cells[4];
    let mut d = cells.map(|v| v - c);
    let mean = d.iter().sum::<f64>() / 9.0;
    d.iter_mut().for_each(|x| *x -= mean);
    d
}

pub(crate) fn for_each(matrix: &PowerMatrix, bank: &BsifBank, mut f: impl FnMut(u16)) {
    for_each_window(matrix, |up, mid, down, c| {
        let d = centered([
            up[c - 1],
            up[c],
            up[c + 1],
            mid[c - 1],
            mid[c],
            mid[c + 1],
            down[c - 1],
            down[c],
            down[c + 1],
        ]);
        let mut code = 0u16;
        for (k, filter) in bank.filters.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..9 {
                acc += d[j] * filter[j];
            }
            code |= ((acc > 0.0) as u16) << k;
        }
        f(code);
    });
}
