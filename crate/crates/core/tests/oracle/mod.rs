//! Naive reference implementations shared by the integration tests: per-patch
//! encoders written loop-per-bit against the raw matrix, and a brute-force
//! IKNN scan.
#![allow(dead_code, clippy::needless_range_loop)]

use powerprint::descriptors::{BsifBank, CodeMatrix, Descriptor, DescriptorKind};
use powerprint::transform::PowerMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Grid = [[f64; 3]; 3];

pub fn patch(m: &PowerMatrix, r: usize, c: usize) -> Grid {
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = m.values()[(r + i - 1) * m.cols() + (c + j - 1)];
        }
    }
    p
}

/// Neighbors clockwise from the top-left.
pub fn clockwise(p: &Grid) -> Vec<f64> {
    vec![p[0][0], p[0][1], p[0][2], p[1][2], p[2][2], p[2][1], p[2][0], p[1][0]]
}

pub fn bits_to_code(bits: &[u32]) -> u32 {
    let mut code = 0;
    for n in 0..bits.len() {
        code += bits[n] * 2u32.pow(n as u32);
    }
    code
}

pub fn oracle_lph(p: &Grid) -> u32 {
    let bits: Vec<u32> = clockwise(p)
        .iter()
        .map(|&j| if j - p[1][1] >= 0.0 { 1 } else { 0 })
        .collect();
    bits_to_code(&bits)
}

pub fn oracle_lbp(p: &Grid) -> u32 {
    let bits: Vec<u32> = clockwise(p).iter().map(|&j| if j > p[1][1] { 1 } else { 0 }).collect();
    bits_to_code(&bits)
}

pub fn oracle_ltep(p: &Grid, thr: f64) -> u32 {
    let c = p[1][1];
    let ternary: Vec<i32> = clockwise(p)
        .iter()
        .map(|&s| {
            if s > c + thr {
                1
            } else if s < c - thr {
                -1
            } else {
                0
            }
        })
        .collect();
    let upper: Vec<u32> = ternary.iter().map(|&t| (t == 1) as u32).collect();
    let lower: Vec<u32> = ternary.iter().map(|&t| (t == -1) as u32).collect();
    bits_to_code(&upper) + 256 * bits_to_code(&lower)
}

pub fn oracle_ltrp(p: &Grid) -> u32 {
    let s: Vec<bool> = clockwise(p).iter().map(|&j| j >= p[1][1]).collect();
    let bits: Vec<u32> = (0..8).map(|n| (s[n] != s[(n + 1) % 8]) as u32).collect();
    bits_to_code(&bits)
}

pub const KIRSCH: [[[f64; 3]; 3]; 8] = [
    [[-3., -3., 5.], [-3., 0., 5.], [-3., -3., 5.]],
    [[-3., 5., 5.], [-3., 0., 5.], [-3., -3., -3.]],
    [[5., 5., 5.], [-3., 0., -3.], [-3., -3., -3.]],
    [[5., 5., -3.], [5., 0., -3.], [-3., -3., -3.]],
    [[5., -3., -3.], [5., 0., -3.], [5., -3., -3.]],
    [[-3., -3., -3.], [5., 0., -3.], [5., 5., -3.]],
    [[-3., -3., -3.], [-3., 0., -3.], [5., 5., 5.]],
    [[-3., -3., -3.], [-3., 0., 5.], [-3., 5., 5.]],
];

pub fn kirsch_responses(p: &Grid) -> Vec<f64> {
    KIRSCH
        .iter()
        .map(|mask| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    if i == 1 && j == 1 {
                        continue;
                    }
                    acc += mask[i][j] * (p[i][j] - p[1][1]);
                }
            }
            acc
        })
        .collect()
}

pub fn oracle_ldp(p: &Grid) -> u32 {
    let responses = kirsch_responses(p);
    let mut order: Vec<usize> = (0..8).collect();
    // stable sort keeps lower orientation first among equal magnitudes
    order.sort_by(|&a, &b| responses[b].abs().partial_cmp(&responses[a].abs()).unwrap());
    let mut bits = vec![0u32; 8];
    for &i in &order[..3] {
        bits[i] = 1;
    }
    bits_to_code(&bits)
}

pub fn oracle_bsif(p: &Grid, bank: &BsifBank) -> u32 {
    let c = p[1][1];
    let mut d = Vec::new();
    for row in p {
        for &v in row {
            d.push(v - c);
        }
    }
    let mean = d.iter().sum::<f64>() / 9.0;
    let d: Vec<f64> = d.iter().map(|x| x - mean).collect();
    let bits: Vec<u32> = bank
        .filters
        .iter()
        .map(|f| {
            let mut acc = 0.0;
            for j in 0..9 {
                acc += d[j] * f[j];
            }
            (acc > 0.0) as u32
        })
        .collect();
    bits_to_code(&bits)
}

pub fn oracle_codes(kind: DescriptorKind, m: &PowerMatrix, bank: &BsifBank) -> Vec<u32> {
    let mut out = Vec::new();
    for r in 1..m.rows() - 1 {
        for c in 1..m.cols() - 1 {
            let p = patch(m, r, c);
            out.push(match kind {
                DescriptorKind::Lph => oracle_lph(&p),
                DescriptorKind::Lbp => oracle_lbp(&p),
                DescriptorKind::Ldp => oracle_ldp(&p),
                DescriptorKind::Ltep { threshold } => oracle_ltep(&p, threshold),
                DescriptorKind::Ltrp => oracle_ltrp(&p),
                DescriptorKind::Bsif { .. } => oracle_bsif(&p, bank),
            });
        }
    }
    out
}

pub fn oracle_histogram(kind: DescriptorKind, m: &PowerMatrix, bank: &BsifBank) -> Vec<f64> {
    let codes = oracle_codes(kind, m, bank);
    let mut counts = vec![0.0; kind.histogram_length()];
    let ldp_bins: Vec<u32> = (0..256u32).filter(|c| c.count_ones() == 3).collect();
    for &code in &codes {
        match kind {
            DescriptorKind::Ldp => counts[ldp_bins.iter().position(|&b| b == code).unwrap()] += 1.0,
            DescriptorKind::Ltep { .. } => {
                counts[(code % 256) as usize] += 1.0;
                counts[256 + (code / 256) as usize] += 1.0;
            }
            _ => counts[code as usize] += 1.0,
        }
    }
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

pub fn as_u32(m: &CodeMatrix) -> Vec<u32> {
    m.codes.iter().map(|&c| c as u32).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng) -> PowerMatrix {
    let rows = rng.random_range(3..=8);
    let cols = rng.random_range(3..=8);
    let quantized = rng.random_bool(0.5);
    let values = (0..rows * cols)
        .map(|_| {
            if quantized {
                // quarter steps produce plenty of exact ties
                rng.random_range(0..=4) as f64 / 4.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    PowerMatrix::from_row_major(rows, cols, values).unwrap()
}

pub fn ramp_patch() -> PowerMatrix {
    PowerMatrix::from_row_major(3, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]).unwrap()
}

pub fn single_code(kind: DescriptorKind, m: &PowerMatrix) -> u32 {
    let codes = Descriptor::new(kind).unwrap().code_matrix(m).unwrap();
    assert_eq!(codes.codes.len(), 1);
    codes.codes[0] as u32
}

/// Brute force: weight every training point, rank all of them, vote.
pub fn iknn_oracle(
    hist: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    query: &[f64],
    k: usize,
) -> (usize, Vec<usize>) {
    let n = labels.len() as f64;
    let mut counts = vec![0.0; n_classes];
    for &l in labels {
        counts[l] += 1.0;
    }
    let mut entropy = 0.0;
    for &c in &counts {
        if c > 0.0 {
            let a: f64 = c / n;
            entropy -= a * a.log2();
        }
    }
    let weight: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c == 0.0 {
                10.0
            } else {
                (-(c / n).log2() / entropy).clamp(0.1, 10.0)
            }
        })
        .collect();

    let mut all: Vec<(f64, usize)> = Vec::new();
    for (i, h) in hist.iter().enumerate() {
        let mut s = 0.0;
        for d in 0..h.len() {
            s += (h[d] - query[d]) * (h[d] - query[d]);
        }
        all.push((weight[labels[i]].sqrt() * s.sqrt(), i));
    }
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all.truncate(k);

    let mut votes = vec![0.0; n_classes];
    for &(wd, i) in &all {
        votes[labels[i]] += weight[labels[i]] / (wd + 1e-9);
    }
    let mut best = 0;
    for c in 1..n_classes {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    (best, all.iter().map(|x| x.1).collect())
}

pub fn random_histogram(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}
