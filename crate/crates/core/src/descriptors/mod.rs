//! Local texture descriptors over a [`PowerMatrix`].
//!
//! Every descriptor slides a 3x3 window with stride 1 over the interior of
//! the matrix, turns each neighborhood into an integer code, and histograms
//! the codes into a fixed number of bins normalized to sum to 1.
//!
//! Neighbors are enumerated clockwise starting at the top-left corner and the
//! first neighbor is the least significant bit:
//!
//! ```text
//! 0 1 2
//! 7 c 3
//! 6 5 4
//! ```

mod bsif;
mod ldp;
mod lph;
mod ltep;
mod ltrp;
mod patch;

use std::fmt;
use std::str::FromStr;

pub use bsif::{BsifBank, DEFAULT_BSIF_SEED};
pub use ldp::{ldp_bin, KirschBank, LDP_BINS};
pub use ltep::DEFAULT_LTEP_THRESHOLD;
pub use patch::{Patch3, NEIGHBORS};

use crate::error::{Error, Result};
use crate::signal::PowerSignal;
use crate::transform::{signal_to_matrix, PowerMatrix, ShapePolicy};

/// A descriptor family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DescriptorKind {
    Lph,
    Lbp,
    Ldp,
    Ltep { threshold: f64 },
    Ltrp,
    Bsif { seed: u64 },
}

impl DescriptorKind {
    pub const NAMES: [&'static str; 6] = ["lph", "lbp", "ldp", "ltep", "ltrp", "bsif"];

    /// All six families with default parameters, in the order of [`Self::NAMES`].
    pub fn all() -> [DescriptorKind; 6] {
        [
            DescriptorKind::Lph,
            DescriptorKind::Lbp,
            DescriptorKind::Ldp,
            DescriptorKind::Ltep {
                threshold: DEFAULT_LTEP_THRESHOLD,
            },
            DescriptorKind::Ltrp,
            DescriptorKind::Bsif {
                seed: DEFAULT_BSIF_SEED,
            },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            DescriptorKind::Lph => "lph",
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Ldp => "ldp",
            DescriptorKind::Ltep { .. } => "ltep",
            DescriptorKind::Ltrp => "ltrp",
            DescriptorKind::Bsif { .. } => "bsif",
        }
    }

    pub fn histogram_length(&self) -> usize {
        match self {
            DescriptorKind::Ldp => LDP_BINS,
            DescriptorKind::Ltep { .. } => 512,
            _ => 256,
        }
    }

    /// Exclusive upper bound of the values a [`CodeMatrix`] of this kind holds.
    pub fn code_range(&self) -> u32 {
        match self {
            DescriptorKind::Ltep { .. } => 1 << 16,
            _ => 256,
        }
    }

    fn validate(&self) -> Result<()> {
        if let DescriptorKind::Ltep { threshold } = self {
            if !(threshold.is_finite() && *threshold >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "ltep threshold must be finite and >= 0, got {threshold}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    /// Parses a family name with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        let idx = Self::NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown descriptor {s:?}; expected one of {}",
                    Self::NAMES.join(", ")
                ))
            })?;
        Ok(Self::all()[idx])
    }
}

/// Per-neighborhood codes, `(rows - 2) x (cols - 2)`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    pub rows: usize,
    pub cols: usize,
    pub codes: Vec<u16>,
}

/// A normalized histogram of descriptor codes.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorHistogram {
    pub bins: Vec<f64>,
    pub descriptor: DescriptorKind,
}

impl DescriptorHistogram {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// A descriptor ready to run: the kind plus any filter bank it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    kind: DescriptorKind,
    bank: Option<BsifBank>,
    policy: ShapePolicy,
}

impl Descriptor {
    pub fn new(kind: DescriptorKind) -> Result<Self> {
        kind.validate()?;
        let bank = match kind {
            DescriptorKind::Bsif { seed } => Some(BsifBank::generate(seed)?),
            _ => None,
        };
        Ok(Self {
            kind,
            bank,
            policy: ShapePolicy::Square,
        })
    }

    /// A BSIF descriptor using an existing bank (e.g. one restored from a model file).
    pub fn bsif_with_bank(seed: u64, bank: BsifBank) -> Self {
        Self {
            kind: DescriptorKind::Bsif { seed },
            bank: Some(bank),
            policy: ShapePolicy::Square,
        }
    }

    pub fn with_policy(mut self, policy: ShapePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn bank(&self) -> Option<&BsifBank> {
        self.bank.as_ref()
    }

    pub fn policy(&self) -> ShapePolicy {
        self.policy
    }

    pub fn histogram_length(&self) -> usize {
        self.kind.histogram_length()
    }

    pub fn code_matrix(&self, matrix: &PowerMatrix) -> Result<CodeMatrix> {
        check_size(matrix)?;
        let (rows, cols) = (matrix.rows() - 2, matrix.cols() - 2);
        let mut codes = Vec::with_capacity(rows * cols);
        self.for_each_code(matrix, |c| codes.push(c));
        Ok(CodeMatrix { rows, cols, codes })
    }

    pub fn histogram(&self, matrix: &PowerMatrix) -> Result<DescriptorHistogram> {
        check_size(matrix)?;
        let len = self.kind.histogram_length();
        let mut counts = vec![0u32; len];
        match self.kind {
            DescriptorKind::Lph => lph::for_each_lph(matrix, |c| counts[c as usize] += 1),
            DescriptorKind::Lbp => lph::for_each_lbp(matrix, |c| counts[c as usize] += 1),
            DescriptorKind::Ldp => ldp::for_each(matrix, |c| counts[ldp_bin(c) as usize] += 1),
            DescriptorKind::Ltep { threshold } => ltep::for_each(matrix, threshold, |c| {
                counts[(c & 0xff) as usize] += 1;
                counts[256 + (c >> 8) as usize] += 1;
            }),
            DescriptorKind::Ltrp => ltrp::for_each(matrix, |c| counts[c as usize] += 1),
            DescriptorKind::Bsif { .. } => bsif::for_each(matrix, self.bank_ref(), |c| counts[c as usize] += 1),
        }
        Ok(DescriptorHistogram {
            bins: normalize_counts(&counts),
            descriptor: self.kind,
        })
    }

    /// Normalize, reshape and histogram one signature.
    pub fn extract(&self, signal: &PowerSignal) -> Result<DescriptorHistogram> {
        self.histogram(&signal_to_matrix(signal, self.policy)?)
    }

    fn bank_ref(&self) -> &BsifBank {
        self.bank.as_ref().expect("bsif descriptor always carries a bank")
    }

    fn for_each_code(&self, matrix: &PowerMatrix, f: impl FnMut(u16)) {
        match self.kind {
            DescriptorKind::Lph => lph::for_each_lph(matrix, f),
            DescriptorKind::Lbp => lph::for_each_lbp(matrix, f),
            DescriptorKind::Ldp => ldp::for_each(matrix, f),
            DescriptorKind::Ltep { threshold } => ltep::for_each(matrix, threshold, f),
            DescriptorKind::Ltrp => ltrp::for_each(matrix, f),
            DescriptorKind::Bsif { .. } => bsif::for_each(matrix, self.bank_ref(), f),
        }
    }
}

/// One-shot extraction with a freshly built descriptor.
pub fn extract(kind: DescriptorKind, signal: &PowerSignal) -> Result<DescriptorHistogram> {
    Descriptor::new(kind)?.extract(signal)
}

pub fn lph_histogram(matrix: &PowerMatrix) -> Result<DescriptorHistogram> {
    Descriptor::new(DescriptorKind::Lph)?.histogram(matrix)
}

pub fn lbp_histogram(matrix: &PowerMatrix) -> Result<DescriptorHistogram> {
    Descriptor::new(DescriptorKind::Lbp)?.histogram(matrix)
}

pub fn ldp_histogram(matrix: &PowerMatrix) -> Result<DescriptorHistogram> {
    Descriptor::new(DescriptorKind::Ldp)?.histogram(matrix)
}

pub fn ltep_histogram(matrix: &PowerMatrix, threshold: f64) -> Result<DescriptorHistogram> {
    Descriptor::new(DescriptorKind::Ltep { threshold })?.histogram(matrix)
}

pub fn ltrp_histogram(matrix: &PowerMatrix) -> Result<DescriptorHistogram> {
    Descriptor::new(DescriptorKind::Ltrp)?.histogram(matrix)
}

pub fn bsif_histogram(matrix: &PowerMatrix, seed: u64, bank: &BsifBank) -> Result<DescriptorHistogram> {
    Descriptor::bsif_with_bank(seed, bank.clone()).histogram(matrix)
}

pub use lph::{lbp_code, lph_code};
pub use ltrp::ltrp_code;

fn check_size(matrix: &PowerMatrix) -> Result<()> {
    if matrix.rows() < 3 || matrix.cols() < 3 {
        return Err(Error::MatrixTooSmall {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    Ok(())
}

fn normalize_counts(counts: &[u32]) -> Vec<f64> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    let total = total as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// Walks the interior of `matrix`, handing each 3x3 neighborhood to `f` as
/// `(up, mid, down, c)`: three row slices and the center column.
#[inline(always)]
pub(crate) fn for_each_window(matrix: &PowerMatrix, mut f: impl FnMut(&[f64], &[f64], &[f64], usize)) {
    let cols = matrix.cols();
    let v = matrix.values();
    for r in 1..matrix.rows() - 1 {
        let up = &v[(r - 1) * cols..r * cols];
        let mid = &v[r * cols..(r + 1) * cols];
        let down = &v[(r + 1) * cols..(r + 2) * cols];
        for c in 1..cols - 1 {
            f(up, mid, down, c);
        }
    }
}
