//! Min-max normalization and row-major reshaping of a 1D signature into the
//! 2D matrix every descriptor reads.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::PowerSignal;

/// Smallest signal that still yields one interior 3x3 neighborhood.
pub const MIN_MATRIX_SAMPLES: usize = 9;

/// Min-max scaling into [0, 1]. A constant signal maps to all zeros.
pub fn normalize(samples: &[f64]) -> Vec<f64> {
    let (min, max) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; samples.len()];
    }
    samples.iter().map(|&v| ((v - min) / range).clamp(0.0, 1.0)).collect()
}

pub fn normalize_signal(signal: &PowerSignal) -> Vec<f64> {
    normalize(signal.samples())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShapePolicy {
    /// `cols = ceil(sqrt(n))`, `rows = ceil(n / cols)`.
    #[default]
    Square,
    /// Fixed row count; `cols = ceil(n / rows)`.
    Rows(usize),
}

impl fmt::Display for ShapePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapePolicy::Square => f.write_str("square"),
            ShapePolicy::Rows(r) => write!(f, "rows:{r}"),
        }
    }
}

impl FromStr for ShapePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "square" {
            return Ok(ShapePolicy::Square);
        }
        s.strip_prefix("rows:")
            .and_then(|r| r.parse().ok())
            .map(ShapePolicy::Rows)
            .ok_or_else(|| Error::InvalidConfig(format!("shape policy {s:?}: expected `square` or `rows:R`")))
    }
}

/// Row-major matrix of normalized power values.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pad_count: usize,
}

impl PowerMatrix {
    /// Wraps a row-major buffer. Values must be finite and within [0, 1].
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidSignal(format!("matrix value {v} outside [0, 1]")));
        }
        Ok(Self {
            rows,
            cols,
            values,
            pad_count: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pad_count(&self) -> usize {
        self.pad_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// The samples the matrix was built from, without tail padding.
    pub fn unpadded(&self) -> &[f64] {
        &self.values[..self.values.len() - self.pad_count]
    }
}

fn dims(len: usize, policy: ShapePolicy) -> Result<(usize, usize)> {
    let (rows, cols) = match policy {
        ShapePolicy::Square => {
            let cols = ceil_sqrt(len);
            (len.div_ceil(cols), cols)
        }
        ShapePolicy::Rows(rows) => {
            if rows == 0 {
                return Err(Error::InvalidConfig("rows must be positive".into()));
            }
            (rows, len.div_ceil(rows))
        }
    };
    if rows < 3 || cols < 3 {
        return Err(Error::MatrixTooSmall { rows, cols });
    }
    if rows * cols - len >= cols {
        return Err(Error::InvalidConfig(format!(
            "{policy} gives a {rows}x{cols} matrix with a whole padding row for {len} samples"
        )));
    }
    Ok((rows, cols))
}

fn ceil_sqrt(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s < n {
        s += 1;
    }
    while s > 1 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

/// Fills a `rows x cols` matrix row-major, padding the tail by repeating the
/// final sample.
pub fn reshape_to_matrix(normalized: &[f64], policy: ShapePolicy) -> Result<PowerMatrix> {
    let len = normalized.len();
    if len < MIN_MATRIX_SAMPLES {
        return Err(Error::TooShort {
            length: len,
            min: MIN_MATRIX_SAMPLES,
        });
    }
    let (rows, cols) = dims(len, policy)?;
    let mut values = Vec::with_capacity(rows * cols);
    values.extend_from_slice(normalized);
    let last = normalized[len - 1];
    values.resize(rows * cols, last);
    let mut m = PowerMatrix::from_row_major(rows, cols, values)?;
    m.pad_count = rows * cols - len;
    Ok(m)
}

pub fn signal_to_matrix(signal: &PowerSignal, policy: ShapePolicy) -> Result<PowerMatrix> {
    reshape_to_matrix(&normalize_signal(signal), policy)
}
