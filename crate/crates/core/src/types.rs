//! Shared coordinate frame, sample records, and per-line batch containers.
//!
//! Coordinate frame: x increases rightward, y increases downward, line `n`
//! is centered at `y = n * line_spacing`. All types are immutable value
//! objects; the operations here are pure functions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("estimated line {est_line} out of range 1..={num_lines} at sample index {index}")]
    EstLineOutOfRange {
        index: usize,
        est_line: usize,
        num_lines: usize,
    },
    #[error("invalid page geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid HMM parameters: {0}")]
    InvalidHmmParams(String),
    #[error("empty input page: line detection needs at least one sample")]
    EmptyPage,
    #[error("aligned sequences differ: {0}")]
    Alignment(String),
    #[error("NRMSE undefined for page {page}: no correctly classified samples")]
    UndefinedMetric { page: usize },
    #[error("{path}: {msg}")]
    DataFormat { path: String, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Page layout: line count, vertical spacing, and horizontal text extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageGeometry {
    pub num_lines: usize,
    pub line_spacing: f64,
    pub text_width: f64,
}

impl PageGeometry {
    pub fn new(num_lines: usize, line_spacing: f64, text_width: f64) -> Result<Self> {
        if num_lines < 1 {
            return Err(Error::InvalidGeometry("num_lines must be >= 1".into()));
        }
        // `is_nan` guards reject NaN, which plain `<=` comparisons would pass.
        if line_spacing.is_nan() || line_spacing <= 0.0 {
            return Err(Error::InvalidGeometry("line_spacing must be > 0".into()));
        }
        if text_width.is_nan() || text_width <= 0.0 {
            return Err(Error::InvalidGeometry("text_width must be > 0".into()));
        }
        Ok(Self {
            num_lines,
            line_spacing,
            text_width,
        })
    }

    /// y-coordinate of the center of line `n`, with `n` in `1..=num_lines`.
    pub fn line_center(&self, n: usize) -> f64 {
        debug_assert!(n >= 1 && n <= self.num_lines);
        n as f64 * self.line_spacing
    }
}

impl Default for PageGeometry {
    /// 25 lines spaced 25 page units apart, 600 units of text width.
    fn default() -> Self {
        Self {
            num_lines: 25,
            line_spacing: 25.0,
            text_width: 600.0,
        }
    }
}

/// One timestamped fixation measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub index: usize,
    pub z_x: f64,
    pub z_y: f64,
    pub timestamp: Option<f64>,
}

/// The true trajectory record behind a simulated sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub index: usize,
    pub true_x: f64,
    pub true_y: f64,
    pub true_line: usize,
}

/// A fixation with its estimated line attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub sample: GazeSample,
    pub est_line: usize,
}

/// All measured x-coordinates assigned to one estimated line, in page order.
#[derive(Debug, Clone, PartialEq)]
pub struct LineBatch {
    pub line: usize,
    pub xs: Vec<f64>,
    pub source_indices: Vec<usize>,
}

impl LineBatch {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Partition labeled samples into one batch per line, preserving page order.
///
/// Returns exactly `num_lines` batches; lines with no samples yield empty
/// batches so downstream output keeps line indexing.
pub fn split_into_batches(
    labeled: &[LabeledSample],
    geometry: &PageGeometry,
) -> Result<Vec<LineBatch>> {
    let n = geometry.num_lines;
    let mut batches: Vec<LineBatch> = (1..=n)
        .map(|line| LineBatch {
            line,
            xs: Vec::new(),
            source_indices: Vec::new(),
        })
        .collect();
    for ls in labeled {
        if ls.est_line < 1 || ls.est_line > n {
            return Err(Error::EstLineOutOfRange {
                index: ls.sample.index,
                est_line: ls.est_line,
                num_lines: n,
            });
        }
        let b = &mut batches[ls.est_line - 1];
        b.xs.push(ls.sample.z_x);
        b.source_indices.push(ls.sample.index);
    }
    Ok(batches)
}
