//! Depth refinement via a monotone lookup table.
//!
//! The stereo pipeline's computed depth does not exactly match the true
//! distance on a physical rig; a table of (computed, true) pairs measured at
//! a few distances corrects it. Lookups interpolate piecewise-linearly
//! between entries and clamp beyond either end, which keeps refined depths
//! inside the calibrated range. An empty table is the identity correction
//! and is the default when no calibration file is supplied.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::disparity::{DepthMap, INVALID};

#[derive(Debug, Error)]
pub enum LutError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("duplicate computed depth {0}")]
    DuplicateComputed(f64),
    #[error("true depths not strictly increasing at computed {computed}: {prev} -> {next}")]
    NonMonotone { computed: f64, prev: f64, next: f64 },
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("lut csv line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutEntry {
    pub computed_m: f64,
    pub true_m: f64,
}

/// Monotone correction table from computed depth to true depth, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthLut {
    entries: Vec<LutEntry>,
}

impl DepthLut {
    /// The identity correction (no entries).
    pub fn identity() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LutEntry] {
        &self.entries
    }

    /// Builds a table from (computed, true) pairs. Samples are sorted by
    /// computed depth; duplicate computed values or non-monotone true values
    /// signal bad calibration data and are rejected.
    pub fn build(samples: &[(f64, f64)]) -> Result<Self, LutError> {
        if samples.len() < 2 {
            return Err(LutError::TooFewSamples(samples.len()));
        }
        let mut entries: Vec<LutEntry> = samples
            .iter()
            .map(|&(computed_m, true_m)| LutEntry { computed_m, true_m })
            .collect();
        entries.sort_by(|a, b| a.computed_m.total_cmp(&b.computed_m));
        for pair in entries.windows(2) {
            if pair[0].computed_m == pair[1].computed_m {
                return Err(LutError::DuplicateComputed(pair[0].computed_m));
            }
            if pair[1].true_m <= pair[0].true_m {
                return Err(LutError::NonMonotone {
                    computed: pair[1].computed_m,
                    prev: pair[0].true_m,
                    next: pair[1].true_m,
                });
            }
        }
        Ok(Self { entries })
    }

    /// Corrects a computed depth. Inputs beyond either end of the table
    /// clamp to that end's true value.
    pub fn refine(&self, computed_m: f64) -> Result<f64, LutError> {
        if !(computed_m > 0.0) {
            return Err(LutError::InvalidDepth(computed_m));
        }
        Ok(self.refine_unchecked(computed_m))
    }

    /// Interpolation core shared with the per-pixel map path; the caller
    /// guarantees a positive input.
    pub(crate) fn refine_unchecked(&self, computed_m: f64) -> f64 {
        if self.entries.is_empty() {
            return computed_m;
        }
        let first = self.entries[0];
        let last = self.entries[self.entries.len() - 1];
        if computed_m <= first.computed_m {
            return first.true_m;
        }
        if computed_m >= last.computed_m {
            return last.true_m;
        }
        // Index of the first entry with computed_m strictly above the input.
        let hi = self.entries.partition_point(|e| e.computed_m <= computed_m);
        let e0 = self.entries[hi - 1];
        let e1 = self.entries[hi];
        if computed_m == e0.computed_m {
            return e0.true_m;
        }
        let t = (computed_m - e0.computed_m) / (e1.computed_m - e0.computed_m);
        e0.true_m + t * (e1.true_m - e0.true_m)
    }

    /// Applies the correction to every valid pixel of a depth map; invalid
    /// pixels stay invalid.
    pub fn refine_map(&self, depth: &DepthMap) -> DepthMap {
        let values = depth
            .values()
            .iter()
            .map(|&v| {
                if v.is_finite() {
                    self.refine_unchecked(v as f64) as f32
                } else {
                    INVALID
                }
            })
            .collect();
        DepthMap::from_values(depth.width(), depth.height(), values)
    }

    /// Parses the CSV interchange format: a `computed_m,true_m` header
    /// followed by one pair per row.
    pub fn from_csv_str(s: &str) -> Result<Self, LutError> {
        let mut lines = s.lines().enumerate();
        let (_, header) = lines.next().ok_or(LutError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        if header.trim() != "computed_m,true_m" {
            return Err(LutError::Parse {
                line: 1,
                msg: format!("expected header computed_m,true_m, got {header:?}"),
            });
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let computed = parse_field(fields.next(), i + 1)?;
            let true_m = parse_field(fields.next(), i + 1)?;
            if fields.next().is_some() {
                return Err(LutError::Parse {
                    line: i + 1,
                    msg: "expected exactly two fields".into(),
                });
            }
            samples.push((computed, true_m));
        }
        Self::build(&samples)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("computed_m,true_m\n");
        for e in &self.entries {
            writeln!(out, "{},{}", e.computed_m, e.true_m).unwrap();
        }
        out
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, LutError> {
        Self::from_csv_str(&fs::read_to_string(path)?)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), LutError> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn parse_field(field: Option<&str>, line: usize) -> Result<f64, LutError> {
    let field = field.ok_or(LutError::Parse {
        line,
        msg: "missing field".into(),
    })?;
    field.trim().parse().map_err(|_| LutError::Parse {
        line,
        msg: format!("bad number {field:?}"),
    })
}
