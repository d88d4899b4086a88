use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Span given to a feature whose training values are (nearly) constant.
pub const DEGENERATE_EPS: f64 = 1e-6;

/// Per-feature min-max map onto [-1, 1].
///
/// Degenerate features keep a widened span of `DEGENERATE_EPS` for the inverse
/// map but normalize to the constant 0, so nothing flows through them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl Normalizer {
    /// Identity map for values already in [-1, 1].
    pub fn identity(n: usize) -> Self {
        Self {
            min: vec![-1.0; n],
            max: vec![1.0; n],
            degenerate: vec![false; n],
        }
    }

    /// Fits on row-major samples of `n` features.
    pub fn fit(data: &[f64], n: usize) -> Result<Self> {
        if n == 0 || data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.len() % n != 0 {
            return Err(Error::Shape {
                expected: format!("multiple of {n} values"),
                given: data.len().to_string(),
            });
        }
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for row in data.chunks_exact(n) {
            for j in 0..n {
                if !row[j].is_finite() {
                    return Err(Error::NonFinite("normalizer sample"));
                }
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        let mut norm = Self {
            min,
            max,
            degenerate: vec![false; n],
        };
        norm.widen();
        Ok(norm)
    }

    fn widen(&mut self) {
        for j in 0..self.len() {
            if self.max[j] - self.min[j] < DEGENERATE_EPS {
                let mid = 0.5 * (self.max[j] + self.min[j]);
                self.min[j] = mid - 0.5 * DEGENERATE_EPS;
                self.max[j] = mid + 0.5 * DEGENERATE_EPS;
                self.degenerate[j] = true;
            } else {
                self.degenerate[j] = false;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Grows the ranges to cover `other`. Returns whether anything changed.
    pub fn expand(&mut self, other: &Normalizer) -> bool {
        let mut changed = false;
        for j in 0..self.len() {
            let (lo, hi) = if other.degenerate[j] {
                let mid = 0.5 * (other.min[j] + other.max[j]);
                (mid, mid)
            } else {
                (other.min[j], other.max[j])
            };
            if lo < self.min[j] || hi > self.max[j] {
                let (cur_lo, cur_hi) = if self.degenerate[j] {
                    let mid = 0.5 * (self.min[j] + self.max[j]);
                    (mid, mid)
                } else {
                    (self.min[j], self.max[j])
                };
                self.min[j] = cur_lo.min(lo);
                self.max[j] = cur_hi.max(hi);
                changed = true;
            }
        }
        if changed {
            self.widen();
        }
        changed
    }

    #[inline]
    pub fn normalize(&self, j: usize, x: f64) -> f64 {
        if self.degenerate[j] {
            0.0
        } else {
            2.0 * (x - self.min[j]) / (self.max[j] - self.min[j]) - 1.0
        }
    }

    #[inline]
    pub fn denormalize(&self, j: usize, z: f64) -> f64 {
        self.min[j] + 0.5 * (z + 1.0) * (self.max[j] - self.min[j])
    }

    /// d normalize / dx.
    #[inline]
    pub fn scale(&self, j: usize) -> f64 {
        if self.degenerate[j] {
            0.0
        } else {
            2.0 / (self.max[j] - self.min[j])
        }
    }

    /// d denormalize / dz.
    #[inline]
    pub fn inv_scale(&self, j: usize) -> f64 {
        0.5 * (self.max[j] - self.min[j])
    }
}
