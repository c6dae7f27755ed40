//! Haar wavelet decomposition, low-pass filtering and compression accounting.
//!
//! Coefficients are stored in the unnormalized piecewise-constant convention:
//! the basis function at scale `j`, translation `k` is `+1` on the first half
//! of block `[k*N/2^j, (k+1)*N/2^j)` and `-1` on the second half, evaluated
//! on the unit interval sampled at `i/N`. With this convention the low-pass
//! projection that keeps scales `j < j*` (plus the mean) reconstructs to
//! plain block averages over blocks of `N / 2^{j*}` samples, which is the
//! oracle the tests lean on.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::marketdata::ReturnSeries;

/// Largest scale index used for the production partition: subseries of
/// `2^{DEFAULT_MAX_SCALE + 1} = 4096` samples.
pub const DEFAULT_MAX_SCALE: u32 = 11;
/// Scale threshold below which coefficients survive the low-pass filter.
pub const DEFAULT_CUTOFF_SCALE: u32 = 4;

#[derive(Debug, Error)]
pub enum WaveletError {
    #[error("segment length {0} is not a power of two >= 2")]
    BadSegmentLength(usize),
    #[error("basis index (scale {scale}, translation {translation}) invalid for {len} samples")]
    BadBasisIndex { scale: u32, translation: u32, len: usize },
    #[error("cutoff scale {cutoff} out of range 1..={max} for this decomposition")]
    BadCutoff { cutoff: u32, max: u32 },
    #[error("series of {have} samples is shorter than one {need}-sample subseries")]
    SeriesTooShort { have: usize, need: usize },
    #[error("max scale {0} is too large for this platform")]
    ScaleOverflow(u32),
}

/// Position of one Haar basis function: scale index `j` (halving the support
/// per increment) and translation `k` in `[0, 2^j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HaarBasisIndex {
    pub scale: u32,
    pub translation: u32,
}

impl HaarBasisIndex {
    pub fn new(scale: u32, translation: u32) -> Self {
        Self { scale, translation }
    }

    /// Value of the basis function at sample `i` of `n`: `+1`, `-1` or `0`.
    pub fn evaluate(&self, i: usize, n: usize) -> f64 {
        let block = n >> self.scale;
        let start = self.translation as usize * block;
        if i < start || i >= start + block {
            0.0
        } else if i < start + block / 2 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Mean plus Haar coefficients of one power-of-two segment.
///
/// A complete decomposition of `N = 2^{J+1}` samples carries `N - 1`
/// coefficients (scales `0..=J`); filtered decompositions carry fewer.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    subseries_length: usize,
    mean: f64,
    coefficients: BTreeMap<HaarBasisIndex, f64>,
}

impl WaveletDecomposition {
    /// Builds a decomposition from parts, validating every index against the
    /// segment length.
    pub fn new(
        subseries_length: usize,
        mean: f64,
        coefficients: BTreeMap<HaarBasisIndex, f64>,
    ) -> Result<Self, WaveletError> {
        if !subseries_length.is_power_of_two() || subseries_length < 2 {
            return Err(WaveletError::BadSegmentLength(subseries_length));
        }
        let max_scale = subseries_length.trailing_zeros() - 1;
        for idx in coefficients.keys() {
            if idx.scale > max_scale || u64::from(idx.translation) >= 1u64 << idx.scale {
                return Err(WaveletError::BadBasisIndex {
                    scale: idx.scale,
                    translation: idx.translation,
                    len: subseries_length,
                });
            }
        }
        Ok(Self { subseries_length, mean, coefficients })
    }

    pub fn subseries_length(&self) -> usize {
        self.subseries_length
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn coefficients(&self) -> &BTreeMap<HaarBasisIndex, f64> {
        &self.coefficients
    }

    /// Largest valid scale index `J` (`N = 2^{J+1}`).
    pub fn max_scale(&self) -> u32 {
        self.subseries_length.trailing_zeros() - 1
    }

    pub fn is_complete(&self) -> bool {
        self.coefficients.len() == self.subseries_length - 1
    }

    /// `N * mean^2 + sum c^2 * N / 2^j`, the energy carried by the stored
    /// modes; equals the sum of squares of the reconstruction.
    pub fn energy(&self) -> f64 {
        let n = self.subseries_length as f64;
        let mut total = n * self.mean * self.mean;
        for (idx, c) in &self.coefficients {
            total += c * c * n / (1u64 << idx.scale) as f64;
        }
        total
    }
}

/// Low-pass specification: keep coefficients with `scale < cutoff_scale`,
/// and the mean unless told otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterSpec {
    pub cutoff_scale: u32,
    pub keep_mean: bool,
}

impl FilterSpec {
    pub fn new(cutoff_scale: u32) -> Self {
        Self { cutoff_scale, keep_mean: true }
    }

    /// Values that survive per segment: `2^{cutoff} - 1` wavelets plus the mean.
    pub fn retained_per_segment(&self) -> usize {
        (1usize << self.cutoff_scale) - 1 + usize::from(self.keep_mean)
    }
}

/// Full Haar analysis of a power-of-two segment via the pyramid algorithm.
///
/// Runs in `O(N)`: each level halves a vector of block means, emitting half
/// differences as the coefficients of that scale.
pub fn haar_forward(segment: &[f64]) -> Result<WaveletDecomposition, WaveletError> {
    let n = segment.len();
    if !n.is_power_of_two() || n < 2 {
        return Err(WaveletError::BadSegmentLength(n));
    }
    let mut coefficients = BTreeMap::new();
    let mut level = segment.to_vec();
    while level.len() > 1 {
        let half = level.len() / 2;
        let scale = level.len().trailing_zeros() - 1;
        let mut next = Vec::with_capacity(half);
        for k in 0..half {
            let a = level[2 * k];
            let b = level[2 * k + 1];
            next.push(0.5 * (a + b));
            coefficients.insert(
                HaarBasisIndex::new(scale, k as u32),
                0.5 * (a - b),
            );
        }
        level = next;
    }
    Ok(WaveletDecomposition { subseries_length: n, mean: level[0], coefficients })
}

/// Reconstructs the segment `x_i = mean + sum c_jk psi_jk(i/N)`.
/// Coefficients absent from the map contribute zero.
pub fn haar_inverse(decomp: &WaveletDecomposition) -> Vec<f64> {
    let mut level = vec![decomp.mean];
    for scale in 0..=decomp.max_scale() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for (k, &a) in level.iter().enumerate() {
            let c = decomp
                .coefficients
                .get(&HaarBasisIndex::new(scale, k as u32))
                .copied()
                .unwrap_or(0.0);
            next.push(a + c);
            next.push(a - c);
        }
        level = next;
    }
    level
}

/// Projects onto the coarse modes: keeps exactly the coefficients with
/// `scale < spec.cutoff_scale`, plus the mean when `spec.keep_mean`.
pub fn lowpass_filter(
    decomp: &WaveletDecomposition,
    spec: &FilterSpec,
) -> Result<WaveletDecomposition, WaveletError> {
    let max = decomp.max_scale() + 1;
    if spec.cutoff_scale < 1 || spec.cutoff_scale > max {
        return Err(WaveletError::BadCutoff { cutoff: spec.cutoff_scale, max });
    }
    let coefficients = decomp
        .coefficients
        .iter()
        .filter(|(idx, _)| idx.scale < spec.cutoff_scale)
        .map(|(idx, c)| (*idx, *c))
        .collect();
    Ok(WaveletDecomposition {
        subseries_length: decomp.subseries_length,
        mean: if spec.keep_mean { decomp.mean } else { 0.0 },
        coefficients,
    })
}

/// Forward, low-pass, inverse in one step.
pub fn filter_segment(segment: &[f64], spec: &FilterSpec) -> Result<Vec<f64>, WaveletError> {
    let decomp = haar_forward(segment)?;
    let filtered = lowpass_filter(&decomp, spec)?;
    Ok(haar_inverse(&filtered))
}

/// What the low-pass filter kept, over a whole partitioned series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompressionReport {
    /// Length of the input series, remainder included.
    pub total_samples: usize,
    /// Number of `2^{J+1}`-sample subseries processed.
    pub subseries_count: usize,
    /// Coefficients (plus means) surviving the filter, summed over subseries.
    pub retained_coefficients: usize,
    /// `retained_coefficients / (subseries_count * 2^{J+1})`.
    pub retention_fraction: f64,
    /// Trailing samples excluded because they do not fill a subseries.
    pub remainder_samples: usize,
}

/// Partitions a return series into `2^{max_scale + 1}`-sample subseries,
/// low-pass filters each one independently, and concatenates the
/// reconstructions.
///
/// The trailing remainder is excluded from the output and reported.
/// Subseries are processed in parallel; the result does not depend on
/// scheduling. The output is deliberately not re-centered: the filter
/// preserves per-subseries means and aligned block sums exactly, and that
/// property is worth more downstream than a sample mean of exactly zero.
pub fn filter_series(
    returns: &ReturnSeries,
    max_scale: u32,
    spec: &FilterSpec,
) -> Result<(ReturnSeries, CompressionReport), WaveletError> {
    if max_scale >= usize::BITS - 1 {
        return Err(WaveletError::ScaleOverflow(max_scale));
    }
    let seg_len = 1usize << (max_scale + 1);
    let total = returns.values.len();
    if total < seg_len {
        return Err(WaveletError::SeriesTooShort { have: total, need: seg_len });
    }
    let subseries_count = total / seg_len;
    let remainder_samples = total - subseries_count * seg_len;
    let body = &returns.values[..subseries_count * seg_len];

    let segments: Vec<Vec<f64>> = body
        .par_chunks(seg_len)
        .map(|segment| filter_segment(segment, spec))
        .collect::<Result<_, _>>()?;

    let mut values = Vec::with_capacity(body.len());
    for segment in &segments {
        values.extend_from_slice(segment);
    }

    let retained_coefficients = subseries_count * spec.retained_per_segment();
    let report = CompressionReport {
        total_samples: total,
        subseries_count,
        retained_coefficients,
        retention_fraction: retained_coefficients as f64 / (subseries_count * seg_len) as f64,
        remainder_samples,
    };

    let filtered = ReturnSeries {
        values,
        step_minutes: returns.step_minutes,
        mean_removed: returns.mean_removed,
        outliers_neutralized: returns.outliers_neutralized,
        source_span: returns.source_span,
        drift: returns.drift,
        global_mean_fallback: returns.global_mean_fallback,
    };
    Ok((filtered, report))
}
