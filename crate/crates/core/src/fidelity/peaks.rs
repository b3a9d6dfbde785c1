//! Threshold-based peak detection on echo time series.

use crate::fidelity::EchoMatrix;
use crate::spinspace::FockIndex;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakConfig {
    /// Fraction of the global maximum a sample must reach to belong to a peak.
    pub threshold_frac: f64,
    /// Peak regions separated by fewer sub-threshold samples than this merge.
    pub min_gap: usize,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig {
            threshold_frac: 0.1,
            min_gap: 20,
        }
    }
}

/// A contiguous region at or above threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakRecord {
    pub center_n: usize,
    pub height: f64,
    pub start_n: usize,
    pub end_n: usize,
    pub threshold: f64,
}

/// Peak regions of `series` (indexed by kick count `n`).
///
/// A region is a maximal run with `value ≥ threshold_frac · max`. Runs
/// separated by fewer than `min_gap` sub-threshold samples are merged. The
/// centre is the earliest argmax inside the merged region. A series whose
/// maximum is not positive has no peaks.
pub fn detect_peaks(series: &[f64], threshold_frac: f64, min_gap: usize) -> Result<Vec<PeakRecord>> {
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::invalid(format!(
            "threshold_frac = {threshold_frac} must lie in (0, 1)"
        )));
    }
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Ok(Vec::new());
    }
    let threshold = threshold_frac * max;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &v) in series.iter().enumerate() {
        match (v >= threshold, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push((s, series.len() - 1));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.0 - last.1 - 1 < min_gap => last.1 = run.1,
            _ => merged.push(run),
        }
    }

    Ok(merged
        .into_iter()
        .map(|(start, end)| {
            let mut center = start;
            for i in start..=end {
                if series[i] > series[center] {
                    center = i;
                }
            }
            PeakRecord {
                center_n: center,
                height: series[center],
                start_n: start,
                end_n: end,
                threshold,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakTrackRow {
    pub k: FockIndex,
    pub peaks: Vec<PeakRecord>,
    /// Centre of the earliest peak.
    pub first: Option<usize>,
    /// Centre of the next peak, absent once the two have merged.
    pub second: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakTrack {
    pub rows: Vec<PeakTrackRow>,
    /// First `k` (scanning upward) at which the first and second peaks of
    /// the previous `k` have merged into one. See [`track_peak_centers`].
    pub merge_k: Option<FockIndex>,
}

/// Per-`k` first and second peak centres of `M_lk(n)`.
///
/// The pair at the previous `k`, centred at `p1 < p2`, counts as merged when
/// the current row has no peak besides its first one up to `p2 + (p2 - p1)`.
/// Later revivals further out do not hide the merge.
pub fn track_peak_centers(matrix: &EchoMatrix, config: &PeakConfig) -> Result<PeakTrack> {
    let mut rows = Vec::with_capacity(matrix.ks.len());
    for (j, &k) in matrix.ks.iter().enumerate() {
        let peaks = detect_peaks(&matrix.series(j), config.threshold_frac, config.min_gap)?;
        rows.push(PeakTrackRow {
            k,
            first: peaks.first().map(|p| p.center_n),
            second: peaks.get(1).map(|p| p.center_n),
            peaks,
        });
    }
    let merge_k = rows.windows(2).find(|w| merged(&w[0], &w[1])).map(|w| w[1].k);
    Ok(PeakTrack { rows, merge_k })
}

fn merged(prev: &PeakTrackRow, cur: &PeakTrackRow) -> bool {
    let (Some(p1), Some(p2), Some(_)) = (prev.first, prev.second, cur.first) else {
        return false;
    };
    let reach = p2 + (p2 - p1);
    !cur.peaks.iter().skip(1).any(|p| p.center_n <= reach)
}
