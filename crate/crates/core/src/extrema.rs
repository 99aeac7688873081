//! Strict local maxima and the distances between consecutive ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `true` iff `left < mid > right`. Any tie yields `false`.
#[inline]
pub fn is_peak(left: f64, mid: f64, right: f64) -> bool {
    left < mid && mid > right
}

/// Distance `k - i` between consecutive peaks at indices `i < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub d: usize,
}

/// Streaming peak detector over a 1-based sequence of error terms.
///
/// A peak at index `i` is confirmed once `ξ_{i+1}` arrives, so the first and
/// last terms of a stream are never peaks. Adjacent equal values are counted
/// in [`PeakDetector::tie_events`] and never form a peak.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeakDetector {
    prev2: Option<f64>,
    prev1: Option<f64>,
    prev_index: u64,
    last_peak_index: Option<u64>,
    peaks: u64,
    tie_events: u64,
}

impl PeakDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds `ξ_index`. Indices must start at 1 and increase by one.
    pub fn feed(&mut self, xi: f64, index: u64) -> Result<Option<DistanceRecord>> {
        if index != self.prev_index + 1 {
            return Err(Error::usage(format!(
                "expected index {}, got {index}",
                self.prev_index + 1
            )));
        }
        Ok(self.push(xi))
    }

    /// Feeds the next term without index bookkeeping checks.
    #[inline]
    pub fn push(&mut self, xi: f64) -> Option<DistanceRecord> {
        let mut emitted = None;
        if let Some(prev1) = self.prev1 {
            if prev1 == xi {
                self.tie_events += 1;
            }
            if let Some(prev2) = self.prev2 {
                if is_peak(prev2, prev1, xi) {
                    let peak = self.prev_index;
                    if let Some(last) = self.last_peak_index {
                        emitted = Some(DistanceRecord {
                            d: (peak - last) as usize,
                        });
                    }
                    self.last_peak_index = Some(peak);
                    self.peaks += 1;
                }
            }
        }
        self.prev2 = self.prev1;
        self.prev1 = Some(xi);
        self.prev_index += 1;
        emitted
    }

    /// Peaks confirmed so far.
    pub fn peaks(&self) -> u64 {
        self.peaks
    }

    /// Adjacent exact ties seen so far.
    pub fn tie_events(&self) -> u64 {
        self.tie_events
    }

    /// Index of the most recently confirmed peak.
    pub fn last_peak_index(&self) -> Option<u64> {
        self.last_peak_index
    }

    /// Number of terms fed so far.
    pub fn terms(&self) -> u64 {
        self.prev_index
    }
}

/// All inter-peak distances of `series`, in order.
pub fn distances_of(series: &[f64]) -> Vec<usize> {
    if series.len() < 3 {
        return Vec::new();
    }
    series
        .windows(3)
        .enumerate()
        .filter(|(_, w)| is_peak(w[0], w[1], w[2]))
        .map(|(i, _)| i + 1)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|p| p[1] - p[0])
        .collect()
}
