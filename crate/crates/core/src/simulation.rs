//! End-to-end runs: generate, detect, histogram, merge.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::extrema::PeakDetector;
use crate::process::{spawn_stream, MaProcessState, SimulationConfig};
use crate::stats::{DistanceHistogram, RunMetadata};

/// Result of one independent stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamOutcome {
    pub stream_id: u32,
    pub histogram: DistanceHistogram,
    pub terms: u64,
    pub peaks: u64,
}

impl StreamOutcome {
    /// Share of the interior terms that are peaks.
    pub fn peak_fraction(&self) -> f64 {
        self.peaks as f64 / self.terms.saturating_sub(2).max(1) as f64
    }
}

/// Merged result of all streams of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationOutcome {
    pub config: SimulationConfig,
    pub histogram: DistanceHistogram,
    pub streams: Vec<StreamOutcome>,
}

impl SimulationOutcome {
    pub fn terms(&self) -> u64 {
        self.streams.iter().map(|s| s.terms).sum()
    }

    pub fn peaks(&self) -> u64 {
        self.streams.iter().map(|s| s.peaks).sum()
    }

    /// Peaks over interior terms, pooled across streams.
    pub fn peak_fraction(&self) -> f64 {
        let interior: u64 = self.streams.iter().map(|s| s.terms.saturating_sub(2)).sum();
        self.peaks() as f64 / interior.max(1) as f64
    }

    pub fn metadata(&self) -> RunMetadata {
        let c = &self.config;
        RunMetadata {
            q: c.q,
            n: c.n,
            distribution: c.distribution,
            seed: c.seed,
            streams: c.streams,
            d_max: c.d_max,
            terms_per_stream: c.terms_per_stream(),
            terms: self.terms(),
            peaks: self.peaks(),
            tie_events: self.histogram.tie_events(),
        }
    }
}

/// Generates `config.terms_per_stream()` terms on stream `stream_id` and
/// histograms the distances between consecutive peaks.
pub fn run_stream(config: &SimulationConfig, stream_id: u32) -> Result<StreamOutcome> {
    config.validate()?;
    let mut rng = spawn_stream(config, stream_id)?;
    let mut state = MaProcessState::warm_up(config, &mut rng);
    let mut detector = PeakDetector::new();
    let mut histogram = DistanceHistogram::new(config.d_max)?;
    let terms = config.terms_per_stream();

    detector.push(state.current());
    for _ in 1..terms {
        if let Some(record) = detector.push(state.next_xi(&mut rng)) {
            histogram.accumulate(record.d)?;
        }
    }
    histogram.add_tie_events(detector.tie_events());

    let peaks = detector.peaks();
    debug_assert_eq!(histogram.total(), peaks.saturating_sub(1));
    Ok(StreamOutcome {
        stream_id,
        histogram,
        terms: detector.terms(),
        peaks,
    })
}

/// Runs every stream in parallel and merges the histograms in stream order.
pub fn run(config: &SimulationConfig) -> Result<SimulationOutcome> {
    config.validate()?;
    let streams = (0..config.streams)
        .into_par_iter()
        .map(|id| run_stream(config, id))
        .collect::<Result<Vec<_>>>()?;
    let mut histogram = DistanceHistogram::new(config.d_max)?;
    for s in &streams {
        histogram.merge_from(&s.histogram)?;
    }
    Ok(SimulationOutcome {
        config: config.clone(),
        histogram,
        streams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrema::distances_of;
    use crate::process::InnovationDistribution;

    #[test]
    fn stream_matches_batch_detection() {
        let cfg = SimulationConfig::new(3, 5_000, InnovationDistribution::Uniform01, 17).unwrap();
        let outcome = run_stream(&cfg, 0).unwrap();

        let mut rng = spawn_stream(&cfg, 0).unwrap();
        let mut state = MaProcessState::warm_up(&cfg, &mut rng);
        let mut series = vec![state.current()];
        series.extend((1..cfg.n).map(|_| state.next_xi(&mut rng)));
        let batch = DistanceHistogram::from_distances(cfg.d_max, distances_of(&series)).unwrap();

        assert_eq!(outcome.terms, 5_000);
        assert_eq!(outcome.histogram.total(), batch.total());
        assert!(outcome.histogram.bins().eq(batch.bins()));
    }

    #[test]
    fn multi_stream_is_merge_of_streams() {
        let cfg = SimulationConfig::new(16, 100, InnovationDistribution::StandardNormal, 3)
            .unwrap()
            .with_streams(4)
            .unwrap();
        let outcome = run(&cfg).unwrap();
        let mut expected = DistanceHistogram::new(cfg.d_max).unwrap();
        for id in 0..4 {
            expected.merge_from(&run_stream(&cfg, id).unwrap().histogram).unwrap();
        }
        assert_eq!(outcome.histogram, expected);
        assert_eq!(outcome.terms(), 100);
        assert_eq!(outcome.metadata().terms_per_stream, 25);
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = SimulationConfig::new(2, 20_000, InnovationDistribution::ExponentialUnitRate, 99)
            .unwrap()
            .with_streams(3)
            .unwrap();
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
        let other = SimulationConfig {
            seed: 100,
            ..cfg.clone()
        };
        assert_ne!(run(&cfg).unwrap().histogram, run(&other).unwrap().histogram);
    }

    #[test]
    fn q0_runs() {
        let cfg = SimulationConfig::new(0, 10_000, InnovationDistribution::Uniform01, 1).unwrap();
        let outcome = run(&cfg).unwrap();
        assert!(outcome.peaks() > 0);
    }
}
