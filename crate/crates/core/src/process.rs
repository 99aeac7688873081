//! MA(q) error-term generation.
//!
//! An error term is the unweighted sum of the `q + 1` most recent i.i.d.
//! innovations, `ξ_i = Σ_{j=0}^{q} ε_{i-j}`. The window is maintained as a
//! ring buffer with an incrementally updated sum that is recomputed exactly
//! every [`REFRESH_INTERVAL`] steps.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used for every simulation stream.
pub type StreamRng = ChaCha8Rng;

/// Steps between exact recomputations of the window sum.
pub const REFRESH_INTERVAL: u32 = 65_536;

/// Default histogram cutoff.
pub const DEFAULT_D_MAX: usize = 64;

/// Sampling law of the innovations `ε`.
///
/// All variants are continuous, so ties between samples have probability
/// zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InnovationDistribution {
    /// Uniform on `[0, 1)`.
    #[serde(rename = "uniform")]
    Uniform01,
    /// Standard normal `N(0, 1)`.
    #[serde(rename = "normal")]
    StandardNormal,
    /// Exponential with unit rate.
    #[serde(rename = "exponential")]
    ExponentialUnitRate,
}

impl InnovationDistribution {
    pub const ALL: [InnovationDistribution; 3] = [
        InnovationDistribution::Uniform01,
        InnovationDistribution::StandardNormal,
        InnovationDistribution::ExponentialUnitRate,
    ];

    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            InnovationDistribution::Uniform01 => rng.random::<f64>(),
            InnovationDistribution::StandardNormal => rng.sample(StandardNormal),
            InnovationDistribution::ExponentialUnitRate => rng.sample(Exp1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InnovationDistribution::Uniform01 => "uniform",
            InnovationDistribution::StandardNormal => "normal",
            InnovationDistribution::ExponentialUnitRate => "exponential",
        }
    }
}

impl fmt::Display for InnovationDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InnovationDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InnovationDistribution::Uniform01),
            "normal" => Ok(InnovationDistribution::StandardNormal),
            "exponential" => Ok(InnovationDistribution::ExponentialUnitRate),
            other => Err(Error::config(format!(
                "unknown distribution {other:?} (expected uniform, normal or exponential)"
            ))),
        }
    }
}

/// Parameters of a (possibly multi-stream) simulation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Window order; each `ξ` sums `q + 1` innovations.
    pub q: usize,
    /// Number of `ξ` terms requested in total across all streams.
    pub n: u64,
    pub distribution: InnovationDistribution,
    pub seed: u64,
    /// Number of independent streams; each generates `ceil(n / streams)` terms.
    pub streams: u32,
    /// Histogram cutoff; longer distances land in the tail bin.
    pub d_max: usize,
}

impl SimulationConfig {
    /// Single-stream configuration with the default histogram cutoff.
    pub fn new(q: usize, n: u64, distribution: InnovationDistribution, seed: u64) -> Result<Self> {
        let config = SimulationConfig {
            q,
            n,
            distribution,
            seed,
            streams: 1,
            d_max: DEFAULT_D_MAX,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_streams(mut self, streams: u32) -> Result<Self> {
        self.streams = streams;
        self.validate()?;
        Ok(self)
    }

    pub fn with_d_max(mut self, d_max: usize) -> Result<Self> {
        self.d_max = d_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::config(format!("n must be at least 3, got {}", self.n)));
        }
        if self.streams == 0 {
            return Err(Error::config("streams must be at least 1"));
        }
        if self.d_max < 2 {
            return Err(Error::config(format!("d_max must be at least 2, got {}", self.d_max)));
        }
        Ok(())
    }

    /// Terms generated by each stream.
    pub fn terms_per_stream(&self) -> u64 {
        self.n.div_ceil(u64::from(self.streams))
    }
}

/// Derives the generator for one stream.
///
/// The stream is `ChaCha8Rng::seed_from_u64(seed)` with its word-stream
/// selector set to `stream_id`, so distinct ids give non-overlapping
/// keystreams under the same key and the mapping is a pure function of
/// `(seed, stream_id)`.
pub fn spawn_stream(config: &SimulationConfig, stream_id: u32) -> Result<StreamRng> {
    if stream_id >= config.streams {
        return Err(Error::config(format!(
            "stream id {stream_id} out of range for {} streams",
            config.streams
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::from(stream_id));
    Ok(rng)
}

/// Sliding window over the last `q + 1` innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct MaProcessState {
    distribution: InnovationDistribution,
    ring: Vec<f64>,
    /// Position of the oldest innovation in `ring`.
    head: usize,
    window_sum: f64,
    index: u64,
    refresh_counter: u32,
}

impl MaProcessState {
    /// Samples `q + 1` innovations and returns the state positioned at `ξ_1`.
    pub fn warm_up<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Self {
        let ring: Vec<f64> = (0..=config.q).map(|_| config.distribution.sample(rng)).collect();
        Self::with_window(config.distribution, ring)
    }

    /// Builds a state from explicit innovations, oldest first. The window
    /// order is `innovations.len() - 1`.
    pub fn from_innovations(distribution: InnovationDistribution, innovations: &[f64]) -> Result<Self> {
        if innovations.is_empty() {
            return Err(Error::usage("window needs at least one innovation"));
        }
        Ok(Self::with_window(distribution, innovations.to_vec()))
    }

    fn with_window(distribution: InnovationDistribution, ring: Vec<f64>) -> Self {
        let window_sum = ring.iter().sum();
        MaProcessState {
            distribution,
            ring,
            head: 0,
            window_sum,
            index: 1,
            refresh_counter: 0,
        }
    }

    /// Draws one innovation and returns the next error term.
    #[inline]
    pub fn next_xi<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let eps = self.distribution.sample(rng);
        self.push_innovation(eps)
    }

    /// Slides the window over `eps` and returns the new error term.
    #[inline]
    pub fn push_innovation(&mut self, eps: f64) -> f64 {
        let evicted = std::mem::replace(&mut self.ring[self.head], eps);
        self.head += 1;
        if self.head == self.ring.len() {
            self.head = 0;
        }
        self.index += 1;
        self.refresh_counter += 1;
        if self.ring.len() == 1 {
            self.window_sum = eps;
        } else if self.refresh_counter >= REFRESH_INTERVAL {
            self.refresh();
        } else {
            self.window_sum += eps - evicted;
        }
        self.window_sum
    }

    /// Recomputes the window sum exactly from the ring.
    pub fn refresh(&mut self) {
        self.window_sum = self.window().sum();
        self.refresh_counter = 0;
    }

    /// The most recent error term `ξ_index`.
    pub fn current(&self) -> f64 {
        self.window_sum
    }

    /// 1-based index of the most recent error term.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn q(&self) -> usize {
        self.ring.len() - 1
    }

    pub fn distribution(&self) -> InnovationDistribution {
        self.distribution
    }

    /// Window contents, oldest first.
    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.ring[self.head..].iter().chain(&self.ring[..self.head]).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(q: usize) -> SimulationConfig {
        SimulationConfig::new(q, 1000, InnovationDistribution::StandardNormal, 42).unwrap()
    }

    #[test]
    fn warm_up_q0_is_identity() {
        let cfg = config(0);
        let mut rng = spawn_stream(&cfg, 0).unwrap();
        let state = MaProcessState::warm_up(&cfg, &mut rng);
        let window: Vec<f64> = state.window().collect();
        assert_eq!(window.len(), 1);
        assert_eq!(state.current(), window[0]);
        assert_eq!(state.index(), 1);
    }

    #[test]
    fn warm_up_sums_window() {
        let state = MaProcessState::from_innovations(InnovationDistribution::Uniform01, &[0.1, 0.2, 0.3]).unwrap();
        assert!((state.current() - 0.6).abs() < 1e-15);
        assert_eq!(state.q(), 2);
        assert_eq!(state.index(), 1);
    }

    #[test]
    fn warm_up_is_deterministic() {
        let cfg = config(4);
        let a = MaProcessState::warm_up(&cfg, &mut spawn_stream(&cfg, 0).unwrap());
        let b = MaProcessState::warm_up(&cfg, &mut spawn_stream(&cfg, 0).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sliding_sum_evicts_oldest() {
        let mut state = MaProcessState::from_innovations(InnovationDistribution::Uniform01, &[0.1, 0.2, 0.3]).unwrap();
        let xi = state.push_innovation(0.4);
        assert!((xi - 0.9).abs() < 1e-15);
        let window: Vec<f64> = state.window().collect();
        assert_eq!(window, vec![0.2, 0.3, 0.4]);
        assert_eq!(state.index(), 2);
    }

    #[test]
    fn q0_returns_innovation() {
        let mut state = MaProcessState::from_innovations(InnovationDistribution::StandardNormal, &[0.7]).unwrap();
        assert_eq!(state.push_innovation(-1.5), -1.5);
    }

    #[test]
    fn incremental_sum_tracks_exact_window() {
        let q = 7;
        let cfg = SimulationConfig::new(q, 3, InnovationDistribution::Uniform01, 9).unwrap();
        let mut rng = spawn_stream(&cfg, 0).unwrap();
        let mut innovations: Vec<f64> = (0..=q).map(|_| cfg.distribution.sample(&mut rng)).collect();
        let mut state = MaProcessState::from_innovations(cfg.distribution, &innovations).unwrap();
        let mut max_err = 0.0f64;
        for _ in 0..1_000_000 {
            let eps = cfg.distribution.sample(&mut rng);
            innovations.push(eps);
            let xi = state.push_innovation(eps);
            let exact: f64 = innovations[innovations.len() - q - 1..].iter().sum();
            max_err = max_err.max((xi - exact).abs());
        }
        assert!(max_err < 1e-9, "max drift {max_err}");
    }

    #[test]
    fn refresh_restores_exact_sum() {
        let mut state =
            MaProcessState::from_innovations(InnovationDistribution::StandardNormal, &[1e16, 1.0, -1e16]).unwrap();
        state.push_innovation(0.5);
        state.refresh();
        let exact: f64 = state.window().sum();
        assert_eq!(state.current(), exact);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let cfg = config(1).with_streams(2).unwrap();
        let draw = |cfg: &SimulationConfig, id| {
            let mut rng = spawn_stream(cfg, id).unwrap();
            (0..100).map(|_| cfg.distribution.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(&cfg, 0), draw(&cfg, 0));
        assert_ne!(draw(&cfg, 0), draw(&cfg, 1));
        let other_seed = SimulationConfig {
            seed: 43,
            ..cfg.clone()
        };
        assert_ne!(draw(&cfg, 0), draw(&other_seed, 0));
    }

    #[test]
    fn stream_id_out_of_range() {
        let cfg = config(1).with_streams(2).unwrap();
        assert!(matches!(spawn_stream(&cfg, 2), Err(Error::Config(_))));
    }

    #[test]
    fn config_validation() {
        let d = InnovationDistribution::Uniform01;
        assert!(SimulationConfig::new(1, 2, d, 0).is_err());
        assert!(SimulationConfig::new(0, 3, d, 0).is_ok());
        assert!(config(1).with_streams(0).is_err());
        assert!(config(1).with_d_max(1).is_err());
        assert_eq!(config(1).with_streams(3).unwrap().terms_per_stream(), 334);
    }

    #[test]
    fn distribution_names_round_trip() {
        for dist in InnovationDistribution::ALL {
            assert_eq!(dist.name().parse::<InnovationDistribution>().unwrap(), dist);
        }
        assert!("cauchy".parse::<InnovationDistribution>().is_err());
    }

    #[test]
    fn upward_step_probability_is_one_half() {
        // P[ξ_{i-1} < ξ_i] = 1/2 for continuous innovations.
        for dist in InnovationDistribution::ALL {
            let cfg = SimulationConfig::new(3, 3, dist, 5).unwrap();
            let mut rng = spawn_stream(&cfg, 0).unwrap();
            let mut state = MaProcessState::warm_up(&cfg, &mut rng);
            let steps = 200_000u32;
            let mut prev = state.current();
            let mut ups = 0u32;
            for _ in 0..steps {
                let xi = state.next_xi(&mut rng);
                if prev < xi {
                    ups += 1;
                }
                prev = xi;
            }
            let p = f64::from(ups) / f64::from(steps);
            let se = (0.25 / f64::from(steps)).sqrt();
            assert!((p - 0.5).abs() < 3.0 * se, "{dist}: {p}");
        }
    }
}
