//! Closed-form distance law for MA(q) peaks and independent checks of it.
//!
//! For `q > d` the comparisons `ξ_{k-1} < ξ_k` reduce to comparisons
//! `ε_{k-q-1} < ε_k` between disjoint innovation pairs, so the up/down
//! pattern around two peaks at distance `d` is a string of independent fair
//! signs. That gives
//!
//! * `Pr[max] = 1/4`,
//! * `π(d) = (d-1)/2^(d-2)`, the chance that none of the `d-2` interior
//!   comparisons forms a peak,
//! * `Pr[d] = π(d) · Pr[max] = (d-1)/2^d`, with mean 4 and variance 4.
//!
//! The law is asymptotic: it holds exactly only for `q > d`.
//! [`valley_pattern_count`] recounts `π(d)` by brute force and
//! [`pattern_probability_oracle`] samples the full innovation window without
//! assuming the separation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::extrema::is_peak;

/// Largest `d` whose closed-form values are representable exactly.
pub const MAX_EXACT_D: usize = 126;

/// Largest `d` accepted by [`valley_pattern_count`].
pub const MAX_ENUMERATION_D: usize = 30;

/// Smallest sample count accepted by [`pattern_probability_oracle`].
pub const MIN_ORACLE_SAMPLES: u64 = 10_000;

/// Second-moment terms below this are dropped from the moment series.
const MOMENT_TERM_CUTOFF: f64 = 1e-20;

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("distance must be at least 2, got {d}")));
    }
    if d > MAX_EXACT_D {
        return Err(Error::domain(format!("distance {d} exceeds exact range {MAX_EXACT_D}")));
    }
    Ok(())
}

/// Probability that a given term is a peak: exactly 1/4 for `q > 0`.
pub fn prob_max() -> Dyadic {
    Dyadic::new(1, 2)
}

/// Finite-sample mean-distance estimate `n / (n·Pr[max] - 1)`.
pub fn mean_distance_estimate(n: u64) -> Result<f64> {
    if n <= 4 {
        return Err(Error::domain(format!(
            "mean distance estimate needs more than 4 terms, got {n}"
        )));
    }
    let n = n as f64;
    Ok(n / (n * prob_max().to_f64() - 1.0))
}

/// Probability of no interior peak between two peaks at distance `d`.
pub fn pi_no_interior_max(d: usize) -> Result<Dyadic> {
    check_d(d)?;
    Ok(Dyadic::new((d - 1) as u128, (d - 2) as u32))
}

/// Asymptotic probability `(d-1)/2^d` that the next peak is `d` terms away.
/// Exact only when `q > d`.
pub fn pmf(d: usize) -> Result<Dyadic> {
    check_d(d)?;
    Ok(Dyadic::new((d - 1) as u128, d as u32))
}

/// `(d-1)/2^d` in floating point for any `d >= 2`.
pub fn pmf_f64(d: usize) -> f64 {
    if d < 2 {
        return 0.0;
    }
    (d - 1) as f64 * 2f64.powi(-(d.min(i32::MAX as usize) as i32))
}

/// `Σ_{k=2}^{d} pmf(k)`; zero for `d < 2`.
pub fn cdf(d: usize) -> Result<Dyadic> {
    if d < 2 {
        return Ok(Dyadic::ZERO);
    }
    check_d(d)?;
    Ok((2..=d).map(|k| pmf(k).expect("in range")).sum())
}

/// Mass beyond `d`: `Σ_{k>d} (k-1)/2^k = (d+1)/2^d`.
pub fn tail_mass(d: usize) -> Result<Dyadic> {
    if d < 1 {
        return Ok(Dyadic::ONE);
    }
    check_d(d.max(2))?;
    Ok(Dyadic::new((d + 1) as u128, d as u32))
}

/// First and second raw moments, summed exactly term by term until the
/// second-moment term drops below [`MOMENT_TERM_CUTOFF`].
fn raw_moments() -> (Dyadic, Dyadic) {
    let mut first = Dyadic::ZERO;
    let mut second = Dyadic::ZERO;
    for d in 2..=MAX_EXACT_D {
        let p = pmf(d).expect("in range");
        let dd = Dyadic::from_int(d as u128);
        let t2 = p * dd * dd;
        first = first + p * dd;
        second = second + t2;
        if t2.to_f64() < MOMENT_TERM_CUTOFF {
            break;
        }
    }
    (first, second)
}

/// Series value of `E[d] = Σ d·pmf(d)`; equals 4.
pub fn mean() -> f64 {
    raw_moments().0.to_f64()
}

/// Series value of `Var[d] = Σ d²·pmf(d) - E[d]²`; equals 4.
pub fn variance() -> f64 {
    let (first, second) = raw_moments();
    let m = first.to_f64();
    second.to_f64() - m * m
}

/// Counts up/down sign vectors of the `d-2` interior comparisons between
/// two peaks at distance `d` that contain no ascent immediately followed by
/// a descent.
///
/// Bit `k` of the enumerated mask is 1 when comparison `k` ascends. The
/// count equals `d - 1`, which makes `count / 2^(d-2)` an independent route
/// to `π(d)`.
pub fn valley_pattern_count(d: usize) -> Result<u64> {
    if !(2..=MAX_ENUMERATION_D).contains(&d) {
        return Err(Error::domain(format!(
            "enumeration needs 2 <= d <= {MAX_ENUMERATION_D}, got {d}"
        )));
    }
    let comparisons = d - 2;
    let count = (0u64..1 << comparisons)
        .filter(|&mask| {
            (0..comparisons.saturating_sub(1)).all(|k| {
                let up = mask >> k & 1 == 1;
                let next_down = mask >> (k + 1) & 1 == 0;
                !(up && next_down)
            })
        })
        .count();
    Ok(count as u64)
}

/// Monte Carlo estimate returned by [`pattern_probability_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub d: usize,
    pub q: usize,
    pub samples: u64,
    /// Windows that matched the two-peak pattern.
    pub hits: u64,
    /// `4 · hits / samples`, the conditional frequency given a peak.
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub std_error: f64,
}

/// Samples the innovations behind `ξ_{i-1}, …, ξ_{i+d+1}` directly and
/// estimates `4 · Pr[peaks at i and i+d, none in between]`.
///
/// Each sample draws `d + q + 3` standard normal innovations and checks the
/// full pattern on the windowed sums, so nothing relies on the comparisons
/// separating. For `q > d` the estimate approaches `pmf(d)`.
pub fn pattern_probability_oracle(d: usize, q: usize, samples: u64, seed: u64) -> Result<OracleEstimate> {
    if d < 2 {
        return Err(Error::domain(format!("distance must be at least 2, got {d}")));
    }
    if q < 1 {
        return Err(Error::domain("oracle needs q >= 1"));
    }
    if samples < MIN_ORACLE_SAMPLES {
        return Err(Error::domain(format!(
            "oracle needs at least {MIN_ORACLE_SAMPLES} samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = d + 3;
    let mut eps = vec![0.0f64; terms + q];
    let mut xi = vec![0.0f64; terms];
    let mut hits = 0u64;
    for _ in 0..samples {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        // xi[t] is ξ_{i-1+t}; it sums eps[t..=t+q].
        let mut sum: f64 = eps[..=q].iter().sum();
        xi[0] = sum;
        for t in 1..terms {
            sum += eps[t + q] - eps[t - 1];
            xi[t] = sum;
        }
        let peak_at = |t: usize| is_peak(xi[t - 1], xi[t], xi[t + 1]);
        if peak_at(1) && peak_at(d + 1) && !(2..=d).any(peak_at) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let scale = 1.0 / prob_max().to_f64();
    Ok(OracleEstimate {
        d,
        q,
        samples,
        hits,
        estimate: scale * p,
        std_error: scale * (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// One row of the tabulated law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmfRow {
    pub d: usize,
    pub pmf: Dyadic,
    pub cdf: Dyadic,
    pub pi: Dyadic,
}

/// The closed-form law tabulated up to a cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnalyticModel {
    pub d_max: usize,
}

impl AnalyticModel {
    pub fn new(d_max: usize) -> Result<Self> {
        check_d(d_max)?;
        Ok(AnalyticModel { d_max })
    }

    /// `pmf(d)` as a float; defined for every `d`, zero below 2.
    pub fn pmf(&self, d: usize) -> f64 {
        pmf_f64(d)
    }

    /// Mass beyond `d_max`.
    pub fn tail_mass(&self) -> Dyadic {
        tail_mass(self.d_max).expect("validated cutoff")
    }

    pub fn table(&self) -> Vec<PmfRow> {
        let mut cumulative = Dyadic::ZERO;
        (2..=self.d_max)
            .map(|d| {
                let p = pmf(d).expect("validated cutoff");
                cumulative = cumulative + p;
                PmfRow {
                    d,
                    pmf: p,
                    cdf: cumulative,
                    pi: pi_no_interior_max(d).expect("validated cutoff"),
                }
            })
            .collect()
    }

    /// Whether the closed form is exact for distance `d` under window order `q`.
    pub fn in_asymptotic_regime(d: usize, q: usize) -> bool {
        d < q
    }
}
