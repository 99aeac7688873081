//! Distance histograms, empirical estimates, and comparison with the
//! closed-form law.

use serde::{Deserialize, Serialize};

use crate::analytic::{self, AnalyticModel};
use crate::error::{Error, Result};
use crate::process::InnovationDistribution;
use crate::special::chi_square_sf;

/// Moments are flagged unreliable when the tail bin holds this share or more.
pub const MAX_RELIABLE_TAIL_FRACTION: f64 = 0.001;

/// Minimum histogram total for the chi-square test.
pub const MIN_CHI_SQUARE_TOTAL: u64 = 10_000;

/// Minimum expected count per chi-square bin after merging.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// Minimum number of chi-square bins after merging.
pub const MIN_CHI_SQUARE_BINS: usize = 3;

/// Counts of observed distances `2..=d_max`, plus a tail bin for longer ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistanceHistogram {
    d_max: usize,
    /// `counts[i]` holds distance `i + 2`.
    counts: Vec<u64>,
    tail_count: u64,
    total: u64,
    tie_events: u64,
}

impl DistanceHistogram {
    pub fn new(d_max: usize) -> Result<Self> {
        if d_max < 2 {
            return Err(Error::config(format!("d_max must be at least 2, got {d_max}")));
        }
        Ok(DistanceHistogram {
            d_max,
            counts: vec![0; d_max - 1],
            tail_count: 0,
            total: 0,
            tie_events: 0,
        })
    }

    pub fn from_distances(d_max: usize, distances: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut hist = Self::new(d_max)?;
        for d in distances {
            hist.accumulate(d)?;
        }
        Ok(hist)
    }

    pub fn accumulate(&mut self, d: usize) -> Result<()> {
        if d < 2 {
            return Err(Error::usage(format!(
                "distance {d} below 2: adjacent peaks are impossible"
            )));
        }
        match self.counts.get_mut(d - 2) {
            Some(c) => *c += 1,
            None => self.tail_count += 1,
        }
        self.total += 1;
        Ok(())
    }

    pub fn add_tie_events(&mut self, ties: u64) {
        self.tie_events += ties;
    }

    /// Field-wise sum of two histograms with the same cutoff.
    pub fn merge(&self, other: &DistanceHistogram) -> Result<DistanceHistogram> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &DistanceHistogram) -> Result<()> {
        if self.d_max != other.d_max {
            return Err(Error::usage(format!(
                "cannot merge histograms with d_max {} and {}",
                self.d_max, other.d_max
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.tail_count += other.tail_count;
        self.total += other.total;
        self.tie_events += other.tie_events;
        Ok(())
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Count for distance `d`; zero outside `2..=d_max`.
    pub fn count(&self, d: usize) -> u64 {
        d.checked_sub(2).and_then(|i| self.counts.get(i)).copied().unwrap_or(0)
    }

    /// `(d, count)` for every in-range bin.
    pub fn bins(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (i + 2, c))
    }

    pub fn tail_count(&self) -> u64 {
        self.tail_count
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn tie_events(&self) -> u64 {
        self.tie_events
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Observed share of each distance given a preceding peak.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalPmf {
    /// `(d, share)` for `d` in `2..=d_max`.
    pub bins: Vec<(usize, f64)>,
    /// Share of distances beyond `d_max`.
    pub tail: f64,
}

impl EmpiricalPmf {
    pub fn get(&self, d: usize) -> f64 {
        d.checked_sub(2).and_then(|i| self.bins.get(i)).map_or(0.0, |&(_, p)| p)
    }

    pub fn sum(&self) -> f64 {
        self.bins.iter().map(|&(_, p)| p).sum::<f64>() + self.tail
    }
}

pub fn empirical_pmf(hist: &DistanceHistogram) -> Result<EmpiricalPmf> {
    if hist.is_empty() {
        return Err(Error::domain("empirical pmf of an empty histogram"));
    }
    let total = hist.total as f64;
    Ok(EmpiricalPmf {
        bins: hist.bins().map(|(d, c)| (d, c as f64 / total)).collect(),
        tail: hist.tail_count as f64 / total,
    })
}

/// Sample moments of the in-range distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub mean_std_error: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Normal-approximation standard error `s²·√(2/(M-1))`.
    pub variance_std_error: f64,
    /// In-range observations `M`.
    pub count: u64,
    /// Share of observations excluded because they fell in the tail bin.
    pub excluded_fraction: f64,
    /// `false` when the excluded share is too large for the moments to be trusted.
    pub reliable: bool,
}

pub fn empirical_moments(hist: &DistanceHistogram) -> Result<Moments> {
    let m: u64 = hist.counts.iter().sum();
    if m < 2 {
        return Err(Error::domain(format!(
            "moments need at least 2 in-range distances, got {m}"
        )));
    }
    let mf = m as f64;
    let mean = hist.bins().map(|(d, c)| d as f64 * c as f64).sum::<f64>() / mf;
    let ss: f64 = hist
        .bins()
        .map(|(d, c)| {
            let dev = d as f64 - mean;
            c as f64 * dev * dev
        })
        .sum();
    let variance = ss / (mf - 1.0);
    let excluded_fraction = hist.tail_count as f64 / hist.total as f64;
    Ok(Moments {
        mean,
        mean_std_error: (variance / mf).sqrt(),
        variance,
        variance_std_error: variance * (2.0 / (mf - 1.0)).sqrt(),
        count: m,
        excluded_fraction,
        reliable: excluded_fraction < MAX_RELIABLE_TAIL_FRACTION,
    })
}

/// One chi-square cell, possibly covering several merged distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareBin {
    pub d_low: usize,
    pub d_high: usize,
    pub observed: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    /// Observations inside the included distances.
    pub observations: u64,
    pub bins: Vec<ChiSquareBin>,
}

/// Pearson goodness-of-fit of the in-regime bins (`d < q`) against the
/// closed-form law renormalized over those bins.
///
/// Cells are merged from the right until every expected count is at least
/// [`MIN_EXPECTED_COUNT`]. Consecutive distances share innovations, so the
/// p-value is approximate.
pub fn chi_square_gof(hist: &DistanceHistogram, model: &AnalyticModel, q: usize) -> Result<ChiSquareResult> {
    if hist.total < MIN_CHI_SQUARE_TOTAL {
        return Err(Error::domain(format!(
            "chi-square needs at least {MIN_CHI_SQUARE_TOTAL} observations, got {}",
            hist.total
        )));
    }
    let included: Vec<(usize, u64)> = hist
        .bins()
        .filter(|&(d, _)| AnalyticModel::in_asymptotic_regime(d, q))
        .collect();
    let observations: u64 = included.iter().map(|&(_, c)| c).sum();
    let mass: f64 = included.iter().map(|&(d, _)| model.pmf(d)).sum();
    if observations == 0 || mass <= 0.0 {
        return Err(Error::domain(format!("no in-regime observations for q = {q}")));
    }
    let scale = observations as f64 / mass;
    // Sweep from the largest distance, closing a cell once it expects enough.
    let mut bins: Vec<ChiSquareBin> = Vec::new();
    let mut open: Option<ChiSquareBin> = None;
    for &(d, c) in included.iter().rev() {
        let cell = open.get_or_insert(ChiSquareBin {
            d_low: d,
            d_high: d,
            observed: 0.0,
            expected: 0.0,
        });
        cell.d_low = d;
        cell.observed += c as f64;
        cell.expected += scale * model.pmf(d);
        if cell.expected >= MIN_EXPECTED_COUNT {
            bins.extend(open.take());
        }
    }
    if let Some(rest) = open {
        match bins.last_mut() {
            Some(left) => {
                left.d_low = rest.d_low;
                left.observed += rest.observed;
                left.expected += rest.expected;
            }
            None => bins.push(rest),
        }
    }
    bins.reverse();
    if bins.len() < MIN_CHI_SQUARE_BINS || bins.iter().any(|b| b.expected < MIN_EXPECTED_COUNT) {
        return Err(Error::domain(format!(
            "chi-square needs at least {MIN_CHI_SQUARE_BINS} cells with expected count >= {MIN_EXPECTED_COUNT}, got {}",
            bins.len()
        )));
    }
    let statistic: f64 = bins
        .iter()
        .map(|b| {
            let diff = b.observed - b.expected;
            diff * diff / b.expected
        })
        .sum();
    let dof = (bins.len() - 1) as u32;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        observations,
        bins,
    })
}

/// Parameters and realized totals of the run behind a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub q: usize,
    /// Requested number of terms.
    pub n: u64,
    pub distribution: InnovationDistribution,
    pub seed: u64,
    pub streams: u32,
    pub d_max: usize,
    pub terms_per_stream: u64,
    /// Realized number of terms over all streams.
    pub terms: u64,
    pub peaks: u64,
    pub tie_events: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub d: usize,
    pub count: u64,
    pub empirical_pmf: f64,
    pub analytic_pmf: f64,
    pub abs_error: f64,
    /// `d < q`: the closed form is exact here.
    pub in_asymptotic_regime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    /// Distances strictly above this are in the tail.
    pub above: usize,
    pub count: u64,
    pub empirical_pmf: f64,
    pub analytic_pmf: f64,
}

/// Empirical law of one run set against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub metadata: RunMetadata,
    pub total: u64,
    pub rows: Vec<ComparisonRow>,
    pub tail: TailRow,
    pub moments: Moments,
    pub analytic_mean: f64,
    pub analytic_variance: f64,
    pub chi_square: Option<ChiSquareResult>,
    /// Why `chi_square` is absent, if it is.
    pub chi_square_skipped: Option<String>,
}

impl ComparisonReport {
    /// Largest absolute PMF error over in-regime bins with `d <= up_to`.
    pub fn max_in_regime_error(&self, up_to: usize) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.in_asymptotic_regime && r.d <= up_to)
            .map(|r| r.abs_error)
            .reduce(f64::max)
    }

    pub fn row(&self, d: usize) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.d == d)
    }
}

pub fn compare(hist: &DistanceHistogram, model: &AnalyticModel, metadata: RunMetadata) -> Result<ComparisonReport> {
    let pmf = empirical_pmf(hist)?;
    let moments = empirical_moments(hist)?;
    let rows = hist
        .bins()
        .map(|(d, count)| {
            let empirical = pmf.get(d);
            let analytic = model.pmf(d);
            ComparisonRow {
                d,
                count,
                empirical_pmf: empirical,
                analytic_pmf: analytic,
                abs_error: (empirical - analytic).abs(),
                in_asymptotic_regime: AnalyticModel::in_asymptotic_regime(d, metadata.q),
            }
        })
        .collect();
    let d_max = hist.d_max();
    let tail = TailRow {
        above: d_max,
        count: hist.tail_count(),
        empirical_pmf: pmf.tail,
        analytic_pmf: (d_max + 1) as f64 * 2f64.powi(-(d_max.min(i32::MAX as usize) as i32)),
    };
    let (chi_square, chi_square_skipped) = match chi_square_gof(hist, model, metadata.q) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ComparisonReport {
        metadata,
        total: hist.total(),
        rows,
        tail,
        moments,
        analytic_mean: analytic::mean(),
        analytic_variance: analytic::variance(),
        chi_square,
        chi_square_skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(d_max: usize, ds: &[usize]) -> DistanceHistogram {
        DistanceHistogram::from_distances(d_max, ds.iter().copied()).unwrap()
    }

    fn metadata(q: usize) -> RunMetadata {
        RunMetadata {
            q,
            n: 0,
            distribution: InnovationDistribution::StandardNormal,
            seed: 0,
            streams: 1,
            d_max: 64,
            terms_per_stream: 0,
            terms: 0,
            peaks: 0,
            tie_events: 0,
        }
    }

    #[test]
    fn accumulate_examples() {
        let h = hist(64, &[2]);
        assert_eq!((h.count(2), h.total()), (1, 1));
        let h = hist(4, &[9]);
        assert_eq!((h.tail_count(), h.total()), (1, 1));
        let h = hist(64, &[2, 2, 3]);
        assert_eq!((h.count(2), h.count(3), h.total()), (2, 1, 3));
        assert!(matches!(
            DistanceHistogram::new(64).unwrap().accumulate(1),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn merge_examples() {
        let a = hist(64, &[2]);
        let b = hist(64, &[2, 2, 3]);
        let empty = DistanceHistogram::new(64).unwrap();
        assert_eq!(a.merge(&empty).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
        let m = a.merge(&b).unwrap();
        assert_eq!((m.count(2), m.count(3), m.total()), (3, 1, 4));
        assert!(a.merge(&DistanceHistogram::new(8).unwrap()).is_err());
    }

    #[test]
    fn pmf_examples() {
        let p = empirical_pmf(&hist(64, &[2, 2, 3])).unwrap();
        assert!((p.get(2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.get(3) - 1.0 / 3.0).abs() < 1e-15);
        let p = empirical_pmf(&hist(64, &[5, 5, 5])).unwrap();
        assert_eq!(p.get(5), 1.0);
        assert!(empirical_pmf(&DistanceHistogram::new(64).unwrap()).is_err());
        let p = empirical_pmf(&hist(3, &[2, 3, 7, 9, 2])).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_examples() {
        let m = empirical_moments(&hist(64, &[2, 2, 3, 9])).unwrap();
        assert_eq!(m.mean, 4.0);
        assert!((m.variance - 34.0 / 3.0).abs() < 1e-12);
        assert!(m.reliable);
        let m = empirical_moments(&hist(64, &[4, 4, 4])).unwrap();
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.variance_std_error, 0.0);
        assert!(empirical_moments(&hist(64, &[4])).is_err());
    }

    #[test]
    fn moments_exclude_tail() {
        let m = empirical_moments(&hist(4, &[2, 4, 9])).unwrap();
        assert_eq!(m.count, 2);
        assert_eq!(m.mean, 3.0);
        assert!((m.excluded_fraction - 1.0 / 3.0).abs() < 1e-15);
        assert!(!m.reliable);
    }

    #[test]
    fn chi_square_of_exact_counts_is_zero() {
        // pmf(2..=4) = 1/4, 1/4, 3/16 -> counts 4:4:3; q = 5 includes d in 2..=4.
        let mut h = DistanceHistogram::new(64).unwrap();
        for (d, c) in [(2, 4000), (3, 4000), (4, 3000), (7, 500)] {
            for _ in 0..c {
                h.accumulate(d).unwrap();
            }
        }
        let model = AnalyticModel::new(64).unwrap();
        let r = chi_square_gof(&h, &model, 5).unwrap();
        assert!(r.statistic.abs() < 1e-20);
        assert_eq!(r.dof, 2);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.observations, 11_000);
    }

    #[test]
    fn chi_square_merges_sparse_right_bins() {
        let model = AnalyticModel::new(64).unwrap();
        // Expected shares for q = 30 put < 5 counts far out at 2·10^4 observations.
        let mut ds = Vec::new();
        for d in 2..30usize {
            let c = (20_000.0 * model.pmf(d)).round() as usize;
            ds.extend(std::iter::repeat_n(d, c));
        }
        let h = hist(64, &ds);
        let r = chi_square_gof(&h, &model, 30).unwrap();
        assert!(r.bins.iter().all(|b| b.expected >= MIN_EXPECTED_COUNT));
        let last = r.bins.last().unwrap();
        assert!(last.d_high > last.d_low);
        assert_eq!(last.d_high, 29);
        assert!(r.p_value > 0.5, "{r:?}");
    }

    #[test]
    fn chi_square_domain_errors() {
        let model = AnalyticModel::new(64).unwrap();
        let small = hist(64, &[2, 3, 4]);
        assert!(chi_square_gof(&small, &model, 20).is_err());
        let mut ds = vec![2usize; 6000];
        ds.extend(vec![3usize; 6000]);
        // q = 3 admits only d = 2: one cell.
        assert!(chi_square_gof(&hist(64, &ds), &model, 3).is_err());
        // q = 1 admits nothing.
        assert!(chi_square_gof(&hist(64, &ds), &model, 1).is_err());
    }

    #[test]
    fn compare_flags_regime() {
        let model = AnalyticModel::new(64).unwrap();
        let h = hist(64, &[2, 2, 3, 4, 5, 6, 2, 3]);
        let report = compare(&h, &model, metadata(1)).unwrap();
        assert!(report.rows.iter().all(|r| !r.in_asymptotic_regime));
        assert!(report.chi_square.is_none());
        assert!(report.chi_square_skipped.is_some());
        assert_eq!(report.moments.count, 8);
        assert_eq!(report.max_in_regime_error(10), None);

        let report = compare(&h, &model, metadata(4)).unwrap();
        let flagged: Vec<usize> = report
            .rows
            .iter()
            .filter(|r| r.in_asymptotic_regime)
            .map(|r| r.d)
            .collect();
        assert_eq!(flagged, vec![2, 3]);
        assert_eq!(report.row(2).unwrap().count, 3);
        assert!((report.row(2).unwrap().abs_error - (3.0 / 8.0 - 0.25)).abs() < 1e-15);
        let sum: f64 = report.rows.iter().map(|r| r.empirical_pmf).sum::<f64>() + report.tail.empirical_pmf;
        assert!((sum - 1.0).abs() < 1e-12);
    }

    fn arb_hist() -> impl Strategy<Value = DistanceHistogram> {
        (prop::collection::vec(2usize..20, 0..60), 0u64..5).prop_map(|(ds, ties)| {
            let mut h = hist(12, &ds);
            h.add_tie_events(ties);
            h
        })
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in arb_hist(), b in arb_hist(), c in arb_hist()) {
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(
                a.merge(&b).unwrap().merge(&c).unwrap(),
                a.merge(&b.merge(&c).unwrap()).unwrap()
            );
            let m = a.merge(&b).unwrap();
            prop_assert_eq!(m.total(), m.bins().map(|(_, c)| c).sum::<u64>() + m.tail_count());
            prop_assert_eq!(m.tie_events(), a.tie_events() + b.tie_events());
        }

        #[test]
        fn pmf_sums_to_one(h in arb_hist()) {
            prop_assume!(!h.is_empty());
            prop_assert!((empirical_pmf(&h).unwrap().sum() - 1.0).abs() < 1e-12);
        }
    }
}
