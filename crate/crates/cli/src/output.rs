//! CSV and JSON writers. CSV uses a header line, `,` separators, `.` decimals
//! and newline-terminated rows; JSON documents are single objects with
//! snake_case keys.

use std::io::{self, Write};

use masim_core::analytic::{self, OracleEstimate, PmfRow};
use masim_core::{AnalyticModel, ComparisonReport, DistanceHistogram, RunMetadata, SimulationOutcome};
use serde::Serialize;

pub fn json<W: Write, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

pub fn histogram_csv<W: Write>(out: &mut W, hist: &DistanceHistogram) -> io::Result<()> {
    writeln!(out, "d,count,tail")?;
    for (d, count) in hist.bins() {
        writeln!(out, "{d},{count},0")?;
    }
    writeln!(out, "{},{},1", hist.d_max() + 1, hist.tail_count())
}

pub fn pmf_csv<W: Write>(out: &mut W, rows: &[PmfRow]) -> io::Result<()> {
    writeln!(out, "d,pmf,cdf,pi")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.d, r.pmf.to_f64(), r.cdf.to_f64(), r.pi.to_f64())?;
    }
    Ok(())
}

pub fn report_csv<W: Write>(out: &mut W, report: &ComparisonReport) -> io::Result<()> {
    writeln!(
        out,
        "d,count,empirical_pmf,analytic_pmf,abs_error,in_asymptotic_regime,tail"
    )?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},0",
            r.d,
            r.count,
            r.empirical_pmf,
            r.analytic_pmf,
            r.abs_error,
            u8::from(r.in_asymptotic_regime)
        )?;
    }
    let t = &report.tail;
    writeln!(
        out,
        "{},{},{},{},{},0,1",
        t.above + 1,
        t.count,
        t.empirical_pmf,
        t.analytic_pmf,
        (t.empirical_pmf - t.analytic_pmf).abs()
    )
}

#[derive(Debug, Serialize)]
struct HistogramBin {
    d: usize,
    count: u64,
}

/// `simulate --format json` output.
#[derive(Debug, Serialize)]
pub struct HistogramDocument {
    metadata: RunMetadata,
    d_max: usize,
    bins: Vec<HistogramBin>,
    tail_count: u64,
    total: u64,
    tie_events: u64,
}

impl HistogramDocument {
    pub fn new(outcome: &SimulationOutcome) -> Self {
        let h = &outcome.histogram;
        HistogramDocument {
            metadata: outcome.metadata(),
            d_max: h.d_max(),
            bins: h.bins().map(|(d, count)| HistogramBin { d, count }).collect(),
            tail_count: h.tail_count(),
            total: h.total(),
            tie_events: h.tie_events(),
        }
    }
}

/// `pmf --format json` output.
#[derive(Debug, Serialize)]
pub struct PmfDocument {
    d_max: usize,
    prob_max: f64,
    mean: f64,
    variance: f64,
    tail_mass: f64,
    rows: Vec<PmfRow>,
}

impl PmfDocument {
    pub fn new(model: &AnalyticModel) -> Self {
        PmfDocument {
            d_max: model.d_max,
            prob_max: analytic::prob_max().to_f64(),
            mean: analytic::mean(),
            variance: analytic::variance(),
            tail_mass: model.tail_mass().to_f64(),
            rows: model.table(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MonteCarloCell {
    pub q: usize,
    pub samples: u64,
    pub hits: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub analytic_pmf: f64,
    /// `d < q`.
    pub in_asymptotic_regime: bool,
}

#[derive(Debug, Serialize)]
pub struct OracleRow {
    pub d: usize,
    pub valley_pattern_count: u64,
    pub expected: u64,
    #[serde(rename = "match")]
    pub matches: bool,
    pub monte_carlo: Option<MonteCarloCell>,
}

impl OracleRow {
    pub fn new(d: usize, count: u64, estimate: Option<OracleEstimate>) -> Self {
        let expected = (d - 1) as u64;
        OracleRow {
            d,
            valley_pattern_count: count,
            expected,
            matches: count == expected,
            monte_carlo: estimate.map(|e| MonteCarloCell {
                q: e.q,
                samples: e.samples,
                hits: e.hits,
                estimate: e.estimate,
                std_error: e.std_error,
                analytic_pmf: analytic::pmf_f64(d),
                in_asymptotic_regime: AnalyticModel::in_asymptotic_regime(d, e.q),
            }),
        }
    }
}

/// `oracle --format json` output.
#[derive(Debug, Serialize)]
pub struct OracleDocument<'a> {
    d_max: u64,
    mc_samples: Option<u64>,
    seed: u64,
    rows: &'a [OracleRow],
}

impl<'a> OracleDocument<'a> {
    pub fn new(d_max: u64, mc_samples: Option<u64>, seed: u64, rows: &'a [OracleRow]) -> Self {
        OracleDocument {
            d_max,
            mc_samples,
            seed,
            rows,
        }
    }
}

pub fn oracle_csv<W: Write>(out: &mut W, rows: &[OracleRow]) -> io::Result<()> {
    writeln!(
        out,
        "d,valley_pattern_count,expected,match,mc_q,mc_estimate,mc_std_error,analytic_pmf"
    )?;
    for r in rows {
        write!(out, "{},{},{},{},", r.d, r.valley_pattern_count, r.expected, r.matches)?;
        match &r.monte_carlo {
            Some(mc) => writeln!(out, "{},{},{},{}", mc.q, mc.estimate, mc.std_error, mc.analytic_pmf)?,
            None => writeln!(out, ",,,")?,
        }
    }
    Ok(())
}
