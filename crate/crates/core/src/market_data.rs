//! Chart ingestion, discounting, grid discretization, windowing and
//! synthetic geometric-Brownian-motion generation.

use std::io::Write as _;
use std::path::Path;

use num::rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rational;

/// Uniform sampling grid: smallest resolution Δ (minutes) and the number of
/// steps M_T per window, so one window spans M_T·Δ minutes over M_T+1 samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub delta_minutes: i64,
    pub steps_per_window: usize,
}

impl TimeGrid {
    pub fn new(delta_minutes: i64, steps_per_window: usize) -> Result<Self> {
        if delta_minutes <= 0 {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if steps_per_window == 0 {
            return Err(Error::InvalidParameter(
                "steps_per_window must be at least 1".into(),
            ));
        }
        Ok(TimeGrid {
            delta_minutes,
            steps_per_window,
        })
    }

    /// Samples per window (M_T + 1).
    pub fn window_samples(&self) -> usize {
        self.steps_per_window + 1
    }
}

/// Grid steps δ̂¹, δ̂² kept as exact rationals; the f64 mirrors are for
/// envelope/escape arithmetic.
#[derive(Debug, Clone)]
pub struct DiscretizationParams {
    pub dhat1: BigRational,
    pub dhat2: BigRational,
    pub dhat1_f: f64,
    pub dhat2_f: f64,
}

impl DiscretizationParams {
    /// Steps given as decimal strings, e.g. `"0.01"`, parsed exactly.
    pub fn new(dhat1: &str, dhat2: &str) -> Result<Self> {
        let d1 = rational::parse_decimal(dhat1)
            .ok_or_else(|| Error::InvalidParameter(format!("bad grid step `{dhat1}`")))?;
        let d2 = rational::parse_decimal(dhat2)
            .ok_or_else(|| Error::InvalidParameter(format!("bad grid step `{dhat2}`")))?;
        if d1 <= BigRational::default() || d2 <= BigRational::default() {
            return Err(Error::InvalidParameter("grid steps must be positive".into()));
        }
        let dhat1_f = rational::to_f64(&d1);
        let dhat2_f = rational::to_f64(&d2);
        Ok(DiscretizationParams {
            dhat1: d1,
            dhat2: d2,
            dhat1_f,
            dhat2_f,
        })
    }

    /// Convenience constructor going through the shortest decimal form of the
    /// floats (so 0.01 really means 1/100, not its binary approximation).
    pub fn from_f64(dhat1: f64, dhat2: f64) -> Result<Self> {
        Self::new(&format!("{dhat1}"), &format!("{dhat2}"))
    }
}

/// Column mapping for chart CSV input.
#[derive(Debug, Clone)]
pub struct ChartSchema {
    pub timestamp: String,
    pub s0: String,
    pub s1: String,
    pub s2: String,
    /// When true, timestamps are ISO-8601 datetimes; otherwise integer minutes.
    pub iso_timestamps: bool,
}

impl Default for ChartSchema {
    fn default() -> Self {
        ChartSchema {
            timestamp: "timestamp".into(),
            s0: "s0".into(),
            s1: "s1".into(),
            s2: "s2".into(),
            iso_timestamps: false,
        }
    }
}

/// Raw three-asset price series on the uniform grid; prices are exact
/// rationals parsed from the source text.
#[derive(Debug, Clone)]
pub struct UndiscountedChart {
    /// Minutes; ascending, uniformly spaced.
    pub timestamps: Vec<i64>,
    pub prices: [Vec<BigRational>; 3],
}

impl UndiscountedChart {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Two discounted series x^j = s^j / s^numeraire, exact.
#[derive(Debug, Clone)]
pub struct DiscountedChart {
    pub timestamps: Vec<i64>,
    pub x1: Vec<BigRational>,
    pub x2: Vec<BigRational>,
}

impl DiscountedChart {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// One window of M_T+1 samples: the real-valued discounted pair plus its
/// integer grid levels.
#[derive(Debug, Clone)]
pub struct Window {
    /// Timestamp (minutes) of the first sample.
    pub t0: i64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub k1: Vec<i64>,
    pub k2: Vec<i64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.k1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.is_empty()
    }
}

fn parse_timestamp(raw: &str, iso: bool, row: usize) -> Result<i64> {
    let raw = raw.trim();
    if iso {
        let dt = chrono::DateTime::parse_from_rfc3339(raw)
            .map(|d| d.timestamp())
            .or_else(|_| {
                chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
                    .or_else(|_| chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
                    .or_else(|_| chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M"))
                    .or_else(|_| chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M"))
                    .map(|d| d.and_utc().timestamp())
            })
            .map_err(|_| Error::BadValue {
                row,
                value: raw.into(),
                reason: "unparseable ISO-8601 timestamp".into(),
            })?;
        Ok(dt / 60)
    } else {
        raw.parse().map_err(|_| Error::BadValue {
            row,
            value: raw.into(),
            reason: "timestamp is not an integer minute count".into(),
        })
    }
}

/// Loads a `timestamp,s0,s1,s2` CSV, validating positivity and the uniform
/// time grid. Rows are sorted ascending by timestamp before validation.
pub fn load_chart(path: &Path, schema: &ChartSchema, grid: &TimeGrid) -> Result<UndiscountedChart> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_col = col(&schema.timestamp)?;
    let price_cols = [col(&schema.s0)?, col(&schema.s1)?, col(&schema.s2)?];
    let price_names = [&schema.s0, &schema.s1, &schema.s2];

    let mut rows: Vec<(i64, [BigRational; 3])> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let ts = parse_timestamp(&record[ts_col], schema.iso_timestamps, row)?;
        let mut prices: [BigRational; 3] = Default::default();
        for (slot, (&c, name)) in price_cols.iter().zip(price_names).enumerate() {
            let raw = &record[c];
            let v = rational::parse_decimal(raw).ok_or_else(|| Error::BadValue {
                row,
                value: raw.into(),
                reason: "unparseable price".into(),
            })?;
            if v <= BigRational::default() {
                return Err(if slot == 0 {
                    Error::NonPositiveNumeraire(row)
                } else {
                    Error::NonPositivePrice {
                        row,
                        column: name.clone(),
                    }
                });
            }
            prices[slot] = v;
        }
        rows.push((ts, prices));
    }
    rows.sort_by_key(|(ts, _)| *ts);
    for (idx, pair) in rows.windows(2).enumerate() {
        if pair[1].0 - pair[0].0 != grid.delta_minutes {
            return Err(Error::TimeGridGap(idx + 1));
        }
    }
    let mut chart = UndiscountedChart {
        timestamps: Vec::with_capacity(rows.len()),
        prices: Default::default(),
    };
    for (ts, prices) in rows {
        chart.timestamps.push(ts);
        for (slot, p) in prices.into_iter().enumerate() {
            chart.prices[slot].push(p);
        }
    }
    Ok(chart)
}

/// x^j = s^j / s^numeraire for the two non-numeraire assets, kept in their
/// original index order.
pub fn discount(chart: &UndiscountedChart, numeraire: usize) -> Result<DiscountedChart> {
    if numeraire > 2 {
        return Err(Error::InvalidParameter(format!(
            "numeraire index {numeraire} out of range"
        )));
    }
    for (row, v) in chart.prices[numeraire].iter().enumerate() {
        if v == &BigRational::default() {
            return Err(Error::NonPositiveNumeraire(row));
        }
    }
    let others: Vec<usize> = (0..3).filter(|&j| j != numeraire).collect();
    let ratio = |j: usize| -> Vec<BigRational> {
        chart.prices[j]
            .iter()
            .zip(&chart.prices[numeraire])
            .map(|(s, s0)| s / s0)
            .collect()
    };
    Ok(DiscountedChart {
        timestamps: chart.timestamps.clone(),
        x1: ratio(others[0]),
        x2: ratio(others[1]),
    })
}

/// Chops the chart into the maximal set of disjoint windows of M_T+1 samples,
/// aligned from the most recent sample backward; a short remainder at the old
/// end is discarded. Windows are returned in chronological order.
pub fn windows(
    chart: &DiscountedChart,
    grid: &TimeGrid,
    disc: &DiscretizationParams,
) -> Result<Vec<Window>> {
    let m = grid.window_samples();
    let n = chart.len();
    if n < m {
        return Err(Error::InsufficientData { needed: m, got: n });
    }
    let count = n / m;
    let mut out = Vec::with_capacity(count);
    for wi in (0..count).rev() {
        let end = n - wi * m;
        let start = end - m;
        let mut window = Window {
            t0: chart.timestamps[start],
            x1: Vec::with_capacity(m),
            x2: Vec::with_capacity(m),
            k1: Vec::with_capacity(m),
            k2: Vec::with_capacity(m),
        };
        for idx in start..end {
            window.x1.push(rational::to_f64(&chart.x1[idx]));
            window.x2.push(rational::to_f64(&chart.x2[idx]));
            window.k1.push(rational::round_to_grid(&chart.x1[idx], &disc.dhat1));
            window.k2.push(rational::round_to_grid(&chart.x2[idx], &disc.dhat2));
        }
        out.push(window);
    }
    Ok(out)
}

/// Accumulated variation w(t) at sample step `v`: the running sum of absolute
/// grid moves of both assets over the first `v` steps.
pub fn variation(window: &Window, v: usize) -> Result<u32> {
    if v >= window.len() {
        return Err(Error::InvalidParameter(format!(
            "step {v} outside window of {} samples",
            window.len()
        )));
    }
    Ok(segment_variation(window, 0, v))
}

/// Variation accumulated over the sample range [from, to].
pub fn segment_variation(window: &Window, from: usize, to: usize) -> u32 {
    let mut w = 0u32;
    for n in from..to {
        w += window.k1[n + 1].abs_diff(window.k1[n]) as u32
            + window.k2[n + 1].abs_diff(window.k2[n]) as u32;
    }
    w
}

/// w(t) at every sample step of the window.
pub fn variation_profile(window: &Window) -> Vec<u32> {
    let mut out = Vec::with_capacity(window.len());
    let mut w = 0u32;
    out.push(0);
    for n in 0..window.len() - 1 {
        w += window.k1[n + 1].abs_diff(window.k1[n]) as u32
            + window.k2[n + 1].abs_diff(window.k2[n]) as u32;
        out.push(w);
    }
    out
}

#[derive(Debug, Clone)]
pub struct GbmParams {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    /// Initial prices (numeraire, asset 1, asset 2).
    pub s0: [f64; 3],
    pub days: usize,
    pub seed: u64,
}

/// Two independent discrete GBM paths sampled once per Δ with exact
/// log-normal stepping; the numeraire is held constant. One "day" is one
/// window worth of samples, so the output chops into exactly `days` windows.
pub fn simulate_gbm(params: &GbmParams, grid: &TimeGrid) -> Result<UndiscountedChart> {
    if params.sigma1 < 0.0 || params.sigma2 < 0.0 {
        return Err(Error::InvalidParameter("volatilities must be >= 0".into()));
    }
    if params.days == 0 {
        return Err(Error::InvalidParameter("days must be >= 1".into()));
    }
    if params.s0.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidParameter("initial prices must be positive".into()));
    }
    let n = params.days * grid.window_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut s1 = params.s0[1];
    let mut s2 = params.s0[2];
    let mut chart = UndiscountedChart {
        timestamps: Vec::with_capacity(n),
        prices: Default::default(),
    };
    let rat = |v: f64| rational::from_f64(v).expect("finite price");
    for idx in 0..n {
        // most recent sample sits at t = 0
        chart
            .timestamps
            .push((idx as i64 - (n as i64 - 1)) * grid.delta_minutes);
        chart.prices[0].push(rat(params.s0[0]));
        chart.prices[1].push(rat(s1));
        chart.prices[2].push(rat(s2));
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        s1 *= (params.mu1 - params.sigma1 * params.sigma1 / 2.0 + params.sigma1 * z1).exp();
        s2 *= (params.mu2 - params.sigma2 * params.sigma2 / 2.0 + params.sigma2 * z2).exp();
    }
    Ok(chart)
}

/// Writes a chart as `timestamp,s0,s1,s2` (decimal text, shortest roundtrip
/// form of the f64 value). `provenance` becomes a leading `#` comment line.
pub fn write_chart_csv(
    chart: &UndiscountedChart,
    path: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(file, "# {p}")?;
    }
    writeln!(file, "timestamp,s0,s1,s2")?;
    for idx in 0..chart.len() {
        writeln!(
            file,
            "{},{},{},{}",
            chart.timestamps[idx],
            rational::to_f64(&chart.prices[0][idx]),
            rational::to_f64(&chart.prices[1][idx]),
            rational::to_f64(&chart.prices[2][idx]),
        )?;
    }
    Ok(())
}

/// Dumps one window as `t,k1,k2,w` rows.
pub fn write_window_csv(
    window: &Window,
    grid: &TimeGrid,
    path: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(file, "# {p}")?;
    }
    writeln!(file, "t,k1,k2,w")?;
    let profile = variation_profile(window);
    for v in 0..window.len() {
        writeln!(
            file,
            "{},{},{},{}",
            window.t0 + v as i64 * grid.delta_minutes,
            window.k1[v],
            window.k2[v],
            profile[v],
        )?;
    }
    Ok(())
}
