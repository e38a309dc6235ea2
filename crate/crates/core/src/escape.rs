//! Threshold-escape detection on windows and aggregation of the empirical
//! increment set with its 2-D convex hull.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry;
use crate::market_data::{segment_variation, windows, DiscountedChart, DiscretizationParams, TimeGrid, Window};

/// Escape threshold models. A triggers on an absolute move of x¹ or a
/// relative move of x²; B triggers on the larger of the two relative moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EscapeParams {
    ModelA { delta0: f64, delta1: f64 },
    ModelB { delta: f64 },
}

impl EscapeParams {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            EscapeParams::ModelA { delta0, delta1 } => *delta0 > 0.0 && *delta1 > 0.0,
            EscapeParams::ModelB { delta } => *delta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("escape thresholds must be positive".into()))
        }
    }

    /// Escape condition between the anchor sample `a` and candidate `t`.
    /// A zero denominator makes the relative branch unsatisfiable.
    fn triggered(&self, window: &Window, a: usize, t: usize) -> bool {
        match *self {
            EscapeParams::ModelA { delta0, delta1 } => {
                (window.x1[t] - window.x1[a]).abs() >= delta0 || {
                    let denom = window.x2[a].abs();
                    denom != 0.0 && (window.x2[t] - window.x2[a]).abs() / denom >= delta1
                }
            }
            EscapeParams::ModelB { delta } => {
                let r1 = {
                    let denom = window.x1[a].abs();
                    denom != 0.0 && (window.x1[t] - window.x1[a]).abs() / denom >= delta
                };
                let r2 = {
                    let denom = window.x2[a].abs();
                    denom != 0.0 && (window.x2[t] - window.x2[a]).abs() / denom >= delta
                };
                r1 || r2
            }
        }
    }
}

/// Escape sample indices within a window; `indices[0]` is always 0 (the
/// window start) and each later entry is the minimal index at which the
/// escape condition holds against the previous entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscapeTimes {
    pub indices: Vec<usize>,
}

impl EscapeTimes {
    /// Number of escapes N (the anchor at index 0 is not an escape).
    pub fn count(&self) -> usize {
        self.indices.len() - 1
    }
}

pub fn escape_times(window: &Window, params: &EscapeParams) -> EscapeTimes {
    let mut indices = vec![0usize];
    let mut anchor = 0usize;
    let mut t = 1usize;
    while t < window.len() {
        if params.triggered(window, anchor, t) {
            indices.push(t);
            anchor = t;
        }
        t += 1;
    }
    EscapeTimes { indices }
}

/// One observed transition between consecutive escapes: grid moves (m1, m2),
/// elapsed steps q and variation increment eta. The unit third coordinate of
/// the 5-tuple (the rebalance-count increment) is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmpiricalIncrement {
    pub m1: i64,
    pub m2: i64,
    pub q: u32,
    pub eta: u32,
}

impl EmpiricalIncrement {
    /// Emitted for windows with no escape at all.
    pub const SENTINEL: EmpiricalIncrement = EmpiricalIncrement {
        m1: 0,
        m2: 0,
        q: 0,
        eta: 0,
    };
}

/// Deduplicated increments plus occurrence counts for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalSet {
    pub increments: Vec<EmpiricalIncrement>,
    pub counts: BTreeMap<EmpiricalIncrement, u32>,
}

impl EmpiricalSet {
    pub fn from_increments(list: impl IntoIterator<Item = EmpiricalIncrement>) -> Self {
        let mut counts: BTreeMap<EmpiricalIncrement, u32> = BTreeMap::new();
        for inc in list {
            *counts.entry(inc).or_insert(0) += 1;
        }
        EmpiricalSet {
            increments: counts.keys().copied().collect(),
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

/// The per-window increment list (in escape order); the sentinel when the
/// window had no escapes.
pub fn window_increments(window: &Window, times: &EscapeTimes) -> Vec<EmpiricalIncrement> {
    if times.count() == 0 {
        return vec![EmpiricalIncrement::SENTINEL];
    }
    times
        .indices
        .windows(2)
        .map(|pair| {
            let (u, v) = (pair[0], pair[1]);
            EmpiricalIncrement {
                m1: window.k1[v] - window.k1[u],
                m2: window.k2[v] - window.k2[u],
                q: (v - u) as u32,
                eta: segment_variation(window, u, v),
            }
        })
        .collect()
}

/// Union of the increments of every full window of the chart.
pub fn build_empirical_set(
    chart: &DiscountedChart,
    grid: &TimeGrid,
    params: &EscapeParams,
    disc: &DiscretizationParams,
) -> Result<EmpiricalSet> {
    params.validate()?;
    let ws = windows(chart, grid, disc)?;
    let mut all = Vec::new();
    for w in &ws {
        let times = escape_times(w, params);
        all.extend(window_increments(w, &times));
    }
    Ok(EmpiricalSet::from_increments(all))
}

/// Convex hull of the (m1, m2) projections, counter-clockwise.
pub fn hull2d(set: &EmpiricalSet) -> Vec<(i64, i64)> {
    let pts: Vec<(i64, i64)> = set.increments.iter().map(|inc| (inc.m1, inc.m2)).collect();
    geometry::convex_hull(&pts)
}

pub fn write_ne_csv(set: &EmpiricalSet, path: &Path, provenance: Option<&str>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(file, "# {p}")?;
    }
    writeln!(file, "m1,m2,one,q,eta,count")?;
    for (inc, count) in &set.counts {
        writeln!(file, "{},{},1,{},{},{}", inc.m1, inc.m2, inc.q, inc.eta, count)?;
    }
    Ok(())
}

pub fn write_hull_csv(set: &EmpiricalSet, path: &Path, provenance: Option<&str>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(file, "# {p}")?;
    }
    writeln!(file, "m1,m2")?;
    for (m1, m2) in hull2d(set) {
        writeln!(file, "{m1},{m2}")?;
    }
    Ok(())
}
