//! Worst-case min/max envelope tables over historical windows and the
//! admissibility test for candidate nodes.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::escape::{escape_times, EscapeParams};
use crate::market_data::{
    variation_profile, windows, DiscountedChart, DiscretizationParams, TimeGrid, Window,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: PartialOrd + Copy> Bounds<T> {
    fn seed(v: T) -> Self {
        Bounds { lower: v, upper: v }
    }

    fn absorb(&mut self, v: T) {
        if v < self.lower {
            self.lower = v;
        }
        if v > self.upper {
            self.upper = v;
        }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Per-window precomputation shared by table building and the analysis ops:
/// escape sample indices, the variation profile, and the relative normed
/// change of the real-valued chart pair at each escape.
#[derive(Debug, Clone)]
pub struct WindowProfile {
    pub escape_idx: Vec<usize>,
    pub w_profile: Vec<u32>,
    pub x_norm: Vec<f64>,
}

impl WindowProfile {
    /// Number of escapes N.
    pub fn n(&self) -> usize {
        self.escape_idx.len() - 1
    }

    /// N(·, ρ): escapes having occurred within the first `rho` steps.
    pub fn n_at(&self, rho_steps: usize) -> u32 {
        self.escape_idx
            .iter()
            .rposition(|&t| t <= rho_steps)
            .unwrap_or(0) as u32
    }
}

pub fn window_profile(window: &Window, params: &EscapeParams) -> WindowProfile {
    let times = escape_times(window, params);
    let w_profile = variation_profile(window);
    let norm0 = (window.x1[0] * window.x1[0] + window.x2[0] * window.x2[0]).sqrt();
    let x_norm = times
        .indices
        .iter()
        .map(|&t| {
            let dx1 = window.x1[t] - window.x1[0];
            let dx2 = window.x2[t] - window.x2[0];
            (dx1 * dx1 + dx2 * dx2).sqrt() / norm0
        })
        .collect();
    WindowProfile {
        escape_idx: times.indices,
        w_profile,
        x_norm,
    }
}

/// All worst-case envelopes. Time values are in Δ steps throughout.
#[derive(Debug, Clone)]
pub struct PruningTables {
    /// Relative normed change band per rebalance index, 0..=i_star.
    pub x_norm: Vec<Bounds<f64>>,
    /// Escape-count band per elapsed time, 0..=m_t.
    pub n_of_t: Vec<Bounds<u32>>,
    /// Elapsed-time band per rebalance index.
    pub t_of_i: Vec<Bounds<u32>>,
    /// Variation band per elapsed time.
    pub w_of_t: Vec<Bounds<u32>>,
    /// Variation band per rebalance index.
    pub w_of_i: Vec<Bounds<u32>>,
    /// Escape-count band per attained variation value.
    pub n_of_w: BTreeMap<u32, Bounds<u32>>,
    /// Elapsed-time band per attained variation value.
    pub t_of_w: BTreeMap<u32, Bounds<u32>>,
    /// Largest end-of-window variation seen historically.
    pub w_star: u32,
    /// Largest escape count seen historically.
    pub i_star: u32,
    pub m_t: u32,
    /// Absolute slack added to the x_norm band, covering the gap between the
    /// real-valued chart (used to build the band) and grid-valued candidates.
    pub x_norm_slack: f64,
}

pub fn build_tables(
    chart: &DiscountedChart,
    grid: &TimeGrid,
    eparams: &EscapeParams,
    disc: &DiscretizationParams,
) -> Result<PruningTables> {
    eparams.validate()?;
    let ws = windows(chart, grid, disc)?;
    Ok(build_tables_from_windows(&ws, grid, eparams, disc))
}

pub fn build_tables_from_windows(
    ws: &[Window],
    grid: &TimeGrid,
    eparams: &EscapeParams,
    disc: &DiscretizationParams,
) -> PruningTables {
    let profiles: Vec<WindowProfile> = ws.iter().map(|w| window_profile(w, eparams)).collect();
    let m_t = grid.steps_per_window;
    let i_star = profiles.iter().map(|p| p.n()).max().unwrap_or(0);

    let mut n_of_t: Vec<Bounds<u32>> = Vec::with_capacity(m_t + 1);
    let mut w_of_t: Vec<Bounds<u32>> = Vec::with_capacity(m_t + 1);
    for rho in 0..=m_t {
        let mut nb = Bounds::seed(profiles[0].n_at(rho));
        let mut wb = Bounds::seed(profiles[0].w_profile[rho]);
        for p in &profiles[1..] {
            nb.absorb(p.n_at(rho));
            wb.absorb(p.w_profile[rho]);
        }
        n_of_t.push(nb);
        w_of_t.push(wb);
    }

    let mut x_norm: Vec<Bounds<f64>> = Vec::with_capacity(i_star + 1);
    let mut t_of_i: Vec<Bounds<u32>> = Vec::with_capacity(i_star + 1);
    let mut w_of_i: Vec<Bounds<u32>> = Vec::with_capacity(i_star + 1);
    for i in 0..=i_star {
        let mut xb: Option<Bounds<f64>> = None;
        let mut tb: Option<Bounds<u32>> = None;
        let mut wb: Option<Bounds<u32>> = None;
        for p in profiles.iter().filter(|p| p.n() >= i) {
            let t = p.escape_idx[i];
            let x = p.x_norm[i];
            let w = p.w_profile[t];
            match &mut xb {
                Some(b) => b.absorb(x),
                None => xb = Some(Bounds::seed(x)),
            }
            match &mut tb {
                Some(b) => b.absorb(t as u32),
                None => tb = Some(Bounds::seed(t as u32)),
            }
            match &mut wb {
                Some(b) => b.absorb(w),
                None => wb = Some(Bounds::seed(w)),
            }
        }
        // i <= i_star guarantees at least one window reaches depth i
        x_norm.push(xb.unwrap());
        t_of_i.push(tb.unwrap());
        w_of_i.push(wb.unwrap());
    }

    // Variation-indexed tables. A window can attain the same variation value
    // at several times; each attaining time contributes, so the band spans
    // every (count, time) consistent with that variation.
    let mut n_of_w: BTreeMap<u32, Bounds<u32>> = BTreeMap::new();
    let mut t_of_w: BTreeMap<u32, Bounds<u32>> = BTreeMap::new();
    for p in &profiles {
        for rho in 0..=m_t {
            let w = p.w_profile[rho];
            let n = p.n_at(rho);
            n_of_w
                .entry(w)
                .and_modify(|b| b.absorb(n))
                .or_insert_with(|| Bounds::seed(n));
            t_of_w
                .entry(w)
                .and_modify(|b| b.absorb(rho as u32))
                .or_insert_with(|| Bounds::seed(rho as u32));
        }
    }
    let w_star = profiles
        .iter()
        .map(|p| p.w_profile[m_t])
        .max()
        .unwrap_or(0);

    let x_norm_slack = 2.0 * (disc.dhat1_f * disc.dhat1_f + disc.dhat2_f * disc.dhat2_f).sqrt();

    PruningTables {
        x_norm,
        n_of_t,
        t_of_i,
        w_of_t,
        w_of_i,
        n_of_w,
        t_of_w,
        w_star,
        i_star: i_star as u32,
        m_t: m_t as u32,
        x_norm_slack,
    }
}

impl PruningTables {
    /// Variation-indexed lookup: exact hit, else the nearest attained value
    /// below; values beyond the historical maximum collapse to the zero band.
    fn w_lookup<'a>(
        &self,
        table: &'a BTreeMap<u32, Bounds<u32>>,
        w: u32,
    ) -> Option<Bounds<u32>> {
        if w > self.w_star {
            return Some(Bounds { lower: 0, upper: 0 });
        }
        table.range(..=w).next_back().map(|(_, b)| *b)
    }
}

/// Candidate node state: grid levels, rebalance index, elapsed steps and
/// accumulated variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub k1: i64,
    pub k2: i64,
    pub i: u32,
    pub t_steps: u32,
    pub w: u32,
}

/// The first constraint a rejected candidate failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// T beyond the window horizon.
    Horizon,
    /// Rebalance index deeper than any historical window reached.
    UnseenRebalanceDepth,
    /// Variation value with no historical precedent at or below it.
    UnseenVariation,
    NormBand,
    CountByTime,
    CountByVariation,
    TimeByCount,
    TimeByVariation,
    VariationByCount,
    VariationByTime,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Violation::Horizon => "horizon",
            Violation::UnseenRebalanceDepth => "unseen rebalance depth",
            Violation::UnseenVariation => "unseen variation",
            Violation::NormBand => "relative normed change outside band",
            Violation::CountByTime => "rebalance count outside band at this time",
            Violation::CountByVariation => "rebalance count outside band at this variation",
            Violation::TimeByCount => "elapsed time outside band at this rebalance count",
            Violation::TimeByVariation => "elapsed time outside band at this variation",
            Violation::VariationByCount => "variation outside band at this rebalance count",
            Violation::VariationByTime => "variation outside band at this time",
        };
        f.write_str(s)
    }
}

/// Tests a candidate against every constraint; `root` is the graph's initial
/// grid point, against which the normed-change band is measured. Returns the
/// first violated constraint.
pub fn admissible(
    root: (i64, i64),
    cand: &Candidate,
    tables: &PruningTables,
    disc: &DiscretizationParams,
) -> std::result::Result<(), Violation> {
    if cand.t_steps > tables.m_t {
        return Err(Violation::Horizon);
    }
    if cand.i > tables.i_star {
        return Err(Violation::UnseenRebalanceDepth);
    }
    let i = cand.i as usize;
    let t = cand.t_steps as usize;

    // (1) relative normed change from the root
    let dx1 = (cand.k1 - root.0) as f64 * disc.dhat1_f;
    let dx2 = (cand.k2 - root.1) as f64 * disc.dhat2_f;
    let root_norm = {
        let x1 = root.0 as f64 * disc.dhat1_f;
        let x2 = root.1 as f64 * disc.dhat2_f;
        (x1 * x1 + x2 * x2).sqrt()
    };
    let rel = (dx1 * dx1 + dx2 * dx2).sqrt() / root_norm;
    let slack = tables.x_norm_slack / root_norm + 1e-12;
    let band = &tables.x_norm[i];
    if rel < band.lower - slack || rel > band.upper + slack {
        return Err(Violation::NormBand);
    }

    // (2) rebalance count vs elapsed time
    if !tables.n_of_t[t].contains(cand.i) {
        return Err(Violation::CountByTime);
    }
    // (3) rebalance count vs variation
    match tables.w_lookup(&tables.n_of_w, cand.w) {
        Some(b) if b.contains(cand.i) => {}
        Some(_) => return Err(Violation::CountByVariation),
        None => return Err(Violation::UnseenVariation),
    }
    // (4) elapsed time vs rebalance count
    if !tables.t_of_i[i].contains(cand.t_steps) {
        return Err(Violation::TimeByCount);
    }
    // (5) elapsed time vs variation
    match tables.w_lookup(&tables.t_of_w, cand.w) {
        Some(b) if b.contains(cand.t_steps) => {}
        Some(_) => return Err(Violation::TimeByVariation),
        None => return Err(Violation::UnseenVariation),
    }
    // (6) variation vs rebalance count
    if !tables.w_of_i[i].contains(cand.w) {
        return Err(Violation::VariationByCount);
    }
    // (7) variation vs elapsed time
    if !tables.w_of_t[t].contains(cand.w) {
        return Err(Violation::VariationByTime);
    }
    Ok(())
}

/// Dumps every table as `index,lower,upper` CSVs into `dir`.
pub fn write_tables_csv(tables: &PruningTables, dir: &Path, provenance: Option<&str>) -> Result<()> {
    fn dump<L: std::fmt::Display, U: std::fmt::Display>(
        path: std::path::PathBuf,
        provenance: Option<&str>,
        rows: impl Iterator<Item = (String, L, U)>,
    ) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        if let Some(p) = provenance {
            writeln!(file, "# {p}")?;
        }
        writeln!(file, "index,lower,upper")?;
        for (idx, lo, hi) in rows {
            writeln!(file, "{idx},{lo},{hi}")?;
        }
        Ok(())
    }
    dump(
        dir.join("x_norm.csv"),
        provenance,
        tables
            .x_norm
            .iter()
            .enumerate()
            .map(|(i, b)| (i.to_string(), b.lower, b.upper)),
    )?;
    for (name, table) in [
        ("n_of_t.csv", &tables.n_of_t),
        ("t_of_i.csv", &tables.t_of_i),
        ("w_of_t.csv", &tables.w_of_t),
        ("w_of_i.csv", &tables.w_of_i),
    ] {
        dump(
            dir.join(name),
            provenance,
            table
                .iter()
                .enumerate()
                .map(|(i, b)| (i.to_string(), b.lower, b.upper)),
        )?;
    }
    for (name, table) in [("n_of_w.csv", &tables.n_of_w), ("t_of_w.csv", &tables.t_of_w)] {
        dump(
            dir.join(name),
            provenance,
            table.iter().map(|(w, b)| (w.to_string(), b.lower, b.upper)),
        )?;
    }
    Ok(())
}
