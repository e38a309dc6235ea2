//! Model diagnostics: simulated profit-and-loss of the computed hedges,
//! escape-count calibration sweeps, chart-to-model matching, and cone-crossing
//! counts with the associated price-bound inequality.

use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::escape::{
    escape_times, window_increments, EmpiricalIncrement, EmpiricalSet, EscapeParams,
};
use crate::graph::{sample_trajectory, TrajectoryGraph};
use crate::market_data::{windows, DiscountedChart, DiscretizationParams, TimeGrid, Window};
use crate::superhedge::{hedge_trace, price, Direction, Payoff, PricingResult, Traded};

/// State machine tracking upcrossings of f2/f1 from below `alpha` to above
/// `beta`. One transition may complete at the same sample index that opened
/// it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConeTracker {
    count: u32,
    seeking_tau: bool,
    /// f2 at the last tau while seeking rho; f1 at rho while seeking tau.
    anchor: f64,
}

impl ConeTracker {
    pub(crate) fn new(f2_at_start: f64) -> Self {
        ConeTracker {
            count: 0,
            seeking_tau: false,
            anchor: f2_at_start,
        }
    }

    pub(crate) fn key(&self) -> (u32, bool, u64) {
        (self.count, self.seeking_tau, self.anchor.to_bits())
    }

    pub(crate) fn from_key(key: (u32, bool, u64)) -> Self {
        ConeTracker {
            count: key.0,
            seeking_tau: key.1,
            anchor: f64::from_bits(key.2),
        }
    }

    /// Feed one sample; fires as many transitions as the sample supports
    /// (at most one of each kind since alpha < beta).
    pub(crate) fn step(&mut self, f1: f64, f2: f64, alpha: f64, beta: f64) -> (bool, bool) {
        let mut rho_fired = false;
        let mut tau_fired = false;
        loop {
            if self.seeking_tau {
                if f2 / self.anchor >= beta {
                    self.count += 1;
                    self.seeking_tau = false;
                    self.anchor = f2;
                    tau_fired = true;
                } else {
                    break;
                }
            } else if f1 > 0.0 && self.anchor / f1 <= alpha {
                self.seeking_tau = true;
                self.anchor = f1;
                rho_fired = true;
            } else {
                break;
            }
            if rho_fired && tau_fired {
                break;
            }
        }
        (rho_fired, tau_fired)
    }

    pub(crate) fn count(&self) -> u32 {
        self.count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeCrossing {
    /// Completed upcrossings.
    pub count: u32,
    /// Sample indices where the ratio entered the lower cone.
    pub rhos: Vec<usize>,
    /// Sample indices of completed upcrossings; taus[0] = 0 is the start.
    pub taus: Vec<usize>,
}

fn crossings_core(f1: &[f64], f2: &[f64], alpha: f64, beta: f64) -> ConeCrossing {
    let mut tracker = ConeTracker::new(f2[0]);
    let mut rhos = Vec::new();
    let mut taus = vec![0usize];
    for j in 0..f1.len() {
        let (rho, tau) = tracker.step(f1[j], f2[j], alpha, beta);
        if rho {
            rhos.push(j);
        }
        if tau {
            taus.push(j);
        }
    }
    ConeCrossing {
        count: tracker.count(),
        rhos,
        taus,
    }
}

pub fn cone_crossings(f1: &[f64], f2: &[f64], alpha: f64, beta: f64) -> Result<ConeCrossing> {
    if !(0.0 < alpha && alpha < beta) {
        return Err(Error::InvalidParameter("need 0 < alpha < beta".into()));
    }
    if f1.len() != f2.len() || f1.is_empty() {
        return Err(Error::InvalidParameter(
            "series must be nonempty and of equal length".into(),
        ));
    }
    if f1.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("denominator series must stay positive".into()));
    }
    if f2.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("numerator series must be nonnegative".into()));
    }
    Ok(crossings_core(f1, f2, alpha, beta))
}

/// Upper price bound of the indicator "at least k+1 completed upcrossings"
/// against the closed-form bound (alpha/beta)^(k+1). Returns (bound, cap).
pub fn dubin_check(
    graph: &TrajectoryGraph,
    disc: &DiscretizationParams,
    alpha: f64,
    beta: f64,
    k: u32,
) -> Result<(f64, f64)> {
    if !(0.0 < alpha && alpha < beta) {
        return Err(Error::InvalidParameter("need 0 < alpha < beta".into()));
    }
    for node in &graph.nodes {
        if node.k1 as f64 * disc.dhat1_f <= 0.0 {
            return Err(Error::InvalidParameter(
                "denominator asset must stay positive on every node".into(),
            ));
        }
        if node.k2 <= 0 {
            return Err(Error::InvalidParameter(
                "numerator asset must stay positive on every node".into(),
            ));
        }
    }
    let d1 = disc.dhat1_f;
    let d2 = disc.dhat2_f;
    let payoff = Payoff::Path(Box::new(move |g: &TrajectoryGraph, path: &[usize]| {
        let f1: Vec<f64> = path.iter().map(|&id| g.nodes[id].k1 as f64 * d1).collect();
        let f2: Vec<f64> = path.iter().map(|&id| g.nodes[id].k2 as f64 * d2).collect();
        if crossings_core(&f1, &f2, alpha, beta).count >= k + 1 {
            1.0
        } else {
            0.0
        }
    }));
    let pricing = price(graph, &payoff, disc, Traded::Asset2, Direction::Super)?;
    let bound = pricing.root_value.ok_or(Error::DegenerateRoot)?;
    let cap = (alpha / beta).powi(k as i32 + 1);
    Ok((bound, cap))
}

#[derive(Debug, Clone)]
pub struct PnLReport {
    pub capital: f64,
    pub epsilon: f64,
    /// Paths that were actually evaluated.
    pub samples: usize,
    /// Sampled paths dropped because a node on them carries no hedge.
    pub excluded_null: usize,
    pub percent_profitable: f64,
    pub profits: Vec<f64>,
    pub bin_edges: Vec<f64>,
    pub bin_counts: Vec<u32>,
}

/// Replay the hedges of `pricing` along `n` uniformly sampled trajectories
/// starting from `capital`, score profit (seller view for upper-bound
/// hedging, buyer view for lower-bound), and histogram the outcomes.
pub fn pnl(
    graph: &TrajectoryGraph,
    pricing: &PricingResult,
    payoff: &Payoff,
    disc: &DiscretizationParams,
    capital: f64,
    n: usize,
    seed: u64,
    epsilon: f64,
) -> Result<PnLReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut profits = Vec::with_capacity(n);
    let mut excluded_null = 0usize;
    for _ in 0..n {
        let path = sample_trajectory(graph, &mut rng);
        if path[..path.len() - 1]
            .iter()
            .any(|&id| pricing.hedges[id].is_none())
        {
            excluded_null += 1;
            continue;
        }
        let trace = hedge_trace(graph, pricing, disc, &path, capital)?;
        let f = payoff.call(graph, *path.last().unwrap(), disc)?;
        let terminal = *trace.values.last().unwrap();
        let profit = match pricing.direction {
            Direction::Super => terminal - f + epsilon,
            Direction::Under => f - terminal + epsilon,
        };
        profits.push(profit);
    }
    let samples = profits.len();
    let profitable = profits.iter().filter(|&&p| p > 0.0).count();
    let percent_profitable = if samples == 0 {
        0.0
    } else {
        100.0 * profitable as f64 / samples as f64
    };
    let (bin_edges, bin_counts) = histogram(&profits);
    Ok(PnLReport {
        capital,
        epsilon,
        samples,
        excluded_null,
        percent_profitable,
        profits,
        bin_edges,
        bin_counts,
    })
}

/// Freedman-Diaconis binning, clamped to [20, 200] bins.
fn histogram(values: &[f64]) -> (Vec<f64>, Vec<u32>) {
    if values.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi == lo {
        return (vec![lo, hi], vec![values.len() as u32]);
    }
    let q = |p: f64| -> f64 {
        let idx = p * (sorted.len() - 1) as f64;
        let base = idx.floor() as usize;
        let frac = idx - base as f64;
        if base + 1 < sorted.len() {
            sorted[base] * (1.0 - frac) + sorted[base + 1] * frac
        } else {
            sorted[base]
        }
    };
    let iqr = q(0.75) - q(0.25);
    let width = 2.0 * iqr / (values.len() as f64).cbrt();
    let bins = if width > 0.0 {
        ((hi - lo) / width).ceil() as usize
    } else {
        20
    }
    .clamp(20, 200);
    let step = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|j| lo + j as f64 * step).collect();
    let mut counts = vec![0u32; bins];
    for &v in values {
        let idx = (((v - lo) / step) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    (edges, counts)
}

#[derive(Debug, Clone)]
pub enum SweepSpec {
    /// Absolute threshold for asset 1, relative for asset 2.
    ModelA { delta0s: Vec<f64>, delta1s: Vec<f64> },
    /// Joint relative threshold.
    ModelB { deltas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub delta0: f64,
    pub delta1: Option<f64>,
    /// Min / max escape count over the full windows of the chart.
    pub n_lower: u32,
    pub n_upper: u32,
}

pub fn calibration_sweep(
    chart: &DiscountedChart,
    grid: &TimeGrid,
    disc: &DiscretizationParams,
    spec: &SweepSpec,
) -> Result<Vec<SweepCell>> {
    let ws = windows(chart, grid, disc)?;
    let cell = |params: EscapeParams, delta0: f64, delta1: Option<f64>| -> Result<SweepCell> {
        params.validate()?;
        let mut lo = u32::MAX;
        let mut hi = 0u32;
        for w in &ws {
            let n = escape_times(w, &params).count() as u32;
            lo = lo.min(n);
            hi = hi.max(n);
        }
        Ok(SweepCell {
            delta0,
            delta1,
            n_lower: lo,
            n_upper: hi,
        })
    };
    let mut out = Vec::new();
    match spec {
        SweepSpec::ModelA { delta0s, delta1s } => {
            for &d0 in delta0s {
                for &d1 in delta1s {
                    out.push(cell(EscapeParams::ModelA { delta0: d0, delta1: d1 }, d0, Some(d1))?);
                }
            }
        }
        SweepSpec::ModelB { deltas } => {
            for &d in deltas {
                out.push(cell(EscapeParams::ModelB { delta: d }, d, None)?);
            }
        }
    }
    Ok(out)
}

pub fn write_sweep_csv(cells: &[SweepCell], path: &Path, provenance: Option<&str>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(f, "# {p}")?;
    }
    let two_param = cells.iter().any(|c| c.delta1.is_some());
    if two_param {
        writeln!(f, "delta0,delta1,n_lower,n_upper")?;
        for c in cells {
            writeln!(
                f,
                "{},{},{},{}",
                c.delta0,
                c.delta1.unwrap_or(f64::NAN),
                c.n_lower,
                c.n_upper
            )?;
        }
    } else {
        writeln!(f, "delta0,n_lower,n_upper")?;
        for c in cells {
            writeln!(f, "{},{},{}", c.delta0, c.n_lower, c.n_upper)?;
        }
    }
    Ok(())
}

fn increment_distance(m1: i64, m2: i64, q: i64, eta: i64, target: &EmpiricalIncrement) -> f64 {
    ((m1 - target.m1).abs() + (m2 - target.m2).abs() + (q - target.q as i64).abs()
        + (eta - target.eta as i64).abs()) as f64
}

#[derive(Debug, Clone)]
pub struct GraphMatch {
    /// Node ids visited, starting at the root.
    pub path: Vec<usize>,
    pub per_step: Vec<f64>,
    pub total: f64,
}

/// Greedily embed the window's escape-time increments into the graph, step
/// by step choosing the child whose edge increment is nearest in L1 over
/// (m1, m2, q, eta). A window whose increments were all absorbed into the
/// model replays with total distance 0.
pub fn match_in_graph(
    graph: &TrajectoryGraph,
    window: &Window,
    params: &EscapeParams,
) -> Result<GraphMatch> {
    params.validate()?;
    let times = escape_times(window, params);
    let targets = window_increments(window, &times);
    let mut path = vec![graph.root];
    let mut per_step = Vec::new();
    let mut cur = graph.root;
    for target in &targets {
        if graph.children[cur].is_empty() {
            break;
        }
        let mut best: Option<(f64, usize)> = None;
        for &c in &graph.children[cur] {
            let (p, n) = (&graph.nodes[cur], &graph.nodes[c]);
            let d = increment_distance(
                n.k1 - p.k1,
                n.k2 - p.k2,
                (n.t_steps - p.t_steps) as i64,
                (n.w - p.w) as i64,
                target,
            );
            // ties resolve to the smallest node id for determinism
            if best.map_or(true, |(bd, bc)| d < bd || (d == bd && c < bc)) {
                best = Some((d, c));
            }
        }
        let (d, c) = best.unwrap();
        per_step.push(d);
        path.push(c);
        cur = c;
    }
    let total = per_step.iter().sum();
    Ok(GraphMatch { path, per_step, total })
}

#[derive(Debug, Clone)]
pub struct SetMatch {
    pub chosen: Vec<EmpiricalIncrement>,
    pub per_step: Vec<f64>,
    pub total: f64,
}

/// Nearest-increment matching of a window against the raw increment set
/// (no graph structure, every step independent).
pub fn match_in_ne(
    set: &EmpiricalSet,
    window: &Window,
    params: &EscapeParams,
) -> Result<SetMatch> {
    params.validate()?;
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty increment set".into()));
    }
    let times = escape_times(window, params);
    let targets = window_increments(window, &times);
    let mut chosen = Vec::new();
    let mut per_step = Vec::new();
    for target in &targets {
        let mut best: Option<(f64, EmpiricalIncrement)> = None;
        for inc in &set.increments {
            let d = increment_distance(inc.m1, inc.m2, inc.q as i64, inc.eta as i64, target);
            let better = match &best {
                None => true,
                Some((bd, binc)) => {
                    d < *bd
                        || (d == *bd
                            && (inc.m1.abs(), inc.m2.abs(), inc.q, inc.eta)
                                < (binc.m1.abs(), binc.m2.abs(), binc.q, binc.eta))
                }
            };
            if better {
                best = Some((d, inc.clone()));
            }
        }
        let (d, inc) = best.unwrap();
        per_step.push(d);
        chosen.push(inc);
    }
    let total = per_step.iter().sum();
    Ok(SetMatch { chosen, per_step, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NodeClass;
    use crate::graph::{build, BuildOptions, GraphNode};

    fn disc() -> DiscretizationParams {
        DiscretizationParams::new("0.01", "0.01").unwrap()
    }

    fn node(k1: i64, k2: i64, i: u32, terminal: bool) -> GraphNode {
        GraphNode {
            k1,
            k2,
            i,
            t_steps: i,
            w: 0,
            class: NodeClass::TerminalOnly,
            terminal,
        }
    }

    // ---- cone crossings ----

    #[test]
    fn no_crossing_when_ratio_never_dips() {
        let f1 = vec![1.0, 1.0, 1.0];
        let f2 = vec![1.0, 1.2, 1.4];
        let c = cone_crossings(&f1, &f2, 0.5, 1.5).unwrap();
        assert_eq!(c.count, 0);
        assert!(c.rhos.is_empty());
        assert_eq!(c.taus, vec![0]);
    }

    #[test]
    fn single_crossing_indices_are_earliest() {
        // anchor f2[0]=1: rho needs f1 >= 1/alpha = 2, tau then needs
        // f2 >= beta * f1_rho = 3.75
        let f1 = vec![1.0, 2.5, 1.0, 1.0];
        let f2 = vec![1.0, 1.0, 1.0, 4.0];
        let c = cone_crossings(&f1, &f2, 0.5, 1.5).unwrap();
        assert_eq!(c.count, 1);
        assert_eq!(c.rhos, vec![1]);
        assert_eq!(c.taus, vec![0, 3]);
    }

    #[test]
    fn entry_and_completion_can_share_an_index() {
        // at index 1: 1.0/2.0 = 0.5 <= alpha fires rho, and 3.0/2.0 = 1.5
        // >= beta completes the crossing at the same sample
        let f1 = vec![1.0, 2.0, 2.0, 10.0];
        let f2 = vec![1.0, 3.0, 3.0, 3.0];
        let c = cone_crossings(&f1, &f2, 0.5, 1.5).unwrap();
        assert_eq!(c.count, 1);
        // index 3: new anchor 3.0 over f1=10 re-enters the lower cone but
        // never completes
        assert_eq!(c.rhos, vec![1, 3]);
        assert_eq!(c.taus, vec![0, 1]);
    }

    #[test]
    fn two_full_crossings() {
        let f1 = vec![1.0, 2.0, 2.0, 6.0, 6.0];
        let f2 = vec![1.0, 3.0, 3.0, 3.0, 9.0];
        let c = cone_crossings(&f1, &f2, 0.5, 1.5).unwrap();
        assert_eq!(c.count, 2);
        assert_eq!(c.rhos, vec![1, 3]);
        assert_eq!(c.taus, vec![0, 1, 4]);
        // the dip alone does not count
        let c = cone_crossings(&f1[..4], &f2[..4], 0.5, 1.5).unwrap();
        assert_eq!(c.count, 1);
    }

    #[test]
    fn crossing_count_brute_force_agreement() {
        // oracle: explicit scan for earliest rho/tau pairs
        fn oracle(f1: &[f64], f2: &[f64], alpha: f64, beta: f64) -> u32 {
            let mut count = 0;
            let mut j = 0usize;
            let mut anchor_f2 = f2[0];
            loop {
                // find rho >= j with anchor_f2 / f1 <= alpha
                let rho = (j..f1.len()).find(|&r| anchor_f2 / f1[r] <= alpha);
                let rho = match rho {
                    Some(r) => r,
                    None => break,
                };
                let tau = (rho..f1.len()).find(|&t| f2[t] / f1[rho] >= beta);
                match tau {
                    Some(t) => {
                        count += 1;
                        anchor_f2 = f2[t];
                        j = t;
                    }
                    None => break,
                }
            }
            count
        }
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..20);
            let f1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
            let f2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            for (a, b) in [(0.5, 1.5), (0.9, 1.1)] {
                let got = cone_crossings(&f1, &f2, a, b).unwrap().count;
                assert_eq!(got, oracle(&f1, &f2, a, b), "f1={f1:?} f2={f2:?} a={a} b={b}");
            }
        }
    }

    #[test]
    fn cone_crossings_validates_input() {
        assert!(cone_crossings(&[1.0], &[1.0], 1.5, 0.5).is_err());
        assert!(cone_crossings(&[0.0], &[1.0], 0.5, 1.5).is_err());
        assert!(cone_crossings(&[1.0], &[-1.0], 0.5, 1.5).is_err());
        assert!(cone_crossings(&[], &[], 0.5, 1.5).is_err());
    }

    // ---- dubin bound ----

    #[test]
    fn dubin_bound_holds_on_crossing_tree() {
        // hand-built tree: through node A the denominator jumps (rho fires),
        // and one grandchild completes the upcrossing
        let mut nodes = vec![node(100, 100, 0, false)];
        nodes.push(node(250, 100, 1, false)); // A: 1.0/2.5 <= 0.5
        nodes.push(node(100, 101, 1, false)); // B: quiet branch
        nodes.push(node(250, 400, 2, true)); // A1: 4.0/2.5 >= 1.5
        nodes.push(node(250, 40, 2, true)); // A2
        nodes.push(node(100, 102, 2, true)); // B1
        nodes.push(node(100, 99, 2, true)); // B2
        let edges = vec![(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)];
        let g = TrajectoryGraph::from_parts(nodes, edges, 0).unwrap();
        let (lhs, rhs) = dubin_check(&g, &disc(), 0.5, 1.5, 0).unwrap();
        // only the root->A->A1 path pays 1; hedging it from A costs
        // 60/360 = 1/6, reachable at displacement 0 from the root
        assert!((lhs - 1.0 / 6.0).abs() < 1e-12);
        assert!(lhs <= rhs + 1e-9, "lhs={lhs} rhs={rhs}");
        // k = 1: no path completes two crossings, bound still holds
        let (lhs, rhs) = dubin_check(&g, &disc(), 0.5, 1.5, 1).unwrap();
        assert!((0.0..=rhs + 1e-9).contains(&lhs));
    }

    // ---- pnl ----

    fn covered_call_tree() -> (TrajectoryGraph, Payoff) {
        let mut nodes = vec![node(100, 100, 0, false)];
        nodes.push(node(100, 97, 1, false)); // 1
        nodes.push(node(100, 104, 1, true)); // 2
        nodes.push(node(100, 95, 2, true)); // 3
        nodes.push(node(100, 99, 2, true)); // 4
        let edges = vec![(0, 1), (0, 2), (1, 3), (1, 4)];
        let g = TrajectoryGraph::from_parts(nodes, edges, 0).unwrap();
        let payoff = Payoff::Node(Box::new(|n: &GraphNode| {
            (n.k2 as f64 * 0.01 - 0.98).max(0.0)
        }));
        (g, payoff)
    }

    #[test]
    fn pnl_at_upper_bound_never_loses() {
        let (g, payoff) = covered_call_tree();
        let d = disc();
        let sup = price(&g, &payoff, &d, Traded::Asset2, Direction::Super).unwrap();
        let v0 = sup.root_value.unwrap();
        let report = pnl(&g, &sup, &payoff, &d, v0, 1000, 42, 1e-9).unwrap();
        assert_eq!(report.samples, 1000);
        assert_eq!(report.excluded_null, 0);
        assert_eq!(report.percent_profitable, 100.0);
        assert!(report.profits.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn pnl_below_lower_bound_always_loses() {
        let (g, payoff) = covered_call_tree();
        let d = disc();
        let sup = price(&g, &payoff, &d, Traded::Asset2, Direction::Super).unwrap();
        // drastically underfunded seller loses on every path
        let report = pnl(&g, &sup, &payoff, &d, -1.0, 500, 7, 0.0).unwrap();
        assert_eq!(report.percent_profitable, 0.0);
    }

    #[test]
    fn pnl_is_monotone_in_capital() {
        let (g, payoff) = covered_call_tree();
        let d = disc();
        let sup = price(&g, &payoff, &d, Traded::Asset2, Direction::Super).unwrap();
        let v0 = sup.root_value.unwrap();
        let caps = [v0 - 0.1, v0, v0 + 0.1];
        let pcts: Vec<f64> = caps
            .iter()
            .map(|&c| pnl(&g, &sup, &payoff, &d, c, 400, 3, 1e-9).unwrap().percent_profitable)
            .collect();
        assert!(pcts[0] <= pcts[1] && pcts[1] <= pcts[2], "{pcts:?}");
        assert_eq!(pcts[2], 100.0);
    }

    #[test]
    fn pnl_histogram_partitions_samples() {
        let (g, payoff) = covered_call_tree();
        let d = disc();
        let sup = price(&g, &payoff, &d, Traded::Asset2, Direction::Super).unwrap();
        let report = pnl(&g, &sup, &payoff, &d, 0.05, 300, 9, 0.0).unwrap();
        let total: u32 = report.bin_counts.iter().sum();
        assert_eq!(total as usize, report.samples);
        assert_eq!(report.bin_edges.len(), report.bin_counts.len() + 1);
    }

    #[test]
    fn pnl_excludes_paths_without_hedges() {
        // one branch of the root is degenerate deeper down
        let mut nodes = vec![node(100, 100, 0, false)];
        nodes.push(node(100, 102, 1, false)); // 1: children one-sided
        nodes.push(node(100, 103, 2, true)); // 2
        nodes.push(node(100, 98, 1, true)); // 3
        nodes.push(node(100, 101, 1, true)); // 4
        let edges = vec![(0, 1), (1, 2), (0, 3), (0, 4)];
        let g = TrajectoryGraph::from_parts(nodes, edges, 0).unwrap();
        let d = disc();
        let sup = price(&g, &Payoff::Asset2, &d, Traded::Asset2, Direction::Super).unwrap();
        assert!(sup.values[1].is_none());
        let report = pnl(&g, &sup, &Payoff::Asset2, &d, 1.0, 600, 5, 0.0).unwrap();
        assert!(report.excluded_null > 0);
        assert_eq!(report.samples + report.excluded_null, 600);
    }

    // ---- calibration sweep ----

    fn zigzag_chart() -> (DiscountedChart, TimeGrid) {
        use num::BigRational;
        let grid = TimeGrid::new(3, 4).unwrap();
        let n = 10;
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        let mut ts = Vec::new();
        for j in 0..n {
            let v = if j % 2 == 0 { 100 } else { 104 };
            x1.push(BigRational::from_float(v as f64 / 100.0).unwrap());
            x2.push(BigRational::from_float(1.0).unwrap());
            ts.push(3 * (j as i64 - n as i64 + 1));
        }
        (DiscountedChart { timestamps: ts, x1, x2 }, grid)
    }

    #[test]
    fn sweep_counts_decrease_with_threshold() {
        let (chart, grid) = zigzag_chart();
        let d = disc();
        let spec = SweepSpec::ModelB { deltas: vec![0.01, 0.05, 0.5] };
        let cells = calibration_sweep(&chart, &grid, &d, &spec).unwrap();
        assert_eq!(cells.len(), 3);
        for pair in cells.windows(2) {
            assert!(pair[0].n_upper >= pair[1].n_upper);
            assert!(pair[0].n_lower >= pair[1].n_lower);
        }
        assert!(cells[0].n_upper > 0);
        assert_eq!(cells[2].n_upper, 0);
        for c in &cells {
            assert!(c.n_lower <= c.n_upper);
        }
    }

    #[test]
    fn sweep_csv_model_a_has_both_columns() {
        let (chart, grid) = zigzag_chart();
        let d = disc();
        let spec = SweepSpec::ModelA {
            delta0s: vec![0.01, 0.02],
            delta1s: vec![0.03],
        };
        let cells = calibration_sweep(&chart, &grid, &d, &spec).unwrap();
        assert_eq!(cells.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sweep.csv");
        write_sweep_csv(&cells, &p, Some("cfg=s")).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("delta0,delta1,n_lower,n_upper"));
    }

    // ---- matching ----

    #[test]
    fn window_replays_through_own_graph_with_zero_error() {
        use crate::escape::build_empirical_set;
        let (chart, grid) = zigzag_chart();
        let d = disc();
        let params = EscapeParams::ModelB { delta: 0.02 };
        let ne = build_empirical_set(&chart, &grid, &params, &d).unwrap();
        let ws = windows(&chart, &grid, &d).unwrap();
        let w = ws.last().unwrap();
        let root = (w.k1[0], w.k2[0]);
        let g = build(
            root,
            &ne,
            None,
            &d,
            &BuildOptions { n_max: 5, tree_mode: true, ..Default::default() },
        )
        .unwrap();
        let m = match_in_graph(&g, w, &params).unwrap();
        assert_eq!(m.total, 0.0, "per_step={:?}", m.per_step);
        assert_eq!(m.path.len(), m.per_step.len() + 1);
    }

    #[test]
    fn training_window_matches_set_exactly_and_perturbed_does_not() {
        use crate::escape::build_empirical_set;
        let (chart, grid) = zigzag_chart();
        let d = disc();
        let params = EscapeParams::ModelB { delta: 0.02 };
        let ne = build_empirical_set(&chart, &grid, &params, &d).unwrap();
        let ws = windows(&chart, &grid, &d).unwrap();
        let m = match_in_ne(&ne, &ws[0], &params).unwrap();
        assert_eq!(m.total, 0.0);

        // held-out window with a move the set has never seen
        let mut held = ws[0].clone();
        for v in held.k1.iter_mut().skip(1) {
            *v += 9;
        }
        for v in held.x1.iter_mut().skip(1) {
            *v += 0.09;
        }
        let m2 = match_in_ne(&ne, &held, &params).unwrap();
        assert!(m2.total.is_finite());
        assert!(m2.total > 0.0);
        assert_eq!(m2.chosen.len(), m2.per_step.len());
    }
}
