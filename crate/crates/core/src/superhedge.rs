//! Backward dynamic-programming price bounds with per-node hedges, a
//! linear-programming cross-check, and portfolio replay along paths.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{GraphNode, TrajectoryGraph};
use crate::market_data::DiscretizationParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traded {
    Asset1,
    Asset2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Super,
    Under,
}

/// Claim evaluated at terminal nodes. Path payoffs need a tree-shaped graph.
pub enum Payoff {
    Asset1,
    Asset2,
    Node(Box<dyn Fn(&GraphNode) -> f64>),
    Path(Box<dyn Fn(&TrajectoryGraph, &[usize]) -> f64>),
}

impl Payoff {
    pub fn call(&self, graph: &TrajectoryGraph, node: usize, disc: &DiscretizationParams) -> Result<f64> {
        Ok(match self {
            Payoff::Asset1 => graph.nodes[node].k1 as f64 * disc.dhat1_f,
            Payoff::Asset2 => graph.nodes[node].k2 as f64 * disc.dhat2_f,
            Payoff::Node(f) => f(&graph.nodes[node]),
            Payoff::Path(f) => {
                let path = graph.path_to(node)?;
                f(graph, &path)
            }
        })
    }

    pub fn call2(&self, k1: f64, k2: f64) -> Option<f64> {
        match self {
            Payoff::Asset1 => Some(k1),
            Payoff::Asset2 => Some(k2),
            _ => None,
        }
    }

    pub fn is_path_dependent(&self) -> bool {
        matches!(self, Payoff::Path(_))
    }
}

/// Outcome of the one-step problem over child points (Δk, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneStep {
    Priced { value: f64, slope: f64 },
    /// All surviving displacements on one strict side of zero.
    Separated,
}

fn chord(a: (i64, f64), b: (i64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0) as f64
}

/// Least concave majorant of the point set, evaluated at Δk = 0, together
/// with its slope there (mean of adjacent slopes at a kink, extreme chord at
/// an endpoint).
pub fn one_step_super(points: &[(i64, f64)]) -> OneStep {
    // keep the highest y per abscissa
    let mut best: BTreeMap<i64, f64> = BTreeMap::new();
    for &(dk, y) in points {
        best.entry(dk)
            .and_modify(|cur| *cur = cur.max(y))
            .or_insert(y);
    }
    if best.is_empty() {
        return OneStep::Separated;
    }
    let pts: Vec<(i64, f64)> = best.into_iter().collect();
    let lo = pts[0].0;
    let hi = pts[pts.len() - 1].0;
    if lo > 0 || hi < 0 {
        return OneStep::Separated;
    }
    if lo == 0 {
        // zero is the left endpoint: value is the payoff there, slope is the
        // steepest chord to the right (sup over larger Δk)
        let value = pts[0].1;
        let slope = if pts.len() == 1 {
            0.0
        } else {
            pts[1..]
                .iter()
                .map(|&p| chord(pts[0], p))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        return OneStep::Priced { value, slope };
    }
    if hi == 0 {
        let last = pts[pts.len() - 1];
        let value = last.1;
        let slope = pts[..pts.len() - 1]
            .iter()
            .map(|&p| chord(p, last))
            .fold(f64::INFINITY, f64::min);
        let slope = if pts.len() == 1 { 0.0 } else { slope };
        return OneStep::Priced { value, slope };
    }
    // upper concave hull by a monotone scan over ascending Δk
    let mut hull: Vec<(i64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or below segment a-p
            let cross = (b.0 - a.0) as f64 * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) as f64;
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // locate zero on the hull
    for (idx, &(dk, y)) in hull.iter().enumerate() {
        if dk == 0 {
            // interior kink: slope is the average of the adjacent chords
            let left = chord(hull[idx - 1], hull[idx]);
            let right = chord(hull[idx], hull[idx + 1]);
            return OneStep::Priced { value: y, slope: 0.5 * (left + right) };
        }
        if dk > 0 {
            let a = hull[idx - 1];
            let b = hull[idx];
            let s = chord(a, b);
            return OneStep::Priced { value: a.1 - a.0 as f64 * s, slope: s };
        }
    }
    unreachable!("hull straddles zero");
}

pub fn one_step_under(points: &[(i64, f64)]) -> OneStep {
    let negated: Vec<(i64, f64)> = points.iter().map(|&(dk, y)| (dk, -y)).collect();
    match one_step_super(&negated) {
        OneStep::Separated => OneStep::Separated,
        OneStep::Priced { value, slope } => OneStep::Priced { value: -value, slope: -slope },
    }
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Per node id; None marks degenerate (unpriceable) nodes.
    pub values: Vec<Option<f64>>,
    /// Hedge in units of the traded asset; None at terminal or degenerate nodes.
    pub hedges: Vec<Option<f64>>,
    pub root_value: Option<f64>,
    pub direction: Direction,
    pub traded: Traded,
}

fn traded_step(disc: &DiscretizationParams, traded: Traded) -> f64 {
    match traded {
        Traded::Asset1 => disc.dhat1_f,
        Traded::Asset2 => disc.dhat2_f,
    }
}

fn traded_dk(node: &GraphNode, parent: &GraphNode, traded: Traded) -> i64 {
    match traded {
        Traded::Asset1 => node.k1 - parent.k1,
        Traded::Asset2 => node.k2 - parent.k2,
    }
}

pub fn price(
    graph: &TrajectoryGraph,
    payoff: &Payoff,
    disc: &DiscretizationParams,
    traded: Traded,
    direction: Direction,
) -> Result<PricingResult> {
    if payoff.is_path_dependent() && !graph.is_tree() {
        return Err(Error::RequiresTree);
    }
    let n = graph.len();
    let mut values: Vec<Option<f64>> = vec![None; n];
    let mut hedges: Vec<Option<f64>> = vec![None; n];
    let sign = match direction {
        Direction::Super => 1.0,
        Direction::Under => -1.0,
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&id| std::cmp::Reverse(graph.nodes[id].i));
    for id in order {
        if graph.children[id].is_empty() {
            // leaves carry the claim; isolated interior stubs never occur
            // because empty-children nodes are marked terminal during build
            values[id] = Some(sign * payoff.call(graph, id, disc)?);
            continue;
        }
        let node = &graph.nodes[id];
        let pts: Vec<(i64, f64)> = graph.children[id]
            .iter()
            .filter_map(|&c| values[c].map(|v| (traded_dk(&graph.nodes[c], node, traded), v)))
            .collect();
        match one_step_super(&pts) {
            OneStep::Separated => {
                values[id] = None;
            }
            OneStep::Priced { value, slope } => {
                values[id] = Some(value);
                hedges[id] = Some(sign * slope / traded_step(disc, traded));
            }
        }
    }
    if sign < 0.0 {
        for v in values.iter_mut() {
            *v = v.map(|x| -x);
        }
    }
    let root_value = values[graph.root];
    Ok(PricingResult {
        values,
        hedges,
        root_value,
        direction,
        traded,
    })
}

/// Nodes that survive the degenerate-node excision: a leaf is alive; an
/// interior node is alive when its alive children's traded displacements
/// reach zero from both sides (or touch it).
fn alive_set(graph: &TrajectoryGraph, traded: Traded) -> Vec<bool> {
    let n = graph.len();
    let mut alive = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&id| std::cmp::Reverse(graph.nodes[id].i));
    for id in order {
        if graph.children[id].is_empty() {
            alive[id] = true;
            continue;
        }
        let dks: Vec<i64> = graph.children[id]
            .iter()
            .filter(|&&c| alive[c])
            .map(|&c| traded_dk(&graph.nodes[c], &graph.nodes[id], traded))
            .collect();
        if dks.is_empty() {
            continue;
        }
        let lo = *dks.iter().min().unwrap();
        let hi = *dks.iter().max().unwrap();
        alive[id] = lo <= 0 && hi >= 0;
    }
    alive
}

/// Minimal superhedging capital by direct linear programming over all
/// surviving root-to-leaf paths. Exponential in depth; testing only.
pub fn brute_force_price(
    graph: &TrajectoryGraph,
    payoff: &Payoff,
    disc: &DiscretizationParams,
    traded: Traded,
    direction: Direction,
) -> Result<Option<f64>> {
    if !graph.is_tree() {
        return Err(Error::RequiresTree);
    }
    let sign = match direction {
        Direction::Super => 1.0,
        Direction::Under => -1.0,
    };
    let alive = alive_set(graph, traded);
    if !alive[graph.root] {
        return Ok(None);
    }
    let step = traded_step(disc, traded);

    use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
    // the solver handles unbounded variables poorly, so every signed
    // quantity is split into a difference of two nonnegative variables
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let bounds = (0.0, f64::INFINITY);
    let v0 = (problem.add_var(1.0, bounds), problem.add_var(-1.0, bounds));
    // hedge variable pairs are created on first use so that each appears in
    // at least one constraint with a nonzero coefficient
    let mut hedge_var: Vec<Option<(Variable, Variable)>> = vec![None; graph.len()];
    // one constraint per alive root-to-leaf path:
    //   V0 + sum_j h_j * (S_{j+1} - S_j) >= payoff(path)
    let base = vec![(v0.0, 1.0), (v0.1, -1.0)];
    let mut stack: Vec<(usize, Vec<(Variable, f64)>, Vec<usize>)> =
        vec![(graph.root, base, vec![graph.root])];
    while let Some((id, terms, path)) = stack.pop() {
        if graph.children[id].is_empty() {
            let f = match payoff {
                Payoff::Path(f) => f(graph, &path),
                _ => payoff.call(graph, id, disc)?,
            };
            problem.add_constraint(terms.clone(), ComparisonOp::Ge, sign * f);
            continue;
        }
        for &c in &graph.children[id] {
            if !alive[c] {
                continue;
            }
            let dk = traded_dk(&graph.nodes[c], &graph.nodes[id], traded);
            let mut terms = terms.clone();
            if dk != 0 {
                let (hp, hm) = *hedge_var[id].get_or_insert_with(|| {
                    (problem.add_var(0.0, bounds), problem.add_var(0.0, bounds))
                });
                let coeff = sign * dk as f64 * step;
                terms.push((hp, coeff));
                terms.push((hm, -coeff));
            }
            let mut path = path.clone();
            path.push(c);
            stack.push((c, terms, path));
        }
    }
    match problem.solve() {
        Ok(solution) => Ok(Some(sign * (solution[v0.0] - solution[v0.1]))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone)]
pub struct PortfolioTrace {
    /// Portfolio value at each node of the path (discounted units).
    pub values: Vec<f64>,
    /// Hedge position held over each step (len = path len - 1).
    pub hedges: Vec<f64>,
    /// Numeraire holding after each rebalance (len = path len - 1).
    pub numeraire: Vec<f64>,
}

/// Self-financing replay of the computed hedges along a concrete path,
/// starting from initial capital `initial`.
pub fn hedge_trace(
    graph: &TrajectoryGraph,
    pricing: &PricingResult,
    disc: &DiscretizationParams,
    path: &[usize],
    initial: f64,
) -> Result<PortfolioTrace> {
    let step = traded_step(disc, pricing.traded);
    let mut values = vec![initial];
    let mut hedges = Vec::new();
    let mut numeraire = Vec::new();
    for pair in path.windows(2) {
        let (pid, cid) = (pair[0], pair[1]);
        if !graph.children[pid].contains(&cid) {
            return Err(Error::InvalidGraph(format!("{cid} is not a child of {pid}")));
        }
        let h = pricing.hedges[pid].ok_or(Error::NullPath)?;
        let cur = *values.last().unwrap();
        let k = match pricing.traded {
            Traded::Asset1 => graph.nodes[pid].k1,
            Traded::Asset2 => graph.nodes[pid].k2,
        };
        numeraire.push(cur - h * k as f64 * step);
        let dk = traded_dk(&graph.nodes[cid], &graph.nodes[pid], pricing.traded);
        values.push(cur + h * dk as f64 * step);
        hedges.push(h);
    }
    Ok(PortfolioTrace { values, hedges, numeraire })
}

pub fn write_pricing_csv(
    graph: &TrajectoryGraph,
    sup: &PricingResult,
    sub: &PricingResult,
    path: &Path,
    provenance: Option<&str>,
) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(f, "# {p}")?;
    }
    writeln!(f, "node_id,value_super,value_under,hedge_super,hedge_under,degenerate_flag")?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for id in 0..graph.len() {
        let degenerate = sup.values[id].is_none() || sub.values[id].is_none();
        writeln!(
            f,
            "{},{},{},{},{},{}",
            id,
            fmt(sup.values[id]),
            fmt(sub.values[id]),
            fmt(sup.hedges[id]),
            fmt(sub.hedges[id]),
            degenerate
        )?;
    }
    Ok(())
}
