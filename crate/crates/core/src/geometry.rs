//! Exact integer geometry: convex hulls of grid point sets and the
//! classification of the origin against the hull of one-step displacements.

use std::fmt;

/// Position of the origin relative to the convex hull of a node's child
/// displacements. `TerminalOnly` is never produced by classification; it is
/// the label carried by leaves that have no children to classify against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// 0 in the relative interior of the hull.
    ArbitrageFree,
    /// 0 on the hull but not in its relative interior.
    TypeI,
    /// 0 outside the closed hull.
    TypeII,
    TerminalOnly,
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeClass::ArbitrageFree => "arbitrage_free",
            NodeClass::TypeI => "type_i",
            NodeClass::TypeII => "type_ii",
            NodeClass::TerminalOnly => "terminal_only",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for NodeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arbitrage_free" => Ok(NodeClass::ArbitrageFree),
            "type_i" => Ok(NodeClass::TypeI),
            "type_ii" => Ok(NodeClass::TypeII),
            "terminal_only" => Ok(NodeClass::TerminalOnly),
            other => Err(format!("unknown node class `{other}`")),
        }
    }
}

pub type Point = (i64, i64);

fn cross(o: Point, a: Point, b: Point) -> i128 {
    let (ox, oy) = (o.0 as i128, o.1 as i128);
    (a.0 as i128 - ox) * (b.1 as i128 - oy) - (a.1 as i128 - oy) * (b.0 as i128 - ox)
}

/// Convex hull, counter-clockwise, collinear points dropped. Degenerate
/// inputs come back as-is: a single point, or the two endpoints of a segment.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Classifies the origin against the hull of the given displacement set
/// (exact arithmetic, no tolerances). The set must be non-empty.
pub fn classify_displacements(moves: &[Point]) -> NodeClass {
    assert!(!moves.is_empty(), "classification needs at least one displacement");
    let hull = convex_hull(moves);
    let zero: Point = (0, 0);
    match hull.len() {
        1 => {
            // hull is a single point; its relative interior is the point itself
            if hull[0] == zero {
                NodeClass::ArbitrageFree
            } else {
                NodeClass::TypeII
            }
        }
        2 => {
            let (a, b) = (hull[0], hull[1]);
            if cross(a, b, zero) != 0 {
                return NodeClass::TypeII;
            }
            // 0 is on the segment's line; locate it via the dot product with a->b
            let d = (b.0 - a.0, b.1 - a.1);
            let t = -(a.0 as i128) * d.0 as i128 - (a.1 as i128) * d.1 as i128;
            let len2 = d.0 as i128 * d.0 as i128 + d.1 as i128 * d.1 as i128;
            if t == 0 || t == len2 {
                NodeClass::TypeI
            } else if t > 0 && t < len2 {
                NodeClass::ArbitrageFree
            } else {
                NodeClass::TypeII
            }
        }
        _ => {
            let mut on_boundary = false;
            let n = hull.len();
            for idx in 0..n {
                let c = cross(hull[idx], hull[(idx + 1) % n], zero);
                if c < 0 {
                    return NodeClass::TypeII;
                }
                if c == 0 {
                    on_boundary = true;
                }
            }
            if on_boundary {
                NodeClass::TypeI
            } else {
                NodeClass::ArbitrageFree
            }
        }
    }
}
