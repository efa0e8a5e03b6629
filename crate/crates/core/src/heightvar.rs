//! Minimal vertical variation `V` of an x-monotone path avoiding slits.
//!
//! A gate is the open interval `(a, b)` a path may not occupy at abscissa
//! `x`. The cost-to-go after the first `i` gates is a piecewise-linear
//! function of height with slopes `+-1`; passing a gate replaces it on
//! `(a, b)` by `min(f(a) + (y - a), f(b) + (b - y))` and leaves it
//! unchanged elsewhere.

use std::collections::BTreeMap;
use std::ops::Bound::Excluded;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::codec::SlitList;
use crate::excursion::DiscreteExcursion;
use crate::metrics::{HeightProfile, ProfileMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub x: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

/// Piecewise-linear cost-to-go with slope `-1` left of the first
/// breakpoint and `+1` right of the last.
#[derive(Debug, Clone)]
pub struct PlValueFunction {
    points: BTreeMap<OrderedFloat<f64>, f64>,
}

impl PlValueFunction {
    pub fn new(h: f64) -> Self {
        let mut points = BTreeMap::new();
        points.insert(OrderedFloat(h), 0.0);
        PlValueFunction { points }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let key = OrderedFloat(y);
        let below = self.points.range(..=key).next_back();
        let above = self.points.range(key..).next();
        match (below, above) {
            (Some((&lo, &vl)), Some((&hi, &vh))) => {
                if hi.0 == lo.0 {
                    vl
                } else {
                    vl + (vh - vl) * (y - lo.0) / (hi.0 - lo.0)
                }
            }
            (Some((&lo, &vl)), None) => vl + (y - lo.0),
            (None, Some((&hi, &vh))) => vh + (hi.0 - y),
            (None, None) => unreachable!("value function has at least one breakpoint"),
        }
    }

    /// Pass the open gate `(a, b)`; returns `(f(a), f(b))`.
    pub fn apply(&mut self, a: f64, b: f64) -> (f64, f64) {
        let (fa, fb) = (self.eval(a), self.eval(b));
        let inside: Vec<OrderedFloat<f64>> =
            self.points.range((Excluded(OrderedFloat(a)), Excluded(OrderedFloat(b)))).map(|(k, _)| *k).collect();
        for k in inside {
            self.points.remove(&k);
        }
        self.points.insert(OrderedFloat(a), fa);
        self.points.insert(OrderedFloat(b), fb);
        let peak = 0.5 * (fb - fa + a + b);
        if peak > a && peak < b {
            self.points.insert(OrderedFloat(peak), fa + peak - a);
        }
        (fa, fb)
    }

    pub fn breakpoints(&self) -> usize {
        self.points.len()
    }

    /// Check the slope-`+-1` shape; used in tests.
    pub fn is_one_lipschitz(&self) -> bool {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|(k, v)| (k.0, *v)).collect();
        pts.windows(2).all(|w| (w[1].1 - w[0].1).abs() <= (w[1].0 - w[0].0) * (1.0 + 1e-9) + 1e-12)
    }
}

/// Gates met between `s` and `t` in the given direction, in traversal
/// order. Zero-length slits and slits at `s` or `t` are skipped. Returned
/// `x` values are in the original coordinates.
pub fn gate_sequence(slits: &SlitList, mode: ProfileMode, s: f64, t: f64, direction: Direction) -> Vec<Gate> {
    let c = slits.circumference;
    let offset = |x: f64| -> f64 {
        match (mode, direction) {
            (ProfileMode::Line, Direction::Right) => x - s,
            (ProfileMode::Line, Direction::Left) => s - x,
            (ProfileMode::Cyclic, Direction::Right) => (x - s).rem_euclid(c),
            (ProfileMode::Cyclic, Direction::Left) => (s - x).rem_euclid(c),
        }
    };
    let end = offset(t);
    let mut gates: Vec<(f64, Gate)> = slits
        .blocking()
        .filter_map(|sl| {
            let o = offset(sl.x);
            (o > 0.0 && o < end).then_some((o, Gate { x: sl.x, a: sl.bottom, b: sl.top }))
        })
        .collect();
    gates.sort_by(|p, q| p.0.total_cmp(&q.0));
    gates.into_iter().map(|(_, g)| g).collect()
}

/// Result of one `V` query with its witness.
#[derive(Debug, Clone, Serialize)]
pub struct VResult {
    pub value: f64,
    pub direction: Direction,
    pub gates: Vec<Gate>,
    /// Height at which the witness passes each gate.
    pub heights: Vec<f64>,
    pub sides: Vec<Side>,
    pub start: (f64, f64),
    pub end: (f64, f64),
}

impl VResult {
    pub fn witness_variation(&self) -> f64 {
        let mut y = self.start.1;
        let mut total = 0.0;
        for &p in self.heights.iter().chain(std::iter::once(&self.end.1)) {
            total += (p - y).abs();
            y = p;
        }
        total
    }

    /// Polyline `(x, y)`: horizontal runs through gates, vertical moves
    /// halfway between consecutive gates. On the cylinder `x` is unwrapped
    /// in the traversal direction.
    pub fn polyline(&self, circumference: f64) -> Vec<(f64, f64)> {
        let unwrap = |x: f64, from: f64| -> f64 {
            match self.direction {
                Direction::Right => from + (x - from).rem_euclid(circumference),
                Direction::Left => from - (from - x).rem_euclid(circumference),
            }
        };
        let s = self.start.0;
        let mut xs: Vec<f64> = self.gates.iter().map(|g| unwrap(g.x, s)).collect();
        let t = if self.end.0 == s { s } else { unwrap(self.end.0, s) };
        xs.push(t);
        let mut out = vec![self.start];
        let (mut px, mut py) = self.start;
        let targets: Vec<f64> = self.heights.iter().cloned().chain(std::iter::once(self.end.1)).collect();
        for (x, y) in xs.into_iter().zip(targets) {
            let mid = 0.5 * (px + x);
            if y != py {
                out.push((mid, py));
                out.push((mid, y));
            }
            out.push((x, y));
            px = x;
            py = y;
        }
        out
    }

    pub fn side_at(&self, x: f64) -> Option<Side> {
        self.gates.iter().position(|g| g.x == x).map(|i| self.sides[i])
    }
}

fn solve(gates: Vec<Gate>, direction: Direction, start: (f64, f64), end: (f64, f64)) -> VResult {
    let mut f = PlValueFunction::new(start.1);
    let ends: Vec<(f64, f64)> = gates.iter().map(|g| f.apply(g.a, g.b)).collect();
    let value = f.eval(end.1);
    let mut heights = vec![0.0; gates.len()];
    let mut y = end.1;
    for i in (0..gates.len()).rev() {
        let g = gates[i];
        if y > g.a && y < g.b {
            let (fa, fb) = ends[i];
            y = if fa + (y - g.a) <= fb + (g.b - y) { g.a } else { g.b };
        }
        heights[i] = y;
    }
    let sides = gates.iter().zip(&heights).map(|(g, &p)| if p <= g.a { Side::Below } else { Side::Above }).collect();
    VResult { value, direction, gates, heights, sides, start, end }
}

/// `V` between `(s, hs)` and `(t, ht)`. On the cylinder both directions
/// are tried; on the line the direction is fixed by the sign of `t - s`.
pub fn v_distance(slits: &SlitList, mode: ProfileMode, s: f64, hs: f64, t: f64, ht: f64) -> VResult {
    let dirs: &[Direction] = match mode {
        ProfileMode::Cyclic if s != t => &[Direction::Right, Direction::Left],
        _ if t < s => &[Direction::Left],
        _ => &[Direction::Right],
    };
    dirs.iter()
        .map(|&d| solve(gate_sequence(slits, mode, s, t, d), d, (s, hs), (t, ht)))
        .min_by(|p, q| p.value.total_cmp(&q.value))
        .unwrap()
}

/// `V_n` between two coded times, given by their down-step indices, on
/// the discrete cylinder.
pub fn v_on_walk(e: &DiscreteExcursion, slits: &SlitList, ku: usize, kv: usize) -> f64 {
    let (hu, hv) = (e.height(ku) as f64 - 0.5, e.height(kv) as f64 - 0.5);
    v_distance(slits, ProfileMode::Cyclic, ku as f64 + 0.5, hu, kv as f64 + 0.5, hv).value
}

/// Single-source `V` to many targets, one sweep per direction.
pub fn v_sweep(slits: &SlitList, mode: ProfileMode, s: f64, hs: f64, targets: &[(f64, f64)]) -> Vec<f64> {
    let c = slits.circumference;
    let mut best = vec![f64::INFINITY; targets.len()];
    for (i, &(x, h)) in targets.iter().enumerate() {
        if x == s {
            best[i] = (h - hs).abs();
        }
    }
    for direction in [Direction::Right, Direction::Left] {
        let offset = |x: f64| -> Option<f64> {
            let o = match (mode, direction) {
                (ProfileMode::Line, Direction::Right) => x - s,
                (ProfileMode::Line, Direction::Left) => s - x,
                (ProfileMode::Cyclic, Direction::Right) => (x - s).rem_euclid(c),
                (ProfileMode::Cyclic, Direction::Left) => (s - x).rem_euclid(c),
            };
            (o > 0.0).then_some(o)
        };
        let mut gates: Vec<(f64, f64, f64)> =
            slits.blocking().filter_map(|sl| offset(sl.x).map(|o| (o, sl.bottom, sl.top))).collect();
        gates.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut order: Vec<(f64, usize)> =
            targets.iter().enumerate().filter_map(|(i, &(x, _))| offset(x).map(|o| (o, i))).collect();
        order.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut f = PlValueFunction::new(hs);
        let mut gi = 0;
        for (o, i) in order {
            while gi < gates.len() && gates[gi].0 < o {
                f.apply(gates[gi].1, gates[gi].2);
                gi += 1;
            }
            best[i] = best[i].min(f.eval(targets[i].1));
        }
    }
    best
}

/// A pair with small `V` together with its tree distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroClassPair {
    pub s: usize,
    pub t: usize,
    pub v: f64,
    pub d_up: f64,
    pub d_down: f64,
}

/// Pairs of profile samples (among `points`) with `V <= tolerance`.
pub fn v_zero_classes(slits: &SlitList, profile: &HeightProfile, points: &[usize], tolerance: f64) -> Vec<ZeroClassPair> {
    let targets: Vec<(f64, f64)> = points.iter().map(|&i| (profile.times()[i], profile.values()[i])).collect();
    let mut out = Vec::new();
    for (a, &i) in points.iter().enumerate() {
        let v = v_sweep(slits, profile.mode(), targets[a].0, targets[a].1, &targets);
        for (b, &j) in points.iter().enumerate().skip(a) {
            if v[b] <= tolerance {
                out.push(ZeroClassPair { s: i, t: j, v: v[b], d_up: profile.d_up(i, j), d_down: profile.d_down(i, j) });
            }
        }
    }
    out
}
