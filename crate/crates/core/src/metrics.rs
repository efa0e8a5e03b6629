//! Tree pseudo-metrics `D^up`, `D^down` and the glued metric `D*`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::DiscreteExcursion;

/// O(1) range extrema over a fixed array.
#[derive(Debug, Clone)]
pub struct SparseTable<T> {
    levels: Vec<Vec<T>>,
    pick: fn(T, T) -> T,
}

impl<T: Copy> SparseTable<T> {
    pub fn new(data: &[T], pick: fn(T, T) -> T) -> Self {
        let mut levels = vec![data.to_vec()];
        let mut width = 1;
        while 2 * width <= data.len() {
            let prev = levels.last().unwrap();
            let next: Vec<T> = (0..=data.len() - 2 * width).map(|i| pick(prev[i], prev[i + width])).collect();
            levels.push(next);
            width *= 2;
        }
        SparseTable { levels, pick }
    }

    /// Extremum over `lo..=hi`.
    pub fn query(&self, lo: usize, hi: usize) -> T {
        debug_assert!(lo <= hi);
        let len = hi - lo + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        (self.pick)(self.levels[k][lo], self.levels[k][hi + 1 - (1 << k)])
    }
}

fn min_i64(a: i64, b: i64) -> i64 {
    a.min(b)
}
fn max_i64(a: i64, b: i64) -> i64 {
    a.max(b)
}
fn min_f64(a: f64, b: f64) -> f64 {
    a.min(b)
}
fn max_f64(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// Closed-form tree distances between coded times of a discrete
/// excursion. Arguments are down-step indices `k` (coded time `k + 1/2`).
///
/// With `a = E_n(k)`, for `k_u < k_v`:
///
/// ```text
/// D^up   = a_u + a_v - 2 min_{j in [k_u+1, k_v]} E_n(j)
/// D^down = 2 + 2 min(max_{[k_u+1, k_v]} E_n, max_{[0, k_u] u [k_v+1, n]} E_n) - a_u - a_v
/// ```
#[derive(Debug, Clone)]
pub struct WalkTreeMetrics {
    heights: Vec<i64>,
    min: SparseTable<i64>,
    max: SparseTable<i64>,
    prefix_max: Vec<i64>,
    suffix_max: Vec<i64>,
}

impl WalkTreeMetrics {
    pub fn new(e: &DiscreteExcursion) -> Self {
        let heights = e.heights()[..=e.n()].to_vec();
        let mut prefix_max = heights.clone();
        for i in 1..prefix_max.len() {
            prefix_max[i] = prefix_max[i].max(prefix_max[i - 1]);
        }
        let mut suffix_max = heights.clone();
        for i in (0..suffix_max.len() - 1).rev() {
            suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
        }
        WalkTreeMetrics {
            min: SparseTable::new(&heights, min_i64),
            max: SparseTable::new(&heights, max_i64),
            heights,
            prefix_max,
            suffix_max,
        }
    }

    pub fn d_up(&self, ku: usize, kv: usize) -> i64 {
        if ku == kv {
            return 0;
        }
        let (a, b) = (ku.min(kv), ku.max(kv));
        self.heights[a] + self.heights[b] - 2 * self.min.query(a + 1, b)
    }

    pub fn d_down(&self, ku: usize, kv: usize) -> i64 {
        if ku == kv {
            return 0;
        }
        let (a, b) = (ku.min(kv), ku.max(kv));
        let inside = self.max.query(a + 1, b);
        let mut outside = self.prefix_max[a];
        if b < self.heights.len() - 1 {
            outside = outside.max(self.suffix_max[b + 1]);
        }
        2 + 2 * inside.min(outside) - self.heights[a] - self.heights[b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    /// Periodic time on `[0, circumference)`.
    Cyclic,
    Line,
}

/// A càdlàg height function known at sample times, with the left limit
/// at each sample. Between samples the function is assumed constant
/// (equal to the previous sample's value), so extrema over a time interval
/// are attained at samples or their left limits.
#[derive(Debug, Clone)]
pub struct HeightProfile {
    times: Vec<f64>,
    values: Vec<f64>,
    left: Vec<f64>,
    mode: ProfileMode,
    lo: SparseTable<f64>,
    hi: SparseTable<f64>,
    prefix_max: Vec<f64>,
    suffix_max: Vec<f64>,
}

impl HeightProfile {
    /// Profile whose left limits equal its values (no jumps at samples).
    pub fn continuous(times: Vec<f64>, values: Vec<f64>, mode: ProfileMode) -> Result<Self> {
        let left = values.clone();
        Self::new(times, values, left, mode)
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>, left: Vec<f64>, mode: ProfileMode) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() || times.len() != left.len() {
            return Err(Error::InvalidParameter("profile arrays must be nonempty and of equal length".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("profile times must increase strictly".into()));
        }
        let lows: Vec<f64> = values.iter().zip(&left).map(|(v, l)| v.min(*l)).collect();
        let highs: Vec<f64> = values.iter().zip(&left).map(|(v, l)| v.max(*l)).collect();
        let mut prefix_max = Vec::with_capacity(values.len());
        let mut acc = values[0];
        for (i, &h) in highs.iter().enumerate() {
            if i > 0 {
                acc = acc.max(h);
            }
            prefix_max.push(acc);
        }
        let mut suffix_max = highs.clone();
        for i in (0..suffix_max.len() - 1).rev() {
            suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
        }
        Ok(HeightProfile {
            lo: SparseTable::new(&lows, min_f64),
            hi: SparseTable::new(&highs, max_f64),
            times,
            values,
            left,
            mode,
            prefix_max,
            suffix_max,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_limits(&self) -> &[f64] {
        &self.left
    }

    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    /// Infimum over `[t_i, t_j]`, `i <= j`.
    pub fn inf_between(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.values[i]
        } else {
            self.values[i].min(self.lo.query(i + 1, j))
        }
    }

    pub fn sup_between(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.values[i]
        } else {
            self.values[i].max(self.hi.query(i + 1, j))
        }
    }

    /// Supremum over `[0, t_i] u [t_j, end]`.
    pub fn sup_outside(&self, i: usize, j: usize) -> f64 {
        let mut s = self.prefix_max[i].max(self.values[j]);
        if j + 1 < self.len() {
            s = s.max(self.suffix_max[j + 1]);
        }
        s
    }

    pub fn d_up(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = (i.min(j), i.max(j));
        self.values[a] + self.values[b] - 2.0 * self.inf_between(a, b)
    }

    pub fn d_down(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = (i.min(j), i.max(j));
        let sup = match self.mode {
            ProfileMode::Line => self.sup_between(a, b),
            ProfileMode::Cyclic => self.sup_between(a, b).min(self.sup_outside(a, b)),
        };
        2.0 * sup - self.values[a] - self.values[b]
    }

    pub fn d_tree_min(&self, i: usize, j: usize) -> f64 {
        self.d_up(i, j).min(self.d_down(i, j))
    }

    /// `D*` on `points` (sample indices) by shortest paths over the complete
    /// graph weighted by `min(D^up, D^down)`.
    pub fn glue(&self, points: &[usize], budget: usize) -> Result<GluedMetricResult> {
        if points.len() > budget {
            return Err(Error::PointBudgetExceeded { points: points.len(), budget });
        }
        let m = points.len();
        let mut distances = Vec::with_capacity(m);
        let mut predecessors = Vec::with_capacity(m);
        for s in 0..m {
            let sp = self.glue_from_local(points, s);
            distances.push(sp.distances);
            predecessors.push(sp.predecessors);
        }
        Ok(GluedMetricResult { points: points.to_vec(), distances, predecessors, kinds: self.kind_table(points) })
    }

    fn kind_table(&self, points: &[usize]) -> Vec<Vec<Hop>> {
        points
            .iter()
            .map(|&a| points.iter().map(|&b| if self.d_up(a, b) <= self.d_down(a, b) { Hop::Up } else { Hop::Down }).collect())
            .collect()
    }

    /// Single-source `D*` from `points[source]` to every point.
    pub fn glue_from(&self, points: &[usize], source: usize) -> ShortestPaths {
        self.glue_from_local(points, source)
    }

    fn glue_from_local(&self, points: &[usize], source: usize) -> ShortestPaths {
        dense_dijkstra(points.len(), source, |a, b| self.d_tree_min(points[a], points[b]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hop {
    Up,
    Down,
}

#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub distances: Vec<f64>,
    pub predecessors: Vec<usize>,
}

/// Dijkstra on a complete graph given by a weight callback, O(m^2).
pub fn dense_dijkstra(m: usize, source: usize, weight: impl Fn(usize, usize) -> f64) -> ShortestPaths {
    let mut dist = vec![f64::INFINITY; m];
    let mut pred = vec![usize::MAX; m];
    let mut done = vec![false; m];
    dist[source] = 0.0;
    pred[source] = source;
    for _ in 0..m {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..m {
            if !done[v] && dist[v] < best {
                best = dist[v];
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for v in 0..m {
            if !done[v] {
                let d = best + weight(u, v);
                if d < dist[v] {
                    dist[v] = d;
                    pred[v] = u;
                }
            }
        }
    }
    ShortestPaths { distances: dist, predecessors: pred }
}

/// All-pairs `D*` with witness chains.
#[derive(Debug, Clone)]
pub struct GluedMetricResult {
    pub points: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
    predecessors: Vec<Vec<usize>>,
    kinds: Vec<Vec<Hop>>,
}

impl GluedMetricResult {
    /// Alternating chain `s = a_1, ..., t` realizing `D*(s, t)`, with the
    /// tree used on each hop. Indices are positions in `points`.
    pub fn witness(&self, s: usize, t: usize) -> Vec<(usize, Option<Hop>)> {
        let mut chain = vec![(t, None)];
        let mut v = t;
        while v != s {
            let p = self.predecessors[s][v];
            chain.push((p, Some(self.kinds[p][v])));
            v = p;
        }
        chain.reverse();
        // hop kind labels the edge leaving each vertex
        let mut out: Vec<(usize, Option<Hop>)> = Vec::with_capacity(chain.len());
        for i in 0..chain.len() {
            let hop = if i + 1 < chain.len() { chain[i].1 } else { None };
            out.push((chain[i].0, hop));
        }
        out
    }
}

/// Weighted trees realizing line-mode `D^up` and `D^down` on a sampled
/// function without left-limit jumps at samples, with `n - 1` edges each.
/// Node `i` hangs below (resp. above) a node at its own level whenever one
/// exists, so tree distances equal the closed forms.
#[derive(Debug, Clone)]
pub struct LineTrees {
    pub up: Vec<(usize, usize, f64)>,
    pub down: Vec<(usize, usize, f64)>,
    n: usize,
}

fn stack_tree(values: &[f64], sign: f64) -> Vec<(usize, usize, f64)> {
    let level = |i: usize| sign * values[i];
    let mut edges = Vec::with_capacity(values.len());
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..values.len() {
        let x = level(i);
        let mut last: Option<usize> = None;
        while let Some(&t) = stack.last() {
            if level(t) <= x {
                break;
            }
            stack.pop();
            if let Some(l) = last {
                edges.push((l, t, level(l) - level(t)));
            }
            last = Some(t);
        }
        if let Some(l) = last {
            edges.push((l, i, level(l) - x));
        }
        stack.push(i);
    }
    for w in stack.windows(2) {
        edges.push((w[1], w[0], level(w[1]) - level(w[0])));
    }
    edges
}

impl LineTrees {
    pub fn new(values: &[f64]) -> Self {
        LineTrees { up: stack_tree(values, 1.0), down: stack_tree(values, -1.0), n: values.len() }
    }

    fn adjacency(&self, edges: &[&[(usize, usize, f64)]]) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for list in edges {
            for &(a, b, w) in list.iter() {
                adj[a].push((b, w));
                adj[b].push((a, w));
            }
        }
        adj
    }

    pub fn up_distances(&self, source: usize) -> Vec<f64> {
        dijkstra(&self.adjacency(&[&self.up]), source)
    }

    pub fn down_distances(&self, source: usize) -> Vec<f64> {
        dijkstra(&self.adjacency(&[&self.down]), source)
    }

    /// `D*` from `source` to every sample.
    pub fn glued_distances(&self, source: usize) -> Vec<f64> {
        dijkstra(&self.adjacency(&[&self.up, &self.down]), source)
    }
}

pub fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), source)));
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((OrderedFloat(nd), v)));
            }
        }
    }
    dist
}

/// Floyd-Warshall over a dense weight matrix.
pub fn floyd_warshall(mut d: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = d.len();
    for k in 0..m {
        for i in 0..m {
            let dik = d[i][k];
            for j in 0..m {
                let cand = dik + d[k][j];
                if cand < d[i][j] {
                    d[i][j] = cand;
                }
            }
        }
    }
    d
}
