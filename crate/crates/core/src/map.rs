//! The causal map (vertical dual of a multimer configuration), its
//! up-tree and down-tree, and graph distances.
//!
//! Vertex `i < |R_n|` is the `i`-th coded time in increasing order, so the
//! bottom vertex is `|R_n| - 1`; the top vertex is `|R_n|`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::excursion::DiscreteExcursion;

/// Faces of one horizontal strip `(l, l+1)`: the blocking slit columns in
/// increasing order and, for arc `j` (from `slits[j]` to the next slit
/// cyclically), the vertex it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub level: i64,
    pub slits: Vec<i64>,
    pub arcs: Vec<usize>,
}

impl Layer {
    /// Arc containing the point `x` (not a slit column).
    fn arc_at(&self, x2: i64) -> usize {
        // x2 is twice the coordinate, so slits live at even values
        let c = self.slits.partition_point(|&s| 2 * s < x2);
        self.wrap(c)
    }

    /// Arc containing `x+` for an integer column `x`.
    fn arc_right_of(&self, x: i64) -> usize {
        self.wrap(self.slits.partition_point(|&s| s <= x))
    }

    /// Arc containing `x-` for an integer column `x`.
    fn arc_left_of(&self, x: i64) -> usize {
        self.wrap(self.slits.partition_point(|&s| s < x))
    }

    fn wrap(&self, c: usize) -> usize {
        if self.slits.is_empty() {
            0
        } else if c == 0 {
            self.slits.len() - 1
        } else {
            c - 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct CausalMap {
    circumference: i64,
    /// Down-step index `k` of each coded vertex.
    coded: Vec<usize>,
    level: Vec<i64>,
    arc: Vec<usize>,
    layers: Vec<Layer>,
    adjacency: Vec<Vec<u32>>,
}

pub fn build_map(e: &DiscreteExcursion) -> Result<CausalMap> {
    let heights = e.heights();
    let top = e.max_height();
    let width = (e.n() + 1) as i64;
    // layer l is stored at index l + 1, for l = -1..=top
    let mut layers: Vec<Layer> =
        (-1..=top).map(|level| Layer { level, slits: Vec::new(), arcs: Vec::new() }).collect();
    for (k, &s) in e.steps().iter().enumerate() {
        for l in heights[k]..heights[k] + s.max(0) {
            layers[(l + 1) as usize].slits.push(k as i64 + 1);
        }
    }
    let coded: Vec<usize> = e.steps().iter().enumerate().filter(|(_, &s)| s == -1).map(|(k, _)| k).collect();
    let vertex_count = coded.len() + 1;
    let top_vertex = coded.len();
    let mut level = vec![0i64; vertex_count];
    let mut arc = vec![0usize; vertex_count];
    for layer in layers.iter_mut() {
        layer.arcs = vec![usize::MAX; layer.slits.len().max(1)];
    }
    for (v, &k) in coded.iter().enumerate() {
        let l = heights[k] - 1;
        let layer = &mut layers[(l + 1) as usize];
        let a = layer.arc_at(2 * k as i64 + 1);
        if layer.arcs[a] != usize::MAX {
            return Err(Error::InternalInconsistency(format!(
                "arc {a} of layer {l} holds coded times {} and {}",
                coded[layer.arcs[a]] as f64 + 0.5,
                k as f64 + 0.5
            )));
        }
        layer.arcs[a] = v;
        level[v] = l;
        arc[v] = a;
    }
    level[top_vertex] = top;
    let last = layers.last_mut().unwrap();
    if !last.slits.is_empty() || last.arcs[0] != usize::MAX {
        return Err(Error::InternalInconsistency("top strip is not a single empty face".into()));
    }
    last.arcs[0] = top_vertex;
    for layer in &layers {
        if let Some(a) = layer.arcs.iter().position(|&v| v == usize::MAX) {
            return Err(Error::InternalInconsistency(format!("arc {a} of layer {} holds no coded time", layer.level)));
        }
    }

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); vertex_count];
    for pair in layers.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let mut cuts: Vec<i64> = lo.slits.iter().chain(&hi.slits).cloned().collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut link = |x2: i64| {
            let (a, b) = (lo.arcs[lo.arc_at(x2)], hi.arcs[hi.arc_at(x2)]);
            adjacency[a].push(b as u32);
            adjacency[b].push(a as u32);
        };
        if cuts.is_empty() {
            link(1);
        }
        for (i, &c) in cuts.iter().enumerate() {
            let next = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + width };
            if next > c {
                link(c + next);
            }
        }
    }
    for list in adjacency.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    Ok(CausalMap { circumference: width, coded, level, arc, layers, adjacency })
}

impl CausalMap {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn bottom(&self) -> usize {
        self.coded.len() - 1
    }

    pub fn top(&self) -> usize {
        self.coded.len()
    }

    pub fn circumference(&self) -> i64 {
        self.circumference
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if u < v as usize {
                    out.push((u, v as usize));
                }
            }
        }
        out
    }

    /// Down-step index of a coded vertex (`None` for the top vertex).
    pub fn down_step(&self, v: usize) -> Option<usize> {
        self.coded.get(v).copied()
    }

    /// Vertex of the coded time `k + 1/2`.
    pub fn vertex_of_down_step(&self, k: usize) -> Option<usize> {
        self.coded.binary_search(&k).ok()
    }

    /// Strip index `l` of a vertex; it sits at height `l + 1/2`.
    pub fn level(&self, v: usize) -> i64 {
        self.level[v]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn position(&self, v: usize) -> Position {
        let x = match self.coded.get(v) {
            Some(&k) => k as f64 + 0.5,
            None => self.circumference as f64 / 2.0,
        };
        Position { x, y: self.level[v] as f64 + 0.5 }
    }

    fn layer_of(&self, v: usize) -> &Layer {
        &self.layers[(self.level[v] + 1) as usize]
    }

    /// Left end of the arc of `v`, or `0` for a full strip.
    fn arc_left(&self, v: usize) -> i64 {
        let layer = self.layer_of(v);
        layer.slits.get(self.arc[v]).copied().unwrap_or(0)
    }

    /// Right end of the arc of `v` reduced mod the circumference, or the
    /// circumference itself for a full strip.
    fn arc_right(&self, v: usize) -> i64 {
        let layer = self.layer_of(v);
        if layer.slits.is_empty() {
            self.circumference
        } else {
            layer.slits[(self.arc[v] + 1) % layer.slits.len()]
        }
    }

    /// Up-tree: every vertex except the two poles' exceptions is joined to
    /// its leftmost neighbour one strip below. Spans every vertex except
    /// the top one.
    pub fn up_parents(&self) -> Vec<Option<usize>> {
        (0..self.vertex_count())
            .map(|v| {
                if v == self.top() || v == self.bottom() {
                    return None;
                }
                let below = &self.layers[self.level[v] as usize];
                Some(below.arcs[below.arc_right_of(self.arc_left(v))])
            })
            .collect()
    }

    /// Down-tree: every vertex except the top is joined to its rightmost
    /// neighbour one strip above. Spans every vertex; the bottom vertex is
    /// a leaf.
    pub fn down_parents(&self) -> Vec<Option<usize>> {
        (0..self.vertex_count())
            .map(|v| {
                if v == self.top() {
                    return None;
                }
                let above = &self.layers[(self.level[v] + 2) as usize];
                Some(above.arcs[above.arc_left_of(self.arc_right(v))])
            })
            .collect()
    }

    pub fn build_trees(&self) -> DualTrees {
        DualTrees { up: self.up_parents(), down: self.down_parents() }
    }

    pub fn bfs(&self, source: usize) -> Vec<u32> {
        bfs(&self.adjacency, source)
    }

    /// Shortest path from `source` to `target` as a vertex sequence.
    pub fn geodesic(&self, source: usize, target: usize) -> Vec<usize> {
        let dist = self.bfs(target);
        let mut path = vec![source];
        let mut v = source;
        while v != target {
            v = *self.adjacency[v].iter().find(|&&w| dist[w as usize] + 1 == dist[v]).unwrap() as usize;
            path.push(v);
        }
        path
    }
}

/// Unweighted BFS; unreachable vertices get `u32::MAX`.
pub fn bfs(adjacency: &[Vec<u32>], source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source as u32);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize] + 1;
        for &w in &adjacency[v as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = d;
                queue.push_back(w);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualTrees {
    pub up: Vec<Option<usize>>,
    pub down: Vec<Option<usize>>,
}

fn tree_adjacency(parents: &[Option<usize>]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); parents.len()];
    for (v, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            adj[v].push(p as u32);
            adj[p].push(v as u32);
        }
    }
    adj
}

impl DualTrees {
    pub fn up_adjacency(&self) -> Vec<Vec<u32>> {
        tree_adjacency(&self.up)
    }

    pub fn down_adjacency(&self) -> Vec<Vec<u32>> {
        tree_adjacency(&self.down)
    }

    /// Union of both trees; BFS here computes the glued metric `D*_n` on
    /// the coded vertices.
    pub fn union_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = self.up_adjacency();
        for (v, list) in self.down_adjacency().into_iter().enumerate() {
            adj[v].extend(list);
            adj[v].sort_unstable();
            adj[v].dedup();
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::{enumerate_excursions, sample_excursion};
    use crate::rng;
    use crate::steps::StepLaw;
    use std::collections::BTreeSet;

    /// Independent face decomposition: split each strip into half-unit
    /// cells, join horizontally neighbouring cells unless a slit passes
    /// through the strip's mid-height between them, and join vertically
    /// stacked cells.
    fn raster_edges(e: &DiscreteExcursion) -> BTreeSet<(usize, usize)> {
        let h = e.heights();
        let top = e.max_height();
        let cells = 2 * (e.n() + 1);
        let strips = (top + 2) as usize;
        let mut face = vec![vec![usize::MAX; cells]; strips];
        let mut next_face = 0;
        for (si, row) in face.iter_mut().enumerate() {
            let mid = si as f64 - 1.0 + 0.5;
            let blocked = |boundary: usize| {
                // boundary between cell boundary-1 and boundary sits at x = boundary/2
                boundary % 2 == 0 && {
                    let col = boundary / 2;
                    let k = (col + e.n()) % (e.n() + 1);
                    let (lo, hi) = (h[k] as f64, h[k + 1] as f64);
                    e.steps()[k] >= 0 && lo < mid && mid < hi
                }
            };
            for start in 0..cells {
                if row[start] != usize::MAX {
                    continue;
                }
                let mut stack = vec![start];
                row[start] = next_face;
                while let Some(c) = stack.pop() {
                    let right = (c + 1) % cells;
                    let left = (c + cells - 1) % cells;
                    if row[right] == usize::MAX && !blocked(c + 1) {
                        row[right] = next_face;
                        stack.push(right);
                    }
                    if row[left] == usize::MAX && !blocked(if c == 0 { cells } else { c }) {
                        row[left] = next_face;
                        stack.push(left);
                    }
                }
                next_face += 1;
            }
        }
        // label faces by the coded time inside them
        let coded: Vec<usize> = e.steps().iter().enumerate().filter(|(_, &s)| s == -1).map(|(k, _)| k).collect();
        let mut label = vec![usize::MAX; next_face];
        for (v, &k) in coded.iter().enumerate() {
            let strip = h[k] as usize; // level h[k]-1, index +1
            let f = face[strip][2 * k + 1];
            assert_eq!(label[f], usize::MAX, "two coded times in one face");
            label[f] = v;
        }
        label[face[strips - 1][0]] = coded.len();
        assert!(label.iter().all(|&l| l != usize::MAX), "face without coded time");
        let mut edges = BTreeSet::new();
        for s in 0..strips - 1 {
            for c in 0..cells {
                let (a, b) = (label[face[s][c]], label[face[s + 1][c]]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges
    }

    fn all_pairs_bfs(adj: &[Vec<u32>]) -> Vec<Vec<u32>> {
        (0..adj.len()).map(|s| bfs(adj, s)).collect()
    }

    #[test]
    fn path_example() {
        let e = DiscreteExcursion::from_steps(vec![1, 0, -1, -1]).unwrap();
        let m = build_map(&e).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.edges(), vec![(0, 1), (0, 2)]);
        assert_eq!(m.bfs(m.bottom())[m.top()], 2);
        assert_eq!(m.bottom(), 1);
    }

    #[test]
    fn flat_example() {
        let e = DiscreteExcursion::from_steps(vec![0, 0, 0, -1]).unwrap();
        let m = build_map(&e).unwrap();
        assert_eq!(m.edges(), vec![(0, 1)]);
    }

    #[test]
    fn matches_raster_oracle() {
        for n in 1..=7 {
            for e in enumerate_excursions(n) {
                let m = build_map(&e).unwrap();
                let ours: BTreeSet<(usize, usize)> = m.edges().into_iter().collect();
                assert_eq!(ours, raster_edges(&e), "steps {:?}", e.steps());
            }
        }
    }

    #[test]
    fn distance_to_bottom_is_height() {
        for n in 1..=8 {
            for e in enumerate_excursions(n) {
                let m = build_map(&e).unwrap();
                let d = m.bfs(m.bottom());
                for v in 0..m.top() {
                    let k = m.down_step(v).unwrap();
                    assert_eq!(d[v] as i64, e.height(k), "steps {:?}", e.steps());
                }
                assert_eq!(d[m.top()] as i64, e.max_height() + 1);
                for v in 0..m.vertex_count() {
                    for &w in m.neighbors(v) {
                        assert_eq!((m.level(v) - m.level(w as usize)).abs(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn trees_are_spanning_subgraphs() {
        for n in 1..=8 {
            for e in enumerate_excursions(n) {
                let m = build_map(&e).unwrap();
                let t = m.build_trees();
                for (parents, root, skip) in [(&t.up, m.bottom(), Some(m.top())), (&t.down, m.top(), None)] {
                    let edges = parents.iter().filter(|p| p.is_some()).count();
                    let span = m.vertex_count() - skip.is_some() as usize;
                    assert_eq!(edges, span - 1);
                    for (v, p) in parents.iter().enumerate() {
                        if let Some(p) = *p {
                            assert!(m.neighbors(v).contains(&(p as u32)));
                        }
                    }
                    let d = bfs(&tree_adjacency(parents), root);
                    for v in 0..m.vertex_count() {
                        if Some(v) != skip {
                            assert_ne!(d[v], u32::MAX);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tree_and_union_distances_dominate_graph() {
        for n in 1..=8 {
            for e in enumerate_excursions(n) {
                let m = build_map(&e).unwrap();
                let t = m.build_trees();
                let g = all_pairs_bfs(&m.adjacency);
                let u = all_pairs_bfs(&t.union_adjacency());
                for a in 0..m.top() {
                    for b in 0..m.top() {
                        assert!(g[a][b] <= u[a][b]);
                        assert!(g[a][b] <= g[a][m.top()] + g[m.top()][b]);
                    }
                }
            }
        }
    }

    #[test]
    fn geodesic_varies_height_by_distance() {
        let law = StepLaw::stable(1.5).unwrap();
        let mut r = rng::from_seed(21);
        let e = sample_excursion(&law, 3000, &mut r).unwrap();
        let m = build_map(&e).unwrap();
        for (a, b) in [(0, 10), (5, m.top()), (m.bottom(), 17)] {
            let path = m.geodesic(a, b);
            let variation: i64 = path.windows(2).map(|w| (m.level(w[0]) - m.level(w[1])).abs()).sum();
            assert_eq!(variation as u32, m.bfs(a)[b]);
        }
    }

    #[test]
    fn builds_large_maps() {
        let law = StepLaw::stable(1.3).unwrap();
        for trial in 0..5 {
            let mut r = rng::stream(2, trial, rng::tag::SAMPLE);
            let e = sample_excursion(&law, 20_000, &mut r).unwrap();
            let m = build_map(&e).unwrap();
            assert_eq!(m.vertex_count(), e.coded_times().len() + 1);
            let d = m.bfs(m.bottom());
            assert!(d.iter().all(|&x| x != u32::MAX));
        }
    }
}
