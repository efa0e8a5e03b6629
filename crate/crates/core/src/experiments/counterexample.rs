//! The triadic profile `F_K = f_1 + ... + f_K` with
//!
//! ```text
//! f_1(t)     = 0 on [0, 1/3),  3(1 - 2t) on [1/3, 2/3),  0 on [2/3, 1]
//! f_{k+1}(t) = beta f_k(3t) | 0 | beta f_k(3t - 2)   on the three thirds
//! ```
//!
//! `V(0, 1) = 0` because the horizontal line at height 0 meets every slit
//! only at an endpoint, while the glued tree metric between 0 and 1 stays
//! bounded away from 0.
//!
//! Values on the grid `m / 3^K` are exact rationals, so slit endpoints at
//! height 0 are exactly 0.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{Check, ExperimentReport, Table};
use crate::codec::{Slit, SlitList};
use crate::error::{Error, Result};
use crate::heightvar::v_distance;
use crate::metrics::{LineTrees, ProfileMode};

type Q = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub beta: f64,
    pub k_max: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig { beta: 0.55, k_max: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleProfile {
    beta: Q,
    depth: usize,
    values: Vec<Q>,
    left: Vec<Q>,
}

const MAX_DEPTH: usize = 14;

impl CounterexampleProfile {
    pub fn new(beta: f64, depth: usize) -> Result<Self> {
        if !(0.5..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta = {beta} outside [1/2, 1]")));
        }
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!("depth K = {depth} outside 1..={MAX_DEPTH}")));
        }
        let b = Ratio::<i64>::approximate_float(beta)
            .filter(|r| *r.denom() <= 1000)
            .ok_or_else(|| Error::InvalidParameter(format!("beta = {beta} is not a simple fraction")))?;
        let beta = Q::new(*b.numer() as i128, *b.denom() as i128);
        let grid = 3usize.pow(depth as u32);
        let mut values = Vec::with_capacity(grid + 1);
        let mut left = Vec::with_capacity(grid + 1);
        for m in 0..=grid {
            let (mut v, mut l) = (Q::from(0), Q::from(0));
            for k in 1..=depth {
                v += f_k(beta, k, m as i128, depth as u32, false);
                l += f_k(beta, k, m as i128, depth as u32, m > 0);
            }
            values.push(v);
            left.push(l);
        }
        Ok(CounterexampleProfile { beta, depth, values, left })
    }

    pub fn beta(&self) -> f64 {
        to_f64(self.beta)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn grid_len(&self) -> usize {
        self.values.len()
    }

    /// `F_K(t)` for any `t` in `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let beta = to_f64(self.beta);
        (1..=self.depth).map(|k| f_k_float(beta, k, t)).sum()
    }

    /// `F_K(m / 3^K)` and its left limit, exactly.
    pub fn grid_value(&self, m: usize) -> (Q, Q) {
        (self.left[m], self.values[m])
    }

    /// Up-jump segments of `F_K`, including ones on the boundary level.
    pub fn slits(&self) -> SlitList {
        let grid = (self.values.len() - 1) as f64;
        let slits = (1..self.values.len() - 1)
            .filter(|&m| self.left[m] < self.values[m])
            .map(|m| Slit { x: m as f64 / grid, bottom: to_f64(self.left[m]), top: to_f64(self.values[m]) })
            .collect();
        SlitList { slits, circumference: 1.0 }
    }

    /// Number of slits whose open interval contains height `h`, in exact
    /// arithmetic.
    pub fn slits_straddling(&self, h: Q) -> usize {
        (1..self.values.len() - 1).filter(|&m| self.left[m] < h && h < self.values[m]).count()
    }

    pub fn has_down_jump(&self) -> bool {
        self.left.iter().zip(&self.values).any(|(l, v)| l > v)
    }

    pub fn v01(&self) -> f64 {
        let (h0, h1) = (to_f64(self.values[0]), to_f64(*self.values.last().unwrap()));
        v_distance(&self.slits(), ProfileMode::Line, 0.0, h0, 1.0, h1).value
    }

    /// Values along `[0, 1]` in time order: grid values, left limits before
    /// each jump, and inside every linear cell the crossings of all levels
    /// taken by the grid values and left limits. Extrema between chain
    /// points then sit at chain points, and every level the glue could
    /// route through is present.
    pub fn chain(&self) -> Vec<f64> {
        let mut levels: Vec<Q> = self.values.iter().chain(&self.left).copied().collect();
        levels.sort();
        levels.dedup();
        let mut out = Vec::new();
        for m in 0..self.values.len() {
            if m > 0 {
                let (a, b) = (self.values[m - 1], self.left[m]);
                let lo = levels.partition_point(|&l| l <= a.min(b));
                let hi = levels.partition_point(|&l| l < a.max(b)).max(lo);
                if a < b {
                    out.extend(levels[lo..hi].iter().map(|&l| to_f64(l)));
                } else {
                    out.extend(levels[lo..hi].iter().rev().map(|&l| to_f64(l)));
                }
                out.push(to_f64(b));
            }
            if m == 0 || self.left[m] != self.values[m] {
                out.push(to_f64(self.values[m]));
            }
        }
        out
    }

    /// `D*_K(0, 1)` glued over [`chain`](Self::chain).
    pub fn dstar01(&self) -> f64 {
        let chain = self.chain();
        LineTrees::new(&chain).glued_distances(0)[chain.len() - 1]
    }
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// `f_k(m / 3^j)`, or its left limit when `left`.
fn f_k(beta: Q, k: usize, m: i128, j: u32, left: bool) -> Q {
    let cell = 3i128.pow(j - 1);
    let mut third = m / cell;
    if left && m % cell == 0 {
        third -= 1;
    }
    let third = third.min(2);
    if k == 1 {
        return if third == 1 { Q::new(3 * 3i128.pow(j) - 6 * m, 3i128.pow(j)) } else { Q::from(0) };
    }
    match third {
        0 => beta * f_k(beta, k - 1, m, j - 1, left),
        1 => Q::from(0),
        _ => beta * f_k(beta, k - 1, m - 2 * cell, j - 1, left),
    }
}

fn f_k_float(beta: f64, k: usize, t: f64) -> f64 {
    if k == 1 {
        return if (1.0 / 3.0..2.0 / 3.0).contains(&t) { 3.0 * (1.0 - 2.0 * t) } else { 0.0 };
    }
    if t < 1.0 / 3.0 {
        beta * f_k_float(beta, k - 1, 3.0 * t)
    } else if t < 2.0 / 3.0 {
        0.0
    } else {
        beta * f_k_float(beta, k - 1, 3.0 * t - 2.0)
    }
}

pub fn counterexample_suite(config: &CounterexampleConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("counterexample", 0, config);
    let mut table = Table::new("values", &["K", "grid_points", "slits", "straddling", "V01", "Dstar01"]);
    for k in 1..=config.k_max {
        let p = CounterexampleProfile::new(config.beta, k)?;
        table.push(vec![
            k as f64,
            p.grid_len() as f64,
            p.slits().slits.len() as f64,
            p.slits_straddling(Q::from(0)) as f64,
            p.v01(),
            p.dstar01(),
        ]);
    }
    let v = table.column("V01").unwrap();
    let d = table.column("Dstar01").unwrap();
    let straddling = table.column("straddling").unwrap();
    let v_max = v.iter().cloned().fold(0.0, f64::max);
    report.checks.push(Check::exact("V01_zero", v_max, "= 0 for every K", v_max == 0.0));
    report.checks.push(Check::exact(
        "no_slit_straddles_zero",
        straddling.iter().sum(),
        "= 0",
        straddling.iter().all(|&s| s == 0.0),
    ));
    let monotone = d.windows(2).all(|w| w[1] >= w[0]);
    report.checks.push(Check::calibrated("Dstar01_nondecreasing", d[d.len() - 1], "nondecreasing in K", monotone));
    if d.len() >= 2 {
        let last = d[d.len() - 1];
        let base = d[1.min(d.len() - 1)];
        report.checks.push(Check::calibrated("Dstar01_grows", last - base, "D*(K_max) > D*(2)", last > base));
    }
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::HeightProfile;

    #[test]
    fn first_level_matches_definition() {
        let p = CounterexampleProfile::new(0.55, 1).unwrap();
        assert_eq!(p.grid_value(1), (Q::from(0), Q::from(1)));
        assert_eq!(p.grid_value(2), (Q::from(-1), Q::from(0)));
        assert_eq!(p.slits().slits.len(), 2);
        assert_eq!(p.eval(0.5), 0.0);
        assert!((p.eval(0.4) - 3.0 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn grid_agrees_with_float_evaluator() {
        let p = CounterexampleProfile::new(0.55, 5).unwrap();
        let grid = (p.grid_len() - 1) as f64;
        // F_K is linear on grid cells, so compare at cell midpoints
        for m in 0..p.grid_len() - 1 {
            let (_, v) = p.grid_value(m);
            let (l, _) = p.grid_value(m + 1);
            let t = (m as f64 + 0.5) / grid;
            assert!((0.5 * (to_f64(v) + to_f64(l)) - p.eval(t)).abs() < 1e-9, "m={m}");
        }
    }

    #[test]
    fn second_level_scaled_copies() {
        let p = CounterexampleProfile::new(0.5, 2).unwrap();
        // f_2 jumps at 1/9 from 0 to beta, at 2/9 from -beta to 0
        assert_eq!(p.grid_value(1), (Q::from(0), Q::new(1, 2)));
        assert_eq!(p.grid_value(2), (Q::new(-1, 2), Q::from(0)));
        assert_eq!(p.slits().slits.len(), 6);
        assert!(!p.has_down_jump());
    }

    #[test]
    fn v_vanishes_and_no_slit_straddles_zero() {
        for k in 1..=7 {
            let p = CounterexampleProfile::new(0.55, k).unwrap();
            assert_eq!(p.slits_straddling(Q::from(0)), 0);
            assert_eq!(p.v01(), 0.0);
        }
    }

    #[test]
    fn chain_glue_matches_floyd_warshall() {
        for k in 1..=3 {
            let p = CounterexampleProfile::new(0.55, k).unwrap();
            let chain = p.chain();
            let times: Vec<f64> = (0..chain.len()).map(|i| i as f64).collect();
            let profile = HeightProfile::continuous(times, chain.clone(), ProfileMode::Line).unwrap();
            let all: Vec<usize> = (0..chain.len()).collect();
            let glued = profile.glue(&all, 10_000).unwrap();
            let fw = glued.distances[0][chain.len() - 1];
            assert!((fw - p.dstar01()).abs() < 1e-9, "K={k}: {fw} vs {}", p.dstar01());
        }
    }

    #[test]
    fn level_chain_matches_fine_refinement() {
        let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
        for k in 1..=3 {
            let p = CounterexampleProfile::new(0.55, k).unwrap();
            let mut fine = vec![to_f64(p.values[0])];
            for m in 1..p.grid_len() {
                let (a, b) = (to_f64(p.values[m - 1]), to_f64(p.left[m]));
                fine.extend((1..=64).map(|i| lerp(a, b, i as f64 / 64.0)));
                fine.push(to_f64(p.values[m]));
            }
            let coarse = p.dstar01();
            let refined = LineTrees::new(&fine).glued_distances(0)[fine.len() - 1];
            assert!(coarse <= refined + 1e-9, "K={k}: {coarse} vs {refined}");
            assert!(refined - coarse < 0.05, "K={k}: {coarse} vs {refined}");
        }
        assert!(CounterexampleProfile::new(0.55, 1).unwrap().dstar01().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CounterexampleProfile::new(0.4, 3).is_err());
        assert!(CounterexampleProfile::new(0.55, 0).is_err());
        assert!(CounterexampleProfile::new(0.55, 15).is_err());
    }
}
