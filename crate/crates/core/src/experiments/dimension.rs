//! Volume growth of graph balls around uniform points, and the
//! blocking-jump scan around the same points.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{par_map, Check, ExperimentReport, FitSummary, Table};
use crate::error::Result;
use crate::excursion::{sample_excursion, DiscreteExcursion, RescaledExcursion};
use crate::map::build_map;
use crate::rng::{self, tag};
use crate::stats::{linear_fit, log_grid};
use crate::steps::StepLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConfig {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub centers: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    pub epsilons: Vec<f64>,
    pub eta: f64,
    pub seed: u64,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        DimensionConfig {
            alpha: 1.5,
            n: 100_000,
            trials: 1,
            centers: 50,
            r_min: 0.02,
            r_max: 0.2,
            radii: 10,
            epsilons: vec![0.1, 0.05, 0.025],
            eta: 0.5,
            seed: 1,
        }
    }
}

/// Share of `[0, n+1)` carried by each coded vertex: the time until the
/// next coded time, cyclically. The top vertex carries nothing.
pub fn vertex_masses(e: &DiscreteExcursion) -> Vec<f64> {
    let ks = e.coded_times().indices().to_vec();
    let width = (e.n() + 1) as f64;
    let mut mass: Vec<f64> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let next = if i + 1 < ks.len() { ks[i + 1] as f64 } else { ks[0] as f64 + width };
            (next - k as f64) / width
        })
        .collect();
    mass.push(0.0);
    mass
}

/// Mass of the ball of each graph radius in `radii` around `source`.
pub fn ball_volumes(distances: &[u32], mass: &[f64], radii: &[f64]) -> Vec<f64> {
    let max = distances.iter().copied().filter(|&d| d != u32::MAX).max().unwrap_or(0) as usize;
    let mut shell = vec![0.0; max + 1];
    for (v, &d) in distances.iter().enumerate() {
        if d != u32::MAX {
            shell[d as usize] += mass[v];
        }
    }
    let mut cumulative = shell;
    for i in 1..cumulative.len() {
        cumulative[i] += cumulative[i - 1];
    }
    radii.iter().map(|&r| cumulative[(r.floor().max(0.0) as usize).min(max)]).collect()
}

/// Whether jumps from at least `eps^{1/alpha + eta}` below `E(u)` to at
/// least as far above it occur in both `(u - eps, u)` and `(u, u + eps)`.
pub fn blocking_jumps(r: &RescaledExcursion, u: f64, eps: f64, eta: f64) -> bool {
    let level = r.value_at(u);
    let gap = eps.powf(1.0 / r.alpha + eta);
    let blocks = |lo: f64, hi: f64| {
        r.jumps.iter().any(|j| j.time > lo && j.time < hi && j.bottom <= level - gap && j.top >= level + gap)
    };
    blocks(u - eps, u) && blocks(u, u + eps)
}

struct TrialResult {
    log_volumes: Vec<Vec<f64>>,
    blocking: Vec<Vec<bool>>,
}

pub fn dimension_fit(config: &DimensionConfig) -> Result<ExperimentReport> {
    let law = StepLaw::stable(config.alpha)?;
    let mut report = ExperimentReport::new("dimension", config.seed, config);
    let radii = log_grid(config.r_min, config.r_max, config.radii);
    let unit = (config.n as f64).powf(1.0 / config.alpha);
    let graph_radii: Vec<f64> = radii.iter().map(|r| r * unit).collect();
    let results = par_map(config.trials, |trial| -> Result<TrialResult> {
        let e = sample_excursion(&law, config.n, &mut rng::stream(config.seed, trial as u64, tag::SAMPLE))?;
        let map = build_map(&e)?;
        let mass = vertex_masses(&e);
        let ct = e.coded_times();
        let rescaled = e.rescale(config.alpha);
        let mut crng = rng::stream(config.seed, trial as u64, tag::CENTERS);
        let mut out = TrialResult { log_volumes: Vec::new(), blocking: Vec::new() };
        for _ in 0..config.centers {
            let u: f64 = crng.gen();
            let center = ct.circ_index(u * (config.n + 1) as f64);
            let vols = ball_volumes(&map.bfs(center), &mass, &graph_radii);
            out.log_volumes.push(vols.iter().map(|v| v.ln()).collect());
            out.blocking.push(config.epsilons.iter().map(|&eps| blocking_jumps(&rescaled, u, eps, config.eta)).collect());
        }
        Ok(out)
    });
    let mut volumes = Table::new("volumes", &["trial", "center", "r", "volume"]);
    let mut curve = Table::new("curve", &["r", "mean_log_volume"]);
    let mut blocking = Table::new("blocking", &["epsilon", "frequency"]);
    let mut sum = vec![0.0; radii.len()];
    let mut hits = vec![0usize; config.epsilons.len()];
    let mut count = 0usize;
    for (trial, res) in results.into_iter().enumerate() {
        let res = res?;
        for (c, (lv, bl)) in res.log_volumes.iter().zip(&res.blocking).enumerate() {
            count += 1;
            for (i, &v) in lv.iter().enumerate() {
                sum[i] += v;
                volumes.push(vec![trial as f64, c as f64, radii[i], v.exp()]);
            }
            for (i, &b) in bl.iter().enumerate() {
                hits[i] += b as usize;
            }
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    for (r, m) in radii.iter().zip(&mean) {
        curve.push(vec![*r, *m]);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let fit = linear_fit(&lx, &mean);
    report.fits.push(FitSummary::new("volume_growth", &fit));
    report.checks.push(Check::calibrated(
        "dimension_within_0.3",
        fit.slope,
        &format!("[{:.2}, {:.2}]", config.alpha - 0.3, config.alpha + 0.3),
        (fit.slope - config.alpha).abs() <= 0.3,
    ));
    let freq: Vec<f64> = hits.iter().map(|&h| h as f64 / count as f64).collect();
    for (eps, f) in config.epsilons.iter().zip(&freq) {
        blocking.push(vec![*eps, *f]);
    }
    report.checks.push(Check::calibrated(
        "blocking_frequency_increasing",
        freq.last().copied().unwrap_or(f64::NAN),
        "nondecreasing as epsilon shrinks",
        freq.windows(2).all(|w| w[1] >= w[0]),
    ));
    report.tables.push(curve);
    report.tables.push(blocking);
    report.tables.push(volumes);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::Jump;

    #[test]
    fn masses_sum_to_one() {
        for e in crate::excursion::enumerate_excursions(5) {
            let m = vertex_masses(&e);
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(m.len(), build_map(&e).unwrap().vertex_count());
        }
    }

    #[test]
    fn ball_volumes_accumulate() {
        let d = [0, 1, 1, 2, u32::MAX];
        let m = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert_eq!(ball_volumes(&d, &m, &[0.0, 1.5, 7.0]), vec![0.1, 0.6, 1.0]);
    }

    #[test]
    fn blocking_needs_both_sides() {
        let mut r = RescaledExcursion {
            n: 10,
            alpha: 1.5,
            scale: 1.0,
            times: vec![0.0, 0.5],
            values: vec![0.0, 1.0],
            jumps: vec![Jump { time: 0.45, bottom: 0.0, top: 2.0 }],
        };
        assert!(!blocking_jumps(&r, 0.5, 0.1, 0.1));
        r.jumps.push(Jump { time: 0.55, bottom: 0.0, top: 2.0 });
        assert!(blocking_jumps(&r, 0.5, 0.1, 0.1));
        assert!(!blocking_jumps(&r, 0.5, 0.01, 0.1));
    }
}
