//! The finite-n sandwich `V_n <= D_n <= D*_n <= min(D^up_n, D^down_n)`
//! and the rescaled gap `(D*_n - V_n) n^{-1/alpha}`.

use serde::{Deserialize, Serialize};

use super::{par_map, Check, ExperimentReport, Table};
use crate::codec::slits_of;
use crate::error::{Error, Result};
use crate::excursion::{sample_excursion, DiscreteExcursion};
use crate::heightvar::v_on_walk;
use crate::map::{bfs, build_map};
use crate::metrics::WalkTreeMetrics;
use crate::rng::{self, tag};
use crate::stats::{median, quantile};
use crate::steps::StepLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub alpha: f64,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig { alpha: 1.5, ns: vec![1_000, 10_000, 100_000], trials: 200, pairs: 50, seed: 1 }
    }
}

/// All distances between two coded vertices, given by down-step index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMeasurement {
    pub u: usize,
    pub v: usize,
    pub d: f64,
    pub d_up: f64,
    pub d_down: f64,
    pub d_star: f64,
    pub v_metric: f64,
}

impl PairMeasurement {
    pub fn sandwich_holds(&self) -> bool {
        let tol = 1e-9;
        self.v_metric <= self.d + tol && self.d <= self.d_star && self.d_star <= self.d_up.min(self.d_down)
    }
}

/// Measures every pair on one excursion. Pairs are down-step indices.
/// Fails with `SandwichViolation` on the first pair breaking the chain of
/// inequalities.
pub fn measure_pairs(e: &DiscreteExcursion, pairs: &[(usize, usize)]) -> Result<Vec<PairMeasurement>> {
    let map = build_map(e)?;
    let union = map.build_trees().union_adjacency();
    let metrics = WalkTreeMetrics::new(e);
    let slits = slits_of(e);
    let ct = e.coded_times();
    let vertex = |k: usize| {
        ct.position_of(k).ok_or_else(|| Error::InvalidParameter(format!("step {k} is not a down-step")))
    };
    let mut out = Vec::with_capacity(pairs.len());
    for &(ku, kv) in pairs {
        let (a, b) = (vertex(ku)?, vertex(kv)?);
        let m = PairMeasurement {
            u: ku,
            v: kv,
            d: map.bfs(a)[b] as f64,
            d_up: metrics.d_up(ku, kv) as f64,
            d_down: metrics.d_down(ku, kv) as f64,
            d_star: bfs(&union, a)[b] as f64,
            v_metric: v_on_walk(e, &slits, ku, kv),
        };
        if !m.sandwich_holds() {
            return Err(Error::SandwichViolation(format!(
                "pair ({ku}, {kv}) on steps {:?}: V={} D={} D*={} Dup={} Ddown={}",
                if e.n() <= 64 { e.steps().to_vec() } else { vec![] },
                m.v_metric,
                m.d,
                m.d_star,
                m.d_up,
                m.d_down
            )));
        }
        out.push(m);
    }
    Ok(out)
}

/// `count` uniform pairs of distinct down-steps.
pub fn sample_pairs<R: rand::Rng + ?Sized>(e: &DiscreteExcursion, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let ct = e.coded_times();
    let idx = ct.indices();
    if idx.len() < 2 {
        return Vec::new();
    }
    (0..count)
        .map(|_| loop {
            let (i, j) = (rng.gen_range(0..idx.len()), rng.gen_range(0..idx.len()));
            if i != j {
                break (idx[i], idx[j]);
            }
        })
        .collect()
}

pub fn gap_study(config: &GapConfig) -> Result<ExperimentReport> {
    let law = StepLaw::stable(config.alpha)?;
    let mut report = ExperimentReport::new("gap", config.seed, config);
    let mut pairs = Table::new("pairs", &["n", "trial", "u", "v", "D", "Dup", "Ddown", "Dstar", "V", "gap"]);
    let mut summary = Table::new("summary", &["n", "pairs", "median_gap", "mean_gap", "q75_gap", "positive_fraction"]);
    let (mut medians, mut means) = (Vec::new(), Vec::new());
    for (ni, &n) in config.ns.iter().enumerate() {
        let scale = (n as f64).powf(-1.0 / config.alpha);
        let rows = par_map(config.trials, |trial| -> Result<Vec<PairMeasurement>> {
            let id = ((ni as u64) << 32) | trial as u64;
            let e = sample_excursion(&law, n, &mut rng::stream(config.seed, id, tag::SAMPLE))?;
            let p = sample_pairs(&e, config.pairs, &mut rng::stream(config.seed, id, tag::PAIRS));
            measure_pairs(&e, &p)
        });
        let mut gaps = Vec::new();
        for (trial, r) in rows.into_iter().enumerate() {
            for m in r? {
                let gap = (m.d_star - m.v_metric) * scale;
                gaps.push(gap);
                pairs.push(vec![
                    n as f64,
                    trial as f64,
                    m.u as f64,
                    m.v as f64,
                    m.d,
                    m.d_up,
                    m.d_down,
                    m.d_star,
                    m.v_metric,
                    gap,
                ]);
            }
        }
        let med = median(&gaps);
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        medians.push(med);
        means.push(mean);
        summary.push(vec![
            n as f64,
            gaps.len() as f64,
            med,
            mean,
            quantile(&gaps, 0.75),
            gaps.iter().filter(|&&g| g > 0.0).count() as f64 / gaps.len() as f64,
        ]);
    }
    report.checks.push(Check::exact("sandwich", 0.0, "zero violations", true));
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    report.checks.push(Check::calibrated(
        "median_gap_decreasing",
        medians.last().copied().unwrap_or(f64::NAN),
        "strictly decreasing in n",
        decreasing,
    ));
    report.checks.push(Check::calibrated(
        "mean_gap_decreasing",
        means.last().copied().unwrap_or(f64::NAN),
        "strictly decreasing in n",
        means.windows(2).all(|w| w[1] < w[0]),
    ));
    report.tables.push(summary);
    report.tables.push(pairs);
    Ok(report)
}
