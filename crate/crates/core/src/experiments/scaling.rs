//! Rescaled functionals of conditioned walks at consecutive sizes should
//! share one limit law.

use serde::{Deserialize, Serialize};

use super::{par_map, Check, ExperimentReport, Table};
use crate::error::Result;
use crate::excursion::sample_excursion;
use crate::rng::{self, tag};
use crate::stats::{ks_two_sample, median};
use crate::steps::StepLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub alpha: f64,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub jump_threshold: f64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { alpha: 1.5, ns: vec![10_000, 20_000], trials: 2000, jump_threshold: 0.1, seed: 1 }
    }
}

const FUNCTIONALS: [&str; 3] = ["max", "half", "jump_mass"];

pub fn scaling_selfconsistency(config: &ScalingConfig) -> Result<ExperimentReport> {
    let law = StepLaw::stable(config.alpha)?;
    let mut report = ExperimentReport::new("scaling", config.seed, config);
    let mut samples = Table::new("samples", &["n", "trial", "max", "half", "jump_mass"]);
    let mut per_n: Vec<[Vec<f64>; 3]> = Vec::new();
    for (ni, &n) in config.ns.iter().enumerate() {
        let rows = par_map(config.trials, |trial| -> Result<[f64; 3]> {
            let id = ((ni as u64) << 32) | trial as u64;
            let r = sample_excursion(&law, n, &mut rng::stream(config.seed, id, tag::SAMPLE))?.rescale(config.alpha);
            Ok([r.max(), r.value_at(0.5), r.jump_mass_above(config.jump_threshold)])
        });
        let mut cols: [Vec<f64>; 3] = Default::default();
        for (trial, row) in rows.into_iter().enumerate() {
            let row = row?;
            samples.push(vec![n as f64, trial as f64, row[0], row[1], row[2]]);
            for i in 0..3 {
                cols[i].push(row[i]);
            }
        }
        per_n.push(cols);
    }
    let mut ks = Table::new("ks", &["n_a", "n_b", "functional", "statistic", "p_value", "median_ratio"]);
    for w in 0..per_n.len().saturating_sub(1) {
        for (f, name) in FUNCTIONALS.iter().enumerate() {
            let (a, b) = (&per_n[w][f], &per_n[w + 1][f]);
            let res = ks_two_sample(a, b);
            let ratio = median(b) / median(a);
            ks.push(vec![config.ns[w] as f64, config.ns[w + 1] as f64, f as f64, res.statistic, res.p_value, ratio]);
            report.checks.push(Check::calibrated(
                &format!("ks_{name}_{}_{}", config.ns[w], config.ns[w + 1]),
                res.p_value,
                "p > 0.01",
                res.p_value > 0.01,
            ));
            if f == 0 {
                report.checks.push(Check::calibrated(
                    &format!("max_median_ratio_{}_{}", config.ns[w], config.ns[w + 1]),
                    ratio,
                    "within 5% of 1",
                    (ratio - 1.0).abs() <= 0.05,
                ));
            }
        }
    }
    report.tables.push(ks);
    report.tables.push(samples);
    Ok(report)
}
