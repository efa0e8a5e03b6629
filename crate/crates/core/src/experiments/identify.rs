//! Pairs with small `V` against their tree distances: when `V(s, t) = 0`
//! one of the tree distances vanishes, so the smallest of the two should
//! collapse as the `V` threshold shrinks.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{par_map, Check, ExperimentReport, FitSummary, Table};
use crate::codec::slits_of;
use crate::error::Result;
use crate::excursion::{coded_height, sample_excursion};
use crate::heightvar::v_sweep;
use crate::metrics::{ProfileMode, WalkTreeMetrics};
use crate::rng::{self, tag};
use crate::stats::{linear_fit, median, quantile};
use crate::steps::StepLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyConfig {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub sources: usize,
    pub taus: Vec<f64>,
    /// Pairs with rescaled `V` at least this large form the control group.
    pub control_v: f64,
    pub seed: u64,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            alpha: 1.5,
            n: 100_000,
            trials: 1,
            sources: 20,
            taus: vec![0.0025, 0.005, 0.01, 0.02, 0.04, 0.08],
            control_v: 0.5,
            seed: 1,
        }
    }
}

/// Rescaled `(V, min(D^up, D^down))` for all pairs `(source, target)`.
fn pair_values(config: &IdentifyConfig, law: &StepLaw, trial: usize) -> Result<Vec<(f64, f64)>> {
    let e = sample_excursion(law, config.n, &mut rng::stream(config.seed, trial as u64, tag::SAMPLE))?;
    let scale = (config.n as f64).powf(-1.0 / config.alpha);
    let slits = slits_of(&e);
    let metrics = WalkTreeMetrics::new(&e);
    let ks = e.coded_times().indices().to_vec();
    let targets: Vec<(f64, f64)> = ks.iter().map(|&k| (k as f64 + 0.5, coded_height(&e, k))).collect();
    let mut prng = rng::stream(config.seed, trial as u64, tag::PAIRS);
    let mut out = Vec::new();
    for _ in 0..config.sources {
        let i = prng.gen_range(0..ks.len());
        let v = v_sweep(&slits, ProfileMode::Cyclic, targets[i].0, targets[i].1, &targets);
        for (j, &kv) in ks.iter().enumerate() {
            if j != i {
                let d = metrics.d_up(ks[i], kv).min(metrics.d_down(ks[i], kv));
                out.push((v[j] * scale, d as f64 * scale));
            }
        }
    }
    Ok(out)
}

pub fn identification_probe(config: &IdentifyConfig) -> Result<ExperimentReport> {
    let law = StepLaw::stable(config.alpha)?;
    let mut report = ExperimentReport::new("identify", config.seed, config);
    let mut all = Vec::new();
    for r in par_map(config.trials, |t| pair_values(config, &law, t)) {
        all.extend(r?);
    }
    let mut curve = Table::new("curve", &["tau", "pairs", "median_dmin", "q90_dmin"]);
    let (mut tx, mut ty) = (Vec::new(), Vec::new());
    for &tau in &config.taus {
        let sel: Vec<f64> = all.iter().filter(|p| p.0 <= tau).map(|p| p.1).collect();
        if sel.is_empty() {
            curve.push(vec![tau, 0.0, f64::NAN, f64::NAN]);
            continue;
        }
        let med = median(&sel);
        curve.push(vec![tau, sel.len() as f64, med, quantile(&sel, 0.9)]);
        tx.push(tau);
        ty.push(med);
    }
    let control: Vec<f64> = all.iter().filter(|p| p.0 >= config.control_v).map(|p| p.1).collect();
    let control_median = if control.is_empty() { f64::NAN } else { median(&control) };
    let mut summary = Table::new("summary", &["pairs", "control_pairs", "control_median_dmin", "intercept"]);
    let intercept = if tx.len() >= 2 {
        let fit = linear_fit(&tx, &ty);
        report.fits.push(FitSummary::new("median_dmin_vs_tau", &fit));
        fit.intercept
    } else {
        f64::NAN
    };
    summary.push(vec![all.len() as f64, control.len() as f64, control_median, intercept]);
    report.checks.push(Check::calibrated(
        "curve_nondecreasing",
        ty.last().copied().unwrap_or(f64::NAN),
        "median nondecreasing in tau",
        ty.len() >= 2 && ty.windows(2).all(|w| w[1] >= w[0]),
    ));
    report.checks.push(Check::calibrated("intercept_below_0.05", intercept, "< 0.05", intercept.abs() < 0.05));
    report.checks.push(Check::calibrated(
        "control_no_collapse",
        control_median,
        "control median above the intercept",
        control_median > intercept,
    ));
    report.tables.push(curve);
    report.tables.push(summary);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_probe_runs() {
        let config = IdentifyConfig { n: 2000, sources: 4, ..Default::default() };
        let r = identification_probe(&config).unwrap();
        let curve = r.table("curve").unwrap();
        assert_eq!(curve.rows.len(), config.taus.len());
        let again = identification_probe(&config).unwrap();
        assert_eq!(r.to_json().unwrap(), again.to_json().unwrap());
        assert_eq!(curve.to_csv().unwrap(), again.table("curve").unwrap().to_csv().unwrap());
    }
}
