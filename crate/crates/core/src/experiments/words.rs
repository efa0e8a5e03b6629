//! Exploration-word statistics: the underjump tail, decay of bad-word
//! probabilities, and the two deterministic word inequalities on sampled
//! walks.

use serde::{Deserialize, Serialize};

use super::{par_map, Check, ExperimentReport, FitSummary, Table};
use crate::error::Result;
use crate::explore::{
    badword_probability, check_word_bounds, glued_from_origin, sample_line_walk, underjump_stats, word_of_optimal_path,
    UnderjumpSampler,
};
use crate::rng::{self, tag};
use crate::steps::StepLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordsConfig {
    pub alphas: Vec<f64>,
    /// Exploration scale in walk units.
    pub level: i64,
    /// Walks sinking below `-depth * level` count as beyond the fit window.
    pub depth: f64,
    pub samples: usize,
    pub badword_alpha: f64,
    pub q: f64,
    pub ms: Vec<usize>,
    pub trials: usize,
    pub instances: usize,
    pub walk_len: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

impl Default for WordsConfig {
    fn default() -> Self {
        WordsConfig {
            alphas: vec![1.5, 1.8],
            level: 16,
            depth: 2000.0,
            samples: 100_000,
            badword_alpha: 1.5,
            q: 0.1,
            ms: vec![20, 40, 80],
            trials: 1_000_000,
            instances: 1000,
            walk_len: 500,
            epsilons: vec![0.05, 0.1],
            seed: 1,
        }
    }
}

const CHUNK: usize = 1000;

/// `count` underjump samples, drawn in fixed chunks so the result does
/// not depend on the worker count.
pub fn underjump_samples(law: &StepLaw, config: &WordsConfig, stream: u64, count: usize) -> Result<Vec<f64>> {
    let sampler = UnderjumpSampler::new(law.clone(), config.level, config.depth, u64::MAX)?;
    let chunks = count.div_ceil(CHUNK);
    let parts = par_map(chunks, |c| {
        let mut r = rng::stream(config.seed, (stream << 32) | c as u64, tag::CHI);
        let len = CHUNK.min(count - c * CHUNK);
        (0..len).map(|_| sampler.sample(&mut r)).collect::<Vec<f64>>()
    });
    Ok(parts.concat())
}

pub fn words_suite(config: &WordsConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("words", config.seed, config);
    let mut tail = Table::new("tail", &["alpha", "r", "survival"]);
    let mut fits = Table::new("tail_fit", &["alpha", "beta_hat", "samples", "censored", "min_chi"]);
    let mut pool = None;
    for (i, &alpha) in config.alphas.iter().enumerate() {
        let law = StepLaw::stable(alpha)?;
        let samples = underjump_samples(&law, config, i as u64, config.samples)?;
        let fit = underjump_stats(&samples);
        for (r, s) in fit.r.iter().zip(&fit.survival) {
            tail.push(vec![alpha, *r, *s]);
        }
        fits.push(vec![alpha, fit.beta, fit.samples as f64, fit.censored as f64, fit.min_chi]);
        report.fits.push(FitSummary::new(&format!("underjump_tail_alpha_{alpha}"), &fit.fit));
        report.checks.push(Check::calibrated(
            &format!("beta_alpha_{alpha}"),
            fit.beta,
            &format!("[{:.2}, {:.2}]", alpha - 1.1, alpha - 0.9),
            (fit.beta - (alpha - 1.0)).abs() <= 0.1,
        ));
        report.checks.push(Check::exact(&format!("chi_at_least_-1_alpha_{alpha}"), fit.min_chi, ">= -1", fit.min_chi >= -1.0));
        if alpha == config.badword_alpha {
            pool = Some(samples);
        }
    }
    let pool = match pool {
        Some(p) => p,
        None => underjump_samples(&StepLaw::stable(config.badword_alpha)?, config, 1 << 16, config.samples)?,
    };
    let mut bad = Table::new("badword", &["m", "q", "log_p", "std_err", "theta"]);
    let mut logs = Vec::new();
    for (i, &m) in config.ms.iter().enumerate() {
        let chunks = config.trials.div_ceil(CHUNK * 100);
        let parts = par_map(chunks, |c| {
            let mut r = rng::stream(config.seed, ((i as u64) << 32) | c as u64, tag::IMPORTANCE);
            let len = (CHUNK * 100).min(config.trials - c * CHUNK * 100);
            badword_probability(&pool, config.q, m, len, &mut r)
        });
        let p = combine(&parts, config.trials);
        logs.push(p.0);
        bad.push(vec![m as f64, config.q, p.0, p.1, parts[0].theta]);
    }
    report.checks.push(Check::calibrated(
        "badword_decreasing",
        logs.last().copied().unwrap_or(f64::NAN),
        "log P strictly decreasing in m",
        logs.windows(2).all(|w| w[1] < w[0]),
    ));
    let mut bounds = Table::new("word_bounds", &["instance", "epsilon", "V", "Dstar", "count_b", "count_h", "sum_chi", "upper_slack", "lower_slack"]);
    let law = StepLaw::stable(config.badword_alpha)?;
    let scale = (config.walk_len as f64).powf(-1.0 / config.badword_alpha);
    let rows = par_map(config.instances, |inst| -> Vec<(f64, Result<crate::explore::WordBoundsReport>)> {
        let x = sample_line_walk(&law, config.walk_len, &mut rng::stream(config.seed, inst as u64, tag::WALK));
        let dstar = glued_from_origin(&x, scale, config.walk_len);
        config
            .epsilons
            .iter()
            .map(|&eps| {
                let res = word_of_optimal_path(&x, scale, config.walk_len, eps)
                    .and_then(|(v, tr)| check_word_bounds(&tr, v.value, dstar));
                (eps, res)
            })
            .collect()
    });
    let mut violations = 0usize;
    for (inst, per) in rows.into_iter().enumerate() {
        for (eps, res) in per {
            match res {
                Ok(r) => bounds.push(vec![
                    inst as f64,
                    eps,
                    r.v,
                    r.dstar,
                    r.count_b as f64,
                    r.count_h as f64,
                    r.sum_chi,
                    r.upper_slack,
                    r.lower_slack,
                ]),
                Err(e) if e.is_violation() => violations += 1,
                Err(e) => return Err(e),
            }
        }
    }
    report.checks.push(Check::exact("word_inequalities", violations as f64, "zero violations", violations == 0));
    report.tables.push(fits);
    report.tables.push(tail);
    report.tables.push(bad);
    report.tables.push(bounds);
    Ok(report)
}

/// Pools chunked importance-sampling estimates into one `(log p, std err)`.
fn combine(parts: &[crate::explore::BadWordPoint], trials: usize) -> (f64, f64) {
    let chunk = (CHUNK * 100) as f64;
    let weights: Vec<f64> =
        (0..parts.len()).map(|c| chunk.min((trials as f64) - c as f64 * chunk) / trials as f64).collect();
    let finite: Vec<(f64, &crate::explore::BadWordPoint)> =
        weights.iter().cloned().zip(parts).filter(|(_, p)| p.log_p.is_finite()).collect();
    if finite.is_empty() {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let top = finite.iter().map(|(_, p)| p.log_p).fold(f64::NEG_INFINITY, f64::max);
    let mean: f64 = finite.iter().map(|(w, p)| w * (p.log_p - top).exp()).sum();
    // std_err of each chunk is relative (delta method on log p)
    let var: f64 = finite.iter().map(|(w, p)| (w * (p.log_p - top).exp() * p.std_err).powi(2)).sum();
    (top + mean.ln(), var.sqrt() / mean)
}
