//! Exploration of a walk at scale `eps` along a word in `{b, h}`.
//!
//! Walks are integer height sequences `X_0, X_1, ...` read as càdlàg
//! paths (constant on `[k, k+1)`), multiplied by `scale` when measured.
//! Thresholds are compared on the integer substrate: `X_k - X_T >= eps /
//! scale`.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::codec::{Slit, SlitList};
use crate::error::{Error, Result};
use crate::heightvar::{v_distance, Side, VResult};
use crate::metrics::{LineTrees, ProfileMode};
use crate::stats::{linear_fit, log_grid, LinearFit};
use crate::steps::StepLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Letter {
    #[serde(rename = "b")]
    B,
    #[serde(rename = "h")]
    H,
}

pub fn parse_word(w: &str) -> Result<Vec<Letter>> {
    w.chars()
        .map(|c| match c {
            'b' => Ok(Letter::B),
            'h' => Ok(Letter::H),
            other => Err(Error::Parse(format!("letter {other:?} is not b or h"))),
        })
        .collect()
}

pub fn word_string(w: &[Letter]) -> String {
    w.iter().map(|l| if *l == Letter::B { 'b' } else { 'h' }).collect()
}

/// Stopping times `S_k`, `T_k` (walk indices; `None` when `T_k` never
/// happens within the walk) and underjumps `chi_k` for the `b` letters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub epsilon: f64,
    pub word: String,
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    #[serde(rename = "T")]
    pub t: Vec<Option<usize>>,
    pub chi: Vec<f64>,
}

impl ExplorationTrace {
    pub fn count_b(&self) -> usize {
        self.word.chars().filter(|&c| c == 'b').count()
    }

    pub fn count_h(&self) -> usize {
        self.word.chars().filter(|&c| c == 'h').count()
    }

    pub fn sum_chi(&self) -> f64 {
        self.chi.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

fn first_exceedance(x: &[i64], from: usize, level: f64) -> Option<usize> {
    (from..x.len()).find(|&k| x[k] as f64 >= level)
}

fn first_hit(x: &[i64], from: usize, value: i64) -> Option<usize> {
    (from..x.len()).find(|&k| x[k] == value)
}

/// One exploration step from `T_{k-1} = from`: returns `S_k`.
fn next_s(x: &[i64], from: usize, eps_units: f64) -> Option<usize> {
    first_exceedance(x, from, x[from] as f64 + eps_units)
}

/// Run the exploration along a fixed word. Fails with `TraceTruncated`
/// if some stopping time falls beyond the end of the walk.
pub fn explore_word(x: &[i64], scale: f64, epsilon: f64, word: &[Letter]) -> Result<ExplorationTrace> {
    let units = epsilon / scale;
    let mut trace = ExplorationTrace { epsilon, word: word_string(word), s: vec![], t: vec![], chi: vec![] };
    let mut from = 0usize;
    for (k, &letter) in word.iter().enumerate() {
        let s = next_s(x, from, units).ok_or(Error::TraceTruncated { resolved: k })?;
        trace.s.push(s);
        match letter {
            Letter::H => {
                trace.t.push(Some(s));
                from = s;
            }
            Letter::B => {
                let pre = x[s - 1];
                trace.chi.push((x[from] - pre) as f64 / units);
                let t = first_hit(x, s, pre).ok_or(Error::TraceTruncated { resolved: k })?;
                trace.t.push(Some(t));
                from = t;
            }
        }
    }
    Ok(trace)
}

/// Slits of the walk: one per up-step, at the integer time it lands.
pub fn walk_slits(x: &[i64], scale: f64) -> SlitList {
    let slits = (1..x.len())
        .filter(|&k| x[k] > x[k - 1])
        .map(|k| Slit { x: k as f64, bottom: scale * x[k - 1] as f64, top: scale * x[k] as f64 })
        .collect();
    SlitList { slits, circumference: x.len() as f64 }
}

/// Word read off the `V`-optimal path from `(0, X_0)` to `(t, X_t)`: at
/// each `S_k` the witness side decides the letter. Exploration stops at
/// `l = inf{k : S_{k+1} >= t}`; stopping times beyond the walk count as
/// infinite.
pub fn word_of_optimal_path(x: &[i64], scale: f64, t: usize, epsilon: f64) -> Result<(VResult, ExplorationTrace)> {
    if t == 0 || t >= x.len() {
        return Err(Error::InvalidParameter(format!("target index {t} outside 1..{}", x.len())));
    }
    let slits = walk_slits(x, scale);
    let h = |k: usize| scale * x[k] as f64;
    let v = v_distance(&slits, ProfileMode::Line, 0.0, h(0), t as f64, h(t));
    let units = epsilon / scale;
    let mut trace = ExplorationTrace { epsilon, word: String::new(), s: vec![], t: vec![], chi: vec![] };
    let mut from = 0usize;
    loop {
        let s = match next_s(&x[..=t], from, units) {
            Some(s) if s < t => s,
            _ => break,
        };
        let side = v.side_at(s as f64).ok_or(Error::AmbiguousSide { x: s as f64 })?;
        trace.s.push(s);
        match side {
            Side::Above => {
                trace.word.push('h');
                trace.t.push(Some(s));
                from = s;
            }
            Side::Below => {
                trace.word.push('b');
                let pre = x[s - 1];
                trace.chi.push((x[from] - pre) as f64 / units);
                match first_hit(&x[..=t], s, pre) {
                    Some(tk) => {
                        trace.t.push(Some(tk));
                        from = tk;
                    }
                    None => {
                        trace.t.push(None);
                        break;
                    }
                }
            }
        }
    }
    Ok((v, trace))
}

/// `D*(0, t)` on the walk in line mode with chain points at integer times.
pub fn glued_from_origin(x: &[i64], scale: f64, t: usize) -> f64 {
    let values: Vec<f64> = x[..=t].iter().map(|&v| scale * v as f64).collect();
    LineTrees::new(&values).glued_distances(0)[t]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WordBoundsReport {
    pub epsilon: f64,
    pub v: f64,
    pub dstar: f64,
    pub count_b: usize,
    pub count_h: usize,
    pub sum_chi: f64,
    /// `V + 2 eps #b + 2 eps - D*`.
    pub upper_slack: f64,
    /// `V - eps #h - eps sum chi`.
    pub lower_slack: f64,
}

pub fn check_word_bounds(trace: &ExplorationTrace, v: f64, dstar: f64) -> Result<WordBoundsReport> {
    let eps = trace.epsilon;
    let (nb, nh) = (trace.count_b(), trace.count_h());
    let report = WordBoundsReport {
        epsilon: eps,
        v,
        dstar,
        count_b: nb,
        count_h: nh,
        sum_chi: trace.sum_chi(),
        upper_slack: v + 2.0 * eps * nb as f64 + 2.0 * eps - dstar,
        lower_slack: v - eps * nh as f64 - eps * trace.sum_chi(),
    };
    let tol = 1e-9 * (1.0 + v.abs() + dstar.abs());
    if report.upper_slack < -tol {
        return Err(Error::InequalityViolation(format!(
            "D* = {dstar} exceeds V + 2 eps #b + 2 eps = {} (word {})",
            dstar + report.upper_slack,
            trace.word
        )));
    }
    if report.lower_slack < -tol {
        return Err(Error::InequalityViolation(format!(
            "V = {v} is below eps #h + eps sum chi = {} (word {})",
            v - report.lower_slack,
            trace.word
        )));
    }
    Ok(report)
}

/// Unconditioned walk `X_0 = 0, ..., X_len`.
pub fn sample_line_walk<R: Rng + ?Sized>(law: &StepLaw, len: usize, rng: &mut R) -> Vec<i64> {
    let mut x = Vec::with_capacity(len + 1);
    let mut h = 0i64;
    x.push(0);
    for _ in 0..len {
        h += law.sample(rng);
        x.push(h);
    }
    x
}

/// Sampler of the first underjump `chi_1` at integer level `level`.
///
/// Zero steps are skipped and runs of `-1` steps between positive steps
/// are drawn as one geometric variable. A walk that sinks below
/// `-depth * level` before crossing is reported as `+inf`: its underjump
/// exceeds any `r` well below `depth`, up to the small chance of climbing
/// back and crossing from within `r * level` of the start. `max_jumps`
/// is a safety cap, also reported as `+inf`.
#[derive(Debug, Clone)]
pub struct UnderjumpSampler {
    law: StepLaw,
    level: i64,
    floor: i64,
    max_jumps: u64,
    gaps: Geometric,
}

impl UnderjumpSampler {
    pub fn new(law: StepLaw, level: i64, depth: f64, max_jumps: u64) -> Result<Self> {
        if level < 1 || !(depth > 0.0) {
            return Err(Error::InvalidParameter("level and depth must be positive".into()));
        }
        let up = law.positive_prob();
        let p_up = up / (up + law.down_prob());
        let gaps = Geometric::new(p_up).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let floor = -(depth * level as f64).ceil() as i64;
        Ok(UnderjumpSampler { law, level, floor, max_jumps, gaps })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x = 0i64;
        for _ in 0..self.max_jumps {
            x -= self.gaps.sample(rng) as i64;
            if x < self.floor {
                return f64::INFINITY;
            }
            let jump = self.law.sample_positive(rng);
            if x + jump >= self.level {
                return -(x as f64) / self.level as f64;
            }
            x += jump;
        }
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub beta: f64,
    pub fit: LinearFit,
    pub r: Vec<f64>,
    pub survival: Vec<f64>,
    pub samples: usize,
    pub censored: usize,
    pub min_chi: f64,
}

/// Fit `P(chi > r) ~ c (r+1)^{-beta}` over a log grid of `r in [1, 100]`.
pub fn underjump_stats(samples: &[f64]) -> TailFit {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let r = log_grid(1.0, 100.0, 15);
    let survival: Vec<f64> =
        r.iter().map(|&rr| (sorted.len() - sorted.partition_point(|&c| c <= rr)) as f64 / n).collect();
    let lx: Vec<f64> = r.iter().map(|rr| (rr + 1.0).ln()).collect();
    let ly: Vec<f64> = survival.iter().map(|s| s.ln()).collect();
    let fit = linear_fit(&lx, &ly);
    TailFit {
        beta: -fit.slope,
        fit,
        r,
        survival,
        samples: samples.len(),
        censored: samples.iter().filter(|c| c.is_infinite()).count(),
        min_chi: sorted.first().copied().unwrap_or(f64::NAN),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BadWordPoint {
    pub m: usize,
    pub q: f64,
    pub log_p: f64,
    pub std_err: f64,
    pub theta: f64,
}

/// Exponential tilt `theta >= 0` making the tilted pool mean equal `q`
/// (zero when the untilted mean is already below `q`).
pub fn tilt_for_mean(pool: &[f64], q: f64) -> f64 {
    let finite: Vec<f64> = pool.iter().cloned().filter(|c| c.is_finite()).collect();
    let tilted_mean = |theta: f64| {
        let shift = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let (mut num, mut den) = (0.0, 0.0);
        for &c in &finite {
            let w = (-theta * (c - shift)).exp();
            num += w * c;
            den += w;
        }
        num / den
    };
    if pool.iter().any(|c| c.is_infinite()) || tilted_mean(0.0) > q {
        let (mut lo, mut hi) = (0.0, 1.0);
        while tilted_mean(hi) > q && hi < 1e6 {
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if tilted_mean(mid) > q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    } else {
        0.0
    }
}

/// Importance-sampling estimate of `log P(chi_1 + ... + chi_m <= q m)`
/// for `chi` drawn from the empirical law of `pool`.
pub fn badword_probability<R: Rng + ?Sized>(pool: &[f64], q: f64, m: usize, trials: usize, rng: &mut R) -> BadWordPoint {
    let theta = tilt_for_mean(pool, q);
    let finite: Vec<f64> = pool.iter().cloned().filter(|c| c.is_finite()).collect();
    let weights: Vec<f64> = finite.iter().map(|&c| (-theta * c).exp()).collect();
    let z = weights.iter().sum::<f64>() / pool.len() as f64;
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    // log-likelihood ratios, accumulated relative to a reference to avoid overflow
    let mut log_ratios = Vec::new();
    for _ in 0..trials {
        let mut sum = 0.0;
        for _ in 0..m {
            let u = rng.gen::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c <= u).min(finite.len() - 1);
            sum += finite[i];
        }
        if sum <= q * m as f64 {
            log_ratios.push(m as f64 * z.ln() + theta * sum);
        }
    }
    if log_ratios.is_empty() {
        return BadWordPoint { m, q, log_p: f64::NEG_INFINITY, std_err: f64::INFINITY, theta };
    }
    let top = log_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_ratios.iter().map(|l| (l - top).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / trials as f64;
    let second = scaled.iter().map(|s| s * s).sum::<f64>() / trials as f64;
    let var = (second - mean * mean).max(0.0) / trials as f64;
    BadWordPoint { m, q, log_p: top + mean.ln(), std_err: var.sqrt() / mean, theta }
}
