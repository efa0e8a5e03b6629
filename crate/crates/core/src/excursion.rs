//! First-passage excursions of the step walk, coded times and rescaling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ln_binomial_pmf;
use crate::steps::StepLaw;

/// Default cap on rejection rounds in [`sample_bridge`].
pub const DEFAULT_RETRY_BUDGET: u64 = 1_000_000;

/// A walk with steps `>= -1` started at 0 that stays `>= 0` up to time
/// `n` and reaches `-1` at time `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteExcursion {
    steps: Vec<i64>,
    #[serde(skip)]
    partial: Vec<i64>,
}

impl DiscreteExcursion {
    pub fn from_steps(steps: Vec<i64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::MalformedWalk("no steps".into()));
        }
        let mut partial = Vec::with_capacity(steps.len() + 1);
        partial.push(0i64);
        let mut h = 0i64;
        for (k, &s) in steps.iter().enumerate() {
            if s < -1 {
                return Err(Error::MalformedWalk(format!("step {k} is {s} < -1")));
            }
            h += s;
            if h < 0 && k + 1 < steps.len() {
                return Err(Error::MalformedWalk(format!("walk hits -1 early at time {}", k + 1)));
            }
            partial.push(h);
        }
        if h != -1 {
            return Err(Error::MalformedWalk(format!("walk ends at {h}, expected -1")));
        }
        Ok(DiscreteExcursion { steps, partial })
    }

    /// Number of vertices `n`; the walk has `n + 1` steps.
    pub fn n(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn steps(&self) -> &[i64] {
        &self.steps
    }

    pub fn into_steps(self) -> Vec<i64> {
        self.steps
    }

    /// `E_n(k)` for `k = 0..=n+1`.
    pub fn heights(&self) -> &[i64] {
        &self.partial
    }

    pub fn height(&self, k: usize) -> i64 {
        self.partial[k]
    }

    pub fn max_height(&self) -> i64 {
        *self.partial.iter().max().unwrap()
    }

    /// Linear interpolation of `E_n` at a real time in `[0, n+1]`.
    pub fn interpolated(&self, t: f64) -> f64 {
        let last = self.steps.len() as f64;
        let t = t.clamp(0.0, last);
        let k = (t.floor() as usize).min(self.steps.len() - 1);
        let frac = t - k as f64;
        self.partial[k] as f64 + frac * self.steps[k] as f64
    }

    pub fn coded_times(&self) -> CodedTimes {
        coded_times(self)
    }

    pub fn rescale(&self, alpha: f64) -> RescaledExcursion {
        rescale(self, alpha)
    }
}

/// Sample `n + 1` i.i.d. steps conditioned on summing to `-1`.
///
/// Exact rejection sampler: draw the number `M` of positive steps and
/// their values, then accept with probability proportional to the
/// binomial probability that the remaining `{-1, 0}` steps contain exactly
/// `S + 1` down-steps, where `S` is the positive total.
pub fn sample_bridge<R: Rng + ?Sized>(law: &StepLaw, n: usize, rng: &mut R, max_rounds: u64) -> Result<Vec<i64>> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let len = n + 1;
    let t1 = law.positive_prob().clamp(0.0, 1.0);
    let down = law.down_prob();
    let p = down / (down + law.zero_prob());
    // A valid outcome has S >= M and S + 1 <= len - M, so len - M >= (len+1)/2.
    let min_rest = (len + 1).div_ceil(2);
    let ln_mode = |trials: usize| ln_binomial_pmf(binomial_mode(trials, p), trials as u64, p);
    let ln_c = (min_rest..=len).map(ln_mode).fold(f64::NEG_INFINITY, f64::max);
    let count_dist = Binomial::new(len as u64, t1).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut positives: Vec<i64> = Vec::new();
    for _ in 0..max_rounds {
        let m = count_dist.sample(rng) as usize;
        let rest = len - m;
        if rest < min_rest {
            continue;
        }
        let ln_mode_rest = ln_mode(rest);
        if rng.gen::<f64>() >= (ln_mode_rest - ln_c).exp() {
            continue;
        }
        positives.clear();
        let mut total: u64 = 0;
        for _ in 0..m {
            let v = law.sample_positive(rng);
            positives.push(v);
            total = total.saturating_add(v as u64);
        }
        if total + 1 > rest as u64 {
            continue;
        }
        let downs = total as usize + 1;
        let ln_acc = ln_binomial_pmf(downs as u64, rest as u64, p) - ln_mode_rest;
        if rng.gen::<f64>() >= ln_acc.exp() {
            continue;
        }
        let mut steps = Vec::with_capacity(len);
        steps.extend_from_slice(&positives);
        steps.extend(std::iter::repeat(-1).take(downs));
        steps.resize(len, 0);
        steps.shuffle(rng);
        return Ok(steps);
    }
    Err(Error::RetryBudgetExceeded { rounds: max_rounds, n })
}

fn binomial_mode(trials: usize, p: f64) -> u64 {
    (((trials + 1) as f64 * p).floor() as u64).min(trials as u64)
}

/// Rotate a bridge (steps `>= -1` summing to `-1`) into the unique
/// first-passage excursion among its cyclic shifts: start right after the
/// first time the partial sums reach their minimum.
pub fn cycle_shift_to_excursion(bridge: &[i64]) -> Result<DiscreteExcursion> {
    if bridge.iter().any(|&s| s < -1) || bridge.iter().sum::<i64>() != -1 {
        return Err(Error::MalformedWalk("bridge must have steps >= -1 summing to -1".into()));
    }
    let (mut h, mut best, mut at) = (0i64, i64::MAX, 0usize);
    for (k, &s) in bridge.iter().enumerate() {
        h += s;
        if h < best {
            best = h;
            at = k + 1;
        }
    }
    let start = at % bridge.len();
    let mut steps = Vec::with_capacity(bridge.len());
    steps.extend_from_slice(&bridge[start..]);
    steps.extend_from_slice(&bridge[..start]);
    DiscreteExcursion::from_steps(steps)
}

pub fn sample_excursion<R: Rng + ?Sized>(law: &StepLaw, n: usize, rng: &mut R) -> Result<DiscreteExcursion> {
    let bridge = sample_bridge(law, n, rng, DEFAULT_RETRY_BUDGET)?;
    cycle_shift_to_excursion(&bridge)
}

/// All excursions with `n` vertices, in lexicographic order of steps.
pub fn enumerate_excursions(n: usize) -> Vec<DiscreteExcursion> {
    fn rec(n: usize, h: i64, steps: &mut Vec<i64>, out: &mut Vec<DiscreteExcursion>) {
        let remaining = n + 1 - steps.len();
        if remaining == 1 {
            if h == 0 {
                steps.push(-1);
                out.push(DiscreteExcursion::from_steps(steps.clone()).unwrap());
                steps.pop();
            }
            return;
        }
        // must come down from h to 0 with remaining-1 steps of size >= -1
        for s in -1..=(remaining as i64) {
            let next = h + s;
            if next < 0 || next > (remaining - 1) as i64 - 1 {
                continue;
            }
            steps.push(s);
            rec(n, next, steps, out);
            steps.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, &mut Vec::with_capacity(n + 1), &mut out);
    out
}

/// The coded times `R_n = {k + 1/2 : step k = -1}`, stored by their
/// integer index `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedTimes {
    down_steps: Vec<usize>,
}

pub fn coded_times(e: &DiscreteExcursion) -> CodedTimes {
    let down_steps = e.steps().iter().enumerate().filter(|(_, &s)| s == -1).map(|(k, _)| k).collect();
    CodedTimes { down_steps }
}

impl CodedTimes {
    pub fn len(&self) -> usize {
        self.down_steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.down_steps.is_empty()
    }

    /// Integer indices `k` of the down-steps.
    pub fn indices(&self) -> &[usize] {
        &self.down_steps
    }

    pub fn r_set(&self) -> Vec<f64> {
        self.down_steps.iter().map(|&k| k as f64 + 0.5).collect()
    }

    /// The coded time of the bottom vertex, always `n + 1/2`.
    pub fn bottom(&self) -> f64 {
        *self.down_steps.last().unwrap() as f64 + 0.5
    }

    /// Position in `R_n` of `t°`: the largest coded time `<= t`, or the
    /// largest coded time when `t` is below all of them.
    pub fn circ_index(&self, t: f64) -> usize {
        let i = self.down_steps.partition_point(|&k| k as f64 + 0.5 <= t);
        if i == 0 {
            self.down_steps.len() - 1
        } else {
            i - 1
        }
    }

    pub fn t_circ(&self, t: f64) -> f64 {
        self.down_steps[self.circ_index(t)] as f64 + 0.5
    }

    /// Index into `R_n` of a coded time given by its down-step index.
    pub fn position_of(&self, k: usize) -> Option<usize> {
        self.down_steps.binary_search(&k).ok()
    }
}

/// Height of a coded time on the interpolated walk: `E_n(k) - 1/2`.
pub fn coded_height(e: &DiscreteExcursion, k: usize) -> f64 {
    e.height(k) as f64 - 0.5
}

/// `Ē_n(t) = E_n(t°)`.
pub fn ebar(e: &DiscreteExcursion, ct: &CodedTimes, t: f64) -> f64 {
    coded_height(e, ct.indices()[ct.circ_index(t)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub bottom: f64,
    pub top: f64,
}

/// Rescaled excursion: time `r / (n+1)` for `r in R_n`, value
/// `n^{-1/alpha} Ē_n(r)`, and up-jumps at `(k+1)/(n+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledExcursion {
    pub n: usize,
    pub alpha: f64,
    pub scale: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub jumps: Vec<Jump>,
}

pub fn rescale(e: &DiscreteExcursion, alpha: f64) -> RescaledExcursion {
    let n = e.n();
    let width = (n + 1) as f64;
    let scale = (n as f64).powf(-1.0 / alpha);
    let ct = e.coded_times();
    let times = ct.indices().iter().map(|&k| (k as f64 + 0.5) / width).collect();
    let values = ct.indices().iter().map(|&k| scale * coded_height(e, k)).collect();
    let jumps = e
        .steps()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(k, _)| Jump {
            time: (k + 1) as f64 / width,
            bottom: scale * e.height(k) as f64,
            top: scale * e.height(k + 1) as f64,
        })
        .collect();
    RescaledExcursion { n, alpha, scale, times, values, jumps }
}

impl RescaledExcursion {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Càdlàg value at time `t in [0, 1)`.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            *self.values.last().unwrap()
        } else {
            self.values[i - 1]
        }
    }

    /// Total size of jumps exceeding `threshold`.
    pub fn jump_mass_above(&self, threshold: f64) -> f64 {
        self.jumps.iter().map(|j| j.top - j.bottom).filter(|&d| d > threshold).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::stats::chi_square_gof;
    use std::collections::HashMap;

    fn brute_force_excursions(n: usize) -> Vec<Vec<i64>> {
        let len = n + 1;
        let mut out = Vec::new();
        let base = (n + 2) as i64;
        let total = (base as u64).pow(len as u32);
        for code in 0..total {
            let mut c = code;
            let steps: Vec<i64> = (0..len)
                .map(|_| {
                    let d = (c % base as u64) as i64 - 1;
                    c /= base as u64;
                    d
                })
                .collect();
            let mut h = 0;
            let mut ok = true;
            for (k, s) in steps.iter().enumerate() {
                h += s;
                if (k + 1 < len && h < 0) || (k + 1 == len && h != -1) {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(steps);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn catalan_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| enumerate_excursions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 14, 42]);
        for n in 1..=5 {
            let fast: Vec<Vec<i64>> = enumerate_excursions(n).into_iter().map(|e| e.into_steps()).collect();
            assert_eq!(fast, brute_force_excursions(n));
        }
    }

    #[test]
    fn cycle_shift_examples() {
        assert_eq!(cycle_shift_to_excursion(&[-1, 1, -1]).unwrap().steps(), &[1, -1, -1]);
        assert_eq!(cycle_shift_to_excursion(&[1, -1, 0, -1]).unwrap().steps(), &[1, -1, 0, -1]);
    }

    #[test]
    fn exactly_one_rotation_is_an_excursion() {
        let len = 4;
        for code in 0..5u32.pow(len) {
            let mut c = code;
            let steps: Vec<i64> = (0..len)
                .map(|_| {
                    let d = (c % 5) as i64 - 1;
                    c /= 5;
                    d
                })
                .collect();
            if steps.iter().sum::<i64>() != -1 {
                continue;
            }
            let valid: Vec<usize> = (0..len as usize)
                .filter(|&r| {
                    let rot: Vec<i64> = steps[r..].iter().chain(&steps[..r]).cloned().collect();
                    DiscreteExcursion::from_steps(rot).is_ok()
                })
                .collect();
            assert_eq!(valid.len(), 1, "{steps:?}");
            let shifted = cycle_shift_to_excursion(&steps).unwrap();
            let r = valid[0];
            let expect: Vec<i64> = steps[r..].iter().chain(&steps[..r]).cloned().collect();
            assert_eq!(shifted.steps(), expect.as_slice());
        }
    }

    #[test]
    fn coded_time_examples() {
        let e = DiscreteExcursion::from_steps(vec![0, 0, 0, -1]).unwrap();
        let ct = e.coded_times();
        assert_eq!(ct.r_set(), vec![3.5]);
        assert_eq!(ct.bottom(), 3.5);
        let e = DiscreteExcursion::from_steps(vec![1, 0, -1, -1]).unwrap();
        let ct = e.coded_times();
        assert_eq!(ct.r_set(), vec![2.5, 3.5]);
        assert_eq!(ct.t_circ(3.0), 2.5);
        assert_eq!(ct.t_circ(1.0), 3.5);
        assert_eq!(ct.t_circ(2.5), 2.5);
        assert_eq!(ebar(&e, &ct, 3.0), 0.5);
        assert_eq!(ebar(&e, &ct, 3.5), -0.5);
        assert_eq!(ebar(&e, &ct, 0.2), -0.5);
    }

    #[test]
    fn two_point_law_bridges_balanced() {
        let law = StepLaw::finite(vec![0.5, 0.5]).unwrap();
        let mut r = rng::from_seed(1);
        let mut first_down = 0;
        let trials = 20_000;
        for _ in 0..trials {
            let b = sample_bridge(&law, 1, &mut r, 1000).unwrap();
            assert!(b == vec![0, -1] || b == vec![-1, 0]);
            first_down += (b[0] == -1) as usize;
        }
        let frac = first_down as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / trials as f64).sqrt() + 1e-3);
    }

    #[test]
    fn bridge_law_matches_enumeration() {
        // mu(-1)=mu(0)=mu(1)=1/3: every tuple with sum -1 is equally likely
        let law = StepLaw::finite(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let mut tuples = Vec::new();
        for code in 0..81u32 {
            let mut c = code;
            let t: Vec<i64> = (0..4)
                .map(|_| {
                    let d = (c % 3) as i64 - 1;
                    c /= 3;
                    d
                })
                .collect();
            if t.iter().sum::<i64>() == -1 {
                tuples.push(t);
            }
        }
        let index: HashMap<Vec<i64>, usize> = tuples.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut counts = vec![0u64; tuples.len()];
        let mut r = rng::from_seed(2);
        for _ in 0..100_000 {
            let b = sample_bridge(&law, 3, &mut r, 1000).unwrap();
            assert_eq!(b.iter().sum::<i64>(), -1);
            counts[index[&b]] += 1;
        }
        let probs = vec![1.0 / tuples.len() as f64; tuples.len()];
        let (_, _, p) = chi_square_gof(&counts, &probs);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn excursion_law_matches_boltzmann_weights() {
        let law = StepLaw::stable(1.5).unwrap();
        let all = enumerate_excursions(4);
        let weights: Vec<f64> = all.iter().map(|e| e.steps().iter().map(|&s| law.pmf(s)).product()).collect();
        let z: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let index: HashMap<Vec<i64>, usize> =
            all.iter().enumerate().map(|(i, e)| (e.steps().to_vec(), i)).collect();
        let mut counts = vec![0u64; all.len()];
        let mut r = rng::from_seed(3);
        for _ in 0..100_000 {
            let e = sample_excursion(&law, 4, &mut r).unwrap();
            counts[index[e.steps()]] += 1;
        }
        // drop cells with negligible mass (steps of size 1 are impossible)
        let keep: Vec<usize> = (0..all.len()).filter(|&i| probs[i] > 0.0).collect();
        for i in 0..all.len() {
            if probs[i] == 0.0 {
                assert_eq!(counts[i], 0);
            }
        }
        let obs: Vec<u64> = keep.iter().map(|&i| counts[i]).collect();
        let pr: Vec<f64> = keep.iter().map(|&i| probs[i]).collect();
        let (_, _, p) = chi_square_gof(&obs, &pr);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn large_excursions_are_first_passage() {
        let law = StepLaw::stable(1.5).unwrap();
        let mut r = rng::from_seed(4);
        for n in [10, 1000, 20_000] {
            let e = sample_excursion(&law, n, &mut r).unwrap();
            assert_eq!(e.n(), n);
            assert_eq!(*e.heights().last().unwrap(), -1);
            assert_eq!(e.heights()[..=n].iter().min(), Some(&0));
            let ct = e.coded_times();
            assert_eq!(ct.bottom(), n as f64 + 0.5);
            let ups: i64 = e.steps().iter().filter(|&&s| s > 0).sum();
            assert_eq!(ups, ct.len() as i64 - 1);
        }
    }

    #[test]
    fn rescaled_values_agree_on_coded_times() {
        let law = StepLaw::stable(1.5).unwrap();
        let mut r = rng::from_seed(5);
        let e = sample_excursion(&law, 500, &mut r).unwrap();
        let re = e.rescale(1.5);
        let scale = 500f64.powf(-1.0 / 1.5);
        assert!((re.max() - scale * (e.max_height() as f64 - 0.5)).abs() < 1e-12);
        for (i, &k) in e.coded_times().indices().iter().enumerate() {
            assert_eq!(re.values[i], scale * (e.height(k) as f64 - 0.5));
            assert_eq!(re.value_at(re.times[i]), re.values[i]);
        }
    }
}
