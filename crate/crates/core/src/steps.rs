//! Step laws on `{-1, 0, 1, 2, ...}` and the spectrally positive stable
//! increments they approximate.
//!
//! The stable-domain law built by [`StepLaw::stable`] has the exact tail
//! `mu([k, inf)) = k^{-alpha} / |Gamma(1 - alpha)|` for every `k >= 2`,
//! puts no mass on `1`, and balances the mean with the mass at `-1`.
//! The remainder goes to `0`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{abs_gamma_one_minus, hurwitz_zeta};

/// Tolerance for the mass and mean certificates.
pub const CERTIFICATE_TOL: f64 = 1e-12;

/// A law on `{-1, 0, 1, ...}`: explicit probabilities for
/// `k in {-1, ..., cutoff - 1}` and a Pareto tail
/// `mu([k, inf)) = tail_constant * k^{-alpha}` for `k >= cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLaw {
    pub alpha: f64,
    /// `probs_head[i] = mu(i - 1)`.
    pub probs_head: Vec<f64>,
    pub tail_constant: f64,
    pub cutoff: i64,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl StepLaw {
    /// The stable-domain law for `1 < alpha < 2`.
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (1,2), got {alpha}")));
        }
        let c = 1.0 / abs_gamma_one_minus(alpha);
        let tail_from_one = c * 2f64.powf(-alpha);
        // sum_{k>=1} mu([k,inf)) = mu([2,inf)) + c * zeta(alpha, 2)
        let down = tail_from_one + c * hurwitz_zeta(alpha, 2.0);
        let zero = 1.0 - down - tail_from_one;
        if zero < 0.0 {
            return Err(Error::InfeasibleLaw { alpha, down, tail: tail_from_one, remainder: zero });
        }
        Self::from_parts(alpha, vec![down, zero, 0.0], c)
    }

    /// A finitely supported law with `probs[i] = mu(i - 1)`.
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty law".into()));
        }
        Self::from_parts(2.0, probs, 0.0)
    }

    pub fn from_parts(alpha: f64, probs_head: Vec<f64>, tail_constant: f64) -> Result<Self> {
        if probs_head.is_empty() || probs_head.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter("head probabilities must be finite and nonnegative".into()));
        }
        if tail_constant < 0.0 || (tail_constant > 0.0 && !(alpha > 1.0)) {
            return Err(Error::InvalidParameter("tail needs alpha > 1 and a nonnegative constant".into()));
        }
        let cutoff = probs_head.len() as i64 - 1;
        let mut law = StepLaw { alpha, probs_head, tail_constant, cutoff, cumulative: Vec::new() };
        law.rebuild_cache();
        let mass = law.total_mass();
        if (mass - 1.0).abs() > CERTIFICATE_TOL {
            return Err(Error::InvalidParameter(format!("total mass {mass} differs from 1")));
        }
        if law.probs_head[0] <= 0.0 {
            return Err(Error::InvalidParameter("law must charge -1".into()));
        }
        Ok(law)
    }

    fn rebuild_cache(&mut self) {
        let mut acc = 0.0;
        self.cumulative = self
            .probs_head
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
    }

    /// Restore the sampling cache after deserialization.
    pub fn validated(mut self) -> Result<Self> {
        self.rebuild_cache();
        Self::from_parts(self.alpha, self.probs_head, self.tail_constant)
    }

    pub fn has_tail(&self) -> bool {
        self.tail_constant > 0.0
    }

    /// `mu(k)`.
    pub fn pmf(&self, k: i64) -> f64 {
        if k < -1 {
            0.0
        } else if k < self.cutoff {
            self.probs_head[(k + 1) as usize]
        } else if self.has_tail() {
            let kf = k as f64;
            self.tail_constant * (kf.powf(-self.alpha) - (kf + 1.0).powf(-self.alpha))
        } else {
            0.0
        }
    }

    /// `mu([k, inf))`.
    pub fn tail(&self, k: i64) -> f64 {
        if k <= -1 {
            return 1.0;
        }
        if k >= self.cutoff {
            return self.pareto_tail(k);
        }
        let head: f64 = self.probs_head[(k + 1) as usize..].iter().sum();
        head + self.pareto_tail(self.cutoff)
    }

    fn pareto_tail(&self, k: i64) -> f64 {
        if self.has_tail() && k >= 1 {
            self.tail_constant * (k as f64).powf(-self.alpha)
        } else {
            0.0
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probs_head.iter().sum::<f64>() + self.pareto_tail(self.cutoff)
    }

    /// Mean as `-mu(-1) + sum_{k>=1} mu([k, inf))`, with the Pareto part
    /// summed analytically.
    pub fn mean(&self) -> f64 {
        let mut sum = 0.0;
        for k in 1..=self.cutoff {
            sum += self.tail(k);
        }
        if self.has_tail() {
            sum += self.tail_constant * hurwitz_zeta(self.alpha, (self.cutoff + 1) as f64);
        }
        sum - self.probs_head[0]
    }

    pub fn down_prob(&self) -> f64 {
        self.probs_head[0]
    }

    pub fn zero_prob(&self) -> f64 {
        self.probs_head.get(1).copied().unwrap_or(0.0)
    }

    pub fn positive_prob(&self) -> f64 {
        self.tail(1)
    }

    /// Inverse-CDF sample. The Pareto tail is inverted exactly:
    /// `floor(cutoff * V^{-1/alpha})` with `V` uniform on `(0,1]` has
    /// `P(X >= k) = (k / cutoff)^{-alpha}` for integer `k >= cutoff`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        let head_total = *self.cumulative.last().unwrap();
        if u < head_total || !self.has_tail() {
            let idx = self.cumulative.partition_point(|&c| c <= u).min(self.probs_head.len() - 1);
            return idx as i64 - 1;
        }
        self.sample_pareto(rng)
    }

    /// Sample from the law conditioned on `X >= 1`.
    pub fn sample_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let head_pos: f64 = self.probs_head.iter().skip(2).sum();
        let total = head_pos + self.pareto_tail(self.cutoff);
        debug_assert!(total > 0.0);
        let u: f64 = rng.gen::<f64>() * total;
        if u < head_pos || !self.has_tail() {
            let mut acc = 0.0;
            for (i, p) in self.probs_head.iter().enumerate().skip(2) {
                acc += p;
                if u < acc {
                    return i as i64 - 1;
                }
            }
            // rounding at the top of the head
            return self.probs_head.iter().rposition(|&p| p > 0.0).unwrap() as i64 - 1;
        }
        self.sample_pareto(rng)
    }

    fn sample_pareto<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let v: f64 = 1.0 - rng.gen::<f64>();
        let x = self.cutoff as f64 * v.powf(-1.0 / self.alpha);
        if x >= 9.0e18 {
            i64::MAX / 4
        } else {
            x.floor() as i64
        }
    }

    /// JSON form `{alpha, probs_head, tail_constant, cutoff}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("law serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let law: StepLaw = serde_json::from_str(s)?;
        law.validated()
    }
}

/// Spectrally positive stable increments normalized by
/// `E[exp(-lambda X_t)] = exp(t lambda^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSampler {
    pub alpha: f64,
}

impl StableSampler {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (1,2), got {alpha}")));
        }
        Ok(StableSampler { alpha })
    }

    /// Scale of `X_dt` in the `S_alpha(sigma, 1, 0)` parametrization.
    pub fn scale(&self, dt: f64) -> f64 {
        (dt * (PI * self.alpha / 2.0).cos().abs()).powf(1.0 / self.alpha)
    }

    /// Chambers-Mallows-Stuck draw of `X_dt`.
    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        assert!(dt > 0.0, "dt must be positive");
        let a = self.alpha;
        let t = (PI * a / 2.0).tan();
        let b = t.atan() / a;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * a));
        let v = PI * (rng.gen::<f64>() - 0.5);
        let w = -(1.0 - rng.gen::<f64>()).ln();
        let z = s * (a * (v + b)).sin() / v.cos().powf(1.0 / a)
            * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a);
        self.scale(dt) * z
    }

    /// Levy tail `Pi([r, inf)) = r^{-alpha} / |Gamma(1 - alpha)|`.
    pub fn levy_tail(&self, r: f64) -> f64 {
        r.powf(-self.alpha) / abs_gamma_one_minus(self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::stats::{ks_two_sample, linear_fit, zeta};

    #[test]
    fn stable_law_alpha_15_values() {
        let law = StepLaw::stable(1.5).unwrap();
        // independent route: zeta(3/2) and |Gamma(-1/2)| = 2 sqrt(pi)
        let c = 1.0 / (2.0 * PI.sqrt());
        let tail2 = c * 2f64.powf(-1.5);
        let down = tail2 + c * (zeta(1.5) - 1.0);
        assert!((law.down_prob() - down).abs() < 1e-13);
        assert!((law.down_prob() - 0.5545).abs() < 5e-4);
        assert!((law.zero_prob() - 0.3458).abs() < 5e-4);
        assert_eq!(law.pmf(1), 0.0);
        assert!((law.tail(2) - tail2).abs() < 1e-15);
        assert!((law.tail(4) - 1.0 / (2.0 * PI.sqrt() * 8.0)).abs() < 1e-15);
    }

    #[test]
    fn certificates_hold_across_alpha() {
        for alpha in [1.2, 1.3, 1.5, 1.7, 1.8, 1.95] {
            let law = StepLaw::stable(alpha).unwrap();
            assert!((law.total_mass() - 1.0).abs() < CERTIFICATE_TOL);
            assert!(law.mean().abs() < CERTIFICATE_TOL, "alpha={alpha} mean={}", law.mean());
            for k in 2..50 {
                let exact = (k as f64).powf(-alpha) / abs_gamma_one_minus(alpha);
                assert!((law.tail(k) - exact).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn feasible_down_to_alpha_near_one() {
        // the zero-step remainder shrinks like (alpha-1)^2 but stays positive
        let mut prev = f64::INFINITY;
        for alpha in [1.3, 1.1, 1.05, 1.01, 1.001] {
            let law = StepLaw::stable(alpha).unwrap();
            assert!(law.zero_prob() > 0.0 && law.zero_prob() < prev);
            prev = law.zero_prob();
        }
        assert!((StepLaw::stable(1.01).unwrap().zero_prob() - 1.606778e-4).abs() < 1e-9);
        assert!(matches!(StepLaw::stable(2.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(StepLaw::stable(1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn degenerate_law_always_down() {
        let law = StepLaw::finite(vec![1.0]).unwrap();
        let mut r = rng::from_seed(1);
        assert!((0..1000).all(|_| law.sample(&mut r) == -1));
    }

    #[test]
    fn empirical_down_mass_within_three_sigma() {
        let law = StepLaw::stable(1.5).unwrap();
        let mut r = rng::from_seed(11);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| law.sample(&mut r) == -1).count() as f64;
        let p = law.down_prob();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn empirical_tail_slope() {
        let alpha = 1.5;
        let law = StepLaw::stable(alpha).unwrap();
        let mut r = rng::from_seed(12);
        let n = 10_000_000usize;
        let mut big: Vec<i64> = (0..n).map(|_| law.sample(&mut r)).filter(|&k| k >= 10).collect();
        big.sort_unstable();
        let ks: Vec<i64> = vec![10, 20, 50, 100, 200, 500, 1000];
        let (mut x, mut y) = (vec![], vec![]);
        for k in ks {
            let count = big.len() - big.partition_point(|&v| v < k);
            x.push((k as f64).ln());
            y.push((count as f64 / n as f64).ln());
        }
        let fit = linear_fit(&x, &y);
        assert!((fit.slope + alpha).abs() < 0.15, "slope {}", fit.slope);
    }

    #[test]
    fn sampling_is_reproducible() {
        let law = StepLaw::stable(1.3).unwrap();
        let a: Vec<i64> = {
            let mut r = rng::from_seed(99);
            (0..1000).map(|_| law.sample(&mut r)).collect()
        };
        let b: Vec<i64> = {
            let mut r = rng::from_seed(99);
            (0..1000).map(|_| law.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip() {
        let law = StepLaw::stable(1.7).unwrap();
        let back = StepLaw::from_json(&law.to_json()).unwrap();
        assert_eq!(back.probs_head, law.probs_head);
        assert_eq!(back.tail_constant, law.tail_constant);
        let mut a = rng::from_seed(3);
        let mut b = rng::from_seed(3);
        assert_eq!(law.sample(&mut a), back.sample(&mut b));
    }

    #[test]
    fn stable_laplace_normalization() {
        let s = StableSampler::new(1.5).unwrap();
        let mut r = rng::from_seed(5);
        let n = 1_000_000;
        let m = (0..n).map(|_| (-s.sample(1.0, &mut r)).exp()).sum::<f64>() / n as f64;
        assert!((m / 1f64.exp() - 1.0).abs() < 0.02, "E[exp(-X_1)] = {m}");
    }

    #[test]
    fn stable_self_similarity() {
        let s = StableSampler::new(1.5).unwrap();
        let mut r = rng::from_seed(6);
        let n = 100_000;
        let a: Vec<f64> = (0..n).map(|_| s.sample(2.0, &mut r)).collect();
        let k = 2f64.powf(1.0 / 1.5);
        let b: Vec<f64> = (0..n).map(|_| k * s.sample(1.0, &mut r)).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
    }

    #[test]
    fn stable_tail_exponent() {
        let alpha = 1.5;
        let s = StableSampler::new(alpha).unwrap();
        let mut r = rng::from_seed(8);
        let n = 2_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| s.sample(1.0, &mut r)).filter(|&x| x > 5.0).collect();
        xs.sort_by(f64::total_cmp);
        let (mut lx, mut ly) = (vec![], vec![]);
        for rr in [10.0, 20.0, 40.0, 80.0, 160.0] {
            let count = xs.len() - xs.partition_point(|&v| v < rr);
            lx.push(f64::ln(rr));
            ly.push((count as f64 / n as f64).ln());
        }
        let fit = linear_fit(&lx, &ly);
        assert!((fit.slope + alpha).abs() < 0.15, "slope {}", fit.slope);
        // level matches the Levy tail within 20% at r = 40
        let count = xs.len() - xs.partition_point(|&v| v < 40.0);
        let ratio = count as f64 / n as f64 / s.levy_tail(40.0);
        assert!((ratio - 1.0).abs() < 0.2, "ratio {ratio}");
    }
}
