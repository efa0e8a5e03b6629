//! Walk <-> multimer configuration bijection and slit geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::{DiscreteExcursion, RescaledExcursion};

/// A vertical multimer occupying `length + 1` vertices of `column`,
/// starting at height `bottom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multimer {
    pub column: usize,
    pub bottom: i64,
    pub length: i64,
}

/// Multimers sorted by column on the cylinder of width `n + 1`; `root`
/// is the column of the final down-step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultimerConfig {
    pub multimers: Vec<Multimer>,
    pub root: usize,
}

impl MultimerConfig {
    pub fn vertex_count(&self) -> i64 {
        self.multimers.iter().map(|m| m.length + 1).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# root={}\ncolumn,bottom,length\n", self.root);
        for m in &self.multimers {
            out.push_str(&format!("{},{},{}\n", m.column, m.bottom, m.length));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut root = None;
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.trim().strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("root=") {
                    root = Some(v.trim().parse().map_err(|_| Error::Parse(format!("bad root marker {v:?}")))?);
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let multimers = reader.deserialize().collect::<std::result::Result<Vec<Multimer>, _>>()?;
        let root = root.ok_or_else(|| Error::Parse("missing '# root=' header".into()))?;
        Ok(MultimerConfig { multimers, root })
    }
}

pub fn walk_to_multimers(e: &DiscreteExcursion) -> MultimerConfig {
    let multimers = e
        .steps()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= 0)
        .map(|(k, &s)| Multimer { column: k + 1, bottom: e.height(k), length: s })
        .collect();
    MultimerConfig { multimers, root: e.n() + 1 }
}

pub fn multimers_to_walk(m: &MultimerConfig) -> Result<DiscreteExcursion> {
    if m.multimers.iter().any(|x| x.length < 0) {
        return Err(Error::MalformedConfig("negative multimer length".into()));
    }
    let n = m.vertex_count() as usize;
    if n == 0 || m.root != n + 1 {
        return Err(Error::MalformedConfig(format!("root column {} does not match {} vertices", m.root, n)));
    }
    let mut steps = vec![-1i64; n + 1];
    let mut seen = vec![false; n + 1];
    for x in &m.multimers {
        if x.column == 0 || x.column > n + 1 || seen[x.column - 1] {
            return Err(Error::MalformedConfig(format!("column {} out of range or repeated", x.column)));
        }
        seen[x.column - 1] = true;
        steps[x.column - 1] = x.length;
    }
    let e = DiscreteExcursion::from_steps(steps).map_err(|err| Error::MalformedConfig(err.to_string()))?;
    for x in &m.multimers {
        if e.height(x.column - 1) != x.bottom {
            return Err(Error::MalformedConfig(format!(
                "multimer in column {} sits at {} but the staircase puts it at {}",
                x.column,
                x.bottom,
                e.height(x.column - 1)
            )));
        }
    }
    Ok(e)
}

/// A vertical segment `{x} x [bottom, top]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slit {
    pub x: f64,
    pub bottom: f64,
    pub top: f64,
}

impl Slit {
    /// Zero-length slits cannot be crossed.
    pub fn is_blocking(&self) -> bool {
        self.top > self.bottom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitList {
    pub slits: Vec<Slit>,
    pub circumference: f64,
}

impl SlitList {
    pub fn blocking(&self) -> impl Iterator<Item = &Slit> {
        self.slits.iter().filter(|s| s.is_blocking())
    }

    pub fn total_length(&self) -> f64 {
        self.slits.iter().map(|s| s.top - s.bottom).sum()
    }
}

/// One slit per non-negative step `k`, at `x = k + 1`.
pub fn slits_of(e: &DiscreteExcursion) -> SlitList {
    let slits = e
        .steps()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= 0)
        .map(|(k, _)| Slit { x: (k + 1) as f64, bottom: e.height(k) as f64, top: e.height(k + 1) as f64 })
        .collect();
    SlitList { slits, circumference: (e.n() + 1) as f64 }
}

/// Slits of the rescaled excursion on the unit circle. Only positive
/// jumps are recorded there, so zero-length entries never appear.
pub fn slits_of_rescaled(r: &RescaledExcursion) -> SlitList {
    let slits = r.jumps.iter().map(|j| Slit { x: j.time, bottom: j.bottom, top: j.top }).collect();
    SlitList { slits, circumference: 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::{enumerate_excursions, sample_excursion};
    use crate::rng;
    use crate::steps::StepLaw;

    #[test]
    fn hand_examples() {
        let e = DiscreteExcursion::from_steps(vec![0, 0, 0, -1]).unwrap();
        let m = walk_to_multimers(&e);
        assert_eq!(
            m.multimers,
            (1..=3).map(|c| Multimer { column: c, bottom: 0, length: 0 }).collect::<Vec<_>>()
        );
        let s = slits_of(&e);
        assert_eq!(s.slits.len(), 3);
        assert_eq!(s.blocking().count(), 0);

        let e = DiscreteExcursion::from_steps(vec![1, 0, -1, -1]).unwrap();
        let m = walk_to_multimers(&e);
        assert_eq!(
            m.multimers,
            vec![Multimer { column: 1, bottom: 0, length: 1 }, Multimer { column: 2, bottom: 1, length: 0 }]
        );

        let e = DiscreteExcursion::from_steps(vec![2, -1, -1, -1]).unwrap();
        assert_eq!(slits_of(&e).slits, vec![Slit { x: 1.0, bottom: 0.0, top: 2.0 }]);

        let e = DiscreteExcursion::from_steps(vec![0, -1]).unwrap();
        assert_eq!(multimers_to_walk(&walk_to_multimers(&e)).unwrap().steps(), &[0, -1]);
    }

    #[test]
    fn exhaustive_round_trip() {
        for n in 1..=5 {
            for e in enumerate_excursions(n) {
                let m = walk_to_multimers(&e);
                assert_eq!(m.vertex_count(), n as i64);
                assert_eq!(multimers_to_walk(&m).unwrap(), e);
                assert_eq!(MultimerConfig::from_csv(&m.to_csv()).unwrap(), m);
            }
        }
    }

    #[test]
    fn sampled_round_trip_and_slit_totals() {
        let law = StepLaw::stable(1.5).unwrap();
        for trial in 0..20 {
            let mut r = rng::stream(1, trial, rng::tag::SAMPLE);
            let e = sample_excursion(&law, 10_000, &mut r).unwrap();
            let m = walk_to_multimers(&e);
            assert_eq!(m.vertex_count(), 10_000);
            assert_eq!(multimers_to_walk(&m).unwrap(), e);
            let s = slits_of(&e);
            assert_eq!(s.slits.len(), m.multimers.len());
            assert_eq!(s.total_length() as usize, e.coded_times().len() - 1);
        }
    }

    #[test]
    fn rescaled_slits_scale_linearly() {
        let law = StepLaw::stable(1.5).unwrap();
        let mut r = rng::from_seed(9);
        let e = sample_excursion(&law, 2000, &mut r).unwrap();
        let scale = 2000f64.powf(-1.0 / 1.5);
        let a = slits_of(&e);
        let b = slits_of_rescaled(&e.rescale(1.5));
        let blocking: Vec<&Slit> = a.blocking().collect();
        assert_eq!(blocking.len(), b.slits.len());
        for (x, y) in blocking.iter().zip(&b.slits) {
            assert_eq!(y.bottom, scale * x.bottom);
            assert_eq!(y.top, scale * x.top);
            assert_eq!(y.x, x.x / 2001.0);
        }
    }

    #[test]
    fn rejects_malformed() {
        let bad = MultimerConfig { multimers: vec![Multimer { column: 1, bottom: 1, length: 0 }], root: 2 };
        assert!(matches!(multimers_to_walk(&bad), Err(Error::MalformedConfig(_))));
        let bad = MultimerConfig { multimers: vec![Multimer { column: 1, bottom: 0, length: 0 }], root: 5 };
        assert!(matches!(multimers_to_walk(&bad), Err(Error::MalformedConfig(_))));
    }
}
