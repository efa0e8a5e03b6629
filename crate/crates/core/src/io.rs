//! The `shredwalk v1` text format: a header line
//! `shredwalk v1 alpha=<a> n=<n> seed=<s>` followed by one signed step per
//! line.

use crate::error::{Error, Result};
use crate::excursion::DiscreteExcursion;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkFile {
    pub alpha: f64,
    pub seed: u64,
    pub excursion: DiscreteExcursion,
}

impl WalkFile {
    pub fn to_text(&self) -> String {
        let steps = self.excursion.steps();
        let mut out = format!("shredwalk v1 alpha={} n={} seed={}\n", self.alpha, self.excursion.n(), self.seed);
        out.reserve(steps.len() * 3);
        for s in steps {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty walk file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("shredwalk") || fields.next() != Some("v1") {
            return Err(Error::Parse(format!("not a shredwalk v1 header: {header:?}")));
        }
        let (mut alpha, mut n, mut seed) = (None, None, None);
        for f in fields {
            let (key, value) = f.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {f:?}")))?;
            let bad = |_| Error::Parse(format!("bad value in {f:?}"));
            match key {
                "alpha" => alpha = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "n" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(Error::Parse(format!("unknown header field {key:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("header lacks {k}"));
        let (alpha, n, seed) = (alpha.ok_or_else(|| missing("alpha"))?, n.ok_or_else(|| missing("n"))?, seed.ok_or_else(|| missing("seed"))?);
        let steps = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| l.trim().parse::<i64>().map_err(|e| Error::Parse(format!("step line {}: {e}", i + 2))))
            .collect::<Result<Vec<_>>>()?;
        if steps.len() != n + 1 {
            return Err(Error::Parse(format!("header says n={n} but found {} steps", steps.len())));
        }
        Ok(WalkFile { alpha, seed, excursion: DiscreteExcursion::from_steps(steps)? })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let w = WalkFile { alpha: 1.5, seed: 7, excursion: DiscreteExcursion::from_steps(vec![2, -1, 0, -1, -1]).unwrap() };
        let text = w.to_text();
        assert!(text.starts_with("shredwalk v1 alpha=1.5 n=4 seed=7\n2\n-1\n"));
        assert_eq!(WalkFile::parse(&text).unwrap(), w);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(WalkFile::parse("").is_err());
        assert!(WalkFile::parse("shredwalk v2 alpha=1.5 n=0 seed=1\n-1\n").is_err());
        assert!(WalkFile::parse("shredwalk v1 alpha=1.5 n=1 seed=1\n-1\n").is_err());
        assert!(WalkFile::parse("shredwalk v1 alpha=1.5 n=1 seed=1\n-1\n-1\n").is_err());
        assert!(WalkFile::parse("shredwalk v1 alpha=1.5 seed=1\n-1\n").is_err());
        assert!(WalkFile::parse("shredwalk v1 alpha=1.5 n=0 seed=1\nx\n").is_err());
    }
}
