//! Which patterns `I` can be realized inside a Sylow `p`-subgroup of
//! `PSL(2, p^2)`.
//!
//! The Sylow subgroup is modelled as `(F_{p^2}, +)` through the unipotent
//! matrices `[[1, l], [0, 1]]`; `l` lies in class `c` iff it is a square.
//! For generators `g = l`, `h = m` the pattern is `{ i : l + i m is a square }`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ffield::{fq_make, Fq2, FqElement};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    p: u64,
    members: BTreeSet<u64>,
}

impl Pattern {
    pub fn new(p: u64, members: impl IntoIterator<Item = u64>) -> Result<Self> {
        let members: BTreeSet<u64> = members.into_iter().collect();
        if let Some(bad) = members.iter().find(|&&i| i == 0 || i >= p) {
            return Err(Error::BadPattern(format!("{bad} is outside 1..{}", p - 1)));
        }
        Ok(Pattern { p, members })
    }

    /// A pattern with exactly `(p-1)/2` members.
    pub fn balanced(p: u64, members: impl IntoIterator<Item = u64>) -> Result<Self> {
        let pat = Self::new(p, members)?;
        if !pat.is_balanced() {
            return Err(Error::BadPattern(format!(
                "{pat} has {} members, expected {}",
                pat.members.len(),
                (p - 1) / 2
            )));
        }
        Ok(pat)
    }

    pub fn parse(p: u64, s: &str) -> Result<Self> {
        let members = s
            .split(',')
            .map(|t| {
                u64::from_str(t.trim())
                    .map_err(|_| Error::BadPattern(format!("bad member {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, members)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn members(&self) -> &BTreeSet<u64> {
        &self.members
    }

    pub fn contains(&self, i: u64) -> bool {
        self.members.contains(&i)
    }

    pub fn is_balanced(&self) -> bool {
        self.members.len() as u64 == (self.p - 1) / 2
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.members.iter().join(","))
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.members.serialize(s)
    }
}

/// All subsets of `{1, ..., p-1}` of size `(p-1)/2`, lexicographically.
pub fn balanced_patterns(p: u64) -> Vec<Pattern> {
    (1..p)
        .combinations(((p - 1) / 2) as usize)
        .map(|c| Pattern {
            p,
            members: c.into_iter().collect(),
        })
        .collect()
}

/// `{ i in 1..p-1 : g + i h is a square }`.
pub fn pattern_of(f: &Fq2, g: FqElement, h: FqElement) -> Result<Pattern> {
    let p = f.p();
    let mut members = BTreeSet::new();
    for i in 1..p {
        let x = f.add(g, f.scale(i, h));
        if f.is_square(x)? {
            members.insert(i);
        }
    }
    Ok(Pattern { p, members })
}

fn squares(f: &Fq2) -> Vec<FqElement> {
    f.nonzero().filter(|&e| f.is_square(e) == Ok(true)).collect()
}

fn nonsquares(f: &Fq2) -> Vec<FqElement> {
    f.nonzero().filter(|&e| f.is_square(e) == Ok(false)).collect()
}

/// Patterns realized by `g` in class `c` and `h` in class `d`. Scaling by a
/// square is conjugation by a diagonal element, so `g = 1` is no loss.
pub fn group_patterns(p: u64) -> Result<BTreeSet<Pattern>> {
    let f = fq_make(p)?;
    nonsquares(&f)
        .into_iter()
        .map(|m| pattern_of(&f, f.one(), m))
        .collect()
}

/// Same set without the normalization: all squares `g`, all non-squares `h`.
pub fn group_patterns_full(p: u64) -> Result<BTreeSet<Pattern>> {
    let f = fq_make(p)?;
    let ns = nonsquares(&f);
    let mut out = BTreeSet::new();
    for g in squares(&f) {
        for &h in &ns {
            out.insert(pattern_of(&f, g, h)?);
        }
    }
    Ok(out)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Balanced patterns are only listed when there are at most this many.
pub const LIST_LIMIT: u128 = 100_000;

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub p: u64,
    pub balanced: u128,
    pub realizable: usize,
    /// `(p^2 - 1) / 2`, the number of choices for `h` once `g` is fixed.
    pub bound: u64,
    /// `binomial(p-1, (p-1)/2) > (p^2-1)/2`: some pattern is missing by counting alone.
    pub counting_certifies: bool,
    pub missing_count: Option<u128>,
    pub missing: Option<Vec<Pattern>>,
}

pub fn gap_report(p: u64) -> Result<GapReport> {
    let realizable = group_patterns(p)?;
    let balanced = binomial(p - 1, (p - 1) / 2);
    let bound = (p * p - 1) / 2;
    let missing: Option<Vec<Pattern>> = (balanced <= LIST_LIMIT).then(|| {
        balanced_patterns(p)
            .into_iter()
            .filter(|pat| !realizable.contains(pat))
            .collect()
    });
    Ok(GapReport {
        p,
        balanced,
        realizable: realizable.len(),
        bound,
        counting_certifies: balanced > bound as u128,
        missing_count: Some(balanced - realizable.len() as u128),
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_validation() {
        assert!(Pattern::balanced(7, [1, 2, 4]).is_ok());
        assert!(matches!(Pattern::balanced(7, [1, 2]), Err(Error::BadPattern(_))));
        assert!(matches!(Pattern::new(7, [0, 2]), Err(Error::BadPattern(_))));
        assert!(matches!(Pattern::new(7, [7]), Err(Error::BadPattern(_))));
        let p = Pattern::parse(7, "4, 1,2").unwrap();
        assert_eq!(p.to_string(), "1,2,4");
        assert!(Pattern::parse(7, "1,x").is_err());
    }

    #[test]
    fn balanced_counts() {
        assert_eq!(balanced_patterns(7).len(), 20);
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(balanced_patterns(5).len(), 6);
    }

    #[test]
    fn small_primes_realize_everything() {
        for p in [3, 5] {
            let g = group_patterns(p).unwrap();
            let all: BTreeSet<Pattern> = balanced_patterns(p).into_iter().collect();
            assert_eq!(g, all, "p={p}");
        }
    }

    #[test]
    fn p7_misses_124() {
        let g = group_patterns(7).unwrap();
        assert!(!g.contains(&Pattern::balanced(7, [1, 2, 4]).unwrap()));
        let r = gap_report(7).unwrap();
        assert_eq!(r.balanced, 20);
        assert_eq!(r.bound, 24);
        assert!(!r.counting_certifies);
        let missing = r.missing.unwrap();
        assert!(missing.contains(&Pattern::balanced(7, [1, 2, 4]).unwrap()));
        assert_eq!(missing.len() + r.realizable, 20);
    }

    #[test]
    fn counting_gap_from_eleven() {
        let r = gap_report(11).unwrap();
        assert_eq!(r.balanced, 252);
        assert_eq!(r.bound, 60);
        assert!(r.counting_certifies);
        assert!(r.realizable <= 60);
        let r3 = gap_report(3).unwrap();
        assert_eq!((r3.balanced, r3.realizable), (2, 2));
        assert_eq!(r3.missing.unwrap().len(), 0);
    }

    #[test]
    fn patterns_are_balanced_and_normalization_is_harmless() {
        for p in [3, 5, 7, 11] {
            let norm = group_patterns(p).unwrap();
            assert!(norm.iter().all(Pattern::is_balanced));
            assert_eq!(norm, group_patterns_full(p).unwrap(), "p={p}");
        }
        assert!(group_patterns(13).unwrap().iter().all(Pattern::is_balanced));
    }
}
