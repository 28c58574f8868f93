//! Arithmetic in `F_p` and `F_{p^2} = F_p[w] / (w^2 - t)`, with `t` the
//! smallest quadratic non-residue mod `p`.

use std::fmt;

use crate::arith::is_prime;
use crate::error::{Error, Result};

/// `F_{p^2}` for an odd prime `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fq2 {
    p: u64,
    nonresidue: u64,
}

/// `a + b*w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqElement {
    pub a: u64,
    pub b: u64,
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

pub fn fq_make(p: u64) -> Result<Fq2> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::UnsupportedPrime(2));
    }
    let nonresidue = (2..p)
        .find(|&t| pow_mod(t, (p - 1) / 2, p) == p - 1)
        .expect("odd prime has a non-residue");
    Ok(Fq2 { p, nonresidue })
}

impl Fq2 {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u64 {
        self.p * self.p
    }

    pub fn nonresidue(&self) -> u64 {
        self.nonresidue
    }

    pub fn elem(&self, a: u64, b: u64) -> FqElement {
        FqElement {
            a: a % self.p,
            b: b % self.p,
        }
    }

    pub fn from_int(&self, n: i64) -> FqElement {
        self.elem(n.rem_euclid(self.p as i64) as u64, 0)
    }

    pub fn zero(&self) -> FqElement {
        FqElement { a: 0, b: 0 }
    }

    pub fn one(&self) -> FqElement {
        FqElement { a: 1, b: 0 }
    }

    /// All `p^2` elements, ordered by index.
    pub fn elements(&self) -> impl Iterator<Item = FqElement> + '_ {
        (0..self.order()).map(|i| self.from_index(i))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = FqElement> + '_ {
        (1..self.order()).map(|i| self.from_index(i))
    }

    pub fn index(&self, e: FqElement) -> u64 {
        e.a + self.p * e.b
    }

    pub fn from_index(&self, i: u64) -> FqElement {
        FqElement {
            a: i % self.p,
            b: i / self.p,
        }
    }

    pub fn add(&self, x: FqElement, y: FqElement) -> FqElement {
        self.elem(x.a + y.a, x.b + y.b)
    }

    pub fn neg(&self, x: FqElement) -> FqElement {
        self.elem(self.p - x.a, self.p - x.b)
    }

    pub fn sub(&self, x: FqElement, y: FqElement) -> FqElement {
        self.add(x, self.neg(y))
    }

    pub fn mul(&self, x: FqElement, y: FqElement) -> FqElement {
        let p = self.p;
        let a = (x.a * y.a + x.b * y.b % p * self.nonresidue) % p;
        let b = (x.a * y.b + x.b * y.a) % p;
        FqElement { a, b }
    }

    pub fn scale(&self, k: u64, x: FqElement) -> FqElement {
        self.mul(self.elem(k, 0), x)
    }

    pub fn pow(&self, x: FqElement, mut e: u64) -> FqElement {
        let mut acc = self.one();
        let mut base = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, x: FqElement) -> Result<FqElement> {
        if x == self.zero() {
            return Err(Error::ZeroElement);
        }
        // (a + bw)^{-1} = (a - bw) / (a^2 - t b^2)
        let p = self.p;
        let norm = (x.a * x.a % p + p - x.b * x.b % p * self.nonresidue % p) % p;
        let ninv = inv_mod(norm, p);
        Ok(self.elem(x.a * ninv, (p - x.b) % p * ninv))
    }

    pub fn div(&self, x: FqElement, y: FqElement) -> Result<FqElement> {
        Ok(self.mul(x, self.inv(y)?))
    }

    pub fn frobenius(&self, x: FqElement) -> FqElement {
        self.pow(x, self.p)
    }

    pub fn is_square(&self, e: FqElement) -> Result<bool> {
        if e == self.zero() {
            return Err(Error::ZeroElement);
        }
        Ok(self.pow(e, (self.order() - 1) / 2) == self.one())
    }

    pub fn format(&self, e: FqElement) -> String {
        e.to_string()
    }

    pub fn parse(&self, s: &str) -> Result<FqElement> {
        let bad = || Error::Parse {
            line: 0,
            msg: format!("bad field element {s:?}"),
        };
        let (a, b) = s.split_once('+').ok_or_else(bad)?;
        let b = b.strip_suffix("*w").ok_or_else(bad)?;
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a >= self.p || b >= self.p {
            return Err(bad());
        }
        Ok(FqElement { a, b })
    }
}

impl fmt::Display for FqElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*w", self.a, self.b)
    }
}

/// Split of the `p + 1` one-dimensional `F_p`-subspaces of `F_{p^2}` by
/// the square status of their nonzero elements.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LineReport {
    pub p: u64,
    pub square_lines: usize,
    pub nonsquare_lines: usize,
    pub all_homogeneous: bool,
}

pub fn square_lines(p: u64) -> Result<LineReport> {
    let f = fq_make(p)?;
    // line representatives: (1, 0) and (a, 1) for a in F_p
    let reps = std::iter::once(f.elem(1, 0)).chain((0..p).map(|a| f.elem(a, 1)));
    let mut report = LineReport {
        p,
        square_lines: 0,
        nonsquare_lines: 0,
        all_homogeneous: true,
    };
    for r in reps {
        let status: Vec<bool> = (1..p)
            .map(|k| f.is_square(f.scale(k, r)))
            .collect::<Result<_>>()?;
        if status.iter().any(|&s| s != status[0]) {
            report.all_homogeneous = false;
        }
        if status[0] {
            report.square_lines += 1;
        } else {
            report.nonsquare_lines += 1;
        }
    }
    Ok(report)
}
