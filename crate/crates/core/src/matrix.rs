//! Dense exact rational matrices and block-diagonal matrices.

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{rat, rat_str, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    dim: usize,
    entries: Vec<Rational>,
}

impl QMatrix {
    pub fn zero(dim: usize) -> Self {
        QMatrix {
            dim,
            entries: vec![Rational::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Rational::one();
        }
        m
    }

    pub fn scalar(dim: usize, s: Rational) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = s.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        QMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| rat(x)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.entries.chunks(self.dim.max(1))
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.entries[k * n + j];
                    if !b.is_zero() {
                        out.entries[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        QMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> QMatrix {
        let mut acc = Self::identity(self.dim);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Integer power; negative exponents go through the inverse.
    pub fn pow_signed(&self, e: i64) -> Result<QMatrix> {
        if e >= 0 {
            Ok(self.pow(e as u64))
        } else {
            Ok(self.inverse()?.pow(e.unsigned_abs()))
        }
    }

    pub fn trace(&self) -> Rational {
        (0..self.dim).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<QMatrix> {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut inv = Self::identity(n).entries;
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[r * n + col].is_zero())
                .ok_or(Error::DivisionByZero)?;
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let s = a[col * n + col].recip();
            for j in 0..n {
                a[col * n + j] *= &s;
                inv[col * n + j] *= &s;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for j in 0..n {
                    let (t1, t2) = (&a[col * n + j] * &f, &inv[col * n + j] * &f);
                    a[r * n + j] -= t1;
                    inv[r * n + j] -= t2;
                }
            }
        }
        Ok(QMatrix {
            dim: n,
            entries: inv,
        })
    }
}

impl Serialize for QMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = self
            .rows()
            .map(|r| r.iter().map(rat_str).collect())
            .collect();
        rows.serialize(s)
    }
}

/// Companion matrix of `1 + x + ... + x^(p-1)`: ones on the subdiagonal,
/// last column all `-1`. Its multiplicative order is `p`.
pub fn companion_cyclotomic(p: usize) -> QMatrix {
    let n = p - 1;
    let mut m = QMatrix::zero(n);
    for i in 1..n {
        m.entries[i * n + (i - 1)] = Rational::one();
    }
    for i in 0..n {
        m.entries[i * n + (n - 1)] = rat(-1);
    }
    m
}

/// Least `k <= bound` with `m^k = 1`.
pub fn mat_order(m: &QMatrix, bound: u64) -> Result<u64> {
    let mut acc = m.clone();
    for k in 1..=bound {
        if acc.is_identity() {
            return Ok(k);
        }
        acc = acc.mul(m);
    }
    Err(Error::NoOrderWithinBound(bound))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BlockDiag {
    blocks: Vec<QMatrix>,
}

impl BlockDiag {
    pub fn new(blocks: Vec<QMatrix>) -> Self {
        BlockDiag { blocks }
    }

    pub fn identity(signature: &[usize]) -> Self {
        BlockDiag {
            blocks: signature.iter().map(|&d| QMatrix::identity(d)).collect(),
        }
    }

    pub fn blocks(&self) -> &[QMatrix] {
        &self.blocks
    }

    pub fn signature(&self) -> Vec<usize> {
        self.blocks.iter().map(QMatrix::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(QMatrix::dim).sum()
    }

    pub fn mul(&self, other: &BlockDiag) -> Result<BlockDiag> {
        if self.signature() != other.signature() {
            return Err(Error::SignatureMismatch(self.signature(), other.signature()));
        }
        Ok(BlockDiag {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.mul(b))
                .collect(),
        })
    }

    pub fn pow(&self, e: i64) -> Result<BlockDiag> {
        Ok(BlockDiag {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.pow_signed(e))
                .collect::<Result<_>>()?,
        })
    }

    pub fn trace(&self) -> Rational {
        self.blocks.iter().map(QMatrix::trace).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.iter().all(QMatrix::is_identity)
    }

    /// Least `k <= bound` with every block satisfying `b^k = 1`.
    pub fn order(&self, bound: u64) -> Result<u64> {
        let mut acc = self.clone();
        for k in 1..=bound {
            if acc.is_identity() {
                return Ok(k);
            }
            acc = acc.mul(self)?;
        }
        Err(Error::NoOrderWithinBound(bound))
    }
}
