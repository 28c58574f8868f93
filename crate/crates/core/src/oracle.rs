//! Brute-force ground truth: `PSL(2, q)` and `PSL(3, 3)` as projective matrix
//! groups, enumerated by closure from transvections.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::arith::is_prime;
use crate::error::{Error, Result};
use crate::ffield::{fq_make, Fq2, FqElement};

/// Enumeration guard on `|G|`.
pub const MAX_ORDER: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "group")]
pub enum GroupSpec {
    /// `PSL(2, q)` for `q = p` or `q = p^2`, `p` odd.
    #[serde(rename = "psl2")]
    Psl2 { q: u64 },
    #[serde(rename = "psl33")]
    Psl33,
}

impl GroupSpec {
    fn prime(&self) -> Result<u64> {
        match *self {
            GroupSpec::Psl33 => Ok(3),
            GroupSpec::Psl2 { q } => {
                if is_prime(q) {
                    return Ok(q);
                }
                let p = (q as f64).sqrt().round() as u64;
                if p * p == q && is_prime(p) {
                    Ok(p)
                } else {
                    Err(Error::Validation(format!("{q} is not a prime or a prime square")))
                }
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            GroupSpec::Psl2 { .. } => 2,
            GroupSpec::Psl33 => 3,
        }
    }

    /// `q(q^2 - 1)/2` and `5616`.
    pub fn expected_order(&self) -> u64 {
        match *self {
            GroupSpec::Psl2 { q } => q * (q * q - 1) / if q % 2 == 1 { 2 } else { 1 },
            GroupSpec::Psl33 => 5616,
        }
    }

    fn cache_name(&self) -> String {
        match self {
            GroupSpec::Psl2 { q } => format!("psl2_q{q}.txt"),
            GroupSpec::Psl33 => "psl33.txt".into(),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Psl2 { q } => write!(f, "PSL(2,{q})"),
            GroupSpec::Psl33 => write!(f, "PSL(3,3)"),
        }
    }
}

/// Field elements by index `a + p*b`.
type Mat = Vec<u8>;

struct Tables {
    size: usize,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
}

impl Tables {
    fn new(f: &Fq2) -> Self {
        let size = f.order() as usize;
        let mut add = vec![0; size * size];
        let mut mul = vec![0; size * size];
        let mut neg = vec![0; size];
        for x in f.elements() {
            let i = f.index(x) as usize;
            neg[i] = f.index(f.neg(x)) as u8;
            for y in f.elements() {
                let j = f.index(y) as usize;
                add[i * size + j] = f.index(f.add(x, y)) as u8;
                mul[i * size + j] = f.index(f.mul(x, y)) as u8;
            }
        }
        Tables {
            size,
            add,
            mul,
            neg,
        }
    }

    fn add(&self, x: u8, y: u8) -> u8 {
        self.add[x as usize * self.size + y as usize]
    }

    fn mul(&self, x: u8, y: u8) -> u8 {
        self.mul[x as usize * self.size + y as usize]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjClass {
    pub representative: String,
    pub size: usize,
    pub element_order: u64,
}

/// An enumerated group with its conjugacy class partition.
pub struct MatGroup {
    pub spec: GroupSpec,
    f: Fq2,
    n: usize,
    t: Tables,
    scalars: Vec<u8>,
    /// Generators closed under inversion.
    gens: Vec<Mat>,
    elements: Vec<Mat>,
    index: HashMap<Mat, usize>,
    orders: Vec<u64>,
    class_of: Vec<usize>,
    classes: Vec<ConjClass>,
}

impl fmt::Debug for MatGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatGroup({}, order {})", self.spec, self.elements.len())
    }
}

/// Field, dimension, tables, scalar matrices and generators.
type Setup = (Fq2, usize, Tables, Vec<u8>, Vec<Mat>);

fn setup(spec: GroupSpec) -> Result<Setup> {
    let order = spec.expected_order();
    if order > MAX_ORDER {
        return Err(Error::TooLarge(order));
    }
    let p = spec.prime()?;
    let f = fq_make(p)?;
    let n = spec.dim();
    let t = Tables::new(&f);
    let q = match spec {
        GroupSpec::Psl2 { q } => q,
        GroupSpec::Psl33 => 3,
    };
    // the working field: F_p inside F_{p^2} when q = p
    let field: Vec<FqElement> = if q == p {
        (0..p).map(|a| f.elem(a, 0)).collect()
    } else {
        f.elements().collect()
    };
    let scalars = field
        .iter()
        .filter(|&&x| x != f.zero() && f.pow(x, n as u64) == f.one())
        .map(|&x| f.index(x) as u8)
        .collect();
    // x_ij(t) for t in an F_p-basis of the working field, and inverses
    let basis: Vec<FqElement> = if q == p {
        vec![f.one()]
    } else {
        vec![f.one(), f.elem(0, 1)]
    };
    let mut gens = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for &b in &basis {
                for s in [b, f.neg(b)] {
                    let mut m = identity(&f, n);
                    m[i * n + j] = f.index(s) as u8;
                    gens.push(m);
                }
            }
        }
    }
    Ok((f, n, t, scalars, gens))
}

fn identity(f: &Fq2, n: usize) -> Mat {
    let mut m = vec![0; n * n];
    for i in 0..n {
        m[i * n + i] = f.index(f.one()) as u8;
    }
    m
}

impl MatGroup {
    fn canonical(&self, m: Mat) -> Mat {
        self.scalars
            .iter()
            .map(|&s| m.iter().map(|&x| self.t.mul(s, x)).collect::<Mat>())
            .min()
            .unwrap_or(m)
    }

    fn raw_mul(&self, a: &[u8], b: &[u8]) -> Mat {
        let n = self.n;
        let mut out = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u8;
                for k in 0..n {
                    acc = self.t.add(acc, self.t.mul(a[i * n + k], b[k * n + j]));
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    fn mul(&self, a: &[u8], b: &[u8]) -> Mat {
        self.canonical(self.raw_mul(a, b))
    }

    /// `g^{-1}` for a generator: flip the sign of the off-diagonal entry.
    fn gen_inverse(&self, g: &[u8]) -> Mat {
        let n = self.n;
        let mut inv = g.to_vec();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    inv[i * n + j] = self.t.neg[g[i * n + j] as usize];
                }
            }
        }
        inv
    }

    fn bare(spec: GroupSpec) -> Result<Self> {
        let (f, n, t, scalars, gens) = setup(spec)?;
        Ok(MatGroup {
            spec,
            f,
            n,
            t,
            scalars,
            gens,
            elements: Vec::new(),
            index: HashMap::new(),
            orders: Vec::new(),
            class_of: Vec::new(),
            classes: Vec::new(),
        })
    }

    fn identity(&self) -> Mat {
        self.canonical(identity(&self.f, self.n))
    }

    fn closure(&mut self) {
        let id = self.identity();
        let mut seen: HashMap<Mat, usize> = HashMap::new();
        let mut elements = vec![id.clone()];
        seen.insert(id, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in &self.gens {
                let x = self.mul(&elements[i], g);
                if !seen.contains_key(&x) {
                    seen.insert(x.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(x);
                }
            }
        }
        self.elements = elements;
        self.index = seen;
    }

    fn analyse(&mut self) {
        let id = self.identity();
        self.orders = self
            .elements
            .iter()
            .map(|x| {
                let mut k = 1;
                let mut y = x.clone();
                while y != id {
                    y = self.mul(&y, x);
                    k += 1;
                }
                k
            })
            .collect();
        let inverses: Vec<Mat> = self.gens.iter().map(|g| self.gen_inverse(g)).collect();
        let mut class_of = vec![usize::MAX; self.elements.len()];
        let mut classes = Vec::new();
        for start in 0..self.elements.len() {
            if class_of[start] != usize::MAX {
                continue;
            }
            let c = classes.len();
            class_of[start] = c;
            let mut size = 1;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for (g, gi) in self.gens.iter().zip(&inverses) {
                    let y = self.mul(&self.raw_mul(g, &self.elements[i]), gi);
                    let j = self.index[&y];
                    if class_of[j] == usize::MAX {
                        class_of[j] = c;
                        size += 1;
                        queue.push_back(j);
                    }
                }
            }
            classes.push(ConjClass {
                representative: self.format(&self.elements[start]),
                size,
                element_order: self.orders[start],
            });
        }
        self.class_of = class_of;
        self.classes = classes;
    }

    fn format(&self, m: &[u8]) -> String {
        m.iter()
            .map(|&x| {
                let e = self.f.from_index(x as u64);
                if self.spec == GroupSpec::Psl33 {
                    e.a.to_string()
                } else {
                    self.f.format(e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn parse_line(&self, line: &str) -> Result<Mat> {
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != self.n * self.n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} entries", self.n * self.n),
            });
        }
        entries
            .iter()
            .map(|s| {
                let e = if self.spec == GroupSpec::Psl33 {
                    let a: u64 = s.parse().map_err(|_| Error::Parse {
                        line: 0,
                        msg: format!("bad entry {s:?}"),
                    })?;
                    if a >= 3 {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("bad entry {s:?}"),
                        });
                    }
                    self.f.elem(a, 0)
                } else {
                    self.f.parse(s)?
                };
                Ok(self.f.index(e) as u8)
            })
            .collect()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1, |a, &b| num_integer::lcm(a, b))
    }

    /// All conjugacy classes, in order of first appearance.
    pub fn classes(&self) -> &[ConjClass] {
        &self.classes
    }

    pub fn order_p_classes(&self, p: u64) -> Vec<ConjClass> {
        self.classes
            .iter()
            .filter(|c| c.element_order == p)
            .cloned()
            .collect()
    }

    /// Class index of `[[1, l], [0, 1]]` in `PSL(2, q)`.
    pub fn unipotent_class(&self, l: FqElement) -> Result<usize> {
        if self.n != 2 {
            return Err(Error::Validation("unipotent_class needs PSL(2, q)".into()));
        }
        let mut m = identity(&self.f, 2);
        m[1] = self.f.index(l) as u8;
        let m = self.canonical(m);
        self.index
            .get(&m)
            .map(|&i| self.class_of[i])
            .ok_or_else(|| Error::Validation(format!("{l} is outside the group field")))
    }

    fn to_text(&self) -> String {
        let mut s = format!(
            "# {} order {} one canonical matrix per line, row-major\n",
            self.spec,
            self.order()
        );
        for m in &self.elements {
            s.push_str(&self.format(m));
            s.push('\n');
        }
        s
    }

    /// Rebuilds from cached text; rejects anything that is not exactly a
    /// closed set of canonical matrices of the expected size.
    fn from_text(spec: GroupSpec, text: &str) -> Result<Self> {
        let mut g = Self::bare(spec)?;
        let mut elements = Vec::new();
        let mut index = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let m = g.parse_line(line).map_err(|e| Error::Parse {
                line: no + 1,
                msg: e.to_string(),
            })?;
            if g.canonical(m.clone()) != m {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: "matrix is not canonical".into(),
                });
            }
            if index.insert(m.clone(), elements.len()).is_some() {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: "duplicate matrix".into(),
                });
            }
            elements.push(m);
        }
        if elements.len() as u64 != spec.expected_order() || !index.contains_key(&g.identity()) {
            return Err(Error::Validation("cached element set has the wrong size".into()));
        }
        for x in &elements {
            for s in &g.gens {
                if !index.contains_key(&g.mul(x, s)) {
                    return Err(Error::Validation("cached element set is not closed".into()));
                }
            }
        }
        g.elements = elements;
        g.index = index;
        g.analyse();
        Ok(g)
    }
}

pub fn enumerate_group(spec: GroupSpec) -> Result<MatGroup> {
    let mut g = MatGroup::bare(spec)?;
    g.closure();
    g.analyse();
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Written,
    /// Enumerated but the cache file could not be written.
    Unwritable(String),
    /// A cache file existed but failed validation and was replaced.
    Rejected(String),
}

pub fn cache_path(dir: &Path, spec: GroupSpec) -> PathBuf {
    dir.join("oracle").join(spec.cache_name())
}

/// Loads the enumeration from `dir/oracle/`, or enumerates and writes it.
pub fn enumerate_cached(
    spec: GroupSpec,
    dir: &Path,
    refresh: bool,
) -> Result<(MatGroup, CacheStatus)> {
    let path = cache_path(dir, spec);
    let mut rejected = None;
    if !refresh {
        if let Ok(text) = std::fs::read_to_string(&path) {
            match MatGroup::from_text(spec, &text) {
                Ok(g) => return Ok((g, CacheStatus::Hit)),
                Err(e) => rejected = Some(e.to_string()),
            }
        }
    }
    let g = enumerate_group(spec)?;
    let write = || -> std::io::Result<()> {
        std::fs::create_dir_all(path.parent().expect("has parent"))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, g.to_text())?;
        std::fs::rename(&tmp, &path)
    };
    let status = match (write(), rejected) {
        (Err(e), _) => CacheStatus::Unwritable(e.to_string()),
        (Ok(()), Some(r)) => CacheStatus::Rejected(r),
        (Ok(()), None) => CacheStatus::Written,
    };
    Ok((g, status))
}

#[derive(Clone, Debug, Serialize)]
pub struct SquareCriterion {
    pub p: u64,
    pub q: u64,
    pub pairs_checked: usize,
    pub holds: bool,
    pub counterexample: Option<(String, String)>,
}

/// `[[1, l], [0, 1]]` and `[[1, m], [0, 1]]` are conjugate in `PSL(2, p^2)`
/// iff `m / l` is a square.
pub fn check_square_criterion(p: u64) -> Result<SquareCriterion> {
    if p != 3 && p != 5 {
        return Err(Error::UnsupportedPrime(p));
    }
    let g = enumerate_group(GroupSpec::Psl2 { q: p * p })?;
    square_criterion_on(&g)
}

pub fn square_criterion_on(g: &MatGroup) -> Result<SquareCriterion> {
    let q = match g.spec {
        GroupSpec::Psl2 { q } => q,
        GroupSpec::Psl33 => return Err(Error::Validation("needs PSL(2, p^2)".into())),
    };
    let f = g.f;
    if q != f.order() {
        return Err(Error::Validation("needs PSL(2, p^2)".into()));
    }
    let nonzero: Vec<FqElement> = f.nonzero().collect();
    let cls: Vec<usize> = nonzero
        .iter()
        .map(|&l| g.unipotent_class(l))
        .collect::<Result<_>>()?;
    let mut pairs = 0;
    let mut counterexample = None;
    for (i, &l) in nonzero.iter().enumerate() {
        for (j, &m) in nonzero.iter().enumerate() {
            pairs += 1;
            let square = f.is_square(f.div(m, l)?)?;
            if (cls[i] == cls[j]) != square && counterexample.is_none() {
                counterexample = Some((l.to_string(), m.to_string()));
            }
        }
    }
    Ok(SquareCriterion {
        p: f.p(),
        q,
        pairs_checked: pairs,
        holds: counterexample.is_none(),
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::admissible_subgroup;

    #[test]
    fn psl2_9() {
        let g = enumerate_group(GroupSpec::Psl2 { q: 9 }).unwrap();
        assert_eq!(g.order(), 360);
        let c3 = g.order_p_classes(3);
        assert_eq!(c3.len(), 2);
        assert!(c3.iter().all(|c| c.size == 40));
        let total: usize = g.classes().iter().map(|c| c.size).sum();
        assert_eq!(total, 360);
        // A_6: 1, 2, 3, 3, 4, 5, 5
        assert_eq!(g.classes().len(), 7);
        let c5 = g.order_p_classes(5);
        assert_eq!(c5.iter().map(|c| c.size).collect::<Vec<_>>(), vec![72, 72]);
        assert_eq!(g.exponent(), 60);
    }

    #[test]
    fn psl2_25_and_small_prime_fields() {
        let g = enumerate_group(GroupSpec::Psl2 { q: 25 }).unwrap();
        assert_eq!(g.order(), 7800);
        let c5 = g.order_p_classes(5);
        assert_eq!(c5.len(), 2);
        assert!(c5.iter().all(|c| c.size == 312));
        assert_eq!(g.classes().iter().map(|c| c.size).sum::<usize>(), 7800);
        for q in [5u64, 7] {
            let h = enumerate_group(GroupSpec::Psl2 { q }).unwrap();
            assert_eq!(h.order() as u64, q * (q * q - 1) / 2);
        }
    }

    #[test]
    fn psl33() {
        let g = enumerate_group(GroupSpec::Psl33).unwrap();
        assert_eq!(g.order(), 5616);
        assert_eq!(g.exponent(), 312);
        let mut sizes: Vec<usize> = g.order_p_classes(3).iter().map(|c| c.size).collect();
        sizes.sort();
        assert_eq!(sizes, vec![104, 624]);
        assert_eq!(g.classes().iter().map(|c| c.size).sum::<usize>(), 5616);
        assert_eq!(g.classes().len(), 12);
        assert!(admissible_subgroup(27, 3, 5616, g.exponent()));
    }

    #[test]
    fn square_criterion() {
        for p in [3, 5] {
            let r = check_square_criterion(p).unwrap();
            assert!(r.holds, "{r:?}");
            assert_eq!(r.pairs_checked, ((p * p - 1) * (p * p - 1)) as usize);
        }
        assert!(check_square_criterion(7).is_err());
    }

    #[test]
    fn guards() {
        assert!(matches!(
            enumerate_group(GroupSpec::Psl2 { q: 121 }),
            Err(Error::TooLarge(_))
        ));
        assert!(enumerate_group(GroupSpec::Psl2 { q: 15 }).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("grs-oracle-{}", std::process::id()));
        let spec = GroupSpec::Psl2 { q: 9 };
        let (a, s) = enumerate_cached(spec, &dir, true).unwrap();
        assert_eq!(s, CacheStatus::Written);
        let (b, s) = enumerate_cached(spec, &dir, false).unwrap();
        assert_eq!(s, CacheStatus::Hit);
        assert_eq!(a.order(), b.order());
        assert_eq!(
            a.classes().iter().map(|c| c.size).collect::<Vec<_>>(),
            b.classes().iter().map(|c| c.size).collect::<Vec<_>>()
        );
        // a truncated cache is rejected and rewritten
        let path = cache_path(&dir, spec);
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(100).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        let (_, s) = enumerate_cached(spec, &dir, false).unwrap();
        assert!(matches!(s, CacheStatus::Rejected(_)));
        let (_, s) = enumerate_cached(spec, &dir, false).unwrap();
        assert_eq!(s, CacheStatus::Hit);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
