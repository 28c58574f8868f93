//! Character-table slices: values of every irreducible character on the
//! identity and on the classes of elements of order `p`.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::arith::{frac, is_prime, parse_rat, rat, Cyclotomic, Rational};
use crate::error::{Error, Result};

pub const IDENTITY: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassInfo {
    pub id: String,
    pub element_order: u64,
    pub class_size: u64,
    pub centralizer_order: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CharSlice {
    pub name: String,
    pub degree: u64,
    pub values: BTreeMap<String, Cyclotomic>,
}

impl CharSlice {
    pub fn value(&self, class: &str) -> Result<&Cyclotomic> {
        self.values
            .get(class)
            .ok_or_else(|| Error::UnassignedClass(class.to_string()))
    }

    pub fn rational_value(&self, class: &str) -> Result<Rational> {
        self.value(class)?.as_rational()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableSlice {
    pub group: String,
    pub group_order: u64,
    pub classes: Vec<ClassInfo>,
    pub chars: Vec<CharSlice>,
    /// Remarks attached when the table was generated.
    pub notes: Vec<String>,
}

impl TableSlice {
    pub fn class(&self, id: &str) -> Option<&ClassInfo> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn char(&self, name: &str) -> Option<&CharSlice> {
        self.chars.iter().find(|c| c.name == name)
    }

    /// Non-identity classes (all of one prime order in the shipped tables).
    pub fn nonidentity_classes(&self) -> Vec<String> {
        self.classes
            .iter()
            .filter(|c| c.id != IDENTITY)
            .map(|c| c.id.clone())
            .collect()
    }
}

fn class(id: &str, element_order: u64, class_size: u64, group_order: u64) -> ClassInfo {
    ClassInfo {
        id: id.into(),
        element_order,
        class_size,
        centralizer_order: group_order / class_size,
    }
}

fn row(name: String, deg: Rational, vc: Rational, vd: Rational) -> CharSlice {
    let degree = deg.to_integer().try_into().expect("degree fits u64");
    let values = [
        (IDENTITY.to_string(), Cyclotomic::from_rational(deg)),
        ("c".to_string(), Cyclotomic::from_rational(vc)),
        ("d".to_string(), Cyclotomic::from_rational(vd)),
    ]
    .into_iter()
    .collect();
    CharSlice {
        name,
        degree,
        values,
    }
}

/// Slice of the character table of `PSL(2, p^2)` on the identity and the two
/// unipotent classes `c`, `d`.
///
/// The two characters of degree `(q+1)/2` are named `eta` and `eta_tilde`;
/// `eta(c) = (p+1)/2`, `eta(d) = (1-p)/2` and `eta_tilde` swaps them.
pub fn psl2_slice(p: u64) -> Result<TableSlice> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::UnsupportedPrime(2));
    }
    let q = p * p;
    let order = q * (q * q - 1) / 2;
    let half = (q * q - 1) / 2;
    let classes = vec![
        class(IDENTITY, 1, 1, order),
        class("c", p, half, order),
        class("d", p, half, order),
    ];
    let (qi, pi) = (q as i64, p as i64);
    let mut chars = vec![
        row("triv".into(), rat(1), rat(1), rat(1)),
        row("St".into(), rat(qi), rat(0), rat(0)),
    ];
    for k in 1..=(q - 5) / 4 {
        chars.push(row(format!("psi{k}"), rat(qi + 1), rat(1), rat(1)));
    }
    for k in 1..=(q - 1) / 4 {
        chars.push(row(format!("theta{k}"), rat(qi - 1), rat(-1), rat(-1)));
    }
    let (hp, hm) = (frac(1 + pi, 2), frac(1 - pi, 2));
    chars.push(row("eta".into(), frac(qi + 1, 2), hp.clone(), hm.clone()));
    chars.push(row("eta_tilde".into(), frac(qi + 1, 2), hm, hp));
    Ok(TableSlice {
        group: format!("PSL(2,{q})"),
        group_order: order,
        classes,
        chars,
        notes: vec![format!(
            "eta has degree (p^2+1)/2 = {}; a degree of (p^2-1)/2 = {} is incompatible with \
             column orthogonality and with the block dimension of the eta component",
            (q + 1) / 2,
            (q - 1) / 2
        )],
    })
}

/// Parses the line-oriented table format:
///
/// ```text
/// group <name> order <N>
/// class <id> <element_order> <class_size>
/// char <name> <degree> <value@class>...
/// ```
///
/// Character values are listed in class-declaration order. Blank lines and
/// `#` comments are ignored. The result must pass column orthogonality.
pub fn parse_table(text: &str) -> Result<TableSlice> {
    let mut group = None;
    let mut classes: Vec<ClassInfo> = Vec::new();
    let mut chars = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |msg: String| Error::Parse { line, msg };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        let num = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| err(format!("expected a positive integer, got {s:?}")))
        };
        match tok[0] {
            "group" => {
                if tok.len() != 4 || tok[2] != "order" {
                    return Err(err("expected `group <name> order <N>`".into()));
                }
                group = Some((tok[1].to_string(), num(tok[3])?));
            }
            "class" => {
                let (_, order) = group
                    .as_ref()
                    .ok_or_else(|| err("class before group header".into()))?;
                if tok.len() != 4 {
                    return Err(err("expected `class <id> <element_order> <class_size>`".into()));
                }
                let size = num(tok[3])?;
                if size == 0 || order % size != 0 {
                    return Err(err(format!("class size {size} does not divide {order}")));
                }
                classes.push(class(tok[1], num(tok[2])?, size, *order));
            }
            "char" => {
                if tok.len() != 3 + classes.len() {
                    return Err(err(format!(
                        "expected {} values for character {}",
                        classes.len(),
                        tok.get(1).unwrap_or(&"?")
                    )));
                }
                let degree = num(tok[2])?;
                let mut values = BTreeMap::new();
                for (c, v) in classes.iter().zip(&tok[3..]) {
                    let r = parse_rat(v).map_err(|_| err(format!("bad value {v:?}")))?;
                    values.insert(c.id.clone(), Cyclotomic::from_rational(r));
                }
                if values.get(IDENTITY) != Some(&Cyclotomic::from_int(degree as i64)) {
                    return Err(err(format!("value at identity differs from degree {degree}")));
                }
                chars.push(CharSlice {
                    name: tok[1].to_string(),
                    degree,
                    values,
                });
            }
            other => return Err(err(format!("unknown record {other:?}"))),
        }
    }
    let (group, group_order) = group.ok_or(Error::Parse {
        line: 0,
        msg: "missing group header".into(),
    })?;
    let table = TableSlice {
        group,
        group_order,
        classes,
        chars,
        notes: Vec::new(),
    };
    let report = validate_orthogonality(&table);
    if !report.pass {
        let bad: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.ok)
            .map(|c| format!("({}, {}) = {} != {}", c.x, c.y, c.value, c.expected))
            .collect();
        return Err(Error::Validation(format!(
            "column orthogonality fails: {}",
            bad.join("; ")
        )));
    }
    Ok(table)
}

pub fn load_table(path: &Path) -> Result<TableSlice> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text)
}

/// Directory holding shipped tables and oracle caches: `$GRS_DATA_DIR`, or
/// the crate's `data/` directory.
pub fn data_dir() -> std::path::PathBuf {
    std::env::var_os("GRS_DATA_DIR")
        .map(Into::into)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data").into())
}

pub fn psl33_table() -> Result<TableSlice> {
    load_table(&data_dir().join("psl33.tbl"))
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthCheck {
    pub x: String,
    pub y: String,
    pub value: Cyclotomic,
    pub expected: Cyclotomic,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthReport {
    pub group: String,
    pub checks: Vec<OrthCheck>,
    pub pass: bool,
}

/// Column orthogonality on every pair of included classes, evaluated exactly.
pub fn validate_orthogonality(t: &TableSlice) -> OrthReport {
    let mut checks = Vec::new();
    for (i, x) in t.classes.iter().enumerate() {
        for y in &t.classes[i..] {
            let mut value = Cyclotomic::zero();
            let mut complete = true;
            for ch in &t.chars {
                match (ch.values.get(&x.id), ch.values.get(&y.id)) {
                    (Some(a), Some(b)) => value = &value + &(a * &b.conj()),
                    _ => complete = false,
                }
            }
            let expected = if x.id == y.id {
                Cyclotomic::from_int(x.centralizer_order as i64)
            } else {
                Cyclotomic::zero()
            };
            let ok = complete && value == expected;
            checks.push(OrthCheck {
                x: x.id.clone(),
                y: y.id.clone(),
                value,
                expected,
                ok,
            });
        }
    }
    let pass = checks.iter().all(|c| c.ok)
        && t.classes
            .iter()
            .all(|c| c.class_size * c.centralizer_order == t.group_order);
    OrthReport {
        group: t.group.clone(),
        checks,
        pass,
    }
}

/// Whether `row` takes one common value on all the given classes.
pub fn constant_on(row: &CharSlice, classes: &[String]) -> bool {
    classes
        .windows(2)
        .all(|w| row.values.get(&w[0]) == row.values.get(&w[1]))
}

/// Integer coefficients `m` (searched in `range`, smallest total weight first)
/// with `row - sum m_i basis_i` constant on `classes`. Returns the
/// coefficients and the common value of the remainder on `classes`.
pub fn decompose(
    row: &CharSlice,
    basis: &[&CharSlice],
    classes: &[String],
    range: std::ops::RangeInclusive<i64>,
) -> Option<(Vec<i64>, Cyclotomic)> {
    let choices: Vec<i64> = range.collect();
    let mut candidates: Vec<Vec<i64>> = vec![vec![]];
    for _ in basis {
        candidates = candidates
            .into_iter()
            .flat_map(|c| {
                choices.iter().map(move |&m| {
                    let mut v = c.clone();
                    v.push(m);
                    v
                })
            })
            .collect();
    }
    // prefer non-negative, then small weight, then lexicographic
    candidates.sort_by_key(|m| {
        (
            m.iter().any(|&x| x < 0),
            m.iter().map(|x| x.abs()).sum::<i64>(),
            m.clone(),
        )
    });
    for m in candidates {
        let rem: Vec<Cyclotomic> = classes
            .iter()
            .map(|cl| {
                let mut v = row.values.get(cl)?.clone();
                for (b, &k) in basis.iter().zip(&m) {
                    v = &v - &b.values.get(cl)?.scale(&rat(k));
                }
                Some(v)
            })
            .collect::<Option<_>>()?;
        if rem.windows(2).all(|w| w[0] == w[1]) {
            return Some((m, rem.into_iter().next().unwrap_or_else(Cyclotomic::zero)));
        }
    }
    None
}

/// Sum of squared degrees, `|G|` for a complete table.
pub fn degree_square_sum(t: &TableSlice) -> u64 {
    t.chars.iter().map(|c| c.degree * c.degree).sum()
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative() || r.is_zero()
}
