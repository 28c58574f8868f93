//! Partial augmentations: recovering them from character values, the
//! non-negativity criterion for rational conjugacy to a group element, and
//! order/exponent admissibility of finite unit subgroups.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{rat_str, Cyclotomic, Rational};
use crate::chardata::{TableSlice, IDENTITY};
use crate::error::{Error, Result};

/// Partial augmentations of a unit on a list of conjugacy classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugVector {
    support: Vec<String>,
    values: BTreeMap<String, Rational>,
}

impl AugVector {
    pub fn new(entries: Vec<(String, Rational)>) -> Self {
        AugVector {
            support: entries.iter().map(|(k, _)| k.clone()).collect(),
            values: entries.into_iter().collect(),
        }
    }

    /// Partial augmentations of a group element of class `class`.
    pub fn indicator(support: &[String], class: &str) -> Self {
        Self::new(
            support
                .iter()
                .map(|s| {
                    let v = if s == class { Rational::one() } else { Rational::zero() };
                    (s.clone(), v)
                })
                .collect(),
        )
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn get(&self, class: &str) -> Rational {
        self.values.get(class).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn sum(&self) -> Rational {
        self.values.values().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.values.values().all(Rational::is_integer)
    }

    /// The class on which this vector is the indicator, if any.
    pub fn indicated_class(&self) -> Option<&str> {
        let mut hit = None;
        for s in &self.support {
            let v = &self.values[s];
            if v.is_one() {
                if hit.is_some() {
                    return None;
                }
                hit = Some(s.as_str());
            } else if !v.is_zero() {
                return None;
            }
        }
        hit
    }

    /// Entries in support order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.support.iter().map(|s| (s.as_str(), &self.values[s]))
    }
}

impl Serialize for AugVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<&str, String> = self
            .values
            .iter()
            .map(|(k, v)| (k.as_str(), rat_str(v)))
            .collect();
        m.serialize(s)
    }
}

/// Character values of one unit, keyed by character name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CharProfile {
    pub values: BTreeMap<String, Cyclotomic>,
}

impl CharProfile {
    /// Profile of a group element lying in class `class`.
    pub fn of_class(table: &TableSlice, class: &str) -> Result<Self> {
        let values = table
            .chars
            .iter()
            .map(|ch| Ok((ch.name.clone(), ch.value(class)?.clone())))
            .collect::<Result<_>>()?;
        Ok(CharProfile { values })
    }

    pub fn get(&self, name: &str) -> Option<&Cyclotomic> {
        self.values.get(name)
    }
}

/// `chi(u) = sum_x eps_x(u) chi(x)` for every row of `table`.
pub fn synthesize_profile(table: &TableSlice, aug: &AugVector) -> Result<CharProfile> {
    let mut values = BTreeMap::new();
    for ch in &table.chars {
        let mut v = Cyclotomic::zero();
        for (cl, e) in aug.entries() {
            v = &v + &ch.value(cl)?.scale(e);
        }
        values.insert(ch.name.clone(), v);
    }
    Ok(CharProfile { values })
}

/// Solves `chi(u) = sum_{x in support} eps_x chi(x)` for all rows, together
/// with `sum eps_x = 1`, exactly. Every equation must be satisfied.
pub fn invert_profile(
    table: &TableSlice,
    profile: &CharProfile,
    support: &[String],
) -> Result<AugVector> {
    if support.iter().any(|s| s == IDENTITY) {
        return Err(Error::Validation(
            "support of a nontrivial torsion unit excludes the identity class".into(),
        ));
    }
    let n = support.len();
    let mut system: Vec<Vec<Cyclotomic>> = Vec::with_capacity(table.chars.len() + 1);
    let mut aug_row = vec![Cyclotomic::one(); n];
    aug_row.push(Cyclotomic::one());
    system.push(aug_row);
    for ch in &table.chars {
        let mut eq = support
            .iter()
            .map(|cl| ch.value(cl).cloned())
            .collect::<Result<Vec<_>>>()?;
        let rhs = profile.get(&ch.name).ok_or_else(|| {
            Error::Validation(format!("profile has no value for character {}", ch.name))
        })?;
        eq.push(rhs.clone());
        system.push(eq);
    }

    // Gauss-Jordan on the augmented system
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..n {
        let Some(pr) = (rank..system.len()).find(|&r| !system[r][col].is_zero()) else {
            continue;
        };
        system.swap(rank, pr);
        let inv = system[rank][col].inv()?;
        system[rank] = system[rank].iter().map(|v| v * &inv).collect();
        for r in 0..system.len() {
            if r != rank && !system[r][col].is_zero() {
                let f = system[r][col].clone();
                let pivot_row = system[rank].clone();
                for (v, pv) in system[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &(&f * pv);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if let Some(eq) = system[rank..].iter().find(|eq| !eq[n].is_zero()) {
        return Err(Error::Inconsistent(format!(
            "residual equation 0 = {} after elimination",
            eq[n]
        )));
    }
    if rank < n {
        return Err(Error::Underdetermined { rank, unknowns: n });
    }
    let mut entries = Vec::with_capacity(n);
    for (i, cl) in support.iter().enumerate() {
        let row = pivots.iter().position(|&c| c == i).expect("full rank");
        entries.push((cl.clone(), system[row][n].as_rational()?));
    }
    Ok(AugVector::new(entries))
}

/// A torsion unit whose powers share its support is rationally conjugate to
/// a group element iff all its partial augmentations are non-negative.
pub fn mrsw_conjugate_to_group_element(a: &AugVector) -> bool {
    a.entries().all(|(_, v)| !v.is_negative())
}

/// Order and exponent of a finite unit subgroup must divide those of `G`.
pub fn admissible_subgroup(order: u64, exponent: u64, g_order: u64, g_exponent: u64) -> bool {
    g_order % order == 0 && g_exponent % exponent == 0
}

/// Exponent of `PSL(2, q)` for odd `q = p^f`: `lcm(p, (q-1)/2, (q+1)/2)`.
pub fn psl2_exponent(p: u64, q: u64) -> u64 {
    p.lcm(&((q - 1) / 2)).lcm(&((q + 1) / 2))
}
