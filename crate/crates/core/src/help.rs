//! Character-multiplicity constraints on a hypothetical elementary abelian
//! unit subgroup `U = C_p^k`.
//!
//! Each cyclic subgroup of `U` is assigned one of the two classes of order
//! `p` of `G` (all nontrivial powers of a `p`-element are conjugate to it, so
//! the assignment is constant on cyclic subgroups). Restricting a character
//! `theta` of `G` to `U` must decompose with non-negative integral
//! multiplicities `<theta, chi>_U` for every linear character `chi` of `U`.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{cyclo, rat, Cyclotomic, Rational};
use crate::chardata::{CharSlice, TableSlice};
use crate::error::{Error, Result};

/// Enumeration helper for `C_p^rank`, elements as exponent vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryAbelian {
    pub p: u64,
    pub rank: usize,
}

impl ElementaryAbelian {
    pub fn new(p: u64, rank: usize) -> Self {
        ElementaryAbelian { p, rank }
    }

    pub fn order(&self) -> u64 {
        self.p.pow(self.rank as u32)
    }

    /// All elements in lexicographic order of exponent vectors.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        (0..self.rank)
            .map(|_| 0..self.p)
            .multi_cartesian_product()
            .collect()
    }

    /// Canonical generators (first nonzero coordinate 1) of the cyclic
    /// subgroups, in lexicographic order.
    pub fn cyclic_subgroups(&self) -> Vec<Vec<u64>> {
        self.elements()
            .into_iter()
            .filter(|v| v.iter().find(|&&c| c != 0) == Some(&1))
            .collect()
    }

    pub fn normalize(&self, w: &[u64]) -> Option<Vec<u64>> {
        let lead = *w.iter().find(|&&c| c != 0)?;
        let inv = crate::ffield::inv_mod(lead, self.p);
        Some(w.iter().map(|&c| c * inv % self.p).collect())
    }

    pub fn dot(&self, a: &[u64], w: &[u64]) -> u64 {
        a.iter().zip(w).map(|(x, y)| x * y).sum::<u64>() % self.p
    }
}

/// A class of `G` for each cyclic subgroup of `U`, indexed like
/// [`ElementaryAbelian::cyclic_subgroups`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub p: u64,
    pub rank: usize,
    pub subgroup_classes: Vec<String>,
}

impl Assignment {
    pub fn new(p: u64, rank: usize, subgroup_classes: Vec<String>) -> Result<Self> {
        let n = ElementaryAbelian::new(p, rank).cyclic_subgroups().len();
        if subgroup_classes.len() != n {
            return Err(Error::Validation(format!(
                "C_{p}^{rank} has {n} cyclic subgroups, got {} classes",
                subgroup_classes.len()
            )));
        }
        Ok(Assignment {
            p,
            rank,
            subgroup_classes,
        })
    }

    /// The first `x` subgroups on `first`, the rest on `second`.
    pub fn representative(p: u64, rank: usize, x: usize, first: &str, second: &str) -> Self {
        let n = ElementaryAbelian::new(p, rank).cyclic_subgroups().len();
        let classes = (0..n)
            .map(|i| if i < x { first } else { second }.to_string())
            .collect();
        Assignment {
            p,
            rank,
            subgroup_classes: classes,
        }
    }

    pub fn count(&self, class: &str) -> usize {
        self.subgroup_classes.iter().filter(|c| *c == class).count()
    }
}

/// `<theta|_U, chi> = p^{-k} sum_{w in U} theta(w) conj(chi(w))`, with
/// `chi(w) = zeta_p^{chi . w}`.
pub fn multiplicity(theta: &CharSlice, a: &Assignment, chi: &[u64]) -> Result<Cyclotomic> {
    let u = ElementaryAbelian::new(a.p, a.rank);
    let subgroups = u.cyclic_subgroups();
    let values = subgroup_values(theta, a)?;
    Ok(multiplicity_on(&u, &subgroups, theta.degree, &values, chi))
}

fn subgroup_values<'a>(theta: &'a CharSlice, a: &Assignment) -> Result<Vec<&'a Cyclotomic>> {
    a.subgroup_classes.iter().map(|c| theta.value(c)).collect()
}

fn multiplicity_on(
    u: &ElementaryAbelian,
    subgroups: &[Vec<u64>],
    degree: u64,
    values: &[&Cyclotomic],
    chi: &[u64],
) -> Cyclotomic {
    // Coefficient of zeta^0 and the common coefficient of zeta^m, m != 0:
    // on a subgroup outside ker(chi) the exponents -chi.w run over all
    // nonzero residues exactly once.
    let mut at_zero = Cyclotomic::from_int(degree as i64);
    let mut spread = Cyclotomic::zero();
    let pm1 = rat(u.p as i64 - 1);
    for (s, v) in subgroups.iter().zip(values) {
        if u.dot(chi, s) == 0 {
            at_zero = &at_zero + &v.scale(&pm1);
        } else {
            spread = &spread + v;
        }
    }
    let p = u.p as usize;
    let total = match (at_zero.as_rational(), spread.as_rational()) {
        (Ok(z), Ok(sp)) => {
            let mut coeffs = vec![sp; p];
            coeffs[0] = z;
            Cyclotomic::from_power_coeffs(u.p as u32, &coeffs)
        }
        _ => {
            let nonzero_powers = (1..p as i64)
                .fold(Cyclotomic::zero(), |acc, m| &acc + &cyclo(u.p as u32, m));
            &at_zero + &(&spread * &nonzero_powers)
        }
    };
    total.scale(&Rational::new(1.into(), u.order().into()))
}

pub fn is_valid_multiplicity(m: &Cyclotomic) -> bool {
    match m.as_rational() {
        Ok(r) => r.is_integer() && !r.is_negative(),
        Err(_) => false,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub theta: String,
    pub chi: Vec<u64>,
    pub multiplicity: Cyclotomic,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    /// Number of cyclic subgroups on the first class.
    pub x: usize,
    pub feasible: bool,
    /// First failing linear character for each failing `theta`.
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HelpScan {
    pub group: String,
    pub p: u64,
    pub rank: usize,
    pub classes: Vec<String>,
    pub subgroups: usize,
    pub method: String,
    pub rows: Vec<ScanRow>,
    pub feasible: Vec<usize>,
    /// Feasible counts using only the trivial character of `U`.
    pub feasible_trivial_only: Vec<usize>,
    /// Feasible counts using only nontrivial characters (rank 2 only).
    pub feasible_nontrivial_only: Option<Vec<usize>>,
    /// Multiplicities agree for two distinct assignments with equal counts.
    pub symmetry_check: Option<bool>,
    pub early_exit: Option<String>,
}

// Rows with identical values on the slice give identical multiplicities.
fn distinct_rows<'a>(theta_set: &[&'a CharSlice]) -> Vec<&'a CharSlice> {
    let mut seen: Vec<&BTreeMap<String, Cyclotomic>> = Vec::new();
    let mut out = Vec::new();
    for t in theta_set {
        if !seen.contains(&&t.values) {
            seen.push(&t.values);
            out.push(*t);
        }
    }
    out
}

struct Ctx<'t> {
    u: ElementaryAbelian,
    subgroups: Vec<Vec<u64>>,
    thetas: Vec<&'t CharSlice>,
}

impl Ctx<'_> {
    fn failing(&self, a: &Assignment, chars: &[Vec<u64>]) -> Result<Vec<Witness>> {
        let mut out = Vec::new();
        for th in &self.thetas {
            let values = subgroup_values(th, a)?;
            for chi in chars {
                let m = multiplicity_on(&self.u, &self.subgroups, th.degree, &values, chi);
                if !is_valid_multiplicity(&m) {
                    out.push(Witness {
                        theta: th.name.clone(),
                        chi: chi.clone(),
                        multiplicity: m,
                    });
                    break;
                }
            }
        }
        Ok(out)
    }

    fn multiset(&self, a: &Assignment, chars: &[Vec<u64>]) -> Result<Vec<String>> {
        let mut v = Vec::new();
        for th in &self.thetas {
            let values = subgroup_values(th, a)?;
            for chi in chars {
                let m = multiplicity_on(&self.u, &self.subgroups, th.degree, &values, chi);
                v.push(format!("{}:{}", th.name, m));
            }
        }
        v.sort();
        Ok(v)
    }
}

/// Limit on assignments enumerated per count in rank >= 3.
pub const EXHAUSTIVE_LIMIT: usize = 200_000;

/// Which counts `x` (cyclic subgroups on the first order-`p` class) admit
/// an assignment with all multiplicities non-negative integers.
pub fn feasible_distributions(
    table: &TableSlice,
    theta_set: &[&CharSlice],
    p: u64,
    rank: usize,
) -> Result<HelpScan> {
    let classes = table.nonidentity_classes();
    let u = ElementaryAbelian::new(p, rank);
    let n = u.cyclic_subgroups().len();
    if classes.len() == 1 {
        return Ok(single_class_scan(&table.group, p, rank, &classes[0]));
    }
    if classes.len() != 2 {
        return Err(Error::Validation(format!(
            "expected two classes of order {p}, found {}",
            classes.len()
        )));
    }
    let (c1, c2) = (classes[0].as_str(), classes[1].as_str());
    let ctx = Ctx {
        u: u.clone(),
        subgroups: u.cyclic_subgroups(),
        thetas: distinct_rows(theta_set),
    };
    let chars = u.elements();
    let trivial = vec![vec![0u64; rank]];
    let nontrivial: Vec<Vec<u64>> = chars[1..].to_vec();

    let symmetry_check = if rank == 2 && n >= 2 {
        let x = n / 2;
        let rep = Assignment::representative(p, rank, x, c1, c2);
        let mut alt = rep.subgroup_classes.clone();
        alt.reverse();
        let alt = Assignment::new(p, rank, alt)?;
        Some(ctx.multiset(&rep, &chars)? == ctx.multiset(&alt, &chars)?)
    } else {
        None
    };

    let rows: Vec<(ScanRow, bool, Option<bool>)> = (0..=n)
        .into_par_iter()
        .map(|x| -> Result<(ScanRow, bool, Option<bool>)> {
            let rep = Assignment::representative(p, rank, x, c1, c2);
            let trivial_ok = ctx.failing(&rep, &trivial)?.is_empty();
            if rank == 2 {
                let witnesses = ctx.failing(&rep, &chars)?;
                let nontriv_ok = ctx.failing(&rep, &nontrivial)?.is_empty();
                let row = ScanRow {
                    x,
                    feasible: witnesses.is_empty(),
                    witnesses,
                };
                return Ok((row, trivial_ok, Some(nontriv_ok)));
            }
            // trivial-character multiplicities depend only on the counts
            if !trivial_ok {
                let witnesses = ctx.failing(&rep, &trivial)?;
                return Ok((
                    ScanRow {
                        x,
                        feasible: false,
                        witnesses,
                    },
                    false,
                    None,
                ));
            }
            let combos = num_combinations(n, x);
            if combos > EXHAUSTIVE_LIMIT {
                return Err(Error::TooLarge(combos as u64));
            }
            let mut first_witnesses = None;
            for on_first in (0..n).combinations(x) {
                let mut cls = vec![c2.to_string(); n];
                for i in on_first {
                    cls[i] = c1.to_string();
                }
                let a = Assignment::new(p, rank, cls)?;
                let w = ctx.failing(&a, &chars)?;
                if w.is_empty() {
                    return Ok((
                        ScanRow {
                            x,
                            feasible: true,
                            witnesses: vec![],
                        },
                        true,
                        None,
                    ));
                }
                first_witnesses.get_or_insert(w);
            }
            Ok((
                ScanRow {
                    x,
                    feasible: false,
                    witnesses: first_witnesses.unwrap_or_default(),
                },
                true,
                None,
            ))
        })
        .collect::<Result<_>>()?;

    let feasible = rows.iter().filter(|r| r.0.feasible).map(|r| r.0.x).collect();
    let feasible_trivial_only = rows.iter().filter(|r| r.1).map(|r| r.0.x).collect();
    let feasible_nontrivial_only = (rank == 2).then(|| {
        rows.iter()
            .filter(|r| r.2 == Some(true))
            .map(|r| r.0.x)
            .collect()
    });
    Ok(HelpScan {
        group: table.group.clone(),
        p,
        rank,
        classes: classes.clone(),
        subgroups: n,
        method: if rank == 2 {
            "representative assignment per count".into()
        } else {
            "count-invariant trivial character, then exhaustive assignments".into()
        },
        rows: rows.into_iter().map(|r| r.0).collect(),
        feasible,
        feasible_trivial_only,
        feasible_nontrivial_only,
        symmetry_check,
        early_exit: None,
    })
}

fn num_combinations(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// A single class of elements of order `p` (e.g. `p = 2` in `PSL(2, 4^f)`):
/// every assignment puts all subgroups on it.
pub fn single_class_scan(group: &str, p: u64, rank: usize, class: &str) -> HelpScan {
    let n = ElementaryAbelian::new(p, rank).cyclic_subgroups().len();
    HelpScan {
        group: group.to_string(),
        p,
        rank,
        classes: vec![class.to_string()],
        subgroups: n,
        method: "single class".into(),
        rows: vec![ScanRow {
            x: n,
            feasible: true,
            witnesses: vec![],
        }],
        feasible: vec![n],
        feasible_trivial_only: vec![n],
        feasible_nontrivial_only: None,
        symmetry_check: None,
        early_exit: Some(format!(
            "only one class of elements of order {p}: every assignment is consistent"
        )),
    }
}

/// Closed form of the multiplicity of `eta` against a character of `C_p^2`
/// whose kernel is a subgroup on class `c`, with `x` subgroups on `c`:
/// `(p^2 + (p^2+p)/2 - x p) / p^2`.
pub fn eta_kernel_closed_form(p: i64, x: i64) -> Rational {
    let num = rat(p * p) + Rational::new((p * p + p).into(), 2.into()) - rat(x * p);
    num / rat(p * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::frac;
    use crate::chardata::{psl2_slice, psl33_table};
    use proptest::prelude::*;

    fn all_rows(t: &TableSlice) -> Vec<&CharSlice> {
        t.chars.iter().collect()
    }

    #[test]
    fn subgroup_enumeration() {
        let u = ElementaryAbelian::new(7, 2);
        assert_eq!(u.elements().len(), 49);
        assert_eq!(u.cyclic_subgroups().len(), 8);
        assert_eq!(ElementaryAbelian::new(3, 3).cyclic_subgroups().len(), 13);
        assert_eq!(u.normalize(&[0, 3]), Some(vec![0, 1]));
        assert_eq!(u.normalize(&[3, 1]), Some(vec![1, 5]));
        assert_eq!(u.normalize(&[0, 0]), None);
    }

    // direct sum over all elements with cyclotomic arithmetic
    fn multiplicity_direct(theta: &CharSlice, a: &Assignment, chi: &[u64]) -> Cyclotomic {
        let u = ElementaryAbelian::new(a.p, a.rank);
        let subs = u.cyclic_subgroups();
        let mut s = Cyclotomic::zero();
        for w in u.elements() {
            let val = match u.normalize(&w) {
                None => Cyclotomic::from_int(theta.degree as i64),
                Some(g) => {
                    let i = subs.iter().position(|x| *x == g).unwrap();
                    theta.values[&a.subgroup_classes[i]].clone()
                }
            };
            let e = -(u.dot(chi, &w) as i64);
            s = &s + &(&val * &cyclo(a.p as u32, e));
        }
        s.scale(&frac(1, u.order() as i64))
    }

    #[test]
    fn eta_multiplicity_p7() {
        let t = psl2_slice(7).unwrap();
        let eta = t.char("eta").unwrap();
        // subgroups (0,1), (1,0), ... ; put the kernel line (0,1) on c
        // chi = (1, 0) has kernel {(0, *)} = <(0,1)>
        let a = Assignment::representative(7, 2, 4, "c", "d");
        assert_eq!(a.subgroup_classes[0], "c");
        assert_eq!(ElementaryAbelian::new(7, 2).cyclic_subgroups()[0], vec![0, 1]);
        let m = multiplicity(eta, &a, &[1, 0]).unwrap();
        assert_eq!(m, Cyclotomic::one());
        assert_eq!(eta_kernel_closed_form(7, 4), rat(1));
        let a3 = Assignment::representative(7, 2, 3, "c", "d");
        let m3 = multiplicity(eta, &a3, &[1, 0]).unwrap();
        assert_eq!(m3.as_rational().unwrap(), frac(56, 49));
        assert_eq!(eta_kernel_closed_form(7, 3), frac(56, 49));
        assert!(!is_valid_multiplicity(&m3));
    }

    #[test]
    fn closed_form_matches_engine() {
        for p in [3u64, 5, 7, 11, 13] {
            let t = psl2_slice(p).unwrap();
            let eta = t.char("eta").unwrap();
            for x in 1..=(p as usize + 1) {
                let a = Assignment::representative(p, 2, x, "c", "d");
                let m = multiplicity(eta, &a, &[1, 0]).unwrap();
                assert_eq!(m.as_rational().unwrap(), eta_kernel_closed_form(p as i64, x as i64));
            }
        }
    }

    #[test]
    fn psl33_trivial_character_formula() {
        let t = psl33_table().unwrap();
        let phi = t.char("phi").unwrap();
        for x in 0..=13usize {
            let a = Assignment::representative(3, 3, x, "a", "b");
            let m = multiplicity(phi, &a, &[0, 0, 0]).unwrap();
            let (x, y) = (x as i64, 13 - x as i64);
            // 16 - 4x + 2y with y = 13 - x is 42 - 6x
            assert_eq!(m.as_rational().unwrap(), frac(16 - 4 * x + 2 * y, 27));
            assert_eq!(m.as_rational().unwrap(), frac(42 - 6 * x, 27));
            assert_eq!(is_valid_multiplicity(&m), x == 7);
        }
    }

    // Points of PG(2,3) are the cyclic subgroups of C_3^3, lines are the
    // kernels of nontrivial characters. At x = 7 the nontrivial characters
    // force every line to meet the a-points in 1 or 4 points.
    #[test]
    fn no_seven_point_set_meets_every_line_in_one_or_four() {
        let u = ElementaryAbelian::new(3, 3);
        let pts = u.cyclic_subgroups();
        let lines: Vec<Vec<usize>> = u.elements()[1..]
            .iter()
            .filter(|c| u.normalize(c).as_ref() == Some(*c))
            .map(|c| (0..13).filter(|&i| u.dot(c, &pts[i]) == 0).collect())
            .collect();
        assert_eq!(lines.len(), 13);
        assert!(lines.iter().all(|l| l.len() == 4));
        let hits = (0u32..1 << 13)
            .filter(|m| m.count_ones() == 7)
            .filter(|m| {
                lines.iter().all(|l| {
                    let k = l.iter().filter(|&&i| m >> i & 1 == 1).count();
                    k == 1 || k == 4
                })
            })
            .count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn feasible_sets() {
        let t = psl2_slice(7).unwrap();
        let s = feasible_distributions(&t, &all_rows(&t), 7, 2).unwrap();
        assert_eq!(s.feasible, vec![4]);
        assert_eq!(s.symmetry_check, Some(true));
        let t = psl2_slice(3).unwrap();
        let s = feasible_distributions(&t, &all_rows(&t), 3, 2).unwrap();
        assert_eq!(s.feasible, vec![2]);
        let t = psl33_table().unwrap();
        let s = feasible_distributions(&t, &all_rows(&t), 3, 3).unwrap();
        assert!(s.feasible.is_empty());
        assert_eq!(s.feasible_trivial_only, vec![7]);
        assert_eq!(s.rows.len(), 14);
        for r in &s.rows {
            assert!(!r.witnesses.is_empty());
            if r.x == 7 {
                assert!(r.witnesses.iter().all(|w| w.chi != vec![0, 0, 0]));
                continue;
            }
            let w = r.witnesses.iter().find(|w| w.theta == "phi").unwrap();
            assert_eq!(w.chi, vec![0, 0, 0]);
            assert_eq!(
                w.multiplicity.as_rational().unwrap(),
                frac(42 - 6 * r.x as i64, 27)
            );
        }
    }

    #[test]
    fn every_infeasible_row_has_a_witness() {
        for p in [3u64, 5, 7, 11, 13] {
            let t = psl2_slice(p).unwrap();
            let s = feasible_distributions(&t, &all_rows(&t), p, 2).unwrap();
            assert_eq!(s.feasible, vec![(p as usize + 1) / 2], "p={p}");
            for r in &s.rows {
                assert_eq!(r.feasible, r.witnesses.is_empty());
            }
        }
    }

    #[test]
    fn single_class_early_exit() {
        let s = single_class_scan("PSL(2,4)", 2, 2, "2A");
        assert_eq!(s.feasible, vec![3]);
        assert!(s.early_exit.is_some());
    }

    #[test]
    fn trivial_theta() {
        let t = psl2_slice(5).unwrap();
        let triv = t.char("triv").unwrap();
        let a = Assignment::representative(5, 2, 2, "c", "d");
        for chi in ElementaryAbelian::new(5, 2).elements() {
            let m = multiplicity(triv, &a, &chi).unwrap();
            let want = if chi.iter().all(|&c| c == 0) { 1 } else { 0 };
            assert_eq!(m, Cyclotomic::from_int(want));
        }
    }

    #[test]
    fn unassigned_class() {
        let t = psl2_slice(3).unwrap();
        let a = Assignment::representative(3, 2, 2, "c", "z");
        assert!(matches!(
            multiplicity(t.char("eta").unwrap(), &a, &[0, 0]),
            Err(Error::UnassignedClass(_))
        ));
    }

    fn arb_assignment() -> impl Strategy<Value = (u64, Vec<bool>)> {
        prop_oneof![Just(3u64), Just(5), Just(7)]
            .prop_flat_map(|p| (Just(p), proptest::collection::vec(any::<bool>(), p as usize + 1)))
    }

    proptest! {
        #[test]
        fn fourier_completeness((p, bits) in arb_assignment()) {
            let t = psl2_slice(p).unwrap();
            let cls = bits.iter().map(|&b| if b { "c" } else { "d" }.to_string()).collect();
            let a = Assignment::new(p, 2, cls).unwrap();
            for th in [t.char("eta").unwrap(), t.char("St").unwrap(), t.char("eta_tilde").unwrap()] {
                let total = ElementaryAbelian::new(p, 2).elements().iter()
                    .fold(Cyclotomic::zero(), |acc, chi| &acc + &multiplicity(th, &a, chi).unwrap());
                prop_assert_eq!(total, Cyclotomic::from_int(th.degree as i64));
            }
        }

        #[test]
        fn bucketed_sum_matches_direct_sum((p, bits) in arb_assignment(), c0 in 0u64..7, c1 in 0u64..7) {
            let t = psl2_slice(p).unwrap();
            let cls = bits.iter().map(|&b| if b { "c" } else { "d" }.to_string()).collect();
            let a = Assignment::new(p, 2, cls).unwrap();
            let chi = [c0 % p, c1 % p];
            let eta = t.char("eta").unwrap();
            prop_assert_eq!(multiplicity(eta, &a, &chi).unwrap(), multiplicity_direct(eta, &a, &chi));
        }

        #[test]
        fn equal_counts_give_equal_multisets((p, bits) in arb_assignment()) {
            let t = psl2_slice(p).unwrap();
            let x = bits.iter().filter(|&&b| b).count();
            let cls = bits.iter().map(|&b| if b { "c" } else { "d" }.to_string()).collect();
            let a = Assignment::new(p, 2, cls).unwrap();
            let rep = Assignment::representative(p, 2, x, "c", "d");
            let u = ElementaryAbelian::new(p, 2);
            let ctx = Ctx { u: u.clone(), subgroups: u.cyclic_subgroups(), thetas: distinct_rows(&all_rows(&t)) };
            let chars = u.elements();
            prop_assert_eq!(ctx.multiset(&a, &chars).unwrap(), ctx.multiset(&rep, &chars).unwrap());
        }
    }
}
