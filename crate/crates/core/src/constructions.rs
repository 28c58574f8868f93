//! Explicit elementary abelian unit groups in `QG`, given by block-diagonal
//! rational matrices in a few distinguished Wedderburn components. Every
//! other component only contributes character values, which are forced by
//! the slice decomposition of its character (see [`ForcedRule`]).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_prime, rat, rat_str, Cyclotomic, Rational};
use crate::augment::{invert_profile, mrsw_conjugate_to_group_element, AugVector, CharProfile};
use crate::chardata::{constant_on, decompose, psl2_slice, psl33_table, TableSlice};
use crate::error::{Error, Result};
use crate::ffield::{fq_make, FqElement};
use crate::help::ElementaryAbelian;
use crate::matrix::{companion_cyclotomic, BlockDiag, QMatrix};
use crate::patterns::{pattern_of, Pattern};

/// Materialization guard.
pub const MAX_P: u64 = 13;
pub const MAX_RANK: usize = 3;

/// A unit of `QG`: explicit blocks in the distinguished components and the
/// character values of the remaining rows.
#[derive(Clone, Debug, Serialize)]
pub struct BlockUnit {
    pub components: BTreeMap<String, BlockDiag>,
    pub forced_values: BTreeMap<String, Cyclotomic>,
}

/// `psi(w) = sum_i m_i theta_i(w) + common` for a nontrivial unit `w`,
/// where `theta_i` are the distinguished rows.
#[derive(Clone, Debug, Serialize)]
pub struct ForcedRule {
    pub coefficients: Vec<i64>,
    pub common: Cyclotomic,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitGroup {
    pub name: String,
    pub p: u64,
    pub rank: usize,
    pub table: TableSlice,
    pub distinguished: Vec<String>,
    pub rules: BTreeMap<String, ForcedRule>,
    pub generators: Vec<BlockUnit>,
    /// Elements keyed by exponent vector over the generators, in
    /// lexicographic order.
    pub elements: Vec<(Vec<u64>, BlockUnit)>,
    pub pattern: Option<Pattern>,
}

impl UnitGroup {
    fn assemble(
        name: String,
        p: u64,
        table: TableSlice,
        distinguished: Vec<String>,
        gens: Vec<BTreeMap<String, BlockDiag>>,
        pattern: Option<Pattern>,
    ) -> Result<Self> {
        let rank = gens.len();
        if p > MAX_P || rank > MAX_RANK {
            return Err(Error::TooLarge(p.pow(rank as u32)));
        }
        let support = table.nonidentity_classes();
        let basis: Vec<_> = distinguished
            .iter()
            .map(|n| {
                table
                    .char(n)
                    .ok_or_else(|| Error::Validation(format!("no character {n}")))
            })
            .collect::<Result<_>>()?;
        let mut rules = BTreeMap::new();
        for row in &table.chars {
            if distinguished.contains(&row.name) {
                continue;
            }
            let (coefficients, common) = if constant_on(row, &support) {
                (vec![0; basis.len()], row.value(&support[0])?.clone())
            } else {
                decompose(row, &basis, &support, -3..=3).ok_or_else(|| {
                    Error::Validation(format!(
                        "{} is not an integer combination of distinguished rows on the slice",
                        row.name
                    ))
                })?
            };
            rules.insert(
                row.name.clone(),
                ForcedRule {
                    coefficients,
                    common,
                },
            );
        }

        // powers[g][k] = gens[g]^k per component
        let mut powers: Vec<Vec<BTreeMap<String, BlockDiag>>> = Vec::new();
        for g in &gens {
            let mut list = vec![g
                .iter()
                .map(|(k, b)| (k.clone(), BlockDiag::identity(&b.signature())))
                .collect::<BTreeMap<_, _>>()];
            for k in 1..p as usize {
                let next = list[k - 1]
                    .iter()
                    .map(|(c, b)| Ok((c.clone(), b.mul(&g[c])?)))
                    .collect::<Result<_>>()?;
                list.push(next);
            }
            powers.push(list);
        }

        let mut ug = UnitGroup {
            name,
            p,
            rank,
            table,
            distinguished,
            rules,
            generators: Vec::new(),
            elements: Vec::new(),
            pattern,
        };
        for e in ElementaryAbelian::new(p, rank).elements() {
            let mut comps = powers[0][e[0] as usize].clone();
            for (g, &k) in e.iter().enumerate().skip(1) {
                for (c, b) in comps.iter_mut() {
                    *b = b.mul(&powers[g][k as usize][c])?;
                }
            }
            let unit = ug.unit_from_components(comps, e.iter().all(|&k| k == 0))?;
            ug.elements.push((e, unit));
        }
        for g in 0..rank {
            let mut e = vec![0; rank];
            e[g] = 1;
            ug.generators.push(ug.element(&e).expect("generator").clone());
        }
        Ok(ug)
    }

    fn unit_from_components(
        &self,
        components: BTreeMap<String, BlockDiag>,
        identity: bool,
    ) -> Result<BlockUnit> {
        let traces: Vec<Rational> = self
            .distinguished
            .iter()
            .map(|n| components[n].trace())
            .collect();
        let mut forced_values = BTreeMap::new();
        for (name, rule) in &self.rules {
            let v = if identity {
                let deg = self.table.char(name).expect("row").degree;
                Cyclotomic::from_int(deg as i64)
            } else {
                let mut v = rule.common.clone();
                for (m, t) in rule.coefficients.iter().zip(&traces) {
                    v = &v + &Cyclotomic::from_rational(t * rat(*m));
                }
                v
            };
            forced_values.insert(name.clone(), v);
        }
        Ok(BlockUnit {
            components,
            forced_values,
        })
    }

    pub fn element(&self, exponents: &[u64]) -> Option<&BlockUnit> {
        self.elements
            .iter()
            .find(|(e, _)| e == exponents)
            .map(|(_, u)| u)
    }

    /// Character values of a unit: traces in distinguished components, forced
    /// values elsewhere.
    pub fn profile(&self, unit: &BlockUnit) -> CharProfile {
        let mut values = unit.forced_values.clone();
        for n in &self.distinguished {
            values.insert(
                n.clone(),
                Cyclotomic::from_rational(unit.components[n].trace()),
            );
        }
        CharProfile { values }
    }

    pub fn profiles(&self) -> BTreeMap<Vec<u64>, CharProfile> {
        self.elements
            .iter()
            .map(|(e, u)| (e.clone(), self.profile(u)))
            .collect()
    }

    /// Pattern read off the traces: `{ j : eta(u v^j) = eta(c) }`.
    pub fn recovered_pattern(&self) -> Result<Option<Pattern>> {
        if self.rank != 2 || self.distinguished.len() != 1 {
            return Ok(None);
        }
        let eta = self
            .table
            .char(&self.distinguished[0])
            .ok_or_else(|| Error::Validation("missing distinguished row".into()))?;
        let eta_c = eta.rational_value("c")?;
        let name = &self.distinguished[0];
        let mut members = Vec::new();
        for j in 1..self.p {
            let u = self.element(&[1, j]).expect("element");
            if u.components[name].trace() == eta_c {
                members.push(j);
            }
        }
        Ok(Some(Pattern::new(self.p, members)?))
    }
}

fn comp(name: &str, b: BlockDiag) -> BTreeMap<String, BlockDiag> {
    [(name.to_string(), b)].into_iter().collect()
}

/// `u = (1, E, A^{-i_1}, ..., A^{-i_m})` and `v = (1, A, ..., A)` with
/// `(p+1)/2` copies of `A` in the `eta` component of `Q PSL(2, p^2)`, where
/// `A` is the companion matrix of the `p`-th cyclotomic polynomial and
/// `I = {i_1, ..., i_m}` is balanced.
pub fn build_psl2_units(p: u64, pattern: &Pattern) -> Result<UnitGroup> {
    if !is_prime(p) || p == 2 {
        return Err(Error::UnsupportedPrime(p));
    }
    if p > MAX_P {
        return Err(Error::TooLarge(p * p));
    }
    if pattern.p() != p || !pattern.is_balanced() {
        return Err(Error::BadPattern(format!(
            "{pattern} is not a balanced pattern for p = {p}"
        )));
    }
    let table = psl2_slice(p)?;
    let a = companion_cyclotomic(p as usize);
    let e = QMatrix::identity(p as usize - 1);
    let one = QMatrix::identity(1);
    let mut u = vec![one.clone(), e];
    for &i in pattern.members() {
        u.push(a.pow_signed(-(i as i64))?);
    }
    let mut v = vec![one];
    v.extend(std::iter::repeat_n(a, (p as usize + 1) / 2));
    UnitGroup::assemble(
        format!("U' in Q PSL(2,{}), I = {{{pattern}}}", p * p),
        p,
        table,
        vec!["eta".into()],
        vec![
            comp("eta", BlockDiag::new(u)),
            comp("eta", BlockDiag::new(v)),
        ],
        Some(pattern.clone()),
    )
}

/// Exponents of `A` per 2x2 block for `alpha`, `beta`, `gamma` in the `chi`
/// (degree 12) and `phi` (degree 16) components of `Q PSL(3,3)`.
pub const PSL33_CHI_BLOCKS: [[u64; 6]; 3] = [
    [0, 0, 0, 0, 0, 1],
    [0, 0, 1, 1, 1, 1],
    [0, 1, 1, 0, 2, 1],
];
pub const PSL33_PHI_BLOCKS: [[u64; 8]; 3] = [
    [1, 1, 1, 1, 1, 1, 1, 1],
    [0, 0, 0, 1, 1, 2, 2, 2],
    [0, 1, 2, 0, 2, 0, 1, 2],
];

pub fn build_psl33_units() -> Result<UnitGroup> {
    let table = psl33_table()?;
    let a = companion_cyclotomic(3);
    let blocks = |exps: &[u64]| BlockDiag::new(exps.iter().map(|&k| a.pow(k)).collect());
    let gens = (0..3)
        .map(|g| {
            [
                ("chi".to_string(), blocks(&PSL33_CHI_BLOCKS[g])),
                ("phi".to_string(), blocks(&PSL33_PHI_BLOCKS[g])),
            ]
            .into_iter()
            .collect()
        })
        .collect();
    UnitGroup::assemble(
        "U = <alpha, beta, gamma> in Q PSL(3,3)".into(),
        3,
        table,
        vec!["chi".into(), "phi".into()],
        gens,
        None,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementReport {
    pub exponents: Vec<u64>,
    #[serde(serialize_with = "ser_trace_map")]
    pub traces: BTreeMap<String, Rational>,
    #[serde(serialize_with = "ser_rat_map")]
    pub forced: BTreeMap<String, Cyclotomic>,
    pub partial_augmentations: Option<AugVector>,
    pub error: Option<String>,
    pub integral: bool,
    pub conjugate_to_group_element: bool,
}

fn ser_rat_map<S: serde::Serializer>(
    m: &BTreeMap<String, Cyclotomic>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let v: BTreeMap<&String, String> = m.iter().map(|(k, v)| (k, v.to_string())).collect();
    v.serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub p: u64,
    pub rank: usize,
    pub generators_commute: bool,
    pub generator_orders: Vec<u64>,
    pub group_order: usize,
    pub faithful: bool,
    pub all_integral: bool,
    /// Elements whose partial augmentations are concentrated on one class.
    pub class_counts: BTreeMap<String, usize>,
    /// Nontrivial elements with any other partial augmentation vector.
    pub other_count: usize,
    pub pattern: Option<Pattern>,
    pub recovered_pattern: Option<Pattern>,
    pub elements: Vec<ElementReport>,
    pub pass: bool,
}

fn serialize_traces(t: &BTreeMap<String, Rational>) -> BTreeMap<String, String> {
    t.iter().map(|(k, v)| (k.clone(), rat_str(v))).collect()
}

fn ser_trace_map<S: serde::Serializer>(
    m: &BTreeMap<String, Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    serialize_traces(m).serialize(s)
}

impl VerifyReport {
    pub fn element(&self, exponents: &[u64]) -> Option<&ElementReport> {
        self.elements.iter().find(|e| e.exponents == exponents)
    }

    /// Per-element summary lines.
    pub fn trace_lines(&self) -> Vec<String> {
        self.elements
            .iter()
            .map(|e| {
                let eps = e
                    .partial_augmentations
                    .as_ref()
                    .map(|a| {
                        a.entries()
                            .map(|(k, v)| format!("{k}={v}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .unwrap_or_else(|| "-".into());
                format!(
                    "{:?} traces {:?} eps [{eps}]",
                    e.exponents,
                    serialize_traces(&e.traces)
                )
            })
            .collect()
    }
}

/// Order of a unit across all distinguished components.
fn unit_order(u: &BlockUnit, bound: u64) -> Result<u64> {
    let mut order = 1u64;
    for b in u.components.values() {
        let k = b.order(bound)?;
        order = num_integer::lcm(order, k);
    }
    Ok(order)
}

pub fn verify_unit_group(ug: &UnitGroup) -> Result<VerifyReport> {
    let mut commute = true;
    for (i, x) in ug.generators.iter().enumerate() {
        for y in &ug.generators[i + 1..] {
            for (c, bx) in &x.components {
                let by = &y.components[c];
                if bx.mul(by)? != by.mul(bx)? {
                    commute = false;
                }
            }
        }
    }
    let generator_orders = ug
        .generators
        .iter()
        .map(|g| unit_order(g, ug.p))
        .collect::<Result<Vec<_>>>()?;

    let mut distinct: Vec<&BTreeMap<String, BlockDiag>> = Vec::new();
    for (_, u) in &ug.elements {
        if !distinct.contains(&&u.components) {
            distinct.push(&u.components);
        }
    }
    let group_order = distinct.len();
    let expected_order = ug.p.pow(ug.rank as u32) as usize;
    let faithful = group_order == expected_order;

    let support = ug.table.nonidentity_classes();
    let elements: Vec<ElementReport> = ug
        .elements
        .par_iter()
        .map(|(e, u)| {
            let traces = ug
                .distinguished
                .iter()
                .map(|n| (n.clone(), u.components[n].trace()))
                .collect();
            let trivial = e.iter().all(|&k| k == 0);
            let (aug, error) = if trivial {
                (None, None)
            } else {
                match invert_profile(&ug.table, &ug.profile(u), &support) {
                    Ok(a) => (Some(a), None),
                    Err(err) => (None, Some(err.to_string())),
                }
            };
            let integral = trivial || aug.as_ref().is_some_and(AugVector::is_integral);
            let conj = trivial || aug.as_ref().is_some_and(mrsw_conjugate_to_group_element);
            ElementReport {
                exponents: e.clone(),
                traces,
                forced: u.forced_values.clone(),
                partial_augmentations: aug,
                error,
                integral,
                conjugate_to_group_element: conj,
            }
        })
        .collect();

    let mut class_counts: BTreeMap<String, usize> =
        support.iter().map(|s| (s.clone(), 0)).collect();
    let mut other_count = 0;
    for el in elements.iter().filter(|e| e.exponents.iter().any(|&k| k != 0)) {
        match el.partial_augmentations.as_ref().and_then(|a| a.indicated_class()) {
            Some(c) => *class_counts.get_mut(c).expect("support class") += 1,
            None => other_count += 1,
        }
    }
    let all_integral = elements.iter().all(|e| e.integral && e.error.is_none());
    let recovered_pattern = ug.recovered_pattern()?;
    let pass = commute
        && generator_orders.iter().all(|&o| o == ug.p)
        && faithful
        && all_integral
        && recovered_pattern == ug.pattern;
    Ok(VerifyReport {
        name: ug.name.clone(),
        p: ug.p,
        rank: ug.rank,
        generators_commute: commute,
        generator_orders,
        group_order,
        faithful,
        all_integral,
        class_counts,
        other_count,
        pattern: ug.pattern.clone(),
        recovered_pattern,
        elements,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValentiWitness {
    pub g: String,
    pub h: String,
    /// `{ i : g + i h in class c }`, the group-side pattern of the images.
    pub pattern: Pattern,
}

/// Searches for an isomorphism `U = <u, v> -> P` onto a Sylow `p`-subgroup
/// `P = (F_{p^2}, +)` of `PSL(2, p^2)` preserving every character value.
///
/// `unit_profiles` is keyed by exponent vectors `(i, j)` for `u^i v^j`. The
/// images `g`, `h` of the generators range over all `F_p`-independent pairs.
pub fn valenti_search(
    unit_profiles: &BTreeMap<Vec<u64>, CharProfile>,
    p: u64,
    table: &TableSlice,
) -> Result<Option<ValentiWitness>> {
    let f = fq_make(p)?;
    let cols = ["c", "d"];
    let group_profiles: Vec<CharProfile> = cols
        .iter()
        .map(|c| CharProfile::of_class(table, c))
        .collect::<Result<_>>()?;
    // which group class (0 = c, 1 = d) each nontrivial unit element matches
    let mut unit_class: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for i in 0..p {
        for j in 0..p {
            if i == 0 && j == 0 {
                continue;
            }
            let prof = unit_profiles
                .get(&vec![i, j])
                .ok_or_else(|| Error::Validation(format!("no profile for ({i}, {j})")))?;
            match group_profiles.iter().position(|g| g == prof) {
                Some(k) => {
                    unit_class.insert((i, j), k);
                }
                // not character-equivalent to any group element at all
                None => return Ok(None),
            }
        }
    }
    let class_of = |x: FqElement| -> usize {
        if f.is_square(x).expect("nonzero") {
            0
        } else {
            1
        }
    };
    let nonzero: Vec<FqElement> = f.nonzero().collect();
    for &g in &nonzero {
        if class_of(g) != unit_class[&(1, 0)] {
            continue;
        }
        'h: for &h in &nonzero {
            // independence over F_p
            if (1..p).any(|k| f.scale(k, g) == h) {
                continue;
            }
            for (&(i, j), &k) in &unit_class {
                let x = f.add(f.scale(i, g), f.scale(j, h));
                if class_of(x) != k {
                    continue 'h;
                }
            }
            return Ok(Some(ValentiWitness {
                g: g.to_string(),
                h: h.to_string(),
                pattern: pattern_of(&f, g, h)?,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{balanced_patterns, group_patterns};

    #[test]
    fn psl2_p7_traces() {
        let pat = Pattern::balanced(7, [1, 2, 4]).unwrap();
        let ug = build_psl2_units(7, &pat).unwrap();
        let u = &ug.generators[0].components["eta"];
        let v = &ug.generators[1].components["eta"];
        assert_eq!(u.dim(), 25);
        assert_eq!(u.signature(), vec![1, 6, 6, 6, 6]);
        assert_eq!(u.trace(), rat(4));
        assert_eq!(v.trace(), rat(-3));
        for j in 1..7u64 {
            let t = ug.element(&[1, j]).unwrap().components["eta"].trace();
            assert_eq!(t, rat(if pat.contains(j) { 4 } else { -3 }), "j={j}");
        }
        assert_eq!(ug.recovered_pattern().unwrap(), Some(pat));
    }

    #[test]
    fn forced_eta_tilde_is_swapped_value() {
        let pat = Pattern::balanced(5, [1, 2]).unwrap();
        let ug = build_psl2_units(5, &pat).unwrap();
        for (e, unit) in &ug.elements {
            if e.iter().all(|&k| k == 0) {
                continue;
            }
            let eta = unit.components["eta"].trace();
            let want = Cyclotomic::from_rational(rat(1) - eta);
            assert_eq!(unit.forced_values["eta_tilde"], want);
            assert_eq!(unit.forced_values["St"], Cyclotomic::zero());
        }
    }

    #[test]
    fn verify_psl2_p7() {
        let pat = Pattern::balanced(7, [1, 2, 4]).unwrap();
        let ug = build_psl2_units(7, &pat).unwrap();
        let r = verify_unit_group(&ug).unwrap();
        assert!(r.pass);
        assert_eq!(r.class_counts["c"], 24);
        assert_eq!(r.class_counts["d"], 24);
        assert_eq!(r.other_count, 0);
        assert!(r.elements.iter().all(|e| e.conjugate_to_group_element));
        assert_eq!(valenti_search(&ug.profiles(), 7, &ug.table).unwrap(), None);
    }

    #[test]
    fn verify_psl2_p3() {
        let pat = Pattern::balanced(3, [1]).unwrap();
        let ug = build_psl2_units(3, &pat).unwrap();
        let r = verify_unit_group(&ug).unwrap();
        assert!(r.pass);
        assert_eq!(r.group_order, 9);
        assert_eq!((r.class_counts["c"], r.class_counts["d"]), (4, 4));
        assert!(r.elements.iter().all(|e| e.conjugate_to_group_element));
        let w = valenti_search(&ug.profiles(), 3, &ug.table).unwrap().unwrap();
        assert_eq!(w.pattern, pat);
    }

    #[test]
    fn valenti_agrees_with_group_patterns() {
        for p in [3u64, 5, 7] {
            let realizable = group_patterns(p).unwrap();
            for pat in balanced_patterns(p) {
                let ug = build_psl2_units(p, &pat).unwrap();
                let w = valenti_search(&ug.profiles(), p, &ug.table).unwrap();
                assert_eq!(w.is_some(), realizable.contains(&pat), "p={p} I={pat}");
                if let Some(w) = w {
                    assert_eq!(w.pattern, pat);
                }
            }
        }
    }

    #[test]
    fn psl33_generator_traces() {
        let ug = build_psl33_units().unwrap();
        let tr = |e: &[u64], c: &str| ug.element(e).unwrap().components[c].trace();
        assert_eq!(tr(&[1, 0, 0], "chi"), rat(9));
        assert_eq!(tr(&[1, 0, 0], "phi"), rat(-8));
        assert_eq!(tr(&[0, 1, 0], "chi"), rat(0));
        assert_eq!(tr(&[0, 1, 0], "phi"), rat(1));
        assert_eq!(tr(&[0, 0, 1], "chi"), rat(0));
        assert_eq!(tr(&[0, 0, 1], "phi"), rat(1));
        assert_eq!(tr(&[1, 1, 1], "chi"), rat(3));
        assert_eq!(tr(&[1, 1, 1], "phi"), rat(-2));
    }

    #[test]
    fn verify_psl33() {
        let ug = build_psl33_units().unwrap();
        let r = verify_unit_group(&ug).unwrap();
        assert!(r.pass, "{:?}", r.elements.iter().find(|e| e.error.is_some()));
        assert_eq!(r.group_order, 27);
        for el in &r.elements {
            let (i, j, k) = (el.exponents[0], el.exponents[1], el.exponents[2]);
            if i + j + k == 0 {
                continue;
            }
            let a = el.partial_augmentations.as_ref().unwrap();
            let got = (a.get("a"), a.get("b"));
            let want = if j == 0 && k == 0 {
                (rat(3), rat(-2))
            } else if (i + j + k) % 3 == 0 {
                (rat(1), rat(0))
            } else {
                (rat(0), rat(1))
            };
            assert_eq!(got, want, "{:?}", el.exponents);
            assert_eq!(el.conjugate_to_group_element, !(j == 0 && k == 0));
        }
    }

    #[test]
    fn builder_guards() {
        assert!(matches!(
            build_psl2_units(7, &Pattern::new(7, [1, 2]).unwrap()),
            Err(Error::BadPattern(_))
        ));
        assert!(matches!(
            build_psl2_units(5, &Pattern::balanced(7, [1, 2, 4]).unwrap()),
            Err(Error::BadPattern(_))
        ));
        assert!(matches!(
            build_psl2_units(17, &Pattern::balanced(17, 1..=8).unwrap()),
            Err(Error::TooLarge(_))
        ));
        assert!(build_psl2_units(9, &Pattern::new(9, [1]).unwrap()).is_err());
    }
}
