//! Cross-module coherence checks, run as one gate.

use std::path::Path;

use serde::Serialize;

use crate::augment::admissible_subgroup;
use crate::chardata::{psl2_slice, psl33_table, validate_orthogonality, TableSlice};
use crate::constructions::{build_psl2_units, valenti_search};
use crate::error::Result;
use crate::ffield::square_lines;
use crate::oracle::{enumerate_cached, square_criterion_on, GroupSpec, MatGroup};
use crate::patterns::{balanced_patterns, group_patterns};

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

pub const PSL2_PRIMES: [u64; 5] = [3, 5, 7, 11, 13];

/// Sizes of the order-`p` classes in the enumerated group against the
/// nonidentity classes of the table slice, compared as sorted lists.
pub fn class_sizes_match(g: &MatGroup, p: u64, table: &TableSlice) -> Verdict {
    let mut got: Vec<u64> = g
        .order_p_classes(p)
        .iter()
        .map(|c| c.size as u64)
        .collect();
    let mut want: Vec<u64> = table
        .nonidentity_classes()
        .iter()
        .map(|c| table.class(c).expect("class").class_size)
        .collect();
    got.sort();
    want.sort();
    let order_ok = g.order() as u64 == table.group_order;
    Verdict::new(
        format!("{} class sizes match enumeration", table.group),
        got == want && order_ok,
        format!(
            "enumerated |G| = {} sizes {got:?}; table |G| = {} sizes {want:?}",
            g.order(),
            table.group_order
        ),
    )
}

pub fn run_invariants(dir: &Path, refresh: bool) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();

    for p in PSL2_PRIMES {
        let r = validate_orthogonality(&psl2_slice(p)?);
        out.push(Verdict::new(
            format!("orthogonality PSL(2,{})", p * p),
            r.pass,
            failing_checks(&r),
        ));
    }
    let t33 = psl33_table()?;
    let r = validate_orthogonality(&t33);
    out.push(Verdict::new("orthogonality PSL(3,3)", r.pass, failing_checks(&r)));

    for p in [3u64, 5] {
        let (g, _) = enumerate_cached(GroupSpec::Psl2 { q: p * p }, dir, refresh)?;
        out.push(Verdict::new(
            format!("|PSL(2,{})| = q(q^2-1)/2", p * p),
            g.order() as u64 == GroupSpec::Psl2 { q: p * p }.expected_order(),
            format!("{}", g.order()),
        ));
        out.push(class_sizes_match(&g, p, &psl2_slice(p)?));
        let sq = square_criterion_on(&g)?;
        out.push(Verdict::new(
            format!("square criterion p = {p}"),
            sq.holds,
            match &sq.counterexample {
                Some((l, m)) => format!("fails at l = {l}, m = {m}"),
                None => format!("{} pairs", sq.pairs_checked),
            },
        ));
    }
    let (g, _) = enumerate_cached(GroupSpec::Psl33, dir, refresh)?;
    out.push(class_sizes_match(&g, 3, &t33));
    out.push(Verdict::new(
        "27 | |PSL(3,3)| and 3 | exponent",
        admissible_subgroup(27, 3, g.order() as u64, g.exponent()),
        format!("order {} exponent {}", g.order(), g.exponent()),
    ));

    for p in PSL2_PRIMES {
        let r = square_lines(p)?;
        let want = ((p + 1) / 2) as usize;
        out.push(Verdict::new(
            format!("square lines p = {p}"),
            r.all_homogeneous && r.square_lines == want && r.nonsquare_lines == want,
            format!("({}, {})", r.square_lines, r.nonsquare_lines),
        ));
    }

    for p in [3u64, 5, 7] {
        let realizable = group_patterns(p)?;
        let table = psl2_slice(p)?;
        let mut bad = Vec::new();
        for pat in balanced_patterns(p) {
            let ug = build_psl2_units(p, &pat)?;
            let w = valenti_search(&ug.profiles(), p, &table)?;
            let agree = match &w {
                Some(w) => realizable.contains(&pat) && w.pattern == pat,
                None => !realizable.contains(&pat),
            };
            if !agree {
                bad.push(pat.to_string());
            }
        }
        out.push(Verdict::new(
            format!("valenti search agrees with group patterns p = {p}"),
            bad.is_empty(),
            if bad.is_empty() {
                format!("{} realizable", realizable.len())
            } else {
                format!("disagree on {{{}}}", bad.join("} {"))
            },
        ));
    }
    Ok(out)
}

fn failing_checks(r: &crate::chardata::OrthReport) -> String {
    let bad: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.ok)
        .map(|c| format!("({},{}) = {} expected {}", c.x, c.y, c.value, c.expected))
        .collect();
    if bad.is_empty() {
        format!("{} column pairs", r.checks.len())
    } else {
        bad.join("; ")
    }
}
