use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use grs::arith::is_prime;
use grs::chardata::{data_dir, psl2_slice, psl33_table, validate_orthogonality, TableSlice};
use grs::constructions::{
    build_psl2_units, build_psl33_units, valenti_search, verify_unit_group, UnitGroup,
};
use grs::help::{feasible_distributions, single_class_scan, HelpScan};
use grs::invariants::{class_sizes_match, run_invariants, Verdict};
use grs::oracle::{check_square_criterion, enumerate_cached, GroupSpec};
use grs::patterns::{gap_report, group_patterns, Pattern};
use grs::Error;

// stdout may be a closed pipe (`grs ... | head`)
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "grs", version, about = "Exact HeLP and unit-construction computations for PSL(2,p^2) and PSL(3,3)")]
struct Cli {
    /// Write a JSON run report here.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Worker threads for parallel scans.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Group {
    Psl2,
    Psl33,
}

#[derive(Args, Clone, Debug, Serialize)]
struct Target {
    /// Group (also accepted positionally).
    #[arg(value_enum, value_name = "GROUP")]
    group_pos: Option<Group>,
    #[arg(long, value_enum)]
    group: Option<Group>,
    /// The prime p, for PSL(2, p^2).
    #[arg(long)]
    p: Option<u64>,
    /// Field size q = p^2 (alternative to --p).
    #[arg(long)]
    q: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Character table slice on the identity and the order-p classes.
    Chartab(Target),
    /// Feasible distributions of cyclic subgroups of a C_p^2 or C_3^3 over the order-p classes.
    HelpScan(Target),
    /// Build the explicit unit group.
    Construct {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_name = "a,b,c")]
        pattern: Option<String>,
        #[arg(long)]
        verify: bool,
    },
    /// Balanced patterns realizable inside a Sylow subgroup of PSL(2, p^2).
    Patterns {
        #[arg(long)]
        p: u64,
        #[arg(long, value_name = "a,b,c")]
        pattern: Option<String>,
        #[arg(long)]
        list_missing: bool,
    },
    /// Brute-force enumeration of the matrix group.
    Oracle {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        refresh: bool,
    },
    /// The cross-module coherence suite.
    Invariants {
        #[arg(long)]
        refresh: bool,
    },
}

#[derive(Serialize)]
struct RunReport {
    command: Vec<String>,
    params: Value,
    verdicts: Vec<Verdict>,
    witnesses: Value,
    wall_clock_ms: u128,
}

struct Outcome {
    params: Value,
    verdicts: Vec<Verdict>,
    witnesses: Value,
}

enum Fail {
    Usage(String),
    Internal(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Inconsistent(_)
            | Error::Underdetermined { .. } => {
                Fail::Internal(e.to_string())
            }
            _ => Fail::Usage(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail::Usage(msg.into())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

impl Target {
    fn group(&self) -> Res<Group> {
        match (self.group_pos, self.group) {
            (Some(a), Some(b)) if a != b => Err(usage("conflicting group arguments")),
            (a, b) => Ok(a.or(b).unwrap_or(Group::Psl2)),
        }
    }

    /// `p` from `--p` or `--q`.
    fn prime(&self) -> Res<u64> {
        let from_q = match self.q {
            None => None,
            Some(q) => {
                let p = (1..=q).find(|&p| p * p >= q).unwrap_or(0);
                if p * p != q {
                    return Err(usage(format!("--q {q} is not the square of a prime")));
                }
                Some(p)
            }
        };
        let p = match (self.p, from_q) {
            (Some(a), Some(b)) if a != b => return Err(usage("--p and --q disagree")),
            (a, b) => a.or(b).ok_or_else(|| usage("--p is required for psl2"))?,
        };
        if !is_prime(p) {
            return Err(usage(format!("{p} is not prime")));
        }
        Ok(p)
    }
}

fn table_for(group: Group, t: &Target) -> Res<(TableSlice, u64, usize)> {
    match group {
        Group::Psl2 => {
            let p = t.prime()?;
            Ok((psl2_slice(p)?, p, 2))
        }
        Group::Psl33 => {
            if t.p.is_some_and(|p| p != 3) {
                return Err(usage("PSL(3,3) is only considered at p = 3"));
            }
            Ok((psl33_table()?, 3, 3))
        }
    }
}

fn chartab(t: &Target) -> Res<Outcome> {
    let group = t.group()?;
    let (table, p, _) = table_for(group, t)?;
    out!("{} |G| = {}", table.group, table.group_order);
    for c in &table.classes {
        out!(
            "class {:<3} order {:<3} size {:<8} centralizer {}",
            c.id, c.element_order, c.class_size, c.centralizer_order
        );
    }
    for ch in &table.chars {
        let vals: Vec<String> = table
            .classes
            .iter()
            .map(|c| ch.values.get(&c.id).map_or("?".into(), |v| v.to_string()))
            .collect();
        out!("{:<12} {}", ch.name, vals.join("  "));
    }
    for n in &table.notes {
        out!("note: {n}");
    }
    let r = validate_orthogonality(&table);
    for c in r.checks.iter().filter(|c| !c.ok) {
        out!("orthogonality fails at ({},{}): {} != {}", c.x, c.y, c.value, c.expected);
    }
    out!("orthogonality: {}", if r.pass { "pass" } else { "FAIL" });
    Ok(Outcome {
        params: json!({"group": group, "p": p}),
        verdicts: vec![Verdict::new("column orthogonality", r.pass, "")],
        witnesses: json!({"table": to_value(&table), "orthogonality": to_value(&r)}),
    })
}

fn print_scan(s: &HelpScan) {
    out!(
        "{} p = {} rank {}: {} cyclic subgroups over classes {}; {}",
        s.group,
        s.p,
        s.rank,
        s.subgroups,
        s.classes.join(","),
        s.method
    );
    if let Some(e) = &s.early_exit {
        out!("early exit: {e}");
    }
    for row in &s.rows {
        if row.feasible {
            out!("x = {:<3} feasible", row.x);
        } else {
            let w: Vec<String> = row
                .witnesses
                .iter()
                .map(|w| format!("{} chi {:?} m = {}", w.theta, w.chi, w.multiplicity))
                .collect();
            out!("x = {:<3} infeasible: {}", row.x, w.join("; "));
        }
    }
    let set = |v: &[usize]| {
        format!("{{{}}}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
    };
    out!("feasible x: {}", set(&s.feasible));
    out!("feasible x, trivial character only: {}", set(&s.feasible_trivial_only));
    if let Some(v) = &s.feasible_nontrivial_only {
        out!("feasible x, nontrivial characters only: {}", set(v));
    }
    if let Some(b) = s.symmetry_check {
        out!("assignment symmetry check: {}", if b { "pass" } else { "FAIL" });
    }
}

fn help_scan(t: &Target) -> Res<Outcome> {
    let group = t.group()?;
    let scan = if group == Group::Psl2 && t.prime()? == 2 {
        // PSL(2,4): one class of involutions
        single_class_scan("PSL(2,4)", 2, 2, "c")
    } else {
        let (table, p, rank) = table_for(group, t)?;
        let rows: Vec<_> = table.chars.iter().collect();
        feasible_distributions(&table, &rows, p, rank)?
    };
    print_scan(&scan);
    let mut verdicts = Vec::new();
    if let Some(b) = scan.symmetry_check {
        verdicts.push(Verdict::new("assignment symmetry", b, ""));
    }
    Ok(Outcome {
        params: json!({"group": group, "p": scan.p, "rank": scan.rank}),
        verdicts,
        witnesses: to_value(&scan),
    })
}

fn print_units(ug: &UnitGroup) {
    out!("{}", ug.name);
    for (i, g) in ug.generators.iter().enumerate() {
        for (c, b) in &g.components {
            out!(
                "generator {i} component {c}: blocks {:?} dim {} trace {}",
                b.signature(),
                b.dim(),
                b.trace()
            );
        }
    }
}

fn construct(t: &Target, pattern: Option<&str>, verify: bool) -> Res<Outcome> {
    let group = t.group()?;
    let (ug, params) = match group {
        Group::Psl2 => {
            let p = t.prime()?;
            let s = pattern.ok_or_else(|| usage("--pattern is required for psl2"))?;
            let pat = Pattern::parse(p, s)?;
            (build_psl2_units(p, &pat)?, json!({"group": group, "p": p, "pattern": pat}))
        }
        Group::Psl33 => {
            if pattern.is_some() {
                return Err(usage("--pattern only applies to psl2"));
            }
            (build_psl33_units()?, json!({"group": group, "p": 3}))
        }
    };
    print_units(&ug);
    if !verify {
        return Ok(Outcome {
            params,
            verdicts: vec![],
            witnesses: json!({"units": to_value(&ug.generators)}),
        });
    }
    let r = verify_unit_group(&ug)?;
    for line in r.trace_lines() {
        out!("{line}");
    }
    let counts: Vec<String> = r.class_counts.iter().map(|(c, n)| format!("{c}: {n}")).collect();
    out!("class counts {}; other {}", counts.join(", "), r.other_count);
    let mut verdicts = vec![
        Verdict::new("generators commute", r.generators_commute, ""),
        Verdict::new(
            "generators have order p",
            r.generator_orders.iter().all(|&o| o == ug.p),
            format!("{:?}", r.generator_orders),
        ),
        Verdict::new("faithful, order p^rank", r.faithful, r.group_order.to_string()),
        Verdict::new("integral partial augmentations", r.all_integral, ""),
    ];
    for e in r.elements.iter().filter(|e| e.error.is_some() || !e.integral) {
        out!(
            "witness {:?}: {}",
            e.exponents,
            e.error.clone().unwrap_or_else(|| "non-integral".into())
        );
    }
    let every_conj = r.elements.iter().all(|e| e.conjugate_to_group_element);
    out!("every element conjugate to a group element: {every_conj}");
    let mut extra = BTreeMap::new();
    if let Some(pat) = &ug.pattern {
        let ok = r.recovered_pattern.as_ref() == Some(pat);
        verdicts.push(Verdict::new(
            "trace pattern equals I",
            ok,
            r.recovered_pattern.as_ref().map_or("-".into(), |p| p.to_string()),
        ));
        let half = ((ug.p * ug.p - 1) / 2) as usize;
        let counts_ok = r.class_counts.values().all(|&n| n == half) && r.other_count == 0;
        verdicts.push(Verdict::new("class counts ((p^2-1)/2, (p^2-1)/2)", counts_ok, ""));
        let w = valenti_search(&ug.profiles(), ug.p, &ug.table)?;
        match &w {
            Some(w) => out!("conjugate to a Sylow subgroup: g = {}, h = {}, pattern {}", w.g, w.h, w.pattern),
            None => out!("no character-preserving isomorphism onto a Sylow subgroup of G"),
        }
        extra.insert("valenti", to_value(&w));
    }
    out!("verify: {}", if r.pass { "pass" } else { "FAIL" });
    extra.insert("verify", to_value(&r));
    extra.insert("every_element_conjugate", json!(every_conj));
    Ok(Outcome {
        params,
        verdicts,
        witnesses: to_value(&extra),
    })
}

fn patterns(p: u64, pattern: Option<&str>, list_missing: bool) -> Res<Outcome> {
    if !is_prime(p) || p == 2 {
        return Err(usage(format!("--p must be an odd prime, got {p}")));
    }
    if p > 101 {
        return Err(Error::TooLarge(p).into());
    }
    let r = gap_report(p)?;
    out!(
        "p = {p}: {} balanced patterns, {} realizable, at most {} per generator",
        r.balanced, r.realizable, r.bound
    );
    out!("counting certifies a missing pattern: {}", r.counting_certifies);
    let mut w = BTreeMap::new();
    if let Some(s) = pattern {
        let pat = Pattern::parse(p, s)?;
        let ok = group_patterns(p)?.contains(&pat);
        out!("{{{pat}}} realizable: {ok}");
        w.insert("pattern_realizable", json!(ok));
    }
    if list_missing {
        match &r.missing {
            Some(m) => {
                out!("missing ({}):", m.len());
                for pat in m {
                    out!("{pat}");
                }
            }
            None => out!("too many balanced patterns to list"),
        }
    }
    let mut report = to_value(&r);
    if !list_missing {
        report["missing"] = Value::Null;
    }
    w.insert("gap", report);
    Ok(Outcome {
        params: json!({"p": p, "pattern": pattern, "list_missing": list_missing}),
        verdicts: vec![],
        witnesses: to_value(&w),
    })
}

fn oracle(t: &Target, refresh: bool) -> Res<Outcome> {
    let group = t.group()?;
    let (spec, p) = match group {
        Group::Psl33 => (GroupSpec::Psl33, 3),
        Group::Psl2 => {
            let q = match (t.q, t.p) {
                (Some(q), _) => q,
                (None, Some(p)) => p * p,
                (None, None) => 9,
            };
            let p = t.prime().or_else(|_| {
                if is_prime(q) {
                    Ok(q)
                } else {
                    Err(usage(format!("--q {q} is not a prime or a prime square")))
                }
            })?;
            (GroupSpec::Psl2 { q }, p)
        }
    };
    let start = Instant::now();
    let (g, cache) = enumerate_cached(spec, &data_dir(), refresh)?;
    out!(
        "{spec}: order {} exponent {} ({} classes) in {} ms, cache {:?}",
        g.order(),
        g.exponent(),
        g.classes().len(),
        start.elapsed().as_millis(),
        cache
    );
    for c in g.classes() {
        out!("order {:<3} size {:<6} rep {}", c.element_order, c.size, c.representative);
    }
    let mut verdicts = vec![Verdict::new(
        "order matches formula",
        g.order() as u64 == spec.expected_order(),
        format!("{} vs {}", g.order(), spec.expected_order()),
    )];
    let total: usize = g.classes().iter().map(|c| c.size).sum();
    verdicts.push(Verdict::new("class sizes sum to |G|", total == g.order(), total.to_string()));
    let table = match spec {
        GroupSpec::Psl33 => Some(psl33_table()?),
        GroupSpec::Psl2 { q } if q == p * p => Some(psl2_slice(p)?),
        _ => None,
    };
    if let Some(table) = &table {
        verdicts.push(class_sizes_match(&g, p, table));
    }
    let mut w = BTreeMap::new();
    if matches!(spec, GroupSpec::Psl2 { q } if q == p * p) && (p == 3 || p == 5) {
        let sq = check_square_criterion(p)?;
        verdicts.push(Verdict::new(
            "square criterion",
            sq.holds,
            match &sq.counterexample {
                Some((l, m)) => format!("fails at l = {l}, m = {m}"),
                None => format!("{} pairs", sq.pairs_checked),
            },
        ));
        w.insert("square_criterion", to_value(&sq));
    }
    for v in &verdicts {
        out!("{}: {} {}", v.name, if v.pass { "pass" } else { "FAIL" }, v.detail);
    }
    w.insert("classes", to_value(&g.classes()));
    w.insert("order", json!(g.order()));
    w.insert("exponent", json!(g.exponent()));
    w.insert("order_p_classes", to_value(&g.order_p_classes(p)));
    Ok(Outcome {
        params: json!({"spec": spec, "refresh": refresh}),
        verdicts,
        witnesses: to_value(&w),
    })
}

fn invariants(refresh: bool) -> Res<Outcome> {
    let v = run_invariants(&data_dir(), refresh)?;
    for x in &v {
        out!("{} {}: {}", if x.pass { "PASS" } else { "FAIL" }, x.name, x.detail);
    }
    Ok(Outcome {
        params: json!({"refresh": refresh}),
        verdicts: v,
        witnesses: Value::Null,
    })
}

fn run(cli: &Cli) -> Res<Outcome> {
    match &cli.cmd {
        Cmd::Chartab(t) => chartab(t),
        Cmd::HelpScan(t) => help_scan(t),
        Cmd::Construct {
            target,
            pattern,
            verify,
        } => construct(target, pattern.as_deref(), *verify),
        Cmd::Patterns {
            p,
            pattern,
            list_missing,
        } => patterns(*p, pattern.as_deref(), *list_missing),
        Cmd::Oracle { target, refresh } => oracle(target, *refresh),
        Cmd::Invariants { refresh } => invariants(*refresh),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Fail::Internal(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    let failed: Vec<&Verdict> = outcome.verdicts.iter().filter(|v| !v.pass).collect();
    for v in &failed {
        eprintln!("FAILED {}: {}", v.name, v.detail);
    }
    if let Some(path) = &cli.json {
        let report = RunReport {
            command: std::env::args().skip(1).collect(),
            params: outcome.params,
            verdicts: outcome.verdicts.clone(),
            witnesses: outcome.witnesses,
            wall_clock_ms: start.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&report).expect("serializable");
        if let Err(e) = std::fs::write(path, text + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
