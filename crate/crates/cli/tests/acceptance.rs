//! Acceptance criteria 1-9, one pass/fail line each.
//!
//! Runs without the libtest harness so every criterion is reported even when
//! an earlier one fails. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use tiltlab::exactnum::{pval, PValuation, Rational};
use tiltlab::padic::{block_of, PadicContext};
use tiltlab::projectors::{lambda_scalar, pqjw_closed, pqjw_recursive};
use tiltlab::repchar::{decompose_weyl, tilting_character, tilting_dim};
use tiltlab::verify::{padic_golden, run_suite, SuiteReport};
use tiltlab::{DigitSet, Suite, VerifyConfig};

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict { ok, detail: detail.into() }
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let v = f();
    let t = start.elapsed();
    let in_time = t <= limit;
    let mut detail = format!("{}; {t:.2?} (limit {limit:?})", v.detail);
    if !in_time {
        detail.push_str(" over time limit");
    }
    Verdict::new(v.ok && in_time, detail)
}

/// Pass iff every suite passed; the detail names failing checks.
fn suites(reports: &[(u64, SuiteReport)]) -> Verdict {
    let instances: u64 = reports.iter().map(|(_, r)| r.instances()).sum();
    let failing: Vec<String> = reports
        .iter()
        .flat_map(|(p, r)| {
            r.checks.iter().filter(|c| !c.passed()).map(move |c| {
                let first = c.failures.first().map_or("", String::as_str);
                format!("p={p} {}/{}: {} failures, first {first}", r.suite, c.name, c.failures.len())
            })
        })
        .collect();
    if failing.is_empty() {
        Verdict::new(true, format!("{instances} instances, 0 failures"))
    } else {
        Verdict::new(false, failing.join("; "))
    }
}

fn run(p: u64, vmax: u64, which: &[Suite]) -> Vec<(u64, SuiteReport)> {
    let cfg = VerifyConfig::new(p, vmax);
    which.iter().map(|&s| (p, run_suite(&cfg, s))).collect()
}

fn lambda_exactness() -> Verdict {
    let v = [1u64, 2, 6, 4, 0, 6, 6].iter().fold(0, |a, &d| a * 7 + d);
    let s = DigitSet::from_positions([5, 3, 2, 1, 0]);
    let start = Instant::now();
    let l = lambda_scalar(v, s, 7);
    let t = start.elapsed();
    match l {
        Ok(l) => {
            let ord = pval(&l, 7).ok();
            let ok = l == Rational::new(485105, 689087) && ord == Some(PValuation::Finite(-5)) && t < Duration::from_millis(1);
            Verdict::new(ok, format!("lambda = {l}, ord_7 = {ord:?}; {t:.2?} (limit 1ms)"))
        }
        Err(e) => Verdict::new(false, e.to_string()),
    }
}

fn golden_combinatorics() -> Verdict {
    timed(Duration::from_secs(1), || {
        let g = padic_golden();
        Verdict::new(g.passed(), format!("{} examples, failures {:?}", g.instances, g.failures))
    })
}

fn p_admissibility() -> Verdict {
    timed(Duration::from_secs(300), || {
        let mut bad = Vec::new();
        let mut n = 0;
        for p in [2, 3, 5] {
            for v in 1..=12 {
                n += 1;
                let ok = (|| -> Result<bool, Box<dyn std::error::Error>> {
                    let q = pqjw_closed(v, p)?;
                    Ok(q.ord(p)?.is_nonnegative() && pqjw_recursive(v, p)? == *q)
                })();
                match ok {
                    Ok(true) => {}
                    Ok(false) => bad.push(format!("p={p} v={v}")),
                    Err(e) => bad.push(format!("p={p} v={v}: {e}")),
                }
            }
        }
        Verdict::new(bad.is_empty(), format!("{n} projectors, failures {bad:?}"))
    })
}

fn projector_identities() -> Verdict {
    timed(Duration::from_secs(600), || {
        let which = [Suite::Projectors, Suite::Absorption, Suite::Anccent, Suite::Trace];
        let reports: Vec<_> = [2, 3, 5].into_iter().flat_map(|p| run(p, 12, &which)).collect();
        suites(&reports)
    })
}

fn presentation() -> Verdict {
    timed(Duration::from_secs(900), || {
        let reports: Vec<_> =
            [(2, 12), (3, 12), (5, 10)].into_iter().flat_map(|(p, vmax)| run(p, vmax, &[Suite::Presentation])).collect();
        suites(&reports)
    })
}

fn basis_and_dimensions() -> Verdict {
    timed(Duration::from_secs(60), || {
        let reports: Vec<_> = [2, 3, 5, 7].into_iter().flat_map(|p| run(p, 200, &[Suite::Basis])).collect();
        suites(&reports)
    })
}

fn characters() -> Verdict {
    timed(Duration::from_secs(10), || {
        let labels = tilting_character(23, 3).map(|t| t.labels);
        let weyl = decompose_weyl(23, 3).map(|d| d.into_keys().collect::<Vec<_>>());
        let dim = tilting_dim(23, 3).ok();
        let golden = labels.as_deref().ok() == Some(&[22, 18, 16, 12][..])
            && weyl.as_deref().ok() == Some(&[10, 12, 18, 22][..])
            && dim == Some(72);
        let reports: Vec<_> = [2, 3, 5, 7].into_iter().flat_map(|p| run(p, 500, &[Suite::Characters])).collect();
        let s = suites(&reports);
        Verdict::new(golden && s.ok, format!("T(22) labels {labels:?}, Weyl {weyl:?}, dim {dim:?}; {}", s.detail))
    })
}

fn tiltlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tiltlab")).args(args).output().expect("binary runs")
}

fn discrepancies() -> Verdict {
    let o = tiltlab(&["verify", "--p", "3", "--vmax", "23", "--suite", "discrepancies", "--no-cache"]);
    let out = String::from_utf8_lossy(&o.stdout);
    let wanted = ["finding: X recursion at w=7, p=3", "finding: X recursion at w=23, p=3", "'<= k' reading"];
    let missing: Vec<&str> = wanted.iter().copied().filter(|w| !out.contains(w)).collect();
    let ok = o.status.success() && missing.is_empty();
    Verdict::new(ok, format!("exit {:?}, {} findings reported, missing {missing:?}", o.status.code(), out.matches("finding:").count()))
}

/// Parses the exported DOT and checks it against the digit combinatorics.
fn quiver_export() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("quiver.dot");
    let start = Instant::now();
    let o = tiltlab(&["quiver", "--p", "3", "--vmax", "53", "--dot", path.to_str().unwrap()]);
    let t = start.elapsed();
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Verdict::new(false, format!("no DOT written, exit {:?}", o.status.code()));
    };
    let mut nodes = BTreeSet::new();
    let mut down: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut edges = Vec::new();
    let id = |s: &str| s.trim().trim_start_matches('v').parse::<u64>().ok();
    for line in text.lines().map(str::trim) {
        if let Some((lhs, rest)) = line.split_once("->") {
            let to = rest.split('[').next().and_then(id);
            if let (Some(a), Some(b)) = (id(lhs), to) {
                edges.push((a, b));
                if line.contains("style=solid") {
                    down.entry(a).or_default().insert(b);
                }
            }
        } else if line.starts_with('v') && line.contains("[label=") {
            nodes.extend(line.split(' ').next().and_then(id));
        }
    }
    let mut bad = Vec::new();
    for &m in &nodes {
        let c = PadicContext::new(m + 1, 3).expect("positive");
        let want: BTreeSet<u64> = c.fsupport().into_iter().map(|w| w - 1).collect();
        let got = down.get(&m).cloned().unwrap_or_default();
        if got != want || (c.is_eve() && !got.is_empty()) {
            bad.push(format!("vertex {m}: down-arrows {got:?}, expected {want:?}"));
        }
    }
    // connected components by union-find over all arrows
    let mut parent: BTreeMap<u64, u64> = nodes.iter().map(|&n| (n, n)).collect();
    fn root(parent: &mut BTreeMap<u64, u64>, x: u64) -> u64 {
        let up = parent[&x];
        if up == x {
            return x;
        }
        let r = root(parent, up);
        parent.insert(x, r);
        r
    }
    for &(a, b) in &edges {
        if parent.contains_key(&a) && parent.contains_key(&b) {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            parent.insert(ra, rb);
        }
    }
    let mut components: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut blocks: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for &n in &nodes {
        components.entry(root(&mut parent, n)).or_default().insert(n);
        blocks.entry(block_of(n + 1, 3).expect("positive")).or_default().insert(n);
    }
    let comps: BTreeSet<_> = components.into_values().collect();
    let blks: BTreeSet<_> = blocks.into_values().collect();
    if comps != blks {
        bad.push(format!("{} components versus {} blocks", comps.len(), blks.len()));
    }
    let ok = o.status.success() && nodes.len() == 53 && bad.is_empty() && t < Duration::from_secs(1);
    Verdict::new(
        ok,
        format!("{} vertices, {} arrows, {} blocks, problems {bad:?}; {t:.2?} (limit 1s)", nodes.len(), edges.len(), blks.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("lambda exactness", lambda_exactness),
        ("combinatorics golden set", golden_combinatorics),
        ("p-admissibility of projectors", p_admissibility),
        ("projector identity suite", projector_identities),
        ("presentation soundness", presentation),
        ("basis and dimensions", basis_and_dimensions),
        ("characters", characters),
        ("discrepancy surfacing", discrepancies),
        ("quiver export", quiver_export),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.ok);
        println!("criterion {}: {} {name} ({})", i + 1, if v.ok { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
