//! One check per acceptance criterion. PASS/FAIL lines go straight to
//! stdout, past the test harness capture; the test fails if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use rccta::dsl::{self, Document};
use rccta::emptiness::{check_bounds, check_witness, decide, FiniteTreeModel, SearchLimits, Verdict};
use rccta::formula::DEFAULT_DNF_CAP;
use rccta::simulate::{sim_state_bound, simulate, SimLimits};
use rccta::{Atom, NondetAutomaton, Relation};

type Outcome = Result<String, String>;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<(PathBuf, NondetAutomaton)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "aut"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let doc = dsl::parse(&fs::read_to_string(&p).unwrap()).unwrap();
            let a = match doc {
                Document::Nondet(a) => a,
                Document::Alternating(a) => simulate(&a, SimLimits::default()).unwrap().automaton,
            };
            (p, a)
        })
        .collect()
}

fn witness(a: &NondetAutomaton) -> Option<FiniteTreeModel> {
    match decide(a, SearchLimits::default()).unwrap().verdict {
        Verdict::Empty => None,
        Verdict::NonEmpty(m) => Some(m),
    }
}

fn algebra_integrity() -> Outcome {
    let start = Instant::now();
    let r = Relation::from;
    let eq = r(Atom::EQ);
    for a in Atom::ALL {
        if eq.compose(r(a)) != r(a) || r(a).compose(eq) != r(a) {
            return Err(format!("EQ is not an identity for {a}"));
        }
        for b in Atom::ALL {
            let ab = r(a).compose(r(b));
            if ab.converse() != r(b.converse()).compose(r(a.converse())) {
                return Err(format!("converse of {a};{b}"));
            }
            for c in Atom::ALL {
                let x = ab.contains(c);
                let y = r(a.converse()).compose(r(c)).contains(b);
                let z = r(c).compose(r(b.converse())).contains(a);
                if x != y || x != z {
                    return Err(format!("Peircean law fails on ({a}, {b}, {c})"));
                }
            }
        }
    }
    for bits in 0..=255u8 {
        let x = Relation::from_bits(bits);
        if x.converse().converse() != x {
            return Err(format!("converse is not an involution on {x}"));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(1) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("64 atom pairs, 256 relations in {t:?}"))
}

fn path_consistency_adequacy() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut agree = 0;
    for _ in 0..200 {
        let net = support::random_atomic_network(&mut rng);
        if support::to_qcsp(&net).is_consistent() == support::brute_force_consistent(&net) {
            agree += 1;
        }
    }
    if agree == 200 {
        Ok("200/200".into())
    } else {
        Err(format!("{agree}/200"))
    }
}

fn dnf_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    for i in 0..100 {
        let f = support::random_formula(&mut rng, 6, 4);
        let d = f.dnf(DEFAULT_DNF_CAP).map_err(|e| format!("formula {i}: {e}"))?;
        for bits in 0..64u32 {
            let truth = |g: &u8| bits >> g & 1 == 1;
            let lhs = f.eval(&truth);
            let rhs = d.iter().any(|c| c.iter().all(truth));
            if lhs != rhs {
                return Err(format!("formula {i} `{f}` differs under assignment {bits:06b}"));
            }
        }
    }
    Ok("100 formulas, 64 assignments each".into())
}

fn simulation_bound() -> Outcome {
    if sim_state_bound(2, 1) != 7 {
        return Err(format!("bound(2, 1) = {}", sim_state_bound(2, 1)));
    }
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let a = support::random_alternating(&mut rng);
        let sim = simulate(&a, SimLimits::default()).map_err(|e| format!("automaton {i}: {e}"))?;
        let count = sim.automaton.states.len() as u128;
        let bound = sim_state_bound(a.states.len() as u32, a.accepting.len() as u32);
        if count > bound {
            return Err(format!("automaton {i}: {count} states > {bound}"));
        }
        worst = worst.max(count as f64 / bound as f64);
    }
    Ok(format!("50 automata, spot value 7, max fill {:.0}%", worst * 100.0))
}

fn simulation_correctness(witnesses: &mut Vec<(NondetAutomaton, FiniteTreeModel)>) -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(5);
    let mut nonempty = 0;
    for i in 0..50 {
        let (alt, nd) = support::random_nondet_shaped(&mut rng);
        let sim = simulate(&alt, SimLimits::default()).map_err(|e| format!("automaton {i}: {e}"))?;
        let via_sim = witness(&sim.automaton);
        let direct = witness(&nd);
        if via_sim.is_some() != direct.is_some() {
            return Err(format!("automaton {i}: simulated {} vs direct {}", via_sim.is_some(), direct.is_some()));
        }
        if let Some(m) = via_sim {
            nonempty += 1;
            witnesses.push((sim.automaton, m));
        }
        if let Some(m) = direct {
            witnesses.push((nd, m));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(60) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("50/50 agree ({nonempty} non-empty) in {t:?}"))
}

fn classical_agreement(witnesses: &mut Vec<(NondetAutomaton, FiniteTreeModel)>) -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(6);
    let mut nonempty = 0;
    for i in 0..100 {
        let a = support::random_nondet(&mut rng);
        let got = witness(&a);
        if got.is_some() != support::classical_nonempty(&a) {
            return Err(format!("automaton {i}: decide says non-empty = {}", got.is_some()));
        }
        if let Some(m) = got {
            nonempty += 1;
            witnesses.push((a, m));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(120) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("100/100 agree ({nonempty} non-empty) in {t:?}"))
}

/// Every leaf looping to an ancestor sees an accepting node between the two.
fn accepting_between(a: &NondetAutomaton, m: &FiniteTreeModel) -> bool {
    m.leaves().all(|(v, n)| {
        let u = n.backnode.as_ref().unwrap();
        !u.is_strict_prefix_of(v)
            || m.nodes.iter().any(|(w, x)| u.lex_le(w) && w.lex_le(v) && a.is_accepting(&x.state))
    })
}

fn leaf_contract(m: &FiniteTreeModel) -> bool {
    m.leaves().all(|(v, n)| {
        let u = n.backnode.as_ref().unwrap();
        let b = &m.nodes[u];
        b.is_internal() && b.state == n.state && b.ptpge == n.ptpge && u.lex_lt(v)
    })
}

fn witness_validity(witnesses: &[(NondetAutomaton, FiniteTreeModel)]) -> Outcome {
    for (i, (a, m)) in witnesses.iter().enumerate() {
        let depth = 3 * m.height();
        let report = check_witness(a, m, &[1, 2, depth]);
        if !report.ok() {
            return Err(format!("witness {i}: {:?} {:?}", report.bounds, report.defects));
        }
        if !leaf_contract(m) {
            return Err(format!("witness {i}: leaf contract"));
        }
        if !accepting_between(a, m) {
            return Err(format!("witness {i}: leaf loops back without an accepting node"));
        }
    }
    Ok(format!("{} witnesses", witnesses.len()))
}

fn csp_driven_emptiness() -> Outcome {
    let verdict = |name: &str| {
        let (_, a) = corpus().into_iter().find(|(p, _)| p.ends_with(name)).unwrap();
        witness(&a).is_some()
    };
    let both = verdict("contradictory.aut");
    let no_dc = verdict("contradictory_eq.aut");
    let no_eq = verdict("contradictory_dc.aut");
    if !both && no_dc && no_eq {
        Ok("DC+EQ empty; EQ alone and DC alone non-empty".into())
    } else {
        Err(format!("non-empty: both {both}, EQ only {no_dc}, DC only {no_eq}"))
    }
}

fn node_bounds(corpus_witnesses: &[(String, NondetAutomaton, FiniteTreeModel)]) -> Outcome {
    for (name, a, m) in corpus_witnesses {
        let b = check_bounds(m, a.states.len(), a.metrics());
        if b.internal > b.internal_bound || b.leaves > b.leaf_bound {
            return Err(format!("{name}: {b:?}"));
        }
    }
    Ok(format!("{} corpus witnesses", corpus_witnesses.len()))
}

fn run_cli(file: &Path, witness: &Path) -> (Option<i32>, Vec<u8>, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_rccta"))
        .arg("emptiness")
        .arg(file)
        .arg("--witness")
        .arg(witness)
        .output()
        .unwrap()
        .status;
    let t = start.elapsed();
    let bytes = fs::read(witness).unwrap_or_default();
    let _ = fs::remove_file(witness);
    (status.code(), bytes, t)
}

fn determinism_and_speed() -> (Outcome, Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    let mut slowest = (Duration::ZERO, String::new());
    let mut det = Ok(String::new());
    let mut speed = Ok(String::new());
    let files = corpus();
    for (p, a) in &files {
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        let n_c = a.metrics().constraints;
        let l = a.metrics().longest_chain;
        if a.states.len() > 8 || a.signature.k() > 2 || n_c > 4 || l > 3 {
            speed = Err(format!("{name} is outside the desk-scale envelope"));
        }
        let (c1, w1, t1) = run_cli(p, &out);
        let (c2, w2, t2) = run_cli(p, &out);
        if c1 != c2 || w1 != w2 || !matches!(c1, Some(0 | 1)) {
            det = Err(format!("{name}: exit {c1:?}/{c2:?}, witness equal: {}", w1 == w2));
        }
        for t in [t1, t2] {
            if t >= Duration::from_secs(10) {
                speed = Err(format!("{name} took {t:?}"));
            }
            if t > slowest.0 {
                slowest = (t, name.clone());
            }
        }
    }
    if det.is_ok() {
        det = Ok(format!("{} corpus files, two runs each", files.len()));
    }
    if speed.is_ok() {
        speed = Ok(format!("slowest {} at {:?}", slowest.1, slowest.0));
    }
    (det, speed)
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("algebra integrity", algebra_integrity()),
        ("path-consistency adequacy", path_consistency_adequacy()),
        ("DNF equivalence", dnf_equivalence()),
        ("simulation bound", simulation_bound()),
    ];

    let mut witnesses = Vec::new();
    results.push(("simulation correctness proxy", simulation_correctness(&mut witnesses)));
    results.push(("emptiness vs classical oracle", classical_agreement(&mut witnesses)));

    let corpus_witnesses: Vec<(String, NondetAutomaton, FiniteTreeModel)> = corpus()
        .into_iter()
        .filter_map(|(p, a)| {
            let m = witness(&a)?;
            Some((p.file_name().unwrap().to_string_lossy().to_string(), a, m))
        })
        .collect();
    witnesses.extend(corpus_witnesses.iter().map(|(_, a, m)| (a.clone(), m.clone())));
    let mut rng = StdRng::seed_from_u64(7);
    witnesses.extend((0..50).filter_map(|_| {
        let a = support::random_constrained(&mut rng);
        witness(&a).map(|m| (a, m))
    }));
    results.push(("witness validity", witness_validity(&witnesses)));
    results.push(("CSP-driven emptiness", csp_driven_emptiness()));
    results.push(("node-bound conformance", node_bounds(&corpus_witnesses)));

    let (det, speed) = determinism_and_speed();
    results.push(("determinism", det));
    results.push(("desk-scale performance", speed));

    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => writeln!(out, "PASS {:>2} {name}: {detail}", i + 1).unwrap(),
            Err(why) => {
                failed += 1;
                writeln!(out, "FAIL {:>2} {name}: {why}", i + 1).unwrap()
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
