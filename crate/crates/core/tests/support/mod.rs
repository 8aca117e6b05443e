//! Independent oracles and random instance generators shared by the
//! integration and acceptance suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::Rng;

use rccta::automata::{Literal, Signature, Transition};
use rccta::formula::{Formula, Generator};
use rccta::{AlternatingAutomaton, Atom, NondetAutomaton, Qcsp, Relation};

/// Regions as unions of closed cells of a 6 x 6 grid in the plane.
pub mod grid {
    use super::Atom;

    pub const SIDE: usize = 6;
    pub const CELLS: usize = SIDE * SIDE;
    pub const GRID: u64 = (1u64 << CELLS) - 1;

    fn neighbourhoods() -> [u64; CELLS] {
        let mut out = [0u64; CELLS];
        for r in 0..SIDE as i32 {
            for c in 0..SIDE as i32 {
                let mut m = 0u64;
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if (0..SIDE as i32).contains(&rr) && (0..SIDE as i32).contains(&cc) {
                            m |= 1 << (rr as usize * SIDE + cc as usize);
                        }
                    }
                }
                out[r as usize * SIDE + c as usize] = m;
            }
        }
        out
    }

    fn border() -> u64 {
        let mut m = 0;
        for r in 0..SIDE {
            for c in 0..SIDE {
                if r == 0 || c == 0 || r == SIDE - 1 || c == SIDE - 1 {
                    m |= 1 << (r * SIDE + c);
                }
            }
        }
        m
    }

    /// Cells sharing at least a corner point with some cell of `x`.
    pub fn dilate(x: u64) -> u64 {
        let nb = neighbourhoods();
        (0..CELLS)
            .filter(|i| x & (1 << i) != 0)
            .fold(0, |m, i| m | nb[i])
    }

    /// `x` (a subset of `y`) meets the boundary of `y`; the outside of the grid
    /// is outside every region.
    fn tangential(x: u64, y: u64) -> bool {
        x & (border() | dilate(GRID & !y)) != 0
    }

    /// The RCC8 atom holding between two nonempty regions.
    pub fn relation(x: u64, y: u64) -> Atom {
        assert!(x != 0 && y != 0);
        if x == y {
            Atom::EQ
        } else if dilate(x) & y == 0 {
            Atom::DC
        } else if x & y == 0 {
            Atom::EC
        } else if x & !y == 0 {
            if tangential(x, y) {
                Atom::TPP
            } else {
                Atom::NTPP
            }
        } else if y & !x == 0 {
            if tangential(y, x) {
                Atom::TPPI
            } else {
                Atom::NTPPI
            }
        } else {
            Atom::PO
        }
    }

    pub fn rectangle(r0: usize, c0: usize, r1: usize, c1: usize) -> u64 {
        let mut m = 0;
        for r in r0..=r1 {
            for c in c0..=c1 {
                m |= 1 << (r * SIDE + c);
            }
        }
        m
    }

    /// All axis-aligned rectangles of cells.
    pub fn rectangles() -> Vec<u64> {
        let mut out = Vec::new();
        for r0 in 0..SIDE {
            for r1 in r0..SIDE {
                for c0 in 0..SIDE {
                    for c1 in c0..SIDE {
                        out.push(rectangle(r0, c0, r1, c1));
                    }
                }
            }
        }
        out
    }
}

/// An atomic network given edge by edge: `None` is the full relation.
pub type AtomicNetwork = (usize, BTreeMap<(usize, usize), Atom>);

/// Tries every atomic scenario edge by edge, rejecting a partial assignment as
/// soon as a fully assigned triangle violates composition.
pub fn brute_force_consistent(net: &AtomicNetwork) -> bool {
    let (n, fixed) = net;
    let edges: Vec<(usize, usize)> = (0..*n)
        .flat_map(|i| (i + 1..*n).map(move |j| (i, j)))
        .collect();
    let mut assign: BTreeMap<(usize, usize), Atom> = BTreeMap::new();

    fn get(a: &BTreeMap<(usize, usize), Atom>, i: usize, j: usize) -> Option<Relation> {
        if i == j {
            return Some(Atom::EQ.into());
        }
        if i < j {
            a.get(&(i, j)).map(|&x| x.into())
        } else {
            a.get(&(j, i)).map(|&x| Relation::from(x).converse())
        }
    }

    fn triangles_ok(a: &BTreeMap<(usize, usize), Atom>, n: usize, i: usize, j: usize) -> bool {
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            for (x, y, z) in [(i, j, k), (i, k, j), (k, i, j), (j, i, k), (j, k, i), (k, j, i)] {
                if let (Some(xy), Some(yz), Some(xz)) = (get(a, x, y), get(a, y, z), get(a, x, z)) {
                    if !xz.is_subset(xy.compose(yz)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn go(
        idx: usize,
        edges: &[(usize, usize)],
        fixed: &BTreeMap<(usize, usize), Atom>,
        assign: &mut BTreeMap<(usize, usize), Atom>,
        n: usize,
    ) -> bool {
        let Some(&(i, j)) = edges.get(idx) else {
            return true;
        };
        let options: Vec<Atom> = match fixed.get(&(i, j)) {
            Some(&a) => vec![a],
            None => Atom::ALL.to_vec(),
        };
        for a in options {
            assign.insert((i, j), a);
            if triangles_ok(assign, n, i, j) && go(idx + 1, edges, fixed, assign, n) {
                return true;
            }
        }
        assign.remove(&(i, j));
        false
    }

    go(0, &edges, fixed, &mut assign, *n)
}

pub fn to_qcsp(net: &AtomicNetwork) -> Qcsp<usize> {
    let mut q = Qcsp::new();
    for v in 0..net.0 {
        q.add_variable(v);
    }
    for (&(i, j), &a) in &net.1 {
        q.constrain(i, j, a.into());
    }
    q
}

/// Random atomic networks on 2..=6 variables. Half are planted from real
/// rectangle configurations and then possibly perturbed; the rest are random.
pub fn random_atomic_network(rng: &mut StdRng) -> AtomicNetwork {
    let n = rng.gen_range(2..=6);
    let mut edges = BTreeMap::new();
    if rng.gen_bool(0.5) {
        let rects = grid::rectangles();
        let regions: Vec<u64> = (0..n).map(|_| rects[rng.gen_range(0..rects.len())]).collect();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.75) {
                    edges.insert((i, j), grid::relation(regions[i], regions[j]));
                }
            }
        }
        if rng.gen_bool(0.4) && !edges.is_empty() {
            let keys: Vec<_> = edges.keys().copied().collect();
            let key = keys[rng.gen_range(0..keys.len())];
            edges.insert(key, Atom::ALL[rng.gen_range(0..8)]);
        }
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.6) {
                    edges.insert((i, j), Atom::ALL[rng.gen_range(0..8)]);
                }
            }
        }
    }
    (n, edges)
}

/// Random positive formula over at most `gens` generators.
pub fn random_formula(rng: &mut StdRng, gens: u8, depth: u32) -> Formula<u8> {
    if depth == 0 || rng.gen_bool(0.3) {
        return Formula::Gen(rng.gen_range(0..gens));
    }
    let width = rng.gen_range(1..=3);
    let children = (0..width).map(|_| random_formula(rng, gens, depth - 1)).collect();
    if rng.gen_bool(0.5) {
        Formula::And(children)
    } else {
        Formula::Or(children)
    }
}

fn state_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

fn signature(k: usize) -> Signature {
    Signature {
        directions: (1..=k).map(|i| format!("d{i}")).collect(),
        concepts: vec!["A".into(), "B".into()],
        features: vec!["g".into()],
    }
}

fn random_literals(rng: &mut StdRng) -> BTreeSet<Literal> {
    let mut out = BTreeSet::new();
    for c in ["A", "B"] {
        match rng.gen_range(0..4) {
            0 => {
                out.insert(Literal::pos(c));
            }
            1 => {
                out.insert(Literal::neg(c));
            }
            _ => {}
        }
    }
    out
}

/// Constraint-free nondeterministic automaton, `|Q| <= 4`, `k <= 2`.
pub fn random_nondet(rng: &mut StdRng) -> NondetAutomaton {
    let n = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=2);
    let states = state_names(n);
    let accepting = states.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
    let mut delta = BTreeMap::new();
    for q in &states {
        let count = rng.gen_range(0..=3);
        let ts = (0..count)
            .map(|_| Transition {
                literals: random_literals(rng),
                constraints: BTreeSet::new(),
                succ: (0..k).map(|_| states[rng.gen_range(0..n)].clone()).collect(),
            })
            .collect();
        delta.insert(q.clone(), ts);
    }
    NondetAutomaton {
        signature: signature(k),
        initial: states[0].clone(),
        states,
        accepting,
        accept_all: None,
        delta,
    }
}

/// Random alternating automaton, `|Q| <= 4`, `k <= 2`.
pub fn random_alternating(rng: &mut StdRng) -> AlternatingAutomaton {
    let n = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=2);
    let states = state_names(n);
    let sig = signature(k);
    let accepting = states.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
    fn gen_formula(
        rng: &mut StdRng,
        sig: &Signature,
        states: &[String],
        depth: u32,
    ) -> Formula<Generator> {
        if depth == 0 || rng.gen_bool(0.35) {
            let g = if rng.gen_bool(0.8) {
                Generator::move_to(
                    &sig.directions[rng.gen_range(0..sig.k())],
                    &states[rng.gen_range(0..states.len())],
                )
            } else {
                let c = &sig.concepts[rng.gen_range(0..2)];
                Generator::Literal(if rng.gen_bool(0.5) {
                    Literal::pos(c.as_str())
                } else {
                    Literal::neg(c.as_str())
                })
            };
            return Formula::Gen(g);
        }
        let width = rng.gen_range(1..=3);
        let children = (0..width)
            .map(|_| gen_formula(rng, sig, states, depth - 1))
            .collect();
        if rng.gen_bool(0.5) {
            Formula::And(children)
        } else {
            Formula::Or(children)
        }
    }
    let delta = states
        .iter()
        .map(|q| (q.clone(), gen_formula(rng, &sig, &states, 3)))
        .collect();
    AlternatingAutomaton {
        signature: sig,
        initial: states[0].clone(),
        states,
        accepting,
        delta,
    }
}

/// An alternating automaton whose every formula is a disjunction of
/// conjunctions with exactly one move per direction, paired with its direct
/// reading as a nondeterministic automaton.
pub fn random_nondet_shaped(rng: &mut StdRng) -> (AlternatingAutomaton, NondetAutomaton) {
    let n = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=2);
    let states = state_names(n);
    let sig = signature(k);
    let accepting: BTreeSet<String> = states.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
    let mut alt_delta = BTreeMap::new();
    let mut nd_delta = BTreeMap::new();
    for q in &states {
        let count = rng.gen_range(1..=3);
        let mut disjuncts = Vec::new();
        let mut transitions = Vec::new();
        for _ in 0..count {
            let literals = random_literals(rng);
            let succ: Vec<String> = (0..k).map(|_| states[rng.gen_range(0..n)].clone()).collect();
            let mut conj: Vec<Formula<Generator>> = literals
                .iter()
                .map(|l| Formula::Gen(Generator::Literal(l.clone())))
                .collect();
            for (d, s) in sig.directions.iter().zip(&succ) {
                conj.push(Formula::Gen(Generator::move_to(d, s)));
            }
            disjuncts.push(Formula::And(conj));
            transitions.push(Transition {
                literals,
                constraints: BTreeSet::new(),
                succ,
            });
        }
        alt_delta.insert(q.clone(), Formula::Or(disjuncts));
        nd_delta.insert(q.clone(), transitions);
    }
    let alt = AlternatingAutomaton {
        signature: sig.clone(),
        states: states.clone(),
        initial: states[0].clone(),
        accepting: accepting.clone(),
        delta: alt_delta,
    };
    let nd = NondetAutomaton {
        signature: sig,
        initial: states[0].clone(),
        states,
        accepting,
        accept_all: None,
        delta: nd_delta,
    };
    (alt, nd)
}

/// Classical Büchi tree emptiness for constraint-free automata:
/// `nu Z. mu Y. (F & CPre(Z)) | CPre(Y)`, where `CPre(S)` holds at `q` when
/// some transition of `q` sends every direction into `S`. Non-empty iff the
/// initial state is in the fixed point.
pub fn classical_nonempty(a: &NondetAutomaton) -> bool {
    let states: Vec<&String> = a.states.iter().collect();
    let cpre = |set: &BTreeSet<&String>, q: &String| {
        a.transitions(q).iter().any(|t| {
            rccta::automata::literals_admissible(&t.literals)
                && t.succ.iter().all(|s| set.contains(s))
        })
    };
    let mut z: BTreeSet<&String> = states.iter().copied().collect();
    loop {
        let mut y: BTreeSet<&String> = BTreeSet::new();
        loop {
            let next: BTreeSet<&String> = states
                .iter()
                .copied()
                .filter(|q| (a.accepting.contains(*q) && cpre(&z, q)) || cpre(&y, q))
                .collect();
            if next == y {
                break;
            }
            y = next;
        }
        if y == z {
            break;
        }
        z = y;
    }
    z.contains(&a.initial)
}

/// Small nondeterministic automaton with spatial constraints: `|Q| <= 3`,
/// `k <= 2`, chains of length at most 2 over features `g`, `h`.
pub fn random_constrained(rng: &mut StdRng) -> NondetAutomaton {
    use rccta::automata::{ChainTerm, SpatialConstraint};
    let n = rng.gen_range(1..=3);
    let k = rng.gen_range(1..=2);
    let states = state_names(n);
    let mut sig = signature(k);
    sig.features = vec!["g".into(), "h".into()];
    let accepting = states.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    let relations = [
        Relation::from(Atom::EQ),
        Relation::from(Atom::DC),
        Relation::from(Atom::TPP),
        Relation::from_atoms([Atom::EQ, Atom::TPP, Atom::NTPP]),
        Relation::from_atoms([Atom::DC, Atom::EC]),
        Relation::from_atoms([Atom::EQ, Atom::PO]),
    ];
    let chain = |rng: &mut StdRng| {
        let len = rng.gen_range(0..=1);
        let path: Vec<String> = (0..len).map(|_| sig.directions[rng.gen_range(0..k)].clone()).collect();
        ChainTerm {
            path,
            feature: ["g", "h"][rng.gen_range(0..2)].to_string(),
        }
    };
    let mut delta = BTreeMap::new();
    for q in &states {
        let count = rng.gen_range(1..=2);
        let ts = (0..count)
            .map(|_| {
                let constraints = (0..rng.gen_range(0..=2))
                    .map(|_| {
                        let rel = relations[rng.gen_range(0..relations.len())];
                        SpatialConstraint::new(rel, chain(rng), chain(rng))
                    })
                    .collect();
                Transition {
                    literals: random_literals(rng),
                    constraints,
                    succ: (0..k).map(|_| states[rng.gen_range(0..n)].clone()).collect(),
                }
            })
            .collect();
        delta.insert(q.clone(), ts);
    }
    NondetAutomaton {
        signature: sig,
        initial: states[0].clone(),
        states,
        accepting,
        accept_all: None,
        delta,
    }
}
