//! Alternating to nondeterministic translation.
//!
//! A state of the simulating automaton is a set of `(q, tag)` pairs: the
//! alternating states alive at a node, each tagged with whether its copy has
//! seen an accepting state since the last breakpoint. A breakpoint is a set
//! whose tags are all 1; those sets (and the accept-all sink) are accepting.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automata::{literals_admissible, AlternatingAutomaton, NondetAutomaton, Transition};
use crate::formula::{partition, FormulaError, Partition, DEFAULT_DNF_CAP};

pub const DEFAULT_MAX_SIM_STATES: usize = 100_000;

/// Name of the accept-all sink in simulated automata.
pub const ACCEPT_ALL: &str = "#";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimLimits {
    pub dnf_cap: usize,
    pub max_states: usize,
}

impl Default for SimLimits {
    fn default() -> Self {
        SimLimits {
            dnf_cap: DEFAULT_DNF_CAP,
            max_states: DEFAULT_MAX_SIM_STATES,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimulateError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("resource limit: more than {cap} simulated states")]
    TooManyStates { cap: usize },
    #[error("resource limit: more than {cap} disjunct choices at state {state}")]
    TooManyChoices { cap: usize, state: String },
    #[error("state `{0}` has no transition formula")]
    MissingDelta(String),
}

/// A set of `(state, tag)` pairs with at most one tag per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimState(pub BTreeMap<String, bool>);

impl SimState {
    pub fn is_breakpoint(&self) -> bool {
        self.0.values().all(|&t| t)
    }
}

impl fmt::Display for SimState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (q, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}:{}", u8::from(*t))?;
        }
        f.write_str("]")
    }
}

/// `2^f * 3^(q - f) + 1`, the bound on the number of simulated states.
pub fn sim_state_bound(size_q: u32, size_f: u32) -> u128 {
    assert!(size_f <= size_q, "more accepting states than states");
    2u128.pow(size_f) * 3u128.pow(size_q - size_f) + 1
}

/// The translation together with the simulated states behind each name.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub automaton: NondetAutomaton,
    /// In discovery order; the sink is not listed.
    pub sim_states: Vec<SimState>,
}

pub fn simulate(a: &AlternatingAutomaton, limits: SimLimits) -> Result<Simulation, SimulateError> {
    let mut options: BTreeMap<&str, Vec<Partition>> = BTreeMap::new();
    for q in &a.states {
        let f = a
            .delta
            .get(q)
            .ok_or_else(|| SimulateError::MissingDelta(q.clone()))?;
        let parts = f
            .dnf(limits.dnf_cap)?
            .iter()
            .filter_map(|d| partition(d).ok())
            .collect();
        options.insert(q, parts);
    }
    let k = a.signature.k();
    let is_final = |q: &str| a.accepting.contains(q);

    let init = SimState(BTreeMap::from([(a.initial.clone(), is_final(&a.initial))]));
    let mut index: BTreeMap<SimState, usize> = BTreeMap::from([(init.clone(), 0)]);
    let mut order = vec![init];
    let mut queue = VecDeque::from([0usize]);
    let mut delta: BTreeMap<String, Vec<Transition>> = BTreeMap::new();
    let mut uses_sink = false;

    while let Some(i) = queue.pop_front() {
        let e = order[i].clone();
        let breakpoint = e.is_breakpoint();
        let members: Vec<(&String, bool)> = e.0.iter().map(|(q, &t)| (q, t)).collect();
        let lists: Vec<&Vec<Partition>> = members.iter().map(|(q, _)| &options[q.as_str()]).collect();
        let mut transitions = BTreeSet::new();

        if lists.iter().all(|l| !l.is_empty()) {
            let total = lists
                .iter()
                .try_fold(1usize, |acc, l| acc.checked_mul(l.len()))
                .filter(|&n| n <= limits.dnf_cap);
            if total.is_none() {
                return Err(SimulateError::TooManyChoices {
                    cap: limits.dnf_cap,
                    state: e.to_string(),
                });
            }
            let mut choice = vec![0usize; lists.len()];
            loop {
                let chosen: Vec<&Partition> = choice.iter().zip(&lists).map(|(&c, l)| &l[c]).collect();
                let literals: BTreeSet<_> = chosen.iter().flat_map(|p| p.literals.iter().cloned()).collect();
                if literals_admissible(&literals) {
                    let constraints = chosen.iter().flat_map(|p| p.constraints.iter().cloned()).collect();
                    let mut succ = Vec::with_capacity(k);
                    for d in &a.signature.directions {
                        // q' -> do all contributors carry tag 1
                        let mut next: BTreeMap<&str, bool> = BTreeMap::new();
                        for ((_, tag), p) in members.iter().zip(&chosen) {
                            for q2 in p.moves.get(d).into_iter().flatten() {
                                let all = next.entry(q2).or_insert(true);
                                *all &= *tag;
                            }
                        }
                        if next.is_empty() {
                            uses_sink = true;
                            succ.push(ACCEPT_ALL.to_string());
                            continue;
                        }
                        let s = SimState(
                            next.into_iter()
                                .map(|(q2, all)| (q2.to_string(), is_final(q2) || (!breakpoint && all)))
                                .collect(),
                        );
                        debug_assert!(s.0.iter().all(|(q2, &t)| t || !is_final(q2)));
                        let j = match index.get(&s) {
                            Some(&j) => j,
                            None => {
                                if order.len() >= limits.max_states {
                                    return Err(SimulateError::TooManyStates {
                                        cap: limits.max_states,
                                    });
                                }
                                let j = order.len();
                                index.insert(s.clone(), j);
                                order.push(s);
                                queue.push_back(j);
                                j
                            }
                        };
                        succ.push(order[j].to_string());
                    }
                    transitions.insert(Transition {
                        literals,
                        constraints,
                        succ,
                    });
                }
                // odometer over the per-state disjunct lists
                let mut pos = 0;
                loop {
                    if pos == choice.len() {
                        break;
                    }
                    choice[pos] += 1;
                    if choice[pos] < lists[pos].len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
                if pos == choice.len() {
                    break;
                }
            }
        }
        delta.insert(e.to_string(), transitions.into_iter().collect());
    }

    let mut states: Vec<String> = order.iter().map(SimState::to_string).collect();
    let mut accepting: BTreeSet<String> = order
        .iter()
        .filter(|s| s.is_breakpoint())
        .map(SimState::to_string)
        .collect();
    let accept_all = uses_sink.then(|| {
        states.push(ACCEPT_ALL.to_string());
        accepting.insert(ACCEPT_ALL.to_string());
        delta.insert(
            ACCEPT_ALL.to_string(),
            vec![Transition {
                literals: BTreeSet::new(),
                constraints: BTreeSet::new(),
                succ: vec![ACCEPT_ALL.to_string(); k],
            }],
        );
        ACCEPT_ALL.to_string()
    });
    Ok(Simulation {
        automaton: NondetAutomaton {
            signature: a.signature.clone(),
            initial: states[0].clone(),
            states,
            accepting,
            accept_all,
            delta,
        },
        sim_states: order,
    })
}
