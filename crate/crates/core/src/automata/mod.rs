//! Alternating and nondeterministic Büchi automata on k-ary trees whose
//! transitions carry concept literals and RCC8 constraints over chains of
//! concrete features.

mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{Formula, Generator};
use crate::relalg::Relation;

pub use run::{
    csp_of_run_prefix, validate_run_prefix, PrefixCheck, PrefixDefect, PrefixDefectKind, RunNode,
    RunPrefix, SceneNode, SceneTreePrefix, Var,
};

/// Spatial arity of the relation algebra. RCC8 relations are binary.
pub const ARITY: usize = 2;

/// Directions, concept names and concrete features of the input trees.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    /// Ordered `d_1 < ... < d_k`.
    pub directions: Vec<String>,
    pub concepts: Vec<String>,
    pub features: Vec<String>,
}

impl Signature {
    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn direction_index(&self, name: &str) -> Option<usize> {
        self.directions.iter().position(|d| d == name)
    }
}

/// A concept name or its negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub concept: String,
    pub positive: bool,
}

impl Literal {
    pub fn pos(concept: impl Into<String>) -> Self {
        Literal {
            concept: concept.into(),
            positive: true,
        }
    }

    pub fn neg(concept: impl Into<String>) -> Self {
        Literal {
            concept: concept.into(),
            positive: false,
        }
    }

    pub fn complement(&self) -> Literal {
        Literal {
            concept: self.concept.clone(),
            positive: !self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        f.write_str(&self.concept)
    }
}

/// True when no concept appears both positively and negatively.
pub fn literals_admissible<'a>(lits: impl IntoIterator<Item = &'a Literal>) -> bool {
    let mut seen: BTreeMap<&str, bool> = BTreeMap::new();
    for l in lits {
        if let Some(&p) = seen.get(l.concept.as_str()) {
            if p != l.positive {
                return false;
            }
        }
        seen.insert(&l.concept, l.positive);
    }
    true
}

/// A concrete feature reached through a (possibly empty) path of directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainTerm {
    pub path: Vec<String>,
    pub feature: String,
}

impl ChainTerm {
    pub fn new(path: &[&str], feature: &str) -> Self {
        ChainTerm {
            path: path.iter().map(|s| s.to_string()).collect(),
            feature: feature.to_string(),
        }
    }

    pub fn feature(feature: &str) -> Self {
        Self::new(&[], feature)
    }

    /// Path length plus one for the feature.
    pub fn len(&self) -> usize {
        self.path.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The chain with its first `n` directions removed.
    pub fn suffix(&self, n: usize) -> ChainTerm {
        ChainTerm {
            path: self.path[n..].to_vec(),
            feature: self.feature.clone(),
        }
    }
}

impl fmt::Display for ChainTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.path {
            write!(f, "{d} ")?;
        }
        f.write_str(&self.feature)
    }
}

/// `rel(args[0], args[1])`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpatialConstraint {
    pub rel: Relation,
    pub args: [ChainTerm; ARITY],
}

impl SpatialConstraint {
    pub fn new(rel: impl Into<Relation>, a: ChainTerm, b: ChainTerm) -> Self {
        SpatialConstraint {
            rel: rel.into(),
            args: [a, b],
        }
    }
}

impl fmt::Display for SpatialConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.rel, self.args[0], self.args[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse `{0}`")]
pub struct ParseTermError(pub String);

impl FromStr for Literal {
    type Err = ParseTermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (positive, name) = match t.strip_prefix('!') {
            Some(rest) => (false, rest.trim()),
            None => (true, t),
        };
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(ParseTermError(s.to_string()));
        }
        Ok(Literal {
            concept: name.to_string(),
            positive,
        })
    }
}

impl FromStr for ChainTerm {
    type Err = ParseTermError;

    /// `d1 d2 g`: directions followed by one feature.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        let feature = parts.pop().ok_or_else(|| ParseTermError(s.to_string()))?;
        Ok(ChainTerm {
            path: parts,
            feature,
        })
    }
}

impl FromStr for SpatialConstraint {
    type Err = ParseTermError;

    /// `TPP(g, d1 g)` or `{DC,EC}(g, d2 h)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTermError(s.to_string());
        let t = s.trim();
        let open = t.rfind('(').ok_or_else(err)?;
        let inner = t[open + 1..].strip_suffix(')').ok_or_else(err)?;
        let rel: Relation = t[..open].parse().map_err(|_| err())?;
        let (a, b) = inner.split_once(',').ok_or_else(err)?;
        Ok(SpatialConstraint::new(rel, a.parse()?, b.parse()?))
    }
}

macro_rules! serde_via_string {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serde_via_string!(Literal, ChainTerm, SpatialConstraint, Relation);

/// One element of `delta(q)` of a nondeterministic automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub literals: BTreeSet<Literal>,
    pub constraints: BTreeSet<SpatialConstraint>,
    /// One successor state per direction, in direction order.
    pub succ: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingAutomaton {
    pub signature: Signature,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: BTreeSet<String>,
    pub delta: BTreeMap<String, Formula<Generator>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondetAutomaton {
    pub signature: Signature,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: BTreeSet<String>,
    /// The accept-all sink, when declared.
    pub accept_all: Option<String>,
    /// Transitions in declaration order. A state without transitions admits no run.
    pub delta: BTreeMap<String, Vec<Transition>>,
}

impl NondetAutomaton {
    pub fn transitions(&self, state: &str) -> &[Transition] {
        self.delta.get(state).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_accepting(&self, state: &str) -> bool {
        self.accepting.contains(state)
    }

    /// Every distinct constraint appearing in some transition.
    pub fn constraints(&self) -> BTreeSet<&SpatialConstraint> {
        self.delta
            .values()
            .flatten()
            .flat_map(|t| t.constraints.iter())
            .collect()
    }

    pub fn metrics(&self) -> Metrics {
        let constraints = self.constraints();
        let longest_chain = constraints
            .iter()
            .flat_map(|c| c.args.iter())
            .map(ChainTerm::len)
            .max()
            .unwrap_or(1);
        Metrics {
            constraints: constraints.len(),
            longest_chain,
            arity: ARITY,
        }
    }
}

/// `(n_c, l_fc, p)`: number of distinct constraints, longest chain, spatial arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub constraints: usize,
    pub longest_chain: usize,
    pub arity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DefectKind {
    NoDirections,
    DuplicateName,
    NameClash,
    UnknownState,
    UnknownConcept,
    UnknownDirection,
    UnknownFeature,
    MissingDelta,
    ArityMismatch,
    EmptyRelation,
    ComplementaryLiterals,
    AcceptAllViolated,
}

impl DefectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectKind::NoDirections => "no directions",
            DefectKind::DuplicateName => "duplicate name",
            DefectKind::NameClash => "name clash",
            DefectKind::UnknownState => "unknown state",
            DefectKind::UnknownConcept => "unknown concept",
            DefectKind::UnknownDirection => "unknown direction",
            DefectKind::UnknownFeature => "unknown feature",
            DefectKind::MissingDelta => "missing delta",
            DefectKind::ArityMismatch => "arity mismatch",
            DefectKind::EmptyRelation => "empty relation",
            DefectKind::ComplementaryLiterals => "complementary literals",
            DefectKind::AcceptAllViolated => "accept-all self-loop violated",
        }
    }
}

/// A well-formedness violation with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defect {
    pub kind: DefectKind,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.kind.as_str())?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    sig: &'a Signature,
    states: BTreeSet<&'a str>,
    defects: Vec<Defect>,
}

impl<'a> Checker<'a> {
    fn new(sig: &'a Signature, states: &'a [String]) -> Self {
        Checker {
            sig,
            states: states.iter().map(String::as_str).collect(),
            defects: Vec::new(),
        }
    }

    fn push(&mut self, kind: DefectKind, location: impl Into<String>, detail: impl Into<String>) {
        self.defects.push(Defect {
            kind,
            location: location.into(),
            detail: detail.into(),
        });
    }

    fn signature(&mut self, states: &[String]) {
        if self.sig.directions.is_empty() {
            self.push(DefectKind::NoDirections, "signature", "");
        }
        let groups: [(&str, &[String]); 4] = [
            ("directions", &self.sig.directions),
            ("concepts", &self.sig.concepts),
            ("features", &self.sig.features),
            ("states", states),
        ];
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (group, names) in groups {
            let mut local = BTreeSet::new();
            for n in names {
                if !local.insert(n.as_str()) {
                    self.push(DefectKind::DuplicateName, group, n.clone());
                }
            }
            // states live in their own namespace
            if group == "states" {
                continue;
            }
            for n in local {
                if let Some(prev) = owner.insert(n, group) {
                    self.push(
                        DefectKind::NameClash,
                        group,
                        format!("`{n}` is also declared in {prev}"),
                    );
                }
            }
        }
    }

    fn state(&mut self, name: &str, location: &str) {
        if !self.states.contains(name) {
            self.push(DefectKind::UnknownState, location, format!("`{name}`"));
        }
    }

    fn literal(&mut self, l: &Literal, location: &str) {
        if !self.sig.concepts.contains(&l.concept) {
            self.push(DefectKind::UnknownConcept, location, format!("`{}`", l.concept));
        }
    }

    fn direction(&mut self, d: &str, location: &str) {
        if self.sig.direction_index(d).is_none() {
            self.push(DefectKind::UnknownDirection, location, format!("`{d}`"));
        }
    }

    fn constraint(&mut self, c: &SpatialConstraint, location: &str) {
        if c.rel.is_empty() {
            self.push(DefectKind::EmptyRelation, location, c.to_string());
        }
        for arg in &c.args {
            for d in &arg.path {
                self.direction(d, location);
            }
            if !self.sig.features.contains(&arg.feature) {
                self.push(DefectKind::UnknownFeature, location, format!("`{}`", arg.feature));
            }
        }
    }

    fn header(&mut self, states: &[String], initial: &str, accepting: &BTreeSet<String>) {
        self.signature(states);
        self.state(initial, "initial");
        for q in accepting {
            self.state(q, "accepting");
        }
    }
}

impl AlternatingAutomaton {
    /// Reports every violated well-formedness condition; empty means valid.
    pub fn validate(&self) -> Vec<Defect> {
        let mut ck = Checker::new(&self.signature, &self.states);
        ck.header(&self.states, &self.initial, &self.accepting);
        for q in &self.states {
            if !self.delta.contains_key(q) {
                ck.push(DefectKind::MissingDelta, format!("delta {q}"), "");
            }
        }
        for (q, f) in &self.delta {
            let loc = format!("delta {q}");
            ck.state(q, &loc);
            for g in f.generators() {
                match g {
                    Generator::Literal(l) => ck.literal(l, &loc),
                    Generator::Constraint(c) => ck.constraint(c, &loc),
                    Generator::Move { direction, state } => {
                        ck.direction(direction, &loc);
                        ck.state(state, &loc);
                    }
                }
            }
        }
        ck.defects
    }
}

impl NondetAutomaton {
    /// Reports every violated well-formedness condition; empty means valid.
    pub fn validate(&self) -> Vec<Defect> {
        let mut ck = Checker::new(&self.signature, &self.states);
        ck.header(&self.states, &self.initial, &self.accepting);
        let k = self.signature.k();
        for (q, ts) in &self.delta {
            ck.state(q, &format!("delta {q}"));
            for (i, t) in ts.iter().enumerate() {
                let loc = format!("delta {q}, transition {}", i + 1);
                for l in &t.literals {
                    ck.literal(l, &loc);
                }
                if !literals_admissible(&t.literals) {
                    ck.push(DefectKind::ComplementaryLiterals, loc.clone(), "");
                }
                for c in &t.constraints {
                    ck.constraint(c, &loc);
                }
                if t.succ.len() != k {
                    ck.push(
                        DefectKind::ArityMismatch,
                        loc.clone(),
                        format!("{} successors for k = {k}", t.succ.len()),
                    );
                }
                for s in &t.succ {
                    ck.state(s, &loc);
                }
            }
        }
        if let Some(qa) = &self.accept_all {
            ck.state(qa, "acceptall");
            let expected = Transition {
                literals: BTreeSet::new(),
                constraints: BTreeSet::new(),
                succ: vec![qa.clone(); k],
            };
            let ok = self.accepting.contains(qa) && self.transitions(qa) == [expected];
            if !ok {
                ck.push(DefectKind::AcceptAllViolated, format!("delta {qa}"), "");
            }
        }
        ck.defects
    }
}
