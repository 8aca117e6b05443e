//! Emptiness of nondeterministic automata by depth-first construction of a
//! finite tree model: a finite run tree whose leaves point back to internal
//! nodes with the same state and the same pending constraint targets.
//!
//! The search expands nodes in preorder (directions in declaration order,
//! transitions in declaration order) and backtracks chronologically. A node
//! whose `(state, ptpge)` signature was already expanded becomes a leaf
//! linked to that node, unless the link closes a loop along a single branch
//! with no accepting state on it. A completed tree is accepted when every
//! cycle through the back links visits an accepting state and its global
//! constraint network is consistent.

mod witness;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{
    literals_admissible, validate_run_prefix, ChainTerm, Literal, Metrics, NondetAutomaton,
    PrefixDefect, RunNode, RunPrefix, SceneTreePrefix, SpatialConstraint,
};
use crate::relalg::Qcsp;
use crate::word::Word;

pub use witness::{check_witness, to_dot, WitnessError, WitnessReport, WITNESS_FORMAT};

pub const DEFAULT_SAFETY_FACTOR: usize = 2;

/// Unfolded prefixes used by the post-checks stay under this many nodes.
pub const UNFOLD_NODE_BUDGET: usize = 1 << 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmptinessError {
    #[error("resource limit: search tree exceeded {limit} nodes")]
    ResourceLimit { limit: usize },
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

/// A constraint still targeting a parameter at or below the node holding
/// the triple: argument `arg` (1-based) of `constraint`, with `remaining`
/// the part of its chain not yet walked.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PtpTriple {
    pub constraint: SpatialConstraint,
    pub arg: usize,
    pub remaining: ChainTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtmNode {
    pub state: String,
    pub literals: BTreeSet<Literal>,
    pub constraints: BTreeSet<SpatialConstraint>,
    /// All k children for internal nodes, empty for leaves.
    pub children: Vec<Word>,
    /// Set exactly on leaves.
    pub backnode: Option<Word>,
    pub ptpge: BTreeSet<PtpTriple>,
}

impl FtmNode {
    fn fresh(state: String, ptpge: BTreeSet<PtpTriple>) -> Self {
        FtmNode {
            state,
            literals: BTreeSet::new(),
            constraints: BTreeSet::new(),
            children: Vec::new(),
            backnode: None,
            ptpge,
        }
    }

    pub fn is_internal(&self) -> bool {
        !self.children.is_empty()
    }

    pub fn is_leaf(&self) -> bool {
        self.backnode.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTreeModel {
    pub directions: Vec<String>,
    pub nodes: BTreeMap<Word, FtmNode>,
}

/// A variable of the global network: a feature at an internal node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FtmVar {
    pub node: Word,
    pub feature: String,
}

impl fmt::Display for FtmVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{:?},{}>", self.node, self.feature)
    }
}

impl FiniteTreeModel {
    pub fn root(&self) -> &FtmNode {
        &self.nodes[&Word::root()]
    }

    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn internal(&self) -> impl Iterator<Item = (&Word, &FtmNode)> {
        self.nodes.iter().filter(|(_, n)| n.is_internal())
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&Word, &FtmNode)> {
        self.nodes.iter().filter(|(_, n)| n.is_leaf())
    }

    pub fn height(&self) -> usize {
        self.nodes.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn word_name(&self, w: &Word) -> String {
        w.display_with(&self.directions)
    }

    /// The internal node standing for `w`: itself, or its backnode.
    fn target<'a>(&'a self, w: &'a Word) -> Result<&'a Word, EmptinessError> {
        let node = self
            .nodes
            .get(w)
            .ok_or_else(|| EmptinessError::MalformedModel(format!("missing node {w:?}")))?;
        let t = node.backnode.as_ref().unwrap_or(w);
        match self.nodes.get(t) {
            Some(n) if n.is_internal() => Ok(t),
            _ => Err(EmptinessError::MalformedModel(format!(
                "node {w:?} does not lead to an internal node"
            ))),
        }
    }

    /// A cycle through tree edges and back links avoiding accepting states,
    /// if one exists.
    pub fn rejecting_cycle(&self, accepting: &BTreeSet<String>) -> Option<Vec<Word>> {
        // 0 unseen, 1 on stack, 2 done
        let mut colour: BTreeMap<&Word, u8> = BTreeMap::new();
        let mut stack: Vec<&Word> = Vec::new();
        fn dfs<'a>(
            m: &'a FiniteTreeModel,
            accepting: &BTreeSet<String>,
            w: &'a Word,
            colour: &mut BTreeMap<&'a Word, u8>,
            stack: &mut Vec<&'a Word>,
        ) -> Option<Vec<Word>> {
            colour.insert(w, 1);
            stack.push(w);
            for c in &m.nodes[w].children {
                let Ok(t) = m.target(c) else { continue };
                if accepting.contains(&m.nodes[t].state) {
                    continue;
                }
                match colour.get(t).copied().unwrap_or(0) {
                    1 => {
                        let from = stack.iter().position(|s| *s == t).unwrap_or(0);
                        return Some(stack[from..].iter().map(|s| (*s).clone()).collect());
                    }
                    0 => {
                        if let Some(cycle) = dfs(m, accepting, t, colour, stack) {
                            return Some(cycle);
                        }
                    }
                    _ => {}
                }
            }
            stack.pop();
            colour.insert(w, 2);
            None
        }
        for (w, n) in self.internal() {
            if accepting.contains(&n.state) || colour.contains_key(w) {
                continue;
            }
            if let Some(cycle) = dfs(self, accepting, w, &mut colour, &mut stack) {
                return Some(cycle);
            }
        }
        None
    }
}

/// The pending targets of the child of a node in direction `d`, given the
/// node's own constraints and pending targets.
pub fn backconstraints_step(
    constraints: &BTreeSet<SpatialConstraint>,
    ptpge: &BTreeSet<PtpTriple>,
    d: &str,
) -> BTreeSet<PtpTriple> {
    let mut out = BTreeSet::new();
    for c in constraints {
        for (i, arg) in c.args.iter().enumerate() {
            if arg.path.first().map(String::as_str) == Some(d) {
                out.insert(PtpTriple {
                    constraint: c.clone(),
                    arg: i + 1,
                    remaining: arg.suffix(1),
                });
            }
        }
    }
    for t in ptpge {
        if t.remaining.path.first().map(String::as_str) == Some(d) {
            out.insert(PtpTriple {
                constraint: t.constraint.clone(),
                arg: t.arg,
                remaining: t.remaining.suffix(1),
            });
        }
    }
    out
}

/// Follows `chain` from internal node `s`, through back links at leaves.
pub fn resolve_variable(
    m: &FiniteTreeModel,
    s: &Word,
    chain: &ChainTerm,
) -> Result<FtmVar, EmptinessError> {
    let mut at = m.target(s)?.clone();
    for d in &chain.path {
        let i = m
            .directions
            .iter()
            .position(|x| x == d)
            .ok_or_else(|| EmptinessError::MalformedModel(format!("unknown direction `{d}`")))?;
        let child = m.nodes[&at].children.get(i).ok_or_else(|| {
            EmptinessError::MalformedModel(format!("node {at:?} has no child `{d}`"))
        })?;
        at = m.target(child)?.clone();
    }
    Ok(FtmVar {
        node: at,
        feature: chain.feature.clone(),
    })
}

/// One edge per constraint of every internal node, between resolved variables.
pub fn globalcsp(m: &FiniteTreeModel) -> Result<Qcsp<FtmVar>, EmptinessError> {
    let mut q = Qcsp::new();
    for (w, n) in m.internal() {
        for c in &n.constraints {
            let x = resolve_variable(m, w, &c.args[0])?;
            let y = resolve_variable(m, w, &c.args[1])?;
            q.constrain(x, y, c.rel);
        }
    }
    Ok(q)
}

/// The depth-`depth` prefix of the regular run the model represents.
pub fn unfold(m: &FiniteTreeModel, depth: usize) -> Result<RunPrefix, EmptinessError> {
    fn build(m: &FiniteTreeModel, w: &Word, left: usize) -> Result<RunNode, EmptinessError> {
        let t = m.target(w)?;
        let n = &m.nodes[t];
        let children = if left == 0 {
            Vec::new()
        } else {
            n.children
                .iter()
                .map(|c| build(m, c, left - 1))
                .collect::<Result<_, _>>()?
        };
        Ok(RunNode {
            state: n.state.clone(),
            literals: n.literals.clone(),
            constraints: n.constraints.clone(),
            children,
        })
    }
    Ok(RunPrefix {
        directions: m.directions.clone(),
        root: build(m, &Word::root(), depth)?,
    })
}

/// `3 * height`, reduced until the unfolded prefix has at most
/// [`UNFOLD_NODE_BUDGET`] nodes.
pub fn default_unfold_depth(m: &FiniteTreeModel) -> usize {
    let mut d = 3 * m.height().max(1);
    while d > 1 && prefix_size(m.k(), d) > UNFOLD_NODE_BUDGET {
        d -= 1;
    }
    d
}

fn prefix_size(k: usize, depth: usize) -> usize {
    (0..=depth).fold(0usize, |acc, i| {
        acc.saturating_add(k.saturating_pow(i as u32))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsReport {
    pub internal: usize,
    pub leaves: usize,
    pub internal_bound: usize,
    pub leaf_bound: usize,
    /// Some factor of the bound was 0 and was raised to 1.
    pub clamped: bool,
    /// Pairs of internal nodes sharing state and pending targets.
    pub duplicates: Vec<(Word, Word)>,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.internal <= self.internal_bound
            && self.leaves <= self.leaf_bound
            && self.duplicates.is_empty()
    }
}

/// `|Q| * n_c * l_fc * p` internal and that times `k` leaf nodes, with
/// zero factors raised to 1.
pub fn node_bounds(states: usize, met: Metrics, k: usize) -> (usize, usize, bool) {
    let clamped = met.constraints == 0 || met.longest_chain == 0;
    let internal = states * met.constraints.max(1) * met.longest_chain.max(1) * met.arity;
    (internal, internal * k, clamped)
}

pub fn check_bounds(m: &FiniteTreeModel, states: usize, met: Metrics) -> BoundsReport {
    let (internal_bound, leaf_bound, clamped) = node_bounds(states, met, m.k());
    let mut seen: BTreeMap<(&String, &BTreeSet<PtpTriple>), &Word> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for (w, n) in m.internal() {
        if let Some(first) = seen.insert((&n.state, &n.ptpge), w) {
            duplicates.push((first.clone(), w.clone()));
        }
    }
    BoundsReport {
        internal: m.internal().count(),
        leaves: m.leaves().count(),
        internal_bound,
        leaf_bound,
        clamped,
        duplicates,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub safety_factor: usize,
    /// Overrides the node limit derived from the bounds.
    pub max_nodes: Option<usize>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            safety_factor: DEFAULT_SAFETY_FACTOR,
            max_nodes: None,
        }
    }
}

type Signature = (String, BTreeSet<PtpTriple>);

struct Search<'a> {
    a: &'a NondetAutomaton,
    model: FiniteTreeModel,
    expanded: BTreeMap<Signature, Word>,
    limit: usize,
}

impl Search<'_> {
    fn node(&mut self, w: &Word) -> &mut FtmNode {
        self.model.nodes.get_mut(w).expect("node in tree")
    }

    /// Some node on the branch from `u` down to `v` is accepting.
    fn accepting_on_path(&self, u: &Word, v: &Word) -> bool {
        (u.len()..=v.len()).any(|l| {
            let w = Word(v.0[..l].to_vec());
            self.a.is_accepting(&self.model.nodes[&w].state)
        })
    }

    fn complete(&self) -> Result<bool, EmptinessError> {
        if self.model.rejecting_cycle(&self.a.accepting).is_some() {
            return Ok(false);
        }
        Ok(globalcsp(&self.model)?.is_consistent())
    }

    /// Expands the pending nodes (top of stack first). On `Ok(false)` the
    /// tree and the stack are left as they were found.
    fn expand(&mut self, pending: &mut Vec<Word>) -> Result<bool, EmptinessError> {
        let Some(w) = pending.pop() else {
            return self.complete();
        };
        let n = &self.model.nodes[&w];
        let sig: Signature = (n.state.clone(), n.ptpge.clone());

        if let Some(u) = self.expanded.get(&sig).cloned() {
            if !u.is_strict_prefix_of(&w) || self.accepting_on_path(&u, &w) {
                self.node(&w).backnode = Some(u);
                if self.expand(pending)? {
                    return Ok(true);
                }
                self.node(&w).backnode = None;
            }
            pending.push(w);
            return Ok(false);
        }

        let k = self.model.k();
        let a = self.a;
        for t in a.transitions(&sig.0) {
            if t.succ.len() != k || !literals_admissible(&t.literals) {
                continue;
            }
            if self.model.nodes.len() + k > self.limit {
                return Err(EmptinessError::ResourceLimit { limit: self.limit });
            }
            let children: Vec<Word> = (0..k).map(|d| w.child(d)).collect();
            for (d, c) in children.iter().enumerate() {
                let ptpge = backconstraints_step(&t.constraints, &sig.1, &self.model.directions[d]);
                self.model
                    .nodes
                    .insert(c.clone(), FtmNode::fresh(t.succ[d].clone(), ptpge));
            }
            let node = self.node(&w);
            node.literals = t.literals.clone();
            node.constraints = t.constraints.clone();
            node.children = children.clone();
            self.expanded.insert(sig.clone(), w.clone());
            pending.extend(children.iter().rev().cloned());

            if self.expand(pending)? {
                return Ok(true);
            }

            pending.truncate(pending.len() - k);
            self.expanded.remove(&sig);
            for c in &children {
                self.model.nodes.remove(c);
            }
            let node = self.node(&w);
            node.literals.clear();
            node.constraints.clear();
            node.children.clear();
        }
        pending.push(w);
        Ok(false)
    }
}

/// Searches for a finite tree model. `Ok(None)` means the language is empty.
pub fn ftm_search(
    a: &NondetAutomaton,
    limits: SearchLimits,
) -> Result<Option<FiniteTreeModel>, EmptinessError> {
    let (ib, lb, _) = node_bounds(a.states.len(), a.metrics(), a.signature.k());
    let limit = limits
        .max_nodes
        .unwrap_or_else(|| limits.safety_factor.saturating_mul(ib + lb + 1));
    let mut search = Search {
        a,
        model: FiniteTreeModel {
            directions: a.signature.directions.clone(),
            nodes: BTreeMap::from([(
                Word::root(),
                FtmNode::fresh(a.initial.clone(), BTreeSet::new()),
            )]),
        },
        expanded: BTreeMap::new(),
        limit,
    };
    let mut pending = vec![Word::root()];
    Ok(search.expand(&mut pending)?.then_some(search.model))
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Empty,
    NonEmpty(FiniteTreeModel),
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: Verdict,
    /// Post-check findings on the witness; empty when all checks pass.
    pub diagnostics: Vec<String>,
}

/// Emptiness with witness post-checks.
pub fn decide(a: &NondetAutomaton, limits: SearchLimits) -> Result<Decision, EmptinessError> {
    let Some(m) = ftm_search(a, limits)? else {
        return Ok(Decision {
            verdict: Verdict::Empty,
            diagnostics: Vec::new(),
        });
    };
    let mut diagnostics = Vec::new();
    let report = check_bounds(&m, a.states.len(), a.metrics());
    if !report.pass() {
        diagnostics.push(format!(
            "node bounds exceeded: {} internal (bound {}), {} leaves (bound {})",
            report.internal, report.internal_bound, report.leaves, report.leaf_bound
        ));
    }
    if let Err(e) = validate_unfolding(a, &m, default_unfold_depth(&m)) {
        diagnostics.push(e.to_string());
    }
    Ok(Decision {
        verdict: Verdict::NonEmpty(m),
        diagnostics,
    })
}

#[derive(Debug, Error)]
pub enum UnfoldError {
    #[error(transparent)]
    Model(#[from] EmptinessError),
    #[error("unfolding to depth {depth} is not a run prefix: {defect}")]
    Prefix { depth: usize, defect: PrefixDefect },
}

/// Unfolds to `depth` and checks the prefix against the automaton on the
/// input scene induced by the prefix's own labels.
pub fn validate_unfolding(
    a: &NondetAutomaton,
    m: &FiniteTreeModel,
    depth: usize,
) -> Result<(), UnfoldError> {
    let run = unfold(m, depth)?;
    let scene = SceneTreePrefix::from_run(&run);
    validate_run_prefix(a, &run, &scene)
        .map(|_| ())
        .map_err(|defect| UnfoldError::Prefix { depth, defect })
}
