//! Witness files: JSON serialization, DOT rendering and independent re-checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    backconstraints_step, check_bounds, globalcsp, validate_unfolding, BoundsReport,
    FiniteTreeModel, FtmNode, PtpTriple,
};
use crate::automata::{Literal, NondetAutomaton, SpatialConstraint};
use crate::word::Word;

pub const WITNESS_FORMAT: &str = "rccta-witness/1";

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("witness is not valid JSON")]
    Json(#[from] serde_json::Error),
    #[error("malformed witness: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    format: String,
    directions: Vec<String>,
    nodes: BTreeMap<String, NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    state: String,
    literals: BTreeSet<Literal>,
    constraints: BTreeSet<SpatialConstraint>,
    children: Vec<String>,
    backnode: Option<String>,
    ptpge: BTreeSet<PtpTriple>,
}

impl FiniteTreeModel {
    pub fn to_json(&self) -> String {
        let name = |w: &Word| self.word_name(w);
        let doc = Doc {
            format: WITNESS_FORMAT.to_string(),
            directions: self.directions.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|(w, n)| {
                    (
                        name(w),
                        NodeDoc {
                            state: n.state.clone(),
                            literals: n.literals.clone(),
                            constraints: n.constraints.clone(),
                            children: n.children.iter().map(name).collect(),
                            backnode: n.backnode.as_ref().map(name),
                            ptpge: n.ptpge.clone(),
                        },
                    )
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("witness serializes");
        s.push('\n');
        s
    }

    /// Parses a witness and checks its tree shape: every internal node has
    /// exactly its k children, every other node is a leaf linked to an
    /// internal node.
    pub fn from_json(text: &str) -> Result<FiniteTreeModel, WitnessError> {
        let doc: Doc = serde_json::from_str(text)?;
        let bad = |m: String| WitnessError::Format(m);
        if doc.format != WITNESS_FORMAT {
            return Err(bad(format!("unknown format `{}`", doc.format)));
        }
        if doc.directions.is_empty() {
            return Err(bad("no directions".into()));
        }
        let dirs = &doc.directions;
        let word = |s: &str| Word::parse_with(s, dirs).ok_or_else(|| bad(format!("bad node address `{s}`")));
        let mut nodes = BTreeMap::new();
        for (key, n) in &doc.nodes {
            let w = word(key)?;
            let children = n.children.iter().map(|c| word(c)).collect::<Result<Vec<_>, _>>()?;
            let backnode = n.backnode.as_deref().map(word).transpose()?;
            nodes.insert(
                w,
                FtmNode {
                    state: n.state.clone(),
                    literals: n.literals.clone(),
                    constraints: n.constraints.clone(),
                    children,
                    backnode,
                    ptpge: n.ptpge.clone(),
                },
            );
        }
        let m = FiniteTreeModel {
            directions: doc.directions,
            nodes,
        };
        if !m.nodes.contains_key(&Word::root()) {
            return Err(bad("no root node".into()));
        }
        let k = m.k();
        for (w, n) in &m.nodes {
            let name = m.word_name(w);
            match (&n.backnode, n.children.is_empty()) {
                (None, false) => {
                    let expected: Vec<Word> = (0..k).map(|d| w.child(d)).collect();
                    if n.children != expected {
                        return Err(bad(format!("node `{name}` does not list its {k} children")));
                    }
                    if let Some(c) = n.children.iter().find(|c| !m.nodes.contains_key(c)) {
                        return Err(bad(format!("child `{}` of `{name}` missing", m.word_name(c))));
                    }
                }
                (Some(b), true) => {
                    if !m.nodes.get(b).is_some_and(FtmNode::is_internal) {
                        return Err(bad(format!("backnode of `{name}` is not an internal node")));
                    }
                }
                _ => return Err(bad(format!("node `{name}` is neither internal nor a leaf"))),
            }
            if let Some(p) = w.parent() {
                if !m.nodes.get(&p).is_some_and(FtmNode::is_internal) {
                    return Err(bad(format!("node `{name}` has no internal parent")));
                }
            }
            if n.is_leaf() && (!n.literals.is_empty() || !n.constraints.is_empty()) {
                return Err(bad(format!("leaf `{name}` carries a transition label")));
            }
        }
        Ok(m)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

/// Internal nodes solid, leaves dashed, back links dotted.
pub fn to_dot(m: &FiniteTreeModel) -> String {
    let id = |w: &Word| quote(&format!("{w:?}"));
    let mut out = String::from("digraph witness {\n  node [shape=box];\n");
    for (w, n) in &m.nodes {
        let style = if n.is_internal() { "solid" } else { "dashed" };
        let mut lines = vec![if w.is_empty() { "ε".to_string() } else { m.word_name(w) }, n.state.clone()];
        lines.extend(n.constraints.iter().map(ToString::to_string));
        let label: Vec<String> = lines.iter().map(|l| escape(l)).collect();
        let _ = writeln!(out, "  {} [label=\"{}\", style={style}];", id(w), label.join("\\n"));
    }
    for (w, n) in &m.nodes {
        for (d, c) in n.children.iter().enumerate() {
            let _ = writeln!(out, "  {} -> {} [label={}];", id(w), id(c), quote(&m.directions[d]));
        }
    }
    for (w, n) in m.leaves() {
        if let Some(b) = &n.backnode {
            let _ = writeln!(out, "  {} -> {} [style=dotted, constraint=false];", id(w), id(b));
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub bounds: BoundsReport,
    pub defects: Vec<String>,
}

impl WitnessReport {
    pub fn ok(&self) -> bool {
        self.defects.is_empty() && self.bounds.pass()
    }
}

/// Re-checks a witness against `a`: labels are transitions of `a`, pending
/// targets are recomputed, leaves match their backnodes, every cycle visits
/// an accepting state, node bounds hold, the global network is consistent
/// and the unfoldings to each of `depths` are run prefixes.
pub fn check_witness(a: &NondetAutomaton, m: &FiniteTreeModel, depths: &[usize]) -> WitnessReport {
    let mut defects = Vec::new();
    let name = |w: &Word| {
        let s = m.word_name(w);
        if s.is_empty() { "ε".to_string() } else { s }
    };
    if m.directions != a.signature.directions {
        defects.push("direction lists differ".to_string());
    }
    if m.root().state != a.initial {
        defects.push(format!("root state `{}` is not initial", m.root().state));
    }
    if !m.root().ptpge.is_empty() {
        defects.push("root has pending targets".into());
    }
    for (w, n) in &m.nodes {
        if !a.states.contains(&n.state) {
            defects.push(format!("`{}`: unknown state `{}`", name(w), n.state));
        }
        if n.is_internal() {
            let succ: Vec<&String> = n.children.iter().map(|c| &m.nodes[c].state).collect();
            let found = a.transitions(&n.state).iter().any(|t| {
                t.literals == n.literals && t.constraints == n.constraints && t.succ.iter().eq(succ.iter().copied())
            });
            if !found {
                defects.push(format!("`{}`: label is not a transition of `{}`", name(w), n.state));
            }
            for (d, c) in n.children.iter().enumerate() {
                let expected = backconstraints_step(&n.constraints, &n.ptpge, &m.directions[d]);
                if m.nodes[c].ptpge != expected {
                    defects.push(format!("`{}`: pending targets differ from recomputation", name(c)));
                }
            }
        }
        if let Some(u) = &n.backnode {
            let b = &m.nodes[u];
            if b.state != n.state || b.ptpge != n.ptpge {
                defects.push(format!("leaf `{}` differs from its backnode `{}`", name(w), name(u)));
            }
            if !u.lex_lt(w) {
                defects.push(format!("backnode `{}` of `{}` is not lexicographically smaller", name(u), name(w)));
            }
            if u.is_strict_prefix_of(w)
                && !m.nodes.iter().any(|(x, xn)| u.lex_le(x) && x.lex_le(w) && a.is_accepting(&xn.state))
            {
                defects.push(format!("leaf `{}` loops to `{}` with no accepting node between", name(w), name(u)));
            }
        }
    }
    if let Some(cycle) = m.rejecting_cycle(&a.accepting) {
        let path: Vec<String> = cycle.iter().map(name).collect();
        defects.push(format!("cycle without accepting state: {}", path.join(" -> ")));
    }
    let bounds = check_bounds(m, a.states.len(), a.metrics());
    for (x, y) in &bounds.duplicates {
        defects.push(format!("internal nodes `{}` and `{}` share state and pending targets", name(x), name(y)));
    }
    if defects.is_empty() {
        match globalcsp(m) {
            Ok(q) if q.is_consistent() => {}
            Ok(_) => defects.push("global constraint network is inconsistent".into()),
            Err(e) => defects.push(e.to_string()),
        }
        for &d in depths {
            if let Err(e) = validate_unfolding(a, m, d) {
                defects.push(e.to_string());
            }
        }
    }
    WitnessReport { bounds, defects }
}
