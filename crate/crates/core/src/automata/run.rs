//! Finite prefixes of runs and of input trees, their CSP, and run validation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Literal, NondetAutomaton, SpatialConstraint, Transition};
use crate::relalg::{Qcsp, Relation};

/// A concrete feature at a node: `<node, feature>`. Nodes are direction-name paths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var {
    pub node: Vec<String>,
    pub feature: String,
}

impl Var {
    pub fn new(node: &[String], feature: &str) -> Self {
        Var {
            node: node.to_vec(),
            feature: feature.to_string(),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.node.join("."), self.feature)
    }
}

/// Node of a run prefix labelled `(state, L, X)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunNode {
    pub state: String,
    #[serde(default)]
    pub literals: BTreeSet<Literal>,
    #[serde(default)]
    pub constraints: BTreeSet<SpatialConstraint>,
    /// Either empty (frontier) or one child per direction.
    #[serde(default)]
    pub children: Vec<RunNode>,
}

/// A full k-ary run tree truncated at a fixed depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunPrefix {
    pub directions: Vec<String>,
    pub root: RunNode,
}

/// Node of an input-tree prefix: the concepts holding there and a local
/// qualitative scene over `<node, feature>` variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneNode {
    #[serde(default)]
    pub concepts: BTreeSet<String>,
    #[serde(default)]
    pub scene: Vec<SceneEdge>,
    #[serde(default)]
    pub children: Vec<SceneNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEdge {
    pub rel: Relation,
    pub from: Var,
    pub to: Var,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneTreePrefix {
    pub directions: Vec<String>,
    pub root: SceneNode,
}

fn walk<'a, N>(
    node: &'a N,
    children: fn(&'a N) -> &'a [N],
    path: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize], &'a N),
) {
    visit(path, node);
    for (d, c) in children(node).iter().enumerate() {
        path.push(d);
        walk(c, children, path, visit);
        path.pop();
    }
}

impl RunPrefix {
    pub fn depth(&self) -> usize {
        let mut depth = 0;
        self.visit(|p, _| depth = depth.max(p.len()));
        depth
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(|_, _| n += 1);
        n
    }

    /// Preorder traversal with the direction-index address of each node.
    pub fn visit<'a>(&'a self, mut f: impl FnMut(&[usize], &'a RunNode)) {
        walk(&self.root, |n| &n.children, &mut Vec::new(), &mut f);
    }

    fn names(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|&d| self.directions[d].clone()).collect()
    }

    /// Resolves a constraint argument issued at `node` into a variable, or
    /// `None` when the chain leaves the prefix or uses an unknown direction.
    fn resolve(&self, node: &[usize], chain: &super::ChainTerm, depth: usize) -> Option<Var> {
        if node.len() + chain.path.len() > depth {
            return None;
        }
        let mut names = self.names(node);
        for d in &chain.path {
            if !self.directions.contains(d) {
                return None;
            }
            names.push(d.clone());
        }
        Some(Var {
            node: names,
            feature: chain.feature.clone(),
        })
    }
}

impl SceneTreePrefix {
    /// The scene in which every node satisfies exactly the positive literals
    /// and the constraints of the run label, as edges local to that node.
    pub fn from_run(run: &RunPrefix) -> SceneTreePrefix {
        let depth = run.depth();
        fn build(run: &RunPrefix, node: &RunNode, path: &mut Vec<usize>, depth: usize) -> SceneNode {
            let concepts = node
                .literals
                .iter()
                .filter(|l| l.positive)
                .map(|l| l.concept.clone())
                .collect();
            let scene = node
                .constraints
                .iter()
                .filter_map(|c| {
                    let from = run.resolve(path, &c.args[0], depth)?;
                    let to = run.resolve(path, &c.args[1], depth)?;
                    Some(SceneEdge { rel: c.rel, from, to })
                })
                .collect();
            let children = node
                .children
                .iter()
                .enumerate()
                .map(|(d, c)| {
                    path.push(d);
                    let n = build(run, c, path, depth);
                    path.pop();
                    n
                })
                .collect();
            SceneNode {
                concepts,
                scene,
                children,
            }
        }
        SceneTreePrefix {
            directions: run.directions.clone(),
            root: build(run, &run.root, &mut Vec::new(), depth),
        }
    }

    pub fn visit<'a>(&'a self, mut f: impl FnMut(&[usize], &'a SceneNode)) {
        walk(&self.root, |n| &n.children, &mut Vec::new(), &mut f);
    }

    /// The union of all local scene networks.
    pub fn network(&self) -> Qcsp<Var> {
        let mut q = Qcsp::new();
        self.visit(|_, n| {
            for e in &n.scene {
                q.constrain(e.from.clone(), e.to.clone(), e.rel);
            }
        });
        q
    }
}

/// The CSP of a run prefix: one edge per constraint whose targets both lie
/// within the prefix; repeated pairs intersect.
pub fn csp_of_run_prefix(run: &RunPrefix) -> Qcsp<Var> {
    let depth = run.depth();
    let mut q = Qcsp::new();
    run.visit(|path, node| {
        for c in &node.constraints {
            if let (Some(a), Some(b)) = (
                run.resolve(path, &c.args[0], depth),
                run.resolve(path, &c.args[1], depth),
            ) {
                q.constrain(a, b, c.rel);
            }
        }
    });
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixDefectKind {
    /// The prefixes disagree in shape, directions, or arity.
    Shape,
    /// (i) no transition of `delta(Y_u)` produces the node label.
    Transition,
    /// (ii) a literal of `L_u` contradicts the concepts of the input node.
    Literal,
    /// (iii) a constraint of `X_u` contradicts the scene.
    Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixDefect {
    pub kind: PrefixDefectKind,
    /// Direction-name address of the offending node.
    pub node: Vec<String>,
    pub detail: String,
}

impl fmt::Display for PrefixDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            PrefixDefectKind::Shape => "shape mismatch",
            PrefixDefectKind::Transition => "(i) no matching transition",
            PrefixDefectKind::Literal => "(ii) literal not satisfied",
            PrefixDefectKind::Constraint => "(iii) constraint not satisfied",
        };
        write!(f, "node `{}`: {what}: {}", self.node.join("."), self.detail)
    }
}

/// Result of a successful prefix validation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefixCheck {
    pub nodes: usize,
    /// Constraints whose chains leave the prefix: `(node, constraint)`.
    pub unchecked_at_horizon: Vec<(Vec<String>, SpatialConstraint)>,
}

fn same_shape(run: &RunNode, scene: &SceneNode) -> bool {
    run.children.len() == scene.children.len()
        && run
            .children
            .iter()
            .zip(&scene.children)
            .all(|(r, s)| same_shape(r, s))
}

fn scene_at<'a>(root: &'a SceneNode, path: &[usize]) -> &'a SceneNode {
    path.iter().fold(root, |n, &d| &n.children[d])
}

/// Checks that `run` is a prefix of a run of `a` on an input tree whose
/// prefix is `input`.
pub fn validate_run_prefix(
    a: &NondetAutomaton,
    run: &RunPrefix,
    input: &SceneTreePrefix,
) -> Result<PrefixCheck, PrefixDefect> {
    let k = a.signature.k();
    let shape = |detail: &str| PrefixDefect {
        kind: PrefixDefectKind::Shape,
        node: Vec::new(),
        detail: detail.to_string(),
    };
    if run.directions != a.signature.directions || input.directions != run.directions {
        return Err(shape("direction lists differ"));
    }
    if !same_shape(&run.root, &input.root) {
        return Err(shape("run and input prefixes differ in shape"));
    }
    let mut bad_arity = false;
    run.visit(|_, n| bad_arity |= !n.children.is_empty() && n.children.len() != k);
    if bad_arity {
        return Err(shape("node with a child count other than k"));
    }
    if run.root.state != a.initial {
        return Err(PrefixDefect {
            kind: PrefixDefectKind::Transition,
            node: Vec::new(),
            detail: format!("root state `{}` is not initial", run.root.state),
        });
    }

    let depth = run.depth();
    let scene = input.network();
    if !scene.is_consistent() {
        return Err(PrefixDefect {
        kind: PrefixDefectKind::Constraint,
        node: Vec::new(),
        detail: "the input scene is itself inconsistent".into(),
    });
    }

    let mut check = PrefixCheck::default();
    let mut first_defect: Option<PrefixDefect> = None;
    run.visit(|path, node| {
        if first_defect.is_some() {
            return;
        }
        check.nodes += 1;
        let names = run.names(path);
        let fail = |kind, detail: String| PrefixDefect {
            kind,
            node: names.clone(),
            detail,
        };

        // (i)
        let matches = |t: &Transition| {
            t.literals == node.literals
                && t.constraints == node.constraints
                && (node.children.is_empty()
                    || t.succ.iter().eq(node.children.iter().map(|c| &c.state)))
        };
        if !a.transitions(&node.state).iter().any(matches) {
            first_defect = Some(fail(
                PrefixDefectKind::Transition,
                format!("state `{}`", node.state),
            ));
            return;
        }

        // (ii)
        let concepts = &scene_at(&input.root, path).concepts;
        let broken = node.literals.iter().find(|l| concepts.contains(&l.concept) != l.positive);
        if let Some(l) = broken {
            first_defect = Some(fail(PrefixDefectKind::Literal, l.to_string()));
            return;
        }

        // (iii)
        for c in &node.constraints {
            let (Some(x), Some(y)) = (
                run.resolve(path, &c.args[0], depth),
                run.resolve(path, &c.args[1], depth),
            ) else {
                check.unchecked_at_horizon.push((names.clone(), c.clone()));
                continue;
            };
            // already implied by the scene, which is consistent
            if scene.relation(&x, &y).is_subset(c.rel) {
                continue;
            }
            let mut with = scene.clone();
            with.constrain(x, y, c.rel);
            if !with.is_consistent() {
                first_defect = Some(fail(PrefixDefectKind::Constraint, c.to_string()));
                return;
            }
        }
    });
    match first_defect {
        Some(d) => Err(d),
        None => Ok(check),
    }
}
