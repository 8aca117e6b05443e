//! Positive boolean formulas over generators and their disjunctive normal form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::automata::{literals_admissible, Literal, SpatialConstraint};

/// Default bound on the number of disjuncts a DNF may produce.
pub const DEFAULT_DNF_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("DNF exceeds {cap} disjuncts")]
    TooManyDisjuncts { cap: usize },
    #[error("disjunct contains complementary literals on `{0}`")]
    InadmissibleDisjunct(String),
}

/// Element of the free distributive lattice: no negation node exists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<G> {
    Gen(G),
    And(Vec<Formula<G>>),
    Or(Vec<Formula<G>>),
}

impl<G: Ord + Clone> Formula<G> {
    pub fn generators(&self) -> BTreeSet<&G> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut BTreeSet<&'a G>) {
        match self {
            Formula::Gen(g) => {
                out.insert(g);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect(out)),
        }
    }

    /// Monotone evaluation under an assignment of the generators.
    pub fn eval(&self, truth: &impl Fn(&G) -> bool) -> bool {
        match self {
            Formula::Gen(g) => truth(g),
            Formula::And(fs) => fs.iter().all(|f| f.eval(truth)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(truth)),
        }
    }

    /// Set representation: minimal generator sets whose disjunction is
    /// equivalent to the formula, sorted.
    pub fn dnf(&self, cap: usize) -> Result<Vec<BTreeSet<G>>, FormulaError> {
        let out = match self {
            Formula::Gen(g) => vec![BTreeSet::from([g.clone()])],
            Formula::Or(fs) => {
                let mut acc = Vec::new();
                for f in fs {
                    acc.extend(f.dnf(cap)?);
                    if acc.len() > cap {
                        acc = minimize(acc);
                    }
                    check_cap(acc.len(), cap)?;
                }
                acc
            }
            Formula::And(fs) => {
                let mut acc = vec![BTreeSet::new()];
                for f in fs {
                    let rhs = f.dnf(cap)?;
                    // absorption can shrink the product, so only refuse products
                    // that could not possibly minimise back under the cap
                    if acc.len().saturating_mul(rhs.len()) > cap.saturating_mul(cap) {
                        return Err(FormulaError::TooManyDisjuncts { cap });
                    }
                    let mut next = Vec::with_capacity(acc.len() * rhs.len());
                    for a in &acc {
                        for b in &rhs {
                            next.push(a.union(b).cloned().collect());
                        }
                    }
                    acc = minimize(next);
                    check_cap(acc.len(), cap)?;
                }
                acc
            }
        };
        Ok(minimize(out))
    }
}

fn check_cap(n: usize, cap: usize) -> Result<(), FormulaError> {
    if n > cap {
        Err(FormulaError::TooManyDisjuncts { cap })
    } else {
        Ok(())
    }
}

/// Drops duplicates and strict supersets, then sorts.
pub fn minimize<G: Ord + Clone>(mut sets: Vec<BTreeSet<G>>) -> Vec<BTreeSet<G>> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<BTreeSet<G>> = Vec::new();
    for s in sets {
        if !kept.iter().any(|k| k.is_subset(&s)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

/// Leaves of transition formulas of alternating automata.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Literal(Literal),
    Constraint(SpatialConstraint),
    Move { direction: String, state: String },
}

impl Generator {
    pub fn move_to(direction: &str, state: &str) -> Self {
        Generator::Move {
            direction: direction.to_string(),
            state: state.to_string(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Literal(l) => write!(f, "{l}"),
            Generator::Constraint(c) => write!(f, "{c}"),
            Generator::Move { direction, state } => write!(f, "<{direction}:{state}>"),
        }
    }
}

impl<G> Formula<G> {
    fn prints_disjunction(&self) -> bool {
        match self {
            Formula::Or(v) => v.len() > 1 || v.iter().any(Formula::prints_disjunction),
            _ => false,
        }
    }
}

impl<G: fmt::Display> fmt::Display for Formula<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Gen(g) => write!(f, "{g}"),
            Formula::Or(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            Formula::And(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    if x.prints_disjunction() {
                        write!(f, "({x})")?
                    } else {
                        write!(f, "{x}")?
                    }
                }
                Ok(())
            }
        }
    }
}

/// One conjunction of the set representation of a transition formula.
pub type Disjunct = BTreeSet<Generator>;

/// A disjunct split into its literal, constraint and move layers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub literals: BTreeSet<Literal>,
    pub constraints: BTreeSet<SpatialConstraint>,
    /// Directions with at least one move; states targeted in that direction.
    pub moves: BTreeMap<String, BTreeSet<String>>,
}

pub fn partition(d: &Disjunct) -> Result<Partition, FormulaError> {
    let mut p = Partition::default();
    for g in d {
        match g {
            Generator::Literal(l) => {
                p.literals.insert(l.clone());
            }
            Generator::Constraint(c) => {
                p.constraints.insert(c.clone());
            }
            Generator::Move { direction, state } => {
                p.moves
                    .entry(direction.clone())
                    .or_default()
                    .insert(state.clone());
            }
        }
    }
    if !literals_admissible(&p.literals) {
        let clash = p
            .literals
            .iter()
            .find(|l| p.literals.contains(&l.complement()))
            .map(|l| l.concept.clone())
            .unwrap_or_default();
        return Err(FormulaError::InadmissibleDisjunct(clash));
    }
    Ok(p)
}
