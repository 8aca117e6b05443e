//! RCC8 relation algebra and qualitative constraint networks.
//!
//! A [`Relation`] is a set of base atoms packed into a byte. Composition is
//! the weak composition of the standard RCC8 table, lifted to sets through a
//! precomputed 256 x 256 lookup. [`Qcsp`] is a converse-closed network over
//! arbitrary ordered variable identifiers, solved by algebraic closure and,
//! for non-atomic edges, backtracking over atomic refinements.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

/// One of the eight jointly exhaustive, pairwise disjoint RCC8 base relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Atom {
    DC = 0,
    EC = 1,
    PO = 2,
    TPP = 3,
    NTPP = 4,
    TPPI = 5,
    NTPPI = 6,
    EQ = 7,
}

impl Atom {
    pub const ALL: [Atom; 8] = [
        Atom::DC,
        Atom::EC,
        Atom::PO,
        Atom::TPP,
        Atom::NTPP,
        Atom::TPPI,
        Atom::NTPPI,
        Atom::EQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Atom::DC => "DC",
            Atom::EC => "EC",
            Atom::PO => "PO",
            Atom::TPP => "TPP",
            Atom::NTPP => "NTPP",
            Atom::TPPI => "TPPI",
            Atom::NTPPI => "NTPPI",
            Atom::EQ => "EQ",
        }
    }

    /// Case-insensitive lookup of an atom name.
    pub fn from_name(name: &str) -> Option<Atom> {
        Atom::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(name))
    }

    pub fn converse(self) -> Atom {
        match self {
            Atom::TPP => Atom::TPPI,
            Atom::TPPI => Atom::TPP,
            Atom::NTPP => Atom::NTPPI,
            Atom::NTPPI => Atom::NTPP,
            other => other,
        }
    }

    const fn bit(self) -> u8 {
        1 << (self as u8)
    }

    fn from_index(i: u8) -> Atom {
        Atom::ALL[i as usize]
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A disjunction of RCC8 atoms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Relation(u8);

const fn mask(atoms: &[Atom]) -> u8 {
    let mut m = 0u8;
    let mut i = 0;
    while i < atoms.len() {
        m |= atoms[i].bit();
        i += 1;
    }
    m
}

use Atom::{DC, EC, EQ, NTPP, NTPPI, PO, TPP, TPPI};

const ALL: u8 = 0xff;

/// Row `a`, column `b` holds `{a} ; {b}`.
static COMPOSITION: [[u8; 8]; 8] = [
    // DC
    [
        ALL,
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[DC]),
        mask(&[DC]),
        mask(&[DC]),
    ],
    // EC
    [
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[DC, EC, PO, TPP, TPPI, EQ]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[EC, PO, TPP, NTPP]),
        mask(&[PO, TPP, NTPP]),
        mask(&[DC, EC]),
        mask(&[DC]),
        mask(&[EC]),
    ],
    // PO
    [
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        ALL,
        mask(&[PO, TPP, NTPP]),
        mask(&[PO, TPP, NTPP]),
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[PO]),
    ],
    // TPP
    [
        mask(&[DC]),
        mask(&[DC, EC]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[TPP, NTPP]),
        mask(&[NTPP]),
        mask(&[DC, EC, PO, TPP, TPPI, EQ]),
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[TPP]),
    ],
    // NTPP
    [
        mask(&[DC]),
        mask(&[DC]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        mask(&[NTPP]),
        mask(&[NTPP]),
        mask(&[DC, EC, PO, TPP, NTPP]),
        ALL,
        mask(&[NTPP]),
    ],
    // TPPI
    [
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[EC, PO, TPPI, NTPPI]),
        mask(&[PO, TPPI, NTPPI]),
        mask(&[PO, TPP, TPPI, EQ]),
        mask(&[PO, TPP, NTPP]),
        mask(&[TPPI, NTPPI]),
        mask(&[NTPPI]),
        mask(&[TPPI]),
    ],
    // NTPPI
    [
        mask(&[DC, EC, PO, TPPI, NTPPI]),
        mask(&[PO, TPPI, NTPPI]),
        mask(&[PO, TPPI, NTPPI]),
        mask(&[PO, TPPI, NTPPI]),
        mask(&[PO, TPP, NTPP, TPPI, NTPPI, EQ]),
        mask(&[NTPPI]),
        mask(&[NTPPI]),
        mask(&[NTPPI]),
    ],
    // EQ
    [
        mask(&[DC]),
        mask(&[EC]),
        mask(&[PO]),
        mask(&[TPP]),
        mask(&[NTPP]),
        mask(&[TPPI]),
        mask(&[NTPPI]),
        mask(&[EQ]),
    ],
];

fn composition_table() -> &'static [u8] {
    static TABLE: OnceLock<Vec<u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0u8; 256 * 256];
        for r in 0..256usize {
            for s in 0..256usize {
                let mut out = 0u8;
                for (a, row) in COMPOSITION.iter().enumerate() {
                    if r & (1 << a) == 0 {
                        continue;
                    }
                    for (b, &entry) in row.iter().enumerate() {
                        if s & (1 << b) != 0 {
                            out |= entry;
                        }
                    }
                }
                t[r * 256 + s] = out;
            }
        }
        t
    })
}

fn converse_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u8; 256];
        for (r, slot) in t.iter_mut().enumerate() {
            for a in Atom::ALL {
                if r as u8 & a.bit() != 0 {
                    *slot |= a.converse().bit();
                }
            }
        }
        t
    })
}

impl Relation {
    pub const EMPTY: Relation = Relation(0);
    pub const FULL: Relation = Relation(ALL);

    pub fn atom(a: Atom) -> Relation {
        Relation(a.bit())
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Relation {
        Relation(atoms.into_iter().fold(0, |m, a| m | a.bit()))
    }

    pub fn from_bits(bits: u8) -> Relation {
        Relation(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, a: Atom) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_full(self) -> bool {
        self.0 == ALL
    }

    /// Exactly one atom.
    pub fn is_atomic(self) -> bool {
        self.0.count_ones() == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: Relation) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn atoms(self) -> impl Iterator<Item = Atom> {
        (0..8u8)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(Atom::from_index)
    }

    pub fn union(self, other: Relation) -> Relation {
        Relation(self.0 | other.0)
    }

    pub fn intersection(self, other: Relation) -> Relation {
        Relation(self.0 & other.0)
    }

    pub fn complement(self) -> Relation {
        Relation(!self.0)
    }

    pub fn converse(self) -> Relation {
        Relation(converse_table()[self.0 as usize])
    }

    /// Weak composition: the union of the table entries over all atom pairs.
    pub fn compose(self, other: Relation) -> Relation {
        Relation(composition_table()[self.0 as usize * 256 + other.0 as usize])
    }
}

impl From<Atom> for Relation {
    fn from(a: Atom) -> Self {
        Relation::atom(a)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_atomic() {
            return f.write_str(self.atoms().next().unwrap().name());
        }
        f.write_str("{")?;
        for (i, a) in self.atoms().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(a.name())?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid relation `{0}`")]
pub struct ParseRelationError(pub String);

impl FromStr for Relation {
    type Err = ParseRelationError;

    /// Accepts `TPP`, `tpp`, `{TPP,NTPP}` and `{}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || ParseRelationError(s.to_string());
        if let Some(inner) = t.strip_prefix('{') {
            let inner = inner.strip_suffix('}').ok_or_else(err)?;
            let mut rel = Relation::EMPTY;
            for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                rel = rel.union(Atom::from_name(part).ok_or_else(err)?.into());
            }
            Ok(rel)
        } else {
            Atom::from_name(t).map(Relation::atom).ok_or_else(err)
        }
    }
}

/// Marker returned when algebraic closure empties an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("constraint network is inconsistent")]
pub struct Inconsistent;

/// A binary qualitative constraint network over RCC8.
///
/// Absent pairs are the full relation. The diagonal starts at `{EQ}`, so a
/// constraint between a variable and itself is satisfiable only when it
/// admits `EQ`.
#[derive(Clone, PartialEq, Eq)]
pub struct Qcsp<V> {
    vars: Vec<V>,
    index: BTreeMap<V, usize>,
    // keyed (i, j) with i < j; the (j, i) edge is the converse
    edges: BTreeMap<(usize, usize), Relation>,
    diag: Vec<Relation>,
}

impl<V: Ord + Clone> Default for Qcsp<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V: Ord + Clone> Qcsp<V> {
    pub fn new() -> Self {
        Qcsp {
            vars: Vec::new(),
            index: BTreeMap::new(),
            edges: BTreeMap::new(),
            diag: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, v: V) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.vars.len();
        self.vars.push(v.clone());
        self.index.insert(v, i);
        self.diag.push(Relation::atom(Atom::EQ));
        i
    }

    /// Intersects the edge `a -> b` with `rel`, adding the variables if needed.
    pub fn constrain(&mut self, a: V, b: V, rel: Relation) {
        let i = self.add_variable(a);
        let j = self.add_variable(b);
        self.constrain_indices(i, j, rel);
    }

    fn constrain_indices(&mut self, i: usize, j: usize, rel: Relation) {
        if i == j {
            self.diag[i] = self.diag[i].intersection(rel);
        } else if i < j {
            let e = self.edges.entry((i, j)).or_insert(Relation::FULL);
            *e = e.intersection(rel);
        } else {
            let e = self.edges.entry((j, i)).or_insert(Relation::FULL);
            *e = e.intersection(rel.converse());
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[V] {
        &self.vars
    }

    pub fn contains_variable(&self, v: &V) -> bool {
        self.index.contains_key(v)
    }

    /// The relation currently stored on `a -> b` (full when unconstrained).
    pub fn relation(&self, a: &V, b: &V) -> Relation {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.relation_at(i, j),
            _ if a == b => Relation::atom(Atom::EQ),
            _ => Relation::FULL,
        }
    }

    fn relation_at(&self, i: usize, j: usize) -> Relation {
        if i == j {
            self.diag[i]
        } else if i < j {
            self.edges.get(&(i, j)).copied().unwrap_or(Relation::FULL)
        } else {
            self.edges
                .get(&(j, i))
                .map(|r| r.converse())
                .unwrap_or(Relation::FULL)
        }
    }

    /// Non-full edges as `(a, b, rel)` with `a` declared before `b`.
    pub fn constraints(&self) -> impl Iterator<Item = (&V, &V, Relation)> + '_ {
        self.edges
            .iter()
            .filter(|(_, r)| !r.is_full())
            .map(|(&(i, j), &r)| (&self.vars[i], &self.vars[j], r))
    }

    /// Every edge, including the diagonal, is a single atom.
    pub fn is_atomic(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.relation_at(i, j).is_atomic()))
            && self.diag.iter().all(|r| r.is_atomic())
    }

    /// Merges `other` into `self`, intersecting shared edges.
    pub fn extend_from(&mut self, other: &Qcsp<V>) {
        for v in &other.vars {
            self.add_variable(v.clone());
        }
        for (i, r) in other.diag.iter().enumerate() {
            let v = other.vars[i].clone();
            self.constrain(v.clone(), v, *r);
        }
        for (a, b, r) in other.constraints() {
            self.constrain(a.clone(), b.clone(), r);
        }
    }

    /// Edge-wise inclusion: every edge of `self` is a subset of the same edge in `other`.
    pub fn refines(&self, other: &Qcsp<V>) -> bool {
        let mut all: Vec<&V> = self.vars.iter().collect();
        all.extend(other.vars.iter().filter(|v| !self.index.contains_key(*v)));
        all.iter().all(|a| {
            all.iter()
                .all(|b| self.relation(a, b).is_subset(other.relation(a, b)))
        })
    }

    /// Groups of variables connected through non-full edges.
    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (&(i, j), r) in &self.edges {
            if !r.is_full() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    fn sub_matrix(&self, comp: &[usize]) -> Matrix {
        let n = comp.len();
        let mut m = Matrix {
            n,
            cells: vec![ALL; n * n],
        };
        for (a, &i) in comp.iter().enumerate() {
            for (b, &j) in comp.iter().enumerate() {
                m.set(a, b, self.relation_at(i, j).0);
            }
        }
        m
    }

    fn write_back(&mut self, comp: &[usize], m: &Matrix) {
        for (a, &i) in comp.iter().enumerate() {
            self.diag[i] = Relation(m.get(a, a));
            for (b, &j) in comp.iter().enumerate().skip(a + 1) {
                let (lo, hi, r) = if i < j {
                    (i, j, m.get(a, b))
                } else {
                    (j, i, m.get(b, a))
                };
                if r != ALL || self.edges.contains_key(&(lo, hi)) {
                    self.edges.insert((lo, hi), Relation(r));
                }
            }
        }
    }

    /// Algebraic closure: the greatest fixpoint of
    /// `C(i,j) <- C(i,j) & (C(i,k) ; C(k,j))`.
    ///
    /// Closure runs per connected component; edges between components stay full.
    pub fn path_consistency(&self) -> Result<Qcsp<V>, Inconsistent> {
        let mut out = self.clone();
        for comp in self.components() {
            let mut m = self.sub_matrix(&comp);
            m.close()?;
            out.write_back(&comp, &m);
        }
        Ok(out)
    }

    /// Complete decision by backtracking over atomic refinements with
    /// closure pruning. Atoms and the full relation belong to a tractable
    /// class on which closure decides consistency, so only the disjunctive
    /// constrained edges are split.
    pub fn is_consistent(&self) -> bool {
        self.components().iter().all(|comp| {
            let mut m = self.sub_matrix(comp);
            let open: Vec<(usize, usize)> = (0..comp.len())
                .flat_map(|a| (a + 1..comp.len()).map(move |b| (a, b)))
                .filter(|&(a, b)| {
                    let r = m.get(a, b);
                    r != ALL && r.count_ones() > 1
                })
                .collect();
            m.close().is_ok() && search_scenario(&mut m, &open)
        })
    }

    /// A refinement that is atomic and path-consistent inside every connected
    /// component, if the network is consistent. Edges between components are
    /// left full.
    pub fn find_scenario(&self) -> Option<Qcsp<V>> {
        let mut out = self.clone();
        for comp in self.components() {
            let mut m = self.sub_matrix(&comp);
            m.close().ok()?;
            let all: Vec<(usize, usize)> = (0..comp.len())
                .flat_map(|a| (a + 1..comp.len()).map(move |b| (a, b)))
                .collect();
            if !search_scenario(&mut m, &all) {
                return None;
            }
            out.write_back(&comp, &m);
        }
        Some(out)
    }
}

impl<V: fmt::Debug> fmt::Debug for Qcsp<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_map();
        for (&(i, j), r) in &self.edges {
            d.entry(&(&self.vars[i], &self.vars[j]), r);
        }
        d.finish()
    }
}

#[derive(Clone)]
struct Matrix {
    n: usize,
    cells: Vec<u8>,
}

impl Matrix {
    fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, r: u8) {
        self.cells[i * self.n + j] = r;
    }

    /// Tightens `(i, j)` and its converse; reports whether it changed.
    fn revise(&mut self, i: usize, j: usize, r: u8) -> Result<bool, Inconsistent> {
        let old = self.get(i, j);
        let new = old & r;
        if new == old {
            return Ok(false);
        }
        if new == 0 {
            return Err(Inconsistent);
        }
        self.set(i, j, new);
        self.set(j, i, converse_table()[new as usize]);
        Ok(true)
    }

    fn close(&mut self) -> Result<(), Inconsistent> {
        let n = self.n;
        let eq = Relation::atom(Atom::EQ).0;
        let mut queue = Vec::new();
        for i in 0..n {
            let d = self.get(i, i);
            if d == 0 {
                return Err(Inconsistent);
            }
            if d != eq {
                queue.push((i, i));
            }
            queue.extend((i + 1..n).filter(|&j| self.get(i, j) != ALL).map(|j| (i, j)));
        }
        self.propagate(queue)
    }

    fn propagate(&mut self, mut queue: Vec<(usize, usize)>) -> Result<(), Inconsistent> {
        let n = self.n;
        let table = composition_table();
        let comp = |a: u8, b: u8| table[a as usize * 256 + b as usize];
        let mut queued = vec![false; n * n];
        for &(i, j) in &queue {
            queued[i * n + j] = true;
        }
        while let Some((i, j)) = queue.pop() {
            queued[i * n + j] = false;
            let rij = self.get(i, j);
            if rij == ALL {
                continue;
            }
            let mut push = |a: usize, b: usize, queue: &mut Vec<(usize, usize)>| {
                let key = (a.min(b), a.max(b));
                if !queued[key.0 * n + key.1] {
                    queued[key.0 * n + key.1] = true;
                    queue.push(key);
                }
            };
            for k in 0..n {
                // (i,k) <- (i,j);(j,k)
                let jk = self.get(j, k);
                if jk != ALL && self.revise(i, k, comp(rij, jk))? {
                    push(i, k, &mut queue);
                }
                // (k,j) <- (k,i);(i,j)
                let ki = self.get(k, i);
                if ki != ALL && self.revise(k, j, comp(ki, rij))? {
                    push(k, j, &mut queue);
                }
            }
        }
        Ok(())
    }
}

/// Splits the still disjunctive edges among `open` into atoms, closing
/// after each choice.
fn search_scenario(m: &mut Matrix, open: &[(usize, usize)]) -> bool {
    let Some(pos) = open.iter().position(|&(i, j)| m.get(i, j).count_ones() > 1) else {
        return true;
    };
    let (i, j) = open[pos];
    let rel = m.get(i, j);
    for a in 0..8u8 {
        if rel & (1 << a) == 0 {
            continue;
        }
        let mut trial = m.clone();
        trial.set(i, j, 1 << a);
        trial.set(j, i, converse_table()[1 << a]);
        if trial.propagate(vec![(i, j)]).is_ok() && search_scenario(&mut trial, &open[pos + 1..]) {
            *m = trial;
            return true;
        }
    }
    false
}
