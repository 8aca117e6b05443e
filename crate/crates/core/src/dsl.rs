//! The `.aut` text format.
//!
//! ```text
//! nondet {
//!   directions: d1 d2;
//!   concepts: A;
//!   features: g;
//!   states: q0;
//!   initial: q0;
//!   accepting: q0;
//!   delta q0 -> { L={A}; X={TPP(g, d1 g)}; succ=(q0, q0) };
//! }
//! ```
//!
//! Alternating documents give one formula per state instead:
//! `delta q0 -> <d1:q0> & (A | <d2:q1>);`. Names are identifiers, `#`, or
//! bracketed tokens such as `[q0:1,q1:0]`. `//` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::automata::{
    AlternatingAutomaton, ChainTerm, Literal, NondetAutomaton, Signature, SpatialConstraint,
    Transition,
};
use crate::formula::{Formula, Generator};
use crate::relalg::{Atom, Relation};

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Alternating(AlternatingAutomaton),
    Nondet(NondetAutomaton),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        match self.expected.as_slice() {
            [] => {}
            [one] => write!(f, "expected {one}, ")?,
            many => write!(f, "expected one of {}, ", many.join(", "))?,
        }
        write!(f, "found {}", self.found)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Sym(char),
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: l, column: col });
        if c.is_whitespace() {
            bump!();
        } else if c == '/' {
            bump!();
            if chars.peek() != Some(&'/') {
                return Err(ParseError {
                    line: l,
                    column: col,
                    expected: vec!["`//`".into()],
                    found: "`/`".into(),
                });
            }
            while !matches!(chars.peek(), None | Some('\n')) {
                bump!();
            }
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !(c.is_ascii_alphanumeric() || c == '_') {
                    break;
                }
                s.push(c);
                bump!();
            }
            push(&mut out, Tok::Name(s));
        } else if c == '#' {
            bump!();
            push(&mut out, Tok::Name("#".into()));
        } else if c == '[' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    Some(']') => break,
                    Some('\n') | None => {
                        return Err(ParseError {
                            line: l,
                            column: col,
                            expected: vec!["`]`".into()],
                            found: "end of line".into(),
                        })
                    }
                    Some(c) => s.push(c),
                }
            }
            push(&mut out, Tok::Name(format!("[{s}]")));
        } else if c == '-' {
            bump!();
            if chars.peek() != Some(&'>') {
                return Err(ParseError {
                    line: l,
                    column: col,
                    expected: vec!["`->`".into()],
                    found: "`-`".into(),
                });
            }
            bump!();
            push(&mut out, Tok::Arrow);
        } else if "{};:(),|&!<>=".contains(c) {
            bump!();
            push(&mut out, Tok::Sym(c));
        } else {
            return Err(ParseError {
                line: l,
                column: col,
                expected: Vec::new(),
                found: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const SECTIONS: [&str; 8] = [
    "directions",
    "concepts",
    "features",
    "states",
    "initial",
    "accepting",
    "acceptall",
    "delta",
];

#[derive(Default)]
struct Raw {
    sections: BTreeMap<&'static str, (Vec<String>, Token)>,
    formulas: Vec<(String, Formula<Generator>, Token)>,
    transitions: Vec<(String, Transition, Token)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> Token {
        self.toks[self.pos].clone()
    }

    fn advance(&mut self) -> Token {
        let t = self.here();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        })
    }

    fn at(&self, c: char) -> bool {
        self.peek() == &Tok::Sym(c)
    }

    fn sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.at(c) {
            self.advance();
            Ok(())
        } else {
            self.fail(&[&format!("`{c}`")])
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.fail(&[what]),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.peek() == &Tok::Name(kw.into()) {
            self.advance();
            Ok(())
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn names_until_semicolon(&mut self, what: &str) -> Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        while !self.at(';') {
            match self.peek() {
                Tok::Name(_) => out.push(self.name(what)?),
                _ => return self.fail(&[what, "`;`"]),
            }
        }
        self.advance();
        Ok(out)
    }

    fn document(&mut self) -> Result<Document, ParseError> {
        let alternating = match self.peek() {
            Tok::Name(n) if n == "alternating" => true,
            Tok::Name(n) if n == "nondet" => false,
            _ => return self.fail(&["`alternating`", "`nondet`"]),
        };
        self.advance();
        self.sym('{')?;
        let mut raw = Raw::default();
        loop {
            if self.at('}') {
                break;
            }
            let head = self.here();
            let Tok::Name(word) = self.peek().clone() else {
                return self.fail(&["section name", "`}`"]);
            };
            let Some(&section) = SECTIONS.iter().find(|s| **s == word) else {
                let mut exp: Vec<String> = SECTIONS.iter().map(|s| format!("`{s}`")).collect();
                exp.push("`}`".into());
                let exp: Vec<&str> = exp.iter().map(String::as_str).collect();
                return self.fail(&exp);
            };
            self.advance();
            if section == "delta" {
                let state = self.name("state name")?;
                match self.peek() {
                    Tok::Arrow => {
                        self.advance();
                    }
                    _ => return self.fail(&["`->`"]),
                }
                if alternating {
                    let f = self.formula()?;
                    raw.formulas.push((state, f, head));
                } else {
                    loop {
                        let at = self.here();
                        let t = self.transition()?;
                        raw.transitions.push((state.clone(), t, at));
                        if !self.at('|') {
                            break;
                        }
                        self.advance();
                    }
                }
                self.sym(';')?;
                continue;
            }
            if raw.sections.contains_key(section) {
                return Err(ParseError {
                    line: head.line,
                    column: head.column,
                    expected: Vec::new(),
                    found: format!("second `{section}` section"),
                });
            }
            self.sym(':')?;
            let values = match section {
                "initial" | "acceptall" => {
                    let n = self.name("state name")?;
                    self.sym(';')?;
                    vec![n]
                }
                _ => self.names_until_semicolon("name")?,
            };
            raw.sections.insert(section, (values, head));
        }
        let close = self.advance();
        if self.peek() != &Tok::Eof {
            return self.fail(&["end of input"]);
        }
        self.assemble(alternating, raw, close)
    }

    fn transition(&mut self) -> Result<Transition, ParseError> {
        self.sym('{')?;
        self.keyword("L")?;
        self.sym('=')?;
        self.sym('{')?;
        let mut literals = BTreeSet::new();
        while !self.at('}') {
            let positive = !self.at('!');
            if !positive {
                self.advance();
            }
            let concept = self.name("literal")?;
            literals.insert(Literal { concept, positive });
            if self.at(',') {
                self.advance();
            }
        }
        self.advance();
        self.sym(';')?;
        self.keyword("X")?;
        self.sym('=')?;
        self.sym('{')?;
        let mut constraints = BTreeSet::new();
        while !self.at('}') {
            constraints.insert(self.constraint(None)?);
            if self.at(',') {
                self.advance();
            }
        }
        self.advance();
        self.sym(';')?;
        self.keyword("succ")?;
        self.sym('=')?;
        self.sym('(')?;
        let mut succ = vec![self.name("state name")?];
        while self.at(',') {
            self.advance();
            succ.push(self.name("state name")?);
        }
        self.sym(')')?;
        if self.at(';') {
            self.advance();
        }
        self.sym('}')?;
        Ok(Transition {
            literals,
            constraints,
            succ,
        })
    }

    fn relation(&mut self) -> Result<Relation, ParseError> {
        let atom = |p: &Parser, n: &str| match Atom::from_name(n) {
            Some(a) => Ok(a),
            None => p.fail(&["RCC8 atom"]),
        };
        if self.at('{') {
            self.advance();
            let mut rel = Relation::EMPTY;
            loop {
                let Tok::Name(n) = self.peek().clone() else {
                    return self.fail(&["RCC8 atom"]);
                };
                rel = rel.union(atom(self, &n)?.into());
                self.advance();
                if self.at(',') {
                    self.advance();
                    continue;
                }
                self.sym('}')?;
                return Ok(rel);
            }
        }
        let Tok::Name(n) = self.peek().clone() else {
            return self.fail(&["RCC8 atom", "`{`"]);
        };
        let a = atom(self, &n)?;
        self.advance();
        Ok(a.into())
    }

    fn chain(&mut self) -> Result<ChainTerm, ParseError> {
        let mut parts = vec![self.name("direction or feature")?];
        while let Tok::Name(_) = self.peek() {
            parts.push(self.name("direction or feature")?);
        }
        let feature = parts.pop().unwrap_or_default();
        Ok(ChainTerm {
            path: parts,
            feature,
        })
    }

    /// `REL(chain, chain)`; `rel` is given when the caller already read it.
    fn constraint(&mut self, rel: Option<Relation>) -> Result<SpatialConstraint, ParseError> {
        let rel = match rel {
            Some(r) => r,
            None => self.relation()?,
        };
        self.sym('(')?;
        let a = self.chain()?;
        self.sym(',')?;
        let b = self.chain()?;
        self.sym(')')?;
        Ok(SpatialConstraint::new(rel, a, b))
    }

    fn formula(&mut self) -> Result<Formula<Generator>, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.at('|') {
            self.advance();
            parts.push(self.conjunction()?);
        }
        Ok(flatten(parts, false))
    }

    fn conjunction(&mut self) -> Result<Formula<Generator>, ParseError> {
        let mut parts = vec![self.factor()?];
        while self.at('&') {
            self.advance();
            parts.push(self.factor()?);
        }
        Ok(flatten(parts, true))
    }

    fn factor(&mut self) -> Result<Formula<Generator>, ParseError> {
        match self.peek().clone() {
            Tok::Sym('(') => {
                self.advance();
                let f = self.formula()?;
                self.sym(')')?;
                Ok(f)
            }
            Tok::Sym('<') => {
                self.advance();
                let direction = self.name("direction")?;
                self.sym(':')?;
                let state = self.name("state name")?;
                self.sym('>')?;
                Ok(Formula::Gen(Generator::Move { direction, state }))
            }
            Tok::Sym('!') => {
                self.advance();
                let c = self.name("concept")?;
                Ok(Formula::Gen(Generator::Literal(Literal::neg(c))))
            }
            Tok::Sym('{') => Ok(Formula::Gen(Generator::Constraint(self.constraint(None)?))),
            Tok::Name(n) => {
                if self.toks[self.pos + 1].tok == Tok::Sym('(') {
                    let rel = self.relation()?;
                    return Ok(Formula::Gen(Generator::Constraint(self.constraint(Some(rel))?)));
                }
                self.advance();
                Ok(Formula::Gen(Generator::Literal(Literal::pos(n))))
            }
            _ => self.fail(&["`(`", "`<`", "`!`", "concept", "constraint"]),
        }
    }

    fn assemble(
        &self,
        alternating: bool,
        mut raw: Raw,
        close: Token,
    ) -> Result<Document, ParseError> {
        let missing = |s: &str| ParseError {
            line: close.line,
            column: close.column,
            expected: vec![format!("`{s}` section")],
            found: "`}`".into(),
        };
        let at = |t: &Token, found: String| ParseError {
            line: t.line,
            column: t.column,
            expected: Vec::new(),
            found,
        };
        if alternating {
            if let Some((_, t)) = raw.sections.get("acceptall") {
                return Err(at(t, "`acceptall` in an alternating automaton".into()));
            }
        }
        let mut take = |s: &'static str| raw.sections.remove(s).map(|(v, _)| v);
        let directions = take("directions").ok_or_else(|| missing("directions"))?;
        let states = take("states").ok_or_else(|| missing("states"))?;
        let initial = take("initial").ok_or_else(|| missing("initial"))?.remove(0);
        let signature = Signature {
            directions,
            concepts: take("concepts").unwrap_or_default(),
            features: take("features").unwrap_or_default(),
        };
        let accepting: BTreeSet<String> = take("accepting").unwrap_or_default().into_iter().collect();
        let accept_all = take("acceptall").map(|mut v| v.remove(0));
        let transitions = raw.transitions;
        let formulas = raw.formulas;
        if signature.directions.is_empty() {
            return Err(missing("directions"));
        }
        let k = signature.k();
        if alternating {
            let mut delta = BTreeMap::new();
            for (q, f, t) in formulas {
                if delta.insert(q.clone(), f).is_some() {
                    return Err(at(&t, format!("second formula for state `{q}`")));
                }
            }
            return Ok(Document::Alternating(AlternatingAutomaton {
                signature,
                states,
                initial,
                accepting,
                delta,
            }));
        }
        let mut delta: BTreeMap<String, Vec<Transition>> =
            states.iter().map(|q| (q.clone(), Vec::new())).collect();
        for (q, t, tok) in transitions {
            if t.succ.len() != k {
                return Err(at(
                    &tok,
                    format!("{} successors where {k} directions are declared", t.succ.len()),
                ));
            }
            delta.entry(q).or_default().push(t);
        }
        Ok(Document::Nondet(NondetAutomaton {
            signature,
            states,
            initial,
            accepting,
            accept_all,
            delta,
        }))
    }
}

fn flatten(parts: Vec<Formula<Generator>>, and: bool) -> Formula<Generator> {
    if parts.len() == 1 {
        return parts.into_iter().next().expect("one part");
    }
    let mut out = Vec::new();
    for p in parts {
        match (p, and) {
            (Formula::And(v), true) | (Formula::Or(v), false) => out.extend(v),
            (p, _) => out.push(p),
        }
    }
    if and {
        Formula::And(out)
    } else {
        Formula::Or(out)
    }
}

pub fn parse(text: &str) -> Result<Document, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.document()
}

fn header(out: &mut String, kind: &str, sig: &Signature, states: &[String], initial: &str, accepting: &BTreeSet<String>) {
    let list = |v: &mut dyn Iterator<Item = &String>| v.map(String::as_str).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{kind} {{");
    let _ = writeln!(out, "  directions: {};", list(&mut sig.directions.iter()));
    let _ = writeln!(out, "  concepts: {};", list(&mut sig.concepts.iter()));
    let _ = writeln!(out, "  features: {};", list(&mut sig.features.iter()));
    let _ = writeln!(out, "  states: {};", list(&mut states.iter()));
    let _ = writeln!(out, "  initial: {initial};");
    let _ = writeln!(out, "  accepting: {};", list(&mut accepting.iter()));
}

pub fn print_nondet(a: &NondetAutomaton) -> String {
    let mut out = String::new();
    header(&mut out, "nondet", &a.signature, &a.states, &a.initial, &a.accepting);
    if let Some(q) = &a.accept_all {
        let _ = writeln!(out, "  acceptall: {q};");
    }
    for q in &a.states {
        let ts = a.transitions(q);
        if ts.is_empty() {
            continue;
        }
        let _ = write!(out, "  delta {q} ->");
        for (i, t) in ts.iter().enumerate() {
            if i > 0 {
                out.push_str("\n    |");
            }
            let lits: Vec<String> = t.literals.iter().map(ToString::to_string).collect();
            let cs: Vec<String> = t.constraints.iter().map(ToString::to_string).collect();
            let _ = write!(
                out,
                " {{ L={{{}}}; X={{{}}}; succ=({}) }}",
                lits.join(" "),
                cs.join(" "),
                t.succ.join(", ")
            );
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    out
}

pub fn print_alternating(a: &AlternatingAutomaton) -> String {
    let mut out = String::new();
    header(&mut out, "alternating", &a.signature, &a.states, &a.initial, &a.accepting);
    for q in &a.states {
        if let Some(f) = a.delta.get(q) {
            let _ = writeln!(out, "  delta {q} -> {f};");
        }
    }
    out.push_str("}\n");
    out
}

pub fn print(doc: &Document) -> String {
    match doc {
        Document::Alternating(a) => print_alternating(a),
        Document::Nondet(a) => print_nondet(a),
    }
}
