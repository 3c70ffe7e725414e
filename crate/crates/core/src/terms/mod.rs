//! Terms and equations over the signature {product, left division, right division}.
//!
//! Variables are single lowercase letters. Every operation is binary, and there
//! are no binders, so substitution is plain structural replacement.

mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::{parse_equation, parse_term, ParseError};

/// One of the three binary operation symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpSymbol {
    /// Juxtaposition `ab` (also `a*b`, `a.b`).
    Prod,
    /// Left division `a:b`.
    LDiv,
    /// Right division `a/b`, the inline form of "a over b".
    RDiv,
}

impl OpSymbol {
    pub const ALL: [OpSymbol; 3] = [OpSymbol::Prod, OpSymbol::LDiv, OpSymbol::RDiv];

    /// Stable lowercase name used in serialized records.
    pub fn name(self) -> &'static str {
        match self {
            OpSymbol::Prod => "prod",
            OpSymbol::LDiv => "ldiv",
            OpSymbol::RDiv => "rdiv",
        }
    }

    pub fn from_name(name: &str) -> Option<OpSymbol> {
        match name.to_ascii_lowercase().as_str() {
            "prod" => Some(OpSymbol::Prod),
            "ldiv" => Some(OpSymbol::LDiv),
            "rdiv" => Some(OpSymbol::RDiv),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for OpSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A small set of operation symbols.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpSet(u8);

impl OpSet {
    pub const EMPTY: OpSet = OpSet(0);
    pub const ALL: OpSet = OpSet(0b111);

    pub fn insert(&mut self, op: OpSymbol) {
        self.0 |= 1 << op.index();
    }

    pub fn contains(self, op: OpSymbol) -> bool {
        self.0 & (1 << op.index()) != 0
    }

    pub fn union(self, other: OpSet) -> OpSet {
        OpSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: OpSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in the fixed order prod, ldiv, rdiv.
    pub fn iter(self) -> impl Iterator<Item = OpSymbol> {
        OpSymbol::ALL.into_iter().filter(move |op| self.contains(*op))
    }
}

impl FromIterator<OpSymbol> for OpSet {
    fn from_iter<I: IntoIterator<Item = OpSymbol>>(iter: I) -> Self {
        let mut set = OpSet::EMPTY;
        for op in iter {
            set.insert(op);
        }
        set
    }
}

/// A variable: a single lowercase ASCII letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(char);

impl Var {
    pub fn new(name: char) -> Result<Var, TermError> {
        if name.is_ascii_lowercase() {
            Ok(Var(name))
        } else {
            Err(TermError::BadVariable(name))
        }
    }

    /// The `i`-th letter of the alphabet. Panics past `z`.
    pub fn nth(i: usize) -> Var {
        assert!(i < 26, "only 26 variable names exist");
        Var((b'a' + i as u8) as char)
    }

    pub fn name(self) -> char {
        self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Var {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Mapping from variables to values: element indices when evaluating, terms
/// when substituting.
pub type Assignment<T> = BTreeMap<Var, T>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("invalid variable name {0:?}: variables are single lowercase letters")]
    BadVariable(char),
    #[error("no binding for variable {0}")]
    Unbound(Var),
}

/// A term: a variable or a binary operation applied to two terms.
///
/// The derived ordering (variables first, then by operation, left, right) is
/// the lexicographic order used for witnesses and candidate identities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Apply(OpSymbol, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: char) -> Term {
        Term::Var(Var::new(name).expect("lowercase variable name"))
    }

    pub fn apply(op: OpSymbol, left: Term, right: Term) -> Term {
        Term::Apply(op, Box::new(left), Box::new(right))
    }

    pub fn prod(left: Term, right: Term) -> Term {
        Term::apply(OpSymbol::Prod, left, right)
    }

    pub fn ldiv(left: Term, right: Term) -> Term {
        Term::apply(OpSymbol::LDiv, left, right)
    }

    pub fn rdiv(left: Term, right: Term) -> Term {
        Term::apply(OpSymbol::RDiv, left, right)
    }

    /// Variables have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Apply(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Apply(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    pub fn ops(&self) -> OpSet {
        let mut set = OpSet::EMPTY;
        self.collect_ops(&mut set);
        set
    }

    fn collect_ops(&self, set: &mut OpSet) {
        if let Term::Apply(op, l, r) = self {
            set.insert(*op);
            l.collect_ops(set);
            r.collect_ops(set);
        }
    }

    pub fn contains_var(&self, v: Var) -> bool {
        match self {
            Term::Var(w) => *w == v,
            Term::Apply(_, l, r) => l.contains_var(v) || r.contains_var(v),
        }
    }

    /// Distinct variables in first-occurrence (left to right) order.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.push_variables(&mut out);
        out
    }

    pub(crate) fn push_variables(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Apply(_, l, r) => {
                l.push_variables(out);
                r.push_variables(out);
            }
        }
    }

    /// Simultaneous substitution. Every variable of `self` must be bound.
    pub fn substitute(&self, s: &Assignment<Term>) -> Result<Term, TermError> {
        match self {
            Term::Var(v) => s.get(v).cloned().ok_or(TermError::Unbound(*v)),
            Term::Apply(op, l, r) => Ok(Term::apply(*op, l.substitute(s)?, r.substitute(s)?)),
        }
    }

    /// Substitution that leaves unbound variables in place.
    pub fn substitute_partial(&self, s: &Assignment<Term>) -> Term {
        match self {
            Term::Var(v) => s.get(v).cloned().unwrap_or(Term::Var(*v)),
            Term::Apply(op, l, r) => {
                Term::apply(*op, l.substitute_partial(s), r.substitute_partial(s))
            }
        }
    }

    /// Renames variables through `map`; unmapped variables stay put.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Term {
        match self {
            Term::Var(v) => Term::Var(*map.get(v).unwrap_or(v)),
            Term::Apply(op, l, r) => Term::apply(*op, l.rename(map), r.rename(map)),
        }
    }

    /// Subterm at a path of child indices (0 = left, 1 = right).
    pub fn at(&self, path: &[u8]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => match self {
                Term::Var(_) => None,
                Term::Apply(_, l, r) => if i == 0 { l } else { r }.at(rest),
            },
        }
    }

    /// Copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[u8], with: Term) -> Term {
        match path.split_first() {
            None => with,
            Some((&i, rest)) => match self {
                Term::Var(_) => panic!("path descends into a variable"),
                Term::Apply(op, l, r) => {
                    if i == 0 {
                        Term::apply(*op, l.replace_at(rest, with), (**r).clone())
                    } else {
                        Term::apply(*op, (**l).clone(), r.replace_at(rest, with))
                    }
                }
            },
        }
    }
}

/// Free-function form of [`Term::variables`].
pub fn variables_of(t: &Term) -> Vec<Var> {
    t.variables()
}

/// Free-function form of [`Term::substitute`].
pub fn substitute(t: &Term, s: &Assignment<Term>) -> Result<Term, TermError> {
    t.substitute(s)
}

/// Canonical text form with minimal parentheses.
///
/// Division binds tighter than juxtaposition and never chains, so a division
/// operand is parenthesized unless it is a variable. Products associate to
/// the left; only a product in right position needs parentheses.
pub fn format_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, &mut out);
    out
}

fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::Var(v) => out.push(v.0),
        Term::Apply(OpSymbol::Prod, l, r) => {
            write_term(l, out);
            out.push(' ');
            if matches!(**r, Term::Apply(OpSymbol::Prod, ..)) {
                out.push('(');
                write_term(r, out);
                out.push(')');
            } else {
                write_term(r, out);
            }
        }
        Term::Apply(op, l, r) => {
            write_division_operand(l, out);
            out.push(if *op == OpSymbol::LDiv { ':' } else { '/' });
            write_division_operand(r, out);
        }
    }
}

fn write_division_operand(t: &Term, out: &mut String) {
    if let Term::Var(v) = t {
        out.push(v.0);
    } else {
        out.push('(');
        write_term(t, out);
        out.push(')');
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_term(self))
    }
}

/// An identity `lhs = rhs`, implicitly universally quantified.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Equation {
        Equation { lhs, rhs }
    }

    pub fn flipped(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }

    pub fn ops(&self) -> OpSet {
        self.lhs.ops().union(self.rhs.ops())
    }

    pub fn depth(&self) -> usize {
        self.lhs.depth().max(self.rhs.depth())
    }

    /// Distinct variables, first occurrence in lhs then rhs.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = self.lhs.variables();
        self.rhs.push_variables(&mut out);
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs == self.rhs
    }

    /// Renames variables to `a, b, c, ...` in first-occurrence order, skipping
    /// the names in `fixed`, which are left untouched.
    pub fn normalized(&self, fixed: &[Var]) -> Equation {
        let mut map = BTreeMap::new();
        let mut next = 0;
        for v in self.variables() {
            if fixed.contains(&v) {
                continue;
            }
            while fixed.contains(&Var::nth(next)) {
                next += 1;
            }
            map.insert(v, Var::nth(next));
            next += 1;
        }
        Equation::new(self.lhs.rename(&map), self.rhs.rename(&map))
    }

    /// Representative of the class of `self` under renaming and symmetry of
    /// `=`: the smaller of the two normalized orientations.
    pub fn canonical(&self, fixed: &[Var]) -> Equation {
        let forward = self.normalized(fixed);
        let backward = self.flipped().normalized(fixed);
        forward.min(backward)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl Serialize for Equation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
