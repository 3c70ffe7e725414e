//! Structural classification of finite algebras: commutativity,
//! associativity, identities, groups, latin squares, and whether the three
//! operations coincide in the sense of C0.
//!
//! Every check is an exhaustive scan. A failed check reports the
//! lexicographically first failing tuple.

use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::models::{FiniteAlgebra, ModelError, Table};
use crate::terms::OpSymbol;

/// Outcome of a universally quantified check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
}

impl Check {
    fn pass() -> Check {
        Check { holds: true, witness: None }
    }

    fn fail(witness: Vec<usize>) -> Check {
        Check { holds: false, witness: Some(witness) }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            None => f.write_str("yes"),
            Some(w) => write!(f, "no {}", tuple(w)),
        }
    }
}

fn tuple(w: &[usize]) -> String {
    let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

pub fn is_commutative(alg: &FiniteAlgebra, op: OpSymbol) -> Result<Check, ModelError> {
    let t = alg.require(op)?;
    let n = alg.size();
    for a in 0..n {
        for b in 0..n {
            if t.get(a, b) != t.get(b, a) {
                return Ok(Check::fail(vec![a, b]));
            }
        }
    }
    Ok(Check::pass())
}

pub fn is_associative(alg: &FiniteAlgebra, op: OpSymbol) -> Result<Check, ModelError> {
    let t = alg.require(op)?;
    let n = alg.size();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if t.get(t.get(a, b), c) != t.get(a, t.get(b, c)) {
                    return Ok(Check::fail(vec![a, b, c]));
                }
            }
        }
    }
    Ok(Check::pass())
}

/// Two-sided identities: all `e` with `a∘e = e∘a = a` for every `a`.
pub fn identity_elements(alg: &FiniteAlgebra, op: OpSymbol) -> Result<Vec<usize>, ModelError> {
    let t = alg.require(op)?;
    let n = alg.size();
    Ok((0..n).filter(|&e| (0..n).all(|a| t.get(a, e) == a && t.get(e, a) == a)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupFailure {
    NotAssociative(Vec<usize>),
    NoIdentity,
    NoInverse(usize),
    NotCommutative(Vec<usize>),
}

impl fmt::Display for GroupFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFailure::NotAssociative(w) => write!(f, "not associative at {}", tuple(w)),
            GroupFailure::NoIdentity => f.write_str("no identity element"),
            GroupFailure::NoInverse(x) => write!(f, "element {x} has no inverse"),
            GroupFailure::NotCommutative(w) => write!(f, "not commutative at {}", tuple(w)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupCheck {
    pub holds: bool,
    pub reason: Option<GroupFailure>,
}

impl Serialize for GroupCheck {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("holds", &self.holds)?;
        if let Some(r) = &self.reason {
            m.serialize_entry("reason", &r.to_string())?;
        }
        m.end()
    }
}

impl fmt::Display for GroupCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.reason {
            None => f.write_str("yes"),
            Some(r) => write!(f, "no ({r})"),
        }
    }
}

fn group_failure(t: &Table, n: usize, alg: &FiniteAlgebra, op: OpSymbol) -> Result<Option<GroupFailure>, ModelError> {
    let assoc = is_associative(alg, op)?;
    if let Some(w) = assoc.witness {
        return Ok(Some(GroupFailure::NotAssociative(w)));
    }
    let Some(&e) = identity_elements(alg, op)?.first() else {
        return Ok(Some(GroupFailure::NoIdentity));
    };
    for a in 0..n {
        if !(0..n).any(|b| t.get(a, b) == e && t.get(b, a) == e) {
            return Ok(Some(GroupFailure::NoInverse(a)));
        }
    }
    Ok(None)
}

/// Associative, with a two-sided identity and two-sided inverses.
pub fn is_group(alg: &FiniteAlgebra, op: OpSymbol) -> Result<GroupCheck, ModelError> {
    let t = alg.require(op)?;
    let reason = group_failure(t, alg.size(), alg, op)?;
    Ok(GroupCheck { holds: reason.is_none(), reason })
}

pub fn is_abelian_group(alg: &FiniteAlgebra, op: OpSymbol) -> Result<GroupCheck, ModelError> {
    let group = is_group(alg, op)?;
    if !group.holds {
        return Ok(group);
    }
    let comm = is_commutative(alg, op)?;
    Ok(match comm.witness {
        None => GroupCheck { holds: true, reason: None },
        Some(w) => GroupCheck { holds: false, reason: Some(GroupFailure::NotCommutative(w)) },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Line {
    Row,
    Column,
}

/// A repeated entry: in the given row (or column) `index`, positions `first`
/// and `second` hold the same element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatinWitness {
    pub line: Line,
    pub index: usize,
    pub first: usize,
    pub second: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatinCheck {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LatinWitness>,
}

impl fmt::Display for LatinCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            None => f.write_str("yes"),
            Some(w) => {
                let (line, pos) = match w.line {
                    Line::Row => ("row", "columns"),
                    Line::Column => ("column", "rows"),
                };
                write!(f, "no ({line} {} repeats at {pos} {},{})", w.index, w.first, w.second)
            }
        }
    }
}

/// Every row and every column is a permutation of the carrier. Rows are
/// scanned before columns.
pub fn is_latin_square(alg: &FiniteAlgebra, op: OpSymbol) -> Result<LatinCheck, ModelError> {
    let t = alg.require(op)?;
    let n = alg.size();
    for (line, get) in [
        (Line::Row, &(|i: usize, j: usize| t.get(i, j)) as &dyn Fn(usize, usize) -> usize),
        (Line::Column, &|i: usize, j: usize| t.get(j, i)),
    ] {
        for index in 0..n {
            for first in 0..n {
                for second in first + 1..n {
                    if get(index, first) == get(index, second) {
                        let witness = LatinWitness { line, index, first, second };
                        return Ok(LatinCheck { holds: false, witness: Some(witness) });
                    }
                }
            }
        }
    }
    Ok(LatinCheck { holds: true, witness: None })
}

/// `ab = a:b` and `a/b = ba` for all `a, b`: the content of C0's equations.
pub fn ops_coincide(alg: &FiniteAlgebra) -> Result<Check, ModelError> {
    let prod = alg.require(OpSymbol::Prod)?;
    let ldiv = alg.require(OpSymbol::LDiv)?;
    let rdiv = alg.require(OpSymbol::RDiv)?;
    let n = alg.size();
    for a in 0..n {
        for b in 0..n {
            if prod.get(a, b) != ldiv.get(a, b) || rdiv.get(a, b) != prod.get(b, a) {
                return Ok(Check::fail(vec![a, b]));
            }
        }
    }
    Ok(Check::pass())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpReport {
    pub is_commutative: Check,
    pub is_associative: Check,
    pub identity_elements: Vec<usize>,
    pub is_group: GroupCheck,
    pub is_abelian_group: GroupCheck,
    pub is_latin_square: LatinCheck,
}

pub fn classify_op(alg: &FiniteAlgebra, op: OpSymbol) -> Result<OpReport, ModelError> {
    Ok(OpReport {
        is_commutative: is_commutative(alg, op)?,
        is_associative: is_associative(alg, op)?,
        identity_elements: identity_elements(alg, op)?,
        is_group: is_group(alg, op)?,
        is_abelian_group: is_abelian_group(alg, op)?,
        is_latin_square: is_latin_square(alg, op)?,
    })
}

/// Per-operation reports (absent when the table is missing) and the
/// coincidence flag (absent unless all three tables exist).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub size: usize,
    pub ops: [Option<OpReport>; 3],
    pub ops_coincide: Option<Check>,
}

const NOT_APPLICABLE: &str = "not-applicable";

impl Serialize for StructureReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("size", &self.size)?;
        for op in OpSymbol::ALL {
            match &self.ops[op.index()] {
                Some(r) => m.serialize_entry(op.name(), r)?,
                None => m.serialize_entry(op.name(), NOT_APPLICABLE)?,
            }
        }
        match &self.ops_coincide {
            Some(c) => m.serialize_entry("ops_coincide", c)?,
            None => m.serialize_entry("ops_coincide", NOT_APPLICABLE)?,
        }
        m.end()
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "size {}", self.size)?;
        for op in OpSymbol::ALL {
            match &self.ops[op.index()] {
                None => writeln!(f, "{op}: not applicable")?,
                Some(r) => {
                    let ids: Vec<String> = r.identity_elements.iter().map(|e| e.to_string()).collect();
                    writeln!(
                        f,
                        "{op}: commutative {}; associative {}; identity {{{}}}; group {}; abelian group {}; latin square {}",
                        r.is_commutative,
                        r.is_associative,
                        ids.join(","),
                        r.is_group,
                        r.is_abelian_group,
                        r.is_latin_square
                    )?;
                }
            }
        }
        match &self.ops_coincide {
            None => write!(f, "ops_coincide: not applicable"),
            Some(c) => write!(f, "ops_coincide: {c}"),
        }
    }
}

pub fn classify_structure(alg: &FiniteAlgebra) -> StructureReport {
    let ops = OpSymbol::ALL.map(|op| classify_op(alg, op).ok());
    StructureReport { size: alg.size(), ops, ops_coincide: ops_coincide(alg).ok() }
}
