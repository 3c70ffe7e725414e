//! Whether an identity follows from an axiom system: semantically (no
//! countermodel up to a size bound) and syntactically (a bounded equational
//! derivation).

mod check;
mod derive;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::ControlFlow;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::axioms::AxiomSystem;
use crate::models::compiled::CompiledEquation;
use crate::models::{AlgebraRecord, EnumOptions, FiniteAlgebra, ModelError, ModelSearch};
use crate::terms::{Assignment, Equation, OpSet, OpSymbol, Term, Var};

pub use check::{check_derivation, DerivationError};
pub use derive::{derive, DeriveBudget, SearchBounds};

/// Inference rules of equational logic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    AxiomInstance,
    Reflexivity,
    Symmetry,
    Transitivity,
    Congruence,
    Substitution,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::AxiomInstance => "axiom-instance",
            Rule::Reflexivity => "reflexivity",
            Rule::Symmetry => "symmetry",
            Rule::Transitivity => "transitivity",
            Rule::Congruence => "congruence",
            Rule::Substitution => "substitution",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivationStep {
    pub rule: Rule,
    pub premises: Vec<usize>,
    pub equation: Equation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// A derivation whose last step concludes the candidate.
    Proved(Vec<DerivationStep>),
    Refuted { countermodel: FiniteAlgebra, witness: Assignment<usize> },
    /// No countermodel with at most this many elements. Not a proof.
    HoldsUpTo(usize),
    Unknown(SearchBounds),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Proved(_) => "proved",
            Verdict::Refuted { .. } => "refuted",
            Verdict::HoldsUpTo(_) => "holds-up-to",
            Verdict::Unknown(_) => "unknown",
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("verdict", self.label())?;
        match self {
            Verdict::Proved(steps) => m.serialize_entry("derivation", steps)?,
            Verdict::Refuted { countermodel, witness } => {
                m.serialize_entry("countermodel", &AlgebraRecord::from(countermodel))?;
                m.serialize_entry("witness", witness)?;
            }
            Verdict::HoldsUpTo(k) => m.serialize_entry("max_size", k)?,
            Verdict::Unknown(bounds) => m.serialize_entry("bounds", bounds)?,
        }
        m.end()
    }
}

fn show_assignment(w: &Assignment<usize>) -> String {
    let parts: Vec<String> = w.iter().map(|(v, x)| format!("{v}={x}")).collect();
    parts.join(", ")
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Proved(steps) => {
                let plural = if steps.len() == 1 { "" } else { "s" };
                write!(f, "proved in {} step{plural}", steps.len())?;
                for (i, s) in steps.iter().enumerate() {
                    write!(f, "\n  {i}. {}", s.rule)?;
                    if !s.premises.is_empty() {
                        let p: Vec<String> = s.premises.iter().map(|p| p.to_string()).collect();
                        write!(f, " [{}]", p.join(","))?;
                    }
                    write!(f, ": {}", s.equation)?;
                }
                Ok(())
            }
            Verdict::Refuted { countermodel, witness } => write!(
                f,
                "refuted at size {} with {}\n{}",
                countermodel.size(),
                show_assignment(witness),
                countermodel.to_record_json()
            ),
            Verdict::HoldsUpTo(k) => write!(f, "holds in every model of size <= {k} (not a proof)"),
            Verdict::Unknown(b) => write!(
                f,
                "unknown: no derivation within term depth {}, {} steps, {} terms ({} visited{})",
                b.budget.max_term_depth,
                b.budget.max_steps,
                b.budget.max_terms,
                b.terms_visited,
                if b.exhausted { ", search space exhausted" } else { "" }
            ),
        }
    }
}

fn search_options(width: usize, extra_ops: OpSet) -> EnumOptions {
    EnumOptions { up_to_iso: true, parallel_width: width, extra_ops, ..EnumOptions::default() }
}

/// Looks for a model of `sys` with at most `max_size` elements violating
/// `cand`, sizes ascending, models in enumeration order. Constants of `sys`
/// occurring in `cand` are bound by the model.
pub fn semantic_consequence(sys: &AxiomSystem, cand: &Equation, max_size: usize) -> Result<Verdict, ModelError> {
    semantic_consequence_with(sys, cand, max_size, 1)
}

pub fn semantic_consequence_with(
    sys: &AxiomSystem,
    cand: &Equation,
    max_size: usize,
    width: usize,
) -> Result<Verdict, ModelError> {
    if max_size == 0 {
        return Err(ModelError::EmptyCarrier);
    }
    if cand.is_trivial() {
        return Ok(Verdict::HoldsUpTo(max_size));
    }
    for n in 1..=max_size {
        let search = ModelSearch::new(sys, n, &search_options(width, cand.ops()))?;
        let layout = search.layout();
        let compiled = CompiledEquation::new(cand, layout);
        let mut found = None;
        search.for_each_cells(|cells| match compiled.first_violation(layout, cells) {
            Some(vals) => {
                found = Some((cells.to_vec(), vals));
                ControlFlow::Break(())
            }
            None => ControlFlow::Continue(()),
        });
        if let Some((cells, vals)) = found {
            let witness = compiled.vars.iter().zip(vals).map(|(v, x)| (*v, x as usize)).collect();
            return Ok(Verdict::Refuted { countermodel: FiniteAlgebra::from_cells(layout, &cells), witness });
        }
    }
    Ok(Verdict::HoldsUpTo(max_size))
}

/// Bounds on candidate identities: variables drawn from the first
/// `max_vars` letters, terms of depth at most `max_depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CandidateSpace {
    pub max_vars: usize,
    pub max_depth: usize,
}

impl Default for CandidateSpace {
    fn default() -> Self {
        CandidateSpace { max_vars: 2, max_depth: 1 }
    }
}

impl fmt::Display for CandidateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vars<={} depth<={}", self.max_vars, self.max_depth)
    }
}

/// The letters used for candidate variables: the first `k` not in `fixed`.
pub fn candidate_variables(k: usize, fixed: &[Var]) -> Vec<Var> {
    (0..26).map(Var::nth).filter(|v| !fixed.contains(v)).take(k).collect()
}

/// All terms within `space`, sorted.
pub fn candidate_terms(space: CandidateSpace, fixed: &[Var]) -> Vec<Term> {
    let atoms: Vec<Term> = candidate_variables(space.max_vars, fixed).into_iter().map(Term::Var).collect();
    let mut level: Vec<Term> = atoms.clone();
    for _ in 0..space.max_depth {
        let mut next: BTreeSet<Term> = atoms.iter().cloned().collect();
        for op in OpSymbol::ALL {
            for l in &level {
                for r in &level {
                    next.insert(Term::apply(op, l.clone(), r.clone()));
                }
            }
        }
        level = next.into_iter().collect();
    }
    level.sort();
    level
}

/// Every identity within `space`, one per class under renaming of variables
/// and symmetry of `=`, in the canonical form of [`Equation::canonical`],
/// sorted.
pub fn candidate_identities(space: CandidateSpace, fixed: &[Var]) -> Vec<Equation> {
    let terms = candidate_terms(space, fixed);
    let mut out = BTreeSet::new();
    for (i, l) in terms.iter().enumerate() {
        for r in &terms[i..] {
            out.insert(Equation::new(l.clone(), r.clone()).canonical(fixed));
        }
    }
    out.into_iter().collect()
}

/// The candidates of `space` that hold in every model of `sys` with at most
/// `model_size` elements, sorted.
pub fn consequence_set(sys: &AxiomSystem, space: CandidateSpace, model_size: usize) -> Result<Vec<Equation>, ModelError> {
    consequence_set_with(sys, space, model_size, 1)
}

pub fn consequence_set_with(
    sys: &AxiomSystem,
    space: CandidateSpace,
    model_size: usize,
    width: usize,
) -> Result<Vec<Equation>, ModelError> {
    if model_size == 0 {
        return Err(ModelError::EmptyCarrier);
    }
    let cands = candidate_identities(space, sys.constants());
    let mut holds = vec![false; cands.len()];
    // Candidates sharing the operations they add to the system share one
    // model stream; refuted ones drop out as the stream goes by.
    let mut groups: Vec<(OpSet, Vec<usize>)> = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        if c.is_trivial() {
            holds[i] = true;
            continue;
        }
        let ops = c.ops().union(sys.ops());
        match groups.iter_mut().find(|(o, _)| *o == ops) {
            Some((_, members)) => members.push(i),
            None => groups.push((ops, vec![i])),
        }
    }
    for (ops, mut live) in groups {
        for n in 1..=model_size {
            if live.is_empty() {
                break;
            }
            let search = ModelSearch::new(sys, n, &search_options(width, ops))?;
            let layout = search.layout();
            let mut compiled: Vec<(usize, CompiledEquation)> =
                live.iter().map(|&i| (i, CompiledEquation::new(&cands[i], layout))).collect();
            let (mut vals, mut scratch) = (Vec::new(), Vec::new());
            search.for_each_cells(|cells| {
                compiled.retain(|(_, c)| !c.violated(layout, cells, &mut vals, &mut scratch));
                if compiled.is_empty() {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            live = compiled.into_iter().map(|(i, _)| i).collect();
        }
        for i in live {
            holds[i] = true;
        }
    }
    Ok(cands.into_iter().zip(holds).filter_map(|(c, h)| h.then_some(c)).collect())
}
