//! Bidirectional breadth-first search for a rewrite chain between the two
//! sides of a candidate, turned into an equational derivation.
//!
//! One rewrite replaces a subterm matching one side of an axiom (either
//! orientation) by the matching instance of the other side. Variables that
//! occur only on the produced side range over the candidate's variables and
//! the system's constants. Every intermediate term stays within
//! `max_term_depth`.

use std::collections::HashMap;

use serde::Serialize;

use super::{DerivationStep, Rule, Verdict};
use crate::axioms::AxiomSystem;
use crate::terms::{Assignment, Equation, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DeriveBudget {
    pub max_term_depth: usize,
    /// Longest rewrite chain between the two sides.
    pub max_steps: usize,
    /// Terms stored over both search directions.
    pub max_terms: usize,
}

impl Default for DeriveBudget {
    fn default() -> Self {
        DeriveBudget { max_term_depth: 2, max_steps: 6, max_terms: 10_000 }
    }
}

/// What an unsuccessful search covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBounds {
    #[serde(flatten)]
    pub budget: DeriveBudget,
    pub terms_visited: usize,
    /// True when every term reachable within the depth and step bounds was
    /// visited, so no derivation of this shape exists.
    pub exhausted: bool,
}

#[derive(Clone, Debug)]
struct Edge {
    path: Vec<u8>,
    axiom: usize,
    forward: bool,
    sigma: Assignment<Term>,
}

struct Node {
    term: Term,
    parent: Option<(usize, Edge)>,
}

#[derive(Default)]
struct Side {
    nodes: Vec<Node>,
    index: HashMap<Term, usize>,
    frontier: Vec<usize>,
    depth: usize,
}

impl Side {
    fn rooted(t: &Term) -> Side {
        let mut s = Side::default();
        s.index.insert(t.clone(), 0);
        s.nodes.push(Node { term: t.clone(), parent: None });
        s.frontier.push(0);
        s
    }

    /// Terms from the root to `i`, with the edge leading into each.
    fn path_to(&self, mut i: usize) -> Vec<(Term, Option<Edge>)> {
        let mut out = Vec::new();
        loop {
            let node = &self.nodes[i];
            match &node.parent {
                None => {
                    out.push((node.term.clone(), None));
                    break;
                }
                Some((p, e)) => {
                    out.push((node.term.clone(), Some(e.clone())));
                    i = *p;
                }
            }
        }
        out.reverse();
        out
    }
}

/// One-way matching of `pat` against `t`. Constants match only themselves.
pub(super) fn match_term(pat: &Term, t: &Term, consts: &[Var], s: &mut Assignment<Term>) -> bool {
    match pat {
        Term::Var(v) if consts.contains(v) => t == pat,
        Term::Var(v) => match s.get(v) {
            Some(bound) => bound == t,
            None => {
                s.insert(*v, t.clone());
                true
            }
        },
        Term::Apply(op, l, r) => match t {
            Term::Apply(op2, l2, r2) if op == op2 => {
                match_term(l, l2, consts, s) && match_term(r, r2, consts, s)
            }
            _ => false,
        },
    }
}

fn positions(t: &Term, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    out.push(prefix.clone());
    if let Term::Apply(_, l, r) = t {
        prefix.push(0);
        positions(l, prefix, out);
        prefix.pop();
        prefix.push(1);
        positions(r, prefix, out);
        prefix.pop();
    }
}

struct Searcher<'a> {
    axioms: &'a [Equation],
    consts: &'a [Var],
    atoms: Vec<Term>,
    max_depth: usize,
}

impl Searcher<'_> {
    /// Every single-rewrite successor of `t`, in a fixed order.
    fn successors(&self, t: &Term, out: &mut Vec<(Term, Edge)>) {
        let mut paths = Vec::new();
        positions(t, &mut Vec::new(), &mut paths);
        for path in paths {
            let sub = t.at(&path).expect("path from positions");
            for (axiom, eq) in self.axioms.iter().enumerate() {
                for forward in [true, false] {
                    let (from, to) = if forward { (&eq.lhs, &eq.rhs) } else { (&eq.rhs, &eq.lhs) };
                    let mut sigma = Assignment::new();
                    if !match_term(from, sub, self.consts, &mut sigma) {
                        continue;
                    }
                    let open: Vec<Var> = eq
                        .variables()
                        .into_iter()
                        .filter(|v| !self.consts.contains(v) && !sigma.contains_key(v))
                        .collect();
                    let mut choice = vec![0usize; open.len()];
                    if !open.is_empty() && self.atoms.is_empty() {
                        continue;
                    }
                    loop {
                        let mut s = sigma.clone();
                        for (v, &c) in open.iter().zip(&choice) {
                            s.insert(*v, self.atoms[c].clone());
                        }
                        let next = t.replace_at(&path, to.substitute_partial(&s));
                        if next.depth() <= self.max_depth && next != *t {
                            out.push((next, Edge { path: path.clone(), axiom, forward, sigma: s }));
                        }
                        if !bump(&mut choice, self.atoms.len()) {
                            break;
                        }
                    }
                }
            }
        }
    }
}

fn bump(choice: &mut [usize], radix: usize) -> bool {
    for c in choice.iter_mut().rev() {
        *c += 1;
        if *c < radix {
            return true;
        }
        *c = 0;
    }
    false
}

/// Searches for a derivation of `cand` from `sys` within `budget`.
pub fn derive(sys: &AxiomSystem, cand: &Equation, budget: &DeriveBudget) -> Verdict {
    if cand.is_trivial() {
        return Verdict::Proved(vec![DerivationStep {
            rule: Rule::Reflexivity,
            premises: vec![],
            equation: cand.clone(),
        }]);
    }
    let unknown = |visited, exhausted| Verdict::Unknown(SearchBounds { budget: *budget, terms_visited: visited, exhausted });
    if budget.max_steps == 0 || budget.max_terms == 0 {
        return unknown(0, false);
    }
    if cand.depth() > budget.max_term_depth {
        return unknown(0, true);
    }
    let consts = sys.constants();
    let mut atoms: Vec<Term> = cand.variables().into_iter().map(Term::Var).collect();
    for c in consts {
        if !atoms.contains(&Term::Var(*c)) {
            atoms.push(Term::Var(*c));
        }
    }
    let searcher = Searcher { axioms: sys.equations(), consts, atoms, max_depth: budget.max_term_depth };
    let mut sides = [Side::rooted(&cand.lhs), Side::rooted(&cand.rhs)];
    let mut succ = Vec::new();
    while sides[0].depth + sides[1].depth < budget.max_steps {
        let s = if sides[1].frontier.len() < sides[0].frontier.len() { 1 } else { 0 };
        if sides[s].frontier.is_empty() {
            return unknown(sides[0].nodes.len() + sides[1].nodes.len(), true);
        }
        let frontier = std::mem::take(&mut sides[s].frontier);
        let mut next = Vec::new();
        for i in frontier {
            succ.clear();
            searcher.successors(&sides[s].nodes[i].term, &mut succ);
            for (t, edge) in succ.drain(..) {
                if sides[s].index.contains_key(&t) {
                    continue;
                }
                let id = sides[s].nodes.len();
                sides[s].index.insert(t.clone(), id);
                let meet = sides[1 - s].index.get(&t).copied();
                sides[s].nodes.push(Node { term: t, parent: Some((i, edge)) });
                next.push(id);
                if let Some(other) = meet {
                    let (a, b) = if s == 0 { (id, other) } else { (other, id) };
                    return Verdict::Proved(build(sys, cand, &sides, a, b));
                }
                if sides[0].nodes.len() + sides[1].nodes.len() >= budget.max_terms {
                    return unknown(sides[0].nodes.len() + sides[1].nodes.len(), false);
                }
            }
        }
        sides[s].frontier = next;
        sides[s].depth += 1;
    }
    unknown(sides[0].nodes.len() + sides[1].nodes.len(), false)
}

struct Builder<'a> {
    sys: &'a AxiomSystem,
    steps: Vec<DerivationStep>,
    known: HashMap<Equation, usize>,
}

impl Builder<'_> {
    fn add(&mut self, rule: Rule, premises: Vec<usize>, equation: Equation) -> usize {
        if let Some(&i) = self.known.get(&equation) {
            return i;
        }
        self.known.insert(equation.clone(), self.steps.len());
        self.steps.push(DerivationStep { rule, premises, equation });
        self.steps.len() - 1
    }

    fn reflexivity(&mut self, t: &Term) -> usize {
        self.add(Rule::Reflexivity, vec![], Equation::new(t.clone(), t.clone()))
    }

    /// Proves `from = to`, where `to` is `from` rewritten along `edge`,
    /// or along the reverse of `edge` when `reverse` is set.
    fn rewrite(&mut self, from: &Term, edge: &Edge, reverse: bool) -> usize {
        let axiom = &self.sys.equations()[edge.axiom];
        let mut cur = self.add(Rule::AxiomInstance, vec![], axiom.clone());
        let identity = edge.sigma.iter().all(|(v, t)| *t == Term::Var(*v));
        let inst = Equation::new(axiom.lhs.substitute_partial(&edge.sigma), axiom.rhs.substitute_partial(&edge.sigma));
        if !identity {
            cur = self.add(Rule::Substitution, vec![cur], inst.clone());
        }
        let mut eq = inst;
        if edge.forward == reverse {
            eq = eq.flipped();
            cur = self.add(Rule::Symmetry, vec![cur], eq.clone());
        }
        for level in (0..edge.path.len()).rev() {
            let Some(Term::Apply(op, l, r)) = from.at(&edge.path[..level]) else {
                unreachable!("rewrite positions lie inside applications")
            };
            let (premises, lhs, rhs) = if edge.path[level] == 0 {
                let refl = self.reflexivity(r);
                (vec![cur, refl], Term::apply(*op, eq.lhs.clone(), (**r).clone()), Term::apply(*op, eq.rhs.clone(), (**r).clone()))
            } else {
                let refl = self.reflexivity(l);
                (vec![refl, cur], Term::apply(*op, (**l).clone(), eq.lhs.clone()), Term::apply(*op, (**l).clone(), eq.rhs.clone()))
            };
            eq = Equation::new(lhs, rhs);
            cur = self.add(Rule::Congruence, premises, eq.clone());
        }
        cur
    }
}

/// Chains the path root(lhs) .. a == b .. root(rhs) into a derivation.
fn build(sys: &AxiomSystem, cand: &Equation, sides: &[Side; 2], a: usize, b: usize) -> Vec<DerivationStep> {
    let mut builder = Builder { sys, steps: Vec::new(), known: HashMap::new() };
    // Links (from, edge, reversed): each proves `from = next term`.
    let mut links: Vec<(Term, Edge, bool)> = Vec::new();
    let forward = sides[0].path_to(a);
    for pair in forward.windows(2) {
        links.push((pair[0].0.clone(), pair[1].1.clone().expect("non-root"), false));
    }
    let backward = sides[1].path_to(b);
    for pair in backward.windows(2).rev() {
        links.push((pair[1].0.clone(), pair[1].1.clone().expect("non-root"), true));
    }
    let mut acc: Option<(usize, Term)> = None;
    for (from, edge, reverse) in &links {
        let step = builder.rewrite(from, edge, *reverse);
        let to = builder.steps[step].equation.rhs.clone();
        acc = Some(match acc {
            None => (step, to),
            Some((prev, _)) => {
                let eq = Equation::new(cand.lhs.clone(), to.clone());
                (builder.add(Rule::Transitivity, vec![prev, step], eq), to)
            }
        });
    }
    // A shorter prefix may already conclude the candidate.
    let end = builder.known[cand];
    builder.steps.truncate(end + 1);
    builder.steps
}
