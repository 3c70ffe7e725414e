//! Ordering axiom systems by strength: system A is at least as strong as B
//! when every candidate identity holding in all small models of B also holds
//! in all small models of A. Everything here is relative to the budget.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::axioms::AxiomSystem;
use crate::consequence::{consequence_set_with, CandidateSpace};
use crate::models::ModelError;
use crate::terms::Equation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PowerBudget {
    pub space: CandidateSpace,
    pub model_size: usize,
    /// Worker threads for model enumeration; results do not depend on it.
    #[serde(skip)]
    pub parallel_width: usize,
}

impl Default for PowerBudget {
    fn default() -> Self {
        PowerBudget { space: CandidateSpace::default(), model_size: 3, parallel_width: 1 }
    }
}

impl fmt::Display for PowerBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} size<={}", self.space, self.model_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equivalent,
    FirstStronger,
    SecondStronger,
    Incomparable,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Equivalent => "equivalent",
            Relation::FirstStronger => "first-stronger",
            Relation::SecondStronger => "second-stronger",
            Relation::Incomparable => "incomparable",
        }
    }

    pub fn reversed(self) -> Relation {
        match self {
            Relation::FirstStronger => Relation::SecondStronger,
            Relation::SecondStronger => Relation::FirstStronger,
            r => r,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PowerReport {
    pub first: String,
    pub second: String,
    pub relation: Relation,
    /// Least identity that holds for the first system only.
    pub first_only: Option<Equation>,
    /// Least identity that holds for the second system only.
    pub second_only: Option<Equation>,
    pub first_consequences: usize,
    pub second_consequences: usize,
    pub budget: PowerBudget,
}

impl fmt::Display for PowerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} vs {}: {} ({})", self.first, self.second, self.relation, self.budget)?;
        writeln!(f, "  {}: {} consequences", self.first, self.first_consequences)?;
        write!(f, "  {}: {} consequences", self.second, self.second_consequences)?;
        if let Some(w) = &self.first_only {
            write!(f, "\n  only {}: {w}", self.first)?;
        }
        if let Some(w) = &self.second_only {
            write!(f, "\n  only {}: {w}", self.second)?;
        }
        Ok(())
    }
}

fn relation(a_only: bool, b_only: bool) -> Relation {
    match (a_only, b_only) {
        (false, false) => Relation::Equivalent,
        (true, false) => Relation::FirstStronger,
        (false, true) => Relation::SecondStronger,
        (true, true) => Relation::Incomparable,
    }
}

/// Least element of `a` missing from `b`; both sorted.
fn least_difference(a: &[Equation], b: &[Equation]) -> Option<Equation> {
    a.iter().find(|e| b.binary_search(e).is_err()).cloned()
}

fn report(a: &AxiomSystem, sa: &[Equation], b: &AxiomSystem, sb: &[Equation], budget: &PowerBudget) -> PowerReport {
    let first_only = least_difference(sa, sb);
    let second_only = least_difference(sb, sa);
    PowerReport {
        first: a.name.clone(),
        second: b.name.clone(),
        relation: relation(first_only.is_some(), second_only.is_some()),
        first_only,
        second_only,
        first_consequences: sa.len(),
        second_consequences: sb.len(),
        budget: *budget,
    }
}

/// Runs comparisons under one budget, computing the consequence set of each
/// distinct theory (by content hash) once.
pub struct Comparator {
    budget: PowerBudget,
    sets: HashMap<String, Vec<Equation>>,
}

impl Comparator {
    pub fn new(budget: &PowerBudget) -> Comparator {
        Comparator { budget: *budget, sets: HashMap::new() }
    }

    pub fn budget(&self) -> &PowerBudget {
        &self.budget
    }

    /// The bounded consequence set of `sys`, sorted.
    pub fn consequences(&mut self, sys: &AxiomSystem) -> Result<&[Equation], ModelError> {
        let key = sys.content_hash();
        if !self.sets.contains_key(&key) {
            let b = &self.budget;
            let set = consequence_set_with(sys, b.space, b.model_size, b.parallel_width.max(1))?;
            self.sets.insert(key.clone(), set);
        }
        Ok(&self.sets[&key])
    }

    pub fn compare(&mut self, a: &AxiomSystem, b: &AxiomSystem) -> Result<PowerReport, ModelError> {
        let sa = self.consequences(a)?.to_vec();
        let budget = self.budget;
        let sb = self.consequences(b)?;
        Ok(report(a, &sa, b, sb, &budget))
    }
}

/// Compares the bounded consequence sets of `a` and `b`. Candidate variables
/// skip each system's constant names, so the two sets range over the same
/// identities whenever those constants avoid the first few letters.
pub fn compare(a: &AxiomSystem, b: &AxiomSystem, budget: &PowerBudget) -> Result<PowerReport, ModelError> {
    Comparator::new(budget).compare(a, b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankEntry {
    pub name: String,
    pub consequences: usize,
    /// Index into [`RankSummary::classes`].
    pub class: usize,
}

/// Systems grouped into equivalence classes, with the covering relation
/// between classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankSummary {
    pub budget: PowerBudget,
    pub systems: Vec<RankEntry>,
    /// Member names per class, classes ordered by first member.
    pub classes: Vec<Vec<String>>,
    /// `(stronger, weaker)` pairs of class representatives (first members)
    /// where nothing lies strictly between.
    pub edges: Vec<(String, String)>,
}

impl fmt::Display for RankSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "budget: {}", self.budget)?;
        for s in &self.systems {
            writeln!(f, "{}: {} consequences, class {}", s.name, s.consequences, s.class)?;
        }
        for (i, c) in self.classes.iter().enumerate() {
            writeln!(f, "class {i}: {}", c.join(" "))?;
        }
        if self.edges.is_empty() {
            write!(f, "edges: none")
        } else {
            write!(f, "edges:")?;
            for (hi, lo) in &self.edges {
                write!(f, "\n  {hi} > {lo}")?;
            }
            Ok(())
        }
    }
}

/// Pairwise comparison of all `systems` summarized as a Hasse diagram.
pub fn rank_all(systems: &[AxiomSystem], budget: &PowerBudget) -> Result<RankSummary, ModelError> {
    let mut cmp = Comparator::new(budget);
    let mut sets = Vec::with_capacity(systems.len());
    for s in systems {
        sets.push(cmp.consequences(s)?.to_vec());
    }
    let subset = |x: usize, y: usize| sets[x].iter().all(|e| sets[y].binary_search(e).is_ok());

    let mut class_of = vec![usize::MAX; systems.len()];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..systems.len() {
        match reps.iter().position(|&r| sets[r] == sets[i]) {
            Some(c) => class_of[i] = c,
            None => {
                class_of[i] = reps.len();
                reps.push(i);
            }
        }
    }
    let k = reps.len();
    let stronger = |x: usize, y: usize| x != y && subset(reps[y], reps[x]);
    let mut edges = Vec::new();
    for hi in 0..k {
        for lo in 0..k {
            if stronger(hi, lo) && !(0..k).any(|mid| stronger(hi, mid) && stronger(mid, lo)) {
                edges.push((systems[reps[hi]].name.clone(), systems[reps[lo]].name.clone()));
            }
        }
    }
    let classes = (0..k)
        .map(|c| (0..systems.len()).filter(|&i| class_of[i] == c).map(|i| systems[i].name.clone()).collect())
        .collect();
    let entries = systems
        .iter()
        .zip(&sets)
        .zip(&class_of)
        .map(|((s, set), &class)| RankEntry { name: s.name.clone(), consequences: set.len(), class })
        .collect();
    Ok(RankSummary { budget: *budget, systems: entries, classes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{builtin_system, merge, SystemName};
    use crate::terms::parse_equation;

    fn small() -> PowerBudget {
        PowerBudget { model_size: 2, ..PowerBudget::default() }
    }

    fn sys(name: &str, eqs: &[&str]) -> AxiomSystem {
        AxiomSystem::new(name, eqs.iter().map(|e| parse_equation(e).unwrap()).collect::<Vec<_>>(), vec![])
    }

    #[test]
    fn self_comparison_is_equivalent() {
        let c1 = builtin_system(SystemName::C1);
        let r = compare(&c1, &c1, &small()).unwrap();
        assert_eq!(r.relation, Relation::Equivalent);
        assert!(r.first_only.is_none() && r.second_only.is_none());
    }

    #[test]
    fn more_axioms_never_weaker() {
        let c1 = builtin_system(SystemName::C1);
        let more = merge(&[c1.clone(), sys("x", &["a:b = b:a"])]);
        let r = compare(&more, &c1, &small()).unwrap();
        assert_eq!(r.relation, Relation::FirstStronger);
        assert_eq!(r.first_only, Some(parse_equation("a:b = b:a").unwrap()));
        let back = compare(&c1, &more, &small()).unwrap();
        assert_eq!(back.relation, r.relation.reversed());
    }

    #[test]
    fn c0_versus_c1() {
        let c0 = builtin_system(SystemName::C0);
        let c1 = builtin_system(SystemName::C1);
        let r = compare(&c0, &c1, &PowerBudget::default()).unwrap();
        assert_eq!(r.relation, Relation::Incomparable);
        let set = crate::consequence::consequence_set(&c0, CandidateSpace::default(), 3).unwrap();
        assert!(set.contains(&parse_equation("ab = b/a").unwrap().canonical(&[])));
    }

    #[test]
    fn rank_single_and_pair() {
        let c1 = builtin_system(SystemName::C1);
        let one = rank_all(std::slice::from_ref(&c1), &small()).unwrap();
        assert_eq!(one.classes, vec![vec!["C1".to_string()]]);
        assert!(one.edges.is_empty());

        let merged = merge(&[c1.clone(), sys("x", &["a:b = b:a"])]);
        let two = rank_all(&[c1, merged.clone()], &small()).unwrap();
        assert_eq!(two.edges, vec![(merged.name.clone(), "C1".to_string())]);
    }

    #[test]
    fn hasse_edges_skip_transitive_pairs() {
        let none = AxiomSystem::empty("none");
        let comm = sys("comm", &["ab = ba"]);
        let both = sys("both", &["ab = ba", "a:b = b:a"]);
        let r = rank_all(&[both, none, comm], &small()).unwrap();
        assert_eq!(
            r.edges,
            vec![("both".to_string(), "comm".to_string()), ("comm".to_string(), "none".to_string())]
        );
    }

    #[test]
    fn equivalent_systems_share_a_class() {
        let a = sys("a", &["ab = ba"]);
        let b = sys("b", &["ba = ab"]);
        let r = rank_all(&[a, b], &small()).unwrap();
        assert_eq!(r.classes.len(), 1);
        assert_eq!(r.systems[1].class, 0);
    }
}
