//! Step-by-step validation of derivations.

use thiserror::Error;

use super::derive::match_term;
use super::{DerivationStep, Rule};
use crate::axioms::AxiomSystem;
use crate::terms::{Assignment, Equation, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DerivationError {
    #[error("derivation is empty")]
    Empty,
    #[error("step {step}: premise {premise} does not precede it")]
    Premise { step: usize, premise: usize },
    #[error("step {step}: {rule} takes {expected} premises, found {found}")]
    Arity { step: usize, rule: Rule, expected: usize, found: usize },
    #[error("step {step}: {reason}")]
    Invalid { step: usize, reason: String },
    #[error("derivation concludes {found}, not {expected}")]
    Conclusion { found: Equation, expected: Equation },
}

/// Checks each step against its rule and that the last step concludes `goal`.
pub fn check_derivation(sys: &AxiomSystem, steps: &[DerivationStep], goal: &Equation) -> Result<(), DerivationError> {
    for (i, step) in steps.iter().enumerate() {
        check_step(sys, steps, i, step)?;
    }
    let last = steps.last().ok_or(DerivationError::Empty)?;
    if &last.equation != goal {
        return Err(DerivationError::Conclusion { found: last.equation.clone(), expected: goal.clone() });
    }
    Ok(())
}

fn check_step(sys: &AxiomSystem, steps: &[DerivationStep], i: usize, step: &DerivationStep) -> Result<(), DerivationError> {
    let expected = match step.rule {
        Rule::AxiomInstance | Rule::Reflexivity => 0,
        Rule::Symmetry | Rule::Substitution => 1,
        Rule::Transitivity | Rule::Congruence => 2,
    };
    if step.premises.len() != expected {
        return Err(DerivationError::Arity { step: i, rule: step.rule, expected, found: step.premises.len() });
    }
    if let Some(&p) = step.premises.iter().find(|&&p| p >= i) {
        return Err(DerivationError::Premise { step: i, premise: p });
    }
    let premise = |k: usize| &steps[step.premises[k]].equation;
    let eq = &step.equation;
    let ok = match step.rule {
        Rule::AxiomInstance => sys.equations().contains(eq),
        Rule::Reflexivity => eq.lhs == eq.rhs,
        Rule::Symmetry => *eq == premise(0).flipped(),
        Rule::Transitivity => premise(0).rhs == premise(1).lhs && eq.lhs == premise(0).lhs && eq.rhs == premise(1).rhs,
        Rule::Congruence => match (&eq.lhs, &eq.rhs) {
            (Term::Apply(op, l, r), Term::Apply(op2, l2, r2)) => {
                op == op2
                    && **l == premise(0).lhs
                    && **l2 == premise(0).rhs
                    && **r == premise(1).lhs
                    && **r2 == premise(1).rhs
            }
            _ => false,
        },
        Rule::Substitution => {
            let p = premise(0);
            let mut sigma = Assignment::new();
            match_term(&p.lhs, &eq.lhs, sys.constants(), &mut sigma)
                && match_term(&p.rhs, &eq.rhs, sys.constants(), &mut sigma)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(DerivationError::Invalid { step: i, reason: format!("{} does not yield {eq}", step.rule) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{builtin_system, SystemName};
    use crate::terms::parse_equation;

    fn eq(s: &str) -> Equation {
        parse_equation(s).unwrap()
    }

    fn step(rule: Rule, premises: &[usize], s: &str) -> DerivationStep {
        DerivationStep { rule, premises: premises.to_vec(), equation: eq(s) }
    }

    #[test]
    fn transitivity_chain_of_c0() {
        // From ab = a:b and a:b = b/a, ab = b/a.
        let c0 = builtin_system(SystemName::C0);
        let d = vec![
            step(Rule::AxiomInstance, &[], "ab = a:b"),
            step(Rule::AxiomInstance, &[], "a:b = b/a"),
            step(Rule::Transitivity, &[0, 1], "ab = b/a"),
        ];
        assert_eq!(check_derivation(&c0, &d, &eq("ab = b/a")), Ok(()));
    }

    #[test]
    fn rejects_bad_steps() {
        let c1 = builtin_system(SystemName::C1);
        let not_axiom = vec![step(Rule::AxiomInstance, &[], "a:b = b:a")];
        assert!(matches!(
            check_derivation(&c1, &not_axiom, &eq("a:b = b:a")),
            Err(DerivationError::Invalid { step: 0, .. })
        ));
        let forward_ref = vec![step(Rule::Symmetry, &[0], "a = a")];
        assert!(matches!(check_derivation(&c1, &forward_ref, &eq("a = a")), Err(DerivationError::Premise { .. })));
        let wrong_goal = vec![step(Rule::Reflexivity, &[], "a = a")];
        assert!(matches!(check_derivation(&c1, &wrong_goal, &eq("b = b")), Err(DerivationError::Conclusion { .. })));
        assert_eq!(check_derivation(&c1, &[], &eq("a = a")), Err(DerivationError::Empty));
        let inconsistent_subst = vec![
            step(Rule::AxiomInstance, &[], "ab = ba"),
            step(Rule::Substitution, &[0], "ab = ca"),
        ];
        assert!(check_derivation(&c1, &inconsistent_subst, &eq("ab = ca")).is_err());
    }

    #[test]
    fn substitution_keeps_constants() {
        let g1 = builtin_system(SystemName::G1);
        let good = vec![
            step(Rule::AxiomInstance, &[], "a e = a"),
            step(Rule::Substitution, &[0], "(b b) e = b b"),
        ];
        assert_eq!(check_derivation(&g1, &good, &eq("(b b) e = b b")), Ok(()));
        let bad = vec![
            step(Rule::AxiomInstance, &[], "a e = a"),
            step(Rule::Substitution, &[0], "a b = a"),
        ];
        assert!(check_derivation(&g1, &bad, &eq("a b = a")).is_err());
    }

    #[test]
    fn congruence_needs_matching_premises() {
        let c1 = builtin_system(SystemName::C1);
        let d = vec![
            step(Rule::AxiomInstance, &[], "ab = ba"),
            step(Rule::Reflexivity, &[], "c = c"),
            step(Rule::Congruence, &[0, 1], "(ab):c = (ba):c"),
        ];
        assert_eq!(check_derivation(&c1, &d, &eq("(ab):c = (ba):c")), Ok(()));
        let swapped = vec![d[0].clone(), d[1].clone(), step(Rule::Congruence, &[1, 0], "(ab):c = (ba):c")];
        assert!(check_derivation(&c1, &swapped, &eq("(ab):c = (ba):c")).is_err());
    }
}
