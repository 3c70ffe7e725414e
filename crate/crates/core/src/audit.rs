//! Checks, for each structure G1 to G3 and each reading of its modulus,
//! whether every small model is an abelian group under the structure's
//! operation, reporting the first model that is not.

use std::fmt;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::axioms::{structure_preset, AxiomSystem, ModulusReading};
use crate::models::{AlgebraRecord, EnumOptions, FiniteAlgebra, ModelError, ModelSearch};
use crate::structure::is_abelian_group;
use crate::terms::{Equation, OpSymbol};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SizeTally {
    pub size: usize,
    /// Models up to isomorphism.
    pub models: u64,
    pub abelian_groups: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Countermodel {
    pub algebra: AlgebraRecord,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub structure: String,
    pub op: OpSymbol,
    pub reading: &'static str,
    pub axioms: Vec<Equation>,
    pub sizes: Vec<SizeTally>,
    pub all_abelian_groups: bool,
    /// First model, by size then enumeration order, that is not an abelian
    /// group.
    pub countermodel: Option<Countermodel>,
}

impl fmt::Display for AuditEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({}, modulus {})", self.structure, self.op, self.reading)?;
        let axioms: Vec<String> = self.axioms.iter().map(|e| e.to_string()).collect();
        writeln!(f, "  axioms: {}", axioms.join("; "))?;
        for t in &self.sizes {
            writeln!(f, "  size {}: {} models, {} abelian groups", t.size, t.models, t.abelian_groups)?;
        }
        write!(f, "  all abelian groups: {}", if self.all_abelian_groups { "yes" } else { "no" })?;
        if let Some(c) = &self.countermodel {
            let json = serde_json::to_string(&c.algebra).expect("records serialize");
            write!(f, "\n  first countermodel: {json}\n  reason: {}", c.reason)?;
        }
        Ok(())
    }
}

/// Audits one structure under one modulus reading, sizes `1..=max_size`.
pub fn audit_structure(index: usize, reading: ModulusReading, max_size: usize) -> Result<AuditEntry, ModelError> {
    let sys = structure_preset(index, reading).map_err(|e| ModelError::Invalid(e.to_string()))?;
    let op = crate::axioms::preset_op(index);
    audit_system(&sys, op, reading.label(), max_size)
}

pub fn audit_system(
    sys: &AxiomSystem,
    op: OpSymbol,
    reading: &'static str,
    max_size: usize,
) -> Result<AuditEntry, ModelError> {
    let mut sizes = Vec::new();
    let mut countermodel = None;
    for n in 1..=max_size {
        let search = ModelSearch::new(sys, n, &EnumOptions::up_to_iso())?;
        let mut tally = SizeTally { size: n, models: 0, abelian_groups: 0 };
        let mut failure: Result<(), ModelError> = Ok(());
        search.for_each(|alg: &FiniteAlgebra| {
            tally.models += 1;
            match is_abelian_group(alg, op) {
                Ok(g) if g.holds => tally.abelian_groups += 1,
                Ok(g) => {
                    if countermodel.is_none() {
                        let reason = g.reason.map(|r| r.to_string()).unwrap_or_default();
                        countermodel = Some(Countermodel { algebra: AlgebraRecord::from(alg), reason });
                    }
                }
                Err(e) => {
                    failure = Err(e);
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        });
        failure?;
        sizes.push(tally);
    }
    Ok(AuditEntry {
        structure: sys.name.clone(),
        op,
        reading,
        axioms: sys.equations().to_vec(),
        all_abelian_groups: countermodel.is_none(),
        sizes,
        countermodel,
    })
}

/// Every structure under every reading of its modulus.
pub fn audit_all(max_size: usize) -> Result<Vec<AuditEntry>, ModelError> {
    let mut out = Vec::new();
    for index in 1..=3 {
        for &reading in ModulusReading::for_op(crate::axioms::preset_op(index)) {
            out.push(audit_structure(index, reading, max_size)?);
        }
    }
    Ok(out)
}

/// The text report: entries separated by blank lines, newline-terminated.
pub fn render(entries: &[AuditEntry]) -> String {
    let mut s = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&e.to_string());
        s.push('\n');
    }
    s
}
