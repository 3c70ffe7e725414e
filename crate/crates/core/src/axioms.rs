//! Axiom systems: the built-in systems C0 to C3, the moduli in each of their
//! readings, the per-operation structure presets G0 to G3, and axiom files.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::terms::{parse_equation, Equation, OpSet, OpSymbol, ParseError, Var};

#[derive(Debug, Error)]
pub enum AxiomError {
    #[error("unknown system {0:?}")]
    UnknownSystem(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Line {
        path: PathBuf,
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("reading {reading} does not apply to {op}")]
    NoSuchReading { op: OpSymbol, reading: ModulusReading },
}

/// A named finite set of identities, plus the distinguished constants that
/// occur in them.
///
/// Inside the equations a constant is written like a variable (`e`); the
/// `constants` list marks which letters are rigid rather than quantified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomSystem {
    pub name: String,
    equations: Vec<Equation>,
    constants: Vec<Var>,
}

impl AxiomSystem {
    pub fn empty(name: impl Into<String>) -> AxiomSystem {
        AxiomSystem { name: name.into(), equations: Vec::new(), constants: Vec::new() }
    }

    /// Builds a system, dropping equations that repeat an earlier one up to
    /// variable renaming.
    pub fn new(
        name: impl Into<String>,
        equations: impl IntoIterator<Item = Equation>,
        constants: impl IntoIterator<Item = Var>,
    ) -> AxiomSystem {
        let mut sys = AxiomSystem::empty(name);
        let mut constants: Vec<Var> = constants.into_iter().collect();
        constants.sort();
        constants.dedup();
        sys.constants = constants;
        for eq in equations {
            sys.push(eq);
        }
        sys
    }

    fn push(&mut self, eq: Equation) {
        let key = eq.normalized(&self.constants);
        if !self.equations.iter().any(|e| e.normalized(&self.constants) == key) {
            self.equations.push(eq);
        }
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn constants(&self) -> &[Var] {
        &self.constants
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn ops(&self) -> OpSet {
        self.equations.iter().fold(OpSet::EMPTY, |acc, eq| acc.union(eq.ops()))
    }

    pub fn is_constant(&self, v: Var) -> bool {
        self.constants.contains(&v)
    }

    /// Equations keyed up to renaming and orientation, sorted; equal for
    /// systems that differ only in name, order, or variable spelling.
    pub fn equation_keys(&self) -> BTreeSet<Equation> {
        self.equations.iter().map(|eq| eq.canonical(&self.constants)).collect()
    }

    /// Hex SHA-256 over the sorted equation keys and constants.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for c in &self.constants {
            hasher.update(format!("const {c}\n").as_bytes());
        }
        for eq in self.equation_keys() {
            hasher.update(format!("{eq}\n").as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Same equations and constants, ignoring name and order.
    pub fn same_theory(&self, other: &AxiomSystem) -> bool {
        self.constants == other.constants && self.equation_keys() == other.equation_keys()
    }
}

impl fmt::Display for AxiomSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.constants.is_empty() {
            let names: Vec<String> = self.constants.iter().map(|c| c.to_string()).collect();
            write!(f, " [constants {}]", names.join(", "))?;
        }
        write!(f, ":")?;
        for eq in &self.equations {
            write!(f, " {eq};")?;
        }
        Ok(())
    }
}

/// Union of equations and constants; names are joined with `+`.
pub fn merge(systems: &[AxiomSystem]) -> AxiomSystem {
    let mut names: Vec<&str> = Vec::new();
    for s in systems {
        for part in s.name.split('+') {
            if !names.contains(&part) {
                names.push(part);
            }
        }
    }
    let constants = systems.iter().flat_map(|s| s.constants.iter().copied());
    let equations = systems.iter().flat_map(|s| s.equations.iter().cloned());
    AxiomSystem::new(names.join("+"), equations, constants)
}

/// Parses axiom-file text: one equation per line, `#` comments, blank lines
/// ignored.
pub fn parse_axioms(name: &str, path: &Path, text: &str) -> Result<AxiomSystem, AxiomError> {
    let mut equations = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let eq = parse_equation(content).map_err(|source| AxiomError::Line {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        equations.push(eq);
    }
    Ok(AxiomSystem::new(name, equations, []))
}

pub fn load_axioms(path: &Path) -> Result<AxiomSystem, AxiomError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| AxiomError::Io { path: path.to_path_buf(), source })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "axioms".to_string());
    parse_axioms(&name, path, &text)
}

/// How a modulus axiom is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModulusReading {
    /// The identity exactly as typeset.
    AsPrinted,
    /// `a/a = b/b`, the diagonal form; only distinct from the printed form
    /// for right division.
    Diagonal,
    /// A distinguished constant `e` with `a∘e = a` and `e∘a = a`.
    Neutral,
}

impl ModulusReading {
    pub fn label(self) -> &'static str {
        match self {
            ModulusReading::AsPrinted => "as_printed",
            ModulusReading::Diagonal => "diagonal",
            ModulusReading::Neutral => "neutral",
        }
    }

    /// Readings that exist for the modulus of `op`.
    pub fn for_op(op: OpSymbol) -> &'static [ModulusReading] {
        match op {
            OpSymbol::RDiv => &[
                ModulusReading::AsPrinted,
                ModulusReading::Diagonal,
                ModulusReading::Neutral,
            ],
            _ => &[ModulusReading::AsPrinted, ModulusReading::Neutral],
        }
    }
}

impl fmt::Display for ModulusReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Names of the built-in systems. Parsing is case-insensitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SystemName {
    C0,
    C1,
    C2,
    C3,
    MxAsPrinted,
    MxNeutral,
    MldivAsPrinted,
    MldivNeutral,
    MrdivAsPrinted,
    MrdivDiagonal,
    MrdivNeutral,
    G0,
    G1,
    G2,
    G3,
}

impl SystemName {
    pub const ALL: [SystemName; 15] = [
        SystemName::C0,
        SystemName::C1,
        SystemName::C2,
        SystemName::C3,
        SystemName::MxAsPrinted,
        SystemName::MxNeutral,
        SystemName::MldivAsPrinted,
        SystemName::MldivNeutral,
        SystemName::MrdivAsPrinted,
        SystemName::MrdivDiagonal,
        SystemName::MrdivNeutral,
        SystemName::G0,
        SystemName::G1,
        SystemName::G2,
        SystemName::G3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemName::C0 => "C0",
            SystemName::C1 => "C1",
            SystemName::C2 => "C2",
            SystemName::C3 => "C3",
            SystemName::MxAsPrinted => "Mx_as_printed",
            SystemName::MxNeutral => "Mx_neutral",
            SystemName::MldivAsPrinted => "Mldiv_as_printed",
            SystemName::MldivNeutral => "Mldiv_neutral",
            SystemName::MrdivAsPrinted => "Mrdiv_as_printed",
            SystemName::MrdivDiagonal => "Mrdiv_diagonal",
            SystemName::MrdivNeutral => "Mrdiv_neutral",
            SystemName::G0 => "G0",
            SystemName::G1 => "G1",
            SystemName::G2 => "G2",
            SystemName::G3 => "G3",
        }
    }
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemName {
    type Err = AxiomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SystemName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AxiomError::UnknownSystem(s.to_string()))
    }
}

const NEUTRAL: char = 'e';

fn system(name: SystemName, lines: &[&str]) -> AxiomSystem {
    let eqs = lines.iter().map(|l| parse_equation(l).expect("built-in axiom parses"));
    AxiomSystem::new(name.as_str(), eqs, [])
}

fn op_text(op: OpSymbol, l: char, r: char) -> String {
    match op {
        OpSymbol::Prod => format!("{l}{r}"),
        OpSymbol::LDiv => format!("{l}:{r}"),
        OpSymbol::RDiv => format!("{l}/{r}"),
    }
}

/// The modulus axioms of `op` under one reading.
pub fn modulus(op: OpSymbol, reading: ModulusReading) -> Result<AxiomSystem, AxiomError> {
    let name = match (op, reading) {
        (OpSymbol::Prod, ModulusReading::AsPrinted) => SystemName::MxAsPrinted,
        (OpSymbol::Prod, ModulusReading::Neutral) => SystemName::MxNeutral,
        (OpSymbol::LDiv, ModulusReading::AsPrinted) => SystemName::MldivAsPrinted,
        (OpSymbol::LDiv, ModulusReading::Neutral) => SystemName::MldivNeutral,
        (OpSymbol::RDiv, ModulusReading::AsPrinted) => SystemName::MrdivAsPrinted,
        (OpSymbol::RDiv, ModulusReading::Diagonal) => SystemName::MrdivDiagonal,
        (OpSymbol::RDiv, ModulusReading::Neutral) => SystemName::MrdivNeutral,
        (op, reading) => return Err(AxiomError::NoSuchReading { op, reading }),
    };
    Ok(match reading {
        ModulusReading::Neutral => {
            let e = Var::new(NEUTRAL).expect("valid constant name");
            let eqs = [
                format!("{} = a", op_text(op, 'a', NEUTRAL)),
                format!("{} = a", op_text(op, NEUTRAL, 'a')),
            ];
            let eqs = eqs.iter().map(|l| parse_equation(l).expect("neutral axiom parses"));
            AxiomSystem::new(name.as_str(), eqs, [e])
        }
        // Mx and M: as printed already are the diagonal form.
        ModulusReading::AsPrinted if op == OpSymbol::RDiv => system(name, &["a/b = b/a"]),
        _ => {
            let line = format!("{} = {}", op_text(op, 'a', 'a'), op_text(op, 'b', 'b'));
            system(name, &[&line])
        }
    })
}

fn c_system(index: usize) -> AxiomSystem {
    match index {
        0 => system(SystemName::C0, &["ab = a:b", "a:b = b/a", "b/a = ab"]),
        1 => system(SystemName::C1, &["ab = ba", "a:b = a/b"]),
        2 => system(SystemName::C2, &["a:b = b:a", "b/a = ba"]),
        3 => system(SystemName::C3, &["a/b = b/a", "ab = b:a"]),
        _ => unreachable!("only C0 to C3 exist"),
    }
}

/// The operation singled out by each of the structures G1, G2, G3.
pub fn preset_op(index: usize) -> OpSymbol {
    match index {
        1 => OpSymbol::Prod,
        2 => OpSymbol::LDiv,
        3 => OpSymbol::RDiv,
        _ => panic!("G{index} has no single distinguished operation"),
    }
}

/// The structure `⟨I, op, modulus⟩` for index 1 to 3: the equations of `Cᵢ`
/// that mention only `op`, together with the modulus of `op` under `reading`.
pub fn structure_preset(index: usize, reading: ModulusReading) -> Result<AxiomSystem, AxiomError> {
    let op = preset_op(index);
    let single: OpSet = [op].into_iter().collect();
    let base = c_system(index);
    let restricted: Vec<Equation> =
        base.equations().iter().filter(|eq| eq.ops() == single).cloned().collect();
    let base = AxiomSystem::new(base.name.clone(), restricted, []);
    let merged = merge(&[base, modulus(op, reading)?]);
    let name = format!("G{index}[{}]", modulus_name(op, reading));
    Ok(AxiomSystem::new(name, merged.equations().to_vec(), merged.constants().to_vec()))
}

fn modulus_name(op: OpSymbol, reading: ModulusReading) -> String {
    modulus(op, reading).map(|m| m.name).unwrap_or_default()
}

pub fn builtin_system(name: SystemName) -> AxiomSystem {
    let rename = |mut s: AxiomSystem| {
        s.name = name.as_str().to_string();
        s
    };
    match name {
        SystemName::C0 => c_system(0),
        SystemName::C1 => c_system(1),
        SystemName::C2 => c_system(2),
        SystemName::C3 => c_system(3),
        SystemName::MxAsPrinted => modulus(OpSymbol::Prod, ModulusReading::AsPrinted).unwrap(),
        SystemName::MxNeutral => modulus(OpSymbol::Prod, ModulusReading::Neutral).unwrap(),
        SystemName::MldivAsPrinted => modulus(OpSymbol::LDiv, ModulusReading::AsPrinted).unwrap(),
        SystemName::MldivNeutral => modulus(OpSymbol::LDiv, ModulusReading::Neutral).unwrap(),
        SystemName::MrdivAsPrinted => modulus(OpSymbol::RDiv, ModulusReading::AsPrinted).unwrap(),
        SystemName::MrdivDiagonal => modulus(OpSymbol::RDiv, ModulusReading::Diagonal).unwrap(),
        SystemName::MrdivNeutral => modulus(OpSymbol::RDiv, ModulusReading::Neutral).unwrap(),
        SystemName::G0 => rename(c_system(0)),
        SystemName::G1 => rename(structure_preset(1, ModulusReading::Neutral).unwrap()),
        SystemName::G2 => rename(structure_preset(2, ModulusReading::Neutral).unwrap()),
        SystemName::G3 => rename(structure_preset(3, ModulusReading::Neutral).unwrap()),
    }
}

/// Every built-in system, in declaration order.
pub fn all_builtins() -> Vec<AxiomSystem> {
    SystemName::ALL.into_iter().map(builtin_system).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::format_term;

    fn eq_strings(s: &AxiomSystem) -> Vec<String> {
        s.equations().iter().map(|e| e.to_string()).collect()
    }

    #[test]
    fn c_systems_match_the_printed_lists() {
        assert_eq!(
            eq_strings(&builtin_system(SystemName::C0)),
            ["a b = a:b", "a:b = b/a", "b/a = a b"]
        );
        assert_eq!(eq_strings(&builtin_system(SystemName::C1)), ["a b = b a", "a:b = a/b"]);
        assert_eq!(eq_strings(&builtin_system(SystemName::C2)), ["a:b = b:a", "b/a = b a"]);
        assert_eq!(eq_strings(&builtin_system(SystemName::C3)), ["a/b = b/a", "a b = b:a"]);
    }

    #[test]
    fn c0_is_a_transitivity_chain() {
        let c0 = builtin_system(SystemName::C0);
        let eqs = c0.equations();
        assert_eq!(eqs[1].lhs, eqs[0].rhs);
        assert_eq!(eqs[2].lhs, eqs[1].rhs);
    }

    #[test]
    fn moduli() {
        assert_eq!(eq_strings(&builtin_system(SystemName::MxAsPrinted)), ["a a = b b"]);
        assert_eq!(eq_strings(&builtin_system(SystemName::MldivAsPrinted)), ["a:a = b:b"]);
        assert_eq!(eq_strings(&builtin_system(SystemName::MrdivAsPrinted)), ["a/b = b/a"]);
        assert_eq!(eq_strings(&builtin_system(SystemName::MrdivDiagonal)), ["a/a = b/b"]);
        let mx = builtin_system(SystemName::MxNeutral);
        assert_eq!(eq_strings(&mx), ["a e = a", "e a = a"]);
        assert_eq!(mx.constants(), &[Var::new('e').unwrap()]);
        assert_eq!(eq_strings(&builtin_system(SystemName::MldivNeutral)), ["a:e = a", "e:a = a"]);
        assert_eq!(eq_strings(&builtin_system(SystemName::MrdivNeutral)), ["a/e = a", "e/a = a"]);
    }

    #[test]
    fn presets_carry_a_single_operation() {
        let g1 = builtin_system(SystemName::G1);
        assert_eq!(eq_strings(&g1), ["a b = b a", "a e = a", "e a = a"]);
        assert_eq!(g1.ops(), [OpSymbol::Prod].into_iter().collect());
        let g2 = builtin_system(SystemName::G2);
        assert_eq!(eq_strings(&g2), ["a:b = b:a", "a:e = a", "e:a = a"]);
        let g3 = builtin_system(SystemName::G3);
        assert_eq!(eq_strings(&g3), ["a/b = b/a", "a/e = a", "e/a = a"]);
        let g0 = builtin_system(SystemName::G0);
        assert!(g0.same_theory(&builtin_system(SystemName::C0)));
        assert_eq!(g0.name, "G0");

        // The printed M/ repeats the commutativity equation of C3.
        let g3p = structure_preset(3, ModulusReading::AsPrinted).unwrap();
        assert_eq!(eq_strings(&g3p), ["a/b = b/a"]);
        assert_eq!(g3p.name, "G3[Mrdiv_as_printed]");
    }

    #[test]
    fn builtin_names_case_insensitive() {
        assert_eq!("c0".parse::<SystemName>().unwrap(), SystemName::C0);
        assert_eq!("MX_NEUTRAL".parse::<SystemName>().unwrap(), SystemName::MxNeutral);
        assert!("C4".parse::<SystemName>().is_err());
    }

    #[test]
    fn merge_examples() {
        let c1 = builtin_system(SystemName::C1);
        let m = merge(&[c1.clone(), builtin_system(SystemName::MldivAsPrinted)]);
        assert_eq!(m.len(), 3);
        let m = merge(&[c1.clone(), c1.clone()]);
        assert_eq!(m, c1);
        let m = merge(&[builtin_system(SystemName::C0), builtin_system(SystemName::MxNeutral)]);
        assert_eq!(m.len(), 5);
        assert_eq!(m.constants().len(), 1);
    }

    #[test]
    fn dedup_is_up_to_renaming() {
        let s = AxiomSystem::new(
            "t",
            ["ab = ba", "xy = yx", "ba = ab"].map(|l| parse_equation(l).unwrap()),
            [],
        );
        // "ba = ab" normalizes to "ab = ba" as well.
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn content_hash_ignores_names_and_spelling() {
        let a = AxiomSystem::new("x", [parse_equation("ab = ba").unwrap()], []);
        let b = AxiomSystem::new("y", [parse_equation("qp = pq").unwrap()], []);
        assert_eq!(a.content_hash(), b.content_hash());
        let c = builtin_system(SystemName::C1);
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn builtins_round_trip() {
        for sys in all_builtins() {
            for eq in sys.equations() {
                let text = eq.to_string();
                assert_eq!(&parse_equation(&text).unwrap(), eq, "{text}");
                assert_eq!(crate::terms::parse_term(&format_term(&eq.lhs)).unwrap(), eq.lhs);
            }
        }
    }

    #[test]
    fn axiom_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("comm.eq");
        std::fs::write(&p, "# commutativity\nab = ba\n\n").unwrap();
        let s = load_axioms(&p).unwrap();
        assert_eq!(s.name, "comm");
        assert_eq!(s.len(), 1);

        let p = dir.path().join("empty.eq");
        std::fs::write(&p, "").unwrap();
        assert!(load_axioms(&p).unwrap().is_empty());

        let p = dir.path().join("bad.eq");
        std::fs::write(&p, "ab = ba\nab =\n").unwrap();
        match load_axioms(&p) {
            Err(AxiomError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected line error, got {other:?}"),
        }

        assert!(matches!(
            load_axioms(&dir.path().join("missing.eq")),
            Err(AxiomError::Io { .. })
        ));
    }
}
