//! Finite algebras on `{0..n-1}`: evaluation, satisfaction, model
//! enumeration, and canonical forms.

pub(crate) mod compiled;
mod record;
pub(crate) mod search;

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::axioms::AxiomSystem;
use crate::terms::{Assignment, Equation, OpSet, OpSymbol, Term, Var};
use compiled::{Layout, UNSET};
use search::Engine;

pub use record::AlgebraRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("missing table {0}")]
    MissingTable(OpSymbol),
    #[error("no value for variable {0}")]
    MissingBinding(Var),
    #[error("algebra has no value for constant {0}")]
    MissingConstant(Var),
    #[error("carrier must have at least one element")]
    EmptyCarrier,
    #[error("invalid algebra: {0}")]
    Invalid(String),
    #[error(
        "enumerating {ops} table(s) at size {size} exceeds the default resource cap; \
         pass the override to run it anyway"
    )]
    ResourceCap { size: usize, ops: usize },
}

/// An `n × n` operation table, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Table {
    n: usize,
    cells: Vec<u8>,
}

impl Table {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> usize) -> Table {
        let mut cells = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let v = f(a, b);
                assert!(v < n, "table entry {v} out of range for size {n}");
                cells.push(v as u8);
            }
        }
        Table { n, cells }
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Table, ModelError> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::EmptyCarrier);
        }
        if n > u8::MAX as usize - 1 {
            return Err(ModelError::Invalid(format!("size {n} is too large")));
        }
        let mut cells = Vec::with_capacity(n * n);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::Invalid(format!(
                    "row {a} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for &v in row {
                if v >= n {
                    return Err(ModelError::Invalid(format!("entry {v} out of range in row {a}")));
                }
                cells.push(v as u8);
            }
        }
        Ok(Table { n, cells })
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> usize {
        self.cells[a * self.n + b] as usize
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.cells.chunks(self.n).map(|r| r.iter().map(|&v| v as usize).collect()).collect()
    }
}

/// A carrier `{0..size-1}` with some of the three operation tables and named
/// constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAlgebra {
    size: usize,
    tables: [Option<Table>; 3],
    constants: BTreeMap<Var, usize>,
}

impl FiniteAlgebra {
    pub fn new(size: usize) -> Result<FiniteAlgebra, ModelError> {
        if size == 0 {
            return Err(ModelError::EmptyCarrier);
        }
        Ok(FiniteAlgebra { size, tables: [None, None, None], constants: BTreeMap::new() })
    }

    pub fn with_table(mut self, op: OpSymbol, table: Table) -> Result<FiniteAlgebra, ModelError> {
        if table.n != self.size {
            return Err(ModelError::Invalid(format!(
                "{op} table has size {}, carrier has {}",
                table.n, self.size
            )));
        }
        self.tables[op.index()] = Some(table);
        Ok(self)
    }

    pub fn with_constant(mut self, name: Var, value: usize) -> Result<FiniteAlgebra, ModelError> {
        if value >= self.size {
            return Err(ModelError::Invalid(format!("constant {name} = {value} out of range")));
        }
        self.constants.insert(name, value);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn table(&self, op: OpSymbol) -> Option<&Table> {
        self.tables[op.index()].as_ref()
    }

    pub fn require(&self, op: OpSymbol) -> Result<&Table, ModelError> {
        self.table(op).ok_or(ModelError::MissingTable(op))
    }

    pub fn ops(&self) -> OpSet {
        OpSymbol::ALL.into_iter().filter(|&op| self.table(op).is_some()).collect()
    }

    pub fn constants(&self) -> &BTreeMap<Var, usize> {
        &self.constants
    }

    pub fn apply(&self, op: OpSymbol, a: usize, b: usize) -> Result<usize, ModelError> {
        Ok(self.require(op)?.get(a, b))
    }

    pub(crate) fn layout(&self) -> Layout {
        let consts: Vec<Var> = self.constants.keys().copied().collect();
        Layout::new(self.size, self.ops(), &consts)
    }

    pub(crate) fn to_cells(&self) -> Vec<u8> {
        let mut cells: Vec<u8> = self.constants.values().map(|&v| v as u8).collect();
        for t in self.tables.iter().flatten() {
            cells.extend_from_slice(&t.cells);
        }
        cells
    }

    pub(crate) fn from_cells(layout: &Layout, cells: &[u8]) -> FiniteAlgebra {
        let mut alg = FiniteAlgebra::new(layout.n).expect("layouts have a nonempty carrier");
        alg.overwrite(layout, cells);
        alg
    }

    /// Refills `self` in place from a cell vector of the same layout.
    pub(crate) fn overwrite(&mut self, layout: &Layout, cells: &[u8]) {
        debug_assert!(!cells.contains(&UNSET));
        for (i, c) in layout.consts.iter().enumerate() {
            self.constants.insert(*c, cells[i] as usize);
        }
        for op in layout.ops.iter() {
            let range = layout.table_range(op).unwrap();
            match &mut self.tables[op.index()] {
                Some(t) => t.cells.copy_from_slice(&cells[range]),
                slot => *slot = Some(Table { n: layout.n, cells: cells[range].to_vec() }),
            }
        }
    }
}

/// Recursive table lookup.
pub fn eval_term(alg: &FiniteAlgebra, t: &Term, v: &Assignment<usize>) -> Result<usize, ModelError> {
    match t {
        Term::Var(x) => match v.get(x) {
            Some(&val) if val < alg.size => Ok(val),
            Some(&val) => Err(ModelError::Invalid(format!("{x} = {val} out of range"))),
            None => Err(ModelError::MissingBinding(*x)),
        },
        Term::Apply(op, l, r) => {
            let table = alg.require(*op)?;
            Ok(table.get(eval_term(alg, l, v)?, eval_term(alg, r, v)?))
        }
    }
}

fn check_tables(alg: &FiniteAlgebra, ops: OpSet) -> Result<(), ModelError> {
    match ops.iter().find(|&op| alg.table(op).is_none()) {
        Some(op) => Err(ModelError::MissingTable(op)),
        None => Ok(()),
    }
}

/// First assignment of the non-fixed variables of `eq` (odometer order, first
/// variable most significant) under which the two sides differ.
pub fn find_violation(
    alg: &FiniteAlgebra,
    eq: &Equation,
    fixed: &Assignment<usize>,
) -> Result<Option<Assignment<usize>>, ModelError> {
    check_tables(alg, eq.ops())?;
    let free: Vec<Var> = eq.variables().into_iter().filter(|v| !fixed.contains_key(v)).collect();
    let mut vals = vec![0u8; free.len()];
    let mut env = fixed.clone();
    loop {
        for (v, &x) in free.iter().zip(&vals) {
            env.insert(*v, x as usize);
        }
        if eval_term(alg, &eq.lhs, &env)? != eval_term(alg, &eq.rhs, &env)? {
            return Ok(Some(free.iter().zip(&vals).map(|(v, &x)| (*v, x as usize)).collect()));
        }
        if !compiled::advance(&mut vals, alg.size) {
            return Ok(None);
        }
    }
}

/// Whether `eq` holds for every assignment of its variables.
pub fn satisfies(alg: &FiniteAlgebra, eq: &Equation) -> Result<bool, ModelError> {
    Ok(find_violation(alg, eq, &Assignment::new())?.is_none())
}

fn constant_env(alg: &FiniteAlgebra, sys: &AxiomSystem) -> Result<Assignment<usize>, ModelError> {
    sys.constants()
        .iter()
        .map(|c| alg.constants.get(c).map(|&v| (*c, v)).ok_or(ModelError::MissingConstant(*c)))
        .collect()
}

/// First axiom of `sys` that fails in `alg`, with its witness. Constants of
/// `sys` are bound from the algebra.
pub fn first_failure(
    alg: &FiniteAlgebra,
    sys: &AxiomSystem,
) -> Result<Option<(usize, Assignment<usize>)>, ModelError> {
    let env = constant_env(alg, sys)?;
    check_tables(alg, sys.ops())?;
    for (i, eq) in sys.equations().iter().enumerate() {
        if let Some(w) = find_violation(alg, eq, &env)? {
            return Ok(Some((i, w)));
        }
    }
    Ok(None)
}

pub fn satisfies_all(alg: &FiniteAlgebra, sys: &AxiomSystem) -> Result<bool, ModelError> {
    Ok(first_failure(alg, sys)?.is_none())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    /// Keep only the canonical (least) member of each isomorphism class.
    pub up_to_iso: bool,
    pub max_results: Option<NonZeroUsize>,
    /// Worker threads; output does not depend on it.
    pub parallel_width: usize,
    /// Operations to carry even if no axiom mentions them.
    pub extra_ops: OpSet,
    /// Lift the default size cap.
    pub allow_large: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            up_to_iso: false,
            max_results: None,
            parallel_width: 1,
            extra_ops: OpSet::EMPTY,
            allow_large: false,
        }
    }
}

impl EnumOptions {
    pub fn up_to_iso() -> EnumOptions {
        EnumOptions { up_to_iso: true, ..EnumOptions::default() }
    }
}

/// How an enumeration ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completion {
    /// Every model was visited.
    Exhausted,
    /// Stopped early at `max_results` or by the visitor.
    Truncated,
}

/// Free cells of the largest search the default cap admits: three
/// unconstrained tables at size 3.
const CAP_EXPONENT: f64 = 27.0 * 1.098_612_288_668_109_8; // 27 ln 3

fn check_cap(n: usize, ops: usize, opts: &EnumOptions) -> Result<(), ModelError> {
    let exponent = (ops * n * n) as f64 * (n as f64).ln();
    if !opts.allow_large && exponent > CAP_EXPONENT + 1e-9 {
        return Err(ModelError::ResourceCap { size: n, ops });
    }
    if n >= UNSET as usize {
        return Err(ModelError::Invalid(format!("size {n} is too large")));
    }
    Ok(())
}

/// A compiled enumeration problem: the models of `sys` of one size.
pub struct ModelSearch {
    engine: Engine,
    opts: EnumOptions,
}

impl ModelSearch {
    pub fn new(sys: &AxiomSystem, n: usize, opts: &EnumOptions) -> Result<ModelSearch, ModelError> {
        Self::with_equations(sys, &[], n, opts)
    }

    /// Like [`ModelSearch::new`], also carrying the operations of `extra`
    /// (which are not imposed).
    pub(crate) fn with_equations(
        sys: &AxiomSystem,
        extra: &[&Equation],
        n: usize,
        opts: &EnumOptions,
    ) -> Result<ModelSearch, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyCarrier);
        }
        let ops = extra.iter().fold(sys.ops().union(opts.extra_ops), |acc, eq| acc.union(eq.ops()));
        check_cap(n, ops.len(), opts)?;
        let layout = Layout::new(n, ops, sys.constants());
        let engine = Engine::new(layout, sys.equations(), opts.up_to_iso);
        Ok(ModelSearch { engine, opts: opts.clone() })
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.engine.layout
    }

    /// Visits packed models in order until done, capped, or told to stop.
    pub(crate) fn for_each_cells(&self, mut visit: impl FnMut(&[u8]) -> ControlFlow<()>) -> Completion {
        let limit = self.opts.max_results.map_or(usize::MAX, |m| m.get());
        let mut seen = 0usize;
        let flow = self.engine.run(self.opts.parallel_width, &mut |cells| {
            if seen == limit {
                return ControlFlow::Break(());
            }
            seen += 1;
            visit(cells)
        });
        if flow.is_break() {
            Completion::Truncated
        } else {
            Completion::Exhausted
        }
    }

    /// Visits models in deterministic order. The algebra passed to `visit` is
    /// reused between calls.
    pub fn for_each(&self, mut visit: impl FnMut(&FiniteAlgebra) -> ControlFlow<()>) -> Completion {
        let layout = self.engine.layout.clone();
        let mut buf = FiniteAlgebra::new(layout.n).expect("nonempty");
        self.for_each_cells(|cells| {
            buf.overwrite(&layout, cells);
            visit(&buf)
        })
    }

    pub fn count(&self) -> (u64, Completion) {
        let mut count = 0u64;
        let done = self.for_each_cells(|_| {
            count += 1;
            ControlFlow::Continue(())
        });
        (count, done)
    }

    pub fn collect(&self) -> (Vec<FiniteAlgebra>, Completion) {
        let mut out = Vec::new();
        let done = self.for_each(|alg| {
            out.push(alg.clone());
            ControlFlow::Continue(())
        });
        (out, done)
    }
}

/// All models of `sys` of size `n`, in lexicographic order of their
/// serialization (which, with `up_to_iso`, is the order of canonical forms).
pub fn enumerate_models(
    sys: &AxiomSystem,
    n: usize,
    opts: &EnumOptions,
) -> Result<(Vec<FiniteAlgebra>, Completion), ModelError> {
    Ok(ModelSearch::new(sys, n, opts)?.collect())
}

pub fn count_models(sys: &AxiomSystem, n: usize, up_to_iso: bool) -> Result<u64, ModelError> {
    let opts = EnumOptions { up_to_iso, ..EnumOptions::default() };
    Ok(ModelSearch::new(sys, n, &opts)?.count().0)
}

/// Isomorphism-invariant byte string: the size and signature, then the least
/// serialization of constants and tables over all `n!` relabelings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(pub Vec<u8>);

pub fn canonical_form(alg: &FiniteAlgebra) -> CanonicalForm {
    let layout = alg.layout();
    let mut bytes = vec![alg.size as u8, layout.ops.iter().fold(0u8, |m, op| m | 1 << op.index())];
    bytes.push(layout.consts.len() as u8);
    bytes.extend(layout.consts.iter().map(|c| c.name() as u8));
    bytes.extend(Engine::canonical_cells(&layout, &alg.to_cells()));
    CanonicalForm(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{builtin_system, SystemName};
    use crate::terms::{parse_equation, parse_term};

    fn add_mod(n: usize) -> Table {
        Table::from_fn(n, |a, b| (a + b) % n)
    }

    fn prod_alg(t: Table) -> FiniteAlgebra {
        FiniteAlgebra::new(t.size()).unwrap().with_table(OpSymbol::Prod, t).unwrap()
    }

    fn env(pairs: &[(char, usize)]) -> Assignment<usize> {
        pairs.iter().map(|&(c, v)| (Var::new(c).unwrap(), v)).collect()
    }

    #[test]
    fn eval_examples() {
        let z2 = prod_alg(add_mod(2));
        let t = parse_term("ab").unwrap();
        assert_eq!(eval_term(&z2, &t, &env(&[('a', 1), ('b', 1)])).unwrap(), 0);

        let one = prod_alg(add_mod(1));
        assert_eq!(eval_term(&one, &parse_term("(ab)(ba)").unwrap(), &env(&[('a', 0), ('b', 0)])).unwrap(), 0);

        let z3 = prod_alg(add_mod(3));
        assert_eq!(eval_term(&z3, &parse_term("(a b) b").unwrap(), &env(&[('a', 1), ('b', 2)])).unwrap(), 2);
    }

    #[test]
    fn eval_errors() {
        let z2 = prod_alg(add_mod(2));
        assert_eq!(
            eval_term(&z2, &parse_term("a:b").unwrap(), &env(&[('a', 0), ('b', 0)])),
            Err(ModelError::MissingTable(OpSymbol::LDiv))
        );
        assert_eq!(
            eval_term(&z2, &parse_term("ab").unwrap(), &env(&[('a', 0)])),
            Err(ModelError::MissingBinding(Var::new('b').unwrap()))
        );
    }

    #[test]
    fn satisfaction_examples() {
        let comm = parse_equation("ab = ba").unwrap();
        assert!(satisfies(&prod_alg(add_mod(1)), &comm).unwrap());
        assert!(satisfies(&prod_alg(add_mod(2)), &comm).unwrap());
        let left = prod_alg(Table::from_rows(&[vec![0, 0], vec![1, 1]]).unwrap());
        assert!(!satisfies(&left, &comm).unwrap());
        assert_eq!(
            find_violation(&left, &comm, &Assignment::new()).unwrap(),
            Some(env(&[('a', 0), ('b', 1)]))
        );
    }

    #[test]
    fn satisfies_all_examples() {
        let c0 = builtin_system(SystemName::C0);
        let mut one = FiniteAlgebra::new(1).unwrap();
        for op in OpSymbol::ALL {
            one = one.with_table(op, add_mod(1)).unwrap();
        }
        assert!(satisfies_all(&one, &c0).unwrap());
        assert!(satisfies_all(&prod_alg(add_mod(2)), &AxiomSystem::empty("none")).unwrap());

        let z2 = add_mod(2);
        let transposed = Table::from_fn(2, |a, b| z2.get(b, a));
        let triple = FiniteAlgebra::new(2)
            .unwrap()
            .with_table(OpSymbol::Prod, z2.clone())
            .unwrap()
            .with_table(OpSymbol::LDiv, z2.clone())
            .unwrap()
            .with_table(OpSymbol::RDiv, transposed)
            .unwrap();
        assert!(satisfies_all(&triple, &c0).unwrap());

        assert_eq!(
            satisfies_all(&prod_alg(add_mod(2)), &c0),
            Err(ModelError::MissingTable(OpSymbol::LDiv))
        );
    }

    #[test]
    fn constants_must_be_present() {
        let mx = builtin_system(SystemName::MxNeutral);
        let z2 = prod_alg(add_mod(2));
        assert_eq!(
            satisfies_all(&z2, &mx),
            Err(ModelError::MissingConstant(Var::new('e').unwrap()))
        );
        let z2e = z2.clone().with_constant(Var::new('e').unwrap(), 0).unwrap();
        assert!(satisfies_all(&z2e, &mx).unwrap());
        let z2e1 = z2.with_constant(Var::new('e').unwrap(), 1).unwrap();
        assert!(!satisfies_all(&z2e1, &mx).unwrap());
    }

    #[test]
    fn enumeration_counts() {
        let none = AxiomSystem::empty("none");
        let prod_only = EnumOptions { extra_ops: [OpSymbol::Prod].into_iter().collect(), ..EnumOptions::default() };
        assert_eq!(ModelSearch::new(&none, 2, &prod_only).unwrap().count().0, 16);
        let iso = EnumOptions { up_to_iso: true, ..prod_only.clone() };
        assert_eq!(ModelSearch::new(&none, 2, &iso).unwrap().count().0, 10);
        let comm = AxiomSystem::new("comm", [parse_equation("ab = ba").unwrap()], []);
        assert_eq!(count_models(&comm, 2, false).unwrap(), 8);
        assert_eq!(count_models(&builtin_system(SystemName::C1), 1, false).unwrap(), 1);
        assert_eq!(count_models(&builtin_system(SystemName::C1), 2, false).unwrap(), 128);
    }

    #[test]
    fn enumeration_emits_only_mentioned_ops() {
        let (models, done) = enumerate_models(&builtin_system(SystemName::G1), 2, &EnumOptions::default()).unwrap();
        assert_eq!(done, Completion::Exhausted);
        assert!(!models.is_empty());
        for m in &models {
            assert_eq!(m.ops(), [OpSymbol::Prod].into_iter().collect());
            assert!(m.constants().contains_key(&Var::new('e').unwrap()));
        }
    }

    #[test]
    fn max_results_truncates() {
        let none = AxiomSystem::empty("none");
        let opts = EnumOptions {
            extra_ops: [OpSymbol::Prod].into_iter().collect(),
            max_results: NonZeroUsize::new(5),
            ..EnumOptions::default()
        };
        let (models, done) = enumerate_models(&none, 2, &opts).unwrap();
        assert_eq!(models.len(), 5);
        assert_eq!(done, Completion::Truncated);
        let opts = EnumOptions { max_results: NonZeroUsize::new(16), ..opts };
        assert_eq!(enumerate_models(&none, 2, &opts).unwrap().1, Completion::Exhausted);
    }

    #[test]
    fn resource_cap() {
        let c0 = builtin_system(SystemName::C0);
        assert!(ModelSearch::new(&c0, 3, &EnumOptions::default()).is_ok());
        assert_eq!(
            ModelSearch::new(&c0, 4, &EnumOptions::default()).err(),
            Some(ModelError::ResourceCap { size: 4, ops: 3 })
        );
        let opts = EnumOptions { allow_large: true, ..EnumOptions::default() };
        assert!(ModelSearch::new(&c0, 4, &opts).is_ok());
        assert_eq!(
            ModelSearch::new(&c0, 0, &EnumOptions::default()).err(),
            Some(ModelError::EmptyCarrier)
        );
    }

    #[test]
    fn canonical_form_examples() {
        let z2 = prod_alg(add_mod(2));
        let swapped = prod_alg(Table::from_fn(2, |a, b| 1 - ((1 - a) + (1 - b)) % 2));
        assert_ne!(z2, swapped);
        assert_eq!(canonical_form(&z2), canonical_form(&swapped));

        let a = prod_alg(add_mod(1));
        let b = FiniteAlgebra::new(1).unwrap().with_table(OpSymbol::Prod, Table::from_fn(1, |_, _| 0)).unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }

    #[test]
    fn cells_round_trip() {
        let e = Var::new('e').unwrap();
        let alg = prod_alg(add_mod(3)).with_constant(e, 2).unwrap();
        let layout = alg.layout();
        assert_eq!(FiniteAlgebra::from_cells(&layout, &alg.to_cells()), alg);
    }
}
