//! Reference implementations used as oracles. They share no code with the
//! library beyond its public data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use algebrist::axioms::AxiomSystem;
use algebrist::consequence::{DerivationStep, Rule};
use algebrist::models::FiniteAlgebra;
use algebrist::terms::{Equation, OpSet, OpSymbol, Term, Var};

/// Cell layout: constants in name order, then each table row-major in the
/// order prod, ldiv, rdiv.
#[derive(Clone, Debug)]
pub struct Shape {
    pub n: usize,
    pub consts: Vec<Var>,
    pub ops: Vec<OpSymbol>,
}

impl Shape {
    pub fn new(n: usize, consts: &[Var], ops: OpSet) -> Shape {
        let mut consts = consts.to_vec();
        consts.sort();
        Shape { n, consts, ops: OpSymbol::ALL.into_iter().filter(|o| ops.contains(*o)).collect() }
    }

    pub fn cells(&self) -> usize {
        self.consts.len() + self.ops.len() * self.n * self.n
    }

    pub fn table_base(&self, op: OpSymbol) -> usize {
        let k = self.ops.iter().position(|o| *o == op).expect("op in shape");
        self.consts.len() + k * self.n * self.n
    }

    /// Cell positions of slot `s` (constants first, then tables).
    pub fn slot_cells(&self, s: usize) -> std::ops::Range<usize> {
        if s < self.consts.len() {
            s..s + 1
        } else {
            let base = self.consts.len() + (s - self.consts.len()) * self.n * self.n;
            base..base + self.n * self.n
        }
    }

    pub fn slots(&self) -> usize {
        self.consts.len() + self.ops.len()
    }

    pub fn slot_of_op(&self, op: OpSymbol) -> usize {
        self.consts.len() + self.ops.iter().position(|o| *o == op).unwrap()
    }

    pub fn cells_of(&self, alg: &FiniteAlgebra) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.cells());
        self.fill_cells(alg, &mut out);
        out
    }

    pub fn fill_cells(&self, alg: &FiniteAlgebra, out: &mut Vec<u8>) {
        out.clear();
        for c in &self.consts {
            out.push(alg.constants()[c] as u8);
        }
        for &op in &self.ops {
            let t = alg.table(op).expect("table present");
            for x in 0..self.n {
                for y in 0..self.n {
                    out.push(t.get(x, y) as u8);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Code {
    Var(u8),
    Cell(u16),
    Op(u16, u8, u8),
}

/// An equation flattened to postfix code over a cell vector.
#[derive(Clone, Debug)]
pub struct Flat {
    code: Vec<Code>,
    lhs: usize,
    rhs: usize,
    vars: usize,
    n: usize,
    /// Slots read by the equation.
    pub slots: Vec<usize>,
}

impl Flat {
    pub fn new(eq: &Equation, shape: &Shape) -> Flat {
        let mut vars: Vec<Var> = Vec::new();
        let mut f = Flat { code: Vec::new(), lhs: 0, rhs: 0, vars: 0, n: shape.n, slots: Vec::new() };
        f.lhs = f.push(&eq.lhs, shape, &mut vars);
        f.rhs = f.push(&eq.rhs, shape, &mut vars);
        f.vars = vars.len();
        assert!(f.vars <= 8 && f.code.len() <= 32, "equation too large for the reference evaluator");
        f.slots.sort();
        f.slots.dedup();
        f
    }

    fn push(&mut self, t: &Term, shape: &Shape, vars: &mut Vec<Var>) -> usize {
        let c = match t {
            Term::Var(v) => match shape.consts.iter().position(|c| c == v) {
                Some(i) => {
                    self.slots.push(i);
                    Code::Cell(i as u16)
                }
                None => {
                    if !vars.contains(v) {
                        vars.push(*v);
                    }
                    Code::Var(vars.iter().position(|w| w == v).unwrap() as u8)
                }
            },
            Term::Apply(op, l, r) => {
                let l = self.push(l, shape, vars);
                let r = self.push(r, shape, vars);
                self.slots.push(shape.slot_of_op(*op));
                Code::Op(shape.table_base(*op) as u16, l as u8, r as u8)
            }
        };
        self.code.push(c);
        self.code.len() - 1
    }

    fn sides(&self, cells: &[u8], vals: &[u8]) -> (u8, u8) {
        let mut stack = [0u8; 32];
        for (i, c) in self.code.iter().enumerate() {
            stack[i] = match *c {
                Code::Var(v) => vals[v as usize],
                Code::Cell(p) => cells[p as usize],
                Code::Op(base, l, r) => {
                    cells[base as usize + stack[l as usize] as usize * self.n + stack[r as usize] as usize]
                }
            };
        }
        (stack[self.lhs], stack[self.rhs])
    }

    /// First violating assignment, first variable most significant.
    pub fn violation(&self, cells: &[u8]) -> Option<Vec<u8>> {
        let mut vals = [0u8; 8];
        loop {
            let (l, r) = self.sides(cells, &vals);
            if l != r {
                return Some(vals[..self.vars].to_vec());
            }
            let mut k = self.vars;
            loop {
                if k == 0 {
                    return None;
                }
                k -= 1;
                vals[k] += 1;
                if (vals[k] as usize) < self.n {
                    break;
                }
                vals[k] = 0;
            }
        }
    }

    pub fn holds(&self, cells: &[u8]) -> bool {
        let mut vals = [0u8; 8];
        loop {
            let (l, r) = self.sides(cells, &vals);
            if l != r {
                return false;
            }
            let mut k = self.vars;
            loop {
                if k == 0 {
                    return true;
                }
                k -= 1;
                vals[k] += 1;
                if (vals[k] as usize) < self.n {
                    break;
                }
                vals[k] = 0;
            }
        }
    }
}

/// Packs selected cells, first most significant, base `n`.
pub fn pack(cells: &[u8], positions: &[usize], n: usize) -> u64 {
    positions.iter().fold(0u64, |acc, &p| acc * n as u64 + cells[p] as u64)
}

/// Groups of slots tied together by some equation.
pub fn components(shape: &Shape, eqs: &[Flat]) -> Vec<Vec<usize>> {
    let k = shape.slots();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = find(p, p[x]);
            p[x] = r;
            r
        }
    }
    for e in eqs {
        for w in e.slots.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..k {
        let r = find(&mut parent, s);
        groups.entry(r).or_default().push(s);
    }
    groups.into_values().collect()
}

/// Generate and test: every assignment of the component's slots, each
/// equation checked as soon as all slots it reads are filled.
pub struct ComponentOracle {
    pub slots: Vec<usize>,
    pub positions: Vec<usize>,
    pub codes: HashSet<u64>,
}

pub fn component_oracle(shape: &Shape, eqs: &[Flat], slots: &[usize]) -> ComponentOracle {
    let positions: Vec<usize> = slots.iter().flat_map(|&s| shape.slot_cells(s)).collect();
    // Equations of this component, keyed by the level at which they become
    // checkable.
    let mut at_level: Vec<Vec<&Flat>> = vec![Vec::new(); slots.len()];
    for e in eqs {
        if e.slots.iter().all(|s| slots.contains(s)) && !e.slots.is_empty() {
            let level = e.slots.iter().map(|s| slots.iter().position(|x| x == s).unwrap()).max().unwrap();
            at_level[level].push(e);
        }
    }
    let mut cells = vec![0u8; shape.cells()];
    let mut codes = HashSet::new();
    fill(shape, slots, &at_level, 0, &mut cells, &positions, &mut codes);
    ComponentOracle { slots: slots.to_vec(), positions, codes }
}

fn fill(
    shape: &Shape,
    slots: &[usize],
    at_level: &[Vec<&Flat>],
    level: usize,
    cells: &mut [u8],
    positions: &[usize],
    codes: &mut HashSet<u64>,
) {
    if level == slots.len() {
        codes.insert(pack(cells, positions, shape.n));
        return;
    }
    let range = shape.slot_cells(slots[level]);
    for p in range.clone() {
        cells[p] = 0;
    }
    loop {
        if at_level[level].iter().all(|e| e.holds(cells)) {
            fill(shape, slots, at_level, level + 1, cells, positions, codes);
        }
        let mut p = range.end;
        loop {
            if p == range.start {
                return;
            }
            p -= 1;
            cells[p] += 1;
            if (cells[p] as usize) < shape.n {
                break;
            }
            cells[p] = 0;
        }
    }
}

pub fn permutations(n: usize) -> Vec<Vec<u8>> {
    fn go(prefix: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for x in 0..n as u8 {
            if !prefix.contains(&x) {
                prefix.push(x);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

/// Cells of the model relabeled by `sigma`: element `x` becomes `sigma[x]`.
pub fn relabel(shape: &Shape, cells: &[u8], sigma: &[u8]) -> Vec<u8> {
    let n = shape.n;
    let mut out = vec![0u8; cells.len()];
    let k = shape.consts.len();
    for i in 0..k {
        out[i] = sigma[cells[i] as usize];
    }
    for t in 0..shape.ops.len() {
        let base = k + t * n * n;
        for x in 0..n {
            for y in 0..n {
                let (sx, sy) = (sigma[x] as usize, sigma[y] as usize);
                out[base + sx * n + sy] = sigma[cells[base + x * n + y] as usize];
            }
        }
    }
    out
}

/// Whether no relabeling gives a lexicographically smaller cell vector.
pub fn is_canonical(shape: &Shape, cells: &[u8], perms: &[Vec<u8>]) -> bool {
    let n = shape.n;
    let k = shape.consts.len();
    'perm: for sigma in perms {
        let mut inv = vec![0u8; n];
        for (x, &s) in sigma.iter().enumerate() {
            inv[s as usize] = x as u8;
        }
        for (p, &c) in cells.iter().enumerate() {
            let r = if p < k {
                sigma[c as usize]
            } else {
                let q = (p - k) % (n * n);
                let base = p - q;
                let (i, j) = (inv[q / n] as usize, inv[q % n] as usize);
                sigma[cells[base + i * n + j] as usize]
            };
            if r < c {
                return false;
            }
            if r > c {
                continue 'perm;
            }
        }
    }
    true
}

/// Least relabeling of the cell vector.
pub fn canonical(shape: &Shape, cells: &[u8], perms: &[Vec<u8>]) -> Vec<u8> {
    perms.iter().map(|s| relabel(shape, cells, s)).min().unwrap()
}

fn matches(pat: &Term, t: &Term, consts: &[Var], s: &mut BTreeMap<Var, Term>) -> bool {
    match (pat, t) {
        (Term::Var(v), _) if consts.contains(v) => pat == t,
        (Term::Var(v), _) => s.entry(*v).or_insert_with(|| t.clone()) == t,
        (Term::Apply(o1, l1, r1), Term::Apply(o2, l2, r2)) => {
            o1 == o2 && matches(l1, l2, consts, s) && matches(r1, r2, consts, s)
        }
        _ => false,
    }
}

/// Replays a derivation rule by rule.
pub fn validate(sys: &AxiomSystem, steps: &[DerivationStep], goal: &Equation) -> Result<(), String> {
    for (i, st) in steps.iter().enumerate() {
        if st.premises.iter().any(|&p| p >= i) {
            return Err(format!("step {i} cites a later step"));
        }
        let prem: Vec<&Equation> = st.premises.iter().map(|&p| &steps[p].equation).collect();
        let e = &st.equation;
        let ok = match (st.rule, prem.as_slice()) {
            (Rule::AxiomInstance, []) => sys.equations().iter().any(|a| a == e),
            (Rule::Reflexivity, []) => e.lhs == e.rhs,
            (Rule::Symmetry, [p]) => p.lhs == e.rhs && p.rhs == e.lhs,
            (Rule::Transitivity, [p, q]) => p.rhs == q.lhs && p.lhs == e.lhs && q.rhs == e.rhs,
            (Rule::Congruence, [p, q]) => {
                e.lhs.clone() == Term::apply(op_of(&e.lhs), p.lhs.clone(), q.lhs.clone())
                    && e.rhs.clone() == Term::apply(op_of(&e.lhs), p.rhs.clone(), q.rhs.clone())
            }
            (Rule::Substitution, [p]) => {
                let mut s = BTreeMap::new();
                matches(&p.lhs, &e.lhs, sys.constants(), &mut s) && matches(&p.rhs, &e.rhs, sys.constants(), &mut s)
            }
            _ => false,
        };
        if !ok {
            return Err(format!("step {i} ({:?}) does not follow: {e}", st.rule));
        }
    }
    match steps.last() {
        Some(s) if &s.equation == goal => Ok(()),
        _ => Err("derivation does not end in the goal".to_string()),
    }
}

fn op_of(t: &Term) -> OpSymbol {
    match t {
        Term::Apply(op, _, _) => *op,
        Term::Var(_) => OpSymbol::Prod,
    }
}

/// Every model of `sys` over `ops` (at least the system's operations) of size
/// `n`, by brute force, as cell vectors in lexicographic order.
pub fn brute_force_models(sys: &AxiomSystem, ops: OpSet, n: usize) -> Vec<Vec<u8>> {
    let shape = Shape::new(n, sys.constants(), sys.ops().union(ops));
    let eqs: Vec<Flat> = sys.equations().iter().map(|e| Flat::new(e, &shape)).collect();
    let total = shape.cells();
    let mut cells = vec![0u8; total];
    let mut out = Vec::new();
    loop {
        if eqs.iter().all(|e| e.holds(&cells)) {
            out.push(cells.clone());
        }
        let mut p = total;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            cells[p] += 1;
            if (cells[p] as usize) < n {
                break;
            }
            cells[p] = 0;
        }
    }
}
