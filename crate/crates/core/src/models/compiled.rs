//! Equations flattened for evaluation against a packed cell vector.
//!
//! A cell vector lists the constants first (in name order), then each present
//! operation table row-major, in the order prod, ldiv, rdiv. That order is also
//! the serialization order used for canonical forms.

use crate::terms::{Equation, OpSet, OpSymbol, Term, Var};

pub(crate) const UNSET: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub n: usize,
    pub ops: OpSet,
    pub consts: Vec<Var>,
    base: [usize; 3],
    pub cells: usize,
}

impl Layout {
    pub fn new(n: usize, ops: OpSet, consts: &[Var]) -> Layout {
        let mut base = [usize::MAX; 3];
        let mut next = consts.len();
        for op in ops.iter() {
            base[op.index()] = next;
            next += n * n;
        }
        Layout { n, ops, consts: consts.to_vec(), base, cells: next }
    }

    #[inline]
    pub fn cell(&self, op: usize, x: u8, y: u8) -> usize {
        self.base[op] + x as usize * self.n + y as usize
    }

    pub fn table_range(&self, op: OpSymbol) -> Option<std::ops::Range<usize>> {
        let b = self.base[op.index()];
        (b != usize::MAX).then(|| b..b + self.n * self.n)
    }

    /// Trigger key of a cell: its constant index, or `consts.len()` plus the
    /// operation index for table cells.
    pub fn key(&self, cell: usize) -> usize {
        if cell < self.consts.len() {
            return cell;
        }
        let k = self.consts.len();
        (0..3)
            .filter(|&o| self.base[o] != usize::MAX && cell >= self.base[o])
            .max_by_key(|&o| self.base[o])
            .map(|o| k + o)
            .expect("cell inside some table")
    }

    pub fn keys(&self) -> usize {
        self.consts.len() + 3
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Node {
    Var(u8),
    Const(u8),
    Op(u8, u16, u16),
}

/// Partial evaluation result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Ev {
    Val(u8),
    /// Arguments known, but the cell holding the result is unassigned.
    Need(usize),
    Stuck,
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledEquation {
    nodes: Vec<Node>,
    lhs: u16,
    rhs: u16,
    /// Quantified variables in first-occurrence order.
    pub vars: Vec<Var>,
    /// Trigger keys of everything the equation reads.
    pub keys: Vec<usize>,
}

impl CompiledEquation {
    pub fn new(eq: &Equation, layout: &Layout) -> CompiledEquation {
        let vars: Vec<Var> =
            eq.variables().into_iter().filter(|v| !layout.consts.contains(v)).collect();
        let mut c = CompiledEquation { nodes: Vec::new(), lhs: 0, rhs: 0, vars, keys: Vec::new() };
        c.lhs = c.push(&eq.lhs, layout);
        c.rhs = c.push(&eq.rhs, layout);
        let k = layout.consts.len();
        for node in &c.nodes {
            let key = match *node {
                Node::Const(i) => i as usize,
                Node::Op(o, _, _) => k + o as usize,
                Node::Var(_) => continue,
            };
            if !c.keys.contains(&key) {
                c.keys.push(key);
            }
        }
        c
    }

    fn push(&mut self, t: &Term, layout: &Layout) -> u16 {
        let node = match t {
            Term::Var(v) => match layout.consts.iter().position(|c| c == v) {
                Some(i) => Node::Const(i as u8),
                None => Node::Var(self.vars.iter().position(|w| w == v).unwrap() as u8),
            },
            Term::Apply(op, l, r) => {
                let l = self.push(l, layout);
                let r = self.push(r, layout);
                Node::Op(op.index() as u8, l, r)
            }
        };
        self.nodes.push(node);
        (self.nodes.len() - 1) as u16
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    /// Evaluates both sides on fully assigned cells.
    #[inline]
    pub fn eval_full(&self, layout: &Layout, cells: &[u8], vals: &[u8], scratch: &mut Vec<u8>) -> (u8, u8) {
        scratch.clear();
        for node in &self.nodes {
            let v = match *node {
                Node::Var(i) => vals[i as usize],
                Node::Const(i) => cells[i as usize],
                Node::Op(o, l, r) => {
                    cells[layout.cell(o as usize, scratch[l as usize], scratch[r as usize])]
                }
            };
            scratch.push(v);
        }
        (scratch[self.lhs as usize], scratch[self.rhs as usize])
    }

    /// Evaluates both sides on partially assigned cells.
    #[inline]
    pub fn eval_partial(&self, layout: &Layout, cells: &[u8], vals: &[u8], scratch: &mut Vec<Ev>) -> (Ev, Ev) {
        scratch.clear();
        for node in &self.nodes {
            let v = match *node {
                Node::Var(i) => Ev::Val(vals[i as usize]),
                Node::Const(i) => match cells[i as usize] {
                    UNSET => Ev::Need(i as usize),
                    x => Ev::Val(x),
                },
                Node::Op(o, l, r) => match (scratch[l as usize], scratch[r as usize]) {
                    (Ev::Val(x), Ev::Val(y)) => {
                        let c = layout.cell(o as usize, x, y);
                        match cells[c] {
                            UNSET => Ev::Need(c),
                            v => Ev::Val(v),
                        }
                    }
                    _ => Ev::Stuck,
                },
            };
            scratch.push(v);
        }
        (scratch[self.lhs as usize], scratch[self.rhs as usize])
    }

    /// First assignment (odometer order, first variable most significant)
    /// under which the sides differ.
    pub fn first_violation(&self, layout: &Layout, cells: &[u8]) -> Option<Vec<u8>> {
        let mut scratch = Vec::with_capacity(self.nodes.len());
        let mut vals = Vec::new();
        self.violated(layout, cells, &mut vals, &mut scratch).then_some(vals)
    }

    /// Like [`first_violation`](Self::first_violation) with caller-owned
    /// buffers; on `true`, `vals` holds the witness.
    pub fn violated(&self, layout: &Layout, cells: &[u8], vals: &mut Vec<u8>, scratch: &mut Vec<u8>) -> bool {
        vals.clear();
        vals.resize(self.arity(), 0);
        loop {
            let (l, r) = self.eval_full(layout, cells, vals, scratch);
            if l != r {
                return true;
            }
            if !advance(vals, layout.n) {
                return false;
            }
        }
    }
}

/// Odometer step over `[0, n)^k`, last position fastest.
pub(crate) fn advance(vals: &mut [u8], n: usize) -> bool {
    for slot in vals.iter_mut().rev() {
        *slot += 1;
        if (*slot as usize) < n {
            return true;
        }
        *slot = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_equation;

    #[test]
    fn layout_offsets() {
        let e = Var::new('e').unwrap();
        let ops: OpSet = [OpSymbol::Prod, OpSymbol::RDiv].into_iter().collect();
        let l = Layout::new(3, ops, &[e]);
        assert_eq!(l.cells, 1 + 9 + 9);
        assert_eq!(l.cell(0, 0, 0), 1);
        assert_eq!(l.cell(2, 2, 2), 18);
        assert_eq!(l.key(0), 0);
        assert_eq!(l.key(5), 1);
        assert_eq!(l.key(12), 3);
        assert!(l.table_range(OpSymbol::LDiv).is_none());
    }

    #[test]
    fn odometer_order() {
        let mut v = vec![0u8, 0];
        let mut seen = vec![v.clone()];
        while advance(&mut v, 2) {
            seen.push(v.clone());
        }
        assert_eq!(seen, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn partial_eval_reports_needed_cell() {
        let l = Layout::new(2, OpSet::ALL, &[]);
        let eq = parse_equation("a:b = a/b").unwrap();
        let c = CompiledEquation::new(&eq, &l);
        let mut cells = vec![UNSET; l.cells];
        cells[l.cell(1, 0, 1)] = 1;
        let mut scratch = Vec::new();
        let (lhs, rhs) = c.eval_partial(&l, &cells, &[0, 1], &mut scratch);
        assert_eq!(lhs, Ev::Val(1));
        assert_eq!(rhs, Ev::Need(l.cell(2, 0, 1)));
    }
}
