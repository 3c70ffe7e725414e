//! Backtracking model search over packed cell vectors.
//!
//! Cells are branched on in serialization order with values ascending, so
//! models come out in lexicographic order of their cell vectors. After every
//! assignment the equations that read the touched operation (or constant) are
//! re-scanned over all ground instances: a violated instance prunes, and an
//! instance with one side known and the other waiting on a single cell forces
//! that cell. With isomorphism reduction on, a node is cut as soon as some
//! relabeling provably maps it to a lexicographically smaller vector, which
//! leaves exactly the canonical representatives.
//!
//! When the equations fall into groups that share no operation or constant,
//! each group is solved on its own and the models are streamed as the product
//! of the group solutions, still in lexicographic order.

use std::ops::ControlFlow;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::compiled::{advance, CompiledEquation, Ev, Layout, UNSET};
use crate::terms::Equation;

/// A relabeling of the carrier as it acts on cell vectors.
struct CellPerm {
    /// For position `i` of the relabeled vector, the source cell.
    source: Vec<u32>,
    /// Element relabeling.
    map: Vec<u8>,
}

pub(crate) struct Engine {
    pub layout: Layout,
    eqs: Vec<CompiledEquation>,
    /// Ground instances, flattened `arity` values at a time.
    instances: Vec<Vec<u8>>,
    /// Equations to rescan per trigger key.
    triggers: Vec<Vec<usize>>,
    key_of_cell: Vec<usize>,
    perms: Vec<CellPerm>,
    up_to_iso: bool,
    /// Cells this engine branches on, ascending; `None` for all of them.
    branch: Option<Vec<usize>>,
    /// Independent groups, when there are at least two.
    parts: Vec<Engine>,
}

/// Bytes of group solutions kept before giving up on the product walk.
const PRODUCT_BUDGET: usize = 1 << 24;

/// A maximal run of cells belonging to one group.
struct Segment {
    start: usize,
    len: usize,
    part: usize,
    /// Position of the run inside the group's own cell list.
    offset: usize,
}

struct State {
    cells: Vec<u8>,
    trail: Vec<usize>,
    dirty: Vec<bool>,
    stack: Vec<usize>,
    scratch: Vec<Ev>,
}

impl State {
    fn new(cells: Vec<u8>, eqs: usize) -> State {
        State { cells, trail: Vec::new(), dirty: vec![false; eqs], stack: Vec::new(), scratch: Vec::new() }
    }

    fn undo(&mut self, mark: usize) {
        for c in self.trail.drain(mark..) {
            self.cells[c] = UNSET;
        }
    }
}

/// Every permutation of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..n as u8).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Source cell and value map for relabeling by `sigma`:
/// `(σ·A).c = σ(A.c)` and `(σ·T)[σx][σy] = σ(T[x][y])`.
pub(crate) fn cell_sources(layout: &Layout, sigma: &[u8]) -> Vec<u32> {
    let n = layout.n;
    let mut inv = vec![0u8; n];
    for (x, &s) in sigma.iter().enumerate() {
        inv[s as usize] = x as u8;
    }
    let mut source = Vec::with_capacity(layout.cells);
    for c in 0..layout.consts.len() {
        source.push(c as u32);
    }
    for op in layout.ops.iter() {
        for x in 0..n as u8 {
            for y in 0..n as u8 {
                source.push(layout.cell(op.index(), inv[x as usize], inv[y as usize]) as u32);
            }
        }
    }
    source
}

impl Engine {
    pub fn new(layout: Layout, equations: &[Equation], up_to_iso: bool) -> Engine {
        let mut engine = Engine::build(layout, equations, up_to_iso, None);
        let groups = engine.groups();
        if groups.len() >= 2 {
            engine.parts = groups
                .into_iter()
                .map(|(cells, eqs)| {
                    let eqs: Vec<Equation> = eqs.iter().map(|&i| equations[i].clone()).collect();
                    Engine::build(engine.layout.clone(), &eqs, false, Some(cells))
                })
                .collect();
        }
        engine
    }

    /// Cells and equation indices of each independent group, in order of
    /// their first cell. Empty when some equation reads no cell at all.
    fn groups(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let keys = self.layout.keys();
        let mut parent: Vec<usize> = (0..keys).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for eq in &self.eqs {
            let Some(&first) = eq.keys.first() else {
                return Vec::new();
            };
            for &k in &eq.keys[1..] {
                let (a, b) = (find(&mut parent, first), find(&mut parent, k));
                parent[a] = b;
            }
        }
        let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        for c in 0..self.layout.cells {
            let root = find(&mut parent, self.key_of_cell[c]);
            match groups.iter_mut().find(|g| g.0 == root) {
                Some(g) => g.1.push(c),
                None => groups.push((root, vec![c], Vec::new())),
            }
        }
        for (i, eq) in self.eqs.iter().enumerate() {
            let root = find(&mut parent, eq.keys[0]);
            if let Some(g) = groups.iter_mut().find(|g| g.0 == root) {
                g.2.push(i);
            }
        }
        groups.into_iter().map(|(_, cells, eqs)| (cells, eqs)).collect()
    }

    fn build(layout: Layout, equations: &[Equation], up_to_iso: bool, branch: Option<Vec<usize>>) -> Engine {
        let eqs: Vec<CompiledEquation> =
            equations.iter().map(|eq| CompiledEquation::new(eq, &layout)).collect();
        let n = layout.n;
        let instances = eqs
            .iter()
            .map(|eq| {
                let mut flat = Vec::new();
                let mut vals = vec![0u8; eq.arity()];
                loop {
                    flat.extend_from_slice(&vals);
                    if !advance(&mut vals, n) {
                        break;
                    }
                }
                flat
            })
            .collect();
        let mut triggers = vec![Vec::new(); layout.keys()];
        for (i, eq) in eqs.iter().enumerate() {
            for &k in &eq.keys {
                triggers[k].push(i);
            }
        }
        let key_of_cell = (0..layout.cells).map(|c| layout.key(c)).collect();
        let perms = if up_to_iso {
            permutations(n)
                .into_iter()
                .skip(1)
                .map(|sigma| CellPerm { source: cell_sources(&layout, &sigma), map: sigma })
                .collect()
        } else {
            Vec::new()
        };
        Engine { layout, eqs, instances, triggers, key_of_cell, perms, up_to_iso, branch, parts: Vec::new() }
    }

    fn next_cell(&self, cells: &[u8]) -> Option<usize> {
        match &self.branch {
            None => cells.iter().position(|&c| c == UNSET),
            Some(b) => b.iter().copied().find(|&c| cells[c] == UNSET),
        }
    }

    fn set(&self, st: &mut State, cell: usize, v: u8) {
        st.cells[cell] = v;
        st.trail.push(cell);
        for &e in &self.triggers[self.key_of_cell[cell]] {
            if !st.dirty[e] {
                st.dirty[e] = true;
                st.stack.push(e);
            }
        }
    }

    fn propagate(&self, st: &mut State) -> bool {
        while let Some(e) = st.stack.pop() {
            st.dirty[e] = false;
            if !self.scan(st, e) {
                for e in st.stack.drain(..) {
                    st.dirty[e] = false;
                }
                return false;
            }
        }
        true
    }

    fn scan(&self, st: &mut State, e: usize) -> bool {
        let eq = &self.eqs[e];
        let k = eq.arity();
        let inst = &self.instances[e];
        let count = inst.len().checked_div(k).unwrap_or(1);
        for i in 0..count {
            let vals = &inst[i * k..i * k + k];
            let (l, r) = eq.eval_partial(&self.layout, &st.cells, vals, &mut st.scratch);
            match (l, r) {
                (Ev::Val(x), Ev::Val(y)) if x != y => return false,
                (Ev::Val(x), Ev::Need(c)) | (Ev::Need(c), Ev::Val(x)) => self.set(st, c, x),
                _ => {}
            }
        }
        true
    }

    fn assign(&self, st: &mut State, cell: usize, v: u8) -> bool {
        self.set(st, cell, v);
        self.propagate(st)
    }

    /// True when some relabeling maps every completion of `cells` to a
    /// strictly smaller vector. On complete vectors this is "not canonical".
    fn dominated(&self, cells: &[u8]) -> bool {
        'perm: for p in &self.perms {
            for (i, &src) in p.source.iter().enumerate() {
                let here = cells[i];
                let there = cells[src as usize];
                if here == UNSET || there == UNSET {
                    continue 'perm;
                }
                let mapped = p.map[there as usize];
                if mapped < here {
                    return true;
                }
                if mapped > here {
                    continue 'perm;
                }
            }
        }
        false
    }

    fn root(&self) -> Option<State> {
        let mut st = State::new(vec![UNSET; self.layout.cells], self.eqs.len());
        for e in 0..self.eqs.len() {
            st.dirty[e] = true;
            st.stack.push(e);
        }
        self.propagate(&mut st).then_some(st)
    }

    fn dfs(&self, st: &mut State, sink: &mut dyn FnMut(&[u8]) -> ControlFlow<()>) -> ControlFlow<()> {
        if self.up_to_iso && self.dominated(&st.cells) {
            return ControlFlow::Continue(());
        }
        let Some(cell) = self.next_cell(&st.cells) else {
            return sink(&st.cells);
        };
        for v in 0..self.layout.n as u8 {
            let mark = st.trail.len();
            if self.assign(st, cell, v) {
                let flow = self.dfs(st, sink);
                if flow.is_break() {
                    st.undo(mark);
                    return flow;
                }
            }
            st.undo(mark);
        }
        ControlFlow::Continue(())
    }

    #[cfg(test)]
    fn holds_everywhere(&self, cells: &[u8]) -> bool {
        self.eqs.iter().all(|eq| eq.first_violation(&self.layout, cells).is_none())
    }

    /// Open nodes after expanding breadth-first until there are at least
    /// `target` of them, in lexicographic order.
    fn frontier(&self, target: usize) -> Vec<Vec<u8>> {
        let Some(root) = self.root() else {
            return Vec::new();
        };
        let mut level = vec![root.cells];
        loop {
            if level.len() >= target {
                return level;
            }
            let mut next = Vec::new();
            let mut grew = false;
            for cells in level {
                let Some(cell) = self.next_cell(&cells) else {
                    next.push(cells);
                    continue;
                };
                grew = true;
                let mut st = State::new(cells, self.eqs.len());
                for v in 0..self.layout.n as u8 {
                    let mark = st.trail.len();
                    if self.assign(&mut st, cell, v)
                        && !(self.up_to_iso && self.dominated(&st.cells))
                    {
                        next.push(st.cells.clone());
                    }
                    st.undo(mark);
                }
            }
            level = next;
            if !grew {
                return level;
            }
        }
    }

    /// Streams complete, consistent cell vectors in lexicographic order.
    pub fn run(&self, width: usize, sink: &mut dyn FnMut(&[u8]) -> ControlFlow<()>) -> ControlFlow<()> {
        if !self.parts.is_empty() {
            if let Some(lists) = self.solve_parts(width) {
                return self.run_product(&lists, sink);
            }
        }
        if width <= 1 {
            return match self.root() {
                Some(mut st) => self.dfs(&mut st, sink),
                None => ControlFlow::Continue(()),
            };
        }
        let nodes = self.frontier(width * 16);
        let stride = self.layout.cells;
        for window in nodes.chunks(width * 4) {
            let next = AtomicUsize::new(0);
            let results: Vec<Mutex<Vec<u8>>> = window.iter().map(|_| Mutex::new(Vec::new())).collect();
            std::thread::scope(|s| {
                for _ in 0..width.min(window.len()) {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(cells) = window.get(i) else { break };
                        let mut st = State::new(cells.clone(), self.eqs.len());
                        let mut out = Vec::new();
                        let _ = self.dfs(&mut st, &mut |leaf| {
                            out.extend_from_slice(leaf);
                            ControlFlow::Continue(())
                        });
                        *results[i].lock().unwrap() = out;
                    });
                }
            });
            for r in results {
                let buf = r.into_inner().unwrap();
                for leaf in buf.chunks(stride) {
                    sink(leaf)?;
                }
            }
        }
        ControlFlow::Continue(())
    }

    /// Solutions of each group, flattened over the group's cells, or `None`
    /// if they would not fit in the budget.
    fn solve_parts(&self, width: usize) -> Option<Vec<Vec<u8>>> {
        let mut used = 0usize;
        let mut lists = Vec::with_capacity(self.parts.len());
        for part in &self.parts {
            let cells = part.branch.as_deref().expect("groups branch on their own cells");
            let mut sols = Vec::new();
            let flow = part.run(width, &mut |leaf| {
                sols.extend(cells.iter().map(|&c| leaf[c]));
                used += cells.len();
                if used > PRODUCT_BUDGET {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if flow.is_break() {
                return None;
            }
            lists.push(sols);
        }
        Some(lists)
    }

    fn run_product(&self, lists: &[Vec<u8>], sink: &mut dyn FnMut(&[u8]) -> ControlFlow<()>) -> ControlFlow<()> {
        if lists.iter().any(|l| l.is_empty()) {
            return ControlFlow::Continue(());
        }
        let widths: Vec<usize> = self.parts.iter().map(|p| p.branch.as_ref().unwrap().len()).collect();
        let mut part_of = vec![0usize; self.layout.cells];
        let mut offset_of = vec![0usize; self.layout.cells];
        for (i, p) in self.parts.iter().enumerate() {
            for (k, &c) in p.branch.as_ref().unwrap().iter().enumerate() {
                part_of[c] = i;
                offset_of[c] = k;
            }
        }
        let mut segments: Vec<Segment> = Vec::new();
        for c in 0..self.layout.cells {
            match segments.last_mut() {
                Some(s) if s.part == part_of[c] && s.start + s.len == c => s.len += 1,
                _ => segments.push(Segment { start: c, len: 1, part: part_of[c], offset: offset_of[c] }),
            }
        }
        let mut ranges: Vec<(usize, usize)> = lists.iter().zip(&widths).map(|(l, w)| (0, l.len() / w)).collect();
        let mut cells = vec![0u8; self.layout.cells];
        self.walk(&segments, lists, &widths, &mut ranges, 0, &mut cells, sink)
    }

    /// Fixes segment `level` to each value compatible with the choices made so
    /// far for its group, ascending. A group's solutions are sorted, so those
    /// sharing a prefix form a contiguous range.
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        segments: &[Segment],
        lists: &[Vec<u8>],
        widths: &[usize],
        ranges: &mut [(usize, usize)],
        level: usize,
        cells: &mut [u8],
        sink: &mut dyn FnMut(&[u8]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let Some(seg) = segments.get(level) else {
            if self.up_to_iso && self.dominated(cells) {
                return ControlFlow::Continue(());
            }
            return sink(cells);
        };
        let (w, list) = (widths[seg.part], &lists[seg.part]);
        let key = |i: usize| &list[i * w + seg.offset..i * w + seg.offset + seg.len];
        let (lo, hi) = ranges[seg.part];
        let mut i = lo;
        while i < hi {
            let mut j = i + 1;
            while j < hi && key(j) == key(i) {
                j += 1;
            }
            cells[seg.start..seg.start + seg.len].copy_from_slice(key(i));
            ranges[seg.part] = (i, j);
            self.walk(segments, lists, widths, ranges, level + 1, cells, sink)?;
            i = j;
        }
        ranges[seg.part] = (lo, hi);
        ControlFlow::Continue(())
    }

    /// Minimum of the relabeled vectors over all permutations, by the same
    /// action the search uses.
    pub fn canonical_cells(layout: &Layout, cells: &[u8]) -> Vec<u8> {
        let mut best = cells.to_vec();
        let mut cand = vec![0u8; cells.len()];
        for sigma in permutations(layout.n).into_iter().skip(1) {
            let source = cell_sources(layout, &sigma);
            for (i, &src) in source.iter().enumerate() {
                cand[i] = sigma[cells[src as usize] as usize];
            }
            if cand < best {
                best.copy_from_slice(&cand);
            }
        }
        best
    }
}
