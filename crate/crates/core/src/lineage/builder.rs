use rustc_hash::FxHashMap;

use super::{Circuit, Gate, GateKind, Wire};
use crate::instance::VarId;
use crate::treedec::TreeDecomposition;

/// Gate factory with eager constant propagation that also records a
/// companion decomposition.
///
/// Gates are created inside segments. A segment is given the wires it
/// imports from earlier segments and the wires it exports; its bags form
/// a path with one bag per created gate, each holding the wires whose
/// lifetime spans that gate. The first bag holds all imports and the
/// last bag all exports, so segments are glued by joining an exporter's
/// last bag to the importer's first bag.
pub(crate) struct Builder {
    gates: Vec<Gate>,
    lits: FxHashMap<(VarId, bool), u32>,
    bags: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    seg_start: usize,
    seg_imports: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub first: usize,
    pub last: usize,
}

impl Builder {
    pub fn new() -> Self {
        Builder {
            gates: Vec::new(),
            lits: FxHashMap::default(),
            bags: Vec::new(),
            edges: Vec::new(),
            seg_start: 0,
            seg_imports: Vec::new(),
        }
    }

    fn push(&mut self, kind: GateKind, inputs: Vec<u32>) -> u32 {
        self.gates.push(Gate { kind, inputs });
        (self.gates.len() - 1) as u32
    }

    /// Literal `v` (or its negation when `positive` is false). Each
    /// variable must be used within a single segment.
    pub fn literal(&mut self, v: VarId, positive: bool) -> Wire {
        if let Some(&g) = self.lits.get(&(v, positive)) {
            return Wire::Gate(g);
        }
        let g = if positive {
            self.push(GateKind::Var(v), Vec::new())
        } else {
            let Wire::Gate(x) = self.literal(v, true) else { unreachable!() };
            self.push(GateKind::Not, vec![x])
        };
        self.lits.insert((v, positive), g);
        Wire::Gate(g)
    }

    pub fn and2(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (Wire::Const(false), _) | (_, Wire::Const(false)) => Wire::Const(false),
            (Wire::Const(true), x) | (x, Wire::Const(true)) => x,
            (Wire::Gate(x), Wire::Gate(y)) if x == y => a,
            (Wire::Gate(x), Wire::Gate(y)) => Wire::Gate(self.push(GateKind::And, vec![x, y])),
        }
    }

    pub fn or2(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (Wire::Const(true), _) | (_, Wire::Const(true)) => Wire::Const(true),
            (Wire::Const(false), x) | (x, Wire::Const(false)) => x,
            (Wire::Gate(x), Wire::Gate(y)) if x == y => a,
            (Wire::Gate(x), Wire::Gate(y)) => Wire::Gate(self.push(GateKind::Or, vec![x, y])),
        }
    }

    /// Left-leaning chain of binary ORs.
    pub fn or_all(&mut self, ws: impl IntoIterator<Item = Wire>) -> Wire {
        ws.into_iter().fold(Wire::Const(false), |acc, w| self.or2(acc, w))
    }

    pub fn begin_segment(&mut self, imports: impl IntoIterator<Item = Wire>) {
        self.seg_start = self.gates.len();
        self.seg_imports = imports.into_iter().filter_map(Wire::gate).collect();
        self.seg_imports.sort_unstable();
        self.seg_imports.dedup();
    }

    /// Closes the current segment and emits its bags.
    pub fn end_segment(&mut self, exports: impl IntoIterator<Item = Wire>) -> Segment {
        let start = self.seg_start as u32;
        let m = self.gates.len() - self.seg_start;
        // Step 0 is the import bag; the gate `start + i` lives at step i + 1.
        let step = |g: u32| (g - start) as usize + 1;
        let mut span: FxHashMap<u32, (usize, usize)> = FxHashMap::default();
        for &w in &self.seg_imports {
            span.insert(w, (0, 0));
        }
        for g in start..self.gates.len() as u32 {
            let s = step(g);
            span.insert(g, (s, s));
            for &x in &self.gates[g as usize].inputs {
                let e = span.get_mut(&x).unwrap_or_else(|| {
                    panic!("gate {g} reads wire {x}, which is neither local nor imported")
                });
                e.1 = e.1.max(s);
            }
        }
        for w in exports.into_iter().filter_map(Wire::gate) {
            let e = span.get_mut(&w).unwrap_or_else(|| panic!("exported wire {w} is unknown to the segment"));
            e.1 = m;
        }
        let mut opens: Vec<Vec<u32>> = vec![Vec::new(); m + 1];
        let mut closes: Vec<Vec<u32>> = vec![Vec::new(); m + 1];
        for (&w, &(a, b)) in &span {
            opens[a].push(w);
            closes[b].push(w);
        }
        let first = self.bags.len();
        let mut live: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
        let mut prev: Option<Vec<usize>> = None;
        for i in 0..=m {
            live.extend(opens[i].iter().copied());
            let bag: Vec<usize> = live.iter().map(|&w| w as usize).collect();
            for w in &closes[i] {
                live.remove(w);
            }
            // Skip a bag equal to its predecessor.
            if prev.as_ref() == Some(&bag) {
                continue;
            }
            if self.bags.len() > first {
                self.edges.push((self.bags.len() - 1, self.bags.len()));
            }
            prev = Some(bag.clone());
            self.bags.push(bag);
        }
        Segment {
            first,
            last: self.bags.len() - 1,
        }
    }

    /// Joins an exporting segment to the segment importing from it.
    pub fn attach(&mut self, child: Segment, parent: Segment) {
        self.edges.push((child.last, parent.first));
    }

    /// Finishes the circuit. A constant output becomes a lone constant
    /// gate.
    pub fn finish(mut self, output: Wire, var_probs: std::collections::BTreeMap<VarId, f64>, ddnnf: bool) -> Circuit {
        let output = match output {
            Wire::Gate(g) => g,
            Wire::Const(b) => {
                self.gates.clear();
                self.bags = vec![vec![0]];
                self.edges.clear();
                self.push(if b { GateKind::True } else { GateKind::False }, Vec::new())
            }
        };
        let used: std::collections::BTreeSet<VarId> = self
            .gates
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::Var(v) => Some(v),
                _ => None,
            })
            .collect();
        let var_probs = var_probs.into_iter().filter(|(v, _)| used.contains(v)).collect();
        let td = TreeDecomposition::new(self.bags, self.edges);
        Circuit {
            gates: self.gates,
            output,
            var_probs,
            ddnnf,
            companion_td: Some(td),
        }
    }
}
