//! Boolean lineage circuits over fact variables.

mod builder;
mod rpq;
mod ucq;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::instance::{VarId, World};
use crate::treedec::TreeDecomposition;

pub(crate) use builder::{Builder, Segment};
pub use rpq::build_lineage_rpq;
pub(crate) use rpq::reachability_circuit;
pub use ucq::build_lineage_ucq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Var(VarId),
    True,
    False,
    And,
    Or,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<u32>,
}

/// A wire during construction: a constant or the output of a gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wire {
    Const(bool),
    Gate(u32),
}

impl Wire {
    pub fn gate(self) -> Option<u32> {
        match self {
            Wire::Gate(g) => Some(g),
            Wire::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    /// Gates in topological order: inputs always precede their gate.
    pub gates: Vec<Gate>,
    pub output: u32,
    pub var_probs: BTreeMap<VarId, f64>,
    pub ddnnf: bool,
    /// Decomposition of [`Circuit::wiring_graph`] over gate ids.
    pub companion_td: Option<TreeDecomposition>,
}

impl Circuit {
    /// A single constant gate.
    pub fn constant(b: bool) -> Self {
        Circuit {
            gates: vec![Gate {
                kind: if b { GateKind::True } else { GateKind::False },
                inputs: Vec::new(),
            }],
            output: 0,
            var_probs: BTreeMap::new(),
            ddnnf: true,
            companion_td: Some(TreeDecomposition::single_bag(vec![0])),
        }
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    /// Checks gate arities, topological order, variable probabilities and
    /// that no two gates share a variable.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Unsupported(format!("malformed circuit: {msg}")));
        let mut seen = BTreeSet::new();
        for (i, g) in self.gates.iter().enumerate() {
            let ok_arity = match g.kind {
                GateKind::Var(_) | GateKind::True | GateKind::False => g.inputs.is_empty(),
                GateKind::Not => g.inputs.len() == 1,
                GateKind::And | GateKind::Or => !g.inputs.is_empty(),
            };
            if !ok_arity {
                return bad(format!("gate {i} has {} inputs", g.inputs.len()));
            }
            if g.inputs.iter().any(|&x| x as usize >= i) {
                return bad(format!("gate {i} reads a later gate"));
            }
            if let GateKind::Var(v) = g.kind {
                if !self.var_probs.contains_key(&v) {
                    return bad(format!("variable {v} has no probability"));
                }
                if !seen.insert(v) {
                    return bad(format!("variable {v} has two gates"));
                }
            }
        }
        if self.output as usize >= self.gates.len() {
            return bad("output gate out of range".into());
        }
        Ok(())
    }

    /// Graph over gate ids joining each gate to its inputs and the inputs
    /// of a gate to each other, so that every gate's scope is a clique.
    pub fn wiring_graph(&self) -> Graph {
        let mut g = Graph::new(self.gates.len());
        for (i, gate) in self.gates.iter().enumerate() {
            for (k, &a) in gate.inputs.iter().enumerate() {
                g.add_edge(i, a as usize);
                for &b in &gate.inputs[k + 1..] {
                    g.add_edge(a as usize, b as usize);
                }
            }
        }
        g
    }

    /// Evaluates every gate on 64 valuations at once; bit `i` of
    /// `var_word(v)` is the value of `v` in valuation `i`.
    pub fn eval_words(&self, mut var_word: impl FnMut(VarId) -> u64) -> Vec<u64> {
        let mut val: Vec<u64> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let w = match g.kind {
                GateKind::Var(v) => var_word(v),
                GateKind::True => !0,
                GateKind::False => 0,
                GateKind::Not => !val[g.inputs[0] as usize],
                GateKind::And => g.inputs.iter().fold(!0u64, |a, &x| a & val[x as usize]),
                GateKind::Or => g.inputs.iter().fold(0u64, |a, &x| a | val[x as usize]),
            };
            val.push(w);
        }
        val
    }

    /// Evaluates the circuit in a world (variables not kept are false).
    pub fn eval(&self, w: &World) -> bool {
        self.eval_words(|v| if w.contains(v) { !0 } else { 0 })[self.output as usize] & 1 == 1
    }

    /// Evaluates under an explicit assignment, which must cover every
    /// variable of the circuit.
    pub fn eval_assignment(&self, a: &HashMap<VarId, bool>) -> Result<bool> {
        if let Some(v) = self.var_probs.keys().find(|v| !a.contains_key(v)) {
            return Err(Error::UnknownVariable(v.0));
        }
        Ok(self.eval_words(|v| if a[&v] { !0 } else { 0 })[self.output as usize] & 1 == 1)
    }

    /// Syntactic decomposability: the inputs of every AND gate mention
    /// disjoint variable sets.
    pub fn is_decomposable(&self) -> bool {
        let index: BTreeMap<VarId, usize> = self.var_probs.keys().enumerate().map(|(i, v)| (*v, i)).collect();
        let words = index.len().div_ceil(64).max(1);
        let mut sets: Vec<Vec<u64>> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let mut s = vec![0u64; words];
            match g.kind {
                GateKind::Var(v) => {
                    let i = index[&v];
                    s[i / 64] |= 1 << (i % 64);
                }
                _ => {
                    for &x in &g.inputs {
                        let xs = &sets[x as usize];
                        if g.kind == GateKind::And && s.iter().zip(xs).any(|(a, b)| a & b != 0) {
                            return false;
                        }
                        for (a, b) in s.iter_mut().zip(xs) {
                            *a |= b;
                        }
                    }
                }
            }
            sets.push(s);
        }
        true
    }

    /// Exhaustive determinism check: no valuation makes two inputs of an
    /// OR gate true together. Returns `None` beyond `max_vars` variables.
    pub fn is_deterministic_exhaustive(&self, max_vars: usize) -> Option<bool> {
        let vars: Vec<VarId> = self.var_probs.keys().copied().collect();
        if vars.len() > max_vars {
            return None;
        }
        for_each_word(vars.len(), |word, lanes| {
            let val = self.eval_words(|v| word(vars.iter().position(|x| *x == v).expect("listed")));
            self.gates.iter().all(|g| {
                g.kind != GateKind::Or || {
                    let mut acc = 0u64;
                    g.inputs.iter().all(|&x| {
                        let clash = acc & val[x as usize] & lanes;
                        acc |= val[x as usize];
                        clash == 0
                    })
                }
            })
        })
        .into()
    }

    /// Gates reachable from the output, in order.
    fn reachable(&self) -> Vec<u32> {
        let mut mark = vec![false; self.gates.len()];
        mark[self.output as usize] = true;
        for i in (0..self.gates.len()).rev() {
            if mark[i] {
                for &x in &self.gates[i].inputs {
                    mark[x as usize] = true;
                }
            }
        }
        (0..self.gates.len() as u32).filter(|&i| mark[i as usize]).collect()
    }

    /// c2d NNF text of the gates reachable from the output (root last),
    /// and the companion decomposition restricted to them in PACE `.td`
    /// form with NNF node `i` as vertex `i + 1`.
    pub fn to_nnf(&self) -> Result<(String, Option<String>)> {
        let keep = self.reachable();
        let mut node_of = vec![u32::MAX; self.gates.len()];
        for (i, &g) in keep.iter().enumerate() {
            node_of[g as usize] = i as u32;
        }
        let max_var = self.var_probs.keys().map(|v| v.0).max().unwrap_or(0);
        let mut lines = Vec::with_capacity(keep.len());
        let mut edges = 0usize;
        for &g in &keep {
            let gate = &self.gates[g as usize];
            let ids = |e: &mut usize| {
                *e += gate.inputs.len();
                let v: Vec<String> = gate.inputs.iter().map(|&x| node_of[x as usize].to_string()).collect();
                v.join(" ")
            };
            lines.push(match gate.kind {
                GateKind::Var(v) => format!("L {}", v.0),
                GateKind::Not => match self.gates[gate.inputs[0] as usize].kind {
                    GateKind::Var(v) => format!("L -{}", v.0),
                    _ => return Err(Error::NotOnNonVariable(g as usize)),
                },
                GateKind::True => "A 0".to_string(),
                GateKind::False => "O 0 0".to_string(),
                GateKind::And => format!("A {} {}", gate.inputs.len(), ids(&mut edges)),
                GateKind::Or => format!("O 0 {} {}", gate.inputs.len(), ids(&mut edges)),
            });
        }
        let mut out = format!("nnf {} {} {}\n", keep.len(), edges, max_var);
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        let td = self.companion_td.as_ref().map(|td| {
            let bags: Vec<Vec<usize>> = td
                .bags
                .iter()
                .map(|b| b.iter().filter(|&&g| node_of[g] != u32::MAX).map(|&g| node_of[g] as usize).collect())
                .collect();
            TreeDecomposition::new(bags, td.edges.clone()).to_pace(keep.len())
        });
        Ok((out, td))
    }

    /// Short statistics line.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let width = self.companion_td.as_ref().map_or("-".to_string(), |t| t.width.to_string());
        let _ = write!(
            s,
            "gates={} vars={} ddnnf={} width={}",
            self.gates.len(),
            self.var_probs.len(),
            self.ddnnf,
            width
        );
        s
    }
}

/// Runs `f` on every block of 64 valuations of `n` variables. `f` gets
/// the word of each variable index and the mask of valid lanes; stops at
/// the first `false`.
pub(crate) fn for_each_word(n: usize, mut f: impl FnMut(&dyn Fn(usize) -> u64, u64) -> bool) -> bool {
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    let lanes = if n >= 6 { !0u64 } else { (1u64 << (1 << n)) - 1 };
    let blocks: u64 = if n > 6 { 1 << (n - 6) } else { 1 };
    for b in 0..blocks {
        let word = |i: usize| if i < 6 { LOW[i] } else if b >> (i - 6) & 1 == 1 { !0 } else { 0 };
        if !f(&word, lanes) {
            return false;
        }
    }
    true
}

/// Replaces variable `v` by the constant `b` and simplifies constants
/// upward. Surviving gates keep their relative order and the companion
/// decomposition is restricted to them.
pub fn shannon_condition(c: &Circuit, v: VarId, b: bool) -> Circuit {
    let mut wire: Vec<Wire> = Vec::with_capacity(c.gates.len());
    let mut gates: Vec<Gate> = Vec::new();
    let mut new_id = vec![u32::MAX; c.gates.len()];
    for (i, g) in c.gates.iter().enumerate() {
        let ins: Vec<Wire> = g.inputs.iter().map(|&x| wire[x as usize]).collect();
        let w = match g.kind {
            GateKind::Var(x) if x == v => Wire::Const(b),
            GateKind::True => Wire::Const(true),
            GateKind::False => Wire::Const(false),
            GateKind::Var(_) => Wire::Gate(u32::MAX),
            GateKind::Not => match ins[0] {
                Wire::Const(x) => Wire::Const(!x),
                Wire::Gate(_) => Wire::Gate(u32::MAX),
            },
            GateKind::And | GateKind::Or => {
                let (absorb, neutral) = if g.kind == GateKind::And { (false, true) } else { (true, false) };
                if ins.contains(&Wire::Const(absorb)) {
                    Wire::Const(absorb)
                } else if ins.iter().all(|&w| w == Wire::Const(neutral)) {
                    Wire::Const(neutral)
                } else {
                    Wire::Gate(u32::MAX)
                }
            }
        };
        let w = match w {
            Wire::Gate(_) => {
                let id = gates.len() as u32;
                gates.push(Gate {
                    kind: g.kind,
                    inputs: ins.iter().filter_map(|w| w.gate()).collect(),
                });
                new_id[i] = id;
                Wire::Gate(id)
            }
            k => k,
        };
        wire.push(w);
    }
    match wire[c.output as usize] {
        Wire::Const(x) => Circuit {
            ddnnf: c.ddnnf,
            ..Circuit::constant(x)
        },
        Wire::Gate(out) => {
            let used: BTreeSet<VarId> = gates
                .iter()
                .filter_map(|g| match g.kind {
                    GateKind::Var(x) => Some(x),
                    _ => None,
                })
                .collect();
            let companion_td = c.companion_td.as_ref().map(|td| {
                let bags = td
                    .bags
                    .iter()
                    .map(|bag| bag.iter().filter(|&&g| new_id[g] != u32::MAX).map(|&g| new_id[g] as usize).collect())
                    .collect();
                TreeDecomposition::new(bags, td.edges.clone())
            });
            Circuit {
                gates,
                output: out,
                var_probs: c.var_probs.iter().filter(|(x, _)| used.contains(x)).map(|(x, p)| (*x, *p)).collect(),
                ddnnf: c.ddnnf,
                companion_td,
            }
        }
    }
}

/// Evaluates the circuit in a world.
pub fn eval_circuit(c: &Circuit, w: &World) -> bool {
    c.eval(w)
}
