use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use super::{Builder, Circuit, Segment, Wire};
use crate::error::{Error, Result};
use crate::instance::{TidInstance, VarId};
use crate::query::{Nfa, Query, RpqQuery};
use crate::treedec::TreeDecomposition;

/// Reachability lineage for a regular path query, computed bag by bag
/// over the product of bag elements with automaton states.
///
/// The decomposition is extended so that the source and target are in
/// every bag. Each bag starts from the reachability wires exported by its
/// children, inserts its own edge facts one at a time while keeping the
/// matrix transitively closed, and exports the entries between elements
/// shared with its parent.
pub fn build_lineage_rpq(q: &RpqQuery, inst: &TidInstance, td: &TreeDecomposition) -> Result<Circuit> {
    Query::Rpq(q.clone()).check_schema(inst)?;
    let s = inst
        .element_id(&q.source)
        .ok_or_else(|| Error::UnknownElement(q.source.clone()))?
        .index();
    let t = inst
        .element_id(&q.target)
        .ok_or_else(|| Error::UnknownElement(q.target.clone()))?
        .index();
    if s == t && q.regex.nullable() {
        return Ok(Circuit {
            ddnnf: false,
            ..Circuit::constant(true)
        });
    }
    td.validate(&inst.gaifman_graph())
        .map_err(|v| Error::DecompositionMismatch(v.render(&|e| inst.elements()[e].clone())))?;
    let td = td.with_everywhere(&[s, t]);
    let rc = reachability_circuit(inst, &td, 0, &q.regex.to_nfa().reduced(), &[(s, t)])?;
    Ok(rc.circuit)
}

pub(crate) struct ReachCircuit {
    pub circuit: Circuit,
    /// One wire per requested pair: a nonempty path from the first
    /// element to the second whose label word the automaton accepts.
    pub outputs: Vec<Wire>,
}

type Vertex = u32;

/// Sparse Boolean matrix of wires over product vertices: entry `(i, j)`
/// holds when a nonempty path leads from `i` to `j`.
struct Matrix {
    entries: FxHashMap<(Vertex, Vertex), Wire>,
    out: Vec<BTreeSet<Vertex>>,
    inn: Vec<BTreeSet<Vertex>>,
}

impl Matrix {
    fn new(n: usize) -> Self {
        Matrix {
            entries: FxHashMap::default(),
            out: vec![BTreeSet::new(); n],
            inn: vec![BTreeSet::new(); n],
        }
    }

    fn get(&self, i: Vertex, j: Vertex) -> Wire {
        self.entries.get(&(i, j)).copied().unwrap_or(Wire::Const(false))
    }

    fn or_in(&mut self, b: &mut Builder, i: Vertex, j: Vertex, w: Wire) {
        if w == Wire::Const(false) {
            return;
        }
        let cur = self.get(i, j);
        let new = b.or2(cur, w);
        self.entries.insert((i, j), new);
        self.out[i as usize].insert(j);
        self.inn[j as usize].insert(i);
    }

    /// Adds the edge `x -> y` guarded by `w` and keeps the matrix
    /// transitively closed: every `i` reaching `x` (or `x` itself) now
    /// reaches everything `y` reaches (and `y`).
    fn add_edge(&mut self, b: &mut Builder, x: Vertex, y: Vertex, w: Wire) {
        if w == Wire::Const(false) {
            return;
        }
        let srcs: Vec<(Vertex, Wire)> = self.inn[x as usize]
            .iter()
            .filter(|&&i| i != x)
            .map(|&i| (i, self.get(i, x)))
            .chain([(x, Wire::Const(true))])
            .collect();
        let dsts: Vec<(Vertex, Wire)> = self.out[y as usize]
            .iter()
            .filter(|&&j| j != y)
            .map(|&j| (j, self.get(y, j)))
            .chain([(y, Wire::Const(true))])
            .collect();
        let mut updates = Vec::with_capacity(srcs.len() * dsts.len());
        for &(i, ix) in &srcs {
            let head = b.and2(ix, w);
            for &(j, yj) in &dsts {
                updates.push((i, j, b.and2(head, yj)));
            }
        }
        for (i, j, u) in updates {
            self.or_in(b, i, j, u);
        }
    }

    /// Forgets every entry touching `v`.
    fn remove_vertex(&mut self, v: Vertex) {
        for j in std::mem::take(&mut self.out[v as usize]) {
            self.inn[j as usize].remove(&v);
            self.entries.remove(&(v, j));
        }
        for i in std::mem::take(&mut self.inn[v as usize]) {
            self.out[i as usize].remove(&v);
            self.entries.remove(&(i, v));
        }
    }
}

/// Builds reachability wires for `pairs` of element ids; every pair
/// endpoint must be in bag `root`.
pub(crate) fn reachability_circuit(
    inst: &TidInstance,
    td: &TreeDecomposition,
    root: usize,
    nfa: &Nfa,
    pairs: &[(usize, usize)],
) -> Result<ReachCircuit> {
    let qn = nfa.num_states;
    let rooted = td.rooted(root);
    if let Some(&(a, b)) = pairs
        .iter()
        .find(|(a, b)| td.bags[root].binary_search(a).is_err() || td.bags[root].binary_search(b).is_err())
    {
        return Err(Error::DecompositionMismatch(format!(
            "root bag misses {} or {}",
            inst.elements()[a],
            inst.elements()[b]
        )));
    }
    let mut by_rel: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for (p, r, q) in &nfa.transitions {
        by_rel.entry(r.as_str()).or_default().push((*p, *q));
    }

    let mut home: Vec<Vec<usize>> = vec![Vec::new(); td.bags.len()];
    for (i, f) in inst.facts().iter().enumerate() {
        if f.args.len() != 2 || !by_rel.contains_key(f.relation.as_str()) {
            continue;
        }
        let (x, y) = (f.args[0].index(), f.args[1].index());
        let bag = rooted
            .preorder
            .iter()
            .copied()
            .find(|&b| td.bags[b].binary_search(&x).is_ok() && td.bags[b].binary_search(&y).is_ok())
            .ok_or_else(|| Error::DecompositionMismatch(format!("no bag holds {}", inst.fact_display(f))))?;
        home[bag].push(i);
    }

    let mut b = Builder::new();
    let mut var_probs: BTreeMap<VarId, f64> = BTreeMap::new();
    // Exported entries per bag, keyed by ((elem, state), (elem, state)).
    type Export = Vec<((usize, usize), (usize, usize), Wire)>;
    let mut exports: Vec<Export> = vec![Vec::new(); td.bags.len()];
    let mut segs: Vec<Option<Segment>> = vec![None; td.bags.len()];
    let mut outputs = Vec::new();

    for &n in rooted.preorder.iter().rev() {
        let bag = &td.bags[n];
        let local = |e: usize| bag.binary_search(&e).expect("element in bag");
        let vx = |e: usize, q: usize| (local(e) * qn + q) as Vertex;
        let mut m = Matrix::new(bag.len() * qn);

        let kids = &rooted.children[n];
        b.begin_segment(kids.iter().flat_map(|&c| exports[c].iter().map(|e| e.2)));
        let keep: BTreeSet<usize> = match rooted.parent[n] {
            Some(p) => bag.iter().copied().filter(|e| td.bags[p].binary_search(e).is_ok()).collect(),
            None => pairs.iter().flat_map(|&(a, b)| [a, b]).collect(),
        };

        // Edges grouped by local element pair; a fact literal is created
        // when its group is first inserted.
        enum Src {
            Child(Wire),
            Fact(usize),
        }
        type Edge = (usize, usize, Src);
        let mut groups: BTreeMap<(usize, usize), Vec<Edge>> = BTreeMap::new();
        for &c in kids {
            for &((x, p), (y, q), w) in &exports[c] {
                groups.entry((local(x), local(y))).or_default().push((p, q, Src::Child(w)));
            }
        }
        for &fi in &home[n] {
            let f = &inst.facts()[fi];
            let (x, y) = (local(f.args[0].index()), local(f.args[1].index()));
            for &(p, q) in &by_rel[f.relation.as_str()] {
                groups.entry((x, y)).or_default().push((p, q, Src::Fact(fi)));
            }
        }
        let mut pending = vec![0usize; bag.len()];
        for &(x, y) in groups.keys() {
            pending[x] += 1;
            if y != x {
                pending[y] += 1;
            }
        }
        let mut insert = |m: &mut Matrix, b: &mut Builder, key: (usize, usize), edges: Vec<(usize, usize, Src)>| {
            for (p, q, src) in edges {
                let w = match src {
                    Src::Child(w) => w,
                    Src::Fact(fi) => {
                        let f = &inst.facts()[fi];
                        match f.var {
                            Some(v) => {
                                var_probs.insert(v, f.prob);
                                b.literal(v, true)
                            }
                            None => Wire::Const(true),
                        }
                    }
                };
                m.add_edge(b, (key.0 * qn + p) as Vertex, (key.1 * qn + q) as Vertex, w);
            }
        };
        // Eliminate dropped elements one at a time, fewest pending edges
        // first, so their entries die as early as possible.
        let mut alive: BTreeSet<usize> = (0..bag.len()).filter(|&l| !keep.contains(&bag[l])).collect();
        while let Some(&e) = alive.iter().min_by_key(|&&l| (pending[l], l)) {
            alive.remove(&e);
            let keys: Vec<(usize, usize)> = groups.keys().copied().filter(|&(x, y)| x == e || y == e).collect();
            for key in keys {
                let edges = groups.remove(&key).expect("group present");
                pending[key.0] -= 1;
                if key.1 != key.0 {
                    pending[key.1] -= 1;
                }
                insert(&mut m, &mut b, key, edges);
            }
            for q in 0..qn {
                m.remove_vertex((e * qn + q) as Vertex);
            }
        }
        for (key, edges) in std::mem::take(&mut groups) {
            insert(&mut m, &mut b, key, edges);
        }

        let kept = |v: Vertex| keep.contains(&bag[v as usize / qn]);

        let seg_exports: Vec<Wire> = if rooted.parent[n].is_some() {
            let mut ex: Export = m
                .entries
                .iter()
                .filter(|(&(i, j), _)| kept(i) && kept(j))
                .map(|(&(i, j), &w)| {
                    let (i, j) = (i as usize, j as usize);
                    ((bag[i / qn], i % qn), (bag[j / qn], j % qn), w)
                })
                .collect();
            ex.sort_unstable();
            let wires = ex.iter().map(|e| e.2).collect();
            exports[n] = ex;
            wires
        } else {
            for &(a, z) in pairs {
                let mut ws = Vec::new();
                for &q0 in &nfa.initial {
                    for f in (0..qn).filter(|&f| nfa.finals[f]) {
                        ws.push(m.get(vx(a, q0), vx(z, f)));
                    }
                }
                outputs.push(b.or_all(ws));
            }
            outputs.clone()
        };
        let seg = b.end_segment(seg_exports);
        for &c in kids {
            b.attach(segs[c].expect("child processed first"), seg);
        }
        segs[n] = Some(seg);
        for &c in kids {
            exports[c].clear();
        }
    }

    let primary = outputs
        .iter()
        .rev()
        .copied()
        .find(|w| w.gate().is_some())
        .or(outputs.last().copied())
        .unwrap_or(Wire::Const(false));
    let circuit = b.finish(primary, var_probs, false);
    Ok(ReachCircuit { circuit, outputs })
}
