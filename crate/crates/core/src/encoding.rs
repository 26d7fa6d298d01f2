//! Binary tree encodings of decomposed instances.
//!
//! Each node holds a partial map from a fixed number of slots to elements,
//! the map from its slots to its parent's slots for shared elements, and
//! at most one fact whose arguments are given as slot indices. The
//! alphabet is finite for a fixed slot capacity.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{ElemId, FactSpec, TidInstance, VarId};
use crate::treedec::TreeDecomposition;

/// Largest supported slot capacity.
pub const MAX_SLOTS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct EncFact {
    pub relation: String,
    pub slots: Vec<usize>,
    pub var: Option<VarId>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncNode {
    /// `slots[i]` is the element held in slot `i`, if any.
    pub slots: Vec<Option<ElemId>>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// `(own slot, parent slot)` pairs for elements shared with the parent.
    pub parent_overlap: Vec<(usize, usize)>,
    pub fact: Option<EncFact>,
}

impl EncNode {
    /// Bitmask of assigned slots.
    pub fn assigned_mask(&self) -> u32 {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEncoding {
    /// Nodes in pre-order; node 0 is the root.
    pub nodes: Vec<EncNode>,
    pub slot_capacity: usize,
    /// Element names of the source instance, indexed by `ElemId`.
    pub element_names: Vec<String>,
}

impl TreeEncoding {
    pub fn root(&self) -> usize {
        0
    }

    /// Nodes in post-order (children before parents).
    pub fn postorder(&self) -> Vec<usize> {
        (0..self.nodes.len()).rev().collect()
    }

    pub fn has_uncertain_facts(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| n.fact.as_ref().is_some_and(|f| f.var.is_some()))
    }

    /// Line-oriented debug form, one node per line in pre-order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let slots: Vec<String> = n
                .slots
                .iter()
                .enumerate()
                .filter_map(|(i, e)| e.map(|e| format!("{i}:{}", self.element_names[e.index()])))
                .collect();
            let overlap: Vec<String> = n
                .parent_overlap
                .iter()
                .map(|(i, j)| format!("{i}\u{2192}{j}"))
                .collect();
            let fact = match &n.fact {
                None => "-".to_string(),
                Some(f) => {
                    let s: Vec<String> = f.slots.iter().map(usize::to_string).collect();
                    match f.var {
                        Some(v) => format!("{}({})@{v}", f.relation, s.join(",")),
                        None => format!("{}({})", f.relation, s.join(",")),
                    }
                }
            };
            let _ = writeln!(
                out,
                "node {id} parent={parent} slots={} overlap={} fact={fact}",
                slots.join(","),
                overlap.join(",")
            );
        }
        out
    }
}

/// Encodes `inst` along `td`: bags rooted at bag 0, one fact per node
/// (a bag with several facts becomes a chain of copies), and nodes with
/// more than two children binarised by chaining fact-free copies.
pub fn encode(inst: &TidInstance, td: &TreeDecomposition) -> Result<TreeEncoding> {
    encode_with_capacity(inst, td, td.width + 1)
}

/// As [`encode`], with at least `min_capacity` slots per node.
pub fn encode_with_capacity(inst: &TidInstance, td: &TreeDecomposition, min_capacity: usize) -> Result<TreeEncoding> {
    let g = inst.gaifman_graph();
    td.validate(&g).map_err(|v| {
        Error::DecompositionMismatch(v.render(&|e| inst.elements()[e].clone()))
    })?;
    let capacity = min_capacity.max(td.width + 1);
    if capacity > MAX_SLOTS {
        return Err(Error::Unsupported(format!("{capacity} slots per node (at most {MAX_SLOTS})")));
    }
    let rooted = td.rooted(0);

    let mut bag_facts: Vec<Vec<usize>> = vec![Vec::new(); td.bags.len()];
    for (i, f) in inst.facts().iter().enumerate() {
        let home = rooted
            .preorder
            .iter()
            .copied()
            .find(|&b| f.args.iter().all(|a| td.bags[b].binary_search(&a.index()).is_ok()))
            .ok_or_else(|| {
                Error::DecompositionMismatch(format!("no bag holds {}", inst.fact_display(f)))
            })?;
        bag_facts[home].push(i);
    }

    // Slot maps: shared elements keep the parent's slot, new elements take
    // the lowest free slots in element order.
    let mut slot_maps: Vec<HashMap<usize, usize>> = vec![HashMap::new(); td.bags.len()];
    for &b in &rooted.preorder {
        let mut map = HashMap::new();
        let mut used = vec![false; capacity];
        if let Some(p) = rooted.parent[b] {
            for &e in &td.bags[b] {
                if let Some(&s) = slot_maps[p].get(&e) {
                    map.insert(e, s);
                    used[s] = true;
                }
            }
        }
        for &e in &td.bags[b] {
            map.entry(e).or_insert_with(|| {
                let s = used.iter().position(|u| !u).expect("bag fits capacity");
                used[s] = true;
                s
            });
        }
        slot_maps[b] = map;
    }

    let mut enc = TreeEncoding {
        nodes: Vec::new(),
        slot_capacity: capacity,
        element_names: inst.elements().to_vec(),
    };
    emit_bag(inst, &rooted.children, &bag_facts, &slot_maps, 0, None, &mut enc);
    Ok(enc)
}

#[allow(clippy::too_many_arguments)]
fn emit_bag(
    inst: &TidInstance,
    children: &[Vec<usize>],
    bag_facts: &[Vec<usize>],
    slot_maps: &[HashMap<usize, usize>],
    bag: usize,
    parent: Option<(usize, usize)>,
    enc: &mut TreeEncoding,
) {
    let cap = enc.slot_capacity;
    let map = &slot_maps[bag];
    let mut slots = vec![None; cap];
    for (&e, &s) in map {
        slots[s] = Some(ElemId(e as u32));
    }
    let identity: Vec<(usize, usize)> = (0..cap).filter(|&s| slots[s].is_some()).map(|s| (s, s)).collect();
    let top_overlap: Vec<(usize, usize)> = match parent {
        None => Vec::new(),
        Some((_, pbag)) => {
            let mut v: Vec<(usize, usize)> = map
                .iter()
                .filter_map(|(e, &s)| slot_maps[pbag].get(e).map(|&ps| (s, ps)))
                .collect();
            v.sort_unstable();
            v
        }
    };
    let push = |enc: &mut TreeEncoding, parent: Option<usize>, overlap: Vec<(usize, usize)>, fact: Option<EncFact>| {
        let id = enc.nodes.len();
        enc.nodes.push(EncNode {
            slots: slots.clone(),
            parent,
            children: Vec::new(),
            parent_overlap: overlap,
            fact,
        });
        if let Some(p) = parent {
            enc.nodes[p].children.push(id);
        }
        id
    };
    let enc_fact = |i: usize| {
        let f = &inst.facts()[i];
        EncFact {
            relation: f.relation.clone(),
            slots: f.args.iter().map(|a| map[&a.index()]).collect(),
            var: f.var,
            prob: f.prob,
        }
    };

    let facts = &bag_facts[bag];
    let mut cur = push(enc, parent.map(|p| p.0), top_overlap, facts.first().map(|&i| enc_fact(i)));
    for &i in facts.iter().skip(1) {
        cur = push(enc, Some(cur), identity.clone(), Some(enc_fact(i)));
    }
    let kids = &children[bag];
    // Pre-order: a node's first child subtree is emitted before its
    // binarisation copy.
    for (k, &c) in kids.iter().enumerate() {
        let remaining = kids.len() - k;
        emit_bag(inst, children, bag_facts, slot_maps, c, Some((cur, bag)), enc);
        if remaining > 2 {
            cur = push(enc, Some(cur), identity.clone(), None);
        }
    }
}

/// Rebuilds an instance from an encoding, naming elements `e0, e1, ...`
/// in order of first appearance.
pub fn decode(enc: &TreeEncoding) -> Result<TidInstance> {
    let mut names: Vec<Vec<Option<usize>>> = Vec::with_capacity(enc.nodes.len());
    let mut fresh = 0usize;
    let mut specs = Vec::new();
    for (id, n) in enc.nodes.iter().enumerate() {
        if n.slots.len() != enc.slot_capacity {
            return Err(Error::InconsistentEncoding(format!("node {id} has wrong slot count")));
        }
        let mut mine: Vec<Option<usize>> = vec![None; enc.slot_capacity];
        match n.parent {
            None if id != 0 => {
                return Err(Error::InconsistentEncoding(format!("node {id} has no parent")))
            }
            Some(p) if p >= id => {
                return Err(Error::InconsistentEncoding(format!("node {id} precedes its parent")))
            }
            Some(p) => {
                for &(s, ps) in &n.parent_overlap {
                    let parent_elem = names[p].get(ps).copied().flatten();
                    match (n.slots.get(s).copied().flatten(), parent_elem) {
                        (Some(_), Some(e)) => mine[s] = Some(e),
                        _ => {
                            return Err(Error::InconsistentEncoding(format!(
                                "node {id} overlap {s}->{ps} uses an empty slot"
                            )))
                        }
                    }
                }
            }
            None => {
                if !n.parent_overlap.is_empty() {
                    return Err(Error::InconsistentEncoding("root has an overlap map".into()));
                }
            }
        }
        for (slot, m) in n.slots.iter().zip(mine.iter_mut()) {
            if slot.is_some() && m.is_none() {
                *m = Some(fresh);
                fresh += 1;
            }
        }
        if let Some(f) = &n.fact {
            let args = f
                .slots
                .iter()
                .map(|&s| {
                    mine.get(s).copied().flatten().map(|e| format!("e{e}")).ok_or_else(|| {
                        Error::InconsistentEncoding(format!("node {id} fact uses empty slot {s}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            specs.push(FactSpec {
                relation: f.relation.clone(),
                args,
                prob: f.prob,
                var: f.var,
            });
        }
        names.push(mine);
    }
    TidInstance::from_specs(specs)
}
