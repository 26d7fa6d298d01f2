use std::collections::BTreeMap;

use super::{Builder, Circuit, Segment, Wire};
use crate::automaton::{StateId, TreeAutomaton};
use crate::encoding::TreeEncoding;
use crate::error::{Error, Result};

/// Lineage of the automaton over an encoding: a wire per (node, state)
/// meaning "the state is reachable at the node", built bottom-up. A node
/// with an uncertain fact branches on its literal; the output is the OR
/// of the final root states. With a deterministic automaton the result is
/// a d-DNNF.
pub fn build_lineage_ucq(a: &TreeAutomaton, enc: &TreeEncoding) -> Result<Circuit> {
    if a.slot_capacity() != enc.slot_capacity {
        return Err(Error::CapacityMismatch {
            automaton: a.slot_capacity(),
            encoding: enc.slot_capacity,
        });
    }
    let sink = a.sink();
    let mut b = Builder::new();
    let mut var_probs = BTreeMap::new();
    let mut reach: Vec<Vec<(StateId, Wire)>> = vec![Vec::new(); enc.nodes.len()];
    let mut segs: Vec<Option<Segment>> = vec![None; enc.nodes.len()];
    let mut output = Wire::Const(false);

    for id in enc.postorder() {
        let node = &enc.nodes[id];
        if node.children.len() > 2 {
            return Err(Error::InconsistentEncoding(format!("node {id} has more than two children")));
        }
        let var = node.fact.as_ref().and_then(|f| f.var.map(|v| (v, f.prob)));
        let with = a.label(node, node.fact.is_some())?;
        let without = if var.is_some() { a.label(node, false)? } else { with };
        if let Some((v, p)) = var {
            var_probs.insert(v, p);
        }

        let kids: Vec<&[(StateId, Wire)]> = node.children.iter().map(|&c| reach[c].as_slice()).collect();
        b.begin_segment(kids.iter().flat_map(|k| k.iter().map(|e| e.1)));
        let mut terms: BTreeMap<StateId, Vec<Wire>> = BTreeMap::new();
        let mut visit = |states: &[StateId], wires: &[Wire], b: &mut Builder| -> Result<()> {
            let t1 = a.step(with, states)?;
            let t0 = if var.is_some() { a.step(without, states)? } else { t1.clone() };
            let mut p: Option<Wire> = None;
            let mut pv: Option<Wire> = None;
            let mut pn: Option<Wire> = None;
            let mut targets: Vec<StateId> = t1.iter().chain(t0.iter()).copied().filter(|&t| Some(t) != sink).collect();
            targets.sort_unstable();
            targets.dedup();
            for t in targets {
                let base = *p.get_or_insert_with(|| wires.iter().fold(Wire::Const(true), |acc, &w| b.and2(acc, w)));
                let term = match (t1.contains(&t), t0.contains(&t)) {
                    (true, true) => base,
                    (true, false) => *pv.get_or_insert_with(|| {
                        let l = b.literal(var.expect("branching node").0, true);
                        b.and2(base, l)
                    }),
                    _ => *pn.get_or_insert_with(|| {
                        let l = b.literal(var.expect("branching node").0, false);
                        b.and2(base, l)
                    }),
                };
                if term != Wire::Const(false) {
                    terms.entry(t).or_default().push(term);
                }
            }
            Ok(())
        };
        match kids.as_slice() {
            [] => visit(&[], &[], &mut b)?,
            [k] => {
                for &(s, w) in k.iter() {
                    visit(&[s], &[w], &mut b)?;
                }
            }
            [k1, k2] => {
                for &(s, w) in k1.iter() {
                    for &(t, x) in k2.iter() {
                        visit(&[s, t], &[w, x], &mut b)?;
                    }
                }
            }
            _ => unreachable!(),
        }
        let mut here = Vec::with_capacity(terms.len());
        for (t, ts) in terms {
            let w = b.or_all(ts);
            if w != Wire::Const(false) {
                here.push((t, w));
            }
        }
        let exports: Vec<Wire> = if id == enc.root() {
            let finals: Vec<Wire> = here.iter().filter(|(s, _)| a.is_final(*s)).map(|e| e.1).collect();
            output = b.or_all(finals);
            vec![output]
        } else {
            here.iter().map(|e| e.1).collect()
        };
        let seg = b.end_segment(exports);
        for &c in &node.children {
            b.attach(segs[c].expect("child processed first"), seg);
        }
        segs[id] = Some(seg);
        reach[id] = here;
    }
    Ok(b.finish(output, var_probs, a.is_deterministic()))
}
