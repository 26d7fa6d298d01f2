use std::collections::{BTreeMap, BTreeSet};

use super::elimination::Eliminator;
use super::TreeDecomposition;
use crate::graph::Graph;
use crate::instance::TidInstance;

/// A low-width piece of the instance hanging off the core.
#[derive(Debug, Clone)]
pub struct Tentacle {
    /// Facts touching the tentacle's interior elements.
    pub instance: TidInstance,
    /// Decomposition over `instance`'s element ids.
    pub decomposition: TreeDecomposition,
    /// Index of the bag holding every boundary element.
    pub root: usize,
    /// Core elements adjacent to the interior, sorted by name.
    pub boundary: Vec<String>,
    /// Interior element names, sorted.
    pub interior: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PartialDecomposition {
    pub core: TidInstance,
    pub tentacles: Vec<Tentacle>,
    pub cap: usize,
    /// Number of facts in the decomposed instance.
    pub input_facts: usize,
}

impl PartialDecomposition {
    /// Gaifman graph of the core with every tentacle boundary made a
    /// clique, over the core's element ids.
    pub fn core_graph_with_boundaries(&self) -> Graph {
        let mut g = self.core.gaifman_graph();
        for t in &self.tentacles {
            let ids: Vec<usize> = t
                .boundary
                .iter()
                .filter_map(|b| self.core.element_id(b))
                .map(|e| e.index())
                .collect();
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    pub fn core_size_ratio(&self) -> f64 {
        if self.input_facts == 0 {
            0.0
        } else {
            self.core.facts().len() as f64 / self.input_facts as f64
        }
    }
}

/// Greedily peels vertices whose current neighbourhood has at most `cap`
/// vertices (minimum degree first, ties to the lowest id), simulating
/// elimination with fill. Peeled vertices are grouped into tentacles by
/// connected component; the facts among unpeeled vertices form the core.
pub fn partial_decompose(inst: &TidInstance, cap: usize) -> PartialDecomposition {
    partial_decompose_protecting(inst, cap, &[])
}

/// Like [`partial_decompose`], but the named elements are never peeled,
/// so they stay in the core or on a tentacle boundary.
pub fn partial_decompose_protecting(inst: &TidInstance, cap: usize, protect: &[&str]) -> PartialDecomposition {
    let g = inst.gaifman_graph();
    let n = g.num_vertices();
    let mut el = Eliminator::new(&g);
    let mut order = Vec::new();
    let mut hood: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut frozen = vec![false; n];
    for e in protect.iter().filter_map(|e| inst.element_id(e)) {
        frozen[e.index()] = true;
    }
    loop {
        let next = (0..n)
            .filter(|&v| !frozen[v] && el.is_alive(v) && el.degree(v) <= cap)
            .min_by_key(|&v| (el.degree(v), v));
        let Some(v) = next else { break };
        hood[v] = el.eliminate(v);
        order.push(v);
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let peeled = |v: usize| pos[v] != usize::MAX;

    // Components of the peeled vertices in the original graph.
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if !peeled(s) || comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = Vec::new();
        let mut stack = vec![s];
        comp[s] = id;
        while let Some(u) = stack.pop() {
            members.push(u);
            for &w in g.neighbors(u) {
                if peeled(w) && comp[w] == usize::MAX {
                    comp[w] = id;
                    stack.push(w);
                }
            }
        }
        members.sort_by_key(|&v| pos[v]);
        comps.push(members);
    }

    let mut core_facts = Vec::new();
    let mut comp_facts: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for (i, f) in inst.facts().iter().enumerate() {
        match f.args.iter().find(|a| peeled(a.index())) {
            Some(a) => comp_facts[comp[a.index()]].push(i),
            None => core_facts.push(i),
        }
    }

    let tentacles = comps
        .iter()
        .zip(comp_facts)
        .map(|(members, facts)| build_tentacle(inst, &g, members, facts, &hood, &pos))
        .collect();

    PartialDecomposition {
        core: inst.subinstance(core_facts),
        tentacles,
        cap,
        input_facts: inst.facts().len(),
    }
}

fn build_tentacle(
    inst: &TidInstance,
    g: &Graph,
    members: &[usize],
    facts: Vec<usize>,
    hood: &[Vec<usize>],
    pos: &[usize],
) -> Tentacle {
    let in_comp: BTreeSet<usize> = members.iter().copied().collect();
    let boundary: BTreeSet<usize> = members
        .iter()
        .flat_map(|&v| g.neighbors(v).iter().copied())
        .filter(|u| pos[*u] == usize::MAX)
        .collect();
    let sub = inst.subinstance(facts);
    let local = |v: usize| -> usize {
        sub.element_id(inst.element_name(crate::instance::ElemId(v as u32)))
            .expect("tentacle element present in tentacle facts")
            .index()
    };
    // One bag per member in elimination order; the parent is the bag of
    // the earliest-eliminated member neighbour.
    let bag_of: BTreeMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut bags = Vec::with_capacity(members.len());
    let mut edges = Vec::new();
    let mut root = 0;
    for (i, &v) in members.iter().enumerate() {
        let mut bag: Vec<usize> = hood[v].iter().map(|&u| local(u)).collect();
        bag.push(local(v));
        bags.push(bag);
        let parent = hood[v]
            .iter()
            .filter(|u| in_comp.contains(u))
            .min_by_key(|&&u| pos[u]);
        match parent {
            Some(p) => edges.push((i, bag_of[p])),
            None => root = i,
        }
    }
    let name = |v: &usize| inst.element_name(crate::instance::ElemId(*v as u32)).to_string();
    Tentacle {
        instance: sub,
        decomposition: TreeDecomposition::new(bags, edges),
        root,
        boundary: boundary.iter().map(name).collect(),
        interior: {
            let mut v: Vec<String> = members.iter().map(name).collect();
            v.sort();
            v
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::treedec::{decompose, Heuristic};

    #[test]
    fn tree_instance_has_empty_core() {
        let mut b = InstanceBuilder::new();
        b.fact("E", &["a", "b"], 0.5)
            .fact("E", &["b", "c"], 0.5)
            .fact("E", &["b", "d"], 0.5)
            .fact("E", &["x", "y"], 0.5);
        let inst = b.build().unwrap();
        let pd = partial_decompose(&inst, 1);
        assert!(pd.core.facts().is_empty());
        assert_eq!(pd.tentacles.len(), 2);
        for t in &pd.tentacles {
            assert!(t.boundary.is_empty());
            assert!(t.decomposition.validate(&t.instance.gaifman_graph()).is_ok());
            assert!(t.decomposition.width <= 1);
        }
    }

    #[test]
    fn protected_elements_stay_out_of_interiors() {
        let mut b = InstanceBuilder::new();
        for (u, v) in [("a", "b"), ("b", "c"), ("c", "d")] {
            b.fact("E", &[u, v], 0.5);
        }
        let inst = b.build().unwrap();
        assert!(partial_decompose(&inst, 2).core.facts().is_empty());
        let pd = partial_decompose_protecting(&inst, 2, &["b", "d"]);
        assert_eq!(pd.tentacles.len(), 2);
        for t in &pd.tentacles {
            assert!(!t.interior.iter().any(|e| e == "b" || e == "d"));
        }
        assert_eq!(pd.tentacles[1].boundary, vec!["b".to_string(), "d".to_string()]);
    }

    #[test]
    fn cycle_with_cap_one_keeps_cycle() {
        let mut b = InstanceBuilder::new();
        for (u, v) in [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "p"), ("p", "q")] {
            b.fact("E", &[u, v], 0.5);
        }
        let inst = b.build().unwrap();
        let pd = partial_decompose(&inst, 1);
        assert_eq!(pd.core.facts().len(), 4);
        assert_eq!(pd.tentacles.len(), 1);
        assert_eq!(pd.tentacles[0].boundary, vec!["a".to_string()]);
        assert_eq!(pd.tentacles[0].interior, vec!["p".to_string(), "q".to_string()]);
        assert!((pd.core_size_ratio() - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn cap_at_heuristic_width_empties_core() {
        let mut b = InstanceBuilder::new();
        for (u, v) in [("a", "b"), ("b", "c"), ("c", "a"), ("c", "d"), ("d", "e"), ("e", "c")] {
            b.fact("E", &[u, v], 0.5);
        }
        let inst = b.build().unwrap();
        let w = decompose(&inst.gaifman_graph(), Heuristic::MinDegree).width;
        assert!(partial_decompose(&inst, w).core.facts().is_empty());
        assert!(!partial_decompose(&inst, w - 1).core.facts().is_empty());
    }
}
