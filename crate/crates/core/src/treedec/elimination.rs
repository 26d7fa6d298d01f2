use std::collections::BTreeSet;

use super::{Heuristic, TreeDecomposition};
use crate::graph::Graph;

/// Graph under vertex elimination: eliminating `v` turns its remaining
/// neighbourhood into a clique and removes `v`.
pub(crate) struct Eliminator {
    adj: Vec<BTreeSet<usize>>,
    alive: Vec<bool>,
}

impl Eliminator {
    pub(crate) fn new(g: &Graph) -> Self {
        let n = g.num_vertices();
        Eliminator {
            adj: (0..n).map(|v| g.neighbors(v).clone()).collect(),
            alive: vec![true; n],
        }
    }

    pub(crate) fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub(crate) fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub(crate) fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    /// Number of missing edges among the neighbours of `v`.
    pub(crate) fn fill_in(&self, v: usize) -> usize {
        let ns: Vec<usize> = self.adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if !self.adj[a].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    }

    /// Eliminates `v`, returning its neighbourhood at elimination time.
    pub(crate) fn eliminate(&mut self, v: usize) -> Vec<usize> {
        let ns: Vec<usize> = self.adj[v].iter().copied().collect();
        for &a in &ns {
            self.adj[a].remove(&v);
        }
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                self.adj[a].insert(b);
                self.adj[b].insert(a);
            }
        }
        self.adj[v].clear();
        self.alive[v] = false;
        ns
    }
}

/// Greedy elimination ordering; ties go to the lowest vertex id.
pub fn elimination_order(g: &Graph, heuristic: Heuristic) -> Vec<usize> {
    let n = g.num_vertices();
    let mut el = Eliminator::new(g);
    let mut order = Vec::with_capacity(n);
    let mut fill: Vec<usize> = match heuristic {
        Heuristic::MinFill => (0..n).map(|v| el.fill_in(v)).collect(),
        Heuristic::MinDegree => Vec::new(),
    };
    for _ in 0..n {
        let v = match heuristic {
            Heuristic::MinDegree => (0..n)
                .filter(|&v| el.is_alive(v))
                .min_by_key(|&v| (el.degree(v), v)),
            Heuristic::MinFill => (0..n)
                .filter(|&v| el.is_alive(v))
                .min_by_key(|&v| (fill[v], v)),
        }
        .expect("vertices remain");
        let ns = el.eliminate(v);
        order.push(v);
        if heuristic == Heuristic::MinFill {
            // Fill values can only change within distance two of `v`.
            let mut dirty: BTreeSet<usize> = ns.iter().copied().collect();
            for &a in &ns {
                dirty.extend(el.neighbors(a).iter().copied());
            }
            for u in dirty {
                fill[u] = el.fill_in(u);
            }
        }
    }
    order
}

/// Decomposition induced by an elimination ordering: one bag per vertex
/// (the vertex plus its neighbourhood when eliminated), attached to the bag
/// of the first neighbour eliminated after it, with bags contained in an
/// adjacent bag contracted away.
pub fn td_from_ordering(g: &Graph, order: &[usize]) -> TreeDecomposition {
    let n = g.num_vertices();
    if n == 0 {
        return TreeDecomposition::single_bag(Vec::new());
    }
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut el = Eliminator::new(g);
    let mut bags: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(n);
    for &v in order {
        let ns = el.eliminate(v);
        parent.push(ns.iter().map(|&u| pos[u]).min());
        let mut bag: BTreeSet<usize> = ns.into_iter().collect();
        bag.insert(v);
        bags.push(bag);
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut last_root: Option<usize> = None;
    for i in 0..n {
        match parent[i] {
            Some(p) => {
                adj[i].insert(p);
                adj[p].insert(i);
            }
            None => {
                if let Some(r) = last_root {
                    adj[i].insert(r);
                    adj[r].insert(i);
                }
                last_root = Some(i);
            }
        }
    }
    contract_subsets(bags, adj)
}

/// Repeatedly merges a bag into an adjacent superset bag.
fn contract_subsets(
    mut bags: Vec<BTreeSet<usize>>,
    mut adj: Vec<BTreeSet<usize>>,
) -> TreeDecomposition {
    let n = bags.len();
    let mut alive = vec![true; n];
    let mut changed = true;
    while changed {
        changed = false;
        for x in 0..n {
            if !alive[x] {
                continue;
            }
            let target = adj[x]
                .iter()
                .copied()
                .find(|&y| bags[x].is_subset(&bags[y]));
            if let Some(y) = target {
                let xs: Vec<usize> = adj[x].iter().copied().filter(|&z| z != y).collect();
                for z in xs {
                    adj[z].remove(&x);
                    adj[z].insert(y);
                    adj[y].insert(z);
                }
                adj[y].remove(&x);
                adj[x].clear();
                bags[x].clear();
                alive[x] = false;
                changed = true;
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut out_bags = Vec::new();
    for i in 0..n {
        if alive[i] {
            index[i] = out_bags.len();
            out_bags.push(bags[i].iter().copied().collect::<Vec<_>>());
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for &j in &adj[i] {
            if alive[i] && i < j {
                edges.push((index[i], index[j]));
            }
        }
    }
    TreeDecomposition::new(out_bags, edges)
}

/// Tree decomposition of `g` from the chosen elimination heuristic.
pub fn decompose(g: &Graph, heuristic: Heuristic) -> TreeDecomposition {
    td_from_ordering(g, &elimination_order(g, heuristic))
}
