use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{Query, UcqQuery};
use crate::instance::{FactSpec, TidInstance};

/// An argument position `index` of `relation`, counted from 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub relation: String,
    pub index: usize,
}

impl Position {
    fn new(relation: &str, index: usize) -> Self {
        Position {
            relation: relation.to_string(),
            index,
        }
    }
}

/// Keeps the facts whose relation the query mentions.
pub fn prune_relations(inst: &TidInstance, q: &Query) -> TidInstance {
    let rels = q.relations();
    let keep = inst
        .facts()
        .iter()
        .enumerate()
        .filter(|(_, f)| rels.contains(&f.relation))
        .map(|(i, _)| i);
    inst.subinstance(keep)
}

/// Position pairs joined by a shared variable in some disjunct, each pair
/// stored with its smaller position first. A variable repeated at the same
/// position of two atoms yields a diagonal pair.
pub fn join_pattern(q: &UcqQuery) -> BTreeSet<(Position, Position)> {
    let mut out = BTreeSet::new();
    for d in &q.disjuncts {
        let mut occ: BTreeMap<&str, Vec<Position>> = BTreeMap::new();
        for a in &d.atoms {
            for (i, v) in a.args.iter().enumerate() {
                occ.entry(v).or_default().push(Position::new(&a.relation, i));
            }
        }
        for ps in occ.values() {
            for (i, p) in ps.iter().enumerate() {
                for r in &ps[i + 1..] {
                    let pair = if p <= r { (p.clone(), r.clone()) } else { (r.clone(), p.clone()) };
                    out.insert(pair);
                }
            }
        }
    }
    out
}

/// Splits every element into one copy per class of its occurrences, two
/// occurrences being in the same class when their positions form a
/// join-pattern pair (closed transitively). The first class keeps the
/// element's name; the others become `e'1`, `e'2`, ... Elements are
/// processed in name order and a split is kept only if it does not add
/// Gaifman edges.
pub fn disconnect_rewrite(inst: &TidInstance, q: &UcqQuery) -> TidInstance {
    let pattern = join_pattern(q);
    let joined = |a: &Position, b: &Position| {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        pattern.contains(&key)
    };
    let specs = inst.specs();
    let mut args: Vec<Vec<usize>> = inst
        .facts()
        .iter()
        .map(|f| f.args.iter().map(|a| a.index()).collect())
        .collect();
    let mut names: Vec<String> = inst.elements().to_vec();
    let mut taken: HashSet<String> = names.iter().cloned().collect();

    for e in 0..inst.elements().len() {
        let occ: Vec<(usize, usize)> = args
            .iter()
            .enumerate()
            .flat_map(|(fi, a)| a.iter().enumerate().filter(|(_, &x)| x == e).map(move |(i, _)| (fi, i)))
            .collect();
        if occ.len() < 2 {
            continue;
        }
        let pos: Vec<Position> = occ
            .iter()
            .map(|&(fi, i)| Position::new(&specs[fi].relation, i))
            .collect();
        let class = classes(occ.len(), |i, j| joined(&pos[i], &pos[j]));
        let n_classes = class.iter().max().map_or(0, |m| m + 1);
        if n_classes < 2 {
            continue;
        }
        if split_edges(&args, &occ, &class, n_classes) > neighbours(&args, e).len() {
            continue;
        }
        let mut ids = vec![e];
        let mut n = 1;
        for _ in 1..n_classes {
            let mut name = format!("{}'{n}", names[e]);
            while taken.contains(&name) {
                n += 1;
                name = format!("{}'{n}", names[e]);
            }
            n += 1;
            taken.insert(name.clone());
            ids.push(names.len());
            names.push(name);
        }
        for (k, &(fi, i)) in occ.iter().enumerate() {
            args[fi][i] = ids[class[k]];
        }
    }

    let rewritten = specs
        .iter()
        .zip(&args)
        .map(|(s, a)| FactSpec {
            relation: s.relation.clone(),
            args: a.iter().map(|&x| names[x].clone()).collect(),
            prob: s.prob,
            var: s.var,
        })
        .collect();
    TidInstance::from_specs(rewritten).expect("splitting elements keeps facts distinct")
}

/// Connected-component labels over `n` items, numbered by first member.
fn classes(n: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for (j, l) in label.iter_mut().enumerate() {
                if *l == usize::MAX && linked(i, j) {
                    *l = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    label
}

fn neighbours(args: &[Vec<usize>], e: usize) -> BTreeSet<usize> {
    args.iter()
        .filter(|a| a.contains(&e))
        .flat_map(|a| a.iter().copied())
        .filter(|&x| x != e)
        .collect()
}

/// Gaifman edges incident to the copies of an element if it were split.
fn split_edges(args: &[Vec<usize>], occ: &[(usize, usize)], class: &[usize], n_classes: usize) -> usize {
    let e = args[occ[0].0][occ[0].1];
    let mut per_class: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_classes];
    let mut between: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (k, &(fi, i)) in occ.iter().enumerate() {
        for (j, &x) in args[fi].iter().enumerate() {
            if x != e {
                per_class[class[k]].insert(x);
            } else if j != i {
                let other = occ.iter().position(|&o| o == (fi, j)).expect("occurrence listed");
                let (a, b) = (class[k].min(class[other]), class[k].max(class[other]));
                if a != b {
                    between.insert((a, b));
                }
            }
        }
    }
    per_class.iter().map(BTreeSet::len).sum::<usize>() + between.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::query::parse_query;

    fn ucq(text: &str) -> UcqQuery {
        match parse_query(text).unwrap() {
            Query::Ucq(u) => u,
            Query::Rpq(_) => panic!("expected UCQ"),
        }
    }

    fn inst(facts: &[(&str, &[&str])]) -> TidInstance {
        let mut b = InstanceBuilder::new();
        for (r, a) in facts {
            b.fact(r, a, 0.5);
        }
        b.build().unwrap()
    }

    #[test]
    fn prune_keeps_mentioned_relations() {
        let i = inst(&[("R", &["a", "b"]), ("S", &["b"]), ("T", &["c", "d"]), ("R", &["b", "c"])]);
        let q = Query::Ucq(ucq("q() :- R(x, y)."));
        let p = prune_relations(&i, &q);
        assert_eq!(p.facts().len(), 2);
        assert!(p.facts().iter().all(|f| f.relation == "R"));
        assert_eq!(p.facts()[1].var, i.facts()[3].var);
        let all = Query::Ucq(ucq("q() :- R(x, y), S(y), T(u, v)."));
        assert_eq!(prune_relations(&i, &all), i);
    }

    #[test]
    fn pattern_includes_self_joins_and_diagonals() {
        let p = join_pattern(&ucq("q() :- R(x, y), R(y, x), S(x, x)."));
        let r0 = Position::new("R", 0);
        let r1 = Position::new("R", 1);
        let s0 = Position::new("S", 0);
        let s1 = Position::new("S", 1);
        assert!(p.contains(&(r0.clone(), r1.clone())));
        assert!(p.contains(&(s0.clone(), s1.clone())));
        assert!(p.contains(&(r0.clone(), s0.clone())));
        assert!(!p.contains(&(r0.clone(), r0.clone())));
        let p = join_pattern(&ucq("q() :- R(x, y), R(x, z)."));
        assert!(p.contains(&(r0.clone(), r0)));
    }

    #[test]
    fn unrelated_atoms_disconnect() {
        let i = inst(&[("R", &["a", "b"]), ("S", &["b", "c"])]);
        let out = disconnect_rewrite(&i, &ucq("q() :- R(x, y), S(u, v)."));
        let shown: Vec<String> = out.specs().iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, vec!["R(a,b)", "S(b'1,c)"]);
        assert_eq!(out.gaifman_graph().components().len(), 2);
        assert_eq!(out.facts()[1].var, i.facts()[1].var);
    }

    #[test]
    fn joined_positions_stay_merged() {
        let i = inst(&[("R", &["a", "b"]), ("S", &["b", "c"])]);
        assert_eq!(disconnect_rewrite(&i, &ucq("q() :- R(x, y), S(y, z).")), i);
        let single = inst(&[("R", &["a", "b"])]);
        assert_eq!(disconnect_rewrite(&single, &ucq("q() :- R(x, y).")), single);
    }

    #[test]
    fn split_that_adds_edges_is_refused() {
        let i = inst(&[("R", &["a", "b"]), ("S", &["a", "b"])]);
        let out = disconnect_rewrite(&i, &ucq("q() :- R(x, y), S(u, v)."));
        assert!(out.gaifman_graph().num_edges() <= i.gaifman_graph().num_edges());
    }

    #[test]
    fn copy_names_avoid_collisions() {
        let i = inst(&[("R", &["a", "b"]), ("S", &["b", "c"]), ("T", &["b'1"])]);
        let out = disconnect_rewrite(&i, &ucq("q() :- R(x, y), S(u, v), T(w)."));
        assert!(out.elements().contains(&"b'2".to_string()));
    }
}
