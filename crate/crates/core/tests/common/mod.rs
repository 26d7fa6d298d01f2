//! Oracles for the integration tests, written against the query semantics
//! directly rather than through the library's evaluators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use treetackle::instance::{TidInstance, VarId, World};
use treetackle::treedec::Tentacle;
use treetackle::query::{Atom, Query, Regex, RpqQuery};

pub type Fact = (String, Vec<String>);

/// Facts of `inst` kept by `present`, by relation and element names.
pub fn facts_where(inst: &TidInstance, present: impl Fn(Option<VarId>) -> bool) -> Vec<Fact> {
    inst.facts()
        .iter()
        .filter(|f| present(f.var))
        .map(|f| (f.relation.clone(), f.args.iter().map(|&a| inst.element_name(a).to_string()).collect()))
        .collect()
}

pub fn holds(facts: &[Fact], q: &Query) -> bool {
    match q {
        Query::Ucq(u) => u.disjuncts.iter().any(|d| extend(&d.atoms, facts, &mut BTreeMap::new())),
        Query::Rpq(r) => {
            let mut names: Vec<&str> = facts.iter().flat_map(|f| f.1.iter().map(String::as_str)).collect();
            names.extend([r.source.as_str(), r.target.as_str()]);
            names.sort();
            names.dedup();
            let at = |n: &str| names.binary_search(&n).unwrap();
            relation(&r.regex, facts, &names)[at(&r.source)][at(&r.target)]
        }
    }
}

fn extend<'a>(atoms: &'a [Atom], facts: &'a [Fact], env: &mut BTreeMap<&'a str, &'a str>) -> bool {
    let Some((a, rest)) = atoms.split_first() else { return true };
    for (rel, args) in facts {
        if *rel != a.relation || args.len() != a.args.len() {
            continue;
        }
        let mut bound = Vec::new();
        let mut ok = true;
        for (x, v) in a.args.iter().zip(args) {
            match env.get(x.as_str()) {
                Some(&y) if y != v => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    env.insert(x, v);
                    bound.push(x.as_str());
                }
            }
        }
        if ok && extend(rest, facts, env) {
            return true;
        }
        for x in bound {
            env.remove(x);
        }
    }
    false
}

type Rel = Vec<Vec<bool>>;

fn identity(n: usize) -> Rel {
    (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect()
}

fn union(a: &Rel, b: &Rel) -> Rel {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| *p || *q).collect()).collect()
}

fn compose(a: &Rel, b: &Rel) -> Rel {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect()).collect()
}

fn star(a: &Rel) -> Rel {
    let mut r = union(&identity(a.len()), a);
    loop {
        let next = compose(&r, &r);
        if next == r {
            return r;
        }
        r = next;
    }
}

/// The binary relation a regex denotes over the graph of binary facts.
fn relation(r: &Regex, facts: &[Fact], names: &[&str]) -> Rel {
    let n = names.len();
    match r {
        Regex::Rel(name) => {
            let mut m = vec![vec![false; n]; n];
            for (rel, args) in facts {
                if rel == name && args.len() == 2 {
                    let i = names.binary_search(&args[0].as_str()).unwrap();
                    let j = names.binary_search(&args[1].as_str()).unwrap();
                    m[i][j] = true;
                }
            }
            m
        }
        Regex::Concat(a, b) => compose(&relation(a, facts, names), &relation(b, facts, names)),
        Regex::Alt(a, b) => union(&relation(a, facts, names), &relation(b, facts, names)),
        Regex::Star(a) => star(&relation(a, facts, names)),
        Regex::Plus(a) => {
            let a = relation(a, facts, names);
            compose(&a, &star(&a))
        }
        Regex::Opt(a) => union(&identity(n), &relation(a, facts, names)),
    }
}

/// Every world of `inst` with its probability.
pub fn worlds(inst: &TidInstance) -> Vec<(World, f64)> {
    let vars: Vec<(VarId, f64)> = inst.variables().collect();
    assert!(vars.len() <= 20, "too many variables to enumerate");
    (0u64..1 << vars.len())
        .map(|m| {
            let mut p = 1.0;
            let mut kept = Vec::new();
            for (i, &(v, q)) in vars.iter().enumerate() {
                if m >> i & 1 == 1 {
                    p *= q;
                    kept.push(v);
                } else {
                    p *= 1.0 - q;
                }
            }
            (World::from_vars(kept), p)
        })
        .collect()
}

/// Probability of `q` by enumerating the worlds of `inst`.
pub fn exact_prob(inst: &TidInstance, q: &Query) -> f64 {
    worlds(inst)
        .into_iter()
        .filter(|(w, _)| holds(&facts_where(inst, |v| v.is_none_or(|v| w.contains(v))), q))
        .map(|(_, p)| p)
        .sum()
}

/// Distribution of `relation`-path connection patterns between the
/// boundary elements of `t`, indexed like [`TentacleSummary::probs`].
///
/// [`TentacleSummary::probs`]: treetackle::hybrid::TentacleSummary
pub fn tentacle_patterns(t: &Tentacle, relation: &str) -> Vec<f64> {
    let b = &t.boundary;
    let pairs: Vec<(usize, usize)> = (0..b.len()).flat_map(|u| (0..b.len()).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let m = pairs.len();
    let mut probs = vec![0.0; 1 << m];
    for (w, p) in worlds(&t.instance) {
        let facts = facts_where(&t.instance, |v| v.is_none_or(|v| w.contains(v)));
        let pattern = pairs.iter().enumerate().fold(0, |acc, (k, &(u, v))| {
            let q = Query::Rpq(RpqQuery {
                source: b[u].clone(),
                target: b[v].clone(),
                regex: Regex::Plus(Box::new(Regex::rel(relation))),
            });
            acc | (holds(&facts, &q) as usize) << (m - 1 - k)
        });
        probs[pattern] += p;
    }
    probs
}
