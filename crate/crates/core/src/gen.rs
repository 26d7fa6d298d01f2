//! Seeded generators for graphs, instances, queries and test corpora.

use std::fs;
use std::path::Path;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::instance::{FactSpec, TidInstance, VarId};
use crate::par::block_rng;
use crate::query::{parse_query, Atom, CqQuery, Query, Regex, RpqQuery, UcqQuery};

/// Probabilities drawn by the generators; all exactly representable in
/// the text formats.
const PROBS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// A random `k`-tree on `n >= k + 1` vertices: a `(k + 1)`-clique grown
/// by vertices each attached to an existing `k`-clique.
pub fn k_tree(n: usize, k: usize, rng: &mut impl Rng) -> Graph {
    assert!(k >= 1 && n > k, "a {k}-tree needs more than {k} vertices");
    let mut g = Graph::new(n);
    for u in 0..=k {
        for v in u + 1..=k {
            g.add_edge(u, v);
        }
    }
    let mut cliques: Vec<Vec<usize>> = (0..=k).map(|skip| (0..=k).filter(|&x| x != skip).collect()).collect();
    for v in k + 1..n {
        let base = cliques.choose(rng).expect("nonempty").clone();
        for &u in &base {
            g.add_edge(u, v);
        }
        for skip in 0..k {
            let mut c: Vec<usize> = base.iter().copied().enumerate().filter(|&(i, _)| i != skip).map(|e| e.1).collect();
            c.push(v);
            cliques.push(c);
        }
    }
    g
}

/// A `k`-tree with each edge kept with probability `keep`.
pub fn partial_k_tree(n: usize, k: usize, keep: f64, rng: &mut impl Rng) -> Graph {
    let full = k_tree(n, k, rng);
    let mut g = Graph::new(n);
    for (u, v) in full.edges() {
        if rng.gen_bool(keep) {
            g.add_edge(u, v);
        }
    }
    g
}

/// Erdős–Rényi graph `G(n, p)`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

fn vertex(i: usize) -> String {
    format!("v{i}")
}

/// Builds an instance whose Gaifman graph is `g`: each edge becomes an
/// `E` or `F` fact in a random direction, and some vertices get a unary
/// `U` fact. At most `max_uncertain` facts are uncertain.
pub fn instance_from_graph(g: &Graph, max_uncertain: usize, rng: &mut impl Rng) -> TidInstance {
    let mut specs: Vec<(String, Vec<String>)> = Vec::new();
    for (u, v) in g.edges() {
        let rel = if rng.gen_bool(0.7) { "E" } else { "F" };
        let (a, b) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
        specs.push((rel.into(), vec![vertex(a), vertex(b)]));
    }
    for v in 0..g.num_vertices() {
        if g.degree(v) == 0 || rng.gen_bool(0.2) {
            specs.push(("U".into(), vec![vertex(v)]));
        }
    }
    let mut uncertain: Vec<usize> = (0..specs.len()).collect();
    uncertain.shuffle(rng);
    uncertain.truncate(max_uncertain);
    let mut is_uncertain = vec![false; specs.len()];
    for i in uncertain {
        is_uncertain[i] = true;
    }
    let mut next = 1;
    let facts = specs
        .into_iter()
        .zip(is_uncertain)
        .map(|((rel, args), unc)| {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            if unc {
                next += 1;
                FactSpec::new(&rel, &args, *PROBS.choose(rng).expect("nonempty"), Some(VarId(next - 1)))
            } else {
                FactSpec::new(&rel, &args, 1.0, None)
            }
        })
        .collect();
    TidInstance::from_specs(facts).expect("generated facts are distinct")
}

/// A directed `rows x cols` grid of `E` edges (rightward and downward)
/// plus `ears` two-edge detours between random grid vertices and
/// `pendants` dead-end edges. Every fact is uncertain.
pub fn grid_pendant(rows: usize, cols: usize, ears: usize, pendants: usize, rng: &mut impl Rng) -> TidInstance {
    let cell = |r: usize, c: usize| format!("g{r}_{c}");
    let mut edges: Vec<(String, String)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((cell(r, c), cell(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((cell(r, c), cell(r + 1, c)));
            }
        }
    }
    let cells: Vec<String> = (0..rows).flat_map(|r| (0..cols).map(move |c| cell(r, c))).collect();
    for i in 0..ears {
        let pair: Vec<&String> = cells.choose_multiple(rng, 2).collect();
        let x = format!("x{i}");
        let (a, b) = if rng.gen_bool(0.5) { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
        edges.push((a.clone(), x.clone()));
        edges.push((x, b.clone()));
    }
    for i in 0..pendants {
        let at = cells.choose(rng).expect("nonempty grid").clone();
        let p = format!("p{i}");
        edges.push(if rng.gen_bool(0.5) { (at, p) } else { (p, at) });
    }
    let facts = edges
        .iter()
        .enumerate()
        .map(|(i, (a, b))| FactSpec::new("E", &[a.as_str(), b.as_str()], *PROBS.choose(rng).expect("nonempty"), Some(VarId(i as u32 + 1))))
        .collect();
    TidInstance::from_specs(facts).expect("generated facts are distinct")
}

/// Random UCQ over `E/2`, `F/2` and `U/1` with up to `max_disjuncts`
/// disjuncts of 1 to `max_atoms` atoms each.
pub fn random_ucq(max_disjuncts: usize, max_atoms: usize, rng: &mut impl Rng) -> UcqQuery {
    let disjuncts = (0..rng.gen_range(1..=max_disjuncts))
        .map(|_| {
            // Each binary atom links a variable already in use to a fresh
            // one, or to another used one, so disjuncts stay connected.
            let mut used = 1;
            let atoms = (0..rng.gen_range(1..=max_atoms))
                .map(|_| {
                    let old = format!("x{}", rng.gen_range(0..used));
                    let (rel, arity) = *[("E", 2), ("E", 2), ("F", 2), ("U", 1)].choose(rng).expect("nonempty");
                    if arity == 1 {
                        return Atom {
                            relation: rel.into(),
                            args: vec![old],
                        };
                    }
                    let other = if used > 1 && rng.gen_bool(0.25) {
                        (0..used).map(|i| format!("x{i}")).filter(|v| *v != old).choose(rng).expect("two in use")
                    } else {
                        used += 1;
                        format!("x{}", used - 1)
                    };
                    let args = if rng.gen_bool(0.5) { vec![old, other] } else { vec![other, old] };
                    Atom {
                        relation: rel.into(),
                        args,
                    }
                })
                .collect();
            CqQuery::new(atoms)
        })
        .collect();
    UcqQuery { disjuncts }
}

/// Random regular expression over `E` and `F` of nesting depth at most
/// `depth`.
pub fn random_regex(depth: usize, rng: &mut impl Rng) -> Regex {
    let leaf = |rng: &mut _| Regex::rel(if Rng::gen_bool(rng, 0.7) { "E" } else { "F" });
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..7) {
        0 | 1 => leaf(rng),
        2 => Regex::Concat(Box::new(random_regex(depth - 1, rng)), Box::new(random_regex(depth - 1, rng))),
        3 => Regex::Alt(Box::new(random_regex(depth - 1, rng)), Box::new(random_regex(depth - 1, rng))),
        4 => Regex::Star(Box::new(random_regex(depth - 1, rng))),
        5 => Regex::Plus(Box::new(random_regex(depth - 1, rng))),
        _ => Regex::Opt(Box::new(random_regex(depth - 1, rng))),
    }
}

/// Reachability query from a random element to one reachable from it
/// along binary facts, when there is one.
pub fn random_rpq(inst: &TidInstance, rng: &mut impl Rng) -> RpqQuery {
    let names = inst.elements();
    let regex = if rng.gen_bool(0.4) {
        Regex::Plus(Box::new(Regex::Alt(Box::new(Regex::rel("E")), Box::new(Regex::rel("F")))))
    } else {
        random_regex(2, rng)
    };
    let mut succ = vec![Vec::new(); names.len()];
    for f in inst.facts().iter().filter(|f| f.args.len() == 2) {
        succ[f.args[0].index()].push(f.args[1].index());
    }
    let source = rng.gen_range(0..names.len());
    let mut seen = vec![false; names.len()];
    let mut stack = succ[source].clone();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(&succ[v]);
        }
    }
    let reach: Vec<usize> = (0..names.len()).filter(|&v| seen[v]).collect();
    let target = reach.choose(rng).copied().unwrap_or_else(|| rng.gen_range(0..names.len()));
    RpqQuery {
        source: names[source].clone(),
        target: names[target].clone(),
        regex,
    }
}

#[derive(Debug, Clone)]
pub struct CorpusPair {
    pub name: String,
    pub instance: TidInstance,
    pub query: Query,
}

/// `count` pairs of random partial `k`-tree instances (`k` cycling
/// through 1..=7, at most 20 uncertain facts) with UCQs of at most 3
/// atoms per disjunct or reachability queries. Pair `i` only depends on
/// `(seed, i)`.
pub fn corpus(seed: u64, count: usize) -> Vec<CorpusPair> {
    (0..count).map(|i| corpus_pair(seed, i)).collect()
}

pub fn corpus_pair(seed: u64, i: usize) -> CorpusPair {
    let mut rng = block_rng(seed, i as u64);
    let k = 1 + i % 7;
    let n = rng.gen_range(k + 1..=k + 4);
    // Aim at about 16 edges whatever k is.
    let full = k * (k + 1) / 2 + (n - k - 1) * k;
    let keep = (16.0 / full as f64).min(0.95) * rng.gen_range(0.6..1.0);
    let g = partial_k_tree(n, k, keep, &mut rng);
    let instance = instance_from_graph(&g, 20, &mut rng);
    let (query, kind) = if rng.gen_bool(0.35) {
        (Query::Rpq(random_rpq(&instance, &mut rng)), "rpq")
    } else {
        (Query::Ucq(random_ucq(2, 3, &mut rng)), "ucq")
    };
    CorpusPair {
        name: format!("p{i:04}-k{k}-{kind}"),
        instance,
        query,
    }
}

/// `count` grid+pendant instances with at most 20 facts, each paired
/// with `E+` reachability between opposite grid corners.
pub fn grid_corpus(seed: u64, count: usize) -> Vec<CorpusPair> {
    (0..count).map(|i| grid_pair(seed, i)).collect()
}

pub fn grid_pair(seed: u64, i: usize) -> CorpusPair {
    let mut rng = block_rng(seed ^ 0x6772_6964, i as u64);
    let (rows, cols) = *[(2, 3), (2, 4), (3, 3), (2, 5)].choose(&mut rng).expect("nonempty");
    let grid = rows * (cols - 1) + cols * (rows - 1);
    let ears = rng.gen_range(0..=2).min((20 - grid) / 2);
    let pendants = rng.gen_range(1..=4).min(20 - grid - 2 * ears);
    let instance = grid_pendant(rows, cols, ears, pendants, &mut rng);
    let query = Query::Rpq(RpqQuery {
        source: "g0_0".into(),
        target: format!("g{}_{}", rows - 1, cols - 1),
        regex: Regex::Plus(Box::new(Regex::rel("E"))),
    });
    CorpusPair {
        name: format!("g{i:04}-{rows}x{cols}"),
        instance,
        query,
    }
}

/// Writes each pair as `<name>.tsv` and `<name>.q`.
pub fn write_corpus(dir: &Path, pairs: &[CorpusPair]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for p in pairs {
        fs::write(dir.join(format!("{}.tsv", p.name)), p.instance.to_tsv())?;
        fs::write(dir.join(format!("{}.q", p.name)), format!("{}\n", p.query))?;
    }
    Ok(())
}

/// Reads every `<name>.tsv` with a matching `<name>.q`, sorted by name.
pub fn read_corpus(dir: &Path) -> Result<Vec<CorpusPair>> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".tsv")).map(String::from))
        .filter(|n| dir.join(format!("{n}.q")).exists())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Io(format!("no instance/query pairs in {}", dir.display())));
    }
    names
        .into_iter()
        .map(|name| {
            let instance = TidInstance::from_path(&dir.join(format!("{name}.tsv")))?;
            let query = parse_query(&fs::read_to_string(dir.join(format!("{name}.q")))?)?;
            Ok(CorpusPair { name, instance, query })
        })
        .collect()
}
