use std::collections::BTreeSet;
use std::time::Instant;

use rustc_hash::FxHashMap;

use super::{ProbMethod, ProbResult, ProbStats};
use crate::error::{Error, Result};
use crate::instance::{ElemId, TidInstance};
use crate::lineage::for_each_word;
use crate::query::{CqQuery, Query, Regex, RpqQuery, UcqQuery};

pub const DEFAULT_VAR_CAP: usize = 20;

/// Query truth on a block of 64 worlds, given each variable's presence word.
type Truth<'a> = dyn Fn(&dyn Fn(usize) -> u64) -> u64 + 'a;

/// Exact probability by enumerating every world of the instance.
pub fn brute_force_pqe(inst: &TidInstance, q: &Query) -> Result<ProbResult> {
    brute_force_pqe_with_cap(inst, q, DEFAULT_VAR_CAP)
}

pub fn brute_force_pqe_with_cap(inst: &TidInstance, q: &Query, cap: usize) -> Result<ProbResult> {
    let start = Instant::now();
    let n = inst.num_vars();
    if n > cap {
        return Err(Error::VariableCapExceeded { vars: n, cap });
    }
    if n > 40 {
        return Err(Error::Unsupported(format!("enumerating {n} variables")));
    }
    // Fact i's variable becomes bit index[i] of the world number.
    let vars: Vec<_> = inst.variables().collect();
    let bit_of: FxHashMap<_, usize> = vars.iter().enumerate().map(|(i, (v, _))| (*v, i)).collect();
    let fact_bit: Vec<Option<usize>> = inst.facts().iter().map(|f| f.var.map(|v| bit_of[&v])).collect();
    let probs: Vec<f64> = vars.iter().map(|v| v.1).collect();

    let truth: Box<Truth> = match q {
        Query::Ucq(u) => {
            let witnesses = minimal_witnesses(inst, u, &fact_bit);
            Box::new(move |word| {
                witnesses.iter().fold(0u64, |acc, &m| {
                    acc | (0..64).filter(|i| m >> i & 1 == 1).fold(!0u64, |a, i| a & word(i))
                })
            })
        }
        Query::Rpq(r) => {
            let search = ReachSearch::new(inst, r, &fact_bit)?;
            Box::new(move |word| search.run(word))
        }
    };

    let table = WorldTable::new(&probs);
    let mut total = 0.0;
    for_each_word(n, |word, lanes| {
        let hits = truth(word) & lanes;
        if hits != 0 {
            total += table.block_sum(word, hits, n);
        }
        true
    });
    Ok(ProbResult {
        value: total.clamp(0.0, 1.0),
        method: ProbMethod::BruteForce,
        stderr: None,
        stats: ProbStats {
            gates: 0,
            factors: 1usize << n,
            elapsed: start.elapsed(),
        },
    })
}

/// World probabilities as a product of two lookup tables over the low and
/// high halves of the world number.
struct WorldTable {
    low_bits: usize,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl WorldTable {
    fn new(probs: &[f64]) -> Self {
        let low_bits = probs.len().min(10);
        let table = |ps: &[f64]| -> Vec<f64> {
            (0..1usize << ps.len())
                .map(|m| {
                    ps.iter()
                        .enumerate()
                        .map(|(i, p)| if m >> i & 1 == 1 { *p } else { 1.0 - p })
                        .product()
                })
                .collect()
        };
        WorldTable {
            low_bits,
            low: table(&probs[..low_bits]),
            high: table(&probs[low_bits..]),
        }
    }

    /// Sum of the probabilities of the worlds set in `hits`, where lane
    /// `l` of the block is the world whose bit `i` is bit `l` of `word(i)`.
    fn block_sum(&self, word: &dyn Fn(usize) -> u64, hits: u64, n: usize) -> f64 {
        let mut sum = 0.0;
        let mut h = hits;
        while h != 0 {
            let lane = h.trailing_zeros();
            h &= h - 1;
            let world = (0..n).fold(0usize, |acc, i| acc | ((word(i) >> lane & 1) as usize) << i);
            sum += self.low[world & ((1 << self.low_bits) - 1)] * self.high[world >> self.low_bits];
        }
        sum
    }
}

/// Variable masks of homomorphic images of some disjunct, keeping only
/// the subset-minimal ones.
fn minimal_witnesses(inst: &TidInstance, u: &UcqQuery, fact_bit: &[Option<usize>]) -> Vec<u64> {
    let mut by_rel: FxHashMap<&str, Vec<usize>> = FxHashMap::default();
    for (i, f) in inst.facts().iter().enumerate() {
        by_rel.entry(f.relation.as_str()).or_default().push(i);
    }
    let mut found = BTreeSet::new();
    for d in &u.disjuncts {
        let mut binding = FxHashMap::default();
        homomorphisms(inst, d, 0, &by_rel, fact_bit, &mut binding, 0, &mut found);
    }
    let all: Vec<u64> = found.into_iter().collect();
    all.iter()
        .copied()
        .filter(|&m| !all.iter().any(|&o| o != m && o & m == o))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn homomorphisms<'a>(
    inst: &TidInstance,
    d: &'a CqQuery,
    atom: usize,
    by_rel: &FxHashMap<&str, Vec<usize>>,
    fact_bit: &[Option<usize>],
    binding: &mut FxHashMap<&'a str, ElemId>,
    mask: u64,
    out: &mut BTreeSet<u64>,
) {
    let Some(a) = d.atoms.get(atom) else {
        out.insert(mask);
        return;
    };
    for &fi in by_rel.get(a.relation.as_str()).map_or(&[][..], |v| v.as_slice()) {
        let f = &inst.facts()[fi];
        if f.args.len() != a.args.len() {
            continue;
        }
        let mut added = Vec::new();
        let ok = a.args.iter().zip(&f.args).all(|(x, &e)| match binding.get(x.as_str()) {
            Some(&b) => b == e,
            None => {
                binding.insert(x.as_str(), e);
                added.push(x.as_str());
                true
            }
        });
        if ok {
            let m = mask | fact_bit[fi].map_or(0, |b| 1 << b);
            homomorphisms(inst, d, atom + 1, by_rel, fact_bit, binding, m, out);
        }
        for x in added {
            binding.remove(x);
        }
    }
}

/// Thompson automaton with epsilon moves.
struct Thompson {
    states: usize,
    eps: Vec<(usize, usize)>,
    moves: Vec<(usize, String, usize)>,
}

impl Thompson {
    fn build(r: &Regex) -> (Self, usize, usize) {
        let mut t = Thompson {
            states: 0,
            eps: Vec::new(),
            moves: Vec::new(),
        };
        let (s, f) = t.add(r);
        (t, s, f)
    }

    fn fresh(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    fn add(&mut self, r: &Regex) -> (usize, usize) {
        let (s, f) = (self.fresh(), self.fresh());
        match r {
            Regex::Rel(name) => self.moves.push((s, name.clone(), f)),
            Regex::Concat(a, b) => {
                let (a0, a1) = self.add(a);
                let (b0, b1) = self.add(b);
                self.eps.extend([(s, a0), (a1, b0), (b1, f)]);
            }
            Regex::Alt(a, b) => {
                let (a0, a1) = self.add(a);
                let (b0, b1) = self.add(b);
                self.eps.extend([(s, a0), (s, b0), (a1, f), (b1, f)]);
            }
            Regex::Star(a) | Regex::Plus(a) | Regex::Opt(a) => {
                let (a0, a1) = self.add(a);
                self.eps.extend([(s, a0), (a1, f)]);
                if !matches!(r, Regex::Plus(_)) {
                    self.eps.push((s, f));
                }
                if !matches!(r, Regex::Opt(_)) {
                    self.eps.push((a1, a0));
                }
            }
        }
        (s, f)
    }
}

/// Bit-sliced reachability in the product of the instance and a Thompson
/// automaton: every lane is a separate world.
struct ReachSearch {
    states: usize,
    eps: Vec<(usize, usize)>,
    /// (source vertex, target vertex, fact bit)
    edges: Vec<(usize, usize, Option<usize>)>,
    start: usize,
    goal: usize,
}

impl ReachSearch {
    fn new(inst: &TidInstance, r: &RpqQuery, fact_bit: &[Option<usize>]) -> Result<Self> {
        let elem = |name: &str| inst.element_id(name).ok_or_else(|| Error::UnknownElement(name.to_string()));
        let (s, t) = (elem(&r.source)?, elem(&r.target)?);
        let (a, q0, qf) = Thompson::build(&r.regex);
        let k = a.states;
        let mut edges = Vec::new();
        for (fi, f) in inst.facts().iter().enumerate() {
            if f.args.len() != 2 {
                continue;
            }
            for (p, name, q) in &a.moves {
                if *name == f.relation {
                    edges.push((f.args[0].index() * k + p, f.args[1].index() * k + q, fact_bit[fi]));
                }
            }
        }
        let start = s.index() * k + q0;
        let goal = t.index() * k + qf;
        Ok(ReachSearch {
            states: k,
            eps: a.eps,
            edges,
            start,
            goal,
        })
    }

    fn run(&self, word: &dyn Fn(usize) -> u64) -> u64 {
        let k = self.states;
        let nv = self.edges.iter().map(|e| e.0.max(e.1)).chain([self.start, self.goal]).max().unwrap_or(0) / k + 1;
        let mut reach = vec![0u64; nv * k];
        reach[self.start] = !0;
        let edge_words: Vec<u64> = self.edges.iter().map(|e| e.2.map_or(!0, word)).collect();
        loop {
            let mut changed = false;
            for v in 0..nv {
                for &(p, q) in &self.eps {
                    let add = reach[v * k + p] & !reach[v * k + q];
                    if add != 0 {
                        reach[v * k + q] |= add;
                        changed = true;
                    }
                }
            }
            for (&(a, b, _), &w) in self.edges.iter().zip(&edge_words) {
                let add = reach[a] & w & !reach[b];
                if add != 0 {
                    reach[b] |= add;
                    changed = true;
                }
            }
            if !changed {
                return reach[self.goal];
            }
        }
    }
}
