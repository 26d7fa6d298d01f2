//! Reachability on partially decomposed instances: tentacles are replaced
//! by exact distributions over which boundary elements they connect, and
//! the core is sampled.

use std::fmt::Write as _;

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lineage::{reachability_circuit, Wire};
use crate::par::{block_rng, blocks_of, map_blocks, Exec, SAMPLE_BLOCK};
use crate::prob::{estimate, format_prob, joint_distribution, lane_mask, Threshold};
use crate::query::{Regex, RpqQuery};
use crate::treedec::{PartialDecomposition, Tentacle};

/// Largest boundary that is summarized.
pub const B_MAX: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TentacleSummary {
    pub boundary: Vec<String>,
    /// Ordered boundary pairs `(u, v)`, `u != v`, row-major.
    pub pairs: Vec<(usize, usize)>,
    /// Probability of each pattern. Pattern `m` connects pair `k` iff bit
    /// `pairs.len() - 1 - k` of `m` is set, so increasing `m` lists
    /// patterns lexicographically over the pair matrix.
    pub probs: Vec<f64>,
    /// Uncertain facts of the tentacle.
    pub variables: usize,
}

impl TentacleSummary {
    pub fn connects(&self, pattern: usize, pair: usize) -> bool {
        pattern >> (self.pairs.len() - 1 - pair) & 1 == 1
    }

    /// Marginal probability that pair `k` is connected.
    pub fn pair_prob(&self, k: usize) -> f64 {
        (0..self.probs.len()).filter(|&m| self.connects(m, k)).map(|m| self.probs[m]).sum()
    }

    /// Pairs that are connected with positive probability.
    pub fn summary_edges(&self) -> usize {
        (0..self.pairs.len()).filter(|&k| self.pair_prob(k) > 0.0).count()
    }

    /// Whether a positive-probability pattern can differ from the empty
    /// one, i.e. whether sampling needs a draw for this tentacle.
    pub fn is_trivial(&self) -> bool {
        self.probs.iter().enumerate().all(|(m, &p)| m == 0 || p == 0.0)
    }

    /// Whether every pattern with positive probability is transitively
    /// closed.
    pub fn closed(&self) -> bool {
        let b = self.boundary.len();
        let index = |u: usize, v: usize| self.pairs.iter().position(|&p| p == (u, v));
        (0..self.probs.len()).filter(|&m| self.probs[m] > 0.0).all(|m| {
            let on = |u: usize, v: usize| index(u, v).is_some_and(|k| self.connects(m, k));
            (0..b).all(|u| (0..b).all(|v| (0..b).all(|w| u == w || !(on(u, v) && on(v, w)) || on(u, w))))
        })
    }

    /// Boundary list and pattern table; patterns are written as one digit
    /// per pair.
    pub fn dump(&self) -> String {
        let mut s = format!("tentacle boundary={} variables={}\n", self.boundary.join(","), self.variables);
        let pairs: Vec<String> = self
            .pairs
            .iter()
            .map(|&(u, v)| format!("{}>{}", self.boundary[u], self.boundary[v]))
            .collect();
        let _ = writeln!(s, "pairs {}", if pairs.is_empty() { "-".into() } else { pairs.join(" ") });
        for (m, p) in self.probs.iter().enumerate() {
            let bits: String = (0..self.pairs.len()).map(|k| if self.connects(m, k) { '1' } else { '0' }).collect();
            let _ = writeln!(s, "{} {}", if bits.is_empty() { "-" } else { &bits }, format_prob(*p));
        }
        s
    }
}

/// Exact distribution of the boundary connection patterns of a tentacle
/// along `relation` edges.
pub fn summarize_tentacle(t: &Tentacle, relation: &str) -> Result<TentacleSummary> {
    let b = t.boundary.len();
    if b > B_MAX {
        return Err(Error::BoundaryTooLarge { size: b, max: B_MAX });
    }
    let pairs: Vec<(usize, usize)> = (0..b).flat_map(|u| (0..b).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let variables = t.instance.num_vars();
    if pairs.is_empty() {
        return Ok(TentacleSummary {
            boundary: t.boundary.clone(),
            pairs,
            probs: vec![1.0],
            variables,
        });
    }
    let ids: Vec<usize> = t
        .boundary
        .iter()
        .map(|n| {
            t.instance
                .element_id(n)
                .map(|e| e.index())
                .ok_or_else(|| Error::UnknownElement(n.clone()))
        })
        .collect::<Result<_>>()?;
    let elem_pairs: Vec<(usize, usize)> = pairs.iter().map(|&(u, v)| (ids[u], ids[v])).collect();
    let nfa = Regex::Plus(Box::new(Regex::rel(relation))).to_nfa().reduced();
    let rc = reachability_circuit(&t.instance, &t.decomposition, t.root, &nfa, &elem_pairs)?;
    let mut targets: Vec<u32> = rc.outputs.iter().filter_map(|w| w.gate()).collect();
    targets.sort_unstable();
    targets.dedup();
    let joint = joint_distribution(&rc.circuit, &targets)?;
    let m = pairs.len();
    let mut probs = vec![0.0; 1 << m];
    for (a, p) in joint.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let pattern = rc.outputs.iter().enumerate().fold(0usize, |acc, (k, w)| {
            let on = match w {
                Wire::Const(c) => *c,
                Wire::Gate(g) => a >> targets.binary_search(g).expect("listed") & 1 == 1,
            };
            acc | (on as usize) << (m - 1 - k)
        });
        probs[pattern] += p;
    }
    Ok(TentacleSummary {
        boundary: t.boundary.clone(),
        pairs,
        probs,
        variables,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridEstimate {
    pub value: f64,
    pub stderr: f64,
    pub core_size_ratio: f64,
    pub samples: u64,
    /// Tentacles replaced by a summary.
    pub summarized: usize,
    /// Random fact draws per sample when every uncertain fact is drawn.
    pub naive_draws: usize,
    /// Random draws per sample here: uncertain core and unsummarized
    /// facts plus one per summary edge.
    pub hybrid_draws: usize,
}

impl HybridEstimate {
    pub fn work_reduction(&self) -> i64 {
        self.naive_draws as i64 - self.hybrid_draws as i64
    }
}

/// The `R` of a query `R+` or `R*`, and whether the empty path counts.
pub fn plain_reachability(q: &RpqQuery) -> Result<(&str, bool)> {
    match &q.regex {
        Regex::Plus(r) | Regex::Star(r) => match r.as_ref() {
            Regex::Rel(name) => Ok((name, matches!(q.regex, Regex::Star(_)))),
            _ => Err(Error::Unsupported(format!("hybrid estimation of {}", q.regex))),
        },
        other => Err(Error::Unsupported(format!("hybrid estimation of {other}"))),
    }
}

pub fn hybrid_estimate(pd: &PartialDecomposition, q: &RpqQuery, samples: u64, seed: u64) -> Result<HybridEstimate> {
    hybrid_estimate_with(pd, q, samples, seed, Exec::default())
}

/// Samples core facts and one pattern per summarized tentacle, then tests
/// reachability from source to target. Tentacles with more than
/// [`B_MAX`] boundary elements are not summarized; their facts are
/// sampled like core facts.
pub fn hybrid_estimate_with(
    pd: &PartialDecomposition,
    q: &RpqQuery,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<HybridEstimate> {
    let (relation, empty_ok) = plain_reachability(q)?;
    if samples == 0 {
        return Err(Error::Unsupported("hybrid estimation needs at least one sample".into()));
    }
    let in_core = |name: &str| {
        !pd.tentacles.iter().any(|t| t.interior.iter().any(|x| x == name))
            && (pd.core.element_id(name).is_some() || pd.tentacles.iter().any(|t| t.boundary.iter().any(|x| x == name)))
    };
    for e in [&q.source, &q.target] {
        if !in_core(e) {
            return Err(Error::EndpointNotInCore(e.clone()));
        }
    }

    let mut vertex: FxHashMap<String, usize> = FxHashMap::default();
    let mut id = |name: &str| {
        let n = vertex.len();
        *vertex.entry(name.to_string()).or_insert(n)
    };
    let (s, t) = (id(&q.source), id(&q.target));
    let mut facts: Vec<(usize, usize, Threshold)> = Vec::new();
    let mut naive_draws = pd.core.num_vars();
    let mut hybrid_draws = pd.core.num_vars();
    let add_facts = |inst: &crate::instance::TidInstance, facts: &mut Vec<_>, id: &mut dyn FnMut(&str) -> usize| {
        for f in inst.facts() {
            if f.relation == relation && f.args.len() == 2 {
                let a = id(inst.element_name(f.args[0]));
                let b = id(inst.element_name(f.args[1]));
                facts.push((a, b, Threshold::new(f.prob)));
            }
        }
    };
    add_facts(&pd.core, &mut facts, &mut id);
    // (boundary vertex ids, pattern table) per nontrivial summary
    let mut summaries: Vec<(Vec<usize>, TentacleSummary)> = Vec::new();
    let mut summarized = 0;
    for tent in &pd.tentacles {
        naive_draws += tent.instance.num_vars();
        if tent.boundary.len() > B_MAX {
            hybrid_draws += tent.instance.num_vars();
            add_facts(&tent.instance, &mut facts, &mut id);
            continue;
        }
        let sum = summarize_tentacle(tent, relation)?;
        summarized += 1;
        hybrid_draws += sum.summary_edges();
        if !sum.is_trivial() {
            let ids = sum.boundary.iter().map(|n| id(n)).collect();
            summaries.push((ids, sum));
        }
    }
    let nv = vertex.len();
    let cumulative: Vec<Vec<f64>> = summaries
        .iter()
        .map(|(_, sm)| {
            sm.probs
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let blocks = blocks_of(samples, SAMPLE_BLOCK);
    let hits: u64 = map_blocks(exec, blocks.len() as u64, |bi| {
        let (block, _, len) = blocks[bi as usize];
        let mut rng = block_rng(seed, block);
        let mut hits = 0u64;
        let mut edges: Vec<(usize, usize, u64)> = Vec::with_capacity(facts.len() + 6 * summaries.len());
        let mut reach = vec![0u64; nv];
        for start in (0..len).step_by(64) {
            let lanes = lane_mask(start, len);
            if s == t && empty_ok {
                hits += lanes.count_ones() as u64;
                continue;
            }
            edges.clear();
            for &(a, b, th) in &facts {
                edges.push((a, b, th.word(&mut rng)));
            }
            for ((ids, sm), cum) in summaries.iter().zip(&cumulative) {
                let mut words = vec![0u64; sm.pairs.len()];
                for lane in 0..64 {
                    let u: f64 = rng.gen();
                    let total = cum[cum.len() - 1];
                    let m = cum.iter().position(|&c| u * total < c).unwrap_or(cum.len() - 1);
                    for (k, w) in words.iter_mut().enumerate() {
                        if sm.connects(m, k) {
                            *w |= 1 << lane;
                        }
                    }
                }
                for (k, &(u, v)) in sm.pairs.iter().enumerate() {
                    if words[k] != 0 {
                        edges.push((ids[u], ids[v], words[k]));
                    }
                }
            }
            reach.iter_mut().for_each(|r| *r = 0);
            reach[s] = !0;
            let mut changed = true;
            while changed {
                changed = false;
                for &(a, b, w) in &edges {
                    let add = reach[a] & w & !reach[b];
                    if add != 0 {
                        reach[b] |= add;
                        changed = true;
                    }
                }
            }
            // Without the empty path, `s` only reaches itself via a cycle.
            let got = if s == t {
                edges.iter().fold(0u64, |acc, &(a, b, w)| acc | if b == s { reach[a] & w } else { 0 })
            } else {
                reach[t]
            };
            hits += (got & lanes).count_ones() as u64;
        }
        hits
    })
    .into_iter()
    .sum();
    let (value, stderr) = estimate(hits, samples);
    Ok(HybridEstimate {
        value,
        stderr,
        core_size_ratio: pd.core_size_ratio(),
        samples,
        summarized,
        naive_draws,
        hybrid_draws,
    })
}
