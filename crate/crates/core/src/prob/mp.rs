use std::time::Instant;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::{ProbMethod, ProbResult, ProbStats};
use crate::error::{Error, Result};
use crate::lineage::{Circuit, GateKind};

type Key = SmallVec<[u64; 2]>;

fn bit(k: &Key, i: usize) -> bool {
    k.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
}

fn set_bit(k: &mut Key, i: usize, b: bool) {
    if k.len() <= i / 64 {
        k.resize(i / 64 + 1, 0);
    }
    if b {
        k[i / 64] |= 1 << (i % 64);
    } else {
        k[i / 64] &= !(1 << (i % 64));
    }
}

fn with_bit(k: &Key, i: usize, b: bool) -> Key {
    let mut k = k.clone();
    set_bit(&mut k, i, b);
    k
}

/// Sparse nonnegative table over Boolean wires: only assignments with
/// nonzero weight are stored.
#[derive(Debug, Clone)]
struct Table {
    vars: Vec<u32>,
    rows: FxHashMap<Key, f64>,
}

impl Table {
    fn unit() -> Self {
        let mut rows = FxHashMap::default();
        rows.insert(Key::new(), 1.0);
        Table { vars: Vec::new(), rows }
    }

    fn pos(&self, v: u32) -> Option<usize> {
        self.vars.iter().position(|&x| x == v)
    }

    /// Adds `v` as a fresh variable, splitting every row with weights `w0`
    /// and `w1`.
    fn branch(&mut self, v: u32, w0: f64, w1: f64) {
        let i = self.vars.len();
        self.vars.push(v);
        let mut rows = FxHashMap::default();
        for (k, w) in self.rows.drain() {
            for (b, f) in [(false, w0), (true, w1)] {
                if f != 0.0 {
                    rows.insert(with_bit(&k, i, b), w * f);
                }
            }
        }
        self.rows = rows;
    }

    fn join(self, other: Table) -> Table {
        if self.vars.is_empty() {
            return Table {
                vars: other.vars,
                rows: other.rows.into_iter().map(|(k, w)| (k, w * self.rows[&Key::new()])).collect(),
            };
        }
        let shared: Vec<(usize, usize)> = other
            .vars
            .iter()
            .enumerate()
            .filter_map(|(j, &v)| self.pos(v).map(|i| (i, j)))
            .collect();
        let fresh: Vec<usize> = (0..other.vars.len()).filter(|j| !shared.iter().any(|s| s.1 == *j)).collect();
        let mut index: FxHashMap<Key, Vec<(Key, f64)>> = FxHashMap::default();
        for (k, w) in &other.rows {
            let mut sk = Key::new();
            for (n, &(_, j)) in shared.iter().enumerate() {
                set_bit(&mut sk, n, bit(k, j));
            }
            index.entry(sk).or_default().push((k.clone(), *w));
        }
        let base = self.vars.len();
        let mut vars = self.vars;
        vars.extend(fresh.iter().map(|&j| other.vars[j]));
        let mut rows = FxHashMap::default();
        for (k, w) in self.rows {
            let mut sk = Key::new();
            for (n, &(i, _)) in shared.iter().enumerate() {
                set_bit(&mut sk, n, bit(&k, i));
            }
            let Some(matches) = index.get(&sk) else { continue };
            for (ok, ow) in matches {
                let mut nk = k.clone();
                for (n, &j) in fresh.iter().enumerate() {
                    set_bit(&mut nk, base + n, bit(ok, j));
                }
                *rows.entry(nk).or_insert(0.0) += w * ow;
            }
        }
        Table { vars, rows }
    }

    /// Sums out every variable not in `keep`.
    fn project(self, keep: impl Fn(u32) -> bool) -> Table {
        let kept: Vec<usize> = (0..self.vars.len()).filter(|&i| keep(self.vars[i])).collect();
        if kept.len() == self.vars.len() {
            return self;
        }
        let vars = kept.iter().map(|&i| self.vars[i]).collect();
        let mut rows: FxHashMap<Key, f64> = FxHashMap::default();
        for (k, w) in self.rows {
            let mut nk = Key::new();
            for (n, &i) in kept.iter().enumerate() {
                set_bit(&mut nk, n, bit(&k, i));
            }
            *rows.entry(nk).or_insert(0.0) += w;
        }
        Table { vars, rows }
    }

    /// Multiplies in the factor of gate `g`.
    fn apply(&mut self, c: &Circuit, g: u32) {
        let gate = &c.gates[g as usize];
        for &x in &gate.inputs {
            if self.pos(x).is_none() {
                self.branch(x, 1.0, 1.0);
            }
        }
        let ins: SmallVec<[usize; 4]> = gate.inputs.iter().map(|&x| self.pos(x).expect("branched")).collect();
        let value = |k: &Key| match gate.kind {
            GateKind::True => true,
            GateKind::False => false,
            GateKind::Not => !bit(k, ins[0]),
            GateKind::And => ins.iter().all(|&i| bit(k, i)),
            GateKind::Or => ins.iter().any(|&i| bit(k, i)),
            GateKind::Var(_) => unreachable!(),
        };
        match (gate.kind, self.pos(g)) {
            (GateKind::Var(v), None) => {
                let p = c.var_probs[&v];
                self.branch(g, 1.0 - p, p);
            }
            (GateKind::Var(v), Some(i)) => {
                let p = c.var_probs[&v];
                self.rows.retain(|k, w| {
                    *w *= if bit(k, i) { p } else { 1.0 - p };
                    *w != 0.0
                });
            }
            (_, None) => {
                let i = self.vars.len();
                self.vars.push(g);
                self.rows = self.rows.drain().map(|(k, w)| (with_bit(&k, i, value(&k)), w)).collect();
            }
            (_, Some(i)) => self.rows.retain(|k, _| bit(k, i) == value(k)),
        }
    }
}

/// Joint distribution of the `targets` wires, indexed by the pattern
/// whose bit `i` is the value of `targets[i]`. Gates are treated as
/// deterministic factors and variables as Bernoulli factors, and wires
/// are eliminated along the companion decomposition, rooted at the last
/// bag holding all targets.
pub fn joint_distribution(c: &Circuit, targets: &[u32]) -> Result<Vec<f64>> {
    Ok(run(c, targets)?.0)
}

fn run(c: &Circuit, targets: &[u32]) -> Result<(Vec<f64>, usize)> {
    c.validate()?;
    if targets.len() > 24 {
        return Err(Error::Unsupported(format!("joint distribution over {} wires", targets.len())));
    }
    if let Some(&t) = targets.iter().find(|&&t| t as usize >= c.gates.len()) {
        return Err(Error::Unsupported(format!("target gate {t} out of range")));
    }
    let td = c
        .companion_td
        .as_ref()
        .ok_or_else(|| Error::InvalidCompanion("circuit has no companion decomposition".into()))?;
    td.validate(&c.wiring_graph())
        .map_err(|v| Error::InvalidCompanion(v.to_string()))?;
    let bags: Vec<Vec<u32>> = td
        .bags
        .iter()
        .map(|b| {
            let mut b: Vec<u32> = b.iter().map(|&g| g as u32).collect();
            b.sort_unstable();
            b
        })
        .collect();
    // Builders emit the bags holding their outputs last, so the last
    // matching bag keeps the construction order bottom-up.
    let root = bags
        .iter()
        .rposition(|b| targets.iter().all(|t| b.binary_search(t).is_ok()))
        .ok_or_else(|| Error::InvalidCompanion("no bag holds every target wire".into()))?;
    let rooted = td.rooted(root);

    let mut occ: Vec<Vec<usize>> = vec![Vec::new(); c.gates.len()];
    for (i, b) in bags.iter().enumerate() {
        for &g in b {
            occ[g as usize].push(i);
        }
    }
    let mut factors: Vec<Vec<u32>> = vec![Vec::new(); bags.len()];
    for (g, gate) in c.gates.iter().enumerate() {
        let home = occ[g]
            .iter()
            .copied()
            .filter(|&b| gate.inputs.iter().all(|x| bags[b].binary_search(x).is_ok()))
            .max_by_key(|&b| (rooted.depth[b], std::cmp::Reverse(b)))
            .ok_or_else(|| Error::InvalidCompanion(format!("no bag covers gate {g} and its inputs")))?;
        factors[home].push(g as u32);
    }

    let mut msgs: Vec<Option<Table>> = vec![None; bags.len()];
    let mut peak = 0usize;
    let mut last = Table::unit();
    for &b in rooted.preorder.iter().rev() {
        let mut t = Table::unit();
        for &ch in &rooted.children[b] {
            t = t.join(msgs[ch].take().expect("children come first"));
        }
        for &g in &factors[b] {
            t.apply(c, g);
        }
        peak = peak.max(t.rows.len());
        match rooted.parent[b] {
            Some(p) => msgs[b] = Some(t.project(|v| bags[p].binary_search(&v).is_ok())),
            None => last = t,
        }
    }

    for &g in targets {
        if last.pos(g).is_none() {
            last.branch(g, 1.0, 1.0);
        }
    }
    let pos: Vec<usize> = targets.iter().map(|&g| last.pos(g).expect("present")).collect();
    let mut dist = vec![0.0; 1 << targets.len()];
    let mut z = 0.0;
    for (k, w) in &last.rows {
        let pattern = pos.iter().enumerate().fold(0usize, |acc, (i, &p)| acc | (bit(k, p) as usize) << i);
        dist[pattern] += w;
        z += w;
    }
    if z > 0.0 {
        for d in &mut dist {
            *d /= z;
        }
    }
    Ok((dist, peak))
}

/// Exact probability of the output wire by message passing over the
/// companion decomposition.
pub fn prob_message_passing(c: &Circuit) -> Result<ProbResult> {
    let start = Instant::now();
    let (dist, _) = run(c, &[c.output])?;
    Ok(ProbResult {
        value: dist[1].clamp(0.0, 1.0),
        method: ProbMethod::MessagePassing,
        stderr: None,
        stats: ProbStats {
            gates: c.gates.len(),
            factors: c.gates.len(),
            elapsed: start.elapsed(),
        },
    })
}
