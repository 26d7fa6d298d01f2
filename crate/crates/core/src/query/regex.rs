//! Regular expressions over relation names and their position automata.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Finality and outgoing (relation, successor class) pairs of a state.
type Signature<'a> = (usize, BTreeSet<(&'a str, usize)>);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Regex {
    Rel(String),
    Concat(Box<Regex>, Box<Regex>),
    Alt(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
    Plus(Box<Regex>),
    Opt(Box<Regex>),
}

impl Regex {
    pub fn rel(name: &str) -> Self {
        Regex::Rel(name.to_string())
    }

    pub fn relations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_relations(&mut out);
        out
    }

    fn collect_relations(&self, out: &mut BTreeSet<String>) {
        match self {
            Regex::Rel(r) => {
                out.insert(r.clone());
            }
            Regex::Concat(a, b) | Regex::Alt(a, b) => {
                a.collect_relations(out);
                b.collect_relations(out);
            }
            Regex::Star(a) | Regex::Plus(a) | Regex::Opt(a) => a.collect_relations(out),
        }
    }

    pub fn nullable(&self) -> bool {
        match self {
            Regex::Rel(_) => false,
            Regex::Concat(a, b) => a.nullable() && b.nullable(),
            Regex::Alt(a, b) => a.nullable() || b.nullable(),
            Regex::Star(_) | Regex::Opt(_) => true,
            Regex::Plus(a) => a.nullable(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Alt(..) => 0,
            Regex::Concat(..) => 1,
            Regex::Star(_) | Regex::Plus(_) | Regex::Opt(_) => 2,
            Regex::Rel(_) => 3,
        }
    }

    /// The position (Glushkov) automaton: one state per relation
    /// occurrence plus an initial state 0, and no epsilon transitions.
    pub fn to_nfa(&self) -> Nfa {
        let mut symbols = Vec::new();
        let mut follow = vec![BTreeSet::new()];
        let info = positions(self, &mut symbols, &mut follow);
        let n = symbols.len() + 1;
        let mut transitions = Vec::new();
        for &p in &info.first {
            transitions.push((0, symbols[p - 1].clone(), p));
        }
        for (p, fs) in follow.iter().enumerate().skip(1) {
            for &q in fs {
                transitions.push((p, symbols[q - 1].clone(), q));
            }
        }
        let mut finals = vec![false; n];
        for &p in &info.last {
            finals[p] = true;
        }
        finals[0] = info.nullable;
        transitions.sort();
        Nfa {
            num_states: n,
            initial: vec![0],
            finals,
            transitions,
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, r: &Regex, min: u8| {
            if r.precedence() < min {
                write!(f, "({r})")
            } else {
                write!(f, "{r}")
            }
        };
        match self {
            Regex::Rel(r) => write!(f, "{r}"),
            Regex::Alt(a, b) => {
                wrap(f, a, 0)?;
                f.write_str("|")?;
                wrap(f, b, 1)
            }
            Regex::Concat(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(".")?;
                wrap(f, b, 2)
            }
            Regex::Star(a) => {
                wrap(f, a, 3)?;
                f.write_str("*")
            }
            Regex::Plus(a) => {
                wrap(f, a, 3)?;
                f.write_str("+")
            }
            Regex::Opt(a) => {
                wrap(f, a, 3)?;
                f.write_str("?")
            }
        }
    }
}

/// Nondeterministic word automaton over relation names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub num_states: usize,
    pub initial: Vec<usize>,
    pub finals: Vec<bool>,
    /// `(from, relation, to)`, sorted.
    pub transitions: Vec<(usize, String, usize)>,
}

impl Nfa {
    pub fn accepts_empty(&self) -> bool {
        self.initial.iter().any(|&q| self.finals[q])
    }

    pub fn accepts(&self, word: &[&str]) -> bool {
        let mut cur: BTreeSet<usize> = self.initial.iter().copied().collect();
        for sym in word {
            cur = self
                .transitions
                .iter()
                .filter(|(p, r, _)| cur.contains(p) && r == sym)
                .map(|t| t.2)
                .collect();
        }
        cur.iter().any(|&q| self.finals[q])
    }

    /// Quotient by forward bisimulation: states with equal finality whose
    /// transitions reach the same classes on the same relations are
    /// merged. The language is unchanged.
    pub fn reduced(&self) -> Nfa {
        let n = self.num_states;
        let mut class: Vec<usize> = self.finals.iter().map(|&f| f as usize).collect();
        loop {
            let sigs: Vec<(usize, BTreeSet<(&str, usize)>)> = (0..n)
                .map(|p| {
                    let succ = self
                        .transitions
                        .iter()
                        .filter(|t| t.0 == p)
                        .map(|t| (t.1.as_str(), class[t.2]))
                        .collect();
                    (class[p], succ)
                })
                .collect();
            let mut ids: BTreeMap<&Signature, usize> = BTreeMap::new();
            // Number classes by first occurrence so state 0 stays first.
            let next: Vec<usize> = sigs
                .iter()
                .map(|s| {
                    let k = ids.len();
                    *ids.entry(s).or_insert(k)
                })
                .collect();
            let stable = ids.len() == class.iter().collect::<BTreeSet<_>>().len();
            class = next;
            if stable {
                break;
            }
        }
        let m = class.iter().max().map_or(0, |&c| c + 1);
        let mut finals = vec![false; m];
        for p in 0..n {
            finals[class[p]] |= self.finals[p];
        }
        let initial: BTreeSet<usize> = self.initial.iter().map(|&q| class[q]).collect();
        let transitions: BTreeSet<(usize, String, usize)> =
            self.transitions.iter().map(|(p, r, q)| (class[*p], r.clone(), class[*q])).collect();
        Nfa {
            num_states: m,
            initial: initial.into_iter().collect(),
            finals,
            transitions: transitions.into_iter().collect(),
        }
    }
}

struct PosInfo {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

/// Numbers relation occurrences left to right from 1 and fills their
/// follow sets.
fn positions(r: &Regex, symbols: &mut Vec<String>, follow: &mut Vec<BTreeSet<usize>>) -> PosInfo {
    match r {
        Regex::Rel(name) => {
            symbols.push(name.clone());
            follow.push(BTreeSet::new());
            let p = symbols.len();
            PosInfo {
                nullable: false,
                first: BTreeSet::from([p]),
                last: BTreeSet::from([p]),
            }
        }
        Regex::Concat(a, b) => {
            let a = positions(a, symbols, follow);
            let b = positions(b, symbols, follow);
            for &p in &a.last {
                follow[p].extend(b.first.iter().copied());
            }
            PosInfo {
                nullable: a.nullable && b.nullable,
                first: if a.nullable { &a.first | &b.first } else { a.first },
                last: if b.nullable { &a.last | &b.last } else { b.last },
            }
        }
        Regex::Alt(a, b) => {
            let a = positions(a, symbols, follow);
            let b = positions(b, symbols, follow);
            PosInfo {
                nullable: a.nullable || b.nullable,
                first: &a.first | &b.first,
                last: &a.last | &b.last,
            }
        }
        Regex::Star(a) | Regex::Plus(a) | Regex::Opt(a) => {
            let info = positions(a, symbols, follow);
            if !matches!(r, Regex::Opt(_)) {
                for &p in &info.last {
                    follow[p].extend(info.first.iter().copied());
                }
            }
            PosInfo {
                nullable: info.nullable || !matches!(r, Regex::Plus(_)),
                ..info
            }
        }
    }
}
