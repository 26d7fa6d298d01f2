use std::fmt::Write as _;

use smallvec::SmallVec;

use super::Label;
use crate::query::CqQuery;

/// Where a query variable currently points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarSlot {
    Unmapped,
    Slot(u8),
    /// Mapped to an element that has left the current bag.
    Forgotten,
}

/// Partial homomorphism state, expressed in the slots of the parent of
/// the node it is assigned to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CqState {
    pub varmap: SmallVec<[VarSlot; 8]>,
    /// Bitmask of satisfied atoms.
    pub satisfied: u64,
}

#[derive(Debug)]
pub(crate) struct CompiledCq {
    pub vars: Vec<String>,
    /// Relation index and variable indices per atom.
    pub atoms: Vec<(u16, Vec<u8>)>,
    /// Atoms mentioning each variable.
    var_atoms: Vec<u64>,
    pub full: u64,
}

type Bindings = SmallVec<[(u8, u8); 4]>;

impl CompiledCq {
    pub fn new(q: &CqQuery, relation_index: impl Fn(&str) -> u16) -> Self {
        let vars: Vec<String> = q.variables.iter().cloned().collect();
        let var_of = |v: &str| vars.binary_search_by(|x| x.as_str().cmp(v)).expect("variable listed") as u8;
        let atoms: Vec<(u16, Vec<u8>)> = q
            .atoms
            .iter()
            .map(|a| (relation_index(&a.relation), a.args.iter().map(|v| var_of(v)).collect()))
            .collect();
        let mut var_atoms = vec![0u64; vars.len()];
        for (i, (_, args)) in atoms.iter().enumerate() {
            for &x in args {
                var_atoms[x as usize] |= 1 << i;
            }
        }
        let full = if atoms.len() == 64 { u64::MAX } else { (1u64 << atoms.len()) - 1 };
        CompiledCq {
            vars,
            atoms,
            var_atoms,
            full,
        }
    }

    fn done(&self) -> CqState {
        CqState {
            varmap: SmallVec::from_elem(VarSlot::Unmapped, self.vars.len()),
            satisfied: self.full,
        }
    }

    pub fn is_final(&self, s: &CqState) -> bool {
        s.satisfied == self.full
    }

    /// Drops bookkeeping for variables whose atoms are all satisfied and
    /// rejects states with an unsatisfiable atom.
    fn normalize(&self, mut s: CqState) -> Option<CqState> {
        if s.satisfied == self.full {
            return Some(self.done());
        }
        for (x, slot) in s.varmap.iter_mut().enumerate() {
            if self.var_atoms[x] & !s.satisfied == 0 {
                *slot = VarSlot::Unmapped;
            }
        }
        let dead = self.atoms.iter().enumerate().any(|(i, (_, args))| {
            s.satisfied & 1 << i == 0 && args.iter().any(|&x| s.varmap[x as usize] == VarSlot::Forgotten)
        });
        (!dead).then_some(s)
    }

    fn merge(&self, a: &CqState, b: &CqState) -> Option<CqState> {
        let mut varmap = SmallVec::with_capacity(a.varmap.len());
        for (&x, &y) in a.varmap.iter().zip(&b.varmap) {
            varmap.push(match (x, y) {
                (VarSlot::Unmapped, v) | (v, VarSlot::Unmapped) => v,
                (VarSlot::Slot(i), VarSlot::Slot(j)) if i == j => x,
                _ => return None,
            });
        }
        self.normalize(CqState {
            varmap,
            satisfied: a.satisfied | b.satisfied,
        })
    }

    /// New variable bindings needed for atom `i` to hold on a fact with
    /// argument slots `slots`, or `None` if it cannot.
    fn bindings(&self, s: &CqState, i: usize, slots: &[u8]) -> Option<Bindings> {
        let args = &self.atoms[i].1;
        if args.len() != slots.len() {
            return None;
        }
        let mut new = Bindings::new();
        for (&x, &want) in args.iter().zip(slots) {
            match s.varmap[x as usize] {
                VarSlot::Slot(have) if have == want => {}
                VarSlot::Slot(_) | VarSlot::Forgotten => return None,
                VarSlot::Unmapped => match new.iter().find(|b| b.0 == x) {
                    Some(&(_, w)) if w != want => return None,
                    Some(_) => {}
                    None => new.push((x, want)),
                },
            }
        }
        Some(new)
    }

    /// Successor states at a node with the given label and child states.
    pub fn step(&self, label: &Label, kids: &[&CqState]) -> Vec<CqState> {
        let merged = match kids {
            [] => Some(CqState {
                varmap: SmallVec::from_elem(VarSlot::Unmapped, self.vars.len()),
                satisfied: 0,
            }),
            [a] => Some((*a).clone()),
            [a, b] => self.merge(a, b),
            _ => unreachable!("encodings are binary"),
        };
        let Some(st) = merged else { return Vec::new() };
        if st.satisfied == self.full {
            return vec![self.done()];
        }
        let mut local = Vec::new();
        match &label.fact {
            None => local.push(st),
            Some((rel, slots)) => {
                let optional: Vec<Bindings> = (0..self.atoms.len())
                    .filter(|&i| st.satisfied & 1 << i == 0 && self.atoms[i].0 == *rel)
                    .filter_map(|i| self.bindings(&st, i, slots))
                    .filter(|b| !b.is_empty())
                    .collect();
                'subsets: for choice in 0u64..1 << optional.len() {
                    let mut s = st.clone();
                    for (k, b) in optional.iter().enumerate() {
                        if choice & 1 << k == 0 {
                            continue;
                        }
                        for &(x, slot) in b {
                            match s.varmap[x as usize] {
                                VarSlot::Unmapped => s.varmap[x as usize] = VarSlot::Slot(slot),
                                VarSlot::Slot(have) if have == slot => {}
                                _ => continue 'subsets,
                            }
                        }
                    }
                    for i in 0..self.atoms.len() {
                        if s.satisfied & 1 << i == 0
                            && self.atoms[i].0 == *rel
                            && self.bindings(&s, i, slots).is_some_and(|b| b.is_empty())
                        {
                            s.satisfied |= 1 << i;
                        }
                    }
                    local.push(s);
                }
            }
        }
        let mut out: Vec<CqState> = local
            .into_iter()
            .filter_map(|mut s| {
                for v in s.varmap.iter_mut() {
                    if let VarSlot::Slot(i) = *v {
                        *v = match label.overlap.iter().find(|o| o.0 == i) {
                            Some(&(_, p)) => VarSlot::Slot(p),
                            None => VarSlot::Forgotten,
                        };
                    }
                }
                self.normalize(s)
            })
            .collect();
        out.sort_by(|a, b| (a.satisfied, &a.varmap[..]).cmp(&(b.satisfied, &b.varmap[..])));
        out.dedup();
        out
    }

    pub fn describe(&self, s: &CqState) -> String {
        let mut out = String::new();
        for (name, v) in self.vars.iter().zip(&s.varmap) {
            let _ = match v {
                VarSlot::Unmapped => write!(out, "{name}:- "),
                VarSlot::Slot(i) => write!(out, "{name}:{i} "),
                VarSlot::Forgotten => write!(out, "{name}:* "),
            };
        }
        let sat: Vec<String> = (0..self.atoms.len())
            .filter(|i| s.satisfied & 1 << i != 0)
            .map(|i| i.to_string())
            .collect();
        let _ = write!(out, "sat={{{}}}", sat.join(","));
        out
    }
}
