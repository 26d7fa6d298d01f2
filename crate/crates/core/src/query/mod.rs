//! Boolean queries: unions of conjunctive queries and one-way regular
//! path (reachability) queries, with query-driven instance rewritings.

mod parse;
pub mod regex;
mod rewrite;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::instance::TidInstance;

pub use parse::parse_query;
pub use regex::{Nfa, Regex};
pub use rewrite::{disconnect_rewrite, join_pattern, prune_relations, Position};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CqQuery {
    pub atoms: Vec<Atom>,
    pub variables: BTreeSet<String>,
}

impl CqQuery {
    pub fn new(atoms: Vec<Atom>) -> Self {
        let variables = atoms.iter().flat_map(|a| a.args.iter().cloned()).collect();
        CqQuery { atoms, variables }
    }

    pub fn max_arity(&self) -> usize {
        self.atoms.iter().map(|a| a.args.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UcqQuery {
    pub disjuncts: Vec<CqQuery>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RpqQuery {
    pub source: String,
    pub target: String,
    pub regex: Regex,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Ucq(UcqQuery),
    Rpq(RpqQuery),
}

impl Query {
    /// Relation names the query mentions.
    pub fn relations(&self) -> BTreeSet<String> {
        match self {
            Query::Ucq(u) => u
                .disjuncts
                .iter()
                .flat_map(|d| d.atoms.iter().map(|a| a.relation.clone()))
                .collect(),
            Query::Rpq(r) => r.regex.relations(),
        }
    }

    /// Checks the query against the instance schema: atom arities must
    /// match and path relations must be binary.
    pub fn check_schema(&self, inst: &TidInstance) -> Result<()> {
        let schema = inst.relations();
        match self {
            Query::Ucq(u) => {
                for a in u.disjuncts.iter().flat_map(|d| &d.atoms) {
                    if let Some(&arity) = schema.get(&a.relation) {
                        if arity != a.args.len() {
                            return Err(Error::ArityMismatch {
                                relation: a.relation.clone(),
                                expected: arity,
                                found: a.args.len(),
                            });
                        }
                    }
                }
            }
            Query::Rpq(r) => {
                for rel in r.regex.relations() {
                    if schema.get(&rel).is_some_and(|&a| a != 2) {
                        return Err(Error::NotBinary(rel));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.relation, self.args.join(", "))
    }
}

impl fmt::Display for CqQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "q() :- true.");
        }
        let body: Vec<String> = self.atoms.iter().map(Atom::to_string).collect();
        write!(f, "q() :- {}.", body.join(", "))
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Ucq(u) => {
                let rules: Vec<String> = u.disjuncts.iter().map(CqQuery::to_string).collect();
                write!(f, "{}", rules.join("\n"))
            }
            Query::Rpq(r) => write!(f, "reach({}, {}, \"{}\")", r.source, r.target, r.regex),
        }
    }
}

/// Relation arities used by a UCQ, for generators and checks.
pub fn ucq_schema(q: &UcqQuery) -> BTreeMap<String, usize> {
    q.disjuncts
        .iter()
        .flat_map(|d| d.atoms.iter().map(|a| (a.relation.clone(), a.args.len())))
        .collect()
}
