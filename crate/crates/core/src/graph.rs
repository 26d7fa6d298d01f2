//! Simple undirected graphs and the PACE `.gr` format.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Adds `{u, v}`; self-loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    /// Edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.adj.len()];
        let mut out = Vec::new();
        for s in 0..self.adj.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Parses PACE `.gr`: a `p tw <n> <m>` header, then `u v` lines with
    /// 1-based vertices. `c` lines are comments.
    pub fn parse_gr(text: &str) -> Result<Self> {
        let mut graph: Option<Graph> = None;
        let mut declared_m = 0usize;
        let mut seen_m = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.is_empty() || toks[0] == "c" {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                line,
                msg: msg.to_string(),
            };
            if toks[0] == "p" {
                if graph.is_some() {
                    return Err(bad("duplicate header"));
                }
                if toks.len() != 4 || toks[1] != "tw" {
                    return Err(bad("expected `p tw <n> <m>`"));
                }
                let n: usize = toks[2].parse().map_err(|_| bad("bad vertex count"))?;
                declared_m = toks[3].parse().map_err(|_| bad("bad edge count"))?;
                graph = Some(Graph::new(n));
                continue;
            }
            let g = graph.as_mut().ok_or_else(|| bad("edge before header"))?;
            if toks.len() != 2 {
                return Err(bad("expected `u v`"));
            }
            let u: usize = toks[0].parse().map_err(|_| bad("bad vertex"))?;
            let v: usize = toks[1].parse().map_err(|_| bad("bad vertex"))?;
            let n = g.num_vertices();
            if u == 0 || v == 0 || u > n || v > n {
                return Err(bad("vertex out of range"));
            }
            g.add_edge(u - 1, v - 1);
            seen_m += 1;
        }
        let g = graph.ok_or(Error::Parse {
            line: 0,
            msg: "missing `p tw` header".into(),
        })?;
        if seen_m != declared_m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {declared_m} edges, found {seen_m}"),
            });
        }
        Ok(g)
    }

    pub fn to_gr(&self) -> String {
        let mut out = format!("p tw {} {}\n", self.num_vertices(), self.num_edges());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{} {}", u + 1, v + 1);
        }
        out
    }
}
