//! Tree decompositions: elimination-ordering heuristics, validation,
//! treewidth lower bounds and width-capped partial decompositions.

mod elimination;
mod partial;

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub use elimination::{decompose, elimination_order, td_from_ordering};
pub use partial::{partial_decompose, partial_decompose_protecting, PartialDecomposition, Tentacle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    MinFill,
    MinDegree,
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "min-fill" => Ok(Heuristic::MinFill),
            "min-degree" => Ok(Heuristic::MinDegree),
            _ => Err(format!("unknown heuristic {s:?} (expected min-fill or min-degree)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBound {
    Degeneracy,
    AverageDegree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    /// Sorted vertex lists.
    pub bags: Vec<Vec<usize>>,
    /// Undirected bag-index pairs.
    pub edges: Vec<(usize, usize)>,
    /// Largest bag size minus one (0 when every bag is empty).
    pub width: usize,
}

/// A rooted view of a decomposition.
#[derive(Debug, Clone)]
pub struct Rooted {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub preorder: Vec<usize>,
    pub depth: Vec<usize>,
}

/// First property of a tree decomposition found to be violated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TdViolation {
    NotATree(String),
    UnknownVertex(usize),
    VertexCoverage(usize),
    EdgeCoverage(usize, usize),
    RunningIntersection(usize),
    WidthMismatch { declared: usize, actual: usize },
}

impl TdViolation {
    /// Renders the violation with vertex names supplied by `name`.
    pub fn render(&self, name: &dyn Fn(usize) -> String) -> String {
        match self {
            TdViolation::NotATree(why) => format!("not a tree: {why}"),
            TdViolation::UnknownVertex(v) => format!("unknown vertex {}", name(*v)),
            TdViolation::VertexCoverage(v) => format!("vertex coverage violated: {}", name(*v)),
            TdViolation::EdgeCoverage(u, v) => {
                format!("edge coverage violated: {{{},{}}}", name(*u), name(*v))
            }
            TdViolation::RunningIntersection(v) => {
                format!("running intersection violated: {}", name(*v))
            }
            TdViolation::WidthMismatch { declared, actual } => {
                format!("width mismatch: declared {declared}, actual {actual}")
            }
        }
    }
}

impl fmt::Display for TdViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| v.to_string()))
    }
}

impl TreeDecomposition {
    /// Builds a decomposition, sorting bags and computing the width.
    pub fn new(bags: Vec<Vec<usize>>, edges: Vec<(usize, usize)>) -> Self {
        let bags: Vec<Vec<usize>> = bags
            .into_iter()
            .map(|b| {
                let s: BTreeSet<usize> = b.into_iter().collect();
                s.into_iter().collect()
            })
            .collect();
        let width = Self::width_of(&bags);
        TreeDecomposition { bags, edges, width }
    }

    pub fn single_bag(bag: Vec<usize>) -> Self {
        Self::new(vec![bag], Vec::new())
    }

    fn width_of(bags: &[Vec<usize>]) -> usize {
        bags.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn num_bags(&self) -> usize {
        self.bags.len()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Roots the tree at `root`. Assumes the edge set forms a tree.
    pub fn rooted(&self, root: usize) -> Rooted {
        let adj = self.adjacency();
        let n = self.bags.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        let mut seen = vec![false; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(b) = stack.pop() {
            preorder.push(b);
            for &c in adj[b].iter().rev() {
                if !seen[c] {
                    seen[c] = true;
                    parent[c] = Some(b);
                    depth[c] = depth[b] + 1;
                    stack.push(c);
                }
            }
        }
        for &b in &preorder {
            if let Some(p) = parent[b] {
                children[p].push(b);
            }
        }
        Rooted {
            root,
            parent,
            children,
            preorder,
            depth,
        }
    }

    /// Checks tree-ness, width, vertex and edge coverage and the running
    /// intersection property, in that order.
    pub fn validate(&self, g: &Graph) -> Result<(), TdViolation> {
        let n = self.bags.len();
        if n == 0 {
            return Err(TdViolation::NotATree("no bags".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(TdViolation::NotATree(format!(
                "{} bags but {} edges",
                n,
                self.edges.len()
            )));
        }
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(TdViolation::NotATree(format!("bad edge ({a},{b})")));
            }
        }
        let r = self.rooted(0);
        if r.preorder.len() != n {
            return Err(TdViolation::NotATree("disconnected".into()));
        }
        let actual = Self::width_of(&self.bags);
        if actual != self.width {
            return Err(TdViolation::WidthMismatch {
                declared: self.width,
                actual,
            });
        }
        let nv = g.num_vertices();
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (i, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                if v >= nv {
                    return Err(TdViolation::UnknownVertex(v));
                }
                holders[v].push(i);
            }
        }
        if let Some(v) = (0..nv).find(|&v| holders[v].is_empty()) {
            return Err(TdViolation::VertexCoverage(v));
        }
        for (u, v) in g.edges() {
            let covered = holders[u]
                .iter()
                .any(|&b| self.bags[b].binary_search(&v).is_ok());
            if !covered {
                return Err(TdViolation::EdgeCoverage(u, v));
            }
        }
        // The bags holding v are connected iff exactly one of them has a
        // parent outside the set.
        for (v, hs) in holders.iter().enumerate() {
            let tops = hs
                .iter()
                .filter(|&&b| match r.parent[b] {
                    None => true,
                    Some(p) => self.bags[p].binary_search(&v).is_err(),
                })
                .count();
            if tops != 1 {
                return Err(TdViolation::RunningIntersection(v));
            }
        }
        Ok(())
    }

    /// PACE `.td` text; vertices are written 1-based.
    pub fn to_pace(&self, num_vertices: usize) -> String {
        let mut out = format!(
            "s td {} {} {}\n",
            self.bags.len(),
            self.bags.iter().map(Vec::len).max().unwrap_or(0),
            num_vertices
        );
        for (i, bag) in self.bags.iter().enumerate() {
            let _ = write!(out, "b {}", i + 1);
            for v in bag {
                let _ = write!(out, " {}", v + 1);
            }
            out.push('\n');
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{} {}", a + 1, b + 1);
        }
        out
    }

    /// Parses PACE `.td`, returning the decomposition and the declared
    /// vertex count.
    pub fn parse_pace(text: &str) -> Result<(Self, usize)> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let bad = |msg: &str| Error::Parse {
                line,
                msg: msg.to_string(),
            };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.is_empty() || toks[0] == "c" {
                continue;
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
            match toks[0] {
                "s" => {
                    if toks.len() != 5 || toks[1] != "td" || header.is_some() {
                        return Err(bad("expected `s td <bags> <width+1> <n>`"));
                    }
                    let h = (num(toks[2])?, num(toks[3])?, num(toks[4])?);
                    bags = vec![None; h.0];
                    header = Some(h);
                }
                "b" => {
                    let (_, _, nv) = header.ok_or_else(|| bad("bag before header"))?;
                    let id = num(toks.get(1).ok_or_else(|| bad("missing bag id"))?)?;
                    if id == 0 || id > bags.len() || bags[id - 1].is_some() {
                        return Err(bad("bad bag id"));
                    }
                    let mut bag = Vec::new();
                    for t in &toks[2..] {
                        let v = num(t)?;
                        if v == 0 || v > nv {
                            return Err(bad("vertex out of range"));
                        }
                        bag.push(v - 1);
                    }
                    bags[id - 1] = Some(bag);
                }
                _ => {
                    if header.is_none() || toks.len() != 2 {
                        return Err(bad("expected bag edge `i j`"));
                    }
                    let (a, b) = (num(toks[0])?, num(toks[1])?);
                    if a == 0 || b == 0 || a > bags.len() || b > bags.len() {
                        return Err(bad("bag edge out of range"));
                    }
                    edges.push((a - 1, b - 1));
                }
            }
        }
        let (_, declared_size, nv) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing `s td` header".into(),
        })?;
        let bags: Vec<Vec<usize>> = bags
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                b.ok_or(Error::Parse {
                    line: 0,
                    msg: format!("bag {} missing", i + 1),
                })
            })
            .collect::<Result<_>>()?;
        let td = TreeDecomposition::new(bags, edges);
        let actual = td.bags.iter().map(Vec::len).max().unwrap_or(0);
        if actual != declared_size {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares bag size {declared_size}, found {actual}"),
            });
        }
        Ok((td, nv))
    }

    /// Returns a copy with `extra` vertices added to every bag.
    pub fn with_everywhere(&self, extra: &[usize]) -> Self {
        let bags = self
            .bags
            .iter()
            .map(|b| b.iter().chain(extra).copied().collect())
            .collect();
        Self::new(bags, self.edges.clone())
    }

    /// Breadth-first bag order from `root`, used by tests and dumps.
    pub fn bfs_order(&self, root: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.bags.len()];
        let mut q = VecDeque::from([root]);
        seen[root] = true;
        let mut out = Vec::new();
        while let Some(b) = q.pop_front() {
            out.push(b);
            for &c in &adj[b] {
                if !seen[c] {
                    seen[c] = true;
                    q.push_back(c);
                }
            }
        }
        out
    }
}

/// Certified lower bound on the treewidth of `g`.
pub fn treewidth_lower_bound(g: &Graph, method: LowerBound) -> usize {
    match method {
        LowerBound::Degeneracy => degeneracy(g),
        LowerBound::AverageDegree => {
            let n = g.num_vertices();
            if n == 0 {
                0
            } else {
                g.num_edges().div_ceil(n)
            }
        }
    }
}

/// Maximum over subgraphs of the minimum degree, via repeated removal of
/// a minimum-degree vertex.
fn degeneracy(g: &Graph) -> usize {
    let n = g.num_vertices();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut best = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (deg[v], v))
            .expect("vertices remain");
        best = best.max(deg[v]);
        removed[v] = true;
        for &u in g.neighbors(v) {
            if !removed[u] {
                deg[u] -= 1;
            }
        }
    }
    best
}

/// Best available lower bound: the larger of both methods.
pub fn best_lower_bound(g: &Graph) -> usize {
    treewidth_lower_bound(g, LowerBound::Degeneracy)
        .max(treewidth_lower_bound(g, LowerBound::AverageDegree))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges)
    }

    fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(treewidth_lower_bound(&complete(4), LowerBound::Degeneracy), 3);
        assert_eq!(treewidth_lower_bound(&cycle(5), LowerBound::Degeneracy), 2);
        let star = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        assert_eq!(treewidth_lower_bound(&star, LowerBound::Degeneracy), 1);
        assert_eq!(treewidth_lower_bound(&complete(4), LowerBound::AverageDegree), 2);
        assert_eq!(treewidth_lower_bound(&Graph::new(0), LowerBound::AverageDegree), 0);
    }

    #[test]
    fn validate_reports_first_violation() {
        let g = Graph::from_edges(2, &[(0, 1)]);
        let td = TreeDecomposition::single_bag(vec![0]);
        let err = td.validate(&g).unwrap_err();
        let names = ["a", "b"];
        assert_eq!(
            err.render(&|v| names[v].to_string()),
            "vertex coverage violated: b"
        );
        let td = TreeDecomposition::new(vec![vec![0], vec![1]], vec![(0, 1)]);
        assert_eq!(
            td.validate(&g).unwrap_err().render(&|v| names[v].to_string()),
            "edge coverage violated: {a,b}"
        );

        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]);
        let td = TreeDecomposition::new(
            vec![vec![0, 1], vec![0, 2], vec![1], vec![0]],
            vec![(0, 1), (0, 2), (2, 3)],
        );
        assert_eq!(td.validate(&g), Err(TdViolation::RunningIntersection(0)));

        let mut td = TreeDecomposition::single_bag(vec![0, 1, 2]);
        td.width = 5;
        assert!(matches!(
            td.validate(&g),
            Err(TdViolation::WidthMismatch { .. })
        ));
        let td = TreeDecomposition::new(vec![vec![0, 1], vec![0, 2]], vec![]);
        assert!(matches!(td.validate(&g), Err(TdViolation::NotATree(_))));
    }

    #[test]
    fn pace_td_round_trip() {
        let td = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)]);
        let text = td.to_pace(3);
        assert_eq!(text, "s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n");
        assert_eq!(TreeDecomposition::parse_pace(&text).unwrap(), (td, 3));
        assert!(TreeDecomposition::parse_pace("s td 1 3 2\nb 1 1 2\n").is_err());
        assert!(TreeDecomposition::parse_pace("b 1 1\n").is_err());
    }

    #[test]
    fn empty_graph_single_empty_bag() {
        let td = decompose(&Graph::new(0), Heuristic::MinFill);
        assert_eq!(td.bags, vec![Vec::<usize>::new()]);
        assert_eq!(td.width, 0);
        assert!(td.validate(&Graph::new(0)).is_ok());
    }
}
