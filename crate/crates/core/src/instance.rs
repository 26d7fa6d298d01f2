//! Tuple-independent probabilistic instances.
//!
//! Every fact carries its own presence probability and facts are kept or
//! dropped independently. Facts with probability strictly between 0 and 1
//! get a dense variable id (1, 2, ... in input order); facts with
//! probability 1 are certain and carry no variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par::block_rng;

/// Identifier of a probabilistic fact's Boolean variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of an element in an instance's sorted element table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElemId(pub u32);

impl ElemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbFact {
    pub relation: String,
    pub args: Vec<ElemId>,
    pub prob: f64,
    pub var: Option<VarId>,
}

impl ProbFact {
    pub fn is_certain(&self) -> bool {
        self.var.is_none()
    }
}

/// A fact described by element names, used to build instances.
#[derive(Debug, Clone, PartialEq)]
pub struct FactSpec {
    pub relation: String,
    pub args: Vec<String>,
    pub prob: f64,
    pub var: Option<VarId>,
}

impl FactSpec {
    pub fn new(relation: &str, args: &[&str], prob: f64, var: Option<VarId>) -> Self {
        FactSpec {
            relation: relation.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            prob,
            var,
        }
    }
}

impl fmt::Display for FactSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.relation, self.args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TidInstance {
    relations: BTreeMap<String, usize>,
    facts: Vec<ProbFact>,
    elements: Vec<String>,
}

/// A possible world: the set of variables whose facts are kept.
/// Certain facts are always present.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct World {
    pub kept: BTreeSet<VarId>,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vars<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        World {
            kept: vars.into_iter().collect(),
        }
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.kept.contains(&v)
    }
}

/// Incremental instance construction with automatic variable numbering.
#[derive(Debug, Default)]
pub struct InstanceBuilder {
    specs: Vec<FactSpec>,
    next_var: u32,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        InstanceBuilder {
            specs: Vec::new(),
            next_var: 1,
        }
    }

    /// Adds a fact; a variable is allocated when `0 < prob < 1`.
    pub fn fact(&mut self, relation: &str, args: &[&str], prob: f64) -> &mut Self {
        let var = if prob > 0.0 && prob < 1.0 {
            let v = VarId(self.next_var);
            self.next_var += 1;
            Some(v)
        } else {
            None
        };
        self.specs.push(FactSpec::new(relation, args, prob, var));
        self
    }

    pub fn build(&self) -> Result<TidInstance> {
        TidInstance::from_specs(self.specs.clone())
    }
}

impl TidInstance {
    pub fn empty() -> Self {
        TidInstance {
            relations: BTreeMap::new(),
            facts: Vec::new(),
            elements: Vec::new(),
        }
    }

    /// Builds and validates an instance from named facts. Variable ids are
    /// taken as given, which lets sub-instances keep their parent's ids.
    pub fn from_specs(specs: Vec<FactSpec>) -> Result<Self> {
        Self::from_specs_with_lines(specs.into_iter().enumerate().map(|(i, s)| (i + 1, s)))
    }

    fn from_specs_with_lines<I: IntoIterator<Item = (usize, FactSpec)>>(specs: I) -> Result<Self> {
        let specs: Vec<(usize, FactSpec)> = specs.into_iter().collect();
        let mut relations: BTreeMap<String, usize> = BTreeMap::new();
        let mut seen: HashMap<(&str, &[String]), usize> = HashMap::new();
        let mut vars: BTreeSet<VarId> = BTreeSet::new();
        let mut names: BTreeSet<&str> = BTreeSet::new();
        for (line, spec) in &specs {
            let line = *line;
            if spec.prob.is_nan() || spec.prob < 0.0 || spec.prob > 1.0 {
                return Err(Error::ProbabilityOutOfRange {
                    line,
                    value: spec.prob,
                });
            }
            if spec.prob == 0.0 {
                return Err(Error::ZeroProbability {
                    line,
                    fact: spec.to_string(),
                });
            }
            let uncertain = spec.prob < 1.0;
            match (uncertain, spec.var) {
                (true, None) => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("uncertain fact {spec} has no variable"),
                    })
                }
                (false, Some(_)) => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("certain fact {spec} carries a variable"),
                    })
                }
                (true, Some(v)) => {
                    if !vars.insert(v) {
                        return Err(Error::Parse {
                            line,
                            msg: format!("variable {v} used twice"),
                        });
                    }
                }
                (false, None) => {}
            }
            match relations.get(&spec.relation) {
                Some(&a) if a != spec.args.len() => {
                    return Err(Error::Parse {
                        line,
                        msg: Error::ArityMismatch {
                            relation: spec.relation.clone(),
                            expected: a,
                            found: spec.args.len(),
                        }
                        .to_string(),
                    })
                }
                Some(_) => {}
                None => {
                    relations.insert(spec.relation.clone(), spec.args.len());
                }
            }
            if seen
                .insert((spec.relation.as_str(), spec.args.as_slice()), line)
                .is_some()
            {
                return Err(Error::DuplicateFact {
                    line,
                    fact: spec.to_string(),
                });
            }
            names.extend(spec.args.iter().map(String::as_str));
        }
        let elements: Vec<String> = names.into_iter().map(str::to_string).collect();
        let index: HashMap<&str, ElemId> = elements
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), ElemId(i as u32)))
            .collect();
        let facts = specs
            .iter()
            .map(|(_, s)| ProbFact {
                relation: s.relation.clone(),
                args: s.args.iter().map(|a| index[a.as_str()]).collect(),
                prob: s.prob,
                var: s.var,
            })
            .collect();
        Ok(TidInstance {
            relations,
            facts,
            elements,
        })
    }

    /// Parses the tab-separated instance format:
    /// `relation<TAB>arg1<TAB>...<TAB>argN<TAB>probability`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut specs = Vec::new();
        let mut next_var = 1u32;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() < 2 || fields.iter().any(|f| f.trim().is_empty()) {
                return Err(Error::Parse {
                    line,
                    msg: format!("malformed line {raw:?}"),
                });
            }
            let prob_field = fields[fields.len() - 1].trim();
            let prob: f64 = prob_field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad probability {prob_field:?}"),
            })?;
            let var = if prob > 0.0 && prob < 1.0 {
                next_var += 1;
                Some(VarId(next_var - 1))
            } else {
                None
            };
            let args: Vec<&str> = fields[1..fields.len() - 1].iter().map(|s| s.trim()).collect();
            specs.push((line, FactSpec::new(fields[0].trim(), &args, prob, var)));
        }
        Self::from_specs_with_lines(specs)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Renders the instance in the TSV input format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for f in &self.facts {
            out.push_str(&f.relation);
            for a in &f.args {
                out.push('\t');
                out.push_str(self.element_name(*a));
            }
            out.push('\t');
            out.push_str(&format!("{}\n", f.prob));
        }
        out
    }

    pub fn facts(&self) -> &[ProbFact] {
        &self.facts
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn relations(&self) -> &BTreeMap<String, usize> {
        &self.relations
    }

    pub fn element_name(&self, e: ElemId) -> &str {
        &self.elements[e.index()]
    }

    pub fn element_id(&self, name: &str) -> Option<ElemId> {
        self.elements
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| ElemId(i as u32))
    }

    pub fn spec(&self, i: usize) -> FactSpec {
        let f = &self.facts[i];
        FactSpec {
            relation: f.relation.clone(),
            args: f.args.iter().map(|a| self.element_name(*a).to_string()).collect(),
            prob: f.prob,
            var: f.var,
        }
    }

    pub fn specs(&self) -> Vec<FactSpec> {
        (0..self.facts.len()).map(|i| self.spec(i)).collect()
    }

    /// Sub-instance made of the facts at the given indices, variable ids kept.
    pub fn subinstance<I: IntoIterator<Item = usize>>(&self, indices: I) -> TidInstance {
        Self::from_specs(indices.into_iter().map(|i| self.spec(i)).collect())
            .expect("a subset of a valid instance is valid")
    }

    /// Uncertain variables with their probabilities, in fact order.
    pub fn variables(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.facts.iter().filter_map(|f| f.var.map(|v| (v, f.prob)))
    }

    pub fn num_vars(&self) -> usize {
        self.facts.iter().filter(|f| f.var.is_some()).count()
    }

    pub fn var_probs(&self) -> BTreeMap<VarId, f64> {
        self.variables().collect()
    }

    /// Graph over element ids with an edge between any two distinct
    /// elements co-occurring in a fact.
    pub fn gaifman_graph(&self) -> Graph {
        let mut g = Graph::new(self.elements.len());
        for f in &self.facts {
            for (i, a) in f.args.iter().enumerate() {
                for b in &f.args[i + 1..] {
                    if a != b {
                        g.add_edge(a.index(), b.index());
                    }
                }
            }
        }
        g
    }

    /// Probability of the world under the independence assumption.
    pub fn world_probability(&self, w: &World) -> Result<f64> {
        let probs = self.var_probs();
        if let Some(v) = w.kept.iter().find(|v| !probs.contains_key(v)) {
            return Err(Error::UnknownVariable(v.0));
        }
        Ok(probs
            .iter()
            .map(|(v, &p)| if w.contains(*v) { p } else { 1.0 - p })
            .product())
    }

    /// Draws every variable independently with its probability.
    pub fn sample_world(&self, seed: u64) -> World {
        let mut rng = block_rng(seed, 0);
        World::from_vars(
            self.variables()
                .filter(|&(_, p)| rng.gen::<f64>() < p)
                .map(|(v, _)| v),
        )
    }

    /// The certain instance holding exactly the facts present in `w`.
    pub fn world_instance(&self, w: &World) -> TidInstance {
        let kept = self
            .facts
            .iter()
            .enumerate()
            .filter(|(_, f)| f.var.is_none_or(|v| w.contains(v)))
            .map(|(i, _)| {
                let mut s = self.spec(i);
                s.prob = 1.0;
                s.var = None;
                s
            })
            .collect();
        TidInstance::from_specs(kept).expect("world of a valid instance is valid")
    }

    pub fn fact_display(&self, f: &ProbFact) -> String {
        let args: Vec<&str> = f.args.iter().map(|a| self.element_name(*a)).collect();
        format!("{}({})", f.relation, args.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var(p1: f64, p2: f64) -> TidInstance {
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a"], p1).fact("R", &["b"], p2);
        b.build().unwrap()
    }

    #[test]
    fn parse_single_fact() {
        let inst = TidInstance::parse("R\ta\tb\t0.5\n").unwrap();
        assert_eq!(inst.facts().len(), 1);
        assert_eq!(inst.num_vars(), 1);
        assert_eq!(inst.facts()[0].var, Some(VarId(1)));
        assert_eq!(inst.relations()["R"], 2);
    }

    #[test]
    fn parse_certain_fact() {
        let inst = TidInstance::parse("R\ta\tb\t1.0").unwrap();
        assert_eq!(inst.num_vars(), 0);
        assert!(inst.facts()[0].is_certain());
    }

    #[test]
    fn parse_rejects_bad_input() {
        let e = TidInstance::parse("R\ta\tb\t1.5").unwrap_err();
        assert!(e.to_string().contains("probability out of range"), "{e}");
        assert!(matches!(
            TidInstance::parse("R\ta\t0").unwrap_err(),
            Error::ZeroProbability { .. }
        ));
        assert!(matches!(
            TidInstance::parse("R\ta\t0.5\nR\ta\t0.3").unwrap_err(),
            Error::DuplicateFact { line: 2, .. }
        ));
        let e = TidInstance::parse("R\ta\t0.5\nR\ta\tb\t0.3").unwrap_err();
        assert!(e.to_string().contains("arity"), "{e}");
        assert!(matches!(
            TidInstance::parse("R\ta\tabc").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            TidInstance::parse("R").unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn parse_skips_comments_and_blanks() {
        let inst = TidInstance::parse("# header\n\nR\ta\t0.5\n  \nS\ta\tb\t0.25\n").unwrap();
        assert_eq!(inst.facts().len(), 2);
        assert_eq!(inst.facts()[1].var, Some(VarId(2)));
    }

    #[test]
    fn gaifman_examples() {
        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 0.5).fact("S", &["b", "c"], 0.5);
        let g = b.build().unwrap().gaifman_graph();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);

        let mut b = InstanceBuilder::new();
        b.fact("U", &["a"], 0.5);
        let g = b.build().unwrap().gaifman_graph();
        assert_eq!(g.num_vertices(), 1);
        assert_eq!(g.num_edges(), 0);

        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "b"], 0.5).fact("R", &["b", "a"], 0.5);
        assert_eq!(b.build().unwrap().gaifman_graph().edges(), vec![(0, 1)]);

        let mut b = InstanceBuilder::new();
        b.fact("R", &["a", "a"], 0.5);
        assert_eq!(b.build().unwrap().gaifman_graph().num_edges(), 0);
    }

    #[test]
    fn world_probability_examples() {
        let inst = two_var(0.5, 0.5);
        let w = World::from_vars([VarId(1), VarId(2)]);
        assert!((inst.world_probability(&w).unwrap() - 0.25).abs() < 1e-12);

        let empty = TidInstance::parse("R\ta\t1").unwrap();
        assert_eq!(empty.world_probability(&World::new()).unwrap(), 1.0);

        let inst = two_var(0.3, 0.6);
        let w = World::from_vars([VarId(1)]);
        assert!((inst.world_probability(&w).unwrap() - 0.12).abs() < 1e-12);

        assert_eq!(
            inst.world_probability(&World::from_vars([VarId(9)])),
            Err(Error::UnknownVariable(9))
        );
    }

    #[test]
    fn world_probabilities_sum_to_one() {
        let mut b = InstanceBuilder::new();
        for i in 0..12 {
            let name = format!("e{i}");
            b.fact("U", &[&name], 0.05 + 0.07 * i as f64);
        }
        let inst = b.build().unwrap();
        let vars: Vec<VarId> = inst.variables().map(|(v, _)| v).collect();
        let total: f64 = (0u32..1 << vars.len())
            .map(|mask| {
                let w = World::from_vars(
                    vars.iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, v)| *v),
                );
                inst.world_probability(&w).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_reproducible_and_calibrated() {
        let only_certain = TidInstance::parse("R\ta\t1\nR\tb\t1").unwrap();
        assert!(only_certain.sample_world(3).kept.is_empty());

        let inst = two_var(0.3, 1.0);
        assert_eq!(inst.sample_world(42), inst.sample_world(42));
        let hits = (0..100_000u64)
            .filter(|&s| inst.sample_world(s).contains(VarId(1)))
            .count();
        let freq = hits as f64 / 100_000.0;
        assert!((freq - 0.3).abs() < 0.01, "{freq}");
    }

    #[test]
    fn gaifman_ignores_fact_order() {
        let text = "R\ta\tb\t0.5\nS\tb\tc\t0.4\nT\tc\ta\td\t1\n";
        let mut lines: Vec<&str> = text.lines().collect();
        let g1 = TidInstance::parse(text).unwrap().gaifman_graph();
        lines.reverse();
        let g2 = TidInstance::parse(&lines.join("\n")).unwrap().gaifman_graph();
        assert_eq!(g1, g2);
    }
}
