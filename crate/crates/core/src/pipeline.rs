//! End-to-end evaluation: prune, rewrite, decompose, encode, compile,
//! build lineage and compute its probability.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info};

use crate::automaton::{compile_ucq, determinize, DEFAULT_DET_BUDGET};
use crate::encoding::encode_with_capacity;
use crate::error::{Error, Result};
use crate::hybrid::{hybrid_estimate_with, HybridEstimate};
use crate::instance::TidInstance;
use crate::lineage::{build_lineage_rpq, build_lineage_ucq, Circuit};
use crate::par::Exec;
use crate::prob::{
    brute_force_pqe_with_cap, prob_ddnnf_with, prob_message_passing, prob_monte_carlo_with, ProbMethod, ProbResult,
    ProbStats, DEFAULT_VAR_CAP,
};
use crate::query::{disconnect_rewrite, prune_relations, Query};
use crate::treedec::{decompose, partial_decompose_protecting, Heuristic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// d-DNNF when determinization fits the budget, else message passing.
    Auto,
    Ddnnf,
    Mp,
    Mc,
    Hybrid,
    Brute,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Method::Auto,
            "ddnnf" => Method::Ddnnf,
            "mp" => Method::Mp,
            "mc" => Method::Mc,
            "hybrid" => Method::Hybrid,
            "brute" => Method::Brute,
            _ => return Err(Error::Unsupported(format!("method {s:?}"))),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::Ddnnf => "ddnnf",
            Method::Mp => "mp",
            Method::Mc => "mc",
            Method::Hybrid => "hybrid",
            Method::Brute => "brute",
        })
    }
}

impl Method {
    /// How the UCQ automaton is determinized before building lineage for
    /// this method.
    pub fn determinize(self) -> Determinize {
        match self {
            Method::Ddnnf => Determinize::Required,
            Method::Auto => Determinize::Try,
            _ => Determinize::No,
        }
    }

    /// Whether the method evaluates a lineage circuit.
    pub fn uses_lineage(self) -> bool {
        !matches!(self, Method::Brute | Method::Hybrid)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub heuristic: Heuristic,
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
    pub det_budget: usize,
    /// Apply the disconnection rewriting to UCQ instances.
    pub rewrite: bool,
    /// Width cap of the partial decomposition used by `hybrid`.
    pub cap: usize,
    pub log_space: bool,
    pub var_cap: usize,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            heuristic: Heuristic::MinFill,
            method: Method::Auto,
            samples: 100_000,
            seed: 0,
            det_budget: DEFAULT_DET_BUDGET,
            rewrite: false,
            cap: 2,
            log_space: false,
            var_cap: DEFAULT_VAR_CAP,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Determinize {
    No,
    /// Fail when the budget is exceeded.
    Required,
    /// Fall back to the nondeterministic automaton.
    Try,
}

#[derive(Debug, Clone)]
pub struct Lineage {
    pub circuit: Circuit,
    /// Width of the instance decomposition.
    pub width: usize,
    /// Determinization was attempted but exceeded the budget.
    pub fell_back: bool,
}

/// The instance the query actually reads, after pruning and the optional
/// rewriting.
pub fn prepare(inst: &TidInstance, q: &Query, cfg: &PipelineConfig) -> Result<TidInstance> {
    q.check_schema(inst).map_err(|e| e.at("query"))?;
    if let Query::Rpq(r) = q {
        for e in [&r.source, &r.target] {
            if inst.element_id(e).is_none() {
                return Err(Error::UnknownElement(e.clone()).at("query"));
            }
        }
    }
    let pruned = prune_relations(inst, q);
    debug!("pruned {} of {} facts", inst.facts().len() - pruned.facts().len(), inst.facts().len());
    match q {
        Query::Ucq(u) if cfg.rewrite => {
            let r = disconnect_rewrite(&pruned, u);
            debug!(
                "rewriting: gaifman edges {} -> {}",
                pruned.gaifman_graph().num_edges(),
                r.gaifman_graph().num_edges()
            );
            Ok(r)
        }
        _ => Ok(pruned),
    }
}

/// Lineage circuit of `q` on `inst`.
pub fn build_lineage(inst: &TidInstance, q: &Query, cfg: &PipelineConfig, det: Determinize) -> Result<Lineage> {
    let work = prepare(inst, q, cfg)?;
    let td = decompose(&work.gaifman_graph(), cfg.heuristic);
    let width = td.width;
    info!("decomposition: width={} bags={}", td.width, td.num_bags());
    match q {
        Query::Rpq(r) => {
            let present = |e: &str| work.element_id(e).is_some();
            let circuit = if !present(&r.source) || !present(&r.target) {
                let c = Circuit::constant(r.source == r.target && r.regex.nullable());
                Circuit { ddnnf: false, ..c }
            } else {
                build_lineage_rpq(r, &work, &td).map_err(|e| e.at("lineage"))?
            };
            Ok(Lineage {
                circuit,
                width,
                fell_back: false,
            })
        }
        Query::Ucq(u) => {
            if work.facts().is_empty() {
                let c = Circuit::constant(u.disjuncts.iter().any(|d| d.atoms.is_empty()));
                return Ok(Lineage {
                    circuit: c,
                    width,
                    fell_back: false,
                });
            }
            let arity = u.disjuncts.iter().map(|d| d.max_arity()).max().unwrap_or(0);
            let enc = encode_with_capacity(&work, &td, arity).map_err(|e| e.at("encode"))?;
            let nfa = compile_ucq(u, enc.slot_capacity).map_err(|e| e.at("compile"))?;
            if det == Determinize::No {
                let circuit = build_lineage_ucq(&nfa, &enc).map_err(|e| e.at("lineage"))?;
                return Ok(Lineage {
                    circuit,
                    width,
                    fell_back: false,
                });
            }
            // Subsets are built lazily, so the budget can also run out
            // while the lineage is being built.
            let attempt = determinize(&nfa, cfg.det_budget)
                .map_err(|e| e.at("determinize"))
                .and_then(|dfa| build_lineage_ucq(&dfa, &enc).map_err(|e| e.at("lineage")));
            match attempt {
                Ok(circuit) => Ok(Lineage {
                    circuit,
                    width,
                    fell_back: false,
                }),
                Err(e) if det == Determinize::Try && matches!(e.root(), Error::BudgetExceeded(_)) => {
                    info!("{e}; falling back to the nondeterministic automaton");
                    let circuit = build_lineage_ucq(&nfa, &enc).map_err(|e| e.at("lineage"))?;
                    Ok(Lineage {
                        circuit,
                        width,
                        fell_back: true,
                    })
                }
                Err(e) => Err(e),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: ProbResult,
    pub lineage: Option<Lineage>,
    pub hybrid: Option<HybridEstimate>,
}

/// Probability of `q` on `inst` with the configured method. The elapsed
/// time covers the whole pipeline.
pub fn run(inst: &TidInstance, q: &Query, cfg: &PipelineConfig) -> Result<Outcome> {
    let start = Instant::now();
    let mut out = match cfg.method {
        Method::Brute => {
            q.check_schema(inst).map_err(|e| e.at("query"))?;
            let result = brute_force_pqe_with_cap(inst, q, cfg.var_cap).map_err(|e| e.at("prob"))?;
            Outcome {
                result,
                lineage: None,
                hybrid: None,
            }
        }
        Method::Hybrid => {
            let Query::Rpq(r) = q else {
                return Err(Error::Unsupported("hybrid estimation of a UCQ".into()).at("prob"));
            };
            let work = prepare(inst, q, cfg)?;
            let pd = partial_decompose_protecting(&work, cfg.cap, &[&r.source, &r.target]);
            info!("partial decomposition: {} tentacles, core ratio {:.3}", pd.tentacles.len(), pd.core_size_ratio());
            let h = hybrid_estimate_with(&pd, r, cfg.samples, cfg.seed, cfg.exec).map_err(|e| e.at("prob"))?;
            Outcome {
                result: ProbResult {
                    value: h.value,
                    method: ProbMethod::Hybrid,
                    stderr: Some(h.stderr),
                    stats: ProbStats {
                        gates: 0,
                        factors: h.samples as usize,
                        elapsed: Default::default(),
                    },
                },
                lineage: None,
                hybrid: Some(h),
            }
        }
        method => {
            let lin = build_lineage(inst, q, cfg, method.determinize())?;
            let c = &lin.circuit;
            let result = match method {
                Method::Mc => prob_monte_carlo_with(c, cfg.samples, cfg.seed, cfg.exec),
                Method::Ddnnf => prob_ddnnf_with(c, cfg.log_space),
                Method::Auto if c.ddnnf => prob_ddnnf_with(c, cfg.log_space),
                _ => prob_message_passing(c),
            }
            .map_err(|e| e.at("prob"))?;
            Outcome {
                result,
                lineage: Some(lin),
                hybrid: None,
            }
        }
    };
    out.result.stats.elapsed = start.elapsed();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::query::parse_query;

    fn diamond() -> TidInstance {
        let mut b = InstanceBuilder::new();
        b.fact("E", &["s", "a"], 0.5)
            .fact("E", &["a", "t"], 0.5)
            .fact("E", &["s", "b"], 0.5)
            .fact("E", &["b", "t"], 0.5)
            .fact("F", &["s", "t"], 0.5);
        b.build().unwrap()
    }

    fn with(method: Method) -> PipelineConfig {
        PipelineConfig {
            method,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn diamond_by_every_exact_method() {
        let q = parse_query("reach(s, t, \"E+\")").unwrap();
        for m in [Method::Auto, Method::Mp, Method::Brute] {
            let r = run(&diamond(), &q, &with(m)).unwrap().result;
            assert!((r.value - 0.4375).abs() < 1e-12, "{m}");
        }
        let e = run(&diamond(), &q, &with(Method::Ddnnf)).unwrap_err();
        assert_eq!(e.to_string(), "prob: circuit is not flagged as d-DNNF");
    }

    #[test]
    fn ucq_auto_uses_ddnnf() {
        let q = parse_query("q() :- E(x, y), E(y, z).").unwrap();
        let out = run(&diamond(), &q, &with(Method::Auto)).unwrap();
        assert_eq!(out.result.method, ProbMethod::Ddnnf);
        let brute = run(&diamond(), &q, &with(Method::Brute)).unwrap().result.value;
        assert!((out.result.value - brute).abs() < 1e-12);
    }

    #[test]
    fn tiny_budget_falls_back() {
        let q = parse_query("q() :- E(x, y), E(y, z).").unwrap();
        let cfg = PipelineConfig {
            det_budget: 2,
            ..with(Method::Auto)
        };
        let out = run(&diamond(), &q, &cfg).unwrap();
        assert!(out.lineage.as_ref().unwrap().fell_back);
        assert_eq!(out.result.method, ProbMethod::MessagePassing);
        let e = run(&diamond(), &q, &PipelineConfig { det_budget: 2, ..with(Method::Ddnnf) }).unwrap_err();
        assert!(matches!(e.root(), Error::BudgetExceeded(2)));
    }

    #[test]
    fn endpoints() {
        let unknown = parse_query("reach(s, nowhere, \"E+\")").unwrap();
        let e = run(&diamond(), &unknown, &with(Method::Mp)).unwrap_err();
        assert_eq!(e.to_string(), "query: element nowhere does not occur in the instance");
        // t only occurs in E facts, which a G-path query prunes away
        let pruned = parse_query("reach(s, t, \"G*\")").unwrap();
        assert_eq!(run(&diamond(), &pruned, &with(Method::Mp)).unwrap().result.value, 0.0);
        let same = parse_query("reach(s, s, \"G*\")").unwrap();
        assert_eq!(run(&diamond(), &same, &with(Method::Mp)).unwrap().result.value, 1.0);
    }

    #[test]
    fn rewriting_keeps_probability() {
        let q = parse_query("q() :- E(x, y), F(z, w).").unwrap();
        let plain = run(&diamond(), &q, &with(Method::Mp)).unwrap().result.value;
        let cfg = PipelineConfig {
            rewrite: true,
            ..with(Method::Mp)
        };
        let rewritten = run(&diamond(), &q, &cfg).unwrap().result.value;
        assert!((plain - rewritten).abs() < 1e-12);
        assert!((plain - 0.5 * 0.9375).abs() < 1e-12);
    }

    #[test]
    fn empty_after_pruning() {
        let q = parse_query("q() :- G(x).\nq() :- true.").unwrap();
        assert_eq!(run(&diamond(), &q, &with(Method::Auto)).unwrap().result.value, 1.0);
        let q = parse_query("q() :- G(x).").unwrap();
        assert_eq!(run(&diamond(), &q, &with(Method::Auto)).unwrap().result.value, 0.0);
    }

    #[test]
    fn method_names() {
        for m in ["auto", "ddnnf", "mp", "mc", "hybrid", "brute"] {
            assert_eq!(m.parse::<Method>().unwrap().to_string(), m);
        }
        assert!("fast".parse::<Method>().is_err());
    }
}
