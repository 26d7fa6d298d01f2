use std::error::Error as StdError;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use treetackle::automaton::{compile_ucq, determinize, DEFAULT_DET_BUDGET};
use treetackle::encoding::{encode, encode_with_capacity};
use treetackle::gen::{corpus, grid_corpus, write_corpus};
use treetackle::graph::Graph;
use treetackle::hybrid::{plain_reachability, summarize_tentacle};
use treetackle::instance::TidInstance;
use treetackle::lineage::{build_lineage_ucq, Circuit};
use treetackle::par::Exec;
use treetackle::pipeline::{build_lineage, prepare, run, Determinize, Method, PipelineConfig};
use treetackle::prob::DEFAULT_VAR_CAP;
use treetackle::query::{parse_query, Query};
use treetackle::treedec::{best_lower_bound, decompose, partial_decompose_protecting, Heuristic};

mod bench;

type CliResult<T = ()> = Result<T, Box<dyn StdError>>;

#[derive(Parser)]
#[command(name = "treetackle", version, about = "Probabilistic query evaluation on treelike instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tree decomposition of a PACE `.gr` graph or of an instance's Gaifman graph.
    Decompose(DecomposeArgs),
    /// Tree encoding of an instance.
    Encode(EncodeArgs),
    /// Query automaton, explored on the instance's encoding.
    Compile(CompileArgs),
    /// Lineage circuit statistics.
    Lineage(ProbArgs),
    /// Probability of a query on an instance.
    Prob(ProbArgs),
    /// Tentacle summaries of a partial decomposition.
    Summarize(SummarizeArgs),
    /// Runs methods over a corpus directory and compares them.
    Bench(bench::BenchArgs),
    /// Writes a generated corpus of instance/query pairs.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct PipelineOpts {
    /// Elimination heuristic: min-fill or min-degree.
    #[arg(long, default_value = "min-fill", value_parser = parse_heuristic)]
    heuristic: Heuristic,
    /// auto, ddnnf, mp, mc, hybrid or brute.
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    method: Method,
    /// Samples for mc and hybrid.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// State budget of the subset construction.
    #[arg(long, default_value_t = DEFAULT_DET_BUDGET as u64, value_parser = clap::value_parser!(u64).range(1..))]
    det_budget: u64,
    /// Width cap of the partial decomposition used by hybrid.
    #[arg(long, default_value_t = 2)]
    cap: usize,
    /// Most uncertain facts brute force enumerates.
    #[arg(long, default_value_t = DEFAULT_VAR_CAP)]
    var_cap: usize,
    /// Disconnect facts whose positions the UCQ never joins.
    #[arg(long)]
    rewrite: bool,
    /// Evaluate d-DNNF circuits in log space.
    #[arg(long)]
    log_space: bool,
    /// Run sampling loops on one thread.
    #[arg(long)]
    sequential: bool,
}

impl PipelineOpts {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            heuristic: self.heuristic,
            method: self.method,
            samples: self.samples,
            seed: self.seed,
            det_budget: self.det_budget as usize,
            rewrite: self.rewrite,
            cap: self.cap,
            log_space: self.log_space,
            var_cap: self.var_cap,
            exec: if self.sequential { Exec::Sequential } else { Exec::default() },
        }
    }
}

#[derive(Args)]
struct DecomposeArgs {
    input: PathBuf,
    #[arg(long, default_value = "min-fill", value_parser = parse_heuristic)]
    heuristic: Heuristic,
    /// Where to write the `.td` file; defaults to the input path with a `.td` extension.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    instance: PathBuf,
    #[arg(long, default_value = "min-fill", value_parser = parse_heuristic)]
    heuristic: Heuristic,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompileArgs {
    instance: PathBuf,
    query: PathBuf,
    #[arg(long, default_value = "min-fill", value_parser = parse_heuristic)]
    heuristic: Heuristic,
    /// Determinize within this many states.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    det_budget: Option<u64>,
}

#[derive(Args)]
struct ProbArgs {
    instance: PathBuf,
    query: PathBuf,
    #[command(flatten)]
    opts: PipelineOpts,
    /// Write the lineage as c2d NNF, with the companion decomposition next to it as `.td`.
    #[arg(long)]
    emit_circuit: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    instance: PathBuf,
    /// A reachability query `R+` or `R*`; its endpoints are kept out of tentacles.
    #[arg(long)]
    query: Option<PathBuf>,
    /// Edge relation, when no query is given.
    #[arg(long, default_value = "E")]
    relation: String,
    #[arg(long, default_value_t = 2)]
    cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusKind {
    /// Random partial k-trees with UCQs and reachability queries.
    Ktree,
    /// Grid+pendant instances with corner-to-corner reachability.
    Grid,
}

#[derive(Args)]
struct GenArgs {
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "ktree")]
    kind: CorpusKind,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_heuristic(s: &str) -> Result<Heuristic, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|_| format!("unknown method {s:?} (expected auto, ddnnf, mp, mc, hybrid or brute)"))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_instance(path: &Path) -> CliResult<TidInstance> {
    TidInstance::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_query(path: &Path) -> CliResult<Query> {
    parse_query(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// A `.gr` file is recognised by extension or by its `p tw` header.
fn load_graph(path: &Path) -> CliResult<Graph> {
    let text = read(path)?;
    if text.trim().is_empty() {
        return Err(format!("{}: empty input", path.display()).into());
    }
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && *l != "c" && !l.starts_with("c ") && !l.starts_with('#'));
    let is_gr = path.extension().is_some_and(|e| e == "gr") || first.is_some_and(|l| l.starts_with("p "));
    let g = if is_gr {
        Graph::parse_gr(&text)
    } else {
        TidInstance::parse(&text).map(|i| i.gaifman_graph())
    };
    g.map_err(|e| format!("{}: {e}", path.display()).into())
}

fn cmd_decompose(a: &DecomposeArgs, out: &mut impl Write) -> CliResult {
    let g = load_graph(&a.input)?;
    let td = decompose(&g, a.heuristic);
    let lb = best_lower_bound(&g);
    let path = a.out.clone().unwrap_or_else(|| a.input.with_extension("td"));
    write(&path, &td.to_pace(g.num_vertices()))?;
    writeln!(out, "width={} lower_bound={} bags={}", td.width, lb, td.num_bags())?;
    Ok(())
}

fn cmd_encode(a: &EncodeArgs, out: &mut impl Write) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let td = decompose(&inst.gaifman_graph(), a.heuristic);
    let text = encode(&inst, &td)?.to_text();
    match &a.out {
        Some(p) => write(p, &text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn cmd_compile(a: &CompileArgs, out: &mut impl Write) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let q = load_query(&a.query)?;
    let Query::Ucq(u) = &q else {
        return Err("compile: reachability queries are evaluated without a tree automaton".into());
    };
    let cfg = PipelineConfig {
        heuristic: a.heuristic,
        ..PipelineConfig::default()
    };
    let work = prepare(&inst, &q, &cfg)?;
    let td = decompose(&work.gaifman_graph(), a.heuristic);
    let arity = u.disjuncts.iter().map(|d| d.max_arity()).max().unwrap_or(0);
    let enc = encode_with_capacity(&work, &td, arity).map_err(|e| e.at("encode"))?;
    let mut aut = compile_ucq(u, enc.slot_capacity).map_err(|e| e.at("compile"))?;
    if let Some(budget) = a.det_budget {
        aut = determinize(&aut, budget as usize).map_err(|e| e.at("determinize"))?;
    }
    // Running over the encoding discovers the reachable states.
    build_lineage_ucq(&aut, &enc).map_err(|e| e.at("compile"))?;
    out.write_all(aut.dump().as_bytes())?;
    Ok(())
}

fn emit_circuit(c: &Circuit, path: &Path) -> CliResult {
    let (nnf, td) = c.to_nnf()?;
    write(path, &nnf)?;
    if let Some(td) = td {
        write(&path.with_extension("td"), &td)?;
    }
    Ok(())
}

fn check_emit(a: &ProbArgs) -> CliResult {
    if a.emit_circuit.is_some() && !a.opts.method.uses_lineage() {
        return Err(format!("--emit-circuit needs a lineage method, not {}", a.opts.method).into());
    }
    Ok(())
}

fn cmd_lineage(a: &ProbArgs, out: &mut impl Write) -> CliResult {
    check_emit(a)?;
    let inst = load_instance(&a.instance)?;
    let q = load_query(&a.query)?;
    let cfg = a.opts.config();
    let det = if cfg.method.uses_lineage() { cfg.method.determinize() } else { Determinize::No };
    let lin = build_lineage(&inst, &q, &cfg, det)?;
    if let Some(p) = &a.emit_circuit {
        emit_circuit(&lin.circuit, p)?;
    }
    writeln!(
        out,
        "{} instance_width={} fell_back={}",
        lin.circuit.summary(),
        lin.width,
        lin.fell_back
    )?;
    Ok(())
}

fn cmd_prob(a: &ProbArgs, out: &mut impl Write) -> CliResult {
    check_emit(a)?;
    let inst = load_instance(&a.instance)?;
    let q = load_query(&a.query)?;
    let outcome = run(&inst, &q, &a.opts.config())?;
    if let (Some(p), Some(lin)) = (&a.emit_circuit, &outcome.lineage) {
        emit_circuit(&lin.circuit, p)?;
    }
    if let Some(h) = &outcome.hybrid {
        info!(
            "core_size_ratio={:.4} summarized={} work_reduction={}",
            h.core_size_ratio,
            h.summarized,
            h.work_reduction()
        );
    }
    writeln!(out, "{}", outcome.result.record())?;
    Ok(())
}

fn cmd_summarize(a: &SummarizeArgs, out: &mut impl Write) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let (relation, protect) = match &a.query {
        Some(p) => match load_query(p)? {
            Query::Rpq(r) => {
                let (rel, _) = plain_reachability(&r)?;
                (rel.to_string(), vec![r.source.clone(), r.target.clone()])
            }
            Query::Ucq(_) => return Err("summarize: tentacle summaries need a reachability query".into()),
        },
        None => (a.relation.clone(), Vec::new()),
    };
    let protect: Vec<&str> = protect.iter().map(String::as_str).collect();
    let pd = partial_decompose_protecting(&inst, a.cap, &protect);
    writeln!(
        out,
        "core_facts={} input_facts={} core_size_ratio={:.6} tentacles={}",
        pd.core.facts().len(),
        pd.input_facts,
        pd.core_size_ratio(),
        pd.tentacles.len()
    )?;
    for t in &pd.tentacles {
        match summarize_tentacle(t, &relation) {
            Ok(s) => out.write_all(s.dump().as_bytes())?,
            Err(e) => writeln!(out, "tentacle boundary={} skipped: {e}", t.boundary.join(","))?,
        }
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs, out: &mut impl Write) -> CliResult {
    let pairs = match a.kind {
        CorpusKind::Ktree => corpus(a.seed, a.count),
        CorpusKind::Grid => grid_corpus(a.seed, a.count),
    };
    write_corpus(&a.dir, &pairs).map_err(|e| format!("{}: {e}", a.dir.display()))?;
    writeln!(out, "wrote {} pairs to {}", pairs.len(), a.dir.display())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TREETACKLE_LOG", "warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let res = match &cli.command {
        Command::Decompose(a) => cmd_decompose(a, &mut out),
        Command::Encode(a) => cmd_encode(a, &mut out),
        Command::Compile(a) => cmd_compile(a, &mut out),
        Command::Lineage(a) => cmd_lineage(a, &mut out),
        Command::Prob(a) => cmd_prob(a, &mut out),
        Command::Summarize(a) => cmd_summarize(a, &mut out),
        Command::Bench(a) => bench::run(a, &mut out),
        Command::Gen(a) => cmd_gen(a, &mut out),
    };
    match res.and_then(|()| Ok(out.flush()?)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
