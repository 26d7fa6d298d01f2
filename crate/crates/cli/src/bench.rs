use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;

use treetackle::gen::read_corpus;
use treetackle::pipeline::{run as run_pipeline, Method, Outcome};
use treetackle::prob::format_prob;

use super::{parse_method, CliResult, PipelineOpts};

/// Exact methods disagreeing by more than this are flagged.
const TOLERANCE: f64 = 1e-6;

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of `<name>.tsv` / `<name>.q` pairs.
    dir: PathBuf,
    /// Comma-separated methods to run on every pair.
    #[arg(long, value_delimiter = ',', default_value = "auto,mp,brute", value_parser = parse_method)]
    methods: Vec<Method>,
    /// Runs per pair and method; the fastest is reported.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    reps: u32,
    #[command(flatten)]
    opts: PipelineOpts,
}

struct Row {
    method: Method,
    outcome: Result<Outcome, String>,
    best: Duration,
}

fn exact(m: Method) -> bool {
    !matches!(m, Method::Mc | Method::Hybrid)
}

/// Prints one row per pair and method:
/// `pair method prob stderr gates width ms work_red hyb_mc_speedup status`.
/// Seeds are derived per pair, so rows do not depend on corpus order.
pub fn run(a: &BenchArgs, out: &mut impl Write) -> CliResult {
    let pairs = read_corpus(&a.dir).map_err(|e| format!("{}: {e}", a.dir.display()))?;
    let mut methods = a.methods.clone();
    methods.dedup();
    writeln!(out, "pair\tmethod\tprob\tstderr\tgates\twidth\tms\twork_red\thyb_mc_speedup\tstatus")?;
    let (mut fails, mut skipped, mut rows_out) = (0usize, 0usize, 0usize);
    for (i, p) in pairs.iter().enumerate() {
        let mut cfg = a.opts.config();
        cfg.seed = a.opts.seed.wrapping_add(i as u64);
        let rows: Vec<Row> = methods
            .iter()
            .map(|&method| {
                let cfg = treetackle::pipeline::PipelineConfig { method, ..cfg.clone() };
                let mut best = Duration::MAX;
                let mut outcome = Err(String::new());
                for _ in 0..a.reps {
                    outcome = run_pipeline(&p.instance, &p.query, &cfg).map_err(|e| e.to_string());
                    match &outcome {
                        Ok(o) => best = best.min(o.result.stats.elapsed),
                        Err(_) => break,
                    }
                }
                Row { method, outcome, best }
            })
            .collect();

        let values: Vec<f64> = rows
            .iter()
            .filter(|r| exact(r.method))
            .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.result.value))
            .collect();
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().cloned().fold(f64::INFINITY, f64::min);
        let disagree = values.len() > 1 && spread > TOLERANCE;
        let mc_ms = rows
            .iter()
            .find(|r| r.method == Method::Mc && r.outcome.is_ok())
            .map(|r| r.best.as_secs_f64() * 1e3);

        for r in &rows {
            rows_out += 1;
            match &r.outcome {
                Ok(o) => {
                    let ms = r.best.as_secs_f64() * 1e3;
                    let stderr = o.result.stderr.map_or("-".to_string(), format_prob);
                    let width = o.lineage.as_ref().map_or("-".to_string(), |l| l.width.to_string());
                    let (work, speedup) = match (&o.hybrid, mc_ms) {
                        (Some(h), Some(mc)) => (h.work_reduction().to_string(), format!("{:.2}", mc / ms.max(1e-6))),
                        (Some(h), None) => (h.work_reduction().to_string(), "-".to_string()),
                        _ => ("-".to_string(), "-".to_string()),
                    };
                    let status = if disagree && exact(r.method) {
                        fails += 1;
                        "FAIL"
                    } else {
                        "ok"
                    };
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{}\t{}\t{}",
                        p.name,
                        r.method,
                        format_prob(o.result.value),
                        stderr,
                        o.result.stats.gates,
                        width,
                        ms,
                        work,
                        speedup,
                        status
                    )?;
                }
                Err(e) => {
                    skipped += 1;
                    writeln!(out, "{}\t{}\t-\t-\t-\t-\t-\t-\t-\tskip: {e}", p.name, r.method)?;
                }
            }
        }
    }
    writeln!(out, "summary pairs={} rows={} fail={} skipped={}", pairs.len(), rows_out, fails, skipped)?;
    if fails > 0 {
        return Err(format!("{fails} rows disagree by more than {TOLERANCE:e}").into());
    }
    Ok(())
}
