use std::time::Instant;

use super::{ProbMethod, ProbResult, ProbStats};
use crate::error::{Error, Result};
use crate::lineage::{Circuit, GateKind};

/// Bottom-up weighted count of a d-DNNF circuit.
pub fn prob_ddnnf(c: &Circuit) -> Result<ProbResult> {
    prob_ddnnf_with(c, false)
}

/// As [`prob_ddnnf`]; with `log_space` every gate value is kept as a
/// natural logarithm, which avoids underflow on very large circuits.
pub fn prob_ddnnf_with(c: &Circuit, log_space: bool) -> Result<ProbResult> {
    let start = Instant::now();
    let out = evaluate(c, log_space)?;
    let value = if log_space { out.exp() } else { out };
    Ok(ProbResult {
        value: value.clamp(0.0, 1.0),
        method: ProbMethod::Ddnnf,
        stderr: None,
        stats: ProbStats {
            gates: c.gates.len(),
            factors: 0,
            elapsed: start.elapsed(),
        },
    })
}

/// Natural logarithm of the probability of a d-DNNF circuit.
pub fn log_prob_ddnnf(c: &Circuit) -> Result<f64> {
    evaluate(c, true)
}

fn evaluate(c: &Circuit, log_space: bool) -> Result<f64> {
    if !c.ddnnf {
        return Err(Error::NotDdnnf);
    }
    c.validate()?;
    let p = |g: &crate::lineage::Gate| match g.kind {
        GateKind::Var(v) => c.var_probs[&v],
        _ => unreachable!(),
    };
    let mut val: Vec<f64> = Vec::with_capacity(c.gates.len());
    for (i, g) in c.gates.iter().enumerate() {
        let ins = g.inputs.iter().map(|&x| val[x as usize]);
        let x = match g.kind {
            GateKind::Var(_) if log_space => p(g).ln(),
            GateKind::Var(_) => p(g),
            GateKind::Not => {
                let inner = &c.gates[g.inputs[0] as usize];
                if !matches!(inner.kind, GateKind::Var(_)) {
                    return Err(Error::NotOnNonVariable(i));
                }
                if log_space {
                    (-p(inner)).ln_1p()
                } else {
                    1.0 - p(inner)
                }
            }
            GateKind::True if log_space => 0.0,
            GateKind::True => 1.0,
            GateKind::False if log_space => f64::NEG_INFINITY,
            GateKind::False => 0.0,
            GateKind::And if log_space => ins.sum(),
            GateKind::And => ins.product(),
            GateKind::Or if log_space => log_sum_exp(ins),
            GateKind::Or => ins.sum(),
        };
        val.push(x);
    }
    Ok(val[c.output as usize])
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}
