use std::time::Instant;

use rand::RngCore;
use rustc_hash::FxHashMap;

use super::{ProbMethod, ProbResult, ProbStats};
use crate::error::{Error, Result};
use crate::instance::VarId;
use crate::lineage::Circuit;
use crate::par::{blocks_of, block_rng, map_blocks, Exec, SAMPLE_BLOCK};

/// Fixed-point threshold: a uniform `u64` below it has probability `p`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Threshold {
    Always,
    Below(u64),
}

impl Threshold {
    pub fn new(p: f64) -> Self {
        if p >= 1.0 {
            Threshold::Always
        } else {
            Threshold::Below((p.max(0.0) * 18_446_744_073_709_551_616.0) as u64)
        }
    }

    /// 64 independent draws, one per bit.
    pub fn word(self, rng: &mut impl RngCore) -> u64 {
        match self {
            Threshold::Always => !0,
            Threshold::Below(t) => (0..64).fold(0u64, |w, i| w | ((rng.next_u64() < t) as u64) << i),
        }
    }
}

/// Lanes in use for a word holding samples `start..start + 64` of a
/// block of `len` samples.
pub(crate) fn lane_mask(start: u64, len: u64) -> u64 {
    let left = len - start;
    if left >= 64 {
        !0
    } else {
        (1u64 << left) - 1
    }
}

pub(crate) fn estimate(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Monte Carlo estimate from `samples` worlds drawn with `seed`.
pub fn prob_monte_carlo(c: &Circuit, samples: u64, seed: u64) -> Result<ProbResult> {
    prob_monte_carlo_with(c, samples, seed, Exec::default())
}

/// As [`prob_monte_carlo`] with an explicit executor. Samples come in
/// fixed blocks, each with its own stream of `seed`, and hit counts are
/// summed, so the estimate does not depend on the executor.
pub fn prob_monte_carlo_with(c: &Circuit, samples: u64, seed: u64, exec: Exec) -> Result<ProbResult> {
    let start = Instant::now();
    if samples == 0 {
        return Err(Error::Unsupported("Monte Carlo needs at least one sample".into()));
    }
    c.validate()?;
    let vars: Vec<(VarId, Threshold)> = c.var_probs.iter().map(|(v, p)| (*v, Threshold::new(*p))).collect();
    let index: FxHashMap<VarId, usize> = vars.iter().enumerate().map(|(i, (v, _))| (*v, i)).collect();
    let blocks = blocks_of(samples, SAMPLE_BLOCK);
    let hits: u64 = map_blocks(exec, blocks.len() as u64, |b| {
        let (id, _, len) = blocks[b as usize];
        let mut rng = block_rng(seed, id);
        let mut words = vec![0u64; vars.len()];
        let mut hits = 0u64;
        for s in (0..len).step_by(64) {
            for (w, (_, t)) in words.iter_mut().zip(&vars) {
                *w = t.word(&mut rng);
            }
            let val = c.eval_words(|v| words[index[&v]]);
            hits += (val[c.output as usize] & lane_mask(s, len)).count_ones() as u64;
        }
        hits
    })
    .into_iter()
    .sum();
    let (value, stderr) = estimate(hits, samples);
    Ok(ProbResult {
        value,
        method: ProbMethod::MonteCarlo,
        stderr: Some(stderr),
        stats: ProbStats {
            gates: c.gates.len(),
            factors: samples as usize,
            elapsed: start.elapsed(),
        },
    })
}
