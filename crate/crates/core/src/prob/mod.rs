//! Probability of lineage circuits and the brute-force oracle.

mod brute;
mod ddnnf;
mod mc;
mod mp;

use std::fmt;
use std::time::Duration;

pub use brute::{brute_force_pqe, brute_force_pqe_with_cap, DEFAULT_VAR_CAP};
pub use ddnnf::{log_prob_ddnnf, prob_ddnnf, prob_ddnnf_with};
pub(crate) use mc::{estimate, lane_mask, Threshold};
pub use mc::{prob_monte_carlo, prob_monte_carlo_with};
pub use mp::{joint_distribution, prob_message_passing};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbMethod {
    Ddnnf,
    MessagePassing,
    MonteCarlo,
    BruteForce,
    Hybrid,
}

impl ProbMethod {
    pub fn name(self) -> &'static str {
        match self {
            ProbMethod::Ddnnf => "ddnnf",
            ProbMethod::MessagePassing => "message-passing",
            ProbMethod::MonteCarlo => "monte-carlo",
            ProbMethod::BruteForce => "brute-force",
            ProbMethod::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ProbMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbStats {
    pub gates: usize,
    /// Factors for message passing, sampled worlds for Monte Carlo,
    /// enumerated worlds for brute force.
    pub factors: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbResult {
    pub value: f64,
    pub method: ProbMethod,
    /// Standard error, for sampling methods only.
    pub stderr: Option<f64>,
    pub stats: ProbStats,
}

impl ProbResult {
    /// `method=<m> prob=<p> stderr=<e|-> gates=<n> ms=<t>`
    pub fn record(&self) -> String {
        format!(
            "method={} prob={} stderr={} gates={} ms={:.3}",
            self.method,
            format_prob(self.value),
            self.stderr.map_or_else(|| "-".to_string(), format_prob),
            self.stats.gates,
            self.stats.elapsed.as_secs_f64() * 1e3
        )
    }
}

/// Positional decimal with 17 significant digits, enough to round-trip
/// any `f64`.
pub fn format_prob(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{:.16e}", x.abs());
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{}{}.0", digits, "0".repeat(point - digits.len()))
        } else {
            format!("{}.{}", &digits[..point], &digits[point..])
        }
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    if x.is_sign_negative() && x != 0.0 {
        format!("-{body}")
    } else {
        body
    }
}
