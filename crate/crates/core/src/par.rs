//! Block-parallel execution helpers.
//!
//! Work is cut into fixed-size blocks whose boundaries depend only on the
//! problem size, never on the thread count, and per-block results are
//! merged in block order. Seeded computations therefore produce identical
//! bits whether they run on the rayon pool or sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Samples per Monte Carlo block.
pub const SAMPLE_BLOCK: u64 = 4096;

/// Maps `f` over `0..blocks` and returns the results in block order.
pub fn map_blocks<T, F>(exec: Exec, blocks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..blocks).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..blocks).into_par_iter().map(f).collect()
        }
    }
}

/// Splits `total` items into `(block index, start, len)` triples of at most
/// `block` items each.
pub fn blocks_of(total: u64, block: u64) -> Vec<(u64, u64, u64)> {
    let n = total.div_ceil(block);
    (0..n)
        .map(|b| {
            let start = b * block;
            (b, start, block.min(total - start))
        })
        .collect()
}

/// Deterministic per-block generator derived from `(seed, stream)`.
pub fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
