pub mod automaton;
pub mod encoding;
pub mod error;
pub mod gen;
pub mod graph;
pub mod hybrid;
pub mod instance;
pub mod lineage;
pub mod par;
pub mod pipeline;
pub mod prob;
pub mod query;
pub mod treedec;

pub use error::{Error, Result};
