//! Compositional model checking with interaction-preserving abstractions.

pub mod analysis;
pub mod composer;
pub mod corpus;
pub mod explorer;
pub mod generator;
pub mod kernel;
pub mod parser;
pub mod refinement;

pub use kernel::{ActionInstance, Expr, Spec, State, Value};
