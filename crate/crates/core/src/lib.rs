//! Joint prediction of entity state changes and step dependency graphs for
//! procedural text.
//!
//! A process is a sequence of sentences and a list of tracked entities. The
//! [`decoder`] fills a step × entity matrix of [`model::StateChange`]s that
//! respects each entity's existence, and [`depgraph`] turns that matrix into
//! a graph of dependencies between steps. [`eval`] scores predictions against
//! gold annotations.

pub mod cli;
pub mod decoder;
pub mod depgraph;
pub mod eval;
pub mod io;
pub mod mention;
pub mod model;
pub mod providers;
