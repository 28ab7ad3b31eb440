//! Fixtures and brute-force oracles shared by the test suites. The oracles
//! avoid the engine's own algorithms: they work on plain maps and strings.

pub mod fixtures;
pub mod gen;
pub mod oracle;
pub mod sql;

pub use fixtures::*;
