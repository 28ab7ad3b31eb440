//! Command line and HTTP front end for contextdb.

pub mod api;
pub mod server;
