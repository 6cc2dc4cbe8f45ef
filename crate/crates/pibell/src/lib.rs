//! Command-line front end over `pibell-core`: JSON requests and reports, CSV
//! boundary scans, polygon and classical-bound queries, and SDPA export.

pub mod cli;
pub mod commands;
pub mod schema;
pub mod sdpa;
