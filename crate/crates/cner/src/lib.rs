//! Service, command-line and file-format layer for the Spanish entity and
//! relation extraction toolkit in `cner-core`.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod extractor;
pub mod formats;
pub mod ingest;
pub mod pipeline;
pub mod remote;
pub mod service;
pub mod wire;
