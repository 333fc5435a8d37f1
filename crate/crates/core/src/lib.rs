#![no_std]
extern crate alloc;

pub mod fingerprint;
pub mod metrics;
pub mod ner;
pub mod relex;
pub mod text;
