//! Test-only oracles that share no code with the library.

#![allow(dead_code)]

pub mod chain;
pub mod pack;
