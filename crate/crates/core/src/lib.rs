//! Program synthesis from natural-language descriptions and input/output
//! examples: a typed list-processing DSL, a tree-beam search over partial
//! programs, a sequence-to-tree guidance model, and a generator for
//! evaluation datasets.

pub mod dsl;
pub mod interp;
pub mod datagen;
pub mod exec;
pub mod guidance;
pub mod search;
pub mod eval;
pub mod seq2tree;
