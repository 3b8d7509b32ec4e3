//! Knowledge substrate and processing pipeline for language-endowed agents:
//! a frame language with facets and inheritance, a construction-semantics
//! lexicon, a controlled-English parser, transformation-aware construction
//! matching, composition of ontologically grounded meaning representations,
//! shape-driven generation, episodic memory, and script learning.
//!
//! The crate is `no_std` and needs only `alloc`. File IO and the command line
//! live in the companion `shapes` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod kr;
pub mod ontology;
pub mod lexicon;
pub mod bundled;
pub mod syntax;
pub mod ontosyntax;
pub mod trace;
pub mod semantics;
pub mod episodic;
pub mod generator;
pub mod learner;
