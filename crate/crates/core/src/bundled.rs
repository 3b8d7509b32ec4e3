//! Knowledge bases compiled into the crate.

use crate::lexicon::Lexicon;
use crate::ontology::ConceptStore;

pub const ONTOLOGY_KB: &str = include_str!("../kb/ontology.kb");

/// The bundled ontology. Panics only if the bundled file is malformed,
/// which the test suite rules out.
pub fn ontology() -> ConceptStore {
    ConceptStore::parse(ONTOLOGY_KB).expect("bundled ontology is well-formed")
}

pub const LEXICON_KB: &str = include_str!("../kb/lexicon.kb");

/// The bundled lexicon.
pub fn lexicon() -> Lexicon {
    Lexicon::parse(LEXICON_KB).expect("bundled lexicon is well-formed")
}

/// Sentences the bundled knowledge is expected to cover, one per line.
pub const CORPUS: &str = include_str!("../kb/corpus.txt");
