//! Loading knowledge from a KB directory and the episodic memory file.
//!
//! In a KB directory `ontology.kb`, `lexicon.kb` and `shapes.kb` replace the
//! bundled files of the same name. Every other `*.kb` file adds its concept
//! and script blocks to the ontology and its sense blocks to the lexicon.

use std::fs;
use std::path::{Path, PathBuf};

use shapes_core::bundled;
use shapes_core::episodic::EpisodicStore;
use shapes_core::generator::ShapeRegistry;
use shapes_core::kr::{parse_kb, BlockKind};
use shapes_core::lexicon::{LexSense, Lexicon};
use shapes_core::ontology::ConceptStore;

use crate::CliError;

pub struct Knowledge {
    pub ontology: ConceptStore,
    pub lexicon: Lexicon,
    pub shapes: ShapeRegistry,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::load(path, e))
}

pub fn load(dir: Option<&Path>) -> Result<Knowledge, CliError> {
    let Some(dir) = dir else {
        return Ok(Knowledge { ontology: bundled::ontology(), lexicon: bundled::lexicon(), shapes: ShapeRegistry::bundled() });
    };
    if !dir.is_dir() {
        return Err(CliError::load(dir, "not a directory"));
    }
    let own = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
    let mut ontology = match own("ontology.kb") {
        Some(p) => ConceptStore::parse(&read(&p)?).map_err(|e| CliError::load(&p, e))?,
        None => bundled::ontology(),
    };
    let mut lexicon = match own("lexicon.kb") {
        Some(p) => Lexicon::parse(&read(&p)?).map_err(|e| CliError::load(&p, e))?,
        None => bundled::lexicon(),
    };
    let shapes = match own("shapes.kb") {
        Some(p) => ShapeRegistry::parse(&read(&p)?).map_err(|e| CliError::load(&p, e))?,
        None => ShapeRegistry::bundled(),
    };
    for p in extra_files(dir)? {
        let blocks = parse_kb(&read(&p)?).map_err(|e| CliError::load(&p, e))?;
        for b in &blocks {
            match b.kind {
                BlockKind::Concept | BlockKind::Script => ontology = ontology.with_concept(b.frame.clone()).map_err(|e| CliError::load(&p, e))?,
                BlockKind::Sense => lexicon = lexicon.with_sense(LexSense::from_block(b).map_err(|e| CliError::load(&p, e))?),
                _ => {}
            }
        }
    }
    Ok(Knowledge { ontology, lexicon, shapes })
}

/// The directory's own `*.kb` files besides the three replaceable ones, by name.
pub fn extra_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::load(dir, e))? {
        let p = entry.map_err(|e| CliError::load(dir, e))?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if p.extension().is_some_and(|x| x == "kb") && !["ontology.kb", "lexicon.kb", "shapes.kb"].contains(&name) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// A missing memory file is an empty memory.
pub fn load_memory(path: &Path) -> Result<EpisodicStore, CliError> {
    if !path.exists() {
        return Ok(EpisodicStore::new());
    }
    EpisodicStore::parse(&read(path)?).map_err(|e| CliError::load(path, e))
}

pub fn save_memory(path: &Path, store: &EpisodicStore) -> Result<(), CliError> {
    fs::write(path, store.serialize()).map_err(|e| CliError::load(path, e))
}
