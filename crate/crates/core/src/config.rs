//! Resource loading shared by the server and the simulation harness.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{load_lexicon, load_stopwords};
use crate::recommend::load_ontology;
use crate::search::{index_corpus, load_corpus, Index, LocalAdapter};
use crate::session::Engine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourcePaths {
    /// A directory of `.html` files or a saved index file.
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub ontology: PathBuf,
    pub stopwords: PathBuf,
}

impl ResourcePaths {
    /// Resolves relative paths against `base`.
    pub fn relative_to(&self, base: &Path) -> Self {
        let join = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        Self {
            corpus: join(&self.corpus),
            lexicon: join(&self.lexicon),
            ontology: join(&self.ontology),
            stopwords: join(&self.stopwords),
        }
    }
}

/// Loads the corpus path as an index: indexes a directory on the fly or
/// reads a saved index file.
pub fn load_index(corpus: &Path, stopwords: &crate::lexicon::StopwordList) -> Result<Index> {
    if corpus.is_dir() {
        index_corpus(&load_corpus(corpus, stopwords)?, stopwords)
    } else {
        Index::load(corpus)
    }
}

/// Builds an engine whose baseline is a local adapter over the same index.
pub fn load_engine(paths: &ResourcePaths, page_size: usize) -> Result<Engine> {
    let stopwords = load_stopwords(&paths.stopwords)?;
    let index = Arc::new(load_index(&paths.corpus, &stopwords)?);
    Ok(Engine {
        lexicon: load_lexicon(&paths.lexicon)?,
        ontology: load_ontology(&paths.ontology)?,
        baseline: Arc::new(LocalAdapter::new(index.clone(), page_size)),
        index,
        stopwords,
    })
}

/// Recursive copy of a store directory into a new location.
pub fn copy_dir(src: &Path, dst: &Path) -> Result<()> {
    std::fs::create_dir_all(dst)?;
    for entry in std::fs::read_dir(src).map_err(|e| Error::load(src, e))? {
        let entry = entry?;
        let target = dst.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            std::fs::copy(entry.path(), target)?;
        }
    }
    Ok(())
}
