//! Sparse feature matrices: TF-IDF vectorizers, block assembly with a named
//! column registry, and the FMX1 file format.

mod assemble;
mod fmx;
mod matrix;
mod registry;
mod tfidf;

use thiserror::Error;

pub use assemble::{assemble_features, BlockData, FeatureBlock};
pub use fmx::{
    decode_fmx, decode_registry, encode_fmx, encode_registry, load_matrix, read_fmx,
    registry_path, save_matrix,
};
pub use matrix::SparseMatrix;
pub use registry::{Category, FeatureRegistry, RegistryEntry};
pub use tfidf::{
    fit_char_tfidf, fit_word_tfidf, transform_tfidf, word_tokens, VectorizerConfig,
    VectorizerKind, VectorizerModel,
};

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("corpus must contain at least two documents")]
    EmptyCorpus,
    #[error("vocabulary is empty after document-frequency filtering")]
    EmptyVocabulary,
    #[error("invalid vectorizer config: {0}")]
    Config(String),
    #[error("row count mismatch: expected {expected}, found {found}")]
    RowMismatch { expected: usize, found: usize },
    #[error("not an FMX1 file (bad magic)")]
    BadMagic,
    #[error("unsupported FMX version {0}")]
    UnsupportedVersion(u32),
    #[error("FMX file is truncated")]
    Truncated,
    #[error("corrupt matrix: {0}")]
    Corrupt(String),
    #[error("registry error: {0}")]
    Registry(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
