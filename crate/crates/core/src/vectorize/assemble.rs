use super::{Category, FeatureRegistry, RegistryEntry, SparseMatrix, VectorizeError};

/// Block payload: already sparse, or row-major dense.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockData {
    Sparse(SparseMatrix),
    Dense {
        n_rows: usize,
        n_cols: usize,
        values: Vec<f32>,
    },
}

impl BlockData {
    pub fn n_rows(&self) -> usize {
        match self {
            BlockData::Sparse(m) => m.n_rows(),
            BlockData::Dense { n_rows, .. } => *n_rows,
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            BlockData::Sparse(m) => m.n_cols(),
            BlockData::Dense { n_cols, .. } => *n_cols,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub category: Category,
    pub names: Vec<String>,
    pub data: BlockData,
}

impl FeatureBlock {
    pub fn sparse(category: Category, names: Vec<String>, m: SparseMatrix) -> Self {
        FeatureBlock {
            category,
            names,
            data: BlockData::Sparse(m),
        }
    }

    pub fn dense(category: Category, names: Vec<String>, n_rows: usize, values: Vec<f32>) -> Self {
        let n_cols = names.len();
        FeatureBlock {
            category,
            names,
            data: BlockData::Dense {
                n_rows,
                n_cols,
                values,
            },
        }
    }
}

/// Concatenate blocks horizontally in category order
/// (medical, word, char, embedding, transformer score). Width-0 blocks are
/// skipped and leave no trace in the registry.
pub fn assemble_features(
    blocks: Vec<FeatureBlock>,
) -> Result<(SparseMatrix, FeatureRegistry), VectorizeError> {
    let mut blocks = blocks;
    blocks.sort_by_key(|b| b.category);
    for pair in blocks.windows(2) {
        if pair[0].category == pair[1].category {
            return Err(VectorizeError::Registry(format!(
                "category {} supplied twice",
                pair[0].category
            )));
        }
    }
    if let Some(first) = blocks.first() {
        let n_rows = first.data.n_rows();
        if let Some(b) = blocks.iter().find(|b| b.data.n_rows() != n_rows) {
            return Err(VectorizeError::RowMismatch {
                expected: n_rows,
                found: b.data.n_rows(),
            });
        }
    }

    let mut mats = Vec::new();
    let mut registry = FeatureRegistry::default();
    for b in blocks {
        if b.data.n_cols() == 0 {
            continue;
        }
        if b.names.len() != b.data.n_cols() {
            return Err(VectorizeError::Registry(format!(
                "{} block has {} names for {} columns",
                b.category,
                b.names.len(),
                b.data.n_cols()
            )));
        }
        let m = match b.data {
            BlockData::Sparse(m) => m,
            BlockData::Dense {
                n_rows,
                n_cols,
                values,
            } => SparseMatrix::from_dense(n_rows, n_cols, &values)?,
        };
        for name in b.names {
            registry.entries.push(RegistryEntry {
                column: registry.entries.len(),
                name,
                category: b.category,
            });
        }
        mats.push(m);
    }
    let refs: Vec<&SparseMatrix> = mats.iter().collect();
    let x = SparseMatrix::hstack(&refs)?;
    Ok((x, registry))
}
