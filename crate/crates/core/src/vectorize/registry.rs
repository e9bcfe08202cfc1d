use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::VectorizeError;

/// Feature block category, in assembly order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Medical,
    Word,
    Char,
    Embedding,
    TransformerScore,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Medical,
        Category::Word,
        Category::Char,
        Category::Embedding,
        Category::TransformerScore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Medical => "medical",
            Category::Word => "word",
            Category::Char => "char",
            Category::Embedding => "embedding",
            Category::TransformerScore => "transformer_score",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = VectorizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| VectorizeError::Registry(format!("unknown category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub column: usize,
    pub name: String,
    pub category: Category,
}

/// Name and category of every column of an assembled matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FeatureRegistry {
    pub entries: Vec<RegistryEntry>,
}

impl FeatureRegistry {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Columns must be `0..len` in order and each category one contiguous run.
    pub fn validate(&self) -> Result<(), VectorizeError> {
        let mut seen = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.column != i {
                return Err(VectorizeError::Registry(format!(
                    "entry {i} has column {}",
                    e.column
                )));
            }
            if seen.last() != Some(&e.category) {
                if seen.contains(&e.category) {
                    return Err(VectorizeError::Registry(format!(
                        "category {} is not contiguous",
                        e.category
                    )));
                }
                seen.push(e.category);
            }
        }
        Ok(())
    }

    /// Categories present, in column order.
    pub fn categories(&self) -> Vec<Category> {
        let mut out: Vec<Category> = Vec::new();
        for e in &self.entries {
            if out.last() != Some(&e.category) {
                out.push(e.category);
            }
        }
        out
    }

    pub fn width(&self, category: Category) -> usize {
        self.entries.iter().filter(|e| e.category == category).count()
    }

    pub fn columns_of(&self, category: Category) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.category == category)
            .map(|e| e.column)
            .collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Registry of a column subset, renumbered in the given order.
    pub fn select(&self, cols: &[usize]) -> FeatureRegistry {
        FeatureRegistry {
            entries: cols
                .iter()
                .enumerate()
                .map(|(new, &old)| RegistryEntry {
                    column: new,
                    name: self.entries[old].name.clone(),
                    category: self.entries[old].category,
                })
                .collect(),
        }
    }
}
