use serde::{Deserialize, Serialize};

use super::VectorizeError;

/// Compressed sparse row matrix of `f32` values.
///
/// Invariants (checked by [`SparseMatrix::from_parts`]): `row_ptr` has
/// `n_rows + 1` non-decreasing offsets starting at 0 and ending at `nnz`;
/// column indices are strictly increasing within a row and `< n_cols`; no
/// stored value is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<u64>,
    col_idx: Vec<u32>,
    values: Vec<f32>,
}

impl SparseMatrix {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<u64>,
        col_idx: Vec<u32>,
        values: Vec<f32>,
    ) -> Result<Self, VectorizeError> {
        let m = SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), VectorizeError> {
        let bad = |msg: String| Err(VectorizeError::Corrupt(msg));
        if self.row_ptr.len() != self.n_rows + 1 {
            return bad(format!(
                "row_ptr has {} entries, expected {}",
                self.row_ptr.len(),
                self.n_rows + 1
            ));
        }
        if self.row_ptr[0] != 0 {
            return bad("row_ptr[0] must be 0".into());
        }
        let nnz = self.values.len();
        if self.col_idx.len() != nnz || self.row_ptr[self.n_rows] as usize != nnz {
            return bad("row_ptr, col_idx and values disagree on nnz".into());
        }
        for r in 0..self.n_rows {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            if lo > hi {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let cols = &self.col_idx[lo as usize..hi as usize];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("columns not strictly increasing in row {r}"));
            }
            if cols.last().is_some_and(|&c| c as usize >= self.n_cols) {
                return bad(format!("column index out of range in row {r}"));
            }
        }
        if self.values.contains(&0.0) {
            return bad("explicit zero stored".into());
        }
        Ok(())
    }

    /// Build from per-row `(column, value)` lists. Entries are sorted,
    /// duplicates are an error, and zeros are dropped.
    pub fn from_rows(rows: Vec<Vec<(u32, f32)>>, n_cols: usize) -> Result<Self, VectorizeError> {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0u64);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(VectorizeError::Corrupt(format!(
                        "duplicate column {} in row {r}",
                        pair[0].0
                    )));
                }
            }
            for (c, v) in row {
                if c as usize >= n_cols {
                    return Err(VectorizeError::Corrupt(format!(
                        "column {c} out of range in row {r}"
                    )));
                }
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(values.len() as u64);
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Row-major dense input; exact zeros are not stored.
    pub fn from_dense(n_rows: usize, n_cols: usize, data: &[f32]) -> Result<Self, VectorizeError> {
        if data.len() != n_rows * n_cols {
            return Err(VectorizeError::Corrupt(format!(
                "dense block has {} values, expected {}",
                data.len(),
                n_rows * n_cols
            )));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0u64);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..n_rows {
            for (c, &v) in data[r * n_cols..(r + 1) * n_cols].iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(c as u32);
                    values.push(v);
                }
            }
            row_ptr.push(values.len() as u64);
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[u64] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f32]) {
        let lo = self.row_ptr[r] as usize;
        let hi = self.row_ptr[r + 1] as usize;
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Value at (r, c); zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f32 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f32>> {
        (0..self.n_rows)
            .map(|r| {
                let mut row = vec![0.0; self.n_cols];
                let (cols, vals) = self.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    row[c as usize] = v;
                }
                row
            })
            .collect()
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    /// Keep the given columns, in the given order, renumbered 0..cols.len().
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self, VectorizeError> {
        let mut map = vec![u32::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            if old >= self.n_cols {
                return Err(VectorizeError::Corrupt(format!("column {old} out of range")));
            }
            if map[old] != u32::MAX {
                return Err(VectorizeError::Corrupt(format!("column {old} selected twice")));
            }
            map[old] = new as u32;
        }
        let rows = (0..self.n_rows)
            .map(|r| {
                let (c, v) = self.row(r);
                c.iter()
                    .zip(v)
                    .filter(|(&c, _)| map[c as usize] != u32::MAX)
                    .map(|(&c, &v)| (map[c as usize], v))
                    .collect()
            })
            .collect();
        SparseMatrix::from_rows(rows, cols.len())
    }

    /// Keep the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0u64);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (c, v) = self.row(r);
            col_idx.extend_from_slice(c);
            values.extend_from_slice(v);
            row_ptr.push(values.len() as u64);
        }
        SparseMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[&SparseMatrix]) -> Result<Self, VectorizeError> {
        let n_rows = blocks.first().map_or(0, |b| b.n_rows);
        if let Some(b) = blocks.iter().find(|b| b.n_rows != n_rows) {
            return Err(VectorizeError::RowMismatch {
                expected: n_rows,
                found: b.n_rows,
            });
        }
        let n_cols: usize = blocks.iter().map(|b| b.n_cols).sum();
        let nnz: usize = blocks.iter().map(|b| b.nnz()).sum();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0u64);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for r in 0..n_rows {
            let mut offset = 0u32;
            for b in blocks {
                let (c, v) = b.row(r);
                col_idx.extend(c.iter().map(|&c| c + offset));
                values.extend_from_slice(v);
                offset += b.n_cols as u32;
            }
            row_ptr.push(values.len() as u64);
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Number of stored entries per column.
    pub fn column_nnz(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for &c in &self.col_idx {
            counts[c as usize] += 1;
        }
        counts
    }
}
