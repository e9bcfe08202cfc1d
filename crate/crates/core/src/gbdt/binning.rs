//! Per-feature value binning and the binned training matrix.

use crate::vectorize::SparseMatrix;

/// Upper bin edges for one feature. Bin `b` holds values `v` with
/// `cuts[b-1] < v <= cuts[b]`; the last edge is `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMapper {
    pub cuts: Vec<f32>,
    pub zero_bin: u32,
}

impl BinMapper {
    /// `nonzero` holds the feature's stored values; `n_zero` counts the
    /// implicit zeros.
    pub fn fit(mut nonzero: Vec<f32>, n_zero: usize, max_bins: usize) -> Self {
        nonzero.sort_by(f32::total_cmp);
        let mut distinct = nonzero.clone();
        if n_zero > 0 {
            distinct.push(0.0);
            distinct.sort_by(f32::total_cmp);
        }
        distinct.dedup();

        let mut cuts: Vec<f32> = if distinct.len() <= max_bins {
            distinct.clone()
        } else {
            let reserved = if n_zero > 0 { 2 } else { 0 };
            let q = max_bins.saturating_sub(reserved).max(1);
            let m = nonzero.len();
            let mut c: Vec<f32> = (1..q).map(|k| nonzero[(k * m / q).min(m - 1)]).collect();
            if n_zero > 0 {
                c.push(0.0);
                if let Some(&neg) = nonzero.iter().rev().find(|&&v| v < 0.0) {
                    c.push(neg);
                }
            }
            c.sort_by(f32::total_cmp);
            c.dedup();
            c
        };
        let max_value = distinct.last().copied().unwrap_or(0.0);
        cuts.retain(|&c| c < max_value);
        cuts.push(f32::INFINITY);
        let mut mapper = BinMapper { cuts, zero_bin: 0 };
        mapper.zero_bin = mapper.bin(0.0);
        mapper
    }

    #[inline]
    pub fn bin(&self, v: f32) -> u32 {
        self.cuts.partition_point(|&c| c < v) as u32
    }

    pub fn n_bins(&self) -> usize {
        self.cuts.len()
    }
}

/// Training matrix in bin space: the CSR structure of the input with each
/// stored value replaced by a global bin index (`offsets[feature] + bin`).
/// Implicit zeros fall in each feature's `zero_bin`.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub n_features: usize,
    pub mappers: Vec<BinMapper>,
    pub offsets: Vec<usize>,
    pub total_bins: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub bins: Vec<u32>,
}

impl BinnedMatrix {
    pub fn build(x: &SparseMatrix, max_bins: usize) -> Self {
        let n_rows = x.n_rows();
        let n_features = x.n_cols();
        let mut columns: Vec<Vec<f32>> = vec![Vec::new(); n_features];
        for (&c, &v) in x.col_idx().iter().zip(x.values()) {
            columns[c as usize].push(v);
        }
        let mappers: Vec<BinMapper> = columns
            .into_iter()
            .map(|vals| {
                let n_zero = n_rows - vals.len();
                BinMapper::fit(vals, n_zero, max_bins)
            })
            .collect();
        let mut offsets = Vec::with_capacity(n_features + 1);
        let mut total = 0;
        for m in &mappers {
            offsets.push(total);
            total += m.n_bins();
        }
        offsets.push(total);
        let bins = x
            .col_idx()
            .iter()
            .zip(x.values())
            .map(|(&c, &v)| (offsets[c as usize] as u32) + mappers[c as usize].bin(v))
            .collect();
        BinnedMatrix {
            n_rows,
            n_features,
            mappers,
            offsets,
            total_bins: total,
            row_ptr: x.row_ptr().iter().map(|&p| p as usize).collect(),
            col_idx: x.col_idx().to_vec(),
            bins,
        }
    }

    /// Local bin of `(row, feature)`.
    #[inline]
    pub fn local_bin(&self, row: usize, feature: usize) -> u32 {
        let (s, e) = (self.row_ptr[row], self.row_ptr[row + 1]);
        match self.col_idx[s..e].binary_search(&(feature as u32)) {
            Ok(i) => self.bins[s + i] - self.offsets[feature] as u32,
            Err(_) => self.mappers[feature].zero_bin,
        }
    }

    #[inline]
    pub fn row_bins(&self, row: usize) -> &[u32] {
        &self.bins[self.row_ptr[row]..self.row_ptr[row + 1]]
    }
}
