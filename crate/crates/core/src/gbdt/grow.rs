//! Leaf-wise growth of a single tree over gradient histograms.

use rayon::prelude::*;

use super::binning::BinnedMatrix;
use super::tree::{Node, Tree};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct HistBin {
    pub g: f64,
    pub h: f64,
    pub n: u32,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub num_leaves: usize,
    pub max_depth: usize,
    pub min_child_samples: usize,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitInfo {
    pub feature: usize,
    pub bin: u32,
    pub gain: f64,
    pub left: Totals,
    pub right: Totals,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Totals {
    pub g: f64,
    pub h: f64,
    pub n: u32,
}

/// L1 soft threshold of a gradient sum.
#[inline]
pub fn soft_threshold(g: f64, l1: f64) -> f64 {
    if g > l1 {
        g - l1
    } else if g < -l1 {
        g + l1
    } else {
        0.0
    }
}

#[inline]
fn leaf_score(g: f64, h: f64, l1: f64, l2: f64) -> f64 {
    let s = soft_threshold(g, l1);
    s * s / (h + l2)
}

/// Regularized Newton step for a leaf.
#[inline]
pub fn leaf_value(g: f64, h: f64, l1: f64, l2: f64) -> f64 {
    -soft_threshold(g, l1) / (h + l2)
}

/// Loss reduction of splitting (G, H) into left and right children.
#[inline]
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, l1: f64, l2: f64) -> f64 {
    0.5 * (leaf_score(gl, hl, l1, l2) + leaf_score(gr, hr, l1, l2)
        - leaf_score(gl + gr, hl + hr, l1, l2))
}

const HIST_CHUNK: usize = 4096;
const HIST_BUDGET_BYTES: usize = 512 << 20;

fn accumulate(b: &BinnedMatrix, rows: &[u32], grad: &[f64], hess: &[f64]) -> Vec<HistBin> {
    let mut hist = vec![HistBin::default(); b.total_bins];
    for &r in rows {
        let r = r as usize;
        let (g, h) = (grad[r], hess[r]);
        for &bin in b.row_bins(r) {
            let e = &mut hist[bin as usize];
            e.g += g;
            e.h += h;
            e.n += 1;
        }
    }
    hist
}

pub(crate) fn totals(rows: &[u32], grad: &[f64], hess: &[f64]) -> Totals {
    let mut t = Totals::default();
    for &r in rows {
        t.g += grad[r as usize];
        t.h += hess[r as usize];
    }
    t.n = rows.len() as u32;
    t
}

/// Histogram of `rows` over every bin. Rows with no stored value for a
/// feature are credited to that feature's zero bin. Chunking is fixed, so
/// the result does not depend on the thread count.
pub(crate) fn build_hist(
    b: &BinnedMatrix,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
    tot: Totals,
) -> Vec<HistBin> {
    let mut hist = if rows.len() > HIST_CHUNK {
        let parts: Vec<Vec<HistBin>> = rows
            .par_chunks(HIST_CHUNK)
            .map(|c| accumulate(b, c, grad, hess))
            .collect();
        let mut it = parts.into_iter();
        let mut acc = it.next().unwrap();
        for p in it {
            for (a, q) in acc.iter_mut().zip(&p) {
                a.g += q.g;
                a.h += q.h;
                a.n += q.n;
            }
        }
        acc
    } else {
        accumulate(b, rows, grad, hess)
    };
    for f in 0..b.n_features {
        let (s, e) = (b.offsets[f], b.offsets[f + 1]);
        let (mut g, mut h, mut n) = (0.0, 0.0, 0u32);
        for bin in &hist[s..e] {
            g += bin.g;
            h += bin.h;
            n += bin.n;
        }
        let z = &mut hist[s + b.mappers[f].zero_bin as usize];
        z.g += tot.g - g;
        z.h += tot.h - h;
        z.n += tot.n - n;
    }
    hist
}

fn best_for_feature(
    b: &BinnedMatrix,
    hist: &[HistBin],
    f: usize,
    tot: Totals,
    p: &GrowParams,
) -> Option<SplitInfo> {
    let (s, e) = (b.offsets[f], b.offsets[f + 1]);
    let mcs = p.min_child_samples as u32;
    let mut best: Option<SplitInfo> = None;
    let mut left = Totals::default();
    for (k, bin) in hist[s..e - 1].iter().enumerate() {
        left.g += bin.g;
        left.h += bin.h;
        left.n += bin.n;
        if left.n < mcs {
            continue;
        }
        let right = Totals {
            g: tot.g - left.g,
            h: tot.h - left.h,
            n: tot.n - left.n,
        };
        if right.n < mcs {
            break;
        }
        if left.h + p.lambda_l2 <= 0.0 || right.h + p.lambda_l2 <= 0.0 {
            continue;
        }
        let gain = split_gain(left.g, left.h, right.g, right.h, p.lambda_l1, p.lambda_l2);
        if gain > 0.0 && best.is_none_or(|bs| gain > bs.gain) {
            best = Some(SplitInfo {
                feature: f,
                bin: k as u32,
                gain,
                left,
                right,
            });
        }
    }
    best
}

/// Highest-gain split over `features`; ties go to the lower feature, then
/// the lower bin.
pub(crate) fn find_best_split(
    b: &BinnedMatrix,
    hist: &[HistBin],
    features: &[usize],
    tot: Totals,
    p: &GrowParams,
) -> Option<SplitInfo> {
    let per: Vec<Option<SplitInfo>> = features
        .par_iter()
        .with_min_len(64)
        .map(|&f| best_for_feature(b, hist, f, tot, p))
        .collect();
    let mut best: Option<SplitInfo> = None;
    for s in per.into_iter().flatten() {
        if best.is_none_or(|bs| s.gain > bs.gain) {
            best = Some(s);
        }
    }
    best
}

struct Leaf {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
    tot: Totals,
    hist: Option<Vec<HistBin>>,
    best: Option<SplitInfo>,
}

/// Grow one tree on `rows` (sorted ascending) using only `features`.
pub(crate) fn grow_tree(
    b: &BinnedMatrix,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
    features: &[usize],
    p: &GrowParams,
) -> Tree {
    let keep_hists = b.total_bins * std::mem::size_of::<HistBin>() * p.num_leaves <= HIST_BUDGET_BYTES;
    let can_split = |depth: usize, n: u32| depth < p.max_depth && n as usize >= 2 * p.min_child_samples;

    let mut rows = rows.to_vec();
    let mut nodes = vec![Node::Leaf { value: 0.0, count: 0 }];
    let root_tot = totals(&rows, grad, hess);
    let mut root = Leaf {
        node: 0,
        start: 0,
        end: rows.len(),
        depth: 0,
        tot: root_tot,
        hist: None,
        best: None,
    };
    if can_split(0, root_tot.n) {
        let h = build_hist(b, &rows, grad, hess, root_tot);
        root.best = find_best_split(b, &h, features, root_tot, p);
        if keep_hists && root.best.is_some() {
            root.hist = Some(h);
        }
    }
    let mut leaves = vec![root];
    let mut scratch: Vec<u32> = Vec::with_capacity(rows.len());

    while leaves.len() < p.num_leaves {
        let mut pick: Option<usize> = None;
        for (i, l) in leaves.iter().enumerate() {
            let Some(s) = l.best else { continue };
            match pick {
                None => pick = Some(i),
                Some(j) => {
                    let o = leaves[j].best.unwrap();
                    if s.gain > o.gain || (s.gain == o.gain && l.node < leaves[j].node) {
                        pick = Some(i);
                    }
                }
            }
        }
        let Some(i) = pick else { break };
        let mut parent = leaves.swap_remove(i);
        let split = parent.best.unwrap();

        // Stable partition keeps each child's rows sorted.
        scratch.clear();
        let seg = &mut rows[parent.start..parent.end];
        let mut n_left = 0;
        for k in 0..seg.len() {
            let r = seg[k];
            if b.local_bin(r as usize, split.feature) <= split.bin {
                seg[n_left] = r;
                n_left += 1;
            } else {
                scratch.push(r);
            }
        }
        seg[n_left..].copy_from_slice(&scratch);
        let mid = parent.start + n_left;
        debug_assert_eq!(n_left as u32, split.left.n);

        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: 0.0, count: 0 });
        nodes.push(Node::Leaf { value: 0.0, count: 0 });
        nodes[parent.node] = Node::Split {
            feature: split.feature as u32,
            threshold: b.mappers[split.feature].cuts[split.bin as usize],
            bin: split.bin,
            gain: split.gain,
            left: li as u32,
            right: ri as u32,
            count: parent.tot.n,
        };

        let depth = parent.depth + 1;
        let child = [
            (li, parent.start, mid, split.left),
            (ri, mid, parent.end, split.right),
        ];
        let need = [
            can_split(depth, split.left.n),
            can_split(depth, split.right.n),
        ];
        let (small, large) = if split.left.n <= split.right.n { (0, 1) } else { (1, 0) };
        let mut hists: [Option<Vec<HistBin>>; 2] = [None, None];
        if need[large] && parent.hist.is_some() {
            let (_, s, e, t) = child[small];
            let hs = build_hist(b, &rows[s..e], grad, hess, t);
            let mut hl = parent.hist.take().unwrap();
            for (a, q) in hl.iter_mut().zip(&hs) {
                a.g -= q.g;
                a.h -= q.h;
                a.n -= q.n;
            }
            hists[small] = Some(hs);
            hists[large] = Some(hl);
        } else {
            for c in 0..2 {
                if need[c] {
                    let (_, s, e, t) = child[c];
                    hists[c] = Some(build_hist(b, &rows[s..e], grad, hess, t));
                }
            }
        }
        drop(parent);
        for (c, (node, start, end, tot)) in child.into_iter().enumerate() {
            let mut leaf = Leaf {
                node,
                start,
                end,
                depth,
                tot,
                hist: None,
                best: None,
            };
            if need[c] {
                let h = hists[c].take().unwrap();
                leaf.best = find_best_split(b, &h, features, tot, p);
                if keep_hists && leaf.best.is_some() {
                    leaf.hist = Some(h);
                }
            }
            leaves.push(leaf);
        }
    }

    for l in leaves {
        nodes[l.node] = Node::Leaf {
            value: leaf_value(l.tot.g, l.tot.h, p.lambda_l1, p.lambda_l2),
            count: l.tot.n,
        };
    }
    Tree { nodes }
}
