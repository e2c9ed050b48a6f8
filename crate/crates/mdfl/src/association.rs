//! Cut-off constrained data association of path lengths.
//!
//! Estimated path lengths from channel initialization are matched to expected
//! path lengths from the geometric model such that the cumulative distance of
//! matched pairs is minimized, subject to every match staying below a cut-off
//! distance. Estimates farther than the cut-off from every expected length
//! stay unmatched, which discards clutter and strongly outlying components.
//!
//! The matching is exact: a Hungarian-style assignment on the cost matrix
//! with entries clamped to the cut-off (a pair at clamped cost is equivalent
//! to leaving both sides unmatched). Set sizes are tiny, so exactness is
//! cheap and lets tests compare against brute-force enumeration.

use crate::error::{Error, Result};
use crate::geometry::{build_path_geometry, Environment, Link, PathGeometry, ReflectionSequence, VisibleSet};
use crate::measurement::ShadowingParams;

/// Matching of one link's estimated path lengths to its expected ones.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationResult {
    /// Matched `(expected index, estimated index)` pairs, in expected order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_expected: Vec<usize>,
    pub unmatched_estimated: Vec<usize>,
    /// Sum of |expected - estimated| over matched pairs, meters.
    pub cost: f64,
}

impl AssociationResult {
    fn empty() -> Self {
        AssociationResult {
            pairs: Vec::new(),
            unmatched_expected: Vec::new(),
            unmatched_estimated: Vec::new(),
            cost: 0.0,
        }
    }
}

/// Exact min-cost assignment on a square matrix; returns row -> column.
///
/// Shortest augmenting paths with dual potentials, O(n^3).
fn solve_square(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column (1-based) -> row (1-based), 0 = free
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=n {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Optimal total cost of the clamped assignment over the given row/column
/// subsets, padded to square with the cut-off so unmatched slots cost exactly
/// the cut-off.
fn padded_optimum(expected: &[f64], estimated: &[f64], rows: &[usize], cols: &[usize], cutoff: f64) -> f64 {
    let s = rows.len().max(cols.len());
    if s == 0 {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = (0..s)
        .map(|i| {
            (0..s)
                .map(|j| {
                    if i < rows.len() && j < cols.len() {
                        (expected[rows[i]] - estimated[cols[j]]).abs().min(cutoff)
                    } else {
                        cutoff
                    }
                })
                .collect()
        })
        .collect();
    let assignment = solve_square(&cost);
    (0..s).map(|i| cost[i][assignment[i]]).sum()
}

/// Matches estimated path lengths to expected ones under a cut-off.
///
/// Minimizes the sum of clamped distances exactly; pairs whose true distance
/// reaches the cut-off are reported unmatched on both sides. Ties are broken
/// deterministically: earlier expected entries are matched first, each to the
/// smallest compatible estimate.
pub fn associate(expected: &[f64], estimated: &[f64], cutoff: f64) -> Result<AssociationResult> {
    if !(cutoff > 0.0) {
        return Err(Error::config("association cut-off must be positive"));
    }
    let n = expected.len();
    let m = estimated.len();
    if n == 0 && m == 0 {
        return Ok(AssociationResult::empty());
    }

    let s = n.max(m);
    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let optimum = padded_optimum(expected, estimated, &all_rows, &all_cols, cutoff);
    let tol = 1e-9 * (1.0 + optimum.abs());

    // Lexicographic canonicalization: walk expected entries in order and
    // commit the smallest estimate that still completes to an optimal total.
    // The completion cost of a tentative pair is the matched sum so far plus
    // the sub-problem optimum plus the padding debt: slots of the original
    // square problem that exist in neither the committed pairs nor the
    // sub-problem's own padding (each costs exactly the cut-off).
    let mut remaining_rows = all_rows;
    let mut remaining_cols = all_cols;
    let mut matched_sum = 0.0;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut unmatched_expected = Vec::new();

    for i in 0..n {
        remaining_rows.retain(|&r| r != i);
        let mut chosen = None;
        for (cpos, &j) in remaining_cols.iter().enumerate() {
            let d = (expected[i] - estimated[j]).abs();
            if d >= cutoff {
                continue;
            }
            let rest_cols = cols_without(&remaining_cols, cpos);
            let rest = padded_optimum(expected, estimated, &remaining_rows, &rest_cols, cutoff);
            let s_rest = remaining_rows.len().max(rest_cols.len());
            let debt = (s - (pairs.len() + 1) - s_rest) as f64 * cutoff;
            if matched_sum + d + rest + debt <= optimum + tol {
                chosen = Some((cpos, j, d));
                break;
            }
        }
        match chosen {
            Some((cpos, j, d)) => {
                pairs.push((i, j));
                matched_sum += d;
                remaining_cols.remove(cpos);
            }
            None => {
                // Some optimal completion must leave this entry unmatched.
                unmatched_expected.push(i);
            }
        }
    }

    let cost = pairs
        .iter()
        .map(|&(i, j)| (expected[i] - estimated[j]).abs())
        .sum();
    Ok(AssociationResult {
        pairs,
        unmatched_expected,
        unmatched_estimated: remaining_cols,
        cost,
    })
}

fn cols_without(cols: &[usize], pos: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(cols.len() - 1);
    out.extend_from_slice(&cols[..pos]);
    out.extend_from_slice(&cols[pos + 1..]);
    out
}

/// One associated multipath component with its precomputed geometry.
#[derive(Debug, Clone)]
pub struct MpcEntry {
    pub link_index: usize,
    pub sequence: ReflectionSequence,
    pub geometry: PathGeometry,
    pub params: ShadowingParams,
}

/// Union of all links' associated sequences, in link order.
///
/// The entry index defines the measurement-vector layout used by the
/// measurement model and the Fisher information accumulation.
#[derive(Debug, Clone, Default)]
pub struct MpcUnion {
    pub entries: Vec<MpcEntry>,
}

impl MpcUnion {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Diagonal measurement noise variances, dB^2, in entry order.
    pub fn noise_variances(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.params.sigma_db * e.params.sigma_db).collect()
    }
}

/// Concatenates per-link associated sequences into the global union.
///
/// `per_link` holds, for each link, the visible set together with the
/// association result against that link's estimates; only matched sequences
/// contribute entries. Per-link order is preserved, links in input order.
pub fn build_union(
    per_link: &[(&VisibleSet, &AssociationResult)],
    params: &ShadowingParams,
) -> MpcUnion {
    let mut entries = Vec::new();
    for (vs, assoc) in per_link {
        for &(expected_idx, _) in &assoc.pairs {
            let mpc = &vs.mpcs[expected_idx];
            entries.push(MpcEntry {
                link_index: vs.link.index,
                sequence: mpc.sequence.clone(),
                geometry: mpc.geometry.clone(),
                params: *params,
            });
        }
    }
    MpcUnion { entries }
}

/// Builds the union directly from visible sets, as if every expected
/// component had been estimated and associated perfectly.
///
/// `los_only` restricts entries to the direct paths (classic DFL).
pub fn perfect_union(
    links: &[Link],
    env: &Environment,
    max_order: usize,
    params: &ShadowingParams,
    los_only: bool,
) -> Result<MpcUnion> {
    let mut entries = Vec::new();
    for link in links {
        let vs = crate::geometry::visible_set(link, env, max_order)?;
        for mpc in &vs.mpcs {
            if los_only && !mpc.sequence.is_los() {
                continue;
            }
            entries.push(MpcEntry {
                link_index: link.index,
                sequence: mpc.sequence.clone(),
                geometry: mpc.geometry.clone(),
                params: *params,
            });
        }
    }
    Ok(MpcUnion { entries })
}

/// Builds one link's entries from an explicit sequence list.
pub fn union_from_sequences(
    link: &Link,
    sequences: &[ReflectionSequence],
    env: &Environment,
    params: &ShadowingParams,
) -> Result<MpcUnion> {
    let mut entries = Vec::new();
    for seq in sequences {
        let geometry = build_path_geometry(link, seq, env)?;
        entries.push(MpcEntry {
            link_index: link.index,
            sequence: seq.clone(),
            geometry,
            params: *params,
        });
    }
    Ok(MpcUnion { entries })
}
