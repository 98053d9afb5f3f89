//! Canonical form of a square matrix under simultaneous row/column
//! permutation: the permuted matrix with lexicographically least row-major
//! entries.

use itertools::Itertools;

/// Returns `(C, p)` with `C[i][j] = M[p[i]][p[j]]`, `M` given row-major.
pub fn canonical_form(n: usize, m: &[i128]) -> (Vec<i128>, Vec<usize>) {
    let mut best: Option<(Vec<i128>, Vec<usize>)> = None;
    for p in (0..n).permutations(n) {
        let c: Vec<i128> = (0..n * n).map(|k| m[p[k / n] * n + p[k % n]]).collect();
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, p));
        }
    }
    best.unwrap_or_default()
}
