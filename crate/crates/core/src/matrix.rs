//! Rectangular matrices over arbitrary-precision nonnegative integers,
//! indexed by ordered sets of vertex labels.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("duplicate label {0:?} in index set")]
    DuplicateLabel(String),
    #[error("label collision between disjoint index sets: {0:?}")]
    LabelCollision(String),
    #[error("entry {0:?} is not a nonnegative decimal integer")]
    BadEntry(String),
    #[error("entry does not fit in machine word")]
    Overflow,
}

/// Ordered set of distinct vertex labels.
///
/// The order is part of the contract: every canonical choice downstream
/// (edge enumeration, path order, canonical isomorphisms) follows it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    labels: Arc<[String]>,
}

impl IndexSet {
    pub fn new<I, S>(labels: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(MatrixError::EmptyIndexSet);
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(MatrixError::DuplicateLabel(l.clone()));
            }
        }
        Ok(IndexSet {
            labels: labels.into(),
        })
    }

    /// Labels `0, 1, .., n-1`.
    pub fn range(n: usize) -> Self {
        Self::with_prefix("", n)
    }

    /// Labels `{prefix}0, {prefix}1, ..`.
    pub fn with_prefix(prefix: &str, n: usize) -> Self {
        assert!(n > 0, "index set must be non-empty");
        IndexSet {
            labels: (0..n)
                .map(|i| format!("{prefix}{i}"))
                .collect::<Vec<_>>()
                .into(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Every label prefixed, e.g. `"L:"` / `"R:"` for disjoint unions.
    pub fn prefixed(&self, prefix: &str) -> IndexSet {
        IndexSet {
            labels: self
                .labels
                .iter()
                .map(|l| format!("{prefix}{l}"))
                .collect::<Vec<_>>()
                .into(),
        }
    }

    /// Concatenation of two index sets; fails on shared labels.
    pub fn disjoint_union(&self, other: &IndexSet) -> Result<IndexSet, MatrixError> {
        for l in other.labels.iter() {
            if self.position(l).is_some() {
                return Err(MatrixError::LabelCollision(l.clone()));
            }
        }
        IndexSet::new(self.labels.iter().chain(other.labels.iter()).cloned())
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

/// Matrix with nonnegative integer entries over `rows x cols`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NonnegMatrix {
    rows: IndexSet,
    cols: IndexSet,
    entries: Vec<BigUint>,
}

impl NonnegMatrix {
    pub fn new(rows: IndexSet, cols: IndexSet, entries: Vec<BigUint>) -> Result<Self, MatrixError> {
        if entries.len() != rows.len() * cols.len() {
            return Err(MatrixError::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                rows.len(),
                cols.len()
            )));
        }
        Ok(NonnegMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: IndexSet, cols: IndexSet) -> Self {
        let n = rows.len() * cols.len();
        NonnegMatrix {
            rows,
            cols,
            entries: vec![BigUint::zero(); n],
        }
    }

    pub fn identity(index: IndexSet) -> Self {
        let mut m = Self::zeros(index.clone(), index);
        for i in 0..m.nrows() {
            m.set(i, i, BigUint::one());
        }
        m
    }

    /// Builds a matrix from nested rows, labelling rows and columns `0..n`.
    /// Panics on ragged input; intended for literals in code and tests.
    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged matrix literal");
            entries.extend(r.iter().map(|&x| BigUint::from(x)));
        }
        NonnegMatrix {
            rows: IndexSet::range(nrows),
            cols: IndexSet::range(ncols),
            entries,
        }
    }

    /// Same entries over new index sets of the same sizes.
    pub fn relabel(&self, rows: IndexSet, cols: IndexSet) -> Result<Self, MatrixError> {
        if rows.len() != self.nrows() || cols.len() != self.ncols() {
            return Err(MatrixError::DimensionMismatch(
                "relabel with different sizes".into(),
            ));
        }
        Ok(NonnegMatrix {
            rows,
            cols,
            entries: self.entries.clone(),
        })
    }

    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn cols(&self) -> &IndexSet {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn ensure_square(&self) -> Result<(), MatrixError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(MatrixError::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.ncols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigUint) {
        let n = self.ncols();
        self.entries[i * n + j] = value;
    }

    /// Entry as a machine integer, for enumeration of edges.
    pub fn get_usize(&self, i: usize, j: usize) -> Result<usize, MatrixError> {
        self.get(i, j).to_usize().ok_or(MatrixError::Overflow)
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[BigUint] {
        let n = self.ncols();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn entry_sum(&self) -> BigUint {
        self.entries.iter().sum()
    }

    pub fn max_entry(&self) -> BigUint {
        self.entries.iter().max().cloned().unwrap_or_default()
    }

    pub fn transpose(&self) -> NonnegMatrix {
        let mut t = NonnegMatrix::zeros(self.cols.clone(), self.rows.clone());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Exact product; the inner index sets must coincide.
    pub fn multiply(&self, other: &NonnegMatrix) -> Result<NonnegMatrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "cannot multiply {:?}x{:?} by {:?}x{:?}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.nrows(), self.ncols(), other.ncols());
        let mut out = NonnegMatrix::zeros(self.rows.clone(), other.cols.clone());
        for i in 0..n {
            for l in 0..k {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..m {
                    let b = other.get(l, j);
                    if !b.is_zero() {
                        out.entries[i * m + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `k`-th power, `k >= 1`.
    pub fn power(&self, k: u32) -> Result<NonnegMatrix, MatrixError> {
        self.ensure_square()?;
        if k == 0 {
            return Err(MatrixError::DimensionMismatch(
                "power exponent must be >= 1".into(),
            ));
        }
        // square-and-multiply; accumulate starting from the first set bit
        let mut result: Option<NonnegMatrix> = None;
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.multiply(&base)?,
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base)?;
            }
        }
        Ok(result.expect("k >= 1"))
    }

    /// No zero rows and no zero columns.
    pub fn is_essential(&self) -> bool {
        let rows_ok = (0..self.nrows()).all(|i| self.row(i).iter().any(|x| !x.is_zero()));
        let cols_ok =
            (0..self.ncols()).all(|j| (0..self.nrows()).any(|i| !self.get(i, j).is_zero()));
        rows_ok && cols_ok
    }

    /// Same-shape comparison of entries, ignoring labels.
    pub fn same_entries(&self, other: &NonnegMatrix) -> bool {
        self.nrows() == other.nrows()
            && self.ncols() == other.ncols()
            && self.entries == other.entries
    }
}

impl fmt::Debug for NonnegMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.nrows() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.ncols() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for NonnegMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Block matrices over `V ⊔ W` (V labels first, prefixed `L:` / `R:`):
/// `C = diag(A, B)` and `D = [[0, R], [S, 0]]`.
///
/// `A, B` are shift equivalent with lag `m` via `R, S` exactly when
/// `CD == DC` and `D^2 == C^m`.
pub fn block_assemble(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    r: &NonnegMatrix,
    s: &NonnegMatrix,
) -> Result<(NonnegMatrix, NonnegMatrix), MatrixError> {
    a.ensure_square()?;
    b.ensure_square()?;
    if r.rows() != a.rows() || r.cols() != b.rows() {
        return Err(MatrixError::DimensionMismatch(
            "R must be indexed by V x W".into(),
        ));
    }
    if s.rows() != b.rows() || s.cols() != a.rows() {
        return Err(MatrixError::DimensionMismatch(
            "S must be indexed by W x V".into(),
        ));
    }
    let v = a.rows().prefixed(LEFT_PREFIX);
    let w = b.rows().prefixed(RIGHT_PREFIX);
    let vw = v.disjoint_union(&w)?;
    let nv = v.len();
    let mut c = NonnegMatrix::zeros(vw.clone(), vw.clone());
    let mut d = NonnegMatrix::zeros(vw.clone(), vw);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            c.set(i, j, a.get(i, j).clone());
        }
    }
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            c.set(nv + i, nv + j, b.get(i, j).clone());
        }
    }
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            d.set(i, nv + j, r.get(i, j).clone());
        }
    }
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            d.set(nv + i, j, s.get(i, j).clone());
        }
    }
    Ok((c, d))
}

pub const LEFT_PREFIX: &str = "L:";
pub const RIGHT_PREFIX: &str = "R:";

// JSON: { "rows": [..], "cols": [..], "entries": [["1","0"], ..] }

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: Vec<String>,
    cols: Vec<String>,
    entries: Vec<Vec<EntryRepr>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryIn {
    Str(String),
    Num(u64),
}

struct EntryRepr(BigUint);

impl Serialize for EntryRepr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_str_radix(10))
    }
}

impl<'de> Deserialize<'de> for EntryRepr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match EntryIn::deserialize(d)? {
            EntryIn::Num(n) => Ok(EntryRepr(BigUint::from(n))),
            EntryIn::Str(s) => {
                if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(de::Error::custom(MatrixError::BadEntry(s)));
                }
                BigUint::parse_bytes(s.as_bytes(), 10)
                    .map(EntryRepr)
                    .ok_or_else(|| de::Error::custom(MatrixError::BadEntry(s)))
            }
        }
    }
}

impl Serialize for NonnegMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = MatrixRepr {
            rows: self.rows.labels().to_vec(),
            cols: self.cols.labels().to_vec(),
            entries: (0..self.nrows())
                .map(|i| self.row(i).iter().map(|x| EntryRepr(x.clone())).collect())
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NonnegMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let rows = IndexSet::new(repr.rows).map_err(de::Error::custom)?;
        let cols = IndexSet::new(repr.cols).map_err(de::Error::custom)?;
        if repr.entries.len() != rows.len() {
            return Err(de::Error::custom(format!(
                "entries has {} rows, expected {}",
                repr.entries.len(),
                rows.len()
            )));
        }
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for (i, row) in repr.entries.into_iter().enumerate() {
            if row.len() != cols.len() {
                return Err(de::Error::custom(format!(
                    "entries row {i} has {} values, expected {}",
                    row.len(),
                    cols.len()
                )));
            }
            entries.extend(row.into_iter().map(|e| e.0));
        }
        NonnegMatrix::new(rows, cols, entries).map_err(de::Error::custom)
    }
}
