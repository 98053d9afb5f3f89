//! Edge sets of matrices and finite spaces of composable paths.
//!
//! An edge of a `V x W` matrix `F` is a triple `(v, w, n)` with `n < F[v, w]`.
//! Edges are stored by index into the owning matrix's row and column sets.
//! A path through the factors `[M1, .., Mk]` picks one edge per factor,
//! with the range of each edge equal to the source of the next.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::iso::{IsoError, PathIso};
use crate::matrix::{MatrixError, NonnegMatrix};

/// Upper bound on the number of paths a space may materialize.
pub const MAX_PATHS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("factors {0} and {1} are not composable")]
    NonComposableFactors(usize, usize),
    #[error("path space specification has no factors")]
    EmptySpec,
    #[error("path space has {0} paths, above the materialization limit")]
    TooLarge(BigUint),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("malformed path: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub range: usize,
    pub ordinal: usize,
}

impl Edge {
    pub fn new(source: usize, range: usize, ordinal: usize) -> Self {
        Edge {
            source,
            range,
            ordinal,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.source, self.range, self.ordinal)
    }
}

/// Non-empty sequence of composable edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(pub Vec<Edge>);

impl Path {
    pub fn edges(&self) -> &[Edge] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn source(&self) -> usize {
        self.0[0].source
    }

    pub fn range(&self) -> usize {
        self.0[self.0.len() - 1].range
    }

    pub fn concat(&self, other: &Path) -> Path {
        let mut e = Vec::with_capacity(self.len() + other.len());
        e.extend_from_slice(&self.0);
        e.extend_from_slice(&other.0);
        Path(e)
    }

    pub fn slice(&self, from: usize, to: usize) -> Path {
        Path(self.0[from..to].to_vec())
    }
}

/// Ordered list of composable factor matrices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PathSpaceSpec {
    factors: Vec<NonnegMatrix>,
}

impl PathSpaceSpec {
    pub fn new(factors: Vec<NonnegMatrix>) -> Result<Self, PathError> {
        if factors.is_empty() {
            return Err(PathError::EmptySpec);
        }
        for i in 1..factors.len() {
            if factors[i - 1].cols() != factors[i].rows() {
                return Err(PathError::NonComposableFactors(i - 1, i));
            }
        }
        Ok(PathSpaceSpec { factors })
    }

    pub fn single(m: NonnegMatrix) -> Self {
        PathSpaceSpec { factors: vec![m] }
    }

    /// `[m; k]`, the factors of `E_M^k`.
    pub fn repeated(m: &NonnegMatrix, k: usize) -> Result<Self, PathError> {
        PathSpaceSpec::new(vec![m.clone(); k])
    }

    pub fn factors(&self) -> &[NonnegMatrix] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn concat(&self, other: &PathSpaceSpec) -> Result<PathSpaceSpec, PathError> {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        PathSpaceSpec::new(f)
    }

    pub fn split_at(&self, k: usize) -> Result<(PathSpaceSpec, PathSpaceSpec), PathError> {
        Ok((
            PathSpaceSpec::new(self.factors[..k].to_vec())?,
            PathSpaceSpec::new(self.factors[k..].to_vec())?,
        ))
    }

    /// `M1 · .. · Mk`.
    pub fn product_matrix(&self) -> NonnegMatrix {
        let mut acc = self.factors[0].clone();
        for f in &self.factors[1..] {
            acc = acc.multiply(f).expect("factors are composable");
        }
        acc
    }

    pub fn first(&self) -> &NonnegMatrix {
        &self.factors[0]
    }

    pub fn last(&self) -> &NonnegMatrix {
        &self.factors[self.factors.len() - 1]
    }
}

impl fmt::Debug for PathSpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factors.iter()).finish()
    }
}

impl Serialize for PathSpaceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.factors.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PathSpaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let factors = Vec::<NonnegMatrix>::deserialize(d)?;
        PathSpaceSpec::new(factors).map_err(serde::de::Error::custom)
    }
}

/// All edges of `f`, ordered by (row, column, ordinal).
pub fn edge_set(f: &NonnegMatrix) -> Result<Vec<Edge>, PathError> {
    let mut out = Vec::new();
    for v in 0..f.nrows() {
        for w in 0..f.ncols() {
            let n = f.get_usize(v, w)?;
            out.extend((0..n).map(|k| Edge::new(v, w, k)));
        }
    }
    Ok(out)
}

/// All composable paths of `spec`, lexicographic in the factor-wise edge order.
pub fn path_space(spec: &PathSpaceSpec) -> Result<Vec<Path>, PathError> {
    let total = spec.product_matrix().entry_sum();
    let count = total
        .to_usize()
        .filter(|&n| n <= MAX_PATHS)
        .ok_or(PathError::TooLarge(total))?;
    let factors = spec.factors();
    // per factor, per source: edges in (range, ordinal) order
    let mut outgoing: Vec<Vec<Vec<Edge>>> = Vec::with_capacity(factors.len());
    for f in factors {
        let mut by_source = vec![Vec::new(); f.nrows()];
        for e in edge_set(f)? {
            by_source[e.source].push(e);
        }
        outgoing.push(by_source);
    }
    let mut out = Vec::with_capacity(count);
    let mut stack: Vec<Edge> = Vec::with_capacity(factors.len());
    fn rec(
        level: usize,
        at: usize,
        outgoing: &[Vec<Vec<Edge>>],
        stack: &mut Vec<Edge>,
        out: &mut Vec<Path>,
    ) {
        for e in &outgoing[level][at] {
            stack.push(*e);
            if level + 1 == outgoing.len() {
                out.push(Path(stack.clone()));
            } else {
                rec(level + 1, e.range, outgoing, stack, out);
            }
            stack.pop();
        }
    }
    for v in 0..factors[0].nrows() {
        rec(0, v, &outgoing, &mut stack, &mut out);
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// Materialized path space with an index from path to position.
pub struct PathSpace {
    spec: PathSpaceSpec,
    paths: Vec<Path>,
    index: HashMap<Path, usize>,
}

impl PathSpace {
    pub fn new(spec: PathSpaceSpec) -> Result<Arc<PathSpace>, PathError> {
        let paths = path_space(&spec)?;
        let index = paths
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Ok(Arc::new(PathSpace { spec, paths, index }))
    }

    pub fn spec(&self) -> &PathSpaceSpec {
        &self.spec
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.paths[i]
    }

    pub fn position(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// `(source, range)` block of the `i`-th path.
    pub fn block(&self, i: usize) -> (usize, usize) {
        let p = &self.paths[i];
        (p.source(), p.range())
    }

    pub fn path_to_json(&self, p: &Path) -> Value {
        let f = self.spec.factors();
        Value::Array(
            p.edges()
                .iter()
                .zip(f)
                .map(|(e, m)| json!([m.rows().label(e.source), m.cols().label(e.range), e.ordinal]))
                .collect(),
        )
    }

    pub fn path_from_json(&self, v: &Value) -> Result<usize, PathError> {
        let arr = v
            .as_array()
            .ok_or_else(|| PathError::Malformed("path must be an array".into()))?;
        if arr.len() != self.spec.len() {
            return Err(PathError::Malformed(format!(
                "path has {} edges, expected {}",
                arr.len(),
                self.spec.len()
            )));
        }
        let mut edges = Vec::with_capacity(arr.len());
        for (e, m) in arr.iter().zip(self.spec.factors()) {
            let triple = e.as_array().filter(|t| t.len() == 3).ok_or_else(|| {
                PathError::Malformed("edge must be [source, range, ordinal]".into())
            })?;
            let label = |x: &Value, set: &crate::matrix::IndexSet| -> Result<usize, PathError> {
                let s = x
                    .as_str()
                    .ok_or_else(|| PathError::Malformed("edge label must be a string".into()))?;
                set.position(s)
                    .ok_or_else(|| PathError::Malformed(format!("unknown label {s:?}")))
            };
            let source = label(&triple[0], m.rows())?;
            let range = label(&triple[1], m.cols())?;
            let ordinal = triple[2].as_u64().ok_or_else(|| {
                PathError::Malformed("edge ordinal must be a nonnegative integer".into())
            })? as usize;
            edges.push(Edge::new(source, range, ordinal));
        }
        let path = Path(edges);
        self.position(&path)
            .ok_or_else(|| PathError::Malformed(format!("{path:?} is not a path of this space")))
    }
}

impl fmt::Debug for PathSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathSpace")
            .field("spec", &self.spec)
            .field("len", &self.paths.len())
            .finish()
    }
}

/// Canonical identification of `E_{C^n}` with `E_C^n`: within each
/// `(v, w)` block the `k`-th edge of `C^n` goes to the `k`-th `n`-path.
pub fn power_identification(c: &NonnegMatrix, n: usize) -> Result<PathIso, IsoError> {
    c.ensure_square().map_err(PathError::from)?;
    if n == 0 {
        return Err(IsoError::Shape("power must be positive".into()));
    }
    let power = c.power(n as u32).map_err(PathError::from)?;
    PathIso::canonical(PathSpaceSpec::single(power), PathSpaceSpec::repeated(c, n)?)
}

/// Canonical identification of `E_{M1..Mk}` (edges of the product) with `E_{M1} x .. x E_{Mk}`.
pub fn product_identification(spec: &PathSpaceSpec) -> Result<PathIso, IsoError> {
    PathIso::canonical(PathSpaceSpec::single(spec.product_matrix()), spec.clone())
}
