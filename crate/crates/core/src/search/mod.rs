//! Bounded searches for elementary factorizations, SSE chains, SE witnesses
//! and compatible path-isomorphism quadruples.
//!
//! Every search is a depth-first or breadth-first enumeration in a fixed
//! lexicographic order, so the first solution found is the
//! lexicographically first one. With several workers the search tree is
//! split into prefix partitions whose results are merged in partition order
//! with cumulative node counts, which reproduces the single-worker result,
//! node count and budget outcome exactly.

pub mod canon;
pub mod iso_csp;
pub mod linear;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equiv::{
    compat_rhs, verify_cse, verify_se, CseWitness, ElementaryStep, EquivError, SeWitness, SseChain,
};
use crate::iso::{IsoError, PathIso};
use crate::matrix::{IndexSet, MatrixError, NonnegMatrix};
use crate::paths::{PathError, PathSpace, PathSpaceSpec};
use canon::canonical_form;
use iso_csp::{block_candidates, enumerate_bijections, StaircaseProblem};
use linear::{Counter, LinearCsp, Stop};

/// Largest dimension accepted by the permutation canonical form.
pub const MAX_CANONICAL_DIM: usize = 8;
/// Entries above `2^ENTRY_BITS` are rejected before the search starts.
pub const ENTRY_BITS: u64 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("node budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("entry too large for search: {0}")]
    Overflow(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBudget {
    pub max_inner_dim: usize,
    pub entry_bound: u64,
    pub max_lag: usize,
    pub max_depth: usize,
    pub node_limit: u64,
    pub seed: u64,
}

impl SearchBudget {
    /// Entry bound `max entry + 1`, inner dimension up to the larger matrix,
    /// lag up to 3, chains up to length 4, one million nodes.
    pub fn default_for(a: &NonnegMatrix, b: &NonnegMatrix) -> SearchBudget {
        let max = a
            .max_entry()
            .max(b.max_entry())
            .to_u64()
            .unwrap_or(u64::MAX - 1);
        SearchBudget {
            max_inner_dim: a.nrows().max(b.nrows()),
            entry_bound: max + 1,
            max_lag: 3,
            max_depth: 4,
            node_limit: 1_000_000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let fields = [
            ("max_inner_dim", self.max_inner_dim as u64),
            ("entry_bound", self.entry_bound),
            ("max_lag", self.max_lag as u64),
            ("max_depth", self.max_depth as u64),
            ("node_limit", self.node_limit),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(SearchError::InvalidBudget(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        if self.max_inner_dim > MAX_CANONICAL_DIM {
            return Err(SearchError::InvalidBudget(format!(
                "max_inner_dim must be at most {MAX_CANONICAL_DIM}"
            )));
        }
        Ok(())
    }
}

/// Partial budget as read from a file; missing fields take the defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetOverrides {
    pub max_inner_dim: Option<usize>,
    pub entry_bound: Option<u64>,
    pub max_lag: Option<usize>,
    pub max_depth: Option<usize>,
    pub node_limit: Option<u64>,
    pub seed: Option<u64>,
}

impl BudgetOverrides {
    pub fn apply(&self, base: SearchBudget) -> SearchBudget {
        SearchBudget {
            max_inner_dim: self.max_inner_dim.unwrap_or(base.max_inner_dim),
            entry_bound: self.entry_bound.unwrap_or(base.entry_bound),
            max_lag: self.max_lag.unwrap_or(base.max_lag),
            max_depth: self.max_depth.unwrap_or(base.max_depth),
            node_limit: self.node_limit.unwrap_or(base.node_limit),
            seed: self.seed.unwrap_or(base.seed),
        }
    }
}

/// `Exhausted` means nothing exists within the searched region;
/// `bound_dominates` says the entry bound was large enough that the region
/// contains every solution of the searched shape (lag, dimension, depth).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome<T> {
    Found(T),
    Exhausted { bound_dominates: bool },
}

impl<T> Outcome<T> {
    pub fn found(&self) -> Option<&T> {
        match self {
            Outcome::Found(t) => Some(t),
            Outcome::Exhausted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport<T> {
    pub outcome: Outcome<T>,
    pub nodes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgressEvent {
    pub search: &'static str,
    pub nodes: u64,
    pub depth: usize,
    pub frontier: usize,
}

pub type ProgressSink = Arc<dyn Fn(&ProgressEvent) + Send + Sync>;

#[derive(Clone, Default)]
pub struct SearchOptions {
    /// 0 and 1 both mean sequential.
    pub workers: usize,
    pub progress: Option<ProgressSink>,
}

impl SearchOptions {
    pub fn with_workers(workers: usize) -> Self {
        SearchOptions {
            workers,
            progress: None,
        }
    }

    fn emit(&self, search: &'static str, nodes: u64, depth: usize, frontier: usize) {
        if let Some(p) = &self.progress {
            p(&ProgressEvent {
                search,
                nodes,
                depth,
                frontier,
            });
        }
    }
}

/// One partition's outcome and its node count.
type PartitionResult<T> = (Result<(T, bool), linear::Stop>, u64);

/// Runs partitions `0..n` and merges them in order. Each call of `f`
/// returns a value and whether it counts as a hit; merging stops after the
/// first hit. Returns the merged values, the cumulative node count, and
/// whether a hit occurred.
fn run_ordered<T, F>(
    n: usize,
    limit: u64,
    opts: &SearchOptions,
    f: F,
) -> Result<(Vec<T>, u64, bool), SearchError>
where
    T: Send,
    F: Fn(usize, &mut Counter) -> Result<(T, bool), Stop> + Sync,
{
    let exceeded = || SearchError::BudgetExceeded { limit };
    let mut out = Vec::new();
    let mut cum = 0u64;
    if opts.workers <= 1 {
        for i in 0..n {
            let mut c = Counter::new(limit - cum);
            match f(i, &mut c) {
                Ok((t, hit)) => {
                    cum += c.nodes;
                    out.push(t);
                    if hit {
                        return Ok((out, cum, true));
                    }
                }
                Err(_) => return Err(exceeded()),
            }
        }
        return Ok((out, cum, false));
    }
    let best = AtomicUsize::new(usize::MAX);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| SearchError::Internal(e.to_string()))?;
    let results: Vec<PartitionResult<T>> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                if best.load(Ordering::Relaxed) < i {
                    return (Err(Stop::Cancelled), 0);
                }
                let mut c = Counter::with_cancel(limit, &best, i);
                let r = f(i, &mut c);
                if matches!(r, Ok((_, true))) {
                    best.fetch_min(i, Ordering::Relaxed);
                }
                (r, c.nodes)
            })
            .collect()
    });
    for (r, nodes) in results {
        match r {
            Ok((t, hit)) => {
                cum += nodes;
                if cum > limit {
                    return Err(exceeded());
                }
                out.push(t);
                if hit {
                    return Ok((out, cum, true));
                }
            }
            Err(Stop::Exceeded) => return Err(exceeded()),
            Err(Stop::Cancelled) => {
                return Err(SearchError::Internal(
                    "partition cancelled before a hit".into(),
                ))
            }
        }
    }
    Ok((out, cum, false))
}

/// Small dense integer matrix used inside the searches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct IMat {
    r: usize,
    c: usize,
    d: Vec<i128>,
}

impl IMat {
    fn from_matrix(m: &NonnegMatrix) -> Result<IMat, SearchError> {
        let d = m
            .entries()
            .iter()
            .map(|x| {
                if x.bits() > ENTRY_BITS {
                    Err(SearchError::Overflow(x.to_string()))
                } else {
                    Ok(x.to_i128().expect("fits"))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(IMat {
            r: m.nrows(),
            c: m.ncols(),
            d,
        })
    }

    fn at(&self, i: usize, j: usize) -> i128 {
        self.d[i * self.c + j]
    }

    fn mul(&self, o: &IMat) -> IMat {
        let mut d = vec![0; self.r * o.c];
        for i in 0..self.r {
            for k in 0..self.c {
                let x = self.at(i, k);
                if x != 0 {
                    for j in 0..o.c {
                        d[i * o.c + j] += x * o.at(k, j);
                    }
                }
            }
        }
        IMat {
            r: self.r,
            c: o.c,
            d,
        }
    }

    fn transpose(&self) -> IMat {
        IMat {
            r: self.c,
            c: self.r,
            d: (0..self.r * self.c)
                .map(|k| self.at(k % self.r, k / self.r))
                .collect(),
        }
    }

    fn perm(p: &[usize]) -> IMat {
        let n = p.len();
        let mut d = vec![0; n * n];
        for (i, &pi) in p.iter().enumerate() {
            d[i * n + pi] = 1;
        }
        IMat { r: n, c: n, d }
    }

    fn row_max(&self, i: usize) -> i128 {
        (0..self.c).map(|j| self.at(i, j)).max().unwrap_or(0)
    }

    fn col_max(&self, j: usize) -> i128 {
        (0..self.r).map(|i| self.at(i, j)).max().unwrap_or(0)
    }

    fn max(&self) -> i128 {
        self.d.iter().copied().max().unwrap_or(0)
    }

    fn essential(&self) -> bool {
        (0..self.r).all(|i| self.row_max(i) > 0) && (0..self.c).all(|j| self.col_max(j) > 0)
    }

    fn to_matrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<NonnegMatrix, SearchError> {
        let entries = self
            .d
            .iter()
            .map(|&x| {
                BigUint::try_from(x).map_err(|_| SearchError::Internal("negative entry".into()))
            })
            .collect::<Result<_, _>>()?;
        Ok(NonnegMatrix::new(rows.clone(), cols.clone(), entries)?)
    }
}

fn ensure_pair(a: &NonnegMatrix, b: &NonnegMatrix) -> Result<(), SearchError> {
    a.ensure_square()?;
    b.ensure_square()?;
    if !a.is_essential() {
        return Err(EquivError::NotEssential("A").into());
    }
    if !b.is_essential() {
        return Err(EquivError::NotEssential("B").into());
    }
    Ok(())
}

fn clamp(bound: u64) -> i128 {
    bound.min(1 << ENTRY_BITS) as i128
}

/// `R` (`n × k`, row-major variables) with `A R = R B`.
fn intertwiner_csp(a: &IMat, b: &IMat, ub: Vec<i128>) -> LinearCsp {
    let (n, k) = (a.r, b.r);
    let mut csp = LinearCsp::new(ub);
    for u in 0..n {
        for j in 0..k {
            let mut terms = Vec::new();
            for w in 0..n {
                terms.push((w * k + j, a.at(u, w)));
            }
            for l in 0..k {
                terms.push((u * k + l, -b.at(l, j)));
            }
            csp.add_eq(&terms, 0);
        }
    }
    csp
}

/// `S` (`k × n`, row-major variables) with `R S = P`, `S R = Q`, and,
/// when `intertwine` is given as `(B, A)`, also `B S = S A`.
fn second_factor_csp(
    r: &IMat,
    p: &IMat,
    q: &IMat,
    intertwine: Option<(&IMat, &IMat)>,
) -> LinearCsp {
    let (n, k) = (r.r, r.c);
    let ub = (0..k * n).map(|idx| p.col_max(idx % n)).collect();
    let mut csp = LinearCsp::new(ub);
    for u in 0..n {
        for v in 0..n {
            let terms: Vec<_> = (0..k).map(|j| (j * n + v, r.at(u, j))).collect();
            csp.add_eq(&terms, p.at(u, v));
        }
    }
    for j in 0..k {
        for l in 0..k {
            let terms: Vec<_> = (0..n).map(|v| (j * n + v, r.at(v, l))).collect();
            csp.add_eq(&terms, q.at(j, l));
        }
    }
    if let Some((b, a)) = intertwine {
        for j in 0..k {
            for v in 0..n {
                let mut terms: Vec<_> = (0..k).map(|l| (l * n + v, b.at(j, l))).collect();
                terms.extend((0..n).map(|u| (j * n + u, -a.at(u, v))));
                csp.add_eq(&terms, 0);
            }
        }
    }
    csp
}

fn first_solution(csp: &LinearCsp, counter: &mut Counter) -> Result<Option<Vec<i128>>, Stop> {
    let mut found = None;
    csp.solve(None, counter, &|_, _| true, &mut |x, _| {
        found = Some(x.to_vec());
        Ok(true)
    })?;
    Ok(found)
}

/// Lexicographically first `(R, S)` (row-major) with `A = RS`, `B = SR` and
/// `R` entries at most `entry_bound`.
pub fn search_elementary(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    budget: &SearchBudget,
    opts: &SearchOptions,
) -> Result<SearchReport<ElementaryStep>, SearchError> {
    budget.validate()?;
    ensure_pair(a, b)?;
    let (ia, ib) = (IMat::from_matrix(a)?, IMat::from_matrix(b)?);
    let (n, k) = (ia.r, ib.r);
    let bound = clamp(budget.entry_bound);
    // a nonzero row of S sits under every column of R, so R[u][j] ≤ max_v A[u][v]
    let ub: Vec<i128> = (0..n * k)
        .map(|idx| bound.min(ia.row_max(idx / k)))
        .collect();
    let parts = ub[0] as usize + 1;
    let csp = intertwiner_csp(&ia, &ib, ub);
    let (found, nodes, hit) = run_ordered(parts, budget.node_limit, opts, |i, counter| {
        let mut result = None;
        csp.solve(Some(i as i128), counter, &|_, _| true, &mut |x, counter| {
            let r = IMat {
                r: n,
                c: k,
                d: x.to_vec(),
            };
            if !r.essential() {
                return Ok(false);
            }
            let s_csp = second_factor_csp(&r, &ia, &ib, None);
            if let Some(s) = first_solution(&s_csp, counter)? {
                result = Some((r, IMat { r: k, c: n, d: s }));
                return Ok(true);
            }
            Ok(false)
        })?;
        let hit = result.is_some();
        Ok((result, hit))
    })?;
    opts.emit("elementary", nodes, 1, 0);
    if !hit {
        let bound_dominates = bound >= ia.max();
        return Ok(SearchReport {
            outcome: Outcome::Exhausted { bound_dominates },
            nodes,
        });
    }
    let (r, s) = found
        .into_iter()
        .flatten()
        .next()
        .expect("hit carries a result");
    let step = ElementaryStep {
        r: r.to_matrix(a.rows(), b.rows())?,
        s: s.to_matrix(b.rows(), a.rows())?,
    };
    if step.source()? != *a || step.target()? != *b {
        return Err(SearchError::Internal(
            "elementary step failed re-verification".into(),
        ));
    }
    Ok(SearchReport {
        outcome: Outcome::Found(step),
        nodes,
    })
}

/// Smallest lag first, then lexicographically first `R`, then `S`.
pub fn search_se_witness(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    budget: &SearchBudget,
    opts: &SearchOptions,
) -> Result<SearchReport<SeWitness>, SearchError> {
    budget.validate()?;
    ensure_pair(a, b)?;
    let (ia, ib) = (IMat::from_matrix(a)?, IMat::from_matrix(b)?);
    let (n, k) = (ia.r, ib.r);
    let bound = clamp(budget.entry_bound);
    let mut lags = Vec::new();
    let mut bound_dominates = true;
    let (mut pa, mut pb) = (ia.clone(), ib.clone());
    for m in 1..=budget.max_lag {
        if m > 1 {
            pa = pa.mul(&ia);
            pb = pb.mul(&ib);
            if pa.max() >= 1 << ENTRY_BITS || pb.max() >= 1 << ENTRY_BITS {
                return Err(SearchError::Overflow(format!("entries of A^{m} or B^{m}")));
            }
        }
        bound_dominates &= bound >= pa.max();
        let ub: Vec<i128> = (0..n * k)
            .map(|idx| bound.min(pa.row_max(idx / k)))
            .collect();
        let csp = intertwiner_csp(&ia, &ib, ub.clone());
        lags.push((m, pa.clone(), pb.clone(), csp, ub[0]));
    }
    let parts: Vec<(usize, i128)> = lags
        .iter()
        .enumerate()
        .flat_map(|(li, l)| (0..=l.4).map(move |v| (li, v)))
        .collect();
    let (found, nodes, hit) = run_ordered(parts.len(), budget.node_limit, opts, |i, counter| {
        let (li, v0) = parts[i];
        let (m, pa, pb, csp, _) = &lags[li];
        let mut result = None;
        csp.solve(Some(v0), counter, &|_, _| true, &mut |x, counter| {
            let r = IMat {
                r: n,
                c: k,
                d: x.to_vec(),
            };
            if !r.essential() {
                return Ok(false);
            }
            let s_csp = second_factor_csp(&r, pa, pb, Some((&ib, &ia)));
            if let Some(s) = first_solution(&s_csp, counter)? {
                result = Some((*m, r, IMat { r: k, c: n, d: s }));
                return Ok(true);
            }
            Ok(false)
        })?;
        let hit = result.is_some();
        Ok((result, hit))
    })?;
    opts.emit("se", nodes, budget.max_lag, 0);
    if !hit {
        return Ok(SearchReport {
            outcome: Outcome::Exhausted { bound_dominates },
            nodes,
        });
    }
    let (m, r, s) = found
        .into_iter()
        .flatten()
        .next()
        .expect("hit carries a result");
    let w = SeWitness {
        lag: m,
        r: r.to_matrix(a.rows(), b.rows())?,
        s: s.to_matrix(b.rows(), a.rows())?,
    };
    if !verify_se(a, b, &w)? {
        return Err(SearchError::Internal(
            "SE witness failed re-verification".into(),
        ));
    }
    Ok(SearchReport {
        outcome: Outcome::Found(w),
        nodes,
    })
}

struct Successor {
    canon: Vec<i128>,
    dim: usize,
    perm: Vec<usize>,
    r: IMat,
    s: IMat,
}

/// All essential `SR` over factorizations `M = RS` with inner dimension
/// `1..=max_inner_dim`, `R` columns non-increasing.
fn successors(
    m: &IMat,
    budget: &SearchBudget,
    target: &[i128],
    counter: &mut Counter,
) -> Result<(Vec<Successor>, bool), Stop> {
    let n = m.r;
    let bound = clamp(budget.entry_bound);
    let mut out = Vec::new();
    for k in 1..=budget.max_inner_dim {
        // column-major variables: index j * n + u
        let ub: Vec<i128> = (0..n * k)
            .map(|idx| bound.min(m.row_max(idx % n)))
            .collect();
        let r_csp = LinearCsp::new(ub);
        let ordered = move |x: &[i128], idx: usize| {
            let (j, u) = (idx / n, idx % n);
            if j == 0 {
                return true;
            }
            for p in 0..=u {
                let (cur, prev) = (x[j * n + p], x[(j - 1) * n + p]);
                if cur != prev {
                    return cur < prev;
                }
            }
            true
        };
        let mut hit = false;
        r_csp.solve(None, counter, &ordered, &mut |x, counter| {
            let r = IMat {
                r: n,
                c: k,
                d: (0..n * k).map(|idx| x[(idx % k) * n + idx / k]).collect(),
            };
            if !r.essential() {
                return Ok(false);
            }
            let s_csp = second_factor_csp_left(&r, m);
            let mut stop = false;
            s_csp.solve(None, counter, &|_, _| true, &mut |sx, _| {
                let s = IMat {
                    r: k,
                    c: n,
                    d: sx.to_vec(),
                };
                let sr = s.mul(&r);
                if !sr.essential() {
                    return Ok(false);
                }
                let (canon, perm) = canonical_form(k, &sr.d);
                let is_target = canon == target;
                out.push(Successor {
                    canon,
                    dim: k,
                    perm,
                    r: r.clone(),
                    s,
                });
                stop = is_target;
                Ok(is_target)
            })?;
            hit |= stop;
            Ok(stop)
        })?;
        if hit {
            return Ok((out, true));
        }
    }
    Ok((out, false))
}

/// `S` with `R S = M` only.
fn second_factor_csp_left(r: &IMat, m: &IMat) -> LinearCsp {
    let (n, k) = (r.r, r.c);
    let ub = (0..k * n).map(|idx| m.col_max(idx % n)).collect();
    let mut csp = LinearCsp::new(ub);
    for u in 0..n {
        for v in 0..n {
            let terms: Vec<_> = (0..k).map(|j| (j * n + v, r.at(u, j))).collect();
            csp.add_eq(&terms, m.at(u, v));
        }
    }
    csp
}

struct Node {
    canon: IMat,
    parent: usize,
    step: Option<(IMat, IMat, Vec<usize>)>,
}

/// Breadth-first search over elementary moves between permutation
/// canonical forms; the returned chain is shortest among chains whose
/// intermediate matrices have dimension at most `max_inner_dim`.
pub fn search_sse_chain(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    budget: &SearchBudget,
    opts: &SearchOptions,
) -> Result<SearchReport<SseChain>, SearchError> {
    budget.validate()?;
    ensure_pair(a, b)?;
    for x in [a, b] {
        if x.nrows() > MAX_CANONICAL_DIM {
            return Err(SearchError::InvalidBudget(format!(
                "matrices above dimension {MAX_CANONICAL_DIM}"
            )));
        }
    }
    let (ia, ib) = (IMat::from_matrix(a)?, IMat::from_matrix(b)?);
    let (ca, pa) = canonical_form(ia.r, &ia.d);
    let (cb, pb) = canonical_form(ib.r, &ib.d);
    if ia.r == ib.r && ca == cb {
        let steps = if a == b {
            Vec::new()
        } else {
            // B = T A Tᵀ with T = P_Bᵀ P_A; one step R = Tᵀ, S = T A
            let t = IMat::perm(&pb).transpose().mul(&IMat::perm(&pa));
            vec![ElementaryStep {
                r: t.transpose().to_matrix(a.rows(), b.rows())?,
                s: t.mul(&ia).to_matrix(b.rows(), a.rows())?,
            }]
        };
        return finish_chain(a, b, steps, 0);
    }
    let bound = clamp(budget.entry_bound);
    let mut bound_dominates = true;
    let mut nodes_store = vec![Node {
        canon: IMat {
            r: ia.r,
            c: ia.r,
            d: ca.clone(),
        },
        parent: 0,
        step: None,
    }];
    let mut visited: HashMap<Vec<i128>, usize> = HashMap::new();
    visited.insert(ca, 0);
    let mut frontier = vec![0usize];
    let mut total = 0u64;
    for depth in 1..=budget.max_depth {
        if frontier.is_empty() {
            break;
        }
        for &i in &frontier {
            bound_dominates &= bound >= nodes_store[i].canon.max();
        }
        let states: Vec<IMat> = frontier
            .iter()
            .map(|&i| nodes_store[i].canon.clone())
            .collect();
        let limit = budget.node_limit - total;
        let (expanded, nodes, _) = run_ordered(states.len(), limit, opts, |i, counter| {
            successors(&states[i], budget, &cb, counter)
        })
        .map_err(|e| match e {
            SearchError::BudgetExceeded { .. } => SearchError::BudgetExceeded {
                limit: budget.node_limit,
            },
            other => other,
        })?;
        total += nodes;
        let mut next = Vec::new();
        for (fi, succs) in expanded.into_iter().enumerate() {
            for s in succs {
                // n² entries determine n, so the vector alone identifies the state
                if visited.contains_key(&s.canon) {
                    continue;
                }
                let idx = nodes_store.len();
                let is_target = s.dim == ib.r && s.canon == cb;
                visited.insert(s.canon.clone(), idx);
                nodes_store.push(Node {
                    canon: IMat {
                        r: s.dim,
                        c: s.dim,
                        d: s.canon,
                    },
                    parent: frontier[fi],
                    step: Some((s.r, s.s, s.perm)),
                });
                if is_target {
                    opts.emit("sse", total, depth, next.len());
                    let steps = rebuild_chain(a, b, &nodes_store, idx, &pa, &pb)?;
                    return finish_chain(a, b, steps, total);
                }
                next.push(idx);
            }
        }
        opts.emit("sse", total, depth, next.len());
        frontier = next;
    }
    Ok(SearchReport {
        outcome: Outcome::Exhausted { bound_dominates },
        nodes: total,
    })
}

fn rebuild_chain(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    store: &[Node],
    goal: usize,
    pa: &[usize],
    pb: &[usize],
) -> Result<Vec<ElementaryStep>, SearchError> {
    let mut path = Vec::new();
    let mut cur = goal;
    while cur != 0 {
        path.push(cur);
        cur = store[cur].parent;
    }
    path.reverse();
    let mut q = IMat::perm(pa);
    let mut labels = a.rows().clone();
    let mut steps = Vec::new();
    for (pos, &idx) in path.iter().enumerate() {
        let (r, s, p) = store[idx].step.as_ref().expect("non-root node has a step");
        let mut r2 = q.transpose().mul(r);
        let mut s2 = s.mul(&q);
        let next_labels = if pos + 1 == path.len() {
            let t = IMat::perm(p).transpose().mul(&IMat::perm(pb));
            r2 = r2.mul(&t);
            s2 = t.transpose().mul(&s2);
            b.rows().clone()
        } else {
            IndexSet::range(r.c)
        };
        steps.push(ElementaryStep {
            r: r2.to_matrix(&labels, &next_labels)?,
            s: s2.to_matrix(&next_labels, &labels)?,
        });
        q = IMat::perm(p);
        labels = next_labels;
    }
    Ok(steps)
}

fn finish_chain(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    steps: Vec<ElementaryStep>,
    nodes: u64,
) -> Result<SearchReport<SseChain>, SearchError> {
    let chain = SseChain {
        start: a.clone(),
        steps,
    };
    if chain.validate()? != *b {
        return Err(SearchError::Internal(
            "SSE chain failed re-verification".into(),
        ));
    }
    Ok(SearchReport {
        outcome: Outcome::Found(chain),
        nodes,
    })
}

/// Lexicographically first quadruple `(ψ_A, ψ_B, φ_R, φ_S)`, each compared
/// by its forward table, that makes `w` a compatible shift equivalence.
pub fn search_compatible_iso(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    w: &SeWitness,
    budget: &SearchBudget,
    opts: &SearchOptions,
) -> Result<SearchReport<CseWitness>, SearchError> {
    budget.validate()?;
    if !verify_se(a, b, w)? {
        return Err(EquivError::InvalidUnderlyingSe.into());
    }
    let (r, s, m) = (&w.r, &w.s, w.lag);
    let spec = |f: &[&NonnegMatrix]| PathSpaceSpec::new(f.iter().map(|x| (*x).clone()).collect());
    let space =
        |f: &[&NonnegMatrix]| -> Result<Arc<PathSpace>, IsoError> { Ok(PathSpace::new(spec(f)?)?) };
    let psi_a_dom = space(&[r, s])?;
    let psi_a_cod = PathSpace::new(PathSpaceSpec::repeated(a, m)?)?;
    let psi_b_dom = space(&[s, r])?;
    let psi_b_cod = PathSpace::new(PathSpaceSpec::repeated(b, m)?)?;
    let phi_r_spaces = (space(&[a, r])?, space(&[r, b])?);
    let phi_s_spaces = (space(&[b, s])?, space(&[s, a])?);
    let cand_a = block_candidates(&psi_a_dom, &psi_a_cod);
    let cand_b = block_candidates(&psi_b_dom, &psi_b_cod);
    let first_choices = cand_a.first().cloned().unwrap_or_default();

    let solve_phi =
        |target: PathIso, spaces: &(Arc<PathSpace>, Arc<PathSpace>), counter: &mut Counter| {
            if m == 1 {
                return Ok(Some(target));
            }
            StaircaseProblem::new(spaces.0.clone(), spaces.1.clone(), &target, m).solve(counter)
        };
    let internal = std::sync::Mutex::new(None::<SearchError>);
    let (found, nodes, hit) = run_ordered(
        first_choices.len(),
        budget.node_limit,
        opts,
        |i, counter| {
            let mut result = None;
            enumerate_bijections(
                &cand_a,
                psi_a_cod.len(),
                Some(first_choices[i]),
                counter,
                &mut |fa, counter| {
                    let psi_a =
                        PathIso::from_forward(psi_a_dom.clone(), psi_a_cod.clone(), fa.to_vec());
                    enumerate_bijections(
                        &cand_b,
                        psi_b_cod.len(),
                        None,
                        counter,
                        &mut |fb, counter| {
                            let psi_b = PathIso::from_forward(
                                psi_b_dom.clone(),
                                psi_b_cod.clone(),
                                fb.to_vec(),
                            );
                            let targets = compat_rhs(r, &psi_a, &psi_b)
                                .and_then(|tr| Ok((tr, compat_rhs(s, &psi_b, &psi_a)?)));
                            let (tr, ts) = match targets {
                                Ok(t) => t,
                                Err(e) => {
                                    *internal.lock().expect("poisoned") = Some(e.into());
                                    return Ok(true);
                                }
                            };
                            let Some(phi_r) = solve_phi(tr, &phi_r_spaces, counter)? else {
                                return Ok(false);
                            };
                            let Some(phi_s) = solve_phi(ts, &phi_s_spaces, counter)? else {
                                return Ok(false);
                            };
                            result = Some((psi_a.clone(), psi_b, phi_r, phi_s));
                            Ok(true)
                        },
                    )
                },
            )?;
            let hit = result.is_some();
            Ok((result, hit))
        },
    )?;
    if let Some(e) = internal.into_inner().expect("poisoned") {
        return Err(e);
    }
    opts.emit("cse", nodes, m, 0);
    if !hit {
        return Ok(SearchReport {
            outcome: Outcome::Exhausted {
                bound_dominates: true,
            },
            nodes,
        });
    }
    let (psi_a, psi_b, phi_r, phi_s) = found
        .into_iter()
        .flatten()
        .next()
        .expect("hit carries a result");
    let c = CseWitness {
        se: w.clone(),
        phi_r,
        phi_s,
        psi_a,
        psi_b,
    };
    if !verify_cse(a, b, &c)? {
        return Err(SearchError::Internal(
            "CSE witness failed re-verification".into(),
        ));
    }
    Ok(SearchReport {
        outcome: Outcome::Found(c),
        nodes,
    })
}
