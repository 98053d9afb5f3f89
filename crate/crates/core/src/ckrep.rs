//! Cuntz–Krieger families built from a compatible shift equivalence,
//! simulated on a finite basis of paths in the bipartite graph `G_D`.
//!
//! The operators act on one-sided infinite paths. A finite path `x` stands
//! for the cylinder of all its extensions, and each operator reports what is
//! determined on that cylinder: the whole cylinder is annihilated
//! ([`Entry::Zero`]), it is mapped into the cylinder of a path `y`
//! ([`Entry::To`]), or the truncation hides which case applies
//! ([`Entry::Unknown`]). Relations are then compared on common prefixes, so
//! a reported failure is a genuine failure of the infinite operators.
//!
//! Basis vectors are all paths of length `0..=L` with an explicit start
//! vertex; images longer than `L` are cut back to `L` edges.

use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use rustc_hash::FxHashMap;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::equiv::{verify_cse, CseWitness, EquivError};
use crate::iso::PathIso;
use crate::matrix::{NonnegMatrix, LEFT_PREFIX, RIGHT_PREFIX};
use crate::paths::{edge_set, Edge, PathError};

/// Refuse to materialize bases larger than this.
pub const MAX_BASIS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CkError {
    #[error("depth {depth} is below 2m = {needed}")]
    InsufficientDepth { depth: usize, needed: usize },
    #[error("depth must be a positive even integer, got {0}")]
    BadDepth(usize),
    #[error("path does not alternate R and S edges from a V vertex")]
    NotAlternating,
    #[error("path has odd length")]
    OddLength,
    #[error("word length is not a multiple of the lag")]
    Unblockable,
    #[error("truncated basis would exceed {MAX_BASIS} vectors")]
    TooLarge,
    #[error("witness does not verify as a compatible shift equivalence")]
    InvalidWitness,
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    V(usize),
    W(usize),
}

/// An edge of `G_D`: `R` edges run from `V` to `W`, `S` edges back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DEdge {
    R(Edge),
    S(Edge),
}

impl DEdge {
    pub fn source(&self) -> Vertex {
        match self {
            DEdge::R(e) => Vertex::V(e.source),
            DEdge::S(e) => Vertex::W(e.source),
        }
    }

    pub fn range(&self) -> Vertex {
        match self {
            DEdge::R(e) => Vertex::W(e.range),
            DEdge::S(e) => Vertex::V(e.range),
        }
    }
}

/// An edge of `G_C`: `A` edges on `V`, `B` edges on `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CEdge {
    A(Edge),
    B(Edge),
}

impl CEdge {
    pub fn source(&self) -> Vertex {
        match self {
            CEdge::A(e) => Vertex::V(e.source),
            CEdge::B(e) => Vertex::W(e.source),
        }
    }

    pub fn range(&self) -> Vertex {
        match self {
            CEdge::A(e) => Vertex::V(e.range),
            CEdge::B(e) => Vertex::W(e.range),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DPath {
    pub start: Vertex,
    pub edges: Vec<DEdge>,
}

impl DPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn truncated(mut self, depth: usize) -> DPath {
        self.edges.truncate(depth);
        self
    }

    /// Whether one path is a prefix of the other.
    pub fn comparable(&self, other: &DPath) -> bool {
        let k = self.len().min(other.len());
        self.start == other.start && self.edges[..k] == other.edges[..k]
    }
}

/// A root of unity `exp(2πi · num/den)`, kept reduced with `0 ≤ num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Angle {
    num: u64,
    den: u64,
}

impl Angle {
    pub const ONE: Angle = Angle { num: 0, den: 1 };

    pub fn new(num: i64, den: u64) -> Angle {
        assert!(den > 0, "angle denominator must be positive");
        let n = num.rem_euclid(den as i64) as u64;
        let g = n.gcd(&den);
        Angle {
            num: n / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn conj(self) -> Angle {
        Angle::new(-(self.num as i64), self.den)
    }

    pub fn pow(self, k: usize) -> Angle {
        Angle::new(
            ((self.num as u128 * k as u128) % self.den as u128) as i64,
            self.den,
        )
    }
}

impl std::ops::Mul for Angle {
    type Output = Angle;

    fn mul(self, other: Angle) -> Angle {
        if other.num == 0 {
            return self;
        }
        if self.num == 0 {
            return other;
        }
        let den = self.den.lcm(&other.den);
        let num = self.num * (den / self.den) + other.num * (den / other.den);
        Angle::new((num % den) as i64, den)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Angle, String> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| format!("expected P/Q, got {s:?}"))?;
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: u64 = d
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in {s:?}"))?;
        if d == 0 {
            return Err("denominator must be positive".into());
        }
        Ok(Angle::new(n, d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Zero,
    Unknown,
    To { index: usize, weight: Angle },
}

/// Forward and adjoint action on the basis, one entry per basis vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialWeightedMap {
    pub forward: Vec<Entry>,
    pub adjoint: Vec<Entry>,
}

impl PartialWeightedMap {
    fn reweight(&mut self, w: Angle) {
        for (table, z) in [(&mut self.forward, w), (&mut self.adjoint, w.conj())] {
            for e in table.iter_mut() {
                if let Entry::To { weight, .. } = e {
                    *weight = *weight * z;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    P(Vertex),
    S(CEdge),
    T(DEdge),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub kind: OpKind,
    pub label: String,
    pub map: PartialWeightedMap,
}

/// Lookup tables for `ψ_A` and `φ_S`, the only isomorphisms the
/// construction needs.
struct Tables {
    lag: usize,
    psi_a: FxHashMap<(Edge, Edge), Vec<Edge>>,
    psi_a_inv: FxHashMap<Vec<Edge>, (Edge, Edge)>,
    phi_s: FxHashMap<(Edge, Edge), (Edge, Edge)>,
    phi_s_inv: FxHashMap<(Edge, Edge), (Edge, Edge)>,
}

fn pair_table(f: &PathIso) -> Vec<(Vec<Edge>, Vec<Edge>)> {
    (0..f.len())
        .map(|i| {
            (
                f.domain().path(i).0.clone(),
                f.codomain().path(f.apply_index(i)).0.clone(),
            )
        })
        .collect()
}

impl Tables {
    fn new(c: &CseWitness) -> Tables {
        let mut t = Tables {
            lag: c.lag(),
            psi_a: FxHashMap::default(),
            psi_a_inv: FxHashMap::default(),
            phi_s: FxHashMap::default(),
            phi_s_inv: FxHashMap::default(),
        };
        for (d, w) in pair_table(&c.psi_a) {
            t.psi_a.insert((d[0], d[1]), w.clone());
            t.psi_a_inv.insert(w, (d[0], d[1]));
        }
        for (d, w) in pair_table(&c.phi_s) {
            t.phi_s.insert((d[0], d[1]), (w[0], w[1]));
            t.phi_s_inv.insert((w[0], w[1]), (d[0], d[1]));
        }
        t
    }

    /// `ψ_A^∞` on the complete `rs` pairs of a path starting in `V`.
    fn encode_into(&self, edges: &[DEdge], out: &mut Vec<Edge>) {
        for pair in edges.chunks_exact(2) {
            match pair {
                [DEdge::R(r), DEdge::S(s)] => out.extend_from_slice(&self.psi_a[&(*r, *s)]),
                _ => unreachable!("paths from V alternate R, S"),
            }
        }
    }

    /// Inverse of `ψ_A^∞` on the complete `m`-blocks of `word`.
    fn decode_into(&self, word: &[Edge], out: &mut Vec<DEdge>) {
        for block in word.chunks_exact(self.lag) {
            let (r, s) = self.psi_a_inv[block];
            out.push(DEdge::R(r));
            out.push(DEdge::S(s));
        }
    }
}

/// A Cuntz–Krieger family for `G_C` and one for `G_D` sharing projections.
#[derive(Debug, Clone)]
pub struct Representation {
    pub depth: usize,
    pub lag: usize,
    pub basis: Vec<DPath>,
    pub projections: Vec<Operator>,
    /// `S_c` for `c` in `E_A` then `E_B`.
    pub s_ops: Vec<Operator>,
    /// `T_d` for `d` in `E_R` then `E_S`.
    pub t_ops: Vec<Operator>,
    index: PathIndex,
    vertex_labels: HashMap<Vertex, String>,
    warnings: Vec<String>,
}

fn vertices(a: &NonnegMatrix, b: &NonnegMatrix) -> Vec<Vertex> {
    (0..a.nrows())
        .map(Vertex::V)
        .chain((0..b.nrows()).map(Vertex::W))
        .collect()
}

/// Basis positions as a trie: paths from each vertex are laid out layer by
/// layer, so the children of a path are contiguous.
#[derive(Debug, Clone)]
struct PathIndex {
    depth: usize,
    roots: Vec<(Vertex, std::ops::Range<usize>)>,
    first_child: Vec<usize>,
    slot: FxHashMap<DEdge, usize>,
}

impl PathIndex {
    fn root(&self, v: Vertex) -> Option<&std::ops::Range<usize>> {
        self.roots.iter().find(|(u, _)| *u == v).map(|(_, r)| r)
    }

    /// Position of the path `start · edges`, truncated to the depth. The
    /// path must be valid; [`Representation::index_of`] checks that.
    fn find(&self, start: Vertex, edges: &[DEdge]) -> usize {
        let mut i = self.root(start).expect("known vertex").start;
        for d in edges.iter().take(self.depth) {
            i = self.first_child[i] + self.slot[d];
        }
        i
    }
}

fn enumerate_basis(
    verts: &[Vertex],
    d_edges: &[DEdge],
    depth: usize,
) -> Result<(Vec<DPath>, PathIndex), CkError> {
    let mut out_edges: HashMap<Vertex, Vec<DEdge>> = HashMap::new();
    let mut slot = FxHashMap::default();
    for d in d_edges {
        let list = out_edges.entry(d.source()).or_default();
        slot.insert(*d, list.len());
        list.push(*d);
    }
    let mut basis = Vec::new();
    let mut first_child = Vec::new();
    let mut roots = Vec::new();
    for &v in verts {
        let from = basis.len();
        let mut layer = vec![DPath {
            start: v,
            edges: Vec::new(),
        }];
        for len in 0..=depth {
            let next_start = basis.len() + layer.len();
            let mut next = Vec::new();
            for p in &layer {
                first_child.push(next_start + next.len());
                if len < depth {
                    let end = p.edges.last().map_or(p.start, |e| e.range());
                    for d in out_edges.get(&end).into_iter().flatten() {
                        let mut q = p.clone();
                        q.edges.push(*d);
                        next.push(q);
                    }
                }
            }
            basis.extend(layer);
            if basis.len() > MAX_BASIS {
                return Err(CkError::TooLarge);
            }
            layer = next;
        }
        roots.push((v, from..basis.len()));
    }
    let index = PathIndex {
        depth,
        roots,
        first_child,
        slot,
    };
    Ok((basis, index))
}

/// Blockwise `ψ_A` on an alternating path `r_0 s_0 .. r_{k-1} s_{k-1}`.
pub fn psi_a_infinity(c: &CseWitness, x: &[DEdge]) -> Result<Vec<Edge>, CkError> {
    if x.len() % 2 == 1 {
        return Err(CkError::OddLength);
    }
    for (i, d) in x.iter().enumerate() {
        let ok = matches!((i % 2, d), (0, DEdge::R(_)) | (1, DEdge::S(_)));
        if !ok || (i > 0 && x[i - 1].range() != d.source()) {
            return Err(CkError::NotAlternating);
        }
    }
    let mut out = Vec::new();
    Tables::new(c).encode_into(x, &mut out);
    Ok(out)
}

/// Inverse of [`psi_a_infinity`]; the word must consist of whole `m`-blocks.
pub fn psi_a_infinity_inv(c: &CseWitness, w: &[Edge]) -> Result<Vec<DEdge>, CkError> {
    let t = Tables::new(c);
    if !w.len().is_multiple_of(t.lag) {
        return Err(CkError::Unblockable);
    }
    w.chunks_exact(t.lag)
        .map(|b| {
            t.psi_a_inv
                .get(b)
                .map(|&(r, s)| [DEdge::R(r), DEdge::S(s)])
                .ok_or(CkError::NotAlternating)
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.concat())
}

enum Img {
    Zero,
    Unknown,
    /// A path from this vertex; the edges are in the builder's output buffer.
    Path(Vertex),
}

struct Builder<'a> {
    t: &'a Tables,
    word: Vec<Edge>,
    out: Vec<DEdge>,
}

impl Builder<'_> {
    fn s_a(&mut self, a: Edge, x: &DPath) -> Img {
        if x.start != Vertex::V(a.range) {
            return Img::Zero;
        }
        self.word.clear();
        self.word.push(a);
        self.t.encode_into(&x.edges, &mut self.word);
        self.out.clear();
        self.t.decode_into(&self.word, &mut self.out);
        Img::Path(Vertex::V(a.source))
    }

    fn s_a_adj(&mut self, a: Edge, y: &DPath) -> Img {
        if y.start != Vertex::V(a.source) {
            return Img::Zero;
        }
        self.word.clear();
        self.t.encode_into(&y.edges, &mut self.word);
        match self.word.first() {
            None => Img::Unknown,
            Some(first) if *first != a => Img::Zero,
            Some(_) => {
                self.out.clear();
                self.t.decode_into(&self.word[1..], &mut self.out);
                Img::Path(Vertex::V(a.range))
            }
        }
    }

    /// `S_b(s_0 x') = s' S_{a'}(x')` where `φ_S(b s_0) = s' a'`.
    fn s_b(&mut self, b: Edge, x: &DPath) -> Img {
        if x.start != Vertex::W(b.range) {
            return Img::Zero;
        }
        self.out.clear();
        let Some(DEdge::S(s0)) = x.edges.first() else {
            return Img::Path(Vertex::W(b.source));
        };
        let (s1, a1) = self.t.phi_s[&(b, *s0)];
        self.word.clear();
        self.word.push(a1);
        self.t.encode_into(&x.edges[1..], &mut self.word);
        self.out.push(DEdge::S(s1));
        self.t.decode_into(&self.word, &mut self.out);
        Img::Path(Vertex::W(b.source))
    }

    fn s_b_adj(&mut self, b: Edge, y: &DPath) -> Img {
        if y.start != Vertex::W(b.source) {
            return Img::Zero;
        }
        let Some(DEdge::S(s1)) = y.edges.first() else {
            return Img::Unknown;
        };
        self.word.clear();
        self.t.encode_into(&y.edges[1..], &mut self.word);
        let Some(a1) = self.word.first() else {
            return Img::Unknown;
        };
        let (b2, s0) = self.t.phi_s_inv[&(*s1, *a1)];
        if b2 != b {
            return Img::Zero;
        }
        self.out.clear();
        self.out.push(DEdge::S(s0));
        self.t.decode_into(&self.word[1..], &mut self.out);
        Img::Path(Vertex::W(b.range))
    }

    fn t_d(&mut self, d: DEdge, x: &DPath) -> Img {
        if x.start != d.range() {
            return Img::Zero;
        }
        self.out.clear();
        self.out.push(d);
        self.out.extend_from_slice(&x.edges);
        Img::Path(d.source())
    }

    fn t_d_adj(&mut self, d: DEdge, y: &DPath) -> Img {
        if y.start != d.source() {
            return Img::Zero;
        }
        match y.edges.first() {
            None => Img::Unknown,
            Some(e) if *e != d => Img::Zero,
            Some(_) => {
                self.out.clear();
                self.out.extend_from_slice(&y.edges[1..]);
                Img::Path(d.range())
            }
        }
    }

    fn entry(&self, img: Img, index: &PathIndex) -> Entry {
        match img {
            Img::Zero => Entry::Zero,
            Img::Unknown => Entry::Unknown,
            Img::Path(start) => Entry::To {
                index: index.find(start, &self.out),
                weight: Angle::ONE,
            },
        }
    }
}

/// Builds `P_v`, `S_c` (`c ∈ E_A ⊔ E_B`) and `T_d` (`d ∈ E_R ⊔ E_S`) on the
/// paths of length at most `depth` in `G_D`, all weights 1.
pub fn build_representation(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    c: &CseWitness,
    depth: usize,
) -> Result<Representation, CkError> {
    if depth == 0 || depth % 2 == 1 {
        return Err(CkError::BadDepth(depth));
    }
    if depth < 2 * c.lag() {
        return Err(CkError::InsufficientDepth {
            depth,
            needed: 2 * c.lag(),
        });
    }
    if !verify_cse(a, b, c)? {
        return Err(CkError::InvalidWitness);
    }
    let tables = Tables::new(c);
    let verts = vertices(a, b);
    let a_edges: Vec<CEdge> = edge_set(a)?.into_iter().map(CEdge::A).collect();
    let b_edges: Vec<CEdge> = edge_set(b)?.into_iter().map(CEdge::B).collect();
    let r_edges: Vec<DEdge> = edge_set(&c.se.r)?.into_iter().map(DEdge::R).collect();
    let s_edges: Vec<DEdge> = edge_set(&c.se.s)?.into_iter().map(DEdge::S).collect();
    let d_edges: Vec<DEdge> = r_edges.iter().chain(&s_edges).copied().collect();
    let (basis, index) = enumerate_basis(&verts, &d_edges, depth)?;
    let mut builder = Builder {
        t: &tables,
        word: Vec::new(),
        out: Vec::new(),
    };

    let mut vertex_labels = HashMap::new();
    for (i, l) in a.rows().labels().iter().enumerate() {
        vertex_labels.insert(Vertex::V(i), format!("{LEFT_PREFIX}{l}"));
    }
    for (i, l) in b.rows().labels().iter().enumerate() {
        vertex_labels.insert(Vertex::W(i), format!("{RIGHT_PREFIX}{l}"));
    }
    let edge_label = |kind: &str, e: &Edge, rows: &NonnegMatrix| {
        format!(
            "{kind}[{},{},{}]",
            rows.rows().label(e.source),
            rows.cols().label(e.range),
            e.ordinal
        )
    };

    type Act<'b> = &'b dyn Fn(&mut Builder, &DPath) -> Img;
    let mut table = |f: Act, g: Act| {
        let mut run = |h: Act| -> Vec<Entry> {
            basis
                .iter()
                .map(|x| {
                    let img = h(&mut builder, x);
                    builder.entry(img, &index)
                })
                .collect()
        };
        PartialWeightedMap {
            forward: run(f),
            adjoint: run(g),
        }
    };

    let projections = verts
        .iter()
        .map(|&v| {
            let diagonal: Vec<Entry> = basis
                .iter()
                .enumerate()
                .map(|(i, x)| match x.start == v {
                    true => Entry::To {
                        index: i,
                        weight: Angle::ONE,
                    },
                    false => Entry::Zero,
                })
                .collect();
            Operator {
                kind: OpKind::P(v),
                label: format!("P[{}]", vertex_labels[&v]),
                map: PartialWeightedMap {
                    forward: diagonal.clone(),
                    adjoint: diagonal,
                },
            }
        })
        .collect();
    let s_ops = a_edges
        .iter()
        .chain(&b_edges)
        .map(|&ce| {
            let (label, map) = match ce {
                CEdge::A(e) => (
                    edge_label("S_A", &e, a),
                    table(&|k, x| k.s_a(e, x), &|k, y| k.s_a_adj(e, y)),
                ),
                CEdge::B(e) => (
                    edge_label("S_B", &e, b),
                    table(&|k, x| k.s_b(e, x), &|k, y| k.s_b_adj(e, y)),
                ),
            };
            Operator {
                kind: OpKind::S(ce),
                label,
                map,
            }
        })
        .collect();
    let t_ops = d_edges
        .iter()
        .map(|&d| {
            let label = match d {
                DEdge::R(e) => edge_label("T_R", &e, &c.se.r),
                DEdge::S(e) => edge_label("T_S", &e, &c.se.s),
            };
            Operator {
                kind: OpKind::T(d),
                label,
                map: table(&|k, x| k.t_d(d, x), &|k, y| k.t_d_adj(d, y)),
            }
        })
        .collect();
    Ok(Representation {
        depth,
        lag: c.lag(),
        basis,
        projections,
        s_ops,
        t_ops,
        index,
        vertex_labels,
        warnings: Vec::new(),
    })
}

/// Multiplies every `S_c` by `z` and every `T_d` with `d ∈ E_S` by `z^m`.
pub fn twist_representation(rep: &Representation, z: Angle) -> Representation {
    let mut out = rep.clone();
    for op in &mut out.s_ops {
        op.map.reweight(z);
    }
    let zm = z.pow(rep.lag);
    for op in &mut out.t_ops {
        if matches!(op.kind, OpKind::T(DEdge::S(_))) {
            op.map.reweight(zm);
        }
    }
    out
}

/// A factor in an operator word: which operator, and whether adjointed.
type Factor<'a> = (&'a Operator, bool);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Zero,
    Unknown,
    At(usize, Angle),
}

/// Outcome of checking a family of relations on the admissible basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub holds: bool,
    pub checked: usize,
    pub skipped_unknown: usize,
    pub vacuous: bool,
    pub failures: Vec<String>,
}

impl RelationReport {
    fn new() -> Self {
        RelationReport {
            holds: true,
            checked: 0,
            skipped_unknown: 0,
            vacuous: false,
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, msg: String) {
        self.holds = false;
        if self.failures.len() < 10 {
            self.failures.push(msg);
        }
    }

    fn finish(mut self) -> Self {
        if self.checked == 0 {
            self.vacuous = true;
        }
        self
    }

    fn merge(&mut self, other: RelationReport) {
        self.holds &= other.holds;
        self.checked += other.checked;
        self.skipped_unknown += other.skipped_unknown;
        for f in other.failures {
            if self.failures.len() < 10 {
                self.failures.push(f);
            }
        }
    }
}

impl Representation {
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn index_of(&self, p: &DPath) -> Option<usize> {
        self.index.root(p.start)?;
        let mut end = p.start;
        for d in &p.edges {
            if d.source() != end || !self.index.slot.contains_key(d) {
                return None;
            }
            end = d.range();
        }
        (p.len() <= self.depth).then(|| self.index.find(p.start, &p.edges))
    }

    pub fn all_operators(&self) -> impl Iterator<Item = &Operator> {
        self.projections
            .iter()
            .chain(&self.s_ops)
            .chain(&self.t_ops)
    }

    pub fn projection(&self, v: Vertex) -> &Operator {
        self.projections
            .iter()
            .find(|o| o.kind == OpKind::P(v))
            .expect("every vertex has a projection")
    }

    pub fn s_op(&self, c: CEdge) -> Option<&Operator> {
        self.s_ops.iter().find(|o| o.kind == OpKind::S(c))
    }

    pub fn t_op(&self, d: DEdge) -> Option<&Operator> {
        self.t_ops.iter().find(|o| o.kind == OpKind::T(d))
    }

    fn vertices(&self) -> Vec<Vertex> {
        self.projections
            .iter()
            .map(|o| match o.kind {
                OpKind::P(v) => v,
                _ => unreachable!(),
            })
            .collect()
    }

    /// Applies a word right to left, as in operator notation.
    fn apply(&self, word: &[Factor], x: usize) -> Val {
        let mut cur = Val::At(x, Angle::ONE);
        for (op, adj) in word.iter().rev() {
            let Val::At(i, w) = cur else { return cur };
            let table = if *adj {
                &op.map.adjoint
            } else {
                &op.map.forward
            };
            cur = match table[i] {
                Entry::Zero => Val::Zero,
                Entry::Unknown => Val::Unknown,
                Entry::To { index, weight } => Val::At(index, w * weight),
            };
        }
        cur
    }

    fn agree(&self, lhs: Val, rhs: Val) -> Option<bool> {
        match (lhs, rhs) {
            (Val::Unknown, _) | (_, Val::Unknown) => None,
            (Val::Zero, Val::Zero) => Some(true),
            (Val::At(i, w), Val::At(j, u)) => {
                Some(w == u && self.basis[i].comparable(&self.basis[j]))
            }
            _ => Some(false),
        }
    }

    fn describe(&self, v: Val) -> String {
        match v {
            Val::Zero => "0".into(),
            Val::Unknown => "?".into(),
            Val::At(i, w) => format!("{} (weight {w})", self.path_label(i)),
        }
    }

    pub fn path_label(&self, i: usize) -> String {
        let p = &self.basis[i];
        let mut s = self.vertex_labels[&p.start].clone();
        for e in &p.edges {
            let (k, e) = match e {
                DEdge::R(e) => ("r", e),
                DEdge::S(e) => ("s", e),
            };
            s.push_str(&format!(" {k}{e}"));
        }
        s
    }

    fn admissible(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.basis.len()).filter(move |&i| self.basis[i].len() >= margin)
    }

    /// Admissible basis vectors starting at `v`.
    fn admissible_at(&self, v: Vertex, margin: usize) -> impl Iterator<Item = usize> + '_ {
        self.index
            .root(v)
            .cloned()
            .unwrap_or(0..0)
            .filter(move |&i| self.basis[i].len() >= margin)
    }

    /// Every forward table vanishes off its range vertex and every adjoint
    /// off its source vertex. Given this, a word is zero on basis vectors
    /// not starting at the domain of its rightmost factor, so relations only
    /// need checking there.
    fn check_support(&self) -> RelationReport {
        let mut rep = RelationReport::new();
        for op in self.all_operators() {
            for adj in [false, true] {
                let dom = domain(&(op, adj));
                let table = if adj {
                    &op.map.adjoint
                } else {
                    &op.map.forward
                };
                for (v, range) in &self.index.roots {
                    if *v == dom {
                        continue;
                    }
                    if let Some(i) = range.clone().find(|&i| table[i] != Entry::Zero) {
                        let star = if adj { "*" } else { "" };
                        rep.fail(format!(
                            "{}{star} is nonzero at {} outside its domain",
                            op.label,
                            self.path_label(i)
                        ));
                    }
                }
            }
        }
        rep
    }

    fn check_equal(
        &self,
        name: &str,
        lhs: &[Factor],
        rhs: &[Factor],
        margin: usize,
        rep: &mut RelationReport,
    ) {
        let (dl, dr) = (domain(&lhs[lhs.len() - 1]), domain(&rhs[rhs.len() - 1]));
        let starts = if dl == dr { vec![dl] } else { vec![dl, dr] };
        let xs = starts
            .into_iter()
            .flat_map(|v| self.admissible_at(v, margin));
        for x in xs {
            let (l, r) = (self.apply(lhs, x), self.apply(rhs, x));
            match self.agree(l, r) {
                None => rep.skipped_unknown += 1,
                Some(true) => rep.checked += 1,
                Some(false) => {
                    rep.checked += 1;
                    rep.fail(format!(
                        "{name} at {}: {} vs {}",
                        self.path_label(x),
                        self.describe(l),
                        self.describe(r)
                    ));
                }
            }
        }
    }

    /// `Σ_{s(e)=v} X_e X_e^* = P_v`, using that each term is a diagonal
    /// projection on the basis: exactly one term may be nonzero.
    fn check_sum(
        &self,
        name: &str,
        v: Vertex,
        ops: &[&Operator],
        margin: usize,
        rep: &mut RelationReport,
    ) {
        let p = self.projection(v);
        for x in self.admissible_at(v, margin) {
            let target = self.apply(&[(p, false)], x);
            let terms: Vec<Val> = ops
                .iter()
                .map(|op| self.apply(&[(op, false), (op, true)], x))
                .collect();
            if terms.contains(&Val::Unknown) {
                rep.skipped_unknown += 1;
                continue;
            }
            rep.checked += 1;
            let nonzero: Vec<Val> = terms.into_iter().filter(|t| *t != Val::Zero).collect();
            let ok = match target {
                Val::Zero => nonzero.is_empty(),
                _ => nonzero.len() == 1 && self.agree(nonzero[0], target) == Some(true),
            };
            if !ok {
                rep.fail(format!(
                    "{name} at {}: {} nonzero terms",
                    self.path_label(x),
                    nonzero.len()
                ));
            }
        }
    }

    fn check_family(
        &self,
        family: &[Operator],
        source: impl Fn(&OpKind) -> (Vertex, Vertex),
        margin: usize,
    ) -> RelationReport {
        let mut rep = RelationReport::new();
        for op in family {
            let (_, r) = source(&op.kind);
            self.check_equal(
                &format!("{0}* {0} = P", op.label),
                &[(op, true), (op, false)],
                &[(self.projection(r), false)],
                margin,
                &mut rep,
            );
        }
        for v in self.vertices() {
            let outgoing: Vec<&Operator> =
                family.iter().filter(|o| source(&o.kind).0 == v).collect();
            if !outgoing.is_empty() {
                self.check_sum(
                    &format!("sum over edges from {}", self.vertex_labels[&v]),
                    v,
                    &outgoing,
                    margin,
                    &mut rep,
                );
            }
        }
        rep
    }

    fn check_projections(&self, margin: usize) -> RelationReport {
        let mut rep = RelationReport::new();
        for x in self.admissible(margin) {
            let mut hits = 0;
            for p in &self.projections {
                let once = self.apply(&[(p, false)], x);
                let twice = self.apply(&[(p, false), (p, false)], x);
                let adj = self.apply(&[(p, true)], x);
                rep.checked += 1;
                if once != twice || once != adj {
                    rep.fail(format!(
                        "{} is not an orthogonal projection at {}",
                        p.label,
                        self.path_label(x)
                    ));
                }
                match once {
                    Val::At(i, w) if i == x && w == Angle::ONE => hits += 1,
                    Val::Zero => {}
                    _ => rep.fail(format!(
                        "{} is not diagonal at {}",
                        p.label,
                        self.path_label(x)
                    )),
                }
            }
            if hits != 1 {
                rep.fail(format!(
                    "projections do not partition the basis at {}",
                    self.path_label(x)
                ));
            }
        }
        rep
    }
}

/// The vertex basis vectors must start at for a factor to act nontrivially.
fn domain((op, adj): &Factor) -> Vertex {
    match (op.kind, adj) {
        (OpKind::P(v), _) => v,
        (OpKind::S(c), false) => c.range(),
        (OpKind::S(c), true) => c.source(),
        (OpKind::T(d), false) => d.range(),
        (OpKind::T(d), true) => d.source(),
    }
}

fn c_ends(k: &OpKind) -> (Vertex, Vertex) {
    match k {
        OpKind::S(c) => (c.source(), c.range()),
        _ => unreachable!(),
    }
}

fn d_ends(k: &OpKind) -> (Vertex, Vertex) {
    match k {
        OpKind::T(d) => (d.source(), d.range()),
        _ => unreachable!(),
    }
}

/// Cuntz–Krieger relations for both families on basis vectors of length at
/// least `margin`. A report with nothing checked is vacuously true and
/// flagged.
pub fn ck_relations_report(rep: &Representation, margin: usize) -> RelationReport {
    let mut out = rep.check_projections(margin);
    out.merge(rep.check_support());
    out.merge(rep.check_family(&rep.s_ops, c_ends, margin));
    out.merge(rep.check_family(&rep.t_ops, d_ends, margin));
    out.finish()
}

pub fn verify_ck_relations(rep: &Representation, margin: usize) -> bool {
    ck_relations_report(rep, margin).holds
}

/// `T_{d_1} T_{d_2} = S_{c_1} ⋯ S_{c_m}` whenever `ψ(d_1 d_2) = c_1 ⋯ c_m`, and
/// `S_c T_d = T_{d'} S_{c'}` whenever `φ(cd) = d'c'`, for the isomorphisms of `c`.
pub fn rse_equations_report(rep: &Representation, c: &CseWitness, margin: usize) -> RelationReport {
    let mut out = rep.check_support();
    let t = |d: DEdge| rep.t_op(d);
    let s = |e: CEdge| rep.s_op(e);
    let missing = |out: &mut RelationReport, what: &str| {
        out.fail(format!("witness mentions {what} not in the representation"))
    };
    type Wrap<T> = fn(Edge) -> T;
    type PsiRow<'a> = (&'a PathIso, Wrap<DEdge>, Wrap<DEdge>, Wrap<CEdge>);
    type PhiRow<'a> = (
        &'a PathIso,
        Wrap<CEdge>,
        Wrap<DEdge>,
        Wrap<DEdge>,
        Wrap<CEdge>,
    );
    let psis: [PsiRow; 2] = [
        (&c.psi_a, DEdge::R, DEdge::S, CEdge::A),
        (&c.psi_b, DEdge::S, DEdge::R, CEdge::B),
    ];
    for (f, dk, other, ck) in psis {
        for (d, w) in pair_table(f) {
            let lhs: Option<Vec<Factor>> = [t(dk(d[0])), t(other(d[1]))]
                .into_iter()
                .map(|o| o.map(|o| (o, false)))
                .collect();
            let rhs: Option<Vec<Factor>> =
                w.iter().map(|e| s(ck(*e)).map(|o| (o, false))).collect();
            match (lhs, rhs) {
                (Some(l), Some(r)) => {
                    let name = format!("{} {} = S-word", l[0].0.label, l[1].0.label);
                    rep.check_equal(&name, &l, &r, margin, &mut out);
                }
                _ => missing(&mut out, "an edge"),
            }
        }
    }
    let phis: [PhiRow; 2] = [
        (&c.phi_r, CEdge::A, DEdge::R, DEdge::R, CEdge::B),
        (&c.phi_s, CEdge::B, DEdge::S, DEdge::S, CEdge::A),
    ];
    for (f, ck, dk, dk2, ck2) in phis {
        for (d, w) in pair_table(f) {
            let ops = (s(ck(d[0])), t(dk(d[1])), t(dk2(w[0])), s(ck2(w[1])));
            let (Some(sc), Some(td), Some(td2), Some(sc2)) = ops else {
                missing(&mut out, "an edge");
                continue;
            };
            let name = format!("{} {} = {} {}", sc.label, td.label, td2.label, sc2.label);
            rep.check_equal(
                &name,
                &[(sc, false), (td, false)],
                &[(td2, false), (sc2, false)],
                margin,
                &mut out,
            );
        }
    }
    out.finish()
}

pub fn verify_rse_equations(rep: &Representation, c: &CseWitness, margin: usize) -> bool {
    rse_equations_report(rep, c, margin).holds
}

/// The vertex projections obtained from the two families agree:
/// `S_c^* S_c = T_d^* T_d` whenever `r(c) = r(d)`.
pub fn vertex_projection_report(rep: &Representation, margin: usize) -> RelationReport {
    let mut out = rep.check_support();
    for sc in &rep.s_ops {
        for td in &rep.t_ops {
            if c_ends(&sc.kind).1 == d_ends(&td.kind).1 {
                let name = format!("{0}* {0} = {1}* {1}", sc.label, td.label);
                rep.check_equal(
                    &name,
                    &[(sc, true), (sc, false)],
                    &[(td, true), (td, false)],
                    margin,
                    &mut out,
                );
            }
        }
    }
    out.finish()
}

/// JSON dump: the basis, and for each operator its defined entries as
/// `[from, to, "num/den"]`, its undetermined inputs, and its consumption:
/// the most edges any entry of either table strips from its input.
pub fn dump(rep: &Representation) -> Value {
    let basis: Vec<Value> = (0..rep.basis.len())
        .map(|i| json!(rep.path_label(i)))
        .collect();
    let table = |t: &[Entry]| -> (Vec<Value>, Vec<usize>) {
        let mut to = Vec::new();
        let mut unknown = Vec::new();
        for (i, e) in t.iter().enumerate() {
            match e {
                Entry::To { index, weight } => to.push(json!([i, index, weight.to_string()])),
                Entry::Unknown => unknown.push(i),
                Entry::Zero => {}
            }
        }
        (to, unknown)
    };
    let ops: Vec<Value> = rep
        .all_operators()
        .map(|op| {
            let (fwd, fwd_unknown) = table(&op.map.forward);
            let (adj, adj_unknown) = table(&op.map.adjoint);
            let consumption = op
                .map
                .forward
                .iter()
                .chain(&op.map.adjoint)
                .zip(rep.basis.iter().chain(&rep.basis))
                .filter_map(|(e, x)| match e {
                    Entry::To { index, .. } => {
                        Some(x.len().saturating_sub(rep.basis[*index].len()))
                    }
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            json!({
                "label": op.label,
                "consumption": consumption,
                "forward": fwd,
                "forward_unknown": fwd_unknown,
                "adjoint": adj,
                "adjoint_unknown": adj_unknown,
            })
        })
        .collect();
    json!({ "depth": rep.depth, "lag": rep.lag, "basis": basis, "operators": ops })
}

/// Each operator at depth `small` is the truncation of the same operator at
/// depth `large`: on shared basis vectors the entries agree up to prefix.
pub fn restriction_consistent(small: &Representation, large: &Representation) -> bool {
    let pairs = small.all_operators().zip(large.all_operators());
    for (p, q) in pairs {
        if p.kind != q.kind {
            return false;
        }
        for (i, x) in small.basis.iter().enumerate() {
            let Some(j) = large.index_of(x) else {
                return false;
            };
            for (tp, tq) in [
                (&p.map.forward, &q.map.forward),
                (&p.map.adjoint, &q.map.adjoint),
            ] {
                let ok = match (tp[i], tq[j]) {
                    (Entry::Zero, Entry::Zero) | (Entry::Unknown, Entry::Unknown) => true,
                    (
                        Entry::To {
                            index: a,
                            weight: w,
                        },
                        Entry::To {
                            index: b,
                            weight: u,
                        },
                    ) => w == u && large.basis[b].clone().truncated(small.depth) == small.basis[a],
                    _ => false,
                };
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}
