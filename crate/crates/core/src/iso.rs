//! Path isomorphisms: source- and range-preserving bijections between
//! finite path spaces, stored as explicit forward and backward tables.

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::paths::{Path, PathError, PathSpace, PathSpaceSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsoError {
    #[error("block ({source_label}, {range_label}) has {domain} domain paths but {codomain} codomain paths")]
    BlockMismatch {
        source_label: String,
        range_label: String,
        domain: usize,
        codomain: usize,
    },
    #[error("path spaces do not match: {0}")]
    SpecMismatch(String),
    #[error("isomorphisms are not composable side by side: {0}")]
    NonComposable(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("malformed path isomorphism: {0}")]
    Malformed(String),
}

/// A map between two path spaces given by its full graph.
///
/// Values built by the constructors of this module are bijections that
/// preserve source and range. Maps read from external data may violate
/// this; [`PathIso::verify`] decides.
#[derive(Clone)]
pub struct PathIso {
    domain: Arc<PathSpace>,
    codomain: Arc<PathSpace>,
    forward: Vec<usize>,
    backward: Vec<usize>,
}

fn same_space(a: &Arc<PathSpace>, b: &Arc<PathSpace>) -> bool {
    Arc::ptr_eq(a, b) || a.spec() == b.spec()
}

fn ends_match(a: &PathSpaceSpec, b: &PathSpaceSpec) -> bool {
    a.first().rows() == b.first().rows() && a.last().cols() == b.last().cols()
}

impl PathIso {
    /// Pairs the `i`-th domain path of each `(source, range)` block with the
    /// `i`-th codomain path of the same block.
    pub fn canonical(domain: PathSpaceSpec, codomain: PathSpaceSpec) -> Result<PathIso, IsoError> {
        if !ends_match(&domain, &codomain) {
            return Err(IsoError::SpecMismatch(
                "domain and codomain have different end index sets".into(),
            ));
        }
        let dp = domain.product_matrix();
        let cp = codomain.product_matrix();
        for v in 0..dp.nrows() {
            for w in 0..dp.ncols() {
                if dp.get(v, w) != cp.get(v, w) {
                    let count = |x: &num_bigint::BigUint| {
                        num_traits::ToPrimitive::to_usize(x).unwrap_or(usize::MAX)
                    };
                    return Err(IsoError::BlockMismatch {
                        source_label: dp.rows().label(v).to_string(),
                        range_label: dp.cols().label(w).to_string(),
                        domain: count(dp.get(v, w)),
                        codomain: count(cp.get(v, w)),
                    });
                }
            }
        }
        let domain = PathSpace::new(domain)?;
        let codomain = if domain.spec() == &codomain {
            domain.clone()
        } else {
            PathSpace::new(codomain)?
        };
        let nw = dp.ncols();
        let mut queues: Vec<Vec<usize>> = vec![Vec::new(); dp.nrows() * nw];
        for j in (0..codomain.len()).rev() {
            let (v, w) = codomain.block(j);
            queues[v * nw + w].push(j);
        }
        let mut forward = Vec::with_capacity(domain.len());
        for i in 0..domain.len() {
            let (v, w) = domain.block(i);
            forward.push(queues[v * nw + w].pop().expect("blocks have equal size"));
        }
        Ok(Self::from_forward(domain, codomain, forward))
    }

    pub fn identity(spec: PathSpaceSpec) -> Result<PathIso, IsoError> {
        let space = PathSpace::new(spec)?;
        let forward: Vec<usize> = (0..space.len()).collect();
        Ok(PathIso {
            domain: space.clone(),
            codomain: space,
            backward: forward.clone(),
            forward,
        })
    }

    /// Identity on `E_M^k`.
    pub fn identity_power(m: &crate::matrix::NonnegMatrix, k: usize) -> Result<PathIso, IsoError> {
        PathIso::identity(PathSpaceSpec::repeated(m, k)?)
    }

    /// Builds the map from a forward table without checking it.
    /// The backward table is filled where the forward table is injective.
    pub fn from_forward(
        domain: Arc<PathSpace>,
        codomain: Arc<PathSpace>,
        forward: Vec<usize>,
    ) -> PathIso {
        assert_eq!(forward.len(), domain.len());
        let mut backward = vec![0; codomain.len()];
        for (i, &j) in forward.iter().enumerate().rev() {
            assert!(j < codomain.len(), "forward image out of range");
            backward[j] = i;
        }
        PathIso {
            domain,
            codomain,
            forward,
            backward,
        }
    }

    pub fn domain(&self) -> &Arc<PathSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<PathSpace> {
        &self.codomain
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn backward(&self) -> &[usize] {
        &self.backward
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn apply_index(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn apply(&self, p: &Path) -> Option<&Path> {
        self.domain
            .position(p)
            .map(|i| self.codomain.path(self.forward[i]))
    }

    pub fn apply_inverse(&self, p: &Path) -> Option<&Path> {
        self.codomain
            .position(p)
            .map(|j| self.domain.path(self.backward[j]))
    }

    pub fn is_identity_like(&self) -> bool {
        self.domain.spec() == self.codomain.spec()
            && self.forward.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `g ∘ f`.
    pub fn compose(g: &PathIso, f: &PathIso) -> Result<PathIso, IsoError> {
        if !same_space(&f.codomain, &g.domain) {
            return Err(IsoError::SpecMismatch(format!(
                "codomain {:?} vs domain {:?}",
                f.codomain.spec(),
                g.domain.spec()
            )));
        }
        Ok(PathIso {
            domain: f.domain.clone(),
            codomain: g.codomain.clone(),
            forward: f.forward.iter().map(|&j| g.forward[j]).collect(),
            backward: g.backward.iter().map(|&j| f.backward[j]).collect(),
        })
    }

    /// Compose a chain given in application order: `fs[0]` first.
    pub fn compose_all(fs: &[&PathIso]) -> Result<PathIso, IsoError> {
        let mut acc = fs[0].clone();
        for f in &fs[1..] {
            acc = PathIso::compose(f, &acc)?;
        }
        Ok(acc)
    }

    /// `f × g`, acting on concatenations `pq` by `f(p) g(q)`.
    pub fn product(f: &PathIso, g: &PathIso) -> Result<PathIso, IsoError> {
        let dspec = f
            .domain
            .spec()
            .concat(g.domain.spec())
            .map_err(|e| IsoError::NonComposable(format!("domains: {e}")))?;
        let cspec = f
            .codomain
            .spec()
            .concat(g.codomain.spec())
            .map_err(|e| IsoError::NonComposable(format!("codomains: {e}")))?;
        let domain = PathSpace::new(dspec)?;
        let codomain = if domain.spec() == &cspec {
            domain.clone()
        } else {
            PathSpace::new(cspec)?
        };
        let k = f.domain.spec().len();
        let mut forward = Vec::with_capacity(domain.len());
        for p in domain.paths() {
            let (head, tail) = p.0.split_at(k);
            let i = f
                .domain
                .position(&Path(head.to_vec()))
                .expect("prefix lies in domain of f");
            let j = g
                .domain
                .position(&Path(tail.to_vec()))
                .expect("suffix lies in domain of g");
            let image = f
                .codomain
                .path(f.forward[i])
                .concat(g.codomain.path(g.forward[j]));
            let target = codomain.position(&image).ok_or_else(|| {
                IsoError::NonComposable(
                    "image is not a composable path; factors do not preserve ends".into(),
                )
            })?;
            forward.push(target);
        }
        Ok(Self::from_forward(domain, codomain, forward))
    }

    /// Left-to-right product of several factors.
    pub fn product_all(fs: &[&PathIso]) -> Result<PathIso, IsoError> {
        let mut acc = fs[0].clone();
        for f in &fs[1..] {
            acc = PathIso::product(&acc, f)?;
        }
        Ok(acc)
    }

    pub fn invert(&self) -> PathIso {
        PathIso {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    /// The staircase power of `φ : E_X × E_Y → E_Y × E_Z`:
    ///
    /// `φ^(m) = (φ × id_{Z^{m-1}}) ∘ (id_X × φ × id_{Z^{m-2}}) ∘ … ∘ (id_{X^{m-1}} × φ)`,
    /// a map `E_X^m × E_Y → E_Y × E_Z^m`.
    pub fn phi_power(phi: &PathIso, m: usize) -> Result<PathIso, IsoError> {
        let (x, z) = staircase_shape(phi)?;
        if m == 0 {
            return Err(IsoError::Shape("lag must be positive".into()));
        }
        if m == 1 {
            return Ok(phi.clone());
        }
        let step = |k: usize| -> Result<PathIso, IsoError> {
            // id_{X^k} × φ × id_{Z^{m-1-k}}
            let mut parts: Vec<PathIso> = Vec::with_capacity(3);
            if k > 0 {
                parts.push(PathIso::identity_power(&x, k)?);
            }
            parts.push(phi.clone());
            if m - 1 - k > 0 {
                parts.push(PathIso::identity_power(&z, m - 1 - k)?);
            }
            PathIso::product_all(&parts.iter().collect::<Vec<_>>())
        };
        let mut acc = step(m - 1)?;
        for k in (0..m - 1).rev() {
            acc = PathIso::compose(&step(k)?, &acc)?;
        }
        Ok(acc)
    }

    /// Bijectivity and source/range preservation on the whole domain.
    pub fn verify(&self) -> bool {
        if !ends_match(self.domain.spec(), self.codomain.spec()) {
            return false;
        }
        if self.forward.len() != self.domain.len() || self.backward.len() != self.codomain.len() {
            return false;
        }
        let n = self.codomain.len();
        for (i, &j) in self.forward.iter().enumerate() {
            if j >= n || self.backward[j] != i {
                return false;
            }
            if self.domain.block(i) != self.codomain.block(j) {
                return false;
            }
        }
        self.backward
            .iter()
            .enumerate()
            .all(|(j, &i)| i < self.forward.len() && self.forward[i] == j)
    }

    /// `{ "domain": spec, "codomain": spec, "pairs": [[path, path], ..] }`,
    /// pairs in domain enumeration order.
    pub fn to_json(&self) -> Value {
        let pairs: Vec<Value> = self
            .forward
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                json!([
                    self.domain.path_to_json(self.domain.path(i)),
                    self.codomain.path_to_json(self.codomain.path(j))
                ])
            })
            .collect();
        json!({
            "domain": self.domain.spec(),
            "codomain": self.codomain.spec(),
            "pairs": pairs,
        })
    }

    /// Reads the JSON form. The pairs must describe a function on the whole
    /// domain; whether it is a path isomorphism is left to [`PathIso::verify`].
    pub fn from_json(v: &Value) -> Result<PathIso, IsoError> {
        let field = |name: &str| {
            v.get(name)
                .ok_or_else(|| IsoError::Malformed(format!("missing field `{name}`")))
        };
        let dspec: PathSpaceSpec = serde_json::from_value(field("domain")?.clone())
            .map_err(|e| IsoError::Malformed(format!("domain: {e}")))?;
        let cspec: PathSpaceSpec = serde_json::from_value(field("codomain")?.clone())
            .map_err(|e| IsoError::Malformed(format!("codomain: {e}")))?;
        let pairs = field("pairs")?
            .as_array()
            .ok_or_else(|| IsoError::Malformed("pairs must be an array".into()))?;
        let domain = PathSpace::new(dspec)?;
        let codomain = if domain.spec() == &cspec {
            domain.clone()
        } else {
            PathSpace::new(cspec)?
        };
        let mut forward = vec![usize::MAX; domain.len()];
        for (k, pair) in pairs.iter().enumerate() {
            let pair = pair
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| IsoError::Malformed(format!("pairs[{k}] must be [path, path]")))?;
            let i = domain
                .path_from_json(&pair[0])
                .map_err(|e| IsoError::Malformed(format!("pairs[{k}][0]: {e}")))?;
            let j = codomain
                .path_from_json(&pair[1])
                .map_err(|e| IsoError::Malformed(format!("pairs[{k}][1]: {e}")))?;
            if forward[i] != usize::MAX {
                return Err(IsoError::Malformed(format!(
                    "pairs[{k}]: domain path listed twice"
                )));
            }
            forward[i] = j;
        }
        if let Some(i) = forward.iter().position(|&j| j == usize::MAX) {
            return Err(IsoError::Malformed(format!(
                "domain path {:?} has no image",
                domain.path(i)
            )));
        }
        Ok(Self::from_forward(domain, codomain, forward))
    }
}

fn staircase_shape(
    phi: &PathIso,
) -> Result<(crate::matrix::NonnegMatrix, crate::matrix::NonnegMatrix), IsoError> {
    let d = phi.domain.spec().factors();
    let c = phi.codomain.spec().factors();
    if d.len() != 2 || c.len() != 2 {
        return Err(IsoError::Shape(
            "staircase power needs E_X × E_Y → E_Y × E_Z".into(),
        ));
    }
    if d[1] != c[0] {
        return Err(IsoError::Shape(
            "middle factor differs between domain and codomain".into(),
        ));
    }
    if !d[0].is_square() || !c[1].is_square() {
        return Err(IsoError::Shape("outer factors must be square".into()));
    }
    Ok((d[0].clone(), c[1].clone()))
}

/// Extensional equality: same spaces and same graph.
impl PartialEq for PathIso {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.domain, &other.domain)
            && same_space(&self.codomain, &other.codomain)
            && self.forward == other.forward
    }
}

impl Eq for PathIso {}

impl fmt::Debug for PathIso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathIso")
            .field("domain", self.domain.spec())
            .field("codomain", self.codomain.spec())
            .field("forward", &self.forward)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{IndexSet, NonnegMatrix};

    fn m(rows: &[&[u64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows)
    }

    fn spec(f: &[&NonnegMatrix]) -> PathSpaceSpec {
        PathSpaceSpec::new(f.iter().map(|x| (*x).clone()).collect()).unwrap()
    }

    /// A1 = [[1,1],[1,1]] over {0,1}, B1 = [[2]] over {w}, R = [[1],[1]], S = [[1,1]].
    fn worked() -> (NonnegMatrix, NonnegMatrix, NonnegMatrix, NonnegMatrix) {
        let v = IndexSet::range(2);
        let w = IndexSet::new(["w"]).unwrap();
        let a = m(&[&[1, 1], &[1, 1]]);
        let b = m(&[&[2]]).relabel(w.clone(), w.clone()).unwrap();
        let r = m(&[&[1], &[1]]).relabel(v.clone(), w.clone()).unwrap();
        let s = m(&[&[1, 1]]).relabel(w, v).unwrap();
        (a, b, r, s)
    }

    #[test]
    fn canonical_examples() {
        let (a, b, r, _) = worked();
        let f = PathIso::canonical(spec(&[&a, &r]), spec(&[&r, &b])).unwrap();
        assert_eq!(f.len(), 4);
        assert!(f.verify());

        let sp = spec(&[&a, &r]);
        assert!(PathIso::canonical(sp.clone(), sp)
            .unwrap()
            .is_identity_like());

        let err = PathIso::canonical(spec(&[&m(&[&[2]])]), spec(&[&m(&[&[3]])])).unwrap_err();
        assert!(matches!(
            err,
            IsoError::BlockMismatch {
                domain: 2,
                codomain: 3,
                ..
            }
        ));
    }

    #[test]
    fn compose_and_invert() {
        let (a, b, r, _) = worked();
        let f = PathIso::canonical(spec(&[&a, &r]), spec(&[&r, &b])).unwrap();
        let id = PathIso::identity(spec(&[&a, &r])).unwrap();
        assert!(PathIso::compose(&f.invert(), &f)
            .unwrap()
            .is_identity_like());
        assert_eq!(PathIso::compose(&f, &id).unwrap(), f);
        assert_eq!(f.invert().invert(), f);
        assert!(PathIso::compose(&f, &f).is_err());
    }

    #[test]
    fn compose_matches_pointwise_table() {
        let x = m(&[&[2, 1], &[1, 1]]);
        let y = m(&[&[1, 2], &[1, 1]]);
        let f = PathIso::canonical(spec(&[&x, &y]), spec(&[&x.multiply(&y).unwrap()])).unwrap();
        let g = PathIso::canonical(spec(&[&x.multiply(&y).unwrap()]), spec(&[&y, &x])).unwrap_err();
        // x·y != y·x here, so the second map does not exist
        assert!(matches!(g, IsoError::BlockMismatch { .. }));
        let h = PathIso::canonical(spec(&[&x.multiply(&y).unwrap()]), spec(&[&x, &y])).unwrap();
        let hf = PathIso::compose(&h, &f).unwrap();
        for p in f.domain().paths() {
            assert_eq!(hf.apply(p), h.apply(f.apply(p).unwrap()));
        }
    }

    #[test]
    fn product_counts_and_identity() {
        let (a, b, r, _) = worked();
        let ida = PathIso::identity(spec(&[&a])).unwrap();
        let idr = PathIso::identity(spec(&[&r])).unwrap();
        let p = PathIso::product(&ida, &idr).unwrap();
        assert!(p.is_identity_like());
        assert_eq!(p.domain().spec(), &spec(&[&a, &r]));

        let f = PathIso::canonical(spec(&[&a, &r]), spec(&[&r, &b])).unwrap();
        let idb = PathIso::identity(spec(&[&b])).unwrap();
        let fb = PathIso::product(&f, &idb).unwrap();
        assert!(fb.verify());
        assert_eq!(fb.len(), 8); // entry sum of A1·R·B1 = [[4],[4]]
        let back = PathIso::product(&f.invert(), &idb).unwrap();
        assert!(PathIso::compose(&back, &fb).unwrap().is_identity_like());
        assert!(PathIso::product(&f, &f).is_err());
    }

    #[test]
    fn phi_power_base_and_recursion() {
        let (a, b, r, _) = worked();
        let phi = PathIso::canonical(spec(&[&a, &r]), spec(&[&r, &b])).unwrap();
        assert_eq!(PathIso::phi_power(&phi, 1).unwrap(), phi);

        let p2 = PathIso::phi_power(&phi, 2).unwrap();
        assert!(p2.verify());
        assert_eq!(p2.len(), 8); // entry sum of A1^2 R
                                 // direct transport of each 3-path a1 a2 r
        for path in p2.domain().paths() {
            let (a1, a2, r0) = (path.0[0], path.0[1], path.0[2]);
            let first = phi.apply(&Path(vec![a2, r0])).unwrap().clone();
            let (r1, b1) = (first.0[0], first.0[1]);
            let second = phi.apply(&Path(vec![a1, r1])).unwrap().clone();
            let expected = Path(vec![second.0[0], second.0[1], b1]);
            assert_eq!(p2.apply(path), Some(&expected));
        }

        let p3 = PathIso::phi_power(&phi, 3).unwrap();
        let rec = PathIso::compose(
            &PathIso::product(&phi, &PathIso::identity_power(&b, 2).unwrap()).unwrap(),
            &PathIso::product(&PathIso::identity_power(&a, 1).unwrap(), &p2).unwrap(),
        )
        .unwrap();
        assert_eq!(p3, rec);
    }

    #[test]
    fn phi_power_shape_errors() {
        let (a, _, r, _) = worked();
        let f = PathIso::identity(spec(&[&a])).unwrap();
        assert!(matches!(PathIso::phi_power(&f, 2), Err(IsoError::Shape(_))));
        let g = PathIso::identity(spec(&[&a, &r])).unwrap();
        // domain [A, R] and codomain [A, R]: middle factors differ
        assert!(matches!(PathIso::phi_power(&g, 2), Err(IsoError::Shape(_))));
    }

    #[test]
    fn verify_detects_broken_maps() {
        let x = m(&[&[1, 1], &[1, 1]]);
        let id = PathIso::identity(spec(&[&x])).unwrap();
        // swap images of edges in blocks (0,0) and (0,1)
        let mut fwd = id.forward().to_vec();
        fwd.swap(0, 1);
        let broken = PathIso::from_forward(id.domain().clone(), id.codomain().clone(), fwd);
        assert!(!broken.verify());
        let mut fwd = id.forward().to_vec();
        fwd[1] = 0;
        let non_injective = PathIso::from_forward(id.domain().clone(), id.codomain().clone(), fwd);
        assert!(!non_injective.verify());
    }

    #[test]
    fn json_roundtrip() {
        let (a, b, r, _) = worked();
        let f = PathIso::canonical(spec(&[&a, &r]), spec(&[&r, &b])).unwrap();
        let back = PathIso::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        let mut v = f.to_json();
        v["pairs"].as_array_mut().unwrap().pop();
        assert!(matches!(
            PathIso::from_json(&v),
            Err(IsoError::Malformed(_))
        ));
    }
}
