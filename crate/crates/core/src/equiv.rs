//! Witnesses for shift equivalence (SE), compatible shift equivalence (CSE)
//! and strong shift equivalence (SSE), with the constructive passages
//! between them: an elementary step yields a lag-one CSE, two CSEs compose,
//! and an SSE chain folds into a single CSE.
//!
//! Conventions: `A` is square over `V`, `B` square over `W`, `R` is `V x W`
//! and `S` is `W x V`. The intertwining equations checked are `AR = RB` and
//! `BS = SA`; these are the ones that type-check for rectangular `R, S` and
//! are equivalent to `CD = DC` for the block matrices of
//! [`crate::matrix::block_assemble`].

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::iso::{IsoError, PathIso};
use crate::matrix::{MatrixError, NonnegMatrix};
use crate::paths::{product_identification, PathSpaceSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error("matrix {0} is not essential")]
    NotEssential(&'static str),
    #[error("lag must be at least 1")]
    ZeroLag,
    #[error("underlying shift equivalence does not verify")]
    InvalidUnderlyingSe,
    #[error("witness does not verify as a compatible shift equivalence")]
    InvalidWitness,
    #[error("not an elementary step: {0}")]
    NotElementary(String),
    #[error("witnesses do not share the middle matrix")]
    MiddleMismatch,
    #[error("chain breaks at step {0}")]
    BrokenChain(usize),
    #[error("internal type-check failure in {0}")]
    TypeCheckFailure(String),
}

/// `(lag m, R, S)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeWitness {
    #[serde(rename = "m")]
    pub lag: usize,
    #[serde(rename = "R")]
    pub r: NonnegMatrix,
    #[serde(rename = "S")]
    pub s: NonnegMatrix,
}

/// `A = RS`, next matrix `SR`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryStep {
    #[serde(rename = "R")]
    pub r: NonnegMatrix,
    #[serde(rename = "S")]
    pub s: NonnegMatrix,
}

impl ElementaryStep {
    pub fn source(&self) -> Result<NonnegMatrix, MatrixError> {
        self.r.multiply(&self.s)
    }

    pub fn target(&self) -> Result<NonnegMatrix, MatrixError> {
        self.s.multiply(&self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SseChain {
    pub start: NonnegMatrix,
    pub steps: Vec<ElementaryStep>,
}

impl SseChain {
    /// Checks composability and returns the final matrix.
    pub fn validate(&self) -> Result<NonnegMatrix, EquivError> {
        let mut current = self.start.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let src = step.source().map_err(|_| EquivError::BrokenChain(i))?;
            if src != current {
                return Err(EquivError::BrokenChain(i));
            }
            current = step.target().map_err(|_| EquivError::BrokenChain(i))?;
        }
        Ok(current)
    }
}

/// An SE witness plus the four path isomorphisms
/// `φ_R : E_A × E_R → E_R × E_B`, `φ_S : E_B × E_S → E_S × E_A`,
/// `ψ_A : E_R × E_S → E_A^m`, `ψ_B : E_S × E_R → E_B^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CseWitness {
    pub se: SeWitness,
    pub phi_r: PathIso,
    pub phi_s: PathIso,
    pub psi_a: PathIso,
    pub psi_b: PathIso,
}

impl CseWitness {
    pub fn lag(&self) -> usize {
        self.se.lag
    }

    /// `{ "A", "B", "m", "R", "S", "phi_R", "phi_S", "psi_A", "psi_B" }`.
    pub fn to_bundle(&self, a: &NonnegMatrix, b: &NonnegMatrix) -> Value {
        json!({
            "A": a,
            "B": b,
            "m": self.se.lag,
            "R": self.se.r,
            "S": self.se.s,
            "phi_R": self.phi_r.to_json(),
            "phi_S": self.phi_s.to_json(),
            "psi_A": self.psi_a.to_json(),
            "psi_B": self.psi_b.to_json(),
        })
    }

    /// Inverse of [`CseWitness::to_bundle`]; returns `(A, B, witness)`.
    pub fn from_bundle(v: &Value) -> Result<(NonnegMatrix, NonnegMatrix, CseWitness), String> {
        let field = |name: &str| v.get(name).ok_or_else(|| format!("missing field `{name}`"));
        let matrix = |name: &str| -> Result<NonnegMatrix, String> {
            serde_json::from_value(field(name)?.clone()).map_err(|e| format!("{name}: {e}"))
        };
        let iso = |name: &str| -> Result<PathIso, String> {
            PathIso::from_json(field(name)?).map_err(|e| format!("{name}: {e}"))
        };
        let lag = field("m")?
            .as_u64()
            .ok_or("m: expected a positive integer")? as usize;
        let a = matrix("A")?;
        let b = matrix("B")?;
        let w = CseWitness {
            se: SeWitness {
                lag,
                r: matrix("R")?,
                s: matrix("S")?,
            },
            phi_r: iso("phi_R")?,
            phi_s: iso("phi_S")?,
            psi_a: iso("psi_A")?,
            psi_b: iso("psi_B")?,
        };
        Ok((a, b, w))
    }
}

/// One named pass/fail line of a verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn ensure_pair(a: &NonnegMatrix, b: &NonnegMatrix) -> Result<(), EquivError> {
    a.ensure_square()?;
    b.ensure_square()?;
    if !a.is_essential() {
        return Err(EquivError::NotEssential("A"));
    }
    if !b.is_essential() {
        return Err(EquivError::NotEssential("B"));
    }
    Ok(())
}

fn ensure_shapes(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    r: &NonnegMatrix,
    s: &NonnegMatrix,
) -> Result<(), EquivError> {
    if r.rows() != a.rows() || r.cols() != b.rows() {
        return Err(MatrixError::DimensionMismatch("R must be indexed by V x W".into()).into());
    }
    if s.rows() != b.rows() || s.cols() != a.rows() {
        return Err(MatrixError::DimensionMismatch("S must be indexed by W x V".into()).into());
    }
    Ok(())
}

/// The individual SE equations. When `V` and `W` carry the same labels the
/// transposed ordering `SB = AS` is reported too, for diagnostics only.
pub fn se_checks(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    w: &SeWitness,
) -> Result<Vec<Check>, EquivError> {
    ensure_pair(a, b)?;
    ensure_shapes(a, b, &w.r, &w.s)?;
    if w.lag == 0 {
        return Err(EquivError::ZeroLag);
    }
    let m = w.lag as u32;
    let (r, s) = (&w.r, &w.s);
    let mut checks = vec![
        Check::new("A^m = RS", a.power(m)? == r.multiply(s)?),
        Check::new("B^m = SR", b.power(m)? == s.multiply(r)?),
        Check::new("AR = RB", a.multiply(r)? == r.multiply(b)?),
        Check::new("BS = SA", b.multiply(s)? == s.multiply(a)?),
    ];
    if a.rows() == b.rows() {
        checks.push(Check::new(
            "SB = AS (transposed ordering, informational)",
            s.multiply(b)? == a.multiply(s)?,
        ));
    }
    Ok(checks)
}

pub fn verify_se(a: &NonnegMatrix, b: &NonnegMatrix, w: &SeWitness) -> Result<bool, EquivError> {
    Ok(se_checks(a, b, w)?.iter().take(4).all(|c| c.pass))
}

fn spec(f: &[&NonnegMatrix]) -> PathSpaceSpec {
    PathSpaceSpec::new(f.iter().map(|x| (*x).clone()).collect())
        .expect("composable by construction")
}

fn pow_spec(x: &NonnegMatrix, k: usize) -> PathSpaceSpec {
    PathSpaceSpec::repeated(x, k).expect("square")
}

fn has_shape(f: &PathIso, dom: &PathSpaceSpec, cod: &PathSpaceSpec) -> bool {
    f.domain().spec() == dom && f.codomain().spec() == cod
}

fn tc<T>(what: &str, r: Result<T, IsoError>) -> Result<T, EquivError> {
    r.map_err(|e| EquivError::TypeCheckFailure(format!("{what}: {e}")))
}

/// `(id_R × ψ_B) ∘ (ψ_A^{-1} × id_R)`; with `(S, ψ_B, ψ_A)` it gives the `S`-side twin.
pub fn compat_rhs(
    r: &NonnegMatrix,
    psi_first: &PathIso,
    psi_second: &PathIso,
) -> Result<PathIso, IsoError> {
    let id_r = PathIso::identity(PathSpaceSpec::single(r.clone()))?;
    let right = PathIso::product(&psi_first.invert(), &id_r)?;
    let left = PathIso::product(&id_r, psi_second)?;
    PathIso::compose(&left, &right)
}

/// Shape, path-isomorphism and compatibility checks for a CSE witness.
pub fn cse_checks(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    c: &CseWitness,
) -> Result<Vec<Check>, EquivError> {
    if !verify_se(a, b, &c.se)? {
        return Err(EquivError::InvalidUnderlyingSe);
    }
    let (r, s, m) = (&c.se.r, &c.se.s, c.se.lag);
    let shapes = [
        ("phi_R", &c.phi_r, spec(&[a, r]), spec(&[r, b])),
        ("phi_S", &c.phi_s, spec(&[b, s]), spec(&[s, a])),
        ("psi_A", &c.psi_a, spec(&[r, s]), pow_spec(a, m)),
        ("psi_B", &c.psi_b, spec(&[s, r]), pow_spec(b, m)),
    ];
    let mut checks = Vec::new();
    let mut ok = true;
    for (name, f, dom, cod) in &shapes {
        let shape_ok = has_shape(f, dom, cod);
        let iso_ok = shape_ok && f.verify();
        checks.push(Check::new(format!("{name} shape"), shape_ok));
        checks.push(Check::new(format!("{name} is a path isomorphism"), iso_ok));
        ok &= iso_ok;
    }
    if !ok {
        checks.push(Check::new("compatibility (R)", false));
        checks.push(Check::new("compatibility (S)", false));
        return Ok(checks);
    }
    let lhs_r = tc("phi_R^(m)", PathIso::phi_power(&c.phi_r, m))?;
    let rhs_r = tc("compat R", compat_rhs(r, &c.psi_a, &c.psi_b))?;
    checks.push(Check::new("compatibility (R)", lhs_r == rhs_r));
    let lhs_s = tc("phi_S^(m)", PathIso::phi_power(&c.phi_s, m))?;
    let rhs_s = tc("compat S", compat_rhs(s, &c.psi_b, &c.psi_a))?;
    checks.push(Check::new("compatibility (S)", lhs_s == rhs_s));
    Ok(checks)
}

pub fn verify_cse(a: &NonnegMatrix, b: &NonnegMatrix, c: &CseWitness) -> Result<bool, EquivError> {
    Ok(all_pass(&cse_checks(a, b, c)?))
}

/// The two identities that compatibility forces:
///
/// `(ψ_A × id_A) ∘ (id_R × φ_S) = (id_A × ψ_A) ∘ (φ_R^{-1} × id_S)` on `E_R × E_B × E_S`,
/// `(ψ_B × id_B) ∘ (id_S × φ_R) = (id_B × ψ_B) ∘ (φ_S^{-1} × id_R)` on `E_S × E_A × E_R`.
pub fn derived_identity_checks(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    c: &CseWitness,
) -> Result<Vec<Check>, EquivError> {
    if !verify_cse(a, b, c)? {
        return Err(EquivError::InvalidWitness);
    }
    let side =
        |x: &NonnegMatrix, y: &NonnegMatrix, psi_x: &PathIso, phi_y: &PathIso, phi_x: &PathIso| {
            // for the A side: x = A, y = S, and id_first is id_R
            let id_first = PathIso::identity(phi_x.domain().spec().split_at(1)?.1)?;
            let id_x = PathIso::identity(PathSpaceSpec::single(x.clone()))?;
            let id_last = PathIso::identity(PathSpaceSpec::single(y.clone()))?;
            let left = PathIso::compose(
                &PathIso::product(psi_x, &id_x)?,
                &PathIso::product(&id_first, phi_y)?,
            )?;
            let right = PathIso::compose(
                &PathIso::product(&id_x, psi_x)?,
                &PathIso::product(&phi_x.invert(), &id_last)?,
            )?;
            Ok::<bool, IsoError>(left == right)
        };
    let first = tc(
        "derived identity (A)",
        side(a, &c.se.s, &c.psi_a, &c.phi_s, &c.phi_r),
    )?;
    let second = tc(
        "derived identity (B)",
        side(b, &c.se.r, &c.psi_b, &c.phi_r, &c.phi_s),
    )?;
    Ok(vec![
        Check::new("derived identity (A)", first),
        Check::new("derived identity (B)", second),
    ])
}

pub fn check_derived_identities(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    c: &CseWitness,
) -> Result<bool, EquivError> {
    Ok(all_pass(&derived_identity_checks(a, b, c)?))
}

/// Lag-one CSE from `A = RS`, `B = SR`: canonical `ψ_A, ψ_B`, and
/// `φ_R := (id_R × ψ_B)(ψ_A^{-1} × id_R)`, `φ_S := (id_S × ψ_A)(ψ_B^{-1} × id_S)`.
pub fn sse_step_to_cse(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    step: &ElementaryStep,
) -> Result<CseWitness, EquivError> {
    let (r, s) = (&step.r, &step.s);
    ensure_shapes(a, b, r, s)?;
    if &r.multiply(s)? != a {
        return Err(EquivError::NotElementary("A != RS".into()));
    }
    if &s.multiply(r)? != b {
        return Err(EquivError::NotElementary("B != SR".into()));
    }
    let psi_a = PathIso::canonical(spec(&[r, s]), spec(&[a]))?;
    let psi_b = PathIso::canonical(spec(&[s, r]), spec(&[b]))?;
    let phi_r = tc("phi_R", compat_rhs(r, &psi_a, &psi_b))?;
    let phi_s = tc("phi_S", compat_rhs(s, &psi_b, &psi_a))?;
    Ok(CseWitness {
        se: SeWitness {
            lag: 1,
            r: r.clone(),
            s: s.clone(),
        },
        phi_r,
        phi_s,
        psi_a,
        psi_b,
    })
}

/// The reflexive witness `R = A`, `S = I`.
pub fn identity_cse(a: &NonnegMatrix) -> Result<CseWitness, EquivError> {
    let step = ElementaryStep {
        r: a.clone(),
        s: NonnegMatrix::identity(a.rows().clone()),
    };
    sse_step_to_cse(a, a, &step)
}

/// Composes a CSE for `(A, B)` with one for `(B, C)` into a CSE for `(A, C)`
/// of lag `m + m'` via `RR'` and `S'S`.
///
/// With primes on the second witness:
///
/// ```text
/// ψ_A'    = (id_{A^{m'}} × ψ_A)((φ_R^{(m')})^{-1} × id_S)(id_R × ψ_B' × id_S)
/// ψ_C     = (id_{C^m} × ψ_C')((φ_{S'}^{(m)})^{-1} × id_{R'})(id_{S'} × ψ_B × id_{R'})
/// φ_{RR'} = (id_R × φ_{R'})(φ_R × id_{R'})
/// φ_{S'S} = (id_{S'} × φ_S)(φ_{S'} × id_S)
/// ```
///
/// These act on two-factor paths `E_R × E_{R'}` etc.; the results are
/// transported to `E_{RR'}` and `E_{S'S}` with the canonical product
/// identification.
pub fn compose_cse(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
    c: &NonnegMatrix,
    first: &CseWitness,
    second: &CseWitness,
) -> Result<CseWitness, EquivError> {
    if first.phi_r.codomain().spec().last() != b || second.phi_r.domain().spec().first() != b {
        return Err(EquivError::MiddleMismatch);
    }
    if !verify_cse(a, b, first)? || !verify_cse(b, c, second)? {
        return Err(EquivError::InvalidWitness);
    }
    let (m, m2) = (first.lag(), second.lag());
    let (r, s) = (&first.se.r, &first.se.s);
    let (r2, s2) = (&second.se.r, &second.se.s);
    let id = |x: &NonnegMatrix| PathIso::identity(PathSpaceSpec::single(x.clone()));
    let idp = |x: &NonnegMatrix, k: usize| PathIso::identity_power(x, k);

    let psi_a_raw = tc(
        "psi_A'",
        (|| {
            let step1 = PathIso::product_all(&[&id(r)?, &second.psi_a, &id(s)?])?;
            let step2 = PathIso::product(&PathIso::phi_power(&first.phi_r, m2)?.invert(), &id(s)?)?;
            let step3 = PathIso::product(&idp(a, m2)?, &first.psi_a)?;
            PathIso::compose_all(&[&step1, &step2, &step3])
        })(),
    )?;
    let psi_c_raw = tc(
        "psi_C",
        (|| {
            let step1 = PathIso::product_all(&[&id(s2)?, &first.psi_b, &id(r2)?])?;
            let step2 =
                PathIso::product(&PathIso::phi_power(&second.phi_s, m)?.invert(), &id(r2)?)?;
            let step3 = PathIso::product(&idp(c, m)?, &second.psi_b)?;
            PathIso::compose_all(&[&step1, &step2, &step3])
        })(),
    )?;
    let phi_rr_raw = tc(
        "phi_RR'",
        (|| {
            let step1 = PathIso::product(&first.phi_r, &id(r2)?)?;
            let step2 = PathIso::product(&id(r)?, &second.phi_r)?;
            PathIso::compose(&step2, &step1)
        })(),
    )?;
    let phi_ss_raw = tc(
        "phi_S'S",
        (|| {
            let step1 = PathIso::product(&second.phi_s, &id(s)?)?;
            let step2 = PathIso::product(&id(s2)?, &first.phi_s)?;
            PathIso::compose(&step2, &step1)
        })(),
    )?;

    let rr = r.multiply(r2)?;
    let ss = s2.multiply(s)?;
    let (psi_a, psi_c, phi_rr, phi_ss) = tc(
        "product identification",
        (|| {
            let iota_r = product_identification(&spec(&[r, r2]))?; // E_{RR'} → E_R × E_{R'}
            let iota_s = product_identification(&spec(&[s2, s]))?; // E_{S'S} → E_{S'} × E_S
            let psi_a = PathIso::compose(&psi_a_raw, &PathIso::product(&iota_r, &iota_s)?)?;
            let psi_c = PathIso::compose(&psi_c_raw, &PathIso::product(&iota_s, &iota_r)?)?;
            let phi_rr = PathIso::compose_all(&[
                &PathIso::product(&id(a)?, &iota_r)?,
                &phi_rr_raw,
                &PathIso::product(&iota_r.invert(), &id(c)?)?,
            ])?;
            let phi_ss = PathIso::compose_all(&[
                &PathIso::product(&id(c)?, &iota_s)?,
                &phi_ss_raw,
                &PathIso::product(&iota_s.invert(), &id(a)?)?,
            ])?;
            Ok((psi_a, psi_c, phi_rr, phi_ss))
        })(),
    )?;
    Ok(CseWitness {
        se: SeWitness {
            lag: m + m2,
            r: rr,
            s: ss,
        },
        phi_r: phi_rr,
        phi_s: phi_ss,
        psi_a,
        psi_b: psi_c,
    })
}

/// Left fold of [`compose_cse`] over the lag-one witnesses of each step.
/// An empty chain from `A` to itself yields the reflexive witness.
pub fn chain_to_cse(chain: &SseChain, target: &NonnegMatrix) -> Result<CseWitness, EquivError> {
    let end = chain.validate()?;
    if &end != target {
        return Err(EquivError::BrokenChain(chain.steps.len()));
    }
    if chain.steps.is_empty() {
        return identity_cse(&chain.start);
    }
    let mut current = chain.start.clone();
    let mut acc: Option<CseWitness> = None;
    for step in &chain.steps {
        let next = step.target()?;
        let w = sse_step_to_cse(&current, &next, step)?;
        acc = Some(match acc {
            None => w,
            Some(prev) => compose_cse(&chain.start, &current, &next, &prev, &w)?,
        });
        current = next;
    }
    Ok(acc.expect("non-empty chain"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::IndexSet;

    fn m(rows: &[&[u64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows)
    }

    fn over(x: NonnegMatrix, rows: &IndexSet, cols: &IndexSet) -> NonnegMatrix {
        x.relabel(rows.clone(), cols.clone()).unwrap()
    }

    struct Worked {
        a: NonnegMatrix,
        b: NonnegMatrix,
        step: ElementaryStep,
    }

    fn worked() -> Worked {
        let v = IndexSet::range(2);
        let w = IndexSet::new(["w"]).unwrap();
        Worked {
            a: m(&[&[1, 1], &[1, 1]]),
            b: over(m(&[&[2]]), &w, &w),
            step: ElementaryStep {
                r: over(m(&[&[1], &[1]]), &v, &w),
                s: over(m(&[&[1, 1]]), &w, &v),
            },
        }
    }

    #[test]
    fn verify_se_examples() {
        let a = m(&[&[1, 1], &[1, 0]]);
        let id = SeWitness {
            lag: 1,
            r: a.clone(),
            s: NonnegMatrix::identity(a.rows().clone()),
        };
        assert!(verify_se(&a, &a, &id).unwrap());

        let x = worked();
        let w = SeWitness {
            lag: 1,
            r: x.step.r.clone(),
            s: x.step.s.clone(),
        };
        assert!(verify_se(&x.a, &x.b, &w).unwrap());

        let bad = SeWitness {
            lag: 1,
            r: m(&[&[1]]),
            s: m(&[&[2]]),
        };
        assert!(!verify_se(&m(&[&[2]]), &m(&[&[4]]), &bad).unwrap());
    }

    #[test]
    fn verify_se_rejects_bad_shapes() {
        let x = worked();
        let w = SeWitness {
            lag: 1,
            r: x.step.s.clone(),
            s: x.step.r.clone(),
        };
        assert!(matches!(
            verify_se(&x.a, &x.b, &w),
            Err(EquivError::Matrix(MatrixError::DimensionMismatch(_)))
        ));
        let rect = m(&[&[1, 1, 1], &[1, 1, 1]]);
        assert!(matches!(
            verify_se(&rect, &x.b, &w),
            Err(EquivError::Matrix(MatrixError::NotSquare { .. }))
        ));
    }

    #[test]
    fn elementary_step_gives_valid_cse() {
        let x = worked();
        let c = sse_step_to_cse(&x.a, &x.b, &x.step).unwrap();
        assert_eq!(c.psi_a.len(), 4);
        assert!(verify_cse(&x.a, &x.b, &c).unwrap());
        assert!(check_derived_identities(&x.a, &x.b, &c).unwrap());
    }

    #[test]
    fn singleton_step_is_identity() {
        let one = m(&[&[1]]);
        let c = sse_step_to_cse(
            &one,
            &one,
            &ElementaryStep {
                r: one.clone(),
                s: one.clone(),
            },
        )
        .unwrap();
        for f in [&c.phi_r, &c.phi_s, &c.psi_a, &c.psi_b] {
            assert_eq!(f.len(), 1);
        }
        assert!(verify_cse(&one, &one, &c).unwrap());
    }

    #[test]
    fn identity_cse_verifies() {
        for a in [m(&[&[1, 1], &[1, 0]]), m(&[&[2, 1], &[1, 1]]), m(&[&[3]])] {
            let c = identity_cse(&a).unwrap();
            assert!(verify_cse(&a, &a, &c).unwrap());
        }
    }

    #[test]
    fn not_elementary_rejected() {
        let x = worked();
        let wrong = ElementaryStep {
            r: x.step.r.clone(),
            s: over(m(&[&[2, 1]]), x.b.rows(), x.a.rows()),
        };
        assert!(matches!(
            sse_step_to_cse(&x.a, &x.b, &wrong),
            Err(EquivError::NotElementary(_))
        ));
    }

    #[test]
    fn tampered_psi_breaks_compatibility() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let c = identity_cse(&a).unwrap();
        // swap two codomain images inside one block of psi_B
        let f = &c.psi_b;
        let (i, j) = (0..f.len())
            .flat_map(|i| (i + 1..f.len()).map(move |j| (i, j)))
            .find(|&(i, j)| f.domain().block(i) == f.domain().block(j))
            .unwrap();
        let mut fwd = f.forward().to_vec();
        fwd.swap(i, j);
        let tampered = CseWitness {
            psi_b: PathIso::from_forward(f.domain().clone(), f.codomain().clone(), fwd),
            ..c.clone()
        };
        assert!(tampered.psi_b.verify());
        assert!(!verify_cse(&a, &a, &tampered).unwrap());
    }

    #[test]
    fn invalid_underlying_se_is_an_error() {
        let x = worked();
        let mut c = sse_step_to_cse(&x.a, &x.b, &x.step).unwrap();
        c.se.lag = 2;
        assert!(matches!(
            verify_cse(&x.a, &x.b, &c),
            Err(EquivError::InvalidUnderlyingSe)
        ));
    }

    #[test]
    fn compose_identity_with_itself() {
        let a = m(&[&[1, 1], &[1, 0]]);
        let c = identity_cse(&a).unwrap();
        let cc = compose_cse(&a, &a, &a, &c, &c).unwrap();
        assert_eq!(cc.lag(), 2);
        assert!(verify_cse(&a, &a, &cc).unwrap());
        assert!(check_derived_identities(&a, &a, &cc).unwrap());
    }

    #[test]
    fn compose_with_identity_pads_lag() {
        let x = worked();
        let c = sse_step_to_cse(&x.a, &x.b, &x.step).unwrap();
        let idb = identity_cse(&x.b).unwrap();
        let cc = compose_cse(&x.a, &x.b, &x.b, &c, &idb).unwrap();
        assert_eq!(cc.lag(), 2);
        assert_eq!(cc.se.r, x.step.r.multiply(&x.b).unwrap());
        assert_eq!(cc.se.s, x.step.s);
        assert!(verify_cse(&x.a, &x.b, &cc).unwrap());
    }

    #[test]
    fn chain_there_and_back() {
        let x = worked();
        let back = ElementaryStep {
            r: x.step.s.clone(),
            s: x.step.r.clone(),
        };
        let chain = SseChain {
            start: x.a.clone(),
            steps: vec![x.step.clone(), back.clone()],
        };
        // [[2]] = S R, then R S = A1 again
        let c = chain_to_cse(&chain, &x.a).unwrap();
        assert_eq!(c.lag(), 2);
        assert!(verify_cse(&x.a, &x.a, &c).unwrap());

        let single = SseChain {
            start: x.a.clone(),
            steps: vec![x.step.clone()],
        };
        assert_eq!(
            chain_to_cse(&single, &x.b).unwrap(),
            sse_step_to_cse(&x.a, &x.b, &x.step).unwrap()
        );

        let broken = SseChain {
            start: x.a.clone(),
            steps: vec![x.step.clone(), x.step.clone()],
        };
        assert!(matches!(
            chain_to_cse(&broken, &x.b),
            Err(EquivError::BrokenChain(1))
        ));
    }

    #[test]
    fn bundle_roundtrip() {
        let x = worked();
        let c = sse_step_to_cse(&x.a, &x.b, &x.step).unwrap();
        let v = c.to_bundle(&x.a, &x.b);
        let (a, b, back) = CseWitness::from_bundle(&v).unwrap();
        assert_eq!((a, b), (x.a, x.b));
        assert_eq!(back, c);
    }
}
