//! Computable obstructions to SE and SSE: the characteristic polynomial away
//! from zero, the Bowen–Franks group, and a finite presentation of the
//! dimension group with its automorphism.

pub mod poly;
pub mod snf;

use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::matrix::{MatrixError, NonnegMatrix};
pub use poly::Poly;
use snf::{det, integer_kernel, mul, smith_normal_form, transpose, IntMatrix};

/// Coefficient bound for the unimodular conjugacy search.
pub const CONJUGACY_COEFF_BOUND: i64 = 2;
/// Cap on the number of kernel combinations tried.
pub const CONJUGACY_MAX_TRIALS: usize = 200_000;

pub fn to_int(a: &NonnegMatrix) -> IntMatrix {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| BigInt::from(x.clone())).collect())
        .collect()
}

pub fn char_poly(a: &NonnegMatrix) -> Result<Poly, MatrixError> {
    a.ensure_square()?;
    Ok(poly::char_poly(&to_int(a)))
}

/// Characteristic polynomial with every factor of `t` removed.
pub fn char_poly_away_from_zero(a: &NonnegMatrix) -> Result<Poly, MatrixError> {
    Ok(char_poly(a)?.strip_t())
}

/// `coker(I − A)` as elementary divisors (each > 1, each dividing the next)
/// plus free rank, together with the sign of `det(I − A)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BowenFranks {
    #[serde(serialize_with = "ser_bigints")]
    pub divisors: Vec<BigInt>,
    pub free_rank: usize,
    pub det_sign: i8,
}

impl BowenFranks {
    pub fn same_group(&self, other: &BowenFranks) -> bool {
        self.divisors == other.divisors && self.free_rank == other.free_rank
    }
}

impl fmt::Display for BowenFranks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.divisors.iter().map(|d| format!("Z/{d}")).collect();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".into()),
            k => parts.push(format!("Z^{k}")),
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn ser_bigints<S: serde::Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn ser_int_matrix<S: serde::Serializer>(m: &IntMatrix, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(
        m.iter()
            .map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
    )
}

fn ser_opt_int_matrix<S: serde::Serializer>(
    m: &Option<IntMatrix>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => ser_int_matrix(m, s),
        None => s.serialize_none(),
    }
}

pub fn bowen_franks(a: &NonnegMatrix) -> Result<BowenFranks, MatrixError> {
    a.ensure_square()?;
    let n = a.nrows();
    let mut m = to_int(a);
    for (i, row) in m.iter_mut().enumerate() {
        for x in row.iter_mut() {
            *x = -x.clone();
        }
        row[i] += BigInt::one();
    }
    let s = smith_normal_form(&m);
    let divisors = s.diagonal().into_iter().filter(|d| !d.is_one()).collect();
    let d = det(&m);
    let det_sign = if d.is_zero() {
        0
    } else if d.is_positive() {
        1
    } else {
        -1
    };
    Ok(BowenFranks {
        divisors,
        free_rank: n - s.rank,
        det_sign,
    })
}

/// The eventual image lattice of `Aᵀ` (saturated in `ℤ^V`) and the action of
/// `Aᵀ` on it. `basis` has the lattice basis as columns; `action` satisfies
/// `Aᵀ · basis = basis · action`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionData {
    pub eventual_rank: usize,
    #[serde(serialize_with = "ser_int_matrix")]
    pub basis: IntMatrix,
    #[serde(serialize_with = "ser_int_matrix")]
    pub action: IntMatrix,
}

pub fn dimension_pair_data(a: &NonnegMatrix) -> Result<DimensionData, MatrixError> {
    a.ensure_square()?;
    let n = a.nrows();
    let at = transpose(&to_int(a));
    let mut power = at.clone();
    for _ in 1..n {
        power = mul(&power, &at);
    }
    let s = smith_normal_form(&power);
    let r = s.rank;
    // image of (Aᵀ)ⁿ is P⁻¹ D ℤⁿ; its saturation is spanned by the first r columns of P⁻¹
    let basis: IntMatrix = s.p_inv.iter().map(|row| row[..r].to_vec()).collect();
    let image = mul(&s.p, &mul(&at, &basis));
    let action: IntMatrix = image[..r].to_vec();
    debug_assert!(image[r..].iter().flatten().all(|x| x.is_zero()));
    Ok(DimensionData {
        eventual_rank: r,
        basis,
        action,
    })
}

/// Bounded search for `U ∈ GL_r(ℤ)` with `U · ka = kb · U`: small integer
/// combinations of an integer kernel basis of `U ↦ U·ka − kb·U`.
pub fn find_unimodular_conjugacy(
    ka: &IntMatrix,
    kb: &IntMatrix,
    bound: i64,
    max_trials: usize,
) -> Option<IntMatrix> {
    let r = ka.len();
    if r != kb.len() {
        return None;
    }
    if r == 0 {
        return Some(Vec::new());
    }
    let vars = r * r;
    let mut eqs = vec![vec![BigInt::zero(); vars]; vars];
    for i in 0..r {
        for j in 0..r {
            let row = &mut eqs[i * r + j];
            for l in 0..r {
                row[i * r + l] += &ka[l][j];
                row[l * r + j] -= &kb[i][l];
            }
        }
    }
    let kernel = integer_kernel(&eqs, vars);
    if kernel.is_empty() {
        return None;
    }
    let mut trials = 0usize;
    for b in 1..=bound {
        for coeffs in (0..kernel.len()).map(|_| -b..=b).multi_cartesian_product() {
            if coeffs.iter().all(|c| c.abs() < b) {
                continue;
            }
            trials += 1;
            if trials > max_trials {
                return None;
            }
            let x: Vec<BigInt> = (0..vars)
                .map(|k| {
                    kernel
                        .iter()
                        .zip(&coeffs)
                        .map(|(v, &c)| &v[k] * BigInt::from(c))
                        .sum()
                })
                .collect();
            let u: IntMatrix = x.chunks(r).map(|c| c.to_vec()).collect();
            if det(&u).abs().is_one() {
                return Some(u);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    NotSE,
    NotSSEKnownObstruction,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SideInvariants {
    pub char_poly_away_from_zero: Poly,
    pub char_poly_display: String,
    pub bowen_franks: BowenFranks,
    pub bowen_franks_display: String,
    pub dimension: DimensionData,
}

impl SideInvariants {
    pub fn compute(a: &NonnegMatrix) -> Result<SideInvariants, MatrixError> {
        let cp = char_poly_away_from_zero(a)?;
        let bf = bowen_franks(a)?;
        Ok(SideInvariants {
            char_poly_display: cp.to_string(),
            char_poly_away_from_zero: cp,
            bowen_franks_display: bf.to_string(),
            bowen_franks: bf,
            dimension: dimension_pair_data(a)?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    #[serde(rename = "A")]
    pub a: SideInvariants,
    #[serde(rename = "B")]
    pub b: SideInvariants,
    /// `U` with `U · action_A = action_B · U`, `det U = ±1`, when found.
    #[serde(serialize_with = "ser_opt_int_matrix")]
    pub conjugacy: Option<IntMatrix>,
}

/// Aggregates the invariants into a verdict. `NotSE` is only returned when
/// an SE invariant provably differs; failing to find a conjugacy of the
/// dimension actions is reported as a reason but never as a proof.
pub fn se_obstruction_report(
    a: &NonnegMatrix,
    b: &NonnegMatrix,
) -> Result<ObstructionReport, MatrixError> {
    let ia = SideInvariants::compute(a)?;
    let ib = SideInvariants::compute(b)?;
    let mut reasons = Vec::new();
    let mut verdict = Verdict::Inconclusive;
    if ia.char_poly_away_from_zero != ib.char_poly_away_from_zero {
        reasons.push(format!(
            "characteristic polynomials away from zero differ: {} vs {}",
            ia.char_poly_display, ib.char_poly_display
        ));
        verdict = Verdict::NotSE;
    }
    if ia.dimension.eventual_rank != ib.dimension.eventual_rank {
        reasons.push(format!(
            "eventual ranks differ: {} vs {}",
            ia.dimension.eventual_rank, ib.dimension.eventual_rank
        ));
        verdict = Verdict::NotSE;
    }
    let conjugacy = if verdict == Verdict::NotSE {
        None
    } else {
        find_unimodular_conjugacy(
            &ia.dimension.action,
            &ib.dimension.action,
            CONJUGACY_COEFF_BOUND,
            CONJUGACY_MAX_TRIALS,
        )
    };
    if verdict != Verdict::NotSE && conjugacy.is_none() {
        reasons.push(
            "no unimodular conjugacy of the dimension actions found within the search bound".into(),
        );
    }
    if verdict != Verdict::NotSE {
        if !ia.bowen_franks.same_group(&ib.bowen_franks) {
            reasons.push(format!(
                "Bowen-Franks groups differ: {} vs {}",
                ia.bowen_franks_display, ib.bowen_franks_display
            ));
            verdict = Verdict::NotSSEKnownObstruction;
        }
        if ia.bowen_franks.det_sign != ib.bowen_franks.det_sign {
            reasons.push(format!(
                "signs of det(I - A) differ: {} vs {}",
                ia.bowen_franks.det_sign, ib.bowen_franks.det_sign
            ));
            verdict = Verdict::NotSSEKnownObstruction;
        }
    }
    Ok(ObstructionReport {
        verdict,
        reasons,
        a: ia,
        b: ib,
        conjugacy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn m(rows: &[&[u64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows)
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// det(tI − A) by the Leibniz formula over polynomial entries.
    fn leibniz_char_poly(a: &[Vec<i64>]) -> Vec<i64> {
        let n = a.len();
        let mut total = vec![0i64; n + 1];
        for perm in (0..n).permutations(n) {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| perm[i] > perm[j])
                .count();
            let mut prod = vec![1i64];
            for (i, &j) in perm.iter().enumerate() {
                let entry: Vec<i64> = if i == j {
                    vec![-a[i][j], 1]
                } else {
                    vec![-a[i][j]]
                };
                let mut next = vec![0i64; prod.len() + entry.len() - 1];
                for (p, x) in prod.iter().enumerate() {
                    for (q, y) in entry.iter().enumerate() {
                        next[p + q] += x * y;
                    }
                }
                prod = next;
            }
            let sign = if inversions % 2 == 0 { 1 } else { -1 };
            for (k, c) in prod.iter().enumerate() {
                total[k] += sign * c;
            }
        }
        total
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(
            char_poly_away_from_zero(&m(&[&[1, 1], &[1, 1]])).unwrap(),
            Poly::from_i64(&[-2, 1])
        );
        assert_eq!(
            char_poly_away_from_zero(&m(&[&[2]])).unwrap(),
            Poly::from_i64(&[-2, 1])
        );
        assert_eq!(
            char_poly_away_from_zero(&m(&[&[1, 1], &[1, 0]])).unwrap(),
            Poly::from_i64(&[-1, -1, 1])
        );
        assert!(char_poly(&m(&[&[1, 1, 1], &[1, 1, 1]])).is_err());
    }

    #[test]
    fn char_poly_matches_leibniz() {
        let cases: Vec<Vec<Vec<i64>>> = vec![
            vec![vec![2, 1, 0], vec![1, 0, 3], vec![0, 1, 1]],
            vec![
                vec![0, 1, 0, 0],
                vec![0, 0, 1, 0],
                vec![0, 0, 0, 1],
                vec![1, 1, 0, 0],
            ],
            vec![vec![3, 1, 4], vec![1, 5, 9], vec![2, 6, 5]],
        ];
        for a in cases {
            let nn = NonnegMatrix::from_rows(
                &a.iter()
                    .map(|r| r.iter().map(|&x| x as u64).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            );
            let got: Vec<i64> = char_poly(&nn)
                .unwrap()
                .coeffs
                .iter()
                .map(|c| c.to_i64().unwrap())
                .collect();
            assert_eq!(got, leibniz_char_poly(&a));
        }
    }

    #[test]
    fn bowen_franks_examples() {
        let bf = bowen_franks(&m(&[&[3]])).unwrap();
        assert_eq!(
            (bf.divisors.clone(), bf.free_rank, bf.det_sign),
            (ints(&[2]), 0, -1)
        );
        assert_eq!(bf.to_string(), "Z/2");
        let bf = bowen_franks(&m(&[&[2]])).unwrap();
        assert_eq!((bf.divisors.len(), bf.free_rank), (0, 0));
        assert_eq!(bf.to_string(), "0");
        let bf = bowen_franks(&m(&[&[1, 1], &[1, 0]])).unwrap();
        assert_eq!((bf.divisors.len(), bf.free_rank, bf.det_sign), (0, 0, -1));
        let bf = bowen_franks(&m(&[&[1]])).unwrap();
        assert_eq!((bf.free_rank, bf.det_sign), (1, 0));
    }

    #[test]
    fn dimension_examples() {
        let d = dimension_pair_data(&m(&[&[2]])).unwrap();
        assert_eq!((d.eventual_rank, d.action.clone()), (1, vec![ints(&[2])]));
        let d = dimension_pair_data(&m(&[&[1, 1], &[1, 1]])).unwrap();
        assert_eq!((d.eventual_rank, d.action.clone()), (1, vec![ints(&[2])]));
        assert_eq!(
            d.basis.iter().map(|r| r[0].abs()).collect::<Vec<_>>(),
            ints(&[1, 1])
        );
        let d = dimension_pair_data(&m(&[&[1, 1], &[1, 0]])).unwrap();
        assert_eq!(d.eventual_rank, 2);
        // the action is Aᵀ written in a unimodular basis: conjugate to Aᵀ itself
        let at = vec![ints(&[1, 1]), ints(&[1, 0])];
        assert!(find_unimodular_conjugacy(&d.action, &at, 2, 10_000).is_some());
        assert_eq!(mul(&d.basis, &d.action), mul(&at, &d.basis));
    }

    #[test]
    fn conjugacy_search() {
        let ka = vec![ints(&[1, 1]), ints(&[1, 0])];
        let kb = vec![ints(&[0, 1]), ints(&[1, 1])];
        let u = find_unimodular_conjugacy(&ka, &kb, 2, 10_000).unwrap();
        assert_eq!(mul(&u, &ka), mul(&kb, &u));
        assert!(det(&u).abs().is_one());
        // different traces: no conjugacy at all
        assert!(
            find_unimodular_conjugacy(&ka, &vec![ints(&[2, 1]), ints(&[1, 0])], 2, 10_000)
                .is_none()
        );
    }

    #[test]
    fn report_examples() {
        let r = se_obstruction_report(&m(&[&[2]]), &m(&[&[4]])).unwrap();
        assert_eq!(r.verdict, Verdict::NotSE);
        assert!(r.reasons[0].contains("t - 2 vs t - 4"));

        let r = se_obstruction_report(&m(&[&[1, 1], &[1, 1]]), &m(&[&[2]])).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.conjugacy.is_some());

        let a = m(&[&[2, 1], &[0, 1]]);
        let pap = m(&[&[1, 0], &[1, 2]]);
        let r = se_obstruction_report(&a, &pap).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.reasons.is_empty());
    }

    #[test]
    fn elementary_pair_is_inconclusive() {
        // [[1,1],[2,2]] = RS and [[3]] = SR for R = [[1],[2]], S = [[1,1]]
        let r = se_obstruction_report(&m(&[&[3]]), &m(&[&[1, 1], &[2, 2]])).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.a.bowen_franks, r.b.bowen_franks);
    }

    #[test]
    fn report_against_itself_is_never_not_se() {
        for a in [
            m(&[&[0, 1], &[1, 0]]),
            m(&[&[1]]),
            m(&[&[2, 1, 0], &[0, 1, 1], &[1, 0, 1]]),
        ] {
            assert_ne!(
                se_obstruction_report(&a, &a).unwrap().verdict,
                Verdict::NotSE
            );
        }
    }

    #[test]
    fn lattice_conjugacy_is_not_an_se_invariant() {
        // A = RS, B = SR with R = [[0,2],[1,0]], S = diag(1,2)
        let (a, b) = (m(&[&[0, 4], &[1, 0]]), m(&[&[0, 2], &[2, 0]]));
        let step = crate::ElementaryStep {
            r: m(&[&[0, 2], &[1, 0]]),
            s: m(&[&[1, 0], &[0, 2]]),
        };
        assert_eq!(
            (step.source().unwrap(), step.target().unwrap()),
            (a.clone(), b.clone())
        );
        let (da, db) = (
            dimension_pair_data(&a).unwrap(),
            dimension_pair_data(&b).unwrap(),
        );
        // cokernels of the actions are Z/4 and (Z/2)^2, so no unimodular conjugacy exists
        let divisors = |k: &IntMatrix| snf::smith_normal_form(k).diagonal();
        assert_eq!(divisors(&da.action), ints(&[1, 4]));
        assert_eq!(divisors(&db.action), ints(&[2, 2]));
        assert!(
            find_unimodular_conjugacy(&da.action, &db.action, 3, CONJUGACY_MAX_TRIALS).is_none()
        );
        assert_eq!(
            se_obstruction_report(&a, &b).unwrap().verdict,
            Verdict::Inconclusive
        );
    }
}
