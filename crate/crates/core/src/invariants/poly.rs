//! Integer polynomials with ascending coefficient vectors.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use super::snf::{identity, IntMatrix};

/// `coeffs[i]` is the coefficient of `t^i`; no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    pub coeffs: Vec<BigInt>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Poly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Poly {
        Poly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Divides out the largest power of `t`.
    pub fn strip_t(&self) -> Poly {
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        Poly::new(self.coeffs[k.min(self.coeffs.len())..].to_vec())
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.coeffs.iter().map(|c| c.to_string()))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            first = false;
            let show_mag = i == 0 || !mag.is_one();
            if show_mag {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "t")?,
                _ => write!(f, "t^{i}")?,
            }
        }
        Ok(())
    }
}

/// `det(tI − M)` by the Faddeev–LeVerrier recursion (exact over ℤ).
pub fn char_poly(m: &IntMatrix) -> Poly {
    let n = m.len();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut mk = vec![vec![BigInt::zero(); n]; n];
    let id = identity(n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let prod = super::snf::mul(m, &mk);
        mk = prod
            .into_iter()
            .zip(&id)
            .map(|(row, irow)| {
                row.into_iter()
                    .zip(irow)
                    .map(|(x, e)| x + e * &coeffs[n - k + 1])
                    .collect()
            })
            .collect();
        let am = super::snf::mul(m, &mk);
        let trace: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -trace / BigInt::from(k);
    }
    Poly::new(coeffs)
}
