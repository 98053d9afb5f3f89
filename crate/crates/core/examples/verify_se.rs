//! Checks a lag-one shift equivalence between the full 2-shift written two ways.

use shiftequiv::equiv::{se_checks, verify_se};
use shiftequiv::{NonnegMatrix, SeWitness};

fn main() {
    let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
    let b = NonnegMatrix::from_rows(&[[2u64]]);
    let w = SeWitness {
        lag: 1,
        r: NonnegMatrix::from_rows(&[[1u64], [1]]),
        s: NonnegMatrix::from_rows(&[[1u64, 1]]),
    };
    for c in se_checks(&a, &b, &w).unwrap() {
        println!("{:<50} {}", c.name, if c.pass { "ok" } else { "FAIL" });
    }
    println!("verified: {}", verify_se(&a, &b, &w).unwrap());

    // lag two with the same R, S is not a witness
    let lag2 = SeWitness { lag: 2, ..w };
    println!("lag 2 verified: {}", verify_se(&a, &b, &lag2).unwrap());
}
