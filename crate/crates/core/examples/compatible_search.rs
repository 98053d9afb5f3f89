//! Completes an SE witness to a CSE by searching for the four path
//! isomorphisms, lexicographically first.

use shiftequiv::equiv::verify_cse;
use shiftequiv::search::{search_compatible_iso, SearchBudget, SearchOptions};
use shiftequiv::{NonnegMatrix, SeWitness};

fn main() {
    let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
    let b = NonnegMatrix::from_rows(&[[2u64]]);
    let w = SeWitness {
        lag: 1,
        r: NonnegMatrix::from_rows(&[[1u64], [1]]),
        s: NonnegMatrix::from_rows(&[[1u64, 1]]),
    };
    let budget = SearchBudget::default_for(&a, &b);
    let report = search_compatible_iso(&a, &b, &w, &budget, &SearchOptions::default()).unwrap();
    println!("nodes: {}", report.nodes);
    let c = report
        .outcome
        .found()
        .expect("the worked pair has a compatible witness");
    println!("re-verifies: {}", verify_cse(&a, &b, c).unwrap());
    println!("psi_A forward: {:?}", c.psi_a.forward());
    println!("phi_R forward: {:?}", c.phi_r.forward());
}
