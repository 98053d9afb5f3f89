//! Folds a two-step SSE chain into one lag-two CSE, and checks that an
//! empty chain gives the reflexive witness.

use shiftequiv::equiv::{
    chain_to_cse, check_derived_identities, compose_cse, sse_step_to_cse, verify_cse,
};
use shiftequiv::{ElementaryStep, NonnegMatrix, SseChain};

fn main() {
    let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
    let first = ElementaryStep {
        r: NonnegMatrix::from_rows(&[[1u64], [1]]),
        s: NonnegMatrix::from_rows(&[[1u64, 1]]),
    };
    let b = first.target().unwrap();
    // and back again
    let second = ElementaryStep {
        r: first.s.clone(),
        s: first.r.clone(),
    };
    let c = second.target().unwrap();

    let x = sse_step_to_cse(&a, &b, &first).unwrap();
    let y = sse_step_to_cse(&b, &c, &second).unwrap();
    let z = compose_cse(&a, &b, &c, &x, &y).unwrap();
    println!("composite lag {}: R = {}, S = {}", z.lag(), z.se.r, z.se.s);
    println!("verify_cse: {}", verify_cse(&a, &c, &z).unwrap());
    println!(
        "derived identities: {}",
        check_derived_identities(&a, &c, &z).unwrap()
    );

    let chain = SseChain {
        start: a.clone(),
        steps: vec![first, second],
    };
    let folded = chain_to_cse(&chain, &c).unwrap();
    println!("chain fold equals explicit composite: {}", folded == z);

    let empty = SseChain {
        start: a.clone(),
        steps: vec![],
    };
    let id = chain_to_cse(&empty, &a).unwrap();
    println!(
        "empty chain: lag {}, R = {}, S = {}",
        id.lag(),
        id.se.r,
        id.se.s
    );
}
