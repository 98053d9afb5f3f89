//! Turns an elementary step A = RS, B = SR into a compatible shift
//! equivalence and prints its path isomorphisms.

use shiftequiv::equiv::{check_derived_identities, sse_step_to_cse, verify_cse};
use shiftequiv::{ElementaryStep, NonnegMatrix};

fn main() {
    let r = NonnegMatrix::from_rows(&[[1u64, 0], [1, 1]]);
    let s = NonnegMatrix::from_rows(&[[1u64, 1], [0, 1]]);
    let step = ElementaryStep { r, s };
    let a = step.source().unwrap();
    let b = step.target().unwrap();
    println!("A = {a}, B = {b}");

    let c = sse_step_to_cse(&a, &b, &step).unwrap();
    println!("verify_cse: {}", verify_cse(&a, &b, &c).unwrap());
    println!(
        "derived identities: {}",
        check_derived_identities(&a, &b, &c).unwrap()
    );

    for (name, f) in [
        ("phi_R", &c.phi_r),
        ("phi_S", &c.phi_s),
        ("psi_A", &c.psi_a),
        ("psi_B", &c.psi_b),
    ] {
        println!("{name}: {} pairs", f.len());
        for i in 0..f.len() {
            let from = f.domain().path(i);
            let to = f.codomain().path(f.apply_index(i));
            let show = |p: &shiftequiv::Path| {
                p.edges()
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            println!("  {} -> {}", show(from), show(to));
        }
    }
}
