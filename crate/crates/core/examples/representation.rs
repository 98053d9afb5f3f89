//! Builds the truncated Cuntz–Krieger representation of the worked CSE,
//! checks the relations, twists by a few roots of unity and prints part of
//! the dump.

use shiftequiv::ckrep::{
    build_representation, ck_relations_report, dump, rse_equations_report, twist_representation,
    Angle,
};
use shiftequiv::equiv::sse_step_to_cse;
use shiftequiv::{ElementaryStep, NonnegMatrix};

fn main() {
    let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
    let b = NonnegMatrix::from_rows(&[[2u64]]);
    let step = ElementaryStep {
        r: NonnegMatrix::from_rows(&[[1u64], [1]]),
        s: NonnegMatrix::from_rows(&[[1u64, 1]]),
    };
    let c = sse_step_to_cse(&a, &b, &step).unwrap();
    let depth = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);
    let rep = build_representation(&a, &b, &c, depth).unwrap();
    println!("depth {depth}: {} basis paths", rep.basis.len());

    for z in [
        Angle::ONE,
        Angle::new(1, 2),
        Angle::new(1, 4),
        Angle::new(1, 6),
    ] {
        let t = twist_representation(&rep, z);
        let ck = ck_relations_report(&t, c.lag());
        let rse = rse_equations_report(&t, &c, c.lag());
        println!(
            "z = {z}: CK {} ({} checked, {} undetermined), RSE {} ({} checked)",
            ck.holds, ck.checked, ck.skipped_unknown, rse.holds, rse.checked
        );
    }

    let d = dump(&rep);
    for op in d["operators"].as_array().unwrap() {
        println!(
            "{:<16} consumption {}",
            op["label"].as_str().unwrap(),
            op["consumption"]
        );
    }
}
