//! Bounded searches: an elementary step, an SSE chain and an SE witness.
//! Run with `-- 4` to use four workers; the answers do not change.

use shiftequiv::search::{
    search_elementary, search_se_witness, search_sse_chain, SearchBudget, SearchOptions,
};
use shiftequiv::NonnegMatrix;

fn main() {
    let workers = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let opts = SearchOptions::with_workers(workers);

    let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
    let b = NonnegMatrix::from_rows(&[[2u64]]);
    let budget = SearchBudget::default_for(&a, &b);

    let el = search_elementary(&a, &b, &budget, &opts).unwrap();
    println!(
        "elementary ({} nodes): {:?}",
        el.nodes,
        el.outcome.found().map(|s| (&s.r, &s.s))
    );

    let golden = NonnegMatrix::from_rows(&[[1u64, 1], [1, 0]]);
    let other = NonnegMatrix::from_rows(&[[0u64, 1], [1, 1]]);
    let budget = SearchBudget::default_for(&golden, &other);
    let chain = search_sse_chain(&golden, &other, &budget, &opts).unwrap();
    match chain.outcome.found() {
        Some(c) => println!("chain of {} steps ({} nodes)", c.steps.len(), chain.nodes),
        None => println!("no chain ({} nodes)", chain.nodes),
    }

    let two = NonnegMatrix::from_rows(&[[2u64]]);
    let four = NonnegMatrix::from_rows(&[[4u64]]);
    let budget = SearchBudget::default_for(&two, &four);
    let se = search_se_witness(&two, &four, &budget, &opts).unwrap();
    println!("[[2]] vs [[4]]: {:?} after {} nodes", se.outcome, se.nodes);
}
