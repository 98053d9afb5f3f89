//! Obstruction reports for a few pairs.

use shiftequiv::invariants::se_obstruction_report;
use shiftequiv::NonnegMatrix;

fn main() {
    let pairs = [
        (
            "full 2-shift, two presentations",
            &[&[1u64, 1][..], &[1, 1]][..],
            &[&[2u64][..]][..],
        ),
        ("[[2]] vs [[4]]", &[&[2u64][..]][..], &[&[4u64][..]][..]),
        (
            "golden mean vs [[2]]",
            &[&[1u64, 1][..], &[1, 0]][..],
            &[&[2u64][..]][..],
        ),
        (
            "[[3]] vs [[1,1],[2,2]]",
            &[&[3u64][..]][..],
            &[&[1u64, 1][..], &[2, 2]][..],
        ),
    ];
    for (name, a, b) in pairs {
        let a = NonnegMatrix::from_rows(a);
        let b = NonnegMatrix::from_rows(b);
        let r = se_obstruction_report(&a, &b).unwrap();
        println!("{name}: {}", r.verdict);
        println!(
            "  char poly  {} | {}",
            r.a.char_poly_display, r.b.char_poly_display
        );
        println!(
            "  BF group   {} | {}",
            r.a.bowen_franks_display, r.b.bowen_franks_display
        );
        println!(
            "  rank       {} | {}",
            r.a.dimension.eventual_rank, r.b.dimension.eventual_rank
        );
        for reason in &r.reasons {
            println!("  - {reason}");
        }
    }
}
