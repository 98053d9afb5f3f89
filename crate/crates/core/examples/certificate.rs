//! Drives the command front end in-process: writes a pair file, runs
//! `search-elementary` with one and four workers, and replays the
//! certificate.

use std::fs;

use shiftequiv::cli::{certificate_roundtrip, execute, Certificate};
use shiftequiv::NonnegMatrix;

fn main() {
    let dir = std::env::temp_dir().join(format!("shiftequiv-example-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let pair = dir.join("pair.json");
    let a = NonnegMatrix::from_rows(&[[1u64, 1], [1, 1]]);
    let b = NonnegMatrix::from_rows(&[[2u64]]);
    fs::write(&pair, serde_json::json!({ "A": a, "B": b }).to_string()).unwrap();
    let pair = pair.to_str().unwrap();

    let one = execute(["shiftequiv", "search-elementary", "--pair", pair], None);
    let four = execute(
        [
            "shiftequiv",
            "search-elementary",
            "--pair",
            pair,
            "--workers",
            "4",
        ],
        None,
    );
    println!(
        "exit {} / {}; identical output: {}",
        one.code,
        four.code,
        one.stdout == four.stdout
    );

    let cert: Certificate = serde_json::from_str(&one.stdout).unwrap();
    for (name, pass) in &cert.checks {
        println!("  {name}: {pass}");
    }
    println!("replays: {}", certificate_roundtrip(&cert, 4).unwrap());

    let mut forged = cert.clone();
    forged.result["nodes"] = serde_json::json!(0);
    println!(
        "forged replays: {}",
        certificate_roundtrip(&forged, 1).unwrap()
    );
    fs::remove_dir_all(&dir).ok();
}
