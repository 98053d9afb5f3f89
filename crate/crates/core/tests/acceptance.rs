//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::*;
use shiftequiv::ckrep::{
    build_representation, twist_representation, verify_ck_relations, verify_rse_equations, Angle,
};
use shiftequiv::cli::execute;
use shiftequiv::equiv::{chain_to_cse, check_derived_identities, compose_cse, verify_cse};
use shiftequiv::invariants::{
    bowen_franks, char_poly_away_from_zero, se_obstruction_report, Verdict,
};
use shiftequiv::paths::edge_set;
use shiftequiv::search::{search_compatible_iso, search_elementary, SearchBudget, SearchOptions};
use shiftequiv::{CseWitness, NonnegMatrix, SseChain};

type Corpus = Vec<(NonnegMatrix, NonnegMatrix, CseWitness)>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn elementary_soundness(corpus: &mut Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for _ in 0..200 {
        let (a, b, step) = random_step(&mut rng, 4, 8);
        let c = step_cse(&a, &b, &step);
        if !verify_cse(&a, &b, &c).unwrap() {
            failures += 1;
        }
        corpus.push((a, b, c));
    }
    outcome(
        failures == 0,
        format!("200 random steps, {failures} failures"),
    )
}

fn transitivity(corpus: &mut Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..100 {
        let (a, b, c, first, second) = random_composable(&mut rng, 12);
        let x = step_cse(&a, &b, &first);
        let y = step_cse(&b, &c, &second);
        let z = compose_cse(&a, &b, &c, &x, &y).unwrap();
        let ok = verify_cse(&a, &c, &z).unwrap() && check_derived_identities(&a, &c, &z).unwrap();
        if !ok {
            failures += 1;
        }
        let chain = SseChain {
            start: a.clone(),
            steps: vec![first, second],
        };
        if chain_to_cse(&chain, &c).unwrap() != z {
            failures += 1;
        }
        corpus.push((a, c, z));
    }
    outcome(
        failures == 0,
        format!("100 composable pairs, {failures} failures"),
    )
}

fn closure(corpus: &Corpus) -> Outcome {
    let mut verified = 0;
    let mut failures = 0;
    for (a, b, c) in corpus {
        if verify_cse(a, b, c).unwrap() {
            verified += 1;
            if !check_derived_identities(a, b, c).unwrap() {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("{verified} verified witnesses, {failures} failures"),
    )
}

fn edge_count(x: &NonnegMatrix) -> usize {
    edge_set(x).unwrap().len()
}

fn representation(corpus: &Corpus) -> Outcome {
    let twists = [
        Angle::ONE,
        Angle::new(1, 2),
        Angle::new(1, 4),
        Angle::new(1, 6),
    ];
    let mut tested = 0;
    let mut failures = Vec::new();
    for (i, (a, b, c)) in corpus.iter().enumerate() {
        if edge_count(&c.se.r) + edge_count(&c.se.s) > 20 {
            continue;
        }
        tested += 1;
        let rep = build_representation(a, b, c, 6).unwrap();
        for z in twists {
            let t = twist_representation(&rep, z);
            if !verify_ck_relations(&t, c.lag()) || !verify_rse_equations(&t, c, c.lag()) {
                failures.push(format!("witness {i} at z = {z}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{tested} witnesses at L = 6 with 4 twists, failures: {failures:?}"),
    )
}

fn search_oracle(corpus: &mut Corpus) -> Outcome {
    let mut disagreements = Vec::new();
    let cases = small_se_witnesses();
    let mut found = 0;
    for (i, (a, b, w)) in cases.iter().enumerate() {
        let budget = SearchBudget {
            node_limit: 50_000_000,
            ..SearchBudget::default_for(a, b)
        };
        let report = search_compatible_iso(a, b, w, &budget, &SearchOptions::default()).unwrap();
        let oracle = brute_force_cse(a, b, w);
        if report.outcome.found() != oracle.as_ref() {
            disagreements.push(i);
        }
        if let Some(c) = oracle {
            found += 1;
            corpus.push((a.clone(), b.clone(), c));
        }
    }
    outcome(
        disagreements.is_empty(),
        format!(
            "{} SE witnesses, {found} compatible, disagreements at {disagreements:?}",
            cases.len()
        ),
    )
}

fn worked_pair() -> Outcome {
    let a = m(&[&[1, 1], &[1, 1]]);
    let b = m(&[&[2]]);
    let budget = SearchBudget::default_for(&a, &b);
    let Some(step) = search_elementary(&a, &b, &budget, &SearchOptions::default())
        .unwrap()
        .outcome
        .found()
        .cloned()
    else {
        return outcome(false, "no elementary step found");
    };
    let chain = SseChain {
        start: a.clone(),
        steps: vec![step],
    };
    let c = chain_to_cse(&chain, &b).unwrap();
    let cse_ok = verify_cse(&a, &b, &c).unwrap();
    let rep = build_representation(&a, &b, &c, 6).unwrap();
    let rep_ok = verify_ck_relations(&rep, 2) && verify_rse_equations(&rep, &c, 2);
    let same = se_obstruction_report(&a, &b).unwrap().verdict == Verdict::Inconclusive;
    let two_four = se_obstruction_report(&m(&[&[2]]), &m(&[&[4]])).unwrap();
    let polys = [&two_four.a, &two_four.b].map(|s| s.char_poly_away_from_zero.to_string());
    let not_se = two_four.verdict == Verdict::NotSE && polys == ["t - 2", "t - 4"];
    outcome(
        cse_ok && rep_ok && same && not_se,
        format!("cse {cse_ok}, rep {rep_ok}, inconclusive {same}, [[2]] vs [[4]] NotSE {not_se}"),
    )
}

fn invariant_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    for _ in 0..500 {
        let (a, b, _) = random_step(&mut rng, 4, 8);
        let (ba, bb) = (bowen_franks(&a).unwrap(), bowen_franks(&b).unwrap());
        let same_bf = ba.same_group(&bb) && ba.det_sign == bb.det_sign;
        let same_cp =
            char_poly_away_from_zero(&a).unwrap() == char_poly_away_from_zero(&b).unwrap();
        if !(same_bf && same_cp) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("500 random steps, {failures} failures"),
    )
}

fn write(dir: &Path, name: &str, v: &serde_json::Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

/// The command-line scenarios shared with the replay check.
fn cli_suite(dir: &Path) -> Vec<Vec<String>> {
    let a = m(&[&[1, 1], &[1, 1]]);
    let b = m(&[&[2]]);
    let golden = m(&[&[1, 1], &[1, 0]]);
    let golden_t = m(&[&[0, 1], &[1, 1]]);
    let w = json!({ "m": 1, "R": m(&[&[1], &[1]]), "S": m(&[&[1, 1]]) });
    let step = json!({ "R": m(&[&[1], &[1]]), "S": m(&[&[1, 1]]) });
    let c = step_cse(&a, &b, &serde_json::from_value(step.clone()).unwrap());
    let back = step_cse(
        &b,
        &a,
        &shiftequiv::ElementaryStep {
            r: m(&[&[1, 1]]),
            s: m(&[&[1], &[1]]),
        },
    );
    let chain =
        json!({ "start": a, "steps": [step, { "R": m(&[&[1, 1]]), "S": m(&[&[1], &[1]]) }] });
    let files = [
        ("pair", write(dir, "pair.json", &json!({ "A": a, "B": b }))),
        (
            "golden",
            write(dir, "golden.json", &json!({ "A": golden, "B": golden_t })),
        ),
        (
            "two_four",
            write(
                dir,
                "two_four.json",
                &json!({ "A": m(&[&[2]]), "B": m(&[&[4]]) }),
            ),
        ),
        (
            "three",
            write(
                dir,
                "three.json",
                &json!({ "A": m(&[&[3]]), "B": m(&[&[1, 1], &[2, 2]]) }),
            ),
        ),
        ("se", write(dir, "se.json", &w)),
        ("step", write(dir, "step.json", &step)),
        ("cse", write(dir, "cse.json", &c.to_bundle(&a, &b))),
        ("back", write(dir, "back.json", &back.to_bundle(&b, &a))),
        ("chain", write(dir, "chain.json", &chain)),
        (
            "tight",
            write(dir, "tight.json", &json!({ "node_limit": 3 })),
        ),
    ];
    let f = |k: &str| files.iter().find(|(n, _)| *n == k).unwrap().1.clone();
    let cmd = |parts: &[&str]| parts.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        cmd(&["verify-se", "--pair", &f("pair"), "--witness", &f("se")]),
        cmd(&["verify-cse", "--witness", &f("cse")]),
        cmd(&["derived-identities", "--witness", &f("cse")]),
        cmd(&["sse-to-cse", "--pair", &f("pair"), "--witness", &f("step")]),
        cmd(&[
            "compose-cse",
            "--witness",
            &f("cse"),
            "--witness",
            &f("back"),
        ]),
        cmd(&["chain-to-cse", "--witness", &f("chain")]),
        cmd(&["search-elementary", "--pair", &f("pair")]),
        cmd(&["search-elementary", "--pair", &f("three")]),
        cmd(&["search-sse", "--pair", &f("golden")]),
        cmd(&["search-sse", "--pair", &f("three")]),
        cmd(&["search-se", "--pair", &f("pair"), "--seed", "11"]),
        cmd(&["search-se", "--pair", &f("two_four")]),
        cmd(&["search-se", "--pair", &f("three"), "--budget", &f("tight")]),
        cmd(&["search-cse", "--pair", &f("pair"), "--witness", &f("se")]),
        cmd(&["invariants", "--pair", &f("pair")]),
        cmd(&["invariants", "--pair", &f("two_four")]),
        cmd(&["invariants", "--pair", &f("three")]),
        cmd(&["rep-build", "--witness", &f("cse"), "--depth", "4"]),
        cmd(&["rep-verify", "--witness", &f("cse"), "--depth", "6"]),
        cmd(&["rep-twist", "--witness", &f("cse"), "--twist", "1/6"]),
    ]
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let suite = cli_suite(dir.path());
    let mut differing = Vec::new();
    for args in &suite {
        let run = |workers: &str| {
            let mut argv = vec!["shiftequiv".to_string()];
            argv.extend(args.iter().cloned());
            argv.extend(["--workers".to_string(), workers.to_string()]);
            execute(argv, None)
        };
        let (one, four) = (run("1"), run("4"));
        if one != four || one.stdout.is_empty() {
            differing.push(args[0].clone());
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} CLI runs, differing: {differing:?}", suite.len()),
    )
}

fn main() {
    let mut corpus = Corpus::new();
    let mut results = Vec::new();
    let mut run = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((n, name, o, t.elapsed().as_secs_f64()));
    };
    run(1, "elementary step to CSE", &mut || {
        elementary_soundness(&mut corpus)
    });
    run(2, "transitivity", &mut || transitivity(&mut corpus));
    // the oracle witnesses join the corpus checked by criteria 3 and 4
    run(5, "search agrees with oracle", &mut || {
        search_oracle(&mut corpus)
    });
    run(3, "derived identities", &mut || closure(&corpus));
    run(4, "representation", &mut || representation(&corpus));
    run(6, "worked pair", &mut worked_pair);
    run(7, "invariant stability", &mut invariant_stability);
    run(8, "determinism across workers", &mut determinism);
    results.sort_by_key(|r| r.0);
    let mut all = true;
    for (n, name, o, secs) in &results {
        all &= o.pass;
        println!(
            "criterion {n} {name:<28} {} ({secs:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if !all {
        std::process::exit(1);
    }
}
