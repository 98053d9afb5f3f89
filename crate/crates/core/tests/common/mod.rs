#![allow(dead_code)]

use itertools::Itertools;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use shiftequiv::equiv::{cse_checks, sse_step_to_cse};
use shiftequiv::iso::PathIso;
use shiftequiv::paths::{PathSpace, PathSpaceSpec};
use shiftequiv::{CseWitness, ElementaryStep, NonnegMatrix, SeWitness};

pub fn m(rows: &[&[u64]]) -> NonnegMatrix {
    NonnegMatrix::from_rows(rows)
}

pub fn entry_sum(x: &NonnegMatrix) -> u64 {
    x.entries().iter().map(|e| e.to_u64().unwrap()).sum()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max: u64) -> NonnegMatrix {
    let data: Vec<Vec<u64>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        rng.gen_range(1..=max)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    NonnegMatrix::from_rows(&data)
}

/// A random step `A = RS`, `B = SR` with `|V|, |W| ≤ dim`, both sides
/// essential and of entry sum at most `max_sum`.
pub fn random_step(
    rng: &mut ChaCha8Rng,
    dim: usize,
    max_sum: u64,
) -> (NonnegMatrix, NonnegMatrix, ElementaryStep) {
    loop {
        let n = rng.gen_range(1..=dim);
        let k = rng.gen_range(1..=dim);
        let r = random_matrix(rng, n, k, 2);
        let s = random_matrix(rng, k, n, 2);
        let step = ElementaryStep { r, s };
        let a = step.source().unwrap();
        let b = step.target().unwrap();
        if a.is_essential()
            && b.is_essential()
            && entry_sum(&a) <= max_sum
            && entry_sum(&b) <= max_sum
        {
            return (a, b, step);
        }
    }
}

/// `A = VWU`, `B = UVW`, `C = WUV`: the steps `(VW, U)` and `(UV, W)` compose.
pub fn random_composable(
    rng: &mut ChaCha8Rng,
    max_sum: u64,
) -> (
    NonnegMatrix,
    NonnegMatrix,
    NonnegMatrix,
    ElementaryStep,
    ElementaryStep,
) {
    loop {
        let (p, q, k) = (
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
        );
        let u = random_matrix(rng, k, p, 2);
        let v = random_matrix(rng, p, q, 2);
        let w = random_matrix(rng, q, k, 2);
        let first = ElementaryStep {
            r: v.multiply(&w).unwrap(),
            s: u.clone(),
        };
        let second = ElementaryStep {
            r: u.multiply(&v).unwrap(),
            s: w,
        };
        let a = first.source().unwrap();
        let b = first.target().unwrap();
        let c = second.target().unwrap();
        if [&a, &b, &c]
            .iter()
            .all(|x| x.is_essential() && entry_sum(x) <= max_sum)
        {
            return (a, b, c, first, second);
        }
    }
}

pub fn step_cse(a: &NonnegMatrix, b: &NonnegMatrix, step: &ElementaryStep) -> CseWitness {
    sse_step_to_cse(a, b, step).unwrap()
}

/// All bijections `dom → cod` preserving `(source, range)`, as forward
/// tables in lexicographic order. Filters every permutation of the
/// codomain, so it is only for small spaces.
pub fn block_bijections(dom: &PathSpace, cod: &PathSpace) -> Vec<Vec<usize>> {
    if dom.len() != cod.len() {
        return Vec::new();
    }
    (0..cod.len())
        .permutations(cod.len())
        .filter(|f| {
            f.iter()
                .enumerate()
                .all(|(i, &j)| dom.block(i) == cod.block(j))
        })
        .collect()
}

fn space(factors: &[&NonnegMatrix]) -> std::sync::Arc<PathSpace> {
    PathSpace::new(PathSpaceSpec::new(factors.iter().map(|x| (*x).clone()).collect()).unwrap())
        .unwrap()
}

fn pow_space(x: &NonnegMatrix, k: usize) -> std::sync::Arc<PathSpace> {
    PathSpace::new(PathSpaceSpec::repeated(x, k).unwrap()).unwrap()
}

fn check_named(checks: &[shiftequiv::equiv::Check], name: &str) -> bool {
    checks
        .iter()
        .find(|c| c.name == name)
        .map(|c| c.pass)
        .unwrap_or(false)
}

/// Lexicographically first `(ψ_A, ψ_B, φ_R, φ_S)` making `w` compatible,
/// judged only by the public verifier. With `ψ_A, ψ_B` fixed the two
/// compatibility conditions involve `φ_R` and `φ_S` separately, so the first
/// full quadruple is the first `ψ` pair for which both have a solution,
/// completed by the first solution of each.
pub fn brute_force_cse(a: &NonnegMatrix, b: &NonnegMatrix, w: &SeWitness) -> Option<CseWitness> {
    let (r, s, lag) = (&w.r, &w.s, w.lag);
    let (pa_d, pa_c) = (space(&[r, s]), pow_space(a, lag));
    let (pb_d, pb_c) = (space(&[s, r]), pow_space(b, lag));
    let (fr_d, fr_c) = (space(&[a, r]), space(&[r, b]));
    let (fs_d, fs_c) = (space(&[b, s]), space(&[s, a]));
    let iso = |d: &std::sync::Arc<PathSpace>, c: &std::sync::Arc<PathSpace>, f: &[usize]| {
        PathIso::from_forward(d.clone(), c.clone(), f.to_vec())
    };
    let phi_r_all = block_bijections(&fr_d, &fr_c);
    let phi_s_all = block_bijections(&fs_d, &fs_c);
    let (Some(r0), Some(s0)) = (phi_r_all.first(), phi_s_all.first()) else {
        return None;
    };
    for fa in block_bijections(&pa_d, &pa_c) {
        for fb in block_bijections(&pb_d, &pb_c) {
            let base = CseWitness {
                se: w.clone(),
                phi_r: iso(&fr_d, &fr_c, r0),
                phi_s: iso(&fs_d, &fs_c, s0),
                psi_a: iso(&pa_d, &pa_c, &fa),
                psi_b: iso(&pb_d, &pb_c, &fb),
            };
            let phi_r = phi_r_all.iter().find(|f| {
                let c = CseWitness {
                    phi_r: iso(&fr_d, &fr_c, f),
                    ..base.clone()
                };
                check_named(&cse_checks(a, b, &c).unwrap(), "compatibility (R)")
            });
            let Some(phi_r) = phi_r else { continue };
            let phi_s = phi_s_all.iter().find(|f| {
                let c = CseWitness {
                    phi_s: iso(&fs_d, &fs_c, f),
                    ..base.clone()
                };
                check_named(&cse_checks(a, b, &c).unwrap(), "compatibility (S)")
            });
            let Some(phi_s) = phi_s else { continue };
            return Some(CseWitness {
                phi_r: iso(&fr_d, &fr_c, phi_r),
                phi_s: iso(&fs_d, &fs_c, phi_s),
                ..base
            });
        }
    }
    None
}

fn all_matrices(rows: usize, cols: usize, max_entry: u64, max_sum: u64) -> Vec<NonnegMatrix> {
    (0..rows * cols)
        .map(|_| 0..=max_entry)
        .multi_cartesian_product()
        .filter(|e| e.iter().sum::<u64>() <= max_sum)
        .map(|e| {
            let data: Vec<Vec<u64>> = e.chunks(cols).map(|c| c.to_vec()).collect();
            NonnegMatrix::from_rows(&data)
        })
        .collect()
}

/// Every SE witness `(A, B, m, R, S)` with `|V|, |W| ≤ 2`, `m ∈ {1, 2}`,
/// essential `A, B` and `|E_R| + |E_S| ≤ 4`.
pub fn small_se_witnesses() -> Vec<(NonnegMatrix, NonnegMatrix, SeWitness)> {
    let mut out = Vec::new();
    for n in 1..=2 {
        for k in 1..=2 {
            for r in all_matrices(n, k, 4, 4) {
                for s in all_matrices(k, n, 4, 4 - entry_sum(&r)) {
                    let a1 = r.multiply(&s).unwrap();
                    let b1 = s.multiply(&r).unwrap();
                    let w1 = SeWitness {
                        lag: 1,
                        r: r.clone(),
                        s: s.clone(),
                    };
                    if a1.is_essential() && b1.is_essential() {
                        out.push((a1.clone(), b1, w1));
                    }
                    // lag two: A^2 = RS has entry sum at most 4, so entries of A are at most 2
                    let w2 = SeWitness {
                        lag: 2,
                        r: r.clone(),
                        s: s.clone(),
                    };
                    for a in all_matrices(n, n, 2, 8) {
                        if !a.is_essential() || a.power(2).unwrap() != a1 {
                            continue;
                        }
                        for b in all_matrices(k, k, 2, 8) {
                            if b.is_essential()
                                && shiftequiv::equiv::verify_se(&a, &b, &w2).unwrap()
                            {
                                out.push((a.clone(), b, w2.clone()));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
