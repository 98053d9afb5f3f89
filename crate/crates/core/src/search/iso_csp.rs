//! Backtracking over block bijections for compatible path isomorphisms.

use std::collections::HashMap;
use std::sync::Arc;

use super::linear::{Counter, Stop, Visit};
use crate::iso::PathIso;
use crate::paths::{Edge, PathSpace};

/// For each domain index, the codomain indices of the same block, ascending.
pub fn block_candidates(dom: &PathSpace, cod: &PathSpace) -> Vec<Vec<usize>> {
    let mut by_block: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for j in 0..cod.len() {
        by_block.entry(cod.block(j)).or_default().push(j);
    }
    (0..dom.len())
        .map(|i| by_block.get(&dom.block(i)).cloned().unwrap_or_default())
        .collect()
}

/// Enumerates block bijections in lexicographic order of the forward table.
/// `first` pins the image of domain index 0. The callback returns `true` to stop.
pub fn enumerate_bijections(
    cands: &[Vec<usize>],
    ncod: usize,
    first: Option<usize>,
    counter: &mut Counter,
    f: &mut Visit<'_, usize>,
) -> Result<bool, Stop> {
    if cands.len() != ncod {
        return Ok(false);
    }
    let mut fwd = vec![usize::MAX; cands.len()];
    let mut used = vec![false; ncod];
    rec_bij(0, cands, first, &mut fwd, &mut used, counter, f)
}

fn rec_bij(
    i: usize,
    cands: &[Vec<usize>],
    first: Option<usize>,
    fwd: &mut Vec<usize>,
    used: &mut Vec<bool>,
    counter: &mut Counter,
    f: &mut Visit<'_, usize>,
) -> Result<bool, Stop> {
    if i == cands.len() {
        return f(fwd, counter);
    }
    for &j in &cands[i] {
        if used[j] || (i == 0 && first.is_some_and(|v| v != j)) {
            continue;
        }
        counter.tick()?;
        used[j] = true;
        fwd[i] = j;
        let stop = rec_bij(i + 1, cands, first, fwd, used, counter, f)?;
        used[j] = false;
        if stop {
            return Ok(true);
        }
    }
    fwd[i] = usize::MAX;
    Ok(false)
}

/// Finds the lexicographically first `φ : E_X × E_Y → E_Y × E_Z` whose
/// staircase power equals `target : E_X^m × E_Y → E_Y × E_Z^m`.
pub struct StaircaseProblem {
    dom: Arc<PathSpace>,
    cod: Arc<PathSpace>,
    cands: Vec<Vec<usize>>,
    index: HashMap<(Edge, Edge), usize>,
    /// `(x_0..x_{m-1}, y)` must map to `(y*, z*_0..z*_{m-1})`
    constraints: Vec<(Vec<Edge>, Edge, Edge, Vec<Edge>)>,
}

impl StaircaseProblem {
    pub fn new(dom: Arc<PathSpace>, cod: Arc<PathSpace>, target: &PathIso, m: usize) -> Self {
        let cands = block_candidates(&dom, &cod);
        let index = dom
            .paths()
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.0[0], p.0[1]), i))
            .collect();
        let constraints = (0..target.len())
            .map(|i| {
                let d = &target.domain().path(i).0;
                let c = &target.codomain().path(target.apply_index(i)).0;
                (d[..m].to_vec(), d[m], c[0], c[1..].to_vec())
            })
            .collect();
        StaircaseProblem {
            dom,
            cod,
            cands,
            index,
            constraints,
        }
    }

    fn consistent(&self, assign: &[usize]) -> bool {
        self.constraints.iter().all(|(xs, y, y_star, zs)| {
            let mut cur = *y;
            for j in (0..xs.len()).rev() {
                let Some(&k) = self.index.get(&(xs[j], cur)) else {
                    return false;
                };
                let img = assign[k];
                if img == usize::MAX {
                    return true;
                }
                let out = &self.cod.path(img).0;
                if out[1] != zs[j] {
                    return false;
                }
                cur = out[0];
            }
            cur == *y_star
        })
    }

    pub fn solve(&self, counter: &mut Counter) -> Result<Option<PathIso>, Stop> {
        let mut assign = vec![usize::MAX; self.dom.len()];
        let mut used = vec![false; self.cod.len()];
        if self.cands.len() != self.cod.len() {
            return Ok(None);
        }
        if self.rec(0, &mut assign, &mut used, counter)? {
            Ok(Some(PathIso::from_forward(
                self.dom.clone(),
                self.cod.clone(),
                assign,
            )))
        } else {
            Ok(None)
        }
    }

    fn rec(
        &self,
        i: usize,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        counter: &mut Counter,
    ) -> Result<bool, Stop> {
        if i == assign.len() {
            return Ok(true);
        }
        for &j in &self.cands[i] {
            if used[j] {
                continue;
            }
            counter.tick()?;
            assign[i] = j;
            used[j] = true;
            if self.consistent(assign) && self.rec(i + 1, assign, used, counter)? {
                return Ok(true);
            }
            used[j] = false;
        }
        assign[i] = usize::MAX;
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::NonnegMatrix;
    use crate::paths::PathSpaceSpec;

    #[test]
    fn bijections_in_lex_order() {
        let a = NonnegMatrix::from_rows(&[[3u64]]);
        let s = PathSpace::new(PathSpaceSpec::single(a)).unwrap();
        let cands = block_candidates(&s, &s);
        let mut seen = Vec::new();
        let mut c = Counter::new(1000);
        enumerate_bijections(&cands, 3, None, &mut c, &mut |f, _| {
            seen.push(f.to_vec());
            Ok(false)
        })
        .unwrap();
        assert_eq!(seen.len(), 6);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(seen[0], vec![0, 1, 2]);
    }

    #[test]
    fn recovers_phi_from_its_staircase() {
        // a nontrivial φ on E_A × E_A for A = [[2]], then solve for it from φ^(2)
        let a = NonnegMatrix::from_rows(&[[2u64]]);
        let spec = PathSpaceSpec::repeated(&a, 2).unwrap();
        let sp = PathSpace::new(spec).unwrap();
        let phi = PathIso::from_forward(sp.clone(), sp.clone(), vec![1, 3, 0, 2]);
        assert!(phi.verify());
        let target = PathIso::phi_power(&phi, 2).unwrap();
        let prob = StaircaseProblem::new(sp.clone(), sp, &target, 2);
        let got = prob.solve(&mut Counter::new(100_000)).unwrap().unwrap();
        assert_eq!(PathIso::phi_power(&got, 2).unwrap(), target);
    }
}
