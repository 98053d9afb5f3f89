//! Depth-first solver for bounded nonnegative integer variables subject to
//! linear equations, with interval pruning and a node counter.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Why a search stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Exceeded,
    Cancelled,
}

/// Called on each solution with the search counter; returns `true` to stop.
pub type Visit<'f, T> = dyn FnMut(&[T], &mut Counter<'_>) -> Result<bool, Stop> + 'f;

/// Counts search nodes against a limit. A counter attached to partition `i`
/// gives up once some earlier partition has reported a solution.
pub struct Counter<'a> {
    pub nodes: u64,
    limit: u64,
    cancel: Option<(&'a AtomicUsize, usize)>,
}

impl<'a> Counter<'a> {
    pub fn new(limit: u64) -> Self {
        Counter {
            nodes: 0,
            limit,
            cancel: None,
        }
    }

    pub fn with_cancel(limit: u64, best: &'a AtomicUsize, index: usize) -> Self {
        Counter {
            nodes: 0,
            limit,
            cancel: Some((best, index)),
        }
    }

    pub fn tick(&mut self) -> Result<(), Stop> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Stop::Exceeded);
        }
        if self.nodes.is_multiple_of(1024) {
            if let Some((best, me)) = self.cancel {
                if best.load(Ordering::Relaxed) < me {
                    return Err(Stop::Cancelled);
                }
            }
        }
        Ok(())
    }
}

struct Equation {
    rhs: i128,
}

/// Variables `x_0 .. x_{n-1}` with `0 ≤ x_i ≤ ub_i`, assigned in index order
/// with values ascending, so solutions arrive in lexicographic order.
pub struct LinearCsp {
    ub: Vec<i128>,
    eqs: Vec<Equation>,
    occ: Vec<Vec<(usize, i128)>>,
}

struct State {
    acc: Vec<i128>,
    lo: Vec<i128>,
    hi: Vec<i128>,
}

impl LinearCsp {
    pub fn new(ub: Vec<i128>) -> Self {
        let n = ub.len();
        LinearCsp {
            ub,
            eqs: Vec::new(),
            occ: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.ub.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ub.is_empty()
    }

    /// `Σ coeff · x_var = rhs`; repeated variables are merged.
    pub fn add_eq(&mut self, terms: &[(usize, i128)], rhs: i128) {
        let mut merged: Vec<(usize, i128)> = Vec::new();
        for &(v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, d)) => *d += c,
                None => merged.push((v, c)),
            }
        }
        let e = self.eqs.len();
        self.eqs.push(Equation { rhs });
        for (v, c) in merged {
            if c != 0 {
                self.occ[v].push((e, c));
            }
        }
    }

    fn initial(&self) -> State {
        let m = self.eqs.len();
        let mut st = State {
            acc: vec![0; m],
            lo: vec![0; m],
            hi: vec![0; m],
        };
        for (v, occ) in self.occ.iter().enumerate() {
            for &(e, c) in occ {
                if c > 0 {
                    st.hi[e] += c * self.ub[v];
                } else {
                    st.lo[e] += c * self.ub[v];
                }
            }
        }
        st
    }

    fn feasible(&self, st: &State, e: usize) -> bool {
        let need = self.eqs[e].rhs - st.acc[e];
        st.lo[e] <= need && need <= st.hi[e]
    }

    fn assign(&self, st: &mut State, v: usize, value: i128, sign: i128) -> bool {
        let mut ok = true;
        for &(e, c) in &self.occ[v] {
            st.acc[e] += sign * c * value;
            if c > 0 {
                st.hi[e] -= sign * c * self.ub[v];
            } else {
                st.lo[e] -= sign * c * self.ub[v];
            }
            if sign > 0 && !self.feasible(st, e) {
                ok = false;
            }
        }
        ok
    }

    /// Runs the search. `hook(x, i)` may reject a partial assignment right
    /// after `x_i` is set; `on_solution` returns `true` to stop. Returns
    /// whether the search was stopped by `on_solution`.
    pub fn solve(
        &self,
        first: Option<i128>,
        counter: &mut Counter,
        hook: &dyn Fn(&[i128], usize) -> bool,
        on_solution: &mut Visit<'_, i128>,
    ) -> Result<bool, Stop> {
        let mut st = self.initial();
        if (0..self.eqs.len()).any(|e| !self.feasible(&st, e)) {
            return Ok(false);
        }
        let mut x = vec![0i128; self.ub.len()];
        self.rec(0, first, &mut x, &mut st, counter, hook, on_solution)
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        i: usize,
        first: Option<i128>,
        x: &mut Vec<i128>,
        st: &mut State,
        counter: &mut Counter,
        hook: &dyn Fn(&[i128], usize) -> bool,
        on_solution: &mut Visit<'_, i128>,
    ) -> Result<bool, Stop> {
        if i == self.ub.len() {
            return on_solution(x, counter);
        }
        let (lo, hi) = match (i, first) {
            (0, Some(f)) => (f, f.min(self.ub[0])),
            _ => (0, self.ub[i]),
        };
        let mut v = lo;
        while v <= hi {
            counter.tick()?;
            x[i] = v;
            let ok = self.assign(st, i, v, 1);
            let stop =
                ok && hook(x, i) && self.rec(i + 1, first, x, st, counter, hook, on_solution)?;
            self.assign(st, i, v, -1);
            if stop {
                return Ok(true);
            }
            v += 1;
        }
        Ok(false)
    }
}
