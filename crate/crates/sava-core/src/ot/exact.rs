//! Exact solver for the discrete transport linear program.
//!
//! Transportation simplex on the bipartite row/column graph: northwest-corner
//! starting basis, dual (u, v) recomputation on the spanning tree, and a
//! most-negative pivot rule that falls back to Bland's rule after a run of
//! degenerate pivots so uniform-marginal instances cannot cycle. Exists as the
//! reference the entropic solver is checked against, so instances are capped.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::Float;

use super::{validate_weights, CostMatrix, TransportPlan};

/// Largest `n * m` the exact solver accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 10_000;

/// Vertex solution of the transport LP with its dual certificate.
#[derive(Debug, Clone)]
pub struct ExactSolution<F: Float> {
    pub value: F,
    pub plan: TransportPlan<F>,
    /// Row duals; `u_i + v_j <= C_ij` up to roundoff, with equality on the
    /// support of `plan`.
    pub u: Vec<F>,
    pub v: Vec<F>,
}

/// Solves `min <C, x>` over couplings of `(a, b)` exactly.
pub fn exact_ot<F: Float>(c: &CostMatrix<F>, a: &[F], b: &[F]) -> Result<ExactSolution<F>> {
    exact_ot_with_cap(c, a, b, DEFAULT_ORACLE_CAP)
}

/// As [`exact_ot`] with an explicit instance-size cap.
pub fn exact_ot_with_cap<F: Float>(
    c: &CostMatrix<F>,
    a: &[F],
    b: &[F],
    cap: usize,
) -> Result<ExactSolution<F>> {
    let (n, m) = (c.n(), c.m());
    if n * m > cap {
        return Err(Error::OracleTooLarge {
            entries: n * m,
            cap,
        });
    }
    validate_weights(a, n, "row")?;
    validate_weights(b, m, "column")?;

    let mut state = Simplex::new(c, a, b);
    state.solve()?;
    Ok(state.into_solution(c))
}

/// One basic cell of the transportation tableau.
#[derive(Debug, Clone, Copy)]
struct Cell<F> {
    i: usize,
    j: usize,
    flow: F,
}

struct Simplex<'a, F: Float> {
    c: &'a CostMatrix<F>,
    n: usize,
    m: usize,
    cells: Vec<Cell<F>>,
    u: Vec<F>,
    v: Vec<F>,
    /// Reduced costs below `-pivot_tol` count as improving.
    pivot_tol: F,
}

impl<'a, F: Float> Simplex<'a, F> {
    fn new(c: &'a CostMatrix<F>, a: &[F], b: &[F]) -> Self {
        let (n, m) = (c.n(), c.m());
        let scale = c
            .values()
            .iter()
            .fold(F::zero(), |acc, &x| acc.max(x.abs()))
            .max(F::one());
        let mut s = Self {
            c,
            n,
            m,
            cells: Vec::with_capacity(n + m - 1),
            u: vec![F::zero(); n],
            v: vec![F::zero(); m],
            pivot_tol: F::cast(1e-11) * scale,
        };
        s.northwest_corner(a, b);
        s
    }

    /// Initial basis: exactly `n + m - 1` cells forming a spanning tree,
    /// degenerate zero-flow cells included.
    fn northwest_corner(&mut self, a: &[F], b: &[F]) {
        let mut a_rem = a.to_vec();
        let mut b_rem = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let t = a_rem[i].min(b_rem[j]);
            self.cells.push(Cell { i, j, flow: t });
            a_rem[i] -= t;
            b_rem[j] -= t;
            if i == self.n - 1 && j == self.m - 1 {
                break;
            }
            if (a_rem[i] == F::zero() && i < self.n - 1) || j == self.m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(self.cells.len(), self.n + self.m - 1);
    }

    /// Row node id is `i`, column node id is `n + j`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (idx, cell) in self.cells.iter().enumerate() {
            adj[cell.i].push(idx);
            adj[self.n + cell.j].push(idx);
        }
        adj
    }

    /// Recomputes duals over the basis tree with `u_0 = 0`.
    fn update_duals(&mut self) -> Result<()> {
        let adj = self.adjacency();
        let mut known = vec![false; self.n + self.m];
        let mut stack = vec![0usize];
        known[0] = true;
        self.u[0] = F::zero();
        while let Some(node) = stack.pop() {
            for &idx in &adj[node] {
                let cell = self.cells[idx];
                let (row, col) = (cell.i, self.n + cell.j);
                let other = if node == row { col } else { row };
                if known[other] {
                    continue;
                }
                known[other] = true;
                if other == col {
                    self.v[cell.j] = self.c.values()[(cell.i, cell.j)] - self.u[cell.i];
                } else {
                    self.u[cell.i] = self.c.values()[(cell.i, cell.j)] - self.v[cell.j];
                }
                stack.push(other);
            }
        }
        if known.iter().any(|&k| !k) {
            // The basis always spans by construction; a miss means the
            // invariant was broken by a numerical fault upstream.
            return Err(Error::NonFiniteIntermediate(
                "transportation basis lost connectivity",
            ));
        }
        Ok(())
    }

    /// Most negative reduced-cost cell, or the first one in row-major order
    /// when `bland` is set.
    fn entering(&self, bland: bool) -> Option<(usize, usize)> {
        let values = self.c.values();
        let mut best = -self.pivot_tol;
        let mut pick = None;
        for i in 0..self.n {
            for j in 0..self.m {
                let r = values[(i, j)] - self.u[i] - self.v[j];
                if r < best {
                    if bland {
                        return Some((i, j));
                    }
                    best = r;
                    pick = Some((i, j));
                }
            }
        }
        pick
    }

    /// Unique basis-tree path from row `i0` to column `j0`, as cell indices.
    fn tree_path(&self, i0: usize, j0: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let total = self.n + self.m;
        let src = i0;
        let dst = self.n + j0;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[src] = true;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(node) = queue.pop_front() {
            if node == dst {
                break;
            }
            for &idx in &adj[node] {
                let cell = self.cells[idx];
                let (row, col) = (cell.i, self.n + cell.j);
                let other = if node == row { col } else { row };
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some((node, idx));
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = dst;
        while node != src {
            let (prev, idx) = parent[node].expect("basis tree is connected");
            path.push(idx);
            node = prev;
        }
        path
    }

    fn solve(&mut self) -> Result<()> {
        // Generous cap: simplex terminates long before this on capped sizes.
        let max_pivots = 200 * (self.n + self.m) * (self.n + self.m) + 1000;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        for _ in 0..max_pivots {
            self.update_duals()?;
            let Some((ei, ej)) = self.entering(bland) else {
                return Ok(());
            };

            // Cycle = entering cell (+) followed by the tree path from the
            // entering column back to the entering row, signs alternating so
            // every node keeps its marginal.
            let path = self.tree_path(ei, ej);
            let mut theta = F::infinity();
            let mut leave: Option<(usize, (usize, usize))> = None;
            for (k, &idx) in path.iter().enumerate() {
                if k % 2 == 0 {
                    let cell = self.cells[idx];
                    let key = (cell.i, cell.j);
                    if cell.flow < theta || (cell.flow == theta && Some(key) < leave.map(|l| l.1))
                    {
                        theta = cell.flow;
                        leave = Some((idx, key));
                    }
                }
            }
            let (leave_idx, _) = leave.expect("cycle always has a decreasing cell");

            for (k, &idx) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.cells[idx].flow = (self.cells[idx].flow - theta).max(F::zero());
                } else {
                    self.cells[idx].flow += theta;
                }
            }
            self.cells[leave_idx] = Cell {
                i: ei,
                j: ej,
                flow: theta,
            };

            if theta == F::zero() {
                degenerate_run += 1;
                if degenerate_run > self.n + self.m {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
        }
        Err(Error::NonFiniteIntermediate(
            "transportation simplex exceeded its pivot cap",
        ))
    }

    fn into_solution(self, c: &CostMatrix<F>) -> ExactSolution<F> {
        let mut pi = Array2::zeros((self.n, self.m));
        let mut value = F::zero();
        for cell in &self.cells {
            pi[(cell.i, cell.j)] += cell.flow;
            value += cell.flow * c.values()[(cell.i, cell.j)];
        }
        ExactSolution {
            value,
            plan: TransportPlan {
                pi,
                epsilon: F::zero(),
            },
            u: self.u,
            v: self.v,
        }
    }
}
