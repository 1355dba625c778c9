//! Dense two-phase primal simplex for
//!
//! ```text
//! minimize c'x  subject to  G x <= h,  x >= 0
//! ```
//!
//! Rows with a negative right-hand side are flipped and receive an
//! artificial variable; phase one drives the artificials out, phase two
//! optimizes `c`. Entering and leaving variables follow Bland's rule by
//! default (lowest eligible column index, ties in the ratio test broken by
//! lowest basic index), so the pivot sequence and the returned vertex are
//! deterministic.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Lowest-index entering column; never cycles.
    Bland,
    /// Most negative reduced cost, falling back to Bland after a run of
    /// degenerate pivots.
    Dantzig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub rule: PivotRule,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            rule: PivotRule::Bland,
        }
    }
}

struct Tableau<T> {
    /// `m` constraint rows followed by the objective row; last column is
    /// the right-hand side.
    cells: Vec<T>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
    eps: T,
}

impl<T: Real> Tableau<T> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> T {
        self.cells[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> T {
        self.cells[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let piv = self.at(row, col);
        let inv = T::one() / piv;
        {
            let prow = &mut self.cells[row * w..(row + 1) * w];
            prow.iter_mut().for_each(|v| *v = *v * inv);
            prow[col] = T::one();
        }
        // nonzero pattern of the pivot row, reused for every elimination
        let nz: Vec<usize> = (0..w)
            .filter(|&c| self.cells[row * w + c] != T::zero())
            .collect();
        let (before, rest) = self.cells.split_at_mut(row * w);
        let (prow, after) = rest.split_at_mut(w);
        for chunk in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = chunk[col];
            if f == T::zero() {
                continue;
            }
            for &c in &nz {
                chunk[c] = chunk[c] - f * prow[c];
            }
            chunk[col] = T::zero();
        }
        self.basis[row] = col;
    }

    /// Entering column among `0..ncols` with negative reduced cost.
    fn entering(&self, ncols: usize, rule: PivotRule, force_bland: bool) -> Option<usize> {
        let obj = self.m;
        if rule == PivotRule::Bland || force_bland {
            (0..ncols).find(|&c| self.at(obj, c) < -self.eps)
        } else {
            let mut best = None;
            let mut best_val = -self.eps;
            for c in 0..ncols {
                let v = self.at(obj, c);
                if v < best_val {
                    best_val = v;
                    best = Some(c);
                }
            }
            best
        }
    }

    /// Minimum-ratio row, ties to the lowest basic variable index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for r in 0..self.m {
            let a = self.at(r, col);
            if a > self.eps {
                let ratio = self.rhs(r) / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        let tol = self.eps * (T::one() + bv.abs());
                        if ratio < bv - tol || (ratio <= bv + tol && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
        }
        best.map(|(r, _)| r)
    }

    fn run(
        &mut self,
        ncols: usize,
        opts: &SimplexOptions,
        iterations: &mut usize,
    ) -> LpStatus {
        let mut degenerate_run = 0usize;
        loop {
            let force_bland = degenerate_run > 50;
            let Some(col) = self.entering(ncols, opts.rule, force_bland) else {
                return LpStatus::Optimal;
            };
            let Some(row) = self.leaving(col) else {
                return LpStatus::Unbounded;
            };
            if *iterations >= opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.rhs(row).abs() <= self.eps {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
            *iterations += 1;
        }
    }
}

/// Solve `min c'x  s.t.  G x <= h, x >= 0`.
pub fn solve_lp<T: Real>(
    c: &[T],
    g: &Matrix<T>,
    h: &[T],
    opts: &SimplexOptions,
) -> Result<LpSolution<T>> {
    let n = c.len();
    let m = h.len();
    if g.rows() != m || g.cols() != n {
        return Err(Error::Dimension {
            expected: m * n,
            got: g.rows() * g.cols(),
        });
    }
    let scale = g
        .as_slice()
        .iter()
        .chain(h)
        .chain(c)
        .fold(T::one(), |s, &v| s.max(v.abs()));
    let eps = T::solver_eps() * scale;

    let negative: Vec<usize> = (0..m).filter(|&i| h[i] < T::zero()).collect();
    let n_art = negative.len();
    // columns: x (n) | slacks (m) | artificials (n_art) | rhs
    let width = n + m + n_art + 1;
    let mut cells = vec![T::zero(); (m + 1) * width];
    let mut basis = vec![0; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in negative.iter().enumerate() {
        art_of_row[i] = n + m + k;
    }
    for i in 0..m {
        let row = &mut cells[i * width..(i + 1) * width];
        let flip = if h[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            row[j] = flip * g[(i, j)];
        }
        row[n + i] = flip;
        row[width - 1] = flip * h[i];
        if art_of_row[i] != usize::MAX {
            row[art_of_row[i]] = T::one();
            basis[i] = art_of_row[i];
        } else {
            basis[i] = n + i;
        }
    }
    let mut tab = Tableau {
        cells,
        width,
        m,
        basis,
        eps,
    };
    let mut iterations = 0usize;

    if n_art > 0 {
        // phase one objective: sum of artificials, expressed in nonbasics
        let obj = m * width;
        for k in 0..n_art {
            tab.cells[obj + n + m + k] = T::one();
        }
        for &i in &negative {
            for c in 0..width {
                let v = tab.cells[i * width + c];
                tab.cells[obj + c] = tab.cells[obj + c] - v;
            }
        }
        let status = tab.run(n + m + n_art, opts, &mut iterations);
        if status == LpStatus::IterationLimit {
            return Ok(finish(&tab, n, c, LpStatus::IterationLimit, iterations));
        }
        let infeas = -tab.rhs(m);
        if infeas > eps * T::from_usize_lossy(m.max(1)) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![T::zero(); n],
                objective: T::nan(),
                iterations,
            });
        }
        // drive remaining (zero-level) artificials out of the basis
        for r in 0..m {
            if tab.basis[r] >= n + m {
                if let Some(col) = (0..n + m).find(|&c| tab.at(r, c).abs() > eps) {
                    tab.pivot(r, col);
                    iterations += 1;
                }
                // otherwise the row is redundant; its artificial stays at 0
            }
        }
        // phase two objective row
        for col in 0..width {
            tab.cells[m * width + col] = T::zero();
        }
    }

    let obj = m * width;
    tab.cells[obj..obj + n].copy_from_slice(&c[..n]);
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < n { c[b] } else { T::zero() };
        if cb != T::zero() {
            for col in 0..width {
                let v = tab.cells[r * width + col];
                tab.cells[obj + col] = tab.cells[obj + col] - cb * v;
            }
        }
    }
    // artificials are excluded from entering in phase two
    let status = tab.run(n + m, opts, &mut iterations);
    Ok(finish(&tab, n, c, status, iterations))
}

fn finish<T: Real>(
    tab: &Tableau<T>,
    n: usize,
    c: &[T],
    status: LpStatus,
    iterations: usize,
) -> LpSolution<T> {
    let mut x = vec![T::zero(); n];
    for r in 0..tab.m {
        let b = tab.basis[r];
        if b < n {
            x[b] = tab.rhs(r).max(T::zero());
        }
    }
    let objective = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum();
    LpSolution {
        status,
        x,
        objective,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]]).unwrap();
        let sol = solve_lp(&[-3.0, -5.0], &g, &[4.0, 12.0, 18.0], &SimplexOptions::default())
            .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.x[1], 6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.objective, -36.0, epsilon = 1e-10);
    }

    #[test]
    fn phase_one_needed() {
        // min x + y s.t. x + y >= 2, x <= 3 -> objective 2
        let g = Matrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let sol = solve_lp(&[1.0, 1.0], &g, &[-2.0, 3.0], &SimplexOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn infeasible_detected() {
        // x >= 2 and x <= 1
        let g = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let sol = solve_lp(&[1.0], &g, &[-2.0, 1.0], &SimplexOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let g = Matrix::from_rows(&[vec![-1.0, 1.0]]).unwrap();
        let sol = solve_lp(&[-1.0, 0.0], &g, &[1.0], &SimplexOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn iteration_cap() {
        let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]]).unwrap();
        let opts = SimplexOptions {
            max_iterations: 1,
            rule: PivotRule::Bland,
        };
        let sol = solve_lp(&[-3.0, -5.0], &g, &[4.0, 12.0, 18.0], &opts).unwrap();
        assert_eq!(sol.status, LpStatus::IterationLimit);
    }

    #[test]
    fn rules_agree_on_objective() {
        let g = Matrix::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![2.0, -1.0, 0.5],
            vec![-1.0, 0.0, 1.0],
        ])
        .unwrap();
        let c = [-1.0, -2.0, -0.5];
        let h = [5.0, 3.0, -1.0];
        let a = solve_lp(&c, &g, &h, &SimplexOptions::default()).unwrap();
        let b = solve_lp(
            &c,
            &g,
            &h,
            &SimplexOptions {
                rule: PivotRule::Dantzig,
                ..Default::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(a.objective, b.objective, epsilon = 1e-10);
    }
}
