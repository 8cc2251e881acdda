//! Dense two-phase primal simplex for small linear programs in standard form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b,  x ≥ 0
//! ```
//!
//! Pivoting follows Bland's rule (lowest eligible entering index, lowest-index
//! basic variable on ratio ties), so for a fixed column ordering the returned
//! basis and solution are deterministic. All programs in this crate have at
//! most a few thousand columns, which keeps the dense tableau cheap.

use thiserror::Error;

const REDUCED_COST_EPS: f64 = 1e-11;
const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("program is unbounded")]
    Unbounded,
    #[error("pivot limit reached")]
    IterationLimit,
}

/// A linear program `min cᵀx  s.t.  Ax = b, x ≥ 0` assembled row by row.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    /// Adds the equality `Σ coeff·x[var] = rhs`. Repeated indices accumulate.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(v, _)| v < self.num_vars));
        self.rows.push(coeffs.to_vec());
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    num_vars: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars;
        let width = n + m + 1;
        let mut data = vec![0.0; m * width];
        for (i, (row, &b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let r = &mut data[i * width..(i + 1) * width];
            for &(j, a) in row {
                r[j] += sign * a;
            }
            r[n + i] = 1.0;
            r[width - 1] = sign * b;
        }
        Self {
            num_vars: n,
            width,
            data,
            basis: (n..n + m).collect(),
            active: vec![true; m],
            pivots: 0,
        }
    }

    fn rows(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn pivot(&mut self, cost: &mut [f64], row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        for v in &mut self.data[row * w..(row + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[row * w..(row + 1) * w].to_vec();
        for i in 0..self.rows() {
            if i == row || !self.active[i] {
                continue;
            }
            let f = self.at(i, col);
            if f != 0.0 {
                let r = &mut self.data[i * w..(i + 1) * w];
                for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
                if r[w - 1].abs() < 1e-13 {
                    r[w - 1] = 0.0;
                }
            }
        }
        let f = cost[col];
        if f != 0.0 {
            for (v, &pv) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            cost[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the reduced-cost row `cost` over columns `< limit`.
    fn iterate(&mut self, cost: &mut [f64], limit: usize) -> Result<(), LpError> {
        let rhs = self.width - 1;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::IterationLimit);
            }
            let Some(enter) = (0..limit).find(|&j| cost[j] < -REDUCED_COST_EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                if !self.active[i] {
                    continue;
                }
                let a = self.at(i, enter);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.at(i, rhs).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                None => return Err(LpError::Unbounded),
                Some((row, _)) => self.pivot(cost, row, enter),
            }
        }
    }

    fn run(mut self, objective: &[f64]) -> Result<LpSolution, LpError> {
        let n = self.num_vars;
        let m = self.rows();
        let w = self.width;

        // phase one: minimize the sum of artificials
        let mut cost = vec![0.0; w];
        for i in 0..m {
            for j in 0..n {
                cost[j] -= self.at(i, j);
            }
            cost[w - 1] -= self.at(i, w - 1);
        }
        self.iterate(&mut cost, n)?;
        let residual = -cost[w - 1];
        let scale = 1.0 + (0..m).map(|i| self.at(i, w - 1).abs()).fold(0.0, f64::max);
        if residual > FEASIBILITY_EPS * scale {
            return Err(LpError::Infeasible(residual));
        }

        // drive zero-level artificials out of the basis, dropping redundant rows
        for i in 0..m {
            if self.basis[i] < n {
                continue;
            }
            match (0..n).find(|&j| self.at(i, j).abs() > 1e-9) {
                Some(j) => self.pivot(&mut cost, i, j),
                None => self.active[i] = false,
            }
        }

        let mut cost = vec![0.0; w];
        cost[..n].copy_from_slice(objective);
        for i in 0..m {
            if !self.active[i] {
                continue;
            }
            let cb = objective[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    cost[j] -= cb * self.at(i, j);
                }
            }
        }
        for i in 0..m {
            if self.active[i] {
                cost[self.basis[i]] = 0.0;
            }
        }
        self.iterate(&mut cost, n)?;

        let mut x = vec![0.0; n];
        for i in 0..m {
            if self.active[i] && self.basis[i] < n {
                x[self.basis[i]] = self.at(i, w - 1).max(0.0);
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            objective: value,
            pivots: self.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_textbook_program() {
        // min -x0 - x1 s.t. x0 + 2x1 + s0 = 4, 3x0 + x1 + s1 = 6
        let mut lp = LinearProgram::new(4);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.add_row(&[(0, 1.0), (1, 2.0), (2, 1.0)], 4.0);
        lp.add_row(&[(0, 3.0), (1, 1.0), (3, 1.0)], 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective + 2.8).abs() < 1e-12);
        assert!((sol.x[0] - 1.6).abs() < 1e-12);
        assert!((sol.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(&[(0, 1.0)], 1.0);
        lp.add_row(&[(0, 1.0)], 2.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.add_row(&[(0, 1.0), (1, -1.0)], 0.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.add_row(&[(0, 1.0), (1, 1.0)], 1.0);
        lp.add_row(&[(0, 2.0), (1, 2.0)], 2.0);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.x, vec![0.0, 1.0]);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(1, 1.0);
        lp.add_row(&[(0, -1.0), (1, -1.0)], -3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert_eq!(sol.objective, 0.0);
    }
}
