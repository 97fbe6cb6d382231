//! Self-contained two-phase simplex for the offline policy LPs.
//!
//! Revised simplex with a dense basis inverse over sparsely stored columns.
//! The LPs solved here have many variables but few nonzeros per column (one
//! normalization entry plus at most `m` fairness entries), so pricing scans
//! columns in O(nnz) while pivots update the `rows x rows` inverse. Dantzig
//! pricing with a Bland fallback after a run of degenerate pivots, periodic
//! refactorization, and a final refactor-and-verify pass keep the solve
//! within the 1e-9 feasibility tolerance used throughout the oracle.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("simplex numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    GreaterEq,
    Eq,
}

/// One constraint row `coeffs . x (>=|=) rhs` with `rhs >= 0`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Maximization problem over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const DEGENERATE_RUN_LIMIT: usize = 64;
const REFACTOR_INTERVAL: usize = 512;

struct Tableau {
    rows: usize,
    /// Structural + surplus + artificial columns, sparse.
    cols: Vec<Vec<(usize, f64)>>,
    costs: Vec<f64>,
    rhs: Vec<f64>,
    n_structural: usize,
    first_artificial: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Row-major dense basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    bland: bool,
    degenerate_run: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Result<Self, SimplexError> {
        let rows = lp.constraints.len();
        assert!(rows > 0, "LP must have at least one constraint");
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n_vars];
        let mut rhs = Vec::with_capacity(rows);
        for (r, c) in lp.constraints.iter().enumerate() {
            if c.rhs < 0.0 {
                return Err(SimplexError::Numerical(format!(
                    "negative right-hand side {} in row {}",
                    c.rhs, r
                )));
            }
            rhs.push(c.rhs);
            for &(j, v) in &c.coeffs {
                assert!(j < lp.n_vars, "column index out of range");
                if v != 0.0 {
                    cols[j].push((r, v));
                }
            }
        }
        // Surplus columns for >= rows, then one artificial per row.
        for (r, c) in lp.constraints.iter().enumerate() {
            if c.relation == Relation::GreaterEq {
                cols.push(vec![(r, -1.0)]);
            }
        }
        let first_artificial = cols.len();
        for r in 0..rows {
            cols.push(vec![(r, 1.0)]);
        }
        let total = cols.len();
        let mut costs = vec![0.0; total];
        costs[..lp.n_vars].copy_from_slice(&lp.objective);

        let basis: Vec<usize> = (first_artificial..total).collect();
        let mut in_basis = vec![false; total];
        for &j in &basis {
            in_basis[j] = true;
        }
        let mut binv = vec![0.0; rows * rows];
        for i in 0..rows {
            binv[i * rows + i] = 1.0;
        }
        Ok(Tableau {
            rows,
            cols,
            costs,
            xb: rhs.clone(),
            rhs,
            n_structural: lp.n_vars,
            first_artificial,
            basis,
            in_basis,
            binv,
            bland: false,
            degenerate_run: 0,
        })
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    /// `u = B^-1 A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.rows];
        for &(r, v) in &self.cols[j] {
            let row_base = r;
            for i in 0..self.rows {
                u[i] += self.binv[i * self.rows + row_base] * v;
            }
        }
        u
    }

    /// `y = c_B^T B^-1` for the given cost vector.
    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = costs[bj];
            if cb != 0.0 {
                for k in 0..self.rows {
                    y[k] += cb * self.binv[i * self.rows + k];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, costs: &[f64], y: &[f64]) -> f64 {
        let mut d = costs[j];
        for &(r, v) in &self.cols[j] {
            d -= y[r] * v;
        }
        d
    }

    /// Picks the entering column among eligible ones, or `None` at optimum.
    fn price(&self, costs: &[f64], allow_artificial: bool) -> Option<usize> {
        let y = self.duals(costs);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols.len() {
            if self.in_basis[j] || (!allow_artificial && self.is_artificial(j)) {
                continue;
            }
            let d = self.reduced_cost(j, costs, &y);
            if d > PIVOT_TOL {
                if self.bland {
                    return Some(j);
                }
                if best.map_or(true, |(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Ratio test; returns the leaving row. Ties prefer artificial basis
    /// variables, then the smallest basis variable index (Bland-safe).
    ///
    /// With `pin_artificials` set (phase 2), a basic artificial whose value
    /// would grow under the pivot (`u_i < 0`) blocks at ratio zero so it is
    /// swapped out instead of turning positive again.
    fn choose_leaving(&self, u: &[f64], pin_artificials: bool) -> Option<usize> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let ratio = if u[i] > PIVOT_TOL {
                self.xb[i] / u[i]
            } else if pin_artificials && u[i] < -PIVOT_TOL && self.is_artificial(self.basis[i]) {
                0.0
            } else {
                continue;
            };
            match leave {
                None => leave = Some((i, ratio)),
                Some((li, lr)) => {
                    if ratio < lr - 1e-12 {
                        leave = Some((i, ratio));
                    } else if ratio < lr + 1e-12 {
                        let cur_art = self.is_artificial(self.basis[i]);
                        let old_art = self.is_artificial(self.basis[li]);
                        if (cur_art && !old_art)
                            || (cur_art == old_art && self.basis[i] < self.basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        leave.map(|(i, _)| i)
    }

    fn pivot(&mut self, entering: usize, leave_row: usize, u: &[f64]) {
        let rows = self.rows;
        let ul = u[leave_row];
        debug_assert!(ul.abs() > 0.0);
        let theta = self.xb[leave_row] / ul;
        if theta.abs() <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_RUN_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        let (before, rest) = self.binv.split_at_mut(leave_row * rows);
        let (lrow, after) = rest.split_at_mut(rows);
        for v in lrow.iter_mut() {
            *v /= ul;
        }
        for (i, chunk) in before.chunks_exact_mut(rows).enumerate() {
            let f = u[i];
            if f != 0.0 {
                for (a, &l) in chunk.iter_mut().zip(lrow.iter()) {
                    *a -= f * l;
                }
            }
        }
        for (k, chunk) in after.chunks_exact_mut(rows).enumerate() {
            let f = u[leave_row + 1 + k];
            if f != 0.0 {
                for (a, &l) in chunk.iter_mut().zip(lrow.iter()) {
                    *a -= f * l;
                }
            }
        }

        for i in 0..rows {
            if i != leave_row {
                self.xb[i] -= theta * u[i];
                if self.xb[i] < 0.0 && self.xb[i] > -1e-12 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[leave_row] = if theta < 0.0 && theta > -1e-12 { 0.0 } else { theta };

        self.in_basis[self.basis[leave_row]] = false;
        self.in_basis[entering] = true;
        self.basis[leave_row] = entering;
    }

    /// Rebuilds the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting) and recomputes the basic solution.
    fn refactor(&mut self) -> Result<(), SimplexError> {
        let rows = self.rows;
        let mut aug = vec![0.0; rows * 2 * rows];
        for (col, &bj) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[bj] {
                aug[r * 2 * rows + col] = v;
            }
        }
        for i in 0..rows {
            aug[i * 2 * rows + rows + i] = 1.0;
        }
        for col in 0..rows {
            let pivot_row = (col..rows)
                .max_by(|&a, &b| {
                    aug[a * 2 * rows + col]
                        .abs()
                        .total_cmp(&aug[b * 2 * rows + col].abs())
                })
                .unwrap();
            let pv = aug[pivot_row * 2 * rows + col];
            if pv.abs() < 1e-12 {
                return Err(SimplexError::Numerical("singular basis".to_string()));
            }
            if pivot_row != col {
                for k in 0..2 * rows {
                    aug.swap(col * 2 * rows + k, pivot_row * 2 * rows + k);
                }
            }
            let pv = aug[col * 2 * rows + col];
            for k in 0..2 * rows {
                aug[col * 2 * rows + k] /= pv;
            }
            for r in 0..rows {
                if r != col {
                    let f = aug[r * 2 * rows + col];
                    if f != 0.0 {
                        for k in 0..2 * rows {
                            aug[r * 2 * rows + k] -= f * aug[col * 2 * rows + k];
                        }
                    }
                }
            }
        }
        for i in 0..rows {
            for k in 0..rows {
                self.binv[i * rows + k] = aug[i * 2 * rows + rows + k];
            }
        }
        // xb = B^-1 b
        for i in 0..rows {
            let mut v = 0.0;
            for k in 0..rows {
                v += self.binv[i * rows + k] * self.rhs[k];
            }
            self.xb[i] = if v < 0.0 && v > -FEAS_TOL { 0.0 } else { v };
        }
        Ok(())
    }

    /// Runs the simplex loop with the given costs until optimal.
    fn optimize(&mut self, costs: &[f64], allow_artificial: bool) -> Result<(), SimplexError> {
        let iteration_cap = 50 * (self.rows + self.cols.len()) + 10_000;
        let mut iterations = 0usize;
        loop {
            iterations += 1;
            if iterations > iteration_cap {
                return Err(SimplexError::Numerical(format!(
                    "iteration cap {} exceeded",
                    iteration_cap
                )));
            }
            if iterations % REFACTOR_INTERVAL == 0 {
                self.refactor()?;
            }
            let entering = match self.price(costs, allow_artificial) {
                Some(j) => j,
                None => return Ok(()),
            };
            let u = self.ftran(entering);
            let leave = self.choose_leaving(&u, !allow_artificial).ok_or_else(|| {
                SimplexError::Numerical(format!("column {} appears unbounded", entering))
            })?;
            self.pivot(entering, leave, &u);
        }
    }

    /// Pivots basic artificials out of the basis where possible; rows whose
    /// basic artificial cannot be replaced are redundant and the variable
    /// stays pinned at zero.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.rows {
            if !self.is_artificial(self.basis[row]) {
                continue;
            }
            let mut replacement: Option<(usize, Vec<f64>)> = None;
            for j in 0..self.first_artificial {
                if self.in_basis[j] {
                    continue;
                }
                let u = self.ftran(j);
                if u[row].abs() > 1e-7 {
                    replacement = Some((j, u));
                    break;
                }
            }
            if let Some((j, u)) = replacement {
                self.pivot(j, row, &u);
            }
        }
    }

    fn phase1_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .filter(|&(_, &j)| self.is_artificial(j))
            .map(|(i, _)| self.xb[i].max(0.0))
            .sum()
    }

    fn extract(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_structural];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n_structural {
                x[j] = self.xb[i].max(0.0);
            }
        }
        x
    }
}

/// Solves the LP to the oracle's tolerance.
pub fn solve(lp: &LinearProgram) -> Result<Outcome, SimplexError> {
    assert_eq!(lp.objective.len(), lp.n_vars);
    let mut t = Tableau::new(lp)?;

    // Phase 1: minimize total artificial value.
    let mut phase1_costs = vec![0.0; t.cols.len()];
    for j in t.first_artificial..t.cols.len() {
        phase1_costs[j] = -1.0;
    }
    t.optimize(&phase1_costs, true)?;
    t.refactor()?;
    if t.phase1_infeasibility() > FEAS_TOL {
        return Ok(Outcome::Infeasible);
    }
    t.drive_out_artificials();

    // Phase 2 on the true objective; artificials may no longer enter.
    let costs = t.costs.clone();
    t.bland = false;
    t.degenerate_run = 0;
    t.optimize(&costs, false)?;
    t.refactor()?;
    // The refactor can surface residual reduced costs hidden by drift;
    // polish with a bounded number of restarts.
    for _ in 0..3 {
        if t.price(&costs, false).is_none() {
            break;
        }
        t.optimize(&costs, false)?;
        t.refactor()?;
    }
    if t.price(&costs, false).is_some() {
        return Err(SimplexError::Numerical(
            "failed to reach optimality after refactorization".to_string(),
        ));
    }

    let x = t.extract();
    verify(lp, &x)?;
    let objective = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum::<f64>();
    Ok(Outcome::Optimal { x, objective })
}

fn verify(lp: &LinearProgram, x: &[f64]) -> Result<(), SimplexError> {
    for (r, c) in lp.constraints.iter().enumerate() {
        let lhs: f64 = c.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        let ok = match c.relation {
            Relation::GreaterEq => lhs >= c.rhs - FEAS_TOL,
            Relation::Eq => (lhs - c.rhs).abs() <= FEAS_TOL,
        };
        if !ok {
            return Err(SimplexError::Numerical(format!(
                "row {} violated: lhs {} vs rhs {}",
                r, lhs, c.rhs
            )));
        }
    }
    if let Some(&v) = x.iter().find(|&&v| v < -FEAS_TOL) {
        return Err(SimplexError::Numerical(format!("negative variable {}", v)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coeffs: &[(usize, f64)], rhs: f64) -> Constraint {
        Constraint {
            coeffs: coeffs.to_vec(),
            relation: Relation::GreaterEq,
            rhs,
        }
    }

    fn eq(coeffs: &[(usize, f64)], rhs: f64) -> Constraint {
        Constraint {
            coeffs: coeffs.to_vec(),
            relation: Relation::Eq,
            rhs,
        }
    }

    #[test]
    fn tiny_lp_optimum() {
        // max 0.9 a + 0.1 b  s.t.  a + b = 1, a >= 0.2, b >= 0.2
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![0.9, 0.1],
            constraints: vec![
                eq(&[(0, 1.0), (1, 1.0)], 1.0),
                ge(&[(0, 1.0)], 0.2),
                ge(&[(1, 1.0)], 0.2),
            ],
        };
        match solve(&lp).unwrap() {
            Outcome::Optimal { x, objective } => {
                assert!((objective - 0.74).abs() < 1e-9);
                assert!((x[0] - 0.8).abs() < 1e-9);
                assert!((x[1] - 0.2).abs() < 1e-9);
            }
            Outcome::Infeasible => panic!("should be feasible"),
        }
    }

    #[test]
    fn infeasible_detected() {
        // a + b = 1 with a, b >= 0.6 cannot hold.
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![1.0, 1.0],
            constraints: vec![
                eq(&[(0, 1.0), (1, 1.0)], 1.0),
                ge(&[(0, 1.0)], 0.6),
                ge(&[(1, 1.0)], 0.6),
            ],
        };
        assert!(matches!(solve(&lp).unwrap(), Outcome::Infeasible));
    }

    #[test]
    fn degenerate_equalities() {
        // Redundant rows keep an artificial basic at zero; the solve must
        // still succeed.
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![1.0, 2.0],
            constraints: vec![
                eq(&[(0, 1.0), (1, 1.0)], 1.0),
                eq(&[(0, 2.0), (1, 2.0)], 2.0),
                ge(&[(1, 1.0)], 0.25),
            ],
        };
        match solve(&lp).unwrap() {
            Outcome::Optimal { x, objective } => {
                assert!((objective - 2.0).abs() < 1e-9);
                assert!((x[1] - 1.0).abs() < 1e-9);
            }
            Outcome::Infeasible => panic!("feasible"),
        }
    }

    #[test]
    fn boundary_feasibility() {
        // Exactly-tight fairness rows: a + b = 1, a >= 0.5, b >= 0.5.
        let lp = LinearProgram {
            n_vars: 2,
            objective: vec![0.3, 0.7],
            constraints: vec![
                eq(&[(0, 1.0), (1, 1.0)], 1.0),
                ge(&[(0, 1.0)], 0.5),
                ge(&[(1, 1.0)], 0.5),
            ],
        };
        match solve(&lp).unwrap() {
            Outcome::Optimal { x, objective } => {
                assert!((x[0] - 0.5).abs() < 1e-9);
                assert!((objective - 0.5).abs() < 1e-9);
            }
            Outcome::Infeasible => panic!("boundary point is feasible"),
        }
    }
}
