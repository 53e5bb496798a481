//! Dense two-phase primal simplex on a full tableau.
//!
//! Pricing is Dantzig's largest reduced cost; after a run of degenerate
//! pivots the solver switches to Bland's rule (lowest improving index,
//! lowest-index leaving variable on ratio ties) until the objective moves
//! again, so the method cannot cycle. Deterministic for a given input.

use std::fmt;

/// Entries below this magnitude are treated as zero in pivoting.
pub const PIVOT_TOL: f64 = 1e-11;
/// Reduced costs must exceed this to count as improving.
pub const OPT_TOL: f64 = 1e-11;
/// Phase-1 residual above this means infeasible.
pub const FEAS_TOL: f64 = 1e-9;

const DEGENERATE_STREAK: usize = 32;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("problem is infeasible (phase-1 residual {0:.3e})")]
    Infeasible(f64),
    #[error("problem is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed problem: {0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `opt c^T x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub value: f64,
    pub x: Vec<f64>,
    /// One multiplier per constraint, in the sign convention of the
    /// problem's sense (`c - A^T y` is dual feasible).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.coeffs.len()).sum()
    }

    pub fn solve(&self) -> Result<Solution, LpError> {
        Tableau::build(self)?.run(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Rule {
    Dantzig,
    Bland,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack + artificial, rhs stored separately
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
    first_artificial: usize,
    // column holding the initial unit vector of each row, and the row sign flip
    ident: Vec<usize>,
    flipped: Vec<bool>,
    pivots: usize,
    limit: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let n = lp.num_vars();
        let m = lp.constraints.len();
        if lp.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Shape("objective has non-finite entries".into()));
        }
        let mut flipped = Vec::with_capacity(m);
        let mut relations = Vec::with_capacity(m);
        for c in &lp.constraints {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|&(j, v)| j >= n || !v.is_finite()) {
                return Err(LpError::Shape("constraint out of range or non-finite".into()));
            }
            let flip = c.rhs < 0.0;
            flipped.push(flip);
            relations.push(match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            });
        }
        let slacks = relations.iter().filter(|r| **r != Relation::Eq).count();
        let artificials = relations.iter().filter(|r| **r != Relation::Le).count();
        let cols = n + slacks + artificials;
        let first_artificial = n + slacks;
        let mut a = vec![0.0; m * cols];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut ident = vec![0; m];
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (i, c) in lp.constraints.iter().enumerate() {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            let row = &mut a[i * cols..(i + 1) * cols];
            for &(j, v) in &c.coeffs {
                row[j] += sign * v;
            }
            rhs[i] = sign * c.rhs;
            match relations[i] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    ident[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    ident[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    ident[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Ok(Tableau {
            rows: m,
            cols,
            a,
            rhs,
            basis,
            n,
            first_artificial,
            ident,
            flipped,
            pivots: 0,
            limit: 50 * (m + cols).max(100),
        })
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    /// Reduced costs `d_j = c_j - c_B B^{-1} A_j` for a maximization cost.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            for (dj, &aij) in d.iter_mut().zip(row) {
                *dj -= cb * aij;
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize, d: &mut [f64]) {
        let cols = self.cols;
        let p = self.a[r * cols + c];
        {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        self.rhs[r] /= p;
        let pivot_row: Vec<f64> = self.a[r * cols..(r + 1) * cols].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i] < 0.0 && self.rhs[i] > -FEAS_TOL {
                self.rhs[i] = 0.0;
            }
        }
        let f = d[c];
        if f != 0.0 {
            for (dj, &pv) in d.iter_mut().zip(&pivot_row) {
                *dj -= f * pv;
            }
            d[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Maximizes `cost` over columns `< allowed` and returns the final
    /// reduced costs. These are recomputed from scratch every
    /// `REFRESH` pivots and before optimality is declared, since costs may
    /// span many orders of magnitude.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<Vec<f64>, LpError> {
        const REFRESH: usize = 64;
        let mut d = self.reduced_costs(cost);
        let mut rule = Rule::Dantzig;
        let mut streak = 0;
        let mut fresh = true;
        let mut since_refresh = 0;
        loop {
            if since_refresh >= REFRESH {
                d = self.reduced_costs(cost);
                since_refresh = 0;
                fresh = true;
            }
            if self.pivots > self.limit {
                return Err(LpError::IterationLimit(self.limit));
            }
            let entering = match rule {
                Rule::Dantzig => {
                    let mut best = None;
                    let mut best_d = OPT_TOL;
                    for (j, &dj) in d[..allowed].iter().enumerate() {
                        if dj > best_d {
                            best_d = dj;
                            best = Some(j);
                        }
                    }
                    best
                }
                Rule::Bland => d[..allowed].iter().position(|&dj| dj > OPT_TOL),
            };
            let Some(c) = entering else {
                if fresh {
                    return Ok(d);
                }
                d = self.reduced_costs(cost);
                since_refresh = 0;
                fresh = true;
                continue;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aic = self.entry(i, c);
                if aic <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i] / aic;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12 * (1.0 + lr.abs())
                            || (ratio <= lr + 1e-12 * (1.0 + lr.abs())
                                && self.basis[i] < self.basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio <= FEAS_TOL * 1e-3 {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    rule = Rule::Bland;
                }
            } else {
                streak = 0;
                rule = Rule::Dantzig;
            }
            self.pivot(r, c, &mut d);
            since_refresh += 1;
            fresh = false;
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<Solution, LpError> {
        let art = self.first_artificial;
        if art < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost[art..].iter_mut() {
                *c = -1.0;
            }
            self.optimize(&cost, self.cols)?;
            let residual: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] >= art)
                .map(|i| self.rhs[i])
                .sum();
            if residual > FEAS_TOL {
                return Err(LpError::Infeasible(residual));
            }
            // drive zero-level artificials out of the basis where possible
            for i in 0..self.rows {
                if self.basis[i] < art {
                    continue;
                }
                if let Some(j) = (0..art).find(|&j| self.entry(i, j).abs() > 1e-7) {
                    let mut dummy = vec![0.0; self.cols];
                    self.pivot(i, j, &mut dummy);
                }
            }
        }
        let sign = match lp.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let mut cost = vec![0.0; self.cols];
        for (c, &o) in cost.iter_mut().zip(&lp.objective) {
            *c = sign * o;
        }
        let d = self.optimize(&cost, art)?;

        let mut x = vec![0.0; self.n];
        for i in 0..self.rows {
            if self.basis[i] < self.n {
                x[self.basis[i]] = self.rhs[i].max(0.0);
            }
        }
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        // y_i = c_B B^{-1} e_i, read off the reduced cost of the identity column
        let duals = (0..self.rows)
            .map(|i| {
                let y = cost[self.ident[i]] - d[self.ident[i]];
                let y = if self.flipped[i] { -y } else { y };
                sign * y
            })
            .collect();
        Ok(Solution {
            value,
            x,
            duals,
            pivots: self.pivots,
        })
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:?} {:?}", self.sense, self.objective)?;
        for c in &self.constraints {
            writeln!(f, "  {:?} {:?} {}", c.coeffs, c.relation, c.rhs)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 5.0]);
        lp.add(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
        // dual (0, 3/2, 1) has the same value
        let dual: f64 = sol.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual - 36.0).abs() < 1e-12, "{:?}", sol.duals);
    }

    #[test]
    fn covering_with_phase_one() {
        // min x + y, x + 2y >= 4, 3x + y >= 6 -> (8/5, 6/5)
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.add(vec![(0, 1.0), (1, 2.0)], Relation::Ge, 4.0);
        lp.add(vec![(0, 3.0), (1, 1.0)], Relation::Ge, 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value - 2.8).abs() < 1e-12);
        let dual: f64 = sol.duals.iter().zip([4.0, 6.0]).map(|(y, b)| y * b).sum();
        assert!((dual - 2.8).abs() < 1e-12);
        assert!(sol.duals.iter().all(|&y| y >= -1e-12));
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x - y, x + y = 2, -x + y <= -1 (i.e. x - y >= 1)
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, -1.0]);
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        lp.add(vec![(0, -1.0), (1, 1.0)], Relation::Le, -1.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.add(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));

        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example under the largest-coefficient rule
        let mut lp = LinearProgram::new(Sense::Maximize, vec![0.75, -150.0, 0.02, -6.0]);
        lp.add(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        lp.add(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        lp.add(vec![(2, 1.0)], Relation::Le, 1.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }
}
