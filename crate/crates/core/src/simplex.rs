//! Dense tableau simplex for
//!
//! ```text
//! maximize   cᵀx
//! subject to Ax ≤ b,  x ≥ 0,  with b ≥ 0
//! ```
//!
//! `b ≥ 0` makes the slack basis feasible, so no phase one is needed.
//! Pricing is by largest reduced cost; after a run of pivots that fail to
//! improve the best objective value it switches for the rest of the solve
//! to Bland's rule (lowest-index
//! entering column, lowest-index leaving variable among ratio ties), which
//! cannot cycle.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-9;
/// Feasibility slack of the Harris ratio test.
const HARRIS_TOL: f64 = 1e-10;
const COST_EPS: f64 = 1e-12;
const DEGENERATE_STREAK: usize = 30;

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds `row·x ≤ rhs`; `rhs` must be non-negative.
    pub fn add_constraint(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        if row.len() != self.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars(),
                found: row.len(),
            });
        }
        if !(rhs.is_finite() && rhs >= 0.0) || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearProgram(format!(
                "constraint must have finite coefficients and non-negative right-hand side (got {rhs})"
            )));
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_with_limit(200_000)
    }

    pub fn solve_with_limit(&self, max_pivots: usize) -> Result<LpSolution> {
        let m = self.rows.len();
        let n = self.n_vars();
        let width = n + m + 1;
        let rhs_col = n + m;
        let mut tab = vec![0.0; (m + 1) * width];
        for (i, (row, b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let r = &mut tab[i * width..(i + 1) * width];
            r[..n].copy_from_slice(row);
            r[n + i] = 1.0;
            r[rhs_col] = *b;
        }
        // objective row holds reduced costs c_j − z_j and −z in the rhs column
        let obj = m * width;
        tab[obj..obj + n].copy_from_slice(&self.objective);
        let mut basis: Vec<usize> = (n..n + m).collect();

        let mut pivots = 0;
        let mut degenerate = 0;
        let mut bland = false;
        let mut best = 0.0f64;
        loop {
            bland |= degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..n + m).find(|&j| tab[obj + j] > COST_EPS)
            } else {
                (0..n + m)
                    .filter(|&j| tab[obj + j] > COST_EPS)
                    .max_by(|&x, &y| tab[obj + x].total_cmp(&tab[obj + y]).then(y.cmp(&x)))
            };
            let Some(col) = entering else { break };

            let leave = if bland {
                bland_ratio(&tab, width, m, col, rhs_col, &basis)
            } else {
                harris_ratio(&tab, width, m, col, rhs_col)
            };
            let Some((row, _)) = leave else {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    x: vec![],
                    objective: f64::INFINITY,
                    pivots,
                });
            };

            pivot(&mut tab, width, m + 1, row, col);
            basis[row] = col;
            let value = -tab[obj + rhs_col];
            if value > best + 1e-12 * best.abs().max(1.0) {
                best = value;
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            pivots += 1;
            if pivots >= max_pivots {
                return Err(Error::LinearProgram(format!(
                    "no optimum after {pivots} pivots ({m} constraints, {n} variables)"
                )));
            }
        }

        let mut x = vec![0.0; n];
        for (i, &var) in basis.iter().enumerate() {
            if var < n {
                x[var] = tab[i * width + rhs_col].max(0.0);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            pivots,
        })
    }

    /// `b − Ax` for each constraint.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| b - row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    /// Keeps only the constraints for which `keep(index)` is true.
    pub fn retain_constraints(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let flags: Vec<bool> = (0..self.rows.len()).map(&mut keep).collect();
        let mut it = flags.iter();
        self.rows.retain(|_| *it.next().unwrap());
        let mut it = flags.iter();
        self.rhs.retain(|_| *it.next().unwrap());
    }
}

/// Minimum ratio with ties broken by the lowest basic variable index.
fn bland_ratio(
    tab: &[f64],
    width: usize,
    m: usize,
    col: usize,
    rhs_col: usize,
    basis: &[usize],
) -> Option<(usize, f64)> {
    let mut leave: Option<(usize, f64)> = None;
    for i in 0..m {
        let a = tab[i * width + col];
        if a > PIVOT_EPS {
            let ratio = tab[i * width + rhs_col].max(0.0) / a;
            leave = match leave {
                None => Some((i, ratio)),
                Some((best, best_ratio)) => {
                    let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.abs().max(1.0);
                    if ratio < best_ratio && !tie || tie && basis[i] < basis[best] {
                        Some((i, ratio))
                    } else {
                        Some((best, best_ratio))
                    }
                }
            };
        }
    }
    leave
}

/// Two-pass ratio test: the largest pivot among rows whose ratio is within
/// a small feasibility slack of the minimum.
fn harris_ratio(
    tab: &[f64],
    width: usize,
    m: usize,
    col: usize,
    rhs_col: usize,
) -> Option<(usize, f64)> {
    let mut bound = f64::INFINITY;
    for i in 0..m {
        let a = tab[i * width + col];
        if a > PIVOT_EPS {
            bound = bound.min((tab[i * width + rhs_col].max(0.0) + HARRIS_TOL) / a);
        }
    }
    if !bound.is_finite() {
        return None;
    }
    let mut leave: Option<(usize, f64, f64)> = None;
    for i in 0..m {
        let a = tab[i * width + col];
        if a > PIVOT_EPS {
            let ratio = tab[i * width + rhs_col].max(0.0) / a;
            if ratio <= bound && leave.is_none_or(|(_, _, best)| a > best) {
                leave = Some((i, ratio, a));
            }
        }
    }
    leave.map(|(i, ratio, _)| (i, ratio))
}

fn pivot(tab: &mut [f64], width: usize, rows: usize, prow: usize, pcol: usize) {
    let p = tab[prow * width + pcol];
    for v in &mut tab[prow * width..(prow + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = tab[prow * width..(prow + 1) * width].to_vec();
    for r in 0..rows {
        if r == prow {
            continue;
        }
        let factor = tab[r * width + pcol];
        if factor == 0.0 {
            continue;
        }
        let row = &mut tab[r * width..(r + 1) * width];
        for (v, pv) in row.iter_mut().zip(&pivot_row) {
            *v -= factor * pv;
        }
        row[pcol] = 0.0;
    }
}
