//! Dense tableau primal simplex.
//!
//! Rows with a negative right-hand side are negated and given an artificial
//! variable; phase one drives the artificials to zero, phase two optimises the
//! real objective. Entering columns follow Dantzig's rule until a run of
//! degenerate pivots exceeds `degenerate_switch · rows`, after which Bland's
//! rule takes over for the rest of the solve. The leaving row is always the
//! lowest-index basic variable among ratio ties.
//!
//! Duals are the reduced costs of the slack columns in the final objective row.

use super::{LpError, LpSolution, LpStatus, StandardLp, FEASIBILITY_TOL, GAP_TOL, MAX_VARIABLES};

const ENTER_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-10;
const MAX_TABLEAU_CELLS: usize = 150_000_000;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Overrides the default limit of `10·(rows + cols)²` pivots.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots, per row, before switching to Bland's rule.
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iterations: None, degenerate_switch: 50 }
    }
}

pub fn solve(lp: &StandardLp) -> Result<LpSolution, LpError> {
    solve_with(lp, &SimplexOptions::default())
}

pub fn solve_with(lp: &StandardLp, options: &SimplexOptions) -> Result<LpSolution, LpError> {
    lp.check_dimensions()?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    if n > MAX_VARIABLES {
        return Err(LpError::TooLarge { vars: n, rows: m });
    }
    let flipped: Vec<bool> = lp.rhs().iter().map(|&b| b < 0.0).collect();
    let artificials = flipped.iter().filter(|&&f| f).count();
    let width = n + m + artificials + 1;
    if m.saturating_mul(width) > MAX_TABLEAU_CELLS {
        return Err(LpError::TooLarge { vars: n, rows: m });
    }
    let limit = options.max_iterations.unwrap_or(10 * (m + n) * (m + n)).max(1);
    let mut tab = Tableau::new(lp, &flipped, width, limit, options.degenerate_switch * m.max(1));

    if artificials > 0 {
        tab.load_phase_one_objective(n + m);
        let real_cols = n + m;
        match tab.optimise(real_cols)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded(_) => unreachable!("phase one objective is bounded by zero"),
        }
        let scale = 1.0 + lp.rhs().iter().fold(0.0_f64, |acc, b| acc.max(b.abs()));
        if tab.z[width - 1] < -FEASIBILITY_TOL * scale {
            let farkas: Vec<f64> = (0..m).map(|i| tab.z[n + i]).collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                dual: Vec::new(),
                objective: f64::NAN,
                dual_objective: f64::NAN,
                iterations: tab.iterations,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                certificate: Some(farkas),
            });
        }
        tab.drive_out_artificials(n + m);
    }

    tab.load_objective(lp.objective());
    match tab.optimise(n + m)? {
        PhaseEnd::Unbounded(col) => {
            let mut ray = vec![0.0; n];
            if col < n {
                ray[col] = 1.0;
            }
            for (r, &b) in tab.basis.iter().enumerate() {
                if b < n {
                    ray[b] = -tab.at(r, col);
                }
            }
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: Vec::new(),
                dual: Vec::new(),
                objective: f64::INFINITY,
                dual_objective: f64::NAN,
                iterations: tab.iterations,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                certificate: Some(ray),
            })
        }
        PhaseEnd::Optimal => {
            let mut x = vec![0.0; n];
            for (r, &b) in tab.basis.iter().enumerate() {
                if b < n {
                    x[b] = tab.at(r, width - 1);
                }
            }
            let y: Vec<f64> = (0..m).map(|i| tab.z[n + i]).collect();
            let sol = LpSolution::from_values(lp, clean(x), clean(y));
            let sol = LpSolution { iterations: tab.iterations, ..sol };
            let gap = sol.duality_gap();
            if sol.primal_residual > FEASIBILITY_TOL
                || sol.dual_residual > FEASIBILITY_TOL
                || gap > GAP_TOL * (1.0 + sol.objective.abs())
            {
                return Err(LpError::Uncertified {
                    primal_residual: sol.primal_residual,
                    dual_residual: sol.dual_residual,
                    gap,
                });
            }
            Ok(sol)
        }
    }
}

/// Snaps round-off noise around zero.
fn clean(mut v: Vec<f64>) -> Vec<f64> {
    for x in &mut v {
        if x.abs() < 1e-13 {
            *x = 0.0;
        }
    }
    v
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    /// Objective row: reduced costs, objective value in the last cell.
    z: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    limit: usize,
    degenerate_run: usize,
    degenerate_limit: usize,
    bland: bool,
}

impl Tableau {
    fn new(lp: &StandardLp, flipped: &[bool], width: usize, limit: usize, degenerate_limit: usize) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut data = vec![0.0; m * width];
        for j in 0..n {
            for &(i, v) in lp.column(j) {
                let sign = if flipped[i] { -1.0 } else { 1.0 };
                data[i * width + j] += sign * v;
            }
        }
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n + m;
        for i in 0..m {
            let row = &mut data[i * width..(i + 1) * width];
            if flipped[i] {
                row[n + i] = -1.0;
                row[next_art] = 1.0;
                row[width - 1] = -lp.rhs()[i];
                basis.push(next_art);
                next_art += 1;
            } else {
                row[n + i] = 1.0;
                row[width - 1] = lp.rhs()[i];
                basis.push(n + i);
            }
        }
        Tableau {
            rows: m,
            width,
            data,
            z: vec![0.0; width],
            basis,
            iterations: 0,
            limit,
            degenerate_run: 0,
            degenerate_limit,
            bland: false,
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    /// Phase one maximises `−Σ artificials`.
    fn load_phase_one_objective(&mut self, first_artificial: usize) {
        self.z.iter_mut().for_each(|z| *z = 0.0);
        for r in 0..self.rows {
            if self.basis[r] >= first_artificial {
                let row = &self.data[r * self.width..(r + 1) * self.width];
                for (z, &a) in self.z.iter_mut().zip(row) {
                    *z -= a;
                }
            }
        }
        for c in first_artificial..self.width - 1 {
            self.z[c] = 0.0;
        }
    }

    fn load_objective(&mut self, c: &[f64]) {
        self.z.iter_mut().for_each(|z| *z = 0.0);
        for (j, &cj) in c.iter().enumerate() {
            self.z[j] = -cj;
        }
        for r in 0..self.rows {
            let b = self.basis[r];
            let cb = c.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                let row = &self.data[r * self.width..(r + 1) * self.width];
                for (z, &a) in self.z.iter_mut().zip(row) {
                    *z += cb * a;
                }
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where some real column
    /// can replace them. Rows with no such column are redundant and keep their
    /// artificial at zero.
    fn drive_out_artificials(&mut self, first_artificial: usize) {
        for r in 0..self.rows {
            if self.basis[r] < first_artificial {
                continue;
            }
            if let Some(c) = (0..first_artificial).find(|&c| self.at(r, c).abs() > 1e-9) {
                self.pivot(r, c);
            }
        }
    }

    fn optimise(&mut self, allowed_cols: usize) -> Result<PhaseEnd, LpError> {
        loop {
            let Some(col) = self.entering(allowed_cols) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some((row, ratio)) = self.leaving(col) else {
                return Ok(PhaseEnd::Unbounded(col));
            };
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit { limit: self.limit });
            }
            if ratio <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.degenerate_limit {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(row, col);
            self.iterations += 1;
        }
    }

    fn entering(&self, allowed_cols: usize) -> Option<usize> {
        let candidates = (0..allowed_cols).filter(|&c| self.z[c] < -ENTER_TOL);
        if self.bland {
            candidates.into_iter().next()
        } else {
            // min_by keeps the first of equal elements, so ties go to the lowest index.
            candidates.min_by(|&a, &b| self.z[a].total_cmp(&self.z[b]))
        }
    }

    fn leaving(&self, col: usize) -> Option<(usize, f64)> {
        let rhs = self.width - 1;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, col);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.at(r, rhs).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        {
            let pr = &mut self.data[row * w..(row + 1) * w];
            for v in pr.iter_mut() {
                *v /= p;
            }
            pr[col] = 1.0;
        }
        let (before, rest) = self.data.split_at_mut(row * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[col];
            if f != 0.0 {
                for (o, &pv) in other.iter_mut().zip(prow.iter()) {
                    *o -= f * pv;
                }
                other[col] = 0.0;
            }
        }
        let f = self.z[col];
        if f != 0.0 {
            for (z, &pv) in self.z.iter_mut().zip(prow.iter()) {
                *z -= f * pv;
            }
            self.z[col] = 0.0;
        }
        self.basis[row] = col;
    }
}
