//! Bounded-variable two-phase revised simplex.
//!
//! Solves the LP relaxation of a [`MilpModel`]: all binaries are treated as
//! continuous within their current bounds. The basis inverse is kept dense
//! and updated by rank-one eta transformations, with periodic
//! refactorization. Anti-cycling falls back to Bland's rule once the number
//! of consecutive degenerate pivots exceeds `3 * (rows + cols)`.

use super::model::{MilpModel, Relation, Sense};
use super::SolverError;

const DUAL_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-9;
const DEGEN_STEP: f64 = 1e-10;
// Rows with a smaller pivot magnitude are treated as non-blocking; the
// resulting bound violations stay below the feasibility tolerance.
const PIVOT_SKIP: f64 = 1e-9;
const PIVOT_BREAKDOWN: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-7;
const REFACTOR_EVERY: usize = 128;

/// Terminal status of an LP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Raw LP solution over the structural variables.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective in the model's own sense (already flipped back for Max).
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Preprocessed constraint matrix shared across repeated solves with
/// different variable bounds (used by branch-and-bound).
pub(crate) struct LpCore {
    nrows: usize,
    /// Structural variable count.
    pub ncols: usize,
    /// Structural columns followed by one slack column per inequality row.
    cols: Vec<Vec<(usize, f64)>>,
    row_slack: Vec<Option<usize>>,
    /// Minimization costs over structural + slack columns.
    cost: Vec<f64>,
    rhs: Vec<f64>,
    slack_lower: Vec<f64>,
    slack_upper: Vec<f64>,
    maximize: bool,
    constant: f64,
}

impl LpCore {
    pub fn from_model(model: &MilpModel) -> Result<Self, SolverError> {
        model.validate()?;
        let ncols = model.num_vars();
        let nrows = model.num_constraints();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for (ri, c) in model.constraints.iter().enumerate() {
            for &(vi, coef) in &c.terms {
                if coef != 0.0 {
                    cols[vi].push((ri, coef));
                }
            }
        }
        // Merge duplicate variable entries within a row.
        for col in cols.iter_mut() {
            col.sort_by_key(|&(r, _)| r);
            col.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut row_slack = vec![None; nrows];
        let mut slack_lower = Vec::new();
        let mut slack_upper = Vec::new();
        for (ri, c) in model.constraints.iter().enumerate() {
            let coef = match c.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => continue,
            };
            let idx = cols.len();
            cols.push(vec![(ri, coef)]);
            row_slack[ri] = Some(idx);
            slack_lower.push(0.0);
            slack_upper.push(f64::INFINITY);
        }
        let maximize = model.sense == Sense::Maximize;
        let mut cost = vec![0.0; cols.len()];
        for (i, &c) in model.objective.iter().enumerate() {
            cost[i] = if maximize { -c } else { c };
        }
        Ok(LpCore {
            nrows,
            ncols,
            cols,
            row_slack,
            cost,
            rhs: model.constraints.iter().map(|c| c.rhs).collect(),
            slack_lower,
            slack_upper,
            maximize,
            constant: model.objective_constant,
        })
    }

    /// Solve with the given structural bounds (slack bounds are fixed).
    pub fn solve(&self, lower: &[f64], upper: &[f64]) -> Result<LpResult, SolverError> {
        debug_assert_eq!(lower.len(), self.ncols);
        let mut lo = Vec::with_capacity(self.cols.len());
        let mut hi = Vec::with_capacity(self.cols.len());
        lo.extend_from_slice(lower);
        hi.extend_from_slice(upper);
        lo.extend_from_slice(&self.slack_lower);
        hi.extend_from_slice(&self.slack_upper);
        for j in 0..self.ncols {
            if lo[j] > hi[j] {
                return Ok(LpResult {
                    status: LpStatus::Infeasible,
                    objective: f64::NAN,
                    x: Vec::new(),
                    iterations: 0,
                });
            }
        }
        let mut sx = Simplex::new(
            self.nrows,
            &self.cols,
            &self.row_slack,
            lo,
            hi,
            &self.cost,
            &self.rhs,
        );
        let (status, iterations) = sx.run()?;
        if status != LpStatus::Optimal {
            return Ok(LpResult {
                status,
                objective: f64::NAN,
                x: Vec::new(),
                iterations,
            });
        }
        let x = sx.extract(self.ncols);
        let mut obj: f64 = x.iter().zip(self.cost.iter()).map(|(v, c)| v * c).sum();
        if self.maximize {
            obj = -obj;
        }
        Ok(LpResult {
            status,
            objective: obj + self.constant,
            x,
            iterations,
        })
    }
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    n_real: usize,
    cols: &'a [Vec<(usize, f64)>],
    art_cols: Vec<Vec<(usize, f64)>>,
    n_art: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: &'a [f64],
    cost2: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    nb_val: Vec<f64>,
    at_upper: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    degen: usize,
    bland: bool,
    pivots_since_refactor: usize,
    tiny_pivots: usize,
}

impl<'a> Simplex<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        m: usize,
        cols: &'a [Vec<(usize, f64)>],
        row_slack: &[Option<usize>],
        lower: Vec<f64>,
        upper: Vec<f64>,
        cost: &[f64],
        rhs: &'a [f64],
    ) -> Self {
        let n = cols.len();
        let mut sx = Simplex {
            m,
            n,
            n_real: n,
            cols,
            art_cols: Vec::new(),
            n_art: 0,
            lower,
            upper,
            rhs,
            cost2: cost.to_vec(),
            basis: Vec::with_capacity(m),
            in_basis: vec![false; n],
            nb_val: vec![0.0; n],
            at_upper: vec![false; n],
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            y: vec![0.0; m],
            w: vec![0.0; m],
            degen: 0,
            bland: false,
            pivots_since_refactor: 0,
            tiny_pivots: 0,
        };
        // Nonbasic start values at the bound nearest zero.
        for j in 0..n {
            let (l, u) = (sx.lower[j], sx.upper[j]);
            if l.is_finite() {
                sx.nb_val[j] = l;
            } else if u.is_finite() {
                sx.nb_val[j] = u;
                sx.at_upper[j] = true;
            } else {
                sx.nb_val[j] = 0.0;
            }
        }
        let mut resid: Vec<f64> = rhs.to_vec();
        for j in 0..n {
            let v = sx.nb_val[j];
            if v != 0.0 {
                for &(r, a) in &cols[j] {
                    resid[r] -= a * v;
                }
            }
        }
        // Initial basis: the row's slack when its value comes out feasible,
        // otherwise a fresh artificial with matching sign.
        for i in 0..m {
            let r = resid[i];
            let mut chosen: Option<(usize, f64)> = None;
            if let Some(sj) = row_slack[i] {
                let coef = cols[sj][0].1;
                let val = r / coef;
                if val >= -1e-12 && val <= sx.upper[sj] {
                    chosen = Some((sj, coef));
                }
            }
            let (col_idx, coef) = match chosen {
                Some(c) => c,
                None => {
                    let coef = if r >= 0.0 { 1.0 } else { -1.0 };
                    let idx = n + sx.art_cols.len();
                    sx.art_cols.push(vec![(i, coef)]);
                    sx.lower.push(0.0);
                    sx.upper.push(f64::INFINITY);
                    sx.nb_val.push(0.0);
                    sx.at_upper.push(false);
                    sx.in_basis.push(false);
                    sx.cost2.push(0.0);
                    (idx, coef)
                }
            };
            sx.basis.push(col_idx);
            sx.in_basis[col_idx] = true;
            sx.binv[i * m + i] = 1.0 / coef;
            sx.xb[i] = (r / coef).max(0.0);
        }
        sx.n_art = sx.art_cols.len();
        sx.n = n + sx.n_art;
        sx
    }

    fn col(&self, j: usize) -> &[(usize, f64)] {
        if j < self.n_real {
            &self.cols[j]
        } else {
            &self.art_cols[j - self.n_real]
        }
    }

    fn run(&mut self) -> Result<(LpStatus, usize), SolverError> {
        let mut iterations = 0;
        if self.n_art > 0 {
            let mut c1 = vec![0.0; self.n];
            for j in self.n_real..self.n {
                c1[j] = 1.0;
            }
            let st = self.iterate(&c1, &mut iterations)?;
            if st == LpStatus::Unbounded {
                return Err(SolverError::NumericalBreakdown(
                    "phase-1 reported an unbounded direction".into(),
                ));
            }
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.n_real)
                .map(|i| self.xb[i])
                .sum();
            if infeas > FEAS_TOL {
                return Ok((LpStatus::Infeasible, iterations));
            }
            for j in self.n_real..self.n {
                self.lower[j] = 0.0;
                self.upper[j] = 0.0;
                self.nb_val[j] = 0.0;
            }
            self.drive_out_artificials();
            self.degen = 0;
            self.bland = false;
        }
        let c2 = self.cost2.clone();
        let st = self.iterate(&c2, &mut iterations)?;
        if st == LpStatus::Optimal && self.m > 0 && self.m <= 512 {
            // Clean pass for accuracy on desk-scale instances.
            self.refactor()?;
        }
        Ok((st, iterations))
    }

    /// Replace basic artificials at zero by structural columns where a
    /// nonzero pivot exists; redundant rows keep their artificial pinned.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] < self.n_real {
                continue;
            }
            if self.xb[i].abs() > 1e-9 {
                continue;
            }
            let mut entering = None;
            for j in 0..self.n_real {
                if self.in_basis[j] || self.upper[j] - self.lower[j] <= 0.0 {
                    continue;
                }
                let mut piv = 0.0;
                for &(r, a) in self.col(j) {
                    piv += self.binv[i * self.m + r] * a;
                }
                if piv.abs() > 1e-7 {
                    entering = Some(j);
                    break;
                }
            }
            if let Some(q) = entering {
                self.ftran(q);
                self.pivot(q, i, 0.0, 1.0, false);
            }
        }
    }

    fn iterate(&mut self, cost: &[f64], iterations: &mut usize) -> Result<LpStatus, SolverError> {
        let iter_limit = 200 * (self.m + self.n) + 20_000;
        loop {
            *iterations += 1;
            if *iterations > iter_limit {
                return Err(SolverError::IterationLimit(iter_limit));
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            self.compute_duals(cost);
            let entering = self.price(cost);
            let (q, dir) = match entering {
                Some(e) => e,
                None => return Ok(LpStatus::Optimal),
            };
            self.ftran(q);
            // Ratio test over basic variables plus the entering bound range.
            let own_range = self.upper[q] - self.lower[q];
            let mut t_best = own_range;
            let mut leave: Option<usize> = None;
            let mut leave_to_upper = false;
            for i in 0..self.m {
                let wi = self.w[i];
                if wi.abs() <= PIVOT_SKIP {
                    continue;
                }
                let delta = dir * wi;
                let b = self.basis[i];
                let (t, to_upper) = if delta > 0.0 {
                    if self.lower[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.xb[i] - self.lower[b]).max(0.0)) / delta, false)
                } else {
                    if self.upper[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.upper[b] - self.xb[i]).max(0.0)) / (-delta), true)
                };
                let better = match leave {
                    None => t < t_best - RATIO_TOL,
                    Some(cur) => {
                        if t < t_best - RATIO_TOL {
                            true
                        } else if t <= t_best + RATIO_TOL {
                            if self.bland {
                                self.basis[i] < self.basis[cur]
                            } else {
                                wi.abs() > self.w[cur].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    t_best = t.min(t_best);
                    leave = Some(i);
                    leave_to_upper = to_upper;
                }
            }
            if t_best.is_infinite() {
                return Ok(LpStatus::Unbounded);
            }
            match leave {
                None => {
                    // Bound flip: the entering variable crosses to its other bound.
                    for i in 0..self.m {
                        self.xb[i] -= dir * t_best * self.w[i];
                    }
                    self.at_upper[q] = !self.at_upper[q];
                    self.nb_val[q] = if self.at_upper[q] {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                    self.note_step(t_best);
                }
                Some(r) => {
                    let piv = self.w[r];
                    if piv.abs() < PIVOT_SKIP {
                        // Numerical drift: rebuild the inverse and retry the
                        // iteration from clean data before giving up.
                        self.tiny_pivots += 1;
                        if self.tiny_pivots > 16 && piv.abs() < PIVOT_BREAKDOWN {
                            return Err(SolverError::NumericalBreakdown(format!(
                                "pivot magnitude {piv:.3e} below 1e-12 repeatedly"
                            )));
                        }
                        self.refactor()?;
                        continue;
                    }
                    self.pivot(q, r, t_best, dir, leave_to_upper);
                    self.note_step(t_best);
                }
            }
        }
    }

    fn note_step(&mut self, t: f64) {
        if t <= DEGEN_STEP {
            self.degen += 1;
            if self.degen > 3 * (self.m + self.n) {
                self.bland = true;
            }
        } else {
            self.degen = 0;
        }
    }

    fn compute_duals(&mut self, cost: &[f64]) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yv, &bv) in self.y.iter_mut().zip(row.iter()) {
                    *yv += cb * bv;
                }
            }
        }
    }

    fn price(&self, cost: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            if self.in_basis[j] || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let mut d = cost[j];
            for &(r, a) in self.col(j) {
                d -= self.y[r] * a;
            }
            let free = self.lower[j] == f64::NEG_INFINITY && self.upper[j] == f64::INFINITY;
            let dir = if free {
                if d < -DUAL_TOL {
                    1.0
                } else if d > DUAL_TOL {
                    -1.0
                } else {
                    continue;
                }
            } else if !self.at_upper[j] {
                if d < -DUAL_TOL {
                    1.0
                } else {
                    continue;
                }
            } else if d > DUAL_TOL {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = d.abs();
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, dir, score)),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ftran(&mut self, q: usize) {
        let m = self.m;
        self.w.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.col(q).len() {
            let (r, a) = self.col(q)[k];
            for i in 0..m {
                self.w[i] += a * self.binv[i * m + r];
            }
        }
    }

    fn pivot(&mut self, q: usize, r: usize, t: f64, dir: f64, leave_to_upper: bool) {
        let m = self.m;
        for i in 0..m {
            if i != r {
                self.xb[i] -= dir * t * self.w[i];
            }
        }
        let entering_val = self.nb_val[q] + dir * t;
        let b_out = self.basis[r];
        let bound = if leave_to_upper {
            self.upper[b_out]
        } else {
            self.lower[b_out]
        };
        self.in_basis[b_out] = false;
        self.nb_val[b_out] = bound;
        self.at_upper[b_out] = leave_to_upper;
        self.basis[r] = q;
        self.in_basis[q] = true;
        self.xb[r] = entering_val;
        // Eta update of the dense inverse.
        let piv = self.w[r];
        let inv_piv = 1.0 / piv;
        for v in self.binv[r * m..(r + 1) * m].iter_mut() {
            *v *= inv_piv;
        }
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.w[i];
            if f == 0.0 {
                continue;
            }
            let (head, tail) = self.binv.split_at_mut(r.max(i) * m);
            let (row_i, row_r) = if i < r {
                (&mut head[i * m..(i + 1) * m], &tail[..m])
            } else {
                (&mut tail[..m], &head[r * m..(r + 1) * m])
            };
            for (vi, &vr) in row_i.iter_mut().zip(row_r.iter()) {
                *vi -= f * vr;
            }
        }
        self.pivots_since_refactor += 1;
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        // Gauss-Jordan inversion of the basis matrix with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (i, &bj) in self.basis.iter().enumerate() {
            for &(r, v) in self.col(bj) {
                a[r * m + i] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut pmax = a[c * m + c].abs();
            for r in (c + 1)..m {
                let v = a[r * m + c].abs();
                if v > pmax {
                    pmax = v;
                    p = r;
                }
            }
            if pmax < PIVOT_BREAKDOWN {
                return Err(SolverError::NumericalBreakdown(
                    "singular basis during refactorization".into(),
                ));
            }
            if p != c {
                for j in 0..m {
                    a.swap(c * m + j, p * m + j);
                    inv.swap(c * m + j, p * m + j);
                }
            }
            let d = a[c * m + c];
            for j in 0..m {
                a[c * m + j] /= d;
                inv[c * m + j] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    a[r * m + j] -= f * a[c * m + j];
                    inv[r * m + j] -= f * inv[c * m + j];
                }
            }
        }
        self.binv = inv;
        // Recompute basic values from scratch.
        let mut resid: Vec<f64> = self.rhs.to_vec();
        for j in 0..self.n {
            if self.in_basis[j] {
                continue;
            }
            let v = self.nb_val[j];
            if v != 0.0 {
                for &(r, a) in self.col(j) {
                    resid[r] -= a * v;
                }
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            let row = &self.binv[i * m..(i + 1) * m];
            for (bv, &rv) in row.iter().zip(resid.iter()) {
                s += bv * rv;
            }
            self.xb[i] = s;
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn extract(&self, n_struct: usize) -> Vec<f64> {
        let mut x = vec![0.0; n_struct];
        for j in 0..n_struct {
            if !self.in_basis[j] {
                x[j] = self.nb_val[j];
            }
        }
        for (i, &bj) in self.basis.iter().enumerate() {
            if bj < n_struct {
                x[bj] = self.xb[i];
            }
        }
        x
    }
}

/// Solve the LP relaxation of a model (binaries relaxed to their bounds).
///
/// Returns a status outcome; `NumericalBreakdown` and other solver faults
/// surface as errors.
pub fn solve_lp(model: &MilpModel) -> Result<super::SolveOutcome, SolverError> {
    if !model.quad_terms.is_empty() {
        return Err(SolverError::InvalidModel(
            "solve_lp does not accept quadratic terms; use solve_convex_miqp".into(),
        ));
    }
    let started = std::time::Instant::now();
    let core = LpCore::from_model(model)?;
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let res = core.solve(&lower, &upper)?;
    Ok(super::SolveOutcome {
        status: match res.status {
            LpStatus::Optimal => super::SolveStatus::Optimal,
            LpStatus::Infeasible => super::SolveStatus::Infeasible,
            LpStatus::Unbounded => super::SolveStatus::Unbounded,
        },
        objective: res.objective,
        primal: if res.status == LpStatus::Optimal {
            model.primal_map(&res.x)
        } else {
            Default::default()
        },
        gap: 0.0,
        nodes: 0,
        wall_time: started.elapsed().as_secs_f64(),
        warnings: Vec::new(),
    })
}

pub(crate) use LpCore as RelaxationCore;
