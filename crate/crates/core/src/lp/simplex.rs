//! Dense two-phase tableau simplex.
//!
//! Pricing is Dantzig's largest reduced cost with a two-pass (Harris) ratio
//! test that prefers large pivot elements. Degenerate stalls are broken by a
//! seeded perturbation of the right-hand side for floating-point types and by
//! Bland's rule for exact types. A perturbed phase ends by restoring the true
//! right-hand side from the basis inverse and repairing any infeasibility with
//! dual simplex pivots. Free variables are split into a difference of two
//! nonnegative columns here and nowhere else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense, VarKind};
use crate::scalar::Scalar;

/// Perturbation rounds per phase before falling back to Bland's rule.
const PERTURBATION_ROUNDS: usize = 3;
/// Relative size of the right-hand-side perturbation.
const PERTURBATION_SCALE: f64 = 1e-7;
/// Row residual above which a floating-point solution is rebuilt from the
/// original data and re-optimized.
const ACCURACY_TOLERANCE: f64 = 1e-8;
const RECOVERY_ATTEMPTS: usize = 2;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Pivot budget; `None` picks a budget from the problem size.
    pub max_iterations: Option<usize>,
    pub degeneracy_limit: usize,
    /// Recompute reduced costs from scratch this often (inexact types only).
    pub refresh_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            degeneracy_limit: 50,
            refresh_every: 100,
        }
    }
}

pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    solve_with(lp, &SimplexOptions::default())
}

fn infeasible<T>(status: LpStatus, pivots: usize) -> LpSolution<T> {
    LpSolution {
        status,
        objective: None,
        primal: Vec::new(),
        duals: Vec::new(),
        iterations: pivots,
    }
}

pub fn solve_with<T: Scalar>(lp: &LinearProgram<T>, options: &SimplexOptions) -> Result<LpSolution<T>, LpError> {
    let mut setup = Setup::build(lp);
    let budget = options
        .max_iterations
        .unwrap_or_else(|| 10_000usize.max(50 * (setup.tab.rows + setup.tab.cols)));
    let mut pivots = 0usize;

    if setup.has_artificials {
        let phase_one: Vec<T> = setup
            .is_artificial
            .iter()
            .map(|&a| if a { -T::one() } else { T::zero() })
            .collect();
        setup.tab.set_cost(phase_one);
        match setup.tab.run(options, budget, &mut pivots)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase one objective is bounded by zero"),
        }
        if setup.tab.objective < -T::pivot_tolerance() {
            return Ok(infeasible(LpStatus::Infeasible, pivots));
        }
        setup.drive_out_artificials();
        for (col, &art) in setup.is_artificial.iter().enumerate() {
            if art {
                setup.tab.blocked[col] = true;
            }
        }
    }

    let phase_two = setup.phase_two_cost.clone();
    setup.tab.set_cost(phase_two);
    for attempt in 0..=RECOVERY_ATTEMPTS {
        if let Outcome::Unbounded = setup.tab.run(options, budget, &mut pivots)? {
            return Ok(infeasible(LpStatus::Unbounded, pivots));
        }
        let primal = setup.primal_values(lp);
        if T::is_exact() || setup.accurate(lp, &primal) {
            let duals = setup.shadow_prices(lp);
            let objective = lp.objective_value(&primal);
            return Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: Some(objective),
                primal,
                duals,
                iterations: pivots,
            });
        }
        if attempt < RECOVERY_ATTEMPTS {
            setup.tab.reinvert();
        }
    }
    Err(LpError::NumericalFailure { iterations: pivots })
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Setup<T> {
    tab: Tableau<T>,
    /// Columns of each model variable: (positive part, negative part).
    var_cols: Vec<(usize, Option<usize>)>,
    /// Sign applied to each row to make its right-hand side nonnegative.
    row_sign: Vec<bool>,
    /// Column holding `B^-1 e_i` for row i (slack or artificial).
    unit_col: Vec<usize>,
    is_artificial: Vec<bool>,
    has_artificials: bool,
    phase_two_cost: Vec<T>,
}

impl<T: Scalar> Setup<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let mut var_cols = Vec::with_capacity(lp.variables().len());
        let mut ncols = 0;
        for v in lp.variables() {
            match v.kind {
                VarKind::NonNegative => {
                    var_cols.push((ncols, None));
                    ncols += 1;
                }
                VarKind::Free => {
                    var_cols.push((ncols, Some(ncols + 1)));
                    ncols += 2;
                }
            }
        }
        let structural = ncols;

        // Normalize rows so the right-hand side is nonnegative; a `>=` row
        // with zero rhs is negated into `<=` so its slack can start basic.
        let mut row_sign = Vec::with_capacity(lp.constraints().len());
        let mut relations = Vec::with_capacity(lp.constraints().len());
        for row in lp.constraints() {
            let negate = row.rhs < T::zero() || (row.rhs.is_zero() && row.relation == Relation::Ge);
            row_sign.push(negate);
            relations.push(if negate { row.relation.flipped() } else { row.relation });
        }
        let mut aux = Vec::with_capacity(relations.len());
        for rel in &relations {
            match rel {
                Relation::Le => {
                    aux.push((Some(ncols), None, None));
                    ncols += 1;
                }
                Relation::Ge => {
                    aux.push((None, Some(ncols), Some(ncols + 1)));
                    ncols += 2;
                }
                Relation::Eq => {
                    aux.push((None, None, Some(ncols)));
                    ncols += 1;
                }
            }
        }

        let rows = lp.constraints().len();
        let width = ncols + 1;
        let mut data = vec![T::zero(); rows * width];
        let mut basis = Vec::with_capacity(rows);
        let mut unit_col = Vec::with_capacity(rows);
        let mut is_artificial = vec![false; ncols];
        for (i, row) in lp.constraints().iter().enumerate() {
            let base = i * width;
            let sign = |c: &T| if row_sign[i] { -c.clone() } else { c.clone() };
            for (v, c) in &row.terms {
                let (plus, minus) = var_cols[v.index()];
                data[base + plus] = data[base + plus].clone() + sign(c);
                if let Some(minus) = minus {
                    data[base + minus] = data[base + minus].clone() - sign(c);
                }
            }
            data[base + ncols] = sign(&row.rhs);
            let (slack, surplus, artificial) = aux[i];
            if let Some(s) = slack {
                data[base + s] = T::one();
                basis.push(s);
                unit_col.push(s);
            }
            if let Some(s) = surplus {
                data[base + s] = -T::one();
            }
            if let Some(a) = artificial {
                data[base + a] = T::one();
                is_artificial[a] = true;
                basis.push(a);
                unit_col.push(a);
            }
        }

        let flip = lp.sense() == Sense::Minimize;
        let mut phase_two_cost = vec![T::zero(); ncols];
        for (v, c) in lp.objective() {
            let c = if flip { -c.clone() } else { c.clone() };
            let (plus, minus) = var_cols[v.index()];
            phase_two_cost[plus] = c.clone();
            if let Some(minus) = minus {
                phase_two_cost[minus] = -c;
            }
        }
        debug_assert!(structural <= ncols);

        let has_artificials = is_artificial.iter().any(|&a| a);
        let base_rhs = (0..rows).map(|i| data[i * width + ncols].clone()).collect();
        Self {
            tab: Tableau {
                rows,
                cols: ncols,
                original: data.clone(),
                data,
                basis,
                cost: vec![T::zero(); ncols],
                reduced: vec![T::zero(); ncols],
                objective: T::zero(),
                blocked: vec![false; ncols],
                base_rhs,
                unit_col: unit_col.clone(),
                perturbed: false,
            },
            var_cols,
            row_sign,
            unit_col,
            is_artificial,
            has_artificials,
            phase_two_cost,
        }
    }

    /// Pivot zero-level artificials out of the basis where some real column
    /// can replace them; rows where none can are redundant and keep theirs.
    fn drive_out_artificials(&mut self) {
        let width = self.tab.cols + 1;
        for i in 0..self.tab.rows {
            if !self.is_artificial[self.tab.basis[i]] {
                continue;
            }
            let base = i * width;
            let replacement = (0..self.tab.cols)
                .find(|&k| !self.is_artificial[k] && self.tab.data[base + k].abs() > T::pivot_tolerance());
            if let Some(k) = replacement {
                self.tab.pivot(i, k);
            }
        }
    }

    fn primal_values(&self, lp: &LinearProgram<T>) -> Vec<T> {
        let width = self.tab.cols + 1;
        let mut col_value = vec![T::zero(); self.tab.cols];
        for (i, &col) in self.tab.basis.iter().enumerate() {
            col_value[col] = self.tab.data[i * width + self.tab.cols].clone();
        }
        lp.variables()
            .iter()
            .zip(&self.var_cols)
            .map(|(var, &(plus, minus))| match (var.kind, minus) {
                (VarKind::Free, Some(minus)) => col_value[plus].clone() - col_value[minus].clone(),
                _ => {
                    let v = col_value[plus].clone();
                    if v < T::zero() && -v.clone() <= T::pivot_tolerance() {
                        T::zero()
                    } else {
                        v
                    }
                }
            })
            .collect()
    }

    /// Every row and bound holds within [`ACCURACY_TOLERANCE`] (relative to
    /// the row's scale).
    fn accurate(&self, lp: &LinearProgram<T>, primal: &[T]) -> bool {
        let tol = ACCURACY_TOLERANCE;
        let bounds_ok = lp
            .variables()
            .iter()
            .zip(primal)
            .all(|(v, x)| v.kind == VarKind::Free || x.to_f64() >= -tol);
        bounds_ok
            && lp.constraints().iter().all(|row| {
                let scale = row
                    .terms
                    .iter()
                    .map(|(v, c)| (c.clone() * primal[v.index()].clone()).abs().to_f64())
                    .fold(1.0 + row.rhs.abs().to_f64(), f64::max);
                row.violation(primal).to_f64() <= tol * scale
            })
    }

    fn shadow_prices(&self, lp: &LinearProgram<T>) -> Vec<T> {
        let flip = lp.sense() == Sense::Minimize;
        (0..self.tab.rows)
            .map(|i| {
                // The unit column has zero phase-two cost, so pi_i = -reduced.
                let mut y = -self.tab.reduced[self.unit_col[i]].clone();
                if self.row_sign[i] {
                    y = -y;
                }
                if flip {
                    y = -y;
                }
                if y.is_zero() {
                    T::zero()
                } else {
                    y
                }
            })
            .collect()
    }
}

struct Tableau<T> {
    rows: usize,
    cols: usize,
    /// Row-major, `cols + 1` entries per row; the last is the right-hand side.
    data: Vec<T>,
    basis: Vec<usize>,
    cost: Vec<T>,
    reduced: Vec<T>,
    objective: T,
    blocked: Vec<bool>,
    /// Initial tableau, for rebuilding after numerical drift.
    original: Vec<T>,
    /// Normalized right-hand side of the model rows.
    base_rhs: Vec<T>,
    /// Column holding `B^-1 e_i` for row i (slack or artificial).
    unit_col: Vec<usize>,
    perturbed: bool,
}

impl<T: Scalar> Tableau<T> {
    fn set_cost(&mut self, cost: Vec<T>) {
        self.cost = cost;
        self.refresh();
    }

    /// Recompute reduced costs and objective from the current tableau.
    fn refresh(&mut self) {
        let width = self.cols + 1;
        let mut reduced = self.cost.clone();
        let mut objective = T::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &self.cost[b];
            if cb.is_zero() {
                continue;
            }
            let row = &self.data[i * width..(i + 1) * width];
            for (k, a) in row[..self.cols].iter().enumerate() {
                if !a.is_zero() {
                    reduced[k] = reduced[k].clone() - cb.clone() * a.clone();
                }
            }
            objective = objective + cb.clone() * row[self.cols].clone();
        }
        for &b in &self.basis {
            reduced[b] = T::zero();
        }
        for r in reduced.iter_mut() {
            r.flush();
        }
        self.reduced = reduced;
        self.objective = objective;
    }

    /// Optimize the current cost from a primal feasible (or slightly
    /// infeasible) basis. Ends with the true right-hand side in place.
    fn run(&mut self, options: &SimplexOptions, budget: usize, pivots: &mut usize) -> Result<Outcome, LpError> {
        let mut rounds = 0usize;
        loop {
            if !self.primal_feasible() {
                self.dual_repair(budget, pivots)?;
            }
            let allow_perturbation = !T::is_exact() && rounds < PERTURBATION_ROUNDS;
            let outcome = self.primal(options, budget, pivots, allow_perturbation)?;
            if !self.perturbed {
                return Ok(outcome);
            }
            self.restore_rhs();
            if let Outcome::Unbounded = outcome {
                return Ok(outcome);
            }
            rounds += 1;
            if self.primal_feasible() && self.entering(false).is_none() {
                return Ok(Outcome::Optimal);
            }
        }
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let tol = T::solver_tolerance();
        if bland {
            return (0..self.cols).find(|&j| !self.blocked[j] && self.reduced[j] > tol);
        }
        let mut best: Option<usize> = None;
        for j in 0..self.cols {
            if self.blocked[j] || self.reduced[j] <= tol {
                continue;
            }
            if best.is_none_or(|b| self.reduced[j] > self.reduced[b]) {
                best = Some(j);
            }
        }
        best
    }

    /// Leaving row for entering column `j`, or `None` when the column is an
    /// unbounded ray. Inexact types use a two-pass test: the step bound is
    /// relaxed by the feasibility tolerance, then the largest pivot element
    /// within that bound wins. Exact types take the minimum ratio, breaking
    /// ties by Bland's rule when `bland` is set.
    fn leaving(&self, j: usize, bland: bool) -> Option<usize> {
        let width = self.cols + 1;
        let piv_tol = T::pivot_tolerance();
        let candidates = (0..self.rows).filter(|&i| self.data[i * width + j] > piv_tol);
        if T::is_exact() {
            let mut leave: Option<(usize, T)> = None;
            for i in candidates {
                let a = &self.data[i * width + j];
                let ratio = self.data[i * width + self.cols].clone() / a.clone();
                let replace = match &leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < *best
                            || (ratio == *best
                                && if bland {
                                    self.basis[i] < self.basis[*r]
                                } else {
                                    *a > self.data[*r * width + j]
                                })
                    }
                };
                if replace {
                    leave = Some((i, ratio));
                }
            }
            return leave.map(|(r, _)| r);
        }
        let feas = T::solver_tolerance();
        let rows: Vec<usize> = candidates.collect();
        let bound = rows
            .iter()
            .map(|&i| (self.data[i * width + self.cols].clone() + feas.clone()) / self.data[i * width + j].clone())
            .reduce(|a, b| if b < a { b } else { a })?;
        let mut best: Option<usize> = None;
        for &i in &rows {
            let a = &self.data[i * width + j];
            if self.data[i * width + self.cols].clone() / a.clone() > bound {
                continue;
            }
            if best.is_none_or(|r| *a > self.data[r * width + j]) {
                best = Some(i);
            }
        }
        best
    }

    fn primal(
        &mut self,
        options: &SimplexOptions,
        budget: usize,
        pivots: &mut usize,
        allow_perturbation: bool,
    ) -> Result<Outcome, LpError> {
        let tol = T::solver_tolerance();
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut since_refresh = 0usize;
        let width = self.cols + 1;
        loop {
            if !T::is_exact() && since_refresh >= options.refresh_every {
                self.refresh();
                since_refresh = 0;
            }
            let Some(j) = self.entering(bland) else {
                if !T::is_exact() && since_refresh > 0 {
                    // Confirm optimality against freshly computed reduced costs.
                    self.refresh();
                    since_refresh = 0;
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            let Some(r) = self.leaving(j, bland) else {
                return Ok(Outcome::Unbounded);
            };

            if *pivots >= budget {
                return Err(LpError::NumericalFailure { iterations: *pivots });
            }
            *pivots += 1;
            since_refresh += 1;

            let rhs = r * width + self.cols;
            if self.data[rhs] < T::zero() {
                // Within the feasibility slack; never step backwards.
                self.data[rhs] = T::zero();
            }
            let step = self.data[rhs].clone() / self.data[r * width + j].clone();
            if step <= tol {
                degenerate_run += 1;
                if degenerate_run > options.degeneracy_limit {
                    if allow_perturbation && !self.perturbed {
                        self.perturb();
                        degenerate_run = 0;
                    } else {
                        bland = true;
                    }
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(r, j);
        }
    }

    fn primal_feasible(&self) -> bool {
        let width = self.cols + 1;
        let tol = T::solver_tolerance();
        (0..self.rows).all(|i| self.data[i * width + self.cols] >= -tol.clone())
    }

    /// Shift every basic value up by a small random amount so that no basic
    /// variable sits at zero.
    fn perturb(&mut self) {
        let width = self.cols + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ self.rows as u64);
        for i in 0..self.rows {
            let cell = &mut self.data[i * width + self.cols];
            let scale = PERTURBATION_SCALE * (1.0 + rng.gen::<f64>()) * (1.0 + cell.to_f64().abs());
            *cell = cell.clone() + T::from_f64(scale);
        }
        self.perturbed = true;
    }

    /// Recompute basic values as `B^-1 b` from the unperturbed right-hand
    /// side, reading `B^-1` off the unit columns.
    fn restore_rhs(&mut self) {
        let width = self.cols + 1;
        let fresh: Vec<T> = (0..self.rows)
            .map(|r| {
                let row = &self.data[r * width..(r + 1) * width];
                let mut v = T::zero();
                for (i, b) in self.base_rhs.iter().enumerate() {
                    let a = &row[self.unit_col[i]];
                    if !a.is_zero() && !b.is_zero() {
                        v = v + a.clone() * b.clone();
                    }
                }
                v.flush();
                v
            })
            .collect();
        for (r, v) in fresh.into_iter().enumerate() {
            self.data[r * width + self.cols] = v;
        }
        self.perturbed = false;
        self.refresh();
    }

    /// Dual simplex pivots until every basic value is nonnegative within
    /// tolerance. Leaves the most negative row; the entering column keeps
    /// reduced costs as close to optimal as possible.
    fn dual_repair(&mut self, budget: usize, pivots: &mut usize) -> Result<(), LpError> {
        let width = self.cols + 1;
        let tol = T::solver_tolerance();
        let piv_tol = T::pivot_tolerance();
        loop {
            let mut worst: Option<usize> = None;
            for i in 0..self.rows {
                let b = &self.data[i * width + self.cols];
                if *b < -tol.clone() && worst.is_none_or(|w| *b < self.data[w * width + self.cols]) {
                    worst = Some(i);
                }
            }
            let Some(r) = worst else {
                return Ok(());
            };
            let mut enter: Option<(usize, T)> = None;
            for k in 0..self.cols {
                let a = &self.data[r * width + k];
                if self.blocked[k] || *a >= -piv_tol.clone() {
                    continue;
                }
                let ratio = self.reduced[k].clone() / a.clone();
                let replace = match &enter {
                    None => true,
                    Some((e, best)) => ratio < *best || (ratio == *best && a.abs() > self.data[r * width + e].abs()),
                };
                if replace {
                    enter = Some((k, ratio));
                }
            }
            let Some((k, _)) = enter else {
                return Err(LpError::NumericalFailure { iterations: *pivots });
            };
            if *pivots >= budget {
                return Err(LpError::NumericalFailure { iterations: *pivots });
            }
            *pivots += 1;
            self.pivot(r, k);
        }
    }

    /// Rebuild the tableau from the original data for the current basis by
    /// Gauss-Jordan elimination with partial pivoting. Columns that cannot be
    /// pivoted in stably are left out of the basis.
    fn reinvert(&mut self) {
        let target = self.basis.clone();
        let width = self.cols + 1;
        self.data = self.original.clone();
        self.basis = self.unit_col.clone();
        self.perturbed = false;
        let mut in_target = vec![false; self.cols];
        for &c in &target {
            in_target[c] = true;
        }
        // Rows whose initial unit column is part of the target stay put.
        let mut settled: Vec<bool> = self.basis.iter().map(|&c| in_target[c]).collect();
        for &c in &target {
            if self.basis.contains(&c) {
                continue;
            }
            let mut best: Option<usize> = None;
            for i in (0..self.rows).filter(|&i| !settled[i]) {
                let a = self.data[i * width + c].abs();
                if a > T::pivot_tolerance() && best.is_none_or(|b| a > self.data[b * width + c].abs()) {
                    best = Some(i);
                }
            }
            if let Some(r) = best {
                self.pivot(r, c);
                settled[r] = true;
            }
        }
        self.refresh();
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let width = self.cols + 1;
        let cols = self.cols;
        let pivot = self.data[r * width + j].clone();
        let mut nz: Vec<(usize, T)> = Vec::new();
        {
            let row = &mut self.data[r * width..(r + 1) * width];
            for (k, v) in row.iter_mut().enumerate() {
                if v.is_zero() {
                    continue;
                }
                *v = v.clone() / pivot.clone();
                v.flush();
                if k == j {
                    *v = T::one();
                }
                if !v.is_zero() {
                    nz.push((k, v.clone()));
                }
            }
        }

        let update = |i: usize, row: &mut [T]| {
            if i == r {
                return;
            }
            let factor = row[j].clone();
            if factor.is_zero() {
                return;
            }
            for (k, v) in &nz {
                let cell = &mut row[*k];
                *cell = cell.clone() - factor.clone() * v.clone();
                cell.flush();
            }
            row[j] = T::zero();
        };
        if self.rows * nz.len() >= 200_000 {
            self.data
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| update(i, row));
        } else {
            self.data
                .chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| update(i, row));
        }

        let factor = self.reduced[j].clone();
        if !factor.is_zero() {
            for (k, v) in &nz {
                if *k == cols {
                    self.objective = self.objective.clone() + factor.clone() * v.clone();
                } else {
                    let cell = &mut self.reduced[*k];
                    *cell = cell.clone() - factor.clone() * v.clone();
                    cell.flush();
                }
            }
        }
        self.reduced[j] = T::zero();
        self.basis[r] = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_feasible_values, LinearProgram, VarKind};
    use crate::scalar::Rational;

    fn var(lp: &mut LinearProgram<f64>, name: &str) -> crate::lp::VarId {
        lp.add_variable(name, VarKind::NonNegative).unwrap()
    }

    #[test]
    fn simple_max() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = var(&mut lp, "x");
        let y = var(&mut lp, "y");
        lp.set_objective(vec![(x, 1.0), (y, 1.0)]).unwrap();
        lp.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Le, 2.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() - 2.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = var(&mut lp, "x");
        lp.set_objective(vec![(x, 1.0)]).unwrap();
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_row() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = var(&mut lp, "x");
        lp.add_constraint("neg", vec![(x, 1.0)], Relation::Le, -1.0).unwrap();
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn min_with_ge_rows_and_duals() {
        // min 2x + 3y s.t. x + y >= 4, x <= 3  -> x = 3, y = 1, obj 9
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = var(&mut lp, "x");
        let y = var(&mut lp, "y");
        lp.set_objective(vec![(x, 2.0), (y, 3.0)]).unwrap();
        lp.add_constraint("cover", vec![(x, 1.0), (y, 1.0)], Relation::Ge, 4.0)
            .unwrap();
        lp.add_constraint("capx", vec![(x, 1.0)], Relation::Le, 3.0).unwrap();
        let sol = solve(&lp).unwrap();
        assert!((sol.objective.unwrap() - 9.0).abs() < 1e-12);
        assert!((*sol.value(x) - 3.0).abs() < 1e-12);
        // Raising the cover rhs costs 3 per unit; raising capx saves 1.
        assert!((sol.duals[0] - 3.0).abs() < 1e-12);
        assert!((sol.duals[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max -z s.t. z = -2 + w, w <= 1, z free  -> z = -2 at w = 0, obj 2
        let mut lp = LinearProgram::new(Sense::Maximize);
        let z = lp.add_variable("z", VarKind::Free).unwrap();
        let w = var(&mut lp, "w");
        lp.set_objective(vec![(z, -1.0)]).unwrap();
        lp.add_constraint("link", vec![(z, 1.0), (w, -1.0)], Relation::Eq, -2.0)
            .unwrap();
        lp.add_constraint("capw", vec![(w, 1.0)], Relation::Le, 1.0).unwrap();
        let sol = solve(&lp).unwrap();
        assert!((sol.objective.unwrap() - 2.0).abs() < 1e-12);
        assert!((*sol.value(z) + 2.0).abs() < 1e-12);
        let report = check_feasible_values(&lp, &sol.primal, &1e-9);
        assert!(report.passed());
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = var(&mut lp, "x");
        let y = var(&mut lp, "y");
        lp.set_objective(vec![(x, 1.0), (y, 2.0)]).unwrap();
        lp.add_constraint("e1", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 1.0)
            .unwrap();
        lp.add_constraint("e2", vec![(x, 2.0), (y, 2.0)], Relation::Eq, 2.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert!((sol.objective.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling LP under textbook Dantzig pricing.
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x: Vec<_> = (1..=4).map(|i| var(&mut lp, &format!("x{i}"))).collect();
        lp.set_objective(vec![(x[0], 0.75), (x[1], -150.0), (x[2], 0.02), (x[3], -6.0)])
            .unwrap();
        lp.add_constraint(
            "r1",
            vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)],
            Relation::Le,
            0.0,
        )
        .unwrap();
        lp.add_constraint(
            "r2",
            vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)],
            Relation::Le,
            0.0,
        )
        .unwrap();
        lp.add_constraint("r3", vec![(x[2], 1.0)], Relation::Le, 1.0).unwrap();
        let opts = SimplexOptions {
            degeneracy_limit: 2,
            ..Default::default()
        };
        let sol = solve_with(&lp, &opts).unwrap();
        assert!((sol.objective.unwrap() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn iteration_budget_reports_numerical_failure() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = var(&mut lp, "x");
        let y = var(&mut lp, "y");
        lp.set_objective(vec![(x, 1.0), (y, 1.0)]).unwrap();
        lp.add_constraint("a", vec![(x, 1.0)], Relation::Le, 1.0).unwrap();
        lp.add_constraint("b", vec![(y, 1.0)], Relation::Le, 1.0).unwrap();
        let opts = SimplexOptions {
            max_iterations: Some(1),
            ..Default::default()
        };
        assert_eq!(solve_with(&lp, &opts), Err(LpError::NumericalFailure { iterations: 1 }));
    }

    #[test]
    fn exact_rational_solve() {
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        let mut lp = LinearProgram::<Rational>::new(Sense::Maximize);
        let x = lp.add_variable("x", VarKind::NonNegative).unwrap();
        let y = lp.add_variable("y", VarKind::NonNegative).unwrap();
        lp.set_objective(vec![(x, r(1, 1)), (y, r(1, 1))]).unwrap();
        lp.add_constraint("a", vec![(x, r(3, 1)), (y, r(1, 1))], Relation::Le, r(1, 1))
            .unwrap();
        lp.add_constraint("b", vec![(x, r(1, 1)), (y, r(3, 1))], Relation::Le, r(1, 1))
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.objective.unwrap(), r(1, 2));
        assert_eq!(sol.duals, vec![r(1, 4), r(1, 4)]);
    }
}
