//! Linear programs: model, mechanical dualization, feasibility checks and a
//! dense simplex solver.

mod simplex;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{max_of, Scalar};

pub use simplex::{solve, solve_with, SimplexOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("constraint `{0}` declared twice")]
    DuplicateConstraint(String),
    #[error("term references undeclared variable #{0}")]
    UnknownVariable(usize),
    #[error("no value supplied for variable `{0}`")]
    MissingAssignment(String),
    #[error("simplex did not converge within {iterations} pivots")]
    NumericalFailure { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(index: usize) -> Self {
        Self(index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub name: String,
    pub terms: Vec<(VarId, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn lhs(&self, values: &[T]) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (v, c)| acc + c.clone() * values[v.index()].clone())
    }

    /// Amount by which `values` violate this row (zero when satisfied).
    pub fn violation(&self, values: &[T]) -> T {
        let lhs = self.lhs(values);
        let zero = T::zero();
        match self.relation {
            Relation::Le => max_of(zero, lhs - self.rhs.clone()),
            Relation::Ge => max_of(zero, self.rhs.clone() - lhs),
            Relation::Eq => (lhs - self.rhs.clone()).abs(),
        }
    }

    /// `rhs - lhs` for `<=`, `lhs - rhs` for `>=`, `|lhs - rhs|` for `=`.
    pub fn slack(&self, values: &[T]) -> T {
        let lhs = self.lhs(values);
        match self.relation {
            Relation::Le => self.rhs.clone() - lhs,
            Relation::Ge => lhs - self.rhs.clone(),
            Relation::Eq => (lhs - self.rhs.clone()).abs(),
        }
    }
}

/// A linear program with nonnegative or free variables and named rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T = f64> {
    sense: Sense,
    variables: Vec<Variable>,
    objective: Vec<(VarId, T)>,
    constraints: Vec<Constraint<T>>,
    var_lookup: HashMap<String, VarId>,
    row_lookup: HashMap<String, usize>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            var_lookup: HashMap::new(),
            row_lookup: HashMap::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind) -> Result<VarId, LpError> {
        let name = name.into();
        if self.var_lookup.contains_key(&name) {
            return Err(LpError::DuplicateVariable(name));
        }
        let id = VarId(self.variables.len());
        self.var_lookup.insert(name.clone(), id);
        self.variables.push(Variable { name, kind });
        Ok(id)
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, T)>) -> Result<(), LpError> {
        self.objective = self.normalize_terms(terms)?;
        Ok(())
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, T)>,
        relation: Relation,
        rhs: T,
    ) -> Result<usize, LpError> {
        let name = name.into();
        if self.row_lookup.contains_key(&name) {
            return Err(LpError::DuplicateConstraint(name));
        }
        let terms = self.normalize_terms(terms)?;
        let row = self.constraints.len();
        self.row_lookup.insert(name.clone(), row);
        self.constraints.push(Constraint {
            name,
            terms,
            relation,
            rhs,
        });
        Ok(row)
    }

    /// Sum duplicate variables, drop zero coefficients, sort by variable.
    fn normalize_terms(&self, terms: Vec<(VarId, T)>) -> Result<Vec<(VarId, T)>, LpError> {
        let mut merged: Vec<(VarId, T)> = Vec::with_capacity(terms.len());
        let mut sorted = terms;
        sorted.sort_by_key(|(v, _)| *v);
        for (v, c) in sorted {
            if v.0 >= self.variables.len() {
                return Err(LpError::UnknownVariable(v.0));
            }
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc = acc.clone() + c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        Ok(merged)
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn objective(&self) -> &[(VarId, T)] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_lookup.get(name).copied()
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.row_lookup.get(name).copied()
    }

    pub fn objective_value(&self, values: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, (v, c)| acc + c.clone() * values[v.index()].clone())
    }

    /// Standard LP dual.
    ///
    /// A maximization is first brought to `<=`/`=` rows (a minimization to
    /// `>=`/`=` rows) by negating rows as needed. Each such row `r` gets a dual
    /// variable `y[r]`, nonnegative for inequalities and free for equalities;
    /// each primal variable `x` gets a dual row `dual[x]` that is an
    /// inequality for nonnegative `x` and an equality for free `x`.
    pub fn dualize(&self) -> LinearProgram<T> {
        let (dual_sense, canonical, row_rel) = match self.sense {
            Sense::Maximize => (Sense::Minimize, Relation::Le, Relation::Ge),
            Sense::Minimize => (Sense::Maximize, Relation::Ge, Relation::Le),
        };
        let mut dual = LinearProgram::new(dual_sense);
        let mut columns: Vec<Vec<(VarId, T)>> = vec![Vec::new(); self.variables.len()];
        let mut objective = Vec::with_capacity(self.constraints.len());
        for row in &self.constraints {
            let negate = row.relation == canonical.flipped();
            let kind = if row.relation == Relation::Eq {
                VarKind::Free
            } else {
                VarKind::NonNegative
            };
            let y = dual
                .add_variable(format!("y[{}]", row.name), kind)
                .expect("row names are unique");
            let sign = |c: &T| if negate { -c.clone() } else { c.clone() };
            objective.push((y, sign(&row.rhs)));
            for (v, c) in &row.terms {
                columns[v.index()].push((y, sign(c)));
            }
        }
        dual.set_objective(objective).expect("dual variables exist");
        let mut cost = vec![T::zero(); self.variables.len()];
        for (v, c) in &self.objective {
            cost[v.index()] = c.clone();
        }
        for ((var, column), c) in self.variables.iter().zip(columns).zip(cost) {
            let relation = match var.kind {
                VarKind::NonNegative => row_rel,
                VarKind::Free => Relation::Eq,
            };
            dual.add_constraint(format!("dual[{}]", var.name), column, relation, c)
                .expect("variable names are unique");
        }
        dual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver outcome. `primal` is indexed by [`VarId`], `duals` by row index.
///
/// Duals are shadow prices: the rate of change of the optimal objective per
/// unit increase of the row's right-hand side. For a maximization with `<=`
/// rows (or a minimization with `>=` rows) they are the nonnegative dual
/// variables of [`LinearProgram::dualize`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T = f64> {
    pub status: LpStatus,
    pub objective: Option<T>,
    pub primal: Vec<T>,
    pub duals: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> LpSolution<T> {
    pub fn value(&self, id: VarId) -> &T {
        &self.primal[id.index()]
    }

    pub fn value_by_name(&self, lp: &LinearProgram<T>, name: &str) -> Option<&T> {
        lp.var_id(name).map(|id| self.value(id))
    }

    pub fn dual_by_name(&self, lp: &LinearProgram<T>, row: &str) -> Option<&T> {
        lp.row_index(row).map(|r| &self.duals[r])
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowViolation {
    pub row: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub checked_rows: usize,
    pub violations: Vec<RowViolation>,
    /// Largest violation over all rows and bounds (zero when feasible).
    pub max_violation: f64,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a named assignment against every row and variable bound. Bound
/// violations are reported as rows named `bound[<var>]`.
pub fn check_feasible<T: Scalar>(
    lp: &LinearProgram<T>,
    point: &HashMap<String, T>,
    tol: &T,
) -> Result<FeasibilityReport, LpError> {
    let mut values = Vec::with_capacity(lp.variables.len());
    for var in &lp.variables {
        let v = point
            .get(&var.name)
            .ok_or_else(|| LpError::MissingAssignment(var.name.clone()))?;
        values.push(v.clone());
    }
    Ok(check_feasible_values(lp, &values, tol))
}

/// As [`check_feasible`], with values indexed by [`VarId`].
pub fn check_feasible_values<T: Scalar>(lp: &LinearProgram<T>, values: &[T], tol: &T) -> FeasibilityReport {
    assert_eq!(values.len(), lp.variables.len());
    let mut violations = Vec::new();
    let mut worst = T::zero();
    for (var, v) in lp.variables.iter().zip(values) {
        if var.kind == VarKind::NonNegative && *v < T::zero() {
            let amount = -v.clone();
            worst = max_of(worst, amount.clone());
            if amount > *tol {
                violations.push(RowViolation {
                    row: format!("bound[{}]", var.name),
                    lhs: v.to_f64(),
                    relation: Relation::Ge,
                    rhs: 0.0,
                    amount: amount.to_f64(),
                });
            }
        }
    }
    for row in &lp.constraints {
        let amount = row.violation(values);
        worst = max_of(worst, amount.clone());
        if amount > *tol {
            violations.push(RowViolation {
                row: row.name.clone(),
                lhs: row.lhs(values).to_f64(),
                relation: row.relation,
                rhs: row.rhs.to_f64(),
                amount: amount.to_f64(),
            });
        }
    }
    FeasibilityReport {
        checked_rows: lp.constraints.len(),
        violations,
        max_violation: worst.to_f64(),
    }
}

/// Row-wise text dump used for golden-file comparisons.
impl<T: Scalar> fmt::Display for LinearProgram<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_terms = |f: &mut fmt::Formatter<'_>, terms: &[(VarId, T)]| -> fmt::Result {
            if terms.is_empty() {
                return write!(f, " 0");
            }
            for (v, c) in terms {
                let sign = if *c < T::zero() { "-" } else { "+" };
                write!(f, " {sign}{} {}", c.abs(), self.variables[v.index()].name)?;
            }
            Ok(())
        };
        match self.sense {
            Sense::Maximize => write!(f, "maximize\n  obj:")?,
            Sense::Minimize => write!(f, "minimize\n  obj:")?,
        }
        write_terms(f, &self.objective)?;
        writeln!(f, "\nsubject to")?;
        for row in &self.constraints {
            write!(f, "  {}:", row.name)?;
            write_terms(f, &row.terms)?;
            writeln!(f, " {} {}", row.relation.symbol(), row.rhs)?;
        }
        writeln!(f, "bounds")?;
        for var in &self.variables {
            match var.kind {
                VarKind::NonNegative => writeln!(f, "  {} >= 0", var.name)?,
                VarKind::Free => writeln!(f, "  {} free", var.name)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var() -> LinearProgram<f64> {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_variable("x", VarKind::NonNegative).unwrap();
        lp.set_objective(vec![(x, 1.0)]).unwrap();
        lp.add_constraint("cap", vec![(x, 1.0)], Relation::Le, 1.0).unwrap();
        lp
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut lp = one_var();
        assert_eq!(
            lp.add_variable("x", VarKind::Free),
            Err(LpError::DuplicateVariable("x".into()))
        );
        let x = lp.var_id("x").unwrap();
        assert_eq!(
            lp.add_constraint("cap", vec![(x, 2.0)], Relation::Ge, 0.0),
            Err(LpError::DuplicateConstraint("cap".into()))
        );
        assert_eq!(
            lp.add_constraint("bad", vec![(VarId(7), 2.0)], Relation::Ge, 0.0),
            Err(LpError::UnknownVariable(7))
        );
    }

    #[test]
    fn terms_are_merged() {
        let mut lp = one_var();
        let x = lp.var_id("x").unwrap();
        let y = lp.add_variable("y", VarKind::NonNegative).unwrap();
        lp.add_constraint("r", vec![(y, 1.0), (x, 2.0), (x, -2.0), (y, 1.0)], Relation::Le, 3.0)
            .unwrap();
        assert_eq!(lp.constraints()[1].terms, vec![(y, 2.0)]);
    }

    #[test]
    fn dual_of_one_variable_lp() {
        let dual = one_var().dualize();
        assert_eq!(dual.sense(), Sense::Minimize);
        assert_eq!(dual.variables().len(), 1);
        assert_eq!(dual.variables()[0].name, "y[cap]");
        let row = &dual.constraints()[0];
        assert_eq!(row.name, "dual[x]");
        assert_eq!(row.relation, Relation::Ge);
        assert_eq!(row.rhs, 1.0);
        assert_eq!(dual.objective(), &[(VarId(0), 1.0)]);
    }

    #[test]
    fn dualize_twice_restores_shape() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_variable("x", VarKind::NonNegative).unwrap();
        let z = lp.add_variable("z", VarKind::Free).unwrap();
        lp.set_objective(vec![(x, 3.0), (z, -1.0)]).unwrap();
        lp.add_constraint("a", vec![(x, 1.0), (z, 1.0)], Relation::Le, 4.0)
            .unwrap();
        lp.add_constraint("b", vec![(x, 1.0), (z, -1.0)], Relation::Ge, -2.0)
            .unwrap();
        lp.add_constraint("c", vec![(z, 1.0)], Relation::Eq, 1.0).unwrap();
        let back = lp.dualize().dualize();
        assert_eq!(back.sense(), Sense::Maximize);
        assert_eq!(back.variables().len(), 2);
        assert_eq!(back.constraints().len(), 3);
        assert_eq!(back.variables()[1].kind, VarKind::Free);
        // row b was a >= row in a max problem; it comes back negated as <=.
        let b = &back.constraints()[1];
        assert_eq!(b.relation, Relation::Le);
        assert_eq!(b.rhs, 2.0);
        assert_eq!(back.constraints()[2].relation, Relation::Eq);
    }

    #[test]
    fn feasibility_reports_violations() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_variable("x", VarKind::NonNegative).unwrap();
        lp.add_constraint("atleast", vec![(x, 1.0)], Relation::Ge, 1.0).unwrap();
        let point: HashMap<String, f64> = [("x".to_string(), 0.0)].into();
        let report = check_feasible(&lp, &point, &1e-9).unwrap();
        assert!(!report.passed());
        assert_eq!(report.violations[0].row, "atleast");
        assert_eq!(report.max_violation, 1.0);
        let empty = HashMap::new();
        assert_eq!(
            check_feasible(&lp, &empty, &1e-9),
            Err(LpError::MissingAssignment("x".into()))
        );
        let negative: HashMap<String, f64> = [("x".to_string(), -0.5)].into();
        let report = check_feasible(&lp, &negative, &1e-9).unwrap();
        assert!(report.violations.iter().any(|v| v.row == "bound[x]"));
    }

    #[test]
    fn dump_is_row_wise() {
        let text = one_var().to_string();
        assert_eq!(
            text,
            "maximize\n  obj: +1 x\nsubject to\n  cap: +1 x <= 1\nbounds\n  x >= 0\n"
        );
    }
}
