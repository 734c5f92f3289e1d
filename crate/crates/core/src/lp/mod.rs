//! Linear programming front end used by every optimization in the crate.
//!
//! Problems are always stated as minimizations. Two backends sit behind the
//! same builder: a sparse LU-based simplex (the `microlp` crate) that handles
//! the large joint multi-scenario programs, and a dense revised simplex with
//! Bland's anti-cycling rule that lives in [`dense`]. The dense backend is
//! fully self-contained and is also used as an independent cross-check of the
//! sparse one.

pub mod dense;

use std::fmt;

use thiserror::Error;

/// Handle to a variable of a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sense of a linear constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

/// Which simplex implementation solves the program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Sparse LU simplex; the default for everything but toy problems.
    #[default]
    Sparse,
    /// In-repo dense revised simplex (Bland's rule under degeneracy).
    Dense,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" => Ok(Backend::Sparse),
            "dense" => Ok(Backend::Dense),
            other => Err(format!("unknown LP backend `{other}` (expected sparse|dense)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("LP solver failure: {0}")]
    Numerical(String),
}

#[derive(Clone, Debug)]
pub(crate) struct VarDef {
    pub(crate) cost: f64,
    pub(crate) lower: f64,
    pub(crate) upper: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub(crate) terms: Vec<(usize, f64)>,
    pub(crate) relation: Relation,
    pub(crate) rhs: f64,
}

/// A minimization problem `min c^T x` subject to linear rows and variable bounds.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub(crate) vars: Vec<VarDef>,
    pub(crate) rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient `cost` and bounds
    /// `lower <= x <= upper` (`upper` may be `f64::INFINITY`).
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> Var {
        debug_assert!(lower <= upper, "empty variable domain");
        self.vars.push(VarDef { cost, lower, upper });
        Var(self.vars.len() - 1)
    }

    /// Adds a non-negative, unbounded-above variable.
    pub fn add_nonneg(&mut self, cost: f64) -> Var {
        self.add_var(cost, 0.0, f64::INFINITY)
    }

    /// Adds the row `sum(coef * var) <relation> rhs`. Terms on the same
    /// variable are merged; zero coefficients are dropped.
    pub fn add_row<I>(&mut self, terms: I, relation: Relation, rhs: f64)
    where
        I: IntoIterator<Item = (Var, f64)>,
    {
        let mut merged: Vec<(usize, f64)> = terms.into_iter().map(|(v, c)| (v.0, c)).collect();
        merged.sort_by_key(|&(v, _)| v);
        merged.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        merged.retain(|&(_, c)| c != 0.0);
        self.rows.push(Row {
            terms: merged,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Total number of non-zero constraint coefficients.
    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(Backend::default())
    }

    pub fn solve_with(&self, backend: Backend) -> Result<LpSolution, LpError> {
        let solution = match backend {
            Backend::Sparse => solve_sparse(self)?,
            Backend::Dense => dense::solve(self)?,
        };
        log::trace!(
            "lp solved: {} vars, {} rows, objective {}",
            self.num_vars(),
            self.num_rows(),
            solution.objective
        );
        Ok(solution)
    }

    /// Largest violation of any row or bound by `values`; used by tests and
    /// by callers that want to double check a backend.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (def, &x) in self.vars.iter().zip(values) {
            worst = worst.max(def.lower - x).max(x - def.upper);
        }
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(v, c)| c * values[v]).sum();
            let gap = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Objective value of an arbitrary assignment.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(d, x)| d.cost * x).sum()
    }
}

/// Optimal primal solution.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub objective: f64,
    values: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn new(objective: f64, values: Vec<f64>) -> Self {
        Self { objective, values }
    }

    pub fn value(&self, var: Var) -> f64 {
        self.values[var.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Index<Var> for LpSolution {
    type Output = f64;

    fn index(&self, var: Var) -> &f64 {
        &self.values[var.0]
    }
}

fn solve_sparse(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};

    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = lp
        .vars
        .iter()
        .map(|d| problem.add_var(d.cost, (d.lower, d.upper)))
        .collect();
    for row in &lp.rows {
        let op = match row.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Ge => ComparisonOp::Ge,
            Relation::Eq => ComparisonOp::Eq,
        };
        let expr: Vec<_> = row.terms.iter().map(|&(v, c)| (vars[v], c)).collect();
        problem.add_constraint(expr.as_slice(), op, row.rhs);
    }
    let outcome = problem.solve().map_err(|e| match e {
        microlp::Error::Infeasible => LpError::Infeasible,
        microlp::Error::Unbounded => LpError::Unbounded,
        other => LpError::Numerical(other.to_string()),
    })?;
    let solution = outcome
        .into_solution()
        .map_err(|_| LpError::Numerical("solve interrupted before a solution was found".into()))?;
    let values: Vec<f64> = vars.iter().map(|&v| solution.var_value_raw(v)).collect();
    Ok(LpSolution::new(solution.objective(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_lp() -> (LinearProgram, Var, Var) {
        // max x + 2y  s.t. x + y <= 4, 2x + y >= 2, y <= 3
        let mut lp = LinearProgram::new();
        let x = lp.add_nonneg(-1.0);
        let y = lp.add_var(-2.0, 0.0, 3.0);
        lp.add_row([(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_row([(x, 2.0), (y, 1.0)], Relation::Ge, 2.0);
        (lp, x, y)
    }

    #[test]
    fn both_backends_agree_on_small_problem() {
        let (lp, x, y) = small_lp();
        for backend in [Backend::Sparse, Backend::Dense] {
            let sol = lp.solve_with(backend).unwrap();
            assert!((sol.objective + 7.0).abs() < 1e-9, "{backend:?}");
            assert!((sol[x] - 1.0).abs() < 1e-9);
            assert!((sol[y] - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut lp = LinearProgram::new();
        let x = lp.add_nonneg(1.0);
        lp.add_row([(x, 1.0)], Relation::Le, -1.0);
        for backend in [Backend::Sparse, Backend::Dense] {
            assert_eq!(lp.solve_with(backend).unwrap_err(), LpError::Infeasible);
        }

        let mut lp = LinearProgram::new();
        let x = lp.add_nonneg(-1.0);
        let y = lp.add_nonneg(0.0);
        lp.add_row([(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        for backend in [Backend::Sparse, Backend::Dense] {
            assert_eq!(lp.solve_with(backend).unwrap_err(), LpError::Unbounded);
        }
    }

    #[test]
    fn duplicate_terms_are_merged() {
        let mut lp = LinearProgram::new();
        let x = lp.add_nonneg(1.0);
        lp.add_row([(x, 1.0), (x, 1.0)], Relation::Ge, 4.0);
        assert_eq!(lp.rows[0].terms, vec![(0, 2.0)]);
        let sol = lp.solve().unwrap();
        assert!((sol[x] - 2.0).abs() < 1e-9);
    }
}
