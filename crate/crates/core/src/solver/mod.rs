//! Self-contained linear programming.
//!
//! [`Model`] is a plain description of an LP; [`solve`] runs a dense
//! bounded-variable simplex on it. Solver state lives only for the duration
//! of one call, so independent models can be solved from different threads.

mod model;
mod simplex;

pub use model::{
    Constraint, Model, ModelError, Objective, Relation, RowId, Sense, VarId, Variable,
};

use serde::Serialize;

use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// A singular basis or a final residual check failed. The values are
    /// not trustworthy.
    NumericallyUnstable,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub status: Status,
    /// Primary objective recomputed from `values` (includes the constant).
    pub objective_value: T,
    pub values: Vec<T>,
    /// Left hand side of each constraint at `values`.
    pub activities: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> Solution<T> {
    pub fn value(&self, var: VarId) -> T {
        self.values[var.0]
    }

    pub fn activity(&self, row: RowId) -> T {
        self.activities[row.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Solves `model`.
pub fn solve<T: Scalar>(model: &Model<T>) -> Result<Solution<T>, ModelError> {
    solve_lexicographic(model, &[])
}

/// Solves `model`, then optimises each objective of `secondary` in turn
/// without leaving the optimal set of the earlier ones. The reported
/// `objective_value` is the model's own objective.
pub fn solve_lexicographic<T: Scalar>(
    model: &Model<T>,
    secondary: &[Objective<T>],
) -> Result<Solution<T>, ModelError> {
    model.validate()?;
    for obj in secondary {
        if let Some(&(v, _)) = obj.coeffs.iter().find(|(v, _)| v.0 >= model.variables.len()) {
            return Err(ModelError::UnknownObjectiveVariable { index: v.0 });
        }
    }
    Ok(simplex::Simplex::new(model).run(model, secondary))
}
