use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Index of a variable inside a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// Index of a constraint inside a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub lower: T,
    pub upper: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub name: String,
    pub coeffs: Vec<(VarId, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn activity(&self, values: &[T]) -> T {
        self.coeffs.iter().map(|&(v, c)| c * values[v.0]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective<T> {
    pub sense: Sense,
    pub coeffs: Vec<(VarId, T)>,
    pub constant: T,
}

impl<T: Scalar> Objective<T> {
    pub fn new(sense: Sense) -> Self {
        Objective {
            sense,
            coeffs: Vec::new(),
            constant: T::zero(),
        }
    }

    pub fn with_terms(sense: Sense, coeffs: Vec<(VarId, T)>) -> Self {
        Objective {
            sense,
            coeffs,
            constant: T::zero(),
        }
    }

    pub fn evaluate(&self, values: &[T]) -> T {
        self.constant + self.coeffs.iter().map(|&(v, c)| c * values[v.0]).sum::<T>()
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("constraint `{constraint}` references undeclared variable #{index}")]
    UnknownVariable { constraint: String, index: usize },
    #[error("objective references undeclared variable #{index}")]
    UnknownObjectiveVariable { index: usize },
    #[error("variable `{name}` has lower bound above upper bound")]
    InvertedBounds { name: String },
    #[error("variable `{name}` needs a finite lower bound")]
    InfiniteLowerBound { name: String },
    #[error("non-finite coefficient or right hand side in `{name}`")]
    NonFinite { name: String },
}

/// A linear program: bounded variables, linear rows and a linear objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub variables: Vec<Variable<T>>,
    pub constraints: Vec<Constraint<T>>,
    pub objective: Objective<T>,
}

impl<T: Scalar> Model<T> {
    pub fn new(sense: Sense) -> Self {
        Model {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective::new(sense),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: T, upper: T) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    /// Adds a variable on `[0, +inf)`.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, T::zero(), T::infinity())
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, T)>,
        relation: Relation,
        rhs: T,
    ) -> RowId {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
        RowId(self.constraints.len() - 1)
    }

    /// Adds `coeff * var` to the objective, merging with an existing term.
    pub fn add_objective_term(&mut self, var: VarId, coeff: T) {
        match self.objective.coeffs.iter_mut().find(|(v, _)| *v == var) {
            Some((_, c)) => *c += coeff,
            None => self.objective.coeffs.push((var, coeff)),
        }
    }

    pub fn set_upper(&mut self, var: VarId, upper: T) {
        self.variables[var.0].upper = upper;
    }

    pub fn set_lower(&mut self, var: VarId, lower: T) {
        self.variables[var.0].lower = lower;
    }

    pub fn var(&self, id: VarId) -> &Variable<T> {
        &self.variables[id.0]
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn find_row(&self, name: &str) -> Option<RowId> {
        self.constraints.iter().position(|c| c.name == name).map(RowId)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::NonFinite {
                    name: v.name.clone(),
                });
            }
            if !v.lower.is_finite() {
                return Err(ModelError::InfiniteLowerBound {
                    name: v.name.clone(),
                });
            }
            if v.lower > v.upper {
                return Err(ModelError::InvertedBounds {
                    name: v.name.clone(),
                });
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFinite {
                    name: c.name.clone(),
                });
            }
            for &(v, a) in &c.coeffs {
                if v.0 >= n {
                    return Err(ModelError::UnknownVariable {
                        constraint: c.name.clone(),
                        index: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite {
                        name: c.name.clone(),
                    });
                }
            }
        }
        for &(v, a) in &self.objective.coeffs {
            if v.0 >= n {
                return Err(ModelError::UnknownObjectiveVariable { index: v.0 });
            }
            if !a.is_finite() {
                return Err(ModelError::NonFinite {
                    name: "objective".into(),
                });
            }
        }
        Ok(())
    }
}

fn write_terms<T: Scalar>(
    f: &mut fmt::Formatter<'_>,
    vars: &[Variable<T>],
    terms: &[(VarId, T)],
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (i, &(v, c)) in terms.iter().enumerate() {
        let name = vars.get(v.0).map(|x| x.name.as_str()).unwrap_or("?");
        if i == 0 {
            write!(f, "{c} {name}")?;
        } else if c < T::zero() {
            write!(f, " - {} {name}", -c)?;
        } else {
            write!(f, " + {c} {name}")?;
        }
    }
    Ok(())
}

/// Human readable dump: objective, one line per row, then the bounds.
impl<T: Scalar> fmt::Display for Model<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.objective.sense {
            Sense::Maximize => "MAXIMIZE",
            Sense::Minimize => "MINIMIZE",
        };
        write!(f, "{sense}\n  ")?;
        write_terms(f, &self.variables, &self.objective.coeffs)?;
        if self.objective.constant != T::zero() {
            write!(f, " + {}", self.objective.constant)?;
        }
        writeln!(f, "\nSUBJECT TO")?;
        for c in &self.constraints {
            write!(f, "  {}: ", c.name)?;
            write_terms(f, &self.variables, &c.coeffs)?;
            writeln!(f, " {} {}", c.relation, c.rhs)?;
        }
        writeln!(f, "BOUNDS")?;
        for v in &self.variables {
            if v.upper.is_infinite() {
                writeln!(f, "  {} <= {}", v.lower, v.name)?;
            } else {
                writeln!(f, "  {} <= {} <= {}", v.lower, v.name, v.upper)?;
            }
        }
        write!(f, "END")
    }
}
