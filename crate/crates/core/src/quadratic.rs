//! Sum-of-squares targeting objectives.
//!
//! A weighted squared distance `sum w_i (x_i - t_i)^2` is expanded into the
//! standard quadratic form `1/2 x'Hx - phi'x + c`, and can be replaced inside
//! an LP by a piecewise linear outer approximation built from tangent lines
//! at uniformly spaced breakpoints. Because the function is convex and is
//! being minimised, the epigraph formulation needs no integer variables.

use thiserror::Error;

use crate::solver::{Model, Relation, RowId, VarId};
use crate::Scalar;

/// `1/2 x' diag(h) x - phi' x + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm<T> {
    pub hessian_diag: Vec<T>,
    pub linear: Vec<T>,
    pub constant: T,
}

impl<T: Scalar> QuadraticForm<T> {
    pub fn evaluate(&self, x: &[T]) -> T {
        let half = T::of(0.5);
        let mut z = self.constant;
        for ((&h, &phi), &xi) in self.hessian_diag.iter().zip(&self.linear).zip(x) {
            z += half * h * xi * xi - phi * xi;
        }
        z
    }
}

/// Expands `sum_i w_i (x_i - t_i)^2`. Missing weights default to one.
pub fn expand_quadratic<T: Scalar>(targets: &[T], weights: &[T]) -> QuadraticForm<T> {
    let two = T::of(2.0);
    let w = |i: usize| weights.get(i).copied().unwrap_or_else(T::one);
    QuadraticForm {
        hessian_diag: (0..targets.len()).map(|i| two * w(i)).collect(),
        linear: targets
            .iter()
            .enumerate()
            .map(|(i, &t)| two * w(i) * t)
            .collect(),
        constant: targets
            .iter()
            .enumerate()
            .map(|(i, &t)| w(i) * t * t)
            .sum(),
    }
}

/// Block form: one quadratic per group, each group sharing a single weight.
pub fn expand_blocks<T: Scalar>(targets: &[Vec<T>], weights: &[T]) -> Vec<QuadraticForm<T>> {
    targets
        .iter()
        .enumerate()
        .map(|(g, block)| {
            let w = weights.get(g).copied().unwrap_or_else(T::one);
            expand_quadratic(block, &vec![w; block.len()])
        })
        .collect()
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PwlError {
    #[error("piecewise approximation needs at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("variable `{0}` has no finite upper bound to place breakpoints on")]
    UnboundedDomain(String),
    #[error("weight must be positive")]
    NonPositiveWeight,
}

/// One linearised term `w (x - t)^2` on `[0, ub]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PwlTerm<T> {
    /// Epigraph variable, absent for a degenerate (constant) term.
    pub aux: Option<VarId>,
    pub rows: Vec<RowId>,
    /// Terms to add to a minimisation objective.
    pub objective: Vec<(VarId, T)>,
    /// Constant to add to the objective.
    pub constant: T,
    pub breakpoints: Vec<T>,
    /// `(slope, intercept)` of each supporting line.
    pub tangents: Vec<(T, T)>,
    /// Largest gap between the approximation and the quadratic on `[0, ub]`.
    pub max_error: T,
}

impl<T: Scalar> PwlTerm<T> {
    /// Value of the approximation at `x`.
    pub fn evaluate(&self, x: T) -> T {
        if self.tangents.is_empty() {
            return self.constant;
        }
        self.tangents
            .iter()
            .map(|&(s, b)| s * x + b)
            .fold(T::neg_infinity(), T::max)
    }
}

/// Adds the epigraph of the supporting lines of `weight * (var - target)^2`
/// at `segments + 1` uniform breakpoints on `[0, upper]` to `model`.
///
/// The approximation never exceeds the quadratic, touches it at every
/// breakpoint and is off by at most `weight * (upper / segments)^2 / 4`.
/// With `upper <= 0` the variable can only be zero and the term collapses to
/// the constant `weight * target^2`.
pub fn piecewise_linearize<T: Scalar>(
    model: &mut Model<T>,
    var: VarId,
    target: T,
    weight: T,
    upper: T,
    segments: usize,
) -> Result<PwlTerm<T>, PwlError> {
    if segments < 2 {
        return Err(PwlError::TooFewSegments(segments));
    }
    if !(weight > T::zero()) {
        return Err(PwlError::NonPositiveWeight);
    }
    let name = model.var(var).name.clone();
    if !upper.is_finite() {
        return Err(PwlError::UnboundedDomain(name));
    }
    if upper <= T::zero() {
        return Ok(PwlTerm {
            aux: None,
            rows: Vec::new(),
            objective: Vec::new(),
            constant: weight * target * target,
            breakpoints: vec![T::zero()],
            tangents: Vec::new(),
            max_error: T::zero(),
        });
    }

    let two = T::of(2.0);
    let step = upper / T::of(segments as f64);
    let breakpoints: Vec<T> = (0..=segments)
        .map(|k| if k == segments { upper } else { step * T::of(k as f64) })
        .collect();
    let tangents: Vec<(T, T)> = breakpoints
        .iter()
        .map(|&b| {
            let slope = two * weight * (b - target);
            let value = weight * (b - target) * (b - target);
            (slope, value - slope * b)
        })
        .collect();

    let aux = model.add_var(format!("pwl_{name}"), T::neg_infinity(), T::infinity());
    // Lower bound of the epigraph variable: the quadratic is non-negative.
    model.set_lower(aux, T::zero());
    let rows = tangents
        .iter()
        .enumerate()
        .map(|(k, &(slope, intercept))| {
            model.add_constraint(
                format!("pwl_{name}_{k}"),
                vec![(aux, T::one()), (var, -slope)],
                Relation::Ge,
                intercept,
            )
        })
        .collect();

    Ok(PwlTerm {
        aux: Some(aux),
        rows,
        objective: vec![(aux, T::one())],
        constant: T::zero(),
        breakpoints,
        tangents,
        max_error: weight * step * step / T::of(4.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Sense;

    #[test]
    fn expansion_of_three_targets() {
        let q = expand_quadratic(&[10.0, 40.0, 20.0], &[1.0, 1.0, 1.0]);
        assert_eq!(q.hessian_diag, vec![2.0, 2.0, 2.0]);
        assert_eq!(q.linear, vec![20.0, 80.0, 40.0]);
        assert_eq!(q.constant, 2100.0);
    }

    #[test]
    fn block_constants() {
        let qs = expand_blocks(&[vec![10.0, 5.0], vec![7.0]], &[1.0, 1.0]);
        assert_eq!(qs[0].constant, 125.0);
        assert_eq!(qs[0].linear, vec![20.0, 10.0]);
        assert_eq!(qs[1].constant, 49.0);
    }

    #[test]
    fn zero_targets_reduce_to_sum_of_squares() {
        let q = expand_quadratic(&[0.0; 3], &[]);
        assert_eq!(q.linear, vec![0.0; 3]);
        assert_eq!(q.constant, 0.0);
        assert_eq!(q.evaluate(&[1.0, 2.0, 3.0]), 14.0);
    }

    #[test]
    fn two_segment_breakpoints_are_exact() {
        let mut m = Model::<f64>::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, 1.0);
        let t = piecewise_linearize(&mut m, x, 0.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(t.breakpoints, vec![0.0, 0.5, 1.0]);
        assert_eq!(t.evaluate(0.0), 0.0);
        assert_eq!(t.evaluate(0.5), 0.25);
        assert_eq!(t.evaluate(1.0), 1.0);
        assert_eq!(t.rows.len(), 3);
    }

    #[test]
    fn error_bound_for_sixteen_segments() {
        let mut m = Model::<f64>::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, 20.0);
        let t = piecewise_linearize(&mut m, x, 10.0, 1.0, 20.0, 16).unwrap();
        assert_eq!(t.max_error, 0.390625);
        let mut worst: f64 = 0.0;
        for i in 0..=20_000 {
            let v = 20.0 * i as f64 / 20_000.0;
            let gap = (v - 10.0).powi(2) - t.evaluate(v);
            assert!(gap >= -1e-9);
            worst = worst.max(gap);
        }
        assert!(worst <= t.max_error + 1e-9);
        assert!(worst > 0.9 * t.max_error);
    }

    #[test]
    fn degenerate_domain_is_constant() {
        let mut m = Model::<f64>::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, 0.0);
        let t = piecewise_linearize(&mut m, x, 3.0, 2.0, 0.0, 8).unwrap();
        assert_eq!(t.aux, None);
        assert_eq!(t.constant, 18.0);
    }

    #[test]
    fn rejects_unbounded_domain_and_bad_segments() {
        let mut m = Model::<f64>::new(Sense::Minimize);
        let x = m.add_nonneg("x");
        assert_eq!(
            piecewise_linearize(&mut m, x, 1.0, 1.0, f64::INFINITY, 4),
            Err(PwlError::UnboundedDomain("x".into()))
        );
        assert_eq!(
            piecewise_linearize(&mut m, x, 1.0, 1.0, 5.0, 1),
            Err(PwlError::TooFewSegments(1))
        );
    }
}
