//! Weighted distances between patient cohorts.

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Patient counts per type and per sub-type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Cohort<T> {
    pub types: Vec<T>,
    pub sub_types: Vec<Vec<T>>,
}

impl<T: Scalar> Cohort<T> {
    /// Builds a cohort whose type counts are the sums of its sub-type counts.
    pub fn from_sub_types(sub_types: Vec<Vec<T>>) -> Self {
        Cohort {
            types: sub_types.iter().map(|s| s.iter().copied().sum()).collect(),
            sub_types,
        }
    }

    pub fn total(&self) -> T {
        self.types.iter().copied().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Level {
    Type,
    SubType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Norm {
    One,
    Two,
}

/// Weighted distance between two cohorts.
///
/// The 1-norm is `sum w_g |d|`, the 2-norm `sqrt(sum w_g d^2)`. At sub-type
/// level each group's weight applies to all its sub-types. Missing weights
/// are one.
pub fn norm_distance<T: Scalar>(
    a: &Cohort<T>,
    b: &Cohort<T>,
    weights: &[T],
    level: Level,
    norm: Norm,
) -> T {
    let w = |g: usize| weights.get(g).copied().unwrap_or_else(T::one);
    let diffs: Vec<(T, T)> = match level {
        Level::Type => a
            .types
            .iter()
            .zip(&b.types)
            .enumerate()
            .map(|(g, (&x, &y))| (w(g), x - y))
            .collect(),
        Level::SubType => a
            .sub_types
            .iter()
            .zip(&b.sub_types)
            .enumerate()
            .flat_map(|(g, (xs, ys))| xs.iter().zip(ys).map(move |(&x, &y)| (g, x - y)))
            .map(|(g, d)| (w(g), d))
            .collect(),
    };
    match norm {
        Norm::One => diffs.iter().map(|&(w, d)| w * d.abs()).sum(),
        Norm::Two => diffs.iter().map(|&(w, d)| w * d * d).sum::<T>().sqrt(),
    }
}
