//! Dense bounded-variable primal simplex.
//!
//! Every row gets a logical column (slack or surplus) where it has an
//! inequality, and phase one adds artificial columns only for rows whose
//! logical cannot start basic and feasible. Nonbasic columns sit at one of
//! their bounds; the ratio test also considers the entering column flipping
//! to its opposite bound.
//!
//! Pricing is Dantzig's largest reduced cost. After `2 * (m + n)` consecutive
//! non-improving pivots the solver falls back to Bland's rule until the
//! objective moves again.

use super::model::{Model, Objective, Relation, Sense};
use super::{Solution, Status};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    Structural,
    Logical,
    Artificial,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
    Unstable,
}

pub(super) struct Simplex<T> {
    m: usize,
    ncols: usize,
    n_struct: usize,
    /// Current tableau `B^-1 A`, row major.
    tab: Vec<T>,
    /// Original constraint matrix including logical and artificial columns.
    orig: Vec<T>,
    rhs: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    x: Vec<T>,
    kind: Vec<ColKind>,
    /// Row owning each artificial column.
    art_row: Vec<usize>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    cost: Vec<T>,
    reduced: Vec<T>,
    iterations: usize,
    iteration_limit: usize,
    pivots_since_refactor: usize,
    refactor_every: usize,
}

impl<T: Scalar> Simplex<T> {
    pub(super) fn new(model: &Model<T>) -> Self {
        let m = model.constraints.len();
        let n_struct = model.variables.len();
        let n_logical = model
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        // Artificials are allocated lazily below; reserve the worst case.
        let max_cols = n_struct + n_logical + m;

        let mut lower = Vec::with_capacity(max_cols);
        let mut upper = Vec::with_capacity(max_cols);
        let mut kind = Vec::with_capacity(max_cols);
        for v in &model.variables {
            lower.push(v.lower);
            upper.push(v.upper);
            kind.push(ColKind::Structural);
        }

        // Dense rows over structural columns.
        let mut rows = vec![vec![T::zero(); n_struct]; m];
        for (i, c) in model.constraints.iter().enumerate() {
            for &(v, a) in &c.coeffs {
                rows[i][v.0] += a;
            }
        }

        let x_struct: Vec<T> = model.variables.iter().map(|v| v.lower).collect();
        let mut logical_of_row = vec![None; m];
        let mut logical_sign = vec![T::zero(); m];
        for (i, c) in model.constraints.iter().enumerate() {
            let sign = match c.relation {
                Relation::Le => T::one(),
                Relation::Ge => -T::one(),
                Relation::Eq => continue,
            };
            logical_of_row[i] = Some(lower.len());
            logical_sign[i] = sign;
            lower.push(T::zero());
            upper.push(T::infinity());
            kind.push(ColKind::Logical);
        }

        let mut basis = vec![usize::MAX; m];
        let mut art_row = Vec::new();
        let mut art_of_row = vec![None; m];
        let mut art_sign = vec![T::zero(); m];
        for (i, c) in model.constraints.iter().enumerate() {
            let activity: T = rows[i]
                .iter()
                .zip(&x_struct)
                .map(|(&a, &x)| a * x)
                .sum();
            let residual = c.rhs - activity;
            let logical_ok = match c.relation {
                Relation::Le => residual >= T::zero(),
                Relation::Ge => residual <= T::zero(),
                Relation::Eq => false,
            };
            if logical_ok {
                basis[i] = logical_of_row[i].expect("inequality rows own a logical");
            } else {
                let col = lower.len();
                lower.push(T::zero());
                upper.push(T::infinity());
                kind.push(ColKind::Artificial);
                art_row.push(i);
                art_of_row[i] = Some(col);
                art_sign[i] = if residual < T::zero() {
                    -T::one()
                } else {
                    T::one()
                };
                basis[i] = col;
            }
        }

        let ncols = lower.len();
        let mut orig = vec![T::zero(); m * ncols];
        for i in 0..m {
            let row = &mut orig[i * ncols..(i + 1) * ncols];
            row[..n_struct].copy_from_slice(&rows[i]);
            if let Some(l) = logical_of_row[i] {
                row[l] = logical_sign[i];
            }
            if let Some(a) = art_of_row[i] {
                row[a] = art_sign[i];
            }
        }

        let mut x = vec![T::zero(); ncols];
        x[..n_struct].copy_from_slice(&x_struct);
        let mut basic_row = vec![None; ncols];
        for (i, &b) in basis.iter().enumerate() {
            basic_row[b] = Some(i);
        }

        Simplex {
            m,
            ncols,
            n_struct,
            tab: orig.clone(),
            orig,
            rhs: model.constraints.iter().map(|c| c.rhs).collect(),
            lower,
            upper,
            x,
            kind,
            art_row,
            basis,
            basic_row,
            cost: vec![T::zero(); ncols],
            reduced: vec![T::zero(); ncols],
            iterations: 0,
            iteration_limit: 50 * (m + ncols) + 10_000,
            pivots_since_refactor: 0,
            refactor_every: m.max(100),
        }
    }

    /// Solves the model, then optimises each secondary objective over the
    /// optimal face of the previous ones.
    pub(super) fn run(mut self, model: &Model<T>, secondary: &[Objective<T>]) -> Solution<T> {
        if !self.refactor() {
            return self.finish(model, Status::NumericallyUnstable);
        }

        if !self.art_row.is_empty() {
            let mut cost = vec![T::zero(); self.ncols];
            for (j, k) in self.kind.iter().enumerate() {
                if *k == ColKind::Artificial {
                    cost[j] = T::one();
                }
            }
            self.set_cost(cost);
            match self.iterate() {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded | PhaseEnd::Unstable => {
                    return self.finish(model, Status::NumericallyUnstable)
                }
                PhaseEnd::IterationLimit => return self.finish(model, Status::IterationLimit),
            }
            let tol = T::feasibility_tol();
            for j in 0..self.ncols {
                if self.kind[j] == ColKind::Artificial {
                    let row = self.art_row[j - (self.ncols - self.art_row.len())];
                    if self.x[j] > tol * (T::one() + self.rhs[row].abs()) {
                        return self.finish(model, Status::Infeasible);
                    }
                }
            }
            self.retire_artificials();
            if !self.refactor() {
                return self.finish(model, Status::NumericallyUnstable);
            }
        }

        let objectives = std::iter::once(&model.objective).chain(secondary.iter());
        for (stage, objective) in objectives.enumerate() {
            if stage > 0 {
                self.fix_off_face();
            }
            self.set_cost(self.min_cost(objective));
            match self.iterate() {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => return self.finish(model, Status::Unbounded),
                PhaseEnd::IterationLimit => return self.finish(model, Status::IterationLimit),
                PhaseEnd::Unstable => return self.finish(model, Status::NumericallyUnstable),
            }
        }

        if !self.refactor() {
            return self.finish(model, Status::NumericallyUnstable);
        }
        self.finish(model, Status::Optimal)
    }

    fn min_cost(&self, objective: &Objective<T>) -> Vec<T> {
        let mut cost = vec![T::zero(); self.ncols];
        let sign = match objective.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        for &(v, c) in &objective.coeffs {
            cost[v.0] += sign * c;
        }
        cost
    }

    fn set_cost(&mut self, cost: Vec<T>) {
        self.cost = cost;
        self.recompute_reduced();
    }

    fn recompute_reduced(&mut self) {
        let n = self.ncols;
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.tab[i * n..(i + 1) * n];
            for (d, &a) in self.reduced.iter_mut().zip(row) {
                *d -= cb * a;
            }
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j] - self.lower[j] <= T::zero()
    }

    fn at_upper(&self, j: usize) -> bool {
        self.upper[j].is_finite() && self.x[j] >= self.upper[j]
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, bland: bool) -> Option<(usize, T)> {
        let tol = T::optimality_tol();
        let mut best: Option<(usize, T, T)> = None;
        for j in 0..self.ncols {
            if self.basic_row[j].is_some() || self.is_fixed(j) {
                continue;
            }
            let d = self.reduced[j];
            let dir = if self.at_upper(j) {
                if d > tol {
                    -T::one()
                } else {
                    continue;
                }
            } else if d < -tol {
                T::one()
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            match best {
                Some((_, _, score)) if d.abs() <= score => {}
                _ => best = Some((j, dir, d.abs())),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn iterate(&mut self) -> PhaseEnd {
        let stall_limit = 2 * (self.m + self.ncols);
        let mut stalled = 0usize;
        let mut bland = false;
        let tie = T::epsilon().sqrt() * T::of(1e-3);
        let piv_tol = T::pivot_tol();
        let n = self.ncols;

        loop {
            if self.iterations >= self.iteration_limit {
                return PhaseEnd::IterationLimit;
            }
            if self.pivots_since_refactor >= self.refactor_every {
                if !self.refactor() {
                    return PhaseEnd::Unstable;
                }
                self.recompute_reduced();
            }
            let Some((enter, dir)) = self.price(bland) else {
                return PhaseEnd::Optimal;
            };
            self.iterations += 1;

            // Ratio test. `None` leaving row means a bound flip of `enter`.
            let mut theta = self.upper[enter] - self.lower[enter];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = T::zero();
            for i in 0..self.m {
                let alpha = self.tab[i * n + enter];
                if alpha.abs() <= piv_tol {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * alpha;
                let (limit, to_upper) = if rate < T::zero() {
                    ((self.x[b] - self.lower[b]) / -rate, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.x[b]) / rate, true)
                } else {
                    continue;
                };
                let limit = limit.max(T::zero());
                let better = match leave {
                    _ if limit < theta - tie => true,
                    None => false,
                    Some((r, _)) if (limit - theta).abs() <= tie => {
                        if bland {
                            b < self.basis[r]
                        } else {
                            alpha.abs() > leave_alpha.abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    theta = limit;
                    leave = Some((i, to_upper));
                    leave_alpha = alpha;
                }
            }
            if theta.is_infinite() {
                return PhaseEnd::Unbounded;
            }

            let gain = -self.reduced[enter] * dir * theta;
            self.x[enter] += dir * theta;
            for i in 0..self.m {
                let alpha = self.tab[i * n + enter];
                if alpha != T::zero() {
                    let b = self.basis[i];
                    self.x[b] -= dir * alpha * theta;
                }
            }

            match leave {
                None => {
                    self.x[enter] = if dir > T::zero() {
                        self.upper[enter]
                    } else {
                        self.lower[enter]
                    };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.x[out] = if to_upper {
                        self.upper[out]
                    } else {
                        self.lower[out]
                    };
                    if !self.pivot(r, enter, true) {
                        return PhaseEnd::Unstable;
                    }
                }
            }

            if gain > T::optimality_tol() * (T::one() + theta) {
                stalled = 0;
                bland = false;
            } else {
                stalled += 1;
                if stalled > stall_limit {
                    bland = true;
                }
            }
        }
    }

    /// Gauss-Jordan pivot on `(r, c)`; updates the basis bookkeeping.
    fn pivot(&mut self, r: usize, c: usize, with_reduced: bool) -> bool {
        let n = self.ncols;
        let p = self.tab[r * n + c];
        if !p.is_finite() || p.abs() <= T::min_positive_value() {
            return false;
        }
        let mut nz = Vec::new();
        {
            let row = &mut self.tab[r * n..(r + 1) * n];
            for (j, a) in row.iter_mut().enumerate() {
                if *a != T::zero() {
                    *a /= p;
                    nz.push(j);
                }
            }
            row[c] = T::one();
        }
        let prow: Vec<(usize, T)> = nz.iter().map(|&j| (j, self.tab[r * n + j])).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * n + c];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.tab[i * n..(i + 1) * n];
            for &(j, a) in &prow {
                row[j] -= f * a;
            }
            row[c] = T::zero();
        }
        if with_reduced {
            let f = self.reduced[c];
            if f != T::zero() {
                for &(j, a) in &prow {
                    self.reduced[j] -= f * a;
                }
                self.reduced[c] = T::zero();
            }
        }
        let out = self.basis[r];
        self.basic_row[out] = None;
        self.basis[r] = c;
        self.basic_row[c] = Some(r);
        self.pivots_since_refactor += 1;
        true
    }

    /// Rebuilds `B^-1 A` from the original matrix and recomputes basic
    /// values from the nonbasic ones. Returns false on a singular basis.
    fn refactor(&mut self) -> bool {
        let n = self.ncols;
        self.tab.copy_from_slice(&self.orig);
        let mut rhs = self.rhs.clone();
        let mut cols: Vec<usize> = self.basis.clone();
        cols.sort_unstable();
        let mut assigned = vec![false; self.m];
        let mut new_basis = vec![usize::MAX; self.m];
        let piv_floor = T::epsilon() * T::of(1e3);
        for &c in &cols {
            let mut best: Option<(usize, T)> = None;
            for (i, done) in assigned.iter().enumerate() {
                if *done {
                    continue;
                }
                let a = self.tab[i * n + c].abs();
                if best.is_none_or(|(_, v)| a > v) {
                    best = Some((i, a));
                }
            }
            let Some((r, mag)) = best else { return false };
            if !(mag > piv_floor) {
                return false;
            }
            let p = self.tab[r * n + c];
            for j in 0..n {
                self.tab[r * n + j] /= p;
            }
            rhs[r] /= p;
            for i in 0..self.m {
                if i == r {
                    continue;
                }
                let f = self.tab[i * n + c];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let a = self.tab[r * n + j];
                    if a != T::zero() {
                        self.tab[i * n + j] -= f * a;
                    }
                }
                let rr = rhs[r];
                rhs[i] -= f * rr;
            }
            assigned[r] = true;
            new_basis[r] = c;
        }
        self.basis = new_basis;
        self.basic_row.iter_mut().for_each(|b| *b = None);
        for (i, &b) in self.basis.iter().enumerate() {
            self.basic_row[b] = Some(i);
        }
        for i in 0..self.m {
            let mut v = rhs[i];
            for j in 0..n {
                if self.basic_row[j].is_none() {
                    let a = self.tab[i * n + j];
                    if a != T::zero() {
                        v -= a * self.x[j];
                    }
                }
            }
            if !v.is_finite() {
                return false;
            }
            self.x[self.basis[i]] = v;
        }
        self.pivots_since_refactor = 0;
        true
    }

    /// Pins artificials to zero and pivots basic ones out where possible.
    /// An artificial that cannot leave marks a redundant row and stays basic
    /// at zero.
    fn retire_artificials(&mut self) {
        let n = self.ncols;
        for j in 0..n {
            if self.kind[j] == ColKind::Artificial {
                self.upper[j] = T::zero();
                if self.basic_row[j].is_none() {
                    self.x[j] = T::zero();
                }
            }
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if self.kind[b] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..n {
                if self.basic_row[j].is_some() || self.kind[j] == ColKind::Artificial {
                    continue;
                }
                let a = self.tab[r * n + j].abs();
                if a > T::pivot_tol() && best.is_none_or(|(_, v)| a > v) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                self.x[b] = T::zero();
                self.pivot(r, j, false);
            } else {
                self.x[b] = T::zero();
            }
        }
    }

    /// Restricts the problem to the optimal face: nonbasic columns with a
    /// nonzero reduced cost are fixed where they are.
    fn fix_off_face(&mut self) {
        let tol = T::optimality_tol();
        for j in 0..self.ncols {
            if self.basic_row[j].is_none() && self.reduced[j].abs() > tol {
                self.lower[j] = self.x[j];
                self.upper[j] = self.x[j];
            }
        }
    }

    fn finish(self, model: &Model<T>, mut status: Status) -> Solution<T> {
        let mut values: Vec<T> = self.x[..self.n_struct].to_vec();
        if status == Status::Optimal {
            let tol = T::feasibility_tol();
            for (v, var) in values.iter_mut().zip(&model.variables) {
                if !v.is_finite()
                    || *v < var.lower - tol * (T::one() + var.lower.abs())
                    || *v > var.upper + tol * (T::one() + var.upper.abs())
                {
                    status = Status::NumericallyUnstable;
                }
                *v = v.max(var.lower).min(var.upper);
            }
        }
        let activities: Vec<T> = model
            .constraints
            .iter()
            .map(|c| c.activity(&values))
            .collect();
        if status == Status::Optimal {
            let tol = T::feasibility_tol();
            for (c, &act) in model.constraints.iter().zip(&activities) {
                let slack = tol * (T::one() + c.rhs.abs());
                let ok = match c.relation {
                    Relation::Le => act <= c.rhs + slack,
                    Relation::Ge => act >= c.rhs - slack,
                    Relation::Eq => (act - c.rhs).abs() <= slack,
                };
                if !ok {
                    status = Status::NumericallyUnstable;
                }
            }
        }
        Solution {
            status,
            objective_value: model.objective.evaluate(&values),
            values,
            activities,
            iterations: self.iterations,
        }
    }
}
