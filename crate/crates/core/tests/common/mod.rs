//! Test-only oracles. Nothing here calls into the simplex code.
#![allow(dead_code)]

use std::path::PathBuf;

use casemix_core::solver::{Model, Relation, Sense};
use rand::Rng;

pub mod scenario;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[derive(Debug, PartialEq)]
pub enum Oracle {
    Optimal(f64),
    Infeasible,
}

/// Exhaustive vertex enumeration. Requires every variable to have finite
/// bounds so the feasible set is a polytope.
pub fn vertex_enumeration(model: &Model<f64>) -> Oracle {
    let n = model.variables.len();
    let dense = |coeffs: &[(casemix_core::solver::VarId, f64)]| {
        let mut row = vec![0.0; n];
        for &(v, c) in coeffs {
            row[v.0] += c;
        }
        row
    };
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut owner: Vec<Option<usize>> = Vec::new();
    for c in &model.constraints {
        planes.push((dense(&c.coeffs), c.rhs));
        owner.push(None);
    }
    for (j, v) in model.variables.iter().enumerate() {
        assert!(v.upper.is_finite(), "oracle needs bounded variables");
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), v.lower));
        owner.push(Some(j));
        planes.push((e, v.upper));
        owner.push(Some(j));
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-9;
        model
            .variables
            .iter()
            .zip(x)
            .all(|(v, &xi)| xi >= v.lower - tol && xi <= v.upper + tol)
            && model.constraints.iter().all(|c| {
                let act: f64 = c.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum();
                let s = tol * (1.0 + c.rhs.abs());
                match c.relation {
                    Relation::Le => act <= c.rhs + s,
                    Relation::Ge => act >= c.rhs - s,
                    Relation::Eq => (act - c.rhs).abs() <= s,
                }
            })
    };
    let objective = |x: &[f64]| model.objective.evaluate(x);
    let better = |a: f64, b: f64| match model.objective.sense {
        Sense::Maximize => a > b,
        Sense::Minimize => a < b,
    };

    let mut best: Option<f64> = None;
    let mut chosen = Vec::with_capacity(n);
    fn recurse(
        start: usize,
        n: usize,
        planes: &[(Vec<f64>, f64)],
        owner: &[Option<usize>],
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if chosen.len() == n {
            visit(chosen);
            return;
        }
        for i in start..planes.len() {
            // Lower and upper bound planes of one variable are parallel.
            if let Some(j) = owner[i] {
                if chosen.iter().any(|&k| owner[k] == Some(j)) {
                    continue;
                }
            }
            chosen.push(i);
            recurse(i + 1, n, planes, owner, chosen, visit);
            chosen.pop();
        }
    }
    let mut visit = |set: &[usize]| {
        let a: Vec<Vec<f64>> = set.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let z = objective(&x);
                if best.is_none_or(|bz| better(z, bz)) {
                    best = Some(z);
                }
            }
        }
    };
    recurse(0, n, &planes, &owner, &mut chosen, &mut visit);
    match best {
        Some(z) => Oracle::Optimal(z),
        None => Oracle::Infeasible,
    }
}

/// Random bounded LP with at most `max_vars` variables and `max_rows` rows.
pub fn random_lp(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> Model<f64> {
    let sense = if rng.random_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut m = Model::new(sense);
    let n = rng.random_range(1..=max_vars);
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = if rng.random_bool(0.2) {
                rng.random_range(0.0..2.0f64).round()
            } else {
                0.0
            };
            let hi = lo + rng.random_range(1.0..10.0f64);
            m.add_var(format!("x{j}"), lo, hi)
        })
        .collect();
    for &v in &vars {
        let c: f64 = rng.random_range(-5.0..5.0);
        m.add_objective_term(v, c);
    }
    let rows = rng.random_range(0..=max_rows);
    for i in 0..rows {
        let mut coeffs = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.8) {
                coeffs.push((v, rng.random_range(-5.0..5.0f64)));
            }
        }
        let relation = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=2 => Relation::Ge,
            _ => Relation::Le,
        };
        let rhs = rng.random_range(-5.0..25.0);
        m.add_constraint(format!("r{i}"), coeffs, relation, rhs);
    }
    m
}

/// Smallest weighted shortfall `sum w_g (target_gp - n_gp)` over cohorts
/// that fit, written directly on ward placements and solved by minilp.
/// Returns `None` when minilp fails.
pub fn shortfall_oracle(
    bundle: &casemix_core::domain::ProjectBundle,
    mss: &casemix_core::domain::MssTemplate,
    targets: &[Vec<f64>],
    weights: &[f64],
) -> Option<f64> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let weight = |g: usize| weights.get(g).copied().unwrap_or(1.0);
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let mut constant = 0.0;
    let mut theatre = Vec::new();
    let mut icu = Vec::new();
    let mut wards = vec![Vec::new(); bundle.config.wards.len()];
    for (g, t) in bundle.catalog.types.iter().enumerate() {
        for (p, st) in t.sub_types.iter().enumerate() {
            let target = targets[g][p];
            constant += weight(g) * target;
            let pr = &st.profile;
            // A sub-type without ward options is a single placement.
            let slots = pr.ward_options.len().max(1);
            let vars: Vec<_> = (0..slots)
                .map(|_| pb.add_var(-weight(g), (0.0, f64::INFINITY)))
                .collect();
            let all: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
            pb.add_constraint(&all, ComparisonOp::Le, target);
            for (k, &v) in vars.iter().enumerate() {
                theatre.push((v, pr.t_surgery));
                icu.push((v, pr.t_icu));
                if let Some(w) = pr.ward_options.get(k) {
                    let w = bundle.config.ward_index(w).unwrap();
                    wards[w].push((v, pr.t_surgery + pr.t_postop));
                }
            }
        }
    }
    pb.add_constraint(&theatre, ComparisonOp::Le, mss.theatre_hours());
    pb.add_constraint(&icu, ComparisonOp::Le, mss.ward_hours(bundle.config.icu_beds));
    for (w, c) in wards.iter().enumerate() {
        if !c.is_empty() {
            pb.add_constraint(c, ComparisonOp::Le, mss.ward_hours(bundle.config.wards[w].beds));
        }
    }
    let sol = pb.solve().ok()?;
    Some(constant + sol.objective())
}
