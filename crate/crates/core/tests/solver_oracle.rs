mod common;

use casemix_core::solver::{solve, Status};
use common::{random_lp, vertex_enumeration, Oracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..300 {
        let model = random_lp(&mut rng, 6, 6);
        let sol = solve(&model).unwrap();
        match vertex_enumeration(&model) {
            Oracle::Optimal(z) => {
                assert_eq!(sol.status, Status::Optimal, "case {case}\n{model}");
                assert!(
                    (sol.objective_value - z).abs() <= 1e-6,
                    "case {case}: simplex {} vs oracle {z}\n{model}",
                    sol.objective_value
                );
            }
            Oracle::Infeasible => {
                assert_eq!(sol.status, Status::Infeasible, "case {case}\n{model}")
            }
        }
    }
}

#[test]
fn optimal_solutions_satisfy_rows_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let model = random_lp(&mut rng, 6, 6);
        let sol = solve(&model).unwrap();
        if sol.status != Status::Optimal {
            continue;
        }
        for (v, x) in model.variables.iter().zip(&sol.values) {
            assert!(*x >= v.lower - 1e-9 && *x <= v.upper + 1e-9);
        }
        for (c, act) in model.constraints.iter().zip(&sol.activities) {
            let recomputed = c.activity(&sol.values);
            assert!((recomputed - act).abs() < 1e-12);
            let ok = match c.relation {
                casemix_core::solver::Relation::Le => *act <= c.rhs + 1e-7,
                casemix_core::solver::Relation::Ge => *act >= c.rhs - 1e-7,
                casemix_core::solver::Relation::Eq => (act - c.rhs).abs() <= 1e-7,
            };
            assert!(ok, "{} violated", c.name);
        }
        let z = model.objective.evaluate(&sol.values);
        assert!((z - sol.objective_value).abs() < 1e-7);
    }
}
