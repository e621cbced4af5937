mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sfgap::numlin::{solve_lp, LpProblem, LpStatus};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>()) {
        let p = common::random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_lp(&p).unwrap();
        match common::lp_by_vertices(&p) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some((v, _)) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - v).abs() <= 1e-9 * v.abs().max(1.0), "{} vs {}", sol.objective, v);
                prop_assert!(common::lp_feasible(&p, &sol.x, 1e-9));
                prop_assert!(common::is_vertex(&p, &sol.x, 1e-9));
            }
        }
    }

    /// Strong duality through the reported multipliers.
    #[test]
    fn multipliers_certify_optimality(seed in any::<u64>()) {
        let p = common::random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_lp(&p).unwrap();
        if sol.is_optimal() {
            prop_assert!(sol.duals_ub.iter().all(|&y| y <= 1e-9));
            let mut reduced = p.objective().to_vec();
            let mut dual_obj = 0.0;
            for i in 0..p.num_eq() {
                let (row, b) = p.eq_row(i);
                for (r, a) in reduced.iter_mut().zip(row) {
                    *r -= sol.duals_eq[i] * a;
                }
                dual_obj += sol.duals_eq[i] * b;
            }
            for i in 0..p.num_ub() {
                let (row, b) = p.ub_row(i);
                for (r, a) in reduced.iter_mut().zip(row) {
                    *r -= sol.duals_ub[i] * a;
                }
                dual_obj += sol.duals_ub[i] * b;
            }
            prop_assert!(reduced.iter().all(|&r| r >= -1e-9));
            let with_bounds: f64 = dual_obj + reduced.iter().zip(p.lower()).map(|(r, l)| r * l).sum::<f64>();
            prop_assert!((with_bounds - sol.objective).abs() <= 1e-8 * sol.objective.abs().max(1.0));
        }
    }
}

#[test]
fn unbounded_direction_is_reported() {
    let mut p = LpProblem::new(vec![-1.0, 0.0]).unwrap();
    p.add_ub(&[0.0, 1.0], 1.0).unwrap();
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn degenerate_vertex_terminates() {
    // Many constraints tight at the optimum (0, 0); Bland's rule must not cycle.
    let mut p = LpProblem::new(vec![1.0, 1.0]).unwrap();
    for a in 1..8 {
        p.add_lb(&[a as f64, 1.0], 0.0).unwrap();
        p.add_lb(&[1.0, a as f64], 0.0).unwrap();
    }
    let sol = solve_lp(&p).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(sol.objective.abs() < 1e-12);
}

#[test]
fn shifted_lower_bounds() {
    let mut p = LpProblem::new(vec![1.0, 2.0]).unwrap();
    p.set_lower(vec![-3.0, 1.5]).unwrap();
    p.add_ub(&[1.0, 1.0], 4.0).unwrap();
    let sol = solve_lp(&p).unwrap();
    assert!((sol.objective - 0.0).abs() < 1e-12);
    assert_eq!(common::lp_by_vertices(&p).unwrap().0, sol.objective);
}
