//! Independent reference computations checked against the library.

use ivpoly::{
    empirical_distributions, g_polynomial, nonredundant_system, plugin_bounds, ChernoffSpec, Dataset, Dims,
    JointModel, LinearFunctional, ObservedDistribution, Status,
};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

/// Bounds from the response-type parametrization: one variable per
/// (treatment rule z -> x, outcome stratum), matching every arm exactly.
/// `None` when no such joint exists.
fn response_type_bounds(
    dims: &Dims,
    arms: &[ObservedDistribution],
    f: &LinearFunctional,
) -> Option<(f64, f64)> {
    let (q, k) = (arms.len(), dims.k());
    let rules = k.pow(q as u32);
    // treatment taken under arm z by rule r
    let take = |r: usize, z: usize| (r / k.pow(z as u32)) % k + 1;
    let solve = |direction| {
        let mut lp = Problem::new(direction);
        let vars: Vec<Vec<_>> = (0..rules)
            .map(|_| {
                (0..dims.strata())
                    .map(|a| lp.add_var(f.coeffs()[a], (0.0, 1.0)))
                    .collect()
            })
            .collect();
        for (z, arm) in arms.iter().enumerate() {
            for x in 1..=k {
                for y in 1..=dims.m() {
                    let mut e = LinearExpr::empty();
                    for (r, row) in vars.iter().enumerate() {
                        if take(r, z) != x {
                            continue;
                        }
                        for (a, &v) in row.iter().enumerate() {
                            if dims.stratum_outcome(a, x) == y {
                                e.add(v, 1.0);
                            }
                        }
                    }
                    lp.add_constraint(e, ComparisonOp::Eq, arm.prob(dims, x, y));
                }
            }
        }
        match lp.solve() {
            Ok(SolveOutcome::Solution(s)) => Some(s.objective()),
            Err(microlp::Error::Infeasible) => None,
            other => panic!("response-type LP: {other:?}"),
        }
    };
    Some((
        solve(OptimizationDirection::Minimize)?,
        solve(OptimizationDirection::Maximize)?,
    ))
}

fn agree(dims: &Dims, arms: &[ObservedDistribution], f: &LinearFunctional) {
    let sys = nonredundant_system(dims).unwrap();
    let ours = plugin_bounds(&sys, arms, f).unwrap();
    match response_type_bounds(dims, arms, f) {
        Some((lo, hi)) => {
            assert_eq!(ours.status, Status::Feasible, "{}", f.label());
            assert!(
                (ours.lower - lo).abs() < 1e-6,
                "{}: {} vs {lo}",
                f.label(),
                ours.lower
            );
            assert!(
                (ours.upper - hi).abs() < 1e-6,
                "{}: {} vs {hi}",
                f.label(),
                ours.upper
            );
        }
        None => assert_eq!(ours.status, Status::Infeasible, "{}", f.label()),
    }
}

#[test]
fn fixtures_match_response_types() {
    let cases: [(&str, &[&str]); 3] = [
        (
            "minneapolis.csv",
            &[
                "ate(Adv,Arr,2)",
                "ate(Sep,Arr,2)",
                "ate(Sep,Adv,2)",
                "marginal(1,1)",
            ],
        ),
        (
            "compatible.csv",
            &["stratum(2,1)", "marginal(2,1)", "marginal(1,1) - marginal(1,3)"],
        ),
        ("incompatible.csv", &["marginal(1,1)"]),
    ];
    for (file, functionals) in cases {
        let ds = Dataset::from_path(format!("{FIXTURES}/{file}")).unwrap();
        let arms = empirical_distributions(&ds).unwrap();
        for text in functionals {
            let f = LinearFunctional::parse(text, &ds.dims(), ds.labels()).unwrap();
            agree(&ds.dims(), &arms, &f);
        }
    }
}

#[test]
fn dropped_arms_match_response_types() {
    let ds = Dataset::from_path(format!("{FIXTURES}/minneapolis.csv")).unwrap();
    for z in 1..=ds.dims().q() {
        let fewer = ds.drop_arm(z).unwrap();
        let arms = empirical_distributions(&fewer).unwrap();
        for text in ["ate(Adv,Arr,2)", "ate(Sep,Arr,2)", "ate(Sep,Adv,2)"] {
            let f = LinearFunctional::parse(text, &fewer.dims(), fewer.labels()).unwrap();
            agree(&fewer.dims(), &arms, &f);
        }
    }
}

#[test]
fn random_arms_match_response_types() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (q, k, m) in [(1, 2, 2), (2, 2, 2), (3, 2, 2), (2, 2, 3), (2, 3, 2)] {
        let dims = Dims::new(q, k, m).unwrap();
        for draw in 0..6 {
            let arms = if draw % 2 == 0 {
                let model = JointModel::random(&dims, &mut rng).unwrap();
                model
                    .arms
                    .iter()
                    .enumerate()
                    .map(|(z, p)| ObservedDistribution::normalized(&dims, z + 1, p.clone(), 0).unwrap())
                    .collect()
            } else {
                ivpoly::bounds::random_arms(&dims, &mut rng).unwrap()
            };
            for (i, j) in [(2, 1), (1, k)] {
                agree(&dims, &arms, &LinearFunctional::ate(&dims, i, j, m).unwrap());
            }
            agree(
                &dims,
                &arms,
                &LinearFunctional::stratum(&dims, &vec![1; k]).unwrap(),
            );
        }
    }
}

#[test]
fn tail_bound_single_draw_two_cells() {
    // G_{2,1}(λ) = 1 + λ, so the bound is min over [0, 1] of (1 + λ) e^{-5λ}
    let spec = ChernoffSpec::new(2, vec![1], 0.05).unwrap();
    let grid = (0..=1_000_000)
        .map(|i| {
            let l = i as f64 / 1e6;
            (1.0 + l) * (-5.0 * l).exp()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(
        (spec.tail_rhs(5.0) - grid).abs() <= 1e-8,
        "{} vs {grid}",
        spec.tail_rhs(5.0)
    );
    assert!((grid - 2.0 * (-5.0f64).exp()).abs() <= 1e-12);
}

#[test]
fn g_polynomial_expansions() {
    let expansions: [(usize, u64, fn(f64) -> f64); 5] = [
        (2, 1, |l| 1.0 + l),
        (2, 2, |l| 1.0 + l + 0.5 * l * l),
        (3, 1, |l| 1.0 + 2.0 * l),
        (3, 2, |l| 1.0 + 2.0 * l + 1.5 * l * l),
        // a_3 = (3·2·1/27)·C(4,1)
        (3, 3, |l| {
            1.0 + 2.0 * l + 2.0 * l * l + (6.0 / 27.0) * 4.0 * l * l * l
        }),
    ];
    for (d, n, g) in expansions {
        for i in 0..=20 {
            let l = i as f64 / 20.0;
            let got = g_polynomial(d, n, l).unwrap();
            assert!(
                (got - g(l)).abs() <= 1e-12,
                "G_{d},{n}({l}) = {got}, want {}",
                g(l)
            );
        }
    }
}
