//! Every runnable example, driven as a test.

#[allow(dead_code)]
#[path = "../examples/chernoff.rs"]
mod chernoff;
#[allow(dead_code)]
#[path = "../examples/command_line.rs"]
mod command_line;
#[allow(dead_code)]
#[path = "../examples/confidence_intervals.rs"]
mod confidence_intervals;
#[allow(dead_code)]
#[path = "../examples/counting.rs"]
mod counting;
#[allow(dead_code)]
#[path = "../examples/coverage.rs"]
mod coverage;
#[allow(dead_code)]
#[path = "../examples/falsification.rs"]
mod falsification;
#[allow(dead_code)]
#[path = "../examples/falsification_curve.rs"]
mod falsification_curve;
#[allow(dead_code)]
#[path = "../examples/minneapolis_bounds.rs"]
mod minneapolis_bounds;
#[allow(dead_code)]
#[path = "../examples/oracle_audit.rs"]
mod oracle_audit;

use ivpoly::Status;

fn close(got: (f64, f64), want: (f64, f64), tol: f64) -> bool {
    (got.0 - want.0).abs() <= tol && (got.1 - want.1).abs() <= tol
}

#[test]
fn counting_formula_matches_enumeration() {
    let rows = counting::run_example().unwrap();
    assert!(rows.len() >= 8);
    for (k, m, formula, enumerated) in rows {
        assert_eq!(formula, enumerated as u128, "K={k} M={m}");
    }
}

#[test]
fn minneapolis_bounds_all_data() {
    let scenarios = minneapolis_bounds::run_example().unwrap();
    assert_eq!(scenarios.len(), 4);
    let all = &scenarios[0].1;
    let want = [(0.019, 0.252), (0.057, 0.343), (-0.184, 0.312)];
    for (r, w) in all.iter().zip(want) {
        assert!(
            close((r.lower, r.upper), w, 1e-3),
            "{}: [{}, {}]",
            r.functional,
            r.lower,
            r.upper
        );
    }
    // dropping an arm can only widen
    for (name, results) in &scenarios[1..] {
        for (r, a) in results.iter().zip(all) {
            assert!(
                r.lower <= a.lower + 1e-9 && r.upper >= a.upper - 1e-9,
                "{name} {}",
                r.functional
            );
        }
    }
}

#[test]
fn confidence_intervals_contain_plugin_bounds() {
    let cis = confidence_intervals::run_example().unwrap();
    let want = [(-0.374, 0.633), (-0.346, 0.702), (-0.583, 0.683)];
    for (c, w) in cis.iter().zip(want) {
        assert!(
            close((c.lower, c.upper), w, 0.01),
            "{}: ({}, {})",
            c.functional,
            c.lower,
            c.upper
        );
    }
}

#[test]
fn falsification_fixtures() {
    let out = falsification::run_example().unwrap();
    assert_eq!(out.incompatible, Status::Infeasible);
    assert_eq!(out.compatible, Status::Feasible);
    let want = [(0.01, 0.36), (0.26, 0.78), (0.56, 0.70), (-0.32, -0.04)];
    for (r, w) in out.bounds.iter().zip(want) {
        assert!(close((r.lower, r.upper), w, 5e-3), "{}", r.functional);
    }
}

#[test]
fn falsification_curve_rises() {
    let points = falsification_curve::run_example().unwrap();
    assert_eq!(points[0].1, 0.0);
    for pair in points.windows(2).skip(1) {
        assert!(pair[1].1 > pair[0].1, "{pair:?}");
    }
    assert!(points.last().unwrap().1 > 0.95);
}

#[test]
fn chernoff_critical_value() {
    let c = chernoff::run_example().unwrap();
    assert!((c.t_alpha - 25.966112).abs() < 1e-4);
    assert!((c.achieved_rhs - 0.05).abs() < 1e-6);
    assert!((c.lambda_star - 0.4712).abs() < 1e-3);
}

#[test]
fn oracle_audit_is_consistent() {
    assert!(oracle_audit::run_example().unwrap());
}

#[test]
fn coverage_reaches_nominal() {
    let c = coverage::run_example().unwrap();
    assert_eq!(c.reps, 100);
    assert!(c.coverage >= 0.9, "{c:?}");
}

#[test]
fn command_line_invocations() {
    let runs = command_line::run_example();
    let codes: Vec<i32> = runs.iter().map(|r| r.1).collect();
    assert_eq!(codes, [2, 0, 0, 0, 0]);
    assert!(runs[0].2.contains("infeasible"));
    let row: Vec<&str> = runs[1].2.lines().nth(1).unwrap().split_whitespace().collect();
    let bounds = (row[1].parse().unwrap(), row[2].parse().unwrap());
    assert!(close(bounds, (0.057, 0.343), 1e-3), "{row:?}");
    let json: serde_json::Value = serde_json::from_str(&runs[4].2).unwrap();
    assert!(json.is_object());
}
