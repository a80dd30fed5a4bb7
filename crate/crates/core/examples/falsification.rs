//! Two observed distributions with binary treatment and ternary outcome:
//! one no counterfactual distribution can explain, one that bounds a few
//! functionals.

use ivpoly::{
    empirical_distributions, falsify, falsify_helly, nonredundant_system, plugin_bounds, BoundsResult,
    Dataset, LinearFunctional, Result, Status,
};

const INCOMPATIBLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/incompatible.csv");
const COMPATIBLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/compatible.csv");

pub const FUNCTIONALS: [&str; 4] = [
    "stratum(2,1)",
    "marginal(2,1)",
    "marginal(1,1) + marginal(1,2)",
    "marginal(1,1) - marginal(1,3)",
];

pub struct Outcome {
    pub incompatible: Status,
    pub compatible: Status,
    pub bounds: Vec<BoundsResult>,
}

pub fn run_example() -> Result<Outcome> {
    let mut statuses = Vec::new();
    for path in [INCOMPATIBLE, COMPATIBLE] {
        let ds = Dataset::from_path(path)?;
        let sys = nonredundant_system(&ds.dims())?;
        let observed = empirical_distributions(&ds)?;
        let status = falsify(&sys, &observed)?;
        assert_eq!(status, falsify_helly(&sys, &observed)?);
        println!("{}: {status}", path.rsplit('/').next().unwrap_or(path));
        statuses.push(status);
    }

    let ds = Dataset::from_path(COMPATIBLE)?;
    let sys = nonredundant_system(&ds.dims())?;
    let observed = empirical_distributions(&ds)?;
    let mut bounds = Vec::new();
    for text in FUNCTIONALS {
        let f = LinearFunctional::parse(text, &ds.dims(), ds.labels())?;
        let r = plugin_bounds(&sys, &observed, &f)?;
        println!("  {:<32} [{:.3}, {:.3}]", r.functional, r.lower, r.upper);
        bounds.push(r);
    }
    Ok(Outcome {
        incompatible: statuses[0],
        compatible: statuses[1],
        bounds,
    })
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
