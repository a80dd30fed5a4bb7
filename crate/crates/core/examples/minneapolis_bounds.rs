//! Plug-in bounds on the three pairwise effects of the domestic violence
//! experiment, with all data and with one instrument arm removed.

use ivpoly::{
    empirical_distributions, nonredundant_system, plugin_bounds, BoundsResult, Dataset, LinearFunctional,
    Result, Variable,
};

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/minneapolis.csv");
pub const EFFECTS: [&str; 3] = ["ate(Adv,Arr,2)", "ate(Sep,Arr,2)", "ate(Sep,Adv,2)"];

pub fn bounds_for(ds: &Dataset) -> Result<Vec<BoundsResult>> {
    let sys = nonredundant_system(&ds.dims())?;
    let observed = empirical_distributions(ds)?;
    EFFECTS
        .iter()
        .map(|text| {
            let f = LinearFunctional::parse(text, &ds.dims(), ds.labels())?;
            plugin_bounds(&sys, &observed, &f)
        })
        .collect()
}

/// `(scenario, bounds)` for all data, then each dropped arm.
pub fn run_example() -> Result<Vec<(String, Vec<BoundsResult>)>> {
    let ds = Dataset::from_path(FIXTURE)?;
    let mut scenarios = vec![("all data".to_string(), ds.clone())];
    for arm in ["Arrest", "Advise", "Separate"] {
        let z = ds.resolve_level(Variable::Z, arm)?;
        scenarios.push((format!("without Z={arm}"), ds.drop_arm(z)?));
    }
    let mut out = Vec::new();
    for (name, data) in scenarios {
        let results = bounds_for(&data)?;
        println!("{name}");
        for r in &results {
            println!("  {:<16} [{:>7.3}, {:>7.3}]", r.functional, r.lower, r.upper);
        }
        out.push((name, results));
    }
    Ok(out)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
