//! Simultaneous 95% intervals for the three pairwise effects, sharing one
//! critical value across functionals.

use std::time::Instant;

use ivpoly::inference::chernoff_spec;
use ivpoly::{
    confidence_intervals, nonredundant_system, ConfidenceInterval, Dataset, LinearFunctional, Result,
};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/minneapolis.csv");

pub fn run_example() -> Result<Vec<ConfidenceInterval>> {
    let ds = Dataset::from_path(FIXTURE)?;
    let dims = ds.dims();
    let critical = chernoff_spec(&ds, 0.05)?.find_t_alpha()?;
    println!(
        "arm sizes {:?}, t_alpha = {:.6} (lambda* = {:.4})",
        ds.arm_sizes(),
        critical.t_alpha,
        critical.lambda_star
    );
    let fs = ["ate(Adv,Arr,2)", "ate(Sep,Arr,2)", "ate(Sep,Adv,2)"]
        .iter()
        .map(|t| LinearFunctional::parse(t, &dims, ds.labels()))
        .collect::<Result<Vec<_>>>()?;
    let start = Instant::now();
    let cis = confidence_intervals(&nonredundant_system(&dims)?, &ds, &fs, 0.05)?;
    for c in &cis {
        println!("{:<16} ({:.3}, {:.3})", c.functional, c.lower, c.upper);
    }
    println!("solved in {:.2?}", start.elapsed());
    Ok(cis)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
