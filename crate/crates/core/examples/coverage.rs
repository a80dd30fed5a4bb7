//! Monte Carlo coverage of the simultaneous intervals under a known joint
//! model.

use ivpoly::{coverage_monte_carlo, CiConfig, Coverage, Dims, JointModel, LinearFunctional, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn coverage(reps: usize, seed: u64) -> Result<Coverage> {
    let dims = Dims::new(2, 2, 2)?;
    let truth = JointModel::random(&dims, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let fs = vec![
        LinearFunctional::ate(&dims, 2, 1, 2)?,
        LinearFunctional::marginal(&dims, 1, 1)?,
    ];
    let config = CiConfig {
        alpha: 0.10,
        ..CiConfig::default()
    };
    coverage_monte_carlo(&truth, &fs, 50, &config, reps, seed)
}

pub fn run_example() -> Result<Coverage> {
    let c = coverage(100, 5)?;
    println!(
        "{} of {} replications covered both functionals ({:.3}), t_alpha = {:.4}",
        c.hits, c.reps, c.coverage, c.t_alpha
    );
    Ok(c)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
