//! How often uniformly random observed arms already contradict the model,
//! as the number of instrument arms grows.

use ivpoly::{simulate_falsification, Dims, Result};

pub fn curve(draws: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    (1..=8)
        .map(|q| Ok((q, simulate_falsification(&Dims::new(q, 2, 2)?, draws, seed)?)))
        .collect()
}

pub fn run_example() -> Result<Vec<(usize, f64)>> {
    let points = curve(2_000, 11)?;
    println!("Q  falsified");
    for (q, p) in &points {
        println!("{q}  {p:.4}");
    }
    Ok(points)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
