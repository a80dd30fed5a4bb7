//! The moment polynomial, the tail bound and the critical value.

use ivpoly::{g_polynomial, ChernoffSpec, CriticalValue, Result};

pub fn run_example() -> Result<CriticalValue> {
    for lambda in [0.0, 0.5, 1.0] {
        println!(
            "G_2,1({lambda}) = {}   G_2,2({lambda}) = {}",
            g_polynomial(2, 1, lambda)?,
            g_polynomial(2, 2, lambda)?
        );
    }
    let spec = ChernoffSpec::new(6, vec![92, 108, 113], 0.05)?;
    for t in [0.0, 10.0, 20.0, 30.0] {
        println!("tail bound at t={t}: {:.6}", spec.tail_rhs(t));
    }
    let c = spec.find_t_alpha()?;
    println!(
        "t_0.05 = {:.6}, bound there {:.6}, lambda* = {:.4}",
        c.t_alpha, c.achieved_rhs, c.lambda_star
    );
    let loose = spec.with_alpha(0.10)?.find_t_alpha()?;
    println!("t_0.10 = {:.6}", loose.t_alpha);
    Ok(c)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
