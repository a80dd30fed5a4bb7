//! Rows per instrument arm: the closed-form count against enumeration
//! followed by the non-redundancy filter.

use ivpoly::{count_inequalities, enumerate_full, filter_nonredundant, Dims, Result};

/// `(K, M, formula, enumerated)` for every grid cell small enough to enumerate.
pub fn run_example() -> Result<Vec<(usize, usize, u128, usize)>> {
    let mut out = Vec::new();
    println!("K  M  full  non-redundant  enumerated");
    for k in 2..=5 {
        for m in 2..=6 {
            let dims = Dims::new(1, k, m)?;
            let (full, kept) = count_inequalities(&dims);
            if full > 5_000 {
                println!("{k}  {m}  {full}  {kept}  (not enumerated)");
                continue;
            }
            let enumerated = filter_nonredundant(&enumerate_full(&dims)?).len();
            println!("{k}  {m}  {full}  {kept}  {enumerated}");
            out.push((k, m, kept, enumerated));
        }
    }
    Ok(out)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
