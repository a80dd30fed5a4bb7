//! Exact-arithmetic checks of the inequality system at small dimensions.

use ivpoly::oracle::{
    build_coherence, edge_redundancy_table, lp_redundancy_audit, strassen_agreement, vertex_facet_check,
    Verdict,
};
use ivpoly::{nonredundant_system, Dims, Result};

pub fn run_example() -> Result<bool> {
    let mut ok = true;
    let dims = Dims::new(1, 2, 3)?;
    let rel = build_coherence(&dims);
    println!("coherence at {dims}: {} edges", rel.edges.len());

    for (k, m) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        let d = Dims::new(1, k, m)?;
        let table = edge_redundancy_table(&d)?;
        let agree = table
            .iter()
            .all(|(f, redundant)| *redundant != f.is_nonredundant(m));
        println!(
            "K={k} M={m}: edge-set search agrees with the filter on {} families: {agree}",
            table.len()
        );
        ok &= agree;
    }

    for (q, k, m) in [(1, 2, 2), (1, 2, 3), (2, 3, 2)] {
        let sys = nonredundant_system(&Dims::new(q, k, m)?)?;
        let report = lp_redundancy_audit(&sys)?;
        println!(
            "LP audit Q={q} K={k} M={m}: {} kept rows non-redundant, {} dropped rows redundant",
            report.count(true, Verdict::NonRedundant),
            report.count(false, Verdict::Redundant)
        );
        ok &= report.consistent();
    }

    for q in [1, 2] {
        let sys = nonredundant_system(&Dims::new(q, 2, 2)?)?;
        let r = vertex_facet_check(&sys)?;
        println!(
            "vertices vs system Q={q}: {} vertices, {}/{} rows facet-defining, {}/{} hull facets implied",
            r.vertices, r.facet_rows, r.rows, r.hull_facets_valid, r.hull_facets
        );
        ok &= r.consistent();
    }

    let s = strassen_agreement(&Dims::new(1, 2, 2)?, 1000, 7)?;
    println!(
        "coupling checks agree on {}/{} random pairs ({} compatible)",
        s.agree, s.draws, s.feasible
    );
    ok &= s.agree == s.draws;
    Ok(ok)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
