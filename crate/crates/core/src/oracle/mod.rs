//! Exact-arithmetic verification of the inequality system at small
//! dimensions.

mod audit;
mod coherence;
mod vertices;

pub use audit::{
    lp_redundancy_audit, lp_redundancy_audit_capped, rank, vertex_facet_check, AuditEntry, AuditReport,
    Verdict, VertexFacetReport, AUDIT_ROW_CAP,
};
pub use coherence::{
    build_coherence, edge_redundancy_table, edge_redundant, strassen_agreement, strassen_feasible,
    strassen_feasible_all_subsets, CoherenceRelation, EdgeCertificate, StrassenAgreement,
    ALL_SUBSETS_STRATA_CAP, CANDIDATE_CAP,
};
pub use vertices::{enumerate_vertices, vertex_count, Vertex, VertexSet, VERTEX_CAP};
