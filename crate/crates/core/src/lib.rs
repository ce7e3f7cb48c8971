//! Exact computations for group topologies determined by families of subsets.

pub mod cli;
pub mod examples;
pub mod filters;
pub mod groups;
pub mod nonabelian;
pub mod report;
pub mod sequence;
pub mod serde_util;
pub mod setspec;

pub use groups::{AmbientGroup, CayleyTable, GroupElement, GroupError, Letter, Word};
pub use sequence::{Sequence, SequenceError, SequenceRegistry};
pub use setspec::{
    is_subset, n_fold_star, prefix_sum_membership, star, sumset, DecompositionWitness,
    ExclusionProof, Membership, SearchBudget, SetError, SetSpec, StarSet,
};
