//! Finite abelian groups: elements, characters, subgroups, automorphism and
//! surjection counts, and Cohen–Lenstra reference masses.

mod characters;
mod counting;
mod group;
mod subgroups;

pub use characters::{character_table, characters, characters_of, Character};
pub use counting::{aut_order, cl_mass, cl_product, hom_count, sur_count, truncation_depth, CL_TRUNCATION_TOL};
pub use group::{AbelianGroup, GroupElement, GroupTable, PGroupPartition, ENUMERATION_CAP};
pub use subgroups::{subgroups, subgroups_of, Subgroup, SUBGROUP_CAP};
