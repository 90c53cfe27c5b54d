use std::collections::HashSet;

use super::group::{AbelianGroup, GroupTable};
use crate::error::{Error, Result};

/// Subgroup enumeration is limited to groups of at most this order.
pub const SUBGROUP_CAP: u64 = 4096;

/// A subgroup given by its (sorted) element indices in the ambient table,
/// together with its isomorphism type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    pub elements: Vec<usize>,
    pub structure: AbelianGroup,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.elements.binary_search(&a).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        other.order() % self.order() == 0 && self.elements.iter().all(|&a| other.contains(a))
    }

    /// Membership mask over the ambient group.
    pub fn mask(&self, order: usize) -> Vec<bool> {
        let mut m = vec![false; order];
        for &a in &self.elements {
            m[a] = true;
        }
        m
    }
}

/// All subgroups, sorted by order and then by element list. The trivial
/// subgroup is first and the whole group last.
pub fn subgroups(table: &GroupTable) -> Result<Vec<Subgroup>> {
    if table.order() as u64 > SUBGROUP_CAP {
        return Err(Error::GroupTooLarge { order: table.order().to_string(), cap: SUBGROUP_CAP });
    }
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let trivial = vec![0usize];
    seen.insert(trivial.clone());
    let mut frontier = vec![trivial];
    while let Some(sub) = frontier.pop() {
        let mut members = vec![false; table.order()];
        for &a in &sub {
            members[a] = true;
        }
        for g in 0..table.order() {
            if members[g] {
                continue;
            }
            let mut gens = sub.clone();
            gens.push(g);
            let bigger = table.generated(&gens);
            if seen.insert(bigger.clone()) {
                frontier.push(bigger);
            }
        }
    }
    let mut out: Vec<Subgroup> = seen
        .into_iter()
        .map(|elements| Subgroup { structure: table.structure_of(&elements), elements })
        .collect();
    out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.elements.cmp(&b.elements)));
    Ok(out)
}

pub fn subgroups_of(group: &AbelianGroup) -> Result<Vec<Subgroup>> {
    let table = GroupTable::with_cap(group, SUBGROUP_CAP)?;
    subgroups(&table)
}
