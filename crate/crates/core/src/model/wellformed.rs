//! Multiplicity checking.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::metamodel::{Metamodel, Upper};
use super::snapshot::{EntityId, Model};

/// A reference whose link count falls outside its declared bounds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiplicityViolation {
    pub entity: EntityId,
    pub reference: String,
    pub count: usize,
    pub lower: u32,
    pub upper: Upper,
}

impl MultiplicityViolation {
    pub fn below_lower(&self) -> bool {
        self.count < self.lower as usize
    }
}

impl fmt::Display for MultiplicityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.below_lower() {
            write!(
                f,
                "({}, {}): {} < lower {}",
                self.entity, self.reference, self.count, self.lower
            )
        } else {
            write!(
                f,
                "({}, {}): {} > upper {}",
                self.entity, self.reference, self.count, self.upper
            )
        }
    }
}

/// Every (entity, reference) whose link count is outside `[lower, upper]`.
pub fn check_wellformed(model: &Model, mm: &Metamodel) -> Vec<MultiplicityViolation> {
    let mut out = Vec::new();
    for e in model.entities() {
        let Some(class) = mm.class(&e.class) else {
            continue;
        };
        for (name, rdef) in &class.references {
            let count = e.links(name).len();
            if count < rdef.lower as usize || !rdef.upper.admits(count) {
                out.push(MultiplicityViolation {
                    entity: e.id.clone(),
                    reference: name.clone(),
                    count,
                    lower: rdef.lower,
                    upper: rdef.upper,
                });
            }
        }
    }
    out
}
