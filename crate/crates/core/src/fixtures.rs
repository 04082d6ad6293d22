//! Bundled scenario inputs (also shipped as files under `fixtures/`).
//!
//! * `f1`: a message renamed so it no longer names any operation of its
//!   receiver class.
//! * `f2`: as `f1`, plus a second message that still uses the old name and is
//!   pinned to it by two triggering transitions, so renaming the operation
//!   would break it.
//! * `unsolvable`: the change request renames a class whose name is fixed by
//!   another invariant.

use crate::dsl::{parse_constraint_file, Constraint};
use crate::model::{script_from_json, ChangeAction, Metamodel, Model};

pub const INTERACTION_METAMODEL: &str = include_str!("../fixtures/interaction.metamodel.json");

/// Raw file contents of one scenario.
#[derive(Debug, Clone, Copy)]
pub struct FixtureFiles {
    pub name: &'static str,
    pub metamodel: &'static str,
    pub model: &'static str,
    pub constraints: &'static str,
    pub changes: &'static str,
}

pub const F1: FixtureFiles = FixtureFiles {
    name: "f1",
    metamodel: INTERACTION_METAMODEL,
    model: include_str!("../fixtures/f1/model.json"),
    constraints: include_str!("../fixtures/f1/constraints.ocl"),
    changes: include_str!("../fixtures/f1/changes.json"),
};

pub const F2: FixtureFiles = FixtureFiles {
    name: "f2",
    metamodel: INTERACTION_METAMODEL,
    model: include_str!("../fixtures/f2/model.json"),
    constraints: include_str!("../fixtures/f2/constraints.ocl"),
    changes: include_str!("../fixtures/f2/changes.json"),
};

pub const UNSOLVABLE: FixtureFiles = FixtureFiles {
    name: "unsolvable",
    metamodel: INTERACTION_METAMODEL,
    model: include_str!("../fixtures/unsolvable/model.json"),
    constraints: include_str!("../fixtures/unsolvable/constraints.ocl"),
    changes: include_str!("../fixtures/unsolvable/changes.json"),
};

/// A loaded scenario.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub metamodel: Metamodel,
    pub model: Model,
    pub constraints: Vec<Constraint>,
    pub changes: Vec<ChangeAction>,
}

impl FixtureFiles {
    pub fn load(&self) -> Fixture {
        let metamodel = Metamodel::from_json(self.metamodel).expect("fixture metamodel");
        let model = Model::from_json(self.model, &metamodel).expect("fixture model");
        let constraints =
            parse_constraint_file(self.constraints, &metamodel).expect("fixture constraints");
        let changes = script_from_json(self.changes).expect("fixture changes");
        Fixture {
            metamodel,
            model,
            constraints,
            changes,
        }
    }
}
