//! Model kernel: metamodels, snapshots, primitive change actions, fact sets.

mod action;
mod cost;
mod facts;
mod metamodel;
mod snapshot;
mod wellformed;

pub use action::{
    apply_action, apply_script, script_from_json, script_to_json, ActionKind, Binding,
    ChangeAction, ScriptError,
};
pub use cost::{CostConfig, CostSpecError, Plan};
pub use facts::{canonical_key, model_diff, CanonicalKey, Fact, FactSet, ModelDiff};
pub use metamodel::{AttrType, ClassDef, Metamodel, ReferenceDef, Upper};
pub use snapshot::{Entity, EntityId, Model, Value};
pub use wellformed::{check_wellformed, MultiplicityViolation};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{line}:{column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid metamodel: {0}")]
    Metamodel(String),
    #[error("{0}")]
    Conformance(String),
    #[error("unresolvable id `{0}`")]
    UnresolvedId(EntityId),
    #[error("attribute `{entity}.{attribute}` expects {expected}, got {found}")]
    TypeMismatch {
        entity: EntityId,
        attribute: String,
        expected: AttrType,
        found: AttrType,
    },
    #[error("cannot delete `{0}`: it has incident links")]
    IncidentLinks(EntityId),
    #[error("link ({owner}, {reference}, {target}) already exists")]
    DuplicateLink {
        owner: EntityId,
        reference: String,
        target: EntityId,
    },
    #[error("link ({owner}, {reference}, {target}) does not exist")]
    MissingLink {
        owner: EntityId,
        reference: String,
        target: EntityId,
    },
    #[error("metamodel mismatch: `{left}` vs `{right}`")]
    MetamodelMismatch { left: String, right: String },
}

impl ModelError {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        ModelError::Json {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
