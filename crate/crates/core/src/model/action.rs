//! Primitive change actions and their application to snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::metamodel::Metamodel;
use super::snapshot::{Entity, EntityId, Model, Value};
use super::ModelError;

/// Maps script placeholders (`$name`) to the ids of the entities they created.
pub type Binding = BTreeMap<EntityId, EntityId>;

/// The five primitive edit kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Create,
    Delete,
    AddLink,
    RemoveLink,
    SetAttr,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] = [
        ActionKind::Create,
        ActionKind::Delete,
        ActionKind::AddLink,
        ActionKind::RemoveLink,
        ActionKind::SetAttr,
    ];

    /// Position in candidate listings: setattr, addlink, removelink, create, delete.
    pub fn candidate_rank(self) -> u8 {
        match self {
            ActionKind::SetAttr => 0,
            ActionKind::AddLink => 1,
            ActionKind::RemoveLink => 2,
            ActionKind::Create => 3,
            ActionKind::Delete => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Create => "create",
            ActionKind::Delete => "delete",
            ActionKind::AddLink => "addlink",
            ActionKind::RemoveLink => "removelink",
            ActionKind::SetAttr => "setattr",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// A single primitive edit. Change scripts are JSON arrays of these records.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeAction {
    Create {
        class: String,
        id: EntityId,
    },
    Delete {
        entity: EntityId,
    },
    AddLink {
        source: EntityId,
        reference: String,
        target: EntityId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<usize>,
    },
    RemoveLink {
        source: EntityId,
        reference: String,
        target: EntityId,
    },
    SetAttr {
        entity: EntityId,
        attribute: String,
        value: Value,
    },
}

impl ChangeAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            ChangeAction::Create { .. } => ActionKind::Create,
            ChangeAction::Delete { .. } => ActionKind::Delete,
            ChangeAction::AddLink { .. } => ActionKind::AddLink,
            ChangeAction::RemoveLink { .. } => ActionKind::RemoveLink,
            ChangeAction::SetAttr { .. } => ActionKind::SetAttr,
        }
    }

    pub fn create(class: impl Into<String>, id: impl Into<String>) -> Self {
        ChangeAction::Create {
            class: class.into(),
            id: EntityId::new(id),
        }
    }

    pub fn delete(entity: impl Into<String>) -> Self {
        ChangeAction::Delete {
            entity: EntityId::new(entity),
        }
    }

    pub fn add_link(
        source: impl Into<String>,
        reference: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        ChangeAction::AddLink {
            source: EntityId::new(source),
            reference: reference.into(),
            target: EntityId::new(target),
            position: None,
        }
    }

    pub fn remove_link(
        source: impl Into<String>,
        reference: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        ChangeAction::RemoveLink {
            source: EntityId::new(source),
            reference: reference.into(),
            target: EntityId::new(target),
        }
    }

    pub fn set_attr(
        entity: impl Into<String>,
        attribute: impl Into<String>,
        value: impl Into<Value>,
    ) -> Self {
        ChangeAction::SetAttr {
            entity: EntityId::new(entity),
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    /// Every entity id the action mentions, in a fixed order.
    pub fn ids(&self) -> Vec<&EntityId> {
        match self {
            ChangeAction::Create { id, .. } => vec![id],
            ChangeAction::Delete { entity } | ChangeAction::SetAttr { entity, .. } => vec![entity],
            ChangeAction::AddLink { source, target, .. }
            | ChangeAction::RemoveLink { source, target, .. } => vec![source, target],
        }
    }

    /// Rewrites every id through `f`.
    pub fn map_ids(&self, mut f: impl FnMut(&EntityId) -> EntityId) -> ChangeAction {
        match self {
            ChangeAction::Create { class, id } => ChangeAction::Create {
                class: class.clone(),
                id: f(id),
            },
            ChangeAction::Delete { entity } => ChangeAction::Delete { entity: f(entity) },
            ChangeAction::AddLink {
                source,
                reference,
                target,
                position,
            } => ChangeAction::AddLink {
                source: f(source),
                reference: reference.clone(),
                target: f(target),
                position: *position,
            },
            ChangeAction::RemoveLink {
                source,
                reference,
                target,
            } => ChangeAction::RemoveLink {
                source: f(source),
                reference: reference.clone(),
                target: f(target),
            },
            ChangeAction::SetAttr {
                entity,
                attribute,
                value,
            } => ChangeAction::SetAttr {
                entity: f(entity),
                attribute: attribute.clone(),
                value: value.clone(),
            },
        }
    }

    /// Entities whose own facts (node, attribute or outgoing-link facts) the
    /// action changes, once placeholders are resolved through `binding`.
    pub fn dirty_entities(&self, binding: &Binding) -> BTreeSet<EntityId> {
        let resolve = |id: &EntityId| binding.get(id).cloned().unwrap_or_else(|| id.clone());
        let mut out = BTreeSet::new();
        match self {
            ChangeAction::Create { id, .. } => {
                out.insert(resolve(id));
            }
            ChangeAction::Delete { entity } | ChangeAction::SetAttr { entity, .. } => {
                out.insert(resolve(entity));
            }
            ChangeAction::AddLink { source, .. } | ChangeAction::RemoveLink { source, .. } => {
                out.insert(resolve(source));
            }
        }
        out
    }
}

impl fmt::Display for ChangeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangeAction::Create { class, id } => write!(f, "Create({class},{id})"),
            ChangeAction::Delete { entity } => write!(f, "Delete({entity})"),
            ChangeAction::AddLink {
                source,
                reference,
                target,
                position,
            } => match position {
                Some(p) => write!(f, "AddLink({source},{reference},{target}@{p})"),
                None => write!(f, "AddLink({source},{reference},{target})"),
            },
            ChangeAction::RemoveLink {
                source,
                reference,
                target,
            } => write!(f, "RemoveLink({source},{reference},{target})"),
            ChangeAction::SetAttr {
                entity,
                attribute,
                value,
            } => write!(f, "SetAttr({entity},{attribute},{value})"),
        }
    }
}

fn resolve(id: &EntityId, binding: &Binding, model: &Model) -> Result<EntityId, ModelError> {
    let concrete = if id.is_placeholder() {
        binding
            .get(id)
            .cloned()
            .ok_or_else(|| ModelError::UnresolvedId(id.clone()))?
    } else {
        id.clone()
    };
    if model.contains(&concrete) {
        Ok(concrete)
    } else {
        Err(ModelError::UnresolvedId(id.clone()))
    }
}

/// Applies one action, returning the successor snapshot. `model` is never
/// modified; `binding` gains an entry when a placeholder is created.
pub fn apply_action(
    model: &Model,
    action: &ChangeAction,
    binding: &mut Binding,
    mm: &Metamodel,
) -> Result<Model, ModelError> {
    let mut next = model.clone();
    match action {
        ChangeAction::Create { class, id } => {
            let cdef = mm
                .class(class)
                .ok_or_else(|| ModelError::Conformance(format!("unknown class `{class}`")))?;
            if !id.is_placeholder() {
                return Err(ModelError::Conformance(format!(
                    "created id `{id}` must be a `$` placeholder"
                )));
            }
            if binding.contains_key(id) {
                return Err(ModelError::Conformance(format!(
                    "placeholder `{id}` is already bound"
                )));
            }
            let fresh = model.fresh_id();
            let entity = Entity {
                id: fresh.clone(),
                class: class.clone(),
                attrs: cdef
                    .attributes
                    .iter()
                    .map(|(n, ty)| (n.clone(), Value::default_for(*ty)))
                    .collect(),
                links: cdef
                    .references
                    .keys()
                    .map(|n| (n.clone(), Vec::new()))
                    .collect(),
            };
            next.insert_created(entity);
            binding.insert(id.clone(), fresh);
        }
        ChangeAction::Delete { entity } => {
            let id = resolve(entity, binding, model)?;
            if model.has_incident_links(&id) {
                return Err(ModelError::IncidentLinks(id));
            }
            next.remove_entity(&id);
        }
        ChangeAction::AddLink {
            source,
            reference,
            target,
            position,
        } => {
            let src = resolve(source, binding, model)?;
            let tgt = resolve(target, binding, model)?;
            let src_class = &model.entity(&src).expect("resolved").class;
            let rdef = mm.reference(src_class, reference).ok_or_else(|| {
                ModelError::Conformance(format!(
                    "class `{src_class}` has no reference `{reference}`"
                ))
            })?;
            let tgt_class = &model.entity(&tgt).expect("resolved").class;
            if *tgt_class != rdef.target {
                return Err(ModelError::Conformance(format!(
                    "reference `{src_class}.{reference}` expects `{}`, got `{tgt_class}`",
                    rdef.target
                )));
            }
            let links = next
                .entity_mut(&src)
                .expect("resolved")
                .links
                .entry(reference.clone())
                .or_default();
            if links.contains(&tgt) {
                return Err(ModelError::DuplicateLink {
                    owner: src,
                    reference: reference.clone(),
                    target: tgt,
                });
            }
            match position {
                None => links.push(tgt),
                Some(p) if *p <= links.len() => links.insert(*p, tgt),
                Some(p) => {
                    return Err(ModelError::Conformance(format!(
                        "position {p} is beyond the {} links of `{src}.{reference}`",
                        links.len()
                    )))
                }
            }
        }
        ChangeAction::RemoveLink {
            source,
            reference,
            target,
        } => {
            let src = resolve(source, binding, model)?;
            let tgt = resolve(target, binding, model)?;
            let links = next
                .entity_mut(&src)
                .expect("resolved")
                .links
                .get_mut(reference);
            match links.and_then(|l| l.iter().position(|t| *t == tgt).map(|i| (l, i))) {
                Some((l, i)) => {
                    l.remove(i);
                }
                None => {
                    return Err(ModelError::MissingLink {
                        owner: src,
                        reference: reference.clone(),
                        target: tgt,
                    })
                }
            }
        }
        ChangeAction::SetAttr {
            entity,
            attribute,
            value,
        } => {
            let id = resolve(entity, binding, model)?;
            let class = &model.entity(&id).expect("resolved").class;
            let ty = mm.attribute(class, attribute).ok_or_else(|| {
                ModelError::Conformance(format!("class `{class}` has no attribute `{attribute}`"))
            })?;
            if value.attr_type() != ty {
                return Err(ModelError::TypeMismatch {
                    entity: id,
                    attribute: attribute.clone(),
                    expected: ty,
                    found: value.attr_type(),
                });
            }
            next.entity_mut(&id)
                .expect("resolved")
                .attrs
                .insert(attribute.clone(), value.clone());
        }
    }
    Ok(next)
}

/// Failure of one action inside a change script.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("action #{index} ({action}): {source}")]
pub struct ScriptError {
    pub index: usize,
    pub action: Box<ChangeAction>,
    #[source]
    pub source: Box<ModelError>,
}

/// Applies a whole script in order.
pub fn apply_script(
    model: &Model,
    script: &[ChangeAction],
    mm: &Metamodel,
) -> Result<(Model, Binding), ScriptError> {
    let mut binding = Binding::new();
    let mut current = model.clone();
    for (index, action) in script.iter().enumerate() {
        current =
            apply_action(&current, action, &mut binding, mm).map_err(|source| ScriptError {
                index,
                action: Box::new(action.clone()),
                source: Box::new(source),
            })?;
    }
    Ok((current, binding))
}

/// Parses a JSON change script.
pub fn script_from_json(text: &str) -> Result<Vec<ChangeAction>, ModelError> {
    serde_json::from_str(text).map_err(ModelError::from_json)
}

pub fn script_to_json(script: &[ChangeAction]) -> String {
    serde_json::to_string_pretty(script).expect("script serializes")
}
