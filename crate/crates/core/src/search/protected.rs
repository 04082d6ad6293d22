//! Slots fixed by the primary change, which secondary actions may not undo.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{apply_script, ChangeAction, EntityId, Metamodel, Model, ScriptError, Value};

/// (source, reference, target)
pub type LinkTriple = (EntityId, String, EntityId);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectedSlots {
    /// Attribute slots written by the primary change, with their final value.
    pub attrs: BTreeMap<(EntityId, String), Value>,
    /// Entities created by the primary change that survive it.
    pub created: BTreeSet<EntityId>,
    /// Links the primary change added and left in place.
    pub added_links: BTreeSet<LinkTriple>,
    /// Links the primary change removed and did not restore.
    pub removed_links: BTreeSet<LinkTriple>,
}

impl ProtectedSlots {
    /// Derives the protected slots from the net effect of `script` on `original`.
    /// Returns the post-primary model alongside.
    pub fn from_primary(
        original: &Model,
        script: &[ChangeAction],
        mm: &Metamodel,
    ) -> Result<(Self, Model), ScriptError> {
        let (after, binding) = apply_script(original, script, mm)?;
        let resolve = |id: &EntityId| binding.get(id).cloned().unwrap_or_else(|| id.clone());
        let has_link =
            |m: &Model, (s, r, t): &LinkTriple| m.entity(s).is_some_and(|e| e.links(r).contains(t));
        let mut slots = ProtectedSlots::default();
        for action in script {
            match action {
                ChangeAction::SetAttr {
                    entity, attribute, ..
                } => {
                    let id = resolve(entity);
                    if let Some(v) = after.entity(&id).and_then(|e| e.attr(attribute)) {
                        slots.attrs.insert((id, attribute.clone()), v.clone());
                    }
                }
                ChangeAction::Create { id, .. } => {
                    let id = resolve(id);
                    if after.contains(&id) {
                        slots.created.insert(id);
                    }
                }
                ChangeAction::AddLink {
                    source,
                    reference,
                    target,
                    ..
                } => {
                    let triple = (resolve(source), reference.clone(), resolve(target));
                    if has_link(&after, &triple) {
                        slots.removed_links.remove(&triple);
                        slots.added_links.insert(triple);
                    }
                }
                ChangeAction::RemoveLink {
                    source,
                    reference,
                    target,
                } => {
                    let triple = (resolve(source), reference.clone(), resolve(target));
                    if !has_link(&after, &triple) {
                        slots.added_links.remove(&triple);
                        slots.removed_links.insert(triple);
                    }
                }
                ChangeAction::Delete { .. } => {}
            }
        }
        Ok((slots, after))
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
            && self.created.is_empty()
            && self.added_links.is_empty()
            && self.removed_links.is_empty()
    }

    /// Slots of `model` that no longer carry their primary post-state, as
    /// human-readable descriptions.
    pub fn unmet_in(&self, model: &Model) -> Vec<String> {
        let mut out = Vec::new();
        for ((id, attr), v) in &self.attrs {
            match model.entity(id).and_then(|e| e.attr(attr)) {
                Some(actual) if actual == v => {}
                Some(actual) => out.push(format!("({id},{attr}) = {actual}, expected {v}")),
                None => out.push(format!("({id},{attr}) missing, expected {v}")),
            }
        }
        for id in &self.created {
            if !model.contains(id) {
                out.push(format!("created entity {id} missing"));
            }
        }
        for (s, r, t) in &self.added_links {
            if !model.entity(s).is_some_and(|e| e.links(r).contains(t)) {
                out.push(format!("added link ({s},{r},{t}) missing"));
            }
        }
        for (s, r, t) in &self.removed_links {
            if model.entity(s).is_some_and(|e| e.links(r).contains(t)) {
                out.push(format!("removed link ({s},{r},{t}) present again"));
            }
        }
        out
    }
}

/// True iff `action` (with concrete ids) writes a protected attribute slot,
/// deletes a primary-created entity or an entity owning a protected slot,
/// removes a primary-added link, or re-adds a primary-removed link.
pub fn is_reverting(action: &ChangeAction, p: &ProtectedSlots) -> bool {
    match action {
        ChangeAction::SetAttr {
            entity, attribute, ..
        } => p.attrs.contains_key(&(entity.clone(), attribute.clone())),
        ChangeAction::Delete { entity } => {
            p.created.contains(entity) || p.attrs.keys().any(|(id, _)| id == entity)
        }
        ChangeAction::RemoveLink {
            source,
            reference,
            target,
        } => p
            .added_links
            .contains(&(source.clone(), reference.clone(), target.clone())),
        ChangeAction::AddLink {
            source,
            reference,
            target,
            ..
        } => p
            .removed_links
            .contains(&(source.clone(), reference.clone(), target.clone())),
        ChangeAction::Create { .. } => false,
    }
}
