//! Model snapshots: typed graphs of entities, attribute values and ordered links.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metamodel::{AttrType, Metamodel};
use super::ModelError;

/// Identifier of an entity. Ids starting with `$` are script placeholders.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_placeholder(&self) -> bool {
        self.0.starts_with('$')
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_owned())
    }
}

/// Attribute value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn default_for(ty: AttrType) -> Value {
        match ty {
            AttrType::String => Value::Str(String::new()),
            AttrType::Int => Value::Int(0),
            AttrType::Bool => Value::Bool(false),
        }
    }

    pub fn attr_type(&self) -> AttrType {
        match self {
            Value::Bool(_) => AttrType::Bool,
            Value::Int(_) => AttrType::Int,
            Value::Str(_) => AttrType::String,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub class: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, Value>,
    #[serde(default)]
    pub links: BTreeMap<String, Vec<EntityId>>,
}

impl Entity {
    pub fn links(&self, reference: &str) -> &[EntityId] {
        self.links.get(reference).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn attr(&self, attribute: &str) -> Option<&Value> {
        self.attrs.get(attribute)
    }
}

/// An immutable-by-convention snapshot of a model.
///
/// Every declared attribute of an entity is present and every declared
/// reference has a (possibly empty) link list. `created` records the ids of
/// entities created by change actions, in creation order. Entities are shared
/// between snapshots and copied on write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    metamodel: String,
    entities: BTreeMap<EntityId, Arc<Entity>>,
    created: Vec<EntityId>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    metamodel: String,
    entities: Vec<Entity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    created: Vec<EntityId>,
}

impl Model {
    /// An empty model of `mm`.
    pub fn empty(mm: &Metamodel) -> Self {
        Model {
            metamodel: mm.name.clone(),
            entities: BTreeMap::new(),
            created: Vec::new(),
        }
    }

    /// Builds a model from raw entities, filling omitted attributes with
    /// defaults and checking conformance to `mm`.
    pub fn from_entities(
        mm: &Metamodel,
        entities: impl IntoIterator<Item = Entity>,
    ) -> Result<Self, ModelError> {
        let mut model = Model::empty(mm);
        for entity in entities {
            let id = entity.id.clone();
            if model
                .entities
                .insert(id.clone(), Arc::new(entity))
                .is_some()
            {
                return Err(ModelError::Conformance(format!(
                    "duplicate entity id `{id}`"
                )));
            }
        }
        model.normalize(mm)?;
        model.validate(mm)?;
        Ok(model)
    }

    pub fn from_json(text: &str, mm: &Metamodel) -> Result<Self, ModelError> {
        let repr: ModelRepr = serde_json::from_str(text).map_err(ModelError::from_json)?;
        if repr.metamodel != mm.name {
            return Err(ModelError::MetamodelMismatch {
                left: repr.metamodel,
                right: mm.name.clone(),
            });
        }
        let mut model = Model::from_entities(mm, repr.entities)?;
        for id in &repr.created {
            if !model.entities.contains_key(id) {
                return Err(ModelError::Conformance(format!(
                    "created entity `{id}` does not exist"
                )));
            }
        }
        model.created = repr.created;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let repr = ModelRepr {
            metamodel: self.metamodel.clone(),
            entities: self.entities.values().map(|e| (**e).clone()).collect(),
            created: self.created.clone(),
        };
        serde_json::to_string_pretty(&repr).expect("model serializes")
    }

    pub fn metamodel_name(&self) -> &str {
        &self.metamodel
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id).map(|e| &**e)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values().map(|e| &**e)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Entities of `class`, in id order.
    pub fn instances_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a Entity> + 'a {
        self.entities().filter(move |e| e.class == class)
    }

    /// Ids of entities created by change actions, in creation order.
    pub fn created(&self) -> &[EntityId] {
        &self.created
    }

    /// Entities with at least one link pointing at `id`, paired with the reference name.
    pub fn incoming(&self, id: &EntityId) -> Vec<(EntityId, String)> {
        let mut out = Vec::new();
        for e in self.entities.values() {
            for (r, targets) in &e.links {
                if targets.contains(id) {
                    out.push((e.id.clone(), r.clone()));
                }
            }
        }
        out
    }

    pub fn has_incident_links(&self, id: &EntityId) -> bool {
        let outgoing = self
            .entities
            .get(id)
            .is_some_and(|e| e.links.values().any(|t| !t.is_empty()));
        outgoing
            || self
                .entities
                .values()
                .any(|e| e.links.values().any(|t| t.contains(id)))
    }

    /// The deterministic id the next created entity receives: `_c<n>` for the
    /// smallest `n` not already in use.
    pub fn fresh_id(&self) -> EntityId {
        (0..)
            .map(|n| EntityId(format!("_c{n}")))
            .find(|id| !self.entities.contains_key(id))
            .expect("unbounded id space")
    }

    pub(crate) fn entity_mut(&mut self, id: &EntityId) -> Option<&mut Entity> {
        self.entities.get_mut(id).map(Arc::make_mut)
    }

    pub(crate) fn insert_created(&mut self, entity: Entity) {
        self.created.push(entity.id.clone());
        self.entities.insert(entity.id.clone(), Arc::new(entity));
    }

    pub(crate) fn remove_entity(&mut self, id: &EntityId) -> Option<Entity> {
        self.created.retain(|c| c != id);
        self.entities.remove(id).map(Arc::unwrap_or_clone)
    }

    fn normalize(&mut self, mm: &Metamodel) -> Result<(), ModelError> {
        for e in self.entities.values_mut() {
            let e = Arc::make_mut(e);
            let class = mm.class(&e.class).ok_or_else(|| {
                ModelError::Conformance(format!(
                    "entity `{}` has undeclared class `{}`",
                    e.id, e.class
                ))
            })?;
            for (name, ty) in &class.attributes {
                e.attrs
                    .entry(name.clone())
                    .or_insert_with(|| Value::default_for(*ty));
            }
            for name in class.references.keys() {
                e.links.entry(name.clone()).or_default();
            }
        }
        Ok(())
    }

    /// Checks the structural invariants (multiplicities excluded).
    pub fn validate(&self, mm: &Metamodel) -> Result<(), ModelError> {
        if self.metamodel != mm.name {
            return Err(ModelError::MetamodelMismatch {
                left: self.metamodel.clone(),
                right: mm.name.clone(),
            });
        }
        for (id, e) in &self.entities {
            if *id != e.id {
                return Err(ModelError::Conformance(format!(
                    "entity keyed `{id}` carries id `{}`",
                    e.id
                )));
            }
            if e.id.is_placeholder() {
                return Err(ModelError::Conformance(format!(
                    "placeholder id `{}` cannot name a model entity",
                    e.id
                )));
            }
            let class = mm.class(&e.class).ok_or_else(|| {
                ModelError::Conformance(format!(
                    "entity `{}` has undeclared class `{}`",
                    e.id, e.class
                ))
            })?;
            for (name, value) in &e.attrs {
                let ty = class.attributes.get(name).ok_or_else(|| {
                    ModelError::Conformance(format!(
                        "entity `{}` sets undeclared attribute `{name}`",
                        e.id
                    ))
                })?;
                if value.attr_type() != *ty {
                    return Err(ModelError::TypeMismatch {
                        entity: e.id.clone(),
                        attribute: name.clone(),
                        expected: *ty,
                        found: value.attr_type(),
                    });
                }
            }
            for name in class.attributes.keys() {
                if !e.attrs.contains_key(name) {
                    return Err(ModelError::Conformance(format!(
                        "entity `{}` is missing attribute `{name}`",
                        e.id
                    )));
                }
            }
            for (name, targets) in &e.links {
                let rdef = class.references.get(name).ok_or_else(|| {
                    ModelError::Conformance(format!(
                        "entity `{}` has links for undeclared reference `{name}`",
                        e.id
                    ))
                })?;
                for (i, t) in targets.iter().enumerate() {
                    let target = self
                        .entities
                        .get(t)
                        .ok_or_else(|| ModelError::UnresolvedId(t.clone()))?;
                    if target.class != rdef.target {
                        return Err(ModelError::Conformance(format!(
                            "link `{}.{name}` -> `{t}` targets class `{}`, expected `{}`",
                            e.id, target.class, rdef.target
                        )));
                    }
                    if targets[..i].contains(t) {
                        return Err(ModelError::DuplicateLink {
                            owner: e.id.clone(),
                            reference: name.clone(),
                            target: t.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
