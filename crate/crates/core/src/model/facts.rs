//! Fact-set view of models, diffs, and fresh-id-independent state keys.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::snapshot::{Entity, EntityId, Model, Value};
use super::ModelError;

/// One atomic fact about a model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum Fact {
    Node {
        id: EntityId,
        class: String,
    },
    Attr {
        id: EntityId,
        attribute: String,
        value: Value,
    },
    Link {
        source: EntityId,
        reference: String,
        target: EntityId,
    },
}

impl Fact {
    /// The entity whose facts this belongs to (the source, for links).
    pub fn owner(&self) -> &EntityId {
        match self {
            Fact::Node { id, .. } | Fact::Attr { id, .. } => id,
            Fact::Link { source, .. } => source,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Node { id, class } => write!(f, "({id}:{class})"),
            Fact::Attr {
                id,
                attribute,
                value,
            } => write!(f, "({id},{attribute},{value})"),
            Fact::Link {
                source,
                reference,
                target,
            } => write!(f, "({source},{reference},{target})"),
        }
    }
}

/// The set of facts describing a model. Link order is not represented.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactSet(pub BTreeSet<Fact>);

impl FactSet {
    pub fn of(model: &Model) -> Self {
        let mut facts = BTreeSet::new();
        for e in model.entities() {
            facts.insert(Fact::Node {
                id: e.id.clone(),
                class: e.class.clone(),
            });
            for (attribute, value) in &e.attrs {
                facts.insert(Fact::Attr {
                    id: e.id.clone(),
                    attribute: attribute.clone(),
                    value: value.clone(),
                });
            }
            for (reference, targets) in &e.links {
                for t in targets {
                    facts.insert(Fact::Link {
                        source: e.id.clone(),
                        reference: reference.clone(),
                        target: t.clone(),
                    });
                }
            }
        }
        FactSet(facts)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.0.iter()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.0.contains(fact)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Fact> {
        self.0.iter().filter(|f| matches!(f, Fact::Node { .. }))
    }

    pub fn attrs(&self) -> impl Iterator<Item = &Fact> {
        self.0.iter().filter(|f| matches!(f, Fact::Attr { .. }))
    }

    pub fn links(&self) -> impl Iterator<Item = &Fact> {
        self.0.iter().filter(|f| matches!(f, Fact::Link { .. }))
    }

    /// Facts owned by `id` (its node fact, attribute facts and outgoing links).
    pub fn restricted_to(&self, id: &EntityId) -> BTreeSet<&Fact> {
        self.0.iter().filter(|f| f.owner() == id).collect()
    }

    pub fn difference(&self, other: &FactSet) -> FactSet {
        FactSet(self.0.difference(&other.0).cloned().collect())
    }
}

/// Facts gained and lost going from one model to another.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDiff {
    pub added: FactSet,
    pub removed: FactSet,
}

impl ModelDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }

    /// Entities whose own facts differ between the two models.
    pub fn changed_entities(&self) -> BTreeSet<EntityId> {
        self.added
            .iter()
            .chain(self.removed.iter())
            .map(|f| f.owner().clone())
            .collect()
    }
}

pub fn model_diff(a: &Model, b: &Model) -> Result<ModelDiff, ModelError> {
    if a.metamodel_name() != b.metamodel_name() {
        return Err(ModelError::MetamodelMismatch {
            left: a.metamodel_name().to_owned(),
            right: b.metamodel_name().to_owned(),
        });
    }
    let fa = FactSet::of(a);
    let fb = FactSet::of(b);
    Ok(ModelDiff {
        added: fb.difference(&fa),
        removed: fa.difference(&fb),
    })
}

/// Opaque fingerprint of a snapshot that ignores the choice of fresh ids.
/// Holds the full canonical encoding, so distinct states never collide.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Arc<[u8]>);

impl CanonicalKey {
    /// SHA-256 of the canonical encoding.
    pub fn to_hex(&self) -> String {
        Sha256::digest(&self.0)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Encodes the sorted fact set after renaming created entities to
/// `#<class>#<i>`, where `i` ranks the entity among created entities of the
/// same class by creation step.
pub fn canonical_key(model: &Model, created_order: &[EntityId]) -> CanonicalKey {
    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    let mut rename: BTreeMap<&EntityId, String> = BTreeMap::new();
    for id in created_order {
        if let Some(e) = model.entity(id) {
            let n = by_class.entry(e.class.as_str()).or_default();
            rename.insert(id, format!("#{}#{n}", e.class));
            *n += 1;
        }
    }
    fn renamed<'a>(rename: &'a BTreeMap<&EntityId, String>, id: &'a EntityId) -> &'a str {
        rename.get(id).map_or(id.as_str(), String::as_str)
    }
    let name = |id| renamed(&rename, id);
    // Entities in renamed-id order; within one, attributes and references
    // come sorted from their maps and link targets are sorted here.
    let mut ents: Vec<(&str, &Entity)> = model.entities().map(|e| (name(&e.id), e)).collect();
    ents.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let mut out = Vec::with_capacity(ents.len() * 64);
    let put = |out: &mut Vec<u8>, bytes: &[u8]| {
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(bytes);
    };
    let mut targets: Vec<&str> = Vec::new();
    for (id, e) in ents {
        put(&mut out, id.as_bytes());
        put(&mut out, e.class.as_bytes());
        for (a, v) in &e.attrs {
            out.push(1);
            put(&mut out, a.as_bytes());
            match v {
                Value::Str(s) => {
                    out.push(b's');
                    put(&mut out, s.as_bytes());
                }
                Value::Int(i) => {
                    out.push(b'i');
                    out.extend_from_slice(&i.to_le_bytes());
                }
                Value::Bool(b) => out.extend_from_slice(&[b'b', u8::from(*b)]),
            }
        }
        for (r, ts) in &e.links {
            targets.clear();
            targets.extend(ts.iter().map(name));
            targets.sort_unstable();
            targets.dedup();
            for t in &targets {
                out.push(2);
                put(&mut out, r.as_bytes());
                put(&mut out, t.as_bytes());
            }
        }
        out.push(0);
    }
    CanonicalKey(out.into())
}

impl Model {
    pub fn facts(&self) -> FactSet {
        FactSet::of(self)
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        canonical_key(self, self.created())
    }
}
