//! Metamodels: the class, attribute and reference declarations models conform to.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// Primitive attribute type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    String,
    Int,
    Bool,
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrType::String => "string",
            AttrType::Int => "int",
            AttrType::Bool => "bool",
        })
    }
}

/// Upper multiplicity bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Upper {
    Bounded(u32),
    Unbounded,
}

impl Upper {
    pub fn admits(self, count: usize) -> bool {
        match self {
            Upper::Bounded(n) => count <= n as usize,
            Upper::Unbounded => true,
        }
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Bounded(n) => write!(f, "{n}"),
            Upper::Unbounded => f.write_str("*"),
        }
    }
}

impl Serialize for Upper {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Upper::Bounded(n) => serializer.serialize_u32(*n),
            Upper::Unbounded => serializer.serialize_str("*"),
        }
    }
}

impl<'de> Deserialize<'de> for Upper {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u32),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(n) => Ok(Upper::Bounded(n)),
            Repr::Text(s) if s == "*" => Ok(Upper::Unbounded),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "upper bound must be a count or \"*\", got {s:?}"
            ))),
        }
    }
}

fn unbounded() -> Upper {
    Upper::Unbounded
}

/// A multiplicity-bounded reference to another class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceDef {
    pub target: String,
    #[serde(default)]
    pub lower: u32,
    #[serde(default = "unbounded")]
    pub upper: Upper,
}

impl ReferenceDef {
    /// At most one target: navigation yields a single entity rather than a collection.
    pub fn is_single(&self) -> bool {
        self.upper == Upper::Bounded(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrType>,
    #[serde(default)]
    pub references: BTreeMap<String, ReferenceDef>,
}

/// The language a model is written in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metamodel {
    pub name: String,
    pub classes: Vec<ClassDef>,
}

impl Metamodel {
    /// Builds and validates a metamodel.
    pub fn new(name: impl Into<String>, classes: Vec<ClassDef>) -> Result<Self, ModelError> {
        let mm = Metamodel {
            name: name.into(),
            classes,
        };
        mm.validate()?;
        Ok(mm)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let mm: Metamodel = serde_json::from_str(text).map_err(ModelError::from_json)?;
        mm.validate()?;
        Ok(mm)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metamodel serializes")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = BTreeMap::new();
        for class in &self.classes {
            if seen.insert(class.name.as_str(), ()).is_some() {
                return Err(ModelError::Metamodel(format!(
                    "duplicate class `{}`",
                    class.name
                )));
            }
        }
        for class in &self.classes {
            for (rname, rdef) in &class.references {
                if !seen.contains_key(rdef.target.as_str()) {
                    return Err(ModelError::Metamodel(format!(
                        "reference `{}.{rname}` targets undeclared class `{}`",
                        class.name, rdef.target
                    )));
                }
                if let Upper::Bounded(up) = rdef.upper {
                    if rdef.lower > up {
                        return Err(ModelError::Metamodel(format!(
                            "reference `{}.{rname}` has lower bound {} above upper bound {up}",
                            class.name, rdef.lower
                        )));
                    }
                }
                if class.attributes.contains_key(rname) {
                    return Err(ModelError::Metamodel(format!(
                        "`{}.{rname}` is declared both as attribute and reference",
                        class.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn attribute(&self, class: &str, attr: &str) -> Option<AttrType> {
        self.class(class)?.attributes.get(attr).copied()
    }

    pub fn reference(&self, class: &str, reference: &str) -> Option<&ReferenceDef> {
        self.class(class)?.references.get(reference)
    }
}
