//! Exchange rates for primitive actions, and costed plans.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::action::{ActionKind, ChangeAction};
use crate::scalar::{self, Scalar};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostSpecError {
    #[error("malformed cost entry `{0}` (expected kind=value)")]
    Malformed(String),
    #[error("unknown action kind `{0}`")]
    UnknownKind(String),
    #[error("cost for `{kind}` must be a positive number or `inf`, got `{value}`")]
    BadValue { kind: String, value: String },
    #[error("conflicting costs for `{kind}`: `{first}` and `{second}`")]
    Conflict {
        kind: String,
        first: String,
        second: String,
    },
}

/// Per-kind action cost. `None` disables a kind (infinite cost).
#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig<S = Rational> {
    costs: BTreeMap<ActionKind, Option<S>>,
}

impl<S: Scalar> Default for CostConfig<S> {
    /// create 1, delete 3, addlink 1, removelink 1, setattr 1.
    fn default() -> Self {
        let one = || Some(S::one());
        let mut costs = BTreeMap::new();
        costs.insert(ActionKind::Create, one());
        costs.insert(ActionKind::Delete, Some(S::from_count(3)));
        costs.insert(ActionKind::AddLink, one());
        costs.insert(ActionKind::RemoveLink, one());
        costs.insert(ActionKind::SetAttr, one());
        CostConfig { costs }
    }
}

impl<S: Scalar> CostConfig<S> {
    /// Sets the cost of one kind. Panics if `cost` is not strictly positive.
    pub fn with(mut self, kind: ActionKind, cost: Option<S>) -> Self {
        if let Some(c) = &cost {
            assert!(*c > S::zero(), "action costs must be positive");
        }
        self.costs.insert(kind, cost);
        self
    }

    /// Parses `create=1,delete=3,...` on top of the defaults. `inf` disables a kind.
    pub fn parse(spec: &str) -> Result<Self, CostSpecError> {
        let mut cfg = Self::default();
        let mut given: BTreeMap<ActionKind, String> = BTreeMap::new();
        for entry in spec.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| CostSpecError::Malformed(entry.to_owned()))?;
            let (k, v) = (k.trim(), v.trim());
            let kind = ActionKind::from_name(&k.to_ascii_lowercase())
                .ok_or_else(|| CostSpecError::UnknownKind(k.to_owned()))?;
            let cost = if v.eq_ignore_ascii_case("inf") {
                None
            } else {
                match S::parse_scalar(v) {
                    Some(c) if c > S::zero() => Some(c),
                    _ => {
                        return Err(CostSpecError::BadValue {
                            kind: k.to_owned(),
                            value: v.to_owned(),
                        })
                    }
                }
            };
            if let Some(prev) = given.get(&kind) {
                let prev_cost = cfg.costs[&kind].clone();
                if prev_cost != cost {
                    return Err(CostSpecError::Conflict {
                        kind: k.to_owned(),
                        first: prev.clone(),
                        second: v.to_owned(),
                    });
                }
            }
            given.insert(kind, v.to_owned());
            cfg.costs.insert(kind, cost);
        }
        Ok(cfg)
    }

    pub fn cost_of_kind(&self, kind: ActionKind) -> Option<&S> {
        self.costs.get(&kind).and_then(Option::as_ref)
    }

    pub fn cost(&self, action: &ChangeAction) -> Option<S> {
        self.cost_of_kind(action.kind()).cloned()
    }

    pub fn enabled(&self, kind: ActionKind) -> bool {
        self.cost_of_kind(kind).is_some()
    }

    /// Cheapest enabled kind, or `None` when every kind is disabled.
    pub fn min_cost(&self) -> Option<S> {
        self.costs.values().flatten().cloned().reduce(S::min_of)
    }

    /// Total cost of a sequence, `None` if it uses a disabled kind.
    pub fn total(&self, actions: &[ChangeAction]) -> Option<S> {
        actions
            .iter()
            .map(|a| self.cost(a))
            .collect::<Option<Vec<_>>>()
            .map(scalar::sum)
    }

    /// `kind=value` pairs in canonical order.
    pub fn entries(&self) -> Vec<(ActionKind, Option<S>)> {
        self.costs.iter().map(|(k, v)| (*k, v.clone())).collect()
    }
}

impl<S: Scalar> fmt::Display for CostConfig<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .costs
            .iter()
            .map(|(k, v)| match v {
                Some(c) => format!("{}={c}", k.name()),
                None => format!("{}=inf", k.name()),
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// An ordered sequence of actions with its total cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan<S = Rational> {
    pub actions: Vec<ChangeAction>,
    pub total_cost: S,
}

impl<S: Scalar> Plan<S> {
    pub fn empty() -> Self {
        Plan {
            actions: Vec::new(),
            total_cost: S::zero(),
        }
    }

    /// Prices `actions` under `costs`; `None` if a kind is disabled.
    pub fn priced(actions: Vec<ChangeAction>, costs: &CostConfig<S>) -> Option<Self> {
        let total_cost = costs.total(&actions)?;
        Some(Plan {
            actions,
            total_cost,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}
