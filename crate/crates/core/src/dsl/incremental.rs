//! Scope-based incremental re-checking.
//!
//! Each (constraint, context entity) evaluation caches the set of entities it
//! read. After a change, only pairs whose scope meets the changed entities,
//! plus pairs whose context entity itself changed, are evaluated again.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::ast::Constraint;
use super::eval::{evaluate_constraint, Evaluation, Violation};
use crate::model::{EntityId, Model};

#[derive(Debug, Clone, Default)]
pub struct ScopeCache {
    entries: BTreeMap<(usize, EntityId), Arc<Evaluation>>,
}

impl ScopeCache {
    /// Evaluates every constraint on every context instance.
    pub fn build(model: &Model, cs: &[Constraint]) -> Self {
        let mut entries = BTreeMap::new();
        for (ci, c) in cs.iter().enumerate() {
            for e in model.instances_of(&c.context) {
                entries.insert(
                    (ci, e.id.clone()),
                    Arc::new(evaluate_constraint(c, &e.id, model)),
                );
            }
        }
        ScopeCache { entries }
    }

    /// Brings the cache up to date with `model`, given the entities whose
    /// facts changed since the cache was built. Returns the new cache and the
    /// number of evaluations performed.
    pub fn refresh(
        &self,
        model: &Model,
        cs: &[Constraint],
        dirty: &BTreeSet<EntityId>,
    ) -> (Self, usize) {
        let mut entries = BTreeMap::new();
        let mut evaluated = 0;
        for ((ci, id), ev) in &self.entries {
            let c = &cs[*ci];
            let still_instance = model.entity(id).is_some_and(|e| e.class == c.context);
            if !still_instance {
                continue;
            }
            let stale = dirty.contains(id) || ev.scope.iter().any(|s| dirty.contains(s));
            let ev = if stale {
                evaluated += 1;
                Arc::new(evaluate_constraint(c, id, model))
            } else {
                Arc::clone(ev)
            };
            entries.insert((*ci, id.clone()), ev);
        }
        for id in dirty {
            let Some(entity) = model.entity(id) else {
                continue;
            };
            for (ci, c) in cs.iter().enumerate() {
                if c.context == entity.class {
                    entries.entry((ci, id.clone())).or_insert_with(|| {
                        evaluated += 1;
                        Arc::new(evaluate_constraint(c, id, model))
                    });
                }
            }
        }
        (ScopeCache { entries }, evaluated)
    }

    /// Failing pairs, in constraint order then entity order.
    pub fn violations(&self, cs: &[Constraint]) -> Vec<Violation> {
        self.entries
            .iter()
            .filter(|(_, ev)| !ev.holds)
            .map(|((ci, id), _)| Violation {
                constraint: cs[*ci].name.clone(),
                entity: id.clone(),
            })
            .collect()
    }

    pub fn evaluation(&self, constraint: usize, entity: &EntityId) -> Option<&Evaluation> {
        self.entries
            .get(&(constraint, entity.clone()))
            .map(|a| a.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Violations of `model`, re-using `cache` when the set of changed entities
/// is known. With `dirty == None` everything is evaluated from scratch.
pub fn recheck(
    model: &Model,
    cs: &[Constraint],
    cache: &ScopeCache,
    dirty: Option<&BTreeSet<EntityId>>,
) -> (Vec<Violation>, ScopeCache) {
    let next = match dirty {
        Some(d) => cache.refresh(model, cs, d).0,
        None => ScopeCache::build(model, cs),
    };
    (next.violations(cs), next)
}
