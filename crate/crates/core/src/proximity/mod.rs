//! Distances between model versions.
//!
//! Three views: the cost of the plan that leads from one version to the
//! other, set-based similarity of the two fact sets, and similarity of the
//! effect scenarios of process graphs encoded in the models.
//!
//! Structural similarity uses the Jaccard index `|A∩B| / |A∪B|` as the
//! cardinality-oriented measure and the containment degree `|A∩B| / |A|` as
//! the inclusion-oriented one.

mod process;

pub use process::{
    effect_scenarios, semantic_proximity, EffectScenario, NodeKind, ProcessError, ProcessGraph,
    ProcessNode, SignedLiteral,
};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{model_diff, ChangeAction, CostConfig, Fact, FactSet, Model, ModelError};
use crate::scalar::Scalar;
use crate::Rational;

/// Sum of per-action costs; `None` if the plan uses a disabled kind.
pub fn cost_distance<S: Scalar>(actions: &[ChangeAction], costs: &CostConfig<S>) -> Option<S> {
    costs.total(actions)
}

/// Set-based similarity of two fact sets. All fields lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralProximity<S = Rational> {
    pub node: S,
    pub attr: S,
    pub link: S,
    /// Jaccard index over all facts.
    pub combined: S,
    /// Share of `a`'s facts also in `b`.
    pub inclusion_ab: S,
    /// Share of `b`'s facts also in `a`.
    pub inclusion_ba: S,
}

/// `|a∩b| / |a∪b|`, with two empty sets counting as identical.
pub fn jaccard<S: Scalar, T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> S {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        S::one()
    } else {
        S::from_ratio(inter as i64, union as i64)
    }
}

/// `|a∩b| / |a|`, 1 when `a` is empty.
pub fn inclusion<S: Scalar, T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> S {
    if a.is_empty() {
        return S::one();
    }
    S::from_ratio(a.intersection(b).count() as i64, a.len() as i64)
}

fn category(facts: &FactSet, pick: fn(&Fact) -> bool) -> BTreeSet<&Fact> {
    facts.iter().filter(|f| pick(f)).collect()
}

pub fn structural_proximity<S: Scalar>(
    a: &Model,
    b: &Model,
) -> Result<StructuralProximity<S>, ModelError> {
    // Same-metamodel check.
    model_diff(a, b)?;
    let fa = a.facts();
    let fb = b.facts();
    let all_a: BTreeSet<&Fact> = fa.iter().collect();
    let all_b: BTreeSet<&Fact> = fb.iter().collect();
    let is_node = |f: &Fact| matches!(f, Fact::Node { .. });
    let is_attr = |f: &Fact| matches!(f, Fact::Attr { .. });
    let is_link = |f: &Fact| matches!(f, Fact::Link { .. });
    Ok(StructuralProximity {
        node: jaccard(&category(&fa, is_node), &category(&fb, is_node)),
        attr: jaccard(&category(&fa, is_attr), &category(&fb, is_attr)),
        link: jaccard(&category(&fa, is_link), &category(&fb, is_link)),
        combined: jaccard(&all_a, &all_b),
        inclusion_ab: inclusion(&all_a, &all_b),
        inclusion_ba: inclusion(&all_b, &all_a),
    })
}

/// Semantic similarity of the process graphs two models encode, or `None`
/// if either model does not encode one or its scenarios cannot be computed.
pub fn semantic_between<S: Scalar>(a: &Model, b: &Model) -> Option<S> {
    let ga = ProcessGraph::from_model(a)?.ok()?;
    let gb = ProcessGraph::from_model(b)?.ok()?;
    let sa = effect_scenarios(&ga).ok()?;
    let sb = effect_scenarios(&gb).ok()?;
    Some(semantic_proximity(&sa, &sb))
}

/// Distances from an original model to a propagation result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximityReport<S = Rational> {
    pub cost_distance: S,
    pub structural: StructuralProximity<S>,
    pub semantic: Option<S>,
}

pub fn proximity_report<S: Scalar>(
    original: &Model,
    result: &Model,
    plan: &[ChangeAction],
    costs: &CostConfig<S>,
) -> Result<ProximityReport<S>, ModelError> {
    Ok(ProximityReport {
        cost_distance: cost_distance(plan, costs).unwrap_or_else(S::zero),
        structural: structural_proximity(original, result)?,
        semantic: semantic_between(original, result),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::apply_script;

    #[test]
    fn f1_rename_pair_is_seven_ninths() {
        let f = fixtures::F1.load();
        let (renamed, _) = apply_script(
            &f.model,
            &[ChangeAction::set_attr("op1", "name", "debit")],
            &f.metamodel,
        )
        .unwrap();
        let p: StructuralProximity = structural_proximity(&f.model, &renamed).unwrap();
        assert_eq!(p.combined, Rational::new(7, 9));
        assert_eq!(p.attr, Rational::new(2, 4));
        assert_eq!(p.node, Rational::from_integer(1));
        assert_eq!(p.link, Rational::from_integer(1));
        assert_eq!(p.inclusion_ab, Rational::new(7, 8));
    }

    #[test]
    fn identical_models_are_fully_similar() {
        let f = fixtures::F2.load();
        let p: StructuralProximity<f64> = structural_proximity(&f.model, &f.model).unwrap();
        for v in [
            p.node,
            p.attr,
            p.link,
            p.combined,
            p.inclusion_ab,
            p.inclusion_ba,
        ] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn disjoint_fact_sets_score_zero() {
        let f = fixtures::F1.load();
        let empty = Model::empty(&f.metamodel);
        let p: StructuralProximity = structural_proximity(&f.model, &empty).unwrap();
        assert_eq!(p.combined, Rational::from_integer(0));
        assert_eq!(p.inclusion_ab, Rational::from_integer(0));
        assert_eq!(p.inclusion_ba, Rational::from_integer(1));
    }

    #[test]
    fn cost_distance_prices_actions() {
        let costs: CostConfig = CostConfig::default();
        assert_eq!(cost_distance(&[], &costs), Some(Rational::from_integer(0)));
        let plan = [ChangeAction::create("A", "$a"), ChangeAction::delete("$a")];
        assert_eq!(
            cost_distance(&plan, &costs),
            Some(Rational::from_integer(4))
        );
    }
}
