//! Checks of a propagation outcome against the six postulates.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::oracle::exhaustive_oracle_bounded;
use super::reference;
use crate::dsl::Constraint;
use crate::model::{
    apply_action, apply_script, model_diff, Binding, ChangeAction, Fact, Metamodel, Model,
};
use crate::report::{Metric, RunReport};
use crate::scalar::Scalar;
use crate::search::{propagate, PropagateError, PropagationResult, ProtectedSlots, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    Unverified,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not applicable",
            Status::Unverified => "unverified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub status: Status,
    pub evidence: String,
}

impl Check {
    fn new(status: Status, evidence: impl Into<String>) -> Self {
        Check {
            status,
            evidence: evidence.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostulateReport {
    #[serde(rename = "P1")]
    pub p1: Check,
    #[serde(rename = "P2")]
    pub p2: Check,
    #[serde(rename = "P3")]
    pub p3: Check,
    #[serde(rename = "P4")]
    pub p4: Check,
    #[serde(rename = "P5")]
    pub p5: Check,
    #[serde(rename = "P6")]
    pub p6: Check,
}

impl PostulateReport {
    pub fn checks(&self) -> [(&'static str, &Check); 6] {
        [
            ("P1", &self.p1),
            ("P2", &self.p2),
            ("P3", &self.p3),
            ("P4", &self.p4),
            ("P5", &self.p5),
            ("P6", &self.p6),
        ]
    }

    pub fn any_failed(&self) -> bool {
        self.checks().iter().any(|(_, c)| c.status == Status::Fail)
    }
}

impl fmt::Display for PostulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, c) in self.checks() {
            writeln!(f, "{name}: {} ({})", c.status, c.evidence)?;
        }
        Ok(())
    }
}

/// Inputs of one propagation run, as needed to re-run it.
#[derive(Debug)]
pub struct RunInputs<'a, S> {
    pub original: &'a Model,
    pub primary: &'a [ChangeAction],
    pub cs: &'a [Constraint],
    pub mm: &'a Metamodel,
    pub cfg: &'a SearchConfig<S>,
}

impl<S> Clone for RunInputs<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for RunInputs<'_, S> {}

/// Upper limit on successor states the oracle generates per check.
pub const ORACLE_SUCCESSOR_BUDGET: usize = 300_000;

pub fn check_postulates<S: Scalar>(
    inputs: RunInputs<'_, S>,
    outcome: &Result<PropagationResult<S>, PropagateError>,
    oracle_bound: usize,
) -> PostulateReport {
    let RunInputs {
        original,
        primary,
        cs,
        mm,
        ..
    } = inputs;
    let post = match apply_script(original, primary, mm) {
        Ok((m, _)) => m,
        Err(e) => {
            let bad = Check::new(Status::Fail, format!("primary change does not apply: {e}"));
            return PostulateReport {
                p1: bad.clone(),
                p2: bad.clone(),
                p3: bad.clone(),
                p4: bad.clone(),
                p5: bad.clone(),
                p6: bad,
            };
        }
    };
    let initial_consistent = reference::consistent(&post, cs, mm);
    match outcome {
        Ok(res) => PostulateReport {
            p1: check_p1(res, cs, mm),
            p2: check_p2(original, &post, primary, res, mm),
            p3: check_p3(&post, res, cs, mm),
            p4: check_p4(initial_consistent, res),
            p5: check_p5(inputs, outcome),
            p6: check_p6(inputs, &post, Some(res), oracle_bound),
        },
        Err(PropagateError::Primary(e)) => {
            let bad = Check::new(Status::Fail, format!("primary change failed: {e}"));
            PostulateReport {
                p1: bad.clone(),
                p2: bad.clone(),
                p3: bad.clone(),
                p4: bad.clone(),
                p5: bad.clone(),
                p6: bad,
            }
        }
        Err(PropagateError::NoPlanWithinBound { .. }) => {
            let na = Check::new(Status::NotApplicable, "no plan returned");
            PostulateReport {
                p1: na.clone(),
                p2: na.clone(),
                p3: na.clone(),
                p4: if initial_consistent {
                    Check::new(
                        Status::Fail,
                        "initial state is consistent but no plan was returned",
                    )
                } else {
                    Check::new(Status::NotApplicable, "initial state is inconsistent")
                },
                p5: check_p5(inputs, outcome),
                p6: check_p6(inputs, &post, None, oracle_bound),
            }
        }
    }
}

fn check_p1<S: Scalar>(res: &PropagationResult<S>, cs: &[Constraint], mm: &Metamodel) -> Check {
    for (i, m) in res.result_models.iter().enumerate() {
        if let Some((c, e)) = reference::failing(m, cs).into_iter().next() {
            return Check::new(Status::Fail, format!("plan {}: ({c}, {e}) fails", i + 1));
        }
        if let Some((e, r, n)) = reference::bad_counts(m, mm).into_iter().next() {
            return Check::new(
                Status::Fail,
                format!(
                    "plan {}: ({e}, {r}) has {n} links, outside its bounds",
                    i + 1
                ),
            );
        }
    }
    Check::new(
        Status::Pass,
        format!(
            "{} result model(s) consistent and well-formed",
            res.result_models.len()
        ),
    )
}

/// Facts the primary change asserts: written attribute slots, created
/// entities and added links must hold afterwards; removed links must stay
/// absent.
fn asserted_facts(
    original: &Model,
    post: &Model,
    primary: &[ChangeAction],
    mm: &Metamodel,
) -> (BTreeSet<Fact>, BTreeSet<Fact>) {
    let Ok(diff) = model_diff(original, post) else {
        return Default::default();
    };
    // Replay to learn which concrete ids the placeholders received.
    let mut binding = Binding::new();
    let mut m = original.clone();
    for a in primary {
        match apply_action(&m, a, &mut binding, mm) {
            Ok(next) => m = next,
            Err(_) => break,
        }
    }
    let written: BTreeSet<(String, String)> = primary
        .iter()
        .filter_map(|a| match a {
            ChangeAction::SetAttr {
                entity, attribute, ..
            } => Some((
                binding.get(entity).unwrap_or(entity).0.clone(),
                attribute.clone(),
            )),
            _ => None,
        })
        .collect();
    let mut must_hold: BTreeSet<Fact> = diff
        .added
        .iter()
        .filter(|f| match f {
            Fact::Attr { id, attribute, .. } => {
                written.contains(&(id.0.clone(), attribute.clone()))
            }
            _ => true,
        })
        .cloned()
        .collect();
    // A slot written back to its original value is still asserted.
    for (id, attr) in &written {
        if let Some(v) = post.entity(&id.as_str().into()).and_then(|e| e.attr(attr)) {
            must_hold.insert(Fact::Attr {
                id: id.as_str().into(),
                attribute: attr.clone(),
                value: v.clone(),
            });
        }
    }
    let must_lack: BTreeSet<Fact> = diff
        .removed
        .iter()
        .filter(|f| matches!(f, Fact::Link { .. }))
        .cloned()
        .collect();
    (must_hold, must_lack)
}

fn check_p2<S: Scalar>(
    original: &Model,
    post: &Model,
    primary: &[ChangeAction],
    res: &PropagationResult<S>,
    mm: &Metamodel,
) -> Check {
    let (must_hold, must_lack) = asserted_facts(original, post, primary, mm);
    for (i, m) in res.result_models.iter().enumerate() {
        let facts = m.facts();
        if let Some(f) = must_hold.iter().find(|f| !facts.contains(f)) {
            let what = match f {
                Fact::Attr {
                    id,
                    attribute,
                    value,
                } => {
                    let now = m
                        .entity(id)
                        .and_then(|e| e.attr(attribute))
                        .map_or("missing".to_owned(), |v| v.to_string());
                    format!("slot ({id},{attribute}) is {now}, primary set {value}")
                }
                other => format!("primary fact {other} missing"),
            };
            return Check::new(Status::Fail, format!("plan {}: {what}", i + 1));
        }
        if let Some(f) = must_lack.iter().find(|f| facts.contains(f)) {
            return Check::new(
                Status::Fail,
                format!("plan {}: link removed by primary is back: {f}", i + 1),
            );
        }
    }
    Check::new(
        Status::Pass,
        format!(
            "{} asserted and {} retracted primary facts replayed",
            must_hold.len(),
            must_lack.len()
        ),
    )
}

fn check_p3<S: Scalar>(
    post: &Model,
    res: &PropagationResult<S>,
    cs: &[Constraint],
    mm: &Metamodel,
) -> Check {
    for (i, plan) in res.plans.iter().enumerate() {
        let mut binding = Binding::new();
        let mut m = post.clone();
        for (step, a) in plan.actions.iter().enumerate() {
            if reference::consistent(&m, cs, mm) {
                let prefix: Vec<String> = plan.actions[..step]
                    .iter()
                    .map(ToString::to_string)
                    .collect();
                return Check::new(
                    Status::Fail,
                    format!(
                        "plan {}: prefix [{}] is already consistent",
                        i + 1,
                        prefix.join(", ")
                    ),
                );
            }
            match apply_action(&m, a, &mut binding, mm) {
                Ok(next) => m = next,
                Err(e) => {
                    return Check::new(
                        Status::Fail,
                        format!(
                            "plan {}: step {} ({a}) does not apply: {e}",
                            i + 1,
                            step + 1
                        ),
                    )
                }
            }
        }
        if m.facts() != res.result_models[i].facts() {
            return Check::new(
                Status::Fail,
                format!("plan {}: replay does not reproduce the result model", i + 1),
            );
        }
    }
    Check::new(
        Status::Pass,
        format!(
            "{} plan(s): only the final state is consistent",
            res.plans.len()
        ),
    )
}

fn check_p4<S: Scalar>(initial_consistent: bool, res: &PropagationResult<S>) -> Check {
    if !initial_consistent {
        return Check::new(Status::NotApplicable, "initial state is inconsistent");
    }
    if res.plans.len() == 1 && res.plans[0].is_empty() {
        Check::new(
            Status::Pass,
            "initial state consistent; empty plan returned",
        )
    } else {
        let lens: Vec<usize> = res.plans.iter().map(|p| p.len()).collect();
        Check::new(
            Status::Fail,
            format!("initial state consistent but plans of lengths {lens:?} returned"),
        )
    }
}

/// Entities an action touches; creations also share one allocation slot,
/// so two creations never commute (fresh ids depend on their order).
fn footprint(a: &ChangeAction) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = a.ids().into_iter().map(|id| id.0.clone()).collect();
    if matches!(a, ChangeAction::Create { .. }) {
        out.insert("#alloc".into());
    }
    out
}

/// The first script obtained by swapping two adjacent independent actions
/// that leaves the post-primary state unchanged, if any.
pub fn permuted_primary(
    original: &Model,
    primary: &[ChangeAction],
    mm: &Metamodel,
) -> Option<Vec<ChangeAction>> {
    let (post, _) = apply_script(original, primary, mm).ok()?;
    for i in 0..primary.len().saturating_sub(1) {
        let (a, b) = (&primary[i], &primary[i + 1]);
        if a == b || !footprint(a).is_disjoint(&footprint(b)) {
            continue;
        }
        let mut swapped = primary.to_vec();
        swapped.swap(i, i + 1);
        if let Ok((m, _)) = apply_script(original, &swapped, mm) {
            if m == post {
                return Some(swapped);
            }
        }
    }
    None
}

fn report_bytes<S: Scalar>(
    inputs: RunInputs<'_, S>,
    outcome: &Result<PropagationResult<S>, PropagateError>,
) -> String {
    RunReport::build(
        inputs.original,
        outcome,
        inputs.cfg,
        Metric::Structural,
        0,
        None,
    )
    .to_json()
}

fn check_p5<S: Scalar>(
    inputs: RunInputs<'_, S>,
    outcome: &Result<PropagationResult<S>, PropagateError>,
) -> Check {
    let Some(swapped) = permuted_primary(inputs.original, inputs.primary, inputs.mm) else {
        return Check::new(
            Status::NotApplicable,
            "primary script has no two adjacent independent actions",
        );
    };
    let rerun = propagate(inputs.original, &swapped, inputs.cs, inputs.mm, inputs.cfg);
    let a = report_bytes(inputs, outcome);
    let b = report_bytes(inputs, &rerun);
    if a == b {
        let shown: Vec<String> = swapped.iter().map(ToString::to_string).collect();
        Check::new(
            Status::Pass,
            format!(
                "permuted script [{}] gives a byte-identical report",
                shown.join(", ")
            ),
        )
    } else {
        let at = a
            .bytes()
            .zip(b.bytes())
            .position(|(x, y)| x != y)
            .unwrap_or(a.len().min(b.len()));
        Check::new(
            Status::Fail,
            format!("permuted script changes the report at byte {at}"),
        )
    }
}

fn check_p6<S: Scalar>(
    inputs: RunInputs<'_, S>,
    post: &Model,
    res: Option<&PropagationResult<S>>,
    oracle_bound: usize,
) -> Check {
    let cfg = inputs.cfg;
    let bound = oracle_bound.min(cfg.max_depth);
    if let Some(plan) = res.and_then(|r| r.plans.first()) {
        if plan.len() > bound {
            return Check::new(
                Status::Unverified,
                format!("plan length {} exceeds oracle bound {bound}", plan.len()),
            );
        }
    }
    let Ok((protected, _)) =
        ProtectedSlots::from_primary(inputs.original, inputs.primary, inputs.mm)
    else {
        return Check::new(Status::Fail, "primary change does not apply");
    };
    let oracle = exhaustive_oracle_bounded(
        post,
        &protected,
        inputs.cs,
        inputs.mm,
        &cfg.costs,
        bound,
        ORACLE_SUCCESSOR_BUDGET,
    );
    let witness = || {
        oracle
            .witness
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    };
    let plan_cost = res
        .and_then(|r| r.plans.first())
        .map(|p| p.total_cost.clone());
    match (plan_cost, oracle.min_cost.clone()) {
        (Some(c), Some(o)) if o < c => {
            if cfg.strategy.is_optimal() {
                Check::new(
                    Status::Fail,
                    format!(
                        "oracle reaches cost {o} < plan cost {c} via [{}]",
                        witness()
                    ),
                )
            } else {
                Check::new(
                    Status::NotApplicable,
                    format!(
                        "{} is not cost-optimal; oracle reaches cost {o} < plan cost {c}",
                        cfg.strategy
                    ),
                )
            }
        }
        (None, Some(o)) => Check::new(
            Status::Fail,
            format!(
                "search found no plan but the oracle reaches cost {o} via [{}]",
                witness()
            ),
        ),
        _ if !oracle.complete => Check::new(
            Status::Unverified,
            format!(
                "oracle budget exhausted after {} successor states",
                oracle.generated
            ),
        ),
        (Some(c), Some(o)) if c == o => {
            Check::new(Status::Pass, format!("plan cost {c} equals oracle minimum"))
        }
        (Some(c), Some(o)) => Check::new(
            Status::Fail,
            format!("plan cost {c} below oracle minimum {o}: the plan is not valid"),
        ),
        (Some(c), None) => Check::new(
            Status::Fail,
            format!("oracle finds no plan within depth {bound}, search returned cost {c}"),
        ),
        (None, None) if bound < cfg.max_depth => Check::new(
            Status::Unverified,
            format!(
                "oracle finds no plan within depth {bound} < search depth {}",
                cfg.max_depth
            ),
        ),
        (None, None) => Check::new(
            Status::Pass,
            format!("oracle confirms no plan within depth {bound}"),
        ),
    }
}
