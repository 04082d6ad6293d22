//! Machine-readable run report.
//!
//! Field order is fixed by the struct layout and every map is ordered, so
//! identical runs serialize to identical bytes. Numbers derived from the
//! scalar type are written as `{"exact": "7/9", "approx": 0.7777777777777778}`.
//! Timing is deliberately absent.

use serde::Serialize;

use crate::harness::PostulateReport;
use crate::model::{ChangeAction, Model, MultiplicityViolation};
use crate::proximity::{cost_distance, semantic_between, structural_proximity};
use crate::scalar::Scalar;
use crate::search::{PropagateError, PropagationResult, SearchConfig};

/// Which proximity figures to include per plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Structural,
    Semantic,
    None,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structural" => Ok(Metric::Structural),
            "semantic" => Ok(Metric::Semantic),
            "none" => Ok(Metric::None),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Number {
    pub exact: String,
    pub approx: f64,
}

impl Number {
    pub fn of<S: Scalar>(v: &S) -> Self {
        Number {
            exact: v.to_string(),
            approx: v.to_f64_lossy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralEntry {
    pub node: Number,
    pub attr: Number,
    pub link: Number,
    pub combined: Number,
    pub inclusion_ab: Number,
    pub inclusion_ba: Number,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximityEntry {
    pub cost_distance: Number,
    pub structural: StructuralEntry,
    /// Absent when the models encode no process graph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semantic: Option<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEntry {
    pub cost: Number,
    /// Human-readable form of each action.
    pub steps: Vec<String>,
    pub actions: Vec<ChangeAction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proximity: Option<ProximityEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub strategy: String,
    pub costs: String,
    pub max_depth: usize,
    pub k: usize,
    pub heuristic: String,
    pub metric: Metric,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsEntry {
    pub expanded: usize,
    pub generated: usize,
    pub deduped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// `plan_found`, `no_plan_within_bound` or `primary_failed`.
    pub status: String,
    pub config: ConfigEcho,
    pub initial_violations: Vec<String>,
    pub initial_multiplicity: Vec<String>,
    pub plans: Vec<PlanEntry>,
    /// Result model of the first plan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_model: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub postulates: Option<PostulateReport>,
    pub diagnostics: Vec<String>,
}

fn proximity_entry<S: Scalar>(
    original: &Model,
    result: &Model,
    actions: &[ChangeAction],
    cfg: &SearchConfig<S>,
    metric: Metric,
) -> Option<ProximityEntry> {
    if metric == Metric::None {
        return None;
    }
    let st = structural_proximity::<S>(original, result).ok()?;
    Some(ProximityEntry {
        cost_distance: Number::of(&cost_distance(actions, &cfg.costs).unwrap_or_else(S::zero)),
        structural: StructuralEntry {
            node: Number::of(&st.node),
            attr: Number::of(&st.attr),
            link: Number::of(&st.link),
            combined: Number::of(&st.combined),
            inclusion_ab: Number::of(&st.inclusion_ab),
            inclusion_ba: Number::of(&st.inclusion_ba),
        },
        semantic: match metric {
            Metric::Semantic => semantic_between::<S>(original, result).map(|v| Number::of(&v)),
            _ => None,
        },
    })
}

fn strings<T: ToString>(items: &[T]) -> Vec<String> {
    items.iter().map(ToString::to_string).collect()
}

impl RunReport {
    pub fn build<S: Scalar>(
        original: &Model,
        outcome: &Result<PropagationResult<S>, PropagateError>,
        cfg: &SearchConfig<S>,
        metric: Metric,
        seed: u64,
        postulates: Option<PostulateReport>,
    ) -> RunReport {
        let config = ConfigEcho {
            strategy: cfg.strategy.to_string(),
            costs: cfg.costs.to_string(),
            max_depth: cfg.max_depth,
            k: cfg.k,
            heuristic: format!("{:?}", cfg.heuristic).to_lowercase(),
            metric,
            seed,
        };
        let mut report = RunReport {
            status: String::new(),
            config,
            initial_violations: Vec::new(),
            initial_multiplicity: Vec::new(),
            plans: Vec::new(),
            result_model: None,
            stats: None,
            postulates,
            diagnostics: Vec::new(),
        };
        match outcome {
            Ok(res) => {
                report.status = "plan_found".into();
                report.initial_violations = strings(&res.initial_violations);
                report.initial_multiplicity = strings(&res.initial_multiplicity);
                report.plans = res
                    .plans
                    .iter()
                    .zip(&res.result_models)
                    .map(|(p, m)| PlanEntry {
                        cost: Number::of(&p.total_cost),
                        steps: strings(&p.actions),
                        actions: p.actions.clone(),
                        proximity: proximity_entry(original, m, &p.actions, cfg, metric),
                    })
                    .collect();
                report.result_model = res
                    .result_models
                    .first()
                    .map(|m| serde_json::from_str(&m.to_json()).expect("model json"));
                report.stats = Some(StatsEntry {
                    expanded: res.stats.expanded,
                    generated: res.stats.generated,
                    deduped: res.stats.deduped,
                });
            }
            Err(PropagateError::NoPlanWithinBound {
                max_depth,
                initial_violations,
                initial_multiplicity,
                stats,
            }) => {
                report.status = "no_plan_within_bound".into();
                report.initial_violations = strings(initial_violations);
                report.initial_multiplicity =
                    strings::<MultiplicityViolation>(initial_multiplicity);
                report.stats = Some(StatsEntry {
                    expanded: stats.expanded,
                    generated: stats.generated,
                    deduped: stats.deduped,
                });
                report.diagnostics.push(format!(
                    "no consistent state within {max_depth} secondary actions"
                ));
                if stats.expanded == 0 {
                    report.diagnostics.push(
                        "no non-reverting repair candidate for the initial violations".into(),
                    );
                }
            }
            Err(e @ PropagateError::Primary(_)) => {
                report.status = "primary_failed".into();
                report.diagnostics.push(e.to_string());
            }
        }
        report
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
