//! Change propagation as minimal-cost state-space search.
//!
//! States are model snapshots reached from the post-primary model by
//! secondary actions; transitions are the candidates produced by
//! [`crate::repair`] for the violations of the current state. A state is a
//! goal when it satisfies every constraint and every multiplicity bound.
//! Goal states are never expanded, so no proper prefix of a returned plan is
//! consistent.

mod protected;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use protected::{is_reverting, LinkTriple, ProtectedSlots};

use crate::dsl::{Constraint, ScopeCache, Violation};
use crate::model::{
    apply_action, check_wellformed, Binding, CanonicalKey, ChangeAction, CostConfig, EntityId,
    Metamodel, Model, MultiplicityViolation, Plan, ScriptError,
};
use crate::proximity::structural_proximity;
use crate::repair::{generate_repairs_with, multiplicity_repairs};
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ucs,
    Astar,
    Exhaustive,
    Greedy,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Ucs,
        Strategy::Astar,
        Strategy::Exhaustive,
        Strategy::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ucs => "ucs",
            Strategy::Astar => "astar",
            Strategy::Exhaustive => "exhaustive",
            Strategy::Greedy => "greedy",
        }
    }

    /// True for strategies whose first plan has minimal cost within the
    /// depth bound.
    pub fn is_optimal(self) -> bool {
        !matches!(self, Strategy::Greedy)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Goal-distance estimate used by A* and greedy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicMode {
    /// Cheapest action cost for any inconsistent state. Never overestimates.
    #[default]
    Admissible,
    /// Cheapest action cost times the number of violations. May
    /// overestimate, so A* loses its optimality guarantee.
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig<S = Rational> {
    pub strategy: Strategy,
    pub costs: CostConfig<S>,
    pub max_depth: usize,
    pub k: usize,
    pub heuristic: HeuristicMode,
    /// Worker threads for successor generation; `1` runs inline.
    pub threads: usize,
}

impl<S: Scalar> Default for SearchConfig<S> {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Astar,
            costs: CostConfig::default(),
            max_depth: 8,
            k: 1,
            heuristic: HeuristicMode::Admissible,
            threads: 1,
        }
    }
}

impl<S: Scalar> SearchConfig<S> {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_costs(mut self, costs: CostConfig<S>) -> Self {
        self.costs = costs;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }
}

/// One node of the search space.
#[derive(Debug, Clone)]
pub struct SearchState<S = Rational> {
    pub model: Model,
    /// Secondary actions applied so far, with concrete ids.
    pub applied: Vec<ChangeAction>,
    pub g: S,
    pub violations: Vec<Violation>,
    pub multiplicity: Vec<MultiplicityViolation>,
    pub key: CanonicalKey,
    cache: ScopeCache,
}

impl<S: Scalar> SearchState<S> {
    /// Evaluates `model` from scratch.
    pub fn initial(model: Model, cs: &[Constraint], mm: &Metamodel) -> Self {
        let cache = ScopeCache::build(&model, cs);
        SearchState {
            violations: cache.violations(cs),
            multiplicity: check_wellformed(&model, mm),
            key: model.canonical_key(),
            cache,
            model,
            applied: Vec::new(),
            g: S::zero(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty() && self.multiplicity.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.applied.len()
    }

    fn violation_count(&self) -> usize {
        self.violations.len() + self.multiplicity.len()
    }

    /// Applies one concrete candidate, re-checking only what it can affect.
    fn successor(
        &self,
        action: &ChangeAction,
        cost: S,
        cs: &[Constraint],
        mm: &Metamodel,
    ) -> Option<Self> {
        let mut binding = Binding::new();
        let model = apply_action(&self.model, action, &mut binding, mm).ok()?;
        let concrete = action.map_ids(|id| binding.get(id).cloned().unwrap_or_else(|| id.clone()));
        let dirty: BTreeSet<EntityId> = concrete.dirty_entities(&binding);
        let (cache, _) = self.cache.refresh(&model, cs, &dirty);
        let mut applied = self.applied.clone();
        applied.push(concrete);
        Some(SearchState {
            violations: cache.violations(cs),
            multiplicity: check_wellformed(&model, mm),
            key: model.canonical_key(),
            cache,
            model,
            applied,
            g: self.g.clone() + cost,
        })
    }
}

/// Remaining-cost estimate: zero at a goal, otherwise the cheapest enabled
/// action cost (admissible), or that times the violation count (weighted).
pub fn heuristic_estimate<S: Scalar>(
    state: &SearchState<S>,
    costs: &CostConfig<S>,
    mode: HeuristicMode,
) -> S {
    if state.is_consistent() {
        return S::zero();
    }
    let Some(c_min) = costs.min_cost() else {
        return S::zero();
    };
    match mode {
        HeuristicMode::Admissible => c_min,
        HeuristicMode::Weighted => c_min * S::from_count(state.violation_count()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub deduped: usize,
    /// Not serialized: reports must not depend on timing.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct PropagationResult<S = Rational> {
    /// Up to `k` plans, best first. Created entities are written `$n1`,
    /// `$n2`, ... in creation order.
    pub plans: Vec<Plan<S>>,
    /// Final model of each plan.
    pub result_models: Vec<Model>,
    /// The model after the primary change.
    pub initial_model: Model,
    pub initial_violations: Vec<Violation>,
    pub initial_multiplicity: Vec<MultiplicityViolation>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagateError {
    #[error("primary change failed: {0}")]
    Primary(#[from] ScriptError),
    #[error("no consistent state within {max_depth} secondary actions")]
    NoPlanWithinBound {
        max_depth: usize,
        initial_violations: Vec<Violation>,
        initial_multiplicity: Vec<MultiplicityViolation>,
        stats: SearchStats,
    },
}

/// Everything fixed for one run.
struct Problem<'a, S> {
    original: &'a Model,
    cs: &'a [Constraint],
    mm: &'a Metamodel,
    protected: ProtectedSlots,
    cfg: &'a SearchConfig<S>,
}

impl<S: Scalar> Problem<'_, S> {
    fn candidates(&self, state: &SearchState<S>) -> Vec<ChangeAction> {
        let by_name: BTreeMap<&str, &Constraint> =
            self.cs.iter().map(|c| (c.name.as_str(), c)).collect();
        let mut out: Vec<ChangeAction> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut push = |a: ChangeAction| {
            if self.cfg.costs.enabled(a.kind()) && seen.insert(a.clone()) {
                out.push(a);
            }
        };
        let literals: Vec<_> = self.cs.iter().flat_map(Constraint::literals).collect();
        for v in &state.violations {
            let c = by_name[v.constraint.as_str()];
            for r in generate_repairs_with(v, c, &state.model, self.mm, &self.protected, &literals)
            {
                push(r.action);
            }
        }
        for v in &state.multiplicity {
            for r in multiplicity_repairs(v, &state.model, self.mm, &self.protected) {
                push(r.action);
            }
        }
        out.sort_by_cached_key(crate::repair::sort_key);
        out
    }

    fn expand(
        &self,
        state: &SearchState<S>,
        pool: Option<&rayon::ThreadPool>,
    ) -> Vec<SearchState<S>> {
        let cands = self.candidates(state);
        let step = |a: &ChangeAction| {
            let cost = self.cfg.costs.cost(a)?;
            state.successor(a, cost, self.cs, self.mm)
        };
        match pool {
            Some(pool) => pool.install(|| cands.par_iter().filter_map(step).collect()),
            None => cands.iter().filter_map(step).collect(),
        }
    }

    fn h(&self, state: &SearchState<S>) -> S {
        match self.cfg.strategy {
            Strategy::Ucs | Strategy::Exhaustive => S::zero(),
            Strategy::Astar => heuristic_estimate(state, &self.cfg.costs, self.cfg.heuristic),
            Strategy::Greedy => heuristic_estimate(state, &self.cfg.costs, HeuristicMode::Weighted),
        }
    }

    /// Plan with secondary-created ids replaced by `$n1`, `$n2`, ...
    fn plan_of(&self, state: &SearchState<S>) -> Plan<S> {
        let mut rename: BTreeMap<EntityId, EntityId> = BTreeMap::new();
        for a in &state.applied {
            if let ChangeAction::Create { id, .. } = a {
                let n = rename.len() + 1;
                rename.insert(id.clone(), EntityId(format!("$n{n}")));
            }
        }
        let actions = state
            .applied
            .iter()
            .map(|a| a.map_ids(|id| rename.get(id).cloned().unwrap_or_else(|| id.clone())))
            .collect();
        Plan {
            actions,
            total_cost: state.g.clone(),
        }
    }
}

/// Frontier entry. The heap pops the smallest `(f, h, depth, seq)`; `seq`
/// is the insertion counter, so ties resolve in generation order.
struct Entry<S> {
    f: S,
    h: S,
    depth: usize,
    seq: u64,
    state: SearchState<S>,
}

impl<S: Scalar> Entry<S> {
    fn rank(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then_with(|| self.h.total_cmp(&other.h))
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl<S: Scalar> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Entry<S> {}

impl<S: Scalar> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Entry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other.rank(self)
    }
}

/// Non-dominated `(g, depth)` pairs seen per state key. A state reached
/// again is pruned when an earlier visit was no more expensive and no deeper.
struct Labels<S> {
    seen: BTreeMap<CanonicalKey, Vec<(S, usize)>>,
}

impl<S> Default for Labels<S> {
    fn default() -> Self {
        Labels {
            seen: BTreeMap::new(),
        }
    }
}

impl<S: Scalar> Labels<S> {
    /// Records `(g, depth)` for `key`; false if dominated.
    fn admit(&mut self, key: CanonicalKey, g: &S, depth: usize) -> bool {
        let labels = self.seen.entry(key).or_default();
        if labels
            .iter()
            .any(|(g0, d0)| g0.total_cmp(g) != Ordering::Greater && *d0 <= depth)
        {
            return false;
        }
        labels.retain(|(g0, d0)| !(g.total_cmp(g0) != Ordering::Greater && depth <= *d0));
        labels.push((g.clone(), depth));
        true
    }
}

/// Runs the primary change on `original` and searches for secondary plans.
pub fn propagate<S: Scalar>(
    original: &Model,
    primary: &[ChangeAction],
    cs: &[Constraint],
    mm: &Metamodel,
    cfg: &SearchConfig<S>,
) -> Result<PropagationResult<S>, PropagateError> {
    let start = Instant::now();
    let (protected, post_primary) = ProtectedSlots::from_primary(original, primary, mm)?;
    let problem = Problem {
        original,
        cs,
        mm,
        protected,
        cfg,
    };
    let initial = SearchState::<S>::initial(post_primary, cs, mm);
    let initial_violations = initial.violations.clone();
    let initial_multiplicity = initial.multiplicity.clone();
    let initial_model = initial.model.clone();

    let pool = if cfg.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .ok()
    } else {
        None
    };

    let (goals, mut stats) = run(&problem, initial, pool.as_ref());
    stats.wall_time = start.elapsed();

    if goals.is_empty() {
        return Err(PropagateError::NoPlanWithinBound {
            max_depth: cfg.max_depth,
            initial_violations,
            initial_multiplicity,
            stats,
        });
    }
    let (plans, result_models) = goals
        .into_iter()
        .map(|g| (problem.plan_of(&g), g.model))
        .unzip();
    Ok(PropagationResult {
        plans,
        result_models,
        initial_model,
        initial_violations,
        initial_multiplicity,
        stats,
    })
}

/// Best-first loop shared by every strategy. Returns up to `k` goal states
/// in final order.
fn run<S: Scalar>(
    problem: &Problem<'_, S>,
    initial: SearchState<S>,
    pool: Option<&rayon::ThreadPool>,
) -> (Vec<SearchState<S>>, SearchStats) {
    let cfg = problem.cfg;
    let k = cfg.k.max(1);
    let mut stats = SearchStats::default();
    let mut labels: Labels<S> = Labels::default();
    let mut goal_keys: BTreeSet<CanonicalKey> = BTreeSet::new();
    let mut goals: Vec<SearchState<S>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    labels.admit(initial.key.clone(), &initial.g, 0);
    let h0 = problem.h(&initial);
    heap.push(Entry {
        f: initial.g.clone() + h0.clone(),
        h: h0,
        depth: 0,
        seq,
        state: initial,
    });

    while let Some(entry) = heap.pop() {
        if cfg.strategy != Strategy::Exhaustive && goals.len() >= k {
            let kth = goal_cost_rank(&goals, k);
            let stop = match cfg.strategy {
                Strategy::Greedy => true,
                _ => entry.f.total_cmp(&kth) == Ordering::Greater,
            };
            if stop {
                break;
            }
        }
        let state = entry.state;
        if state.is_consistent() {
            if goal_keys.insert(state.key.clone()) {
                goals.push(state);
            } else {
                stats.deduped += 1;
            }
            continue;
        }
        if state.depth() >= cfg.max_depth {
            continue;
        }
        stats.expanded += 1;
        for next in problem.expand(&state, pool) {
            stats.generated += 1;
            if goal_keys.contains(&next.key)
                || !labels.admit(next.key.clone(), &next.g, next.depth())
            {
                stats.deduped += 1;
                continue;
            }
            seq += 1;
            let h = problem.h(&next);
            heap.push(Entry {
                f: next.g.clone() + h.clone(),
                h,
                depth: next.depth(),
                seq,
                state: next,
            });
        }
    }

    (rank_goals(problem, goals, k), stats)
}

/// Cost of the k-th cheapest goal found so far.
fn goal_cost_rank<S: Scalar>(goals: &[SearchState<S>], k: usize) -> S {
    let mut costs: Vec<&S> = goals.iter().map(|g| &g.g).collect();
    costs.sort_by(|a, b| a.total_cmp(b));
    costs[k - 1].clone()
}

/// Orders goals by cost, then by structural similarity to the original
/// model (higher first), then by canonical key; keeps the first `k`.
fn rank_goals<S: Scalar>(
    problem: &Problem<'_, S>,
    goals: Vec<SearchState<S>>,
    k: usize,
) -> Vec<SearchState<S>> {
    let mut scored: Vec<(S, SearchState<S>)> = goals
        .into_iter()
        .map(|g| {
            let sim = structural_proximity::<S>(problem.original, &g.model)
                .map(|r| r.combined)
                .unwrap_or_else(|_| S::zero());
            (sim, g)
        })
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        a.g.total_cmp(&b.g)
            .then_with(|| sb.total_cmp(sa))
            .then_with(|| a.key.cmp(&b.key))
    });
    scored.into_iter().take(k).map(|(_, g)| g).collect()
}
